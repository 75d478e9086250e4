//! Binary images used for tiles, artifact masks and observations.

use std::fmt;

/// Row-major binary image. `true` is an ON (ink) pixel.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Bitmap {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Bitmap {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn filled(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![true; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), width * height, "bitmap size mismatch");
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.bits[y * self.width + x] = on;
    }

    #[inline]
    pub fn get_index(&self, i: usize) -> bool {
        self.bits[i]
    }

    #[inline]
    pub fn set_index(&mut self, i: usize, on: bool) {
        self.bits[i] = on;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_on(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Indices of ON pixels in row-major order.
    pub fn on_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    /// Pixelwise OR. Panics on shape mismatch.
    pub fn union_with(&mut self, other: &Bitmap) {
        assert_eq!((self.width, self.height), (other.width, other.height));
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
    }

    /// True if the ON pixels form a single 4-connected component (or there are none).
    pub fn is_four_connected(&self) -> bool {
        let Some(first) = self.on_indices().next() else {
            return true;
        };
        let mut seen = vec![false; self.bits.len()];
        let mut stack = vec![first];
        seen[first] = true;
        let mut reached = 0;
        while let Some(i) = stack.pop() {
            reached += 1;
            let (x, y) = (i % self.width, i / self.width);
            let mut visit = |nx: usize, ny: usize| {
                let j = ny * self.width + nx;
                if self.bits[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(x - 1, y);
            }
            if x + 1 < self.width {
                visit(x + 1, y);
            }
            if y > 0 {
                visit(x, y - 1);
            }
            if y + 1 < self.height {
                visit(x, y + 1);
            }
        }
        reached == self.count_on()
    }
}

impl fmt::Debug for Bitmap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Bitmap {}x{}", self.width, self.height)?;
        for y in 0..self.height {
            for x in 0..self.width {
                f.write_str(if self.get(x, y) { "#" } else { "." })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn connectivity() {
        let mut b = Bitmap::new(4, 4);
        assert!(b.is_four_connected());
        b.set(0, 0, true);
        b.set(1, 0, true);
        assert!(b.is_four_connected());
        b.set(2, 1, true);
        assert!(!b.is_four_connected());
        b.set(1, 1, true);
        assert!(b.is_four_connected());
    }
}
