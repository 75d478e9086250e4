//! Artifact masks drawn over the arena: fixed paths, landmarks, and the
//! agent-written vanishing path.

use std::collections::{HashSet, VecDeque};

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bitmap::Bitmap;
use crate::error::{Error, Result};
use crate::gridworld::{Action, Cell, GridSpec};
use crate::rng::{stream, Stream};

pub const BUNDLED_MISLEADING_ROUTE: &str = include_str!("../data/misleading_path.cells");
pub const BUNDLED_LANDMARKS: &str = include_str!("../data/landmarks.cells");

/// Extra steps of the suboptimal route over the shortest one.
pub const SUBOPTIMAL_EXTRA_STEPS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    None,
    OptimalPath,
    SuboptimalPath,
    MisleadingPath,
    RandomPath,
    Landmarks,
    DynamicPath,
}

impl ArtifactKind {
    pub const ALL: [ArtifactKind; 7] = [
        ArtifactKind::None,
        ArtifactKind::OptimalPath,
        ArtifactKind::SuboptimalPath,
        ArtifactKind::MisleadingPath,
        ArtifactKind::RandomPath,
        ArtifactKind::Landmarks,
        ArtifactKind::DynamicPath,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ArtifactKind::None => "none",
            ArtifactKind::OptimalPath => "optimal_path",
            ArtifactKind::SuboptimalPath => "suboptimal_path",
            ArtifactKind::MisleadingPath => "misleading_path",
            ArtifactKind::RandomPath => "random_path",
            ArtifactKind::Landmarks => "landmarks",
            ArtifactKind::DynamicPath => "dynamic_path",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl std::fmt::Display for ArtifactKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicPathParams {
    pub new_pixels_per_step: usize,
    pub vanishing_pixels_per_step: usize,
    pub vanishing_rate: f64,
    pub path_thickness: usize,
}

impl Default for DynamicPathParams {
    fn default() -> Self {
        Self {
            new_pixels_per_step: 12,
            vanishing_pixels_per_step: 40,
            vanishing_rate: 0.5,
            path_thickness: 2,
        }
    }
}

impl DynamicPathParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.vanishing_rate) {
            return Err(Error::config("vanishing_rate must lie in [0, 1]"));
        }
        if self.path_thickness == 0 {
            return Err(Error::config("path_thickness must be positive"));
        }
        Ok(())
    }
}

/// Layout inputs for the fixed artifacts.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedArtifactParams {
    pub path_thickness: usize,
    pub random_walk_length: usize,
    pub misleading_route: Vec<Cell>,
    /// Top-left cells of the diamond, donut, circle, rectangle, triangle and
    /// square, in that order.
    pub landmark_cells: Vec<Cell>,
}

impl Default for FixedArtifactParams {
    fn default() -> Self {
        Self {
            path_thickness: 2,
            random_walk_length: 60,
            misleading_route: parse_cell_list(BUNDLED_MISLEADING_ROUTE)
                .expect("bundled misleading route parses"),
            landmark_cells: parse_cell_list(BUNDLED_LANDMARKS).expect("bundled landmarks parse"),
        }
    }
}

/// Parse a cell list: one `x,y` per line, `#` comments and blank lines ignored.
pub fn parse_cell_list(text: &str) -> Result<Vec<Cell>> {
    let mut cells = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = || Error::Parse {
            line: Some(n + 1),
            message: format!("expected `x,y`, found `{line}`"),
        };
        let (x, y) = line.split_once(',').ok_or_else(err)?;
        let x = x.trim().parse().map_err(|_| err())?;
        let y = y.trim().parse().map_err(|_| err())?;
        cells.push(Cell::new(x, y));
    }
    Ok(cells)
}

pub fn format_cell_list(cells: &[Cell]) -> String {
    cells.iter().map(|c| format!("{},{}\n", c.x, c.y)).collect()
}

/// Arena pixel indices of the band joining the centers of two cells.
///
/// `from` and `to` must be equal or 4-adjacent. The band is `thickness`
/// pixels wide, centered in the tile, and covers both center squares.
pub fn segment_pixels(spec: &GridSpec, from: Cell, to: Cell, thickness: usize) -> Vec<usize> {
    debug_assert!(from.manhattan(to) <= 1, "segment endpoints must be adjacent");
    let tile = spec.tile_size;
    let aw = spec.arena_width();
    let t = thickness.min(tile);
    let lo = (tile - t) / 2;
    let x0 = from.x.min(to.x) * tile + lo;
    let x1 = from.x.max(to.x) * tile + lo + t;
    let y0 = from.y.min(to.y) * tile + lo;
    let y1 = from.y.max(to.y) * tile + lo + t;
    let mut px = Vec::with_capacity((x1 - x0) * (y1 - y0));
    for y in y0..y1 {
        for x in x0..x1 {
            px.push(y * aw + x);
        }
    }
    px
}

/// Pixel trace of a cell route.
pub fn trace_route(spec: &GridSpec, route: &[Cell], thickness: usize) -> Bitmap {
    let mut mask = spec.empty_mask();
    match route {
        [] => {}
        [only] => {
            for i in segment_pixels(spec, *only, *only, thickness) {
                mask.set_index(i, true);
            }
        }
        _ => {
            for w in route.windows(2) {
                for i in segment_pixels(spec, w[0], w[1], thickness) {
                    mask.set_index(i, true);
                }
            }
        }
    }
    mask
}

/// Breadth-first shortest route, neighbors expanded in action order.
pub fn shortest_route(spec: &GridSpec, from: Cell, to: Cell) -> Vec<Cell> {
    let idx = |c: Cell| c.y * spec.width + c.x;
    let mut parent: Vec<Option<Cell>> = vec![None; spec.width * spec.height];
    let mut seen = vec![false; spec.width * spec.height];
    let mut queue = VecDeque::from([from]);
    seen[idx(from)] = true;
    while let Some(c) = queue.pop_front() {
        if c == to {
            break;
        }
        for a in Action::ALL {
            let n = spec.neighbor(c, a);
            if !seen[idx(n)] {
                seen[idx(n)] = true;
                parent[idx(n)] = Some(c);
                queue.push_back(n);
            }
        }
    }
    let mut route = vec![to];
    let mut c = to;
    while let Some(p) = parent[idx(c)] {
        route.push(p);
        c = p;
    }
    route.reverse();
    route
}

/// Shortest route lengthened by two rectangular detours, each stepping two
/// cells sideways and back around one straight step of the route.
pub fn suboptimal_route(spec: &GridSpec) -> Result<Vec<Cell>> {
    let shortest = shortest_route(spec, spec.start, spec.goal);
    let mut route = shortest.clone();
    for _ in 0..SUBOPTIMAL_EXTRA_STEPS / 4 {
        route = insert_detour(spec, &route, &shortest).ok_or_else(|| {
            Error::config("no room for a rectangular detour on the shortest route")
        })?;
    }
    Ok(route)
}

/// Detours only replace steps of the original shortest route.
fn insert_detour(spec: &GridSpec, route: &[Cell], shortest: &[Cell]) -> Option<Vec<Cell>> {
    let on_route: HashSet<Cell> = route.iter().copied().collect();
    let original: HashSet<Cell> = shortest.iter().copied().collect();
    let steps = route.len() - 1;
    let mid = steps / 2;
    // Candidate steps ordered by distance from the middle of the route.
    let mut order: Vec<usize> = (0..steps).collect();
    order.sort_by_key(|&i| (i.abs_diff(mid), i));
    for i in order {
        let (a, b) = (route[i], route[i + 1]);
        if !original.contains(&a) || !original.contains(&b) {
            continue;
        }
        let horizontal = a.y == b.y;
        let sides: [(isize, isize); 2] = if horizontal {
            [(0, -1), (0, 1)]
        } else {
            [(-1, 0), (1, 0)]
        };
        for (px, py) in sides {
            let shift = |c: Cell, k: isize| -> Option<Cell> {
                let x = c.x as isize + px * k;
                let y = c.y as isize + py * k;
                (x >= 0 && y >= 0 && (x as usize) < spec.width && (y as usize) < spec.height)
                    .then(|| Cell::new(x as usize, y as usize))
            };
            let detour = [shift(a, 1), shift(a, 2), shift(b, 2), shift(b, 1)];
            if detour.iter().any(Option::is_none) {
                continue;
            }
            let detour: Vec<Cell> = detour.into_iter().flatten().collect();
            // Detours stay clear of the rest of the route so they remain
            // separate loops.
            let touches_route = detour.iter().any(|&c| {
                Action::ALL.into_iter().any(|act| {
                    let n = spec.neighbor(c, act);
                    n != c && n != a && n != b && on_route.contains(&n)
                })
            });
            if touches_route || detour.iter().any(|c| on_route.contains(c) || *c == spec.goal) {
                continue;
            }
            let mut out = route[..=i].to_vec();
            out.extend(detour);
            out.extend_from_slice(&route[i + 1..]);
            return Some(out);
        }
    }
    None
}

/// Uniform random walk from the start cell; wall bumps repeat the cell.
pub fn random_walk_route(spec: &GridSpec, steps: usize, rng: &mut impl Rng) -> Vec<Cell> {
    let mut route = Vec::with_capacity(steps + 1);
    let mut c = spec.start;
    route.push(c);
    for _ in 0..steps {
        c = spec.neighbor(c, Action::from_index(rng.random_range(0..4)));
        route.push(c);
    }
    route
}

pub fn validate_route(spec: &GridSpec, route: &[Cell]) -> Result<()> {
    if route.first() != Some(&spec.start) {
        return Err(Error::config("route must begin at the start cell"));
    }
    for c in route {
        if !spec.contains(*c) {
            return Err(Error::config(format!("route cell ({}, {}) is off the grid", c.x, c.y)));
        }
    }
    for w in route.windows(2) {
        if w[0].manhattan(w[1]) > 1 {
            return Err(Error::config(format!(
                "route cells ({}, {}) and ({}, {}) are not adjacent",
                w[0].x, w[0].y, w[1].x, w[1].y
            )));
        }
    }
    Ok(())
}

/// Shapes drawn by [`landmark_mask`], in order.
pub const LANDMARK_SHAPES: [&str; 6] = ["diamond", "donut", "circle", "rectangle", "triangle", "square"];

fn landmark_pixel(shape: usize, x: usize, y: usize, size: usize) -> bool {
    let s = size as f64;
    let c = (s - 1.0) / 2.0;
    let (fx, fy) = (x as f64 - c, y as f64 - c);
    let r = (fx * fx + fy * fy).sqrt();
    let m = s / 16.0;
    match shape {
        0 => fx.abs() + fy.abs() <= c,
        1 => r <= c && r >= 4.0 * m,
        2 => r <= 6.5 * m,
        3 => fx.abs() <= c - m && fy.abs() <= 4.0 * m,
        4 => {
            let top = m;
            let bottom = s - 1.0 - m;
            let yy = y as f64;
            yy >= top && yy <= bottom && fx.abs() <= (yy - top) / 2.0 + 0.5
        }
        5 => {
            let outer = c - m;
            let inner = outer - 2.0 * m;
            fx.abs().max(fy.abs()) <= outer && fx.abs().max(fy.abs()) > inner
        }
        _ => false,
    }
}

/// Six geometric landmarks, each inscribed in a 2x2-cell box whose top-left
/// cell is given.
pub fn landmark_mask(spec: &GridSpec, cells: &[Cell]) -> Result<Bitmap> {
    if cells.len() != LANDMARK_SHAPES.len() {
        return Err(Error::config(format!(
            "expected {} landmark cells, found {}",
            LANDMARK_SHAPES.len(),
            cells.len()
        )));
    }
    let size = 2 * spec.tile_size;
    let mut mask = spec.empty_mask();
    for (shape, c) in cells.iter().enumerate() {
        if c.x + 1 >= spec.width || c.y + 1 >= spec.height {
            return Err(Error::config(format!(
                "landmark box at ({}, {}) does not fit in the grid",
                c.x, c.y
            )));
        }
        for y in 0..size {
            for x in 0..size {
                if landmark_pixel(shape, x, y, size) {
                    mask.set(c.x * spec.tile_size + x, c.y * spec.tile_size + y, true);
                }
            }
        }
    }
    Ok(mask)
}

/// Cell route behind a path artifact, `None` for non-path kinds.
pub fn artifact_route(
    kind: ArtifactKind,
    spec: &GridSpec,
    seed: u64,
    params: &FixedArtifactParams,
) -> Result<Option<Vec<Cell>>> {
    let route = match kind {
        ArtifactKind::OptimalPath => shortest_route(spec, spec.start, spec.goal),
        ArtifactKind::SuboptimalPath => suboptimal_route(spec)?,
        ArtifactKind::MisleadingPath => {
            validate_route(spec, &params.misleading_route)?;
            params.misleading_route.clone()
        }
        ArtifactKind::RandomPath => {
            let mut rng = stream(seed, Stream::ArtifactLayout);
            random_walk_route(spec, params.random_walk_length, &mut rng)
        }
        ArtifactKind::None | ArtifactKind::Landmarks | ArtifactKind::DynamicPath => return Ok(None),
    };
    Ok(Some(route))
}

/// Static artifact mask. `seed` only matters for the random path.
pub fn build_fixed_mask(
    kind: ArtifactKind,
    spec: &GridSpec,
    seed: u64,
    params: &FixedArtifactParams,
) -> Result<Bitmap> {
    spec.validate()?;
    match kind {
        ArtifactKind::DynamicPath => Err(Error::config(
            "the dynamic path has no fixed mask; it starts empty and evolves",
        )),
        ArtifactKind::None => Ok(spec.empty_mask()),
        ArtifactKind::Landmarks => landmark_mask(spec, &params.landmark_cells),
        _ => {
            let route = artifact_route(kind, spec, seed, params)?.expect("path kinds have routes");
            Ok(trace_route(spec, &route, params.path_thickness))
        }
    }
}

/// One step of the vanishing path: ink part of the segment just traversed,
/// then erase a random subset of the whole arena.
pub fn dynamic_path_update(
    mask: &mut Bitmap,
    spec: &GridSpec,
    from: Cell,
    to: Cell,
    params: &DynamicPathParams,
    rng: &mut impl Rng,
) {
    let seg = segment_pixels(spec, from, to, params.path_thickness);
    let k = params.new_pixels_per_step.min(seg.len());
    for i in sample(rng, seg.len(), k) {
        mask.set_index(seg[i], true);
    }
    let q = mask.len();
    let v = params.vanishing_pixels_per_step.min(q);
    for i in sample(rng, q, v) {
        if rng.random::<f64>() < params.vanishing_rate {
            mask.set_index(i, false);
        }
    }
}
