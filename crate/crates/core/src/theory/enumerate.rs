//! Exact distributions over observation sequences.

use std::collections::BTreeMap;

use super::tabular::TabularEnv;
use crate::error::{Error, Result};

/// Largest number of state/emission paths `enumerate_histories` will expand.
pub const PATH_LIMIT: u128 = 10_000_000;

/// Neumaier compensated sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Joint law of `O_1 .. O_horizon`. `support[i].0[j]` is the symbol index of
/// `O_{j+1}`; sequences are sorted and carry positive probability.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryDist {
    pub horizon: usize,
    pub alphabet: Vec<String>,
    pub support: Vec<(Vec<u8>, f64)>,
}

impl HistoryDist {
    pub fn total(&self) -> f64 {
        self.support.iter().map(|s| s.1).collect::<CompensatedSum>().value()
    }

    pub fn symbol(&self, name: &str) -> Option<u8> {
        self.alphabet.iter().position(|a| a == name).map(|i| i as u8)
    }

    /// Marginal law of the first `horizon` observations.
    pub fn truncate(&self, horizon: usize) -> HistoryDist {
        assert!(horizon <= self.horizon);
        let mut acc: BTreeMap<&[u8], CompensatedSum> = BTreeMap::new();
        for (seq, p) in &self.support {
            acc.entry(&seq[..horizon]).or_default().add(*p);
        }
        HistoryDist {
            horizon,
            alphabet: self.alphabet.clone(),
            support: acc.into_iter().map(|(s, p)| (s.to_vec(), p.value())).collect(),
        }
    }
}

/// Exact number of (state, emission) paths of length `horizon`, saturating.
pub fn path_count(env: &TabularEnv, horizon: usize) -> u128 {
    let n = env.num_states();
    let mut count = vec![0u128; n];
    count[env.start()] = 1;
    for _ in 0..horizon {
        let mut next = vec![0u128; n];
        for (s, &c) in count.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for &(j, _) in env.transitions(s) {
                let add = c.saturating_mul(env.emissions(j).len() as u128);
                next[j] = next[j].saturating_add(add);
            }
        }
        count = next;
    }
    count.iter().fold(0u128, |a, &c| a.saturating_add(c))
}

/// Exact joint distribution of `O_1 .. O_horizon` from the start state.
///
/// The start state's own emission `O_0` is not part of the history.
pub fn enumerate_histories(env: &TabularEnv, horizon: usize) -> Result<HistoryDist> {
    let estimate = path_count(env, horizon);
    if estimate > PATH_LIMIT {
        return Err(Error::TooLarge {
            estimate,
            limit: PATH_LIMIT,
        });
    }
    let mut frontier: BTreeMap<(Vec<u8>, usize), CompensatedSum> = BTreeMap::new();
    frontier.entry((Vec::new(), env.start())).or_default().add(1.0);
    for _ in 0..horizon {
        let mut next: BTreeMap<(Vec<u8>, usize), CompensatedSum> = BTreeMap::new();
        for ((seq, s), p) in &frontier {
            let p = p.value();
            for &(j, pt) in env.transitions(*s) {
                for &(sym, pe) in env.emissions(j) {
                    let mut longer = Vec::with_capacity(seq.len() + 1);
                    longer.extend_from_slice(seq);
                    longer.push(sym as u8);
                    next.entry((longer, j)).or_default().add(p * pt * pe);
                }
            }
        }
        frontier = next;
    }
    let mut marginal: BTreeMap<Vec<u8>, CompensatedSum> = BTreeMap::new();
    for ((seq, _), p) in frontier {
        marginal.entry(seq).or_default().add(p.value());
    }
    Ok(HistoryDist {
        horizon,
        alphabet: env.alphabet().to_vec(),
        support: marginal
            .into_iter()
            .map(|(s, p)| (s, p.value()))
            .filter(|&(_, p)| p > 0.0)
            .collect(),
    })
}
