//! Artifact relations: observations that make an earlier observation certain.

use std::fmt;

use super::enumerate::{enumerate_histories, CompensatedSum, HistoryDist};
use super::tabular::TabularEnv;
use crate::error::Result;

/// Relative mass of counterexamples below which a conditional probability is
/// taken to be exactly 1.
pub const CERTAINTY_SLACK: f64 = 1e-12;

/// `O_t = artifact` implies `O_{t'} = referent`, with `0 < t' < t`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArtifactRelation {
    pub artifact_time: usize,
    pub referent_time: usize,
    pub artifact: String,
    pub referent: String,
}

impl fmt::Display for ArtifactRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}@{} -> {}@{}",
            self.artifact, self.artifact_time, self.referent, self.referent_time
        )
    }
}

/// `P(O_{t'} = o' | O_t = o)` table for one pair of times, plus `P(O_t = o)`.
struct PairTable {
    k: usize,
    /// `mass[o]` = P(O_t = o).
    mass: Vec<f64>,
    /// `miss[o * k + o']` = P(O_t = o, O_{t'} != o').
    miss: Vec<f64>,
}

fn pair_table(dist: &HistoryDist, tp: usize, t: usize) -> PairTable {
    let k = dist.alphabet.len();
    let mut mass = vec![CompensatedSum::default(); k];
    let mut miss = vec![CompensatedSum::default(); k * k];
    for (seq, p) in &dist.support {
        let (o, r) = (seq[t - 1] as usize, seq[tp - 1] as usize);
        mass[o].add(*p);
        for other in (0..k).filter(|&x| x != r) {
            miss[o * k + other].add(*p);
        }
    }
    PairTable {
        k,
        mass: mass.iter().map(CompensatedSum::value).collect(),
        miss: miss.iter().map(CompensatedSum::value).collect(),
    }
}

/// Every relation present in `dist`, by the probabilistic condition.
pub fn relations_in(dist: &HistoryDist) -> Vec<ArtifactRelation> {
    let mut out = Vec::new();
    for t in 2..=dist.horizon {
        for tp in 1..t {
            let tab = pair_table(dist, tp, t);
            for o in 0..tab.k {
                if tab.mass[o] <= 0.0 {
                    continue;
                }
                for r in (0..tab.k).filter(|&r| r != o) {
                    if tab.miss[o * tab.k + r] <= CERTAINTY_SLACK * tab.mass[o] {
                        out.push(ArtifactRelation {
                            artifact_time: t,
                            referent_time: tp,
                            artifact: dist.alphabet[o].clone(),
                            referent: dist.alphabet[r].clone(),
                        });
                    }
                }
            }
        }
    }
    out.sort();
    out
}

/// The same relations read straight off the definition: on every history
/// that shows `o` at `t`, the observation at `t'` is `o'`.
pub fn relations_by_definition(dist: &HistoryDist) -> Vec<ArtifactRelation> {
    let k = dist.alphabet.len() as u8;
    let mut out = Vec::new();
    for t in 2..=dist.horizon {
        for tp in 1..t {
            for o in 0..k {
                for r in (0..k).filter(|&r| r != o) {
                    let mut seen = false;
                    let implied = dist.support.iter().all(|(seq, _)| {
                        if seq[t - 1] != o {
                            return true;
                        }
                        seen = true;
                        seq[tp - 1] == r
                    });
                    if seen && implied {
                        out.push(ArtifactRelation {
                            artifact_time: t,
                            referent_time: tp,
                            artifact: dist.alphabet[o as usize].clone(),
                            referent: dist.alphabet[r as usize].clone(),
                        });
                    }
                }
            }
        }
    }
    out.sort();
    out
}

/// All artifact relations with `t <= horizon`.
pub fn detect_artifacts(env: &TabularEnv, horizon: usize) -> Result<Vec<ArtifactRelation>> {
    Ok(relations_in(&enumerate_histories(env, horizon)?))
}

pub fn is_artifactual(env: &TabularEnv, horizon: usize) -> Result<bool> {
    Ok(!detect_artifacts(env, horizon)?.is_empty())
}

/// `P(O_{t'} = o' | O_t = o)` for one relation's times and symbols.
pub fn conditional_certainty(dist: &HistoryDist, rel: &ArtifactRelation) -> Option<f64> {
    let o = dist.symbol(&rel.artifact)? as usize;
    let r = dist.symbol(&rel.referent)? as usize;
    let tab = pair_table(dist, rel.referent_time, rel.artifact_time);
    (tab.mass[o] > 0.0).then(|| 1.0 - tab.miss[o * tab.k + r] / tab.mass[o])
}

/// Largest `P(O_{t'} = o' | O_t = o)` over distinct symbols and
/// `0 < t' < t <= horizon` with `P(O_t = o) > 0`; 0 when `horizon < 2`.
pub fn max_conditional_certainty(env: &TabularEnv, horizon: usize) -> Result<f64> {
    let dist = enumerate_histories(env, horizon)?;
    let mut best: f64 = 0.0;
    for t in 2..=horizon {
        for tp in 1..t {
            let tab = pair_table(&dist, tp, t);
            for o in 0..tab.k {
                if tab.mass[o] <= 0.0 {
                    continue;
                }
                for r in (0..tab.k).filter(|&r| r != o) {
                    best = best.max(1.0 - tab.miss[o * tab.k + r] / tab.mass[o]);
                }
            }
        }
    }
    Ok(best)
}
