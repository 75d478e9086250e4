//! Mutual information over finite joint distributions.

use std::collections::BTreeMap;

use super::enumerate::{CompensatedSum, HistoryDist};
use crate::error::{Error, Result};

/// Slack on the total mass of a joint distribution.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// `I(X; Y)` in bits from `(x, y, p)` triples. Repeated pairs are merged.
pub fn mutual_information<X: Ord, Y: Ord>(joint: impl IntoIterator<Item = (X, Y, f64)>) -> Result<f64> {
    let mut pxy: BTreeMap<(X, Y), CompensatedSum> = BTreeMap::new();
    for (x, y, p) in joint {
        if !(p >= 0.0) || !p.is_finite() {
            return Err(Error::contract(format!("joint probability {p} is not a probability")));
        }
        pxy.entry((x, y)).or_default().add(p);
    }
    let mut total = CompensatedSum::default();
    let mut px: BTreeMap<&X, CompensatedSum> = BTreeMap::new();
    let mut py: BTreeMap<&Y, CompensatedSum> = BTreeMap::new();
    for ((x, y), p) in &pxy {
        let p = p.value();
        total.add(p);
        px.entry(x).or_default().add(p);
        py.entry(y).or_default().add(p);
    }
    let total = total.value();
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::contract(format!("joint distribution sums to {total}, not 1")));
    }
    let mut mi = CompensatedSum::default();
    for ((x, y), p) in &pxy {
        let p = p.value();
        if p > 0.0 {
            mi.add(p * (p / (px[x].value() * py[y].value())).log2());
        }
    }
    // Rounding can leave a tiny negative value for independent variables.
    Ok(mi.value().max(0.0))
}

/// `I(O_{t+1}; (O_i)_{i in keep} | O_c = s for (c, s) in given)` over `dist`.
///
/// Times are 1-based. `dist.horizon` must reach `t + 1`, and every kept or
/// conditioned time must lie in `1..=t`.
pub fn history_information(
    dist: &HistoryDist,
    t: usize,
    keep: &[usize],
    given: &[(usize, u8)],
) -> Result<f64> {
    if t + 1 > dist.horizon {
        return Err(Error::contract(format!(
            "predicting O_{} needs horizon {}, distribution has {}",
            t + 1,
            t + 1,
            dist.horizon
        )));
    }
    if keep.iter().chain(given.iter().map(|g| &g.0)).any(|&i| i == 0 || i > t) {
        return Err(Error::contract(format!("history times must lie in 1..={t}")));
    }
    let holds = |seq: &[u8]| given.iter().all(|&(i, s)| seq[i - 1] == s);
    let mass: CompensatedSum = dist
        .support
        .iter()
        .filter(|(seq, _)| holds(seq))
        .map(|s| s.1)
        .collect();
    let mass = mass.value();
    if mass <= 0.0 {
        return Err(Error::contract("conditioning event has probability zero"));
    }
    mutual_information(dist.support.iter().filter(|(seq, _)| holds(seq)).map(|(seq, p)| {
        let h: Vec<u8> = keep.iter().map(|&i| seq[i - 1]).collect();
        (h, seq[t], p / mass)
    }))
}
