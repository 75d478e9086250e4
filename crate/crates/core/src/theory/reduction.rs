//! Checks that deleting a referent observation keeps all information about
//! the next observation.
//!
//! The information is measured on histories that contain the artifact, that
//! is under the event `O_t = o`. There the referent coordinate is constant,
//! so removing it cannot change anything. The unconditional quantities are
//! reported alongside; they obey only `I(H') <= I(H)` in general.

use super::detect::{conditional_certainty, relations_in, ArtifactRelation};
use super::enumerate::{enumerate_histories, HistoryDist};
use super::info::history_information;
use super::tabular::TabularEnv;
use crate::error::{Error, Result};

/// Absolute tolerance for information equalities.
pub const INFO_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct ReductionCheck {
    pub relation: ArtifactRelation,
    /// Observations in the full history `O_1 .. O_t`.
    pub window: usize,
    /// `I(O_{t+1}; H | O_t = o)`.
    pub full: f64,
    /// `I(O_{t+1}; H' | O_t = o)` with `O_{t'}` removed.
    pub reduced: f64,
    pub equal: bool,
    pub unconditional_full: f64,
    pub unconditional_reduced: f64,
}

fn symbol(dist: &HistoryDist, name: &str) -> Result<u8> {
    dist.symbol(name)
        .ok_or_else(|| Error::contract(format!("symbol `{name}` not in the alphabet")))
}

fn check_relation(dist: &HistoryDist, rel: &ArtifactRelation) -> Result<ReductionCheck> {
    let t = rel.artifact_time;
    let all: Vec<usize> = (1..=t).collect();
    let reduced: Vec<usize> = all.iter().copied().filter(|&i| i != rel.referent_time).collect();
    let given = [(t, symbol(dist, &rel.artifact)?)];
    let full = history_information(dist, t, &all, &given)?;
    let red = history_information(dist, t, &reduced, &given)?;
    Ok(ReductionCheck {
        relation: rel.clone(),
        window: t,
        full,
        reduced: red,
        equal: (full - red).abs() <= INFO_TOLERANCE,
        unconditional_full: history_information(dist, t, &all, &[])?,
        unconditional_reduced: history_information(dist, t, &reduced, &[])?,
    })
}

/// One check per relation with artifact time `t <= horizon`; histories are
/// enumerated to `horizon + 1` so `O_{t+1}` exists.
pub fn verify_artifact_reduction(env: &TabularEnv, horizon: usize) -> Result<Vec<ReductionCheck>> {
    let dist = enumerate_histories(env, horizon + 1)?;
    relations_in(&dist.truncate(horizon))
        .iter()
        .map(|rel| check_relation(&dist, rel))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct IteratedReduction {
    /// Observations in the full history `O_1 .. O_t`.
    pub window: usize,
    /// Referent times removed, in order.
    pub deleted: Vec<usize>,
    /// Information after removing the first `j` referents, `j = 0..=k`.
    pub information: Vec<f64>,
    pub equal: bool,
}

/// Delete the referents of several relations one after another, conditioning
/// on all their artifacts being present.
///
/// Referent times must be distinct and must not coincide with any artifact
/// time. The history is `O_1 .. O_t` with `t = window`, which must cover the
/// latest artifact.
pub fn verify_iterated_reduction(
    env: &TabularEnv,
    relations: &[ArtifactRelation],
    window: usize,
) -> Result<IteratedReduction> {
    let Some(last) = relations.iter().map(|r| r.artifact_time).max() else {
        return Err(Error::contract("no relations to reduce"));
    };
    if window < last {
        return Err(Error::contract(format!("window {window} ends before the artifact at {last}")));
    }
    let t = window;
    let mut deleted: Vec<usize> = Vec::new();
    for r in relations {
        if deleted.contains(&r.referent_time) {
            return Err(Error::contract("referent times must be distinct"));
        }
        if relations.iter().any(|q| q.artifact_time == r.referent_time) {
            return Err(Error::contract("a referent coincides with an artifact"));
        }
        deleted.push(r.referent_time);
    }
    if deleted.len() >= t {
        return Err(Error::contract("need fewer artifacts than observations"));
    }
    let dist = enumerate_histories(env, t + 1)?;
    let mut given = Vec::new();
    for r in relations {
        match conditional_certainty(&dist, r) {
            Some(c) if c >= 1.0 - super::detect::CERTAINTY_SLACK => {}
            _ => return Err(Error::contract(format!("{r} is not an artifact relation of this environment"))),
        }
        given.push((r.artifact_time, symbol(&dist, &r.artifact)?));
    }
    let mut keep: Vec<usize> = (1..=t).collect();
    let mut information = vec![history_information(&dist, t, &keep, &given)?];
    for &d in &deleted {
        keep.retain(|&i| i != d);
        information.push(history_information(&dist, t, &keep, &given)?);
    }
    let equal = information.iter().all(|&i| (i - information[0]).abs() <= INFO_TOLERANCE);
    Ok(IteratedReduction {
        window: t,
        deleted,
        information,
        equal,
    })
}
