//! Two-stage step-size selection.

use rayon::prelude::*;

use super::stats::mean;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub best_step_size: f64,
    /// Mean selection-stage score per candidate, in candidate order.
    pub selection_means: Vec<f64>,
    /// Evaluation-stage scores of the winner, in evaluation-seed order.
    pub evaluation: Vec<f64>,
}

/// Pick the step size with the highest mean score over `selection_seeds`
/// (first candidate wins ties), then score it afresh on `evaluation_seeds`.
///
/// `evaluate(step_size, seed)` is called in parallel; results are gathered in
/// input order so the outcome does not depend on scheduling.
pub fn two_stage_select<F>(
    step_sizes: &[f64],
    selection_seeds: &[u64],
    evaluation_seeds: &[u64],
    evaluate: F,
) -> Result<Selection>
where
    F: Fn(f64, u64) -> Result<f64> + Sync,
{
    if step_sizes.is_empty() || selection_seeds.is_empty() || evaluation_seeds.is_empty() {
        return Err(Error::config("step-size grid and both seed sets must be non-empty"));
    }
    if let Some(s) = selection_seeds.iter().find(|s| evaluation_seeds.contains(s)) {
        return Err(Error::config(format!(
            "seed {s} appears in both the selection and the evaluation set"
        )));
    }
    let jobs: Vec<(usize, u64)> = (0..step_sizes.len())
        .flat_map(|i| selection_seeds.iter().map(move |&s| (i, s)))
        .collect();
    let scores: Vec<f64> = jobs
        .par_iter()
        .map(|&(i, s)| evaluate(step_sizes[i], s))
        .collect::<Result<_>>()?;
    let selection_means: Vec<f64> = scores.chunks(selection_seeds.len()).map(mean).collect();
    let mut best = 0;
    for (i, &m) in selection_means.iter().enumerate() {
        if m > selection_means[best] {
            best = i;
        }
    }
    let best_step_size = step_sizes[best];
    let evaluation = evaluation_seeds
        .par_iter()
        .map(|&s| evaluate(best_step_size, s))
        .collect::<Result<_>>()?;
    Ok(Selection {
        best_step_size,
        selection_means,
        evaluation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_known_maximum() {
        let f = |a: f64, s: u64| Ok(-(a - 0.3).powi(2) + s as f64 * 1e-3);
        let sel = two_stage_select(&[0.1, 0.2, 0.3, 0.4], &[0, 1, 2], &[10, 11], f).unwrap();
        assert_eq!(sel.best_step_size, 0.3);
        assert_eq!(sel.evaluation, vec![0.01, 0.011]);
    }

    #[test]
    fn ties_go_to_first() {
        let sel = two_stage_select(&[0.1, 0.2], &[0], &[1], |_, _| Ok(1.0)).unwrap();
        assert_eq!(sel.best_step_size, 0.1);
    }

    #[test]
    fn rejects_overlapping_seeds() {
        let e = two_stage_select(&[0.1], &[0, 1], &[1, 2], |_, _| Ok(0.0)).unwrap_err();
        assert!(matches!(e, Error::Config(_)));
    }
}
