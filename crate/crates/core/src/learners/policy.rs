use rand::Rng;
use serde::{Deserialize, Serialize};

/// How the greedy branch resolves exactly equal action values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Lowest action index wins.
    Lowest,
    /// Uniform among the tied actions, drawn from the action stream.
    #[default]
    Random,
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Greedy choice under `tie`. With [`TieBreak::Random`] a draw is consumed only
/// when two or more actions share the maximum.
pub fn greedy(values: &[f64], tie: TieBreak, rng: &mut impl Rng) -> usize {
    let best = argmax(values);
    if tie == TieBreak::Lowest {
        return best;
    }
    let top = values[best];
    let ties = values.iter().filter(|&&v| v == top).count();
    if ties == 1 {
        return best;
    }
    let pick = rng.random_range(0..ties);
    values
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v == top)
        .nth(pick)
        .map(|(i, _)| i)
        .expect("pick < ties")
}

/// Uniform action with probability `epsilon`, greedy otherwise.
///
/// One uniform draw is always consumed to decide between the branches.
pub fn epsilon_greedy(values: &[f64], epsilon: f64, tie: TieBreak, rng: &mut impl Rng) -> usize {
    assert!(!values.is_empty(), "epsilon_greedy needs at least one action value");
    if rng.random::<f64>() < epsilon {
        rng.random_range(0..values.len())
    } else {
        greedy(values, tie, rng)
    }
}
