use rand::Rng;

use super::policy::{argmax, epsilon_greedy, TieBreak};
use crate::error::{Error, Result};
use crate::gridworld::{Action, Transition, NUM_ACTIONS};

/// Q-learning with one weight vector per action: `q(o, a) = w_a . o`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearQ {
    weights: Vec<Vec<f64>>,
    pub step_size: f64,
    pub discount: f64,
    pub epsilon: f64,
    pub tie_break: TieBreak,
}

impl LinearQ {
    pub fn new(dim: usize, step_size: f64, discount: f64, epsilon: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("linear agent needs a non-empty observation"));
        }
        if !(step_size > 0.0) {
            return Err(Error::config("step size must be positive"));
        }
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::config("discount must lie in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::config("epsilon must lie in [0, 1]"));
        }
        Ok(Self {
            weights: vec![vec![0.0; dim]; NUM_ACTIONS],
            step_size,
            discount,
            epsilon,
            tie_break: TieBreak::default(),
        })
    }

    /// Length of each action's weight vector.
    pub fn dim(&self) -> usize {
        self.weights[0].len()
    }

    pub fn capacity(&self) -> usize {
        self.dim()
    }

    pub fn weights(&self, action: Action) -> &[f64] {
        &self.weights[action.index()]
    }

    pub fn weights_mut(&mut self, action: Action) -> &mut [f64] {
        &mut self.weights[action.index()]
    }

    fn check(&self, o: &[f64]) -> Result<()> {
        if o.len() != self.dim() {
            return Err(Error::contract(format!(
                "linear agent has {} weights per action, observation has {}",
                self.dim(),
                o.len()
            )));
        }
        Ok(())
    }

    fn values_unchecked(&self, o: &[f64]) -> [f64; NUM_ACTIONS] {
        let mut q = [0.0; NUM_ACTIONS];
        for (qa, w) in q.iter_mut().zip(&self.weights) {
            *qa = w.iter().zip(o).map(|(w, x)| w * x).sum();
        }
        q
    }

    pub fn q_values(&self, o: &[f64]) -> Result<[f64; NUM_ACTIONS]> {
        self.check(o)?;
        Ok(self.values_unchecked(o))
    }

    pub fn act(&self, o: &[f64], rng: &mut impl Rng) -> Result<Action> {
        let q = self.q_values(o)?;
        Ok(Action::from_index(epsilon_greedy(&q, self.epsilon, self.tie_break, rng)))
    }

    pub fn greedy(&self, o: &[f64]) -> Result<Action> {
        Ok(Action::from_index(argmax(&self.q_values(o)?)))
    }

    /// One Q-learning step on the taken action's weights; returns the TD error.
    pub fn update(&mut self, t: &Transition) -> Result<f64> {
        let o = t.obs.flat();
        let o2 = t.next_obs.flat();
        self.check(o)?;
        self.check(o2)?;
        let bootstrap = if t.done {
            0.0
        } else {
            let q2 = self.values_unchecked(o2);
            self.discount * q2.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        };
        let a = t.action.index();
        let q: f64 = self.weights[a].iter().zip(o).map(|(w, x)| w * x).sum();
        let delta = t.reward + bootstrap - q;
        let scale = self.step_size * delta;
        for (w, &x) in self.weights[a].iter_mut().zip(o) {
            *w += scale * x;
        }
        Ok(delta)
    }

    pub fn all_finite(&self) -> bool {
        self.weights.iter().flatten().all(|w| w.is_finite())
    }

    /// Weights in action-major order.
    pub fn to_flat(&self) -> Vec<f64> {
        self.weights.concat()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        let d = self.dim();
        if flat.len() != d * NUM_ACTIONS {
            return Err(Error::contract("flat weight vector has the wrong length"));
        }
        for (w, chunk) in self.weights.iter_mut().zip(flat.chunks(d)) {
            w.copy_from_slice(chunk);
        }
        Ok(())
    }
}
