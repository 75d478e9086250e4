use rand::Rng;
use serde::{Deserialize, Serialize};

use super::policy::{epsilon_greedy, TieBreak};
use super::replay::ReplayBuffer;
use crate::error::{Error, Result};
use crate::gridworld::{Action, Transition};
use crate::tinynet::{td_loss_and_grad, NetParams, NetSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DqnSettings {
    pub replay_capacity: usize,
    pub batch_size: usize,
    /// Learning steps between target-network refreshes.
    pub sync_period: u64,
    /// Buffered transitions required before learning starts.
    pub learn_start: usize,
}

impl Default for DqnSettings {
    fn default() -> Self {
        Self {
            replay_capacity: 10_000,
            batch_size: 32,
            sync_period: 200,
            learn_start: 500,
        }
    }
}

impl DqnSettings {
    pub fn validate(&self) -> Result<()> {
        if self.replay_capacity == 0 || self.batch_size == 0 || self.sync_period == 0 {
            return Err(Error::config(
                "replay_capacity, batch_size and sync_period must be positive",
            ));
        }
        if self.learn_start > self.replay_capacity {
            return Err(Error::config("learn_start cannot exceed replay_capacity"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct DqnAgent {
    online: NetParams,
    target: NetParams,
    replay: ReplayBuffer<Transition>,
    settings: DqnSettings,
    pub step_size: f64,
    pub discount: f64,
    pub epsilon: f64,
    pub tie_break: TieBreak,
    learn_steps: u64,
}

impl DqnAgent {
    pub fn new(
        spec: NetSpec,
        settings: DqnSettings,
        step_size: f64,
        discount: f64,
        epsilon: f64,
        init_rng: &mut impl Rng,
    ) -> Result<Self> {
        settings.validate()?;
        if !(step_size > 0.0) {
            return Err(Error::config("step size must be positive"));
        }
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::config("discount must lie in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::config("epsilon must lie in [0, 1]"));
        }
        let online = NetParams::glorot(spec, init_rng)?;
        Ok(Self {
            target: online.clone(),
            online,
            replay: ReplayBuffer::new(settings.replay_capacity),
            settings,
            step_size,
            discount,
            epsilon,
            tie_break: TieBreak::default(),
            learn_steps: 0,
        })
    }

    pub fn online(&self) -> &NetParams {
        &self.online
    }

    pub fn online_mut(&mut self) -> &mut NetParams {
        &mut self.online
    }

    pub fn target(&self) -> &NetParams {
        &self.target
    }

    pub fn replay(&self) -> &ReplayBuffer<Transition> {
        &self.replay
    }

    pub fn settings(&self) -> &DqnSettings {
        &self.settings
    }

    pub fn learn_steps(&self) -> u64 {
        self.learn_steps
    }

    pub fn capacity(&self) -> usize {
        self.online.spec().parameter_count()
    }

    pub fn q_values(&self, o: &[f64]) -> Result<Vec<f64>> {
        self.online.forward(o)
    }

    pub fn act(&self, o: &[f64], rng: &mut impl Rng) -> Result<Action> {
        let q = self.q_values(o)?;
        Ok(Action::from_index(epsilon_greedy(&q, self.epsilon, self.tie_break, rng)))
    }

    /// Store a transition and, once warmed up, take one SGD step on a
    /// uniformly resampled batch. Returns the batch loss when a step was taken.
    pub fn observe(&mut self, t: Transition, rng: &mut impl Rng) -> Result<Option<f64>> {
        if t.obs.len() != self.online.spec().input_dim {
            return Err(Error::contract(format!(
                "network expects {} inputs, got {}",
                self.online.spec().input_dim,
                t.obs.len()
            )));
        }
        self.replay.push(t);
        if self.replay.len() < self.settings.learn_start.max(1) {
            return Ok(None);
        }
        let batch = self.replay.sample(self.settings.batch_size, rng);
        let (loss, grad) = td_loss_and_grad(&self.online, &self.target, &batch, self.discount)?;
        self.online.sgd_apply(&grad, self.step_size)?;
        self.learn_steps += 1;
        if self.learn_steps.is_multiple_of(self.settings.sync_period) {
            self.target = self.online.clone();
        }
        Ok(Some(loss))
    }

    pub fn all_finite(&self) -> bool {
        self.online.all_finite()
    }

    pub(crate) fn with_target_synced(mut self) -> Self {
        self.target = self.online.clone();
        self
    }
}
