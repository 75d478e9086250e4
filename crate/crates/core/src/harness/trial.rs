//! Single trials: configuration, the agent-environment loop, and records.

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::artifacts::{
    build_fixed_mask, parse_cell_list, ArtifactKind, DynamicPathParams, FixedArtifactParams,
    BUNDLED_LANDMARKS, BUNDLED_MISLEADING_ROUTE,
};
use crate::error::{Error, Result};
use crate::gridworld::{transduce, Action, Cell, GridSpec, GridWorld, MaskDynamics, Observation, Step, Transition, CROP_SIDES, NUM_ACTIONS};
use crate::learners::{Agent, DqnAgent, DqnSettings, LinearQ, TieBreak};
use crate::rng::RngStreams;
use crate::tinynet::NetSpec;

/// Everything about the environment that is shared by all trials of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    pub grid: GridSpec,
    pub path_thickness: usize,
    pub random_walk_length: usize,
    /// Seed of the fixed random-walk path; independent of trial seeds.
    pub random_path_seed: u64,
    pub misleading_route: Vec<Cell>,
    pub landmark_cells: Vec<Cell>,
    pub dynamic: DynamicPathParams,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            path_thickness: 2,
            random_walk_length: 60,
            random_path_seed: 0,
            misleading_route: parse_cell_list(BUNDLED_MISLEADING_ROUTE).expect("bundled route"),
            landmark_cells: parse_cell_list(BUNDLED_LANDMARKS).expect("bundled landmarks"),
            dynamic: DynamicPathParams::default(),
        }
    }
}

impl EnvConfig {
    pub fn fixed_params(&self) -> FixedArtifactParams {
        FixedArtifactParams {
            path_thickness: self.path_thickness,
            random_walk_length: self.random_walk_length,
            misleading_route: self.misleading_route.clone(),
            landmark_cells: self.landmark_cells.clone(),
        }
    }

    /// Initial artifact mask and its dynamics.
    pub fn artifact_layer(&self, kind: ArtifactKind) -> Result<(crate::bitmap::Bitmap, MaskDynamics)> {
        match kind {
            ArtifactKind::DynamicPath => Ok((
                self.grid.empty_mask(),
                MaskDynamics::DynamicPath(self.dynamic.clone()),
            )),
            _ => Ok((
                build_fixed_mask(kind, &self.grid, self.random_path_seed, &self.fixed_params())?,
                MaskDynamics::Static,
            )),
        }
    }

    pub fn build(&self, kind: ArtifactKind, seed: u64) -> Result<GridWorld> {
        let (mask, dynamics) = self.artifact_layer(kind)?;
        GridWorld::new(self.grid.clone(), mask, dynamics, seed)
    }
}

/// Capacity selector: a crop side for the linear agent, a network shape for DQN.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AgentSpec {
    Linear {
        crop_side: usize,
    },
    Dqn {
        hidden_layers: usize,
        hidden_units: usize,
        #[serde(default)]
        settings: DqnSettings,
    },
}

impl AgentSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            AgentSpec::Linear { .. } => "linear",
            AgentSpec::Dqn { .. } => "dqn",
        }
    }

    /// Human-readable capacity selector: `16x16` crop or `2x16` network.
    pub fn label(&self) -> String {
        match self {
            AgentSpec::Linear { crop_side } => format!("{crop_side}x{crop_side}"),
            AgentSpec::Dqn {
                hidden_layers,
                hidden_units,
                ..
            } => format!("{hidden_layers}x{hidden_units}"),
        }
    }

    pub fn net_spec(&self, input_dim: usize) -> Option<NetSpec> {
        match self {
            AgentSpec::Linear { .. } => None,
            AgentSpec::Dqn {
                hidden_layers,
                hidden_units,
                ..
            } => Some(NetSpec::new(input_dim, *hidden_layers, *hidden_units, NUM_ACTIONS)),
        }
    }

    /// Learnable action-value parameters for a full observation of `obs_side`.
    pub fn capacity(&self, obs_side: usize) -> usize {
        match self {
            AgentSpec::Linear { crop_side } => crop_side * crop_side,
            AgentSpec::Dqn { .. } => self
                .net_spec(obs_side * obs_side)
                .expect("dqn")
                .parameter_count(),
        }
    }

    pub fn validate(&self, obs_side: usize) -> Result<()> {
        match self {
            AgentSpec::Linear { crop_side } => {
                if !CROP_SIDES.contains(crop_side) || *crop_side > obs_side {
                    return Err(Error::config(format!(
                        "crop_side {crop_side} must be one of {CROP_SIDES:?} and at most {obs_side}"
                    )));
                }
                Ok(())
            }
            AgentSpec::Dqn { settings, .. } => {
                self.net_spec(obs_side * obs_side).expect("dqn").validate()?;
                settings.validate()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialConfig {
    pub env: EnvConfig,
    pub artifact: ArtifactKind,
    pub agent: AgentSpec,
    pub step_size: f64,
    pub discount: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub tie_break: TieBreak,
    pub steps: u64,
    pub seed: u64,
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        self.env.grid.validate()?;
        self.agent.validate(self.env.grid.observation_side())?;
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(Error::config("step_size must be positive"));
        }
        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::config("discount must lie in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::config("epsilon must lie in [0, 1]"));
        }
        if self.steps == 0 {
            return Err(Error::config("trial length must be positive"));
        }
        Ok(())
    }

    pub fn capacity(&self) -> usize {
        self.agent.capacity(self.env.grid.observation_side())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("trial configs serialize")
    }

    /// Stable content hash of the serialized configuration.
    pub fn hash(&self) -> String {
        short_hash(self.to_toml().as_bytes())
    }

    pub fn build_agent(&self, streams: &mut RngStreams) -> Result<Agent> {
        let side = self.env.grid.observation_side();
        Ok(match &self.agent {
            AgentSpec::Linear { crop_side } => {
                let mut q = LinearQ::new(crop_side * crop_side, self.step_size, self.discount, self.epsilon)?;
                q.tie_break = self.tie_break;
                Agent::Linear(q)
            }
            AgentSpec::Dqn { settings, .. } => {
                let mut d = DqnAgent::new(
                    self.agent.net_spec(side * side).expect("dqn"),
                    settings.clone(),
                    self.step_size,
                    self.discount,
                    self.epsilon,
                    &mut streams.init,
                )?;
                d.tie_break = self.tie_break;
                Agent::Dqn(Box::new(d))
            }
        })
    }
}

/// First 16 hex digits of SHA-256.
pub fn short_hash(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Reward stream of one trial plus its provenance.
///
/// Rewards are 0 or 1, so the stream is held as the (1-based) steps at which
/// a reward arrived.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub config: TrialConfig,
    pub capacity: usize,
    /// Steps actually executed; shorter than `config.steps` only on divergence.
    pub steps: u64,
    pub reward_steps: Vec<u64>,
    pub episodes: u64,
    pub truncations: u64,
    pub diverged_at: Option<u64>,
}

impl TrialRecord {
    pub fn total_reward(&self) -> f64 {
        self.reward_steps.len() as f64
    }

    /// Dense reward stream `r_1..r_N`.
    pub fn rewards(&self) -> Vec<f64> {
        let mut r = vec![0.0; self.steps as usize];
        for &n in &self.reward_steps {
            r[(n - 1) as usize] = 1.0;
        }
        r
    }

    pub fn average_reward_curve(&self, stride: usize) -> Vec<(u64, f64)> {
        average_reward_curve(&self.rewards(), stride)
    }

    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }
}

/// Prefix means `(1/t) sum_{n<=t} r_n` at `t = stride, 2 stride, ...`, always
/// ending with `t = N`.
pub fn average_reward_curve(rewards: &[f64], stride: usize) -> Vec<(u64, f64)> {
    let stride = stride.max(1);
    let mut out = Vec::with_capacity(rewards.len() / stride + 1);
    let mut sum = 0.0;
    for (i, r) in rewards.iter().enumerate() {
        sum += r;
        let t = i + 1;
        if t % stride == 0 || t == rewards.len() {
            out.push((t as u64, sum / t as f64));
        }
    }
    out
}

/// Something that picks actions and learns from steps of a [`GridWorld`].
pub trait Controller {
    fn act(&mut self, env: &GridWorld, rng: &mut impl Rng) -> Result<Action>;

    /// Learn from a step. Returns `false` once parameters stop being finite.
    fn learn(&mut self, step: Step, rng: &mut impl Rng) -> Result<bool>;
}

/// Learner plus the transduction applied to its input channel.
pub struct LearnerController {
    pub agent: Agent,
    crop_side: Option<usize>,
}

impl LearnerController {
    pub fn new(agent: Agent, crop_side: Option<usize>) -> Self {
        Self { agent, crop_side }
    }

    fn view(&self, o: &Observation) -> Result<Observation> {
        match self.crop_side {
            Some(c) => transduce(o, c),
            None => Ok(o.clone()),
        }
    }
}

impl Controller for LearnerController {
    fn act(&mut self, env: &GridWorld, rng: &mut impl Rng) -> Result<Action> {
        let o = env.observation();
        match self.crop_side {
            Some(c) if c != o.side() => self.agent.act(transduce(o, c)?.flat(), rng),
            _ => self.agent.act(o.flat(), rng),
        }
    }

    fn learn(&mut self, step: Step, rng: &mut impl Rng) -> Result<bool> {
        let t = step.transition;
        let t = if self.crop_side.is_some() {
            Transition {
                obs: self.view(&t.obs)?,
                next_obs: self.view(&t.next_obs)?,
                ..t
            }
        } else {
            t
        };
        match &mut self.agent {
            Agent::Linear(q) => Ok(q.update(&t)?.is_finite()),
            Agent::Dqn(d) => Ok(d.observe(t, rng)?.is_none_or(f64::is_finite)),
        }
    }
}

/// Run `steps` environment steps under `controller`.
pub fn run_controller<C: Controller>(
    config: &TrialConfig,
    env: &mut GridWorld,
    controller: &mut C,
    streams: &mut RngStreams,
) -> Result<TrialRecord> {
    let mut reward_steps = Vec::new();
    let mut diverged_at = None;
    let mut executed = 0;
    for n in 1..=config.steps {
        let action = controller.act(env, &mut streams.action)?;
        let step = env.step(action);
        if step.transition.reward > 0.0 {
            reward_steps.push(n);
        }
        executed = n;
        if !controller.learn(step, &mut streams.replay)? {
            diverged_at = Some(n);
            break;
        }
    }
    Ok(TrialRecord {
        config: config.clone(),
        capacity: config.capacity(),
        steps: executed,
        reward_steps,
        episodes: env.state().episode_count,
        truncations: env.state().truncations,
        diverged_at,
    })
}

/// Build the environment and agent a config describes and run it.
pub fn run_trial(config: &TrialConfig) -> Result<TrialRecord> {
    config.validate()?;
    let mut streams = RngStreams::new(config.seed);
    let mut env = config.env.build(config.artifact, config.seed)?;
    let agent = config.build_agent(&mut streams)?;
    let crop = match config.agent {
        AgentSpec::Linear { crop_side } => Some(crop_side),
        AgentSpec::Dqn { .. } => None,
    };
    let mut controller = LearnerController::new(agent, crop);
    let mut record = run_controller(config, &mut env, &mut controller, &mut streams)?;
    if record.diverged_at.is_none() && !controller.agent.all_finite() {
        record.diverged_at = Some(record.steps);
    }
    Ok(record)
}
