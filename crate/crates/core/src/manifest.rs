//! Run manifests: the TOML file that describes an experiment.
//!
//! Parsing fills every default explicitly, so serializing a parsed manifest
//! and parsing it again gives the same value.

use serde::{Deserialize, Serialize};

use crate::artifacts::{parse_cell_list, ArtifactKind, DynamicPathParams, BUNDLED_LANDMARKS, BUNDLED_MISLEADING_ROUTE};
use crate::error::{Error, Result};
use crate::gridworld::{Cell, GridSpec, CROP_SIDES};
use crate::harness::{short_hash, AgentSpec, EnvConfig, TrialConfig};
use crate::learners::{DqnSettings, TieBreak};
use crate::tinynet::NetSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    Exp1,
    Exp2,
    Exp3,
    Theory,
    Custom,
}

impl ExperimentId {
    fn default_artifacts(self) -> Vec<ArtifactKind> {
        use ArtifactKind::*;
        match self {
            ExperimentId::Exp1 | ExperimentId::Custom => vec![None, OptimalPath],
            ExperimentId::Exp2 => vec![None, SuboptimalPath, MisleadingPath, RandomPath, Landmarks],
            ExperimentId::Exp3 => vec![None, DynamicPath],
            ExperimentId::Theory => vec![],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Linear,
    Dqn,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvironmentBlock {
    pub artifacts: Vec<ArtifactKind>,
    pub path_thickness: usize,
    pub random_walk_length: usize,
    pub random_path_seed: u64,
    pub misleading_route: Vec<Cell>,
    pub landmark_cells: Vec<Cell>,
    pub grid: GridSpec,
    pub dynamic: DynamicPathParams,
}

impl Default for EnvironmentBlock {
    fn default() -> Self {
        let env = EnvConfig::default();
        Self {
            artifacts: Vec::new(),
            path_thickness: env.path_thickness,
            random_walk_length: env.random_walk_length,
            random_path_seed: env.random_path_seed,
            misleading_route: parse_cell_list(BUNDLED_MISLEADING_ROUTE).expect("bundled"),
            landmark_cells: parse_cell_list(BUNDLED_LANDMARKS).expect("bundled"),
            grid: env.grid,
            dynamic: env.dynamic,
        }
    }
}

impl EnvironmentBlock {
    pub fn env_config(&self) -> EnvConfig {
        EnvConfig {
            grid: self.grid.clone(),
            path_thickness: self.path_thickness,
            random_walk_length: self.random_walk_length,
            random_path_seed: self.random_path_seed,
            misleading_route: self.misleading_route.clone(),
            landmark_cells: self.landmark_cells.clone(),
            dynamic: self.dynamic.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentBlock {
    pub kind: AgentKind,
    pub crop_sides: Vec<usize>,
    /// `[hidden_layers, hidden_units]` pairs.
    pub networks: Vec<[usize; 2]>,
    pub discount: f64,
    pub epsilon: f64,
    pub tie_break: TieBreak,
    pub dqn: DqnSettings,
}

impl Default for AgentBlock {
    fn default() -> Self {
        Self {
            kind: AgentKind::Linear,
            crop_sides: CROP_SIDES.to_vec(),
            networks: [2, 3]
                .iter()
                .flat_map(|&l| [4, 8, 16, 32].map(|u| [l, u]))
                .collect(),
            discount: 0.99,
            epsilon: 0.1,
            tie_break: TieBreak::default(),
            dqn: DqnSettings::default(),
        }
    }
}

impl AgentBlock {
    /// One capacity selector per crop side or network, in manifest order.
    pub fn specs(&self) -> Vec<AgentSpec> {
        match self.kind {
            AgentKind::Linear => self
                .crop_sides
                .iter()
                .map(|&crop_side| AgentSpec::Linear { crop_side })
                .collect(),
            AgentKind::Dqn => self
                .networks
                .iter()
                .map(|&[hidden_layers, hidden_units]| AgentSpec::Dqn {
                    hidden_layers,
                    hidden_units,
                    settings: self.dqn.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepBlock {
    pub step_sizes: Vec<f64>,
    /// Seeds per stage; selection uses `seed .. seed + n`, evaluation the next `n`.
    pub seeds_per_stage: u64,
    /// Zero means the agent-kind default.
    pub trial_steps: u64,
    pub smoke_steps: u64,
    pub curve_stride: usize,
}

impl Default for SweepBlock {
    fn default() -> Self {
        Self {
            step_sizes: [-12, -10, -8, -6, -4, -2].iter().map(|&e| 2f64.powi(e)).collect(),
            seeds_per_stage: 30,
            trial_steps: 0,
            smoke_steps: 20_000,
            curve_stride: 1000,
        }
    }
}

/// Single trial for `run`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialBlock {
    pub artifact: ArtifactKind,
    /// Index into the agent block's crop sides or networks.
    #[serde(default)]
    pub capacity_index: usize,
    pub step_size: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TheoryBlock {
    /// Tabular environment file; empty selects the bundled page-keeping example.
    pub env_file: String,
    pub horizon: usize,
    pub epsilon: f64,
}

impl Default for TheoryBlock {
    fn default() -> Self {
        Self {
            env_file: String::new(),
            horizon: 6,
            epsilon: 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub experiment: ExperimentId,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    #[serde(default)]
    pub environment: EnvironmentBlock,
    #[serde(default)]
    pub agent: AgentBlock,
    #[serde(default)]
    pub sweep: SweepBlock,
    #[serde(default)]
    pub theory: TheoryBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial: Option<TrialBlock>,
}

fn default_output_dir() -> String {
    "results".into()
}

/// 1-based line of the first `key = ...` assignment, if any.
fn line_of_key(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with('='))
    }).map(|i| i + 1)
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

pub fn parse_manifest(text: &str) -> Result<RunManifest> {
    let mut m: RunManifest = toml::from_str(text).map_err(|e| Error::Parse {
        line: e.span().map(|s| line_of_offset(text, s.start)),
        message: e.message().to_string(),
    })?;
    let table: toml::Table = toml::from_str(text).expect("parsed above");
    let has_artifacts = table
        .get("environment")
        .and_then(|e| e.get("artifacts"))
        .is_some();
    if !has_artifacts {
        m.environment.artifacts = m.experiment.default_artifacts();
    }
    if m.sweep.trial_steps == 0 {
        m.sweep.trial_steps = match m.agent.kind {
            AgentKind::Linear => 200_000,
            AgentKind::Dqn => 150_000,
        };
    }
    m.validate().map_err(|e| match e {
        Error::Config(message) => {
            let key = message.split('`').nth(1).unwrap_or("");
            Error::Parse {
                line: line_of_key(text, key),
                message,
            }
        }
        other => other,
    })?;
    Ok(m)
}

impl RunManifest {
    /// Constraint checks. Messages name the offending key in backticks.
    pub fn validate(&self) -> Result<()> {
        let grid = &self.environment.grid;
        grid.validate()?;
        self.environment.dynamic.validate()?;
        let side = grid.observation_side();
        for &c in &self.agent.crop_sides {
            if !CROP_SIDES.contains(&c) || c > side {
                return Err(Error::config(format!(
                    "`crop_sides` entry {c} must be one of {CROP_SIDES:?} and at most {side}"
                )));
            }
        }
        for &[l, u] in &self.agent.networks {
            NetSpec::new(side * side, l, u, 4)
                .validate()
                .map_err(|e| Error::config(format!("`networks` entry [{l}, {u}]: {e}")))?;
        }
        if !(0.0..1.0).contains(&self.agent.discount) {
            return Err(Error::config("`discount` must lie in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.agent.epsilon) {
            return Err(Error::config("`epsilon` must lie in [0, 1]"));
        }
        self.agent.dqn.validate()?;
        if self.sweep.step_sizes.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(Error::config("`step_sizes` must be positive"));
        }
        if self.sweep.seeds_per_stage < 2 {
            return Err(Error::config("`seeds_per_stage` must be at least 2"));
        }
        if self.sweep.curve_stride == 0 {
            return Err(Error::config("`curve_stride` must be positive"));
        }
        if self.sweep.smoke_steps == 0 {
            return Err(Error::config("`smoke_steps` must be positive"));
        }
        if let Some(t) = &self.trial {
            let n = self.agent.specs().len();
            if t.capacity_index >= n {
                return Err(Error::config(format!("`capacity_index` {} out of range for {n} capacities", t.capacity_index)));
            }
            if !(t.step_size > 0.0) {
                return Err(Error::config("`step_size` must be positive"));
            }
        }
        if !(self.theory.epsilon > 0.0 && self.theory.epsilon < 1.0) {
            return Err(Error::config("`epsilon` of the theory block must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifests serialize")
    }

    pub fn hash(&self) -> String {
        short_hash(self.to_toml().as_bytes())
    }

    /// Hash of everything about the environment except which artifacts are swept.
    pub fn env_hash(&self) -> String {
        short_hash(toml::to_string(&self.environment.env_config()).expect("serializes").as_bytes())
    }

    pub fn selection_seeds(&self) -> Vec<u64> {
        (self.seed..self.seed + self.sweep.seeds_per_stage).collect()
    }

    pub fn evaluation_seeds(&self) -> Vec<u64> {
        let n = self.sweep.seeds_per_stage;
        (self.seed + n..self.seed + 2 * n).collect()
    }

    pub fn trial_config(&self, artifact: ArtifactKind, agent: AgentSpec, step_size: f64, steps: u64, seed: u64) -> TrialConfig {
        TrialConfig {
            env: self.environment.env_config(),
            artifact,
            agent,
            step_size,
            discount: self.agent.discount,
            epsilon: self.agent.epsilon,
            tie_break: self.agent.tie_break,
            steps,
            seed,
        }
    }

    /// The `[trial]` block as a config, if present.
    pub fn single_trial(&self) -> Option<TrialConfig> {
        let t = self.trial.as_ref()?;
        let agent = self.agent.specs()[t.capacity_index].clone();
        Some(self.trial_config(t.artifact, agent, t.step_size, self.sweep.trial_steps, t.seed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_exp1_fills_defaults() {
        let m = parse_manifest("experiment = \"exp1\"\n").unwrap();
        let caps: Vec<usize> = m.agent.specs().iter().map(|s| s.capacity(24)).collect();
        assert_eq!(caps, vec![16, 64, 256, 400, 576]);
        assert_eq!(m.environment.artifacts, vec![ArtifactKind::None, ArtifactKind::OptimalPath]);
        assert_eq!(m.sweep.trial_steps, 200_000);
        assert_eq!(m.selection_seeds(), (0..30).collect::<Vec<_>>());
        assert_eq!(m.evaluation_seeds(), (30..60).collect::<Vec<_>>());
        assert_eq!(parse_manifest(&m.to_toml()).unwrap(), m);
    }

    #[test]
    fn bad_crop_side_names_key_and_line() {
        let text = "experiment = \"exp1\"\n\n[agent]\ncrop_sides = [4, 5]\n";
        match parse_manifest(text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, Some(4));
                assert!(message.contains("crop_sides"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_rejected_with_line() {
        let text = "experiment = \"exp3\"\n[sweep]\nstep_size = 0.1\n";
        match parse_manifest(text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, Some(3));
                assert!(message.contains("step_size"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_manifest("experiment = 3\n").is_err());
        assert!(parse_manifest("experiment = \"exp9\"\n").is_err());
    }

    #[test]
    fn dqn_defaults() {
        let m = parse_manifest("experiment = \"exp1\"\n[agent]\nkind = \"dqn\"\n").unwrap();
        assert_eq!(m.sweep.trial_steps, 150_000);
        assert_eq!(m.agent.specs().len(), 8);
    }
}
