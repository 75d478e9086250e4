//! Capacity-bounded value learners and their shared plumbing.

pub mod dqn;
pub mod linear;
pub mod policy;
pub mod replay;

use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use dqn::{DqnAgent, DqnSettings};
pub use linear::LinearQ;
pub use policy::{argmax, epsilon_greedy, greedy, TieBreak};
pub use replay::ReplayBuffer;

use crate::error::{Error, Result};
use crate::gridworld::{Action, Transition, NUM_ACTIONS};
use crate::tinynet::NetParams;

#[derive(Clone, Debug)]
pub enum Agent {
    Linear(LinearQ),
    Dqn(Box<DqnAgent>),
}

impl Agent {
    /// Number of learnable action-value parameters the capacity is measured in:
    /// weights per action for the linear agent, all network scalars for DQN.
    pub fn capacity(&self) -> usize {
        match self {
            Agent::Linear(q) => q.capacity(),
            Agent::Dqn(d) => d.capacity(),
        }
    }

    pub fn act(&self, o: &[f64], rng: &mut impl Rng) -> Result<Action> {
        match self {
            Agent::Linear(q) => q.act(o, rng),
            Agent::Dqn(d) => d.act(o, rng),
        }
    }

    pub fn learn(&mut self, t: Transition, rng: &mut impl Rng) -> Result<()> {
        match self {
            Agent::Linear(q) => q.update(&t).map(|_| ()),
            Agent::Dqn(d) => d.observe(t, rng).map(|_| ()),
        }
    }

    pub fn all_finite(&self) -> bool {
        match self {
            Agent::Linear(q) => q.all_finite(),
            Agent::Dqn(d) => d.all_finite(),
        }
    }

    /// Flat learnable parameters (action-major for linear, network order for DQN).
    pub fn parameters(&self) -> Vec<f64> {
        match self {
            Agent::Linear(q) => q.to_flat(),
            Agent::Dqn(d) => d.online().to_flat(),
        }
    }
}

const CHECKPOINT_SEPARATOR: &str = "\n---\n";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointHeader {
    kind: String,
    step_size: f64,
    discount: f64,
    epsilon: f64,
    capacity: usize,
    #[serde(default)]
    tie_break: TieBreak,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dqn: Option<DqnSettings>,
}

/// Write a checkpoint: a TOML header, a `---` line, then the binary weights.
///
/// Linear weights are stored as two little-endian `u32` (actions, dim)
/// followed by action-major `f64`; DQN stores the online network dump.
pub fn save_checkpoint(agent: &Agent, w: &mut impl Write) -> std::io::Result<()> {
    let header = match agent {
        Agent::Linear(q) => CheckpointHeader {
            kind: "linear".into(),
            step_size: q.step_size,
            discount: q.discount,
            epsilon: q.epsilon,
            capacity: q.capacity(),
            tie_break: q.tie_break,
            dqn: None,
        },
        Agent::Dqn(d) => CheckpointHeader {
            kind: "dqn".into(),
            step_size: d.step_size,
            discount: d.discount,
            epsilon: d.epsilon,
            capacity: d.capacity(),
            tie_break: d.tie_break,
            dqn: Some(d.settings().clone()),
        },
    };
    let text = toml::to_string(&header).map_err(std::io::Error::other)?;
    w.write_all(text.trim_end().as_bytes())?;
    w.write_all(CHECKPOINT_SEPARATOR.as_bytes())?;
    match agent {
        Agent::Linear(q) => {
            w.write_all(&(NUM_ACTIONS as u32).to_le_bytes())?;
            w.write_all(&(q.dim() as u32).to_le_bytes())?;
            for v in q.to_flat() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Agent::Dqn(d) => d.online().save(w)?,
    }
    Ok(())
}

/// Restore an agent saved by [`save_checkpoint`]. A DQN agent comes back with
/// an empty replay buffer and its target equal to the online network.
pub fn load_checkpoint(r: &mut impl Read) -> Result<Agent> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| Error::Parse {
        line: None,
        message: e.to_string(),
    })?;
    let sep = CHECKPOINT_SEPARATOR.as_bytes();
    let pos = bytes
        .windows(sep.len())
        .position(|w| w == sep)
        .ok_or_else(|| Error::Parse {
            line: None,
            message: "checkpoint header separator missing".into(),
        })?;
    let head = std::str::from_utf8(&bytes[..pos]).map_err(|e| Error::Parse {
        line: None,
        message: e.to_string(),
    })?;
    let header: CheckpointHeader = toml::from_str(head).map_err(|e| Error::Parse {
        line: None,
        message: e.to_string(),
    })?;
    let mut body = &bytes[pos + sep.len()..];
    let truncated = || Error::Parse {
        line: None,
        message: "checkpoint body truncated".into(),
    };
    match header.kind.as_str() {
        "linear" => {
            let mut u = [0u8; 4];
            body.read_exact(&mut u).map_err(|_| truncated())?;
            let actions = u32::from_le_bytes(u) as usize;
            body.read_exact(&mut u).map_err(|_| truncated())?;
            let dim = u32::from_le_bytes(u) as usize;
            if actions != NUM_ACTIONS || dim != header.capacity {
                return Err(Error::Parse {
                    line: None,
                    message: "checkpoint shape disagrees with its header".into(),
                });
            }
            let mut flat = vec![0.0; actions * dim];
            for v in &mut flat {
                let mut b = [0u8; 8];
                body.read_exact(&mut b).map_err(|_| truncated())?;
                *v = f64::from_le_bytes(b);
            }
            let mut q = LinearQ::new(dim, header.step_size, header.discount, header.epsilon)?;
            q.set_flat(&flat)?;
            q.tie_break = header.tie_break;
            Ok(Agent::Linear(q))
        }
        "dqn" => {
            let net = NetParams::load(&mut body)?;
            let settings = header.dqn.unwrap_or_default();
            // Weights are overwritten below; the init draw only fills placeholders.
            let mut rng = crate::rng::stream(0, crate::rng::Stream::Init);
            let mut d = DqnAgent::new(
                *net.spec(),
                settings,
                header.step_size,
                header.discount,
                header.epsilon,
                &mut rng,
            )?;
            *d.online_mut() = net;
            d.tie_break = header.tie_break;
            Ok(Agent::Dqn(Box::new(d.with_target_synced())))
        }
        other => Err(Error::Parse {
            line: None,
            message: format!("unknown agent kind `{other}`"),
        }),
    }
}
