//! Artifacts as external memory: gridworld environments with visual path
//! artifacts, capacity-limited value learners, an exact theory oracle on
//! tabular environments, and the sweep/statistics harness.

pub mod artifacts;
pub mod bitmap;
pub mod cli;
pub mod error;
pub mod gridworld;
pub mod harness;
pub mod learners;
pub mod manifest;
pub mod pgm;
pub mod rng;
pub mod theory;
pub mod tinynet;

pub use error::{Error, Result};
