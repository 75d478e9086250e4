//! On-disk formats: per-trial record files and the sweep summary CSV.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::trial::{TrialConfig, TrialRecord};
use crate::artifacts::ArtifactKind;
use crate::error::{Error, Result};

const RECORD_SEPARATOR: &str = "---\n";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordHeader {
    manifest_hash: String,
    env_hash: String,
    capacity: usize,
    steps: u64,
    total_reward: u64,
    episodes: u64,
    truncations: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    diverged_at: Option<u64>,
    config: TrialConfig,
}

/// Zeros before each reward, in order. Trailing zeros follow from `steps`.
pub fn reward_gaps(reward_steps: &[u64]) -> Vec<u64> {
    let mut prev = 0;
    reward_steps
        .iter()
        .map(|&n| {
            let g = n - prev - 1;
            prev = n;
            g
        })
        .collect()
}

pub fn steps_from_gaps(gaps: &[u64]) -> Vec<u64> {
    let mut at = 0;
    gaps.iter()
        .map(|&g| {
            at += g + 1;
            at
        })
        .collect()
}

/// Record text: a TOML header, a `---` line, then the reward gaps.
pub fn format_record(record: &TrialRecord, manifest_hash: &str, env_hash: &str) -> String {
    let header = RecordHeader {
        manifest_hash: manifest_hash.into(),
        env_hash: env_hash.into(),
        capacity: record.capacity,
        steps: record.steps,
        total_reward: record.reward_steps.len() as u64,
        episodes: record.episodes,
        truncations: record.truncations,
        diverged_at: record.diverged_at,
        config: record.config.clone(),
    };
    let mut out = toml::to_string(&header).expect("record headers serialize");
    out.push_str(RECORD_SEPARATOR);
    for chunk in reward_gaps(&record.reward_steps).chunks(20) {
        let line: Vec<String> = chunk.iter().map(u64::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Parse a record file back into the record and its (manifest, env) hashes.
pub fn parse_record(text: &str) -> Result<(TrialRecord, String, String)> {
    let bad = |message: String| Error::Parse { line: None, message };
    let (head, body) = text
        .split_once(&format!("\n{RECORD_SEPARATOR}"))
        .ok_or_else(|| bad("record has no `---` separator".into()))?;
    let h: RecordHeader = toml::from_str(head).map_err(|e| bad(e.message().to_string()))?;
    let gaps: Vec<u64> = body
        .split_whitespace()
        .map(|g| g.parse().map_err(|_| bad(format!("bad reward gap `{g}`"))))
        .collect::<Result<_>>()?;
    let reward_steps = steps_from_gaps(&gaps);
    if reward_steps.len() as u64 != h.total_reward || reward_steps.last().is_some_and(|&n| n > h.steps) {
        return Err(bad("reward gaps disagree with the header".into()));
    }
    Ok((
        TrialRecord {
            config: h.config,
            capacity: h.capacity,
            steps: h.steps,
            reward_steps,
            episodes: h.episodes,
            truncations: h.truncations,
            diverged_at: h.diverged_at,
        },
        h.manifest_hash,
        h.env_hash,
    ))
}

pub fn write_record(path: &Path, record: &TrialRecord, manifest_hash: &str, env_hash: &str) -> Result<()> {
    fs::write(path, format_record(record, manifest_hash, env_hash)).map_err(|e| Error::io(path, e))
}

pub fn read_record(path: &Path) -> Result<TrialRecord> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_record(&text)?.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Selection,
    Evaluation,
}

/// One line of `summary.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub artifact: ArtifactKind,
    pub agent: String,
    pub capacity: usize,
    pub alpha: f64,
    pub seed: u64,
    pub total_reward: f64,
    pub stage: Stage,
    /// Crop side (`16x16`) or network shape (`2x16`).
    pub selector: String,
    pub diverged: bool,
    /// Record file relative to the results directory; empty when not written.
    pub record: String,
    pub config_hash: String,
    pub env_hash: String,
    pub manifest_hash: String,
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::Results(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Results(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Results(format!("{}: {e}", path.display()))))
        .collect()
}

/// Write CSV text produced by `f` to `path`.
pub(crate) fn write_csv(
    path: &Path,
    f: impl FnOnce(&mut csv::Writer<std::io::BufWriter<fs::File>>) -> csv::Result<()>,
) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    f(&mut w).map_err(|e| Error::Results(format!("{}: {e}", path.display())))?;
    w.flush().map_err(|e| Error::io(path, e))?;
    w.into_inner()
        .map_err(|e| Error::Results(e.to_string()))?
        .flush()
        .map_err(|e| Error::io(path, e))
}
