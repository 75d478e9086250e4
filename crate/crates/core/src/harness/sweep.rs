//! Sweeps over (artifact, capacity, step size, seed) and their analysis.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::results::{read_record, read_summary, write_csv, write_record, write_summary, Stage, SummaryRow};
use super::scan::{externalization_scan, ResultTable, ScanReport};
use super::select::{two_stage_select, Selection};
use super::stats::{mean, standard_error};
use super::trial::{run_trial, AgentSpec, TrialRecord};
use crate::artifacts::ArtifactKind;
use crate::error::{Error, Result};
use crate::manifest::RunManifest;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Full,
    Smoke,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellOutcome {
    pub artifact: ArtifactKind,
    pub agent: AgentSpec,
    pub capacity: usize,
    pub selection: Selection,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutcome {
    pub cells: Vec<CellOutcome>,
    /// Every trial, sorted by config hash.
    pub rows: Vec<SummaryRow>,
}

impl SweepOutcome {
    /// Evaluation samples of one agent kind keyed by (artifact, capacity).
    pub fn table(&self, agent_kind: &str) -> ResultTable {
        self.cells
            .iter()
            .filter(|c| c.agent.kind_name() == agent_kind)
            .map(|c| ((c.artifact, c.capacity), c.selection.evaluation.clone()))
            .collect()
    }
}

#[derive(Serialize)]
struct SweepMeta<'a> {
    manifest_hash: String,
    env_hash: String,
    profile: Profile,
    trial_steps: u64,
    manifest: &'a RunManifest,
}

/// Run the two-stage selection for every (artifact, capacity) of `manifest`.
///
/// With `out = Some(dir)`, writes `sweep.toml`, `summary.csv` and one record
/// file per trial under `dir/records`.
pub fn run_sweep(manifest: &RunManifest, profile: Profile, out: Option<&Path>) -> Result<SweepOutcome> {
    let steps = match profile {
        Profile::Full => manifest.sweep.trial_steps,
        Profile::Smoke => manifest.sweep.smoke_steps,
    };
    let (manifest_hash, env_hash) = (manifest.hash(), manifest.env_hash());
    if let Some(dir) = out {
        fs::create_dir_all(dir.join("records")).map_err(|e| Error::io(dir, e))?;
        let meta = SweepMeta {
            manifest_hash: manifest_hash.clone(),
            env_hash: env_hash.clone(),
            profile,
            trial_steps: steps,
            manifest,
        };
        let path = dir.join("sweep.toml");
        fs::write(&path, toml::to_string(&meta).expect("serializes")).map_err(|e| Error::io(&path, e))?;
    }
    let rows = Mutex::new(Vec::new());
    let mut cells = Vec::new();
    let selection_seeds = manifest.selection_seeds();
    let evaluation_seeds = manifest.evaluation_seeds();
    for &artifact in &manifest.environment.artifacts {
        for agent in manifest.agent.specs() {
            let capacity = agent.capacity(manifest.environment.grid.observation_side());
            let evaluate = |alpha: f64, seed: u64| -> Result<f64> {
                let config = manifest.trial_config(artifact, agent.clone(), alpha, steps, seed);
                let record = run_trial(&config)?;
                let config_hash = config.hash();
                let stage = if evaluation_seeds.contains(&seed) {
                    Stage::Evaluation
                } else {
                    Stage::Selection
                };
                let rel = format!("records/{}-{}-{config_hash}.rec", artifact.name(), agent.label());
                if let Some(dir) = out {
                    write_record(&dir.join(&rel), &record, &manifest_hash, &env_hash)?;
                }
                let row = SummaryRow {
                    artifact,
                    agent: agent.kind_name().into(),
                    capacity,
                    alpha,
                    seed,
                    total_reward: record.total_reward(),
                    stage,
                    selector: agent.label(),
                    diverged: record.diverged(),
                    record: if out.is_some() { rel } else { String::new() },
                    config_hash,
                    env_hash: env_hash.clone(),
                    manifest_hash: manifest_hash.clone(),
                };
                rows.lock().expect("no panics while holding the lock").push(row);
                Ok(record.total_reward())
            };
            let selection = two_stage_select(&manifest.sweep.step_sizes, &selection_seeds, &evaluation_seeds, evaluate)?;
            cells.push(CellOutcome {
                artifact,
                agent,
                capacity,
                selection,
            });
        }
    }
    let mut rows = rows.into_inner().expect("no panics while holding the lock");
    rows.sort_by(|a, b| (&a.config_hash, a.stage).cmp(&(&b.config_hash, b.stage)));
    if let Some(dir) = out {
        write_summary(&dir.join("summary.csv"), &rows)?;
    }
    Ok(SweepOutcome { cells, rows })
}

/// Selected step size and evaluation sample of one (agent, artifact, capacity).
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyzedCell {
    pub agent: String,
    pub artifact: ArtifactKind,
    pub capacity: usize,
    pub selector: String,
    pub best_alpha: f64,
    pub evaluation: Vec<f64>,
    pub diverged: usize,
    pub records: Vec<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Analysis {
    pub cells: Vec<AnalyzedCell>,
    /// Externalization scan per agent kind.
    pub scans: BTreeMap<String, ScanReport>,
    pub env_hash: String,
    pub manifest_hashes: Vec<String>,
}

/// Summary CSVs in `dir` and its immediate subdirectories.
fn find_summaries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    let own = dir.join("summary.csv");
    if own.is_file() {
        found.push(own);
    }
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut subdirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    for d in subdirs {
        let p = d.join("summary.csv");
        if p.is_file() {
            found.push(p);
        }
    }
    Ok(found)
}

/// Re-derive selections from summary rows and run the externalization scan.
pub fn analyze_rows(rows: &[(PathBuf, SummaryRow)]) -> Result<Analysis> {
    if rows.is_empty() {
        return Err(Error::Results("no trial rows to analyze".into()));
    }
    let env_hashes: BTreeSet<&str> = rows.iter().map(|r| r.1.env_hash.as_str()).collect();
    if env_hashes.len() > 1 {
        return Err(Error::Results(format!(
            "results come from different environments: {env_hashes:?}"
        )));
    }
    let manifest_hashes: Vec<String> = rows
        .iter()
        .map(|r| r.1.manifest_hash.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    type Key = (String, ArtifactKind, usize);
    let mut groups: BTreeMap<Key, Vec<&(PathBuf, SummaryRow)>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.1.agent.clone(), r.1.artifact, r.1.capacity))
            .or_default()
            .push(r);
    }
    let mut cells = Vec::new();
    for ((agent, artifact, capacity), mut group) in groups {
        // Fixed summation order whatever order the rows arrived in.
        group.sort_by(|a, b| a.1.alpha.total_cmp(&b.1.alpha).then(a.1.seed.cmp(&b.1.seed)).then(a.1.stage.cmp(&b.1.stage)));
        // Step sizes ascending; the first maximum wins.
        let mut by_alpha: Vec<(f64, Vec<f64>)> = Vec::new();
        for (_, r) in group.iter().filter(|r| r.1.stage == Stage::Selection) {
            match by_alpha.iter_mut().find(|(a, _)| *a == r.alpha) {
                Some((_, v)) => v.push(r.total_reward),
                None => by_alpha.push((r.alpha, vec![r.total_reward])),
            }
        }
        by_alpha.sort_by(|a, b| a.0.total_cmp(&b.0));
        let Some(best_alpha) = by_alpha
            .iter()
            .fold(None::<(f64, f64)>, |best, (a, v)| {
                let m = mean(v);
                match best {
                    Some((_, bm)) if bm >= m => best,
                    _ => Some((*a, m)),
                }
            })
            .map(|b| b.0)
        else {
            return Err(Error::Results(format!(
                "{agent} {artifact} capacity {capacity}: no selection-stage rows"
            )));
        };
        let mut eval: Vec<&(PathBuf, SummaryRow)> = group
            .iter()
            .copied()
            .filter(|r| r.1.stage == Stage::Evaluation && r.1.alpha == best_alpha)
            .collect();
        eval.sort_by_key(|r| r.1.seed);
        if eval.len() < 2 {
            return Err(Error::Results(format!(
                "{agent} {artifact} capacity {capacity}: fewer than two evaluation rows at step size {best_alpha}"
            )));
        }
        cells.push(AnalyzedCell {
            agent: agent.clone(),
            artifact,
            capacity,
            selector: eval[0].1.selector.clone(),
            best_alpha,
            evaluation: eval.iter().map(|r| r.1.total_reward).collect(),
            diverged: eval.iter().filter(|r| r.1.diverged).count(),
            records: eval
                .iter()
                .filter(|r| !r.1.record.is_empty())
                .map(|r| r.0.join(&r.1.record))
                .collect(),
        });
    }
    let mut scans = BTreeMap::new();
    let agents: BTreeSet<&str> = cells.iter().map(|c| c.agent.as_str()).collect();
    for agent in agents {
        let table: ResultTable = cells
            .iter()
            .filter(|c| c.agent == agent)
            .map(|c| ((c.artifact, c.capacity), c.evaluation.clone()))
            .collect();
        scans.insert(agent.to_string(), externalization_scan(&table)?);
    }
    Ok(Analysis {
        cells,
        scans,
        env_hash: env_hashes.into_iter().next().expect("non-empty").to_string(),
        manifest_hashes,
    })
}

/// Read every summary under `dir`, analyze, and write the CSV reports into `dir`.
pub fn analyze_dir(dir: &Path, curve_stride: usize) -> Result<Analysis> {
    let summaries = find_summaries(dir)?;
    if summaries.is_empty() {
        return Err(Error::Results(format!("no summary.csv under {}", dir.display())));
    }
    let mut rows = Vec::new();
    for s in &summaries {
        let base = s.parent().expect("file has a parent").to_path_buf();
        rows.extend(read_summary(s)?.into_iter().map(|r| (base.clone(), r)));
    }
    let analysis = analyze_rows(&rows)?;
    write_analysis(dir, &analysis, curve_stride)?;
    Ok(analysis)
}

fn write_analysis(dir: &Path, a: &Analysis, curve_stride: usize) -> Result<()> {
    let manifests = a.manifest_hashes.join("+");
    write_csv(&dir.join("selection.csv"), |w| {
        w.write_record([
            "agent", "artifact", "capacity", "selector", "best_alpha", "mean", "stderr", "n", "diverged", "env_hash",
            "manifest_hash",
        ])?;
        for c in &a.cells {
            w.write_record([
                c.agent.clone(),
                c.artifact.to_string(),
                c.capacity.to_string(),
                c.selector.clone(),
                c.best_alpha.to_string(),
                mean(&c.evaluation).to_string(),
                standard_error(&c.evaluation).to_string(),
                c.evaluation.len().to_string(),
                c.diverged.to_string(),
                a.env_hash.clone(),
                manifests.clone(),
            ])?;
        }
        Ok(())
    })?;
    for (agent, scan) in &a.scans {
        write_csv(&dir.join(format!("verdicts_{agent}.csv")), |w| {
            w.write_record([
                "artifact", "capacity", "no_path_capacity", "artifact_mean", "no_path_mean", "p_value", "externalized",
                "env_hash", "manifest_hash",
            ])?;
            for v in &scan.verdicts {
                w.write_record([
                    v.artifact.to_string(),
                    v.capacity.to_string(),
                    v.no_path_capacity.to_string(),
                    v.artifact_mean.to_string(),
                    v.no_path_mean.to_string(),
                    v.p_value.to_string(),
                    v.externalized.to_string(),
                    a.env_hash.clone(),
                    manifests.clone(),
                ])?;
            }
            Ok(())
        })?;
        for m in &scan.matrices {
            write_csv(&dir.join(format!("pvalues_{agent}_{}.csv", m.artifact)), |w| {
                let mut header = vec!["capacity".to_string()];
                header.extend(m.cols.iter().map(|c| format!("no_path_{c}")));
                header.extend(["env_hash".into(), "manifest_hash".into()]);
                w.write_record(&header)?;
                for (r, row) in m.rows.iter().zip(&m.p) {
                    let mut rec = vec![r.to_string()];
                    rec.extend(row.iter().map(f64::to_string));
                    rec.extend([a.env_hash.clone(), manifests.clone()]);
                    w.write_record(&rec)?;
                }
                Ok(())
            })?;
        }
    }
    write_curves(dir, a, curve_stride)
}

/// Mean average-reward curve of each cell's evaluation records, one file per
/// (agent, artifact) with a column per capacity.
fn write_curves(dir: &Path, a: &Analysis, stride: usize) -> Result<()> {
    let mut files: BTreeMap<(String, ArtifactKind), Vec<(usize, Vec<(u64, f64)>)>> = BTreeMap::new();
    for c in &a.cells {
        if c.records.is_empty() {
            continue;
        }
        let records: Vec<TrialRecord> = c.records.iter().map(|p| read_record(p)).collect::<Result<_>>()?;
        let curves: Vec<Vec<(u64, f64)>> = records.iter().map(|r| r.average_reward_curve(stride)).collect();
        let len = curves.iter().map(Vec::len).min().unwrap_or(0);
        let merged: Vec<(u64, f64)> = (0..len)
            .map(|i| (curves[0][i].0, curves.iter().map(|cv| cv[i].1).sum::<f64>() / curves.len() as f64))
            .collect();
        files
            .entry((c.agent.clone(), c.artifact))
            .or_default()
            .push((c.capacity, merged));
    }
    for ((agent, artifact), cols) in files {
        let len = cols.iter().map(|c| c.1.len()).min().unwrap_or(0);
        write_csv(&dir.join(format!("curves_{agent}_{artifact}.csv")), |w| {
            let mut header = vec!["t".to_string()];
            header.extend(cols.iter().map(|c| format!("capacity_{}", c.0)));
            header.push("env_hash".into());
            w.write_record(&header)?;
            for i in 0..len {
                let mut rec = vec![cols[0].1[i].0.to_string()];
                rec.extend(cols.iter().map(|c| c.1[i].1.to_string()));
                rec.push(a.env_hash.clone());
                w.write_record(&rec)?;
            }
            Ok(())
        })?;
    }
    Ok(())
}
