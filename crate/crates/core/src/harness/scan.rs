//! Externalization scan: every artifact capacity against every No-Path
//! capacity.

use std::collections::BTreeMap;

use super::stats::{mean, one_sided_test};
use crate::artifacts::ArtifactKind;
use crate::error::{Error, Result};

/// Significance level of the externalization test.
pub const SIGNIFICANCE: f64 = 0.05;

/// Evaluation-stage total rewards keyed by (artifact, capacity).
pub type ResultTable = BTreeMap<(ArtifactKind, usize), Vec<f64>>;

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub artifact: ArtifactKind,
    pub capacity: usize,
    pub no_path_capacity: usize,
    pub artifact_mean: f64,
    pub no_path_mean: f64,
    pub p_value: f64,
    /// The artifact agent is significantly better despite the smaller capacity.
    pub externalized: bool,
}

/// `p[i][j]` tests artifact capacity `rows[i]` against No-Path capacity `cols[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PValueMatrix {
    pub artifact: ArtifactKind,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub p: Vec<Vec<f64>>,
}

impl PValueMatrix {
    pub fn get(&self, row_capacity: usize, col_capacity: usize) -> Option<f64> {
        let i = self.rows.iter().position(|&c| c == row_capacity)?;
        let j = self.cols.iter().position(|&c| c == col_capacity)?;
        Some(self.p[i][j])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("capacity");
        for c in &self.cols {
            out.push_str(&format!(",no_path_{c}"));
        }
        out.push('\n');
        for (r, row) in self.rows.iter().zip(&self.p) {
            out.push_str(&r.to_string());
            for p in row {
                out.push_str(&format!(",{p}"));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanReport {
    pub verdicts: Vec<Verdict>,
    pub matrices: Vec<PValueMatrix>,
}

impl ScanReport {
    pub fn externalized(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().filter(|v| v.externalized)
    }

    pub fn verdicts_csv(&self) -> String {
        let mut out = String::from(
            "artifact,capacity,no_path_capacity,artifact_mean,no_path_mean,p_value,externalized\n",
        );
        for v in &self.verdicts {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                v.artifact, v.capacity, v.no_path_capacity, v.artifact_mean, v.no_path_mean, v.p_value, v.externalized
            ));
        }
        out
    }
}

/// Test every (artifact, C) cell against every (No Path, C') cell. All pairs
/// land in the p-value matrices; only pairs with C < C' yield verdicts.
///
/// Every capacity that appears with an artifact must also appear for No Path.
pub fn externalization_scan(table: &ResultTable) -> Result<ScanReport> {
    let no_path: BTreeMap<usize, &Vec<f64>> = table
        .iter()
        .filter(|((a, _), _)| *a == ArtifactKind::None)
        .map(|((_, c), v)| (*c, v))
        .collect();
    if no_path.is_empty() {
        return Err(Error::Results("no No-Path results to compare against".into()));
    }
    let mut verdicts = Vec::new();
    let mut matrices = Vec::new();
    let artifacts: Vec<ArtifactKind> = {
        let mut a: Vec<_> = table.keys().map(|k| k.0).filter(|&a| a != ArtifactKind::None).collect();
        a.dedup();
        a
    };
    for artifact in artifacts {
        let rows: Vec<usize> = table.keys().filter(|k| k.0 == artifact).map(|k| k.1).collect();
        if let Some(c) = rows.iter().find(|c| !no_path.contains_key(c)) {
            return Err(Error::Results(format!(
                "capacity {c} has {artifact} results but no No-Path results"
            )));
        }
        let cols: Vec<usize> = no_path.keys().copied().collect();
        let mut p = Vec::with_capacity(rows.len());
        for &c in &rows {
            let sample = &table[&(artifact, c)];
            let mut row = Vec::with_capacity(cols.len());
            for &cp in &cols {
                let base = no_path[&cp];
                let pv = one_sided_test(sample, base)?;
                row.push(pv);
                if c >= cp {
                    continue;
                }
                verdicts.push(Verdict {
                    artifact,
                    capacity: c,
                    no_path_capacity: cp,
                    artifact_mean: mean(sample),
                    no_path_mean: mean(base),
                    p_value: pv,
                    externalized: pv < SIGNIFICANCE,
                });
            }
            p.push(row);
        }
        matrices.push(PValueMatrix { artifact, rows, cols, p });
    }
    Ok(ScanReport { verdicts, matrices })
}
