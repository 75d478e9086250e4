//! Human-readable summary of the theory checks on one environment.

use std::fmt;

use super::detect::{conditional_certainty, max_conditional_certainty, relations_by_definition, relations_in, ArtifactRelation};
use super::enumerate::enumerate_histories;
use super::reduction::{verify_artifact_reduction, ReductionCheck};
use super::tabular::{make_artifactless_copy, TabularEnv};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct TheoryReport {
    pub name: String,
    pub states: usize,
    pub alphabet: Vec<String>,
    pub horizon: usize,
    pub relations: Vec<(ArtifactRelation, f64)>,
    /// Probabilistic and logical detection agree.
    pub detection_agrees: bool,
    pub reductions: Vec<ReductionCheck>,
    pub epsilon: f64,
    pub copy_max_certainty: f64,
    pub copy_relations: usize,
}

impl TheoryReport {
    pub fn passed(&self) -> bool {
        self.detection_agrees
            && self.reductions.iter().all(|c| c.equal)
            && self.copy_relations == 0
            && self.copy_max_certainty <= 1.0 - self.epsilon + 1e-12
    }
}

pub fn theory_report(name: &str, env: &TabularEnv, horizon: usize, epsilon: f64) -> Result<TheoryReport> {
    let dist = enumerate_histories(env, horizon)?;
    let found = relations_in(&dist);
    let detection_agrees = found == relations_by_definition(&dist);
    let relations = found
        .into_iter()
        .map(|r| {
            let c = conditional_certainty(&dist, &r).expect("detected relations have mass");
            (r, c)
        })
        .collect();
    let copy = make_artifactless_copy(env, epsilon)?;
    Ok(TheoryReport {
        name: name.into(),
        states: env.num_states(),
        alphabet: env.alphabet().to_vec(),
        horizon,
        relations,
        detection_agrees,
        reductions: verify_artifact_reduction(env, horizon)?,
        epsilon,
        copy_max_certainty: max_conditional_certainty(&copy, horizon)?,
        copy_relations: relations_in(&enumerate_histories(&copy, horizon)?).len(),
    })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

impl fmt::Display for TheoryReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "environment: {} ({} states, alphabet {})", self.name, self.states, self.alphabet.join(" "))?;
        writeln!(f, "horizon: {}", self.horizon)?;
        writeln!(
            f,
            "artifactual: {} ({} relations)",
            if self.relations.is_empty() { "no" } else { "yes" },
            self.relations.len()
        )?;
        for (r, c) in &self.relations {
            writeln!(f, "  {r}  P = {c}")?;
        }
        writeln!(f, "definition and probability agree: {}", verdict(self.detection_agrees))?;
        writeln!(f, "reduction checks (given the artifact; unconditional in brackets):")?;
        for c in &self.reductions {
            writeln!(
                f,
                "  {}  m={}  I(H)={:.12}  I(H')={:.12}  [{:.12} {:.12}]  {}",
                c.relation,
                c.window,
                c.full,
                c.reduced,
                c.unconditional_full,
                c.unconditional_reduced,
                verdict(c.equal)
            )?;
        }
        writeln!(
            f,
            "artifactless copy (epsilon {}): max certainty {:.12}, relations {}  {}",
            self.epsilon,
            self.copy_max_certainty,
            self.copy_relations,
            verdict(self.copy_relations == 0 && self.copy_max_certainty <= 1.0 - self.epsilon + 1e-12)
        )?;
        write!(f, "overall: {}", verdict(self.passed()))
    }
}
