//! Finite observation-labelled Markov chains and their text format.
//!
//! Actions are folded into the transition probabilities (a fixed uniform
//! behaviour policy), so a `TabularEnv` is a hidden Markov model. Each state
//! emits a symbol when it is entered.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Tolerance on the per-state probability sums.
pub const SUM_TOLERANCE: f64 = 1e-12;

pub const BUNDLED_PAGE_KEEPING: &str = include_str!("../../data/page_keeping.env");

#[derive(Clone, Debug, PartialEq)]
pub struct TabularEnv {
    names: Vec<String>,
    start: usize,
    alphabet: Vec<String>,
    /// Per state: (symbol index, probability), symbols ascending.
    emissions: Vec<Vec<(usize, f64)>>,
    /// Per state: (next state, probability) in declaration order.
    trans: Vec<Vec<(usize, f64)>>,
}

/// One state as written in a file: name, emission distribution, successors.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpec {
    pub name: String,
    pub emission: Vec<(String, f64)>,
    pub next: Vec<(String, f64)>,
}

impl StateSpec {
    /// State that always emits `label`.
    pub fn labelled(name: &str, label: &str, next: &[(&str, f64)]) -> Self {
        Self {
            name: name.into(),
            emission: vec![(label.into(), 1.0)],
            next: next.iter().map(|&(n, p)| (n.into(), p)).collect(),
        }
    }
}

fn check_distribution(what: &str, probs: impl Iterator<Item = f64>) -> Result<()> {
    let mut total = 0.0;
    for p in probs {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::config(format!("{what}: probability {p} outside (0, 1]")));
        }
        total += p;
    }
    if (total - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::config(format!("{what}: probabilities sum to {total}, not 1")));
    }
    Ok(())
}

impl TabularEnv {
    /// Build from state specs; the first spec is the start state.
    pub fn new(states: &[StateSpec]) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::config("tabular environment has no states"));
        }
        let mut index = BTreeMap::new();
        for (i, s) in states.iter().enumerate() {
            if index.insert(s.name.as_str(), i).is_some() {
                return Err(Error::config(format!("state `{}` declared twice", s.name)));
            }
        }
        let alphabet: Vec<String> = states
            .iter()
            .flat_map(|s| s.emission.iter().map(|(sym, _)| sym.clone()))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if alphabet.len() > usize::from(u8::MAX) + 1 {
            return Err(Error::config("observation alphabet larger than 256 symbols"));
        }
        let sym_index = |sym: &str| alphabet.binary_search_by(|a| a.as_str().cmp(sym)).expect("collected");
        let mut emissions = Vec::with_capacity(states.len());
        let mut trans = Vec::with_capacity(states.len());
        for s in states {
            check_distribution(&format!("emission of `{}`", s.name), s.emission.iter().map(|e| e.1))?;
            check_distribution(&format!("transitions of `{}`", s.name), s.next.iter().map(|e| e.1))?;
            let mut em: BTreeMap<usize, f64> = BTreeMap::new();
            for (sym, p) in &s.emission {
                *em.entry(sym_index(sym)).or_default() += p;
            }
            emissions.push(em.into_iter().collect());
            let mut tr = Vec::with_capacity(s.next.len());
            for (n, p) in &s.next {
                let j = *index
                    .get(n.as_str())
                    .ok_or_else(|| Error::config(format!("state `{}` moves to undeclared `{n}`", s.name)))?;
                tr.push((j, *p));
            }
            trans.push(tr);
        }
        Ok(Self {
            names: states.iter().map(|s| s.name.clone()).collect(),
            start: 0,
            alphabet,
            emissions,
            trans,
        })
    }

    pub fn page_keeping() -> Self {
        Self::parse(BUNDLED_PAGE_KEEPING).expect("bundled environment parses")
    }

    /// Parse `state | label | next:prob, ...` lines. A label is either a single
    /// symbol or a distribution `A:0.9, B:0.1`. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut specs = Vec::new();
        let mut lines = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse { line: Some(n + 1), message };
            let fields: Vec<&str> = line.split('|').map(str::trim).collect();
            let [name, label, next] = fields[..] else {
                return Err(err(format!("expected `state | label | next:prob, ...`, got `{line}`")));
            };
            if name.is_empty() {
                return Err(err("empty state name".into()));
            }
            let emission = if label.contains(':') {
                parse_weighted(label).map_err(err)?
            } else if label.is_empty() || label.contains(',') {
                return Err(err(format!("bad label `{label}`")));
            } else {
                vec![(label.to_string(), 1.0)]
            };
            specs.push(StateSpec {
                name: name.into(),
                emission,
                next: parse_weighted(next).map_err(err)?,
            });
            lines.push(n + 1);
        }
        Self::new(&specs).map_err(|e| match e {
            Error::Config(message) => {
                // Attach the line of the state the message names, when there is one.
                let line = specs
                    .iter()
                    .position(|s| message.contains(&format!("`{}`", s.name)))
                    .map(|i| lines[i]);
                Error::Parse { line, message }
            }
            other => other,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (s, name) in self.names.iter().enumerate() {
            let label = match self.emissions[s].as_slice() {
                [(sym, p)] if *p == 1.0 => self.alphabet[*sym].clone(),
                em => join_weighted(em.iter().map(|&(k, p)| (self.alphabet[k].as_str(), p))),
            };
            let next = join_weighted(self.trans[s].iter().map(|&(j, p)| (self.names[j].as_str(), p)));
            writeln!(out, "{name} | {label} | {next}").expect("string write");
        }
        out
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn state_name(&self, s: usize) -> &str {
        &self.names[s]
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn symbol(&self, name: &str) -> Option<usize> {
        self.alphabet.iter().position(|a| a == name)
    }

    pub fn emissions(&self, s: usize) -> &[(usize, f64)] {
        &self.emissions[s]
    }

    pub fn transitions(&self, s: usize) -> &[(usize, f64)] {
        &self.trans[s]
    }

    /// Pairs `(s, s')` with positive transition probability.
    pub fn topology(&self) -> BTreeSet<(usize, usize)> {
        self.trans
            .iter()
            .enumerate()
            .flat_map(|(s, tr)| tr.iter().map(move |&(j, _)| (s, j)))
            .collect()
    }
}

fn parse_weighted(field: &str) -> std::result::Result<Vec<(String, f64)>, String> {
    let mut out = Vec::new();
    for item in field.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, p) = item
            .rsplit_once(':')
            .ok_or_else(|| format!("expected `name:prob`, got `{item}`"))?;
        let p: f64 = p
            .trim()
            .parse()
            .map_err(|_| format!("bad probability in `{item}`"))?;
        out.push((k.trim().to_string(), p));
    }
    if out.is_empty() {
        return Err("empty distribution".into());
    }
    Ok(out)
}

fn join_weighted<'a>(items: impl Iterator<Item = (&'a str, f64)>) -> String {
    items.map(|(k, p)| format!("{k}:{p}")).collect::<Vec<_>>().join(", ")
}

/// Emission-noise copy: every state keeps `1 - epsilon` of each symbol's
/// probability and spreads `epsilon` evenly over the other symbols.
/// Transitions are untouched.
///
/// The result has no conditional certainty above `1 - epsilon`, which needs
/// `epsilon <= (K - 1) / K` for an alphabet of `K` symbols.
pub fn make_artifactless_copy(env: &TabularEnv, epsilon: f64) -> Result<TabularEnv> {
    let k = env.alphabet.len();
    if k < 2 {
        return Err(Error::config(
            "a single-symbol alphabet cannot be made artifactless by emission noise",
        ));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::config(format!("epsilon {epsilon} outside (0, 1)")));
    }
    let max_eps = (k - 1) as f64 / k as f64;
    if epsilon > max_eps {
        return Err(Error::config(format!(
            "epsilon {epsilon} exceeds {max_eps}, so noise symbols would exceed 1 - epsilon"
        )));
    }
    let spread = epsilon / (k - 1) as f64;
    let emissions = env
        .emissions
        .iter()
        .map(|em| {
            let mut dense = vec![0.0; k];
            for &(sym, p) in em {
                dense[sym] = p;
            }
            dense
                .iter()
                .enumerate()
                .map(|(sym, &p)| (sym, (1.0 - epsilon) * p + spread * (1.0 - p)))
                .filter(|&(_, p)| p > 0.0)
                .collect()
        })
        .collect();
    Ok(TabularEnv {
        emissions,
        ..env.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_parses_and_roundtrips() {
        let env = TabularEnv::page_keeping();
        assert_eq!(env.num_states(), 11);
        assert_eq!(env.alphabet(), ["A", "B", "C", "D"]);
        assert_eq!(env.state_name(env.start()), "s0");
        let back = TabularEnv::parse(&env.to_text()).unwrap();
        assert_eq!(back, env);
    }

    #[test]
    fn parse_errors_carry_lines() {
        let e = TabularEnv::parse("a | X | a:1\nb | Y | a:0.5, b:0.4\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: Some(2), .. }), "{e:?}");
        let e = TabularEnv::parse("a | X | c:1\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: Some(1), .. }), "{e:?}");
        let e = TabularEnv::parse("a | X\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: Some(1), .. }), "{e:?}");
        assert!(TabularEnv::parse("# nothing\n").is_err());
    }

    #[test]
    fn noisy_labels_parse() {
        let env = TabularEnv::parse("a | X:0.75, Y:0.25 | a:1\n").unwrap();
        assert_eq!(env.emissions(0), &[(0, 0.75), (1, 0.25)]);
        assert_eq!(TabularEnv::parse(&env.to_text()).unwrap(), env);
    }

    #[test]
    fn copy_preserves_topology_and_spreads_noise() {
        let env = TabularEnv::page_keeping();
        let copy = make_artifactless_copy(&env, 1e-6).unwrap();
        assert_eq!(copy.topology(), env.topology());
        let copy = make_artifactless_copy(&env, 0.25).unwrap();
        for s in 0..copy.num_states() {
            let em = copy.emissions(s);
            assert_eq!(em.len(), 4);
            let total: f64 = em.iter().map(|e| e.1).sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(em.iter().all(|&(_, p)| p <= 0.75 + 1e-15));
        }
    }

    #[test]
    fn copy_rejects_degenerate_inputs() {
        let one = TabularEnv::parse("a | X | a:1\n").unwrap();
        assert!(matches!(make_artifactless_copy(&one, 0.1), Err(Error::Config(_))));
        let env = TabularEnv::page_keeping();
        for eps in [0.0, 1.0, -0.5, 0.9] {
            assert!(make_artifactless_copy(&env, eps).is_err(), "{eps}");
        }
    }
}
