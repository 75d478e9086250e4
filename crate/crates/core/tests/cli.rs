use std::fs;
use std::path::Path;

use clap::Parser;
use extmem::artifacts::ArtifactKind;
use extmem::bitmap::Bitmap;
use extmem::cli::{dispatch, Cli};
use extmem::error::Error;
use extmem::harness::results::read_summary;
use extmem::learners::TieBreak;
use extmem::manifest::{parse_manifest, AgentKind, ExperimentId, TrialBlock};
use extmem::pgm::decode_pgm;
use proptest::prelude::*;

fn run(args: &[&str]) -> (anyhow::Result<()>, String) {
    let cli = Cli::try_parse_from(std::iter::once("extmem").chain(args.iter().copied())).unwrap();
    let mut out = Vec::new();
    let r = dispatch(cli, &mut out);
    (r, String::from_utf8(out).unwrap())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

/// 4-connected components of ON pixels.
fn components(b: &Bitmap) -> usize {
    let (w, h) = (b.width(), b.height());
    let mut seen = vec![false; w * h];
    let mut count = 0;
    for start in 0..w * h {
        if !b.get_index(start) || seen[start] {
            continue;
        }
        count += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            let mut push = |j: usize| {
                if b.get_index(j) && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if x > 0 {
                push(i - 1);
            }
            if x + 1 < w {
                push(i + 1);
            }
            if y > 0 {
                push(i - w);
            }
            if y + 1 < h {
                push(i + w);
            }
        }
    }
    count
}

#[test]
fn minimal_manifest_resolves_linear_capacities() {
    let m = parse_manifest("experiment = \"exp1\"\n").unwrap();
    let caps: Vec<usize> = m.agent.specs().iter().map(|s| s.capacity(24)).collect();
    assert_eq!(caps, vec![16, 64, 256, 400, 576]);
    assert_eq!(m.environment.artifacts, vec![ArtifactKind::None, ArtifactKind::OptimalPath]);
    let text = m.to_toml();
    assert!(text.contains("step_sizes"));
    assert_eq!(parse_manifest(&text).unwrap(), m);
}

#[test]
fn bad_keys_and_values_name_the_line() {
    let e = parse_manifest("experiment = \"exp1\"\n\n[agent]\ncrop_sides = [4, 5]\n").unwrap_err();
    let msg = e.to_string();
    assert!(matches!(e, Error::Parse { line: Some(4), .. }), "{e:?}");
    assert!(msg.contains("crop_sides"), "{msg}");
    let e = parse_manifest("experiment = \"exp1\"\ncolour = 3\n").unwrap_err();
    assert!(matches!(e, Error::Parse { line: Some(2), .. }), "{e:?}");
    let e = parse_manifest("experiment = \"exp1\"\nseed = \"x\"\n").unwrap_err();
    assert!(matches!(e, Error::Parse { line: Some(2), .. }), "{e:?}");
}

prop_compose! {
    fn manifests()(
        exp in prop::sample::select(vec![ExperimentId::Exp1, ExperimentId::Exp2, ExperimentId::Exp3, ExperimentId::Custom]),
        seed in 0u64..1_000_000,
        crops in prop::sample::subsequence(vec![4usize, 8, 16, 20, 24], 1..=5),
        dqn in any::<bool>(),
        exps in prop::collection::vec(-14i32..0, 1..7),
        seeds in 2u64..40,
        steps in 1u64..300_000,
        eps in 0.0f64..1.0,
        discount in 0.0f64..0.999,
        lowest in any::<bool>(),
        walk in 1usize..200,
        rate in 0.0f64..1.0,
        trial in prop::option::of((0usize..1, 1e-4f64..0.5, 0u64..100)),
    ) -> extmem::manifest::RunManifest {
        let mut m = parse_manifest(&format!("experiment = \"{}\"\n", match exp {
            ExperimentId::Exp1 => "exp1",
            ExperimentId::Exp2 => "exp2",
            ExperimentId::Exp3 => "exp3",
            _ => "custom",
        })).unwrap();
        m.seed = seed;
        m.output_dir = format!("out/{seed}");
        m.agent.crop_sides = crops;
        if dqn {
            m.agent.kind = AgentKind::Dqn;
            m.agent.networks = vec![[2, 8], [3, 4]];
        }
        m.agent.epsilon = eps;
        m.agent.discount = discount;
        m.agent.tie_break = if lowest { TieBreak::Lowest } else { TieBreak::Random };
        m.sweep.step_sizes = exps.iter().map(|&e| 2f64.powi(e)).collect();
        m.sweep.seeds_per_stage = seeds;
        m.sweep.trial_steps = steps;
        m.environment.random_walk_length = walk;
        m.environment.dynamic.vanishing_rate = rate;
        m.trial = trial.map(|(capacity_index, step_size, seed)| TrialBlock {
            artifact: m.environment.artifacts[0],
            capacity_index,
            step_size,
            seed,
        });
        m
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn manifests_roundtrip_through_text(m in manifests()) {
        m.validate().unwrap();
        let text = m.to_toml();
        let back = parse_manifest(&text).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(back.to_toml(), text);
        prop_assert_eq!(back.hash(), m.hash());
    }
}

#[test]
fn theory_reports_the_page_keeping_artifact() {
    let (r, out) = run(&["theory"]);
    r.unwrap();
    assert!(out.contains("A@5 -> B@2"), "{out}");
    assert!(out.contains("overall: PASS"));
    let dir = tempfile::tempdir().unwrap();
    let env = write(dir.path(), "chain.env", "s0 | C | s1:1\ns1 | D | s0:1\n");
    let (r, out) = run(&["theory", "--env", &env, "--horizon", "4"]);
    r.unwrap();
    assert!(out.contains("artifactual: yes"));
    let bad = write(dir.path(), "bad.env", "s0 | C | s9:1\n");
    assert!(run(&["theory", "--env", &bad]).0.is_err());
}

#[test]
fn analyze_on_an_empty_directory_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let (r, _) = run(&["analyze", "--results", &dir.path().display().to_string()]);
    let msg = format!("{:#}", r.unwrap_err());
    assert!(msg.contains("summary.csv"), "{msg}");
}

#[test]
fn render_is_byte_stable_and_shows_six_landmarks() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write(
        dir.path(),
        "m.toml",
        "experiment = \"custom\"\n[environment]\nartifacts = [\"landmarks\", \"dynamic_path\"]\n",
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        run(&["render", "--manifest", &manifest, "--out", &out.display().to_string(), "--scale", "1"]).0.unwrap();
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 6);
    for n in &names {
        assert_eq!(fs::read(a.join(n)).unwrap(), fs::read(b.join(n)).unwrap(), "{n:?}");
    }
    let bytes = fs::read(a.join("mask_landmarks.pgm")).unwrap();
    assert!(bytes.starts_with(b"P5\n104 104\n255\n"));
    assert_eq!(components(&decode_pgm(&bytes).unwrap()), 6);
    assert!(decode_pgm(&fs::read(a.join("mask_dynamic_path.pgm")).unwrap()).unwrap().count_on() > 0);
}

#[test]
fn run_then_sweep_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let manifest = write(
        dir.path(),
        "m.toml",
        &format!(
            "experiment = \"exp1\"\noutput_dir = \"{}\"\n[agent]\ncrop_sides = [4, 8]\n\
             [sweep]\nstep_sizes = [0.01, 0.05]\nseeds_per_stage = 3\nsmoke_steps = 2000\ntrial_steps = 2000\n\
             [trial]\nartifact = \"optimal_path\"\nstep_size = 0.01\nseed = 5\n",
            out.display()
        ),
    );
    let (r, text) = run(&["run", "--manifest", &manifest]);
    r.unwrap();
    assert!(text.contains("optimal_path 4x4"), "{text}");
    let rec = fs::read_dir(&out).unwrap().next().unwrap().unwrap().path();
    let body = fs::read_to_string(&rec).unwrap();
    let m = parse_manifest(&fs::read_to_string(&manifest).unwrap()).unwrap();
    assert!(body.contains(&m.hash()));

    let sweep_dir = dir.path().join("sweep");
    let sd = sweep_dir.display().to_string();
    run(&["sweep", "--manifest", &manifest, "--smoke", "--out", &sd]).0.unwrap();
    let rows = read_summary(&sweep_dir.join("summary.csv")).unwrap();
    // 2 artifacts x 2 crops x (2 step sizes x 3 + 3) trials.
    assert_eq!(rows.len(), 36);
    assert!(rows.iter().all(|r| r.manifest_hash == m.hash() && r.env_hash == m.env_hash()));
    let csv = fs::read_to_string(sweep_dir.join("summary.csv")).unwrap();
    assert!(csv.starts_with("artifact,agent,capacity,alpha,seed,total_reward,"));
    assert!(csv.ends_with('\n'));

    let (r, text) = run(&["analyze", "--results", &sd]);
    r.unwrap();
    assert!(text.contains("linear"));
    for f in ["selection.csv", "verdicts_linear.csv", "pvalues_linear_optimal_path.csv"] {
        let t = fs::read_to_string(sweep_dir.join(f)).unwrap();
        assert!(t.contains(&m.hash()), "{f} lacks the manifest hash");
    }
    let pv = fs::read_to_string(sweep_dir.join("pvalues_linear_optimal_path.csv")).unwrap();
    assert_eq!(pv.lines().count(), 3);
}

#[test]
fn missing_trial_block_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write(dir.path(), "m.toml", "experiment = \"exp1\"\n");
    let msg = format!("{:#}", run(&["run", "--manifest", &manifest]).0.unwrap_err());
    assert!(msg.contains("[trial]"), "{msg}");
}
