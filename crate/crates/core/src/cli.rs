//! Command-line interface.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use crate::artifacts::ArtifactKind;
use crate::bitmap::Bitmap;
use crate::gridworld::{render_observation, transduce, Action, Observation};
use crate::harness::{analyze_dir, run_sweep, run_trial, write_record, Profile};
use crate::manifest::{parse_manifest, RunManifest};
use crate::pgm::write_pgm;
use crate::rng::{stream, Stream};
use crate::theory::{theory_report, TabularEnv};

/// Worker-count override for sweeps.
pub const WORKERS_ENV: &str = "EXTMEM_WORKERS";

/// Steps of random motion used to draw the dynamic path for `render`.
const RENDER_DYNAMIC_STEPS: usize = 400;

#[derive(Debug, Parser)]
#[command(name = "extmem", version, about = "Artifacts, external memory and capacity-limited RL agents")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect artifacts and check the information identities on a tabular environment.
    Theory {
        /// Environment file; defaults to the bundled page-keeping example.
        #[arg(long)]
        env: Option<PathBuf>,
        #[arg(long, default_value_t = 6)]
        horizon: usize,
        /// Emission noise for the artifactless copy.
        #[arg(long, default_value_t = 0.25)]
        epsilon: f64,
    },
    /// Run the single trial described by the manifest's `[trial]` block.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory; defaults to the manifest's.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-stage step-size selection over every artifact and capacity.
    Sweep {
        #[arg(long)]
        manifest: PathBuf,
        /// Short trials for a quick end-to-end check.
        #[arg(long)]
        smoke: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Externalization scan over the summaries in a results directory.
    Analyze {
        #[arg(long)]
        results: PathBuf,
        #[arg(long, default_value_t = 1000)]
        curve_stride: usize,
    },
    /// Write arena, artifact and observation images as graymaps.
    Render {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        scale: usize,
    },
}

fn load_manifest(path: &Path) -> anyhow::Result<RunManifest> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_manifest(&text).with_context(|| format!("in {}", path.display()))
}

fn with_workers<T: Send>(f: impl FnOnce() -> T + Send) -> anyhow::Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(n) = std::env::var(WORKERS_ENV) {
        let n: usize = n.parse().with_context(|| format!("{WORKERS_ENV} must be a positive integer"))?;
        builder = builder.num_threads(n.max(1));
    }
    Ok(builder.build()?.install(f))
}

/// Run one command, writing human-readable output to `out`.
pub fn dispatch(cli: Cli, out: &mut impl std::io::Write) -> anyhow::Result<()> {
    match cli.command {
        Command::Theory { env, horizon, epsilon } => {
            let (name, tab) = match &env {
                Some(p) => {
                    let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                    (p.display().to_string(), TabularEnv::parse(&text).with_context(|| format!("in {}", p.display()))?)
                }
                None => ("bundled page keeping".to_string(), TabularEnv::page_keeping()),
            };
            let report = theory_report(&name, &tab, horizon, epsilon)?;
            writeln!(out, "{report}")?;
            if !report.passed() {
                bail!("theory checks failed");
            }
        }
        Command::Run { manifest, out: dir } => {
            let m = load_manifest(&manifest)?;
            let Some(config) = m.single_trial() else {
                bail!("{} has no [trial] block", manifest.display());
            };
            let record = run_trial(&config)?;
            let dir = dir.unwrap_or_else(|| PathBuf::from(&m.output_dir));
            fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(format!("{}-{}-{}.rec", config.artifact, config.agent.label(), config.hash()));
            write_record(&path, &record, &m.hash(), &m.env_hash())?;
            writeln!(
                out,
                "{} {} alpha={} seed={}: total reward {} over {} steps ({} episodes, {} truncated){}",
                config.artifact,
                config.agent.label(),
                config.step_size,
                config.seed,
                record.total_reward(),
                record.steps,
                record.episodes,
                record.truncations,
                if record.diverged() { ", DIVERGED" } else { "" }
            )?;
            writeln!(out, "record: {}", path.display())?;
        }
        Command::Sweep { manifest, smoke, out: dir } => {
            let m = load_manifest(&manifest)?;
            let dir = dir.unwrap_or_else(|| PathBuf::from(&m.output_dir));
            let profile = if smoke { Profile::Smoke } else { Profile::Full };
            let outcome = with_workers(|| run_sweep(&m, profile, Some(&dir)))??;
            for c in &outcome.cells {
                let e = &c.selection.evaluation;
                writeln!(
                    out,
                    "{:<16} {:<6} {:>6} ({:>5})  alpha={:<12} mean={:.1}",
                    c.artifact.name(),
                    c.agent.kind_name(),
                    c.capacity,
                    c.agent.label(),
                    c.selection.best_step_size,
                    e.iter().sum::<f64>() / e.len() as f64
                )?;
            }
            writeln!(out, "wrote {}", dir.display())?;
        }
        Command::Analyze { results, curve_stride } => {
            let a = analyze_dir(&results, curve_stride)?;
            for (agent, scan) in &a.scans {
                let ext: Vec<_> = scan.externalized().collect();
                writeln!(out, "{agent}: {} externalization verdicts", ext.len())?;
                for v in ext {
                    writeln!(
                        out,
                        "  {} C={} beats none C'={}  ({:.1} vs {:.1}, p={:.3e})",
                        v.artifact, v.capacity, v.no_path_capacity, v.artifact_mean, v.no_path_mean, v.p_value
                    )?;
                }
            }
            writeln!(out, "wrote reports to {}", results.display())?;
        }
        Command::Render { manifest, out: dir, scale } => {
            let m = load_manifest(&manifest)?;
            let written = render(&m, &dir, scale)?;
            writeln!(out, "wrote {} images to {}", written, dir.display())?;
        }
    }
    Ok(())
}

fn obs_bitmap(o: &Observation) -> Bitmap {
    Bitmap::from_bits(o.side(), o.side(), o.flat().iter().map(|&v| v > 0.5).collect())
}

/// Arena with textures and artifact mask, the mask alone, and the start
/// observation with its crops, for every artifact of the manifest.
pub fn render(m: &RunManifest, dir: &Path, scale: usize) -> anyhow::Result<usize> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let env = m.environment.env_config();
    let mut written = 0;
    for &kind in &m.environment.artifacts {
        let mut world = env.build(kind, m.seed)?;
        if kind == ArtifactKind::DynamicPath {
            use rand::Rng;
            let mut rng = stream(m.seed, Stream::Action);
            for _ in 0..RENDER_DYNAMIC_STEPS {
                world.step(Action::from_index(rng.random_range(0..4)));
            }
        }
        let mask = world.state().artifact_mask.clone();
        let textures = world.textures();
        let pad = textures.pad_pixels();
        let mut arena = Bitmap::new(mask.width(), mask.height());
        for y in 0..mask.height() {
            for x in 0..mask.width() {
                arena.set(x, y, mask.get(x, y) || textures.background().get(x + pad, y + pad));
            }
        }
        let name = kind.name();
        write_pgm(&dir.join(format!("arena_{name}.pgm")), &arena, scale)?;
        write_pgm(&dir.join(format!("mask_{name}.pgm")), &mask, scale)?;
        let obs = render_observation(textures, &mask, m.environment.grid.start);
        write_pgm(&dir.join(format!("obs_{name}.pgm")), &obs_bitmap(&obs), scale)?;
        written += 3;
        for &c in &m.agent.crop_sides {
            if c < obs.side() {
                write_pgm(&dir.join(format!("obs_{name}_crop{c}.pgm")), &obs_bitmap(&transduce(&obs, c)?), scale)?;
                written += 1;
            }
        }
    }
    Ok(written)
}
