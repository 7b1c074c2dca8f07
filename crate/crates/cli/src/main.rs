use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cil_core::experiment::{self, ExperimentConfig, ResolvedConfig, RunOptions, RunSummary};

#[derive(Parser)]
#[command(name = "cil", version, about = "Causal imitation learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and evaluate every (method, seed) of a config.
    Run(Common),
    /// Run the cartesian product of the sweep axis, methods and seeds.
    Sweep(Common),
    /// Emit CMR diagnostics and horizon-selection p-values.
    Diagnose(Common),
    /// Compute and cache reward anchors.
    Anchors(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    #[value(name = "paper_defaults", alias = "paper-defaults")]
    PaperDefaults,
    Desk,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `output` or `./results`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replaces the first seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    profile: Option<ProfileArg>,
    /// Skip cells already recorded in the manifest.
    #[arg(long)]
    resume: bool,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

struct Loaded {
    cfg: ResolvedConfig,
    out: PathBuf,
    opts: RunOptions,
}

fn load(c: &Common) -> Result<Loaded> {
    let text = std::fs::read_to_string(&c.config).with_context(|| format!("reading {}", c.config.display()))?;
    let mut raw = ExperimentConfig::from_json(&text).with_context(|| format!("invalid config {}", c.config.display()))?;
    if let Some(seed) = c.seed {
        match raw.seeds.first_mut() {
            Some(first) => *first = seed,
            None => raw.seeds.push(seed),
        }
    }
    if let Some(p) = c.profile {
        raw.paper_defaults = matches!(p, ProfileArg::PaperDefaults);
    }
    let out = c
        .out
        .clone()
        .or_else(|| raw.output.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    let cfg = raw.resolve()?;
    Ok(Loaded {
        cfg,
        out,
        opts: RunOptions {
            resume: c.resume,
            jobs: c.jobs,
        },
    })
}

fn report(summary: &RunSummary) -> ExitCode {
    eprintln!("artifacts in {}", summary.dir.display());
    for f in &summary.manifest.failures {
        eprintln!("failed {}: {}", f.cell, f.error);
    }
    if summary.failed() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn print_csv(dir: &Path) -> Result<()> {
    let text = std::fs::read_to_string(dir.join("results.csv"))?;
    print!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run(c) => {
            let l = load(&c)?;
            let s = experiment::run(&l.cfg, &l.out, l.opts)?;
            print_csv(&s.dir)?;
            Ok(report(&s))
        }
        Command::Sweep(c) => {
            let l = load(&c)?;
            let s = experiment::sweep(&l.cfg, &l.out, l.opts)?;
            print_csv(&s.dir)?;
            Ok(report(&s))
        }
        Command::Diagnose(c) => {
            let l = load(&c)?;
            let (s, reports) = experiment::diagnose(&l.cfg, &l.out, l.opts)?;
            println!("{}", serde_json::to_string_pretty(&reports)?);
            Ok(report(&s))
        }
        Command::Anchors(c) => {
            let l = load(&c)?;
            let anchors = experiment::anchors(&l.cfg, &l.out)?;
            for (k, a) in anchors {
                println!("k={k}\tJ_random={}\tJ_clean_expert={}", a.j_random, a.j_clean_expert);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
