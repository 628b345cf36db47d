use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use serde_json::json;

use netband::exposure::CompatibleSampler;
use netband::harness::{run_grid, validate, write_outputs, ExperimentConfig, RunOptions, ValidationReport};
use netband::oracle::OracleReport;

#[derive(Parser)]
#[command(name = "netband", version, about = "Bandit experiments under network interference")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run replications (and grid points) and write results.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        workers: Option<usize>,
        /// Also write per-round traces.
        #[arg(long)]
        traces: bool,
    },
    /// Print the exposure arm space as JSON.
    EnumerateSpace {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the oracle report as JSON.
    Oracle {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

enum Failure {
    Invalid(ValidationReport),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Self::Other(e)
    }
}

fn checked(config: &ExperimentConfig) -> Result<(), Failure> {
    let report = validate(config)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if report.is_ok() {
        Ok(())
    } else {
        Err(Failure::Invalid(report))
    }
}

/// A config that cannot be read or parsed counts as invalid.
fn load(path: &std::path::Path) -> Result<ExperimentConfig, Failure> {
    ExperimentConfig::load(path).map_err(|e| {
        Failure::Invalid(ValidationReport {
            errors: vec![format!("{e:#}")],
            warnings: Vec::new(),
        })
    })
}

fn print_json(value: &serde_json::Value) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run {
            config,
            out,
            seed,
            reps,
            workers,
            traces,
        } => {
            let mut cfg = load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(r) = reps {
                cfg.replications = r;
            }
            checked(&cfg)?;
            let out = out
                .or_else(|| cfg.output_dir.clone())
                .context("no output directory: pass --out or set output_dir")?;
            let mut options = RunOptions::from_config(&cfg);
            if let Some(w) = workers {
                options.workers = w;
            }
            options.keep_traces = traces;
            let output = run_grid(&cfg, &options)?;
            write_outputs(&out, &output)?;
            for p in &output.points {
                eprintln!(
                    "T={} T1={} |U_E|={} regret={:.4} error={:.4} product={:.4}",
                    p.horizon,
                    p.explore_rounds,
                    p.num_arms,
                    p.aggregate.mean_regret,
                    p.aggregate.mean_error,
                    p.aggregate.product
                );
            }
        }
        Command::EnumerateSpace { config } => {
            let cfg = load(&config)?;
            let model = cfg.exposure_model()?;
            let space = cfg.space(&model).map_err(anyhow::Error::from)?;
            let arms: Vec<Vec<String>> = space.arms().iter().map(|s| model.describe(s)).collect();
            print_json(&json!({
                "mapping": model.mapping().name(),
                "U_C": space.cluster_constant_count().to_string(),
                "U_O": space.realizable_count().to_string(),
                "U_E": space.len(),
                "codomain": model.codomain().iter().map(ToString::to_string).collect::<Vec<_>>(),
                "arms": arms,
            }))?;
        }
        Command::Oracle { config } => {
            let cfg = load(&config)?;
            let model = cfg.exposure_model()?;
            let space = cfg.space(&model).map_err(anyhow::Error::from)?;
            let sampler = CompatibleSampler::new(&model, &space, cfg.budget()).map_err(anyhow::Error::from)?;
            let instance = cfg.instance(model, cfg.policy.horizon).map_err(anyhow::Error::from)?;
            let report = OracleReport::compute(&instance, &space, &sampler, cfg.oracle, cfg.budget())
                .map_err(anyhow::Error::from)?;
            print_json(&serde_json::to_value(&report).map_err(anyhow::Error::from)?)?;
        }
        Command::Validate { config } => {
            let cfg = load(&config)?;
            let report = validate(&cfg)?;
            print_json(&serde_json::to_value(&report).map_err(anyhow::Error::from)?)?;
            if !report.is_ok() {
                return Err(Failure::Invalid(report));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(report)) => {
            for e in &report.errors {
                eprintln!("error: {e}");
            }
            ExitCode::from(2)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
