//! Seeded replications, grid sweeps and result files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::Context;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, GridPoint, Setup};
use crate::error::{Error, Result};
use crate::estimators::{estimation_error, AteEstimate};
use crate::metrics::{loglog_slope, AggregateResult, CompensatedSum, RoundRecord, RunTrace, SlopeFit};
use crate::policy::{Policy, PolicySpec};

/// Seed of replication `rep`, independent of scheduling.
pub fn child_seed(base: u64, rep: u64) -> u64 {
    let mut z = base ^ rep.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Outcome of one simulated run.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub cumulative_regret: f64,
    pub estimate: AteEstimate,
    pub estimation_error: f64,
    pub counts: Vec<u64>,
    pub trace: Option<RunTrace>,
}

/// Runs one replication of `spec` on `setup` with a single RNG stream for
/// arm choice, assignment sampling and reward noise.
pub fn simulate(setup: &Setup, spec: &PolicySpec, seed: u64, keep_trace: bool) -> Result<Simulation> {
    let num_arms = setup.space.len();
    let mut policy = Policy::from_spec(spec, num_arms)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut regret = CompensatedSum::new();
    let mut counts = vec![0u64; num_arms];
    let mut records = Vec::with_capacity(if keep_trace { spec.horizon } else { 0 });
    let n = setup.instance.n() as f64;
    for t in 1..=spec.horizon {
        let arm = policy.choose(&mut rng)?;
        let assignment = setup.sampler.sample(arm, &mut rng);
        let rewards = setup.instance.pull(&assignment, t, &mut rng)?;
        let reward = rewards.iter().sum::<f64>() / n;
        policy.update(arm, reward)?;
        let inc = setup.report.regret_increment(arm);
        regret.add(inc);
        counts[arm] += 1;
        if keep_trace {
            records.push(RoundRecord {
                round: t,
                arm,
                reward,
                regret: inc,
            });
        }
    }
    let estimate = policy
        .estimate()
        .cloned()
        .ok_or_else(|| Error::InvalidInput("policy produced no ATE estimate".into()))?;
    let estimation_error = estimation_error(&estimate, &setup.report)?;
    let trace = keep_trace.then(|| RunTrace {
        seed,
        records,
        estimate: Some(estimate.clone()),
    });
    Ok(Simulation {
        cumulative_regret: regret.total(),
        estimate,
        estimation_error,
        counts,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config_id: String,
    pub replication: usize,
    pub seed: u64,
    pub policy: String,
    #[serde(rename = "T")]
    pub horizon: usize,
    #[serde(rename = "T1")]
    pub explore_rounds: usize,
    pub num_arms: usize,
    pub cumulative_regret: f64,
    pub estimation_error: f64,
    pub estimate: AteEstimate,
    pub wall_clock_secs: f64,
    #[serde(skip)]
    pub trace: Option<RunTrace>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub replications: usize,
    pub seed: u64,
    pub workers: usize,
    pub keep_traces: bool,
}

impl RunOptions {
    pub fn from_config(config: &ExperimentConfig) -> Self {
        Self {
            replications: config.replications,
            seed: config.seed,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            keep_traces: false,
        }
    }
}

/// Runs all replications of one grid point on a pool of `options.workers`
/// threads. Results come back in replication order, so the aggregate does not
/// depend on the worker count.
pub fn run_replicated(
    config: &ExperimentConfig,
    point: GridPoint,
    options: &RunOptions,
) -> anyhow::Result<(Vec<RunResult>, AggregateResult)> {
    let setup = Setup::build(config, point.horizon)?;
    let spec = config.policy_at(point);
    let config_id = config.fingerprint(point);
    let num_arms = setup.space.len();
    let explore_rounds = spec.resolved_explore_rounds(num_arms);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers.max(1))
        .build()
        .context("building worker pool")?;
    let results: Vec<RunResult> = pool.install(|| {
        (0..options.replications)
            .into_par_iter()
            .map(|rep| {
                let seed = child_seed(options.seed, rep as u64);
                let started = Instant::now();
                let sim = simulate(&setup, &spec, seed, options.keep_traces)?;
                Ok(RunResult {
                    config_id: config_id.clone(),
                    replication: rep,
                    seed,
                    policy: spec.name.as_str().to_string(),
                    horizon: spec.horizon,
                    explore_rounds,
                    num_arms,
                    cumulative_regret: sim.cumulative_regret,
                    estimation_error: sim.estimation_error,
                    estimate: sim.estimate,
                    wall_clock_secs: started.elapsed().as_secs_f64(),
                    trace: sim.trace,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let regrets: Vec<f64> = results.iter().map(|r| r.cumulative_regret).collect();
    let errors: Vec<f64> = results.iter().map(|r| r.estimation_error).collect();
    let aggregate = AggregateResult::from_runs(&regrets, &errors)?;
    Ok((results, aggregate))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub config_id: String,
    #[serde(rename = "T")]
    pub horizon: usize,
    #[serde(rename = "T1")]
    pub explore_rounds: usize,
    pub num_arms: usize,
    pub aggregate: AggregateResult,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GridSlopes {
    pub regret_vs_t: Option<SlopeFit>,
    pub error_vs_t1: Option<SlopeFit>,
    pub product_vs_t: Option<SlopeFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOutput {
    pub policy: String,
    pub points: Vec<PointSummary>,
    pub slopes: GridSlopes,
    #[serde(skip)]
    pub results: Vec<RunResult>,
}

fn slope_over(xs: &[f64], ys: &[f64]) -> Option<SlopeFit> {
    let mut distinct = xs.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return None;
    }
    loglog_slope(xs, ys).ok()
}

/// Runs every grid point in order and fits log-log slopes across points.
pub fn run_grid(config: &ExperimentConfig, options: &RunOptions) -> anyhow::Result<GridOutput> {
    let mut points = Vec::new();
    let mut results = Vec::new();
    for point in config.grid_points()? {
        let (runs, aggregate) = run_replicated(config, point, options)?;
        let first = &runs[0];
        points.push(PointSummary {
            config_id: first.config_id.clone(),
            horizon: first.horizon,
            explore_rounds: first.explore_rounds,
            num_arms: first.num_arms,
            aggregate,
        });
        results.extend(runs);
    }
    let ts: Vec<f64> = points.iter().map(|p| p.horizon as f64).collect();
    let t1s: Vec<f64> = points.iter().map(|p| p.explore_rounds as f64).collect();
    let regrets: Vec<f64> = points.iter().map(|p| p.aggregate.mean_regret).collect();
    let errors: Vec<f64> = points.iter().map(|p| p.aggregate.mean_error).collect();
    let products: Vec<f64> = points.iter().map(|p| p.aggregate.product).collect();
    let slopes = GridSlopes {
        regret_vs_t: slope_over(&ts, &regrets),
        error_vs_t1: slope_over(&t1s, &errors),
        product_vs_t: slope_over(&ts, &products),
    };
    Ok(GridOutput {
        policy: config.policy.name.as_str().to_string(),
        points,
        slopes,
        results,
    })
}

#[derive(Serialize)]
struct CsvRow<'a> {
    config_id: &'a str,
    seed: u64,
    policy: &'a str,
    #[serde(rename = "T")]
    horizon: usize,
    #[serde(rename = "T1")]
    explore_rounds: usize,
    #[serde(rename = "U_E")]
    num_arms: usize,
    cumulative_regret: f64,
    estimation_error: f64,
}

/// One row per replication.
pub fn write_results_csv(path: &Path, results: &[RunResult]) -> anyhow::Result<()> {
    let mut writer = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in results {
        writer.serialize(CsvRow {
            config_id: &r.config_id,
            seed: r.seed,
            policy: &r.policy,
            horizon: r.horizon,
            explore_rounds: r.explore_rounds,
            num_arms: r.num_arms,
            cumulative_regret: r.cumulative_regret,
            estimation_error: r.estimation_error,
        })?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_aggregate_json(path: &Path, output: &GridOutput) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(output)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// One JSON object per round.
pub fn write_trace_jsonl(path: &Path, trace: &RunTrace) -> anyhow::Result<()> {
    let mut out = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for record in &trace.records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `results.csv`, `aggregate.json` and, when traces were kept,
/// `trace_<rep>.jsonl` (prefixed by the grid index when there are several points).
pub fn write_outputs(dir: &Path, output: &GridOutput) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_results_csv(&dir.join("results.csv"), &output.results)?;
    write_aggregate_json(&dir.join("aggregate.json"), output)?;
    let multi = output.points.len() > 1;
    for r in &output.results {
        if let Some(trace) = &r.trace {
            let point = output
                .points
                .iter()
                .position(|p| p.config_id == r.config_id)
                .unwrap_or(0);
            let name = if multi {
                format!("trace_{point}_{}.jsonl", r.replication)
            } else {
                format!("trace_{}.jsonl", r.replication)
            };
            write_trace_jsonl(&dir.join(name), trace)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(policy: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(
            r#"{{
                "n": 1, "k": 2,
                "mapping": {{"variant": "per_unit"}},
                "instance": {{"outcome": {{"type": "needle", "gap": 0.2, "target": [1]}}, "noise": {{"type": "bounded_bernoulli"}}}},
                "policy": {{"name": "{policy}", "T": 200}},
                "replications": 6,
                "seed": 3
            }}"#
        ))
        .unwrap()
    }

    fn options(workers: usize) -> RunOptions {
        RunOptions {
            replications: 6,
            seed: 3,
            workers,
            keep_traces: true,
        }
    }

    #[test]
    fn child_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|r| child_seed(7, r)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(child_seed(1, 0), child_seed(2, 0));
    }

    #[test]
    fn same_seed_same_arms() {
        let c = config("exp3");
        let setup = Setup::build(&c, 200).unwrap();
        let spec = c.policy_at(c.grid_points().unwrap()[0]);
        let a = simulate(&setup, &spec, 11, true).unwrap();
        let b = simulate(&setup, &spec, 11, true).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        for name in ["ucb_tsn", "uniform", "exp3_tsn"] {
            let c = config(name);
            let point = c.grid_points().unwrap()[0];
            let (r1, a1) = run_replicated(&c, point, &options(1)).unwrap();
            let (r4, a4) = run_replicated(&c, point, &options(4)).unwrap();
            assert_eq!(a1, a4);
            for (x, y) in r1.iter().zip(&r4) {
                assert_eq!((x.seed, x.cumulative_regret, x.estimation_error), (y.seed, y.cumulative_regret, y.estimation_error));
                assert_eq!(x.trace, y.trace);
            }
        }
    }

    #[test]
    fn trace_replay_matches_regret() {
        let c = config("ucb_tsn");
        let point = c.grid_points().unwrap()[0];
        let setup = Setup::build(&c, point.horizon).unwrap();
        let (runs, _) = run_replicated(&c, point, &options(2)).unwrap();
        for r in &runs {
            let trace = r.trace.as_ref().unwrap();
            assert_eq!(trace.len(), 200);
            let replay: f64 = trace.records.iter().map(|x| setup.report.regret_increment(x.arm)).sum();
            assert!((replay - r.cumulative_regret).abs() < 1e-9);
        }
    }
}
