//! Seeded experiment sweeps: dispatch seeds to a worker pool, write one
//! CSV trace per seed plus one JSON summary, evaluate the a-priori rate
//! bounds against the observed seed means.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{
    estimate_alpha, oadagrad_rate_bound, osg_operator_norm_bound, osg_residual_bound, GrowthFit,
};
use crate::solver::{run, Method, MinibatchSchedule, RunOptions};

use super::config::{ConfigError, ExperimentConfig};
use super::csv::{write_trace_csv, CsvError};

pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("io ({path}): {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] CsvError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

/// Worker count: explicit flag, else `VI_MINMAX_JOBS`, else the number of
/// processors.
pub fn default_jobs() -> usize {
    if let Ok(v) = std::env::var("VI_MINMAX_JOBS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                return n;
            }
        }
    }
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Runs `f(0..n)` on a pool of `jobs` workers and returns the results in
/// index order. Workers share nothing but the task counter.
pub fn parallel_map<T: Send, F: Fn(usize) -> T + Sync>(n: usize, jobs: usize, f: F) -> Vec<T> {
    if n == 0 {
        return Vec::new();
    }
    let jobs = jobs.clamp(1, n);
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<T>>> = (0..n).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let result = f(i);
                *slots[i].lock().unwrap() = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("worker filled every slot"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub trace_file: String,
    pub failed: bool,
    pub steps: usize,
    pub mean_r_sq: f64,
    pub mean_t_norm_sq: f64,
    pub mean_h_inv_norm_sq: Option<f64>,
    pub total_oracle_calls: u64,
    pub empirical_d: f64,
    pub growth_sum_final: f64,
    pub alpha_coord: Option<f64>,
    pub alpha_coord_feasible: Option<bool>,
    pub bound_violations: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() >= 2 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / (values.len() - 1) as f64)
                .sqrt()
        } else {
            0.0
        };
        MeanStd { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean_r_sq: MeanStd,
    pub mean_t_norm_sq: MeanStd,
    pub mean_h_inv_norm_sq: Option<MeanStd>,
    pub total_oracle_calls: u64,
    pub empirical_d_max: f64,
    pub any_failed: bool,
}

/// One a-priori bound evaluated against the observed seed mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub applicable: bool,
    pub value: Option<f64>,
    pub observed: Option<f64>,
    pub satisfied: Option<bool>,
    pub note: Option<String>,
}

impl BoundReport {
    fn not_applicable(name: &str, note: impl Into<String>) -> Self {
        BoundReport {
            name: name.into(),
            applicable: false,
            value: None,
            observed: None,
            satisfied: None,
            note: Some(note.into()),
        }
    }

    fn evaluated(name: &str, value: f64, observed: f64) -> Self {
        BoundReport {
            name: name.into(),
            applicable: true,
            value: Some(value),
            observed: Some(observed),
            satisfied: Some(observed <= value),
            note: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub library_version: String,
    pub config: ExperimentConfig,
    pub per_seed: Vec<SeedSummary>,
    pub aggregate: Aggregate,
    pub bounds: Vec<BoundReport>,
    /// Growth-exponent fit of the across-seed mean growth series.
    pub alpha_fit: Option<GrowthFit>,
}

/// Runs the full seeded sweep described by `config`: one trace CSV per
/// seed (seeds are `base_seed + i`, results merged in seed order) plus a
/// `summary.json` in the output directory. Deterministic given the
/// config.
pub fn run_experiment(config: &ExperimentConfig, jobs: usize) -> Result<RunSummary, HarnessError> {
    config.validate()?;
    let problem = config.build_problem()?;
    std::fs::create_dir_all(&config.output_dir).map_err(io_err(&config.output_dir))?;

    let start = config.start_point(problem.dim);
    let opts = RunOptions {
        start,
        record_every: config.record_every,
        store_iterates: config.store_iterates,
        shadow_metric: config.shadow_metric,
    };

    let outputs = parallel_map(config.n_seeds, jobs, |i| {
        let mut solver_config = config.solver.clone();
        solver_config.seed = config.solver.seed.wrapping_add(i as u64);
        let trace = run(&problem, &solver_config, config.method, &opts);
        let trace_file = format!("trace_seed{i:04}.csv");
        let path = config.output_dir.join(&trace_file);
        let io = write_trace_csv(&trace, &path).map_err(|e| HarnessError::Io {
            path: path.clone(),
            source: e,
        });
        (trace, trace_file, io)
    });

    let mut per_seed = Vec::with_capacity(outputs.len());
    let mut growth_series: Vec<Vec<f64>> = Vec::new();
    for (i, (trace, trace_file, io)) in outputs.into_iter().enumerate() {
        io?;
        let s = &trace.summary;
        per_seed.push(SeedSummary {
            seed: config.solver.seed.wrapping_add(i as u64),
            trace_file,
            failed: trace.failed,
            steps: s.steps,
            mean_r_sq: s.mean_r_sq,
            mean_t_norm_sq: s.mean_t_norm_sq,
            mean_h_inv_norm_sq: s.mean_h_inv_norm_sq,
            total_oracle_calls: s.total_oracle_calls,
            empirical_d: s.empirical_d,
            growth_sum_final: s.growth_sum_final,
            alpha_coord: s.alpha_coord.map(|r| r.alpha),
            alpha_coord_feasible: s.alpha_coord.map(|r| r.feasible),
            bound_violations: s.bound_violations,
        });
        growth_series.push(trace.growth_series());
    }

    let aggregate = aggregate_seeds(&per_seed);
    let alpha_fit = mean_growth_fit(&growth_series);
    let bounds = evaluate_bounds(config, &problem, &per_seed, &aggregate);

    let summary = RunSummary {
        schema_version: config.schema_version,
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        per_seed,
        aggregate,
        bounds,
        alpha_fit,
    };
    let path = config.output_dir.join(SUMMARY_FILE);
    write_summary(&summary, &path)?;
    Ok(summary)
}

fn aggregate_seeds(per_seed: &[SeedSummary]) -> Aggregate {
    let r: Vec<f64> = per_seed.iter().map(|s| s.mean_r_sq).collect();
    let t: Vec<f64> = per_seed.iter().map(|s| s.mean_t_norm_sq).collect();
    let h: Option<Vec<f64>> = per_seed
        .iter()
        .map(|s| s.mean_h_inv_norm_sq)
        .collect::<Option<Vec<f64>>>();
    Aggregate {
        mean_r_sq: MeanStd::from_values(&r),
        mean_t_norm_sq: MeanStd::from_values(&t),
        mean_h_inv_norm_sq: h.as_deref().map(MeanStd::from_values),
        total_oracle_calls: per_seed.iter().map(|s| s.total_oracle_calls).sum(),
        empirical_d_max: per_seed.iter().map(|s| s.empirical_d).fold(0.0, f64::max),
        any_failed: per_seed.iter().any(|s| s.failed),
    }
}

fn mean_growth_fit(series: &[Vec<f64>]) -> Option<GrowthFit> {
    let min_len = series.iter().map(|s| s.len()).min().unwrap_or(0);
    if min_len < 10 {
        return None;
    }
    let n_seeds = series.len() as f64;
    let mean: Vec<f64> = (0..min_len)
        .map(|k| series.iter().map(|s| s[k]).sum::<f64>() / n_seeds)
        .collect();
    if mean[0] <= 0.0 || mean.windows(2).any(|w| w[1] < w[0] * (1.0 - 1e-12)) {
        return None;
    }
    Some(estimate_alpha(&mean))
}

fn evaluate_bounds(
    config: &ExperimentConfig,
    problem: &crate::problem::Problem,
    per_seed: &[SeedSummary],
    aggregate: &Aggregate,
) -> Vec<BoundReport> {
    let mut bounds = Vec::new();
    let eta = config.solver.eta;
    let n = config.solver.n_iters;
    let sigma = problem.noise_sigma;
    let step_ok = eta <= 1.0 / (9.0 * problem.lipschitz_l) * (1.0 + 1e-12);

    match config.method {
        Method::Osg => {
            let name_res = "osg_mean_residual";
            let name_op = "osg_mean_operator_norm";
            if aggregate.any_failed {
                bounds.push(BoundReport::not_applicable(name_res, "a seed diverged"));
            } else if n == 0 {
                bounds.push(BoundReport::not_applicable(name_res, "no iterations"));
            } else if problem.lipschitz_l > 0.0 && !step_ok {
                bounds.push(BoundReport::not_applicable(
                    name_res,
                    format!("eta {} exceeds 1/(9L) = {}", eta, 1.0 / (9.0 * problem.lipschitz_l)),
                ));
            } else if let Some(solution) = &problem.known_solution {
                let start = config
                    .start_point(problem.dim)
                    .unwrap_or_else(|| crate::linalg::Point::zeros(problem.dim));
                let x0_dist_sq = start.sub(solution).norm_sq();
                let value = osg_residual_bound(x0_dist_sq, eta, n, sigma, &config.solver.schedule);
                bounds.push(BoundReport::evaluated(name_res, value, aggregate.mean_r_sq.mean));
                if problem.domain.is_all_space() {
                    let value =
                        osg_operator_norm_bound(x0_dist_sq, eta, n, sigma, &config.solver.schedule);
                    bounds.push(BoundReport::evaluated(
                        name_op,
                        value,
                        aggregate.mean_t_norm_sq.mean,
                    ));
                }
            } else {
                bounds.push(BoundReport::not_applicable(name_res, "no known solution"));
            }
        }
        Method::Oadagrad => {
            let name = "oadagrad_mean_weighted_norm";
            let delta = config.solver.delta;
            let adaptive_step_ok =
                problem.lipschitz_l == 0.0 || eta <= delta / (9.0 * problem.lipschitz_l) * (1.0 + 1e-12);
            let m = match &config.solver.schedule {
                MinibatchSchedule::Constant { m } => Some(*m),
                MinibatchSchedule::EpsilonScaled { .. } => Some(config.solver.schedule.batch_size(0)),
                MinibatchSchedule::LinearGrowth => None,
            };
            let alphas: Option<Vec<f64>> = per_seed.iter().map(|s| s.alpha_coord).collect();
            let feasible = per_seed
                .iter()
                .all(|s| s.alpha_coord_feasible.unwrap_or(false));
            if aggregate.any_failed {
                bounds.push(BoundReport::not_applicable(name, "a seed diverged"));
            } else if n < 2 {
                bounds.push(BoundReport::not_applicable(name, "needs at least 2 iterations"));
            } else if !adaptive_step_ok {
                bounds.push(BoundReport::not_applicable(
                    name,
                    format!("eta {} exceeds delta/(9L) = {}", eta, delta / (9.0 * problem.lipschitz_l)),
                ));
            } else if let (Some(m), Some(g_bound), Some(alphas), true) =
                (m, problem.bound_g, alphas, feasible)
            {
                let alpha = alphas.into_iter().fold(0.0f64, f64::max);
                let observed = aggregate
                    .mean_h_inv_norm_sq
                    .map(|m| m.mean)
                    .expect("oadagrad runs track the metric");
                let value = oadagrad_rate_bound(
                    aggregate.empirical_d_max,
                    delta,
                    problem.dim,
                    alpha,
                    eta,
                    n,
                    sigma,
                    m,
                    g_bound,
                );
                bounds.push(BoundReport::evaluated(name, value, observed));
            } else if m.is_none() {
                bounds.push(BoundReport::not_applicable(name, "needs a constant minibatch size"));
            } else if problem.bound_g.is_none() {
                bounds.push(BoundReport::not_applicable(name, "problem declares no a.s. sample bound"));
            } else {
                bounds.push(BoundReport::not_applicable(
                    name,
                    "per-coordinate growth not covered by the metric floor",
                ));
            }
        }
        Method::Extragradient => {
            bounds.push(BoundReport::not_applicable(
                "osg_mean_residual",
                "guarantee is stated for the single-call method",
            ));
        }
    }
    bounds
}

pub fn write_summary(summary: &RunSummary, path: &Path) -> Result<(), HarnessError> {
    let json = serde_json::to_string_pretty(summary)?;
    std::fs::write(path, json.as_bytes()).map_err(io_err(path))
}

pub fn load_summary(path: &Path) -> Result<RunSummary, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    Ok(serde_json::from_str(&text)?)
}
