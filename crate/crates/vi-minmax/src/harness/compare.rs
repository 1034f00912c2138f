//! Cross-method comparison: oracle calls needed to drive the running
//! mean of the squared residual below a target.

use serde::{Deserialize, Serialize};

use crate::solver::Method;

use super::runner::{HarnessError, RunSummary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub method: Method,
    pub problem: String,
    /// First iteration at which the running mean of `r_eta^2` (averaged
    /// across seeds) drops to the target; `None` if never.
    pub first_k: Option<usize>,
    /// Cumulative oracle calls at that iteration.
    pub oracle_calls: Option<u64>,
    pub final_running_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub target: f64,
    pub rows: Vec<CompareRow>,
}

/// Seed-averaged residual curve and matching oracle-call counts of one
/// experiment, read back from its trace files.
fn residual_curve(summary: &RunSummary) -> Result<(Vec<f64>, Vec<u64>), HarnessError> {
    let dir = &summary.config.output_dir;
    let mut seed_curves: Vec<Vec<(f64, u64)>> = Vec::new();
    for seed in &summary.per_seed {
        let path = dir.join(&seed.trace_file);
        let text = std::fs::read_to_string(&path)
            .map_err(|source| HarnessError::Io { path: path.clone(), source })?;
        let records = super::csv::parse_trace_csv(&text)?;
        seed_curves.push(
            records
                .into_iter()
                .filter(|r| r.k >= 1)
                .map(|r| (r.r_eta_sq, r.oracle_calls))
                .collect(),
        );
    }
    let len = seed_curves.iter().map(|c| c.len()).min().unwrap_or(0);
    if len == 0 {
        return Err(HarnessError::Invalid(format!(
            "experiment in {} has no iteration records",
            dir.display()
        )));
    }
    let n_seeds = seed_curves.len() as f64;
    let mut r_mean = Vec::with_capacity(len);
    let mut calls = Vec::with_capacity(len);
    for k in 0..len {
        r_mean.push(seed_curves.iter().map(|c| c[k].0).sum::<f64>() / n_seeds);
        calls.push(seed_curves.iter().map(|c| c[k].1).max().unwrap());
    }
    Ok((r_mean, calls))
}

/// Compares summaries of runs on the same problem: for each, the first
/// iteration (and its cumulative oracle cost) at which the running mean
/// of the seed-averaged squared residual reaches the target. With no
/// explicit target, the largest final running mean among the inputs is
/// used, so every run reaches it.
pub fn compare_runs(
    summaries: &[RunSummary],
    target: Option<f64>,
) -> Result<Comparison, HarnessError> {
    if summaries.is_empty() {
        return Err(HarnessError::Invalid("compare needs at least one summary".into()));
    }
    let problem = summaries[0].config.problem.name();
    if summaries.iter().any(|s| s.config.problem.name() != problem) {
        return Err(HarnessError::Invalid(
            "compared summaries must describe the same problem".into(),
        ));
    }

    let mut curves = Vec::with_capacity(summaries.len());
    for summary in summaries {
        curves.push(residual_curve(summary)?);
    }

    let running_means: Vec<Vec<f64>> = curves
        .iter()
        .map(|(r, _)| {
            let mut acc = 0.0;
            r.iter()
                .enumerate()
                .map(|(i, v)| {
                    acc += v;
                    acc / (i + 1) as f64
                })
                .collect()
        })
        .collect();

    let target = target.unwrap_or_else(|| {
        running_means
            .iter()
            .map(|m| *m.last().unwrap())
            .fold(f64::NEG_INFINITY, f64::max)
    });

    let rows = summaries
        .iter()
        .zip(curves.iter().zip(&running_means))
        .map(|(summary, ((_, calls), running))| {
            let hit = running.iter().position(|v| *v <= target);
            CompareRow {
                method: summary.config.method,
                problem: summary.config.problem.name().to_string(),
                first_k: hit.map(|i| i + 1),
                oracle_calls: hit.map(|i| calls[i]),
                final_running_mean: *running.last().unwrap(),
            }
        })
        .collect();

    Ok(Comparison { target, rows })
}

pub fn render_comparison(comparison: &Comparison) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    writeln!(out, "target running-mean r^2: {:.6e}", comparison.target).unwrap();
    writeln!(out, "{:<16} {:>10} {:>16} {:>16}", "method", "first_k", "oracle_calls", "final_mean")
        .unwrap();
    for row in &comparison.rows {
        writeln!(
            out,
            "{:<16} {:>10} {:>16} {:>16.6e}",
            row.method.as_str(),
            row.first_k.map(|k| k.to_string()).unwrap_or_else(|| "inf".into()),
            row.oracle_calls.map(|c| c.to_string()).unwrap_or_else(|| "inf".into()),
            row.final_running_mean,
        )
        .unwrap();
    }
    out
}
