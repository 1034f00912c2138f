//! CLI entry point: run seeded experiment sweeps, verify the invariant
//! suite, compare finished runs, and fit growth exponents on traces.

use std::path::PathBuf;
use std::process::ExitCode;

use vi_minmax::diagnostics::{estimate_alpha_with_mode, FitMode};
use vi_minmax::harness::{
    compare_runs, default_jobs, load_summary, parse_config, parse_trace_csv, render_comparison,
    run_experiment, verify_suite, RunSummary, VerifyLevel, SUMMARY_FILE,
};

const USAGE: &str = "\
vi-minmax — solvers and experiment harness for stochastic min-max problems

USAGE:
  vi-minmax run <CONFIG> [--config PATH] [--output DIR] [--seed BASE] [--jobs N]
  vi-minmax verify [--full] [--jobs N]
  vi-minmax compare <SUMMARY.json>... [--target T]
  vi-minmax alpha <TRACE.csv> [--mode upper|loglog]
  vi-minmax help

Seeds run as base_seed + i on a worker pool (--jobs, default: number of
processors, overridable with VI_MINMAX_JOBS). `run` writes one CSV trace
per seed plus summary.json into the output directory. `verify` exits
nonzero if any named invariant fails.";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match run_cli(&args) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run_cli(args: &[String]) -> Result<ExitCode, String> {
    let Some(verb) = args.first() else {
        println!("{USAGE}");
        return Ok(ExitCode::from(2));
    };
    let rest = &args[1..];
    match verb.as_str() {
        "run" => cmd_run(rest),
        "verify" => cmd_verify(rest),
        "compare" => cmd_compare(rest),
        "alpha" => cmd_alpha(rest),
        "help" | "--help" | "-h" => {
            println!("{USAGE}");
            Ok(ExitCode::SUCCESS)
        }
        other => Err(format!("unknown command '{other}' (try 'vi-minmax help')")),
    }
}

struct Flags {
    positional: Vec<String>,
    config: Option<String>,
    output: Option<String>,
    seed: Option<u64>,
    jobs: Option<usize>,
    target: Option<f64>,
    mode: Option<String>,
    full: bool,
}

fn parse_flags(args: &[String]) -> Result<Flags, String> {
    let mut flags = Flags {
        positional: Vec::new(),
        config: None,
        output: None,
        seed: None,
        jobs: None,
        target: None,
        mode: None,
        full: false,
    };
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let mut take = |name: &str| -> Result<String, String> {
            it.next()
                .cloned()
                .ok_or_else(|| format!("flag {name} needs a value"))
        };
        match arg.as_str() {
            "--config" => flags.config = Some(take("--config")?),
            "--output" => flags.output = Some(take("--output")?),
            "--seed" => {
                flags.seed =
                    Some(take("--seed")?.parse().map_err(|_| "--seed needs an integer")?)
            }
            "--jobs" => {
                flags.jobs =
                    Some(take("--jobs")?.parse().map_err(|_| "--jobs needs an integer")?)
            }
            "--target" => {
                flags.target =
                    Some(take("--target")?.parse().map_err(|_| "--target needs a number")?)
            }
            "--mode" => flags.mode = Some(take("--mode")?),
            "--full" => flags.full = true,
            other if other.starts_with("--") => return Err(format!("unknown flag '{other}'")),
            other => flags.positional.push(other.to_string()),
        }
    }
    Ok(flags)
}

fn cmd_run(args: &[String]) -> Result<ExitCode, String> {
    let flags = parse_flags(args)?;
    let path = flags
        .config
        .clone()
        .or_else(|| flags.positional.first().cloned())
        .ok_or("run needs a config file (positional or --config)")?;
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{path}: {e}"))?;
    let mut config = parse_config(&text).map_err(|e| e.to_string())?;
    if let Some(dir) = flags.output {
        config.output_dir = PathBuf::from(dir);
    }
    if let Some(seed) = flags.seed {
        config.solver.seed = seed;
    }
    config.validate().map_err(|e| e.to_string())?;

    let jobs = flags.jobs.unwrap_or_else(default_jobs);
    let summary = run_experiment(&config, jobs).map_err(|e| e.to_string())?;

    println!(
        "{} x {} on {}: {} seeds, {} iterations each",
        config.method.as_str(),
        config.problem.name(),
        config.output_dir.display(),
        config.n_seeds,
        config.solver.n_iters
    );
    println!(
        "mean r_eta^2      {:.6e} +- {:.2e}",
        summary.aggregate.mean_r_sq.mean, summary.aggregate.mean_r_sq.std
    );
    println!(
        "mean |T|^2        {:.6e} +- {:.2e}",
        summary.aggregate.mean_t_norm_sq.mean, summary.aggregate.mean_t_norm_sq.std
    );
    if let Some(h) = summary.aggregate.mean_h_inv_norm_sq {
        println!("mean |T|^2_H^-1   {:.6e} +- {:.2e}", h.mean, h.std);
    }
    println!("total oracle calls {}", summary.aggregate.total_oracle_calls);
    println!("empirical D       {:.6}", summary.aggregate.empirical_d_max);
    if let Some(fit) = &summary.alpha_fit {
        println!("growth exponent   {:.3} (c = {:.4})", fit.alpha_hat, fit.c_hat);
    }
    for bound in &summary.bounds {
        match (bound.applicable, bound.value, bound.observed, bound.satisfied) {
            (true, Some(value), Some(observed), Some(ok)) => println!(
                "bound {:<28} {} (observed {:.6e} vs bound {:.6e})",
                bound.name,
                if ok { "satisfied" } else { "VIOLATED" },
                observed,
                value
            ),
            _ => println!(
                "bound {:<28} not applicable ({})",
                bound.name,
                bound.note.as_deref().unwrap_or("")
            ),
        }
    }
    println!("summary written to {}", config.output_dir.join(SUMMARY_FILE).display());

    let violated = summary
        .bounds
        .iter()
        .any(|b| b.satisfied == Some(false));
    if summary.aggregate.any_failed {
        eprintln!("warning: at least one seed diverged; traces are truncated");
        return Ok(ExitCode::FAILURE);
    }
    Ok(if violated { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}

fn cmd_verify(args: &[String]) -> Result<ExitCode, String> {
    let flags = parse_flags(args)?;
    if !flags.positional.is_empty() {
        return Err(format!("unexpected argument '{}'", flags.positional[0]));
    }
    let level = if flags.full { VerifyLevel::Full } else { VerifyLevel::Fast };
    let jobs = flags.jobs.unwrap_or_else(default_jobs);
    let report = verify_suite(level, jobs);
    print!("{}", report.render());
    Ok(if report.all_passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_compare(args: &[String]) -> Result<ExitCode, String> {
    let flags = parse_flags(args)?;
    if flags.positional.is_empty() {
        return Err("compare needs at least one summary.json".into());
    }
    let summaries: Vec<RunSummary> = flags
        .positional
        .iter()
        .map(|p| load_summary(std::path::Path::new(p)).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let comparison = compare_runs(&summaries, flags.target).map_err(|e| e.to_string())?;
    print!("{}", render_comparison(&comparison));
    Ok(ExitCode::SUCCESS)
}

fn cmd_alpha(args: &[String]) -> Result<ExitCode, String> {
    let flags = parse_flags(args)?;
    let path = flags
        .positional
        .first()
        .ok_or("alpha needs a trace CSV file")?;
    let mode = match flags.mode.as_deref() {
        None | Some("upper") => FitMode::UpperBound,
        Some("loglog") => FitMode::LogLog,
        Some(other) => return Err(format!("unknown fit mode '{other}' (upper|loglog)")),
    };
    let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    let records = parse_trace_csv(&text).map_err(|e| e.to_string())?;
    let series: Vec<f64> = records
        .iter()
        .filter(|r| r.k >= 1)
        .map(|r| r.growth_sum)
        .collect();
    if series.len() < 10 {
        return Err("trace has fewer than 10 iteration rows".into());
    }
    if series[0] <= 0.0 || series.windows(2).any(|w| w[1] < w[0] * (1.0 - 1e-12)) {
        return Err("growth_sum column is not a positive nondecreasing series".into());
    }
    let fit = estimate_alpha_with_mode(&series, mode);
    println!(
        "alpha_hat = {:.4}  c_hat = {:.6e}  max_rel_residual = {:.3e}  ({} rows)",
        fit.alpha_hat,
        fit.c_hat,
        fit.max_rel_residual,
        series.len()
    );
    Ok(ExitCode::SUCCESS)
}
