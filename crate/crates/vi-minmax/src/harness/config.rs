//! The experiment config format: a flat `key = value` text file with
//! dotted section names, one experiment per file. Trivially diffable,
//! and `parse(serialize(c)) == c` holds exactly.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::Domain;
use crate::linalg::Point;
use crate::problem::Problem;
use crate::solver::{Method, MinibatchSchedule, SolverConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("field '{field}': {msg}")]
    Field { field: String, msg: String },
}

fn field_err(field: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Field { field: field.into(), msg: msg.into() }
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

fn nonnegative(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}

/// Which test problem to build, by constructor name and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ProblemSpec {
    Bilinear { dim: usize, scale: f64, sigma: f64 },
    StronglyMonotoneQuadratic { dim: usize, gamma: f64, sigma: f64 },
    CosineWindow { sigma: f64 },
    SparseGradient { dim: usize, active_fraction: f64, noise_std: f64 },
}

impl ProblemSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::Bilinear { .. } => "bilinear",
            ProblemSpec::StronglyMonotoneQuadratic { .. } => "strongly_monotone_quadratic",
            ProblemSpec::CosineWindow { .. } => "cosine_window",
            ProblemSpec::SparseGradient { .. } => "sparse_gradient",
        }
    }

    pub fn build(&self) -> Problem {
        match self {
            ProblemSpec::Bilinear { dim, scale, sigma } => {
                Problem::bilinear(*dim, *scale).with_noise_sigma(*sigma)
            }
            ProblemSpec::StronglyMonotoneQuadratic { dim, gamma, sigma } => {
                Problem::strongly_monotone_quadratic(*dim, *gamma).with_noise_sigma(*sigma)
            }
            ProblemSpec::CosineWindow { sigma } => {
                Problem::cosine_window().with_noise_sigma(*sigma)
            }
            ProblemSpec::SparseGradient { dim, active_fraction, noise_std } => {
                Problem::sparse_gradient(*dim, *active_fraction).with_sparse_noise_std(*noise_std)
            }
        }
    }
}

/// One experiment: a problem, a method, solver parameters, and the sweep
/// and output settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub problem: ProblemSpec,
    /// Optional constraint-set override (defaults to the problem's own).
    pub domain: Option<Domain>,
    pub method: Method,
    pub solver: SolverConfig,
    pub n_seeds: usize,
    pub output_dir: PathBuf,
    /// Trace thinning stride.
    pub record_every: usize,
    pub store_iterates: bool,
    /// Maintain metric diagnostics on non-adaptive methods too.
    pub shadow_metric: bool,
    /// Start point override (defaults to the origin).
    pub start: Option<Vec<f64>>,
}

impl ExperimentConfig {
    /// Builds the problem with any domain override applied.
    pub fn build_problem(&self) -> Result<Problem, ConfigError> {
        let mut problem = self.problem.build();
        if let Some(domain) = &self.domain {
            if domain.dim() != problem.dim {
                return Err(field_err(
                    "domain",
                    format!("dimension {} does not match problem dimension {}", domain.dim(), problem.dim),
                ));
            }
            problem = problem.with_domain(domain.clone());
        }
        Ok(problem)
    }

    pub fn start_point(&self, dim: usize) -> Option<Point> {
        self.start.as_ref().map(|coords| {
            assert_eq!(coords.len(), dim, "start dimension mismatch");
            Point::new(coords.clone())
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(field_err(
                "schema_version",
                format!("unsupported version {} (expected {})", self.schema_version, SCHEMA_VERSION),
            ));
        }
        if !positive(self.solver.eta) {
            return Err(field_err("solver.eta", "step size must be positive"));
        }
        if !positive(self.solver.delta) {
            return Err(field_err("solver.delta", "metric floor must be positive"));
        }
        match &self.solver.schedule {
            MinibatchSchedule::Constant { m } if *m < 1 => {
                return Err(field_err("solver.m", "batch size must be >= 1"));
            }
            MinibatchSchedule::EpsilonScaled { epsilon } if !positive(*epsilon) => {
                return Err(field_err("solver.epsilon", "epsilon must be positive"));
            }
            _ => {}
        }
        if self.n_seeds < 1 {
            return Err(field_err("n_seeds", "need at least one seed"));
        }
        if self.record_every < 1 {
            return Err(field_err("record_every", "stride must be >= 1"));
        }
        match &self.problem {
            ProblemSpec::Bilinear { dim, .. } => {
                if *dim < 2 || dim % 2 != 0 {
                    return Err(field_err("problem.dim", "bilinear needs an even dimension >= 2"));
                }
            }
            ProblemSpec::StronglyMonotoneQuadratic { dim, gamma, .. } => {
                if *dim < 1 {
                    return Err(field_err("problem.dim", "dimension must be >= 1"));
                }
                if !positive(*gamma) {
                    return Err(field_err("problem.gamma", "gamma must be positive"));
                }
            }
            ProblemSpec::CosineWindow { .. } => {}
            ProblemSpec::SparseGradient { dim, active_fraction, noise_std } => {
                if *dim < 1 {
                    return Err(field_err("problem.dim", "dimension must be >= 1"));
                }
                if !positive(*active_fraction) || *active_fraction > 1.0 {
                    return Err(field_err("problem.active_fraction", "must lie in (0, 1]"));
                }
                if !nonnegative(*noise_std) {
                    return Err(field_err("problem.noise_std", "must be nonnegative"));
                }
            }
        }
        let sigma_field = match &self.problem {
            ProblemSpec::Bilinear { sigma, .. }
            | ProblemSpec::StronglyMonotoneQuadratic { sigma, .. }
            | ProblemSpec::CosineWindow { sigma } => *sigma,
            ProblemSpec::SparseGradient { .. } => 0.0,
        };
        if !nonnegative(sigma_field) {
            return Err(field_err("problem.sigma", "must be nonnegative"));
        }

        let problem = self.build_problem()?;
        if self.method == Method::Oadagrad && !problem.domain.is_all_space() {
            return Err(field_err("method", "oadagrad requires unconstrained domain"));
        }
        if let Some(start) = &self.start {
            if start.len() != problem.dim {
                return Err(field_err(
                    "start",
                    format!("start has {} coordinates, problem has {}", start.len(), problem.dim),
                ));
            }
            if start.iter().any(|c| !c.is_finite()) {
                return Err(field_err("start", "coordinates must be finite"));
            }
            if !problem.domain.contains(&Point::new(start.clone()), 1e-9) {
                return Err(field_err("start", "start point lies outside the domain"));
            }
        }
        Ok(())
    }
}

/// Raw `key = value` lines with their line numbers, consumed as fields
/// are extracted so leftovers can be reported as unknown keys.
struct KeyMap {
    entries: BTreeMap<String, (String, usize)>,
}

impl KeyMap {
    fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(ConfigError::Parse {
                    line,
                    msg: format!("expected 'key = value', got '{trimmed}'"),
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(ConfigError::Parse { line, msg: "empty key".into() });
            }
            if entries.insert(key.clone(), (value, line)).is_some() {
                return Err(ConfigError::Parse { line, msg: format!("duplicate key '{key}'") });
            }
        }
        Ok(KeyMap { entries })
    }

    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.remove(key)
    }

    fn take_required(&mut self, key: &str) -> Result<(String, usize), ConfigError> {
        self.take(key)
            .ok_or_else(|| field_err(key, "missing required key"))
    }

    fn take_f64(&mut self, key: &str, default: Option<f64>) -> Result<f64, ConfigError> {
        match self.take(key) {
            Some((v, line)) => v.parse::<f64>().map_err(|_| ConfigError::Parse {
                line,
                msg: format!("'{key}' is not a number: '{v}'"),
            }),
            None => default.ok_or_else(|| field_err(key, "missing required key")),
        }
    }

    fn take_usize(&mut self, key: &str, default: Option<usize>) -> Result<usize, ConfigError> {
        match self.take(key) {
            Some((v, line)) => v.parse::<usize>().map_err(|_| ConfigError::Parse {
                line,
                msg: format!("'{key}' is not a nonnegative integer: '{v}'"),
            }),
            None => default.ok_or_else(|| field_err(key, "missing required key")),
        }
    }

    fn take_u64(&mut self, key: &str, default: Option<u64>) -> Result<u64, ConfigError> {
        match self.take(key) {
            Some((v, line)) => v.parse::<u64>().map_err(|_| ConfigError::Parse {
                line,
                msg: format!("'{key}' is not a nonnegative integer: '{v}'"),
            }),
            None => default.ok_or_else(|| field_err(key, "missing required key")),
        }
    }

    fn take_bool(&mut self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.take(key) {
            Some((v, line)) => match v.as_str() {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(ConfigError::Parse {
                    line,
                    msg: format!("'{key}' must be true or false, got '{v}'"),
                }),
            },
            None => Ok(default),
        }
    }

    fn take_f64_list(&mut self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.take(key) {
            Some((v, line)) => {
                let parsed: Result<Vec<f64>, _> =
                    v.split(',').map(|p| p.trim().parse::<f64>()).collect();
                parsed.map(Some).map_err(|_| ConfigError::Parse {
                    line,
                    msg: format!("'{key}' is not a comma-separated list of numbers"),
                })
            }
            None => Ok(None),
        }
    }

    fn reject_leftovers(&self) -> Result<(), ConfigError> {
        if let Some((key, (_, line))) = self.entries.iter().next() {
            return Err(ConfigError::Parse { line: *line, msg: format!("unknown key '{key}'") });
        }
        Ok(())
    }
}

fn parse_domain(map: &mut KeyMap, prefix: &str) -> Result<Option<Domain>, ConfigError> {
    let Some((kind, line)) = map.take(&format!("{prefix}.kind")) else {
        return Ok(None);
    };
    let dom = match kind.as_str() {
        "all_space" => {
            let dim = map.take_usize(&format!("{prefix}.dim"), None)?;
            if dim < 1 {
                return Err(field_err(&format!("{prefix}.dim"), "must be >= 1"));
            }
            Domain::all_space(dim)
        }
        "box" => {
            let lower = map
                .take_f64_list(&format!("{prefix}.lower"))?
                .ok_or_else(|| field_err(&format!("{prefix}.lower"), "missing required key"))?;
            let upper = map
                .take_f64_list(&format!("{prefix}.upper"))?
                .ok_or_else(|| field_err(&format!("{prefix}.upper"), "missing required key"))?;
            if lower.len() != upper.len() {
                return Err(field_err(prefix, "box bounds have different lengths"));
            }
            Domain::box_bounds(lower, upper)
                .map_err(|e| field_err(prefix, e.to_string()))?
        }
        "ball" => {
            let center = map
                .take_f64_list(&format!("{prefix}.center"))?
                .ok_or_else(|| field_err(&format!("{prefix}.center"), "missing required key"))?;
            let radius = map.take_f64(&format!("{prefix}.radius"), None)?;
            Domain::ball(center, radius).map_err(|e| field_err(prefix, e.to_string()))?
        }
        "product" => {
            let parts = map.take_usize(&format!("{prefix}.parts"), None)?;
            let mut components = Vec::with_capacity(parts);
            for i in 0..parts {
                let sub = format!("{prefix}.part{i}");
                let part = parse_domain(map, &sub)?
                    .ok_or_else(|| field_err(&format!("{sub}.kind"), "missing required key"))?;
                components.push(part);
            }
            Domain::product(components).map_err(|e| field_err(prefix, e.to_string()))?
        }
        other => {
            return Err(ConfigError::Parse {
                line,
                msg: format!("unknown domain kind '{other}'"),
            })
        }
    };
    Ok(Some(dom))
}

fn serialize_domain(out: &mut String, prefix: &str, domain: &Domain) {
    use std::fmt::Write;
    match domain {
        Domain::AllSpace { dim } => {
            writeln!(out, "{prefix}.kind = all_space").unwrap();
            writeln!(out, "{prefix}.dim = {dim}").unwrap();
        }
        Domain::Box { lower, upper } => {
            writeln!(out, "{prefix}.kind = box").unwrap();
            writeln!(out, "{prefix}.lower = {}", join_floats(lower)).unwrap();
            writeln!(out, "{prefix}.upper = {}", join_floats(upper)).unwrap();
        }
        Domain::Ball { center, radius } => {
            writeln!(out, "{prefix}.kind = ball").unwrap();
            writeln!(out, "{prefix}.center = {}", join_floats(center)).unwrap();
            writeln!(out, "{prefix}.radius = {radius}").unwrap();
        }
        Domain::Product { parts } => {
            writeln!(out, "{prefix}.kind = product").unwrap();
            writeln!(out, "{prefix}.parts = {}", parts.len()).unwrap();
            for (i, part) in parts.iter().enumerate() {
                serialize_domain(out, &format!("{prefix}.part{i}"), part);
            }
        }
    }
}

fn join_floats(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Parses and validates one experiment config.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut map = KeyMap::from_text(text)?;

    let schema_version = map.take_usize("schema_version", Some(SCHEMA_VERSION as usize))? as u32;

    let (name, name_line) = map.take_required("problem.name")?;
    let problem = match name.as_str() {
        "bilinear" => ProblemSpec::Bilinear {
            dim: map.take_usize("problem.dim", None)?,
            scale: map.take_f64("problem.scale", Some(1.0))?,
            sigma: map.take_f64("problem.sigma", Some(0.0))?,
        },
        "strongly_monotone_quadratic" => ProblemSpec::StronglyMonotoneQuadratic {
            dim: map.take_usize("problem.dim", None)?,
            gamma: map.take_f64("problem.gamma", Some(1.0))?,
            sigma: map.take_f64("problem.sigma", Some(0.0))?,
        },
        "cosine_window" => ProblemSpec::CosineWindow {
            sigma: map.take_f64("problem.sigma", Some(0.0))?,
        },
        "sparse_gradient" => ProblemSpec::SparseGradient {
            dim: map.take_usize("problem.dim", None)?,
            active_fraction: map.take_f64("problem.active_fraction", Some(0.05))?,
            noise_std: map.take_f64("problem.noise_std", Some(0.2))?,
        },
        other => {
            return Err(ConfigError::Parse {
                line: name_line,
                msg: format!("unknown problem name '{other}'"),
            })
        }
    };

    let domain = parse_domain(&mut map, "domain")?;

    let (method_raw, method_line) = map.take_required("method")?;
    let method: Method = method_raw.parse().map_err(|e| ConfigError::Parse {
        line: method_line,
        msg: e,
    })?;

    let eta = map.take_f64("solver.eta", None)?;
    let schedule = match map.take("solver.schedule") {
        None => MinibatchSchedule::Constant { m: map.take_usize("solver.m", Some(1))? },
        Some((kind, line)) => match kind.as_str() {
            "constant" => MinibatchSchedule::Constant { m: map.take_usize("solver.m", Some(1))? },
            "linear_growth" => MinibatchSchedule::LinearGrowth,
            "epsilon_scaled" => MinibatchSchedule::EpsilonScaled {
                epsilon: map.take_f64("solver.epsilon", None)?,
            },
            other => {
                return Err(ConfigError::Parse {
                    line,
                    msg: format!("unknown schedule '{other}'"),
                })
            }
        },
    };
    let solver = SolverConfig {
        eta,
        schedule,
        n_iters: map.take_usize("solver.n_iters", None)?,
        delta: map.take_f64("solver.delta", Some(1.0))?,
        seed: map.take_u64("solver.seed", None)?,
    };

    let config = ExperimentConfig {
        schema_version,
        problem,
        domain,
        method,
        solver,
        n_seeds: map.take_usize("n_seeds", Some(1))?,
        output_dir: PathBuf::from(
            map.take("output_dir").map(|(v, _)| v).unwrap_or_else(|| "runs".into()),
        ),
        record_every: map.take_usize("record_every", Some(1))?,
        store_iterates: map.take_bool("store_iterates", false)?,
        shadow_metric: map.take_bool("shadow_metric", false)?,
        start: map.take_f64_list("start")?,
    };
    map.reject_leftovers()?;
    config.validate()?;
    Ok(config)
}

/// Serializes a config so that `parse_config` reproduces it exactly.
pub fn serialize_config(config: &ExperimentConfig) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    writeln!(out, "schema_version = {}", config.schema_version).unwrap();
    writeln!(out, "problem.name = {}", config.problem.name()).unwrap();
    match &config.problem {
        ProblemSpec::Bilinear { dim, scale, sigma } => {
            writeln!(out, "problem.dim = {dim}").unwrap();
            writeln!(out, "problem.scale = {scale}").unwrap();
            writeln!(out, "problem.sigma = {sigma}").unwrap();
        }
        ProblemSpec::StronglyMonotoneQuadratic { dim, gamma, sigma } => {
            writeln!(out, "problem.dim = {dim}").unwrap();
            writeln!(out, "problem.gamma = {gamma}").unwrap();
            writeln!(out, "problem.sigma = {sigma}").unwrap();
        }
        ProblemSpec::CosineWindow { sigma } => {
            writeln!(out, "problem.sigma = {sigma}").unwrap();
        }
        ProblemSpec::SparseGradient { dim, active_fraction, noise_std } => {
            writeln!(out, "problem.dim = {dim}").unwrap();
            writeln!(out, "problem.active_fraction = {active_fraction}").unwrap();
            writeln!(out, "problem.noise_std = {noise_std}").unwrap();
        }
    }
    if let Some(domain) = &config.domain {
        serialize_domain(&mut out, "domain", domain);
    }
    writeln!(out, "method = {}", config.method.as_str()).unwrap();
    writeln!(out, "solver.eta = {}", config.solver.eta).unwrap();
    match &config.solver.schedule {
        MinibatchSchedule::Constant { m } => {
            writeln!(out, "solver.schedule = constant").unwrap();
            writeln!(out, "solver.m = {m}").unwrap();
        }
        MinibatchSchedule::LinearGrowth => {
            writeln!(out, "solver.schedule = linear_growth").unwrap();
        }
        MinibatchSchedule::EpsilonScaled { epsilon } => {
            writeln!(out, "solver.schedule = epsilon_scaled").unwrap();
            writeln!(out, "solver.epsilon = {epsilon}").unwrap();
        }
    }
    writeln!(out, "solver.n_iters = {}", config.solver.n_iters).unwrap();
    writeln!(out, "solver.delta = {}", config.solver.delta).unwrap();
    writeln!(out, "solver.seed = {}", config.solver.seed).unwrap();
    writeln!(out, "n_seeds = {}", config.n_seeds).unwrap();
    writeln!(out, "output_dir = {}", config.output_dir.display()).unwrap();
    writeln!(out, "record_every = {}", config.record_every).unwrap();
    writeln!(out, "store_iterates = {}", config.store_iterates).unwrap();
    writeln!(out, "shadow_metric = {}", config.shadow_metric).unwrap();
    if let Some(start) = &config.start {
        writeln!(out, "start = {}", join_floats(start)).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MINIMAL: &str = "\
problem.name = bilinear
problem.dim = 2
method = osg
solver.eta = 0.05
solver.n_iters = 100
solver.seed = 7
";

    #[test]
    fn minimal_config_parses_with_defaults() {
        let config = parse_config(MINIMAL).unwrap();
        assert_eq!(config.method, Method::Osg);
        assert_eq!(config.n_seeds, 1);
        assert_eq!(config.record_every, 1);
        assert_eq!(config.solver.schedule, MinibatchSchedule::Constant { m: 1 });
        assert_eq!(config.schema_version, SCHEMA_VERSION);
    }

    #[test]
    fn oadagrad_with_constrained_domain_is_rejected() {
        let text = "\
problem.name = bilinear
problem.dim = 2
domain.kind = box
domain.lower = -1,-1
domain.upper = 1,1
method = oadagrad
solver.eta = 0.05
solver.n_iters = 10
solver.seed = 1
";
        let err = parse_config(text).unwrap_err();
        assert!(err.to_string().contains("oadagrad requires unconstrained domain"), "{err}");
    }

    #[test]
    fn nonpositive_eta_is_rejected() {
        let text = MINIMAL.replace("solver.eta = 0.05", "solver.eta = 0");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("solver.eta"), "{err}");
    }

    #[test]
    fn unknown_problem_name_is_rejected() {
        let text = MINIMAL.replace("bilinear", "rosenbrock");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("unknown problem name"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_line_numbers() {
        let text = format!("{MINIMAL}mystery = 1\n");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("unknown key 'mystery'"), "{err}");
        assert!(err.to_string().contains("line 7"), "{err}");
    }

    #[test]
    fn infeasible_start_is_rejected() {
        let text = "\
problem.name = bilinear
problem.dim = 2
domain.kind = ball
domain.center = 0,0
domain.radius = 1
method = osg
solver.eta = 0.05
solver.n_iters = 10
solver.seed = 1
start = 5,5
";
        let err = parse_config(text).unwrap_err();
        assert!(err.to_string().contains("outside the domain"), "{err}");
    }

    #[test]
    fn product_domain_round_trips() {
        let text = "\
problem.name = strongly_monotone_quadratic
problem.dim = 3
problem.gamma = 2
domain.kind = product
domain.parts = 2
domain.part0.kind = box
domain.part0.lower = -1
domain.part0.upper = 1
domain.part1.kind = ball
domain.part1.center = 0,0
domain.part1.radius = 2
method = osg
solver.eta = 0.05
solver.n_iters = 10
solver.seed = 1
";
        let config = parse_config(text).unwrap();
        assert_eq!(config.domain.as_ref().unwrap().dim(), 3);
        let round = parse_config(&serialize_config(&config)).unwrap();
        assert_eq!(round, config);
    }

    fn spec_strategy() -> impl Strategy<Value = ProblemSpec> {
        prop_oneof![
            (1usize..5, 0.1f64..3.0, 0.0f64..2.0).prop_map(|(h, scale, sigma)| {
                ProblemSpec::Bilinear { dim: 2 * h, scale, sigma }
            }),
            (1usize..9, 0.1f64..3.0, 0.0f64..2.0).prop_map(|(dim, gamma, sigma)| {
                ProblemSpec::StronglyMonotoneQuadratic { dim, gamma, sigma }
            }),
            (0.0f64..2.0).prop_map(|sigma| ProblemSpec::CosineWindow { sigma }),
            (2usize..60, 0.01f64..1.0, 0.0f64..0.5).prop_map(|(dim, f, ns)| {
                ProblemSpec::SparseGradient { dim, active_fraction: f, noise_std: ns }
            }),
        ]
    }

    fn schedule_strategy() -> impl Strategy<Value = MinibatchSchedule> {
        prop_oneof![
            (1usize..100).prop_map(|m| MinibatchSchedule::Constant { m }),
            Just(MinibatchSchedule::LinearGrowth),
            (0.01f64..1.0).prop_map(|epsilon| MinibatchSchedule::EpsilonScaled { epsilon }),
        ]
    }

    proptest! {
        #[test]
        fn serialize_parse_round_trip(
            spec in spec_strategy(),
            schedule in schedule_strategy(),
            eta in 1e-4f64..1.0,
            delta in 1e-2f64..10.0,
            n_iters in 0usize..5000,
            seed in any::<u64>(),
            n_seeds in 1usize..64,
            record_every in 1usize..50,
            store_iterates in any::<bool>(),
            shadow_metric in any::<bool>(),
        ) {
            let config = ExperimentConfig {
                schema_version: SCHEMA_VERSION,
                problem: spec,
                domain: None,
                method: Method::Osg,
                solver: SolverConfig { eta, schedule, n_iters, delta, seed },
                n_seeds,
                output_dir: PathBuf::from("runs/prop"),
                record_every,
                store_iterates,
                shadow_metric,
                start: None,
            };
            let round = parse_config(&serialize_config(&config)).unwrap();
            prop_assert_eq!(round, config);
        }
    }
}
