//! The iterative methods: optimistic stochastic gradient (OSG), its
//! single-sequence unconstrained form, the stochastic extragradient
//! baseline, and the adaptively preconditioned OAdagrad, plus minibatch
//! schedules and trace-driven iterate selection.
//!
//! OSG keeps an ancillary sequence `x_k` and a primary sequence `z_k`
//! and draws exactly one minibatch per step, at `z_k`; the previous
//! batch is memorized and reused for the look-ahead. Extragradient
//! replaces the memorized batch with a fresh one at `x_{k-1}`, which
//! doubles the per-step oracle cost. OAdagrad preconditions both
//! updates with the inverse of `H_{k-1} = delta I + diag(s_{k-1})`,
//! where `s` accumulates per-coordinate gradient norms; after the step
//! the freshly drawn batch is folded in, so `H_k` reflects the history
//! through step k.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{record_iteration, CoordAlphaTracker, Trace, TraceSummary};
use crate::linalg::{DiagonalMetric, Point};
use crate::problem::{OracleStream, Problem};

/// Iterate norms past this are treated as divergence of a misconfigured
/// run rather than legitimate progress.
const DIVERGENCE_NORM: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Osg,
    Extragradient,
    Oadagrad,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Osg => "osg",
            Method::Extragradient => "extragradient",
            Method::Oadagrad => "oadagrad",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "osg" => Ok(Method::Osg),
            "extragradient" => Ok(Method::Extragradient),
            "oadagrad" => Ok(Method::Oadagrad),
            other => Err(format!("unknown method '{other}'")),
        }
    }
}

/// Minibatch size as a function of the iteration counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MinibatchSchedule {
    Constant { m: usize },
    /// `m_k = k + 1`.
    LinearGrowth,
    /// `m_k = ceil(1 / epsilon^2)`, the accuracy-scaled constant size.
    EpsilonScaled { epsilon: f64 },
}

impl MinibatchSchedule {
    pub fn constant(m: usize) -> Self {
        assert!(m >= 1, "batch size must be >= 1");
        MinibatchSchedule::Constant { m }
    }

    pub fn epsilon_scaled(epsilon: f64) -> Self {
        assert!(epsilon > 0.0 && epsilon.is_finite(), "epsilon must be positive");
        MinibatchSchedule::EpsilonScaled { epsilon }
    }

    /// Batch size at iteration `k` (the initialization batch is `k = 0`).
    pub fn batch_size(&self, k: usize) -> usize {
        match self {
            MinibatchSchedule::Constant { m } => (*m).max(1),
            MinibatchSchedule::LinearGrowth => k + 1,
            MinibatchSchedule::EpsilonScaled { epsilon } => {
                (1.0 / (epsilon * epsilon)).ceil().max(1.0) as usize
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Step size eta. Bound-checking runs additionally require
    /// `eta <= 1/(9L)` (OSG) or `eta <= delta/(9L)` (OAdagrad).
    pub eta: f64,
    pub schedule: MinibatchSchedule,
    /// Number of iterations N. Zero produces an initialization-only trace.
    pub n_iters: usize,
    /// Metric floor delta (OAdagrad and shadow-metric diagnostics).
    pub delta: f64,
    pub seed: u64,
}

impl SolverConfig {
    pub fn new(eta: f64, schedule: MinibatchSchedule, n_iters: usize, delta: f64, seed: u64) -> Self {
        assert!(eta > 0.0 && eta.is_finite(), "step size must be positive");
        assert!(delta > 0.0 && delta.is_finite(), "delta must be positive");
        SolverConfig { eta, schedule, n_iters, delta, seed }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("iterate diverged at step {k} (non-finite or norm > 1e12); check eta against 1/(9L)")]
    Diverged { k: usize },
}

/// Mutable state of a solver run between steps.
///
/// `x` is the ancillary sequence, `z` the primary sequence on which the
/// oracle is evaluated, `g_prev` the memorized minibatch gradient. For
/// OAdagrad `metric` holds the active preconditioner `H_{k-1}`; for the
/// other methods it is an optional shadow used only for diagnostics.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub method: Method,
    pub x: Point,
    pub z: Point,
    pub g_prev: Point,
    pub metric: Option<DiagonalMetric>,
    pub k: usize,
    /// Per-coordinate squared l2 norms of the drawn batch gradients,
    /// including the initialization batch when the method draws one.
    s_cum_sq: Vec<f64>,
}

impl SolverState {
    /// `sum_i s_{k,i}`: the growth statistic of the gradient history.
    pub fn growth_sum(&self) -> f64 {
        self.s_cum_sq.iter().map(|v| v.sqrt()).sum()
    }

    pub fn row_norms(&self) -> Vec<f64> {
        self.s_cum_sq.iter().map(|v| v.sqrt()).collect()
    }

    fn absorb_gradient(&mut self, g: &Point) {
        for (acc, gi) in self.s_cum_sq.iter_mut().zip(g.iter()) {
            *acc += gi * gi;
        }
        if let Some(metric) = &mut self.metric {
            *metric = DiagonalMetric::new(
                metric.delta(),
                self.s_cum_sq.iter().map(|v| v.sqrt()).collect(),
            );
        }
    }

    fn check_finite(&self) -> Result<(), SolverError> {
        let ok = self.x.is_finite()
            && self.z.is_finite()
            && self.x.norm() <= DIVERGENCE_NORM
            && self.z.norm() <= DIVERGENCE_NORM;
        if ok {
            Ok(())
        } else {
            Err(SolverError::Diverged { k: self.k })
        }
    }
}

/// Initializes a run at `start` (default: the origin, which must then lie
/// in the domain). OSG and OAdagrad consume the `k = 0` minibatch here,
/// so the first step can reuse it; extragradient draws nothing.
pub fn init(
    problem: &Problem,
    config: &SolverConfig,
    method: Method,
    start: Option<Point>,
    stream: &mut OracleStream,
) -> SolverState {
    let start = start.unwrap_or_else(|| Point::zeros(problem.dim));
    assert_eq!(start.dim(), problem.dim, "dimension mismatch");
    assert!(
        problem.domain.contains(&start, 1e-9),
        "start point must lie in the domain"
    );
    if method == Method::Oadagrad {
        assert!(
            problem.domain.is_all_space(),
            "oadagrad requires unconstrained domain"
        );
    }
    let mut state = SolverState {
        method,
        x: start.clone(),
        z: start.clone(),
        g_prev: Point::zeros(problem.dim),
        metric: (method == Method::Oadagrad)
            .then(|| DiagonalMetric::isotropic(config.delta, problem.dim)),
        k: 0,
        s_cum_sq: vec![0.0; problem.dim],
    };
    if method != Method::Extragradient {
        let m0 = config.schedule.batch_size(0);
        let g0 = stream.sample_minibatch(problem, &start, m0);
        for (acc, gi) in state.s_cum_sq.iter_mut().zip(g0.iter()) {
            *acc += gi * gi;
        }
        state.g_prev = g0;
    }
    state
}

pub fn osg_init(
    problem: &Problem,
    config: &SolverConfig,
    start: Option<Point>,
    stream: &mut OracleStream,
) -> SolverState {
    init(problem, config, Method::Osg, start, stream)
}

/// One OSG step: look ahead with the memorized batch, draw the single
/// fresh batch at `z_k`, then update the ancillary point with it.
pub fn osg_step(
    state: &mut SolverState,
    problem: &Problem,
    config: &SolverConfig,
    stream: &mut OracleStream,
) -> Result<(), SolverError> {
    assert_eq!(state.method, Method::Osg, "state was initialized for another method");
    state.k += 1;
    let z = problem
        .domain
        .project(&state.x.add_scaled(&state.g_prev, -config.eta));
    let m = config.schedule.batch_size(state.k);
    let g = stream.sample_minibatch(problem, &z, m);
    let x = problem.domain.project(&state.x.add_scaled(&g, -config.eta));
    state.absorb_gradient(&g);
    state.z = z;
    state.x = x;
    state.g_prev = g;
    state.check_finite()
}

/// One stochastic extragradient step: a fresh batch at `x_{k-1}` for the
/// look-ahead and a second at `z_k` for the update — twice the oracle
/// cost of OSG per iteration.
pub fn extragradient_step(
    state: &mut SolverState,
    problem: &Problem,
    config: &SolverConfig,
    stream: &mut OracleStream,
) -> Result<(), SolverError> {
    assert_eq!(
        state.method,
        Method::Extragradient,
        "state was initialized for another method"
    );
    state.k += 1;
    let m = config.schedule.batch_size(state.k);
    let g_look = stream.sample_minibatch(problem, &state.x, m);
    let z = problem
        .domain
        .project(&state.x.add_scaled(&g_look, -config.eta));
    let g = stream.sample_minibatch(problem, &z, m);
    let x = problem.domain.project(&state.x.add_scaled(&g, -config.eta));
    state.absorb_gradient(&g);
    state.z = z;
    state.x = x;
    state.g_prev = g;
    state.check_finite()
}

/// One OAdagrad step: both updates preconditioned by `H_{k-1}^{-1}`,
/// then the fresh batch is folded into the metric to form `H_k`.
pub fn oadagrad_step(
    state: &mut SolverState,
    problem: &Problem,
    config: &SolverConfig,
    stream: &mut OracleStream,
) -> Result<(), SolverError> {
    assert_eq!(
        state.method,
        Method::Oadagrad,
        "state was initialized for another method"
    );
    state.k += 1;
    let metric = state.metric.as_ref().expect("oadagrad state carries a metric");
    let z = state
        .x
        .add_scaled(&metric.inv_apply(&state.g_prev), -config.eta);
    let m = config.schedule.batch_size(state.k);
    let g = stream.sample_minibatch(problem, &z, m);
    let x = state.x.add_scaled(&metric.inv_apply(&g), -config.eta);
    state.absorb_gradient(&g);
    state.z = z;
    state.x = x;
    state.g_prev = g;
    state.check_finite()
}

/// Dispatches to the step routine matching the state's method.
pub fn step(
    state: &mut SolverState,
    problem: &Problem,
    config: &SolverConfig,
    stream: &mut OracleStream,
) -> Result<(), SolverError> {
    match state.method {
        Method::Osg => osg_step(state, problem, config, stream),
        Method::Extragradient => extragradient_step(state, problem, config, stream),
        Method::Oadagrad => oadagrad_step(state, problem, config, stream),
    }
}

/// The single-sequence unconstrained update
/// `z_{k+1} = z_k - 2 eta g_k + eta g_{k-1}`. Fed the same gradient
/// stream, its trajectory coincides with the two-sequence OSG form on
/// `R^d`.
pub fn osg_unconstrained_step(z: &Point, prev_grad: &Point, new_grad: &Point, eta: f64) -> Point {
    z.add_scaled(new_grad, -2.0 * eta).add_scaled(prev_grad, eta)
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Start point; defaults to the origin.
    pub start: Option<Point>,
    /// Trace thinning stride (the final iteration is always recorded).
    pub record_every: usize,
    /// Keep the full `z` trajectory (needed for iterate selection).
    pub store_iterates: bool,
    /// Maintain the diagonal metric diagnostics for non-adaptive methods.
    pub shadow_metric: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            start: None,
            record_every: 1,
            store_iterates: false,
            shadow_metric: false,
        }
    }
}

/// Executes `n_iters` steps and assembles the per-iteration diagnostics
/// into a [`Trace`]. Deterministic given the seed. Residual summaries
/// are accumulated online over every iteration regardless of trace
/// thinning; a divergent step truncates the trace and sets the failure
/// flag.
pub fn run(problem: &Problem, config: &SolverConfig, method: Method, opts: &RunOptions) -> Trace {
    assert!(opts.record_every >= 1, "record_every must be >= 1");
    let mut stream = OracleStream::new(config.seed);
    let mut state = init(problem, config, method, opts.start.clone(), &mut stream);
    if opts.shadow_metric && state.metric.is_none() {
        state.metric = Some(DiagonalMetric::isotropic(config.delta, problem.dim));
    }
    let mut alpha_tracker = state
        .metric
        .is_some()
        .then(|| CoordAlphaTracker::new(config.delta, problem.dim));

    let mut records = vec![record_iteration(
        problem,
        &state,
        config,
        state.metric.as_ref(),
        stream.calls(),
    )];
    let mut iterates = opts.store_iterates.then(Vec::new);

    let mut failed = false;
    let mut steps = 0usize;
    let mut sum_r_sq = 0.0;
    let mut sum_t_sq = 0.0;
    let mut sum_h_inv = 0.0;
    let mut max_x_norm = state.x.norm();

    for _ in 0..config.n_iters {
        let metric_before = state.metric.clone();
        if step(&mut state, problem, config, &mut stream).is_err() {
            failed = true;
            break;
        }
        if let Some(tracker) = &mut alpha_tracker {
            tracker.observe(state.k, &state.g_prev);
        }
        let rec = record_iteration(problem, &state, config, metric_before.as_ref(), stream.calls());
        steps += 1;
        sum_r_sq += rec.r_eta_sq;
        sum_t_sq += rec.t_norm_sq;
        sum_h_inv += rec.h_inv_norm_sq.unwrap_or(0.0);
        max_x_norm = max_x_norm.max(rec.x_norm);
        if state.k.is_multiple_of(opts.record_every) || state.k == config.n_iters {
            records.push(rec);
        }
        if let Some(v) = &mut iterates {
            v.push(state.z.clone());
        }
    }

    let denom = steps.max(1) as f64;
    let summary = TraceSummary {
        steps,
        mean_r_sq: sum_r_sq / denom,
        mean_t_norm_sq: sum_t_sq / denom,
        mean_h_inv_norm_sq: alpha_tracker.is_some().then_some(sum_h_inv / denom),
        total_oracle_calls: stream.calls(),
        empirical_d: 2.0 * max_x_norm,
        growth_sum_final: state.growth_sum(),
        alpha_coord: alpha_tracker.map(|t| t.report()),
        bound_violations: stream.bound_violations(),
    };
    Trace {
        problem: problem.name.clone(),
        method,
        config: config.clone(),
        failed,
        records,
        iterates,
        summary,
    }
}

/// Uniform draw of an iterate index from `{1, ..., N}` together with the
/// stored `z_tau`. The trace must have been produced with
/// `store_iterates` on and at least one completed step.
pub fn select_random_iterate(trace: &Trace, rng: &mut impl Rng) -> (usize, Point) {
    let iterates = trace
        .iterates
        .as_ref()
        .expect("iterate selection needs a trace with stored iterates");
    assert!(!iterates.is_empty(), "iterate selection needs at least one step");
    let tau = rng.gen_range(1..=iterates.len());
    (tau, iterates[tau - 1].clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Domain;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn bilinear_setup(eta: f64) -> (Problem, SolverConfig) {
        let problem = Problem::bilinear(2, 1.0);
        let config = SolverConfig::new(eta, MinibatchSchedule::constant(1), 10, 1.0, 7);
        (problem, config)
    }

    fn start_11() -> Option<Point> {
        Some(Point::new(vec![1.0, 1.0]))
    }

    #[test]
    fn init_examples() {
        let (problem, config) = bilinear_setup(0.1);
        let mut stream = OracleStream::new(config.seed);
        let state = osg_init(&problem, &config, None, &mut stream);
        assert_eq!(state.x, Point::zeros(2));
        assert_eq!(state.z, Point::zeros(2));

        let mut stream = OracleStream::new(config.seed);
        let state = osg_init(&problem, &config, start_11(), &mut stream);
        assert_eq!(state.x, Point::new(vec![1.0, 1.0]));
        // Noiseless oracle: the memorized batch is the mean at the start.
        assert_eq!(state.g_prev, Point::new(vec![1.0, -1.0]));
        assert_eq!(stream.calls(), 1);
    }

    #[test]
    #[should_panic(expected = "start point must lie in the domain")]
    fn init_rejects_infeasible_start() {
        let problem = Problem::bilinear(2, 1.0)
            .with_domain(Domain::ball(vec![5.0, 5.0], 1.0).unwrap());
        let config = SolverConfig::new(0.1, MinibatchSchedule::constant(1), 1, 1.0, 0);
        let mut stream = OracleStream::new(0);
        osg_init(&problem, &config, None, &mut stream);
    }

    #[test]
    fn osg_hand_rollout() {
        let (problem, config) = bilinear_setup(0.1);
        let mut stream = OracleStream::new(config.seed);
        let mut state = osg_init(&problem, &config, start_11(), &mut stream);

        osg_step(&mut state, &problem, &config, &mut stream).unwrap();
        assert_relative_eq!(state.z[0], 0.9, max_relative = 1e-14);
        assert_relative_eq!(state.z[1], 1.1, max_relative = 1e-14);
        assert_relative_eq!(state.x[0], 0.89, max_relative = 1e-14);
        assert_relative_eq!(state.x[1], 1.09, max_relative = 1e-14);

        osg_step(&mut state, &problem, &config, &mut stream).unwrap();
        assert_relative_eq!(state.z[0], 0.78, max_relative = 1e-14);
        assert_relative_eq!(state.z[1], 1.18, max_relative = 1e-14);
    }

    #[test]
    fn extragradient_hand_rollout() {
        let (problem, config) = bilinear_setup(0.1);
        let mut stream = OracleStream::new(config.seed);
        let mut state = init(&problem, &config, Method::Extragradient, start_11(), &mut stream);
        assert_eq!(stream.calls(), 0);

        extragradient_step(&mut state, &problem, &config, &mut stream).unwrap();
        // First step coincides with OSG because z0 = x0.
        assert_relative_eq!(state.z[0], 0.9, max_relative = 1e-14);
        assert_relative_eq!(state.x[0], 0.89, max_relative = 1e-14);
        assert_relative_eq!(state.x[1], 1.09, max_relative = 1e-14);

        extragradient_step(&mut state, &problem, &config, &mut stream).unwrap();
        // z2 = x1 - 0.1 T(x1) departs from the OSG trajectory.
        assert_relative_eq!(state.z[0], 0.781, max_relative = 1e-13);
        assert_relative_eq!(state.z[1], 1.179, max_relative = 1e-13);
    }

    #[test]
    fn oadagrad_hand_rollout() {
        let problem = Problem::bilinear(2, 1.0);
        let config = SolverConfig::new(0.1, MinibatchSchedule::constant(1), 10, 1.0, 7);
        let mut stream = OracleStream::new(config.seed);
        let mut state = init(&problem, &config, Method::Oadagrad, start_11(), &mut stream);

        // Step 1 runs under H0 = I, identical to OSG.
        oadagrad_step(&mut state, &problem, &config, &mut stream).unwrap();
        assert_relative_eq!(state.z[0], 0.9, max_relative = 1e-14);
        assert_relative_eq!(state.z[1], 1.1, max_relative = 1e-14);
        assert_relative_eq!(state.x[0], 0.89, max_relative = 1e-14);
        assert_relative_eq!(state.x[1], 1.09, max_relative = 1e-14);

        // H1 = I + diag(s1), s1 = (sqrt(2.21), sqrt(1.81)).
        let metric = state.metric.as_ref().unwrap();
        assert_relative_eq!(metric.s()[0], 2.21f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(metric.s()[1], 1.81f64.sqrt(), max_relative = 1e-14);

        oadagrad_step(&mut state, &problem, &config, &mut stream).unwrap();
        let h1 = (1.0 + 2.21f64.sqrt(), 1.0 + 1.81f64.sqrt());
        assert_relative_eq!(state.z[0], 0.89 - 0.1 * 1.1 / h1.0, max_relative = 1e-13);
        assert_relative_eq!(state.z[1], 1.09 + 0.1 * 0.9 / h1.1, max_relative = 1e-13);
        assert_relative_eq!(state.z[0], 0.845763, max_relative = 1e-6);
        assert_relative_eq!(state.z[1], 1.128373, max_relative = 1e-6);
    }

    #[test]
    fn zero_operator_is_a_fixed_point() {
        let problem = Problem::scaled_identity(2, 0.0);
        let config = SolverConfig::new(0.5, MinibatchSchedule::constant(1), 5, 1.0, 3);
        let mut stream = OracleStream::new(config.seed);
        let mut state = osg_init(&problem, &config, start_11(), &mut stream);
        for _ in 0..5 {
            osg_step(&mut state, &problem, &config, &mut stream).unwrap();
        }
        assert_eq!(state.x, Point::new(vec![1.0, 1.0]));
        assert_eq!(state.z, Point::new(vec![1.0, 1.0]));
    }

    #[test]
    fn single_sequence_form_examples() {
        let z = Point::new(vec![1.0, 2.0]);
        let g = Point::new(vec![0.5, -0.5]);
        // Equal gradients collapse to a plain gradient step.
        let next = osg_unconstrained_step(&z, &g, &g, 0.1);
        let plain = z.add_scaled(&g, -0.1);
        assert_relative_eq!(next[0], plain[0], max_relative = 1e-15);
        assert_relative_eq!(next[1], plain[1], max_relative = 1e-15);
        // eta = 0 leaves z unchanged.
        assert_eq!(osg_unconstrained_step(&z, &g, &g, 0.0), z);

        // Reproduces the two-sequence rollout: z2 from z1, g0, g1.
        let z1 = Point::new(vec![0.9, 1.1]);
        let g0 = Point::new(vec![1.0, -1.0]);
        let g1 = Point::new(vec![1.1, -0.9]);
        let z2 = osg_unconstrained_step(&z1, &g0, &g1, 0.1);
        assert_relative_eq!(z2[0], 0.78, max_relative = 1e-14);
        assert_relative_eq!(z2[1], 1.18, max_relative = 1e-14);
    }

    #[test]
    fn single_sequence_matches_two_sequence_over_long_noisy_run() {
        let problem = Problem::bilinear(10, 1.0).with_noise_sigma(1.0);
        let config = SolverConfig::new(1.0 / 9.0, MinibatchSchedule::constant(1), 1000, 1.0, 99);
        let mut stream = OracleStream::new(config.seed);
        let start = Point::constant(10, (0.2f64).sqrt());
        let mut state = osg_init(&problem, &config, Some(start.clone()), &mut stream);

        let mut grads = vec![state.g_prev.clone()];
        let mut z_two = Vec::new();
        for _ in 0..config.n_iters {
            osg_step(&mut state, &problem, &config, &mut stream).unwrap();
            grads.push(state.g_prev.clone());
            z_two.push(state.z.clone());
        }

        // Replay the identical recorded stream through the one-line form.
        let mut z = start.add_scaled(&grads[0], -config.eta);
        let mut max_rel = 0.0f64;
        for k in 1..=config.n_iters {
            let diff = z.distance(&z_two[k - 1]);
            max_rel = max_rel.max(diff / z_two[k - 1].norm().max(1e-300));
            if k < config.n_iters {
                z = osg_unconstrained_step(&z, &grads[k - 1], &grads[k], config.eta);
            }
        }
        assert!(max_rel <= 1e-10, "max relative deviation {max_rel}");
    }

    #[test]
    fn oracle_economy_is_exact() {
        let problem = Problem::bilinear(2, 1.0).with_noise_sigma(1.0);
        let n = 500;
        let config = SolverConfig::new(0.05, MinibatchSchedule::LinearGrowth, n, 1.0, 5);

        let mut stream = OracleStream::new(config.seed);
        let mut state = osg_init(&problem, &config, start_11(), &mut stream);
        for _ in 0..n {
            osg_step(&mut state, &problem, &config, &mut stream).unwrap();
        }
        let expected: u64 = 1 + (1..=n as u64).map(|k| k + 1).sum::<u64>();
        assert_eq!(stream.calls(), expected);

        let mut stream = OracleStream::new(config.seed);
        let mut state = init(&problem, &config, Method::Extragradient, start_11(), &mut stream);
        for _ in 0..n {
            extragradient_step(&mut state, &problem, &config, &mut stream).unwrap();
        }
        let expected: u64 = (1..=n as u64).map(|k| 2 * (k + 1)).sum();
        assert_eq!(stream.calls(), expected);
    }

    #[test]
    fn frozen_metric_oadagrad_reproduces_osg() {
        // With the metric pinned at delta I, the preconditioner rescales
        // the step uniformly; delta = 2 keeps the arithmetic exact.
        let problem = Problem::bilinear(4, 1.0).with_noise_sigma(0.7);
        let delta = 2.0;
        let eta_ada = 0.2;
        let n = 50;
        let start = Some(Point::new(vec![1.0, -0.5, 0.25, 0.75]));

        let ada_config = SolverConfig::new(eta_ada, MinibatchSchedule::constant(2), n, delta, 13);
        let mut ada_stream = OracleStream::new(13);
        let mut ada = init(&problem, &ada_config, Method::Oadagrad, start.clone(), &mut ada_stream);

        let osg_config = SolverConfig::new(eta_ada / delta, MinibatchSchedule::constant(2), n, 1.0, 13);
        let mut osg_stream = OracleStream::new(13);
        let mut plain = osg_init(&problem, &osg_config, start, &mut osg_stream);

        for _ in 0..n {
            ada.metric = Some(DiagonalMetric::isotropic(delta, 4));
            oadagrad_step(&mut ada, &problem, &ada_config, &mut ada_stream).unwrap();
            osg_step(&mut plain, &problem, &osg_config, &mut osg_stream).unwrap();
            assert_eq!(ada.z, plain.z);
            assert_eq!(ada.x, plain.x);
        }
    }

    #[test]
    fn metric_row_norms_never_decrease() {
        let problem = Problem::bilinear(4, 1.0).with_noise_sigma(1.0);
        let config = SolverConfig::new(0.05, MinibatchSchedule::constant(1), 100, 1.0, 21);
        let mut stream = OracleStream::new(config.seed);
        let mut state = init(&problem, &config, Method::Oadagrad, start_11().map(|_| Point::constant(4, 0.5)), &mut stream);
        let mut prev = state.row_norms();
        for _ in 0..100 {
            oadagrad_step(&mut state, &problem, &config, &mut stream).unwrap();
            let cur = state.row_norms();
            for (p, c) in prev.iter().zip(&cur) {
                assert!(c >= p);
            }
            prev = cur;
        }
    }

    #[test]
    fn constrained_iterates_stay_feasible() {
        let domain = Domain::box_bounds(vec![-0.5, -0.5], vec![0.5, 0.5]).unwrap();
        let problem = Problem::bilinear(2, 1.0)
            .with_noise_sigma(1.0)
            .with_domain(domain.clone());
        let config = SolverConfig::new(0.1, MinibatchSchedule::constant(2), 200, 1.0, 31);
        for method in [Method::Osg, Method::Extragradient] {
            let mut stream = OracleStream::new(config.seed);
            let mut state = init(&problem, &config, method, None, &mut stream);
            for _ in 0..config.n_iters {
                step(&mut state, &problem, &config, &mut stream).unwrap();
                assert!(domain.contains(&state.x, 1e-9));
                assert!(domain.contains(&state.z, 1e-9));
            }
        }
    }

    #[test]
    fn divergence_guard_flags_oversized_steps() {
        let problem = Problem::strongly_monotone_quadratic(2, 1.0);
        // eta far above 2/gamma makes the ancillary recursion explode.
        let config = SolverConfig::new(1e3, MinibatchSchedule::constant(1), 2000, 1.0, 1);
        let trace = run(&problem, &config, Method::Osg, &RunOptions {
            start: start_11(),
            ..RunOptions::default()
        });
        assert!(trace.failed);
        assert!(trace.summary.steps < 2000);
    }

    #[test]
    fn schedule_batch_sizes() {
        assert_eq!(MinibatchSchedule::constant(4).batch_size(0), 4);
        assert_eq!(MinibatchSchedule::constant(4).batch_size(999), 4);
        assert_eq!(MinibatchSchedule::LinearGrowth.batch_size(0), 1);
        assert_eq!(MinibatchSchedule::LinearGrowth.batch_size(41), 42);
        // ceil(1/eps^2), constant in k.
        let eps = MinibatchSchedule::epsilon_scaled(0.1);
        assert_eq!(eps.batch_size(0), 100);
        assert_eq!(eps.batch_size(123), 100);
        assert_eq!(MinibatchSchedule::epsilon_scaled(0.3).batch_size(0), 12);
    }

    #[test]
    fn trace_thinning_keeps_stride_and_final_rows() {
        let problem = Problem::bilinear(2, 1.0).with_noise_sigma(0.5);
        let config = SolverConfig::new(0.05, MinibatchSchedule::constant(1), 25, 1.0, 6);
        let opts = RunOptions { start: start_11(), record_every: 7, ..RunOptions::default() };
        let trace = run(&problem, &config, Method::Osg, &opts);
        let ks: Vec<usize> = trace.records.iter().map(|r| r.k).collect();
        assert_eq!(ks, vec![0, 7, 14, 21, 25]);
        // Summary means still cover every iteration.
        assert_eq!(trace.summary.steps, 25);
    }

    #[test]
    fn zero_iteration_run_keeps_only_the_init_record() {
        let problem = Problem::bilinear(2, 1.0);
        let config = SolverConfig::new(0.1, MinibatchSchedule::constant(1), 0, 1.0, 2);
        let trace = run(&problem, &config, Method::Osg, &RunOptions::default());
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.records[0].k, 0);
        assert!(!trace.failed);
    }

    #[test]
    fn identical_seeds_give_identical_traces() {
        let problem = Problem::bilinear(4, 1.0).with_noise_sigma(1.0);
        let config = SolverConfig::new(0.05, MinibatchSchedule::LinearGrowth, 50, 1.0, 77);
        let opts = RunOptions { start: Some(Point::constant(4, 0.5)), ..RunOptions::default() };
        let a = run(&problem, &config, Method::Osg, &opts);
        let b = run(&problem, &config, Method::Osg, &opts);
        assert_eq!(a.records.len(), b.records.len());
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.r_eta_sq.to_bits(), rb.r_eta_sq.to_bits());
            assert_eq!(ra.t_norm_sq.to_bits(), rb.t_norm_sq.to_bits());
            assert_eq!(ra.oracle_calls, rb.oracle_calls);
        }
    }

    #[test]
    fn iterate_selection_is_uniform() {
        let problem = Problem::bilinear(2, 1.0).with_noise_sigma(0.5);
        let config = SolverConfig::new(0.05, MinibatchSchedule::constant(1), 10, 1.0, 9);
        let opts = RunOptions { start: start_11(), store_iterates: true, ..RunOptions::default() };
        let trace = run(&problem, &config, Method::Osg, &opts);

        let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
        let mut counts = [0u32; 10];
        let draws = 100_000;
        for _ in 0..draws {
            let (tau, z) = select_random_iterate(&trace, &mut rng);
            assert!((1..=10).contains(&tau));
            assert_eq!(&z, &trace.iterates.as_ref().unwrap()[tau - 1]);
            counts[tau - 1] += 1;
        }
        // Multinomial concentration: 3 sigma around n/10.
        let band = 3.0 * (draws as f64 * 0.09).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 / 10.0).abs() <= band, "count {c}");
        }

        // Single-step trace always selects tau = 1, and a fixed seed is
        // reproducible.
        let config1 = SolverConfig { n_iters: 1, ..config };
        let t1 = run(&problem, &config1, Method::Osg, &opts);
        let (tau, _) = select_random_iterate(&t1, &mut rng);
        assert_eq!(tau, 1);
        let mut r1 = Xoshiro256PlusPlus::seed_from_u64(5);
        let mut r2 = Xoshiro256PlusPlus::seed_from_u64(5);
        assert_eq!(
            select_random_iterate(&trace, &mut r1).0,
            select_random_iterate(&trace, &mut r2).0
        );
    }

    #[test]
    #[should_panic(expected = "stored iterates")]
    fn iterate_selection_needs_stored_iterates() {
        let problem = Problem::bilinear(2, 1.0);
        let config = SolverConfig::new(0.1, MinibatchSchedule::constant(1), 3, 1.0, 2);
        let trace = run(&problem, &config, Method::Osg, &RunOptions::default());
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(0);
        select_random_iterate(&trace, &mut rng);
    }
}
