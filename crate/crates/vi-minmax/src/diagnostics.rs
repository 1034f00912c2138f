//! Residual and stationarity measurement, a-priori rate-bound
//! calculators, cumulative-gradient growth tracking, and the power-law
//! exponent estimator used to quantify gradient sparsity.
//!
//! Residuals are always computed with the analytic mean operator, never a
//! stochastic sample: the convergence guarantees bound expectations of
//! mean-operator quantities, and keeping estimator noise out of the
//! diagnostics makes the bound checks sharp.

use serde::{Deserialize, Serialize};

use crate::linalg::{DiagonalMetric, Point};
use crate::problem::Problem;
use crate::solver::{Method, MinibatchSchedule, SolverConfig, SolverState};

/// Per-iteration diagnostics of a solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    /// Squared natural residual `r_eta^2(z_k)` under the mean operator.
    pub r_eta_sq: f64,
    /// `|T(z_k)|^2` (mean operator).
    pub t_norm_sq: f64,
    /// `|T(z_k)|^2_{H_{k-1}^{-1}}`, present iff metric tracking is active.
    pub h_inv_norm_sq: Option<f64>,
    /// Cumulative single-sample oracle invocations.
    pub oracle_calls: u64,
    /// `sum_i s_{k,i}`: cumulative per-coordinate gradient norms.
    pub growth_sum: f64,
    /// `|x_k|`, tracked to report the empirical trajectory bound.
    pub x_norm: f64,
}

/// Run summary; means are over the completed iterations `k >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub steps: usize,
    pub mean_r_sq: f64,
    pub mean_t_norm_sq: f64,
    pub mean_h_inv_norm_sq: Option<f64>,
    pub total_oracle_calls: u64,
    /// `2 max_k |x_k|`: the empirical stand-in for the trajectory bound D.
    pub empirical_d: f64,
    pub growth_sum_final: f64,
    /// Per-coordinate growth exponent, when metric tracking was active.
    pub alpha_coord: Option<CoordAlphaReport>,
    /// Oracle samples observed outside the problem's declared a.s. bounds.
    pub bound_violations: u64,
}

/// Everything one seeded solver run produces.
#[derive(Debug, Clone)]
pub struct Trace {
    pub problem: String,
    pub method: Method,
    pub config: SolverConfig,
    /// Set when the run hit the divergence guard; the records stop at the
    /// last finite iterate.
    pub failed: bool,
    pub records: Vec<IterationRecord>,
    /// Full `z` trajectory when iterate storage was requested.
    pub iterates: Option<Vec<Point>>,
    pub summary: TraceSummary,
}

impl Trace {
    /// The growth-sum series over completed iterations `k >= 1`.
    pub fn growth_series(&self) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.k >= 1)
            .map(|r| r.growth_sum)
            .collect()
    }
}

/// Assembles the diagnostics of the current iterate. `metric_before` must
/// be the metric the step was taken under (`H_{k-1}`), so the weighted
/// norm matches the quantity the adaptive guarantee bounds.
pub fn record_iteration(
    problem: &Problem,
    state: &SolverState,
    config: &SolverConfig,
    metric_before: Option<&DiagonalMetric>,
    oracle_calls: u64,
) -> IterationRecord {
    let t = problem.mean(&state.z);
    let r_eta = problem.domain.natural_residual(&t, &state.z, config.eta);
    IterationRecord {
        k: state.k,
        r_eta_sq: r_eta * r_eta,
        t_norm_sq: t.norm_sq(),
        h_inv_norm_sq: metric_before.map(|h| h.inv_norm(&t).powi(2)),
        oracle_calls,
        growth_sum: state.growth_sum(),
        x_norm: state.x.norm(),
    }
}

/// `sum_{k=0..N} sigma^2 / m_k` for a minibatch schedule.
pub fn noise_schedule_sum(sigma: f64, schedule: &MinibatchSchedule, n: usize) -> f64 {
    (0..=n)
        .map(|k| sigma * sigma / schedule.batch_size(k) as f64)
        .sum()
}

/// A-priori bound on the mean squared operator norm
/// `(1/N) sum_k E|T(z_k)|^2` of an unconstrained OSG run:
/// `8 |x_0 - x_*|^2 / (eta^2 N) + (100/N) sum_{k=0..N} sigma^2 / m_k`.
pub fn osg_operator_norm_bound(
    x0_dist_sq: f64,
    eta: f64,
    n: usize,
    sigma: f64,
    schedule: &MinibatchSchedule,
) -> f64 {
    assert!(n >= 1 && eta > 0.0 && x0_dist_sq >= 0.0 && sigma >= 0.0);
    8.0 * x0_dist_sq / (eta * eta * n as f64)
        + 100.0 / n as f64 * noise_schedule_sum(sigma, schedule, n)
}

/// A-priori bound on the mean squared natural residual
/// `(1/N) sum_k E[r_eta^2(z_k)]` of an OSG run (the constrained form):
/// `8 |x_0 - x_*|^2 / N + (100 eta^2 / N) sum_{k=0..N} sigma^2 / m_k`.
pub fn osg_residual_bound(
    x0_dist_sq: f64,
    eta: f64,
    n: usize,
    sigma: f64,
    schedule: &MinibatchSchedule,
) -> f64 {
    assert!(n >= 1 && eta > 0.0 && x0_dist_sq >= 0.0 && sigma >= 0.0);
    8.0 * x0_dist_sq / n as f64
        + 100.0 * eta * eta / n as f64 * noise_schedule_sum(sigma, schedule, n)
}

/// A-priori bound on the mean squared inverse-metric-weighted operator
/// norm `(1/N) sum_k E|T(z_k)|^2_{H_{k-1}^{-1}}` of an OAdagrad run with
/// constant minibatch `m`, trajectory bound `D`, growth exponent `alpha`,
/// and a.s. sample bounds `G` (l2) and `delta` (l-infinity, also the
/// metric floor):
/// `8 D^2 delta^2 (1 + d (N-1)^alpha) / (eta^2 N)
///  + 100 (sigma^2/m + d (2 delta^2 N^alpha + G^2)) / N`.
#[allow(clippy::too_many_arguments)]
pub fn oadagrad_rate_bound(
    d_bound: f64,
    delta: f64,
    dim: usize,
    alpha: f64,
    eta: f64,
    n: usize,
    sigma: f64,
    m: usize,
    g_bound: f64,
) -> f64 {
    assert!(n >= 2, "the adaptive bound needs N >= 2");
    assert!(eta > 0.0 && delta > 0.0 && m >= 1 && dim >= 1);
    assert!((0.0..=1.0).contains(&alpha));
    let d = dim as f64;
    let nf = n as f64;
    let first = 8.0 * d_bound * d_bound * delta * delta * (1.0 + d * (nf - 1.0).powf(alpha))
        / (eta * eta * nf);
    let second = 100.0
        * (sigma * sigma / m as f64
            + d * (2.0 * delta * delta * nf.powf(alpha) + g_bound * g_bound))
        / nf;
    first + second
}

/// Cumulative growth series of a gradient stream:
/// `out[k-1] = sum_i sqrt(sum_{j<=k} g_{j,i}^2)`.
pub fn cumulative_growth(grads: &[Point]) -> Vec<f64> {
    assert!(!grads.is_empty());
    let dim = grads[0].dim();
    let mut s_sq = vec![0.0f64; dim];
    let mut out = Vec::with_capacity(grads.len());
    for g in grads {
        assert_eq!(g.dim(), dim, "dimension mismatch");
        for (acc, gi) in s_sq.iter_mut().zip(g.iter()) {
            *acc += gi * gi;
        }
        out.push(s_sq.iter().map(|v| v.sqrt()).sum());
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    /// Tightest `c k^alpha` curve that upper-bounds the series, anchored
    /// at the first element; alpha found by binary search. The canonical
    /// fit.
    UpperBound,
    /// Least-squares fit of `ln y` against `ln k`. Secondary mode.
    LogLog,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub alpha_hat: f64,
    pub c_hat: f64,
    /// Worst relative deviation between the series and the fitted curve.
    pub max_rel_residual: f64,
    pub mode: FitMode,
}

/// Fits the growth exponent of a positive nondecreasing series with the
/// canonical anchored upper-bound mode: `c = series[0]` and the smallest
/// `alpha` in `[0, 1]` (binary search to 1e-3) such that
/// `series[k] <= c k^alpha (1 + 1e-6)` for all k (1-based).
pub fn estimate_alpha(series: &[f64]) -> GrowthFit {
    estimate_alpha_with_mode(series, FitMode::UpperBound)
}

pub fn estimate_alpha_with_mode(series: &[f64], mode: FitMode) -> GrowthFit {
    assert!(series.len() >= 10, "growth fit needs at least 10 points");
    assert!(series[0] > 0.0, "growth fit needs a positive series");
    for w in series.windows(2) {
        assert!(
            w[1] > 0.0 && w[1] >= w[0] * (1.0 - 1e-12),
            "growth fit needs a positive nondecreasing series"
        );
    }
    let c = series[0];
    match mode {
        FitMode::UpperBound => {
            let feasible = |alpha: f64| {
                series
                    .iter()
                    .enumerate()
                    .all(|(i, y)| *y <= c * ((i + 1) as f64).powf(alpha) * (1.0 + 1e-6))
            };
            let alpha_hat = if feasible(0.0) {
                0.0
            } else if !feasible(1.0) {
                1.0
            } else {
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                while hi - lo > 1e-3 {
                    let mid = 0.5 * (lo + hi);
                    if feasible(mid) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                hi
            };
            GrowthFit {
                alpha_hat,
                c_hat: c,
                max_rel_residual: max_rel_residual(series, c, alpha_hat),
                mode,
            }
        }
        FitMode::LogLog => {
            let n = series.len() as f64;
            let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
            for (i, y) in series.iter().enumerate() {
                let x = ((i + 1) as f64).ln();
                let ly = y.ln();
                sx += x;
                sy += ly;
                sxx += x * x;
                sxy += x * ly;
            }
            let denom = n * sxx - sx * sx;
            let slope = if denom.abs() < 1e-300 {
                0.0
            } else {
                (n * sxy - sx * sy) / denom
            };
            let alpha_hat = slope.clamp(0.0, 1.0);
            let c_hat = ((sy - alpha_hat * sx) / n).exp();
            GrowthFit {
                alpha_hat,
                c_hat,
                max_rel_residual: max_rel_residual(series, c_hat, alpha_hat),
                mode,
            }
        }
    }
}

fn max_rel_residual(series: &[f64], c: f64, alpha: f64) -> f64 {
    series
        .iter()
        .enumerate()
        .map(|(i, y)| {
            let fit = c * ((i + 1) as f64).powf(alpha);
            (y - fit).abs() / fit
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoordAlphaReport {
    /// Smallest exponent covering every coordinate's cumulative norm.
    pub alpha: f64,
    /// False when even `alpha = 1` cannot cover the observed growth
    /// (some cumulative norm already exceeds the anchor `delta` at k=1,
    /// or outgrows `delta * k`).
    pub feasible: bool,
}

/// Online tracker of the per-coordinate growth exponent along a run: the
/// smallest `alpha` with `|g_{1:k,i}| <= delta k^alpha` for every
/// coordinate i and every completed iteration k. The initialization
/// batch is excluded; the hypothesis concerns the per-step gradients.
/// O(d) memory, exact: the smallest feasible exponent is the running
/// maximum of `ln(s_{k,i}/delta) / ln(k)`.
#[derive(Debug, Clone)]
pub struct CoordAlphaTracker {
    delta: f64,
    s_sq: Vec<f64>,
    alpha: f64,
    feasible: bool,
}

impl CoordAlphaTracker {
    pub fn new(delta: f64, dim: usize) -> Self {
        assert!(delta > 0.0 && dim >= 1);
        CoordAlphaTracker {
            delta,
            s_sq: vec![0.0; dim],
            alpha: 0.0,
            feasible: true,
        }
    }

    /// Folds in the batch gradient of iteration `k` (1-based).
    pub fn observe(&mut self, k: usize, g: &Point) {
        assert!(k >= 1);
        assert_eq!(g.dim(), self.s_sq.len(), "dimension mismatch");
        let ln_k = (k as f64).ln();
        for (acc, gi) in self.s_sq.iter_mut().zip(g.iter()) {
            *acc += gi * gi;
            let s = acc.sqrt();
            if s <= self.delta {
                continue;
            }
            if k == 1 {
                self.feasible = false;
            } else {
                self.alpha = self.alpha.max((s / self.delta).ln() / ln_k);
            }
        }
    }

    pub fn report(&self) -> CoordAlphaReport {
        if !self.feasible || self.alpha > 1.0 {
            CoordAlphaReport { alpha: 1.0, feasible: false }
        } else {
            CoordAlphaReport { alpha: self.alpha, feasible: true }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyCheck {
    /// `sum_k |g_k|^2_{H_k^{-1}}` with `H_k = delta I + diag(s_k)` and
    /// `s_k` covering the stream through `g_k`.
    pub lhs: f64,
    /// `2 sum_i |g_{1:N,i}|`.
    pub rhs: f64,
    pub holds: bool,
}

/// The adaptive-energy inequality behind the adaptive guarantee: the
/// metric-weighted energy of a gradient stream never exceeds twice the
/// final cumulative row norms. Holds because each step's metric already
/// contains the step's own gradient.
pub fn adaptive_energy_check(grads: &[Point], delta: f64) -> EnergyCheck {
    assert!(!grads.is_empty(), "energy check needs a nonempty stream");
    assert!(delta > 0.0);
    let dim = grads[0].dim();
    let mut s_sq = vec![0.0f64; dim];
    let mut lhs = 0.0;
    for g in grads {
        assert_eq!(g.dim(), dim, "dimension mismatch");
        let mut term = 0.0;
        for (acc, gi) in s_sq.iter_mut().zip(g.iter()) {
            *acc += gi * gi;
            term += gi * gi / (delta + acc.sqrt());
        }
        lhs += term;
    }
    let rhs = 2.0 * s_sq.iter().map(|v| v.sqrt()).sum::<f64>();
    EnergyCheck { lhs, rhs, holds: lhs <= rhs * (1.0 + 1e-9) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    #[test]
    fn operator_norm_bound_examples() {
        // Zero noise: 8 * 2 * 81 / 100 = 12.96.
        let b = osg_operator_norm_bound(2.0, 1.0 / 9.0, 100, 0.0, &MinibatchSchedule::constant(1));
        assert_relative_eq!(b, 12.96, max_relative = 1e-12);

        // Pure noise with unit batches: (100/100) * sum_{k=0..100} 1 = 101.
        let b = osg_operator_norm_bound(0.0, 1.0 / 9.0, 100, 1.0, &MinibatchSchedule::constant(1));
        assert_relative_eq!(b, 101.0, max_relative = 1e-12);

        // Linearly growing batches turn the sum into a harmonic number;
        // direct summation gives (100/1e4) * H_10001 = 0.0978771.
        let n = 10_000;
        let b = osg_operator_norm_bound(0.0, 1.0 / 9.0, n, 1.0, &MinibatchSchedule::LinearGrowth);
        let harmonic: f64 = (0..=n).map(|k| 1.0 / (k + 1) as f64).sum();
        assert_relative_eq!(b, 100.0 / n as f64 * harmonic, max_relative = 1e-12);
        assert_relative_eq!(b, 0.09787706026045348, max_relative = 1e-12);
    }

    #[test]
    fn residual_bound_is_eta_squared_times_operator_bound() {
        let schedule = MinibatchSchedule::LinearGrowth;
        let (eta, n, sigma) = (1.0 / 9.0, 2000, 1.0);
        let a = osg_residual_bound(2.0, eta, n, sigma, &schedule);
        let b = osg_operator_norm_bound(2.0, eta, n, sigma, &schedule);
        assert_relative_eq!(a, eta * eta * b, max_relative = 1e-12);
    }

    #[test]
    fn adaptive_bound_examples() {
        let b = oadagrad_rate_bound(1.0, 1.0, 1, 0.0, 1.0 / 9.0, 100, 0.0, 1, 1.0);
        assert_relative_eq!(b, 15.96, max_relative = 1e-12);

        // Monotone in alpha.
        let lo = oadagrad_rate_bound(1.0, 1.0, 4, 0.0, 0.1, 50, 1.0, 2, 1.0);
        let hi = oadagrad_rate_bound(1.0, 1.0, 4, 0.5, 0.1, 50, 1.0, 2, 1.0);
        assert!(lo < hi);

        // Decays like N^(alpha-1) once the growth terms dominate.
        let alpha = 0.5;
        let b3 = oadagrad_rate_bound(1.0, 1.0, 100, alpha, 1.0 / 9.0, 1_000, 0.0, 1, 1.0);
        let b6 = oadagrad_rate_bound(1.0, 1.0, 100, alpha, 1.0 / 9.0, 1_000_000, 0.0, 1, 1.0);
        let rate = (b6 / b3).ln() / 1e3f64.ln();
        assert!((rate - (alpha - 1.0)).abs() < 0.05, "rate {rate}");
    }

    #[test]
    fn growth_series_examples() {
        let zeros = vec![Point::zeros(3); 20];
        assert!(cumulative_growth(&zeros).iter().all(|v| *v == 0.0));

        let ones = vec![Point::new(vec![1.0]); 100];
        let series = cumulative_growth(&ones);
        for (i, v) in series.iter().enumerate() {
            assert_relative_eq!(*v, ((i + 1) as f64).sqrt(), max_relative = 1e-14);
        }

        // Alternating unit coordinates: after 2k steps each row holds
        // sqrt(k).
        let alternating: Vec<Point> = (0..100)
            .map(|j| {
                if j % 2 == 0 {
                    Point::new(vec![1.0, 0.0])
                } else {
                    Point::new(vec![0.0, 1.0])
                }
            })
            .collect();
        let series = cumulative_growth(&alternating);
        for k in 1..=50usize {
            assert_relative_eq!(series[2 * k - 1], 2.0 * (k as f64).sqrt(), max_relative = 1e-14);
        }
    }

    #[test]
    fn alpha_estimator_on_synthetic_power_laws() {
        for alpha in [0.0, 0.2, 0.3, 0.5] {
            let series: Vec<f64> = (1..=2000).map(|k| 3.0 * (k as f64).powf(alpha)).collect();
            let fit = estimate_alpha(&series);
            assert!(
                (fit.alpha_hat - alpha).abs() <= 0.002,
                "alpha {alpha}: fitted {}",
                fit.alpha_hat
            );
            assert_relative_eq!(fit.c_hat, 3.0, max_relative = 1e-12);
            assert!(fit.max_rel_residual <= 2e-2);
        }

        let constant = vec![5.0; 50];
        assert_eq!(estimate_alpha(&constant).alpha_hat, 0.0);

        let sqrt_series: Vec<f64> = (1..=1000).map(|k| (k as f64).sqrt()).collect();
        let fit = estimate_alpha(&sqrt_series);
        assert!((fit.alpha_hat - 0.5).abs() <= 0.002, "fitted {}", fit.alpha_hat);
    }

    #[test]
    fn alpha_estimator_is_scale_equivariant() {
        let series: Vec<f64> = (1..=500).map(|k| 2.0 * (k as f64).powf(0.3)).collect();
        let scaled: Vec<f64> = series.iter().map(|v| 7.5 * v).collect();
        let a = estimate_alpha(&series);
        let b = estimate_alpha(&scaled);
        assert_eq!(a.alpha_hat, b.alpha_hat);
        assert_relative_eq!(b.c_hat, 7.5 * a.c_hat, max_relative = 1e-12);
    }

    #[test]
    fn loglog_mode_recovers_exponent_too() {
        let series: Vec<f64> = (1..=500).map(|k| 2.0 * (k as f64).powf(0.3)).collect();
        let fit = estimate_alpha_with_mode(&series, FitMode::LogLog);
        assert!((fit.alpha_hat - 0.3).abs() <= 1e-6);
        assert_relative_eq!(fit.c_hat, 2.0, max_relative = 1e-6);
    }

    #[test]
    #[should_panic(expected = "nondecreasing")]
    fn alpha_estimator_rejects_decreasing_series() {
        let mut series: Vec<f64> = (1..=20).map(|k| k as f64).collect();
        series[10] = 0.5;
        estimate_alpha(&series);
    }

    #[test]
    #[should_panic(expected = "positive series")]
    fn alpha_estimator_rejects_nonpositive_series() {
        let series = vec![0.0; 20];
        estimate_alpha(&series);
    }

    #[test]
    fn coordinate_alpha_tracker_matches_direct_computation() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
        let dim = 6;
        let delta = 1.0;
        let grads: Vec<Point> = (0..200)
            .map(|_| Point::from_fn(dim, |_| rng.gen_range(-0.4..0.4)))
            .collect();

        let mut tracker = CoordAlphaTracker::new(delta, dim);
        for (j, g) in grads.iter().enumerate() {
            tracker.observe(j + 1, g);
        }
        let report = tracker.report();
        assert!(report.feasible);

        // Direct check: the reported alpha covers every (k, i) pair and
        // shrinking it by any margin breaks coverage somewhere.
        let mut s_sq = vec![0.0; dim];
        let mut needed: f64 = 0.0;
        for (j, g) in grads.iter().enumerate() {
            let k = (j + 1) as f64;
            for (acc, gi) in s_sq.iter_mut().zip(g.iter()) {
                *acc += gi * gi;
                let s = acc.sqrt();
                if s > delta && j > 0 {
                    needed = needed.max((s / delta).ln() / k.ln());
                }
            }
        }
        assert_relative_eq!(report.alpha, needed, max_relative = 1e-12);
    }

    #[test]
    fn coordinate_alpha_tracker_flags_oversized_first_gradient() {
        let mut tracker = CoordAlphaTracker::new(0.5, 2);
        tracker.observe(1, &Point::new(vec![0.9, 0.0]));
        assert!(!tracker.report().feasible);
    }

    #[test]
    fn energy_check_examples() {
        // Single gradient: g^2 / (delta + |g|) <= 2 |g|.
        let g = 3.0f64;
        let check = adaptive_energy_check(&[Point::new(vec![g])], 1.0);
        assert_relative_eq!(check.lhs, g * g / (1.0 + g), max_relative = 1e-14);
        assert_relative_eq!(check.rhs, 2.0 * g, max_relative = 1e-14);
        assert!(check.holds);

        // Unit stream: sum_k 1/(1 + sqrt(k)) against 2 sqrt(100); direct
        // summation gives 14.8960689.
        let ones = vec![Point::new(vec![1.0]); 100];
        let check = adaptive_energy_check(&ones, 1.0);
        let direct: f64 = (1..=100).map(|k| 1.0 / (1.0 + (k as f64).sqrt())).sum();
        assert_relative_eq!(check.lhs, direct, max_relative = 1e-12);
        assert_relative_eq!(check.lhs, 14.896068861345288, max_relative = 1e-12);
        assert_relative_eq!(check.rhs, 20.0, max_relative = 1e-14);
        assert!(check.holds);
    }

    #[test]
    fn energy_inequality_holds_on_random_streams() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(8);
        for trial in 0..1000 {
            let dim = rng.gen_range(1..=50);
            let n = rng.gen_range(1..=1000);
            let delta = [0.1, 1.0, 10.0][trial % 3];
            let grads: Vec<Point> = (0..n)
                .map(|_| {
                    Point::from_fn(dim, |_| {
                        let z: f64 = rng.sample(rand_distr::StandardNormal);
                        z
                    })
                })
                .collect();
            let check = adaptive_energy_check(&grads, delta);
            assert!(
                check.holds,
                "trial {trial}: lhs {} rhs {}",
                check.lhs,
                check.rhs
            );
        }
    }

    #[test]
    fn iteration_records_tie_residual_to_operator_norm() {
        use crate::problem::OracleStream;
        use crate::solver::{init, osg_step, RunOptions};

        let problem = Problem::bilinear(2, 1.0).with_noise_sigma(0.5);
        let config = SolverConfig::new(0.1, MinibatchSchedule::constant(1), 20, 2.0, 4);
        let mut stream = OracleStream::new(config.seed);
        let mut state = init(
            &problem,
            &config,
            Method::Osg,
            Some(Point::new(vec![1.0, 1.0])),
            &mut stream,
        );
        let shadow = DiagonalMetric::isotropic(config.delta, 2);
        for _ in 0..20 {
            osg_step(&mut state, &problem, &config, &mut stream).unwrap();
            let rec = record_iteration(&problem, &state, &config, Some(&shadow), stream.calls());
            // Unconstrained: r_eta^2 = eta^2 |T|^2.
            assert_relative_eq!(
                rec.r_eta_sq,
                config.eta * config.eta * rec.t_norm_sq,
                max_relative = 1e-12
            );
            // Isotropic metric: |T|^2_{H^-1} = |T|^2 / delta.
            assert_relative_eq!(
                rec.h_inv_norm_sq.unwrap(),
                rec.t_norm_sq / config.delta,
                max_relative = 1e-12
            );
        }

        // At the solution both vanish.
        let origin = Point::zeros(2);
        let t = problem.mean(&origin);
        assert_eq!(t.norm_sq(), 0.0);
        assert_eq!(problem.domain.natural_residual(&t, &origin, config.eta), 0.0);
        let _ = RunOptions::default();
    }

    #[test]
    fn weighted_norms_shrink_as_the_metric_grows() {
        // Along any gradient stream the inverse-metric norm of a fixed
        // vector is nonincreasing in k.
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(15);
        let dim = 5;
        let v = Point::from_fn(dim, |_| rng.gen_range(-2.0..2.0));
        let mut metric = DiagonalMetric::isotropic(0.3, dim);
        let mut prev = metric.inv_norm(&v);
        for _ in 0..300 {
            let g = Point::from_fn(dim, |_| rng.gen_range(-1.0..1.0));
            metric.accumulate(&g);
            let cur = metric.inv_norm(&v);
            assert!(cur <= prev * (1.0 + 1e-12));
            prev = cur;
        }
    }
}
