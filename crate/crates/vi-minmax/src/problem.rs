//! Test operators with stochastic oracles, analytic constants, known
//! solutions, and sampling-based operator-class falsifiers.
//!
//! Every problem bundles a deterministic mean operator `T`, its analytic
//! Lipschitz constant, a noise model with variance bound `sigma^2`, and,
//! when one is known, a solution of the Minty variational inequality
//! `<T(x), x - x_*> >= 0 for all x`. The classifiers in this module are
//! falsifiers, not verifiers: they search for witnesses against an
//! operator class and report `NoViolationFound` otherwise, which is
//! sampling evidence, never a proof.

use rand::Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::domain::Domain;
use crate::linalg::Point;

/// The analytic mean operator of a problem.
#[derive(Debug, Clone, PartialEq)]
pub enum Operator {
    /// `T(u, v) = scale * (v, -u)` on equal halves of the coordinates;
    /// the field of the bilinear coupling `F(u, v) = scale * <u, v>`.
    Bilinear { scale: f64 },
    /// `T(x) = gamma * x`.
    ScaledIdentity { gamma: f64 },
    /// One-dimensional `T(x) = -sin(x)` on `[0, 2*pi]` and `0` outside:
    /// the gradient of a cosine valley with flat shoulders. Solves both
    /// the Stampacchia and Minty inequalities at `pi` while failing
    /// pseudo-monotonicity.
    CosineWindow,
    /// A saturating attracting field `T(x)_i = (active/d) * amp * tanh(x_i)`
    /// whose stochastic oracle reveals only `active` coordinates per
    /// sample, on a block that rotates deterministically with the sample
    /// counter. Cyclic averaging makes the sparse samples unbiased for
    /// the attenuated mean field.
    SparseRotating { active: usize, amp: f64, noise_std: f64 },
}

/// A fully described test problem: operator, constraint set, noise model,
/// and the analytic constants the bound checkers need.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub name: String,
    pub dim: usize,
    /// Size of the minimization block of `x = (u, v)`.
    pub u_dim: usize,
    pub domain: Domain,
    pub op: Operator,
    /// Analytic Lipschitz constant of the mean operator.
    pub lipschitz_l: f64,
    /// Variance bound: `E|T(x;xi) - T(x)|^2 <= noise_sigma^2` for all x.
    pub noise_sigma: f64,
    /// A known Minty solution, when one exists.
    pub known_solution: Option<Point>,
    /// Almost-sure l2 bound on single oracle samples (6-sigma soft bound
    /// plus the operator sup; absent when the operator is unbounded).
    pub bound_g: Option<f64>,
    /// Almost-sure l-infinity bound on single oracle samples.
    pub bound_delta: Option<f64>,
    /// Certificate gamma for strong monotonicity (0 = plain monotone).
    pub strong_mono_gamma: Option<f64>,
    /// Per-coordinate interval from which classifiers draw test points.
    pub sample_lo: f64,
    pub sample_hi: f64,
}

impl Problem {
    /// Bilinear coupling on `R^d` (`d` even): `T(u, v) = scale * (v, -u)`.
    /// A skew-symmetric isometry times `scale`, so `L = |scale|` exactly,
    /// monotone, with Minty solution at the origin.
    pub fn bilinear(dim: usize, scale: f64) -> Self {
        assert!(dim >= 2 && dim.is_multiple_of(2), "bilinear problem needs even dim >= 2");
        Problem {
            name: "bilinear".into(),
            dim,
            u_dim: dim / 2,
            domain: Domain::all_space(dim),
            op: Operator::Bilinear { scale },
            lipschitz_l: scale.abs(),
            noise_sigma: 0.0,
            known_solution: Some(Point::zeros(dim)),
            bound_g: None,
            bound_delta: None,
            strong_mono_gamma: Some(0.0),
            sample_lo: -2.0,
            sample_hi: 2.0,
        }
    }

    /// `T(x) = gamma * x` with `gamma > 0`: gamma-strongly-monotone with
    /// the unique solution at the origin and `L = gamma`.
    pub fn strongly_monotone_quadratic(dim: usize, gamma: f64) -> Self {
        assert!(gamma > 0.0, "strongly monotone quadratic needs gamma > 0");
        let mut p = Self::scaled_identity(dim, gamma);
        p.name = "strongly_monotone_quadratic".into();
        p
    }

    /// `T(x) = gamma * x` for any `gamma`; negative `gamma` gives the
    /// standard non-monotone falsifier fixture `T(x) = -x`.
    pub fn scaled_identity(dim: usize, gamma: f64) -> Self {
        assert!(dim >= 1);
        Problem {
            name: "scaled_identity".into(),
            dim,
            u_dim: dim.div_ceil(2),
            domain: Domain::all_space(dim),
            op: Operator::ScaledIdentity { gamma },
            lipschitz_l: gamma.abs(),
            noise_sigma: 0.0,
            known_solution: (gamma >= 0.0).then(|| Point::zeros(dim)),
            bound_g: None,
            bound_delta: None,
            strong_mono_gamma: (gamma > 0.0).then_some(gamma),
            sample_lo: -2.0,
            sample_hi: 2.0,
        }
    }

    /// The one-dimensional cosine-valley operator: `T = -sin` on
    /// `[0, 2*pi]`, zero outside. `pi` solves the Minty inequality but the
    /// operator is not pseudo-monotone, which makes it the canonical
    /// fixture separating the two classes.
    pub fn cosine_window() -> Self {
        Problem {
            name: "cosine_window".into(),
            dim: 1,
            u_dim: 1,
            domain: Domain::all_space(1),
            op: Operator::CosineWindow,
            lipschitz_l: 1.0,
            noise_sigma: 0.0,
            known_solution: Some(Point::new(vec![std::f64::consts::PI])),
            bound_g: Some(1.0),
            bound_delta: Some(1.0),
            strong_mono_gamma: None,
            sample_lo: -1.0,
            sample_hi: 2.0 * std::f64::consts::PI + 1.0,
        }
    }

    /// A problem whose stochastic gradients have only
    /// `ceil(active_fraction * d)` nonzero coordinates per sample, on a
    /// deterministically rotating block. The per-coordinate cumulative
    /// gradient norms therefore grow strictly slower than the dense
    /// worst case, which is the regime where the adaptive solver's
    /// complexity guarantee improves on the non-adaptive one.
    pub fn sparse_gradient(dim: usize, active_fraction: f64) -> Self {
        assert!(dim >= 1);
        assert!(
            active_fraction > 0.0 && active_fraction <= 1.0,
            "active fraction must lie in (0, 1]"
        );
        let active = ((active_fraction * dim as f64).ceil() as usize).clamp(1, dim);
        // Field amplitude trades attraction speed against the sample
        // l-infinity bound; 2.5 keeps |g_hat| under a unit metric floor
        // at minibatch sizes >= 4 while the field decays well inside a
        // few-thousand-iteration run.
        let amp = 2.5;
        let noise_std = 0.2;
        let mut p = Problem {
            name: "sparse_gradient".into(),
            dim,
            u_dim: dim,
            domain: Domain::all_space(dim),
            op: Operator::SparseRotating { active, amp, noise_std },
            lipschitz_l: 0.0,
            noise_sigma: 0.0,
            known_solution: Some(Point::zeros(dim)),
            bound_g: None,
            bound_delta: None,
            strong_mono_gamma: Some(0.0),
            sample_lo: -2.0,
            sample_hi: 2.0,
        };
        p.refresh_sparse_constants();
        p
    }

    /// Sets the oracle noise level `sigma` for the additive-Gaussian
    /// problems (per-coordinate standard deviation `sigma / sqrt(d)`, so
    /// `E|noise|^2 = sigma^2` exactly).
    pub fn with_noise_sigma(mut self, sigma: f64) -> Self {
        assert!(sigma >= 0.0 && sigma.is_finite());
        assert!(
            !matches!(self.op, Operator::SparseRotating { .. }),
            "the sparse oracle derives its variance; set noise_std instead"
        );
        self.noise_sigma = sigma;
        if matches!(self.op, Operator::CosineWindow) {
            // sup |T| = 1 plus a 6-sigma soft bound on the scalar noise.
            self.bound_g = Some(1.0 + 6.0 * sigma);
            self.bound_delta = Some(1.0 + 6.0 * sigma);
        }
        self
    }

    /// Sets the per-active-coordinate noise level of the sparse oracle.
    pub fn with_sparse_noise_std(mut self, noise_std: f64) -> Self {
        assert!(noise_std >= 0.0 && noise_std.is_finite());
        match &mut self.op {
            Operator::SparseRotating { noise_std: ns, .. } => *ns = noise_std,
            _ => panic!("noise_std only applies to the sparse oracle"),
        }
        self.refresh_sparse_constants();
        self
    }

    /// Replaces the constraint set (dimension must match).
    pub fn with_domain(mut self, domain: Domain) -> Self {
        assert_eq!(domain.dim(), self.dim, "dimension mismatch");
        self.domain = domain;
        self
    }

    fn refresh_sparse_constants(&mut self) {
        if let Operator::SparseRotating { active, amp, noise_std } = self.op {
            let d = self.dim as f64;
            let frac = active as f64 / d;
            self.lipschitz_l = frac * amp;
            // Masking residual plus active-block Gaussian noise, maximized
            // over x (|tanh| <= 1 makes |phi(x)|^2 <= amp^2 d).
            self.noise_sigma = (frac * (1.0 - frac) * amp * amp * d
                + active as f64 * noise_std * noise_std)
                .sqrt();
            let per_coord = amp + 6.0 * noise_std;
            self.bound_g = Some((active as f64).sqrt() * per_coord);
            self.bound_delta = Some(per_coord);
        }
    }

    /// The deterministic first-order oracle `T(x)`.
    pub fn mean(&self, x: &Point) -> Point {
        assert_eq!(x.dim(), self.dim, "dimension mismatch");
        match &self.op {
            Operator::Bilinear { scale } => {
                let half = self.dim / 2;
                Point::from_fn(self.dim, |i| {
                    if i < half {
                        scale * x[half + i]
                    } else {
                        -scale * x[i - half]
                    }
                })
            }
            Operator::ScaledIdentity { gamma } => x.scale(*gamma),
            Operator::CosineWindow => {
                let t = x[0];
                let v = if (0.0..=2.0 * std::f64::consts::PI).contains(&t) {
                    -t.sin()
                } else {
                    0.0
                };
                Point::new(vec![v])
            }
            Operator::SparseRotating { active, amp, .. } => {
                let frac = *active as f64 / self.dim as f64;
                Point::from_fn(self.dim, |i| frac * amp * x[i].tanh())
            }
        }
    }

    /// Uniform draw from the classifier sampling box, projected into the
    /// constraint set.
    pub fn sample_point(&self, rng: &mut impl Rng) -> Point {
        let raw = Point::from_fn(self.dim, |_| rng.gen_range(self.sample_lo..self.sample_hi));
        self.domain.project(&raw)
    }
}

/// A seeded stream of single-sample stochastic oracle evaluations.
///
/// The stream owns the generator state and the call accounting; it is
/// single-owner mutable state, one stream per solver run. Identical seeds
/// replay identical sample sequences. A stream must be used with the
/// problem it was created for (the sparse oracle's rotation depends on
/// the problem's block size).
#[derive(Debug, Clone)]
pub struct OracleStream {
    rng: Xoshiro256PlusPlus,
    calls: u64,
    sample_index: u64,
    bound_violations: u64,
}

impl OracleStream {
    pub fn new(seed: u64) -> Self {
        OracleStream {
            rng: Xoshiro256PlusPlus::seed_from_u64(seed),
            calls: 0,
            sample_index: 0,
            bound_violations: 0,
        }
    }

    /// Cumulative count of single-sample oracle invocations.
    pub fn calls(&self) -> u64 {
        self.calls
    }

    /// Samples observed outside the problem's declared a.s. bounds.
    /// Oversize samples are logged, never clipped, so the oracle stays
    /// unbiased.
    pub fn bound_violations(&self) -> u64 {
        self.bound_violations
    }

    /// One draw of `T(x; xi)`.
    pub fn sample_one(&mut self, problem: &Problem, x: &Point) -> Point {
        assert_eq!(x.dim(), problem.dim, "dimension mismatch");
        self.calls += 1;
        let index = self.sample_index;
        self.sample_index += 1;

        let sample = match &problem.op {
            Operator::SparseRotating { active, amp, noise_std } => {
                let d = problem.dim;
                let start = (index as usize * active) % d;
                let mut coords = vec![0.0; d];
                for t in 0..*active {
                    let i = (start + t) % d;
                    let noise = if *noise_std > 0.0 {
                        let z: f64 = self.rng.sample(StandardNormal);
                        noise_std * z
                    } else {
                        0.0
                    };
                    coords[i] = amp * x[i].tanh() + noise;
                }
                Point::new(coords)
            }
            _ => {
                let mean = problem.mean(x);
                if problem.noise_sigma > 0.0 {
                    let std = problem.noise_sigma / (problem.dim as f64).sqrt();
                    Point::from_fn(problem.dim, |i| {
                        let z: f64 = self.rng.sample(StandardNormal);
                        mean[i] + std * z
                    })
                } else {
                    mean
                }
            }
        };

        if let Some(g) = problem.bound_g {
            if sample.norm() > g {
                self.bound_violations += 1;
            }
        } else if let Some(dl) = problem.bound_delta {
            if sample.inf_norm() > dl {
                self.bound_violations += 1;
            }
        }
        if let (Some(g), Some(dl)) = (problem.bound_g, problem.bound_delta) {
            // Counted once above via the l2 check; also catch pure
            // l-infinity excursions.
            if sample.norm() <= g && sample.inf_norm() > dl {
                self.bound_violations += 1;
            }
        }
        sample
    }

    /// Minibatch mean `(1/m) sum_i T(x; xi_i)` over `m` fresh samples;
    /// increments the call counter by `m`.
    pub fn sample_minibatch(&mut self, problem: &Problem, x: &Point, m: usize) -> Point {
        assert!(m >= 1, "minibatch size must be >= 1");
        let mut acc = self.sample_one(problem, x);
        for _ in 1..m {
            acc = acc.add(&self.sample_one(problem, x));
        }
        acc.scale(1.0 / m as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    NoViolationFound,
    Witness,
}

#[derive(Debug, Clone)]
pub struct MonotonicityWitness {
    pub x: Point,
    pub y: Point,
    /// `<T(x) - T(y), x - y>`, negative beyond tolerance.
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct MonotonicityCheck {
    pub verdict: Verdict,
    pub witness: Option<MonotonicityWitness>,
}

#[derive(Debug, Clone)]
pub struct PseudoMonotonicityWitness {
    pub x: Point,
    pub y: Point,
    /// `<T(x), y - x>` (nonnegative premise).
    pub forward: f64,
    /// `<T(y), y - x>` (violated conclusion, negative beyond tolerance).
    pub backward: f64,
}

#[derive(Debug, Clone)]
pub struct PseudoMonotonicityCheck {
    pub verdict: Verdict,
    pub witness: Option<PseudoMonotonicityWitness>,
}

#[derive(Debug, Clone)]
pub struct MviCheck {
    pub holds: bool,
    pub worst_value: f64,
    pub worst_x: Point,
}

/// Searches `n_pairs` random pairs for a monotonicity violation
/// `<T(x) - T(y), x - y> < -1e-9` and reports the first one found.
pub fn check_monotone(problem: &Problem, n_pairs: usize, rng: &mut impl Rng) -> MonotonicityCheck {
    assert!(n_pairs >= 1);
    for _ in 0..n_pairs {
        let x = problem.sample_point(rng);
        let y = problem.sample_point(rng);
        let value = problem.mean(&x).sub(&problem.mean(&y)).dot(&x.sub(&y));
        if value < -1e-9 {
            return MonotonicityCheck {
                verdict: Verdict::Witness,
                witness: Some(MonotonicityWitness { x, y, value }),
            };
        }
    }
    MonotonicityCheck { verdict: Verdict::NoViolationFound, witness: None }
}

/// Searches for a pseudo-monotonicity violation: a pair with
/// `<T(x), y - x> >= -1e-12` whose conclusion `<T(y), y - x>` is
/// nevertheless below `-1e-9`.
pub fn check_pseudo_monotone(
    problem: &Problem,
    n_pairs: usize,
    rng: &mut impl Rng,
) -> PseudoMonotonicityCheck {
    assert!(n_pairs >= 1);
    for _ in 0..n_pairs {
        let x = problem.sample_point(rng);
        let y = problem.sample_point(rng);
        let dir = y.sub(&x);
        let forward = problem.mean(&x).dot(&dir);
        let backward = problem.mean(&y).dot(&dir);
        if forward >= -1e-12 && backward < -1e-9 {
            return PseudoMonotonicityCheck {
                verdict: Verdict::Witness,
                witness: Some(PseudoMonotonicityWitness { x, y, forward, backward }),
            };
        }
    }
    PseudoMonotonicityCheck { verdict: Verdict::NoViolationFound, witness: None }
}

/// Evaluates the premise/conclusion of pseudo-monotonicity on one
/// explicit pair. Used to pin known witnesses deterministically.
pub fn pseudo_monotone_pair(problem: &Problem, x: &Point, y: &Point) -> (f64, f64) {
    let dir = y.sub(x);
    (problem.mean(x).dot(&dir), problem.mean(y).dot(&dir))
}

/// Estimates `min_x <T(x), x - candidate>` over random domain samples;
/// the Minty property holds (to tolerance) iff the worst value stays
/// above `-1e-9`.
pub fn check_mvi_solution(
    problem: &Problem,
    candidate: &Point,
    n_samples: usize,
    rng: &mut impl Rng,
) -> MviCheck {
    assert!(n_samples >= 1);
    assert!(
        problem.domain.contains(candidate, 1e-9),
        "candidate must lie in the domain"
    );
    let mut worst_value = f64::INFINITY;
    let mut worst_x = candidate.clone();
    for _ in 0..n_samples {
        let x = problem.sample_point(rng);
        let v = problem.mean(&x).dot(&x.sub(candidate));
        if v < worst_value {
            worst_value = v;
            worst_x = x;
        }
    }
    MviCheck { holds: worst_value >= -1e-9, worst_value, worst_x }
}

/// Grid variant of the Minty check for one-dimensional problems:
/// `n_points` evenly spaced points on `[lo, hi]`.
pub fn check_mvi_solution_grid(
    problem: &Problem,
    candidate: &Point,
    lo: f64,
    hi: f64,
    n_points: usize,
) -> MviCheck {
    assert_eq!(problem.dim, 1, "grid check is one-dimensional");
    assert!(n_points >= 2 && hi > lo);
    let mut worst_value = f64::INFINITY;
    let mut worst_x = candidate.clone();
    for i in 0..n_points {
        let t = lo + (hi - lo) * i as f64 / (n_points - 1) as f64;
        let x = Point::new(vec![t]);
        let v = problem.mean(&x).dot(&x.sub(candidate));
        if v < worst_value {
            worst_value = v;
            worst_x = x;
        }
    }
    MviCheck { holds: worst_value >= -1e-9, worst_value, worst_x }
}

/// Largest sampled ratio `|T(a) - T(b)| / |a - b|`. Pairs alternate
/// between independent draws and tight perturbation pairs so the
/// estimate approaches the true modulus on smooth operators.
pub fn estimate_lipschitz(problem: &Problem, n_pairs: usize, rng: &mut impl Rng) -> f64 {
    assert!(n_pairs >= 1);
    let h = 1e-4 * (problem.sample_hi - problem.sample_lo);
    let mut best: f64 = 0.0;
    for pair in 0..n_pairs {
        let a = problem.sample_point(rng);
        let b = if pair % 2 == 0 {
            problem.sample_point(rng)
        } else {
            let dir = Point::from_fn(problem.dim, |_| {
                let z: f64 = rng.sample(StandardNormal);
                z
            });
            let n = dir.norm();
            if n == 0.0 {
                continue;
            }
            problem.domain.project(&a.add_scaled(&dir, h / n))
        };
        let dist = a.distance(&b);
        if dist == 0.0 {
            continue;
        }
        best = best.max(problem.mean(&a).distance(&problem.mean(&b)) / dist);
    }
    best
}
