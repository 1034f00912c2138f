//! Dense vectors and the diagonal variable metric, with the weighted
//! norms shared by every other module.
//!
//! All arithmetic is plain `f64`; bounds elsewhere in the crate are
//! checked with explicit tolerances, never exactly.

/// A dense point of `R^d`. Doubles as iterates, gradients, and operator
/// values; the split between the minimization and maximization blocks is
/// stored on the problem, not here.
///
/// Invariants: `d >= 1` and every coordinate finite. Constructors panic
/// on violations; arithmetic trusts its inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        assert!(!coords.is_empty(), "a point needs at least one coordinate");
        assert!(
            coords.iter().all(|c| c.is_finite()),
            "point coordinates must be finite"
        );
        Point { coords }
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be >= 1");
        Point { coords: vec![0.0; dim] }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize) -> f64) -> Self {
        Self::new((0..dim).map(f).collect())
    }

    /// Constant vector `c * (1, ..., 1)`.
    pub fn constant(dim: usize, c: f64) -> Self {
        Self::new(vec![c; dim])
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.coords.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    pub fn dot(&self, other: &Point) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn inf_norm(&self) -> f64 {
        self.coords.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn add(&self, other: &Point) -> Point {
        self.add_scaled(other, 1.0)
    }

    pub fn sub(&self, other: &Point) -> Point {
        self.add_scaled(other, -1.0)
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, other: &Point, c: f64) -> Point {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        Point {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + c * b)
                .collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Point {
        Point {
            coords: self.coords.iter().map(|a| a * c).collect(),
        }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.sub(other).norm()
    }
}

impl std::ops::Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.coords[i]
    }
}

impl From<Vec<f64>> for Point {
    fn from(coords: Vec<f64>) -> Self {
        Point::new(coords)
    }
}

/// The diagonal variable metric `H = delta * I + diag(s)`, where `s` holds
/// the running per-coordinate l2 norms of the gradient history. Since
/// `delta > 0` and `s >= 0`, `H >= delta * I` always holds and `H` is
/// invertible.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalMetric {
    delta: f64,
    s: Vec<f64>,
}

impl DiagonalMetric {
    pub fn new(delta: f64, s: Vec<f64>) -> Self {
        assert!(delta > 0.0 && delta.is_finite(), "delta must be positive");
        assert!(!s.is_empty(), "metric needs at least one coordinate");
        assert!(
            s.iter().all(|v| v.is_finite() && *v >= 0.0),
            "cumulative norms must be finite and nonnegative"
        );
        DiagonalMetric { delta, s }
    }

    /// `H = delta * I` (the metric before any gradient has been seen).
    pub fn isotropic(delta: f64, dim: usize) -> Self {
        Self::new(delta, vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.s.len()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    /// Diagonal entry `delta + s_i`.
    pub fn diag(&self, i: usize) -> f64 {
        self.delta + self.s[i]
    }

    /// Weighted norm `|v|_H = sqrt(sum_i (delta + s_i) v_i^2)`.
    pub fn norm(&self, v: &Point) -> f64 {
        assert_eq!(self.dim(), v.dim(), "dimension mismatch");
        self.s
            .iter()
            .zip(v.iter())
            .map(|(s, v)| (self.delta + s) * v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Inverse-weighted norm `|v|_{H^-1} = sqrt(sum_i v_i^2 / (delta + s_i))`.
    pub fn inv_norm(&self, v: &Point) -> f64 {
        assert_eq!(self.dim(), v.dim(), "dimension mismatch");
        self.s
            .iter()
            .zip(v.iter())
            .map(|(s, v)| v * v / (self.delta + s))
            .sum::<f64>()
            .sqrt()
    }

    /// Preconditioned direction `H^-1 g`, coordinate-wise `g_i / (delta + s_i)`.
    pub fn inv_apply(&self, g: &Point) -> Point {
        assert_eq!(self.dim(), g.dim(), "dimension mismatch");
        Point::new(
            self.s
                .iter()
                .zip(g.iter())
                .map(|(s, g)| g / (self.delta + s))
                .collect(),
        )
    }

    /// Folds one more gradient into the cumulative row norms:
    /// `s_i <- sqrt(s_i^2 + g_i^2)`.
    pub fn accumulate(&mut self, g: &Point) {
        assert_eq!(self.dim(), g.dim(), "dimension mismatch");
        for (s, gi) in self.s.iter_mut().zip(g.iter()) {
            *s = (*s * *s + gi * gi).sqrt();
        }
    }

    /// `sum_i s_i`, the scalar growth statistic of the gradient history.
    pub fn growth_sum(&self) -> f64 {
        self.s.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn identity_metric_is_euclidean() {
        let h = DiagonalMetric::isotropic(1.0, 2);
        let v = Point::new(vec![3.0, 4.0]);
        assert_eq!(h.norm(&v), 5.0);
        assert_eq!(h.inv_norm(&v), 5.0);
    }

    #[test]
    fn zero_vector_has_zero_norms() {
        let h = DiagonalMetric::new(2.0, vec![1.0, 7.0]);
        let z = Point::zeros(2);
        assert_eq!(h.norm(&z), 0.0);
        assert_eq!(h.inv_norm(&z), 0.0);
        assert_eq!(h.inv_apply(&z), z);
    }

    #[test]
    fn weighted_norm_example() {
        // delta=1, s=(1,3), v=(1,1): sqrt(2 + 4) = sqrt(6)
        let h = DiagonalMetric::new(1.0, vec![1.0, 3.0]);
        let v = Point::new(vec![1.0, 1.0]);
        assert_relative_eq!(h.norm(&v), 6.0f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn inverse_weighted_norm_example() {
        // delta=2, s=(2,6), v=(2,4): sqrt(4/4 + 16/8) = sqrt(3)
        let h = DiagonalMetric::new(2.0, vec![2.0, 6.0]);
        let v = Point::new(vec![2.0, 4.0]);
        assert_relative_eq!(h.inv_norm(&v), 3.0f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn preconditioned_direction_examples() {
        let g = Point::new(vec![2.0, -4.0]);
        let id = DiagonalMetric::isotropic(1.0, 2);
        assert_eq!(id.inv_apply(&g), g);
        let h = DiagonalMetric::new(1.0, vec![1.0, 3.0]);
        assert_eq!(h.inv_apply(&g), Point::new(vec![1.0, -1.0]));
    }

    #[test]
    fn accumulate_is_incremental_row_norm() {
        let mut h = DiagonalMetric::isotropic(1.0, 2);
        h.accumulate(&Point::new(vec![1.0, -1.0]));
        h.accumulate(&Point::new(vec![1.1, -0.9]));
        assert_relative_eq!(h.s()[0], 2.21f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(h.s()[1], 1.81f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    #[should_panic(expected = "dimension mismatch")]
    fn norm_rejects_dimension_mismatch() {
        let h = DiagonalMetric::isotropic(1.0, 2);
        h.norm(&Point::zeros(3));
    }

    #[test]
    #[should_panic(expected = "finite")]
    fn point_rejects_nan() {
        Point::new(vec![1.0, f64::NAN]);
    }

    fn metric_and_vec() -> impl Strategy<Value = (DiagonalMetric, Point)> {
        (1usize..8).prop_flat_map(|d| {
            (
                0.01f64..10.0,
                prop::collection::vec(0.0f64..20.0, d),
                prop::collection::vec(-50.0f64..50.0, d),
            )
                .prop_map(|(delta, s, v)| (DiagonalMetric::new(delta, s), Point::new(v)))
        })
    }

    proptest! {
        // |H^-1 v|_H = |v|_{H^-1} exactly (up to roundoff); the two weighted
        // norms are linked through the preconditioner.
        #[test]
        fn norm_of_preconditioned_equals_inv_norm((h, v) in metric_and_vec()) {
            let lhs = h.norm(&h.inv_apply(&v));
            let rhs = h.inv_norm(&v);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
        }

        // delta |v|^2 <= |v|_H^2 and |v|_{H^-1}^2 <= |v|^2 / delta.
        #[test]
        fn norms_sandwich_euclidean((h, v) in metric_and_vec()) {
            let n2 = v.norm_sq();
            prop_assert!(h.delta() * n2 <= h.norm(&v).powi(2) * (1.0 + 1e-12));
            prop_assert!(h.inv_norm(&v).powi(2) <= n2 / h.delta() * (1.0 + 1e-12));
        }

        // Growing s can only shrink the inverse-weighted norm.
        #[test]
        fn inv_norm_is_monotone_in_s((h, v) in metric_and_vec(),
                                     bump in prop::collection::vec(0.0f64..5.0, 8)) {
            let grown = DiagonalMetric::new(
                h.delta(),
                h.s().iter().zip(&bump).map(|(s, b)| s + b).collect(),
            );
            prop_assert!(grown.inv_norm(&v) <= h.inv_norm(&v) * (1.0 + 1e-12));
        }
    }
}
