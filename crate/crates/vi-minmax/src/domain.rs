//! Closed convex constraint sets with exact Euclidean projections, plus
//! the natural-residual stationarity measure built on them.
//!
//! Product sets project blockwise, which is exact for the Euclidean norm
//! and is what the joint constraint set `U x V` of a min-max problem
//! needs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Point;

#[derive(Debug, Error, PartialEq)]
pub enum DomainError {
    #[error("box bound ordering violated at coordinate {0}: lower > upper")]
    BoxBounds(usize),
    #[error("ball radius must be positive, got {0}")]
    BallRadius(f64),
    #[error("product domain needs at least one component")]
    EmptyProduct,
    #[error("domain dimension must be >= 1")]
    ZeroDim,
}

/// A nonempty closed convex subset of `R^d` with an exact projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    AllSpace { dim: usize },
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Product { parts: Vec<Domain> },
}

impl Domain {
    pub fn all_space(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be >= 1");
        Domain::AllSpace { dim }
    }

    pub fn box_bounds(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, DomainError> {
        if lower.is_empty() {
            return Err(DomainError::ZeroDim);
        }
        assert_eq!(lower.len(), upper.len(), "dimension mismatch");
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if l > u {
                return Err(DomainError::BoxBounds(i));
            }
        }
        Ok(Domain::Box { lower, upper })
    }

    /// The centered cube `[-half_width, half_width]^dim`.
    pub fn cube(dim: usize, half_width: f64) -> Self {
        Self::box_bounds(vec![-half_width; dim], vec![half_width; dim]).expect("valid cube")
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self, DomainError> {
        if center.is_empty() {
            return Err(DomainError::ZeroDim);
        }
        if radius <= 0.0 || radius.is_nan() {
            return Err(DomainError::BallRadius(radius));
        }
        Ok(Domain::Ball { center, radius })
    }

    pub fn product(parts: Vec<Domain>) -> Result<Self, DomainError> {
        if parts.is_empty() {
            return Err(DomainError::EmptyProduct);
        }
        Ok(Domain::Product { parts })
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::AllSpace { dim } => *dim,
            Domain::Box { lower, .. } => lower.len(),
            Domain::Ball { center, .. } => center.len(),
            Domain::Product { parts } => parts.iter().map(|p| p.dim()).sum(),
        }
    }

    pub fn is_all_space(&self) -> bool {
        match self {
            Domain::AllSpace { .. } => true,
            Domain::Product { parts } => parts.iter().all(|p| p.is_all_space()),
            _ => false,
        }
    }

    /// Euclidean projection onto the set. Identity on `R^d`, coordinate
    /// clamp on boxes, radial rescale on balls, blockwise on products.
    pub fn project(&self, y: &Point) -> Point {
        assert_eq!(self.dim(), y.dim(), "dimension mismatch");
        match self {
            Domain::AllSpace { .. } => y.clone(),
            Domain::Box { lower, upper } => Point::from_fn(y.dim(), |i| {
                y[i].clamp(lower[i], upper[i])
            }),
            Domain::Ball { center, radius } => {
                let dist_sq: f64 = y
                    .iter()
                    .zip(center)
                    .map(|(yi, ci)| (yi - ci) * (yi - ci))
                    .sum();
                let dist = dist_sq.sqrt();
                if dist <= *radius {
                    y.clone()
                } else {
                    let t = radius / dist;
                    Point::from_fn(y.dim(), |i| center[i] + t * (y[i] - center[i]))
                }
            }
            Domain::Product { parts } => {
                let mut out = Vec::with_capacity(y.dim());
                let mut offset = 0;
                for part in parts {
                    let d = part.dim();
                    let block = Point::new(y.as_slice()[offset..offset + d].to_vec());
                    out.extend_from_slice(part.project(&block).as_slice());
                    offset += d;
                }
                Point::new(out)
            }
        }
    }

    /// Euclidean distance from `x` to the set.
    pub fn distance(&self, x: &Point) -> f64 {
        x.distance(&self.project(x))
    }

    /// True iff the distance from `x` to the set is at most `tol`.
    pub fn contains(&self, x: &Point, tol: f64) -> bool {
        self.distance(x) <= tol
    }

    /// Natural residual `r_alpha(z) = |z - proj(z - alpha * T(z))|`.
    ///
    /// Zero exactly at projected stationary points; reduces to
    /// `alpha * |T(z)|` when the set is all of `R^d`. `z` must already
    /// lie in the set (checked to 1e-9) and `alpha` must be positive.
    pub fn natural_residual(&self, t_at_z: &Point, z: &Point, alpha: f64) -> f64 {
        assert!(alpha > 0.0, "natural residual needs alpha > 0");
        assert!(
            self.contains(z, 1e-9),
            "natural residual evaluated at a point outside the domain"
        );
        let stepped = z.add_scaled(t_at_z, -alpha);
        z.distance(&self.project(&stepped))
    }

    /// Per-coordinate bounding interval of the set, when one exists.
    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Domain::AllSpace { .. } => None,
            Domain::Box { lower, upper } => Some((lower.clone(), upper.clone())),
            Domain::Ball { center, radius } => Some((
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            )),
            Domain::Product { parts } => {
                let mut lo = Vec::new();
                let mut hi = Vec::new();
                for part in parts {
                    let (l, h) = part.bounding_box()?;
                    lo.extend(l);
                    hi.extend(h);
                }
                Some((lo, hi))
            }
        }
    }
}
