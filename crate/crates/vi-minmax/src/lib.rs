//! Solvers and a seeded experiment harness for stochastic non-convex
//! non-concave min-max problems, treated through their variational
//! inequality formulation.
//!
//! The first-order oracle of a min-max problem is the stacked field
//! `T(x) = [grad_u F, -grad_v F]` at `x = (u, v)`; its zeros are the
//! first-order stationary points. This crate provides:
//!
//! - optimistic stochastic gradient (OSG), its single-sequence
//!   unconstrained form, the stochastic extragradient baseline, and the
//!   adaptively preconditioned variant OAdagrad ([`solver`])
//! - test operators with analytic Lipschitz constants, known solutions,
//!   seeded stochastic oracles, and operator-class falsifiers ([`problem`])
//! - closed convex constraint sets with exact Euclidean projections and
//!   the natural-residual stationarity measure ([`domain`])
//! - residual diagnostics, a-priori rate bounds, cumulative-gradient
//!   growth tracking, and power-law exponent fitting ([`diagnostics`])
//! - a CLI harness that runs seeded sweeps in parallel and emits CSV
//!   traces and JSON summaries ([`harness`])

pub mod diagnostics;
pub mod domain;
pub mod harness;
pub mod linalg;
pub mod problem;
pub mod solver;

pub use diagnostics::{IterationRecord, Trace};
pub use domain::Domain;
pub use linalg::{DiagonalMetric, Point};
pub use problem::{OracleStream, Problem};
pub use solver::{Method, MinibatchSchedule, SolverConfig, SolverState};
