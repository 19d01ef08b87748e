//! Numerical engine for the Cauchy-Leray transform on explicit domains in ℂ².
//!
//! The crate evaluates the transform `C(f)(z) = ∫ Δ(w,z)^{-2} f(w) dλ(w)` on a
//! small catalog of model and bounded domains, together with the boundary
//! measures (induced Lebesgue, Leray-Levi, the μ_a family and their
//! anisotropically transported variants) needed to measure how the L^p
//! operator ratio blows up on shrinking box pairs, how the scaled operators
//! converge to the model-domain operator, and how the convexity dichotomy
//! separates the two domain families.
//!
//! Modules follow the pipeline: [`geometry`] (defining functions, gradients,
//! the kernel denominator), [`boundary`] (graph charts, lifts, box families),
//! [`quadrature`] (Gauss rules, graded/weighted schemes), [`measures`]
//! (boundary densities and box measures), [`transform`] (the operator and
//! L^p norms), [`experiments`] (sweeps, fits and pass/fail reports) and
//! [`report`] (deterministic JSON/CSV serialization).

pub mod boundary;
pub mod experiments;
pub mod geometry;
pub mod measures;
pub mod quadrature;
pub mod report;
pub mod transform;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain spec: {0}")]
    InvalidSpec(String),
    #[error("second derivatives are singular at x1 = 0 for the power family")]
    SingularLocus,
    #[error("point outside chart range: {0}")]
    OutsideChart(String),
    #[error("box construction failed: {0}")]
    InvalidBox(String),
    #[error("quadrature order {0} out of range 1..=64")]
    InvalidOrder(usize),
    #[error("exponent {0} is not integrable (need gamma > -1)")]
    NonIntegrable(f64),
    #[error("non-finite integrand sample at {0:?}")]
    NonFiniteSample([f64; 3]),
    #[error("kernel near singular: min sampled |Delta| = {0:.3e}")]
    KernelSingular(f64),
    #[error("evaluation point lies in the support of f")]
    SupportOverlap,
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Crate version embedded in report provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
