use std::path::PathBuf;

use thiserror::Error;

use crate::C64;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid model: {0}")]
    Validation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("zero counting contour passes too close to a zero (min |W| = {min_abs:.3e}, threshold {threshold:.3e})")]
    ContourTooClose { min_abs: f64, threshold: f64 },

    #[error("iteration did not converge: {0}")]
    NonConvergence(String),

    #[error("singular Jacobian in {0}")]
    SingularJacobian(String),

    #[error("multiplicity mismatch at ω = {omega}: {detail}")]
    MultiplicityMismatch { omega: C64, detail: String },

    #[error("index {index} out of range for block of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("singular metric matrix (σ_min/σ_max = {ratio:.3e}): the dual space contains a vector orthogonal to the whole basis")]
    SingularMetric { ratio: f64 },

    #[error("non-generic perturbation (α = 0); the splitting is not governed by the leading matrix element")]
    NonGeneric,

    #[error("time step violates the CFL bound: dt = {dt:.3e} > {bound:.3e}")]
    Cfl { dt: f64, bound: f64 },

    #[error("inadmissible profile: delta mass μ = {mu:.6e} is negative")]
    InadmissibleProfile { mu: f64 },

    #[error("root tracking lost: {0}")]
    TrackingLost(String),

    #[error("internal invariant breached: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
