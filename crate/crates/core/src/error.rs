use thiserror::Error;

/// Errors raised across the electronic-structure and optimization pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("nuclei {0} and {1} coincide (distance {2:.3e} bohr)")]
    CoincidentNuclei(usize, usize, f64),

    #[error("SCF did not converge after {iterations} iterations (last energy {energy})")]
    ScfNotConverged { iterations: usize, energy: f64 },

    #[error("spin-orbital index out of range: {0}")]
    IndexOutOfRange(usize),

    #[error("operator is not symmetric (max asymmetry {0:.3e})")]
    NonSymmetricOperator(f64),

    #[error("noise channel requires a mixed (density-matrix) state")]
    PureStateNoise,

    #[error("eigensolver did not converge: variance {variance:.3e} after {iterations} iterations")]
    NotConverged { iterations: usize, variance: f64 },

    #[error("solver failure at (R={r}, rho={rho}, theta={theta}): {reason}")]
    SolverFailure { r: f64, rho: f64, theta: f64, reason: String },

    #[error("empty scan")]
    EmptyScan,

    #[error("phase inconsistency: same-state overlap {0:.3} between adjacent geometries")]
    PhaseInconsistency(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
