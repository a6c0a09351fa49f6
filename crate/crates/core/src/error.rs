use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical domain error: {0}")]
    NumericalDomain(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("z = {z} lies within {distance:e} of the cut; use eta_boundary for boundary values")]
    CutProximity { z: Complex64, distance: f64 },

    #[error("analytic continuation undefined at z = {z}: {reason}")]
    ContinuationDomain { z: Complex64, reason: String },

    #[error("root search did not converge after {iterations} iterations (last z = {last}, |f| = {residual:e})")]
    RootSearch {
        iterations: usize,
        last: Complex64,
        residual: f64,
        trace: Vec<Complex64>,
    },

    #[error("pole found on the wrong branch: z = {0} (expected Im z < 0)")]
    Branch(Complex64),

    #[error("contour configuration error: {0}")]
    ContourConfiguration(String),

    #[error("fixed-point iteration failed after {iterations} steps (last z = {last}); try Newton via find_resonance")]
    FixedPoint { iterations: usize, last: Complex64 },

    #[error("admissibility error: {0}")]
    Admissibility(String),

    #[error("resolution error: {0}")]
    Resolution(String),
}

impl Error {
    /// Numerical failures, as opposed to malformed input.
    pub fn is_numerical(&self) -> bool {
        !matches!(self, Error::Config(_))
    }
}
