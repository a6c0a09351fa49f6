//! Numerical kernels: Gauss-Legendre quadrature, half-line mappings, principal values,
//! piecewise-linear contour integration and FFT-based support profiles.
//!
//! The spectral density is fixed to ρ(E) ≡ 1 throughout; every energy integral is a
//! plain `dE`.

mod contour;
mod gauss;
mod spectral;

pub use contour::{
    contour_integrate, contour_integrate_with, discretize, winding_number, ContourNodes,
    ContourPath, ContourRule, Grading,
};
pub use gauss::{
    composite, gauss_legendre, graded_breaks, principal_value, refine_breaks,
    semi_infinite_quad, Domain, Estimate, PvRange, QuadratureRule, SemiInfiniteMap,
    SemiInfiniteSpec,
};
pub use spectral::{
    energy_to_s, s_to_energy, support_profile, SupportOptions, SupportProfile, SymmetricGrid,
};
