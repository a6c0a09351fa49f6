//! Friedrichs model: one discrete level coupled to a continuum.

mod form_factor;
mod model;
mod resonance;

pub use form_factor::{Family, FormFactor, WPole};
pub use model::{ContourSettings, FriedrichsModel, PathShape, Side, CUT_TOLERANCE};
pub use resonance::{
    bound_state, count_second_sheet_zeros, find_pole, find_resonance, resonance_first_order,
    BoundState, Resonance, NEWTON_MAX_ITER,
};
mod survival;

pub use survival::{
    check_admissible, default_depth, gamma_path, spectral_density, survival_background,
    survival_curve, survival_exact, survival_pole, SurvivalCurve, SurvivalEngine,
    DECOMPOSITION_TOLERANCE,
};
mod unity;

pub use unity::{
    reconstruct_inner_product, ContinuumProfile, InnerProductCheck, RationalTerm,
    StateCoefficients, BOUND_LABEL, LEVEL_LABEL,
};
