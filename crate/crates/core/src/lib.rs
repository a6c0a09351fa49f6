//! Resonances of the Friedrichs model: second-sheet poles, survival amplitudes split into
//! Gamov-pole and background parts, perturbation series, and Hardy-class test spaces.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contour_quad;
pub mod error;
pub mod friedrichs;
pub mod perturbation;
pub mod testspace;

pub use error::{Error, Result};
pub use num_complex::Complex64;
