use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parametric families of couplings `W(ω)`, each registered together with the analytic
/// continuation `w(z)` of `|W(ω)|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `W(ω) = λ√ω/(1+ω²)`, `w(z) = λ²z/(1+z²)²`, double poles at `±i`.
    #[default]
    Lorentzian,
    /// `W(ω) = λ√ω·e^{−ω/2Λ}`, `w(z) = λ²z·e^{−z/Λ}`, entire.
    Exponential { cutoff: f64 },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Lorentzian => "lorentzian",
            Family::Exponential { .. } => "exponential",
        }
    }
}

/// Pole of `w(z)` with its order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WPole {
    pub at: Complex64,
    pub order: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormFactor {
    family: Family,
    lambda: f64,
}

impl FormFactor {
    pub fn new(family: Family, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Config(format!("coupling lambda = {lambda} outside [0, 1]")));
        }
        if let Family::Exponential { cutoff } = family {
            if !(cutoff > 0.0) || !cutoff.is_finite() {
                return Err(Error::Config(format!("exponential cutoff must be positive, got {cutoff}")));
            }
        }
        Ok(Self { family, lambda })
    }

    pub fn lorentzian(lambda: f64) -> Result<Self> {
        Self::new(Family::Lorentzian, lambda)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.family, lambda)
    }

    /// `W(ω)` on the real semiaxis.
    pub fn coupling(&self, omega: f64) -> Complex64 {
        if omega < 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        self.coupling_continued(Complex64::new(omega, 0.0))
    }

    /// Continuation of `W` with the principal square root; `W(z)·W(z̄)* = w(z)`.
    pub fn coupling_continued(&self, z: Complex64) -> Complex64 {
        let l = self.lambda;
        match self.family {
            Family::Lorentzian => z.sqrt() * l / (1.0 + z * z),
            Family::Exponential { cutoff } => z.sqrt() * l * (-z / (2.0 * cutoff)).exp(),
        }
    }

    /// `w(z)`, the continuation of `|W(ω)|²` off the real axis.
    pub fn w(&self, z: Complex64) -> Complex64 {
        let l2 = self.lambda * self.lambda;
        match self.family {
            Family::Lorentzian => {
                let d = 1.0 + z * z;
                z * l2 / (d * d)
            }
            Family::Exponential { cutoff } => z * l2 * (-z / cutoff).exp(),
        }
    }

    /// `|W(ω)|²` for real `ω` (zero below threshold).
    pub fn w_real(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return 0.0;
        }
        let l2 = self.lambda * self.lambda;
        match self.family {
            Family::Lorentzian => l2 * omega / (1.0 + omega * omega).powi(2),
            Family::Exponential { cutoff } => l2 * omega * (-omega / cutoff).exp(),
        }
    }

    /// `dw/dz` by a five-point stencil.
    pub fn w_derivative(&self, z: Complex64) -> Complex64 {
        let h = 1e-3 * z.norm().clamp(0.1, 1.0);
        let f = |k: f64| self.w(z + h * k);
        (8.0 * (f(1.0) - f(-1.0)) - (f(2.0) - f(-2.0))) / (12.0 * h)
    }

    pub fn poles(&self) -> Vec<WPole> {
        match self.family {
            Family::Lorentzian => vec![
                WPole {
                    at: Complex64::new(0.0, 1.0),
                    order: 2,
                },
                WPole {
                    at: Complex64::new(0.0, -1.0),
                    order: 2,
                },
            ],
            Family::Exponential { .. } => Vec::new(),
        }
    }

    /// Distance from `z` to the nearest pole of `w`.
    pub fn pole_distance(&self, z: Complex64) -> f64 {
        self.poles()
            .iter()
            .map(|p| (z - p.at).norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_zero(&self) -> bool {
        self.lambda == 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn continuation_agrees_with_modulus_on_axis() {
        for ff in [
            FormFactor::lorentzian(0.3).unwrap(),
            FormFactor::new(Family::Exponential { cutoff: 2.0 }, 0.7).unwrap(),
        ] {
            for k in 0..200 {
                let om = 0.05 * k as f64;
                let w = ff.w(Complex64::new(om, 0.0));
                assert!((w.re - ff.coupling(om).norm_sqr()).abs() < 1e-12);
                assert!(w.im.abs() < 1e-15);
                assert!(w.re >= 0.0);
                assert!((ff.w_real(om) - w.re).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn product_of_continued_couplings_is_w() {
        let ff = FormFactor::lorentzian(0.4).unwrap();
        for z in [Complex64::new(1.0, -0.3), Complex64::new(0.2, -0.9), Complex64::new(3.0, -0.01)] {
            let left = ff.coupling_continued(z) * ff.coupling_continued(z.conj()).conj();
            assert!((left - ff.w(z)).norm() < 1e-14);
        }
    }

    #[test]
    fn lambda_range_enforced() {
        assert!(FormFactor::lorentzian(-0.1).is_err());
        assert!(FormFactor::lorentzian(1.5).is_err());
        assert!(FormFactor::new(Family::Exponential { cutoff: 0.0 }, 0.1).is_err());
    }

    #[test]
    fn derivative_matches_closed_form() {
        let ff = FormFactor::lorentzian(1.0).unwrap();
        let z = Complex64::new(0.8, -0.2);
        let d = 1.0 + z * z;
        let exact = (1.0 / (d * d)) - 4.0 * z * z / (d * d * d);
        assert!((ff.w_derivative(z) - exact).norm() < 1e-10);
    }
}
