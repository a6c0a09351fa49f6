use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::form_factor::FormFactor;
use crate::contour_quad::{composite, gauss_legendre, SemiInfiniteSpec};
use crate::error::{Error, Result};

/// Boundary side of the cut: `Plus` is `E + i0`, `Minus` is `E − i0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

/// Shape of the deformed contour below the cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PathShape {
    /// `0 → −id → R − id → R`.
    #[default]
    Box,
    /// `0 → ν − id → R`, apex under the resonance.
    Wedge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContourSettings {
    /// Depth of the path below the axis; `None` picks `max(4γ, 0.5)`.
    pub depth: Option<f64>,
    pub shape: PathShape,
    pub nodes_per_panel: usize,
}

impl Default for ContourSettings {
    fn default() -> Self {
        Self {
            depth: None,
            shape: PathShape::Box,
            nodes_per_panel: 16,
        }
    }
}

/// Nodes for `∫₀^∞ w(ω)/(z−ω) dω`: a graded composite rule on `[0, L]`, `L = 2R`, plus a
/// reciprocal-map tail, with `w` cached on both.
#[derive(Debug, Clone)]
struct SelfEnergyRule {
    span: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    w: Vec<f64>,
    tail_nodes: Vec<f64>,
    tail_weights: Vec<f64>,
    tail_w: Vec<f64>,
}

const TAIL_NODES: usize = 32;
const GROWTH: f64 = 1.25;

impl SelfEnergyRule {
    fn new(ff: &FormFactor, quad: &SemiInfiniteSpec) -> Result<Self> {
        let span = 2.0 * quad.cutoff;
        let mut breaks = vec![0.0];
        let mut x: f64 = 0.0;
        while x < span {
            x = (GROWTH * (1.0 + x) - 1.0).min(span);
            if span - x < 0.1 * (1.0 + x) {
                x = span;
            }
            breaks.push(x);
        }
        let per_panel = (quad.n.saturating_sub(TAIL_NODES) / (breaks.len() - 1)).max(8);
        let fin = composite(&breaks, per_panel)?;
        let tail = gauss_legendre(TAIL_NODES, 0.0, 1.0)?;
        let (tail_nodes, tail_weights): (Vec<f64>, Vec<f64>) = tail
            .iter()
            .map(|(u, wt)| (span / u, wt * span / (u * u)))
            .unzip();
        Ok(Self {
            span,
            w: fin.nodes().iter().map(|o| ff.w_real(*o)).collect(),
            nodes: fin.nodes().to_vec(),
            weights: fin.weights().to_vec(),
            tail_w: tail_nodes.iter().map(|o| ff.w_real(*o)).collect(),
            tail_nodes,
            tail_weights,
        })
    }

    /// Half the local panel length near abscissa `x`.
    fn half_panel(x: f64) -> f64 {
        0.5 * (GROWTH - 1.0) * (1.0 + x.max(0.0))
    }

    fn tail(&self, z: Complex64) -> Complex64 {
        self.tail_nodes
            .iter()
            .zip(&self.tail_weights)
            .zip(&self.tail_w)
            .map(|((o, wt), w)| *w * *wt / (z - *o))
            .sum()
    }

    fn direct(&self, z: Complex64) -> Complex64 {
        let fin: Complex64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .zip(&self.w)
            .map(|((o, wt), w)| *w * *wt / (z - *o))
            .sum();
        fin + self.tail(z)
    }

    /// `∫₀^L dω/(z−ω)`, with the side fixing the branch for `z` on the segment.
    fn log_term(&self, z: Complex64, side: Side) -> Complex64 {
        let l = self.span;
        if z.im == 0.0 && z.re > 0.0 && z.re < l {
            Complex64::new((z.re / (l - z.re)).ln(), -PI * side.sign())
        } else if z.im == 0.0 {
            Complex64::new((z.re / (z.re - l)).abs().ln(), 0.0)
        } else {
            z.ln() - (z - l).ln()
        }
    }

    /// Subtracted form `∫[w(ω) − w(z)]/(z−ω) + w(z)∫dω/(z−ω)`, uniform up to the cut.
    fn subtracted(&self, ff: &FormFactor, z: Complex64, side: Side) -> Complex64 {
        let wz = ff.w(z);
        let mut deriv = None;
        let mut acc = Complex64::new(0.0, 0.0);
        for ((o, wt), w) in self.nodes.iter().zip(&self.weights).zip(&self.w) {
            let d = z - *o;
            let q = if d.norm() < 1e-9 * (1.0 + o) {
                -*deriv.get_or_insert_with(|| ff.w_derivative(z))
            } else {
                (*w - wz) / d
            };
            acc += q * *wt;
        }
        if wz != Complex64::new(0.0, 0.0) {
            acc += wz * self.log_term(z, side);
        }
        acc + self.tail(z)
    }

    fn in_subtraction_zone(&self, ff: &FormFactor, z: Complex64) -> bool {
        let x = z.re.clamp(0.0, self.span);
        let dist = (z - x).norm();
        dist < 2.0 * Self::half_panel(x) && ff.pole_distance(z) > 0.5
    }
}

/// One discrete level `ω₁` coupled to the continuum `[0, ∞)` through a form factor.
#[derive(Debug, Clone)]
pub struct FriedrichsModel {
    omega1: f64,
    form_factor: FormFactor,
    quad: SemiInfiniteSpec,
    contour: ContourSettings,
    sigma: SelfEnergyRule,
}

/// Distance from the cut below which first-sheet evaluation is refused.
pub const CUT_TOLERANCE: f64 = 1e-8;

impl FriedrichsModel {
    pub fn new(
        omega1: f64,
        form_factor: FormFactor,
        quad: SemiInfiniteSpec,
        contour: ContourSettings,
    ) -> Result<Self> {
        if !(omega1 > 0.0) || !omega1.is_finite() {
            return Err(Error::Config(format!("omega1 must be positive, got {omega1}")));
        }
        quad.validate()?;
        if !(quad.cutoff > omega1) {
            return Err(Error::Config(format!(
                "cutoff R = {} must exceed omega1 = {omega1}",
                quad.cutoff
            )));
        }
        if let Some(d) = contour.depth {
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Config(format!("contour depth must be positive, got {d}")));
            }
        }
        if contour.nodes_per_panel < 4 {
            return Err(Error::Config("contour.nodes_per_panel must be at least 4".into()));
        }
        let sigma = SelfEnergyRule::new(&form_factor, &quad)?;
        Ok(Self {
            omega1,
            form_factor,
            quad,
            contour,
            sigma,
        })
    }

    /// Default settings: `ω₁ = 1`, Lorentzian family, `n = 400`, `R = 20`.
    pub fn lorentzian(omega1: f64, lambda: f64) -> Result<Self> {
        Self::new(
            omega1,
            FormFactor::lorentzian(lambda)?,
            SemiInfiniteSpec::default(),
            ContourSettings::default(),
        )
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(
            self.omega1,
            self.form_factor.with_lambda(lambda)?,
            self.quad,
            self.contour,
        )
    }

    pub fn with_contour(&self, contour: ContourSettings) -> Result<Self> {
        Self::new(self.omega1, self.form_factor, self.quad, contour)
    }

    pub fn omega1(&self) -> f64 {
        self.omega1
    }

    pub fn form_factor(&self) -> &FormFactor {
        &self.form_factor
    }

    pub fn quad(&self) -> &SemiInfiniteSpec {
        &self.quad
    }

    pub fn contour(&self) -> &ContourSettings {
        &self.contour
    }

    pub fn cutoff(&self) -> f64 {
        self.quad.cutoff
    }

    /// `∫₀^∞ w(ω)/(z−ω) dω` for any `z`; on the cut the side selects the boundary value.
    pub(crate) fn self_energy(&self, z: Complex64, side: Side) -> Complex64 {
        if self.form_factor.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        if self.sigma.in_subtraction_zone(&self.form_factor, z) {
            self.sigma.subtracted(&self.form_factor, z, side)
        } else {
            self.sigma.direct(z)
        }
    }

    /// First-sheet `η(z) = z − ω₁ − ∫₀^∞ w(ω)/(z−ω) dω`.
    pub fn eta(&self, z: Complex64) -> Result<Complex64> {
        if !z.is_finite() {
            return Err(Error::Domain(format!("eta at non-finite z = {z}")));
        }
        let dist = (z - z.re.max(0.0)).norm();
        if dist < CUT_TOLERANCE {
            return Err(Error::CutProximity { z, distance: dist });
        }
        let side = if z.im >= 0.0 { Side::Plus } else { Side::Minus };
        Ok(z - self.omega1 - self.self_energy(z, side))
    }

    /// Boundary values `η±(E) = η(E ± i0)`, `E ∈ (0, R)`.
    pub fn eta_boundary(&self, e: f64, side: Side) -> Result<Complex64> {
        if !(e > 0.0 && e < self.cutoff()) {
            return Err(Error::Domain(format!(
                "eta_boundary needs E in (0, {}), got {e}",
                self.cutoff()
            )));
        }
        let z = Complex64::new(e, 0.0);
        Ok(z - self.omega1 - self.self_energy(z, side))
    }

    /// `η_II(z) = η(z) + 2πi·w(z)`, the continuation of `η₊` into `Im z ≤ 0`.
    pub fn eta_second_sheet(&self, z: Complex64) -> Result<Complex64> {
        if z.im > 0.0 {
            return Err(Error::ContinuationDomain {
                z,
                reason: "second-sheet continuation of eta_plus is evaluated for Im z <= 0".into(),
            });
        }
        self.eta_continued(z, Side::Plus)
    }

    /// `η_±` continued across `(0, ∞)` to the whole plane: first sheet on its own side,
    /// `η ± 2πi w` on the other.
    pub fn eta_continued(&self, z: Complex64, side: Side) -> Result<Complex64> {
        if !z.is_finite() {
            return Err(Error::Domain(format!("eta at non-finite z = {z}")));
        }
        let ff = &self.form_factor;
        let crossed = match side {
            Side::Plus => z.im < 0.0,
            Side::Minus => z.im > 0.0,
        };
        let on_cut = z.im == 0.0 && z.re > 0.0;
        let first = if on_cut {
            z - self.omega1 - self.self_energy(z, side)
        } else {
            let s = if z.im >= 0.0 { Side::Plus } else { Side::Minus };
            z - self.omega1 - self.self_energy(z, s)
        };
        if !crossed {
            return Ok(first);
        }
        if ff.pole_distance(z) < 1e-10 {
            return Err(Error::ContinuationDomain {
                z,
                reason: "pole of the form-factor continuation".into(),
            });
        }
        let v = first + Complex64::new(0.0, 2.0 * PI * side.sign()) * ff.w(z);
        if !v.is_finite() {
            return Err(Error::ContinuationDomain {
                z,
                reason: "form-factor continuation is not finite".into(),
            });
        }
        Ok(v)
    }

    /// `∫₀^∞ |W(ω)|² dω` on the model's rule.
    pub fn coupling_norm(&self) -> f64 {
        let s = &self.sigma;
        let fin: f64 = s.weights.iter().zip(&s.w).map(|(a, b)| a * b).sum();
        let tail: f64 = s.tail_weights.iter().zip(&s.tail_w).map(|(a, b)| a * b).sum();
        fin + tail
    }
}
