use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::model::{FriedrichsModel, Side};
use super::resonance::{bound_state, find_resonance, Resonance};
use super::survival::{check_admissible, default_depth};
use crate::contour_quad::{
    composite, discretize, gauss_legendre, graded_breaks, refine_breaks, ContourPath,
    ContourRule, Grading,
};
use crate::error::{Error, Result};

/// `c/(E − p)^m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RationalTerm {
    pub coeff: Complex64,
    pub pole: Complex64,
    pub order: u32,
}

/// Continuum amplitude `ψ₊(E) = ⟨E⁺|ψ⟩` of a state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContinuumProfile {
    Zero,
    /// The continuum part of the bare level, `⟨E⁺|1⟩ = W(E)/η₋(E)`.
    Level,
    /// `Σ c_j/(E − p_j)^{m_j}` with poles off the real axis.
    Rational { terms: Vec<RationalTerm> },
    /// Values on a grid only; carries no continuation.
    Sampled {
        energies: Vec<f64>,
        values: Vec<Complex64>,
    },
}

/// Components of a state in the outgoing basis: discrete amplitudes and `ψ₊(E)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateCoefficients {
    pub discrete: BTreeMap<String, Complex64>,
    pub continuum: ContinuumProfile,
    pub scale: Complex64,
}

/// Label of the unperturbed level in the discrete map.
pub const LEVEL_LABEL: &str = "1";
/// Label of a real eigenvalue below the threshold.
pub const BOUND_LABEL: &str = "bound";

impl StateCoefficients {
    /// The bare level `|1⟩` expanded in the eigenbasis of the coupled model.
    pub fn level(model: &FriedrichsModel) -> Result<Self> {
        let mut discrete = BTreeMap::new();
        let continuum = if model.form_factor().is_zero() {
            discrete.insert(LEVEL_LABEL.to_string(), Complex64::new(1.0, 0.0));
            ContinuumProfile::Zero
        } else {
            if let Some(b) = bound_state(model)? {
                discrete.insert(BOUND_LABEL.to_string(), Complex64::new(b.weight.sqrt(), 0.0));
            }
            ContinuumProfile::Level
        };
        Ok(Self {
            discrete,
            continuum,
            scale: Complex64::new(1.0, 0.0),
        })
    }

    pub fn rational(terms: Vec<RationalTerm>) -> Result<Self> {
        for t in &terms {
            if t.order == 0 || t.pole.im == 0.0 || !t.pole.is_finite() || !t.coeff.is_finite() {
                return Err(Error::Config(format!(
                    "rational term needs order >= 1 and a pole off the real axis, got {t:?}"
                )));
            }
        }
        Ok(Self {
            discrete: BTreeMap::new(),
            continuum: ContinuumProfile::Rational { terms },
            scale: Complex64::new(1.0, 0.0),
        })
    }

    pub fn sampled(energies: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if energies.len() != values.len() || energies.len() < 2 {
            return Err(Error::Config("sampled profile needs matching energies and values".into()));
        }
        Ok(Self {
            discrete: BTreeMap::new(),
            continuum: ContinuumProfile::Sampled { energies, values },
            scale: Complex64::new(1.0, 0.0),
        })
    }

    pub fn scaled(mut self, s: Complex64) -> Self {
        self.scale *= s;
        for v in self.discrete.values_mut() {
            *v *= s;
        }
        self
    }

    fn rational_value(terms: &[RationalTerm], z: Complex64) -> Complex64 {
        terms
            .iter()
            .map(|t| t.coeff / (z - t.pole).powu(t.order))
            .sum()
    }

    /// `ψ₊(E)` on the real semiaxis, extended beyond the cutoff by the large-`E` form of `η`.
    pub fn continuum_value(&self, model: &FriedrichsModel, e: f64) -> Result<Complex64> {
        let v = match &self.continuum {
            ContinuumProfile::Zero => Complex64::new(0.0, 0.0),
            ContinuumProfile::Level => {
                model.form_factor().coupling(e) / boundary_eta(model, e, Side::Minus)?
            }
            ContinuumProfile::Rational { terms } => {
                Self::rational_value(terms, Complex64::new(e, 0.0))
            }
            ContinuumProfile::Sampled { energies, values } => interpolate(energies, values, e),
        };
        Ok(v * self.scale)
    }

    /// Continuation of `ψ₊` into the lower half plane.
    fn ket(&self, model: &FriedrichsModel, z: Complex64) -> Result<Complex64> {
        let v = match &self.continuum {
            ContinuumProfile::Zero => Complex64::new(0.0, 0.0),
            ContinuumProfile::Level => {
                model.form_factor().coupling_continued(z) / model.eta_continued(z, Side::Minus)?
            }
            ContinuumProfile::Rational { terms } => Self::rational_value(terms, z),
            ContinuumProfile::Sampled { .. } => return Err(not_continuable()),
        };
        Ok(v * self.scale)
    }

    /// Continuation of `ψ₊(E)*` into the lower half plane.
    fn bra(&self, model: &FriedrichsModel, z: Complex64) -> Result<Complex64> {
        let v = match &self.continuum {
            ContinuumProfile::Zero => Complex64::new(0.0, 0.0),
            ContinuumProfile::Level => {
                model.form_factor().coupling_continued(z) / model.eta_continued(z, Side::Plus)?
            }
            ContinuumProfile::Rational { terms } => terms
                .iter()
                .map(|t| t.coeff.conj() / (z - t.pole.conj()).powu(t.order))
                .sum(),
            ContinuumProfile::Sampled { .. } => return Err(not_continuable()),
        };
        Ok(v * self.scale.conj())
    }

    /// `Σ|ψ_n|² + ∫|ψ₊(E)|² dE`.
    pub fn norm_sq(&self, model: &FriedrichsModel) -> Result<f64> {
        let res = match self.continuum {
            ContinuumProfile::Level if !model.form_factor().is_zero() => {
                Some(find_resonance(model, None)?)
            }
            _ => None,
        };
        Ok(reconstruct_direct(model, res.as_ref(), self, self)?.re)
    }

    /// Poles of the continuations below the axis: `(location, from the bra side)`.
    fn lower_poles(&self, model: &FriedrichsModel, res: Option<&Resonance>, bra: bool) -> Vec<Complex64> {
        match &self.continuum {
            ContinuumProfile::Level => {
                let mut v: Vec<Complex64> = model
                    .form_factor()
                    .poles()
                    .iter()
                    .map(|p| p.at)
                    .filter(|p| p.im < 0.0)
                    .collect();
                if bra {
                    if let Some(r) = res {
                        v.push(r.z1);
                    }
                }
                v
            }
            ContinuumProfile::Rational { terms } => terms
                .iter()
                .map(|t| if bra { t.pole.conj() } else { t.pole })
                .filter(|p| p.im < 0.0)
                .collect(),
            _ => Vec::new(),
        }
    }

    fn breakpoint_hints(&self, res: Option<&Resonance>) -> Vec<(f64, f64)> {
        match &self.continuum {
            ContinuumProfile::Level => res.map(|r| vec![(r.nu, r.gamma)]).unwrap_or_default(),
            ContinuumProfile::Rational { terms } => {
                terms.iter().map(|t| (t.pole.re, t.pole.im.abs())).collect()
            }
            _ => Vec::new(),
        }
    }
}

fn not_continuable() -> Error {
    Error::Admissibility(
        "a sampled continuum profile has no declared continuation to the lower half plane".into(),
    )
}

fn interpolate(x: &[f64], y: &[Complex64], e: f64) -> Complex64 {
    if e <= x[0] || e >= x[x.len() - 1] {
        return Complex64::new(0.0, 0.0);
    }
    let k = x.partition_point(|v| *v <= e).clamp(1, x.len() - 1);
    let s = (e - x[k - 1]) / (x[k] - x[k - 1]);
    y[k - 1] * (1.0 - s) + y[k] * s
}

/// `η±(E)` on `(0, R)`, and its large-`E` form `E − ω₁ − M₀/E ± iπw(E)` beyond.
fn boundary_eta(model: &FriedrichsModel, e: f64, side: Side) -> Result<Complex64> {
    if e < model.cutoff() {
        return model.eta_boundary(e, side);
    }
    let w = model.form_factor().w_real(e);
    Ok(Complex64::new(
        e - model.omega1() - model.coupling_norm() / e,
        side.sign() * PI * w,
    ))
}

/// Both sides of the retarded unity decomposition of `⟨φ|ψ⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InnerProductCheck {
    /// Real-axis quadrature of `Σ φ_n*ψ_n + ∫ φ₊*(E)ψ₊(E) dE`.
    pub direct: Complex64,
    /// Discrete terms + pole terms + `Γ₊` background.
    pub decomposed: Complex64,
    pub discrete: Complex64,
    pub pole_terms: Complex64,
    pub background: Complex64,
    pub residual: f64,
}

const PANEL: usize = 16;
const TAIL: usize = 64;
const CIRCLE: usize = 256;

fn discrete_overlap(phi: &StateCoefficients, psi: &StateCoefficients) -> Complex64 {
    phi.discrete
        .iter()
        .filter_map(|(k, a)| psi.discrete.get(k).map(|b| a.conj() * b))
        .sum()
}

/// `∫_R^∞ φ₊*ψ₊ dE` through `E = R/u`.
fn tail_overlap(model: &FriedrichsModel, phi: &StateCoefficients, psi: &StateCoefficients) -> Result<Complex64> {
    let r = model.cutoff();
    let mut acc = Complex64::new(0.0, 0.0);
    for (u, wt) in gauss_legendre(TAIL, 0.0, 1.0)?.iter() {
        let e = r / u;
        acc += phi.continuum_value(model, e)?.conj() * psi.continuum_value(model, e)? * (wt * r / (u * u));
    }
    Ok(acc)
}

fn reconstruct_direct(
    model: &FriedrichsModel,
    res: Option<&Resonance>,
    phi: &StateCoefficients,
    psi: &StateCoefficients,
) -> Result<Complex64> {
    let r = model.cutoff();
    let mut breaks = vec![0.0, r];
    breaks.extend((1..=30).map(|k| r * 0.5f64.powi(k)));
    for (centre, width) in phi.breakpoint_hints(res).into_iter().chain(psi.breakpoint_hints(res)) {
        breaks.extend(graded_breaks(0.0, r, centre, (0.25 * width).max(1e-12)));
    }
    if let ContinuumProfile::Sampled { energies, .. } = &phi.continuum {
        breaks.extend(energies.iter().filter(|e| **e > 0.0 && **e < r));
    }
    if let ContinuumProfile::Sampled { energies, .. } = &psi.continuum {
        breaks.extend(energies.iter().filter(|e| **e > 0.0 && **e < r));
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (1.0 + y.abs()));
    let rule = composite(&refine_breaks(&breaks, 0.25), PANEL)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for (e, wt) in rule.iter() {
        acc += phi.continuum_value(model, e)?.conj() * psi.continuum_value(model, e)? * wt;
    }
    Ok(acc + tail_overlap(model, phi, psi)? + discrete_overlap(phi, psi))
}

/// Checks `⟨φ|ψ⟩ = Σ_n φ_n*ψ_n + Σ_k ⟨φ|f_k⁺⟩⟨f_k⁻|ψ⟩ + ∫_{Γ₊} φ₊*(z)ψ₊(z) dz`.
///
/// The continuum integral over `[0, R]` is deformed below the axis; every pole of the
/// continued integrand crossed on the way contributes `−∮ g dz` around a small circle.
pub fn reconstruct_inner_product(
    model: &FriedrichsModel,
    res: &Resonance,
    phi: &StateCoefficients,
    psi: &StateCoefficients,
) -> Result<InnerProductCheck> {
    let coupled = !model.form_factor().is_zero();
    let res_opt = coupled.then_some(res);
    let direct = reconstruct_direct(model, res_opt, phi, psi)?;
    let discrete = discrete_overlap(phi, psi);
    let trivial = |s: &StateCoefficients| matches!(s.continuum, ContinuumProfile::Zero);
    let tail = tail_overlap(model, phi, psi)?;
    if trivial(phi) || trivial(psi) {
        let decomposed = discrete;
        return Ok(InnerProductCheck {
            direct,
            decomposed,
            discrete,
            pole_terms: Complex64::new(0.0, 0.0),
            background: Complex64::new(0.0, 0.0),
            residual: (decomposed - direct).norm(),
        });
    }
    // validates that both profiles can be continued
    let probe = Complex64::new(0.5 * model.cutoff(), -0.1);
    phi.bra(model, probe)?;
    psi.ket(model, probe)?;

    let depth = model
        .contour()
        .depth
        .unwrap_or_else(|| if coupled { default_depth(res) } else { 0.5 });
    let path = ContourPath::gamma_plus(depth, model.cutoff())?;
    let bra_level = matches!(phi.continuum, ContinuumProfile::Level);
    if bra_level && coupled {
        check_admissible(model, res, &path)?;
    }
    let mut poles = phi.lower_poles(model, res_opt, true);
    poles.extend(psi.lower_poles(model, res_opt, false));
    poles.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    poles.dedup_by(|a, b| (*a - *b).norm() < 1e-12);
    let r = model.cutoff();
    for p in &poles {
        let margin = (p.im + depth).abs().min(p.re.abs()).min((p.re - r).abs());
        let near_path = margin < 1e-6 && p.im > -depth - 1e-6 && p.re > -1e-6 && p.re < r + 1e-6;
        if near_path {
            return Err(Error::ContourConfiguration(format!("pole {p} lies on the deformed path")));
        }
    }
    let enclosed: Vec<Complex64> = poles
        .iter()
        .copied()
        .filter(|p| p.im > -depth && p.re > 0.0 && p.re < r)
        .collect();

    let g = |z: Complex64| -> Result<Complex64> { Ok(phi.bra(model, z)? * psi.ket(model, z)?) };

    let mut pole_terms = Complex64::new(0.0, 0.0);
    for (i, p) in enclosed.iter().enumerate() {
        let mut radius = (-p.im).min(depth + p.im).min(p.re).min(r - p.re);
        for (j, q) in poles.iter().enumerate() {
            if poles[j] != enclosed[i] {
                radius = radius.min((p - q).norm());
            }
        }
        let radius = 0.5 * radius;
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..CIRCLE {
            let e = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / CIRCLE as f64);
            acc += g(p + radius * e)? * e;
        }
        // ∮ g dz = i r ∫ g e^{iθ} dθ
        pole_terms -= Complex64::new(0.0, radius * 2.0 * PI / CIRCLE as f64) * acc;
    }

    let mut grading = vec![Grading {
        point: Complex64::new(0.0, 0.0),
        scale: 1e-6,
    }];
    for p in &poles {
        let dist = (p.im + depth).abs().max(1e-9);
        grading.push(Grading {
            point: *p,
            scale: 0.5 * dist,
        });
    }
    let nodes = discretize(
        &path,
        &ContourRule {
            nodes_per_panel: PANEL,
            max_panel_len: 0.25,
            grading,
        },
    )?;
    let mut background = tail;
    for (z, wt) in nodes.points.iter().zip(&nodes.weights) {
        background += g(*z)? * wt;
    }
    let decomposed = discrete + pole_terms + background;
    if !decomposed.is_finite() {
        return Err(Error::NumericalDomain("decomposed inner product not finite".into()));
    }
    Ok(InnerProductCheck {
        direct,
        decomposed,
        discrete,
        pole_terms,
        background,
        residual: (decomposed - direct).norm(),
    })
}
