//! Hardy-class membership and time translation of test functions.
//!
//! Fourier conventions follow [`crate::contour_quad::spectral`]: `φ̃(s) = ∫e^{−iEs}φ(E)dE`,
//! so `H²₊` (analytic above the axis) corresponds to support on `s > 0`, and
//! `e^{−iEt}φ(E)` has representative `φ̃(s + t)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour_quad::{
    composite, energy_to_s, gauss_legendre, graded_breaks, refine_breaks, s_to_energy,
    support_profile, SupportOptions, SymmetricGrid,
};
use crate::error::{Error, Result};
use crate::friedrichs::RationalTerm;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunctionSpec {
    /// `Σ c_j/(E − p_j)^{m_j}`.
    Rational { terms: Vec<RationalTerm> },
    /// `A·e^{−α(E−c)²}`.
    Gaussian {
        #[serde(default = "one")]
        amplitude: Complex64,
        #[serde(default)]
        centre: f64,
        #[serde(default = "unit")]
        exponent: f64,
    },
    /// `φ̃(s) = A·exp(−1/(1−x²))`, `x` the image of `s ∈ [a, b]` on `[−1, 1]`, zero outside.
    Bump {
        a: f64,
        b: f64,
        #[serde(default = "one")]
        amplitude: Complex64,
    },
    /// Values on a symmetric uniform grid; no continuation.
    Sampled {
        energies: Vec<f64>,
        values: Vec<Complex64>,
    },
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn unit() -> f64 {
    1.0
}

fn mollifier(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - x * x)).exp()
    }
}

/// Default grid spacing in `s` for compact-support functions.
pub const BUMP_S_STEP: f64 = 1.0 / 64.0;

impl TestFunctionSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Rational { terms } => {
                if terms.is_empty() {
                    return Err(Error::Config("rational test function needs a term".into()));
                }
                for t in terms {
                    if t.order == 0 || t.pole.im == 0.0 || !t.pole.is_finite() {
                        return Err(Error::Config(format!("invalid rational term {t:?}")));
                    }
                    if t.order == 1 && terms.len() == 1 && t.coeff.norm() == 0.0 {
                        return Err(Error::Config("test function vanishes".into()));
                    }
                }
            }
            Self::Gaussian { amplitude, exponent, .. } => {
                if !(*exponent > 0.0) || amplitude.norm() == 0.0 {
                    return Err(Error::Config("gaussian needs exponent > 0 and nonzero amplitude".into()));
                }
            }
            Self::Bump { a, b, amplitude } => {
                if !(a < b) || !a.is_finite() || !b.is_finite() || amplitude.norm() == 0.0 {
                    return Err(Error::Config(format!("bump needs a < b and nonzero amplitude, got [{a}, {b}]")));
                }
            }
            Self::Sampled { energies, values } => {
                if energies.len() != values.len() {
                    return Err(Error::Config("sampled energies and values differ in length".into()));
                }
                SymmetricGrid::from_points(energies)?;
            }
        }
        Ok(())
    }

    /// `c·φ`.
    pub fn scaled(&self, c: Complex64) -> Self {
        match self {
            Self::Rational { terms } => Self::Rational {
                terms: terms
                    .iter()
                    .map(|t| RationalTerm {
                        coeff: t.coeff * c,
                        ..*t
                    })
                    .collect(),
            },
            Self::Gaussian { amplitude, centre, exponent } => Self::Gaussian {
                amplitude: amplitude * c,
                centre: *centre,
                exponent: *exponent,
            },
            Self::Bump { a, b, amplitude } => Self::Bump {
                a: *a,
                b: *b,
                amplitude: amplitude * c,
            },
            Self::Sampled { energies, values } => Self::Sampled {
                energies: energies.clone(),
                values: values.iter().map(|v| v * c).collect(),
            },
        }
    }

    /// `φ(E)*`; for the bump this mirrors the support to `[−b, −a]`.
    pub fn conj(&self) -> Self {
        match self {
            Self::Rational { terms } => Self::Rational {
                terms: terms
                    .iter()
                    .map(|t| RationalTerm {
                        coeff: t.coeff.conj(),
                        pole: t.pole.conj(),
                        order: t.order,
                    })
                    .collect(),
            },
            Self::Gaussian { amplitude, centre, exponent } => Self::Gaussian {
                amplitude: amplitude.conj(),
                centre: *centre,
                exponent: *exponent,
            },
            Self::Bump { a, b, amplitude } => Self::Bump {
                a: -b,
                b: -a,
                amplitude: amplitude.conj(),
            },
            Self::Sampled { energies, values } => Self::Sampled {
                energies: energies.clone(),
                values: values.iter().map(|v| v.conj()).collect(),
            },
        }
    }

    /// `φ̃(s)` for the compact-support kind.
    pub fn s_value(&self, s: f64) -> Option<Complex64> {
        match self {
            Self::Bump { a, b, amplitude } => {
                Some(amplitude * mollifier((2.0 * s - a - b) / (b - a)))
            }
            _ => None,
        }
    }

    /// `φ(z)` wherever a continuation is declared.
    pub fn continued(&self, z: Complex64) -> Result<Complex64> {
        match self {
            Self::Rational { terms } => Ok(terms.iter().map(|t| t.coeff / (z - t.pole).powu(t.order)).sum()),
            Self::Gaussian { amplitude, centre, exponent } => {
                Ok(amplitude * (-(z - centre) * (z - centre) * *exponent).exp())
            }
            Self::Bump { a, b, .. } => {
                let rule = gauss_legendre(200, *a, *b)?;
                Ok(rule.integrate_complex(|s| {
                    self.s_value(s).unwrap() * (Complex64::new(0.0, s) * z).exp()
                }) / (2.0 * PI))
            }
            Self::Sampled { .. } => Err(Error::Admissibility(
                "sampled test function has no declared analytic continuation".into(),
            )),
        }
    }

    /// Grid on which the function is sampled for the support analysis.
    pub fn energy_grid(&self, points: usize) -> Result<SymmetricGrid> {
        match self {
            Self::Rational { terms } => {
                let d = terms.iter().map(|t| t.pole.im.abs()).fold(f64::INFINITY, f64::min);
                SymmetricGrid::new(points, PI * d / 16.0)
            }
            Self::Gaussian { exponent, .. } => {
                let sigma = (0.5 / exponent).sqrt();
                SymmetricGrid::new(points, PI * sigma / 12.0)
            }
            Self::Bump { .. } => Ok(SymmetricGrid::new(points, BUMP_S_STEP)?.dual()),
            Self::Sampled { energies, .. } => SymmetricGrid::from_points(energies),
        }
    }

    /// Samples of `φ` on `grid`.
    pub fn sample(&self, grid: &SymmetricGrid) -> Result<Vec<Complex64>> {
        match self {
            Self::Bump { .. } => {
                let sg = grid.dual();
                let s: Vec<Complex64> = sg.points().iter().map(|s| self.s_value(*s).unwrap()).collect();
                s_to_energy(sg, &s)
            }
            Self::Sampled { energies, values } => {
                if energies.len() != grid.len {
                    return Err(Error::Config("sampled function lives on a different grid".into()));
                }
                Ok(values.clone())
            }
            _ => grid
                .points()
                .iter()
                .map(|e| self.continued(Complex64::new(*e, 0.0)))
                .collect(),
        }
    }

    /// Points and widths where `|φ(E + iy)|²` varies fastest.
    fn features(&self, y: f64) -> Vec<(f64, f64)> {
        match self {
            Self::Rational { terms } => terms
                .iter()
                .map(|t| (t.pole.re, (t.pole.im - y).abs()))
                .collect(),
            Self::Gaussian { centre, exponent, .. } => vec![(*centre, (0.5 / exponent).sqrt())],
            _ => vec![(0.0, 1.0)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HardyClass {
    #[serde(rename = "H2_plus")]
    H2Plus,
    #[serde(rename = "H2_minus")]
    H2Minus,
    #[serde(rename = "neither")]
    Neither,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HardyOptions {
    pub points: usize,
    /// Largest forbidden-side share of the `s` mass still counted as zero.
    pub forbidden_threshold: f64,
    pub y_grid: Vec<f64>,
    /// Relative slack in `I(y) ≤ I(0)`.
    pub bounded_tolerance: f64,
    /// Largest mass share tolerated in the aliasing zone of the `s` grid.
    pub alias_threshold: f64,
}

impl Default for HardyOptions {
    fn default() -> Self {
        Self {
            points: 1 << 14,
            forbidden_threshold: 1e-4,
            y_grid: vec![0.1, 0.5, 1.0, 2.0, 4.0],
            bounded_tolerance: 1e-6,
            alias_threshold: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardyReport {
    pub side_plus_fraction: f64,
    pub side_minus_fraction: f64,
    pub unresolved_fraction: f64,
    pub edge_fraction: f64,
    /// `∫_{E<0}|φ|² / ∫|φ|²` on the sampling grid.
    pub negative_energy_fraction: f64,
    /// `(y, ∫|φ(E + iy)|²dE)`, starting with `y = 0`.
    pub sup_profile_plus: Vec<(f64, f64)>,
    /// `(y, ∫|φ(E − iy)|²dE)`, starting with `y = 0`.
    pub sup_profile_minus: Vec<(f64, f64)>,
    pub bounded_plus: Option<bool>,
    pub bounded_minus: Option<bool>,
    pub verdict: HardyClass,
}

/// `∫_ℝ f(E) dE` on panels graded at the given features, with reciprocal tails.
fn line_integral<F: Fn(f64) -> f64 + Sync>(f: F, features: &[(f64, f64)]) -> Result<f64> {
    let reach = features.iter().map(|(x, w)| x.abs() + w).fold(1.0, f64::max);
    let x = 64.0 * reach;
    let mut breaks = vec![-x, x];
    for (c, w) in features {
        let c = c.clamp(-x, x);
        breaks.extend(graded_breaks(-x, x, c, 0.25 * w.max(1e-12)));
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|p, q| (*p - *q).abs() <= 1e-14 * (1.0 + q.abs()));
    let rule = composite(&refine_breaks(&breaks, x / 32.0), 16)?;
    let fin: f64 = rule.iter().map(|(e, w)| w * f(e)).sum();
    let tail_rule = gauss_legendre(64, 0.0, 1.0)?;
    let tail: f64 = tail_rule
        .iter()
        .map(|(u, w)| w * x / (u * u) * (f(x / u) + f(-x / u)))
        .sum();
    Ok(fin + tail)
}

/// `∫|φ_t(E + iσy)|²dE` with `φ_t(z) = e^{−izt}φ(z)`, `σ = ±1`.
fn shifted_norm(spec: &TestFunctionSpec, sigma: f64, y: f64, t: f64) -> Result<f64> {
    if let TestFunctionSpec::Bump { a, b, .. } = spec {
        // Plancherel: (1/2π)∫e^{−2σy(s−t)}|φ̃(s)|² ds over the support.
        let rule = gauss_legendre(400, *a, *b)?;
        return Ok(rule.integrate(|s| {
            (-2.0 * sigma * y * (s - t)).exp() * spec.s_value(s).unwrap().norm_sqr()
        }) / (2.0 * PI));
    }
    spec.continued(Complex64::new(0.0, sigma * y))?;
    if let TestFunctionSpec::Rational { terms } = spec {
        if terms.iter().any(|p| (p.pole.im - sigma * y).abs() < 1e-12) {
            return Ok(f64::INFINITY);
        }
    }
    let features = spec.features(sigma * y);
    let shift = Complex64::new(0.0, sigma * y);
    line_integral(
        |e| {
            let z = e + shift;
            ((Complex64::new(0.0, -t) * z).exp() * spec.continued(z).unwrap()).norm_sqr()
        },
        &features,
    )
}

fn profile(spec: &TestFunctionSpec, sigma: f64, ys: &[f64], t: f64) -> Result<Vec<(f64, f64)>> {
    std::iter::once(0.0)
        .chain(ys.iter().copied())
        .collect::<Vec<_>>()
        .par_iter()
        .map(|y| Ok((*y, shifted_norm(spec, sigma, *y, t)?)))
        .collect()
}

fn bounded(p: &[(f64, f64)], tol: f64) -> bool {
    let base = p[0].1;
    p.iter().all(|(_, v)| v.is_finite() && *v <= base * (1.0 + tol))
}

/// Places `spec` in `H²₊`, `H²₋` or neither, from the Fourier support and, where a
/// continuation exists, the profile `y ↦ ∫|φ(E ± iy)|²dE`.
pub fn classify_hardy(spec: &TestFunctionSpec, opts: &HardyOptions) -> Result<HardyReport> {
    spec.validate()?;
    if opts.y_grid.iter().any(|y| !(*y > 0.0)) {
        return Err(Error::Config("y_grid entries must be positive".into()));
    }
    let grid = spec.energy_grid(opts.points)?;
    let samples = spec.sample(&grid)?;
    let energies = grid.points();
    let support = support_profile(&energies, &samples, &SupportOptions::default())?;
    if support.edge_fraction > opts.alias_threshold {
        return Err(Error::Resolution(format!(
            "{:.3e} of the s-mass sits at the edges of the transform grid; refine the energy step",
            support.edge_fraction
        )));
    }
    let total: f64 = samples.iter().map(|v| v.norm_sqr()).sum();
    let negative: f64 = samples
        .iter()
        .zip(&energies)
        .filter(|(_, e)| **e <= 0.0)
        .map(|(v, e)| if *e == 0.0 { 0.5 } else { 1.0 } * v.norm_sqr())
        .sum();
    let continuable = !matches!(spec, TestFunctionSpec::Sampled { .. });
    let (plus, minus) = if continuable {
        (profile(spec, 1.0, &opts.y_grid, 0.0)?, profile(spec, -1.0, &opts.y_grid, 0.0)?)
    } else {
        (Vec::new(), Vec::new())
    };
    let bounded_plus = continuable.then(|| bounded(&plus, opts.bounded_tolerance));
    let bounded_minus = continuable.then(|| bounded(&minus, opts.bounded_tolerance));
    let plus_ok = support.negative_fraction < opts.forbidden_threshold && bounded_plus.unwrap_or(true);
    let minus_ok = support.positive_fraction < opts.forbidden_threshold && bounded_minus.unwrap_or(true);
    let verdict = match (plus_ok, minus_ok) {
        (true, false) => HardyClass::H2Plus,
        (false, true) => HardyClass::H2Minus,
        _ => HardyClass::Neither,
    };
    Ok(HardyReport {
        side_plus_fraction: support.positive_fraction,
        side_minus_fraction: support.negative_fraction,
        unresolved_fraction: support.unresolved_fraction,
        edge_fraction: support.edge_fraction,
        negative_energy_fraction: if total > 0.0 { negative / total } else { 0.0 },
        sup_profile_plus: plus,
        sup_profile_minus: minus,
        bounded_plus,
        bounded_minus,
        verdict,
    })
}

/// Support of a time-translated compact-support function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportShift {
    pub t: f64,
    /// `[a − t, b − t]`.
    pub predicted: (f64, f64),
    /// Support measured on the propagated samples.
    pub measured: (f64, f64),
    /// Support measured on the unpropagated samples, shifted by `−t`.
    pub reference: (f64, f64),
    /// `s`-mass outside the predicted interval (widened by one cell), relative to the total.
    pub leakage: f64,
    pub grid_step: f64,
    pub within_one_cell: bool,
}

fn bump_s_grid(t_values: &[f64], points: usize) -> Result<SymmetricGrid> {
    // Shifts by whole cells keep the discrete translation exact.
    let mut step = BUMP_S_STEP;
    for t in t_values {
        if t.abs() > 0.0 {
            let cells = (t.abs() / step).round();
            if (cells * step - t.abs()).abs() > 1e-12 * t.abs() {
                step = t.abs() / (t.abs() / step).ceil();
            }
        }
    }
    SymmetricGrid::new(points, step)
}

fn measured_support(grid: &SymmetricGrid, v: &[Complex64], floor: f64) -> (f64, f64) {
    let max = v.iter().map(|x| x.norm_sqr()).fold(0.0, f64::max);
    let idx: Vec<usize> = (0..v.len()).filter(|k| v[*k].norm_sqr() > floor * max).collect();
    match (idx.first(), idx.last()) {
        (Some(a), Some(b)) => (grid.point(*a), grid.point(*b)),
        _ => (0.0, 0.0),
    }
}

const SUPPORT_FLOOR: f64 = 1e-24;

/// `e^{−iEt}φ(E)` carried out in the energy domain and transformed back; the support
/// of `φ̃` moves rigidly to `[a − t, b − t]`.
pub fn propagate_support(spec: &TestFunctionSpec, t: f64, points: usize) -> Result<SupportShift> {
    let sg = bump_s_grid(&[t], points)?;
    propagate_on(spec, t, sg)
}

fn propagate_on(spec: &TestFunctionSpec, t: f64, sg: SymmetricGrid) -> Result<SupportShift> {
    let TestFunctionSpec::Bump { a, b, .. } = spec else {
        return Err(Error::Admissibility("support propagation needs a compact-support function".into()));
    };
    spec.validate()?;
    let half = sg.half_width();
    if a - t.abs() < -half || b + t.abs() > half {
        return Err(Error::Resolution(format!(
            "s grid of half-width {half} cannot hold the support shifted by {t}"
        )));
    }
    let (samples, eg) = energy_samples(spec, sg)?;
    let moved: Vec<Complex64> = samples
        .iter()
        .zip(eg.points())
        .map(|(v, e)| v * Complex64::from_polar(1.0, -e * t))
        .collect();
    let back = energy_to_s(eg, &moved)?;
    let total: f64 = back.iter().map(|v| v.norm_sqr()).sum();
    let (lo, hi) = (a - t - sg.step, b - t + sg.step);
    let outside: f64 = back
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let s = sg.point(*k);
            s < lo || s > hi
        })
        .map(|(_, v)| v.norm_sqr())
        .sum();
    let original: Vec<Complex64> = sg.points().iter().map(|s| spec.s_value(*s).unwrap()).collect();
    let r0 = measured_support(&sg, &original, SUPPORT_FLOOR);
    let reference = (r0.0 - t, r0.1 - t);
    let measured = measured_support(&sg, &back, SUPPORT_FLOOR);
    let cell = sg.step * (1.0 + 1e-9);
    Ok(SupportShift {
        t,
        predicted: (a - t, b - t),
        measured,
        reference,
        leakage: outside / total,
        grid_step: sg.step,
        within_one_cell: (measured.0 - reference.0).abs() <= cell && (measured.1 - reference.1).abs() <= cell,
    })
}

fn energy_samples(spec: &TestFunctionSpec, sg: SymmetricGrid) -> Result<(Vec<Complex64>, SymmetricGrid)> {
    let eg = sg.dual();
    Ok((spec.sample(&eg)?, eg))
}

/// Propagates by `t` then `−t` and returns the largest deviation from the original samples.
pub fn propagation_round_trip(spec: &TestFunctionSpec, t: f64, points: usize) -> Result<f64> {
    let sg = bump_s_grid(&[t], points)?;
    let (samples, eg) = energy_samples(spec, sg)?;
    let to_s = |v: &[Complex64], shift: f64| -> Result<Vec<Complex64>> {
        let moved: Vec<Complex64> = v
            .iter()
            .zip(eg.points())
            .map(|(x, e)| x * Complex64::from_polar(1.0, -e * shift))
            .collect();
        energy_to_s(eg, &moved)
    };
    let forward = to_s(&samples, t)?;
    let mid = s_to_energy(sg, &forward)?;
    let back = to_s(&mid, -t)?;
    let original: Vec<Complex64> = sg.points().iter().map(|s| spec.s_value(*s).unwrap_or_default()).collect();
    Ok(back
        .iter()
        .zip(&original)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max))
}

/// `y ↦ ∫|φ_t(E − iy)|²dE` for a function continued into the lower half plane.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthProfile {
    pub t: f64,
    pub y: Vec<f64>,
    pub propagated: Vec<f64>,
    pub unpropagated: Vec<f64>,
    /// `propagated / unpropagated`, equal to `e^{2y|t|}` for `t < 0`.
    pub gain: Vec<f64>,
    /// `gain(y_{k+1}) / gain(y_k)`.
    pub successive_ratios: Vec<f64>,
    /// `e^{−2(y_{k+1} − y_k)t}`.
    pub expected_ratios: Vec<f64>,
    /// `propagated(y) ≤ unpropagated(y)` at every `y`.
    pub bounded_by_initial: bool,
}

pub fn semigroup_violation(spec: &TestFunctionSpec, t: f64, y_grid: &[f64]) -> Result<GrowthProfile> {
    spec.validate()?;
    if y_grid.is_empty() || y_grid.iter().any(|y| !(*y >= 0.0)) {
        return Err(Error::Config("y grid must be non-empty and non-negative".into()));
    }
    if matches!(spec, TestFunctionSpec::Sampled { .. }) {
        return Err(Error::Admissibility(
            "semigroup analysis needs a declared continuation to the lower half plane".into(),
        ));
    }
    let rows = y_grid
        .par_iter()
        .map(|y| Ok((shifted_norm(spec, -1.0, *y, t)?, shifted_norm(spec, -1.0, *y, 0.0)?)))
        .collect::<Result<Vec<_>>>()?;
    let (propagated, unpropagated): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
    let gain: Vec<f64> = propagated.iter().zip(&unpropagated).map(|(a, b)| a / b).collect();
    let successive_ratios = gain.windows(2).map(|g| g[1] / g[0]).collect();
    let expected_ratios = y_grid.windows(2).map(|y| (-2.0 * (y[1] - y[0]) * t).exp()).collect();
    let bounded_by_initial = propagated
        .iter()
        .zip(&unpropagated)
        .all(|(a, b)| *a <= b * (1.0 + 1e-12));
    Ok(GrowthProfile {
        t,
        y: y_grid.to_vec(),
        propagated,
        unpropagated,
        gain,
        successive_ratios,
        expected_ratios,
        bounded_by_initial,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureEntry {
    pub t: f64,
    pub passed: bool,
    /// Out-of-support mass share (compact-support functions).
    pub leakage: Option<f64>,
    /// `max_y I_t(y)/I_t(0)` on the side where the function started bounded.
    pub growth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureReport {
    pub entries: Vec<ClosureEntry>,
    pub max_leakage: f64,
    pub closed: bool,
}

/// Largest leakage accepted as "support preserved".
pub const LEAKAGE_THRESHOLD: f64 = 1e-10;

/// Applies `e^{−iEt}` for every `t` and checks that the function stays in its space: a
/// compact-support function must keep compact support; any other function must keep the
/// Hardy bound on the side where it held initially.
pub fn z_space_group_closure(spec: &TestFunctionSpec, t_list: &[f64], opts: &HardyOptions) -> Result<ClosureReport> {
    spec.validate()?;
    let entries = match spec {
        TestFunctionSpec::Bump { .. } => {
            let sg = bump_s_grid(t_list, opts.points)?;
            t_list
                .par_iter()
                .map(|t| {
                    let s = propagate_on(spec, *t, sg)?;
                    Ok(ClosureEntry {
                        t: *t,
                        passed: s.leakage < LEAKAGE_THRESHOLD,
                        leakage: Some(s.leakage),
                        growth: None,
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
        TestFunctionSpec::Sampled { .. } => {
            return Err(Error::Admissibility("time translation check needs a continuation".into()))
        }
        _ => {
            let minus = profile(spec, -1.0, &opts.y_grid, 0.0)?;
            let sigma = if bounded(&minus, opts.bounded_tolerance) { -1.0 } else { 1.0 };
            t_list
                .par_iter()
                .map(|t| {
                    let p = profile(spec, sigma, &opts.y_grid, *t)?;
                    let base = p[0].1;
                    let growth = p.iter().map(|(_, v)| v / base).fold(0.0, f64::max);
                    Ok(ClosureEntry {
                        t: *t,
                        passed: growth <= 1.0 + opts.bounded_tolerance,
                        leakage: None,
                        growth: Some(growth),
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    let max_leakage = entries.iter().filter_map(|e| e.leakage).fold(0.0, f64::max);
    Ok(ClosureReport {
        closed: entries.iter().all(|e| e.passed),
        max_leakage,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pole(p: Complex64, order: u32) -> TestFunctionSpec {
        TestFunctionSpec::Rational {
            terms: vec![RationalTerm {
                coeff: c(1.0, 0.0),
                pole: p,
                order,
            }],
        }
    }

    fn gaussian() -> TestFunctionSpec {
        TestFunctionSpec::Gaussian {
            amplitude: c(1.0, 0.0),
            centre: 0.0,
            exponent: 1.0,
        }
    }

    fn bump(a: f64, b: f64) -> TestFunctionSpec {
        TestFunctionSpec::Bump {
            a,
            b,
            amplitude: c(1.0, 0.0),
        }
    }

    #[test]
    fn classifies_the_three_reference_functions() {
        let o = HardyOptions::default();
        let p = classify_hardy(&pole(c(0.0, -1.0), 1), &o).unwrap();
        assert_eq!(p.verdict, HardyClass::H2Plus);
        assert!(p.side_minus_fraction < 1e-4);
        assert_eq!(p.bounded_plus, Some(true));
        assert_eq!(p.bounded_minus, Some(false));
        let m = classify_hardy(&pole(c(0.0, 1.0), 1), &o).unwrap();
        assert_eq!(m.verdict, HardyClass::H2Minus);
        assert!(m.side_plus_fraction < 1e-4);
        let g = classify_hardy(&gaussian(), &o).unwrap();
        assert_eq!(g.verdict, HardyClass::Neither);
        assert!((g.negative_energy_fraction - 0.5).abs() < 1e-6);
    }

    #[test]
    fn sup_profile_matches_closed_form() {
        // ∫|1/(E + iy + i)|² dE = π/(1 + y)
        let o = HardyOptions::default();
        let r = classify_hardy(&pole(c(0.0, -1.0), 1), &o).unwrap();
        for (y, v) in &r.sup_profile_plus {
            assert!((v - PI / (1.0 + y)).abs() < 1e-8 * v, "y={y}: {v}");
        }
    }

    #[test]
    fn bumps_are_entire_but_supported_one_side() {
        let o = HardyOptions::default();
        let r = classify_hardy(&bump(0.5, 1.5), &o).unwrap();
        assert_eq!(r.verdict, HardyClass::H2Plus);
        let r = classify_hardy(&bump(-1.0, 2.0), &o).unwrap();
        assert_eq!(r.verdict, HardyClass::Neither);
    }

    #[test]
    fn sampled_functions_use_the_support_alone() {
        let spec = pole(c(0.0, -1.0), 1);
        let g = spec.energy_grid(1 << 14).unwrap();
        let s = TestFunctionSpec::Sampled {
            energies: g.points(),
            values: spec.sample(&g).unwrap(),
        };
        let r = classify_hardy(&s, &HardyOptions::default()).unwrap();
        assert_eq!(r.verdict, HardyClass::H2Plus);
        assert_eq!(r.bounded_plus, None);
        assert!(matches!(
            semigroup_violation(&s, -1.0, &[0.1, 0.2]),
            Err(Error::Admissibility(_))
        ));
    }

    #[test]
    fn coarse_grid_is_unresolved() {
        let spec = pole(c(0.0, -1.0), 1);
        let g = SymmetricGrid::new(1 << 12, 3.0).unwrap();
        let s = TestFunctionSpec::Sampled {
            energies: g.points(),
            values: spec.sample(&g).unwrap(),
        };
        assert!(matches!(classify_hardy(&s, &HardyOptions::default()), Err(Error::Resolution(_))));
    }

    #[test]
    fn support_moves_rigidly() {
        let s = propagate_support(&bump(-1.0, 2.0), 3.0, 1 << 14).unwrap();
        assert_eq!(s.predicted, (-4.0, -1.0));
        assert!(s.leakage < 1e-10, "{}", s.leakage);
        assert!(s.within_one_cell);
        let z = propagate_support(&bump(-1.0, 2.0), 0.0, 1 << 14).unwrap();
        assert_eq!(z.predicted, (-1.0, 2.0));
        assert!(propagation_round_trip(&bump(-1.0, 2.0), 3.0, 1 << 14).unwrap() < 1e-10);
        assert!(propagate_support(&pole(c(0.0, 1.0), 1), 1.0, 1 << 14).is_err());
    }

    #[test]
    fn semigroup_growth_for_minus_functions() {
        let spec = pole(c(0.0, 1.0), 2);
        let ys = [0.1, 0.2, 0.3, 0.4];
        let g = semigroup_violation(&spec, -1.0, &ys).unwrap();
        for (r, e) in g.successive_ratios.iter().zip(&g.expected_ratios) {
            assert!((r / e - 1.0).abs() < 0.05);
        }
        assert!(!g.bounded_by_initial);
        let zero = semigroup_violation(&spec, 0.0, &ys).unwrap();
        assert_eq!(zero.propagated, zero.unpropagated);
        let plus = semigroup_violation(&spec, 1.0, &ys).unwrap();
        assert!(plus.bounded_by_initial);
    }

    #[test]
    fn closure_contrast() {
        let o = HardyOptions::default();
        let ts = [-10.0, -1.0, 0.0, 1.0, 10.0];
        let r = z_space_group_closure(&bump(0.0, 1.0), &ts, &o).unwrap();
        assert!(r.closed);
        assert!(r.max_leakage < 1e-10);
        let empty = z_space_group_closure(&bump(0.0, 1.0), &[], &o).unwrap();
        assert!(empty.closed && empty.entries.is_empty());
        let r = z_space_group_closure(&pole(c(0.0, 1.0), 2), &ts, &o).unwrap();
        assert!(!r.closed);
        for e in &r.entries {
            assert_eq!(e.passed, e.t >= 0.0, "t={}", e.t);
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(pole(c(1.0, 0.0), 1).validate().is_err());
        assert!(bump(1.0, 0.0).validate().is_err());
        let o = HardyOptions {
            y_grid: vec![-1.0],
            ..Default::default()
        };
        assert!(classify_hardy(&gaussian(), &o).is_err());
    }
}
