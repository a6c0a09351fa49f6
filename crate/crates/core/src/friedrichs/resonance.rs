use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::model::{FriedrichsModel, Side};
use crate::contour_quad::{principal_value, winding_number, ContourPath, PvRange};
use crate::error::{Error, Result};

/// Second-sheet pole `z₁ = ν − iγ` with its residue weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Resonance {
    pub z1: Complex64,
    pub nu: f64,
    pub gamma: f64,
    /// `Γ = 2γ`.
    pub decay_rate: f64,
    /// `1/η₊′(z₁)`.
    pub weight: Complex64,
    pub iterations: usize,
}

impl Resonance {
    fn at(z1: Complex64, weight: Complex64, iterations: usize) -> Self {
        Self {
            z1,
            nu: z1.re,
            gamma: -z1.im,
            decay_rate: -2.0 * z1.im,
            weight,
            iterations,
        }
    }
}

pub const NEWTON_MAX_ITER: usize = 100;

/// `z₁ ≈ ω₁ + PV∫ w(ω)/(ω₁−ω) dω − iπ w(ω₁)`.
pub fn resonance_first_order(model: &FriedrichsModel) -> Result<Complex64> {
    let ff = model.form_factor();
    let w1 = ff.w_real(model.omega1());
    if ff.is_zero() {
        return Ok(Complex64::new(model.omega1(), 0.0));
    }
    let shift = principal_value(
        |o| ff.w_real(o),
        model.omega1(),
        PvRange::SemiInfinite(*model.quad()),
        24,
    )?;
    Ok(Complex64::new(model.omega1() + shift, -PI * w1))
}

fn tolerance(z: Complex64) -> f64 {
    1e-12 * z.norm().max(1.0)
}

/// Newton iteration on the continuation of `η_side`.
fn newton(
    model: &FriedrichsModel,
    side: Side,
    guess: Complex64,
    max_iter: usize,
) -> Result<(Complex64, usize)> {
    let f = |z: Complex64| model.eta_continued(z, side);
    let mut z = guess;
    let mut trace = vec![z];
    for it in 0..max_iter {
        let fz = f(z)?;
        if fz.norm() < tolerance(z) {
            return Ok((z, it));
        }
        let h = 1e-6 * z.norm().max(1.0);
        let d = (f(z + h)? - f(z - h)?) / (2.0 * h);
        if d.norm() == 0.0 || !d.is_finite() {
            break;
        }
        let mut step = fz / d;
        // keep the iterate off the branch point at the threshold
        while (z - step).re <= 0.0 && (z - step).im.abs() < 1e-3 && step.norm() > 1e-300 {
            step *= 0.5;
        }
        z -= step;
        trace.push(z);
        if !z.is_finite() {
            break;
        }
    }
    let residual = f(z).map(|v| v.norm()).unwrap_or(f64::NAN);
    Err(Error::RootSearch {
        iterations: max_iter,
        last: z,
        residual,
        trace,
    })
}

/// `dη_side/dz` from a five-point stencil.
fn derivative(model: &FriedrichsModel, side: Side, z: Complex64) -> Result<Complex64> {
    let h = 1e-3 * z.norm().min(1.0);
    let f = |k: f64| model.eta_continued(z + h * k, side);
    Ok((8.0 * (f(1.0)? - f(-1.0)?) - (f(2.0)? - f(-2.0)?)) / (12.0 * h))
}

/// Resonance pole of `η₊` continued to the lower half plane.
///
/// Without a guess the iteration starts from [`resonance_first_order`].
pub fn find_resonance(model: &FriedrichsModel, guess: Option<Complex64>) -> Result<Resonance> {
    find_pole(model, Side::Plus, guess)
}

/// Pole on either branch: `Plus` lives in `Im z < 0`, `Minus` in `Im z > 0`; each branch
/// is computed from its own continuation.
pub fn find_pole(model: &FriedrichsModel, side: Side, guess: Option<Complex64>) -> Result<Resonance> {
    if model.form_factor().is_zero() {
        return Ok(Resonance::at(
            Complex64::new(model.omega1(), 0.0),
            Complex64::new(1.0, 0.0),
            0,
        ));
    }
    let start = match guess {
        Some(g) => g,
        None => {
            let z = resonance_first_order(model)?;
            match side {
                Side::Plus => z,
                Side::Minus => z.conj(),
            }
        }
    };
    let (z1, iterations) = newton(model, side, start, NEWTON_MAX_ITER)?;
    if z1.im * side.sign() >= 0.0 {
        return Err(Error::Branch(z1));
    }
    let weight = 1.0 / derivative(model, side, z1)?;
    Ok(Resonance::at(z1, weight, iterations))
}

/// Zeros of `η_II` enclosed by a closed counter-clockwise path in `Im z ≤ 0`, from the
/// argument principle corrected by the poles it inherits from `w`.
pub fn count_second_sheet_zeros(model: &FriedrichsModel, path: &ContourPath) -> Result<i64> {
    if path.vertices().iter().any(|z| z.im > 0.0) {
        return Err(Error::ContourConfiguration(
            "zero count needs a path in the closed lower half plane".into(),
        ));
    }
    let winding = winding_number(|z| model.eta_continued(z, Side::Plus), path)?;
    let poles: i64 = model
        .form_factor()
        .poles()
        .iter()
        .filter(|p| inside(path, p.at))
        .map(|p| p.order as i64)
        .sum();
    Ok(winding + poles)
}

/// Even-odd test for a point against a closed polygon.
pub(crate) fn inside(path: &ContourPath, z: Complex64) -> bool {
    let mut c = false;
    for (a, b) in path.segments() {
        if (a.im > z.im) != (b.im > z.im) {
            let x = a.re + (z.im - a.im) * (b.re - a.re) / (b.im - a.im);
            if z.re < x {
                c = !c;
            }
        }
    }
    c
}

/// Real eigenvalue below the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundState {
    pub energy: f64,
    /// Overlap `|⟨1|E_b⟩|²`, the point mass carried by the discrete level.
    pub weight: f64,
}

/// Discrete part of the spectrum of the initial level.
///
/// A zero of `η` on `(−∞, 0)` exists exactly when `η(0⁻) > 0`. At `λ = 0` the unperturbed
/// level itself is reported with unit weight.
pub fn bound_state(model: &FriedrichsModel) -> Result<Option<BoundState>> {
    if model.form_factor().is_zero() {
        return Ok(Some(BoundState {
            energy: model.omega1(),
            weight: 1.0,
        }));
    }
    let eta = |e: f64| e - model.omega1() - model.self_energy(Complex64::new(e, 0.0), Side::Plus).re;
    if eta(0.0) <= 0.0 {
        return Ok(None);
    }
    let mut lo = -1.0;
    while eta(lo) > 0.0 {
        lo *= 2.0;
        if lo < -1e12 {
            return Err(Error::RootSearch {
                iterations: 0,
                last: Complex64::new(lo, 0.0),
                residual: eta(lo),
                trace: Vec::new(),
            });
        }
    }
    let mut hi = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if eta(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-15 * lo.abs().max(1.0) {
            break;
        }
    }
    let e = 0.5 * (lo + hi);
    let h = 1e-4 * e.abs().clamp(1e-3, 1.0);
    let h = h.min(0.25 * e.abs());
    let d = (8.0 * (eta(e + h) - eta(e - h)) - (eta(e + 2.0 * h) - eta(e - 2.0 * h))) / (12.0 * h);
    Ok(Some(BoundState {
        energy: e,
        weight: 1.0 / d,
    }))
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::friedrichs::{ContourSettings, Family, FormFactor};
    use crate::contour_quad::SemiInfiniteSpec;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn model(lambda: f64) -> FriedrichsModel {
        FriedrichsModel::lorentzian(1.0, lambda).unwrap()
    }

    #[test]
    fn degenerate_coupling() {
        let r = find_resonance(&model(0.0), None).unwrap();
        assert_eq!(r.z1, c(1.0, 0.0));
        assert_eq!(r.decay_rate, 0.0);
        assert_eq!(r.weight, c(1.0, 0.0));
        assert_eq!(resonance_first_order(&model(0.0)).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn matches_high_precision_reference() {
        // 40-digit continuation of η₊ evaluated independently.
        let cases = [
            (
                0.02,
                c(1.00010012449013618856, -0.000314208559519361210),
                c(1.000256959381318787, 0.000314594689738135661),
            ),
            (
                0.05,
                c(1.00062988056657843415, -0.00196540979410961040),
                c(1.00160194271302362466, 0.00198054234513633833),
            ),
            (
                0.1,
                c(1.00257909989950829774, -0.00788394652587193597),
                c(1.00634379338660331913, 0.00812879111050443902),
            ),
            (
                0.2,
                c(1.01132993468849137401, -0.0318456065030152540),
                c(1.02393228586341647985, 0.0359067504604710699),
            ),
        ];
        for (lambda, z1, weight) in cases {
            let m = model(lambda);
            let r = find_resonance(&m, None).unwrap();
            assert!((r.z1 - z1).norm() < 1e-11, "λ={lambda}: {} vs {z1}", r.z1);
            assert!((r.weight - weight).norm() < 1e-9, "λ={lambda}: {} vs {weight}", r.weight);
            assert!(m.eta_second_sheet(r.z1).unwrap().norm() < 1e-10);
            assert_eq!(r.decay_rate, 2.0 * r.gamma);
        }
    }

    #[test]
    fn first_order_has_golden_rule_width() {
        let m = model(0.05);
        let z = resonance_first_order(&m).unwrap();
        let w1 = m.form_factor().w_real(1.0);
        assert!((z.im + PI * w1).abs() < 1e-15);
        // At ω₁ = 1 the Lorentzian shift is PV∫ω/((1+ω²)²(1−ω)) = 1/4 per unit λ².
        assert!((z.re - 1.0 - 0.0025 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn first_order_error_is_fourth_order() {
        let err = |l: f64| {
            let m = model(l);
            (find_resonance(&m, None).unwrap().z1 - resonance_first_order(&m).unwrap()).norm()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((8.0..32.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn winding_count_confirms_single_zero() {
        let m = model(0.1);
        let r = find_resonance(&m, None).unwrap();
        let rect = ContourPath::rectangle(0.5, 1.5, -0.3, -1e-3).unwrap();
        assert!(inside(&rect, r.z1));
        assert_eq!(count_second_sheet_zeros(&m, &rect).unwrap(), 1);
        let empty = ContourPath::rectangle(2.0, 3.0, -0.3, -0.01).unwrap();
        assert_eq!(count_second_sheet_zeros(&m, &empty).unwrap(), 0);
    }

    #[test]
    fn minus_branch_is_conjugate() {
        for l in [0.05, 0.3, 0.7] {
            let m = model(l);
            let plus = find_resonance(&m, None).unwrap();
            let minus = find_pole(&m, Side::Minus, None).unwrap();
            assert!((minus.z1 - plus.z1.conj()).norm() < 1e-10);
        }
    }

    #[test]
    fn newton_failure_reports_trace() {
        // A start on the wrong half plane converges to the conjugate point of the other branch.
        let m = model(0.1);
        match find_pole(&m, Side::Plus, Some(c(1.0, 0.5))) {
            Err(Error::Branch(_)) | Err(Error::RootSearch { .. }) => {}
            Ok(r) => assert!(r.z1.im < 0.0),
            Err(e) => panic!("unexpected {e}"),
        }
        match newton(&m, Side::Plus, c(3.0, -0.5), 2) {
            Err(Error::RootSearch { trace, iterations, .. }) => {
                assert_eq!(iterations, 2);
                assert_eq!(trace.len(), 3);
            }
            other => panic!("expected root-search failure, got {other:?}"),
        }
    }

    #[test]
    fn bound_state_threshold() {
        assert!(bound_state(&model(0.3)).unwrap().is_none());
        assert!(bound_state(&model(1.0)).unwrap().is_none());
        // η(0⁻) = −ω₁ + λ²π/4 > 0 for ω₁ = 0.5, λ = 1.
        let m = FriedrichsModel::new(
            0.5,
            FormFactor::lorentzian(1.0).unwrap(),
            SemiInfiniteSpec::default(),
            ContourSettings::default(),
        )
        .unwrap();
        let b = bound_state(&m).unwrap().expect("bound state");
        assert!(b.energy < 0.0);
        let eta = m.eta(c(b.energy, 0.0)).unwrap();
        assert!(eta.norm() < 1e-12);
        assert!(b.weight > 0.0 && b.weight < 1.0);
        let l0 = bound_state(&model(0.0)).unwrap().unwrap();
        assert_eq!((l0.energy, l0.weight), (1.0, 1.0));
    }

    #[test]
    fn exponential_family_resonance() {
        let m = FriedrichsModel::new(
            1.0,
            FormFactor::new(Family::Exponential { cutoff: 3.0 }, 0.1).unwrap(),
            SemiInfiniteSpec::default(),
            ContourSettings::default(),
        )
        .unwrap();
        let r = find_resonance(&m, None).unwrap();
        let golden = 2.0 * PI * m.form_factor().w_real(1.0);
        assert!((r.decay_rate - golden).abs() / r.decay_rate < 0.05);
        assert!(m.eta_second_sheet(r.z1).unwrap().norm() < 1e-10);
    }
}
