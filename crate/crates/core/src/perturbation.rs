//! Brillouin-Wigner and Born expansions.
//!
//! Conventions: one factor of `λ` accompanies every `W`. For the Friedrichs model the
//! form factor already carries `λ`, so there `W` stands for `λW`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour_quad::{composite, SemiInfiniteSpec};
use crate::error::{Error, Result};
use crate::friedrichs::{FriedrichsModel, Side};

/// `H = diag(ω) + λW` on a finite basis. `ω_n` must be pairwise distinct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteModel {
    pub h0_diag: Vec<f64>,
    /// Row-major Hermitian matrix.
    pub w_matrix: Vec<Vec<Complex64>>,
    pub lambda: f64,
}

impl DiscreteModel {
    pub fn new(h0_diag: Vec<f64>, w_matrix: Vec<Vec<Complex64>>, lambda: f64) -> Result<Self> {
        let n = h0_diag.len();
        if n == 0 {
            return Err(Error::Config("empty unperturbed spectrum".into()));
        }
        if w_matrix.len() != n || w_matrix.iter().any(|r| r.len() != n) {
            return Err(Error::Config(format!("w_matrix must be {n}x{n}")));
        }
        if !lambda.is_finite() {
            return Err(Error::Config("lambda must be finite".into()));
        }
        for i in 0..n {
            if !h0_diag[i].is_finite() {
                return Err(Error::Config(format!("h0_diag[{i}] is not finite")));
            }
            for j in 0..n {
                if i != j && h0_diag[i] == h0_diag[j] {
                    return Err(Error::Config(format!(
                        "degenerate unperturbed levels {i} and {j} at {}",
                        h0_diag[i]
                    )));
                }
                if (w_matrix[i][j] - w_matrix[j][i].conj()).norm() > 1e-12 {
                    return Err(Error::Config(format!("w_matrix is not Hermitian at ({i}, {j})")));
                }
            }
        }
        Ok(Self {
            h0_diag,
            w_matrix,
            lambda,
        })
    }

    pub fn dim(&self) -> usize {
        self.h0_diag.len()
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self {
            lambda,
            ..self.clone()
        }
    }

    fn apply_w(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.w_matrix
            .iter()
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceReason {
    None,
    DiscreteResonance,
    ContinuousResonance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesResult {
    /// Highest order summed; `partial_sums` has `order + 1` entries.
    pub order: usize,
    pub partial_sums: Vec<Complex64>,
    pub converged: bool,
    /// `|S_{p+1} − S_p| / |S_p − S_{p−1}|` at the last available order.
    pub ratio_estimate: f64,
    pub divergence_reason: DivergenceReason,
    /// Limit (converged) or last partial sum.
    pub value: Complex64,
    /// Outer self-consistency steps (0 where not applicable).
    pub iterations: usize,
}

/// Consecutive ratios above one that declare a series divergent.
const DIVERGENCE_RUN: usize = 3;
const OUTER_MAX: usize = 2000;
const DAMPING: f64 = 0.5;

fn ratios(sums: &[Complex64]) -> Vec<f64> {
    sums.windows(3)
        .map(|s| {
            let a = (s[1] - s[0]).norm();
            let b = (s[2] - s[1]).norm();
            if a == 0.0 {
                if b == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                b / a
            }
        })
        .collect()
}

fn diverging(r: &[f64]) -> bool {
    r.windows(DIVERGENCE_RUN).any(|w| w.iter().all(|x| *x > 1.0))
}

struct Inner {
    sums: Vec<Complex64>,
    converged: bool,
    diverged: bool,
}

/// `E_n(E) = ω_n + λ⟨n|W|u⟩` with `u = Σ_p [λQ(E−H₀)⁻¹QW]^p |n⟩`.
fn bw_inner(m: &DiscreteModel, n: usize, e: f64, order: usize, tol: f64) -> Inner {
    let dim = m.dim();
    let mut v = vec![Complex64::new(0.0, 0.0); dim];
    v[n] = Complex64::new(1.0, 0.0);
    let mut sums = Vec::with_capacity(order + 1);
    let level = |v: &[Complex64]| -> Complex64 {
        m.w_matrix[n].iter().zip(v).map(|(a, b)| a * b).sum::<Complex64>() * m.lambda
    };
    let mut acc = Complex64::new(m.h0_diag[n], 0.0) + level(&v);
    sums.push(acc);
    for _ in 0..order {
        let wv = m.apply_w(&v);
        for k in 0..dim {
            v[k] = if k == n {
                Complex64::new(0.0, 0.0)
            } else {
                wv[k] * m.lambda / (e - m.h0_diag[k])
            };
        }
        acc += level(&v);
        sums.push(acc);
        let r = ratios(&sums);
        if diverging(&r) || !acc.is_finite() {
            return Inner {
                sums,
                converged: false,
                diverged: true,
            };
        }
        let l = sums.len();
        if (sums[l - 1] - sums[l - 2]).norm() < tol * acc.norm().max(1.0) {
            return Inner {
                sums,
                converged: true,
                diverged: false,
            };
        }
    }
    Inner {
        sums,
        converged: false,
        diverged: false,
    }
}

/// Self-consistent Brillouin-Wigner eigenvalue for level `n`, normalized by `⟨u_n|ω_n⟩ = 1`.
///
/// The outer loop is damped by one half. A diverging inner series, or an iterate that
/// comes within `tol` of another unperturbed level, is reported as a discrete resonance.
pub fn bw_discrete(m: &DiscreteModel, n: usize, order: usize, tol: f64) -> Result<SeriesResult> {
    if n >= m.dim() {
        return Err(Error::Config(format!("level {n} out of range for dimension {}", m.dim())));
    }
    if !(tol > 0.0) {
        return Err(Error::Config("tolerance must be positive".into()));
    }
    let omega = m.h0_diag[n];
    if m.lambda == 0.0 {
        return Ok(SeriesResult {
            order: 0,
            partial_sums: vec![Complex64::new(omega, 0.0)],
            converged: true,
            ratio_estimate: 0.0,
            divergence_reason: DivergenceReason::None,
            value: Complex64::new(omega, 0.0),
            iterations: 0,
        });
    }
    let collision = |e: f64| {
        m.h0_diag
            .iter()
            .enumerate()
            .any(|(k, w)| k != n && (e - w).abs() < tol.max(1e-14))
    };
    let report = |inner: Inner, converged: bool, reason, iterations| {
        let r = ratios(&inner.sums);
        let value = *inner.sums.last().unwrap();
        SeriesResult {
            order: inner.sums.len() - 1,
            ratio_estimate: r.last().copied().unwrap_or(0.0),
            partial_sums: inner.sums,
            converged,
            divergence_reason: reason,
            value,
            iterations,
        }
    };
    let mut e = omega;
    for it in 1..=OUTER_MAX {
        if collision(e) {
            let inner = bw_inner(m, n, e, order.min(8), tol);
            return Ok(report(inner, false, DivergenceReason::DiscreteResonance, it));
        }
        let inner = bw_inner(m, n, e, order, tol);
        if inner.diverged {
            return Ok(report(inner, false, DivergenceReason::DiscreteResonance, it));
        }
        let e_new = inner.sums.last().unwrap().re;
        if (e_new - e).abs() < tol * e.abs().max(1.0) && inner.converged {
            return Ok(report(inner, true, DivergenceReason::None, it));
        }
        e = (1.0 - DAMPING) * e + DAMPING * e_new;
    }
    let inner = bw_inner(m, n, e, order, tol);
    Ok(report(inner, false, DivergenceReason::None, OUTER_MAX))
}

/// Direct iteration `z ← ω₁ + Σ_side(z) = z − η_side(z)` from the first-order seed
/// `ω₁ ∓ iπw(ω₁)`; each branch runs on its own continuation.
pub fn bw_complex_fixed_point(model: &FriedrichsModel, side: Side, tol: f64) -> Result<Complex64> {
    if !(tol > 0.0) {
        return Err(Error::Config("tolerance must be positive".into()));
    }
    let w1 = model.form_factor().w_real(model.omega1());
    let mut z = Complex64::new(model.omega1(), -side.sign() * PI * w1);
    const MAX_ITER: usize = 500;
    for it in 0..MAX_ITER {
        let next = z - model.eta_continued(z, side)?;
        if !next.is_finite() || next.norm() > 1e6 {
            return Err(Error::FixedPoint {
                iterations: it + 1,
                last: next,
            });
        }
        let done = (next - z).norm() < tol * next.norm().max(1.0);
        z = next;
        if done {
            return Ok(z);
        }
    }
    Err(Error::FixedPoint {
        iterations: MAX_ITER,
        last: z,
    })
}

/// Born partial sums for `⟨1|u⁺(ω)⟩` from the Lippmann-Schwinger map
/// `a ← (W*(ω) + a·Σ₊(ω))/(ω − ω₁)`, `a₀ = 0`; the limit is `W*(ω)/η₊(ω)`.
pub fn born_series(model: &FriedrichsModel, omega: f64, order: usize) -> Result<SeriesResult> {
    if (omega - model.omega1()).abs() < 1e-12 {
        return Err(Error::Domain(format!("omega = {omega} coincides with the level")));
    }
    let eta = model.eta_boundary(omega, Side::Plus)?;
    let detuning = omega - model.omega1();
    let sigma = detuning - eta;
    let source = model.form_factor().coupling(omega).conj();
    let contraction = (sigma / detuning).norm();
    let mut sums = Vec::with_capacity(order + 1);
    let mut a = Complex64::new(0.0, 0.0);
    sums.push(a);
    for _ in 0..order {
        a = (source + a * sigma) / detuning;
        sums.push(a);
    }
    let r = ratios(&sums);
    let ratio_estimate = r.last().copied().unwrap_or(contraction);
    let diverged = contraction >= 1.0 || diverging(&r);
    let l = sums.len();
    let settled = l >= 2 && (sums[l - 1] - sums[l - 2]).norm() <= 1e-12 * a.norm();
    let converged = !diverged && settled;
    Ok(SeriesResult {
        order,
        value: a,
        partial_sums: sums,
        converged,
        ratio_estimate,
        divergence_reason: if diverged {
            DivergenceReason::ContinuousResonance
        } else {
            DivergenceReason::None
        },
        iterations: 0,
    })
}

/// One row of [`resonance_radius_probe`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRecord {
    pub lambda: f64,
    pub converged: bool,
    pub divergence_reason: DivergenceReason,
    pub ratio_estimate: f64,
    /// Complex-shifted fixed point, where it applies.
    pub complex_fixed_point: Option<Complex64>,
    /// Growth of the real-axis self-energy integral as the excluded window shrinks.
    pub evidence: Vec<f64>,
}

pub enum ProbeTarget<'a> {
    Discrete { model: &'a DiscreteModel, level: usize },
    Friedrichs(&'a FriedrichsModel),
}

/// Windows excluded around the embedded level when testing the real series.
pub const PROBE_WINDOWS: [f64; 3] = [1e-2, 1e-4, 1e-6];

/// `∫_{|ω−ω₁|>δ} w(ω)/|ω₁ − ω| dω`.
fn absolute_self_energy(model: &FriedrichsModel, delta: f64) -> Result<f64> {
    let (w1, r) = (model.omega1(), model.cutoff());
    let mut below = vec![0.0];
    let mut h = delta;
    let mut side = Vec::new();
    while h < w1 {
        side.push(w1 - h);
        h *= 2.0;
    }
    side.reverse();
    below.extend(side.into_iter().filter(|x| *x > 0.0));
    let mut above = Vec::new();
    let mut h = delta;
    while w1 + h < r {
        above.push(w1 + h);
        h *= 2.0;
    }
    above.push(r);
    let ff = model.form_factor();
    let f = |o: f64| ff.w_real(o) / (w1 - o).abs();
    let mut total = 0.0;
    if below.len() >= 2 {
        total += composite(&below, 16)?.integrate(f);
    }
    if above.len() >= 2 {
        total += composite(&above, 16)?.integrate(f);
    }
    let tail = SemiInfiniteSpec {
        cutoff: r,
        ..*model.quad()
    }
    .tail_part()?;
    Ok(total + tail.integrate(f))
}

/// Sweeps `λ` and records where the perturbation expansion stops converging.
///
/// For the Friedrichs model the real Brillouin-Wigner series needs `∫w(ω)/(E−ω)dω` at a
/// real `E` inside the continuum; it is declared a continuous resonance when the window
/// integrals grow like `2w(ω₁)·ln(1/δ)`. The complex fixed point is run alongside.
pub fn resonance_radius_probe(target: ProbeTarget<'_>, lambdas: &[f64]) -> Result<Vec<ProbeRecord>> {
    if lambdas.iter().any(|l| !(0.0..=1.0).contains(l)) {
        return Err(Error::Config("lambda grid must lie in [0, 1]".into()));
    }
    lambdas
        .par_iter()
        .map(|&lambda| match &target {
            ProbeTarget::Discrete { model, level } => {
                let s = bw_discrete(&model.with_lambda(lambda), *level, 200, 1e-13)?;
                Ok(ProbeRecord {
                    lambda,
                    converged: s.converged,
                    divergence_reason: s.divergence_reason,
                    ratio_estimate: s.ratio_estimate,
                    complex_fixed_point: None,
                    evidence: Vec::new(),
                })
            }
            ProbeTarget::Friedrichs(model) => {
                let m = model.with_lambda(lambda)?;
                if lambda == 0.0 {
                    return Ok(ProbeRecord {
                        lambda,
                        converged: true,
                        divergence_reason: DivergenceReason::None,
                        ratio_estimate: 0.0,
                        complex_fixed_point: Some(Complex64::new(m.omega1(), 0.0)),
                        evidence: Vec::new(),
                    });
                }
                let evidence = PROBE_WINDOWS
                    .iter()
                    .map(|d| absolute_self_energy(&m, *d))
                    .collect::<Result<Vec<_>>>()?;
                let w1 = m.form_factor().w_real(m.omega1());
                let expected = 2.0 * w1 * 100f64.ln();
                let growing = evidence.windows(2).all(|p| p[1] - p[0] > 0.5 * expected) && w1 > 0.0;
                let ratio_estimate = match evidence.as_slice() {
                    [a, b, c] if b > a => (c - b) / (b - a),
                    _ => 0.0,
                };
                let fixed = bw_complex_fixed_point(&m, Side::Plus, 1e-14).ok();
                Ok(ProbeRecord {
                    lambda,
                    converged: !growing,
                    divergence_reason: if growing {
                        DivergenceReason::ContinuousResonance
                    } else {
                        DivergenceReason::None
                    },
                    ratio_estimate,
                    complex_fixed_point: fixed,
                    evidence,
                })
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::friedrichs::{find_pole, find_resonance};
    use nalgebra::{DMatrix, SymmetricEigen};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Eigenvalues of `diag(ω) + λW` from a dense Hermitian solver, sorted.
    fn dense_eigenvalues(m: &DiscreteModel) -> Vec<f64> {
        let n = m.dim();
        let h = DMatrix::from_fn(n, n, |i, j| {
            let d = if i == j { m.h0_diag[i] } else { 0.0 };
            c(d, 0.0) + m.w_matrix[i][j] * m.lambda
        });
        let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    #[allow(clippy::needless_range_loop)]
    fn random_instance(n: usize, seed: u64, lambda: f64) -> DiscreteModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let diag: Vec<f64> = (0..n).map(|k| k as f64 + rng.gen_range(-0.2..0.2)).collect();
        let mut w = vec![vec![c(0.0, 0.0); n]; n];
        for i in 0..n {
            w[i][i] = c(rng.gen_range(-1.0..1.0), 0.0);
            for j in i + 1..n {
                let v = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                w[i][j] = v;
                w[j][i] = v.conj();
            }
        }
        DiscreteModel::new(diag, w, lambda).unwrap()
    }

    #[test]
    fn two_level_closed_form() {
        let w = vec![vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]];
        let m = DiscreteModel::new(vec![0.0, 1.0], w, 0.1).unwrap();
        let s = bw_discrete(&m, 0, 200, 1e-14).unwrap();
        let exact = 0.5 * (1.0 - (1.0f64 + 0.04).sqrt());
        assert!(s.converged);
        assert!((s.value.re - exact).abs() < 1e-10);
        assert_eq!(s.partial_sums.len(), s.order + 1);
    }

    #[test]
    fn zero_coupling_terminates_immediately() {
        let m = random_instance(4, 1, 0.0);
        let s = bw_discrete(&m, 2, 50, 1e-12).unwrap();
        assert_eq!(s.order, 0);
        assert_eq!(s.value.re, m.h0_diag[2]);
    }

    #[test]
    fn random_instances_match_dense_solver() {
        for (n, seeds) in [(4usize, 0..6u64), (8, 10..16)] {
            for seed in seeds {
                let m = random_instance(n, seed, 0.1);
                let exact = dense_eigenvalues(&m);
                for level in 0..n {
                    let s = bw_discrete(&m, level, 400, 1e-14).unwrap();
                    assert!(s.converged, "n={n} seed={seed} level={level}");
                    let nearest = exact
                        .iter()
                        .map(|e| (e - s.value.re).abs())
                        .fold(f64::INFINITY, f64::min);
                    assert!(nearest < 1e-9, "n={n} seed={seed} level={level}: {nearest:e}");
                    assert!(s.value.im.abs() < 1e-12);
                }
            }
        }
    }

    fn crossing_model(lambda: f64) -> DiscreteModel {
        let w = vec![
            vec![c(1.0, 0.0), c(0.01, 0.0), c(0.0, 0.0)],
            vec![c(0.01, 0.0), c(0.5, 0.0), c(0.3, 0.0)],
            vec![c(0.0, 0.0), c(0.3, 0.0), c(0.0, 0.0)],
        ];
        DiscreteModel::new(vec![0.0, 0.2, 1.0], w, lambda).unwrap()
    }

    #[test]
    fn near_crossing_is_a_discrete_resonance() {
        // λ at which the exact lowest eigenvalue reaches the unperturbed ω₁ = 0.2.
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if dense_eigenvalues(&crossing_model(mid))[0] < 0.2 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let crit = 0.5 * (lo + hi);
        let s = bw_discrete(&crossing_model(crit), 0, 200, 1e-12).unwrap();
        assert_eq!(s.divergence_reason, DivergenceReason::DiscreteResonance);
        assert!(!s.converged);
        let far = bw_discrete(&crossing_model(0.25 * crit), 0, 200, 1e-13).unwrap();
        assert!(far.converged);
        assert!(far.ratio_estimate < 1.0);
        let near = bw_discrete(&crossing_model(0.5 * crit), 0, 200, 1e-13).unwrap();
        assert!(near.ratio_estimate > far.ratio_estimate);
    }

    #[test]
    fn complex_fixed_point_equals_newton() {
        for lambda in [0.02, 0.1, 0.3] {
            let m = FriedrichsModel::lorentzian(1.0, lambda).unwrap();
            let r = find_resonance(&m, None).unwrap();
            let plus = bw_complex_fixed_point(&m, Side::Plus, 1e-14).unwrap();
            let minus = bw_complex_fixed_point(&m, Side::Minus, 1e-14).unwrap();
            assert!((plus - r.z1).norm() < 1e-10);
            assert!((minus - plus.conj()).norm() < 1e-10);
            let n_minus = find_pole(&m, Side::Minus, None).unwrap();
            assert!((minus - n_minus.z1).norm() < 1e-10);
        }
        let free = FriedrichsModel::lorentzian(1.0, 0.0).unwrap();
        assert_eq!(bw_complex_fixed_point(&free, Side::Plus, 1e-14).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn born_series_converges_to_closed_form() {
        let m = FriedrichsModel::lorentzian(1.0, 0.05).unwrap();
        let s = born_series(&m, 2.0, 20).unwrap();
        let closed = m.form_factor().coupling(2.0).conj() / m.eta_boundary(2.0, Side::Plus).unwrap();
        assert_eq!(s.partial_sums[0], c(0.0, 0.0));
        assert_eq!(s.partial_sums.len(), 21);
        assert!((s.value - closed).norm() < 1e-8);
        assert!(s.converged);
        assert!(s.ratio_estimate < 1.0);
        // geometric tail with a constant ratio
        let strong = FriedrichsModel::lorentzian(1.0, 0.3).unwrap();
        let s = born_series(&strong, 2.0, 8).unwrap();
        let r = ratios(&s.partial_sums);
        assert!(r[3] < 1.0);
        assert!((r[3] - r[2]).abs() < 1e-6 * r[2]);
    }

    #[test]
    fn born_series_flags_divergence() {
        let m = FriedrichsModel::lorentzian(1.0, 0.5).unwrap();
        let s = born_series(&m, 1.05, 20).unwrap();
        assert_eq!(s.divergence_reason, DivergenceReason::ContinuousResonance);
        let r = ratios(&s.partial_sums);
        assert!(r.windows(3).any(|w| w.iter().all(|x| *x > 1.0)));
        let closed = m.form_factor().coupling(1.05).conj() / m.eta_boundary(1.05, Side::Plus).unwrap();
        assert!(closed.is_finite());
        assert!(born_series(&m, 1.0, 5).is_err());
    }

    #[test]
    fn probe_labels_embedded_level() {
        let m = FriedrichsModel::lorentzian(1.0, 0.1).unwrap();
        let recs = resonance_radius_probe(ProbeTarget::Friedrichs(&m), &[0.0, 0.01, 0.1]).unwrap();
        assert!(recs[0].converged);
        for r in &recs[1..] {
            assert_eq!(r.divergence_reason, DivergenceReason::ContinuousResonance);
            assert!(r.complex_fixed_point.is_some());
        }
        let d = random_instance(4, 3, 0.0);
        let recs =
            resonance_radius_probe(ProbeTarget::Discrete { model: &d, level: 1 }, &[0.0, 0.01, 0.05]).unwrap();
        assert!(recs.iter().all(|r| r.converged));
    }

    #[test]
    fn rejects_bad_models() {
        let w = vec![vec![c(0.0, 0.0), c(1.0, 1.0)], vec![c(1.0, 1.0), c(0.0, 0.0)]];
        assert!(DiscreteModel::new(vec![0.0, 1.0], w, 0.1).is_err());
        let w = vec![vec![c(0.0, 0.0); 2]; 2];
        assert!(DiscreteModel::new(vec![1.0, 1.0], w, 0.1).is_err());
    }
}
