use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::model::{FriedrichsModel, PathShape, Side};
use super::resonance::{
    bound_state, count_second_sheet_zeros, find_resonance, inside, resonance_first_order,
    BoundState, Resonance,
};
use crate::contour_quad::{
    composite, discretize, gauss_legendre, graded_breaks, refine_breaks, ContourPath,
    ContourRule, Grading,
};
use crate::error::{Error, Result};

/// Default bound on `|a_exact − a_pole − a_bg|`.
pub const DECOMPOSITION_TOLERANCE: f64 = 1e-6;

/// Pole-to-path margin in units of `1/|t|` on the depth levels used for `t < 0`.
const KAPPA: f64 = 4.0;
const PANEL_NODES: usize = 16;
const TAIL_NODES: usize = 32;
/// Above this many real-axis nodes a time is reported as unresolved.
const MAX_REAL_NODES: usize = 1 << 22;

/// Exact energy distribution of `|1⟩`, `p(E) = w(E)/|η₊(E)|²`.
///
/// At `λ = 0` the distribution is a point mass reported by [`bound_state`]; the
/// continuous density is zero.
pub fn spectral_density(model: &FriedrichsModel, e: f64) -> Result<f64> {
    let eta = model.eta_boundary(e, Side::Plus)?;
    if model.form_factor().is_zero() {
        return Ok(0.0);
    }
    Ok(model.form_factor().w_real(e) / eta.norm_sqr())
}

/// Density beyond the cutoff from the large-`E` form `Σ(E) ≈ M₀/E`.
fn density_beyond_cutoff(model: &FriedrichsModel, m0: f64, e: f64) -> f64 {
    let w = model.form_factor().w_real(e);
    let re = e - model.omega1() - m0 / e;
    w / (re * re + PI * PI * w * w)
}

/// `Γ₊` depth used when the configuration does not fix one: `max(4γ, 0.5)`.
pub fn default_depth(res: &Resonance) -> f64 {
    (4.0 * res.gamma).max(0.5)
}

/// `Γ₊` of the configured shape at depth `d`.
pub fn gamma_path(model: &FriedrichsModel, res: &Resonance, depth: f64) -> Result<ContourPath> {
    match model.contour().shape {
        PathShape::Box => ContourPath::gamma_plus(depth, model.cutoff()),
        PathShape::Wedge => ContourPath::gamma_plus_wedge(depth, res.nu, model.cutoff()),
    }
}

/// Checks that the region between `[0, R]` and `path` holds exactly one second-sheet zero,
/// the resonance.
pub fn check_admissible(model: &FriedrichsModel, res: &Resonance, path: &ContourPath) -> Result<()> {
    path.validate_gamma_plus()?;
    if (path.cutoff() - model.cutoff()).abs() > 1e-12 * model.cutoff() {
        return Err(Error::ContourConfiguration(format!(
            "path ends at {} but the cutoff is {}",
            path.cutoff(),
            model.cutoff()
        )));
    }
    let closed = ContourPath::closed(path.vertices().to_vec())?;
    if !inside(&closed, res.z1) {
        return Err(Error::ContourConfiguration(format!(
            "path does not pass below the pole z1 = {}",
            res.z1
        )));
    }
    let zeros = count_second_sheet_zeros(model, &closed)?;
    if zeros != 1 {
        return Err(Error::ContourConfiguration(format!(
            "region above the path holds {zeros} second-sheet zeros, expected only z1"
        )));
    }
    Ok(())
}

/// Composite rule for `∫₀^R p(E)e^{−iEt}dE` at `|t| ≤ t_max`, with `p` cached.
#[derive(Debug, Clone)]
struct RealAxisRule {
    nodes: Vec<f64>,
    pw: Vec<f64>,
    tail_nodes: Vec<f64>,
    tail_pw: Vec<f64>,
}

impl RealAxisRule {
    fn node_estimate(model: &FriedrichsModel, t_max: f64) -> usize {
        let max_len = (2.0 * PI / t_max.max(1e-300)).min(0.5);
        ((model.cutoff() / max_len).ceil() as usize + 64) * PANEL_NODES
    }

    fn new(model: &FriedrichsModel, centre: f64, width: f64, t_max: f64) -> Result<Self> {
        let r = model.cutoff();
        let mut breaks = graded_breaks(0.0, r, centre, (0.25 * width).max(1e-12));
        breaks.extend((1..=30).map(|k| r * 0.5f64.powi(k)));
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (1.0 + y.abs()));
        let max_len = (2.0 * PI / t_max.max(1e-300)).min(0.5);
        let rule = composite(&refine_breaks(&breaks, max_len), PANEL_NODES)?;
        let pw = rule
            .nodes()
            .par_iter()
            .zip(rule.weights().par_iter())
            .map(|(e, wt)| Ok(wt * spectral_density(model, *e)?))
            .collect::<Result<Vec<f64>>>()?;
        let m0 = model.coupling_norm();
        let tail = gauss_legendre(TAIL_NODES, 0.0, 1.0)?;
        let (tail_nodes, tail_pw): (Vec<f64>, Vec<f64>) = tail
            .iter()
            .map(|(u, wt)| {
                let e = r / u;
                (e, wt * r / (u * u) * density_beyond_cutoff(model, m0, e))
            })
            .unzip();
        Ok(Self {
            nodes: rule.nodes().to_vec(),
            pw,
            tail_nodes,
            tail_pw,
        })
    }

    fn oscillatory(nodes: &[f64], pw: &[f64], t: f64) -> Complex64 {
        nodes
            .iter()
            .zip(pw)
            .map(|(e, p)| Complex64::from_polar(*p, -e * t))
            .sum()
    }

    fn finite(&self, t: f64) -> Complex64 {
        Self::oscillatory(&self.nodes, &self.pw, t)
    }

    fn tail(&self, t: f64) -> Complex64 {
        Self::oscillatory(&self.tail_nodes, &self.tail_pw, t)
    }

    fn mass(&self) -> f64 {
        self.pw.iter().sum::<f64>() + self.tail_pw.iter().sum::<f64>()
    }
}

/// Discretized `Γ₊` with `g(z) = w(z)/(η_II(z)η(z))` cached on the nodes.
#[derive(Debug, Clone)]
struct PathIntegrand {
    depth: f64,
    points: Vec<Complex64>,
    gw: Vec<Complex64>,
}

impl PathIntegrand {
    fn new(model: &FriedrichsModel, res: &Resonance, path: &ContourPath, t_osc: f64, t_edge: f64) -> Result<Self> {
        let depth = path.depth();
        let corner = 0.25 * depth.min(1.0 / t_edge.max(1.0));
        let apex = Complex64::new(res.nu, -depth);
        let rule = ContourRule {
            nodes_per_panel: model.contour().nodes_per_panel,
            max_panel_len: (2.0 * PI / t_osc.max(1e-300)).min(0.25),
            grading: vec![
                Grading {
                    point: apex,
                    scale: 0.5 * (depth - res.gamma).max(1e-12),
                },
                Grading {
                    point: Complex64::new(0.0, 0.0),
                    scale: corner.min(1e-6),
                },
                Grading {
                    point: Complex64::new(model.cutoff(), 0.0),
                    scale: corner,
                },
            ],
        };
        let nodes = discretize(path, &rule)?;
        let gw = nodes
            .points
            .par_iter()
            .zip(nodes.weights.par_iter())
            .map(|(z, wt)| Ok(integrand(model, *z)? * wt))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            depth,
            points: nodes.points,
            gw,
        })
    }

    fn integrate(&self, t: f64) -> Complex64 {
        self.points
            .iter()
            .zip(&self.gw)
            .map(|(z, g)| g * (Complex64::new(0.0, -t) * z).exp())
            .sum()
    }
}

/// Continuation of `p` below the cut.
fn integrand(model: &FriedrichsModel, z: Complex64) -> Result<Complex64> {
    let second = model.eta_continued(z, Side::Plus)?;
    let first = model.eta_continued(z, Side::Minus)?;
    let v = model.form_factor().w(z) / (second * first);
    if !v.is_finite() {
        return Err(Error::NumericalDomain(format!("background integrand not finite at z = {z}")));
    }
    Ok(v)
}

/// All ingredients of the survival amplitude `A(t) = ⟨1|e^{−iHt}|1⟩` for a set of times.
#[derive(Debug, Clone)]
pub struct SurvivalEngine {
    resonance: Resonance,
    bound: Option<BoundState>,
    free: bool,
    omega1: f64,
    real: Option<RealAxisRule>,
    levels: BTreeMap<i32, PathIntegrand>,
    switch_time: f64,
    resolved_time: f64,
}

impl SurvivalEngine {
    /// Prepares quadratures resolving every `t` in `times`.
    pub fn new(model: &FriedrichsModel, times: &[f64]) -> Result<Self> {
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::Config("survival times must be finite".into()));
        }
        let free = model.form_factor().is_zero();
        let resonance = find_resonance(model, None)?;
        if free {
            return Ok(Self {
                resonance,
                bound: bound_state(model)?,
                free,
                omega1: model.omega1(),
                real: None,
                levels: BTreeMap::new(),
                switch_time: f64::INFINITY,
                resolved_time: f64::INFINITY,
            });
        }
        let bound = bound_state(model)?;
        let t_abs = times.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        let mut resolved_time = t_abs;
        while Self::too_large(model, resolved_time) {
            resolved_time *= 0.5;
        }
        let real = RealAxisRule::new(model, resonance.nu, resonance.gamma, resolved_time)?;

        let d0 = model.contour().depth.unwrap_or_else(|| default_depth(&resonance));
        if d0 <= resonance.gamma {
            return Err(Error::ContourConfiguration(format!(
                "depth {d0} does not pass below the pole at Im z = {}",
                resonance.z1.im
            )));
        }
        let switch_time = KAPPA / (d0 - resonance.gamma);
        let mut keys: Vec<i32> = times.iter().map(|t| Self::level_of(*t, switch_time)).collect();
        keys.sort_unstable();
        keys.dedup();
        let t_pos = times.iter().fold(0.0f64, |m, t| m.max(*t)).min(resolved_time);
        let levels = keys
            .par_iter()
            .map(|&k| {
                let (depth, t_osc, t_edge) = if k == 0 {
                    let t_osc = t_pos.min(40.0 / d0).max(switch_time);
                    (d0, t_osc, t_pos.max(switch_time))
                } else {
                    let tau = switch_time * 2f64.powi(k);
                    (resonance.gamma + KAPPA / tau, tau, tau)
                };
                let path = gamma_path(model, &resonance, depth)?;
                check_admissible(model, &resonance, &path)?;
                Ok((k, PathIntegrand::new(model, &resonance, &path, t_osc, t_edge)?))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .collect();
        Ok(Self {
            resonance,
            bound,
            free,
            omega1: model.omega1(),
            real: Some(real),
            levels,
            switch_time,
            resolved_time,
        })
    }

    fn too_large(model: &FriedrichsModel, t: f64) -> bool {
        RealAxisRule::node_estimate(model, t) > MAX_REAL_NODES
    }

    fn level_of(t: f64, switch_time: f64) -> i32 {
        if t >= 0.0 || -t <= switch_time {
            0
        } else {
            (-t / switch_time).log2().ceil().max(1.0) as i32
        }
    }

    pub fn resonance(&self) -> &Resonance {
        &self.resonance
    }

    pub fn bound_state(&self) -> Option<&BoundState> {
        self.bound.as_ref()
    }

    /// Largest `|t|` the real-axis rule resolves.
    pub fn resolved_time(&self) -> f64 {
        self.resolved_time
    }

    /// Depth of the path used at time `t`.
    pub fn depth_at(&self, t: f64) -> Option<f64> {
        self.levels
            .get(&Self::level_of(t, self.switch_time))
            .map(|p| p.depth)
    }

    fn bound_term(&self, t: f64) -> Complex64 {
        match (&self.bound, self.free) {
            (Some(b), false) => Complex64::from_polar(b.weight, -b.energy * t),
            _ => Complex64::new(0.0, 0.0),
        }
    }

    /// `∫₀^∞ p(E) dE`, the continuum share of the norm of `|1⟩`.
    pub fn continuum_mass(&self) -> f64 {
        self.real.as_ref().map_or(0.0, RealAxisRule::mass)
    }

    pub fn exact(&self, t: f64) -> Complex64 {
        match &self.real {
            None => Complex64::from_polar(1.0, -self.omega1 * t),
            Some(r) => r.finite(t) + r.tail(t) + self.bound_term(t),
        }
    }

    pub fn pole(&self, t: f64) -> Complex64 {
        survival_pole(&self.resonance, t)
    }

    /// Contour term plus the shared tail beyond the cutoff (and the bound-state term,
    /// when one exists), so that `exact = pole + background`.
    pub fn background(&self, t: f64) -> Result<Complex64> {
        let Some(real) = &self.real else {
            return Ok(Complex64::new(0.0, 0.0));
        };
        let level = self
            .levels
            .get(&Self::level_of(t, self.switch_time))
            .ok_or_else(|| Error::Resolution(format!("no contour prepared for t = {t}")))?;
        Ok(level.integrate(t) + real.tail(t) + self.bound_term(t))
    }
}

/// `A(t) = ∫₀^∞ p(E) e^{−iEt} dE`, plus any discrete contribution.
pub fn survival_exact(model: &FriedrichsModel, t: f64) -> Result<Complex64> {
    if model.form_factor().is_zero() {
        return Ok(Complex64::from_polar(1.0, -model.omega1() * t));
    }
    let (centre, width) = match find_resonance(model, None) {
        Ok(r) => (r.nu, r.gamma),
        Err(_) => {
            let z = resonance_first_order(model)?;
            (z.re, -z.im)
        }
    };
    let real = RealAxisRule::new(model, centre, width, t.abs())?;
    let bound = match bound_state(model)? {
        Some(b) => Complex64::from_polar(b.weight, -b.energy * t),
        None => Complex64::new(0.0, 0.0),
    };
    Ok(real.finite(t) + real.tail(t) + bound)
}

/// Gamov term `weight·e^{−iz₁t}`.
pub fn survival_pole(res: &Resonance, t: f64) -> Complex64 {
    res.weight * (Complex64::new(0.0, -t) * res.z1).exp()
}

/// Background `A(t) − weight·e^{−iz₁t}` evaluated along `path`, or along the default
/// time-adapted `Γ₊` when no path is given.
pub fn survival_background(
    model: &FriedrichsModel,
    res: &Resonance,
    t: f64,
    path: Option<&ContourPath>,
) -> Result<Complex64> {
    if model.form_factor().is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let Some(path) = path else {
        return SurvivalEngine::new(model, &[t])?.background(t);
    };
    check_admissible(model, res, path)?;
    let real = RealAxisRule::new(model, res.nu, res.gamma, 0.0)?;
    let contour = PathIntegrand::new(model, res, path, t.abs().max(1.0), t.abs())?;
    let bound = match bound_state(model)? {
        Some(b) => Complex64::from_polar(b.weight, -b.energy * t),
        None => Complex64::new(0.0, 0.0),
    };
    Ok(contour.integrate(t) + real.tail(t) + bound)
}

/// Survival amplitudes tabulated on a time grid.
#[derive(Debug, Clone, Serialize)]
pub struct SurvivalCurve {
    pub times: Vec<f64>,
    pub a_exact: Vec<Complex64>,
    pub a_pole: Vec<Complex64>,
    pub a_bg: Vec<Complex64>,
    pub p_exact: Vec<f64>,
    /// `|a_pole|²`.
    pub p_pole_approx: Vec<f64>,
    pub resonance: Resonance,
    pub bound_state: Option<BoundState>,
    pub warnings: Vec<String>,
}

impl SurvivalCurve {
    /// Largest `|a_exact − a_pole − a_bg|` over the grid.
    pub fn decomposition_residual(&self) -> f64 {
        self.a_exact
            .iter()
            .zip(&self.a_pole)
            .zip(&self.a_bg)
            .map(|((e, p), b)| (e - p - b).norm())
            .fold(0.0, f64::max)
    }
}

pub fn survival_curve(model: &FriedrichsModel, times: &[f64]) -> Result<SurvivalCurve> {
    let engine = SurvivalEngine::new(model, times)?;
    let rows = times
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let e = engine.exact(t);
            let p = engine.pole(t);
            engine
                .background(t)
                .map(|b| (e, p, b))
                .map_err(|err| (i, t, err))
        })
        .collect::<Vec<_>>();
    let mut failures = Vec::new();
    let mut curve = SurvivalCurve {
        times: times.to_vec(),
        a_exact: Vec::with_capacity(times.len()),
        a_pole: Vec::with_capacity(times.len()),
        a_bg: Vec::with_capacity(times.len()),
        p_exact: Vec::with_capacity(times.len()),
        p_pole_approx: Vec::with_capacity(times.len()),
        resonance: *engine.resonance(),
        bound_state: engine.bound_state().copied(),
        warnings: Vec::new(),
    };
    for row in rows {
        match row {
            Ok((e, p, b)) => {
                curve.a_exact.push(e);
                curve.a_pole.push(p);
                curve.a_bg.push(b);
                curve.p_exact.push(e.norm_sqr());
                curve.p_pole_approx.push(p.norm_sqr());
            }
            Err((i, t, err)) => failures.push(format!("t[{i}] = {t}: {err}")),
        }
    }
    if !failures.is_empty() {
        return Err(Error::NumericalDomain(failures.join("; ")));
    }
    let unresolved = times.iter().filter(|t| t.abs() > engine.resolved_time()).count();
    if unresolved > 0 {
        curve.warnings.push(format!(
            "{unresolved} times exceed the resolvable |t| <= {:.6e}; their amplitudes are unreliable",
            engine.resolved_time()
        ));
    }
    if let Some(b) = engine.bound_state() {
        if !model.form_factor().is_zero() {
            curve.warnings.push(format!(
                "bound state at E = {:.6e} with weight {:.6e}; sum-rule checks are suspended",
                b.energy, b.weight
            ));
        }
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::friedrichs::ContourSettings;

    fn model(lambda: f64) -> FriedrichsModel {
        FriedrichsModel::lorentzian(1.0, lambda).unwrap()
    }

    #[test]
    fn free_level_is_stationary() {
        let m = model(0.0);
        let times: Vec<f64> = (-50..=50).map(|k| 0.37 * k as f64).collect();
        let c = survival_curve(&m, &times).unwrap();
        assert!(c.p_exact.iter().all(|p| (p - 1.0).abs() < 1e-14));
        assert!(c.a_bg.iter().all(|b| b.norm() == 0.0));
        assert_eq!(spectral_density(&m, 0.5).unwrap(), 0.0);
        assert!(c.decomposition_residual() < 1e-14);
    }

    #[test]
    fn breit_wigner_near_the_peak() {
        let m = model(0.1);
        let r = find_resonance(&m, None).unwrap();
        for k in -10..=10 {
            let e = r.nu + r.decay_rate * k as f64 / 10.0;
            let bw = r.decay_rate / (2.0 * PI) / ((e - r.nu).powi(2) + r.decay_rate.powi(2) / 4.0);
            let p = spectral_density(&m, e).unwrap();
            assert!((p - bw).abs() / bw < 0.1, "E={e}");
        }
    }

    #[test]
    fn sum_rule() {
        for l in [0.02, 0.05, 0.1, 0.2, 0.3] {
            let m = model(l);
            let e = SurvivalEngine::new(&m, &[0.0]).unwrap();
            assert!((e.continuum_mass() - 1.0).abs() < 1e-6, "λ={l}: {}", e.continuum_mass());
            assert!((e.exact(0.0) - 1.0).norm() < 1e-6);
        }
    }

    #[test]
    fn pole_term_identities() {
        let m = model(0.1);
        let r = find_resonance(&m, None).unwrap();
        assert!((survival_pole(&r, 0.0) - 1.0).norm() < 0.05);
        for t in [1.0, 30.0, 200.0] {
            let ratio = survival_pole(&r, t).norm() / survival_pole(&r, 0.0).norm();
            assert!((ratio - (-r.decay_rate * t / 2.0).exp()).abs() < 1e-12 * ratio.max(1.0));
        }
        let t = -4.0 / r.decay_rate;
        let mag = survival_pole(&r, t).norm();
        assert!((mag - 2f64.exp() * r.weight.norm()).abs() < 1e-10);
    }

    #[test]
    fn conjugation_symmetry() {
        let m = model(0.3);
        let a = survival_exact(&m, 5.0).unwrap();
        let b = survival_exact(&m, -5.0).unwrap();
        assert!((a - b.conj()).norm() < 1e-12);
    }

    #[test]
    fn decomposition_both_directions() {
        let m = model(0.1);
        let r = find_resonance(&m, None).unwrap();
        let times: Vec<f64> = (-20..=20).map(|k| k as f64 * 0.5 / r.decay_rate).collect();
        let c = survival_curve(&m, &times).unwrap();
        assert!(c.decomposition_residual() < DECOMPOSITION_TOLERANCE, "{}", c.decomposition_residual());
        let i = times.iter().position(|t| (t * r.decay_rate - 5.0).abs() < 1e-9).unwrap();
        assert!(c.a_bg[i].norm() < c.a_pole[i].norm());
        assert!(c.warnings.is_empty());
    }

    #[test]
    fn background_independent_of_depth() {
        let m = model(0.1);
        let r = find_resonance(&m, None).unwrap();
        for t in [2.0, 15.0, -3.0] {
            let a = survival_background(&m, &r, t, Some(&ContourPath::gamma_plus(0.25, 20.0).unwrap())).unwrap();
            let b = survival_background(&m, &r, t, Some(&ContourPath::gamma_plus(0.5, 20.0).unwrap())).unwrap();
            let w = survival_background(
                &m,
                &r,
                t,
                Some(&ContourPath::gamma_plus_wedge(0.4, r.nu, 20.0).unwrap()),
            )
            .unwrap();
            assert!((a - b).norm() < 1e-8, "t={t}: {a} vs {b}");
            assert!((a - w).norm() < 1e-8, "t={t}: {a} vs {w}");
        }
    }

    #[test]
    fn path_above_the_pole_is_rejected() {
        let m = model(0.1);
        let r = find_resonance(&m, None).unwrap();
        let shallow = ContourPath::gamma_plus(0.5 * r.gamma, 20.0).unwrap();
        assert!(matches!(
            survival_background(&m, &r, 1.0, Some(&shallow)),
            Err(Error::ContourConfiguration(_))
        ));
        let bad = m
            .with_contour(ContourSettings {
                depth: Some(0.5 * r.gamma),
                ..Default::default()
            })
            .unwrap();
        assert!(matches!(SurvivalEngine::new(&bad, &[1.0]), Err(Error::ContourConfiguration(_))));
    }

    #[test]
    fn deep_path_encloses_shadow_zeros() {
        // Near −i the continuation has further zeros; a deep path picks them up.
        let m = model(0.3);
        let r = find_resonance(&m, None).unwrap();
        let deep = ContourPath::gamma_plus(1.5, 20.0).unwrap();
        assert!(matches!(check_admissible(&m, &r, &deep), Err(Error::ContourConfiguration(_))));
    }
}
