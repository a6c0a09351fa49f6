//! One function per subcommand, each producing a [`Report`].

use std::fmt;
use std::path::Path;

use clap::ValueEnum;
use num_complex::Complex64;
use resolab_core::contour_quad::ContourPath;
use resolab_core::friedrichs::{
    bound_state, count_second_sheet_zeros, default_depth, find_pole, find_resonance, gamma_path,
    reconstruct_inner_product, resonance_first_order, survival_curve, FriedrichsModel, Side,
    StateCoefficients, SurvivalEngine,
};
use resolab_core::perturbation::{
    born_series, bw_complex_fixed_point, bw_discrete, resonance_radius_probe, ProbeTarget, SeriesResult,
};
use resolab_core::testspace::{
    classify_hardy, propagate_support, semigroup_violation, z_space_group_closure, TestFunctionSpec,
};
use serde::Serialize;

use crate::config::{ConfigError, RunConfig};
use crate::output::{Cell, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Resonance pole, weight and first-order approximation.
    Pole,
    /// Exact, pole and background survival amplitudes on a time grid.
    Survive,
    /// Background amplitude against the pole term.
    Background,
    /// Spectral sum rule for each coupling in `lambdas`.
    Sumcheck,
    /// Brillouin-Wigner eigenvalue (discrete model) or complex fixed point.
    Bw,
    /// Born series for the Lippmann-Schwinger amplitude.
    Born,
    /// Convergence sweep over `lambdas`.
    Probe,
    /// Hardy-class verdict for a test function.
    Hardy,
    /// Time translation of a test function.
    Zspace,
    /// Decomposition of an inner product in the outgoing basis.
    Unity,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Pole => "pole",
            Command::Survive => "survive",
            Command::Background => "background",
            Command::Sumcheck => "sumcheck",
            Command::Bw => "bw",
            Command::Born => "born",
            Command::Probe => "probe",
            Command::Hardy => "hardy",
            Command::Zspace => "zspace",
            Command::Unity => "unity",
        }
    }
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Numerical(resolab_core::Error),
    Io(std::io::Error),
}

impl RunError {
    /// Process exit status.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(e) if !e.is_numerical() => 2,
            RunError::Numerical(_) => 3,
            RunError::Io(_) => 3,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "config error: {e}"),
            RunError::Numerical(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<resolab_core::Error> for RunError {
    fn from(e: resolab_core::Error) -> Self {
        RunError::Numerical(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

type Run = Result<Report, RunError>;

pub fn execute(cmd: Command, cfg: &RunConfig) -> Run {
    let model = cfg.model()?;
    match cmd {
        Command::Pole => pole(&model),
        Command::Survive => survive(cfg, &model, false),
        Command::Background => survive(cfg, &model, true),
        Command::Sumcheck => sumcheck(cfg, &model),
        Command::Bw => bw(cfg, &model),
        Command::Born => born(cfg, &model),
        Command::Probe => probe(cfg, &model),
        Command::Hardy => hardy(cfg),
        Command::Zspace => zspace(cfg),
        Command::Unity => unity(cfg, &model),
    }
}

fn re_im(z: Complex64) -> [Cell; 2] {
    [z.re.into(), z.im.into()]
}

fn pole(model: &FriedrichsModel) -> Run {
    let res = find_resonance(model, None)?;
    let first = resonance_first_order(model)?;
    let zeros = if res.gamma > 0.0 {
        let open = gamma_path(model, &res, default_depth(&res))?;
        let path = ContourPath::closed(open.vertices().to_vec())?;
        Some(count_second_sheet_zeros(model, &path)?)
    } else {
        None
    };
    let mut r = Report::new(
        "pole",
        &[
            ("z1_re", "energy"),
            ("z1_im", "energy"),
            ("gamma", "energy"),
            ("decay_rate", "1/time"),
            ("weight_re", "1"),
            ("weight_im", "1"),
            ("z1_first_order_re", "energy"),
            ("z1_first_order_im", "energy"),
            ("iterations", "1"),
            ("enclosed_zeros", "1"),
        ],
    );
    let mut row = Vec::new();
    row.extend(re_im(res.z1));
    row.push(res.gamma.into());
    row.push(res.decay_rate.into());
    row.extend(re_im(res.weight));
    row.extend(re_im(first));
    row.push(res.iterations.into());
    row.push(zeros.into());
    r.push(row);
    r.note("bound_state", bound_state(model)?.map(|b| b.energy));
    Ok(r)
}

fn time_grid(cfg: &RunConfig, rate: f64) -> Vec<f64> {
    let e = &cfg.experiment;
    if let Some(ts) = &e.times {
        return ts.clone();
    }
    let span = if rate > 0.0 { e.time_span / rate } else { e.time_span };
    let n = e.time_points;
    if n == 1 {
        return vec![0.0];
    }
    (0..n)
        .map(|k| {
            // Mirror images are exact negatives, keeping the grid symmetric bit for bit.
            let j = k as f64 - 0.5 * (n - 1) as f64;
            span * j / (0.5 * (n - 1) as f64)
        })
        .collect()
}

fn survive(cfg: &RunConfig, model: &FriedrichsModel, background_only: bool) -> Run {
    let res = find_resonance(model, None)?;
    let times = time_grid(cfg, res.decay_rate);
    let curve = survival_curve(model, &times)?;
    let mut r = if background_only {
        Report::new(
            "background",
            &[
                ("t", "time"),
                ("a_bg_re", "1"),
                ("a_bg_im", "1"),
                ("abs_a_bg", "1"),
                ("abs_a_pole", "1"),
            ],
        )
    } else {
        Report::new(
            "survive",
            &[
                ("t", "time"),
                ("a_exact_re", "1"),
                ("a_exact_im", "1"),
                ("a_pole_re", "1"),
                ("a_pole_im", "1"),
                ("a_bg_re", "1"),
                ("a_bg_im", "1"),
                ("p_exact", "1"),
                ("p_pole_approx", "1"),
                ("residual", "1"),
            ],
        )
    };
    for (i, t) in times.iter().enumerate() {
        let (e, p, b) = (curve.a_exact[i], curve.a_pole[i], curve.a_bg[i]);
        let mut row = vec![(*t).into()];
        if background_only {
            row.extend(re_im(b));
            row.push(b.norm().into());
            row.push(p.norm().into());
        } else {
            row.extend(re_im(e));
            row.extend(re_im(p));
            row.extend(re_im(b));
            row.push(curve.p_exact[i].into());
            row.push(curve.p_pole_approx[i].into());
            row.push((e - p - b).norm().into());
        }
        r.push(row);
    }
    r.note("z1", [res.z1.re, res.z1.im]);
    r.note("decay_rate", res.decay_rate);
    r.note("decomposition_residual", curve.decomposition_residual());
    r.note("bound_state", curve.bound_state.as_ref().map(|b| [b.energy, b.weight]));
    r.warnings = curve.warnings;
    Ok(r)
}

fn sumcheck(cfg: &RunConfig, model: &FriedrichsModel) -> Run {
    let mut r = Report::new(
        "sumcheck",
        &[
            ("lambda", "1"),
            ("continuum_mass", "1"),
            ("bound_weight", "1"),
            ("deviation", "1"),
        ],
    );
    let mut worst = 0.0f64;
    let lambdas = if cfg.experiment.lambdas.is_empty() {
        vec![model.form_factor().lambda()]
    } else {
        cfg.experiment.lambdas.clone()
    };
    for l in lambdas {
        let m = model.with_lambda(l)?;
        let engine = SurvivalEngine::new(&m, &[0.0])?;
        let bound = engine.bound_state().map_or(0.0, |b| b.weight);
        let continuum = engine.continuum_mass();
        let dev = continuum + bound - 1.0;
        worst = worst.max(dev.abs());
        r.push(vec![l.into(), continuum.into(), bound.into(), dev.into()]);
    }
    r.note("max_abs_deviation", worst);
    Ok(r)
}

fn series_table(name: &str, s: &SeriesResult, target: Option<Complex64>) -> Report {
    let mut r = Report::new(
        name,
        &[
            ("order", "1"),
            ("partial_sum_re", "energy"),
            ("partial_sum_im", "energy"),
            ("increment", "energy"),
            ("error", "energy"),
        ],
    );
    for (p, v) in s.partial_sums.iter().enumerate() {
        let inc = (p > 0).then(|| (v - s.partial_sums[p - 1]).norm());
        let mut row = vec![p.into()];
        row.extend(re_im(*v));
        row.push(inc.into());
        row.push(target.map(|t| (v - t).norm()).into());
        r.push(row);
    }
    r.note("converged", s.converged);
    r.note("divergence_reason", s.divergence_reason);
    r.note("ratio_estimate", s.ratio_estimate);
    r.note("value", [s.value.re, s.value.im]);
    r.note("iterations", s.iterations);
    r
}

fn bw(cfg: &RunConfig, model: &FriedrichsModel) -> Run {
    let e = &cfg.experiment;
    if let Some(d) = &e.discrete {
        let m = cfg.discrete_model(d)?;
        let s = bw_discrete(&m, d.level, e.order, e.tolerance)?;
        return Ok(series_table("bw", &s, None));
    }
    let mut r = Report::new(
        "bw",
        &[
            ("side", ""),
            ("fixed_point_re", "energy"),
            ("fixed_point_im", "energy"),
            ("newton_re", "energy"),
            ("newton_im", "energy"),
            ("difference", "energy"),
        ],
    );
    for (label, side) in [("plus", Side::Plus), ("minus", Side::Minus)] {
        let fp = bw_complex_fixed_point(model, side, e.tolerance)?;
        let nw = find_pole(model, side, None)?.z1;
        let mut row = vec![Cell::from(label)];
        row.extend(re_im(fp));
        row.extend(re_im(nw));
        row.push((fp - nw).norm().into());
        r.push(row);
    }
    Ok(r)
}

fn born(cfg: &RunConfig, model: &FriedrichsModel) -> Run {
    let omega = cfg.experiment.omega;
    let s = born_series(model, omega, cfg.experiment.order)?;
    let target = model.form_factor().coupling(omega).conj() / model.eta_boundary(omega, Side::Plus)?;
    let mut r = series_table("born", &s, Some(target));
    r.note("omega", omega);
    r.note("target", [target.re, target.im]);
    Ok(r)
}

fn probe(cfg: &RunConfig, model: &FriedrichsModel) -> Run {
    let e = &cfg.experiment;
    let discrete = e.discrete.as_ref().map(|d| cfg.discrete_model(d)).transpose()?;
    let target = match (&discrete, &e.discrete) {
        (Some(m), Some(d)) => ProbeTarget::Discrete { model: m, level: d.level },
        _ => ProbeTarget::Friedrichs(model),
    };
    let records = resonance_radius_probe(target, &e.lambdas)?;
    let mut r = Report::new(
        "probe",
        &[
            ("lambda", "1"),
            ("converged", ""),
            ("divergence_reason", ""),
            ("ratio_estimate", "1"),
            ("fixed_point_re", "energy"),
            ("fixed_point_im", "energy"),
            ("evidence_1e-2", "1"),
            ("evidence_1e-4", "1"),
            ("evidence_1e-6", "1"),
        ],
    );
    for rec in records {
        let reason = serde_json::to_value(rec.divergence_reason)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        let mut row = vec![rec.lambda.into(), rec.converged.into(), Cell::S(reason), rec.ratio_estimate.into()];
        row.push(rec.complex_fixed_point.map(|z| z.re).into());
        row.push(rec.complex_fixed_point.map(|z| z.im).into());
        for k in 0..3 {
            row.push(rec.evidence.get(k).copied().into());
        }
        r.push(row);
    }
    Ok(r)
}

fn read_samples(path: &Path) -> Result<TestFunctionSpec, RunError> {
    let field = "experiment.samples_csv";
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| ConfigError::new(field, e))?;
    let (mut energies, mut values) = (Vec::new(), Vec::new());
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| ConfigError::new(field, e))?;
        let num = |k: usize| -> Result<f64, ConfigError> {
            rec.get(k)
                .unwrap_or("0")
                .parse()
                .map_err(|e| ConfigError::new(field, format!("row {}: {e}", i + 1)))
        };
        if rec.len() < 2 {
            return Err(ConfigError::new(field, format!("row {} needs E and Re φ", i + 1)).into());
        }
        energies.push(num(0)?);
        values.push(Complex64::new(num(1)?, if rec.len() > 2 { num(2)? } else { 0.0 }));
    }
    let spec = TestFunctionSpec::Sampled { energies, values };
    spec.validate().map_err(|e| ConfigError::new(field, e))?;
    Ok(spec)
}

fn test_function(cfg: &RunConfig, default: TestFunctionSpec) -> Result<TestFunctionSpec, RunError> {
    match (&cfg.experiment.samples_csv, &cfg.experiment.test_function) {
        (Some(p), _) => read_samples(p),
        (None, Some(s)) => Ok(s.clone()),
        (None, None) => Ok(default),
    }
}

fn hardy(cfg: &RunConfig) -> Run {
    use resolab_core::friedrichs::RationalTerm;
    let default = TestFunctionSpec::Rational {
        terms: vec![RationalTerm {
            coeff: Complex64::new(1.0, 0.0),
            pole: Complex64::new(0.0, -1.0),
            order: 1,
        }],
    };
    let spec = test_function(cfg, default)?;
    let rep = classify_hardy(&spec, &cfg.experiment.hardy)?;
    let mut r = Report::new("hardy", &[("y", "energy"), ("norm_plus", "1"), ("norm_minus", "1")]);
    for (p, m) in rep.sup_profile_plus.iter().zip(&rep.sup_profile_minus) {
        r.push(vec![p.0.into(), p.1.into(), m.1.into()]);
    }
    r.note("verdict", rep.verdict);
    r.note("side_plus_fraction", rep.side_plus_fraction);
    r.note("side_minus_fraction", rep.side_minus_fraction);
    r.note("unresolved_fraction", rep.unresolved_fraction);
    r.note("negative_energy_fraction", rep.negative_energy_fraction);
    r.note("bounded_plus", rep.bounded_plus);
    r.note("bounded_minus", rep.bounded_minus);
    Ok(r)
}

fn zspace(cfg: &RunConfig) -> Run {
    let e = &cfg.experiment;
    let default = TestFunctionSpec::Bump {
        a: 0.0,
        b: 1.0,
        amplitude: Complex64::new(1.0, 0.0),
    };
    let spec = test_function(cfg, default)?;
    let closure = z_space_group_closure(&spec, &e.t_list, &e.hardy)?;
    let mut r = Report::new(
        "zspace",
        &[
            ("t", "time"),
            ("passed", ""),
            ("leakage", "1"),
            ("growth", "1"),
            ("support_lo", "time"),
            ("support_hi", "time"),
            ("measured_lo", "time"),
            ("measured_hi", "time"),
        ],
    );
    let bump = matches!(spec, TestFunctionSpec::Bump { .. });
    for entry in &closure.entries {
        let shift = bump
            .then(|| propagate_support(&spec, entry.t, e.hardy.points))
            .transpose()?;
        r.push(vec![
            entry.t.into(),
            entry.passed.into(),
            entry.leakage.into(),
            entry.growth.into(),
            shift.as_ref().map(|s| s.predicted.0).into(),
            shift.as_ref().map(|s| s.predicted.1).into(),
            shift.as_ref().map(|s| s.measured.0).into(),
            shift.as_ref().map(|s| s.measured.1).into(),
        ]);
    }
    if !bump {
        let negative: Vec<f64> = e.t_list.iter().copied().filter(|t| *t < 0.0).collect();
        let mut growth = Vec::new();
        for t in negative {
            let g = semigroup_violation(&spec, t, &e.y_grid)?;
            growth.push((t, g.successive_ratios, g.expected_ratios));
        }
        r.note("semigroup_ratios", growth);
    }
    r.note("closed", closure.closed);
    r.note("max_leakage", closure.max_leakage);
    Ok(r)
}

fn unity(cfg: &RunConfig, model: &FriedrichsModel) -> Run {
    let res = find_resonance(model, None)?;
    let state = |s: &Option<StateCoefficients>| match s {
        Some(s) => Ok(s.clone()),
        None => StateCoefficients::level(model),
    };
    let phi = state(&cfg.experiment.phi)?;
    let psi = state(&cfg.experiment.psi)?;
    let c = reconstruct_inner_product(model, &res, &phi, &psi)?;
    let mut r = Report::new(
        "unity",
        &[
            ("direct_re", "1"),
            ("direct_im", "1"),
            ("decomposed_re", "1"),
            ("decomposed_im", "1"),
            ("discrete_re", "1"),
            ("discrete_im", "1"),
            ("pole_terms_re", "1"),
            ("pole_terms_im", "1"),
            ("background_re", "1"),
            ("background_im", "1"),
            ("residual", "1"),
        ],
    );
    let mut row = Vec::new();
    for z in [c.direct, c.decomposed, c.discrete, c.pole_terms, c.background] {
        row.extend(re_im(z));
    }
    row.push(c.residual.into());
    r.push(row);
    Ok(r)
}
