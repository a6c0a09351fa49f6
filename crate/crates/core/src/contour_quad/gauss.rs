//! Gauss-Legendre rules, composite panels and semi-infinite mappings.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the half line `[0, ∞)` is covered by a finite rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemiInfiniteMap {
    /// Integrate `[0, R]` only; the tail is estimated from the algebraic decay of `f`.
    Truncate,
    /// `[0, R]` plus the tail `[R, ∞)` through `ω = R/u`, `u ∈ (0, 1]`.
    Reciprocal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Finite { a: f64, b: f64 },
    SemiInfinite { map: SemiInfiniteMap, cutoff: f64 },
}

/// Nodes and positive weights approximating `∫ f` over a [`Domain`].
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    domain: Domain,
}

impl QuadratureRule {
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>, domain: Domain) -> Result<Self> {
        if nodes.len() != weights.len() {
            return Err(Error::Config("node and weight counts differ".into()));
        }
        if nodes.len() < 2 {
            return Err(Error::Config("a rule needs at least two nodes".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::Config("weights must be positive and finite".into()));
        }
        if let Domain::Finite { a, b } = domain {
            if nodes.iter().any(|x| *x < a || *x > b) {
                return Err(Error::Config(format!("nodes outside [{a}, {b}]")));
            }
        }
        Ok(Self {
            nodes,
            weights,
            domain,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }

    pub fn integrate_complex<F: Fn(f64) -> Complex64>(&self, f: F) -> Complex64 {
        self.iter().map(|(x, w)| f(x) * w).sum()
    }

    /// Like [`integrate_complex`](Self::integrate_complex) but rejects non-finite samples.
    pub fn try_integrate<F: Fn(f64) -> Complex64>(&self, f: F) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, w) in self.iter() {
            let v = f(x);
            if !v.is_finite() {
                return Err(Error::NumericalDomain(format!(
                    "integrand not finite at x = {x}"
                )));
            }
            acc += v * w;
        }
        Ok(acc)
    }
}

/// Nodes and weights on `[-1, 1]`, ascending.
pub(crate) fn legendre_reference(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        // refresh the derivative at the converged root
        let (mut p0, mut p1) = (1.0, z);
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        if n > 1 {
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// `n`-point Gauss-Legendre rule on `[a, b]`, exact for polynomials of degree `2n - 1`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<QuadratureRule> {
    if n < 2 {
        return Err(Error::Config(format!("gauss_legendre needs n >= 2, got {n}")));
    }
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Config(format!("invalid interval [{a}, {b}]")));
    }
    let (x, w) = legendre_reference(n);
    let (half, mid) = (0.5 * (b - a), 0.5 * (b + a));
    let nodes = x.iter().map(|t| (mid + half * t).clamp(a, b)).collect();
    let weights = w.iter().map(|wi| wi * half).collect();
    QuadratureRule::new(nodes, weights, Domain::Finite { a, b })
}

/// Composite rule with `n` Gauss-Legendre nodes on every panel between consecutive breakpoints.
pub fn composite(breaks: &[f64], n: usize) -> Result<QuadratureRule> {
    if breaks.len() < 2 {
        return Err(Error::Config("composite rule needs two breakpoints".into()));
    }
    if n < 2 {
        return Err(Error::Config(format!("panel rule needs n >= 2, got {n}")));
    }
    if breaks.windows(2).any(|p| !(p[0] < p[1])) {
        return Err(Error::Config("breakpoints must be strictly increasing".into()));
    }
    let (x, w) = legendre_reference(n);
    let mut nodes = Vec::with_capacity(n * (breaks.len() - 1));
    let mut weights = Vec::with_capacity(n * (breaks.len() - 1));
    for p in breaks.windows(2) {
        let (half, mid) = (0.5 * (p[1] - p[0]), 0.5 * (p[1] + p[0]));
        for (t, wi) in x.iter().zip(&w) {
            nodes.push((mid + half * t).clamp(p[0], p[1]));
            weights.push(wi * half);
        }
    }
    let (a, b) = (breaks[0], breaks[breaks.len() - 1]);
    QuadratureRule::new(nodes, weights, Domain::Finite { a, b })
}

/// Splits every gap of `breaks` wider than `max_len` into equal pieces.
pub fn refine_breaks(breaks: &[f64], max_len: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(breaks.len());
    for p in breaks.windows(2) {
        out.push(p[0]);
        let pieces = ((p[1] - p[0]) / max_len).ceil().max(1.0) as usize;
        for k in 1..pieces {
            out.push(p[0] + (p[1] - p[0]) * k as f64 / pieces as f64);
        }
    }
    if let Some(last) = breaks.last() {
        out.push(*last);
    }
    out
}

/// Breakpoints graded geometrically towards `center` over `[a, b]`, finest panel `scale`.
pub fn graded_breaks(a: f64, b: f64, center: f64, scale: f64) -> Vec<f64> {
    let mut pts = vec![a, b];
    if center > a && center < b {
        pts.push(center);
    }
    let mut h = scale;
    while h < (b - a) {
        for c in [center - h, center + h] {
            if c > a && c < b {
                pts.push(c);
            }
        }
        h *= 2.0;
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (1.0 + y.abs()));
    pts
}

/// Settings for integrals over `[0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiInfiniteSpec {
    /// Total node budget.
    pub n: usize,
    pub cutoff: f64,
    pub map: SemiInfiniteMap,
}

impl Default for SemiInfiniteSpec {
    fn default() -> Self {
        Self {
            n: 400,
            cutoff: 20.0,
            map: SemiInfiniteMap::Reciprocal,
        }
    }
}

const GEOMETRIC_LEVELS: usize = 10;

impl SemiInfiniteSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff > 0.0) || !self.cutoff.is_finite() {
            return Err(Error::Config(format!("cutoff must be positive, got {}", self.cutoff)));
        }
        if self.n < 4 * (GEOMETRIC_LEVELS + 2) {
            return Err(Error::Config(format!(
                "node budget {} too small for the semi-infinite rule",
                self.n
            )));
        }
        Ok(())
    }

    fn panel_nodes(&self) -> usize {
        (self.n / (GEOMETRIC_LEVELS + 2)).max(4)
    }

    /// Rule on `[0, cutoff]` graded geometrically towards the origin.
    pub fn finite_part(&self) -> Result<QuadratureRule> {
        self.validate()?;
        let r = self.cutoff;
        let mut breaks: Vec<f64> = (0..=GEOMETRIC_LEVELS)
            .rev()
            .map(|k| r / f64::powi(2.0, k as i32))
            .collect();
        breaks.insert(0, 0.0);
        composite(&breaks, self.panel_nodes())
    }

    /// Nodes and weights covering `[cutoff, ∞)` through `ω = R/u`.
    pub fn tail_part(&self) -> Result<QuadratureRule> {
        self.validate()?;
        let r = self.cutoff;
        let base = gauss_legendre(self.panel_nodes(), 0.0, 1.0)?;
        let (nodes, weights): (Vec<f64>, Vec<f64>) = base
            .iter()
            .collect::<Vec<_>>()
            .into_iter()
            .rev()
            .map(|(u, w)| (r / u, w * r / (u * u)))
            .unzip();
        QuadratureRule::new(
            nodes,
            weights,
            Domain::SemiInfinite {
                map: SemiInfiniteMap::Reciprocal,
                cutoff: r,
            },
        )
    }

    /// The full rule for this spec (finite part, plus the tail when mapped).
    pub fn rule(&self) -> Result<QuadratureRule> {
        let fin = self.finite_part()?;
        let domain = Domain::SemiInfinite {
            map: self.map,
            cutoff: self.cutoff,
        };
        match self.map {
            SemiInfiniteMap::Truncate => QuadratureRule::new(fin.nodes, fin.weights, domain),
            SemiInfiniteMap::Reciprocal => {
                let tail = self.tail_part()?;
                let mut nodes = fin.nodes;
                let mut weights = fin.weights;
                nodes.extend_from_slice(&tail.nodes);
                weights.extend_from_slice(&tail.weights);
                QuadratureRule::new(nodes, weights, domain)
            }
        }
    }
}

/// A quadrature value with an estimate of the neglected or approximated tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub tail_bound: f64,
}

/// `∫₀^∞ f(ω) dω` with a cutoff plus tail model.
pub fn semi_infinite_quad<F>(f: F, spec: &SemiInfiniteSpec) -> Result<Estimate>
where
    F: Fn(f64) -> Complex64,
{
    let fin = spec.finite_part()?;
    let body = fin.try_integrate(&f)?;
    let r = spec.cutoff;
    match spec.map {
        SemiInfiniteMap::Truncate => {
            let (f1, f2) = (f(r).norm(), f(2.0 * r).norm());
            if !f1.is_finite() || !f2.is_finite() {
                return Err(Error::NumericalDomain("integrand not finite beyond cutoff".into()));
            }
            let tail_bound = if f1 == 0.0 {
                0.0
            } else if f2 == 0.0 {
                f1 * r
            } else {
                let p = (f1 / f2).log2();
                if p > 1.0 {
                    r * f1 / (p - 1.0)
                } else {
                    f64::INFINITY
                }
            };
            Ok(Estimate {
                value: body,
                tail_bound,
            })
        }
        SemiInfiniteMap::Reciprocal => {
            let tail = spec.tail_part()?.try_integrate(&f)?;
            let coarse = SemiInfiniteSpec {
                n: spec.n / 2,
                ..*spec
            };
            let tail_bound = match coarse.tail_part() {
                Ok(rule) => (rule.try_integrate(&f)? - tail).norm(),
                Err(_) => tail.norm(),
            };
            Ok(Estimate {
                value: body + tail,
                tail_bound,
            })
        }
    }
}

/// Integration range for [`principal_value`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PvRange {
    Finite { a: f64, b: f64 },
    SemiInfinite(SemiInfiniteSpec),
}

/// Cauchy principal value of `∫ f(ω)/(E₀ − ω) dω` by singularity subtraction.
///
/// `f(ω)/(E₀−ω) = [f(ω)−f(E₀)]/(E₀−ω) + f(E₀)/(E₀−ω)`; the first term is smooth and the
/// second integrates to `f(E₀)·ln((E₀−a)/(b−E₀))`.
pub fn principal_value<F>(f: F, e0: f64, range: PvRange, n: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (a, b, tail) = match range {
        PvRange::Finite { a, b } => (a, b, None),
        PvRange::SemiInfinite(spec) => {
            spec.validate()?;
            (0.0, spec.cutoff, Some(spec))
        }
    };
    if !(e0 > a && e0 < b) {
        return Err(Error::Domain(format!(
            "principal value point {e0} must lie strictly inside ({a}, {b})"
        )));
    }
    let f0 = f(e0);
    if !f0.is_finite() {
        return Err(Error::NumericalDomain(format!("f({e0}) is not finite")));
    }
    let scale = (b - a).min(1.0) / 64.0;
    let breaks = refine_breaks(&graded_breaks(a, b, e0, scale), (b - a) / 8.0);
    let rule = composite(&breaks, n.clamp(8, 64))?;
    let mut acc = 0.0;
    for (x, w) in rule.iter() {
        let d = e0 - x;
        let v = (f(x) - f0) / d;
        if !v.is_finite() {
            return Err(Error::NumericalDomain(format!("integrand not finite at {x}")));
        }
        acc += w * v;
    }
    acc += f0 * ((e0 - a) / (b - e0)).ln();
    if let Some(spec) = tail {
        let t = spec
            .tail_part()?
            .try_integrate(|x| Complex64::new(f(x) / (e0 - x), 0.0))?;
        acc += t.re;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartic_exact_with_five_nodes() {
        let r = gauss_legendre(5, 0.0, 1.0).unwrap();
        assert!((r.integrate(|x| x.powi(4)) - 0.2).abs() < 1e-14);
    }

    #[test]
    fn two_point_constant() {
        let r = gauss_legendre(2, -1.0, 1.0).unwrap();
        assert!((r.integrate(|_| 1.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn exponential_on_zero_ten() {
        let r = gauss_legendre(40, 0.0, 10.0).unwrap();
        let exact = 1.0 - (-10.0f64).exp();
        assert!((r.integrate(|x| (-x).exp()) - exact).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_configuration() {
        assert!(matches!(gauss_legendre(1, 0.0, 1.0), Err(Error::Config(_))));
        assert!(matches!(gauss_legendre(4, 1.0, 1.0), Err(Error::Config(_))));
        assert!(matches!(gauss_legendre(4, 2.0, 1.0), Err(Error::Config(_))));
        assert!(composite(&[0.0, 1.0, 1.0], 4).is_err());
    }

    #[test]
    fn large_rule_weights_sum_to_length() {
        for n in [2, 3, 17, 64, 200] {
            let r = gauss_legendre(n, -3.0, 4.5).unwrap();
            let s: f64 = r.weights().iter().sum();
            assert!((s - 7.5).abs() < 1e-12 * 7.5, "n={n}: {s}");
            assert!(r.nodes().windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn semi_infinite_examples() {
        let spec = SemiInfiniteSpec::default();
        let e = semi_infinite_quad(|x| Complex64::new((-x).exp(), 0.0), &spec).unwrap();
        assert!((e.value.re - 1.0).abs() < 1e-10);
        let e = semi_infinite_quad(
            |x| Complex64::new(x / (1.0 + x * x).powi(2), 0.0),
            &spec,
        )
        .unwrap();
        assert!((e.value.re - 0.5).abs() < 1e-10, "{}", e.value);
        assert!(e.tail_bound < 1e-10);
        let e = semi_infinite_quad(|_| Complex64::new(0.0, 0.0), &spec).unwrap();
        assert_eq!(e.value, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn truncated_tail_bound_tracks_algebraic_decay() {
        let spec = SemiInfiniteSpec {
            map: SemiInfiniteMap::Truncate,
            ..Default::default()
        };
        // tail of 1/(1+x)^3 beyond 20 is 1/(2*21^2)
        let e = semi_infinite_quad(|x| Complex64::new((1.0 + x).powi(-3), 0.0), &spec).unwrap();
        let tail = 0.5 / 21.0f64.powi(2);
        assert!((e.value.re + tail - 0.5).abs() < 1e-10);
        assert!(e.tail_bound > 0.5 * tail && e.tail_bound < 2.0 * tail);
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let spec = SemiInfiniteSpec::default();
        let r = semi_infinite_quad(|x| Complex64::new(1.0 / (x - x), 0.0), &spec);
        assert!(matches!(r, Err(Error::NumericalDomain(_))));
    }

    #[test]
    fn pv_odd_symmetry_and_log() {
        let v = principal_value(|_| 1.0, 1.0, PvRange::Finite { a: 0.0, b: 2.0 }, 32).unwrap();
        assert!(v.abs() < 1e-14);
        let v = principal_value(|_| 1.0, 1.0, PvRange::Finite { a: 0.0, b: 3.0 }, 32).unwrap();
        assert!((v - 0.5f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn pv_rejects_boundary_point() {
        let r = principal_value(|_| 1.0, 0.0, PvRange::Finite { a: 0.0, b: 2.0 }, 32);
        assert!(matches!(r, Err(Error::Domain(_))));
        let r = principal_value(|_| 1.0, 2.0, PvRange::Finite { a: 0.0, b: 2.0 }, 32);
        assert!(matches!(r, Err(Error::Domain(_))));
    }
}
