//! Piecewise-linear complex contours.

use num_complex::Complex64;

use super::gauss::legendre_reference;
use crate::error::{Error, Result};

/// A polyline in the complex energy plane.
///
/// The retarded path Γ₊ starts at 0, runs through the lower half plane no deeper than
/// `depth` and returns to the real axis at the cutoff `R`; Γ₋ is its mirror image.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourPath {
    vertices: Vec<Complex64>,
}

impl ContourPath {
    pub fn polyline(vertices: Vec<Complex64>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::ContourConfiguration("a path needs two vertices".into()));
        }
        if vertices.iter().any(|z| !z.is_finite()) {
            return Err(Error::ContourConfiguration("non-finite vertex".into()));
        }
        Ok(Self { vertices })
    }

    /// Closed polyline; the first vertex is appended at the end.
    pub fn closed(mut vertices: Vec<Complex64>) -> Result<Self> {
        if let Some(first) = vertices.first().copied() {
            vertices.push(first);
        }
        Self::polyline(vertices)
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]`, counter-clockwise.
    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if !(x0 < x1 && y0 < y1) {
            return Err(Error::ContourConfiguration("degenerate rectangle".into()));
        }
        Self::closed(vec![
            Complex64::new(x0, y0),
            Complex64::new(x1, y0),
            Complex64::new(x1, y1),
            Complex64::new(x0, y1),
        ])
    }

    /// The three-segment Γ₊: `0 → −id → R−id → R`.
    pub fn gamma_plus(depth: f64, cutoff: f64) -> Result<Self> {
        check_depth_cutoff(depth, cutoff)?;
        Self::polyline(vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, -depth),
            Complex64::new(cutoff, -depth),
            Complex64::new(cutoff, 0.0),
        ])
    }

    /// The two-segment Γ₊: `0 → apex − id → R`.
    pub fn gamma_plus_wedge(depth: f64, apex: f64, cutoff: f64) -> Result<Self> {
        check_depth_cutoff(depth, cutoff)?;
        if !(apex > 0.0 && apex < cutoff) {
            return Err(Error::ContourConfiguration(format!(
                "wedge apex {apex} outside (0, {cutoff})"
            )));
        }
        Self::polyline(vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(apex, -depth),
            Complex64::new(cutoff, 0.0),
        ])
    }

    pub fn vertices(&self) -> &[Complex64] {
        &self.vertices
    }

    /// Maximal |Im z| along the path.
    pub fn depth(&self) -> f64 {
        self.vertices.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Real part of the end point.
    pub fn cutoff(&self) -> f64 {
        self.vertices[self.vertices.len() - 1].re
    }

    pub fn is_closed(&self) -> bool {
        self.vertices.first() == self.vertices.last()
    }

    /// Complex-conjugate path (Γ₋ from Γ₊).
    pub fn conj(&self) -> Self {
        Self {
            vertices: self.vertices.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Same path traversed backwards.
    pub fn reversed(&self) -> Self {
        let mut v = self.vertices.clone();
        v.reverse();
        Self { vertices: v }
    }

    /// Concatenation; `other` must start where `self` ends.
    pub fn join(&self, other: &Self) -> Result<Self> {
        if (self.vertices[self.vertices.len() - 1] - other.vertices[0]).norm() > 1e-12 {
            return Err(Error::ContourConfiguration("paths do not connect".into()));
        }
        let mut v = self.vertices.clone();
        v.extend_from_slice(&other.vertices[1..]);
        Ok(Self { vertices: v })
    }

    pub fn segments(&self) -> impl Iterator<Item = (Complex64, Complex64)> + '_ {
        self.vertices.windows(2).map(|p| (p[0], p[1]))
    }

    /// Checks the Γ₊ shape: starts at 0, ends on the real axis at `R > 0`, interior in
    /// the closed lower half plane.
    pub fn validate_gamma_plus(&self) -> Result<()> {
        let first = self.vertices[0];
        let last = self.vertices[self.vertices.len() - 1];
        if first.norm() > 1e-14 {
            return Err(Error::ContourConfiguration(format!("Γ₊ must start at 0, starts at {first}")));
        }
        if last.im.abs() > 1e-14 || !(last.re > 0.0) {
            return Err(Error::ContourConfiguration(format!(
                "Γ₊ must end on the positive real axis, ends at {last}"
            )));
        }
        if self.vertices.iter().any(|z| z.im > 1e-14) {
            return Err(Error::ContourConfiguration("Γ₊ must stay in the lower half plane".into()));
        }
        Ok(())
    }
}

fn check_depth_cutoff(depth: f64, cutoff: f64) -> Result<()> {
    if !(depth > 0.0) || !depth.is_finite() {
        return Err(Error::ContourConfiguration(format!("depth must be positive, got {depth}")));
    }
    if !(cutoff > 0.0) || !cutoff.is_finite() {
        return Err(Error::ContourConfiguration(format!("cutoff must be positive, got {cutoff}")));
    }
    Ok(())
}

/// Refinement request: panels shrink geometrically towards the point of a segment
/// nearest to `point`, starting from `scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grading {
    pub point: Complex64,
    pub scale: f64,
}

/// Panel layout used to discretize a path.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourRule {
    pub nodes_per_panel: usize,
    pub max_panel_len: f64,
    pub grading: Vec<Grading>,
}

impl Default for ContourRule {
    fn default() -> Self {
        Self {
            nodes_per_panel: 32,
            max_panel_len: f64::INFINITY,
            grading: Vec::new(),
        }
    }
}

/// Precomputed points `z_j` and complex weights `w_j = ω_j z′(τ_j)` on a path.
#[derive(Debug, Clone, Default)]
pub struct ContourNodes {
    pub points: Vec<Complex64>,
    pub weights: Vec<Complex64>,
}

impl ContourNodes {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (z, w) in self.points.iter().zip(&self.weights) {
            let v = f(*z);
            if !v.is_finite() {
                return Err(Error::NumericalDomain(format!("integrand not finite at z = {z}")));
            }
            acc += v * w;
        }
        Ok(acc)
    }
}

/// Panel breakpoints (as fractions of the segment) for one segment.
fn segment_breaks(p0: Complex64, p1: Complex64, rule: &ContourRule) -> Vec<f64> {
    let len = (p1 - p0).norm();
    let dir = (p1 - p0) / len;
    let mut pts = vec![0.0, len];
    for g in &rule.grading {
        let tau = ((g.point - p0) * dir.conj()).re.clamp(0.0, len);
        pts.push(tau);
        let mut h = g.scale.max(1e-300);
        while h < len {
            for c in [tau - h, tau + h] {
                if c > 0.0 && c < len {
                    pts.push(c);
                }
            }
            h *= 2.0;
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-13 * len);
    let mut out = Vec::with_capacity(pts.len());
    for p in pts.windows(2) {
        out.push(p[0]);
        let pieces = ((p[1] - p[0]) / rule.max_panel_len).ceil().max(1.0) as usize;
        for k in 1..pieces {
            out.push(p[0] + (p[1] - p[0]) * k as f64 / pieces as f64);
        }
    }
    out.push(len);
    out.iter().map(|t| t / len).collect()
}

pub fn discretize(path: &ContourPath, rule: &ContourRule) -> Result<ContourNodes> {
    if rule.nodes_per_panel < 2 {
        return Err(Error::Config("contour panels need at least two nodes".into()));
    }
    if !(rule.max_panel_len > 0.0) {
        return Err(Error::Config("max_panel_len must be positive".into()));
    }
    let (x, w) = legendre_reference(rule.nodes_per_panel);
    let mut nodes = ContourNodes::default();
    for (p0, p1) in path.segments() {
        let delta = p1 - p0;
        if delta.norm() == 0.0 {
            continue;
        }
        for b in segment_breaks(p0, p1, rule).windows(2) {
            let (half, mid) = (0.5 * (b[1] - b[0]), 0.5 * (b[1] + b[0]));
            for (t, wi) in x.iter().zip(&w) {
                let s = mid + half * t;
                nodes.points.push(p0 + delta * s);
                nodes.weights.push(delta * (wi * half));
            }
        }
    }
    Ok(nodes)
}

/// `∫_path f(z) dz` as a sum of per-segment Gauss-Legendre integrals.
pub fn contour_integrate<F>(f: F, path: &ContourPath) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    contour_integrate_with(f, path, &ContourRule::default())
}

pub fn contour_integrate_with<F>(f: F, path: &ContourPath, rule: &ContourRule) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    discretize(path, rule)?.integrate(f)
}

/// Winding number of `f(z)` around 0 as `z` traverses a closed `path`, i.e. the number
/// of zeros minus poles of `f` enclosed (counter-clockwise positive).
///
/// Each segment is refined adaptively until consecutive samples differ in argument by
/// less than `max_step` radians.
pub fn winding_number<F>(f: F, path: &ContourPath) -> Result<i64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    if !path.is_closed() {
        return Err(Error::ContourConfiguration("winding number needs a closed path".into()));
    }
    const MAX_STEP: f64 = 0.3;
    const MIN_FRACTION: f64 = 1e-10;
    let mut total = 0.0;
    for (p0, p1) in path.segments() {
        let eval = |s: f64| -> Result<Complex64> {
            let v = f(p0 + (p1 - p0) * s)?;
            if !v.is_finite() || v.norm() == 0.0 {
                return Err(Error::ContourConfiguration(format!(
                    "function vanishes or is singular on the path near {}",
                    p0 + (p1 - p0) * s
                )));
            }
            Ok(v)
        };
        const INITIAL: usize = 64;
        let samples = (0..=INITIAL)
            .map(|k| eval(k as f64 / INITIAL as f64))
            .collect::<Result<Vec<_>>>()?;
        let mut stack: Vec<(f64, f64, Complex64, Complex64)> = (0..INITIAL)
            .rev()
            .map(|k| {
                let (s0, s1) = (k as f64 / INITIAL as f64, (k + 1) as f64 / INITIAL as f64);
                (s0, s1, samples[k], samples[k + 1])
            })
            .collect();
        let mut seg = 0.0;
        let mut pieces = 0usize;
        while let Some((s0, s1, v0, v1)) = stack.pop() {
            let step = (v1 / v0).arg();
            if step.abs() < MAX_STEP || s1 - s0 < MIN_FRACTION {
                if s1 - s0 < MIN_FRACTION && step.abs() >= MAX_STEP {
                    return Err(Error::ContourConfiguration(
                        "argument jump not resolved; path passes too close to a zero or pole".into(),
                    ));
                }
                seg += step;
                pieces += 1;
                continue;
            }
            let sm = 0.5 * (s0 + s1);
            let vm = eval(sm)?;
            stack.push((sm, s1, vm, v1));
            stack.push((s0, sm, v0, vm));
            if pieces > 10_000_000 {
                return Err(Error::ContourConfiguration("winding refinement exhausted".into()));
            }
        }
        total += seg;
    }
    Ok((total / (2.0 * std::f64::consts::PI)).round() as i64)
}
