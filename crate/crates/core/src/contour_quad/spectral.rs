//! Discrete Fourier pair between the energy variable `E` and the conjugate variable `s`.
//!
//! Conventions: `φ̃(s) = ∫ e^{−iEs} φ(E) dE` and `φ(E) = (1/2π) ∫ e^{iEs} φ̃(s) ds`, so
//! functions analytic in the upper half plane have `φ̃` supported on `s > 0`.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Uniform grid `x_j = (j − N/2)·step`, `j = 0..N`, with `N` a power of two.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricGrid {
    pub len: usize,
    pub step: f64,
}

impl SymmetricGrid {
    pub fn new(len: usize, step: f64) -> Result<Self> {
        if len < 4 || !len.is_power_of_two() {
            return Err(Error::Config(format!("grid length {len} is not a power of two >= 4")));
        }
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::Config(format!("grid step must be positive, got {step}")));
        }
        Ok(Self { len, step })
    }

    /// Recovers the grid from explicit sample points, checking uniformity and symmetry.
    pub fn from_points(points: &[f64]) -> Result<Self> {
        let n = points.len();
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::Config(format!("{n} samples: length must be a power of two")));
        }
        let step = (points[n - 1] - points[0]) / (n - 1) as f64;
        if !(step > 0.0) {
            return Err(Error::Config("grid must be increasing".into()));
        }
        for (j, x) in points.iter().enumerate() {
            let expect = points[0] + step * j as f64;
            if (x - expect).abs() > 1e-9 * step.max(x.abs()) {
                return Err(Error::Config(format!("non-uniform grid at index {j}")));
            }
        }
        if (points[0] + points[n - 1]).abs() > 1.0001 * step {
            return Err(Error::Config("grid is not symmetric about 0".into()));
        }
        Self::new(n, step)
    }

    pub fn point(&self, j: usize) -> f64 {
        (j as f64 - (self.len / 2) as f64) * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|j| self.point(j)).collect()
    }

    /// Grid in the conjugate variable with spacing `2π/(N·step)`.
    pub fn dual(&self) -> Self {
        Self {
            len: self.len,
            step: 2.0 * std::f64::consts::PI / (self.len as f64 * self.step),
        }
    }

    pub fn half_width(&self) -> f64 {
        self.step * (self.len / 2) as f64
    }
}

fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(buf.len())
    } else {
        planner.plan_fft_forward(buf.len())
    };
    fft.process(buf);
}

/// `(−1)^k` factors from centring both grids.
fn centre_sign(j: usize) -> f64 {
    if j.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Samples of `φ̃` on `grid.dual()` from samples of `φ` on `grid`.
pub fn energy_to_s(grid: SymmetricGrid, values: &[Complex64]) -> Result<Vec<Complex64>> {
    if values.len() != grid.len {
        return Err(Error::Config("sample count does not match the grid".into()));
    }
    // E_j s_k = 2π (j − N/2)(k − N/2)/N; the cross terms give (−1)^{j+k}, and
    // the constant e^{−iπN/2} is 1 for N divisible by 4.
    let mut buf: Vec<Complex64> = values
        .iter()
        .enumerate()
        .map(|(j, v)| v * centre_sign(j))
        .collect();
    fft_in_place(&mut buf, false);
    let sign_n = if grid.len.is_multiple_of(4) { 1.0 } else { -1.0 };
    Ok(buf
        .into_iter()
        .enumerate()
        .map(|(k, v)| v * (grid.step * centre_sign(k) * sign_n))
        .collect())
}

/// Samples of `φ` on `s_grid.dual()` from samples of `φ̃` on `s_grid`.
pub fn s_to_energy(s_grid: SymmetricGrid, values: &[Complex64]) -> Result<Vec<Complex64>> {
    if values.len() != s_grid.len {
        return Err(Error::Config("sample count does not match the grid".into()));
    }
    let mut buf: Vec<Complex64> = values
        .iter()
        .enumerate()
        .map(|(k, v)| v * centre_sign(k))
        .collect();
    fft_in_place(&mut buf, true);
    let sign_n = if s_grid.len.is_multiple_of(4) { 1.0 } else { -1.0 };
    let scale = s_grid.step / (2.0 * std::f64::consts::PI);
    Ok(buf
        .into_iter()
        .enumerate()
        .map(|(j, v)| v * (scale * centre_sign(j) * sign_n))
        .collect())
}

/// Window and resolution settings for [`support_profile`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportOptions {
    /// Value of the Gaussian taper at the grid ends.
    pub window_end_value: f64,
    /// Half-width of the unresolved band around `s = 0`, in units of the taper's
    /// spectral width `1/σ`.
    pub guard_widths: f64,
    /// Fraction of the `s` range at either end treated as the aliasing zone.
    pub edge_zone: f64,
}

impl Default for SupportOptions {
    fn default() -> Self {
        Self {
            window_end_value: 1e-9,
            guard_widths: 6.0,
            edge_zone: 0.05,
        }
    }
}

/// Distribution of `|φ̃(s)|²` over the two semiaxes.
#[derive(Debug, Clone)]
pub struct SupportProfile {
    pub grid: Vec<f64>,
    pub magnitudes: Vec<f64>,
    /// Fractions of the resolved mass (outside the central band); they sum to 1.
    pub positive_fraction: f64,
    pub negative_fraction: f64,
    /// Mass inside the central band `|s| < guard`, relative to the total.
    pub unresolved_fraction: f64,
    /// Mass in the outer `edge_zone` of the `s` range, relative to the total.
    pub edge_fraction: f64,
    pub guard: f64,
}

/// Fourier-support profile of uniformly sampled `φ(E)`.
///
/// A Gaussian taper reaching `window_end_value` at the grid ends suppresses truncation;
/// its spectral width sets the band around `s = 0` that cannot be assigned to a side.
pub fn support_profile(
    grid: &[f64],
    samples: &[Complex64],
    opts: &SupportOptions,
) -> Result<SupportProfile> {
    let g = SymmetricGrid::from_points(grid)?;
    if samples.len() != grid.len() {
        return Err(Error::Config("sample count does not match the grid".into()));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalDomain("non-finite sample".into()));
    }
    if !(opts.window_end_value > 0.0 && opts.window_end_value < 1.0) {
        return Err(Error::Config("window_end_value must lie in (0, 1)".into()));
    }
    let l = g.half_width();
    let sigma = l / (-2.0 * opts.window_end_value.ln()).sqrt();
    let tapered: Vec<Complex64> = samples
        .iter()
        .zip(grid)
        .map(|(v, e)| v * (-0.5 * (e / sigma).powi(2)).exp())
        .collect();
    let spec = energy_to_s(g, &tapered)?;
    let sg = g.dual();
    let guard = opts.guard_widths / sigma;
    let s_max = sg.half_width();
    let (mut pos, mut neg, mut mid, mut edge) = (0.0, 0.0, 0.0, 0.0);
    let mut magnitudes = Vec::with_capacity(spec.len());
    let mut points = Vec::with_capacity(spec.len());
    for (k, v) in spec.iter().enumerate() {
        let s = sg.point(k);
        let m2 = v.norm_sqr();
        magnitudes.push(m2.sqrt());
        points.push(s);
        if s.abs() > (1.0 - opts.edge_zone) * s_max {
            edge += m2;
        }
        if s.abs() < guard {
            mid += m2;
        } else if s > 0.0 {
            pos += m2;
        } else {
            neg += m2;
        }
    }
    let total = pos + neg + mid;
    if !(total > 0.0) {
        return Err(Error::Config("function vanishes on the grid".into()));
    }
    let resolved = pos + neg;
    let (positive_fraction, negative_fraction) = if resolved > 0.0 {
        (pos / resolved, neg / resolved)
    } else {
        (0.5, 0.5)
    };
    Ok(SupportProfile {
        grid: points,
        magnitudes,
        positive_fraction,
        negative_fraction,
        unresolved_fraction: mid / total,
        edge_fraction: edge / total,
        guard,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(g: &SymmetricGrid, f: impl Fn(f64) -> Complex64) -> (Vec<f64>, Vec<Complex64>) {
        let pts = g.points();
        let vals = pts.iter().map(|e| f(*e)).collect();
        (pts, vals)
    }

    #[test]
    fn gaussian_transform_matches_closed_form() {
        // φ = e^{−E²/2} ⇒ φ̃ = √(2π) e^{−s²/2}
        let g = SymmetricGrid::new(256, 0.1).unwrap();
        let (_, vals) = sample(&g, |e| Complex64::new((-0.5 * e * e).exp(), 0.0));
        let spec = energy_to_s(g, &vals).unwrap();
        let sg = g.dual();
        for (k, v) in spec.iter().enumerate() {
            let s = sg.point(k);
            let exact = (2.0 * std::f64::consts::PI).sqrt() * (-0.5 * s * s).exp();
            assert!((v - exact).norm() < 1e-12, "s={s}: {v} vs {exact}");
        }
        let back = s_to_energy(sg, &spec).unwrap();
        for (a, b) in back.iter().zip(&vals) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn plus_pole_means_positive_support() {
        let g = SymmetricGrid::new(1 << 14, 0.2).unwrap();
        let (pts, vals) = sample(&g, |e| 1.0 / Complex64::new(e, 1.0));
        let p = support_profile(&pts, &vals, &SupportOptions::default()).unwrap();
        assert!(p.negative_fraction < 1e-6, "{}", p.negative_fraction);
        assert!((p.positive_fraction + p.negative_fraction - 1.0).abs() < 1e-12);
        let conj: Vec<_> = vals.iter().map(|v| v.conj()).collect();
        let q = support_profile(&pts, &conj, &SupportOptions::default()).unwrap();
        assert!(q.positive_fraction < 1e-6);
    }

    #[test]
    fn even_function_splits_evenly() {
        let g = SymmetricGrid::new(1 << 14, 0.05).unwrap();
        let (pts, vals) = sample(&g, |e| Complex64::new((-e * e).exp(), 0.0));
        let p = support_profile(&pts, &vals, &SupportOptions::default()).unwrap();
        assert!(p.positive_fraction > 0.4 && p.positive_fraction < 0.6);
        assert!(p.negative_fraction > 0.4 && p.negative_fraction < 0.6);
    }

    #[test]
    fn non_uniform_grid_rejected() {
        let mut pts: Vec<f64> = SymmetricGrid::new(16, 1.0).unwrap().points();
        pts[3] += 0.3;
        let vals = vec![Complex64::new(1.0, 0.0); 16];
        assert!(matches!(
            support_profile(&pts, &vals, &SupportOptions::default()),
            Err(Error::Config(_))
        ));
        let pts: Vec<f64> = (0..12).map(|j| j as f64).collect();
        assert!(support_profile(&pts, &vals[..12], &SupportOptions::default()).is_err());
    }
}
