use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Curve families understood by [`fit_curve`](super::fit_curve).
///
/// Parameter order for each family:
///
/// | family | model | parameters |
/// |---|---|---|
/// | `Gaussian` | A·exp(−(x−μ)²/2σ²) + c | A, μ, σ, [c] |
/// | `Lorentzian` | A·(F/2)²/((x−μ)² + (F/2)²) + c | A, μ, F (FWHM), [c] |
/// | `ExponentialDecay` | A·exp(−x/τ) + c | A, τ, [c] |
/// | `SaturatingExponential` | c∞ − A·exp(−x/τ) | c∞, A, τ |
/// | `Sinusoid` | A·cos(ωx + φ) + c | A, ω, φ, c |
/// | `DampedSinusoid` | A·exp(−x/τ)·cos(ωx + φ) + c | A, ω, φ, τ, c |
/// | `DoubleGaussian` | two unit-free Gaussians | A₁, μ₁, σ₁, A₂, μ₂, σ₂ |
/// | `Polynomial` | Σ aₖ xᵏ | a₀ … a_order |
///
/// Bracketed parameters exist only when the baseline/offset flag is set.
/// Widths and time constants are kept positive during fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitModel {
    Gaussian { baseline: bool },
    Lorentzian { baseline: bool },
    ExponentialDecay { offset: bool },
    SaturatingExponential,
    Sinusoid,
    DampedSinusoid,
    DoubleGaussian,
    Polynomial { order: usize },
}

impl FitModel {
    pub fn n_params(&self) -> usize {
        match *self {
            FitModel::Gaussian { baseline } | FitModel::Lorentzian { baseline } => {
                3 + baseline as usize
            }
            FitModel::ExponentialDecay { offset } => 2 + offset as usize,
            FitModel::SaturatingExponential => 3,
            FitModel::Sinusoid => 4,
            FitModel::DampedSinusoid => 5,
            FitModel::DoubleGaussian => 6,
            FitModel::Polynomial { order } => order + 1,
        }
    }

    pub fn param_names(&self) -> Vec<String> {
        let fixed: &[&str] = match *self {
            FitModel::Gaussian { .. } => &["amplitude", "center", "sigma", "baseline"],
            FitModel::Lorentzian { .. } => &["amplitude", "center", "fwhm", "baseline"],
            FitModel::ExponentialDecay { .. } => &["amplitude", "tau", "offset"],
            FitModel::SaturatingExponential => &["asymptote", "amplitude", "tau"],
            FitModel::Sinusoid => &["amplitude", "omega", "phase", "offset"],
            FitModel::DampedSinusoid => &["amplitude", "omega", "phase", "tau", "offset"],
            FitModel::DoubleGaussian => &["a1", "mu1", "sigma1", "a2", "mu2", "sigma2"],
            FitModel::Polynomial { order } => {
                return (0..=order).map(|k| format!("a{k}")).collect();
            }
        };
        fixed[..self.n_params()].iter().map(|s| s.to_string()).collect()
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.param_names().iter().position(|n| n == name)
    }

    /// Parameters fitted in log space (must stay positive).
    pub fn is_positive(&self, j: usize) -> bool {
        match self {
            FitModel::Gaussian { .. } | FitModel::Lorentzian { .. } => j == 2,
            FitModel::ExponentialDecay { .. } => j == 1,
            FitModel::SaturatingExponential => j == 2,
            FitModel::DampedSinusoid => j == 3,
            FitModel::DoubleGaussian => j == 2 || j == 5,
            FitModel::Sinusoid | FitModel::Polynomial { .. } => false,
        }
    }

    pub fn eval(&self, p: &[f64], x: f64) -> f64 {
        match *self {
            FitModel::Gaussian { baseline } => {
                let z = (x - p[1]) / p[2];
                p[0] * (-0.5 * z * z).exp() + if baseline { p[3] } else { 0.0 }
            }
            FitModel::Lorentzian { baseline } => {
                let h = 0.5 * p[2];
                let d = x - p[1];
                p[0] * h * h / (d * d + h * h) + if baseline { p[3] } else { 0.0 }
            }
            FitModel::ExponentialDecay { offset } => {
                p[0] * (-x / p[1]).exp() + if offset { p[2] } else { 0.0 }
            }
            FitModel::SaturatingExponential => p[0] - p[1] * (-x / p[2]).exp(),
            FitModel::Sinusoid => p[0] * (p[1] * x + p[2]).cos() + p[3],
            FitModel::DampedSinusoid => {
                p[0] * (-x / p[3]).exp() * (p[1] * x + p[2]).cos() + p[4]
            }
            FitModel::DoubleGaussian => {
                let g = |a: f64, m: f64, s: f64| {
                    let z = (x - m) / s;
                    a * (-0.5 * z * z).exp()
                };
                g(p[0], p[1], p[2]) + g(p[3], p[4], p[5])
            }
            FitModel::Polynomial { .. } => p.iter().rev().fold(0.0, |acc, &a| acc * x + a),
        }
    }

    /// Typical magnitude of each parameter, used for finite-difference steps
    /// and the relative convergence test.
    pub(crate) fn scales(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let xr = span(x).max(f64::MIN_POSITIVE);
        let yr = span(y).max(f64::MIN_POSITIVE);
        let xs = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(xr);
        match *self {
            FitModel::Gaussian { .. } | FitModel::Lorentzian { .. } => {
                vec![yr, xs, 1.0, yr][..self.n_params()].to_vec()
            }
            FitModel::ExponentialDecay { .. } => vec![yr, 1.0, yr][..self.n_params()].to_vec(),
            FitModel::SaturatingExponential => vec![yr, yr, 1.0],
            FitModel::Sinusoid => vec![yr, 1.0 / xr, 1.0, yr],
            FitModel::DampedSinusoid => vec![yr, 1.0 / xr, 1.0, 1.0, yr],
            FitModel::DoubleGaussian => vec![yr, xs, 1.0, yr, xs, 1.0],
            FitModel::Polynomial { order } => (0..=order).map(|k| yr / xs.powi(k as i32)).collect(),
        }
    }

    /// Canonical form after fitting: positive sinusoid amplitude with the phase
    /// wrapped to (−π, π], Gaussian components ordered by centre.
    pub(crate) fn normalize(&self, p: &mut [f64]) {
        match self {
            FitModel::Sinusoid | FitModel::DampedSinusoid => {
                if p[0] < 0.0 {
                    p[0] = -p[0];
                    p[2] += PI;
                }
                p[2] = wrap_phase(p[2]);
            }
            FitModel::DoubleGaussian => {
                if p[1] > p[4] {
                    let (a, b) = p.split_at_mut(3);
                    a.swap_with_slice(b);
                }
            }
            _ => {}
        }
    }

    /// Data-driven starting point. `fixed` values are honoured where they
    /// inform the guess (e.g. a known sinusoid frequency).
    pub(crate) fn initial_guess(&self, x: &[f64], y: &[f64], fixed: &[(usize, f64)]) -> Result<Vec<f64>> {
        let fixed_val = |j: usize| fixed.iter().find(|(i, _)| *i == j).map(|&(_, v)| v);
        let (xs, ys) = sorted_by_x(x, y);
        match *self {
            FitModel::Gaussian { baseline } | FitModel::Lorentzian { baseline } => {
                let c0 = if baseline { edge_level(&ys) } else { 0.0 };
                let (a0, mu0, hw) = peak_guess(&xs, &ys, c0);
                let width = match self {
                    FitModel::Gaussian { .. } => hw / (2.0 * 2f64.ln()).sqrt(),
                    _ => 2.0 * hw,
                };
                let mut p = vec![a0, mu0, width];
                if baseline {
                    p.push(c0);
                }
                Ok(p)
            }
            FitModel::ExponentialDecay { offset } => {
                let c0 = if offset { tail_level(&ys) } else { 0.0 };
                let (a0, tau0) = exp_guess(&xs, &ys, c0);
                let mut p = vec![a0, tau0];
                if offset {
                    p.push(c0);
                }
                Ok(p)
            }
            FitModel::SaturatingExponential => {
                let c0 = tail_level(&ys);
                let neg: Vec<f64> = ys.iter().map(|v| -v).collect();
                let (a0, tau0) = exp_guess(&xs, &neg, -c0);
                Ok(vec![c0, a0, tau0])
            }
            FitModel::Sinusoid => {
                let omega = match fixed_val(1) {
                    Some(w) => w,
                    None => periodogram_peak(&xs, &ys),
                };
                let (a, phi, c) = harmonic_lstsq(&xs, &ys, omega, f64::INFINITY)
                    .ok_or_else(|| Error::DegenerateData("sinusoid basis is singular".into()))?;
                Ok(vec![a, omega, phi, c])
            }
            FitModel::DampedSinusoid => {
                let omega = match fixed_val(1) {
                    Some(w) => w,
                    None => periodogram_peak(&xs, &ys),
                };
                let tau = fixed_val(3).unwrap_or_else(|| envelope_tau(&xs, &ys, omega));
                let (a, phi, c) = harmonic_lstsq(&xs, &ys, omega, tau)
                    .ok_or_else(|| Error::DegenerateData("sinusoid basis is singular".into()))?;
                Ok(vec![a, omega, phi, tau, c])
            }
            FitModel::DoubleGaussian => Ok(two_means_guess(&xs, &ys)),
            FitModel::Polynomial { .. } => Ok(vec![0.0; self.n_params()]),
        }
    }
}

pub(crate) fn wrap_phase(phi: f64) -> f64 {
    let mut p = phi.rem_euclid(2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    }
    p
}

pub(crate) fn span(v: &[f64]) -> f64 {
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    hi - lo
}

fn sorted_by_x(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    (idx.iter().map(|&i| x[i]).collect(), idx.iter().map(|&i| y[i]).collect())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Mean of the outer 10 % of points on both ends.
fn edge_level(ys: &[f64]) -> f64 {
    let k = (ys.len() / 10).max(1);
    let mut e: Vec<f64> = ys[..k].to_vec();
    e.extend_from_slice(&ys[ys.len() - k..]);
    mean(&e)
}

fn tail_level(ys: &[f64]) -> f64 {
    let k = (ys.len() / 10).max(1);
    mean(&ys[ys.len() - k..])
}

/// Amplitude (signed), centroid of the half-maximum region and its half width.
fn peak_guess(xs: &[f64], ys: &[f64], c0: f64) -> (f64, f64, f64) {
    let (imax, _) = ys
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v - c0 > b.1 { (i, v - c0) } else { b });
    let (imin, _) = ys
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |b, (i, &v)| if v - c0 < b.1 { (i, v - c0) } else { b });
    let up = ys[imax] - c0;
    let down = ys[imin] - c0;
    let (ipk, a0) = if up.abs() >= down.abs() { (imax, up) } else { (imin, down) };
    let sign = a0.signum();
    // Contiguous half-maximum region around the extreme point.
    let above = |i: usize| (ys[i] - c0) * sign >= 0.5 * a0.abs();
    let mut lo = ipk;
    while lo > 0 && above(lo - 1) {
        lo -= 1;
    }
    let mut hi = ipk;
    while hi + 1 < ys.len() && above(hi + 1) {
        hi += 1;
    }
    let (mut wsum, mut xsum) = (0.0, 0.0);
    for i in lo..=hi {
        let w = (ys[i] - c0) * sign;
        wsum += w;
        xsum += w * xs[i];
    }
    let mu = if wsum > 0.0 { xsum / wsum } else { xs[ipk] };
    let dx = if xs.len() > 1 { span(xs) / (xs.len() - 1) as f64 } else { 1.0 };
    // Interpolated edges for the half width.
    let half = 0.5 * a0.abs();
    let left = if lo > 0 {
        let (y0, y1) = ((ys[lo - 1] - c0) * sign, (ys[lo] - c0) * sign);
        xs[lo - 1] + (half - y0) / (y1 - y0) * (xs[lo] - xs[lo - 1])
    } else {
        xs[lo] - 0.5 * dx
    };
    let right = if hi + 1 < ys.len() {
        let (y0, y1) = ((ys[hi] - c0) * sign, (ys[hi + 1] - c0) * sign);
        xs[hi] + (y0 - half) / (y0 - y1) * (xs[hi + 1] - xs[hi])
    } else {
        xs[hi] + 0.5 * dx
    };
    let hw = (0.5 * (right - left)).max(0.5 * dx).max(f64::MIN_POSITIVE);
    (a0, mu, hw)
}

/// Two-cluster split of the (non-negative) curve mass: weighted 1-D
/// k-means seeded at the quartiles, then per-cluster height, mean and spread.
fn two_means_guess(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let w: Vec<f64> = ys.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = w.iter().sum();
    let dx = if xs.len() > 1 { span(xs) / (xs.len() - 1) as f64 } else { 1.0 };
    let quantile = |q: f64| {
        let mut acc = 0.0;
        for (x, wi) in xs.iter().zip(&w) {
            acc += wi;
            if acc >= q * total {
                return *x;
            }
        }
        xs[xs.len() - 1]
    };
    let mut c = [quantile(0.25), quantile(0.75)];
    if c[0] == c[1] {
        c[1] = c[0] + dx;
    }
    let mut stats = [(0.0, 0.0, 0.0, 0.0); 2];
    for _ in 0..100 {
        stats = [(0.0, 0.0, 0.0, 0.0); 2];
        for ((&x, &wi), &y) in xs.iter().zip(&w).zip(ys) {
            let k = ((x - c[0]).abs() > (x - c[1]).abs()) as usize;
            let s = &mut stats[k];
            s.0 += wi;
            s.1 += wi * x;
            s.2 += wi * x * x;
            s.3 = f64::max(s.3, y);
        }
        let mut next = c;
        for k in 0..2 {
            if stats[k].0 > 0.0 {
                next[k] = stats[k].1 / stats[k].0;
            }
        }
        if next == c {
            break;
        }
        c = next;
    }
    let mut out = Vec::with_capacity(6);
    for k in 0..2 {
        let (sw, sx, sxx, peak) = stats[k];
        let var = if sw > 0.0 { sxx / sw - (sx / sw).powi(2) } else { 0.0 };
        out.extend([peak.max(f64::MIN_POSITIVE), c[k], var.max(0.0).sqrt().max(0.5 * dx)]);
    }
    out
}

/// Log-linear estimate of amplitude and time constant of c0 + A e^{−x/τ}.
fn exp_guess(xs: &[f64], ys: &[f64], c0: f64) -> (f64, f64) {
    let first = ys[0] - c0;
    let sign = if first == 0.0 { 1.0 } else { first.signum() };
    let floor = 0.05 * first.abs();
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter_map(|(&x, &y)| {
            let v = (y - c0) * sign;
            (v > floor && v > 0.0).then(|| (x, v.ln()))
        })
        .collect();
    let range = span(xs).max(f64::MIN_POSITIVE);
    if pts.len() < 2 {
        return (first, range / 3.0);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let tau = if slope < 0.0 { (-1.0 / slope).min(100.0 * range) } else { range };
    let a = sign * (my - slope * mx).exp();
    (a, tau)
}

/// Linear least squares on columns; returns coefficients and residual sum of squares.
pub(crate) fn linear_lstsq(columns: &[Vec<f64>], y: &[f64]) -> Option<(Vec<f64>, f64)> {
    let m = y.len();
    let n = columns.len();
    let a = DMatrix::from_fn(m, n, |i, j| columns[j][i]);
    let b = DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) || svd.singular_values.min() <= 1e-12 * smax {
        return None;
    }
    let sol = svd.solve(&b, 0.0).ok()?;
    let r = &a * &sol - b;
    Some((sol.iter().copied().collect(), r.norm_squared()))
}

/// Amplitude, phase and offset of A e^{−x/τ} cos(ωx + φ) + c for fixed ω, τ.
fn harmonic_lstsq(xs: &[f64], ys: &[f64], omega: f64, tau: f64) -> Option<(f64, f64, f64)> {
    let env = |x: f64| if tau.is_finite() { (-x / tau).exp() } else { 1.0 };
    let cols = vec![
        xs.iter().map(|&x| env(x) * (omega * x).cos()).collect(),
        xs.iter().map(|&x| env(x) * (omega * x).sin()).collect(),
        vec![1.0; xs.len()],
    ];
    let (c, _) = linear_lstsq(&cols, ys)?;
    // a cos + b sin = A cos(ωx + φ) with A cos φ = a, −A sin φ = b.
    let amp = c[0].hypot(c[1]);
    let phi = (-c[1]).atan2(c[0]);
    Some((amp, phi, c[2]))
}

/// Angular frequency minimising the single-tone least-squares residual.
fn periodogram_peak(xs: &[f64], ys: &[f64]) -> f64 {
    let range = span(xs).max(f64::MIN_POSITIVE);
    let mut gaps: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).filter(|&d| d > 0.0).collect();
    gaps.sort_by(f64::total_cmp);
    let dx = gaps.get(gaps.len() / 2).copied().unwrap_or(range);
    let f_lo = 0.25 / range;
    let f_hi = 0.5 / dx;
    let n = (20 * xs.len()).max(100);
    let mut best = (f64::INFINITY, 2.0 * PI * f_lo);
    for k in 0..n {
        let f = f_lo + (f_hi - f_lo) * k as f64 / (n - 1) as f64;
        let w = 2.0 * PI * f;
        let cols = vec![
            xs.iter().map(|&x| (w * x).cos()).collect(),
            xs.iter().map(|&x| (w * x).sin()).collect(),
            vec![1.0; xs.len()],
        ];
        if let Some((_, rss)) = linear_lstsq(&cols, ys) {
            if rss < best.0 {
                best = (rss, w);
            }
        }
    }
    best.1
}

/// Decay constant from tone amplitudes in the two halves of the record.
fn envelope_tau(xs: &[f64], ys: &[f64], omega: f64) -> f64 {
    let range = span(xs).max(f64::MIN_POSITIVE);
    let mid = xs.len() / 2;
    if mid < 3 {
        return range;
    }
    let a1 = harmonic_lstsq(&xs[..mid], &ys[..mid], omega, f64::INFINITY);
    let a2 = harmonic_lstsq(&xs[mid..], &ys[mid..], omega, f64::INFINITY);
    match (a1, a2) {
        (Some((a1, ..)), Some((a2, ..))) if a1 > a2 && a2 > 0.0 => {
            let dt = mean(&xs[mid..]) - mean(&xs[..mid]);
            (dt / (a1 / a2).ln()).min(100.0 * range)
        }
        _ => 2.0 * range,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_matches_closed_forms() {
        let g = FitModel::Gaussian { baseline: true };
        assert!((g.eval(&[2.0, 1.0, 0.5, 0.1], 1.5) - (2.0 * (-0.5f64).exp() + 0.1)).abs() < 1e-15);
        let l = FitModel::Lorentzian { baseline: false };
        assert!((l.eval(&[1.0, 0.0, 2.0], 1.0) - 0.5).abs() < 1e-15);
        let p = FitModel::Polynomial { order: 2 };
        assert_eq!(p.eval(&[1.0, 2.0, 3.0], 2.0), 17.0);
    }

    #[test]
    fn phase_wrapping() {
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn names_follow_flags() {
        assert_eq!(FitModel::ExponentialDecay { offset: false }.param_names(), ["amplitude", "tau"]);
        assert_eq!(FitModel::Polynomial { order: 1 }.param_names(), ["a0", "a1"]);
    }
}
