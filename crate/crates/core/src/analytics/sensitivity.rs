use serde::{Deserialize, Serialize};

use super::calibration::CalibrationResult;
use super::coherence::{NoiseFit, SpectroPeak};
use crate::error::{Error, Result};
use crate::estimator::{interpolate_poly, PolyFit};

/// |P_e − P_e'| / √(σ² + σ'²).
pub fn snr(pe: f64, pe_other: f64, sigma: f64, sigma_other: f64) -> f64 {
    (pe - pe_other).abs() / (sigma * sigma + sigma_other * sigma_other).sqrt()
}

/// Standard deviation of the mean of `n` samples with spread `sigma`.
pub fn stderr_of_mean(sigma: f64, n: usize) -> f64 {
    sigma / (n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensingConfig {
    /// Duration of one sequence (s).
    pub tau: f64,
    /// Shots per estimate.
    pub shots: usize,
    /// SNR required after one second of averaging.
    pub unit_snr: f64,
}

impl Default for SensingConfig {
    fn default() -> Self {
        Self {
            tau: 32e-6,
            shots: 1000,
            unit_snr: 1.0,
        }
    }
}

impl SensingConfig {
    /// Total budget T = N·τ.
    pub fn budget(&self) -> f64 {
        self.shots as f64 * self.tau
    }

    /// Unit SNR at one second scaled to the budget: unit_snr·√(T / 1 s).
    pub fn threshold(&self) -> f64 {
        self.unit_snr * self.budget().sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || self.shots == 0 || !(self.unit_snr > 0.0) {
            return Err(Error::InvalidArgument("sensing config needs τ > 0, N ≥ 1, SNR > 0".into()));
        }
        Ok(())
    }
}

/// Peak height and width (in magnons) of the qubit response versus magnon number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseInterpolants {
    pub peak: PolyFit,
    pub width: PolyFit,
}

impl ResponseInterpolants {
    pub fn from_peaks(peaks: &[SpectroPeak], calib: &CalibrationResult) -> Result<Self> {
        if peaks.len() < 3 {
            return Err(Error::InvalidArgument("response interpolation needs ≥ 3 magnon numbers".into()));
        }
        let n: Vec<f64> = peaks.iter().map(|p| calib.magnons(p.power)).collect();
        let h: Vec<f64> = peaks.iter().map(|p| p.amplitude).collect();
        let w: Vec<f64> = peaks.iter().map(|p| p.sigma / calib.chi_qm).collect();
        Ok(Self {
            peak: interpolate_poly(&n, &h, 2)?,
            width: interpolate_poly(&n, &w, 2)?,
        })
    }
}

/// P_e(n, n_m) = P^{n_m} exp(−(n − n_m)²/(2Σ_{n_m}²)), with the flag set when
/// n_m lies outside the interpolated hull.
pub fn qubit_response(n: f64, n_m: f64, interp: &ResponseInterpolants) -> (f64, bool) {
    let (p, ex1) = interp.peak.eval(n_m);
    let (s, ex2) = interp.width.eval(n_m);
    let z = (n - n_m) / s;
    (p * (-0.5 * z * z).exp(), ex1 || ex2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NoiseModel {
    /// σ_Pe(offset) = baseline + peak·exp(−offset²/(2w(n_m)²)), peak and
    /// baseline averaged over magnon numbers, width (magnons) linear in n_m.
    Empirical { peak: f64, baseline: f64, width: PolyFit },
    /// Binomial shot noise √(P(1−P)/N) of the interpolated line on top of
    /// the mean fitted line baseline. Used when the measured standard error
    /// is not single-peaked, which happens once P_e crosses 1/2 on the line.
    Binomial { signal_baseline: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseProfile {
    pub model: NoiseModel,
    /// Shots behind the measured standard errors.
    pub shots: usize,
}

impl NoiseProfile {
    /// Empirical profile from per-line Gaussian fits of the standard error.
    /// Rejects fits with a non-positive peak, width or baseline.
    pub fn from_fits(fits: &[NoiseFit], calib: &CalibrationResult) -> Result<Self> {
        if fits.len() < 2 {
            return Err(Error::InvalidArgument("noise profile needs ≥ 2 magnon numbers".into()));
        }
        if let Some(f) = fits.iter().find(|f| !(f.peak > 0.0 && f.width > 0.0 && f.baseline > 0.0)) {
            return Err(Error::DegenerateData(format!(
                "standard error at P = {:e} W is not a single positive peak (peak {:e}, width {:e}, baseline {:e})",
                f.power, f.peak, f.width, f.baseline
            )));
        }
        let k = fits.len() as f64;
        let n: Vec<f64> = fits.iter().map(|f| calib.magnons(f.power)).collect();
        let w: Vec<f64> = fits.iter().map(|f| f.width / calib.chi_qm).collect();
        Ok(Self {
            model: NoiseModel::Empirical {
                peak: fits.iter().map(|f| f.peak).sum::<f64>() / k,
                baseline: fits.iter().map(|f| f.baseline).sum::<f64>() / k,
                width: interpolate_poly(&n, &w, 1)?,
            },
            shots: fits[0].shots,
        })
    }

    pub fn binomial(peaks: &[SpectroPeak], shots: usize) -> Result<Self> {
        if peaks.is_empty() || shots == 0 {
            return Err(Error::InvalidArgument("binomial noise needs fitted lines and shots ≥ 1".into()));
        }
        let b = peaks.iter().map(|p| p.baseline).sum::<f64>() / peaks.len() as f64;
        Ok(Self {
            model: NoiseModel::Binomial { signal_baseline: b },
            shots,
        })
    }

    /// σ of an estimate made with `shots` shots, probing `offset` magnons from
    /// the line centre of a state holding `n_m` magnons.
    pub fn sigma(&self, n_m: f64, offset: f64, shots: usize, interp: &ResponseInterpolants) -> f64 {
        let per_estimate = match &self.model {
            NoiseModel::Empirical { peak, baseline, width } => {
                let w = width.value(n_m);
                baseline + peak * (-0.5 * (offset / w).powi(2)).exp()
            }
            NoiseModel::Binomial { signal_baseline } => {
                // Line of the state n_m probed `offset` magnons from its centre.
                let pr = (signal_baseline + qubit_response(n_m - offset, n_m, interp).0).clamp(0.0, 1.0);
                return (pr * (1.0 - pr) / shots as f64).sqrt();
            }
        };
        per_estimate * (self.shots as f64 / shots as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityCurve {
    pub n_m: Vec<f64>,
    /// Magnons/√Hz; NaN where unresolved.
    pub s: Vec<f64>,
    pub resolved: Vec<bool>,
    pub extrapolated: Vec<bool>,
    pub interpolants: ResponseInterpolants,
    pub noise: NoiseProfile,
    pub threshold: f64,
    pub budget: f64,
}

/// SNR between states n_m and n_m + S, probing at the line centre of n_m.
pub fn pair_snr(n_m: f64, s: f64, interp: &ResponseInterpolants, noise: &NoiseProfile, shots: usize) -> (f64, bool) {
    let (p0, e0) = qubit_response(n_m, n_m, interp);
    let (p1, e1) = qubit_response(n_m, n_m + s, interp);
    let v = snr(p0, p1, noise.sigma(n_m, 0.0, shots, interp), noise.sigma(n_m + s, s, shots, interp));
    (v, e0 || e1)
}

/// Smallest S with SNR(n_m, n_m + S) at the threshold: geometric bracketing
/// from S = 10⁻³ then bisection to 10⁻³ magnons. `None` when no bracket is
/// found below `s_max`.
pub fn solve_sensitivity(
    n_m: f64,
    interp: &ResponseInterpolants,
    noise: &NoiseProfile,
    config: &SensingConfig,
    s_max: f64,
) -> Option<(f64, bool)> {
    let thr = config.threshold();
    let f = |s: f64| pair_snr(n_m, s, interp, noise, config.shots);
    let mut lo = 0.0;
    let mut hi = 1e-3;
    loop {
        let (v, _) = f(hi);
        if !v.is_finite() {
            return None;
        }
        if v >= thr {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > s_max {
            return None;
        }
    }
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if f(mid).0 >= thr {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    Some((s, f(s).1))
}

/// S(n_m) on `grid` from fitted lines, the noise profile and the calibration.
pub fn sensitivity_curve(
    peaks: &[SpectroPeak],
    noise: &NoiseProfile,
    calib: &CalibrationResult,
    config: &SensingConfig,
    grid: &[f64],
) -> Result<SensitivityCurve> {
    config.validate()?;
    let interpolants = ResponseInterpolants::from_peaks(peaks, calib)?;
    let span = interpolants.peak.x_max - interpolants.peak.x_min;
    let s_max = span.max(1.0);
    let mut s = Vec::with_capacity(grid.len());
    let mut resolved = Vec::with_capacity(grid.len());
    let mut extrapolated = Vec::with_capacity(grid.len());
    for &n in grid {
        match solve_sensitivity(n, &interpolants, noise, config, s_max) {
            Some((v, ex)) => {
                s.push(v);
                resolved.push(true);
                extrapolated.push(ex);
            }
            None => {
                s.push(f64::NAN);
                resolved.push(false);
                extrapolated.push(interpolants.peak.eval(n).1);
            }
        }
    }
    Ok(SensitivityCurve {
        n_m: grid.to_vec(),
        s,
        resolved,
        extrapolated,
        interpolants,
        noise: noise.clone(),
        threshold: config.threshold(),
        budget: config.budget(),
    })
}
