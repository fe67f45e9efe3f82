use serde::{Deserialize, Serialize};

use crate::dataset::SweepDataset;
use crate::error::{Error, Result};
use crate::estimator::{fit_curve, FitModel, FitOptions, FitResult};
use crate::units::hz_to_rad;
use crate::C64;

/// Qubit amplitude dynamics under parametric conversion to a lossy magnon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParametricDecay {
    pub delta: f64,
    pub omega_qm: f64,
    pub kappa_m: f64,
}

impl ParametricDecay {
    /// γ = κ_m + 2iδ.
    pub fn gamma(&self) -> C64 {
        C64::new(self.kappa_m, 2.0 * self.delta)
    }

    /// β = √(γ² − 4Ω_qm²) (principal branch; q(t) is even in β).
    pub fn beta(&self) -> C64 {
        let g = self.gamma();
        (g * g - C64::new(4.0 * self.omega_qm * self.omega_qm, 0.0)).sqrt()
    }

    /// Weak-coupling Lorentzian decay rate Ω²κ/(κ² + 4δ²).
    pub fn rate(&self) -> f64 {
        let k = self.kappa_m;
        self.omega_qm * self.omega_qm * k / (k * k + 4.0 * self.delta * self.delta)
    }

    /// q(t)/q(0) = e^{−γt/4}(β cosh(βt/4) + γ sinh(βt/4))/β, evaluated as
    /// e^{−γt/4}(cosh x + (γt/4)·sinh(x)/x) with x = βt/4, which stays
    /// finite at β = 0 where it reduces to e^{−γt/4}(1 + γt/4).
    pub fn q_ratio(&self, t: f64) -> C64 {
        let g = self.gamma();
        let x = self.beta() * (t / 4.0);
        let sinhc = if x.norm() < 1e-4 {
            C64::new(1.0, 0.0) + x * x / 6.0
        } else {
            x.sinh() / x
        };
        (-g * (t / 4.0)).exp() * (x.cosh() + g * (t / 4.0) * sinhc)
    }

    /// Excited population relative to its initial value, |q(t)/q(0)|².
    pub fn population_ratio(&self, t: f64) -> f64 {
        self.q_ratio(t).norm_sqr()
    }
}

pub fn parametric_qubit_decay(delta: f64, omega_qm: f64, kappa_m: f64) -> Result<ParametricDecay> {
    if !(kappa_m > 0.0) || !delta.is_finite() || !(omega_qm >= 0.0) {
        return Err(Error::InvalidArgument("need κ_m > 0, Ω_qm ≥ 0 and finite δ".into()));
    }
    Ok(ParametricDecay {
        delta,
        omega_qm,
        kappa_m,
    })
}

/// Lorentzian analysis of one pump strength of a parametric decay scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanExtraction {
    /// Pump setting from the dataset axis (Hz).
    pub omega_axis: f64,
    pub kappa_m: f64,
    pub kappa_m_err: f64,
    pub omega_qm: f64,
    pub omega_qm_err: f64,
    /// Induced peak rate Ω²/κ_m (rad/s).
    pub peak_rate: f64,
    pub peak_rate_err: f64,
    pub center: f64,
    /// Intrinsic-rate offset (rad/s).
    pub offset: f64,
    /// Detunings (rad/s), fitted decay rates and their errors.
    pub deltas: Vec<f64>,
    pub rates: Vec<f64>,
    pub rate_errs: Vec<f64>,
    pub fit: FitResult,
    pub low_confidence: bool,
    pub flags: Vec<String>,
}

/// Decay rate 1/T from an exponential fit with offset.
fn decay_rate(t: &[f64], p: &[f64], err: &[f64]) -> Result<(f64, f64)> {
    let fit = fit_curve(FitModel::ExponentialDecay { offset: true }, t, p, &FitOptions::weighted(err.to_vec()))?;
    if !fit.converged {
        return Err(Error::DegenerateData("decay fit did not converge".into()));
    }
    let tau = fit.params[1];
    Ok((1.0 / tau, fit.std_error(1) / (tau * tau)))
}

pub(crate) fn floor_errors(points: &[crate::dataset::PointRecord]) -> Vec<f64> {
    points
        .iter()
        .map(|p| p.stderr.max(1.0 / p.n_shots as f64))
        .collect()
}

/// Fits a Lorentzian plus intrinsic offset to the decay rate versus δ for
/// every pump strength in a `run_parametric_decay_scan` dataset. The FWHM
/// gives κ_m and the peak Ω²/κ_m gives Ω_qm.
pub fn extract_kappa_m_from_scan(ds: &SweepDataset) -> Result<Vec<ScanExtraction>> {
    if ds.axes.len() != 3 || ds.axes[0].name != "omega_qm" || ds.axes[1].name != "delta" || ds.axes[2].name != "duration" {
        return Err(Error::Schema("expected axes omega_qm × delta × duration".into()));
    }
    let deltas: Vec<f64> = ds.axes[1].values.iter().map(|&d| hz_to_rad(d)).collect();
    if deltas.len() < 7 {
        return Err(Error::InvalidArgument("need at least 7 detuning points".into()));
    }
    let t = &ds.axes[2].values;
    let mut out = Vec::new();
    for (io, &omega_axis) in ds.axes[0].values.iter().enumerate() {
        let mut rates = Vec::with_capacity(deltas.len());
        let mut errs = Vec::with_capacity(deltas.len());
        for id in 0..deltas.len() {
            let pts = ds.last_axis_slice(&[io, id]);
            let p: Vec<f64> = pts.iter().map(|r| r.p_e).collect();
            let (r, e) = decay_rate(t, &p, &floor_errors(pts))?;
            rates.push(r);
            errs.push(e);
        }
        let model = FitModel::Lorentzian { baseline: true };
        let lo = rates.iter().cloned().fold(f64::INFINITY, f64::min);
        let init = {
            let (imax, &hi) = rates
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .expect("non-empty");
            let span = deltas[deltas.len() - 1] - deltas[0];
            vec![(hi - lo).max(1e-9 * hi.abs().max(1.0)), deltas[imax], 0.3 * span, lo]
        };
        let mut fit = fit_curve(model, &deltas, &rates, &FitOptions::weighted(errs.clone()))?;
        if !fit.converged {
            fit = fit_curve(model, &deltas, &rates, &FitOptions::weighted(errs.clone()).with_init(init))?;
        }
        let (a, f) = (fit.params[0], fit.params[2]);
        let (va, vf, caf) = (fit.covariance[(0, 0)], fit.covariance[(2, 2)], fit.covariance[(0, 2)]);
        let omega = (a.max(0.0) * f).sqrt();
        // δΩ from Ω = √(A F): ∂Ω/∂A = F/(2Ω), ∂Ω/∂F = A/(2Ω).
        let omega_err = if omega > 0.0 {
            let (da, df) = (f / (2.0 * omega), a / (2.0 * omega));
            (da * da * va + df * df * vf + 2.0 * da * df * caf).max(0.0).sqrt()
        } else {
            f64::NAN
        };
        let span = deltas[deltas.len() - 1] - deltas[0];
        let step = span / (deltas.len() - 1) as f64;
        let mut flags = Vec::new();
        if !fit.converged {
            flags.push("Lorentzian fit did not converge".to_string());
        }
        if span <= f {
            flags.push(format!("detuning span {span:e} rad/s does not exceed the fitted FWHM {f:e} rad/s"));
        }
        if f < 2.0 * step {
            flags.push(format!("fitted FWHM {f:e} rad/s is below two detuning steps; line unresolved"));
        }
        if !(fit.std_error(2) <= 0.5 * f) {
            flags.push(format!("FWHM {f:e} ± {:e} rad/s is not determined", fit.std_error(2)));
        }
        if !(a > 3.0 * fit.std_error(0)) {
            flags.push(format!("induced rate {a:e} ± {:e} rad/s is not significant", fit.std_error(0)));
        }
        let low_confidence = !flags.is_empty();
        out.push(ScanExtraction {
            omega_axis,
            kappa_m: f,
            kappa_m_err: fit.std_error(2),
            omega_qm: omega,
            omega_qm_err: omega_err,
            peak_rate: a,
            peak_rate_err: fit.std_error(0),
            center: fit.params[1],
            offset: fit.params[3],
            deltas: deltas.clone(),
            rates,
            rate_errs: errs,
            fit,
            low_confidence,
            flags,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::mhz;

    #[test]
    fn resonant_rate_and_half_width() {
        let (o, k) = (mhz(0.66), mhz(4.81));
        let d0 = parametric_qubit_decay(0.0, o, k).unwrap();
        assert!((d0.rate() - o * o / k).abs() < 1e-9 * d0.rate());
        assert!((1.0 / d0.rate() * 1e6 - 1.757).abs() < 1e-3);
        for s in [-1.0, 1.0] {
            let d = parametric_qubit_decay(s * k / 2.0, o, k).unwrap();
            assert!((d.rate() - 0.5 * d0.rate()).abs() < 1e-12 * d0.rate());
        }
    }

    #[test]
    fn exact_envelope_tracks_weak_coupling_decay() {
        let d = parametric_qubit_decay(0.0, mhz(0.66), mhz(4.81)).unwrap();
        let k = d.rate();
        let mut worst: f64 = 0.0;
        for i in 0..=300 {
            let t = 3.0 / k * i as f64 / 300.0;
            let approx = (-k * t / 2.0).exp();
            worst = worst.max((d.q_ratio(t).norm() - approx).abs() / approx);
        }
        assert!(worst < 0.03, "{worst}");
    }

    #[test]
    fn degenerate_point_matches_neighbourhood() {
        // β = 0 when δ = 0 and κ_m = 2Ω.
        let k = mhz(2.0);
        let at = parametric_qubit_decay(0.0, k / 2.0, k).unwrap();
        assert!(at.beta().norm() < 1e-6 * k);
        let near = parametric_qubit_decay(0.0, k / 2.0 * (1.0 + 1e-7), k).unwrap();
        for t in [0.0, 1e-7, 1e-6, 5e-6] {
            let a = at.q_ratio(t);
            let limit = (-C64::new(k, 0.0) * (t / 4.0)).exp() * (1.0 + k * t / 4.0);
            assert!((a - limit).norm() < 1e-12);
            assert!((a - near.q_ratio(t)).norm() < 1e-6);
        }
        assert_eq!(at.q_ratio(0.0), C64::new(1.0, 0.0));
    }
}
