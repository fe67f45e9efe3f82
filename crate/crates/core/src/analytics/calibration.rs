use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{fit_curve, FitModel, FitOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RootChoice {
    SmallChi,
    LargeChi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    /// |χ_qm| (rad/s).
    pub chi_qm: f64,
    /// Magnons per watt.
    pub c_pump: f64,
    pub gamma2_0: f64,
    /// Stark slope s₁ = |dω_q/dP| (rad/s per W).
    pub stark_slope: f64,
    /// Dephasing slope s₂ = dΓ_q/dP (rad/s per W).
    pub dephasing_slope: f64,
    pub ratio: f64,
    pub root: RootChoice,
    /// ρ = 1: both roots coincide at χ = κ_m.
    pub degenerate: bool,
}

impl CalibrationResult {
    pub fn magnons(&self, power: f64) -> f64 {
        self.c_pump * power
    }
}

/// Inverts ρ = s₂/s₁ = 2κχ/(κ² + χ²) for χ and sets c_pump = s₁/χ.
///
/// The roots are χ± = κ(1 ± √(1−ρ²))/ρ with χ₊χ₋ = κ²; the small root is
/// evaluated as κρ/(1 + √(1−ρ²)) to avoid cancellation.
pub fn calibrate_magnon_number(
    stark_slope: f64,
    dephasing_slope: f64,
    kappa_m: f64,
    gamma2_0: f64,
    root: RootChoice,
) -> Result<CalibrationResult> {
    if !(stark_slope > 0.0) || !(dephasing_slope > 0.0) || !(kappa_m > 0.0) {
        return Err(Error::InvalidArgument(
            "calibration needs positive slopes and κ_m".into(),
        ));
    }
    let ratio = dephasing_slope / stark_slope;
    let degenerate = (ratio - 1.0).abs() <= 1e-12;
    if ratio > 1.0 && !degenerate {
        return Err(Error::NoRealRoot { ratio });
    }
    let disc = if degenerate { 0.0 } else { (1.0 - ratio * ratio).sqrt() };
    let chi = match root {
        RootChoice::SmallChi => kappa_m * ratio / (1.0 + disc),
        RootChoice::LargeChi => kappa_m * (1.0 + disc) / ratio,
    };
    Ok(CalibrationResult {
        chi_qm: chi,
        c_pump: stark_slope / chi,
        gamma2_0,
        stark_slope,
        dephasing_slope,
        ratio,
        root,
        degenerate,
    })
}

/// Straight-line fit y = a + s·x; returns (slope, slope standard error, intercept).
pub fn linear_slope(x: &[f64], y: &[f64], y_err: Option<&[f64]>) -> Result<(f64, f64, f64)> {
    let opts = FitOptions {
        y_err: y_err.map(<[f64]>::to_vec),
        ..FitOptions::default()
    };
    let fit = fit_curve(FitModel::Polynomial { order: 1 }, x, y, &opts)?;
    Ok((fit.params[1], fit.std_error(1), fit.params[0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{khz, mhz};

    fn forward(chi: f64, kappa: f64, c: f64) -> (f64, f64) {
        (c * chi, 2.0 * c * kappa * chi * chi / (kappa * kappa + chi * chi))
    }

    #[test]
    fn noiseless_round_trip() {
        let (chi, kappa, c) = (khz(67.0), mhz(4.81), 1.3e13);
        let (s1, s2) = forward(chi, kappa, c);
        let r = calibrate_magnon_number(s1, s2, kappa, 0.0, RootChoice::SmallChi).unwrap();
        assert!((r.ratio - 0.027853).abs() < 1e-6);
        assert!((r.chi_qm / chi - 1.0).abs() < 1e-9);
        assert!((r.c_pump / c - 1.0).abs() < 1e-9);
        let big = calibrate_magnon_number(s1, s2, kappa, 0.0, RootChoice::LargeChi).unwrap();
        assert!((big.chi_qm * r.chi_qm / (kappa * kappa) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn small_ratio_limit_and_errors() {
        let kappa = 1.0;
        for rho in [1e-4, 1e-3, 1e-2] {
            let r = calibrate_magnon_number(1.0, rho, kappa, 0.0, RootChoice::SmallChi).unwrap();
            assert!((r.chi_qm / (kappa * rho / 2.0) - 1.0).abs() < 0.01);
        }
        assert!(matches!(
            calibrate_magnon_number(1.0, 1.5, kappa, 0.0, RootChoice::SmallChi),
            Err(Error::NoRealRoot { .. })
        ));
        let d = calibrate_magnon_number(1.0, 1.0, kappa, 0.0, RootChoice::SmallChi).unwrap();
        assert!(d.degenerate && (d.chi_qm - kappa).abs() < 1e-12);
    }
}
