use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::parametric::floor_errors;
use crate::dataset::SweepDataset;
use crate::error::{Error, Result};
use crate::estimator::{fit_curve, FitModel, FitOptions, FitResult};
use crate::units::hz_to_rad;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LifetimeMethod {
    Phase,
    Frequency,
    Parametric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LifetimeEstimate {
    pub method: LifetimeMethod,
    /// Magnon lifetime 1/κ_m (s).
    pub tau: f64,
    pub tau_err: f64,
    pub fit: FitResult,
    /// Sense times with the extracted phase (rad) or frequency shift (rad/s).
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub flags: Vec<String>,
}

fn sense_axes(ds: &SweepDataset, second: &str) -> Result<()> {
    if ds.axes.len() != 2 || ds.axes[0].name != "sense_time" || ds.axes[1].name != second {
        return Err(Error::Schema(format!("expected sense_time × {second} axes")));
    }
    if ds.axes[0].values.len() < 6 {
        return Err(Error::InvalidArgument("need at least 6 sense times".into()));
    }
    Ok(())
}

/// Continuous phase series: each step is moved by a multiple of 2π so that
/// adjacent differences lie in (−π, π]. Returns the indices where that choice
/// is ambiguous given the per-point uncertainties.
pub fn unwrap_phases(raw: &[f64], err: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut out = Vec::with_capacity(raw.len());
    let mut ambiguous = Vec::new();
    for (i, &p) in raw.iter().enumerate() {
        if i == 0 {
            out.push(p);
            continue;
        }
        let prev = out[i - 1];
        let k = ((prev - p) / (2.0 * PI)).round();
        let v = p + 2.0 * PI * k;
        let margin = 2.0 * (err[i].powi(2) + err[i - 1].powi(2)).sqrt();
        if (v - prev).abs() + margin > PI {
            ambiguous.push(i);
        }
        out.push(v);
    }
    (out, ambiguous)
}

/// Sinusoid fit across the swept second-pulse phase at every sense time,
/// unwrapped, then a saturating exponential φ(t) = φ_∞ − A e^{−t/τ}.
pub fn lifetime_from_phase(ds: &SweepDataset) -> Result<LifetimeEstimate> {
    sense_axes(ds, "phase")?;
    let theta = &ds.axes[1].values;
    let times = ds.axes[0].values.clone();
    let mut raw = Vec::with_capacity(times.len());
    let mut errs = Vec::with_capacity(times.len());
    for i in 0..times.len() {
        let pts = ds.last_axis_slice(&[i]);
        let y: Vec<f64> = pts.iter().map(|p| p.p_e).collect();
        let fit = fit_curve(FitModel::Sinusoid, theta, &y, &FitOptions::weighted(floor_errors(pts)).fix(1, 1.0))?;
        if !fit.converged {
            return Err(Error::DegenerateData(format!("fringe fit at sense time {:e} s did not converge", times[i])));
        }
        // Data follow ½(1 + C cos(θ − φ)); the fit reports A cos(θ + p).
        raw.push(-fit.params[2]);
        errs.push(fit.std_error(2));
    }
    let (phase, ambiguous) = unwrap_phases(&raw, &errs);
    let mut flags: Vec<String> = ambiguous
        .iter()
        .map(|&i| format!("phase unwrap ambiguous between sense times {} and {}", i - 1, i))
        .collect();
    let fit = fit_curve(FitModel::SaturatingExponential, &times, &phase, &FitOptions::weighted(errs.clone()))?;
    if !fit.converged {
        flags.push("phase-decay fit did not converge".into());
    }
    Ok(LifetimeEstimate {
        method: LifetimeMethod::Phase,
        tau: fit.params[2],
        tau_err: fit.std_error(2),
        fit,
        times,
        values: phase,
        errors: errs,
        flags,
    })
}

/// Gaussian line centre at every sense time, then Δf(t) = Δf₀ e^{−t/τ}.
pub fn lifetime_from_frequency(ds: &SweepDataset) -> Result<LifetimeEstimate> {
    sense_axes(ds, "probe_detuning")?;
    let x: Vec<f64> = ds.axes[1].values.iter().map(|&f| hz_to_rad(f)).collect();
    let times = ds.axes[0].values.clone();
    let mut centers = Vec::with_capacity(times.len());
    let mut errs = Vec::with_capacity(times.len());
    for i in 0..times.len() {
        let pts = ds.last_axis_slice(&[i]);
        let y: Vec<f64> = pts.iter().map(|p| p.p_e).collect();
        let fit = fit_curve(FitModel::Gaussian { baseline: true }, &x, &y, &FitOptions::weighted(floor_errors(pts)))?;
        if !fit.converged {
            return Err(Error::DegenerateData(format!("line fit at sense time {:e} s did not converge", times[i])));
        }
        centers.push(fit.params[1]);
        errs.push(fit.std_error(1));
    }
    let mut sorted = errs.clone();
    sorted.sort_by(f64::total_cmp);
    let typical = sorted[sorted.len() / 2];
    let excursion = centers.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if excursion <= 3.0 * typical {
        return Err(Error::DegenerateData(
            "no significant frequency excursion: line centre is flat in time".into(),
        ));
    }
    let fit = fit_curve(
        FitModel::ExponentialDecay { offset: false },
        &times,
        &centers,
        &FitOptions::weighted(errs.clone()),
    )?;
    let mut flags = Vec::new();
    if !fit.converged {
        flags.push("frequency-decay fit did not converge".into());
    }
    Ok(LifetimeEstimate {
        method: LifetimeMethod::Frequency,
        tau: fit.params[1],
        tau_err: fit.std_error(1),
        fit,
        times,
        values: centers,
        errors: errs,
        flags,
    })
}
