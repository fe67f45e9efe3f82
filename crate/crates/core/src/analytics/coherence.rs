use crate::dataset::SweepDataset;
use crate::error::{Error, Result};
use crate::estimator::{fit_curve, FitModel, FitOptions, FitResult};
use crate::units::hz_to_rad;

use super::parametric::floor_errors;

/// Gaussian line fitted to one pump setting of a spectroscopy sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectroPeak {
    pub power: f64,
    /// Line centre measured from ω_q (rad/s).
    pub center: f64,
    pub center_err: f64,
    /// Gaussian σ of the line (rad/s).
    pub sigma: f64,
    pub amplitude: f64,
    pub baseline: f64,
    pub fit: FitResult,
}

/// Gaussian fit of the per-point standard error across the probe axis.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseFit {
    pub power: f64,
    pub peak: f64,
    /// rad/s
    pub width: f64,
    pub baseline: f64,
    pub shots: usize,
}

fn spectro_axes(ds: &SweepDataset) -> Result<()> {
    if ds.axes.len() != 2 || ds.axes[1].name != "probe_detuning" {
        return Err(Error::Schema("expected a <sweep> × probe_detuning dataset".into()));
    }
    Ok(())
}

/// Gaussian-with-baseline fit to every line of a spectroscopy dataset.
pub fn fit_spectroscopy(ds: &SweepDataset) -> Result<Vec<SpectroPeak>> {
    spectro_axes(ds)?;
    let x: Vec<f64> = ds.axes[1].values.iter().map(|&f| hz_to_rad(f)).collect();
    let mut out = Vec::new();
    for (i, &power) in ds.axes[0].values.iter().enumerate() {
        let pts = ds.last_axis_slice(&[i]);
        let y: Vec<f64> = pts.iter().map(|p| p.p_e).collect();
        let fit = fit_curve(
            FitModel::Gaussian { baseline: true },
            &x,
            &y,
            &FitOptions::weighted(floor_errors(pts)),
        )?;
        if !fit.converged {
            return Err(Error::DegenerateData(format!("line fit at sweep value {power:e} did not converge")));
        }
        out.push(SpectroPeak {
            power,
            center: fit.params[1],
            center_err: fit.std_error(1),
            sigma: fit.params[2],
            amplitude: fit.params[0],
            baseline: fit.params[3],
            fit,
        });
    }
    Ok(out)
}

/// Per-line Gaussian description of the standard error versus probe frequency.
pub fn fit_noise(ds: &SweepDataset) -> Result<Vec<NoiseFit>> {
    spectro_axes(ds)?;
    let x: Vec<f64> = ds.axes[1].values.iter().map(|&f| hz_to_rad(f)).collect();
    let mut out = Vec::new();
    for (i, &power) in ds.axes[0].values.iter().enumerate() {
        let pts = ds.last_axis_slice(&[i]);
        let y: Vec<f64> = pts.iter().map(|p| p.stderr).collect();
        let fit = fit_curve(FitModel::Gaussian { baseline: true }, &x, &y, &FitOptions::default())?;
        out.push(NoiseFit {
            power,
            peak: fit.params[0],
            width: fit.params[2],
            baseline: fit.params[3],
            shots: pts[0].n_shots,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RamseyFit {
    /// Envelope decay rate 1/τ (rad/s).
    pub envelope_rate: f64,
    pub envelope_rate_err: f64,
    /// Fringe angular frequency.
    pub fringe_frequency: f64,
    pub fringe_frequency_err: f64,
    pub fit: FitResult,
}

/// Damped-sinusoid fit of a Ramsey dataset. `expected_fringe`, when given,
/// seeds the frequency search (rad/s).
pub fn fit_ramsey(ds: &SweepDataset, expected_fringe: Option<f64>) -> Result<RamseyFit> {
    let axis = ds.axis("delay")?;
    let y: Vec<f64> = ds.points.iter().map(|p| p.p_e).collect();
    let mut opts = FitOptions::weighted(floor_errors(&ds.points));
    if let Some(w) = expected_fringe {
        // Fit once at the expected frequency, then release it.
        let seed = fit_curve(FitModel::DampedSinusoid, &axis.values, &y, &opts.clone().fix(1, w.abs()))?;
        opts = opts.with_init(seed.params);
    }
    let fit = fit_curve(FitModel::DampedSinusoid, &axis.values, &y, &opts)?;
    if !fit.converged {
        return Err(Error::DegenerateData("Ramsey fit did not converge".into()));
    }
    let tau = fit.params[3];
    Ok(RamseyFit {
        envelope_rate: 1.0 / tau,
        envelope_rate_err: fit.std_error(3) / (tau * tau),
        fringe_frequency: fit.params[1].abs(),
        fringe_frequency_err: fit.std_error(1),
        fit,
    })
}

/// T1 ± error from an exponential-with-offset fit of a relaxation dataset.
pub fn fit_relaxation(ds: &SweepDataset) -> Result<(f64, f64, FitResult)> {
    let axis = ds.axis("delay")?;
    let y: Vec<f64> = ds.points.iter().map(|p| p.p_e).collect();
    let fit = fit_curve(
        FitModel::ExponentialDecay { offset: true },
        &axis.values,
        &y,
        &FitOptions::weighted(floor_errors(&ds.points)),
    )?;
    Ok((fit.params[1], fit.std_error(1), fit))
}
