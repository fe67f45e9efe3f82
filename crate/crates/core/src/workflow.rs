//! End-to-end pipelines composed from protocols and analyses.

use crate::analytics::{
    calibrate_magnon_number, fit_noise, fit_ramsey, fit_spectroscopy, linear_slope, sensitivity_curve,
    CalibrationResult, NoiseProfile, RamseyFit, RootChoice, SensingConfig, SensitivityCurve, SpectroPeak,
    dephasing_rate,
};
use crate::dataset::SweepDataset;
use crate::error::{Error, Result};
use crate::protocol::{run_qubit_spectroscopy, run_ramsey, LabConfig};
use crate::system::{PumpSpec, SystemParams};

/// Delay grid covering three envelope decay times of a Ramsey measurement at
/// `nbar` magnons.
pub fn ramsey_delays(params: &SystemParams, nbar: f64, points: usize) -> Vec<f64> {
    let rate = dephasing_rate(nbar, params) + 0.5 * params.gamma1();
    let span = 3.0 / rate.max(1e3);
    (0..points).map(|k| span * k as f64 / (points - 1) as f64).collect()
}

#[derive(Debug, Clone)]
pub struct CalibrationRun {
    pub spectroscopy: SweepDataset,
    pub ramsey: Vec<SweepDataset>,
    pub peaks: Vec<SpectroPeak>,
    pub ramsey_fits: Vec<(f64, RamseyFit)>,
    pub calibration: CalibrationResult,
}

/// Stark slope from Ramsey fringe frequencies and dephasing slope from
/// Ramsey envelope rates, both versus pump power, then the two-unknown
/// inversion for χ_qm and c_pump.
pub fn calibrate_from_ramsey(
    fits: &[(f64, RamseyFit)],
    kappa_m: f64,
    gamma2_0: f64,
    root: RootChoice,
) -> Result<CalibrationResult> {
    if fits.len() < 2 {
        return Err(Error::InvalidArgument("calibration needs at least two pump powers".into()));
    }
    let p: Vec<f64> = fits.iter().map(|f| f.0).collect();
    let w: Vec<f64> = fits.iter().map(|f| f.1.fringe_frequency).collect();
    let we: Vec<f64> = fits.iter().map(|f| f.1.fringe_frequency_err.max(1e-12 * f.1.fringe_frequency)).collect();
    let g: Vec<f64> = fits.iter().map(|f| f.1.envelope_rate).collect();
    let ge: Vec<f64> = fits.iter().map(|f| f.1.envelope_rate_err.max(1e-12 * f.1.envelope_rate)).collect();
    let (s1, _, _) = linear_slope(&p, &w, Some(&we))?;
    let (s2, _, _) = linear_slope(&p, &g, Some(&ge))?;
    calibrate_magnon_number(s1.abs(), s2, kappa_m, gamma2_0, root)
}

/// Simulated spectroscopy over `powers` plus one Ramsey trace per entry of
/// `ramsey_powers`.
pub fn simulate_calibration(
    params: &SystemParams,
    c_pump: f64,
    powers: &[f64],
    probe_freqs: &[f64],
    ramsey_powers: &[f64],
    ramsey_points: usize,
    lab: &LabConfig,
) -> Result<(SweepDataset, Vec<SweepDataset>)> {
    let spectroscopy = run_qubit_spectroscopy(params, powers, probe_freqs, c_pump, lab)?;
    let mut ramsey = Vec::new();
    for (k, &p) in ramsey_powers.iter().enumerate() {
        let pump = PumpSpec::magnon_drive(p, c_pump);
        let delays = ramsey_delays(params, pump.magnon_number(), ramsey_points);
        let cfg = LabConfig {
            seed: crate::seed::derive_stream_seed(lab.seed, 1, k as u64),
            ..lab.clone()
        };
        ramsey.push(run_ramsey(params, &pump, &delays, &cfg)?);
    }
    Ok((spectroscopy, ramsey))
}

/// Line fits, Ramsey fits and calibration from measured datasets. Ramsey
/// fringe searches are seeded from a linear fit of the spectroscopy line
/// centres versus power.
pub fn analyze_calibration(
    spectroscopy: &SweepDataset,
    ramsey: &[SweepDataset],
    ramsey_powers: &[f64],
    ramsey_detuning: f64,
    kappa_m: f64,
    gamma2_0: f64,
    root: RootChoice,
) -> Result<(Vec<SpectroPeak>, Vec<(f64, RamseyFit)>, CalibrationResult)> {
    if ramsey.len() != ramsey_powers.len() {
        return Err(Error::InvalidArgument("one pump power per Ramsey dataset".into()));
    }
    let peaks = fit_spectroscopy(spectroscopy)?;
    let powers: Vec<f64> = peaks.iter().map(|p| p.power).collect();
    let centers: Vec<f64> = peaks.iter().map(|p| p.center).collect();
    let (shift_slope, _, shift0) = linear_slope(&powers, &centers, None)?;
    let mut fits = Vec::with_capacity(ramsey.len());
    for (ds, &p) in ramsey.iter().zip(ramsey_powers) {
        let expected = (shift0 + shift_slope * p - ramsey_detuning).abs();
        fits.push((p, fit_ramsey(ds, Some(expected))?));
    }
    let calibration = calibrate_from_ramsey(&fits, kappa_m, gamma2_0, root)?;
    Ok((peaks, fits, calibration))
}

/// [`simulate_calibration`] followed by [`analyze_calibration`] with the
/// small-χ root.
pub fn run_calibration(
    params: &SystemParams,
    c_pump: f64,
    powers: &[f64],
    probe_freqs: &[f64],
    ramsey_powers: &[f64],
    ramsey_points: usize,
    lab: &LabConfig,
) -> Result<CalibrationRun> {
    let (spectroscopy, ramsey) =
        simulate_calibration(params, c_pump, powers, probe_freqs, ramsey_powers, ramsey_points, lab)?;
    let (peaks, ramsey_fits, calibration) = analyze_calibration(
        &spectroscopy,
        &ramsey,
        ramsey_powers,
        lab.ramsey_detuning,
        params.kappa_m,
        params.gamma2_0,
        RootChoice::SmallChi,
    )?;
    Ok(CalibrationRun {
        spectroscopy,
        ramsey,
        peaks,
        ramsey_fits,
        calibration,
    })
}

/// Sensitivity curve from a spectroscopy dataset under a given calibration.
/// Falls back to binomial shot noise when the measured standard error is
/// not a single Gaussian peak per line.
pub fn sensitivity_from_spectroscopy(
    ds: &SweepDataset,
    calib: &CalibrationResult,
    sensing: &SensingConfig,
    grid: &[f64],
) -> Result<SensitivityCurve> {
    let peaks = fit_spectroscopy(ds)?;
    let noise = match NoiseProfile::from_fits(&fit_noise(ds)?, calib) {
        Err(Error::DegenerateData(_)) => NoiseProfile::binomial(&peaks, ds.points[0].n_shots)?,
        other => other?,
    };
    sensitivity_curve(&peaks, &noise, calib, sensing, grid)
}

/// Ideal-qubit companion of a device: no intrinsic relaxation or dephasing
/// and a readout whose excited histogram is its pure excited lobe.
pub fn ideal_variant(params: &SystemParams, lab: &LabConfig) -> Result<(SystemParams, LabConfig)> {
    let readout = lab.readout.ideal_from_histograms(20_000, lab.seed ^ 0xa5a5)?;
    Ok((params.ideal(), LabConfig { readout, ..lab.clone() }))
}
