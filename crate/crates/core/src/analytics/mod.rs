//! Magnon-number calibration, dephasing model, sensitivity and lifetime
//! extraction.

mod calibration;
mod coherence;
mod dephasing;
mod lifetime;
mod parametric;
mod sensitivity;

pub use calibration::{calibrate_magnon_number, linear_slope, CalibrationResult, RootChoice};
pub use coherence::{fit_noise, fit_ramsey, fit_relaxation, fit_spectroscopy, NoiseFit, RamseyFit, SpectroPeak};
pub use dephasing::{added_dephasing, dephasing_rate, stark_shift};
pub use lifetime::{lifetime_from_frequency, lifetime_from_phase, unwrap_phases, LifetimeEstimate, LifetimeMethod};
pub use parametric::{extract_kappa_m_from_scan, parametric_qubit_decay, ParametricDecay, ScanExtraction};
pub use sensitivity::{
    pair_snr, qubit_response, sensitivity_curve, snr, solve_sensitivity, stderr_of_mean, NoiseModel, NoiseProfile,
    ResponseInterpolants, SensingConfig, SensitivityCurve,
};
