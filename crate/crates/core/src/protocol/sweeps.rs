use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::readout::{sample_readout, ReadoutModel};
use super::schedule::{Element, PulseSchedule};
use crate::analytics::{added_dephasing, dephasing_rate};
use crate::dataset::{Axis, PointRecord, SweepDataset};
use crate::engine::{
    build_mode_operators, evolve_lindblad, fastest_rate, CollapseTerm, DensityMatrix, DriveTerm,
    Envelope, EvolveOptions, Hamiltonian, ModeSpace, Operator,
};
use crate::error::{Error, Result};
use crate::seed::derive_seed;
use crate::system::{parametric_interaction, qubit_magnon_space, qubit_space, PumpSpec, SystemParams, MAGNON, QUBIT};
use crate::units::{hz_to_rad, rad_to_hz};
use crate::C64;

/// Gaussian π pulse truncated to ±`span`·σ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbePulse {
    pub sigma: f64,
    pub span: f64,
}

impl ProbePulse {
    pub fn duration(&self) -> f64 {
        2.0 * self.span * self.sigma
    }

    /// Peak Rabi rate giving a rotation area of exactly π inside the window.
    pub fn peak_rabi(&self) -> f64 {
        let area = self.sigma * (2.0 * PI).sqrt() * libm::erf(self.span / std::f64::consts::SQRT_2);
        PI / area
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !(self.span > 0.0) {
            return Err(Error::InvalidArgument("probe pulse needs positive sigma and span".into()));
        }
        Ok(())
    }
}

/// Settings shared by every protocol run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabConfig {
    pub readout: ReadoutModel,
    pub shots: usize,
    pub seed: u64,
    /// Keep the analog value of every shot in the dataset.
    pub keep_shots: bool,
    /// Wall-clock time of one shot (s).
    pub repetition_time: f64,
    /// Spectroscopy probe for steady-state line scans.
    pub probe: ProbePulse,
    /// Short probe for time-resolved spectroscopy during magnon decay.
    pub decay_probe: ProbePulse,
    /// Artificial Ramsey detuning (rad/s).
    pub ramsey_detuning: f64,
    /// Magnon number above which decay protocols flag blurred signals.
    pub blur_limit: f64,
    /// Integrator step as a fraction of 1/(fastest rate).
    pub step_fraction: f64,
}

impl Default for LabConfig {
    fn default() -> Self {
        Self {
            readout: ReadoutModel::default(),
            shots: 1000,
            seed: 0,
            keep_shots: false,
            repetition_time: 32e-6,
            probe: ProbePulse { sigma: 50e-9, span: 3.0 },
            decay_probe: ProbePulse { sigma: 5e-9, span: 3.0 },
            ramsey_detuning: hz_to_rad(1e6),
            blur_limit: 650.0,
            step_fraction: 0.05,
        }
    }
}

impl LabConfig {
    pub fn validate(&self) -> Result<()> {
        self.readout.validate()?;
        self.probe.validate()?;
        self.decay_probe.validate()?;
        if self.shots == 0 {
            return Err(Error::InvalidArgument("shots must be at least 1".into()));
        }
        if !(self.repetition_time > 0.0) {
            return Err(Error::InvalidArgument("repetition time must be positive".into()));
        }
        if !(self.step_fraction > 0.0 && self.step_fraction <= 0.1) {
            return Err(Error::InvalidArgument("step fraction must lie in (0, 0.1]".into()));
        }
        if !(self.blur_limit >= 0.0) {
            return Err(Error::InvalidArgument("blur limit must be >= 0".into()));
        }
        Ok(())
    }
}

fn check_grid(name: &str, g: &[f64]) -> Result<()> {
    if g.is_empty() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("{name} grid must be non-empty and finite")));
    }
    if g.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(format!("{name} grid must be strictly increasing")));
    }
    Ok(())
}

fn sample_point(p_true: f64, coords: Vec<f64>, cfg: &LabConfig, index: usize) -> Result<PointRecord> {
    let p = p_true.clamp(0.0, 1.0);
    let shots = sample_readout(p, &cfg.readout, cfg.shots, derive_seed(cfg.seed, index as u64))?;
    let (p_e, stderr) = shots.estimate();
    Ok(PointRecord {
        coords,
        p_e,
        stderr,
        n_shots: cfg.shots,
        seq_duration: cfg.repetition_time,
        shots: cfg.keep_shots.then_some(shots),
    })
}

struct QubitOps {
    space: Arc<ModeSpace>,
    lower: Operator,
    number: Operator,
}

fn qubit_ops() -> QubitOps {
    let space = qubit_space();
    let (lower, number) = build_mode_operators(&space, QUBIT).expect("qubit mode exists");
    QubitOps {
        space,
        lower,
        number,
    }
}

fn qubit_collapses(ops: &QubitOps, gamma1: f64, gamma_phi: f64) -> Result<Vec<CollapseTerm>> {
    Ok(vec![
        CollapseTerm::new(ops.lower.clone(), gamma1)?,
        CollapseTerm::dephasing(&ops.number, gamma_phi)?,
    ])
}

fn auto_dt(h: &Hamiltonian, c: &[CollapseTerm], t0: f64, t1: f64, frac: f64) -> f64 {
    let rate = fastest_rate(h, c, t0, t1);
    let dt = if rate > 0.0 { frac / rate } else { f64::INFINITY };
    dt.min((t1 - t0).max(f64::MIN_POSITIVE))
}

/// Excited population after a probe π pulse centred at `center`, with static
/// qubit–probe detuning `detuning` and an optional extra time-dependent
/// frequency shift acting on q†q.
fn probe_response(
    ops: &QubitOps,
    detuning: f64,
    shift: Option<Envelope>,
    gamma1: f64,
    gamma_phi: f64,
    pulse: &ProbePulse,
    center: f64,
    frac: f64,
) -> Result<f64> {
    let half = pulse.span * pulse.sigma;
    let (t0, t1) = (center - half, center + half);
    let drive = DriveTerm::new(
        ops.lower.clone(),
        Envelope::TruncatedGaussian {
            amplitude: 0.5 * pulse.peak_rabi(),
            center,
            sigma: pulse.sigma,
            start: t0,
            stop: t1,
        },
    );
    let mut h = Hamiltonian::from(ops.number.scale_re(detuning)).with_drive(drive);
    if let Some(env) = shift {
        // a(t)(A + A†) with A = q†q/2 adds a(t)·q†q.
        h = h.with_drive(DriveTerm::new(ops.number.scale_re(0.5), env));
    }
    let c = qubit_collapses(ops, gamma1, gamma_phi)?;
    let dt = auto_dt(&h, &c, t0, t1, frac);
    let rho0 = DensityMatrix::basis(ops.space.clone(), &[0])?;
    let opts = EvolveOptions::new(t0, t1, dt).record_at(vec![t1]);
    let traj = evolve_lindblad(&rho0, &h, &c, &opts)?;
    Ok(traj.final_state.population(1))
}

/// Qubit spectroscopy versus magnon pump power.
///
/// Axes: `pump_power` [W] × `probe_detuning` [Hz], the probe frequency
/// measured from ω_q/2π. Each point drives a Gaussian π pulse at the probe
/// frequency on a qubit shifted by χ_qm·n̄ and dephased at Γ_q(n̄), with
/// n̄ = c_pump·P held in steady state during the pulse.
pub fn run_qubit_spectroscopy(
    params: &SystemParams,
    pump_powers: &[f64],
    probe_freqs: &[f64],
    c_pump: f64,
    cfg: &LabConfig,
) -> Result<SweepDataset> {
    params.validate()?;
    cfg.validate()?;
    check_grid("pump power", pump_powers)?;
    check_grid("probe frequency", probe_freqs)?;
    if pump_powers[0] < 0.0 || !(c_pump >= 0.0) {
        return Err(Error::InvalidArgument("powers and c_pump must be non-negative".into()));
    }
    let schedule = PulseSchedule::new()
        .then(Element::PiPulse { frequency: 0.0, duration: cfg.probe.duration() })
        .concurrent(0.0, Element::MagnonPump {
            magnons: c_pump * pump_powers[pump_powers.len() - 1],
            duration: cfg.probe.duration(),
            frequency: params.omega_m,
        })
        .then(Element::Readout { window: cfg.readout.t_ro });
    schedule.validate()?;
    let ops = qubit_ops();
    let nf = probe_freqs.len();
    let points: Vec<Result<PointRecord>> = (0..pump_powers.len() * nf)
        .into_par_iter()
        .map(|i| {
            let (p, f) = (pump_powers[i / nf], probe_freqs[i % nf]);
            let nbar = c_pump * p;
            let detuning = params.chi_qm * nbar - hz_to_rad(f);
            let pe = probe_response(
                &ops,
                detuning,
                None,
                params.gamma1(),
                dephasing_rate(nbar, params),
                &cfg.probe,
                cfg.probe.span * cfg.probe.sigma,
                cfg.step_fraction,
            )?;
            sample_point(pe, vec![p, f], cfg, i)
        })
        .collect();
    let points = points.into_iter().collect::<Result<Vec<_>>>()?;
    let mut ds = SweepDataset::new(
        "qubit_spectroscopy",
        vec![
            Axis::new("pump_power", "W", pump_powers.to_vec()),
            Axis::new("probe_detuning", "Hz", probe_freqs.to_vec()),
        ],
        points,
    )?;
    let (lo, hi) = (probe_freqs[0], probe_freqs[nf - 1]);
    for &p in pump_powers {
        let line = rad_to_hz(params.chi_qm * c_pump * p);
        if line < lo || line > hi {
            ds.flag(format!(
                "probe grid too narrow: expected line at {line:e} Hz for P = {p:e} W lies outside [{lo:e}, {hi:e}] Hz"
            ));
        }
    }
    ds.metadata.insert("schedule".into(), schedule.to_string());
    ds.metadata.insert("c_pump".into(), format!("{c_pump:e}"));
    ds.metadata.insert("probe_sigma".into(), format!("{:e}", cfg.probe.sigma));
    Ok(ds)
}

fn half_pi(phase: f64) -> DMatrix<C64> {
    // exp(−i π/4 (cos θ σx + sin θ σy)) in the {g, e} basis.
    let c = C64::new(FRAC_PI_4.cos(), 0.0);
    let s = C64::new(0.0, -FRAC_PI_4.sin());
    let e_plus = C64::from_polar(1.0, phase);
    DMatrix::from_row_slice(2, 2, &[c, s * e_plus.conj(), s * e_plus, c])
}

/// Ramsey fringes with the magnon pump held during the free evolution.
///
/// Axis: `delay` [s]. The frame rotates at ω_q + Δ_art, so the fringe
/// frequency is Δ_art − χ_qm·n̄ and the envelope decays at Γ_q(n̄) + 1/(2T1).
pub fn run_ramsey(params: &SystemParams, pump: &PumpSpec, delays: &[f64], cfg: &LabConfig) -> Result<SweepDataset> {
    params.validate()?;
    cfg.validate()?;
    pump.validate()?;
    check_grid("delay", delays)?;
    if delays[0] < 0.0 {
        return Err(Error::InvalidArgument("delays must be non-negative".into()));
    }
    if cfg.ramsey_detuning == 0.0 {
        return Err(Error::InvalidArgument("Ramsey needs a non-zero artificial detuning".into()));
    }
    let tmax = delays[delays.len() - 1];
    let nbar = pump.magnon_number();
    let schedule = PulseSchedule::new()
        .then(Element::HalfPiPulse { frequency: cfg.ramsey_detuning, phase: 0.0, duration: 0.0 })
        .then(Element::Delay { duration: tmax })
        .then(Element::HalfPiPulse { frequency: cfg.ramsey_detuning, phase: 0.0, duration: 0.0 })
        .concurrent(0.0, Element::MagnonPump { magnons: nbar, duration: tmax, frequency: params.omega_m })
        .then(Element::Readout { window: cfg.readout.t_ro });
    schedule.validate()?;
    let ops = qubit_ops();
    let h = Hamiltonian::from(ops.number.scale_re(params.chi_qm * nbar - cfg.ramsey_detuning));
    let c = qubit_collapses(&ops, params.gamma1(), dephasing_rate(nbar, params))?;
    let rho0 = DensityMatrix::basis(ops.space.clone(), &[0])?.conjugate(&half_pi(0.0));
    let dt = auto_dt(&h, &c, 0.0, tmax.max(1e-12), cfg.step_fraction);
    let opts = EvolveOptions::new(0.0, tmax, dt).record_at(delays.to_vec()).keep_states(true);
    let traj = evolve_lindblad(&rho0, &h, &c, &opts)?;
    let unitary = half_pi(0.0);
    let states = traj.states.expect("states kept");
    let points: Vec<Result<PointRecord>> = states
        .par_iter()
        .enumerate()
        .map(|(i, rho)| sample_point(rho.conjugate(&unitary).population(1), vec![delays[i]], cfg, i))
        .collect();
    let mut ds = SweepDataset::new(
        "ramsey",
        vec![Axis::new("delay", "s", delays.to_vec())],
        points.into_iter().collect::<Result<Vec<_>>>()?,
    )?;
    ds.metadata.insert("schedule".into(), schedule.to_string());
    ds.metadata.insert("magnon_number".into(), format!("{nbar:e}"));
    ds.metadata.insert("pump_power".into(), format!("{:e}", pump.power));
    ds.metadata.insert("ramsey_detuning_hz".into(), format!("{:e}", rad_to_hz(cfg.ramsey_detuning)));
    Ok(ds)
}

/// Energy relaxation after an ideal π pulse. Axis: `delay` [s].
pub fn run_relaxation(params: &SystemParams, delays: &[f64], cfg: &LabConfig) -> Result<SweepDataset> {
    params.validate()?;
    cfg.validate()?;
    check_grid("delay", delays)?;
    if delays[0] < 0.0 {
        return Err(Error::InvalidArgument("delays must be non-negative".into()));
    }
    let tmax = delays[delays.len() - 1];
    let schedule = PulseSchedule::new()
        .then(Element::PiPulse { frequency: 0.0, duration: 0.0 })
        .then(Element::Delay { duration: tmax })
        .then(Element::Readout { window: cfg.readout.t_ro });
    schedule.validate()?;
    let ops = qubit_ops();
    let h = Hamiltonian::from(Operator::zeros(&ops.space));
    let c = qubit_collapses(&ops, params.gamma1(), params.gamma2_0)?;
    let rho0 = DensityMatrix::basis(ops.space.clone(), &[1])?;
    let dt = auto_dt(&h, &c, 0.0, tmax.max(1e-12), cfg.step_fraction);
    let opts = EvolveOptions::new(0.0, tmax, dt)
        .record_at(delays.to_vec())
        .observe(vec![ops.number.clone()]);
    let traj = evolve_lindblad(&rho0, &h, &c, &opts)?;
    let pe = traj.real_series(0);
    let points: Vec<Result<PointRecord>> = (0..delays.len())
        .into_par_iter()
        .map(|i| sample_point(pe[i], vec![delays[i]], cfg, i))
        .collect();
    let mut ds = SweepDataset::new(
        "relaxation",
        vec![Axis::new("delay", "s", delays.to_vec())],
        points.into_iter().collect::<Result<Vec<_>>>()?,
    )?;
    ds.metadata.insert("schedule".into(), schedule.to_string());
    Ok(ds)
}

/// Phase accumulated by a Ramsey probe started at magnon release:
/// φ(t) = χ_qm n₀ (1 − e^{−κ_m t})/κ_m.
pub fn decay_phase(params: &SystemParams, n0: f64, t: f64) -> f64 {
    params.chi_qm * n0 * (1.0 - (-params.kappa_m * t).exp()) / params.kappa_m
}

/// Ramsey sequence run while a magnon population n₀ decays freely.
///
/// Axes: `sense_time` [s] × `phase` [rad] (phase of the second π/2 pulse).
/// The excited population is ½(1 + C(t) cos(θ − φ(t))), with the contrast
/// C(t) set by intrinsic decoherence plus the integrated magnon dephasing.
pub fn run_decay_phase_sense(
    params: &SystemParams,
    n0: f64,
    sense_times: &[f64],
    phases: &[f64],
    cfg: &LabConfig,
) -> Result<SweepDataset> {
    params.validate()?;
    cfg.validate()?;
    check_grid("sense time", sense_times)?;
    check_grid("phase", phases)?;
    if !(n0 >= 0.0) {
        return Err(Error::InvalidArgument("n0 must be non-negative".into()));
    }
    let tmax = sense_times[sense_times.len() - 1];
    let schedule = PulseSchedule::new()
        .then(Element::HalfPiPulse { frequency: 0.0, phase: 0.0, duration: 0.0 })
        .then(Element::Delay { duration: tmax })
        .then(Element::HalfPiPulse { frequency: 0.0, phase: phases[0], duration: 0.0 })
        .then(Element::Readout { window: cfg.readout.t_ro });
    schedule.validate()?;
    let kappa = params.kappa_m;
    let np = phases.len();
    let points: Vec<Result<PointRecord>> = (0..sense_times.len() * np)
        .into_par_iter()
        .map(|i| {
            let (t, theta) = (sense_times[i / np], phases[i % np]);
            let integrated = added_dephasing(n0, params.chi_qm, kappa) * (1.0 - (-kappa * t).exp()) / kappa;
            let contrast = (-(params.gamma2_0 + 0.5 * params.gamma1()) * t - integrated).exp();
            let pe = 0.5 * (1.0 + contrast * (theta - decay_phase(params, n0, t)).cos());
            sample_point(pe, vec![t, theta], cfg, i)
        })
        .collect();
    let mut ds = SweepDataset::new(
        "decay_phase_sense",
        vec![
            Axis::new("sense_time", "s", sense_times.to_vec()),
            Axis::new("phase", "rad", phases.to_vec()),
        ],
        points.into_iter().collect::<Result<Vec<_>>>()?,
    )?;
    if n0 > cfg.blur_limit {
        ds.flag(format!("n0 = {n0} exceeds the blur limit {}; fringes may wash out", cfg.blur_limit));
    }
    ds.metadata.insert("schedule".into(), schedule.to_string());
    ds.metadata.insert("n0".into(), format!("{n0:e}"));
    Ok(ds)
}

/// Time-resolved spectroscopy during free magnon decay.
///
/// Axes: `sense_time` [s] × `probe_detuning` [Hz]. The probe π pulse is
/// centred on the sense time and sees the qubit frequency move as
/// χ_qm n₀ e^{−κ_m t} while it plays, which blurs the line. Before release
/// (t < 0) the population is held at n₀. Dephasing is evaluated at the
/// population at the pulse centre.
pub fn run_decay_spectroscopy(
    params: &SystemParams,
    n0: f64,
    sense_times: &[f64],
    probe_freqs: &[f64],
    cfg: &LabConfig,
) -> Result<SweepDataset> {
    params.validate()?;
    cfg.validate()?;
    check_grid("sense time", sense_times)?;
    check_grid("probe frequency", probe_freqs)?;
    if !(n0 >= 0.0) {
        return Err(Error::InvalidArgument("n0 must be non-negative".into()));
    }
    let schedule = PulseSchedule::new()
        .then(Element::Delay { duration: sense_times[0].max(0.0) })
        .then(Element::PiPulse { frequency: 0.0, duration: cfg.decay_probe.duration() })
        .then(Element::Readout { window: cfg.readout.t_ro });
    schedule.validate()?;
    let ops = qubit_ops();
    let kappa = params.kappa_m;
    let nf = probe_freqs.len();
    let points: Vec<Result<PointRecord>> = (0..sense_times.len() * nf)
        .into_par_iter()
        .map(|i| {
            let (t, f) = (sense_times[i / nf], probe_freqs[i % nf]);
            let n_center = n0 * (-kappa * t.max(0.0)).exp();
            let shift = (n0 > 0.0).then(|| Envelope::Exponential {
                amplitude: params.chi_qm * n0,
                rate: kappa,
                start: 0.0,
            });
            let pe = probe_response(
                &ops,
                -hz_to_rad(f),
                shift,
                params.gamma1(),
                dephasing_rate(n_center, params),
                &cfg.decay_probe,
                t,
                cfg.step_fraction,
            )?;
            sample_point(pe, vec![t, f], cfg, i)
        })
        .collect();
    let mut ds = SweepDataset::new(
        "decay_spectroscopy",
        vec![
            Axis::new("sense_time", "s", sense_times.to_vec()),
            Axis::new("probe_detuning", "Hz", probe_freqs.to_vec()),
        ],
        points.into_iter().collect::<Result<Vec<_>>>()?,
    )?;
    let line = rad_to_hz(params.chi_qm * n0);
    if line < probe_freqs[0] || line > probe_freqs[nf - 1] {
        ds.flag(format!("probe grid does not cover the initial shift {line:e} Hz"));
    }
    if n0 > cfg.blur_limit {
        ds.flag(format!("n0 = {n0} exceeds the blur limit {}; the line may blur out", cfg.blur_limit));
    }
    ds.metadata.insert("schedule".into(), schedule.to_string());
    ds.metadata.insert("n0".into(), format!("{n0:e}"));
    ds.metadata.insert("probe_sigma".into(), format!("{:e}", cfg.decay_probe.sigma));
    Ok(ds)
}

/// Magnon levels used for single-excitation parametric dynamics; the top
/// level stays empty because the interaction conserves excitation number.
pub const PARAMETRIC_MAGNON_LEVELS: usize = 3;

/// Qubit decay under parametric qubit–magnon conversion.
///
/// Axes: `omega_qm` [Hz] (Ω_qm/2π) × `delta` [Hz] (δ/2π) × `duration` [s].
/// The qubit starts excited; the magnon decays at κ_m and the qubit at 1/T1.
pub fn run_parametric_decay_scan(
    params: &SystemParams,
    omegas: &[f64],
    deltas: &[f64],
    durations: &[f64],
    cfg: &LabConfig,
) -> Result<SweepDataset> {
    params.validate()?;
    cfg.validate()?;
    check_grid("Omega_qm", omegas)?;
    check_grid("delta", deltas)?;
    check_grid("duration", durations)?;
    if omegas[0] < 0.0 || durations[0] < 0.0 {
        return Err(Error::InvalidArgument("Omega_qm and durations must be non-negative".into()));
    }
    let tmax = durations[durations.len() - 1];
    let schedule = PulseSchedule::new()
        .then(Element::PiPulse { frequency: 0.0, duration: 0.0 })
        .then(Element::ParametricPump { omega_qm: omegas[0], delta: deltas[0], duration: tmax })
        .then(Element::Readout { window: cfg.readout.t_ro });
    schedule.validate()?;
    let space = qubit_magnon_space(PARAMETRIC_MAGNON_LEVELS)?;
    let (q, nq) = build_mode_operators(&space, QUBIT)?;
    let (m, _) = build_mode_operators(&space, MAGNON)?;
    let collapses = vec![
        CollapseTerm::new(m, params.kappa_m)?,
        CollapseTerm::new(q, params.gamma1())?,
    ];
    let rho0 = DensityMatrix::basis(space.clone(), &[1, 0])?;
    let nd = deltas.len();
    let curves: Vec<Result<Vec<f64>>> = (0..omegas.len() * nd)
        .into_par_iter()
        .map(|k| {
            let h = Hamiltonian::from(parametric_interaction(
                hz_to_rad(omegas[k / nd]),
                hz_to_rad(deltas[k % nd]),
                &space,
            )?);
            let dt = auto_dt(&h, &collapses, 0.0, tmax.max(1e-12), cfg.step_fraction);
            let opts = EvolveOptions::new(0.0, tmax, dt)
                .record_at(durations.to_vec())
                .observe(vec![nq.clone()]);
            Ok(evolve_lindblad(&rho0, &h, &collapses, &opts)?.real_series(0))
        })
        .collect();
    let curves = curves.into_iter().collect::<Result<Vec<_>>>()?;
    let nt = durations.len();
    let points: Vec<Result<PointRecord>> = (0..curves.len() * nt)
        .into_par_iter()
        .map(|i| {
            let (k, j) = (i / nt, i % nt);
            sample_point(curves[k][j], vec![omegas[k / nd], deltas[k % nd], durations[j]], cfg, i)
        })
        .collect();
    let mut ds = SweepDataset::new(
        "parametric_decay_scan",
        vec![
            Axis::new("omega_qm", "Hz", omegas.to_vec()),
            Axis::new("delta", "Hz", deltas.to_vec()),
            Axis::new("duration", "s", durations.to_vec()),
        ],
        points.into_iter().collect::<Result<Vec<_>>>()?,
    )?;
    ds.metadata.insert("schedule".into(), schedule.to_string());
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probe_area_is_pi() {
        let p = ProbePulse { sigma: 10e-9, span: 3.0 };
        let n = 20_000;
        let h = p.duration() / n as f64;
        let area: f64 = (0..n)
            .map(|k| {
                let t = -p.span * p.sigma + (k as f64 + 0.5) * h;
                p.peak_rabi() * (-0.5 * (t / p.sigma).powi(2)).exp() * h
            })
            .sum();
        assert!((area - PI).abs() < 1e-6);
    }

    #[test]
    fn resonant_probe_inverts_ideal_qubit() {
        let ops = qubit_ops();
        let p = ProbePulse { sigma: 20e-9, span: 4.0 };
        let pe = probe_response(&ops, 0.0, None, 0.0, 0.0, &p, 0.0, 0.02).unwrap();
        assert!((pe - 1.0).abs() < 1e-6, "{pe}");
    }

    #[test]
    fn half_pi_pulses_compose_to_pi() {
        let u = half_pi(0.3);
        let rho = DensityMatrix::basis(qubit_space(), &[0]).unwrap();
        let out = rho.conjugate(&u).conjugate(&u);
        assert!((out.population(1) - 1.0).abs() < 1e-14);
    }
}
