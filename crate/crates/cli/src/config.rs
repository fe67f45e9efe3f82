//! Experiment configuration files.
//!
//! A config is a TOML document. Every physical quantity is a `"value unit"`
//! string and every field that is left out takes a documented default; the
//! resolved config, with all defaults written out, is what the manifest
//! records and hashes.

use std::fmt;

use magnonlab::analytics::{RootChoice, SensingConfig};
use magnonlab::protocol::{LabConfig, ProbePulse, ReadoutModel};
use magnonlab::system::{default_gamma2_0, SystemParams};
use serde::{Deserialize, Serialize};

use crate::quantity::{Angle, Frequency, PerWatt, Power, Time};

#[derive(Debug, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

fn invalid(path: &str, message: impl fmt::Display) -> ConfigError {
    ConfigError {
        path: path.to_string(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    /// Relaxation and pump-off Ramsey.
    Coherence,
    Spectroscopy,
    /// Spectroscopy plus Ramsey versus pump power, inverted for χ_qm and c_pump.
    Calibration,
    /// Calibration followed by the S(n_m) curve.
    Sensitivity,
    /// Decay-phase and time-resolved spectroscopy of a decaying magnon population.
    Lifetime,
    /// Qubit decay under parametric conversion versus Ω_qm and δ.
    Parametric,
}

impl Protocol {
    fn required_blocks(self) -> &'static [&'static str] {
        match self {
            Protocol::Coherence => &["coherence"],
            Protocol::Spectroscopy => &["spectroscopy"],
            Protocol::Calibration => &["spectroscopy", "calibration"],
            Protocol::Sensitivity => &["spectroscopy", "calibration", "sensing"],
            Protocol::Lifetime => &["lifetime"],
            Protocol::Parametric => &["parametric"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentBlock,
    #[serde(default)]
    pub system: SystemBlock,
    #[serde(default)]
    pub readout: ReadoutBlock,
    #[serde(default)]
    pub lab: LabBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coherence: Option<CoherenceBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectroscopy: Option<SpectroscopyBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensing: Option<SensingBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifetime: Option<LifetimeBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parametric: Option<ParametricBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentBlock {
    pub name: String,
    pub protocol: Protocol,
    pub seed: u64,
    /// Run with the ideal-qubit device and readout.
    #[serde(default)]
    pub ideal_qubit: bool,
    /// Artifact directory; defaults to `runs/<name>`. Not part of the hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

/// Device parameters. Couplings and γ₂⁰ default to values derived from the
/// other entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemBlock {
    pub omega_q: Frequency,
    pub omega_c: Frequency,
    pub omega_m: Frequency,
    pub alpha: Frequency,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_qc: Option<Frequency>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_mc: Option<Frequency>,
    pub chi_qc: Frequency,
    pub chi_qm: Frequency,
    pub chi_mc: Frequency,
    pub kappa_m: Frequency,
    pub t1: Time,
    pub t2r: Time,
    pub t2e: Time,
    /// Pure-dephasing rate at zero magnons (rad/s).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma2_0: Option<Frequency>,
    /// Magnons per watt of pump power at the device.
    pub c_pump: PerWatt,
}

impl Default for SystemBlock {
    fn default() -> Self {
        Self {
            omega_q: Frequency::lit("3.87 GHz"),
            omega_c: Frequency::lit("4.56 GHz"),
            omega_m: Frequency::lit("4.74 GHz"),
            alpha: Frequency::lit("-200 MHz"),
            g_qc: None,
            g_mc: None,
            chi_qc: Frequency::lit("-1 MHz"),
            chi_qm: Frequency::lit("-67 kHz"),
            chi_mc: Frequency::lit("0 Hz"),
            kappa_m: Frequency::lit("4.81 MHz"),
            t1: Time::lit("2.78 us"),
            t2r: Time::lit("4 us"),
            t2e: Time::lit("5 us"),
            gamma2_0: None,
            c_pump: PerWatt::lit("2e9 1/W"),
        }
    }
}

impl SystemBlock {
    fn resolve(&mut self) {
        let (wq, wc, wm, a) = (self.omega_q.si(), self.omega_c.si(), self.omega_m.si(), self.alpha.si());
        let (chi_qc, chi_qm) = (self.chi_qc.si(), self.chi_qm.si());
        let (d_qc, d_mc) = (wq - wc, wm - wc);
        // χ_qc = 2g²α/(Δ(Δ + α)) and χ_qm = (g_mc/Δ_mc)² χ_qc.
        self.g_qc
            .get_or_insert_with(|| Frequency::from_rad((chi_qc * d_qc * (d_qc + a) / (2.0 * a)).sqrt()));
        self.g_mc.get_or_insert_with(|| Frequency::from_rad((chi_qm / chi_qc).sqrt() * d_mc.abs()));
        let g2 = default_gamma2_0(self.t1.si(), self.t2r.si());
        self.gamma2_0.get_or_insert_with(|| Frequency::from_rad(g2));
    }

    pub fn params(&self) -> SystemParams {
        let f = |q: &Option<Frequency>| q.as_ref().expect("resolved").si();
        SystemParams {
            omega_c: self.omega_c.si(),
            omega_m: self.omega_m.si(),
            omega_q: self.omega_q.si(),
            alpha: self.alpha.si(),
            g_qc: f(&self.g_qc),
            g_mc: f(&self.g_mc),
            chi_qc: self.chi_qc.si(),
            chi_qm: self.chi_qm.si(),
            chi_mc: self.chi_mc.si(),
            kappa_m: self.kappa_m.si(),
            t1: self.t1.si(),
            t2r: self.t2r.si(),
            t2e: self.t2e.si(),
            gamma2_0: f(&self.gamma2_0),
        }
    }
}

/// Analog single-shot readout; levels and widths are in arbitrary signal units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReadoutBlock {
    pub mu_g: f64,
    pub sigma_g: f64,
    pub mu_e: f64,
    pub sigma_e: f64,
    pub threshold: f64,
    pub t_ro: Time,
    pub t1: Time,
}

impl Default for ReadoutBlock {
    fn default() -> Self {
        let r = ReadoutModel::default();
        Self {
            mu_g: r.mu_g,
            sigma_g: r.sigma_g,
            mu_e: r.mu_e,
            sigma_e: r.sigma_e,
            threshold: r.threshold,
            t_ro: Time::lit("2 us"),
            t1: Time::lit("2.78 us"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabBlock {
    pub shots: usize,
    pub keep_shots: bool,
    pub repetition_time: Time,
    pub probe_sigma: Time,
    pub probe_span: f64,
    pub decay_probe_sigma: Time,
    pub decay_probe_span: f64,
    pub ramsey_detuning: Frequency,
    /// Magnons.
    pub blur_limit: f64,
    pub step_fraction: f64,
}

impl Default for LabBlock {
    fn default() -> Self {
        Self {
            shots: 1000,
            keep_shots: false,
            repetition_time: Time::lit("32 us"),
            probe_sigma: Time::lit("50 ns"),
            probe_span: 3.0,
            decay_probe_sigma: Time::lit("5 ns"),
            decay_probe_span: 3.0,
            ramsey_detuning: Frequency::lit("1 MHz"),
            blur_limit: 650.0,
            step_fraction: 0.05,
        }
    }
}

/// Either `start`/`stop`/`points` (inclusive, evenly spaced) or `values`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Deserialize<'de>"))]
pub struct Grid<T> {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<T>>,
}

impl<T> Grid<T> {
    pub fn linspace(start: T, stop: T, points: usize) -> Self {
        Self {
            start: Some(start),
            stop: Some(stop),
            points: Some(points),
            values: None,
        }
    }

    /// Strictly increasing, finite grid in the units chosen by `f`.
    pub fn resolve(&self, path: &str, f: impl Fn(&T) -> f64) -> Result<Vec<f64>, ConfigError> {
        let v = match (&self.start, &self.stop, self.points, &self.values) {
            (Some(a), Some(b), Some(n), None) => {
                if n < 2 {
                    return Err(invalid(path, "a start/stop grid needs at least 2 points"));
                }
                let (a, b) = (f(a), f(b));
                (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
            }
            (None, None, None, Some(vals)) if !vals.is_empty() => vals.iter().map(f).collect::<Vec<_>>(),
            _ => return Err(invalid(path, "give either start, stop and points, or a non-empty values list")),
        };
        if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid(path, "grid must be finite and strictly increasing"));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoherenceBlock {
    pub relaxation_delays: Grid<Time>,
    pub ramsey_delays: Grid<Time>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectroscopyBlock {
    pub powers: Grid<Power>,
    /// Probe detuning from the bare qubit frequency.
    pub probes: Grid<Frequency>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Root {
    Small,
    Large,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationBlock {
    pub ramsey_powers: Grid<Power>,
    #[serde(default = "default_ramsey_points")]
    pub ramsey_points: usize,
    #[serde(default = "default_root")]
    pub root: Root,
}

fn default_ramsey_points() -> usize {
    101
}

fn default_root() -> Root {
    Root::Small
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensingBlock {
    pub tau: Time,
    pub shots: usize,
    pub unit_snr: f64,
    /// Magnon numbers at which S is evaluated.
    pub n_m: Grid<f64>,
    /// Also evaluate the ideal-qubit curve.
    pub compare_ideal: bool,
}

impl Default for SensingBlock {
    fn default() -> Self {
        let s = SensingConfig::default();
        Self {
            tau: Time::lit("32 us"),
            shots: s.shots,
            unit_snr: s.unit_snr,
            n_m: Grid::linspace(0.0, 2000.0, 41),
            compare_ideal: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifetimeBlock {
    /// Magnons at release.
    pub n0: f64,
    pub phase_times: Grid<Time>,
    pub phases: Grid<Angle>,
    pub frequency_times: Grid<Time>,
    pub probes: Grid<Frequency>,
    #[serde(default = "default_budget")]
    pub subsample_budget: Time,
    /// Number of time-budget subsamples analysed after the run (0 = none).
    #[serde(default)]
    pub subsample_draws: usize,
}

fn default_budget() -> Time {
    Time::lit("1 s")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParametricBlock {
    pub omegas: Grid<Frequency>,
    pub deltas: Grid<Frequency>,
    pub durations: Grid<Time>,
}

/// Everything a run needs, in internal units.
#[derive(Debug, Clone)]
pub struct Plan {
    pub protocol: Protocol,
    pub params: SystemParams,
    pub c_pump: f64,
    pub lab: LabConfig,
    pub ideal_qubit: bool,
    pub coherence: Option<(Vec<f64>, Vec<f64>)>,
    /// Powers (W) and probe detunings (Hz).
    pub spectroscopy: Option<(Vec<f64>, Vec<f64>)>,
    pub calibration: Option<(Vec<f64>, usize, RootChoice)>,
    pub sensing: Option<(SensingConfig, Vec<f64>, bool)>,
    pub lifetime: Option<LifetimePlan>,
    /// Ω_qm (Hz), δ (Hz), durations (s).
    pub parametric: Option<(Vec<f64>, Vec<f64>, Vec<f64>)>,
}

#[derive(Debug, Clone)]
pub struct LifetimePlan {
    pub n0: f64,
    pub phase_times: Vec<f64>,
    pub phases: Vec<f64>,
    pub frequency_times: Vec<f64>,
    pub probes: Vec<f64>,
    pub budget: f64,
    pub draws: usize,
}

pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = toml::Deserializer::parse(text).map_err(|e| invalid("<document>", e.to_string().trim()))?;
    let mut cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        invalid(if path == "." { "<document>" } else { &path }, e.into_inner().message().trim())
    })?;
    cfg.system.resolve();
    Ok(cfg)
}

impl ExperimentConfig {
    /// Canonical TOML of the resolved config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn output_dir(&self) -> String {
        self.experiment
            .output
            .clone()
            .unwrap_or_else(|| format!("runs/{}", self.experiment.name))
    }

    fn block_present(&self, name: &str) -> bool {
        match name {
            "coherence" => self.coherence.is_some(),
            "spectroscopy" => self.spectroscopy.is_some(),
            "calibration" => self.calibration.is_some(),
            "sensing" => self.sensing.is_some(),
            "lifetime" => self.lifetime.is_some(),
            "parametric" => self.parametric.is_some(),
            _ => false,
        }
    }

    /// Schema-level and physics checks, producing the run plan.
    pub fn plan(&self) -> Result<Plan, ConfigError> {
        let protocol = self.experiment.protocol;
        for b in protocol.required_blocks() {
            if !self.block_present(b) {
                return Err(invalid(b, format!("block required by protocol `{protocol:?}` is missing")));
            }
        }
        let params = self.system.params();
        params.validate().map_err(|e| invalid("system", e))?;
        params.check_dispersive().map_err(|e| invalid("system", e))?;
        let c_pump = self.system.c_pump.si();
        if !(c_pump > 0.0) {
            return Err(invalid("system.c_pump", "must be positive"));
        }
        let r = &self.readout;
        let lab = LabConfig {
            readout: ReadoutModel {
                mu_g: r.mu_g,
                sigma_g: r.sigma_g,
                mu_e: r.mu_e,
                sigma_e: r.sigma_e,
                t_ro: r.t_ro.si(),
                t1: r.t1.si(),
                threshold: r.threshold,
            },
            shots: self.lab.shots,
            seed: self.experiment.seed,
            keep_shots: self.lab.keep_shots,
            repetition_time: self.lab.repetition_time.si(),
            probe: ProbePulse { sigma: self.lab.probe_sigma.si(), span: self.lab.probe_span },
            decay_probe: ProbePulse { sigma: self.lab.decay_probe_sigma.si(), span: self.lab.decay_probe_span },
            ramsey_detuning: self.lab.ramsey_detuning.si(),
            blur_limit: self.lab.blur_limit,
            step_fraction: self.lab.step_fraction,
        };
        lab.readout.validate().map_err(|e| invalid("readout", e))?;
        lab.validate().map_err(|e| invalid("lab", e))?;

        let si = |q: &Time| q.si();
        let coherence = match &self.coherence {
            Some(c) => Some((
                c.relaxation_delays.resolve("coherence.relaxation_delays", si)?,
                c.ramsey_delays.resolve("coherence.ramsey_delays", si)?,
            )),
            None => None,
        };
        let spectroscopy = match &self.spectroscopy {
            Some(s) => Some((
                s.powers.resolve("spectroscopy.powers", Power::si)?,
                s.probes.resolve("spectroscopy.probes", Frequency::hz)?,
            )),
            None => None,
        };
        let calibration = match &self.calibration {
            Some(c) => {
                let p = c.ramsey_powers.resolve("calibration.ramsey_powers", Power::si)?;
                if p.len() < 2 {
                    return Err(invalid("calibration.ramsey_powers", "need at least two pump powers"));
                }
                if c.ramsey_points < 8 {
                    return Err(invalid("calibration.ramsey_points", "need at least 8 delays"));
                }
                let root = match c.root {
                    Root::Small => RootChoice::SmallChi,
                    Root::Large => RootChoice::LargeChi,
                };
                Some((p, c.ramsey_points, root))
            }
            None => None,
        };
        let sensing = match &self.sensing {
            Some(s) => {
                let cfg = SensingConfig { tau: s.tau.si(), shots: s.shots, unit_snr: s.unit_snr };
                cfg.validate().map_err(|e| invalid("sensing", e))?;
                Some((cfg, s.n_m.resolve("sensing.n_m", |v| *v)?, s.compare_ideal))
            }
            None => None,
        };
        if spectroscopy.as_ref().is_some_and(|(p, _)| p.len() < 3) && sensing.is_some() {
            return Err(invalid("spectroscopy.powers", "the sensitivity curve needs at least 3 pump powers"));
        }
        let lifetime = match &self.lifetime {
            Some(l) => {
                if !(l.n0 >= 0.0) {
                    return Err(invalid("lifetime.n0", "must be non-negative"));
                }
                let budget = l.subsample_budget.si();
                if !(budget > 0.0) {
                    return Err(invalid("lifetime.subsample_budget", "must be positive"));
                }
                if l.subsample_draws > 0 && !self.lab.keep_shots {
                    return Err(invalid("lab.keep_shots", "subsampling needs keep_shots = true"));
                }
                let plan = LifetimePlan {
                    n0: l.n0,
                    phase_times: l.phase_times.resolve("lifetime.phase_times", si)?,
                    phases: l.phases.resolve("lifetime.phases", Angle::si)?,
                    frequency_times: l.frequency_times.resolve("lifetime.frequency_times", si)?,
                    probes: l.probes.resolve("lifetime.probes", Frequency::hz)?,
                    budget,
                    draws: l.subsample_draws,
                };
                for (name, v) in [("lifetime.phase_times", &plan.phase_times), ("lifetime.frequency_times", &plan.frequency_times)] {
                    if v.len() < 6 {
                        return Err(invalid(name, "need at least 6 sense times"));
                    }
                }
                Some(plan)
            }
            None => None,
        };
        let parametric = match &self.parametric {
            Some(p) => {
                let omegas = p.omegas.resolve("parametric.omegas", Frequency::hz)?;
                if omegas[0] < 0.0 {
                    return Err(invalid("parametric.omegas", "must be non-negative"));
                }
                let deltas = p.deltas.resolve("parametric.deltas", Frequency::hz)?;
                if deltas.len() < 7 {
                    return Err(invalid("parametric.deltas", "need at least 7 detunings"));
                }
                Some((omegas, deltas, p.durations.resolve("parametric.durations", si)?))
            }
            None => None,
        };
        Ok(Plan {
            protocol,
            params,
            c_pump,
            lab,
            ideal_qubit: self.experiment.ideal_qubit,
            coherence,
            spectroscopy,
            calibration,
            sensing,
            lifetime,
            parametric,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[experiment]
name = "t"
protocol = "spectroscopy"
seed = 1

[spectroscopy]
powers = { values = ["0 W", "0.5 uW"] }
probes = { start = "-80 MHz", stop = "10 MHz", points = 10 }
"#;

    #[test]
    fn defaults_reproduce_reference_device() {
        let cfg = parse(MINIMAL).unwrap();
        assert_eq!(cfg.system.params(), SystemParams::reference());
        let plan = cfg.plan().unwrap();
        assert_eq!(plan.spectroscopy.unwrap().1[0], -80e6);
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = parse(MINIMAL).unwrap();
        let text = cfg.to_toml();
        assert!(text.contains("gamma2_0") && text.contains("c_pump") && text.contains("step_fraction"));
        assert_eq!(parse(&text).unwrap(), cfg);
    }

    #[test]
    fn errors_name_the_field() {
        let e = parse(&MINIMAL.replace("seed = 1", "seed = 1\nsede = 2")).unwrap_err();
        assert!(e.to_string().contains("sede"), "{e}");
        let e = parse(&MINIMAL.replace("\"-80 MHz\"", "\"-80\"")).unwrap_err();
        assert_eq!(e.path, "spectroscopy.probes.start");
        let e = parse(&MINIMAL.replace("protocol = \"spectroscopy\"", "protocol = \"lifetime\"")).unwrap().plan().unwrap_err();
        assert_eq!(e.path, "lifetime");
    }
}
