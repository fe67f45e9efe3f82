//! Protocol execution and analysis. Analysis reads only datasets, so the
//! same code serves fresh runs, frozen artifacts and imported tables.

use std::collections::BTreeMap;

use anyhow::Context;
use magnonlab::analytics::{
    extract_kappa_m_from_scan, fit_ramsey, fit_relaxation, fit_spectroscopy, lifetime_from_frequency,
    lifetime_from_phase, linear_slope, LifetimeEstimate, RootChoice, SensitivityCurve,
};
use magnonlab::estimator::subsample_time_budget;
use magnonlab::protocol::{
    run_decay_phase_sense, run_decay_spectroscopy, run_parametric_decay_scan, run_qubit_spectroscopy,
    run_ramsey, run_relaxation, LabConfig,
};
use magnonlab::seed::derive_stream_seed;
use magnonlab::system::SystemParams;
use magnonlab::units::{hz_to_rad, rad_to_hz};
use magnonlab::workflow::{analyze_calibration, ideal_variant, sensitivity_from_spectroscopy, simulate_calibration};
use magnonlab::{PumpSpec, SweepDataset};

use crate::config::{Plan, Protocol};
use crate::report::{Cell, Report, Table};
use crate::CliError;

pub type Datasets = BTreeMap<String, SweepDataset>;

fn ramsey_name(k: usize) -> String {
    format!("ramsey-{k:02}")
}

/// Dataset names a protocol produces.
pub fn dataset_names(plan: &Plan) -> Vec<String> {
    let mut v: Vec<String> = match plan.protocol {
        Protocol::Coherence => vec!["relaxation".into(), "ramsey".into()],
        Protocol::Spectroscopy => vec!["spectroscopy".into()],
        Protocol::Calibration | Protocol::Sensitivity => {
            let n = plan.calibration.as_ref().map_or(0, |c| c.0.len());
            std::iter::once("spectroscopy".to_string()).chain((0..n).map(ramsey_name)).collect()
        }
        Protocol::Lifetime => vec!["decay-phase".into(), "decay-spectroscopy".into()],
        Protocol::Parametric => vec!["parametric-scan".into()],
    };
    if plan.protocol == Protocol::Sensitivity && plan.sensing.as_ref().is_some_and(|s| s.2) {
        v.push("ideal-spectroscopy".into());
    }
    v
}

/// Device and lab settings in effect, after the ideal-qubit switch.
fn effective(plan: &Plan) -> magnonlab::Result<(SystemParams, LabConfig)> {
    if plan.ideal_qubit {
        ideal_variant(&plan.params, &plan.lab)
    } else {
        Ok((plan.params.clone(), plan.lab.clone()))
    }
}

fn block<'a, T>(b: &'a Option<T>) -> anyhow::Result<&'a T> {
    b.as_ref().context("plan is missing a block the protocol needs")
}

pub fn simulate(plan: &Plan) -> anyhow::Result<Datasets> {
    let (params, lab) = effective(plan)?;
    let mut out = Datasets::new();
    match plan.protocol {
        Protocol::Coherence => {
            let (relax, ramsey) = block(&plan.coherence)?;
            out.insert("relaxation".into(), run_relaxation(&params, relax, &lab)?);
            let cfg = LabConfig { seed: derive_stream_seed(lab.seed, 1, 0), ..lab.clone() };
            out.insert("ramsey".into(), run_ramsey(&params, &PumpSpec::magnon_drive(0.0, plan.c_pump), ramsey, &cfg)?);
        }
        Protocol::Spectroscopy => {
            let (powers, probes) = block(&plan.spectroscopy)?;
            out.insert("spectroscopy".into(), run_qubit_spectroscopy(&params, powers, probes, plan.c_pump, &lab)?);
        }
        Protocol::Calibration | Protocol::Sensitivity => {
            let (powers, probes) = block(&plan.spectroscopy)?;
            let (rp, points, _) = block(&plan.calibration)?;
            let (spec, ramsey) = simulate_calibration(&params, plan.c_pump, powers, probes, rp, *points, &lab)?;
            out.insert("spectroscopy".into(), spec);
            for (k, ds) in ramsey.into_iter().enumerate() {
                out.insert(ramsey_name(k), ds);
            }
            if plan.protocol == Protocol::Sensitivity && block(&plan.sensing)?.2 {
                let (ip, il) = ideal_variant(&params, &lab)?;
                out.insert("ideal-spectroscopy".into(), run_qubit_spectroscopy(&ip, powers, probes, plan.c_pump, &il)?);
            }
        }
        Protocol::Lifetime => {
            let l = block(&plan.lifetime)?;
            out.insert("decay-phase".into(), run_decay_phase_sense(&params, l.n0, &l.phase_times, &l.phases, &lab)?);
            let cfg = LabConfig { seed: derive_stream_seed(lab.seed, 1, 0), ..lab.clone() };
            out.insert(
                "decay-spectroscopy".into(),
                run_decay_spectroscopy(&params, l.n0, &l.frequency_times, &l.probes, &cfg)?,
            );
        }
        Protocol::Parametric => {
            let (o, d, t) = block(&plan.parametric)?;
            out.insert("parametric-scan".into(), run_parametric_decay_scan(&params, o, d, t, &lab)?);
        }
    }
    Ok(out)
}

/// Overrides applied when re-analysing.
#[derive(Debug, Clone, Default)]
pub struct AnalysisOptions {
    /// Time budget (s) and number of draws for lifetime subsampling.
    pub subsample: Option<(f64, usize)>,
}

fn get<'a>(ds: &'a Datasets, name: &str) -> Result<&'a SweepDataset, CliError> {
    ds.get(name).ok_or_else(|| CliError::Validation(format!("dataset `{name}` is missing")))
}

fn runtime(e: magnonlab::Error) -> CliError {
    CliError::Runtime(e.into())
}

fn flags(report: &mut Report, ds: &Datasets) {
    for (name, d) in ds {
        for f in &d.flags {
            report.kv(&format!("flag.{name}"), f);
        }
    }
}

pub fn analyze(plan: &Plan, ds: &Datasets, opts: &AnalysisOptions) -> Result<Report, CliError> {
    let mut r = Report::default();
    r.kv("protocol", format!("{:?}", plan.protocol).to_lowercase());
    r.kv("ideal_qubit", plan.ideal_qubit);
    r.kv("seed", plan.lab.seed);
    match plan.protocol {
        Protocol::Coherence => {
            relaxation_report(&mut r, get(ds, "relaxation")?)?;
            ramsey_report(&mut r, get(ds, "ramsey")?, Some(plan.lab.ramsey_detuning))?;
        }
        Protocol::Spectroscopy => {
            spectroscopy_report(&mut r, get(ds, "spectroscopy")?, Some(plan.c_pump))?;
        }
        Protocol::Calibration | Protocol::Sensitivity => {
            let (params, lab) = effective(plan).map_err(runtime)?;
            let (rp, _, root) = plan.calibration.as_ref().expect("validated");
            let ramsey: Vec<SweepDataset> =
                (0..rp.len()).map(|k| get(ds, &ramsey_name(k)).cloned()).collect::<Result<_, _>>()?;
            let spec = get(ds, "spectroscopy")?;
            let (peaks, fits, calib) =
                analyze_calibration(spec, &ramsey, rp, lab.ramsey_detuning, params.kappa_m, params.gamma2_0, *root)
                    .map_err(runtime)?;
            r.kv("calibration.root", if *root == RootChoice::SmallChi { "small" } else { "large" });
            r.num("calibration.chi_qm_hz", rad_to_hz(calib.chi_qm));
            r.num("calibration.c_pump_per_w", calib.c_pump);
            r.num("calibration.stark_slope_rad_per_s_w", calib.stark_slope);
            r.num("calibration.dephasing_slope_per_s_w", calib.dephasing_slope);
            r.num("calibration.ratio", calib.ratio);
            r.kv("calibration.degenerate", calib.degenerate);
            r.tables.push(peak_table(&peaks, Some(calib.c_pump)));
            let mut t = Table::new(
                "ramsey_fits",
                &[("power", "W"), ("fringe", "Hz"), ("fringe_err", "Hz"), ("envelope_rate", "1/s"), ("envelope_rate_err", "1/s")],
            );
            for (p, f) in &fits {
                t.push(vec![
                    (*p).into(),
                    rad_to_hz(f.fringe_frequency).into(),
                    rad_to_hz(f.fringe_frequency_err).into(),
                    f.envelope_rate.into(),
                    f.envelope_rate_err.into(),
                ]);
            }
            r.tables.push(t);
            if plan.protocol == Protocol::Sensitivity {
                let (sensing, grid, ideal) = plan.sensing.as_ref().expect("validated");
                let curve = sensitivity_from_spectroscopy(spec, &calib, sensing, grid).map_err(runtime)?;
                let ideal_curve = if *ideal {
                    Some(sensitivity_from_spectroscopy(get(ds, "ideal-spectroscopy")?, &calib, sensing, grid).map_err(runtime)?)
                } else {
                    None
                };
                sensitivity_report(&mut r, &curve, ideal_curve.as_ref());
            }
        }
        Protocol::Lifetime => {
            let l = plan.lifetime.as_ref().expect("validated");
            let subsample = opts.subsample.or((l.draws > 0).then_some((l.budget, l.draws)));
            lifetime_report(&mut r, get(ds, "decay-phase")?, get(ds, "decay-spectroscopy")?, subsample, plan.lab.seed)?;
        }
        Protocol::Parametric => parametric_report(&mut r, get(ds, "parametric-scan")?)?,
    }
    flags(&mut r, ds);
    Ok(r)
}

/// Analyses a single externally measured table.
pub fn analyze_import(kind: &str, ds: &SweepDataset) -> Result<Report, CliError> {
    let mut r = Report::default();
    r.kv("analysis", kind);
    r.kv("dataset", &ds.name);
    match kind {
        "relaxation" => relaxation_report(&mut r, ds)?,
        "ramsey" => {
            let hint = ds.metadata.get("ramsey_detuning_hz").and_then(|v| v.parse::<f64>().ok()).map(hz_to_rad);
            ramsey_report(&mut r, ds, hint)?
        }
        "spectroscopy" => spectroscopy_report(&mut r, ds, None)?,
        "lifetime-phase" => estimate_report(&mut r, "phase", &lifetime_from_phase(ds).map_err(schema_or_runtime)?),
        "lifetime-frequency" => {
            estimate_report(&mut r, "frequency", &lifetime_from_frequency(ds).map_err(schema_or_runtime)?)
        }
        "parametric" => parametric_report(&mut r, ds)?,
        other => return Err(CliError::Validation(format!("unknown analysis `{other}`"))),
    }
    for f in &ds.flags {
        r.kv("flag", f);
    }
    Ok(r)
}

pub const IMPORT_ANALYSES: &[&str] =
    &["relaxation", "ramsey", "spectroscopy", "lifetime-phase", "lifetime-frequency", "parametric"];

fn schema_or_runtime(e: magnonlab::Error) -> CliError {
    match e {
        magnonlab::Error::Schema(m) => CliError::Validation(m),
        other => runtime(other),
    }
}

fn relaxation_report(r: &mut Report, ds: &SweepDataset) -> Result<(), CliError> {
    let (t1, err, _) = fit_relaxation(ds).map_err(schema_or_runtime)?;
    r.num("t1_s", t1);
    r.num("t1_err_s", err);
    Ok(())
}

fn ramsey_report(r: &mut Report, ds: &SweepDataset, detuning: Option<f64>) -> Result<(), CliError> {
    let f = fit_ramsey(ds, detuning).map_err(schema_or_runtime)?;
    r.num("t2r_s", 1.0 / f.envelope_rate);
    r.num("t2r_err_s", f.envelope_rate_err / f.envelope_rate.powi(2));
    r.num("ramsey_fringe_hz", rad_to_hz(f.fringe_frequency));
    r.num("ramsey_fringe_err_hz", rad_to_hz(f.fringe_frequency_err));
    Ok(())
}

fn peak_table(peaks: &[magnonlab::analytics::SpectroPeak], c_pump: Option<f64>) -> Table {
    let mut t = Table::new(
        "lines",
        &[("power", "W"), ("n_m", "1"), ("center", "Hz"), ("center_err", "Hz"), ("sigma", "Hz"), ("amplitude", "1"), ("baseline", "1")],
    );
    for p in peaks {
        t.push(vec![
            p.power.into(),
            c_pump.map_or(f64::NAN, |c| c * p.power).into(),
            rad_to_hz(p.center).into(),
            rad_to_hz(p.center_err).into(),
            rad_to_hz(p.sigma).into(),
            p.amplitude.into(),
            p.baseline.into(),
        ]);
    }
    t
}

fn spectroscopy_report(r: &mut Report, ds: &SweepDataset, c_pump: Option<f64>) -> Result<(), CliError> {
    let peaks = fit_spectroscopy(ds).map_err(schema_or_runtime)?;
    if peaks.len() >= 2 {
        let p: Vec<f64> = peaks.iter().map(|p| p.power).collect();
        let c: Vec<f64> = peaks.iter().map(|p| rad_to_hz(p.center)).collect();
        let e: Vec<f64> = peaks.iter().map(|p| rad_to_hz(p.center_err).max(1e-9)).collect();
        let (s, se, _) = linear_slope(&p, &c, Some(&e)).map_err(runtime)?;
        r.num("line_shift_slope_hz_per_w", s);
        r.num("line_shift_slope_err_hz_per_w", se);
    }
    r.tables.push(peak_table(&peaks, c_pump));
    Ok(())
}

fn sensitivity_report(r: &mut Report, curve: &SensitivityCurve, ideal: Option<&SensitivityCurve>) {
    let finite: Vec<f64> = curve.s.iter().cloned().filter(|v| v.is_finite()).collect();
    r.num("sensitivity.threshold_snr", curve.threshold);
    r.num("sensitivity.budget_s", curve.budget);
    r.kv("sensitivity.noise_model", match curve.noise.model {
        magnonlab::analytics::NoiseModel::Empirical { .. } => "empirical",
        magnonlab::analytics::NoiseModel::Binomial { .. } => "binomial",
    });
    r.kv("sensitivity.resolved_points", format!("{}/{}", finite.len(), curve.s.len()));
    if !finite.is_empty() {
        r.num("sensitivity.s_min", finite.iter().cloned().fold(f64::INFINITY, f64::min));
        r.num("sensitivity.s_max", finite.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    }
    let mut cols = vec![("n_m", "1"), ("s", "magnons/sqrt(Hz)"), ("resolved", "1"), ("extrapolated", "1")];
    if ideal.is_some() {
        cols.push(("s_ideal", "magnons/sqrt(Hz)"));
    }
    let mut t = Table::new("sensitivity", &cols);
    for i in 0..curve.n_m.len() {
        let mut row: Vec<Cell> =
            vec![curve.n_m[i].into(), curve.s[i].into(), curve.resolved[i].into(), curve.extrapolated[i].into()];
        if let Some(c) = ideal {
            row.push(c.s[i].into());
        }
        t.push(row);
    }
    r.tables.push(t);
}

fn estimate_report(r: &mut Report, method: &str, e: &LifetimeEstimate) {
    r.num(&format!("tau_{method}_s"), e.tau);
    r.num(&format!("tau_{method}_err_s"), e.tau_err);
    for f in &e.flags {
        r.kv(&format!("flag.{method}"), f);
    }
    let unit = if method == "phase" { "rad" } else { "Hz" };
    let mut t = Table::new(&format!("{method}_track"), &[("sense_time", "s"), ("value", unit), ("err", unit)]);
    let scale = |v: f64| if method == "phase" { v } else { rad_to_hz(v) };
    for ((&time, &v), &err) in e.times.iter().zip(&e.values).zip(&e.errors) {
        t.push(vec![time.into(), scale(v).into(), scale(err).into()]);
    }
    r.tables.push(t);
}

fn spread(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

/// Median and half the 16-84 % range, which stay meaningful when a few
/// subsets give runaway fits.
fn robust_spread(v: &[f64]) -> (f64, f64) {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let x = p * (s.len() - 1) as f64;
        let (i, f) = (x.floor() as usize, x.fract());
        s[i] + f * (s[(i + 1).min(s.len() - 1)] - s[i])
    };
    (q(0.5), 0.5 * (q(0.84) - q(0.16)))
}

fn lifetime_report(
    r: &mut Report,
    phase: &SweepDataset,
    freq: &SweepDataset,
    subsample: Option<(f64, usize)>,
    seed: u64,
) -> Result<(), CliError> {
    let lp = lifetime_from_phase(phase).map_err(schema_or_runtime)?;
    let lf = lifetime_from_frequency(freq).map_err(schema_or_runtime)?;
    estimate_report(r, "phase", &lp);
    estimate_report(r, "frequency", &lf);
    let joint = (lp.tau_err.powi(2) + lf.tau_err.powi(2)).sqrt();
    r.num("tau_difference_sigma", (lp.tau - lf.tau).abs() / joint);
    let Some((budget, draws)) = subsample else {
        return Ok(());
    };
    r.num("subsample.budget_s", budget);
    r.kv("subsample.draws", draws);
    let mut t = Table::new("subsample", &[("draw", "1"), ("tau_phase", "s"), ("tau_frequency", "s")]);
    let (mut tp, mut tf) = (Vec::new(), Vec::new());
    for k in 0..draws {
        let fit = |ds: &SweepDataset, stream: u64, f: fn(&SweepDataset) -> magnonlab::Result<LifetimeEstimate>| {
            subsample_time_budget(ds, budget, derive_stream_seed(seed, stream, k as u64))
                .map_err(schema_or_runtime)
                .map(|sub| f(&sub).map(|e| e.tau).unwrap_or(f64::NAN))
        };
        let a = fit(phase, 7, lifetime_from_phase)?;
        let b = fit(freq, 8, lifetime_from_frequency)?;
        if a.is_finite() {
            tp.push(a);
        }
        if b.is_finite() {
            tf.push(b);
        }
        t.push(vec![k.into(), a.into(), b.into()]);
    }
    for (name, v) in [("phase", &tp), ("frequency", &tf)] {
        r.kv(&format!("subsample.{name}_fits"), format!("{}/{draws}", v.len()));
        if v.len() >= 2 {
            let (m, sd) = spread(v);
            let (med, half) = robust_spread(v);
            r.num(&format!("subsample.{name}_mean_s"), m);
            r.num(&format!("subsample.{name}_spread_s"), sd);
            r.num(&format!("subsample.{name}_median_s"), med);
            r.num(&format!("subsample.{name}_robust_spread_s"), half);
            // Spread scaled to one second of acquisition.
            r.num(&format!("subsample.{name}_s_per_sqrt_hz"), half * budget.sqrt());
        }
        if v.len() * 10 < draws * 9 {
            r.kv(&format!("flag.subsample.{name}"), "fewer than 90% of subsets gave a lifetime fit");
        }
    }
    r.tables.push(t);
    Ok(())
}

fn parametric_report(r: &mut Report, ds: &SweepDataset) -> Result<(), CliError> {
    let ex = extract_kappa_m_from_scan(ds).map_err(schema_or_runtime)?;
    let mut t = Table::new(
        "purcell",
        &[
            ("omega_qm_setting", "Hz"),
            ("kappa_m", "Hz"),
            ("kappa_m_err", "Hz"),
            ("omega_qm", "Hz"),
            ("omega_qm_err", "Hz"),
            ("induced_rate", "1/s"),
            ("induced_rate_err", "1/s"),
            ("induced_lifetime", "s"),
            ("low_confidence", "1"),
        ],
    );
    let mut rates = Table::new("decay_rates", &[("omega_qm_setting", "Hz"), ("delta", "Hz"), ("rate", "1/s"), ("rate_err", "1/s")]);
    for e in &ex {
        t.push(vec![
            e.omega_axis.into(),
            rad_to_hz(e.kappa_m).into(),
            rad_to_hz(e.kappa_m_err).into(),
            rad_to_hz(e.omega_qm).into(),
            rad_to_hz(e.omega_qm_err).into(),
            e.peak_rate.into(),
            e.peak_rate_err.into(),
            (1.0 / e.peak_rate).into(),
            e.low_confidence.into(),
        ]);
        for ((d, rate), err) in e.deltas.iter().zip(&e.rates).zip(&e.rate_errs) {
            rates.push(vec![e.omega_axis.into(), rad_to_hz(*d).into(), (*rate).into(), (*err).into()]);
        }
        for f in &e.flags {
            r.kv(&format!("flag.omega_{:e}", e.omega_axis), f);
        }
    }
    // Induced rate per Ω² relative to the first setting; 1 for Ω² scaling.
    if let Some(first) = ex.iter().find(|e| e.omega_axis > 0.0) {
        for e in ex.iter().filter(|e| e.omega_axis > 0.0) {
            let rel = (e.peak_rate / e.omega_axis.powi(2)) / (first.peak_rate / first.omega_axis.powi(2));
            r.num(&format!("omega_squared_scaling.{:e}", e.omega_axis), rel);
        }
    }
    r.tables.push(t);
    r.tables.push(rates);
    Ok(())
}
