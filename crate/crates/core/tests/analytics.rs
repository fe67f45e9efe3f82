use magnonlab::analytics::{
    calibrate_magnon_number, extract_kappa_m_from_scan, lifetime_from_frequency, parametric_qubit_decay,
    qubit_response, solve_sensitivity, NoiseModel, NoiseProfile, ResponseInterpolants, RootChoice, SensingConfig,
};
use magnonlab::protocol::{run_decay_spectroscopy, run_parametric_decay_scan, LabConfig};
use magnonlab::units::mhz;
use magnonlab::{interpolate_poly, Error, PolyFit, SystemParams};

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

/// Quadratic fit through (n, f(n)) over 0..2000, used to build response models.
fn poly(f: impl Fn(f64) -> f64) -> PolyFit {
    let n = linspace(0.0, 2000.0, 5);
    let y: Vec<f64> = n.iter().map(|&v| f(v)).collect();
    interpolate_poly(&n, &y, 2).unwrap()
}

fn constant_noise(sigma: f64, shots: usize) -> NoiseProfile {
    NoiseProfile {
        model: NoiseModel::Empirical { peak: 0.0, baseline: sigma, width: poly(|_| 1.0) },
        shots,
    }
}

#[test]
fn calibration_roots_multiply_to_kappa_squared() {
    let kappa = mhz(4.81);
    let small = calibrate_magnon_number(2.0e12, 0.3e12, kappa, 0.0, RootChoice::SmallChi).unwrap();
    let large = calibrate_magnon_number(2.0e12, 0.3e12, kappa, 0.0, RootChoice::LargeChi).unwrap();
    assert!((small.chi_qm * large.chi_qm / (kappa * kappa) - 1.0).abs() < 1e-12);
    assert!(small.chi_qm < kappa && large.chi_qm > kappa);
    // Both roots reproduce the measured ratio 2κχ/(κ² + χ²).
    for r in [&small, &large] {
        let rho = 2.0 * kappa * r.chi_qm / (kappa * kappa + r.chi_qm * r.chi_qm);
        assert!((rho - 0.15).abs() < 1e-12);
        assert!((r.c_pump * r.chi_qm - 2.0e12).abs() < 1e-3);
    }
}

#[test]
fn calibration_rejects_ratio_above_one() {
    let err = calibrate_magnon_number(1.0, 1.01, 1.0, 0.0, RootChoice::SmallChi).unwrap_err();
    assert!(matches!(err, Error::NoRealRoot { .. }));
    let d = calibrate_magnon_number(1.0, 1.0, 3.0, 0.0, RootChoice::SmallChi).unwrap();
    assert!(d.degenerate && (d.chi_qm - 3.0).abs() < 1e-12);
}

#[test]
fn response_is_a_symmetric_gaussian() {
    let interp = ResponseInterpolants { peak: poly(|n| 0.6 - 1e-4 * n), width: poly(|n| 20.0 + 0.01 * n) };
    let (n_m, w, p) = (800.0, 28.0, 0.52);
    for d in [3.0, 17.0, 60.0] {
        assert!((qubit_response(n_m + d, n_m, &interp).0 - qubit_response(n_m - d, n_m, &interp).0).abs() < 1e-12);
    }
    assert!((qubit_response(n_m, n_m, &interp).0 - p).abs() < 1e-12);
    assert!((qubit_response(n_m + w, n_m, &interp).0 - p * (-0.5f64).exp()).abs() < 1e-12);
    assert!(qubit_response(n_m, 2500.0, &interp).1);
}

#[test]
fn sensing_threshold_at_reference_budget() {
    let cfg = SensingConfig::default();
    assert!((cfg.budget() - 0.032).abs() < 1e-15);
    assert!((cfg.threshold() - 0.032f64.sqrt()).abs() < 1e-15);
    assert!((cfg.threshold() - 0.1789).abs() < 1e-4);
}

#[test]
fn halving_noise_halves_sensitivity_when_signal_is_linear() {
    // A steep peak-height slope and a wide line make P_e(n_m + S) − P_e(n_m) linear in S.
    let interp = ResponseInterpolants { peak: poly(|n| 0.1 + 2e-4 * n), width: poly(|_| 1e7) };
    let cfg = SensingConfig::default();
    let s = |sigma: f64| solve_sensitivity(500.0, &interp, &constant_noise(sigma, cfg.shots), &cfg, 1e4).unwrap().0;
    let (a, b) = (s(2e-3), s(1e-3));
    assert!((b / a - 0.5).abs() < 0.05, "{a} -> {b}");
}

#[test]
fn halving_noise_scales_centre_probe_sensitivity_by_inverse_root_two() {
    // Flat peak height: the signal at line centre is quadratic in S.
    let interp = ResponseInterpolants { peak: poly(|_| 0.5), width: poly(|_| 30.0) };
    let cfg = SensingConfig::default();
    let s = |sigma: f64| solve_sensitivity(500.0, &interp, &constant_noise(sigma, cfg.shots), &cfg, 1e4).unwrap().0;
    let (a, b) = (s(2e-4), s(1e-4));
    assert!((b / a - 0.5f64.sqrt()).abs() < 0.05, "{a} -> {b}");
}

#[test]
fn longer_budget_never_worsens_sensitivity() {
    let interp = ResponseInterpolants { peak: poly(|n| 0.6 - 1e-4 * n), width: poly(|n| 20.0 + 0.01 * n) };
    let base = SensingConfig::default();
    let double = SensingConfig { shots: 2 * base.shots, ..base };
    for noise in [
        constant_noise(0.01, base.shots),
        NoiseProfile { model: NoiseModel::Binomial { signal_baseline: 0.03 }, shots: base.shots },
    ] {
        for n_m in [0.0, 700.0, 1500.0] {
            let s1 = solve_sensitivity(n_m, &interp, &noise, &base, 1e4).unwrap().0;
            let s2 = solve_sensitivity(n_m, &interp, &noise, &double, 1e4).unwrap().0;
            assert!(s2 <= s1 + 1e-3, "n_m {n_m}: {s1} -> {s2}");
        }
    }
}

#[test]
fn weak_coupling_decay_is_lorentzian() {
    let k = mhz(4.81);
    for delta in [0.0, 0.5 * k, 2.0 * k] {
        let d = parametric_qubit_decay(delta, 0.05 * k, k).unwrap();
        // Fit the population decay rate between 20/k and 60/k.
        let (t0, t1) = (20.0 / k, 60.0 / k);
        let g = (d.population_ratio(t0) / d.population_ratio(t1)).ln() / (t1 - t0);
        assert!((g / d.rate() - 1.0).abs() < 0.01, "δ = {delta}: {g} vs {}", d.rate());
    }
    assert!(parametric_qubit_decay(0.0, 1.0, 0.0).is_err());
}

#[test]
fn flat_frequency_track_is_rejected() {
    let params = SystemParams::reference();
    let cfg = LabConfig { shots: 2000, seed: 6, ..LabConfig::default() };
    let ds = run_decay_spectroscopy(&params, 0.0, &linspace(0.0, 100e-9, 6), &linspace(-60e6, 60e6, 25), &cfg).unwrap();
    assert!(matches!(lifetime_from_frequency(&ds).unwrap_err(), Error::DegenerateData(_)));
}

#[test]
fn scan_without_conversion_has_no_induced_rate() {
    let params = SystemParams::reference();
    let cfg = LabConfig { shots: 2000, seed: 12, ..LabConfig::default() };
    let ds = run_parametric_decay_scan(&params, &[0.0], &linspace(-15e6, 15e6, 9), &linspace(0.0, 8e-6, 25), &cfg)
        .unwrap();
    let ex = &extract_kappa_m_from_scan(&ds).unwrap()[0];
    assert!(ex.low_confidence);
    assert!(ex.flags.iter().any(|f| f.contains("not significant")), "{:?}", ex.flags);
    // Every detuning decays at 1/T1 within 2σ.
    for (r, e) in ex.rates.iter().zip(&ex.rate_errs) {
        assert!((r - params.gamma1()).abs() <= 2.0 * e + 1e-3 * params.gamma1(), "{r} ± {e}");
    }
}

#[test]
fn narrow_detuning_scan_is_low_confidence() {
    let params = SystemParams::reference();
    let cfg = LabConfig { shots: 2000, seed: 13, ..LabConfig::default() };
    let ds = run_parametric_decay_scan(&params, &[0.86e6], &linspace(-1e6, 1e6, 7), &linspace(0.0, 6e-6, 25), &cfg)
        .unwrap();
    let ex = &extract_kappa_m_from_scan(&ds).unwrap()[0];
    assert!(ex.low_confidence, "{:?}", ex.flags);
}
