use magnonlab::system::{derived_chi_qm, dispersive_hamiltonian, qubit_magnon_space, DISPERSIVE_GUARD};
use magnonlab::units::{khz, mhz, rad_to_hz};
use magnonlab::{PumpSpec, SystemParams};

#[test]
fn hundred_magnons_shift_qubit_by_6_7_mhz() {
    let p = SystemParams::reference();
    assert!((rad_to_hz(p.chi_qm * 100.0) + 6.70e6).abs() < 1.0);
    assert!((PumpSpec::magnon_drive(5e-8, 2e9).magnon_number() - 100.0).abs() < 1e-9);
}

#[test]
fn reference_couplings_reproduce_cross_kerr() {
    let p = SystemParams::reference();
    let ratio = (p.g_mc / p.delta_mc()).abs();
    assert!((ratio - (67.0f64 / 1000.0).sqrt()).abs() < 1e-12);
    assert!((ratio - 0.2588).abs() < 1e-4);
    assert!(ratio < DISPERSIVE_GUARD);
    let chi = derived_chi_qm(p.g_mc, p.delta_mc(), p.chi_qc).unwrap();
    assert!((chi - p.chi_qm).abs() <= 1e-9 * khz(67.0));
    assert!(derived_chi_qm(p.g_mc, 0.0, p.chi_qc).is_err());
}

#[test]
fn dispersive_levels_carry_the_stark_shift() {
    let p = SystemParams::reference();
    let space = qubit_magnon_space(4).unwrap();
    let h = dispersive_hamiltonian(&p, &space).unwrap();
    let e = |q: usize, m: usize| h.matrix()[(space.basis_index(&[q, m]).unwrap(), space.basis_index(&[q, m]).unwrap())].re;
    let gap = |m: usize| e(1, m) - e(0, m);
    for m in 1..4 {
        assert!((gap(m) - gap(0) - p.chi_qm * m as f64).abs() < 1e-6 * mhz(1.0));
    }
}

#[test]
fn ideal_variant_is_valid_and_lossless() {
    let p = SystemParams::reference().ideal();
    p.validate().unwrap();
    assert_eq!(p.gamma1(), 0.0);
    assert_eq!(p.gamma2_0, 0.0);
    let bad = SystemParams { t1: f64::NAN, ..SystemParams::reference() };
    assert!(bad.validate().is_err());
    let bad = SystemParams { kappa_m: -1.0, ..SystemParams::reference() };
    assert!(bad.validate().is_err());
}
