//! Device parameters and Hamiltonian builders for the qubit–cavity–magnon
//! system.
//!
//! Mode labels are fixed: `"q"` (transmon), `"c"` (cavity), `"m"` (Kittel
//! magnon mode). All frequencies are angular (rad/s).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::engine::{build_mode_operators, ModeKind, ModeSpace, Operator};
use crate::error::{Error, Result};
use crate::units::{ghz, khz, mhz};
use crate::C64;

pub const QUBIT: &str = "q";
pub const CAVITY: &str = "c";
pub const MAGNON: &str = "m";

/// Largest |g/Δ| accepted by the dispersive builders.
pub const DISPERSIVE_GUARD: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega_c: f64,
    pub omega_m: f64,
    pub omega_q: f64,
    /// Transmon anharmonicity (negative).
    pub alpha: f64,
    pub g_qc: f64,
    pub g_mc: f64,
    /// Cross-Kerr shifts per excitation. Signed: a negative `chi_qm` pulls
    /// the qubit to lower frequency as magnons are added.
    pub chi_qc: f64,
    pub chi_qm: f64,
    pub chi_mc: f64,
    /// Magnon energy decay rate.
    pub kappa_m: f64,
    pub t1: f64,
    pub t2r: f64,
    pub t2e: f64,
    /// Bare qubit pure-dephasing rate at zero magnon population.
    pub gamma2_0: f64,
}

impl SystemParams {
    /// Device values of the reference experiment. Couplings and the
    /// anharmonicity are not measured; they are chosen to reproduce the
    /// quoted cross-Kerr shifts.
    pub fn reference() -> Self {
        let omega_q = ghz(3.87);
        let omega_c = ghz(4.56);
        let omega_m = ghz(4.74);
        let chi_qc = -mhz(1.0);
        let chi_qm = -khz(67.0);
        let alpha = -mhz(200.0);
        let delta_qc = omega_q - omega_c;
        let delta_mc = omega_m - omega_c;
        // χ_qc = 2 g² α / (Δ (Δ + α))
        let g_qc = (chi_qc * delta_qc * (delta_qc + alpha) / (2.0 * alpha)).sqrt();
        let g_mc = (chi_qm / chi_qc).sqrt() * delta_mc.abs();
        let t1 = 2.78e-6;
        let t2r = 4e-6;
        Self {
            omega_c,
            omega_m,
            omega_q,
            alpha,
            g_qc,
            g_mc,
            chi_qc,
            chi_qm,
            chi_mc: 0.0,
            kappa_m: mhz(4.81),
            t1,
            t2r,
            t2e: 5e-6,
            gamma2_0: default_gamma2_0(t1, t2r),
        }
    }

    pub fn delta_qc(&self) -> f64 {
        self.omega_q - self.omega_c
    }

    pub fn delta_mc(&self) -> f64 {
        self.omega_m - self.omega_c
    }

    /// Finite values, non-negative rates and T2R ≤ 2 T1. Coherence times may
    /// be infinite (ideal qubit) but not NaN.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega_c", self.omega_c),
            ("omega_m", self.omega_m),
            ("omega_q", self.omega_q),
            ("alpha", self.alpha),
            ("g_qc", self.g_qc),
            ("g_mc", self.g_mc),
            ("chi_qc", self.chi_qc),
            ("chi_qm", self.chi_qm),
            ("chi_mc", self.chi_mc),
            ("kappa_m", self.kappa_m),
            ("gamma2_0", self.gamma2_0),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} is not finite")));
            }
        }
        for (name, v) in [("t1", self.t1), ("t2r", self.t2r), ("t2e", self.t2e)] {
            if v.is_nan() || v == 0.0 {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        for (name, v) in [
            ("kappa_m", self.kappa_m),
            ("gamma2_0", self.gamma2_0),
            ("t1", self.t1),
            ("t2r", self.t2r),
            ("t2e", self.t2e),
        ] {
            if v < 0.0 {
                return Err(Error::InvalidArgument(format!("{name} must be non-negative")));
            }
        }
        if self.t1.is_finite() && self.t2r > 2.0 * self.t1 * (1.0 + 1e-9) {
            return Err(Error::InvalidArgument(format!(
                "T2R = {:.3e} s exceeds 2 T1 = {:.3e} s",
                self.t2r,
                2.0 * self.t1
            )));
        }
        Ok(())
    }

    /// |g/Δ| below [`DISPERSIVE_GUARD`] for both couplings.
    pub fn check_dispersive(&self) -> Result<()> {
        for (name, g, d) in [
            ("g_qc/delta_qc", self.g_qc, self.delta_qc()),
            ("g_mc/delta_mc", self.g_mc, self.delta_mc()),
        ] {
            if g == 0.0 {
                continue;
            }
            let ratio = (g / d).abs();
            if !(ratio < DISPERSIVE_GUARD) {
                return Err(Error::DispersiveValidity(format!(
                    "|{name}| = {ratio:.3} is not below {DISPERSIVE_GUARD}"
                )));
            }
        }
        Ok(())
    }

    /// Rate 1/T1, zero when T1 is infinite.
    pub fn gamma1(&self) -> f64 {
        if self.t1.is_finite() && self.t1 > 0.0 {
            1.0 / self.t1
        } else {
            0.0
        }
    }

    /// Ideal-qubit variant: no intrinsic dephasing or relaxation.
    pub fn ideal(&self) -> Self {
        Self {
            t1: f64::INFINITY,
            t2r: f64::INFINITY,
            t2e: f64::INFINITY,
            gamma2_0: 0.0,
            ..self.clone()
        }
    }
}

/// Pure dephasing implied by a Ramsey time: 1/T2R − 1/(2 T1), floored at 0.
pub fn default_gamma2_0(t1: f64, t2r: f64) -> f64 {
    (1.0 / t2r - 0.5 / t1).max(0.0)
}

/// Magnon pump and parametric conversion settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PumpSpec {
    /// Applied power (W).
    pub power: f64,
    /// Magnons per watt.
    pub c_pump: f64,
    pub drive_frequency: f64,
    pub omega_qm: f64,
    pub delta: f64,
}

impl PumpSpec {
    pub fn magnon_drive(power: f64, c_pump: f64) -> Self {
        Self {
            power,
            c_pump,
            drive_frequency: 0.0,
            omega_qm: 0.0,
            delta: 0.0,
        }
    }

    pub fn parametric(omega_qm: f64, delta: f64) -> Self {
        Self {
            power: 0.0,
            c_pump: 0.0,
            drive_frequency: 0.0,
            omega_qm,
            delta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.power >= 0.0) {
            return Err(Error::InvalidArgument("pump power must be >= 0".into()));
        }
        if !(self.omega_qm >= 0.0) {
            return Err(Error::InvalidArgument("Omega_qm must be >= 0".into()));
        }
        Ok(())
    }

    /// Steady-state magnon occupation n̄ = c_pump · P.
    pub fn magnon_number(&self) -> f64 {
        self.c_pump * self.power
    }

    /// Pump frequency activating the conversion process, |ω_q − ω_m|/2.
    pub fn conversion_frequency(params: &SystemParams) -> f64 {
        (params.omega_q - params.omega_m).abs() / 2.0
    }
}

fn check_finite(params: &SystemParams) -> Result<()> {
    params.validate()
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// ω_c c†c + ω_m m†m + ω_q q†q + (α/2) q†q†qq + g_mc(m†c + m c†) + g_qc(q†c + q c†).
///
/// The space must contain exactly the modes `q` (≥ 3 levels), `c` and `m`.
pub fn full_hamiltonian(params: &SystemParams, space: &Arc<ModeSpace>) -> Result<Operator> {
    check_finite(params)?;
    if space.modes().len() != 3
        || !space.contains(QUBIT)
        || !space.contains(CAVITY)
        || !space.contains(MAGNON)
    {
        return Err(Error::InvalidSpace(
            "full Hamiltonian needs exactly the modes q, c and m".into(),
        ));
    }
    let qdim = space.modes()[space.index_of(QUBIT)?].dim;
    if qdim < 3 {
        return Err(Error::InvalidSpace(
            "full Hamiltonian needs at least 3 transmon levels".into(),
        ));
    }
    let (q, nq) = build_mode_operators(space, QUBIT)?;
    let (cav, nc) = build_mode_operators(space, CAVITY)?;
    let (m, nm) = build_mode_operators(space, MAGNON)?;
    let qd = q.adjoint();
    let cd = cav.adjoint();
    let md = m.adjoint();
    let kerr = &(&qd * &qd) * &(&q * &q);
    let mut h = nc.scale_re(params.omega_c);
    h = &h + &nm.scale_re(params.omega_m);
    h = &h + &nq.scale_re(params.omega_q);
    h = &h + &kerr.scale_re(params.alpha / 2.0);
    h = &h + &(&(&md * &cav) + &(&m * &cd)).scale_re(params.g_mc);
    h = &h + &(&(&qd * &cav) + &(&q * &cd)).scale_re(params.g_qc);
    h.ensure_hermitian()?;
    Ok(h)
}

/// Number-basis diagonal Hamiltonian with all three cross-Kerr terms. Modes
/// absent from `space` are dropped together with their terms.
pub fn dispersive_hamiltonian(params: &SystemParams, space: &Arc<ModeSpace>) -> Result<Operator> {
    check_finite(params)?;
    params.check_dispersive()?;
    let number = |label: &str| -> Result<Option<Operator>> {
        if space.contains(label) {
            Ok(Some(build_mode_operators(space, label)?.1))
        } else {
            Ok(None)
        }
    };
    for mode in space.modes() {
        if ![QUBIT, CAVITY, MAGNON].contains(&mode.label.as_str()) {
            return Err(Error::UnknownMode(mode.label.clone()));
        }
    }
    let nq = number(QUBIT)?;
    let nc = number(CAVITY)?;
    let nm = number(MAGNON)?;
    let mut h = Operator::zeros(space);
    if let Some(nc) = &nc {
        h = &h + &nc.scale_re(params.omega_c);
    }
    if let Some(nm) = &nm {
        h = &h + &nm.scale_re(params.omega_m);
    }
    if let Some(nq) = &nq {
        h = &h + &nq.scale_re(params.omega_q);
        h = &h + &(nq * nq).scale_re(params.alpha / 2.0);
        if let Some(nc) = &nc {
            h = &h + &(nq * nc).scale_re(params.chi_qc);
        }
        if let Some(nm) = &nm {
            h = &h + &(nq * nm).scale_re(params.chi_qm);
        }
    }
    if let (Some(nm), Some(nc)) = (&nm, &nc) {
        h = &h + &(nm * nc).scale_re(params.chi_mc);
    }
    Ok(h)
}

/// Rotating-frame conversion interaction (Ω_qm/2)(q†m + q m†) + δ m†m.
pub fn parametric_interaction(
    omega_qm: f64,
    delta: f64,
    space: &Arc<ModeSpace>,
) -> Result<Operator> {
    if !omega_qm.is_finite() || !delta.is_finite() {
        return Err(Error::InvalidArgument("non-finite parametric settings".into()));
    }
    let (q, _) = build_mode_operators(space, QUBIT)?;
    let (m, nm) = build_mode_operators(space, MAGNON)?;
    let exchange = &(&q.adjoint() * &m) + &(&q * &m.adjoint());
    Ok(&exchange.scale(c(omega_qm / 2.0)) + &nm.scale_re(delta))
}

/// χ_qm = (g_mc/Δ_mc)² χ_qc.
pub fn derived_chi_qm(g_mc: f64, delta_mc: f64, chi_qc: f64) -> Result<f64> {
    if delta_mc == 0.0 {
        return Err(Error::InvalidArgument(
            "magnon-cavity detuning must be non-zero".into(),
        ));
    }
    Ok((g_mc / delta_mc).powi(2) * chi_qc)
}

/// Standard `q ⊗ m` space used by protocol simulations (2-level transmon).
pub fn qubit_magnon_space(magnon_levels: usize) -> Result<Arc<ModeSpace>> {
    Ok(Arc::new(ModeSpace::from_modes(&[
        (QUBIT, 2, ModeKind::Qubit),
        (MAGNON, magnon_levels, ModeKind::Boson),
    ])?))
}

pub fn qubit_space() -> Arc<ModeSpace> {
    Arc::new(ModeSpace::single(QUBIT, 2, ModeKind::Qubit).expect("valid space"))
}
