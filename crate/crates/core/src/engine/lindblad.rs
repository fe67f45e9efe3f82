use nalgebra::DMatrix;

use super::density::{trace_product, DensityMatrix, TRACE_TOL};
use super::operator::Operator;
use super::space::ModeKind;
use crate::error::{Error, Result};
use crate::C64;

/// Dissipator √rate · L entering as rate · D[L]ρ.
#[derive(Debug, Clone)]
pub struct CollapseTerm {
    pub op: Operator,
    pub rate: f64,
}

impl CollapseTerm {
    pub fn new(op: Operator, rate: f64) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "collapse rate must be finite and non-negative, got {rate}"
            )));
        }
        Ok(Self { op, rate })
    }

    /// Pure dephasing at rate γ_φ: collapse √(γ_φ/2)·σ_z, so coherences
    /// decay as e^{−γ_φ t}. `number` is the qubit number operator.
    pub fn dephasing(number: &Operator, gamma_phi: f64) -> Result<Self> {
        let id = Operator::identity(number.space());
        let sigma_z = &id - &number.scale_re(2.0);
        Self::new(sigma_z, gamma_phi / 2.0)
    }
}

/// Real amplitude a(t) of a drive term, in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub enum Envelope {
    Constant(f64),
    /// `values[i]` holds on `[edges[i], edges[i + 1])`; the last value also
    /// holds at the final edge.
    Piecewise { edges: Vec<f64>, values: Vec<f64> },
    Gaussian {
        amplitude: f64,
        center: f64,
        sigma: f64,
    },
    /// amplitude · e^{−rate (t − start)} for t ≥ start, `amplitude` before.
    Exponential {
        amplitude: f64,
        rate: f64,
        start: f64,
    },
    /// Gaussian pulse whose amplitude is zero outside `[start, stop]`.
    TruncatedGaussian {
        amplitude: f64,
        center: f64,
        sigma: f64,
        start: f64,
        stop: f64,
    },
    /// Linear interpolation between samples.
    Sampled { times: Vec<f64>, values: Vec<f64> },
}

impl Envelope {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Envelope::Constant(a) => *a,
            Envelope::Piecewise { edges, values } => {
                let idx = match edges.iter().rposition(|&e| e <= t) {
                    Some(i) => i.min(values.len() - 1),
                    None => 0,
                };
                values[idx]
            }
            Envelope::Gaussian {
                amplitude,
                center,
                sigma,
            } => amplitude * (-0.5 * ((t - center) / sigma).powi(2)).exp(),
            Envelope::Exponential {
                amplitude,
                rate,
                start,
            } => amplitude * (-rate * (t - start).max(0.0)).exp(),
            Envelope::TruncatedGaussian {
                amplitude,
                center,
                sigma,
                start,
                stop,
            } => {
                if t < *start || t > *stop {
                    0.0
                } else {
                    amplitude * (-0.5 * ((t - center) / sigma).powi(2)).exp()
                }
            }
            Envelope::Sampled { times, values } => {
                if t <= times[0] {
                    return values[0];
                }
                let last = times.len() - 1;
                if t >= times[last] {
                    return values[last];
                }
                let i = times.partition_point(|&x| x <= t) - 1;
                let f = (t - times[i]) / (times[i + 1] - times[i]);
                values[i] + f * (values[i + 1] - values[i])
            }
        }
    }

    /// Checks the envelope is finite and defined on `[t0, t1]`.
    pub fn validate(&self, t0: f64, t1: f64) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(format!("drive envelope: {msg}")));
        match self {
            Envelope::Piecewise { edges, values } => {
                if edges.len() != values.len() + 1 || values.is_empty() {
                    return bad("piecewise envelope needs len(edges) = len(values) + 1");
                }
                if edges.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("piecewise edges must increase");
                }
                if edges[0] > t0 || edges[edges.len() - 1] < t1 {
                    return bad("piecewise envelope does not cover the evolution window");
                }
            }
            Envelope::Sampled { times, values } => {
                if times.len() != values.len() || times.len() < 2 {
                    return bad("sampled envelope needs matching time/value arrays");
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("sample times must increase");
                }
                if times[0] > t0 || times[times.len() - 1] < t1 {
                    return bad("sampled envelope does not cover the evolution window");
                }
            }
            Envelope::Gaussian { sigma, .. } | Envelope::TruncatedGaussian { sigma, .. } => {
                if !(*sigma > 0.0) {
                    return bad("gaussian width must be positive");
                }
            }
            _ => {}
        }
        if !self.value(t0).is_finite() || !self.value(t1).is_finite() {
            return bad("non-finite amplitude");
        }
        Ok(())
    }

    /// Upper bound of |a(t)| on `[t0, t1]`.
    pub fn max_abs(&self, t0: f64, t1: f64) -> f64 {
        match self {
            Envelope::Constant(a) => a.abs(),
            Envelope::Piecewise { values, .. } | Envelope::Sampled { values, .. } => {
                values.iter().fold(0.0, |m, v| m.max(v.abs()))
            }
            Envelope::Gaussian { amplitude, .. } | Envelope::TruncatedGaussian { amplitude, .. } => {
                amplitude.abs()
            }
            Envelope::Exponential { .. } => self.value(t0).abs().max(self.value(t1).abs()),
        }
    }
}

/// H_d(t) = a(t) · [e^{i(ωt+φ)} A + e^{−i(ωt+φ)} A†].
#[derive(Debug, Clone)]
pub struct DriveTerm {
    pub op: Operator,
    pub envelope: Envelope,
    pub carrier: f64,
    pub phase: f64,
}

impl DriveTerm {
    pub fn new(op: Operator, envelope: Envelope) -> Self {
        Self {
            op,
            envelope,
            carrier: 0.0,
            phase: 0.0,
        }
    }
}

/// Static Hermitian part plus optional drives.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    pub static_part: Operator,
    pub drives: Vec<DriveTerm>,
}

impl From<Operator> for Hamiltonian {
    fn from(op: Operator) -> Self {
        Self {
            static_part: op,
            drives: Vec::new(),
        }
    }
}

impl Hamiltonian {
    pub fn with_drive(mut self, drive: DriveTerm) -> Self {
        self.drives.push(drive);
        self
    }
}

#[derive(Debug, Clone)]
pub struct EvolveOptions {
    pub t0: f64,
    pub t1: f64,
    /// Maximum step; each record interval is split into equal sub-steps ≤ dt.
    pub dt: f64,
    /// Times at which to record. `None` records every step.
    pub record_times: Option<Vec<f64>>,
    pub observables: Vec<Operator>,
    pub keep_states: bool,
    /// Maximum population allowed in the top Fock level of bosonic modes.
    pub tail_tolerance: Option<f64>,
    /// Upper bound on dt · (fastest rate).
    pub step_limit: f64,
}

impl EvolveOptions {
    pub fn new(t0: f64, t1: f64, dt: f64) -> Self {
        Self {
            t0,
            t1,
            dt,
            record_times: None,
            observables: Vec::new(),
            keep_states: false,
            tail_tolerance: Some(1e-6),
            step_limit: 0.1,
        }
    }

    pub fn record_at(mut self, times: Vec<f64>) -> Self {
        self.record_times = Some(times);
        self
    }

    pub fn observe(mut self, ops: Vec<Operator>) -> Self {
        self.observables = ops;
        self
    }

    pub fn keep_states(mut self, keep: bool) -> Self {
        self.keep_states = keep;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `expectations[k][j]` is ⟨O_j⟩ at `times[k]`.
    pub expectations: Vec<Vec<C64>>,
    pub states: Option<Vec<DensityMatrix>>,
    pub final_state: DensityMatrix,
    pub max_trace_drift: f64,
    pub steps: usize,
}

impl Trajectory {
    /// Time series of observable `j`.
    pub fn series(&self, j: usize) -> Vec<C64> {
        self.expectations.iter().map(|row| row[j]).collect()
    }

    pub fn real_series(&self, j: usize) -> Vec<f64> {
        self.expectations.iter().map(|row| row[j].re).collect()
    }
}

fn row_sum_norm(m: &DMatrix<C64>) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Gershgorin estimate of the fastest rate the integrator must resolve:
/// the spectral spread of H plus drive and dissipator magnitudes.
pub fn fastest_rate(h: &Hamiltonian, collapses: &[CollapseTerm], t0: f64, t1: f64) -> f64 {
    let m = h.static_part.matrix();
    let n = m.nrows();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let c = m[(i, i)].re;
        let r: f64 = (0..n).filter(|&j| j != i).map(|j| m[(i, j)].norm()).sum();
        lo = lo.min(c - r);
        hi = hi.max(c + r);
    }
    let mut rate = hi - lo;
    for d in &h.drives {
        let a = d.op.matrix();
        rate += 2.0 * d.envelope.max_abs(t0, t1) * (row_sum_norm(a) + row_sum_norm(&a.adjoint()));
        rate += d.carrier.abs();
    }
    for c in collapses {
        let l = c.op.matrix();
        rate += c.rate * row_sum_norm(&(l.adjoint() * l));
    }
    rate
}

struct Generator {
    h0_eff: DMatrix<C64>,
    drives: Vec<(DMatrix<C64>, DMatrix<C64>, Envelope, f64, f64)>,
    jumps: Vec<(DMatrix<C64>, DMatrix<C64>, f64)>,
}

impl Generator {
    fn new(h: &Hamiltonian, collapses: &[CollapseTerm]) -> Self {
        let n = h.static_part.dim();
        let mut k = DMatrix::<C64>::zeros(n, n);
        let mut jumps = Vec::with_capacity(collapses.len());
        for c in collapses {
            if c.rate == 0.0 {
                continue;
            }
            let l = c.op.matrix().clone();
            let ld = l.adjoint();
            k += (&ld * &l) * C64::new(c.rate, 0.0);
            jumps.push((l, ld, c.rate));
        }
        let h0_eff = h.static_part.matrix() - k * C64::new(0.0, 0.5);
        let drives = h
            .drives
            .iter()
            .map(|d| {
                let a = d.op.matrix().clone();
                let ad = a.adjoint();
                (a, ad, d.envelope.clone(), d.carrier, d.phase)
            })
            .collect();
        Self {
            h0_eff,
            drives,
            jumps,
        }
    }

    fn heff(&self, t: f64) -> DMatrix<C64> {
        if self.drives.is_empty() {
            return self.h0_eff.clone();
        }
        let mut h = self.h0_eff.clone();
        for (a, ad, env, w, phi) in &self.drives {
            let amp = env.value(t);
            if amp == 0.0 {
                continue;
            }
            let rot = C64::from_polar(amp, w * t + phi);
            h += a * rot + ad * rot.conj();
        }
        h
    }

    /// dρ/dt = M + M† + Σ γ L ρ L†, with M = −i H_eff ρ.
    fn rhs(&self, heff: &DMatrix<C64>, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let m = (heff * rho) * C64::new(0.0, -1.0);
        let mut out = &m + m.adjoint();
        for (l, ld, rate) in &self.jumps {
            out += (l * rho * ld) * C64::new(*rate, 0.0);
        }
        out
    }

    fn rk4_step(&self, rho: &DMatrix<C64>, t: f64, dt: f64) -> DMatrix<C64> {
        let h_start = self.heff(t);
        let h_mid = self.heff(t + 0.5 * dt);
        let h_end = self.heff(t + dt);
        let half = C64::new(0.5 * dt, 0.0);
        let full = C64::new(dt, 0.0);
        let k1 = self.rhs(&h_start, rho);
        let k2 = self.rhs(&h_mid, &(rho + &k1 * half));
        let k3 = self.rhs(&h_mid, &(rho + &k2 * half));
        let k4 = self.rhs(&h_end, &(rho + &k3 * full));
        let next = rho + (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(dt / 6.0, 0.0);
        // The M + M† form is only the Lindblad generator on Hermitian input;
        // rounding leaks an anti-Hermitian part that it would let grow and
        // feed into the trace, so project it out every step.
        (&next + next.adjoint()) * C64::new(0.5, 0.0)
    }
}

/// Fixed-step RK4 integration of dρ/dt = −i[H, ρ] + Σ_k γ_k D[L_k]ρ.
pub fn evolve_lindblad(
    rho0: &DensityMatrix,
    hamiltonian: &Hamiltonian,
    collapses: &[CollapseTerm],
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    let space = rho0.space().clone();
    let same = |op: &Operator| **op.space() == *space;
    if !same(&hamiltonian.static_part)
        || !hamiltonian.drives.iter().all(|d| same(&d.op))
        || !collapses.iter().all(|c| same(&c.op))
        || !opts.observables.iter().all(same)
    {
        return Err(Error::SpaceMismatch);
    }
    hamiltonian.static_part.ensure_hermitian()?;
    if !(opts.dt > 0.0) || !opts.dt.is_finite() {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {}", opts.dt)));
    }
    if !(opts.t1 >= opts.t0) {
        return Err(Error::InvalidArgument("tspan must satisfy t1 >= t0".into()));
    }
    for d in &hamiltonian.drives {
        d.envelope.validate(opts.t0, opts.t1)?;
    }
    let rate = fastest_rate(hamiltonian, collapses, opts.t0, opts.t1);
    if opts.dt * rate > opts.step_limit {
        return Err(Error::StepTooLarge {
            product: opts.dt * rate,
            limit: opts.step_limit,
        });
    }

    // Record schedule.
    let record: Vec<f64> = match &opts.record_times {
        Some(ts) => {
            if ts.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidArgument(
                    "record times must be strictly increasing".into(),
                ));
            }
            if ts.first().is_some_and(|&t| t < opts.t0) || ts.last().is_some_and(|&t| t > opts.t1)
            {
                return Err(Error::InvalidArgument(
                    "record times must lie inside the evolution window".into(),
                ));
            }
            ts.clone()
        }
        None => {
            let n = ((opts.t1 - opts.t0) / opts.dt).ceil().max(1.0) as usize;
            let h = (opts.t1 - opts.t0) / n as f64;
            (0..=n).map(|k| opts.t0 + k as f64 * h).collect()
        }
    };

    let tails: Vec<(String, Vec<usize>)> = match opts.tail_tolerance {
        Some(_) => {
            let mi: Vec<(usize, &super::space::Mode)> = space
                .modes()
                .iter()
                .enumerate()
                .filter(|(_, m)| m.kind == ModeKind::Boson && m.dim >= 2)
                .collect();
            mi.into_iter()
                .map(|(i, m)| {
                    let idx = (0..space.total_dim())
                        .filter(|&k| space.levels_of(k)[i] == m.dim - 1)
                        .collect();
                    (m.label.clone(), idx)
                })
                .collect()
        }
        None => Vec::new(),
    };

    let gen = Generator::new(hamiltonian, collapses);
    let mut rho = rho0.matrix().clone();
    let mut t = opts.t0;
    let mut times = Vec::with_capacity(record.len());
    let mut expectations = Vec::with_capacity(record.len());
    let mut states = opts.keep_states.then(Vec::new);
    let mut max_drift: f64 = 0.0;
    let mut steps = 0usize;

    let record_here = |rho: &DMatrix<C64>,
                           t: f64,
                           times: &mut Vec<f64>,
                           expectations: &mut Vec<Vec<C64>>,
                           states: &mut Option<Vec<DensityMatrix>>|
     -> Result<()> {
        if let Some(tol) = opts.tail_tolerance {
            for (label, idx) in &tails {
                let pop: f64 = idx.iter().map(|&k| rho[(k, k)].re).sum();
                if pop > tol {
                    return Err(Error::TruncationTail {
                        mode: label.clone(),
                        population: pop,
                        tolerance: tol,
                    });
                }
            }
        }
        times.push(t);
        expectations.push(
            opts.observables
                .iter()
                .map(|o| trace_product(rho, o.matrix()))
                .collect(),
        );
        if let Some(s) = states.as_mut() {
            s.push(DensityMatrix::from_matrix_unchecked(space.clone(), rho.clone())?);
        }
        Ok(())
    };

    let check_trace = |rho: &DMatrix<C64>, t: f64, max_drift: &mut f64| -> Result<()> {
        let drift = (rho.trace() - C64::new(1.0, 0.0)).norm();
        *max_drift = max_drift.max(drift);
        let tol = TRACE_TOL * (1.0 + (t - opts.t0) * rate);
        if drift > tol || !drift.is_finite() {
            return Err(Error::TraceDrift {
                max_drift: *max_drift,
                time: t,
                tolerance: tol,
            });
        }
        Ok(())
    };

    for &target in &record {
        let span = target - t;
        if span > 0.0 {
            let n = (span / opts.dt).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for k in 0..n {
                let ts = t + k as f64 * h;
                rho = gen.rk4_step(&rho, ts, h);
                steps += 1;
                check_trace(&rho, ts + h, &mut max_drift)?;
            }
            t = target;
        }
        record_here(&rho, t, &mut times, &mut expectations, &mut states)?;
    }
    if opts.t1 > t {
        let span = opts.t1 - t;
        let n = (span / opts.dt).ceil().max(1.0) as usize;
        let h = span / n as f64;
        for k in 0..n {
            let ts = t + k as f64 * h;
            rho = gen.rk4_step(&rho, ts, h);
            steps += 1;
            check_trace(&rho, ts + h, &mut max_drift)?;
        }
    }

    Ok(Trajectory {
        times,
        expectations,
        states,
        final_state: DensityMatrix::from_matrix_unchecked(space, rho)?,
        max_trace_drift: max_drift,
        steps,
    })
}
