//! Pulse-sequence experiments producing shot-sampled datasets.
//!
//! Every run samples its points through a [`ReadoutModel`] with per-point
//! seeds derived from the master seed, so results do not depend on the
//! order in which the thread pool visits points.

mod readout;
mod schedule;
mod sweeps;

pub use readout::{sample_readout, ReadoutModel};
pub use schedule::{Element, PulseSchedule, TimedElement};
pub use sweeps::{
    decay_phase, run_decay_phase_sense, run_decay_spectroscopy, run_parametric_decay_scan,
    run_qubit_spectroscopy, run_ramsey, run_relaxation, LabConfig, ProbePulse,
    PARAMETRIC_MAGNON_LEVELS,
};
