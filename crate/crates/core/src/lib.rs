//! Simulation and analysis toolkit for a transmon qubit used as a dispersive
//! sensor of a magnon (Kittel) mode.
//!
//! The crate is layered bottom-up:
//!
//! * [`engine`] – truncated Fock-space operator algebra and a fixed-step RK4
//!   Lindblad integrator.
//! * [`system`] – device parameters and Hamiltonian builders (full,
//!   dispersive and parametric conversion).
//! * [`protocol`] – pulse-sequence experiments producing shot-sampled
//!   [`dataset::SweepDataset`]s through a readout model.
//! * [`estimator`] – Levenberg–Marquardt curve fitting, polynomial
//!   interpolation and time-budget subsampling.
//! * [`analytics`] – magnon-number calibration, dephasing model,
//!   sensitivity and lifetime extraction.
//! * [`workflow`] – end-to-end calibration and sensitivity pipelines.
//!
//! Frequencies are stored as angular frequencies (rad/s) throughout; use
//! [`units`] to convert to and from ordinary frequencies.

pub mod analytics;
pub mod dataset;
pub mod engine;
pub mod error;
pub mod estimator;
pub mod protocol;
pub mod seed;
pub mod system;
pub mod units;
pub mod workflow;

pub use dataset::{Axis, PointRecord, ShotRecord, SweepDataset};
pub use engine::{
    build_mode_operators, compose_operator, evolve_lindblad, expectation, CollapseTerm,
    DensityMatrix, DriveTerm, Envelope, EvolveOptions, Hamiltonian, ModeSpace, Operator, Role,
    Trajectory,
};
pub use error::{Error, Result};
pub use estimator::{fit_curve, interpolate_poly, FitModel, FitOptions, FitResult, PolyFit};
pub use system::{PumpSpec, SystemParams};

/// Complex scalar used by every operator.
pub type C64 = num_complex::Complex64;
