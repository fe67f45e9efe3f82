//! Curve fitting, polynomial interpolation and time-budget subsampling.

mod lm;
mod models;
mod poly;
mod subsample;

pub use lm::{fit_curve, FitOptions, FitResult, Termination};
pub use models::FitModel;
pub use poly::{interpolate_poly, PolyFit};
pub use subsample::subsample_time_budget;
