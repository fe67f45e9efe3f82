//! Truncated Hilbert-space operator algebra and Lindblad time evolution for a
//! handful of coupled modes.
//!
//! Basis ordering follows the listed mode order with the leftmost mode as the
//! slowest-varying Kronecker index.

mod density;
mod lindblad;
mod operator;
mod space;

pub use density::{coherent_amplitudes, expectation, DensityMatrix};
pub use lindblad::{
    evolve_lindblad, fastest_rate, CollapseTerm, DriveTerm, Envelope, EvolveOptions, Hamiltonian,
    Trajectory,
};
pub use operator::{build_mode_operators, compose_operator, Operator, Role};
pub use space::{Mode, ModeKind, ModeSpace};

/// Minimum truncation recommended for a bosonic mode at mean occupation `nbar`:
/// ⌈n̄ + 5√n̄ + 5⌉.
pub fn recommended_truncation(nbar: f64) -> usize {
    let n = nbar.max(0.0);
    (n + 5.0 * n.sqrt() + 5.0).ceil() as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_rule() {
        assert_eq!(recommended_truncation(0.0), 5);
        assert_eq!(recommended_truncation(3.0), 17);
        assert_eq!(recommended_truncation(100.0), 155);
    }
}
