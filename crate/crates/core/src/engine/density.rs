use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::operator::Operator;
use super::space::ModeSpace;
use crate::error::{Error, Result};
use crate::C64;

pub const TRACE_TOL: f64 = 1e-9;
pub const HERMITICITY_TOL: f64 = 1e-12;
pub const POSITIVITY_TOL: f64 = 1e-9;

/// Hermitian, unit-trace, positive semidefinite state on a [`ModeSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: Arc<ModeSpace>,
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates trace, Hermiticity and positivity.
    pub fn new(space: Arc<ModeSpace>, matrix: DMatrix<C64>) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(space, matrix)?;
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let herm = rho.hermiticity_error();
        if herm > HERMITICITY_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian: max |rho - rho^dag| = {herm:.3e}"
            )));
        }
        let min_eig = rho.min_eigenvalue();
        if min_eig < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(rho)
    }

    /// Shape check only; used for intermediate integrator states.
    pub(crate) fn from_matrix_unchecked(
        space: Arc<ModeSpace>,
        matrix: DMatrix<C64>,
    ) -> Result<Self> {
        let n = space.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::InvalidArgument(format!(
                "density matrix is {}x{}, space has dimension {n}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { space, matrix })
    }

    /// |ψ⟩⟨ψ| for a (not necessarily normalised) state vector.
    pub fn from_pure(space: Arc<ModeSpace>, psi: &DVector<C64>) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("state vector has zero norm".into()));
        }
        let psi = psi / C64::new(norm, 0.0);
        let m = &psi * psi.adjoint();
        Self::new(space, m)
    }

    /// Product basis state with per-mode occupations `levels`.
    pub fn basis(space: Arc<ModeSpace>, levels: &[usize]) -> Result<Self> {
        let idx = space.basis_index(levels)?;
        let n = space.total_dim();
        let mut m = DMatrix::zeros(n, n);
        m[(idx, idx)] = C64::new(1.0, 0.0);
        Ok(Self { space, matrix: m })
    }

    pub fn maximally_mixed(space: Arc<ModeSpace>) -> Self {
        let n = space.total_dim();
        let m = DMatrix::identity(n, n) / C64::new(n as f64, 0.0);
        Self { space, matrix: m }
    }

    /// Kronecker product of per-mode state vectors (one per mode, in order).
    pub fn product_pure(space: Arc<ModeSpace>, factors: &[DVector<C64>]) -> Result<Self> {
        if factors.len() != space.modes().len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} factors, got {}",
                space.modes().len(),
                factors.len()
            )));
        }
        let mut psi = DVector::from_element(1, C64::new(1.0, 0.0));
        for (f, mode) in factors.iter().zip(space.modes()) {
            if f.len() != mode.dim {
                return Err(Error::InvalidArgument(format!(
                    "factor for `{}` has length {}, expected {}",
                    mode.label,
                    f.len(),
                    mode.dim
                )));
            }
            psi = psi.kronecker(f);
        }
        Self::from_pure(space, &psi)
    }

    pub fn space(&self) -> &Arc<ModeSpace> {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        let eig = nalgebra::SymmetricEigen::new(herm);
        eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Population of a flat basis index.
    pub fn population(&self, index: usize) -> f64 {
        self.matrix[(index, index)].re
    }

    /// Marginal occupation distribution of one mode.
    pub fn mode_distribution(&self, label: &str) -> Result<Vec<f64>> {
        let idx = self.space.index_of(label)?;
        let dim = self.space.modes()[idx].dim;
        let mut probs = vec![0.0; dim];
        for i in 0..self.matrix.nrows() {
            let levels = self.space.levels_of(i);
            probs[levels[idx]] += self.matrix[(i, i)].re;
        }
        Ok(probs)
    }

    /// Unitary conjugation U ρ U†.
    pub fn conjugate(&self, u: &DMatrix<C64>) -> Self {
        Self {
            space: Arc::clone(&self.space),
            matrix: u * &self.matrix * u.adjoint(),
        }
    }
}

/// tr(ρ O).
pub fn expectation(rho: &DensityMatrix, op: &Operator) -> Result<C64> {
    if **rho.space() != **op.space() {
        return Err(Error::SpaceMismatch);
    }
    Ok(trace_product(rho.matrix(), op.matrix()))
}

/// tr(A B) without forming the product.
pub(crate) fn trace_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Truncated coherent-state amplitudes ⟨n|α⟩ for n < dim (unnormalised
/// beyond the truncation).
pub fn coherent_amplitudes(alpha: C64, dim: usize) -> DVector<C64> {
    let mut v = DVector::zeros(dim);
    let pref = (-0.5 * alpha.norm_sqr()).exp();
    let mut term = C64::new(pref, 0.0);
    for n in 0..dim {
        if n > 0 {
            term = term * alpha / C64::new((n as f64).sqrt(), 0.0);
        }
        v[n] = term;
    }
    v
}
