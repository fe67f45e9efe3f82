use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use nalgebra::DMatrix;

use super::space::ModeSpace;
use crate::error::{Error, Result};
use crate::C64;

/// Tolerance on ‖H − H†‖_max / ‖H‖_max for operators used as Hamiltonians.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Intended use of a composed operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    General,
    Hermitian,
}

/// Complex square matrix acting on a [`ModeSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: Arc<ModeSpace>,
    matrix: DMatrix<C64>,
}

impl Operator {
    pub fn from_matrix(space: Arc<ModeSpace>, matrix: DMatrix<C64>) -> Result<Self> {
        let n = space.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::InvalidArgument(format!(
                "matrix is {}x{}, space {} has dimension {n}",
                matrix.nrows(),
                matrix.ncols(),
                space
            )));
        }
        Ok(Self { space, matrix })
    }

    pub fn zeros(space: &Arc<ModeSpace>) -> Self {
        let n = space.total_dim();
        Self {
            space: Arc::clone(space),
            matrix: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(space: &Arc<ModeSpace>) -> Self {
        let n = space.total_dim();
        Self {
            space: Arc::clone(space),
            matrix: DMatrix::identity(n, n),
        }
    }

    /// Embeds a single-mode matrix acting on mode `label` into the full space.
    pub fn embed(space: &Arc<ModeSpace>, label: &str, local: &DMatrix<C64>) -> Result<Self> {
        let target = space.index_of(label)?;
        let mode_dim = space.modes()[target].dim;
        if local.nrows() != mode_dim || local.ncols() != mode_dim {
            return Err(Error::InvalidArgument(format!(
                "local operator for `{label}` must be {mode_dim}x{mode_dim}"
            )));
        }
        let mut full = DMatrix::<C64>::identity(1, 1);
        for (i, mode) in space.modes().iter().enumerate() {
            let factor = if i == target {
                local.clone()
            } else {
                DMatrix::identity(mode.dim, mode.dim)
            };
            full = full.kronecker(&factor);
        }
        Ok(Self {
            space: Arc::clone(space),
            matrix: full,
        })
    }

    pub fn space(&self) -> &Arc<ModeSpace> {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            space: Arc::clone(&self.space),
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            space: Arc::clone(&self.space),
            matrix: &self.matrix * s,
        }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    fn check_space(&self, other: &Operator) -> Result<()> {
        if Arc::ptr_eq(&self.space, &other.space) || *self.space == *other.space {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }

    pub fn try_add(&self, other: &Operator) -> Result<Operator> {
        self.check_space(other)?;
        Ok(Self {
            space: Arc::clone(&self.space),
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn try_mul(&self, other: &Operator) -> Result<Operator> {
        self.check_space(other)?;
        Ok(Self {
            space: Arc::clone(&self.space),
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        self.check_space(other)?;
        Ok(Self {
            space: Arc::clone(&self.space),
            matrix: &self.matrix * &other.matrix - &other.matrix * &self.matrix,
        })
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// ‖A − A†‖_max relative to ‖A‖_max (0 for the zero operator).
    pub fn hermiticity_deviation(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let n = self.dim();
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        dev / scale
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_deviation() <= HERMITIAN_TOL
    }

    pub fn ensure_hermitian(&self) -> Result<()> {
        let deviation = self.hermiticity_deviation();
        if deviation > HERMITIAN_TOL {
            Err(Error::NonHermitian { deviation })
        } else {
            Ok(())
        }
    }

    /// Largest off-diagonal entry modulus.
    pub fn max_offdiagonal(&self) -> f64 {
        let n = self.dim();
        let mut m: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m = m.max(self.matrix[(i, j)].norm());
                }
            }
        }
        m
    }

    /// Real eigenvalues of a Hermitian operator, ascending.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        self.ensure_hermitian()?;
        let eig = nalgebra::SymmetricEigen::new(self.matrix.clone());
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        Ok(vals)
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.try_add(rhs).expect("operator space mismatch")
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.check_space(rhs).expect("operator space mismatch");
        Operator {
            space: Arc::clone(&self.space),
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.try_mul(rhs).expect("operator space mismatch")
    }
}

fn ladder(dim: usize) -> DMatrix<C64> {
    let mut a = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Truncated annihilation operator of `mode` and its number operator a†a,
/// embedded in the composite space.
pub fn build_mode_operators(space: &Arc<ModeSpace>, mode: &str) -> Result<(Operator, Operator)> {
    let idx = space.index_of(mode)?;
    let dim = space.modes()[idx].dim;
    let a = Operator::embed(space, mode, &ladder(dim))?;
    // Exact integer diagonal rather than the rounded product a†a.
    let n = DMatrix::from_fn(dim, dim, |i, j| if i == j { C64::new(i as f64, 0.0) } else { C64::new(0.0, 0.0) });
    let number = Operator::embed(space, mode, &n)?;
    Ok((a, number))
}

/// Linear combination Σ_k c_k · (A_k1 A_k2 …). An empty product is the identity.
pub fn compose_operator(
    space: &Arc<ModeSpace>,
    terms: &[(C64, Vec<&Operator>)],
    role: Role,
) -> Result<Operator> {
    let mut acc = Operator::zeros(space);
    for (coef, factors) in terms {
        let mut prod = Operator::identity(space);
        for f in factors {
            prod = prod.try_mul(f)?;
        }
        acc = acc.try_add(&prod.scale(*coef))?;
    }
    if role == Role::Hermitian {
        acc.ensure_hermitian()?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::ModeKind;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn two_level_ladder() {
        let s = Arc::new(ModeSpace::single("q", 2, ModeKind::Qubit).unwrap());
        let (a, _) = build_mode_operators(&s, "q").unwrap();
        let m = a.matrix();
        assert_eq!(m[(0, 1)], c(1.0));
        assert_eq!(m[(0, 0)], c(0.0));
        assert_eq!(m[(1, 0)], c(0.0));
        assert_eq!(m[(1, 1)], c(0.0));
    }

    #[test]
    fn three_level_matrix_element() {
        let s = Arc::new(ModeSpace::single("m", 3, ModeKind::Boson).unwrap());
        let (a, n) = build_mode_operators(&s, "m").unwrap();
        assert!((a.matrix()[(1, 2)].re - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(n.matrix()[(2, 2)], c(2.0));
    }

    #[test]
    fn unknown_label() {
        let s = Arc::new(ModeSpace::single("q", 2, ModeKind::Qubit).unwrap());
        assert_eq!(
            build_mode_operators(&s, "x").unwrap_err(),
            Error::UnknownMode("x".into())
        );
    }

    #[test]
    fn number_operator_spectrum_in_product_space() {
        // Oracle: build a2 = I_2 ⊗ ladder(3) by hand and diagonalise.
        let s = Arc::new(
            ModeSpace::from_modes(&[("a", 2, ModeKind::Boson), ("b", 3, ModeKind::Boson)]).unwrap(),
        );
        let (_, n) = build_mode_operators(&s, "b").unwrap();
        let mut by_hand = DMatrix::<C64>::zeros(6, 6);
        for i in 0..2 {
            for k in 0..3 {
                by_hand[(3 * i + k, 3 * i + k)] = c(k as f64);
            }
        }
        assert_eq!(n.matrix(), &by_hand);
        let eig = n.hermitian_eigenvalues().unwrap();
        let expect = [0.0, 0.0, 1.0, 1.0, 2.0, 2.0];
        for (e, x) in eig.iter().zip(expect) {
            assert!((e - x).abs() < 1e-12);
        }
    }

    #[test]
    fn compose_pauli_x_and_zero() {
        let s = Arc::new(ModeSpace::single("q", 2, ModeKind::Qubit).unwrap());
        let (a, _) = build_mode_operators(&s, "q").unwrap();
        let ad = a.adjoint();
        let x = compose_operator(&s, &[(c(1.0), vec![&a]), (c(1.0), vec![&ad])], Role::Hermitian)
            .unwrap();
        assert_eq!(x.matrix()[(0, 1)], c(1.0));
        assert_eq!(x.matrix()[(1, 0)], c(1.0));
        assert_eq!(x.matrix()[(0, 0)], c(0.0));
        let z = compose_operator(&s, &[(c(0.0), vec![&a, &ad])], Role::General).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        let nonh = compose_operator(&s, &[(c(1.0), vec![&a])], Role::Hermitian);
        assert!(matches!(nonh, Err(Error::NonHermitian { .. })));
    }

    #[test]
    fn cross_kerr_diagonal() {
        let s = Arc::new(
            ModeSpace::from_modes(&[("q", 2, ModeKind::Qubit), ("m", 3, ModeKind::Boson)]).unwrap(),
        );
        let (_, nq) = build_mode_operators(&s, "q").unwrap();
        let (_, nm) = build_mode_operators(&s, "m").unwrap();
        let chi = 0.37;
        let h = compose_operator(&s, &[(c(chi), vec![&nq, &nm])], Role::Hermitian).unwrap();
        let diag: Vec<f64> = (0..6).map(|i| h.matrix()[(i, i)].re).collect();
        for (d, x) in diag.iter().zip([0.0, 0.0, 0.0, 0.0, chi, 2.0 * chi]) {
            assert!((d - x).abs() < 1e-15);
        }
        assert_eq!(h.max_offdiagonal(), 0.0);
    }

    #[test]
    fn space_mismatch() {
        let s1 = Arc::new(ModeSpace::single("q", 2, ModeKind::Qubit).unwrap());
        let s2 = Arc::new(ModeSpace::single("q", 3, ModeKind::Qubit).unwrap());
        let (a1, _) = build_mode_operators(&s1, "q").unwrap();
        let (a2, _) = build_mode_operators(&s2, "q").unwrap();
        assert_eq!(a1.try_add(&a2).unwrap_err(), Error::SpaceMismatch);
        assert!(compose_operator(&s1, &[(c(1.0), vec![&a2])], Role::General).is_err());
    }
}
