use super::eigen::eig_hermitian;
use super::matrix::ComplexMatrix;
use super::tolerance::tolerances;
use crate::error::{Error, Result};
use crate::scalar::{Real, C};

/// A square matrix checked to be unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryOp<T: Real>(ComplexMatrix<T>);

impl<T: Real> UnitaryOp<T> {
    pub fn new(m: ComplexMatrix<T>) -> Result<Self> {
        let dev = m.unitary_deviation();
        if !m.is_square() || dev > T::tol(tolerances().unitary) {
            return Err(Error::NotUnitary {
                deviation: dev.to_f64_lossy(),
            });
        }
        Ok(Self(m))
    }

    /// Wraps a matrix that is unitary by construction.
    pub(crate) fn new_unchecked(m: ComplexMatrix<T>) -> Self {
        debug_assert!(m.unitary_deviation() < T::lit(1e-6));
        Self(m)
    }

    pub fn identity(n: usize) -> Self {
        Self(ComplexMatrix::identity(n))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn compose(&self, rhs: &Self) -> Self {
        Self(self.0.matmul(&rhs.0))
    }

    pub fn kron(&self, rhs: &Self) -> Self {
        Self(self.0.kron(&rhs.0))
    }
}

/// A density operator: Hermitian, positive semidefinite, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState<T: Real>(ComplexMatrix<T>);

impl<T: Real> DensityState<T> {
    pub fn new(m: ComplexMatrix<T>) -> Result<Self> {
        let tol = tolerances();
        if !m.is_square() {
            return Err(Error::InvalidState(format!(
                "{}x{} matrix is not square",
                m.rows(),
                m.cols()
            )));
        }
        let dev = m.hermitian_deviation();
        if dev > T::tol(tol.herm) {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {:e})",
                dev.to_f64_lossy()
            )));
        }
        let tr = m.trace().re;
        if (tr - T::one()).abs() > T::tol(tol.trace) {
            return Err(Error::InvalidState(format!(
                "trace {} differs from 1",
                tr.to_f64_lossy()
            )));
        }
        let eig = eig_hermitian(&m)?;
        let min = *eig.values.last().expect("nonempty");
        if min < -T::tol(tol.psd) {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {:e}",
                min.to_f64_lossy()
            )));
        }
        Ok(Self(m.hermitian_part()))
    }

    /// `|psi><psi| / <psi|psi>`.
    pub fn pure(psi: &[C<T>]) -> Result<Self> {
        let n = super::matrix::vec_norm(psi);
        if n == T::zero() || !n.is_finite() {
            return Err(Error::InvalidState("zero or non-finite state vector".into()));
        }
        let v: Vec<C<T>> = psi.iter().map(|&x| x / n).collect();
        Ok(Self(ComplexMatrix::projector(&v)))
    }

    /// `I / d`.
    pub fn maximally_mixed(d: usize) -> Self {
        Self(ComplexMatrix::identity(d).scale_real(T::one() / T::from_count(d)))
    }

    /// Convex mixture `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &Self, lambda: T) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch("mixing states of different dimension".into()));
        }
        Self::new(&self.0.scale_real(lambda) + &other.0.scale_real(T::one() - lambda))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.0
    }
}
