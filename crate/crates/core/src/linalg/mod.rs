//! Dense complex linear algebra for small operators.

mod eigen;
mod json;
mod matrix;
mod random;
mod tolerance;
mod types;

pub use eigen::{
    eig_hermitian, eig_unitary, lambda_max, op_norm, orthonormality_deviation, HermitianEigen,
    UnitaryEigen,
};
pub use json::{MatrixJson, PovmJson};
pub use matrix::{basis_vector, inner, kron_vec, paulis, vec_norm, ComplexMatrix, Subsystem};
pub use random::{
    complex_gaussian, ginibre, haar_pure_state_with, haar_pure_vector_with, haar_random_pure_state,
    haar_random_unitary, haar_unitary_with, random_density, random_density_with, random_hermitian,
    rng_from_seed, unit_quaternion_with,
};
pub use tolerance::{set_tolerances, tolerances, Tolerances};
pub use types::{DensityState, UnitaryOp};

/// `a ⊗ b`, system factor first.
pub fn kron<T: crate::Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    a.kron(b)
}

/// Trace out one factor of a `dims.0 * dims.1` operator.
pub fn partial_trace<T: crate::Real>(
    m: &ComplexMatrix<T>,
    dims: (usize, usize),
    which: Subsystem,
) -> crate::Result<ComplexMatrix<T>> {
    m.partial_trace(dims, which)
}

pub fn frobenius_norm<T: crate::Real>(m: &ComplexMatrix<T>) -> T {
    m.frobenius_norm()
}
