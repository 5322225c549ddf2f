//! Hermitian and unitary eigendecompositions.
//!
//! The Hermitian solver is a cyclic complex Jacobi method. Each rotation first
//! removes the phase of the pivot `a_pq` with a diagonal unitary and then applies
//! a real Givens rotation, so every step is exactly unitary. Sweeps stop once the
//! off-diagonal mass drops below machine precision relative to the matrix norm.
//!
//! Unitary matrices are normal, so they are diagonalized through the commuting
//! Hermitian pair `H1 = (V + V^dag)/2`, `H2 = (V - V^dag)/2i`: the eigenvectors of
//! `H1 + mu H2` for a generic real `mu` are eigenvectors of `V`.

use num_traits::{One, Zero};

use super::matrix::ComplexMatrix;
use super::tolerance::tolerances;
use crate::error::{Error, Result};
use crate::scalar::{c, Real, C};

const MAX_SWEEPS: usize = 100;

/// Eigen-data of a Hermitian matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T: Real> {
    pub values: Vec<T>,
    /// Orthonormal eigenvectors as columns, aligned with `values`.
    pub vectors: ComplexMatrix<T>,
}

impl<T: Real> HermitianEigen<T> {
    pub fn vector(&self, k: usize) -> Vec<C<T>> {
        self.vectors.col(k)
    }

    pub fn reconstruct(&self) -> ComplexMatrix<T> {
        let n = self.values.len();
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &lam) in self.values.iter().enumerate() {
            out += &ComplexMatrix::projector(&self.vector(k)).scale_real(lam);
        }
        out
    }
}

/// Eigen-data of a unitary matrix.
#[derive(Debug, Clone)]
pub struct UnitaryEigen<T: Real> {
    /// Unit-modulus eigenvalues `e^{i theta_k}`.
    pub phases: Vec<C<T>>,
    pub vectors: ComplexMatrix<T>,
}

impl<T: Real> UnitaryEigen<T> {
    pub fn angles(&self) -> Vec<T> {
        self.phases.iter().map(|p| p.arg()).collect()
    }

    pub fn vector(&self, k: usize) -> Vec<C<T>> {
        self.vectors.col(k)
    }

    pub fn reconstruct(&self) -> ComplexMatrix<T> {
        let n = self.phases.len();
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &ph) in self.phases.iter().enumerate() {
            out += &ComplexMatrix::projector(&self.vector(k)).scale(ph);
        }
        out
    }
}

/// Diagonalize a Hermitian matrix.
pub fn eig_hermitian<T: Real>(m: &ComplexMatrix<T>) -> Result<HermitianEigen<T>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition of a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let dev = m.hermitian_deviation();
    let scale = T::one().max(m.max_abs());
    if dev > T::tol(tolerances().herm) * scale {
        return Err(Error::NotHermitian {
            deviation: dev.to_f64_lossy(),
        });
    }
    Ok(jacobi(m.hermitian_part()))
}

fn jacobi<T: Real>(mut a: ComplexMatrix<T>) -> HermitianEigen<T> {
    let n = a.rows();
    let mut v = ComplexMatrix::identity(n);
    let norm = a.frobenius_norm();
    let threshold = T::epsilon() * T::epsilon() * norm * norm;

    for _ in 0..MAX_SWEEPS {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum();
        if off <= threshold || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == T::zero() {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // Skip pivots that are negligible against both diagonal entries.
                let tiny = T::epsilon() * T::lit(1e-2) * (app.abs() + aqq.abs());
                if mag <= tiny {
                    a[(p, q)] = C::zero();
                    a[(q, p)] = C::zero();
                    continue;
                }
                let phase = apq / mag;
                let theta = (aqq - app) / (mag + mag);
                let t = if theta >= T::zero() {
                    T::one() / (theta + (T::one() + theta * theta).sqrt())
                } else {
                    -T::one() / (-theta + (T::one() + theta * theta).sqrt())
                };
                let cs = T::one() / (T::one() + t * t).sqrt();
                let sn = t * cs;
                // G = diag(1, conj(phase)) * R(c, s): acts on columns p, q.
                let g_pp = c(cs, T::zero());
                let g_pq = c(sn, T::zero());
                let g_qp = phase.conj() * (-sn);
                let g_qq = phase.conj() * cs;
                rotate(&mut a, &mut v, p, q, [g_pp, g_pq, g_qp, g_qq]);
                a[(p, q)] = C::zero();
                a[(q, p)] = C::zero();
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<T> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, k| v[(r, order[k])]);
    HermitianEigen { values, vectors }
}

/// `A <- G^dag A G`, `V <- V G` with `G` nontrivial only on indices `p`, `q`.
fn rotate<T: Real>(
    a: &mut ComplexMatrix<T>,
    v: &mut ComplexMatrix<T>,
    p: usize,
    q: usize,
    [g_pp, g_pq, g_qp, g_qq]: [C<T>; 4],
) {
    let n = a.rows();
    // Columns: (A G)[:, p] = A[:, p] g_pp + A[:, q] g_qp, (A G)[:, q] = A[:, p] g_pq + A[:, q] g_qq
    for i in 0..n {
        let ap = a[(i, p)];
        let aq = a[(i, q)];
        a[(i, p)] = ap * g_pp + aq * g_qp;
        a[(i, q)] = ap * g_pq + aq * g_qq;
        let vp = v[(i, p)];
        let vq = v[(i, q)];
        v[(i, p)] = vp * g_pp + vq * g_qp;
        v[(i, q)] = vp * g_pq + vq * g_qq;
    }
    // Rows: (G^dag A)[p, :] = conj(g_pp) A[p, :] + conj(g_qp) A[q, :], ...
    for j in 0..n {
        let ap = a[(p, j)];
        let aq = a[(q, j)];
        a[(p, j)] = g_pp.conj() * ap + g_qp.conj() * aq;
        a[(q, j)] = g_pq.conj() * ap + g_qq.conj() * aq;
    }
    a[(p, p)] = c(a[(p, p)].re, T::zero());
    a[(q, q)] = c(a[(q, q)].re, T::zero());
}

// Fixed "random" mixing coefficients for H1 + mu H2; retried in order if a split fails.
const MIXING: [f64; 4] = [0.618_033_988_749_894_9, -1.324_717_957_244_746, 2.357_022_603, 0.371_137_5];

/// Diagonalize a unitary matrix.
pub fn eig_unitary<T: Real>(v: &ComplexMatrix<T>) -> Result<UnitaryEigen<T>> {
    let dev = v.unitary_deviation();
    if dev > T::tol(tolerances().unitary) {
        return Err(Error::NotUnitary {
            deviation: dev.to_f64_lossy(),
        });
    }
    let n = v.rows();
    let vd = v.adjoint();
    let h1 = (v + &vd).scale_real(T::lit(0.5));
    let h2 = (v - &vd).scale(c(T::zero(), T::lit(-0.5)));
    let tol = T::tol(tolerances().eig);

    let mut best: Option<(T, UnitaryEigen<T>)> = None;
    for &mu in &MIXING {
        let mixed = &h1 + &h2.scale_real(T::lit(mu));
        let eig = jacobi(mixed.hermitian_part());
        let vecs = eig.vectors;
        let phases: Vec<C<T>> = (0..n)
            .map(|k| {
                let col = vecs.col(k);
                let z = v.sandwich(&col, &col);
                let r = z.norm();
                if r > T::zero() {
                    z / r
                } else {
                    C::one()
                }
            })
            .collect();
        let out = UnitaryEigen {
            phases,
            vectors: vecs,
        };
        let residual = out.reconstruct().max_abs_diff(v);
        if residual <= tol {
            return Ok(out);
        }
        if best.as_ref().is_none_or(|(r, _)| residual < *r) {
            best = Some((residual, out));
        }
    }
    let (residual, _) = best.expect("at least one mixing coefficient");
    Err(Error::Numerical(format!(
        "unitary eigendecomposition failed to reconstruct (residual {:e})",
        residual.to_f64_lossy()
    )))
}

/// Largest singular value.
pub fn op_norm<T: Real>(m: &ComplexMatrix<T>) -> T {
    if m.rows() == 0 || m.cols() == 0 {
        return T::zero();
    }
    let gram = if m.rows() <= m.cols() {
        m.matmul(&m.adjoint())
    } else {
        m.adjoint().matmul(m)
    };
    let top = jacobi(gram.hermitian_part()).values[0];
    top.max(T::zero()).sqrt()
}

/// Largest eigenvalue of a Hermitian matrix (closed form for 2x2).
pub fn lambda_max<T: Real>(h: &ComplexMatrix<T>) -> T {
    if h.rows() == 2 {
        let a = h[(0, 0)].re;
        let d = h[(1, 1)].re;
        let b = h[(0, 1)];
        let half = T::lit(0.5);
        let mean = (a + d) * half;
        let gap = ((a - d) * half).hypot(b.norm());
        return mean + gap;
    }
    jacobi(h.hermitian_part()).values[0]
}

/// `max |W^dag W - I|` over the columns `W`.
pub fn orthonormality_deviation<T: Real>(vectors: &ComplexMatrix<T>) -> T {
    vectors
        .adjoint()
        .matmul(vectors)
        .max_abs_diff(&ComplexMatrix::identity(vectors.cols()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::paulis;
    use crate::linalg::random::{haar_random_unitary, random_hermitian};
    use crate::scalar::{cis, cr};

    type M = ComplexMatrix<f64>;

    #[test]
    fn pauli_spectra() {
        let [_, x, _, z] = paulis::<f64>();
        let ez = eig_hermitian(&z).unwrap();
        assert!((ez.values[0] - 1.0).abs() < 1e-15 && (ez.values[1] + 1.0).abs() < 1e-15);
        let ex = eig_hermitian(&x).unwrap();
        assert!((ex.values[0] - 1.0).abs() < 1e-15 && (ex.values[1] + 1.0).abs() < 1e-15);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = ex.vector(0);
        let minus = ex.vector(1);
        // Up to phase: |<+|v>| = 1.
        let ov_p = (plus[0] * s + plus[1] * s).norm();
        let ov_m = (minus[0] * s - minus[1] * s).norm();
        assert!((ov_p - 1.0).abs() < 1e-14 && (ov_m - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_hermitian_reconstruction() {
        for seed in 0..5 {
            let h = random_hermitian::<f64>(8, seed);
            let e = eig_hermitian(&h).unwrap();
            assert!(e.reconstruct().max_abs_diff(&h) < 1e-10);
            assert!(orthonormality_deviation(&e.vectors) < 1e-10);
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = M::from_rows(&[vec![cr(0.0), cr(1.0)], vec![cr(0.0), cr(0.0)]]);
        assert!(matches!(eig_hermitian(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn unitary_identity_and_diagonal() {
        let e = eig_unitary(&M::identity(4)).unwrap();
        assert!(e.phases.iter().all(|p| (p - C::one()).norm() < 1e-14));

        let d = M::diag(&[C::one(), cis(std::f64::consts::PI / 3.0)]);
        let e = eig_unitary(&d).unwrap();
        let mut got: Vec<f64> = e.angles();
        got.sort_by(f64::total_cmp);
        assert!(got[0].abs() < 1e-14);
        assert!((got[1] - std::f64::consts::PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn unitary_rejects_non_unitary() {
        let m = M::identity(2).scale_real(2.0);
        assert!(matches!(eig_unitary(&m), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn haar_unitary_reconstruction() {
        for (dim, seed) in [(2, 1), (4, 2), (8, 3), (16, 4)] {
            let u = haar_random_unitary::<f64>(dim, seed);
            let e = eig_unitary(u.matrix()).unwrap();
            assert!(e.reconstruct().max_abs_diff(u.matrix()) < 1e-10);
            assert!(e.phases.iter().all(|p| (p.norm() - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn norms_of_simple_matrices() {
        let [_, x, _, _] = paulis::<f64>();
        assert!((op_norm(&x) - 1.0).abs() < 1e-15);
        assert!((x.frobenius_norm() - 2f64.sqrt()).abs() < 1e-15);
        let zero = M::zeros(3, 3);
        assert_eq!(op_norm(&zero), 0.0);
        assert_eq!(zero.frobenius_norm(), 0.0);
        let d = M::diag(&[cr(3.0), C::new(0.0, 4.0)]);
        assert!((op_norm(&d) - 4.0).abs() < 1e-14);
        assert!((d.frobenius_norm() - 5.0).abs() < 1e-14);
    }

    #[test]
    fn lambda_max_closed_form_matches_jacobi() {
        for seed in 0..20 {
            let h = random_hermitian::<f64>(2, seed);
            let e = eig_hermitian(&h).unwrap();
            assert!((lambda_max(&h) - e.values[0]).abs() < 1e-13);
        }
    }

    #[test]
    fn f32_path_works() {
        let h = random_hermitian::<f32>(6, 9);
        let e = eig_hermitian(&h).unwrap();
        assert!(e.reconstruct().max_abs_diff(&h) < 1e-4);
    }
}
