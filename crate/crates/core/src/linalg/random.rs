//! Seeded random matrices: Haar unitaries (Ginibre + QR with phase-fixed `R`),
//! Haar pure states, and test-oriented random Hermitian and density matrices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::matrix::{vec_norm, ComplexMatrix};
use super::types::{DensityState, UnitaryOp};
use crate::scalar::{c, Real, C};

/// Deterministic generator used throughout the crate.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard complex normal: real and imaginary parts `N(0, 1/2)`.
pub fn complex_gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R) -> C<T> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(T::lit(re * s), T::lit(im * s))
}

pub fn ginibre<T: Real, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix<T> {
    ComplexMatrix::from_fn(dim, dim, |_, _| complex_gaussian(rng))
}

/// Haar-distributed unitary drawn from `rng`.
pub fn haar_unitary_with<T: Real, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> UnitaryOp<T> {
    assert!(dim >= 1, "dimension must be positive");
    // Gram-Schmidt on the columns gives the QR factor whose R has a positive real
    // diagonal; with that phase fixing Q is Haar distributed.
    let g = ginibre::<T, R>(dim, rng);
    let mut q = ComplexMatrix::zeros(dim, dim);
    for k in 0..dim {
        let mut v = g.col(k);
        for _pass in 0..2 {
            for j in 0..k {
                let qj = q.col(j);
                let proj: C<T> = qj.iter().zip(&v).map(|(a, b)| a.conj() * *b).sum();
                for (x, y) in v.iter_mut().zip(&qj) {
                    *x -= proj * *y;
                }
            }
        }
        let n = vec_norm(&v);
        for x in v.iter_mut() {
            *x /= n;
        }
        q.set_col(k, &v);
    }
    UnitaryOp::new_unchecked(q)
}

/// Haar-distributed unitary of the given dimension; deterministic in `seed`.
pub fn haar_random_unitary<T: Real>(dim: usize, seed: u64) -> UnitaryOp<T> {
    haar_unitary_with(dim, &mut rng_from_seed(seed))
}

pub fn haar_pure_vector_with<T: Real, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C<T>> {
    assert!(dim >= 1, "dimension must be positive");
    loop {
        let v: Vec<C<T>> = (0..dim).map(|_| complex_gaussian(rng)).collect();
        let n = vec_norm(&v);
        if n > T::zero() {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

pub fn haar_pure_state_with<T: Real, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityState<T> {
    DensityState::pure(&haar_pure_vector_with(dim, rng)).expect("normalized vector")
}

/// Haar-random pure state `|psi><psi|`; deterministic in `seed`.
pub fn haar_random_pure_state<T: Real>(dim: usize, seed: u64) -> DensityState<T> {
    haar_pure_state_with(dim, &mut rng_from_seed(seed))
}

/// Full-rank random density matrix `G G^dag / Tr[G G^dag]` (Hilbert-Schmidt measure).
pub fn random_density_with<T: Real, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityState<T> {
    let g = ginibre::<T, R>(dim, rng);
    let gg = g.matmul(&g.adjoint());
    let tr = gg.trace().re;
    DensityState::new(gg.scale_real(T::one() / tr)).expect("Ginibre density is valid")
}

pub fn random_density<T: Real>(dim: usize, seed: u64) -> DensityState<T> {
    random_density_with(dim, &mut rng_from_seed(seed))
}

/// Random Hermitian matrix `(G + G^dag) / 2`.
pub fn random_hermitian<T: Real>(dim: usize, seed: u64) -> ComplexMatrix<T> {
    ginibre::<T, _>(dim, &mut rng_from_seed(seed)).hermitian_part()
}

/// Uniform sample on the unit 3-sphere.
pub fn unit_quaternion_with<R: Rng + ?Sized>(rng: &mut R) -> [f64; 4] {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return q.map(|x| x / n);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_one_is_a_phase() {
        let u = haar_random_unitary::<f64>(1, 5);
        assert!((u.matrix()[(0, 0)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = haar_random_unitary::<f64>(4, 42);
        let b = haar_random_unitary::<f64>(4, 42);
        assert_eq!(a, b);
        let c = haar_random_unitary::<f64>(4, 43);
        assert_ne!(a, c);
        assert_eq!(haar_random_pure_state::<f64>(3, 7), haar_random_pure_state::<f64>(3, 7));
    }

    #[test]
    fn unitarity() {
        for d in [2, 5, 32] {
            let u = haar_random_unitary::<f64>(d, d as u64);
            assert!(u.matrix().unitary_deviation() < 1e-12);
        }
    }

    #[test]
    fn trace_moment_is_one() {
        // E|Tr U|^2 = 1 for Haar U in any dimension.
        let mut rng = rng_from_seed(2024);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| haar_unitary_with::<f64, _>(2, &mut rng).matrix().trace().norm_sqr())
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn left_invariance_statistic() {
        // E|<0|W U|0>|^2 = 1/d whatever the fixed unitary W.
        let w = haar_random_unitary::<f64>(3, 99);
        let mut rng = rng_from_seed(11);
        let n = 40_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| {
                let u = haar_unitary_with::<f64, _>(3, &mut rng);
                w.matrix().matmul(u.matrix())[(0, 0)].norm_sqr()
            })
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        assert!((mean - 1.0 / 3.0).abs() < 4.0 * se);
    }
}
