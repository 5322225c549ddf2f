//! The SU(2)-covariant programmable qubit detector.
//!
//! The ancilla carries the spin-`j` irrep, so `d = 2j + 1`. Coupling the system spin
//! `1/2` with `j` gives `j+ ⊕ j-` with `j± = j ± 1/2`; the detector measures the
//! projectors onto the two multiplets. Programming with `W_g |j,j>` yields a noisy
//! version of the spin measurement along `g`:
//!
//! ```text
//! Q_0 = V_g (|1/2,1/2><1/2,1/2| + (2j+1)^{-1} |1/2,-1/2><1/2,-1/2|) V_g^dag
//! ```
//!
//! at distance exactly `2/d` from the ideal one.
//!
//! Spins are stored as `twice_j = 2j`. Basis index `k` of a spin-`j` space is the
//! state with `m = j - k`.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    basis_vector, eig_hermitian, rng_from_seed, unit_quaternion_with, ComplexMatrix, DensityState,
    UnitaryOp,
};
use crate::povm::{povm_distance_qubit, programmed_povm, Povm, ProgrammableDetector};
use crate::report::fmt_csv;
use crate::scalar::{c, cis, cr, Real, C};

/// Spin-`j` generators.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinRep<T: Real> {
    pub twice_j: u32,
    pub jx: ComplexMatrix<T>,
    pub jy: ComplexMatrix<T>,
    pub jz: ComplexMatrix<T>,
}

impl<T: Real> SpinRep<T> {
    pub fn dim(&self) -> usize {
        self.twice_j as usize + 1
    }

    pub fn j(&self) -> f64 {
        self.twice_j as f64 / 2.0
    }

    /// `J_x^2 + J_y^2 + J_z^2`.
    pub fn casimir(&self) -> ComplexMatrix<T> {
        let mut acc = self.jx.matmul(&self.jx);
        acc += &self.jy.matmul(&self.jy);
        acc += &self.jz.matmul(&self.jz);
        acc
    }

    /// Largest entry of `[J_x, J_y] - i J_z` and its cyclic versions.
    pub fn commutation_residual(&self) -> T {
        let comm = |a: &ComplexMatrix<T>, b: &ComplexMatrix<T>, z: &ComplexMatrix<T>| {
            (&(&a.matmul(b) - &b.matmul(a)) - &z.scale(C::i())).max_abs()
        };
        comm(&self.jx, &self.jy, &self.jz)
            .max(comm(&self.jy, &self.jz, &self.jx))
            .max(comm(&self.jz, &self.jx, &self.jy))
    }
}

/// Spin-`j` matrices from `<j,m+1|J+|j,m> = sqrt(j(j+1) - m(m+1))`.
pub fn spin_rep<T: Real>(twice_j: u32) -> SpinRep<T> {
    let d = twice_j as usize + 1;
    let j = twice_j as f64 / 2.0;
    let m_of = |k: usize| j - k as f64;
    // J+ maps index k (m) to index k - 1 (m + 1).
    let jp = ComplexMatrix::<T>::from_fn(d, d, |r, col| {
        if col >= 1 && r == col - 1 {
            let m = m_of(col);
            cr(T::lit((j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()))
        } else {
            cr(T::zero())
        }
    });
    let jm = jp.adjoint();
    let half = T::lit(0.5);
    SpinRep {
        twice_j,
        jx: (&jp + &jm).scale_real(half),
        jy: (&jp - &jm).scale(c(T::zero(), -half)),
        jz: ComplexMatrix::diag_real(&(0..d).map(|k| T::lit(m_of(k))).collect::<Vec<_>>()),
    }
}

/// `exp(-i angle n.J)` through the spectral decomposition of `n.J`.
pub fn rotation<T: Real>(rep: &SpinRep<T>, axis: [f64; 3], angle: f64) -> Result<UnitaryOp<T>> {
    let norm = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm.is_nan() || norm <= 1e-12 || !angle.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "rotation axis {axis:?} with angle {angle} is degenerate"
        )));
    }
    let n = axis.map(|x| T::lit(x / norm));
    let mut gen = rep.jx.scale_real(n[0]);
    gen += &rep.jy.scale_real(n[1]);
    gen += &rep.jz.scale_real(n[2]);
    let e = eig_hermitian(&gen)?;
    let mut out = ComplexMatrix::zeros(rep.dim(), rep.dim());
    for k in 0..rep.dim() {
        out += &ComplexMatrix::projector(&e.vector(k)).scale(cis(-T::lit(angle) * e.values[k]));
    }
    Ok(UnitaryOp::new_unchecked(out))
}

/// An SU(2) element as a unit quaternion `q0 I - i q.sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupElement {
    pub q: [f64; 4],
}

impl GroupElement {
    pub fn identity() -> Self {
        Self {
            q: [1.0, 0.0, 0.0, 0.0],
        }
    }

    /// Haar-random element.
    pub fn random_with<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self {
            q: unit_quaternion_with(rng),
        }
    }

    pub fn random(seed: u64) -> Self {
        Self::random_with(&mut rng_from_seed(seed))
    }

    /// `(axis, angle)` with `cos(angle / 2) = q0`.
    pub fn axis_angle(&self) -> ([f64; 3], f64) {
        let v = [self.q[1], self.q[2], self.q[3]];
        let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let angle = 2.0 * s.atan2(self.q[0]);
        if s < 1e-15 {
            ([0.0, 0.0, 1.0], angle)
        } else {
            (v.map(|x| x / s), angle)
        }
    }

    /// Image in the spin-`j` irrep.
    pub fn represent<T: Real>(&self, rep: &SpinRep<T>) -> UnitaryOp<T> {
        let (axis, angle) = self.axis_angle();
        rotation(rep, axis, angle).expect("unit axis")
    }
}

/// Columns: `|j+, m>` for `m = j+ .. -j+`, then `|j-, m>` for `m = j- .. -j-`, in the
/// product basis `|s> ⊗ |j, m'>` with `s = up, down`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledBasis<T: Real> {
    pub twice_j: u32,
    pub transform: ComplexMatrix<T>,
}

impl<T: Real> CoupledBasis<T> {
    pub fn plus_dim(&self) -> usize {
        self.twice_j as usize + 2
    }

    pub fn minus_dim(&self) -> usize {
        self.twice_j as usize
    }

    pub fn vector(&self, k: usize) -> Vec<C<T>> {
        self.transform.col(k)
    }

    /// Largest off-block entry of `B^dag U B` for a unitary `U` on the product space.
    pub fn off_block_residual(&self, u: &ComplexMatrix<T>) -> T {
        let m = self.transform.adjoint().matmul(u).matmul(&self.transform);
        let p = self.plus_dim();
        let mut worst = T::zero();
        for r in 0..m.rows() {
            for col in 0..m.cols() {
                if (r < p) != (col < p) {
                    worst = worst.max(m[(r, col)].norm());
                }
            }
        }
        worst
    }
}

fn check_twice_j(twice_j: u32) -> Result<()> {
    if twice_j == 0 {
        return Err(Error::InvalidArgument(
            "coupling with spin 1/2 needs j >= 1/2".into(),
        ));
    }
    Ok(())
}

/// Closed-form Clebsch-Gordan coupling of `1/2 ⊗ j`.
pub fn couple_half_j<T: Real>(twice_j: u32) -> Result<CoupledBasis<T>> {
    check_twice_j(twice_j)?;
    let d = twice_j as usize + 1;
    let dim = 2 * d;
    let tj = twice_j as i64;
    let denom = (tj + 1) as f64;
    // Index of |j, m'> from 2m'.
    let idx = |two_m: i64| -> Option<usize> {
        (two_m.abs() <= tj && (tj - two_m) % 2 == 0).then(|| ((tj - two_m) / 2) as usize)
    };
    let mut transform = ComplexMatrix::zeros(dim, dim);
    let mut col = 0;
    // With x = 2m: (j + m + 1/2)/(2j+1) = (tj + x + 1) / (2 (tj + 1)).
    for (sign, two_jj) in [(1.0, tj + 1), (-1.0, tj - 1)] {
        let mut x = two_jj;
        while x >= -two_jj {
            let a = ((tj + x + 1) as f64 / (2.0 * denom)).max(0.0).sqrt();
            let b = ((tj - x + 1) as f64 / (2.0 * denom)).max(0.0).sqrt();
            let (up, down) = if sign > 0.0 { (a, b) } else { (-b, a) };
            if let Some(k) = idx(x - 1) {
                transform[(k, col)] = cr(T::lit(up));
            }
            if let Some(k) = idx(x + 1) {
                transform[(d + k, col)] = cr(T::lit(down));
            }
            col += 1;
            x -= 2;
        }
    }
    debug_assert_eq!(col, dim);
    Ok(CoupledBasis { twice_j, transform })
}

/// Detector `{Z+, Z-}` projecting onto the `j+` and `j-` multiplets.
pub fn covariant_detector<T: Real>(twice_j: u32) -> Result<ProgrammableDetector<T>> {
    let basis = couple_half_j::<T>(twice_j)?;
    let dim = 2 * (twice_j as usize + 1);
    let mut f0 = ComplexMatrix::zeros(dim, dim);
    let mut f1 = ComplexMatrix::zeros(dim, dim);
    for k in 0..dim {
        let p = ComplexMatrix::projector(&basis.vector(k));
        if k < basis.plus_dim() {
            f0 += &p;
        } else {
            f1 += &p;
        }
    }
    ProgrammableDetector::new(Povm::new(vec![f0, f1])?, 2, twice_j as usize + 1)
}

/// Ideal spin measurement along `g`: `V_g |1/2, ±1/2><1/2, ±1/2| V_g^dag`.
pub fn target_povm<T: Real>(g: &GroupElement) -> Povm<T> {
    let v = g.represent(&spin_rep::<T>(1));
    let elements = (0..2)
        .map(|k| {
            let psi = v.matrix().matvec(&basis_vector(2, k));
            ComplexMatrix::projector(&psi)
        })
        .collect();
    Povm::new_unchecked(elements).expect("two 2x2 elements")
}

/// `V_g (|up><up| + |down><down| / (2j+1)) V_g^dag`.
pub fn closed_form_q0<T: Real>(twice_j: u32, g: &GroupElement) -> ComplexMatrix<T> {
    let v = g.represent(&spin_rep::<T>(1));
    let inner = ComplexMatrix::diag_real(&[T::one(), T::one() / T::from_count(twice_j as usize + 1)]);
    v.matrix().matmul(&inner).matmul(&v.matrix().adjoint())
}

/// `W_g |j,j><j,j| W_g^dag`.
pub fn covariant_program<T: Real>(twice_j: u32, g: &GroupElement) -> DensityState<T> {
    let w = g.represent(&spin_rep::<T>(twice_j));
    DensityState::pure(&w.matrix().col(0)).expect("unit vector")
}

#[derive(Debug, Clone)]
pub struct Accuracy<T: Real> {
    pub delta: T,
    /// Programmed POVM.
    pub q: Povm<T>,
    /// Target observable.
    pub p: Povm<T>,
}

/// Programmed vs ideal measurement along `g`.
pub fn covariant_accuracy<T: Real>(twice_j: u32, g: &GroupElement) -> Result<Accuracy<T>> {
    let det = covariant_detector::<T>(twice_j)?;
    covariant_accuracy_with(&det, g)
}

/// [`covariant_accuracy`] for an already assembled detector.
pub fn covariant_accuracy_with<T: Real>(
    det: &ProgrammableDetector<T>,
    g: &GroupElement,
) -> Result<Accuracy<T>> {
    let twice_j = (det.ancilla_dim() - 1) as u32;
    let q = programmed_povm(det, &covariant_program(twice_j, g))?;
    let p = target_povm(g);
    let delta = povm_distance_qubit(&p, &q)?;
    Ok(Accuracy { delta, q, p })
}

/// Smallest `d >= 2` with `2/d <= epsilon`.
pub fn required_dimension(epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon <= 2.0) {
        return Err(Error::InvalidArgument(format!(
            "accuracy must lie in (0, 2], got {epsilon}"
        )));
    }
    let mut d = ((2.0 / epsilon) - 1e-9).ceil().max(2.0) as usize;
    while 2.0 / d as f64 > epsilon {
        d += 1;
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub twice_j: u32,
    pub d: usize,
    /// Mean over the sampled group elements.
    pub delta: f64,
    pub two_over_d: f64,
    /// Largest `|delta - 2/d|` over the samples.
    pub residual: f64,
}

pub const SWEEP_HEADER: &str = "twice_j,d,delta,two_over_d,residual";

impl SweepRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.twice_j,
            self.d,
            fmt_csv(self.delta),
            fmt_csv(self.two_over_d),
            fmt_csv(self.residual)
        )
    }
}

/// Accuracy for every `2j = 1..=twice_j_max`, each at `samples` random group elements.
pub fn covariant_sweep(twice_j_max: u32, samples: usize, seed: u64) -> Result<Vec<SweepRow>> {
    if twice_j_max == 0 || samples == 0 {
        return Err(Error::InvalidArgument("sweep needs j_max >= 1/2 and samples >= 1".into()));
    }
    (1..=twice_j_max)
        .into_par_iter()
        .map(|tj| {
            let det = covariant_detector::<f64>(tj)?;
            let mut rng = rng_from_seed(seed.wrapping_add(tj as u64));
            let d = tj as usize + 1;
            let exact = 2.0 / d as f64;
            let mut sum = 0.0;
            let mut residual: f64 = 0.0;
            for _ in 0..samples {
                let acc = covariant_accuracy_with(&det, &GroupElement::random_with(&mut rng))?;
                sum += acc.delta;
                residual = residual.max((acc.delta - exact).abs());
            }
            Ok(SweepRow {
                twice_j: tj,
                d,
                delta: sum / samples as f64,
                two_over_d: exact,
                residual,
            })
        })
        .collect()
}

pub fn write_sweep<W: Write>(rows: &[SweepRow], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.csv())?;
    }
    Ok(())
}
