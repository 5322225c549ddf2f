//! POVMs, programmable detectors and the POVM distance.
//!
//! A programmable detector is a joint POVM `{F_i}` on system ⊗ ancilla; the program
//! state `sigma` selects the system POVM `P_i = Tr_2[(I ⊗ sigma) F_i]`. Accuracy is
//! measured by
//!
//! ```text
//! delta(P, Q) = max_rho sum_i |Tr[rho (P_i - Q_i)]|
//!             = max_{s in {±1}^n} lambda_max(sum_i s_i (P_i - Q_i))
//! ```
//!
//! since `sum_i |x_i| = max_s sum_i s_i x_i` and the two maximizations commute.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, ginibre, lambda_max, op_norm, rng_from_seed, tolerances, ComplexMatrix,
    DensityState, MatrixJson, PovmJson,
};
use crate::scalar::{cr, Real, C};

/// Default cap on the number of outcomes for exact sign enumeration.
pub const SIGN_ENUMERATION_CAP: usize = 20;

/// Positive operators summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm<T: Real> {
    elements: Vec<ComplexMatrix<T>>,
}

impl<T: Real> Povm<T> {
    pub fn new(elements: Vec<ComplexMatrix<T>>) -> Result<Self> {
        let tol = tolerances();
        let p = Self::new_unchecked(elements)?;
        let d = p.dim();
        for (i, e) in p.elements.iter().enumerate() {
            let dev = e.hermitian_deviation();
            if dev > T::tol(tol.herm) {
                return Err(Error::InvalidPovm(format!(
                    "element {i} is not Hermitian (deviation {:e})",
                    dev.to_f64_lossy()
                )));
            }
            let min = *eig_hermitian(&e.hermitian_part())?.values.last().expect("d >= 1");
            if min < -T::tol(tol.psd) {
                return Err(Error::InvalidPovm(format!(
                    "element {i} has negative eigenvalue {:e}",
                    min.to_f64_lossy()
                )));
            }
        }
        let dev = p.completeness_deviation();
        if dev > T::tol(tol.trace) * T::from_count(d).max(T::one()) {
            return Err(Error::InvalidPovm(format!(
                "elements sum to identity only within {:e}",
                dev.to_f64_lossy()
            )));
        }
        Ok(p)
    }

    /// Shape checks only.
    pub(crate) fn new_unchecked(elements: Vec<ComplexMatrix<T>>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::InvalidPovm("no elements".into()));
        };
        let d = first.rows();
        if d == 0 || elements.iter().any(|e| e.dim() != (d, d)) {
            return Err(Error::InvalidPovm("elements must all be d x d with d >= 1".into()));
        }
        Ok(Self { elements })
    }

    /// Projective measurement in the basis given by orthonormal `vectors`.
    pub fn from_basis(vectors: &[Vec<C<T>>]) -> Result<Self> {
        Self::new(vectors.iter().map(|v| ComplexMatrix::projector(v)).collect())
    }

    pub fn elements(&self) -> &[ComplexMatrix<T>] {
        &self.elements
    }

    pub fn outcomes(&self) -> usize {
        self.elements.len()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].rows()
    }

    /// `max |sum_i P_i - I|`.
    pub fn completeness_deviation(&self) -> T {
        let mut sum = ComplexMatrix::zeros(self.dim(), self.dim());
        for e in &self.elements {
            sum += e;
        }
        sum.max_abs_diff(&ComplexMatrix::identity(self.dim()))
    }

    /// Largest `|P_i P_j - delta_ij P_i|` entry.
    pub fn projectivity_deviation(&self) -> T {
        let mut worst = T::zero();
        for (i, a) in self.elements.iter().enumerate() {
            for (j, b) in self.elements.iter().enumerate() {
                let prod = a.matmul(b);
                let dev = if i == j {
                    prod.max_abs_diff(a)
                } else {
                    prod.max_abs()
                };
                worst = worst.max(dev);
            }
        }
        worst
    }

    pub fn to_json(&self) -> PovmJson {
        self.elements.iter().map(MatrixJson::from_matrix).collect()
    }

    pub fn from_json(json: &PovmJson) -> Result<Self> {
        let elements = json
            .iter()
            .enumerate()
            .map(|(i, m)| {
                m.to_matrix()
                    .map_err(|e| Error::Format(format!("element {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(elements)
    }
}

/// Joint POVM `{F_i}` on a `d_s * d_a` space.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgrammableDetector<T: Real> {
    observable: Povm<T>,
    d_s: usize,
    d_a: usize,
}

impl<T: Real> ProgrammableDetector<T> {
    pub fn new(observable: Povm<T>, d_s: usize, d_a: usize) -> Result<Self> {
        if d_s * d_a != observable.dim() {
            return Err(Error::DimensionMismatch(format!(
                "joint POVM of dimension {} is not {d_s} x {d_a}",
                observable.dim()
            )));
        }
        Ok(Self {
            observable,
            d_s,
            d_a,
        })
    }

    pub fn observable(&self) -> &Povm<T> {
        &self.observable
    }

    pub fn system_dim(&self) -> usize {
        self.d_s
    }

    pub fn ancilla_dim(&self) -> usize {
        self.d_a
    }
}

/// `Tr[rho P_i]` for every outcome.
pub fn born_probabilities<T: Real>(p: &Povm<T>, rho: &DensityState<T>) -> Result<Vec<T>> {
    if p.dim() != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "POVM on dimension {} applied to a state of dimension {}",
            p.dim(),
            rho.dim()
        )));
    }
    // Tr[rho P] = sum_ab rho_ab P_ba; both Hermitian so the result is real.
    Ok(p.elements
        .iter()
        .map(|e| rho.matrix().hs_inner(e).re)
        .collect())
}

/// `P_i = Tr_2[(I ⊗ sigma) F_i]`.
pub fn programmed_povm<T: Real>(
    det: &ProgrammableDetector<T>,
    sigma: &DensityState<T>,
) -> Result<Povm<T>> {
    let (ds, da) = (det.d_s, det.d_a);
    if sigma.dim() != da {
        return Err(Error::DimensionMismatch(format!(
            "program of dimension {} for an ancilla of dimension {da}",
            sigma.dim()
        )));
    }
    let s = sigma.matrix();
    let elements = det
        .observable
        .elements()
        .iter()
        .map(|f| {
            // (P)_ab = sum_{c,e} sigma_ce F_{(a,e),(b,c)}
            ComplexMatrix::from_fn(ds, ds, |a, b| {
                let mut acc = C::new(T::zero(), T::zero());
                for cc in 0..da {
                    for e in 0..da {
                        acc += s[(cc, e)] * f[(a * da + e, b * da + cc)];
                    }
                }
                acc
            })
            .hermitian_part()
        })
        .collect();
    Povm::new_unchecked(elements)
}

fn check_pair<T: Real>(p: &Povm<T>, q: &Povm<T>) -> Result<()> {
    if p.outcomes() != q.outcomes() || p.dim() != q.dim() {
        return Err(Error::DimensionMismatch(format!(
            "POVMs with {} outcomes on dim {} vs {} outcomes on dim {}",
            p.outcomes(),
            p.dim(),
            q.outcomes(),
            q.dim()
        )));
    }
    Ok(())
}

fn differences<T: Real>(p: &Povm<T>, q: &Povm<T>) -> Vec<ComplexMatrix<T>> {
    p.elements
        .iter()
        .zip(&q.elements)
        .map(|(a, b)| (a - b).hermitian_part())
        .collect()
}

/// Exact `delta(P, Q)` by sign enumeration with the default outcome cap.
pub fn povm_distance<T: Real>(p: &Povm<T>, q: &Povm<T>) -> Result<T> {
    povm_distance_with_cap(p, q, SIGN_ENUMERATION_CAP)
}

pub fn povm_distance_with_cap<T: Real>(p: &Povm<T>, q: &Povm<T>, cap: usize) -> Result<T> {
    check_pair(p, q)?;
    let n = p.outcomes();
    if n > cap {
        return Err(Error::ResourceCap(format!(
            "{n} outcomes exceed the sign-enumeration cap of {cap}"
        )));
    }
    let deltas = differences(p, q);
    let d = p.dim();
    let patterns: u64 = 1 << n;
    let eval = |mask: u64| -> T {
        let mut m = ComplexMatrix::zeros(d, d);
        for (i, delta) in deltas.iter().enumerate() {
            if mask >> i & 1 == 1 {
                m += delta;
            } else {
                m = &m - delta;
            }
        }
        lambda_max(&m)
    };
    let best = if n >= 8 {
        (0..patterns).into_par_iter().map(eval).reduce(T::zero, T::max)
    } else {
        (0..patterns).map(eval).fold(T::zero(), T::max)
    };
    Ok(best)
}

/// Two-outcome qubit POVMs: `delta = 2 max |eig(P_0 - Q_0)|`.
pub fn povm_distance_qubit<T: Real>(p: &Povm<T>, q: &Povm<T>) -> Result<T> {
    check_pair(p, q)?;
    if p.outcomes() != 2 || p.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "qubit formula needs 2 outcomes on dimension 2, got {} on {}",
            p.outcomes(),
            p.dim()
        )));
    }
    let delta = (&p.elements[0] - &q.elements[0]).hermitian_part();
    // Closed form for a 2x2 Hermitian matrix: center ± radius.
    let a = delta[(0, 0)].re;
    let b = delta[(1, 1)].re;
    let half = T::lit(0.5);
    let center = (a + b) * half;
    let radius = (((a - b) * half).powi(2) + delta[(0, 1)].norm_sqr()).sqrt();
    Ok(T::lit(2.0) * (center.abs() + radius))
}

/// `delta <= sum_i ||Delta_i|| <= sum_i ||Delta_i||_2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceReport {
    pub delta: f64,
    pub op_sum: f64,
    pub frob_sum: f64,
}

impl DistanceReport {
    /// Whether the ordering holds within `tol`.
    pub fn chain_holds(&self, tol: f64) -> bool {
        self.delta <= self.op_sum + tol && self.op_sum <= self.frob_sum + tol
    }
}

pub fn distance_bound_chain<T: Real>(p: &Povm<T>, q: &Povm<T>) -> Result<DistanceReport> {
    let delta = povm_distance(p, q)?;
    let deltas = differences(p, q);
    let mut op_sum = T::zero();
    let mut frob_sum = T::zero();
    for d in &deltas {
        op_sum += op_norm(d);
        frob_sum += d.frobenius_norm();
    }
    Ok(DistanceReport {
        delta: delta.to_f64_lossy(),
        op_sum: op_sum.to_f64_lossy(),
        frob_sum: frob_sum.to_f64_lossy(),
    })
}

/// `S^{-1/2} G_i S^{-1/2}` with `G_i = A_i A_i^dag` Ginibre and `S = sum_i G_i`.
pub fn random_povm_with<T: Real, R: Rng + ?Sized>(
    outcomes: usize,
    dim: usize,
    rng: &mut R,
) -> Povm<T> {
    assert!(outcomes >= 1 && dim >= 1, "need at least one outcome and dimension one");
    let gs: Vec<ComplexMatrix<T>> = (0..outcomes)
        .map(|_| {
            let a = ginibre::<T, R>(dim, rng);
            a.matmul(&a.adjoint())
        })
        .collect();
    let mut s = ComplexMatrix::zeros(dim, dim);
    for g in &gs {
        s += g;
    }
    let eig = eig_hermitian(&s.hermitian_part()).expect("Hermitian sum");
    let mut inv_sqrt = ComplexMatrix::zeros(dim, dim);
    for k in 0..dim {
        let w = T::one() / eig.values[k].sqrt();
        inv_sqrt += &ComplexMatrix::projector(&eig.vector(k)).scale(cr(w));
    }
    let elements = gs
        .iter()
        .map(|g| inv_sqrt.matmul(g).matmul(&inv_sqrt).hermitian_part())
        .collect();
    Povm::new_unchecked(elements).expect("nonempty")
}

pub fn random_povm<T: Real>(outcomes: usize, dim: usize, seed: u64) -> Povm<T> {
    random_povm_with(outcomes, dim, &mut rng_from_seed(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_vector, random_density, Subsystem};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    fn plus_minus() -> Povm<f64> {
        let h = FRAC_1_SQRT_2;
        Povm::from_basis(&[vec![cr(h), cr(h)], vec![cr(h), cr(-h)]]).unwrap()
    }

    fn computational(d: usize) -> Povm<f64> {
        Povm::from_basis(&(0..d).map(|k| basis_vector(d, k)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn rejects_bad_povms() {
        let id = ComplexMatrix::<f64>::identity(2);
        assert!(Povm::new(vec![id.clone(), id.clone()]).is_err());
        assert!(Povm::new(vec![ComplexMatrix::<f64>::diag_real(&[2.0, 1.0]), ComplexMatrix::diag_real(&[-1.0, 0.0])]).is_err());
        let non_herm = ComplexMatrix::from_rows(&[vec![cr(0.5), cr(0.1)], vec![cr(0.0), cr(0.5)]]);
        assert!(Povm::new(vec![non_herm.clone(), &id - &non_herm]).is_err());
        assert!(Povm::<f64>::new(vec![]).is_err());
        assert!(Povm::new(vec![id, ComplexMatrix::zeros(3, 3)]).is_err());
    }

    #[test]
    fn born_examples() {
        let z = computational(2);
        let zero = DensityState::pure(&basis_vector(2, 0)).unwrap();
        let p = born_probabilities(&z, &zero).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1].abs() < 1e-15);
        let mixed = DensityState::maximally_mixed(2);
        let p = born_probabilities(&z, &mixed).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        let p = born_probabilities(&plus_minus(), &zero).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        assert!(born_probabilities(&z, &DensityState::maximally_mixed(3)).is_err());
    }

    #[test]
    fn program_independent_detector() {
        let p = random_povm::<f64>(3, 2, 4);
        let joint = Povm::new(
            p.elements()
                .iter()
                .map(|e| e.kron(&ComplexMatrix::identity(3)))
                .collect(),
        )
        .unwrap();
        let det = ProgrammableDetector::new(joint, 2, 3).unwrap();
        for seed in 0..5 {
            let q = programmed_povm(&det, &random_density(3, seed)).unwrap();
            for (a, b) in p.elements().iter().zip(q.elements()) {
                assert!(a.max_abs_diff(b) < 1e-12);
            }
        }
        assert!(programmed_povm(&det, &DensityState::maximally_mixed(2)).is_err());
        assert!(ProgrammableDetector::new(p, 3, 3).is_err());
    }

    #[test]
    fn programmed_matches_partial_trace_and_born() {
        let joint = random_povm::<f64>(3, 6, 8);
        let det = ProgrammableDetector::new(joint.clone(), 2, 3).unwrap();
        let sigma = random_density::<f64>(3, 9);
        let q = programmed_povm(&det, &sigma).unwrap();
        let lifted = ComplexMatrix::identity(2).kron(sigma.matrix());
        for (f, qi) in joint.elements().iter().zip(q.elements()) {
            let direct = lifted.matmul(f).partial_trace((2, 3), Subsystem::Second).unwrap();
            assert!(direct.max_abs_diff(qi) < 1e-12);
        }
        let rho = random_density::<f64>(2, 10);
        let joint_state = DensityState::new(rho.matrix().kron(sigma.matrix())).unwrap();
        let lhs = born_probabilities(&joint, &joint_state).unwrap();
        let rhs = born_probabilities(&q, &rho).unwrap();
        assert!(lhs.iter().zip(&rhs).all(|(a, b)| (a - b).abs() < 1e-12));
        assert!(Povm::new(q.elements().to_vec()).is_ok());
    }

    #[test]
    fn distance_examples() {
        let z = computational(2);
        let x = plus_minus();
        assert!(povm_distance(&z, &z).unwrap().abs() < 1e-15);
        assert!((povm_distance(&z, &x).unwrap() - SQRT_2).abs() < 1e-12);
        assert!((povm_distance_qubit(&z, &x).unwrap() - SQRT_2).abs() < 1e-12);
        let r = distance_bound_chain(&z, &x).unwrap();
        assert!((r.delta - SQRT_2).abs() < 1e-12);
        assert!((r.op_sum - SQRT_2).abs() < 1e-12);
        assert!((r.frob_sum - 2.0).abs() < 1e-12);
        let r = distance_bound_chain(&z, &z).unwrap();
        assert_eq!((r.delta, r.op_sum, r.frob_sum), (0.0, 0.0, 0.0));
    }

    #[test]
    fn qubit_read_off() {
        let p = Povm::new(vec![
            ComplexMatrix::<f64>::diag_real(&[1.0, 0.0]),
            ComplexMatrix::diag_real(&[0.0, 1.0]),
        ])
        .unwrap();
        let q = Povm::new(vec![
            ComplexMatrix::diag_real(&[2.0 / 3.0, 0.0]),
            ComplexMatrix::diag_real(&[1.0 / 3.0, 1.0]),
        ])
        .unwrap();
        assert!((povm_distance_qubit(&p, &q).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(povm_distance_qubit(&computational(3), &computational(3)).is_err());
    }

    #[test]
    fn cap_and_shape_errors() {
        let p = random_povm::<f64>(3, 2, 1);
        let q = random_povm::<f64>(3, 2, 2);
        assert!(matches!(povm_distance_with_cap(&p, &q, 2), Err(Error::ResourceCap(_))));
        assert!(povm_distance(&p, &random_povm::<f64>(2, 2, 2)).is_err());
    }

    #[test]
    fn random_povms_are_valid() {
        for seed in 0..10 {
            let p = random_povm::<f64>(1 + seed as usize % 4, 1 + seed as usize % 3, seed);
            assert!(Povm::new(p.elements().to_vec()).is_ok());
        }
    }

    #[test]
    fn json_round_trip() {
        let p = random_povm::<f64>(3, 2, 5);
        let text = serde_json::to_string(&p.to_json()).unwrap();
        let back = Povm::<f64>::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(p, back);
        let bad = vec![MatrixJson {
            rows: 2,
            cols: 2,
            entries: vec![[1.0, 0.0]; 3],
        }];
        assert!(matches!(Povm::<f64>::from_json(&bad), Err(Error::Format(_))));
    }

    #[test]
    fn projectivity() {
        assert!(plus_minus().projectivity_deviation() < 1e-15);
        assert!(random_povm::<f64>(2, 2, 3).projectivity_deviation() > 1e-3);
    }

    #[test]
    fn distance_is_symmetric_and_detects_difference() {
        let p = random_povm::<f64>(3, 3, 11);
        let q = random_povm::<f64>(3, 3, 12);
        let a = povm_distance(&p, &q).unwrap();
        let b = povm_distance(&q, &p).unwrap();
        assert!((a - b).abs() < 1e-12 && a > 1e-3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn triangle_inequality(seed in 0u64..1_000_000, n in 1usize..5, d in 1usize..4) {
            let p = random_povm::<f64>(n, d, seed);
            let q = random_povm::<f64>(n, d, seed + 1);
            let r = random_povm::<f64>(n, d, seed + 2);
            let pq = povm_distance(&p, &q).unwrap();
            let qr = povm_distance(&q, &r).unwrap();
            let pr = povm_distance(&p, &r).unwrap();
            prop_assert!(pr <= pq + qr + 1e-10);
            prop_assert!((pq - povm_distance(&q, &p).unwrap()).abs() < 1e-10);
        }

        #[test]
        fn qubit_formula_agrees(seed in 0u64..1_000_000) {
            let p = random_povm::<f64>(2, 2, seed);
            let q = random_povm::<f64>(2, 2, seed ^ 0x9e37);
            let general = povm_distance(&p, &q).unwrap();
            let closed = povm_distance_qubit(&p, &q).unwrap();
            prop_assert!((general - closed).abs() < 1e-12);
        }

        #[test]
        fn bound_chain_ordering(seed in 0u64..1_000_000, n in 1usize..5, d in 1usize..5) {
            let p = random_povm::<f64>(n, d, seed);
            let q = random_povm::<f64>(n, d, seed + 7);
            prop_assert!(distance_bound_chain(&p, &q).unwrap().chain_holds(1e-10));
        }

        #[test]
        fn programmed_povm_is_affine(seed in 0u64..1_000_000, lambda in 0.0f64..1.0) {
            let det = ProgrammableDetector::new(random_povm::<f64>(3, 4, seed), 2, 2).unwrap();
            let s1 = random_density::<f64>(2, seed + 1);
            let s2 = random_density::<f64>(2, seed + 2);
            let mixed = programmed_povm(&det, &s1.mix(&s2, lambda).unwrap()).unwrap();
            let a = programmed_povm(&det, &s1).unwrap();
            let b = programmed_povm(&det, &s2).unwrap();
            for i in 0..3 {
                let combo = &a.elements()[i].scale_real(lambda) + &b.elements()[i].scale_real(1.0 - lambda);
                prop_assert!(combo.max_abs_diff(&mixed.elements()[i]) <= 1e-12);
            }
            prop_assert!(Povm::new(mixed.elements().to_vec()).is_ok());
        }
    }
}
