//! Programmed channels `rho -> Tr_2[V (rho ⊗ sigma) V^dag]`, the operator `S(U, V)`
//! and channel fidelities against target unitaries.
//!
//! Conventions: tensor products put the system first; complex conjugation and
//! transposition are taken in the computational basis. For an eigenvector `|v_k>`
//! of `V` we write `Psi_k` for the `d_s x d_a` matrix with `(Psi_k)_{ij} = <i, j|v_k>`.
//! With these conventions
//!
//! ```text
//! S(U, V) = sum_k e^{-i theta_k} Psi_k^dag U Psi_k = Tr_1[(U^T ⊗ I) V^*]
//! F(U, P_{V,sigma}) = Tr[sigma^T S^dag S] / d_s^2
//! ```
//!
//! so the best program for a target `U` is the conjugated top eigenvector of `S^dag S`.

use std::sync::OnceLock;

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    basis_vector, eig_hermitian, eig_unitary, haar_pure_vector_with, lambda_max, rng_from_seed,
    tolerances, ComplexMatrix, DensityState, MatrixJson, Subsystem, UnitaryOp,
};
use crate::scalar::{c, Real, C};
use crate::search::{minimize_on_sphere, SearchConfig};

/// Eigenvalues of `sigma` below this are dropped from the Kraus construction.
const KRAUS_EIGEN_CUTOFF: f64 = 1e-12;

/// A channel `rho -> sum_i C_i rho C_i^dag` with `sum_i C_i^dag C_i = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel<T: Real> {
    ops: Vec<ComplexMatrix<T>>,
}

impl<T: Real> KrausChannel<T> {
    pub fn new(ops: Vec<ComplexMatrix<T>>) -> Result<Self> {
        let ch = Self::new_unchecked(ops)?;
        let dev = ch.completeness_deviation();
        if dev > T::tol(1e-9) {
            return Err(Error::InvalidChannel(format!(
                "sum C^dag C deviates from identity by {:e}",
                dev.to_f64_lossy()
            )));
        }
        Ok(ch)
    }

    fn new_unchecked(ops: Vec<ComplexMatrix<T>>) -> Result<Self> {
        let Some(first) = ops.first() else {
            return Err(Error::InvalidChannel("no Kraus operators".into()));
        };
        let d = first.rows();
        if ops.iter().any(|k| k.dim() != (d, d)) {
            return Err(Error::InvalidChannel("Kraus operators must all be d x d".into()));
        }
        Ok(Self { ops })
    }

    /// The unitary channel `rho -> U rho U^dag`.
    pub fn unitary(u: &UnitaryOp<T>) -> Self {
        Self {
            ops: vec![u.matrix().clone()],
        }
    }

    pub fn ops(&self) -> &[ComplexMatrix<T>] {
        &self.ops
    }

    pub fn dim(&self) -> usize {
        self.ops[0].rows()
    }

    pub fn completeness_deviation(&self) -> T {
        let d = self.dim();
        let mut acc = ComplexMatrix::zeros(d, d);
        for k in &self.ops {
            acc += &k.adjoint().matmul(k);
        }
        acc.max_abs_diff(&ComplexMatrix::identity(d))
    }

    /// Apply to any `d x d` operator (the map is linear).
    pub fn apply(&self, rho: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        let d = self.dim();
        if rho.dim() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "channel on dimension {d} applied to {}x{} operator",
                rho.rows(),
                rho.cols()
            )));
        }
        let mut out = ComplexMatrix::zeros(d, d);
        for k in &self.ops {
            out += &k.matmul(rho).matmul(&k.adjoint());
        }
        Ok(out)
    }
}

/// Eigen-data of the joint unitary: phases `e^{i theta_k}` and reshaped eigenvectors.
#[derive(Debug, Clone)]
pub struct GateEigen<T: Real> {
    pub phases: Vec<C<T>>,
    pub psi: Vec<ComplexMatrix<T>>,
}

/// Fixed joint unitary on system ⊗ ancilla.
#[derive(Debug, Clone)]
pub struct ProgrammableGate<T: Real> {
    v: UnitaryOp<T>,
    d_s: usize,
    d_a: usize,
    eigen: OnceLock<GateEigen<T>>,
}

impl<T: Real> ProgrammableGate<T> {
    pub fn new(v: UnitaryOp<T>, d_s: usize, d_a: usize) -> Result<Self> {
        if d_s == 0 || d_a == 0 || d_s * d_a != v.dim() {
            return Err(Error::DimensionMismatch(format!(
                "joint unitary of dimension {} does not factor as {d_s} x {d_a}",
                v.dim()
            )));
        }
        Ok(Self {
            v,
            d_s,
            d_a,
            eigen: OnceLock::new(),
        })
    }

    /// Splits a joint unitary whose system dimension is `d_s`.
    pub fn with_system_dim(v: UnitaryOp<T>, d_s: usize) -> Result<Self> {
        if d_s == 0 || !v.dim().is_multiple_of(d_s) {
            return Err(Error::DimensionMismatch(format!(
                "joint dimension {} is not a multiple of {d_s}",
                v.dim()
            )));
        }
        let d_a = v.dim() / d_s;
        Self::new(v, d_s, d_a)
    }

    pub fn unitary(&self) -> &UnitaryOp<T> {
        &self.v
    }

    pub fn system_dim(&self) -> usize {
        self.d_s
    }

    pub fn ancilla_dim(&self) -> usize {
        self.d_a
    }

    /// Lazily computed eigen-data of `V`.
    pub fn eigen(&self) -> Result<&GateEigen<T>> {
        if let Some(e) = self.eigen.get() {
            return Ok(e);
        }
        let eig = eig_unitary(self.v.matrix())?;
        let n = self.v.dim();
        let psi = (0..n)
            .map(|k| {
                let col = eig.vector(k);
                ComplexMatrix::from_fn(self.d_s, self.d_a, |i, j| col[i * self.d_a + j])
            })
            .collect();
        let computed = GateEigen {
            phases: eig.phases,
            psi,
        };
        Ok(self.eigen.get_or_init(|| computed))
    }

    /// `Tr_2[V (rho ⊗ sigma) V^dag]` evaluated directly on the joint space.
    pub fn apply_direct(
        &self,
        rho: &ComplexMatrix<T>,
        sigma: &ComplexMatrix<T>,
    ) -> Result<ComplexMatrix<T>> {
        if rho.dim() != (self.d_s, self.d_s) || sigma.dim() != (self.d_a, self.d_a) {
            return Err(Error::DimensionMismatch("input/program dimensions".into()));
        }
        let v = self.v.matrix();
        v.matmul(&rho.kron(sigma))
            .matmul(&v.adjoint())
            .partial_trace((self.d_s, self.d_a), Subsystem::Second)
    }
}

/// Kraus form of the programmed channel `P_{V, sigma}`.
///
/// `C_nm = sum_k e^{i theta_k} Psi_k |u_n^*><u_m^*| Psi_k^dag sqrt(lambda_m)` where
/// `sigma = sum_m lambda_m |u_m><u_m|`. Pairs `(n, m)` are ordered lexicographically;
/// components with `lambda_m` below `1e-12` are dropped.
pub fn programmed_channel<T: Real>(
    g: &ProgrammableGate<T>,
    sigma: &DensityState<T>,
) -> Result<KrausChannel<T>> {
    if sigma.dim() != g.d_a {
        return Err(Error::DimensionMismatch(format!(
            "program state of dimension {} for ancilla of dimension {}",
            sigma.dim(),
            g.d_a
        )));
    }
    let eg = g.eigen()?;
    let es = eig_hermitian(sigma.matrix())?;
    let conj_vecs: Vec<Vec<C<T>>> = (0..g.d_a)
        .map(|n| es.vector(n).into_iter().map(|z| z.conj()).collect())
        .collect();
    // Psi_k |u^*> for every eigen-index k and program eigenvector.
    let mapped: Vec<Vec<Vec<C<T>>>> = eg
        .psi
        .iter()
        .map(|p| conj_vecs.iter().map(|u| p.matvec(u)).collect())
        .collect();

    let cutoff = T::lit(KRAUS_EIGEN_CUTOFF);
    let mut ops = Vec::new();
    for n in 0..g.d_a {
        for m in 0..g.d_a {
            let lam = es.values[m];
            if lam < cutoff {
                continue;
            }
            let mut op = ComplexMatrix::zeros(g.d_s, g.d_s);
            for (k, phase) in eg.phases.iter().enumerate() {
                op += &ComplexMatrix::outer(&mapped[k][n], &mapped[k][m]).scale(*phase);
            }
            ops.push(op.scale_real(lam.sqrt()));
        }
    }
    KrausChannel::new(ops)
}

fn check_square_dim<T: Real>(u: &UnitaryOp<T>, d: usize) -> Result<()> {
    if u.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "target unitary of dimension {} for system of dimension {d}",
            u.dim()
        )));
    }
    Ok(())
}

/// `F(U, C) = (1/d^2) sum_i |Tr[C_i^dag U]|^2`.
pub fn channel_fidelity<T: Real>(u: &UnitaryOp<T>, ch: &KrausChannel<T>) -> Result<T> {
    check_square_dim(u, ch.dim())?;
    let d = T::from_count(ch.dim());
    let total: T = ch.ops().iter().map(|k| k.hs_inner(u.matrix()).norm_sqr()).sum();
    Ok((total / (d * d)).min(T::one()).max(T::zero()))
}

/// `sqrt(1 - F)`.
pub fn distance_from_fidelity<T: Real>(f: T) -> T {
    (T::one() - f).max(T::zero()).sqrt()
}

pub fn channel_distance<T: Real>(u: &UnitaryOp<T>, ch: &KrausChannel<T>) -> Result<T> {
    channel_fidelity(u, ch).map(distance_from_fidelity)
}

/// Pure-state averaged input-output fidelity from the channel fidelity: `(1 + d F)/(d + 1)`.
pub fn avg_io_from_fidelity<T: Real>(f: T, d: usize) -> T {
    let d = T::from_count(d);
    (T::one() + d * f) / (d + T::one())
}

pub fn avg_io_fidelity<T: Real>(u: &UnitaryOp<T>, ch: &KrausChannel<T>) -> Result<T> {
    Ok(avg_io_from_fidelity(channel_fidelity(u, ch)?, ch.dim()))
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            std_err: (var / n).sqrt(),
            samples: xs.len(),
        }
    }
}

/// Monte Carlo average of `<psi| U^dag C(|psi><psi|) U |psi>` over Haar pure states.
pub fn avg_io_fidelity_mc<T: Real>(
    u: &UnitaryOp<T>,
    ch: &KrausChannel<T>,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    check_square_dim(u, ch.dim())?;
    let mut rng = rng_from_seed(seed);
    let d = ch.dim();
    let mut xs = Vec::with_capacity(samples);
    for _ in 0..samples {
        let psi = haar_pure_vector_with::<T, _>(d, &mut rng);
        let out = ch.apply(&ComplexMatrix::projector(&psi))?;
        let target = u.matrix().matvec(&psi);
        xs.push(out.sandwich(&target, &target).re.to_f64_lossy());
    }
    Ok(Estimate::from_samples(&xs))
}

/// `S(U, V) = sum_k e^{-i theta_k} Psi_k^dag U Psi_k`.
pub fn s_matrix_eigen<T: Real>(u: &UnitaryOp<T>, g: &ProgrammableGate<T>) -> Result<ComplexMatrix<T>> {
    check_square_dim(u, g.d_s)?;
    let eg = g.eigen()?;
    let mut s = ComplexMatrix::zeros(g.d_a, g.d_a);
    for (phase, psi) in eg.phases.iter().zip(&eg.psi) {
        s += &psi.adjoint().matmul(u.matrix()).matmul(psi).scale(phase.conj());
    }
    Ok(s)
}

/// `S(U, V) = Tr_1[(U^T ⊗ I) V^*]`.
pub fn s_matrix_partial_trace<T: Real>(
    u: &UnitaryOp<T>,
    g: &ProgrammableGate<T>,
) -> Result<ComplexMatrix<T>> {
    check_square_dim(u, g.d_s)?;
    u.matrix()
        .transpose()
        .kron(&ComplexMatrix::identity(g.d_a))
        .matmul(&g.v.matrix().conj())
        .partial_trace((g.d_s, g.d_a), Subsystem::First)
}

/// `S(U, V)` computed along both routes; fails if they disagree.
pub fn s_matrix<T: Real>(u: &UnitaryOp<T>, g: &ProgrammableGate<T>) -> Result<ComplexMatrix<T>> {
    let traced = s_matrix_partial_trace(u, g)?;
    let summed = s_matrix_eigen(u, g)?;
    let residual = traced.max_abs_diff(&summed);
    let scale = T::one().max(traced.max_abs());
    if residual > T::tol(tolerances().eig * 100.0) * scale {
        return Err(Error::PathDisagreement {
            residual: residual.to_f64_lossy(),
        });
    }
    Ok(traced)
}

/// `Tr[sigma^T S^dag S] / d_s^2`: the fidelity of `P_{V, sigma}` with `U`.
pub fn fidelity_for_program<T: Real>(
    u: &UnitaryOp<T>,
    g: &ProgrammableGate<T>,
    sigma: &DensityState<T>,
) -> Result<T> {
    if sigma.dim() != g.d_a {
        return Err(Error::DimensionMismatch("program state dimension".into()));
    }
    let s = s_matrix(u, g)?;
    let d = T::from_count(g.d_s);
    let val = sigma.matrix().transpose().matmul(&s.adjoint().matmul(&s)).trace().re;
    Ok(val / (d * d))
}

/// Optimal program for a target unitary.
#[derive(Debug, Clone)]
pub struct ProgramFidelity<T: Real> {
    pub fidelity: T,
    pub best_program: DensityState<T>,
}

/// `F(U, V) = max_sigma F(U, P_{V, sigma}) = ||S(U, V)||^2 / d_s^2`.
pub fn program_fidelity<T: Real>(u: &UnitaryOp<T>, g: &ProgrammableGate<T>) -> Result<ProgramFidelity<T>> {
    let s = s_matrix(u, g)?;
    let ss = s.adjoint().matmul(&s);
    let eig = eig_hermitian(&ss)?;
    let d = T::from_count(g.d_s);
    let top: Vec<C<T>> = eig.vector(0).into_iter().map(|z| z.conj()).collect();
    Ok(ProgramFidelity {
        fidelity: eig.values[0] / (d * d),
        best_program: DensityState::pure(&top)?,
    })
}

/// Qubit unitary `n0 I + i (n1 X + n2 Y + n3 Z)` from a unit 4-vector.
pub fn bloch_unitary<T: Real>(n: &[f64; 4]) -> UnitaryOp<T> {
    let [a, b, cc, d] = n.map(T::lit);
    UnitaryOp::new_unchecked(ComplexMatrix::from_rows(&[
        vec![c(a, d), c(cc, b)],
        vec![c(-cc, b), c(a, -d)],
    ]))
}

/// Worst-case search result.
#[derive(Debug, Clone)]
pub struct WorstCase<T: Real> {
    pub fidelity: T,
    pub worst_u: UnitaryOp<T>,
    pub bloch: [f64; 4],
    pub starts: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct WorstCaseReport {
    pub fidelity: f64,
    pub worst_u: MatrixJson,
    pub starts: usize,
    pub iterations: usize,
}

impl<T: Real> WorstCase<T> {
    pub fn report(&self) -> WorstCaseReport {
        WorstCaseReport {
            fidelity: self.fidelity.to_f64_lossy(),
            worst_u: MatrixJson::from_matrix(self.worst_u.matrix()),
            starts: self.starts,
            iterations: self.iterations,
        }
    }
}

/// `U -> ||S(U, V)||^2 / 4` for a qubit system, with `S` expanded linearly in the
/// entries of `U` so each evaluation is a handful of small products.
struct QubitObjective<T: Real> {
    // basis[a][b] = Tr_1[(|b><a| ⊗ I) V^*]
    basis: [[ComplexMatrix<T>; 2]; 2],
}

impl<T: Real> QubitObjective<T> {
    fn new(g: &ProgrammableGate<T>) -> Result<Self> {
        let vc = g.v.matrix().conj();
        let id = ComplexMatrix::identity(g.d_a);
        let mk = |a: usize, b: usize| -> Result<ComplexMatrix<T>> {
            let e = ComplexMatrix::outer(&basis_vector::<T>(2, b), &basis_vector::<T>(2, a));
            e.kron(&id)
                .matmul(&vc)
                .partial_trace((2, g.d_a), Subsystem::First)
        };
        Ok(Self {
            basis: [[mk(0, 0)?, mk(0, 1)?], [mk(1, 0)?, mk(1, 1)?]],
        })
    }

    fn eval(&self, u: &ComplexMatrix<T>) -> T {
        let mut s = self.basis[0][0].scale(u[(0, 0)]);
        s += &self.basis[0][1].scale(u[(0, 1)]);
        s += &self.basis[1][0].scale(u[(1, 0)]);
        s += &self.basis[1][1].scale(u[(1, 1)]);
        let ss = s.adjoint().matmul(&s);
        lambda_max(&ss) / T::lit(4.0)
    }
}

/// `F(V) = min_U F(U, V)` for a qubit system, searched over Bloch 4-vectors.
pub fn worst_case_fidelity<T: Real>(
    g: &ProgrammableGate<T>,
    config: &SearchConfig,
) -> Result<WorstCase<T>> {
    if g.d_s != 2 {
        return Err(Error::Unsupported(format!(
            "worst-case search needs a qubit system, got dimension {}",
            g.d_s
        )));
    }
    let obj = QubitObjective::new(g)?;
    let found = minimize_on_sphere(
        |n| obj.eval(bloch_unitary::<T>(n).matrix()).to_f64_lossy(),
        config,
    );
    let worst_u = bloch_unitary::<T>(&found.point);
    Ok(WorstCase {
        fidelity: obj.eval(worst_u.matrix()),
        worst_u,
        bloch: found.point,
        starts: found.starts,
        iterations: found.iterations,
    })
}

/// Channel fidelity computed from the Choi operator of `P_{V, sigma}`, with the
/// channel evaluated by the direct partial trace on each `|a><b|`.
pub fn fidelity_via_partial_trace<T: Real>(
    u: &UnitaryOp<T>,
    g: &ProgrammableGate<T>,
    sigma: &DensityState<T>,
) -> Result<T> {
    check_square_dim(u, g.d_s)?;
    let d = g.d_s;
    // <Phi_U| (P ⊗ I)(|Phi><Phi|) |Phi_U>, |Phi_U> = sum_a U|a> ⊗ |a> / sqrt(d)
    let mut total = C::<T>::zero();
    for a in 0..d {
        for b in 0..d {
            let eab = ComplexMatrix::outer(&basis_vector::<T>(d, a), &basis_vector::<T>(d, b));
            let out = g.apply_direct(&eab, sigma.matrix())?;
            let ua = u.matrix().col(a);
            let ub = u.matrix().col(b);
            total += out.sandwich(&ua, &ub);
        }
    }
    let dd = T::from_count(d);
    Ok(total.re / (dd * dd))
}

/// Kraus-sum value `sum_{nm} |Tr[C_nm^dag U]|^2 / d^2` for an explicit program.
pub fn kraus_sum_fidelity<T: Real>(
    u: &UnitaryOp<T>,
    g: &ProgrammableGate<T>,
    sigma: &DensityState<T>,
) -> Result<T> {
    channel_fidelity(u, &programmed_channel(g, sigma)?)
}
