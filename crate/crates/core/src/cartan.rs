//! Two-qubit programmable gates in canonical (Cartan) form.
//!
//! Modulo local unitaries every two-qubit `V` equals
//! `exp[i (a1 X⊗X^T + a2 Y⊗Y^T + a3 Z⊗Z^T)]`. Its eigenvectors are the reshaped
//! Pauli matrices `sigma_j / sqrt(2)` with eigenphases
//! `theta_0 = a1 + a2 + a3`, `theta_j = 2 a_j - theta_0`, and then
//!
//! ```text
//! S(U, V) = (1/2) sum_j e^{-i theta_j} sigma_j U sigma_j
//! min_U F(U, V) = min_j |t_j|^2 / 4,   t = H e^{-i theta}
//! ```
//!
//! with `H` the 4x4 Hadamard matrix. Since `H` is unitary, `sum_j |t_j|^2 = 4`, which
//! caps the worst-case fidelity at `1/4`.

use std::fmt;
use std::io::Write;

use num_traits::One;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{bloch_unitary, program_fidelity, ProgrammableGate};
use crate::error::{Error, Result};
use crate::linalg::{basis_vector, paulis, ComplexMatrix, UnitaryOp};
use crate::report::fmt_csv;
use crate::scalar::{c, cis, Real, C};
use crate::search::{minimize_on_sphere, SearchConfig};

/// Angles `(a1, a2, a3)` of the canonical form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartanParams<T> {
    pub alpha: [T; 3],
}

/// Eigenphases `(theta_0, .., theta_3)` of a canonical gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseVector<T> {
    pub theta: [T; 4],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TVector<T: Real> {
    pub t: [C<T>; 4],
}

impl<T: Real> CartanParams<T> {
    pub fn new(a1: T, a2: T, a3: T) -> Self {
        Self { alpha: [a1, a2, a3] }
    }

    pub fn phases(&self) -> PhaseVector<T> {
        let [a1, a2, a3] = self.alpha;
        let t0 = a1 + a2 + a3;
        let two = T::lit(2.0);
        PhaseVector {
            theta: [t0, two * a1 - t0, two * a2 - t0, two * a3 - t0],
        }
    }
}

impl<T: Real> PhaseVector<T> {
    pub fn new(theta: [T; 4]) -> Self {
        Self { theta }
    }

    /// `theta_i -> -theta_i`.
    pub fn negated(&self) -> Self {
        Self {
            theta: self.theta.map(|x| -x),
        }
    }
}

impl<T: Real> TVector<T> {
    pub fn moduli(&self) -> [T; 4] {
        self.t.map(|z| z.norm())
    }

    pub fn moduli_sq(&self) -> [T; 4] {
        self.t.map(|z| z.norm_sqr())
    }

    /// Arguments `phi_j` of `t_j = |t_j| e^{i phi_j}`.
    pub fn args(&self) -> [T; 4] {
        self.t.map(|z| z.arg())
    }

    pub fn sum_moduli_sq(&self) -> T {
        self.moduli_sq().iter().copied().sum()
    }
}

/// `Y^T = -Y`, the others are symmetric.
fn generator<T: Real>(j: usize) -> ComplexMatrix<T> {
    let p = paulis::<T>();
    p[j].kron(&p[j].transpose())
}

/// `exp[i sum_j a_j sigma_j ⊗ sigma_j^T]` as a product of commuting factors
/// `cos a I + i sin a G` (each generator squares to the identity).
pub fn cartan_to_unitary<T: Real>(p: &CartanParams<T>) -> UnitaryOp<T> {
    let id = ComplexMatrix::<T>::identity(4);
    let mut acc = id.clone();
    for (j, &a) in p.alpha.iter().enumerate() {
        let factor = &id.scale_real(a.cos()) + &generator::<T>(j + 1).scale(c(T::zero(), a.sin()));
        acc = acc.matmul(&factor);
    }
    UnitaryOp::new_unchecked(acc)
}

pub fn cartan_gate<T: Real>(p: &CartanParams<T>) -> ProgrammableGate<T> {
    ProgrammableGate::new(cartan_to_unitary(p), 2, 2).expect("4 = 2 x 2")
}

/// `t_0 = (1/2) sum_j e^{-i theta_j}`, `t_j = e^{-i theta_0} + e^{-i theta_j} - t_0`.
pub fn t_vector<T: Real>(theta: &PhaseVector<T>) -> TVector<T> {
    let e = theta.theta.map(|x| cis(-x));
    let t0 = (e[0] + e[1] + e[2] + e[3]) * T::lit(0.5);
    TVector {
        t: [t0, e[0] + e[1] - t0, e[0] + e[2] - t0, e[0] + e[3] - t0],
    }
}

/// The unitary 4x4 Hadamard matrix with entries `±1/2`.
pub fn hadamard4<T: Real>() -> [[T; 4]; 4] {
    let h = T::lit(0.5);
    [
        [h, h, h, h],
        [h, h, -h, -h],
        [h, -h, h, -h],
        [h, -h, -h, h],
    ]
}

/// Result of the closed-form minimum over target unitaries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormMin<T> {
    pub fidelity: T,
    /// `j` such that `U = sigma_j` (up to phase) is a worst-case target.
    pub worst_pauli_index: usize,
}

pub fn min_fidelity_from_phases<T: Real>(theta: &PhaseVector<T>) -> ClosedFormMin<T> {
    let m = t_vector(theta).moduli_sq();
    let (j, &v) = m
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
        .expect("four entries");
    ClosedFormMin {
        fidelity: v / T::lit(4.0),
        worst_pauli_index: j,
    }
}

/// `F(V) = min_j |t_j|^2 / d^2` with `d = 2`.
pub fn min_fidelity_closed<T: Real>(p: &CartanParams<T>) -> ClosedFormMin<T> {
    min_fidelity_from_phases(&p.phases())
}

/// `S(U, V) = (1/2) sum_j e^{-i theta_j} sigma_j U sigma_j`.
pub fn s_matrix_pauli<T: Real>(u: &ComplexMatrix<T>, theta: &PhaseVector<T>) -> ComplexMatrix<T> {
    let p = paulis::<T>();
    let mut s = ComplexMatrix::zeros(2, 2);
    for (j, pj) in p.iter().enumerate() {
        s += &pj.matmul(u).matmul(pj).scale(cis(-theta.theta[j]));
    }
    s.scale_real(T::lit(0.5))
}

/// `||S(U, V)||^2` from squared Bloch weights `u = (n_0^2, .., n_3^2)`:
/// `u.t + |v|`, `|v|^2 = 2 sum_ij u_i u_j |t_i|^2 |t_j|^2 sin^2(phi_i - phi_j)`.
pub fn appendix_norm_sq<T: Real>(u: &[T; 4], t: &TVector<T>) -> Result<T> {
    let tol = T::tol(1e-9);
    if u.iter().any(|&x| x < -tol || !x.is_finite()) {
        return Err(Error::InvalidArgument("weights must be nonnegative".into()));
    }
    let total: T = u.iter().copied().sum();
    if (total - T::one()).abs() > tol {
        return Err(Error::InvalidArgument(format!(
            "weights sum to {} instead of 1",
            total.to_f64_lossy()
        )));
    }
    let m = t.moduli_sq();
    let phi = t.args();
    let linear: T = u.iter().zip(&m).map(|(a, b)| *a * *b).sum();
    let mut quad = T::zero();
    for i in 0..4 {
        for j in 0..4 {
            let s = (phi[i] - phi[j]).sin();
            quad += u[i] * u[j] * m[i] * m[j] * s * s;
        }
    }
    Ok(linear + (T::lit(2.0) * quad).max(T::zero()).sqrt())
}

/// Squared Bloch weights of a qubit unitary `n0 I + i n.sigma` (times any phase).
pub fn bloch_weights<T: Real>(u: &ComplexMatrix<T>) -> [T; 4] {
    // |Tr[sigma_j U]|^2 / 4 = n_j^2 for a unit-determinant representative.
    let p = paulis::<T>();
    std::array::from_fn(|j| p[j].hs_inner(u).norm_sqr() / T::lit(4.0))
}

/// Sign choice for the optimal gate and its circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value<T: Real>(self) -> T {
        match self {
            Sign::Plus => T::one(),
            Sign::Minus => -T::one(),
        }
    }
}

impl std::str::FromStr for Sign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" | "+" => Ok(Sign::Plus),
            "minus" | "-" => Ok(Sign::Minus),
            other => Err(Error::InvalidArgument(format!("unknown sign {other:?}"))),
        }
    }
}

/// Gate of a two-qubit circuit; qubit 0 is the system, 1 the ancilla.
/// Rotations follow `W_a = exp(i a sigma_W / 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate<T> {
    Cnot { control: usize, target: usize },
    X { qubit: usize, angle: T },
    Z { qubit: usize, angle: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitDescription<T> {
    /// Time-ordered gates.
    pub gates: Vec<Gate<T>>,
}

fn on_qubit<T: Real>(m: &ComplexMatrix<T>, qubit: usize) -> ComplexMatrix<T> {
    let id = ComplexMatrix::identity(2);
    if qubit == 0 {
        m.kron(&id)
    } else {
        id.kron(m)
    }
}

impl<T: Real> Gate<T> {
    pub fn matrix(&self) -> ComplexMatrix<T> {
        let p = paulis::<T>();
        let half = T::lit(0.5);
        let rot = |pauli: &ComplexMatrix<T>, angle: T| {
            &ComplexMatrix::identity(2).scale_real((angle * half).cos())
                + &pauli.scale(c(T::zero(), (angle * half).sin()))
        };
        match *self {
            Gate::Cnot { control, target } => {
                let p0 = ComplexMatrix::projector(&basis_vector::<T>(2, 0));
                let p1 = ComplexMatrix::projector(&basis_vector::<T>(2, 1));
                let mut m = on_qubit(&p0, control);
                m += &on_qubit(&p1, control).matmul(&on_qubit(&p[1], target));
                m
            }
            Gate::X { qubit, angle } => on_qubit(&rot(&p[1], angle), qubit),
            Gate::Z { qubit, angle } => on_qubit(&rot(&p[3], angle), qubit),
        }
    }
}

impl<T: Real> CircuitDescription<T> {
    /// Product of the gates, last gate leftmost.
    pub fn unitary(&self) -> ComplexMatrix<T> {
        self.gates
            .iter()
            .fold(ComplexMatrix::identity(4), |acc, g| g.matrix().matmul(&acc))
    }
}

impl<T: Real> fmt::Display for CircuitDescription<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# qubit 0 = system, qubit 1 = ancilla; W_a = exp(i a sigma_W / 2)")?;
        for g in &self.gates {
            match g {
                Gate::Cnot { control, target } => writeln!(f, "CNOT {control} {target}")?,
                Gate::X { qubit, angle } => writeln!(f, "X {qubit} {}", angle.to_f64_lossy())?,
                Gate::Z { qubit, angle } => writeln!(f, "Z {qubit} {}", angle.to_f64_lossy())?,
            }
        }
        Ok(())
    }
}

/// Canonical angles of the optimal gate for a sign choice: `(s pi/4, 0, -s pi/4)`.
pub fn optimal_params<T: Real>(sign: Sign) -> CartanParams<T> {
    let a = T::FRAC_PI_4() * sign.value::<T>();
    CartanParams::new(a, T::zero(), -a)
}

/// The optimal programmable qubit gate `V = i exp[s i pi/4 (X⊗X - Z⊗Z)]` and the
/// CNOT / local-rotation / CNOT circuit realizing it up to the global phase `i`.
///
/// The global phase `i` puts the eigenvalues at `{1, i, -1, i}`.
pub fn optimal_v<T: Real>(sign: Sign) -> (ProgrammableGate<T>, CircuitDescription<T>) {
    let s = sign.value::<T>();
    let v = cartan_to_unitary(&optimal_params::<T>(sign))
        .into_matrix()
        .scale(C::i());
    let gate = ProgrammableGate::new(UnitaryOp::new_unchecked(v), 2, 2).expect("4 = 2 x 2");
    let circuit = CircuitDescription {
        gates: vec![
            Gate::Cnot { control: 0, target: 1 },
            Gate::X {
                qubit: 0,
                angle: s * T::FRAC_PI_2(),
            },
            Gate::Z {
                qubit: 1,
                angle: -s * T::FRAC_PI_2(),
            },
            Gate::Cnot { control: 0, target: 1 },
        ],
    };
    (gate, circuit)
}

/// `min_phi max |A - e^{i phi} B|` for equal-shape matrices.
pub fn distance_up_to_phase<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> T {
    let ov = b.hs_inner(a);
    let phase = if ov.norm() > T::zero() {
        ov / ov.norm()
    } else {
        C::one()
    };
    a.max_abs_diff(&b.scale(phase))
}

/// `sum_k V_k ⊗ |k><k|` on system ⊗ ancilla.
pub fn controlled_unitary_gate<T: Real>(
    v1: &UnitaryOp<T>,
    v2: &UnitaryOp<T>,
) -> Result<ProgrammableGate<T>> {
    if v1.dim() != 2 || v2.dim() != 2 {
        return Err(Error::DimensionMismatch("controlled unitaries must be 2x2".into()));
    }
    let p0 = ComplexMatrix::projector(&basis_vector::<T>(2, 0));
    let p1 = ComplexMatrix::projector(&basis_vector::<T>(2, 1));
    let mut m = v1.matrix().kron(&p0);
    m += &v2.matrix().kron(&p1);
    ProgrammableGate::new(UnitaryOp::new(m)?, 2, 2)
}

/// Real unit 4-vector `m` with `V = e^{i chi} (m0 I + i m.sigma)`.
pub fn bloch_vector<T: Real>(v: &UnitaryOp<T>) -> [f64; 4] {
    let m = v.matrix();
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let w = m.scale(cis(-det.arg() * T::lit(0.5)));
    let raw = [
        w[(0, 0)].re.to_f64_lossy(),
        w[(0, 1)].im.to_f64_lossy(),
        w[(0, 1)].re.to_f64_lossy(),
        w[(0, 0)].im.to_f64_lossy(),
    ];
    crate::search::normalize4(&raw)
}

#[derive(Debug, Clone)]
pub struct NoGoResult<T: Real> {
    /// `F(U, V)` of the controlled gate at `orthogonal_u`.
    pub min_fidelity: T,
    /// `max_k |Tr[V_k^dag U]|^2 / 4` at `orthogonal_u`.
    pub formula_fidelity: T,
    pub orthogonal_u: UnitaryOp<T>,
    /// Whether the numerical fallback was needed.
    pub used_fallback: bool,
}

/// A unitary orthogonal to both `V_1`, `V_2`, and the programmed fidelity there.
///
/// Writing each `V_k` and the unknown `U` in Bloch form, `Tr[V_k^dag U]` is a
/// phase times the real inner product of the Bloch 4-vectors, so any unit vector
/// in the orthogonal complement of `{m_1, m_2}` works.
pub fn controlled_no_go_check<T: Real>(v1: &UnitaryOp<T>, v2: &UnitaryOp<T>) -> Result<NoGoResult<T>> {
    let gate = controlled_unitary_gate(v1, v2)?;
    let m = [bloch_vector(v1), bloch_vector(v2)];
    let overlap = |u: &UnitaryOp<T>| -> T {
        [v1, v2]
            .iter()
            .map(|v| v.matrix().hs_inner(u.matrix()).norm_sqr())
            .fold(T::zero(), |a, b| a.max(b))
            / T::lit(4.0)
    };

    let mut best: Option<[f64; 4]> = None;
    let mut best_norm = 0.0;
    for k in 0..4 {
        let mut x = [0.0; 4];
        x[k] = 1.0;
        // Gram-Schmidt against m_1, m_2 (made orthonormal first).
        let q1 = m[0];
        let d = dot4(&m[1], &q1);
        let mut q2 = sub4(&m[1], &scale4(&q1, d));
        let n2 = norm4(&q2);
        let have_q2 = n2 > 1e-8;
        if have_q2 {
            q2 = scale4(&q2, 1.0 / n2);
        }
        x = sub4(&x, &scale4(&q1, dot4(&x, &q1)));
        if have_q2 {
            x = sub4(&x, &scale4(&q2, dot4(&x, &q2)));
        }
        let nx = norm4(&x);
        if nx > best_norm {
            best_norm = nx;
            best = Some(scale4(&x, 1.0 / nx));
        }
    }

    let mut used_fallback = false;
    let mut u = bloch_unitary::<T>(&best.expect("complement is nonempty"));
    if overlap(&u) > T::tol(1e-10) {
        used_fallback = true;
        let cfg = SearchConfig {
            grid_resolution: 10,
            ..Default::default()
        };
        let found = minimize_on_sphere(|n| overlap(&bloch_unitary::<T>(n)).to_f64_lossy(), &cfg);
        u = bloch_unitary::<T>(&found.point);
    }
    let pf = program_fidelity(&u, &gate)?;
    Ok(NoGoResult {
        min_fidelity: pf.fidelity,
        formula_fidelity: overlap(&u),
        orthogonal_u: u,
        used_fallback,
    })
}

fn dot4(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub4(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    std::array::from_fn(|i| a[i] - b[i])
}

fn scale4(a: &[f64; 4], s: f64) -> [f64; 4] {
    a.map(|x| x * s)
}

fn norm4(a: &[f64; 4]) -> f64 {
    dot4(a, a).sqrt()
}

/// Summary of a canonical-angle scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanSummary {
    pub rows: usize,
    pub max_fidelity: f64,
    pub argmax: [f64; 3],
}

pub const SCAN_HEADER: &str = "alpha1,alpha2,alpha3,abs_t0,abs_t1,abs_t2,abs_t3,fidelity";

/// Closed-form scan over `alpha_i = k pi / grid`, `k = 0..grid`, written as CSV.
///
/// Rows are ordered with `alpha1` slowest; slabs of fixed `alpha1` are computed in
/// parallel and written in order, so the output does not depend on thread count.
pub fn scan_cartan<W: Write>(grid: usize, out: &mut W) -> Result<ScanSummary> {
    if grid < 2 {
        return Err(Error::InvalidArgument("scan grid must be at least 2".into()));
    }
    let angle = |k: usize| std::f64::consts::PI * k as f64 / grid as f64;
    let io = |e: std::io::Error| Error::InvalidArgument(format!("write failed: {e}"));
    writeln!(out, "{SCAN_HEADER}").map_err(io)?;

    let mut summary = ScanSummary {
        rows: 0,
        max_fidelity: f64::NEG_INFINITY,
        argmax: [0.0; 3],
    };
    let batch = rayon::current_num_threads().max(1) * 4;
    for start in (0..grid).step_by(batch) {
        let slabs: Vec<(String, f64, [f64; 3])> = (start..(start + batch).min(grid))
            .into_par_iter()
            .map(|i| {
                let mut text = String::new();
                let mut best = (f64::NEG_INFINITY, [0.0; 3]);
                for j in 0..grid {
                    for k in 0..grid {
                        let a = [angle(i), angle(j), angle(k)];
                        let p = CartanParams::new(a[0], a[1], a[2]);
                        let t = t_vector(&p.phases()).moduli();
                        let f = min_fidelity_closed(&p).fidelity;
                        if f > best.0 {
                            best = (f, a);
                        }
                        let fields: Vec<String> = a
                            .iter()
                            .chain(t.iter())
                            .chain(std::iter::once(&f))
                            .map(|&x| fmt_csv(x))
                            .collect();
                        text.push_str(&fields.join(","));
                        text.push('\n');
                    }
                }
                (text, best.0, best.1)
            })
            .collect();
        for (text, f, a) in slabs {
            out.write_all(text.as_bytes()).map_err(io)?;
            summary.rows += grid * grid;
            if f > summary.max_fidelity {
                summary.max_fidelity = f;
                summary.argmax = a;
            }
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{s_matrix, worst_case_fidelity};
    use crate::scalar::cr;
    use num_traits::Zero;
    use crate::linalg::{eig_hermitian, eig_unitary, haar_random_unitary, op_norm};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI, SQRT_2};

    fn close(a: C<f64>, b: C<f64>, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    /// `exp(i H)` through the spectral decomposition of Hermitian `H`.
    fn expm_i(h: &ComplexMatrix<f64>) -> ComplexMatrix<f64> {
        let e = eig_hermitian(h).unwrap();
        let n = h.rows();
        let mut out = ComplexMatrix::zeros(n, n);
        for k in 0..n {
            out += &ComplexMatrix::projector(&e.vector(k)).scale(cis(e.values[k]));
        }
        out
    }

    fn sorted_phase_multiset_matches(phases: &[C<f64>], expected: &[C<f64>]) -> bool {
        let mut left: Vec<C<f64>> = phases.to_vec();
        expected.iter().all(|e| {
            if let Some(pos) = left.iter().position(|p| close(*p, *e, 1e-9)) {
                left.remove(pos);
                true
            } else {
                false
            }
        })
    }

    #[test]
    fn zero_angles_give_identity() {
        let v = cartan_to_unitary(&CartanParams::new(0.0, 0.0, 0.0));
        assert!(v.matrix().max_abs_diff(&ComplexMatrix::identity(4)) < 1e-15);
    }

    #[test]
    fn canonical_form_matches_spectral_exponential() {
        let p = paulis::<f64>();
        for s in [1.0, -1.0] {
            // alpha = (pi/4, 0, s pi/4) is exp[i pi/4 (X⊗X + s Z⊗Z)].
            let v = cartan_to_unitary(&CartanParams::new(FRAC_PI_4, 0.0, s * FRAC_PI_4));
            let h = (&p[1].kron(&p[1]) + &p[3].kron(&p[3]).scale_real(s)).scale_real(FRAC_PI_4);
            assert!(distance_up_to_phase(v.matrix(), &expm_i(&h)) < 1e-12);
        }
        let a = CartanParams::new(0.3, -0.7, 1.1);
        let gen: ComplexMatrix<f64> = (1..4).fold(ComplexMatrix::zeros(4, 4), |acc, j| {
            &acc + &generator::<f64>(j).scale_real(a.alpha[j - 1])
        });
        assert!(cartan_to_unitary(&a).matrix().max_abs_diff(&expm_i(&gen)) < 1e-12);
    }

    #[test]
    fn eigenvectors_are_reshaped_paulis() {
        let a = CartanParams::new(0.37, -0.21, 0.93);
        let v = cartan_to_unitary(&a);
        let th = a.phases();
        for (j, pj) in paulis::<f64>().iter().enumerate() {
            let vec: Vec<C<f64>> = pj.as_slice().iter().map(|z| z / SQRT_2).collect();
            let image = v.matrix().matvec(&vec);
            let expect: Vec<C<f64>> = vec.iter().map(|z| z * cis(th.theta[j])).collect();
            assert!(image.iter().zip(&expect).all(|(x, y)| close(*x, *y, 1e-12)));
        }
    }

    #[test]
    fn half_pi_angles_eigenphases() {
        let a = CartanParams::new(FRAC_PI_2, FRAC_PI_2, FRAC_PI_2);
        // theta = (3pi/2, -pi/2, -pi/2, -pi/2): e^{i theta} = (-i, -i, -i, -i)
        // with the theta relation; the multiset {e^{i3pi/2}, e^{i pi/2} x3} differs
        // only in the branch used for theta_j.
        let th = a.phases();
        assert!((th.theta[0] - 3.0 * FRAC_PI_2).abs() < 1e-15);
        let e = eig_unitary(cartan_to_unitary(&a).matrix()).unwrap();
        let expect: Vec<C<f64>> = th.theta.iter().map(|&x| cis(x)).collect();
        assert!(sorted_phase_multiset_matches(&e.phases, &expect));
    }

    #[test]
    fn t_vector_examples() {
        let t = t_vector(&PhaseVector::new([0.0, FRAC_PI_2, PI, FRAC_PI_2]));
        let want = [-C::i(), C::one(), C::i(), C::one()];
        assert!(t.t.iter().zip(&want).all(|(a, b)| close(*a, *b, 1e-15)));

        let t = t_vector(&PhaseVector::new([0.0; 4]));
        let want = [cr(2.0), C::zero(), C::zero(), C::zero()];
        assert!(t.t.iter().zip(&want).all(|(a, b)| close(*a, *b, 1e-15)));

        let t = t_vector(&PhaseVector::new([FRAC_PI_4, FRAC_PI_4, -FRAC_PI_4, -FRAC_PI_4]));
        let want = [cr(SQRT_2), c(0.0, -SQRT_2), C::zero(), C::zero()];
        assert!(t.t.iter().zip(&want).all(|(a, b)| close(*a, *b, 1e-15)));
    }

    #[test]
    fn t_vector_is_hadamard_transform() {
        let h = hadamard4::<f64>();
        let th = PhaseVector::new([0.3, -1.2, 2.2, 0.9]);
        let e = th.theta.map(|x| cis(-x));
        let t = t_vector(&th);
        for j in 0..4 {
            let via_h: C<f64> = (0..4).map(|mu| e[mu] * h[j][mu]).sum();
            assert!(close(via_h, t.t[j], 1e-15));
        }
    }

    #[test]
    fn closed_form_examples() {
        let opt = min_fidelity_closed(&CartanParams::new(FRAC_PI_4, 0.0, FRAC_PI_4));
        assert!((opt.fidelity - 0.25).abs() < 1e-15);
        let id = min_fidelity_closed(&CartanParams::<f64>::new(0.0, 0.0, 0.0));
        assert!(id.fidelity.abs() < 1e-15);
        assert_ne!(id.worst_pauli_index, 0);
    }

    #[test]
    fn closed_form_matches_search_at_pi_over_8() {
        for a in [
            CartanParams::new(FRAC_PI_8, 0.0, 0.0),
            CartanParams::new(FRAC_PI_8, FRAC_PI_8, -FRAC_PI_8),
        ] {
            let closed = min_fidelity_closed(&a).fidelity;
            let found = worst_case_fidelity(&cartan_gate(&a), &SearchConfig::default()).unwrap();
            assert!((closed - found.fidelity).abs() < 1e-6, "{closed} vs {}", found.fidelity);
        }
    }

    #[test]
    fn pauli_form_matches_general_s() {
        for seed in 0..10 {
            let a = CartanParams::new(0.1 * seed as f64, -0.4, 0.25 * seed as f64);
            let u = haar_random_unitary::<f64>(2, seed);
            let general = s_matrix(&u, &cartan_gate(&a)).unwrap();
            let pauli = s_matrix_pauli(u.matrix(), &a.phases());
            assert!(general.max_abs_diff(&pauli) < 1e-10);
        }
    }

    #[test]
    fn appendix_vertices_and_errors() {
        let t = t_vector(&PhaseVector::new([0.2, -0.9, 1.7, 2.4]));
        let m = t.moduli_sq();
        for j in 0..4 {
            let mut u = [0.0f64; 4];
            u[j] = 1.0;
            assert!((appendix_norm_sq(&u, &t).unwrap() - m[j]).abs() < 1e-15);
        }
        assert!(appendix_norm_sq(&[0.5, 0.6, 0.0, 0.0], &t).is_err());
        assert!(appendix_norm_sq(&[1.5, -0.5, 0.0, 0.0], &t).is_err());
    }

    #[test]
    fn appendix_matches_operator_norm() {
        let th = PhaseVector::new([0.0, FRAC_PI_2, PI, FRAC_PI_2]);
        let t = t_vector(&th);
        for seed in 0..20 {
            let u = haar_random_unitary::<f64>(2, seed);
            let w = bloch_weights(u.matrix());
            let direct = op_norm(&s_matrix_pauli(u.matrix(), &th)).powi(2);
            let formula = appendix_norm_sq(&w, &t).unwrap();
            assert!((direct - formula).abs() < 1e-10);
            assert!(formula >= 1.0 - 1e-12);
        }
        // U = I at the optimum gives exactly one.
        assert!((appendix_norm_sq(&[1.0, 0.0, 0.0, 0.0], &t).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn optimal_gate_properties() {
        for sign in [Sign::Plus, Sign::Minus] {
            let (g, circuit) = optimal_v::<f64>(sign);
            let e = eig_unitary(g.unitary().matrix()).unwrap();
            let expect = [C::one(), C::i(), -C::one(), C::i()];
            assert!(sorted_phase_multiset_matches(&e.phases, &expect), "{:?}", e.phases);
            assert!(distance_up_to_phase(&circuit.unitary(), g.unitary().matrix()) < 1e-12);
            assert!((min_fidelity_closed(&optimal_params::<f64>(sign)).fidelity - 0.25).abs() < 1e-15);
            let s = s_matrix(&UnitaryOp::identity(2), &g).unwrap();
            assert!(s.max_abs_diff(&ComplexMatrix::identity(2).scale(-C::i())) < 1e-12);
        }
    }

    #[test]
    fn circuit_text() {
        let (_, circuit) = optimal_v::<f64>(Sign::Plus);
        let text = circuit.to_string();
        assert_eq!(text.lines().filter(|l| l.starts_with("CNOT 0 1")).count(), 2);
        assert!(text.contains("X 0 1.5707963267948966"));
        assert!(text.contains("Z 1 -1.5707963267948966"));
    }

    #[test]
    fn no_go_examples() {
        let p = paulis::<f64>();
        let id = UnitaryOp::identity(2);
        let z = UnitaryOp::new(p[3].clone()).unwrap();
        for (v1, v2) in [(&id, &id), (&id, &z)] {
            let r = controlled_no_go_check(v1, v2).unwrap();
            assert!(r.min_fidelity < 1e-12);
            assert!(r.formula_fidelity < 1e-12);
            assert!(!r.used_fallback);
        }
        // sigma_x is orthogonal to both I and Z.
        let x = UnitaryOp::new(p[1].clone()).unwrap();
        let g = controlled_unitary_gate(&id, &z).unwrap();
        assert!(program_fidelity(&x, &g).unwrap().fidelity < 1e-14);
    }

    #[test]
    fn controlled_gate_fidelity_formula() {
        let v1 = haar_random_unitary::<f64>(2, 1);
        let v2 = haar_random_unitary::<f64>(2, 2);
        let g = controlled_unitary_gate(&v1, &v2).unwrap();
        for seed in 10..20 {
            let u = haar_random_unitary::<f64>(2, seed);
            let f = program_fidelity(&u, &g).unwrap().fidelity;
            let formula = [&v1, &v2]
                .iter()
                .map(|v| v.matrix().hs_inner(u.matrix()).norm_sqr() / 4.0)
                .fold(0.0, f64::max);
            assert!((f - formula).abs() < 1e-12);
        }
    }

    #[test]
    fn scan_small_grid() {
        let mut buf = Vec::new();
        let s = scan_cartan(2, &mut buf).unwrap();
        assert_eq!(s.rows, 8);
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 9);
        assert!(scan_cartan(1, &mut Vec::new()).is_err());

        let mut buf = Vec::new();
        let s = scan_cartan(4, &mut buf).unwrap();
        assert!((s.max_fidelity - 0.25).abs() < 1e-15);
    }

    #[test]
    fn f32_closed_form() {
        let f = min_fidelity_closed(&CartanParams::new(
            std::f32::consts::FRAC_PI_4,
            0.0,
            std::f32::consts::FRAC_PI_4,
        ));
        assert!((f.fidelity - 0.25).abs() < 1e-6);
    }
}
