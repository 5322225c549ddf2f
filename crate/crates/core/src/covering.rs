//! The controlled-unitary programmable detector built from a net of unitaries.
//!
//! With `U = sum_k W_k ⊗ |k><k|` and `E_i = |psi_i><psi_i| ⊗ I`, the program `|k>`
//! yields `Q_i = W_k^dag |psi_i><psi_i| W_k`. If every target `W` has a center
//! within Frobenius distance `r`, then every target observable is reproduced within
//! `delta <= sqrt(2n) r`.
//!
//! Observables only see `W` up to a diagonal unitary `D` on the left (in the
//! measurement basis), so nets are built for the aligned distance
//!
//! ```text
//! dist(W, W_k)^2 = min_D ||W - D W_k||_2^2 = 2n - 2 sum_i |(W W_k^dag)_ii|
//! ```
//!
//! For qubits this is a metric on the two-dimensional sphere of measurement axes.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariant::required_dimension;
use crate::error::{Error, Result};
use crate::linalg::{haar_unitary_with, rng_from_seed, ComplexMatrix, UnitaryOp};
use crate::povm::{povm_distance, Povm, ProgrammableDetector};
use crate::report::fmt_csv;
use crate::scalar::{cr, C};

type C64 = C<f64>;

/// Net construction settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoveringConfig {
    /// Haar samples the greedy selection must cover.
    pub pool_size: usize,
    pub seed: u64,
    /// Give up once the net would exceed this many centers.
    pub max_centers: usize,
}

impl Default for CoveringConfig {
    fn default() -> Self {
        Self {
            pool_size: 200_000,
            seed: 0,
            max_centers: 100_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct UnitaryNet {
    pub centers: Vec<UnitaryOp<f64>>,
    /// Largest pool-to-net distance.
    pub radius: f64,
    pub n: usize,
}

/// Aligned distance in the computational basis.
pub fn aligned_distance(w: &ComplexMatrix<f64>, v: &ComplexMatrix<f64>) -> f64 {
    let n = w.rows();
    let s: f64 = (0..n)
        .map(|i| (0..n).map(|j| w[(i, j)] * v[(i, j)].conj()).sum::<C64>().norm())
        .sum();
    (2.0 * n as f64 - 2.0 * s).max(0.0).sqrt()
}

#[inline]
fn aligned_distance2(w: &[C64; 4], v: &[C64; 4]) -> f64 {
    let x0 = w[0] * v[0].conj() + w[1] * v[1].conj();
    let x1 = w[2] * v[2].conj() + w[3] * v[3].conj();
    (4.0 - 2.0 * (x0.norm() + x1.norm())).max(0.0).sqrt()
}

fn flat(u: &UnitaryOp<f64>) -> [C64; 4] {
    let s = u.matrix().as_slice();
    [s[0], s[1], s[2], s[3]]
}

fn haar_pool(size: usize, seed: u64) -> Vec<UnitaryOp<f64>> {
    let mut rng = rng_from_seed(seed);
    (0..size).map(|_| haar_unitary_with(2, &mut rng)).collect()
}

/// Greedy farthest-point selection: center indices in order, and the covering radius
/// of the pool after each addition.
fn greedy_order(pool: &[[C64; 4]], stop_radius: f64, max_centers: usize) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut min_dist = vec![f64::INFINITY; pool.len()];
    let mut chosen = Vec::new();
    let mut radii = Vec::new();
    let mut next = 0;
    loop {
        if chosen.len() >= max_centers {
            return Err(Error::ResourceCap(format!(
                "{max_centers} centers reached before covering radius {stop_radius}"
            )));
        }
        chosen.push(next);
        let c = pool[next];
        min_dist
            .par_iter_mut()
            .zip(pool.par_iter())
            .for_each(|(m, p)| *m = m.min(aligned_distance2(p, &c)));
        // Farthest point; ties go to the lowest index so the order is deterministic.
        let (idx, far) = min_dist
            .par_iter()
            .enumerate()
            .map(|(i, &d)| (i, d))
            .reduce(
                || (usize::MAX, f64::NEG_INFINITY),
                |a, b| if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a },
            );
        radii.push(far);
        if far <= stop_radius {
            return Ok((chosen, radii));
        }
        next = idx;
    }
}

/// Greedy net over a Haar pool until every pool point is within `target_radius`.
pub fn build_net(n: usize, target_radius: f64, config: &CoveringConfig) -> Result<UnitaryNet> {
    if n != 2 {
        return Err(Error::Unsupported(format!("nets over U({n}); only n = 2 is supported")));
    }
    if target_radius.is_nan() || target_radius <= 0.0 {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {target_radius}")));
    }
    if config.pool_size == 0 {
        return Err(Error::InvalidArgument("empty sample pool".into()));
    }
    let pool = haar_pool(config.pool_size, config.seed);
    let flat_pool: Vec<[C64; 4]> = pool.iter().map(flat).collect();
    let (chosen, radii) = greedy_order(&flat_pool, target_radius, config.max_centers)?;
    Ok(UnitaryNet {
        centers: chosen.iter().map(|&i| pool[i].clone()).collect(),
        radius: *radii.last().expect("at least one center"),
        n,
    })
}

/// Largest distance from `samples` fresh Haar unitaries to the net.
pub fn validate_net(net: &UnitaryNet, samples: usize, seed: u64) -> f64 {
    let centers: Vec<[C64; 4]> = net.centers.iter().map(flat).collect();
    let fresh: Vec<[C64; 4]> = haar_pool(samples, seed).iter().map(flat).collect();
    fresh
        .par_iter()
        .map(|w| {
            centers
                .iter()
                .map(|c| aligned_distance2(w, c))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| 0.0, f64::max)
}

/// Joint observable `F_i = U^dag (|psi_i><psi_i| ⊗ I) U` with `U = sum_k W_k ⊗ |k><k|`.
pub fn assemble_detector(net: &UnitaryNet, basis: &[Vec<C64>]) -> Result<ProgrammableDetector<f64>> {
    if net.centers.is_empty() {
        return Err(Error::InvalidArgument("empty net".into()));
    }
    let n = net.n;
    check_basis(basis, n)?;
    let d = net.centers.len();
    let dim = n * d;
    let elements = basis
        .iter()
        .map(|psi| {
            let proj = ComplexMatrix::projector(psi);
            let mut f = ComplexMatrix::zeros(dim, dim);
            for (k, w) in net.centers.iter().enumerate() {
                let block = w.matrix().adjoint().matmul(&proj).matmul(w.matrix());
                for a in 0..n {
                    for b in 0..n {
                        f[(a * d + k, b * d + k)] = block[(a, b)];
                    }
                }
            }
            f
        })
        .collect();
    // Exact projectors by construction; full validation would be O((n d)^3).
    ProgrammableDetector::new(Povm::new_unchecked(elements)?, n, d)
}

fn check_basis(basis: &[Vec<C64>], n: usize) -> Result<()> {
    if basis.len() != n || basis.iter().any(|v| v.len() != n) {
        return Err(Error::DimensionMismatch(format!("basis must hold {n} vectors of length {n}")));
    }
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            let ip: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
            let want = if i == j { 1.0 } else { 0.0 };
            if (ip - cr(want)).norm() > 1e-9 {
                return Err(Error::InvalidArgument("basis is not orthonormal".into()));
            }
        }
    }
    Ok(())
}

/// `{W^dag |psi_i><psi_i| W}`.
pub fn observable_of(w: &ComplexMatrix<f64>, basis: &[Vec<C64>]) -> Povm<f64> {
    let elements = basis
        .iter()
        .map(|psi| {
            let v = w.adjoint().matvec(psi);
            ComplexMatrix::projector(&v)
        })
        .collect();
    Povm::new_unchecked(elements).expect("nonempty basis")
}

/// Outcome of [`jensen_bound_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JensenCheck {
    pub delta_actual: f64,
    /// `sqrt(2n) ||W - D W_k||_2` with the optimal diagonal `D`.
    pub delta_bound: f64,
    /// `sqrt(2n) ||W - W_k||_2` without alignment.
    pub delta_bound_raw: f64,
    pub nearest_k: usize,
    /// `sum_i sqrt(2 (1 - |x_i|^2))`, `x_i = <psi_i|W W_k^dag|psi_i>`.
    pub frobenius_sum: f64,
    /// `sqrt(2) sum_i sqrt(2 - 2 |x_i|)`.
    pub overlap_sum: f64,
}

impl JensenCheck {
    /// Every step of the chain holds within `tol`.
    pub fn holds(&self, tol: f64) -> bool {
        self.delta_actual <= self.frobenius_sum + tol
            && self.frobenius_sum <= self.overlap_sum + tol
            && self.overlap_sum <= self.delta_bound + tol
            && self.delta_bound <= self.delta_bound_raw + tol
    }
}

fn overlaps(w: &ComplexMatrix<f64>, v: &ComplexMatrix<f64>, basis: &[Vec<C64>]) -> Vec<C64> {
    let wv = w.matmul(&v.adjoint());
    basis.iter().map(|psi| wv.sandwich(psi, psi)).collect()
}

/// Target observable of `w` against its best center in `net`.
pub fn jensen_bound_check(w: &UnitaryOp<f64>, net: &UnitaryNet, basis: &[Vec<C64>]) -> Result<JensenCheck> {
    if w.dim() != net.n {
        return Err(Error::DimensionMismatch(format!(
            "target of dimension {} for a net over U({})",
            w.dim(),
            net.n
        )));
    }
    if net.centers.is_empty() {
        return Err(Error::InvalidArgument("empty net".into()));
    }
    check_basis(basis, net.n)?;
    let n = net.n as f64;
    // Aligned distance in the given basis: 2n - 2 sum_i |x_i|.
    let aligned = |v: &ComplexMatrix<f64>| -> f64 {
        let s: f64 = overlaps(w.matrix(), v, basis).iter().map(|x| x.norm()).sum();
        (2.0 * n - 2.0 * s).max(0.0).sqrt()
    };
    let (nearest_k, dist) = net
        .centers
        .iter()
        .enumerate()
        .map(|(k, c)| (k, aligned(c.matrix())))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let wk = net.centers[nearest_k].matrix();
    let p = observable_of(w.matrix(), basis);
    let q = observable_of(wk, basis);
    let x = overlaps(w.matrix(), wk, basis);
    let frobenius_sum = x.iter().map(|z| (2.0 * (1.0 - z.norm_sqr())).max(0.0).sqrt()).sum();
    let overlap_sum = std::f64::consts::SQRT_2
        * x.iter().map(|z| (2.0 - 2.0 * z.norm()).max(0.0).sqrt()).sum::<f64>();
    let scale = (2.0 * n).sqrt();
    Ok(JensenCheck {
        delta_actual: povm_distance(&p, &q)?,
        delta_bound: scale * dist,
        delta_bound_raw: scale * (w.matrix() - wk).frobenius_norm(),
        nearest_k,
        frobenius_sum,
        overlap_sum,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingPoint {
    pub radius: f64,
    pub epsilon: f64,
    pub d: usize,
    /// Covering radius actually reached on the pool.
    pub achieved_radius: f64,
    /// Ancilla size of the covariant detector at the same accuracy.
    pub covariant_d: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub points: Vec<ScalingPoint>,
    /// Least-squares slope of `ln d` against `ln(1/epsilon)`.
    pub slope: f64,
    /// Intercept; `exp(intercept)` is the empirical prefactor.
    pub intercept: f64,
    pub r_squared: f64,
}

/// JSON summary of the fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitSummary {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub const SCALING_HEADER: &str = "radius,epsilon,d";

impl ScalingReport {
    pub fn fit(&self) -> FitSummary {
        FitSummary {
            slope: self.slope,
            intercept: self.intercept,
            r_squared: self.r_squared,
        }
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{SCALING_HEADER}")?;
        for p in &self.points {
            writeln!(out, "{},{},{}", fmt_csv(p.radius), fmt_csv(p.epsilon), p.d)?;
        }
        Ok(())
    }

    /// `covariant_d / d` per point, where defined.
    pub fn covariant_ratios(&self) -> Vec<f64> {
        self.points
            .iter()
            .filter_map(|p| p.covariant_d.map(|c| c as f64 / p.d as f64))
            .collect()
    }
}

/// Ordinary least squares `y = slope x + intercept`, with `R^2`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let n = x.len() as f64;
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidArgument("fit needs at least two paired points".into()));
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx < 1e-300 {
        return Err(Error::Numerical("degenerate fit: all abscissae equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok((slope, intercept, r2))
}

/// Net sizes for decreasing radii, with `epsilon = sqrt(2n) r`, and the log-log fit.
///
/// Greedy farthest-point nets are nested, so one run down to the smallest radius
/// gives every net size.
pub fn covering_scaling_experiment(radii: &[f64], config: &CoveringConfig) -> Result<ScalingReport> {
    if radii.len() < 3 {
        return Err(Error::InvalidArgument("need at least three radii".into()));
    }
    if radii.iter().any(|r| r.is_nan() || *r <= 0.0) {
        return Err(Error::InvalidArgument("radii must be positive".into()));
    }
    if radii.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidArgument("radii must be non-increasing".into()));
    }
    let n = 2usize;
    let smallest = *radii.last().expect("nonempty");
    let pool: Vec<[C64; 4]> = haar_pool(config.pool_size.max(1), config.seed).iter().map(flat).collect();
    let (_, history) = greedy_order(&pool, smallest, config.max_centers)?;
    let points: Vec<ScalingPoint> = radii
        .iter()
        .map(|&r| {
            let idx = history.iter().position(|&h| h <= r).expect("history reaches the smallest radius");
            let epsilon = (2.0 * n as f64).sqrt() * r;
            ScalingPoint {
                radius: r,
                epsilon,
                d: idx + 1,
                achieved_radius: history[idx],
                covariant_d: required_dimension(epsilon).ok(),
            }
        })
        .collect();
    let x: Vec<f64> = points.iter().map(|p| (1.0 / p.epsilon).ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| (p.d as f64).ln()).collect();
    let (slope, intercept, r_squared) = linear_fit(&x, &y)?;
    Ok(ScalingReport {
        points,
        slope,
        intercept,
        r_squared,
    })
}
