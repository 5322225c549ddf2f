use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{cr, Real, C};

/// Dense complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

/// Which factor of a bipartite `d1 x d2` space to trace out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    /// The first tensor factor (the system).
    First,
    /// The second tensor factor (the ancilla).
    Second,
}

impl<T: Real> ComplexMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows; panics on ragged input.
    pub fn from_rows(rows: &[Vec<C<T>>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diag(entries: &[C<T>]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    pub fn diag_real(entries: &[T]) -> Self {
        Self::diag(&entries.iter().map(|&x| cr(x)).collect::<Vec<_>>())
    }

    /// Column vector.
    pub fn column(v: &[C<T>]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    /// `|a><b|`.
    pub fn outer(a: &[C<T>], b: &[C<T>]) -> Self {
        Self::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
    }

    /// `|v><v|`.
    pub fn projector(v: &[C<T>]) -> Self {
        Self::outer(v, v)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dim(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    pub fn col(&self, j: usize) -> Vec<C<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[C<T>]) {
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    pub fn map(&self, f: impl Fn(C<T>) -> C<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scale(&self, s: C<T>) -> Self {
        self.map(|x| x * s)
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.map(|x| x * s)
    }

    pub fn conj(&self) -> Self {
        self.map(|x| x.conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul shape mismatch {:?} * {:?}",
            self.dim(),
            rhs.dim()
        );
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(&a, &b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `<a| M |b>`.
    pub fn sandwich(&self, a: &[C<T>], b: &[C<T>]) -> C<T> {
        inner(a, &self.matvec(b))
    }

    /// Tensor product; the left factor indexes the slow (system) digit.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (r1, c1) = self.dim();
        let (r2, c2) = rhs.dim();
        Self::from_fn(r1 * r2, c1 * c2, |i, j| {
            self[(i / r2, j / c2)] * rhs[(i % r2, j % c2)]
        })
    }

    /// Trace over one factor of a square matrix on a `d1 * d2` space.
    pub fn partial_trace(&self, dims: (usize, usize), which: Subsystem) -> Result<Self> {
        let (d1, d2) = dims;
        if !self.is_square() || self.rows != d1 * d2 {
            return Err(Error::DimensionMismatch(format!(
                "partial trace of a {}x{} matrix over dims ({d1}, {d2})",
                self.rows, self.cols
            )));
        }
        Ok(match which {
            Subsystem::Second => Self::from_fn(d1, d1, |i, j| {
                (0..d2).map(|k| self[(i * d2 + k, j * d2 + k)]).sum()
            }),
            Subsystem::First => Self::from_fn(d2, d2, |i, j| {
                (0..d1).map(|k| self[(k * d2 + i, k * d2 + j)]).sum()
            }),
        })
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|x| x.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .map(|x| x.norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Largest entrywise modulus of `self - rhs`.
    pub fn max_abs_diff(&self, rhs: &Self) -> T {
        assert_eq!(self.dim(), rhs.dim());
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// `max |M - M^dag|`, or infinity for non-square input.
    pub fn hermitian_deviation(&self) -> T {
        if !self.is_square() {
            return T::infinity();
        }
        let mut dev = T::zero();
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// `max |M^dag M - I|`, or infinity for non-square input.
    pub fn unitary_deviation(&self) -> T {
        if !self.is_square() {
            return T::infinity();
        }
        self.adjoint()
            .matmul(self)
            .max_abs_diff(&Self::identity(self.rows))
    }

    /// `(M + M^dag) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let half = T::lit(0.5);
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * half
        })
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    /// Hilbert-Schmidt inner product `Tr[self^dag rhs]`.
    pub fn hs_inner(&self, rhs: &Self) -> C<T> {
        assert_eq!(self.dim(), rhs.dim());
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a.conj() * *b)
            .sum()
    }

    /// Convert to another scalar precision.
    pub fn cast<U: Real>(&self) -> ComplexMatrix<U> {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|x| Complex::new(U::lit(x.re.to_f64_lossy()), U::lit(x.im.to_f64_lossy())))
                .collect(),
        }
    }
}

/// `<a|b>`.
pub fn inner<T: Real>(a: &[C<T>], b: &[C<T>]) -> C<T> {
    a.iter().zip(b).map(|(x, y)| x.conj() * *y).sum()
}

pub fn vec_norm<T: Real>(v: &[C<T>]) -> T {
    v.iter().map(|x| x.norm_sqr()).sum::<T>().sqrt()
}

pub fn kron_vec<T: Real>(a: &[C<T>], b: &[C<T>]) -> Vec<C<T>> {
    a.iter()
        .flat_map(|&x| b.iter().map(move |&y| x * y))
        .collect()
}

/// Computational basis vector `|k>` in dimension `dim`.
pub fn basis_vector<T: Real>(dim: usize, k: usize) -> Vec<C<T>> {
    let mut v = vec![C::zero(); dim];
    v[k] = C::one();
    v
}

/// Pauli matrices `[I, X, Y, Z]`.
pub fn paulis<T: Real>() -> [ComplexMatrix<T>; 4] {
    let z = C::zero();
    let o = C::one();
    let i = C::i();
    [
        ComplexMatrix::from_rows(&[vec![o, z], vec![z, o]]),
        ComplexMatrix::from_rows(&[vec![z, o], vec![o, z]]),
        ComplexMatrix::from_rows(&[vec![z, -i], vec![i, z]]),
        ComplexMatrix::from_rows(&[vec![o, z], vec![z, -o]]),
    ]
}

impl<T: Real> Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = C<T>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for ComplexMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Add for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;

    fn add(self, rhs: Self) -> ComplexMatrix<T> {
        assert_eq!(self.dim(), rhs.dim());
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a + *b).collect(),
        }
    }
}

impl<T: Real> Sub for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;

    fn sub(self, rhs: Self) -> ComplexMatrix<T> {
        assert_eq!(self.dim(), rhs.dim());
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a - *b).collect(),
        }
    }
}

impl<T: Real> Mul for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;

    fn mul(self, rhs: Self) -> ComplexMatrix<T> {
        self.matmul(rhs)
    }
}

impl<T: Real> Neg for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;

    fn neg(self) -> ComplexMatrix<T> {
        self.map(|x| -x)
    }
}

impl<T: Real> AddAssign<&ComplexMatrix<T>> for ComplexMatrix<T> {
    fn add_assign(&mut self, rhs: &ComplexMatrix<T>) {
        assert_eq!(self.dim(), rhs.dim());
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += *b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = ComplexMatrix<f64>;

    #[test]
    fn kron_of_identities_is_identity() {
        assert_eq!(M::identity(2).kron(&M::identity(2)), M::identity(4));
    }

    #[test]
    fn kron_x_identity_block_structure() {
        let [id, x, _, z] = paulis::<f64>();
        let m = x.kron(&id);
        let expected = M::from_fn(4, 4, |i, j| {
            if (i / 2 != j / 2) && (i % 2 == j % 2) {
                C::one()
            } else {
                C::zero()
            }
        });
        assert_eq!(m, expected);

        let zz = z.kron(&z);
        let sq = &zz * &zz;
        // Element-wise 4x4 product of diag(1,-1,-1,1) with itself.
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((sq[(i, j)] - cr(want)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn partial_trace_of_product_state() {
        let rho = M::from_rows(&[
            vec![cr(0.7), C::new(0.1, 0.2)],
            vec![C::new(0.1, -0.2), cr(0.3)],
        ]);
        let sigma = M::from_rows(&[
            vec![cr(0.4), C::new(0.0, 0.3)],
            vec![C::new(0.0, -0.3), cr(0.6)],
        ]);
        let joint = rho.kron(&sigma);
        let a = joint.partial_trace((2, 2), Subsystem::Second).unwrap();
        let b = joint.partial_trace((2, 2), Subsystem::First).unwrap();
        assert!(a.max_abs_diff(&rho) < 1e-15);
        assert!(b.max_abs_diff(&sigma) < 1e-15);
    }

    #[test]
    fn partial_trace_of_maximally_entangled_projector() {
        // (1/2) sum_ij |ii><jj|: entries 1/2 at rows/cols {0, 3}.
        let mut phi = M::zeros(4, 4);
        for &a in &[0usize, 3] {
            for &b in &[0usize, 3] {
                phi[(a, b)] = cr(0.5);
            }
        }
        let reduced = phi.partial_trace((2, 2), Subsystem::Second).unwrap();
        let mut oracle = M::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = C::zero();
                for k in 0..2 {
                    acc += phi[(2 * i + k, 2 * j + k)];
                }
                oracle[(i, j)] = acc;
            }
        }
        assert!(reduced.max_abs_diff(&oracle) < 1e-15);
        assert!(reduced.max_abs_diff(&M::identity(2).scale_real(0.5)) < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let m = M::identity(4);
        assert!(matches!(
            m.partial_trace((2, 3), Subsystem::First),
            Err(Error::DimensionMismatch(_))
        ));
        let rect = M::zeros(4, 2);
        assert!(rect.partial_trace((2, 2), Subsystem::First).is_err());
    }

    #[test]
    fn from_vec_checks_length() {
        assert!(M::from_vec(2, 2, vec![C::zero(); 3]).is_err());
    }
}
