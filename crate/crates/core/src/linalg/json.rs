//! JSON wire format: `{"rows": r, "cols": c, "entries": [[re, im], ...]}` row-major,
//! and POVMs as arrays of such matrices.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<[f64; 2]>,
}

pub type PovmJson = Vec<MatrixJson>;

impl MatrixJson {
    pub fn from_matrix<T: Real>(m: &ComplexMatrix<T>) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            entries: m
                .as_slice()
                .iter()
                .map(|z| [z.re.to_f64_lossy(), z.im.to_f64_lossy()])
                .collect(),
        }
    }

    pub fn to_matrix<T: Real>(&self) -> Result<ComplexMatrix<T>> {
        if self.entries.len() != self.rows * self.cols {
            return Err(Error::Format(format!(
                "expected {} entries for a {}x{} matrix, found {}",
                self.rows * self.cols,
                self.rows,
                self.cols,
                self.entries.len()
            )));
        }
        if let Some(k) = self
            .entries
            .iter()
            .position(|[re, im]| !re.is_finite() || !im.is_finite())
        {
            return Err(Error::Format(format!("non-finite entry at index {k}")));
        }
        let data = self
            .entries
            .iter()
            .map(|&[re, im]| Complex::new(T::lit(re), T::lit(im)))
            .collect();
        ComplexMatrix::from_vec(self.rows, self.cols, data)
    }
}

impl<T: Real> ComplexMatrix<T> {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&MatrixJson::from_matrix(self)).expect("matrix serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let parsed: MatrixJson =
            serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))?;
        parsed.to_matrix()
    }
}
