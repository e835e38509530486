use super::{Part, SubsetMask};
use crate::error::{QsrError, Result};
use crate::linalg::{self, CMatrix};

pub const HERMITIAN_TOL: f64 = 1e-9;
pub const TRACE_TOL: f64 = 1e-9;
pub const NEGATIVITY_TOL: f64 = 1e-9;

/// Hermitian, positive semidefinite, unit-trace matrix over an ordered list of parts.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    parts: Vec<Part>,
    matrix: CMatrix,
}

impl DensityOperator {
    pub fn new(parts: Vec<Part>, matrix: CMatrix) -> Result<Self> {
        let dim: usize = parts.iter().map(|p| p.dim).product();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(QsrError::DimensionMismatch(format!(
                "{}x{} matrix for parts of total dimension {dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let herm = linalg::hermiticity_defect(&matrix);
        if herm > HERMITIAN_TOL {
            return Err(QsrError::InvalidDensity(format!(
                "not Hermitian (defect {herm:e})"
            )));
        }
        let tr = linalg::trace(&matrix);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(QsrError::InvalidDensity(format!("trace {tr} != 1")));
        }
        let min = linalg::hermitian_eigvals(&matrix)
            .last()
            .copied()
            .unwrap_or(0.0);
        if min < -NEGATIVITY_TOL {
            return Err(QsrError::InvalidDensity(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(DensityOperator { parts, matrix })
    }

    /// `|ψ⟩⟨ψ|` for a single-part vector.
    pub fn projector(label: &str, amps: &[num_complex::Complex64]) -> Result<Self> {
        let v = nalgebra::DVector::from_column_slice(amps);
        let m = &v * v.adjoint();
        Self::new(vec![Part::new(label, amps.len())], m)
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Traces out every part not in `keep`; kept parts retain their order.
    pub fn partial_trace(&self, keep: SubsetMask) -> Result<DensityOperator> {
        let n = self.parts.len();
        if keep.m() != n {
            return Err(QsrError::InvalidSubset(format!(
                "mask over {} parts, operator has {n}",
                keep.m()
            )));
        }
        if keep.is_empty() {
            return Err(QsrError::InvalidSubset(
                "partial trace keeps no parts".into(),
            ));
        }
        let dims: Vec<usize> = self.parts.iter().map(|p| p.dim).collect();
        let total = self.dim();
        // split each full index into (kept index, traced index)
        let mut kept_of = vec![0usize; total];
        let mut traced_of = vec![0usize; total];
        let mut digits = vec![0usize; n];
        for full in 0..total {
            let (mut k, mut t) = (0usize, 0usize);
            for (i, &d) in digits.iter().enumerate() {
                if keep.contains(i) {
                    k = k * dims[i] + d;
                } else {
                    t = t * dims[i] + d;
                }
            }
            kept_of[full] = k;
            traced_of[full] = t;
            for j in (0..n).rev() {
                digits[j] += 1;
                if digits[j] < dims[j] {
                    break;
                }
                digits[j] = 0;
            }
        }
        let dk: usize = keep.indices().map(|i| dims[i]).product();
        let dt = total / dk;
        let mut full_of = vec![0usize; total];
        for full in 0..total {
            full_of[kept_of[full] * dt + traced_of[full]] = full;
        }
        let m = CMatrix::from_fn(dk, dk, |i, j| {
            (0..dt)
                .map(|t| self.matrix[(full_of[i * dt + t], full_of[j * dt + t])])
                .sum()
        });
        let parts = keep.indices().map(|i| self.parts[i].clone()).collect();
        DensityOperator::new(parts, m)
    }
}
