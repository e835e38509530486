use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{QsrError, Result};
use crate::linalg::{self, CMatrix};

pub const ISOMETRY_TOL: f64 = 1e-8;

/// Isometry `U: E -> V ⊗ W` stored as a `(d_V·d_W) × d_E` matrix, output index big-endian
/// (V is the more significant digit).
#[derive(Clone, Debug, PartialEq)]
pub struct Isometry {
    in_dim: usize,
    out_v_dim: usize,
    out_w_dim: usize,
    matrix: CMatrix,
}

impl Isometry {
    pub fn new(in_dim: usize, out_v_dim: usize, out_w_dim: usize, matrix: CMatrix) -> Result<Self> {
        if in_dim == 0 || out_v_dim == 0 || out_w_dim == 0 {
            return Err(QsrError::DimensionMismatch(
                "isometry dimensions must be positive".into(),
            ));
        }
        if out_v_dim * out_w_dim < in_dim {
            return Err(QsrError::DimensionMismatch(format!(
                "output {}x{} too small for input {in_dim}",
                out_v_dim, out_w_dim
            )));
        }
        if matrix.nrows() != out_v_dim * out_w_dim || matrix.ncols() != in_dim {
            return Err(QsrError::DimensionMismatch(format!(
                "matrix is {}x{}, expected {}x{in_dim}",
                matrix.nrows(),
                matrix.ncols(),
                out_v_dim * out_w_dim
            )));
        }
        let defect = linalg::isometry_defect(&matrix);
        if defect > ISOMETRY_TOL {
            return Err(QsrError::NotIsometric(defect));
        }
        Ok(Isometry {
            in_dim,
            out_v_dim,
            out_w_dim,
            matrix,
        })
    }

    /// `V = E`, trivial `W`.
    pub fn identity(d: usize) -> Self {
        Isometry {
            in_dim: d,
            out_v_dim: d,
            out_w_dim: 1,
            matrix: CMatrix::identity(d, d),
        }
    }

    /// Splits `E = E_1 ⊗ .. ⊗ E_r` into `V = ⊗_{k∈v} E_k` and `W` = the remaining factors,
    /// both keeping factor order.
    pub fn factor_split(factors: &[usize], v: &[usize]) -> Result<Self> {
        let r = factors.len();
        if v.iter().any(|&k| k >= r) {
            return Err(QsrError::OutOfRange("factor index".into()));
        }
        let mut order: Vec<usize> = (0..r).filter(|k| v.contains(k)).collect();
        let dv: usize = order.iter().map(|&k| factors[k]).product();
        order.extend((0..r).filter(|k| !v.contains(k)));
        let d: usize = factors.iter().product();
        let dw = d / dv;
        let mut m = CMatrix::zeros(d, d);
        // input digits in factor order -> output digits in `order`
        let mut digits = vec![0usize; r];
        for col in 0..d {
            let row = order.iter().fold(0, |acc, &k| acc * factors[k] + digits[k]);
            m[(row, col)] = Complex64::new(1.0, 0.0);
            for j in (0..r).rev() {
                digits[j] += 1;
                if digits[j] < factors[j] {
                    break;
                }
                digits[j] = 0;
            }
        }
        Self::new(d, dv, dw, m)
    }

    /// Haar-like random isometry: complex Gaussian matrix projected to its polar factor.
    pub fn random<R: Rng + ?Sized>(
        in_dim: usize,
        out_v_dim: usize,
        out_w_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let g = gaussian_matrix(out_v_dim * out_w_dim, in_dim, rng);
        Self::new(in_dim, out_v_dim, out_w_dim, linalg::polar_project(&g))
    }

    /// Moves along a random direction scaled by `step` and projects back onto isometries.
    pub fn perturbed<R: Rng + ?Sized>(&self, step: f64, rng: &mut R) -> Result<Self> {
        let g = gaussian_matrix(self.matrix.nrows(), self.in_dim, rng);
        let scale = step / (self.in_dim as f64).sqrt();
        let moved = &self.matrix + g * Complex64::new(scale, 0.0);
        Self::new(
            self.in_dim,
            self.out_v_dim,
            self.out_w_dim,
            linalg::polar_project(&moved),
        )
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_v_dim(&self) -> usize {
        self.out_v_dim
    }

    pub fn out_w_dim(&self) -> usize {
        self.out_w_dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

pub(crate) fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}
