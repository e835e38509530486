//! Small dense complex linear-algebra helpers shared by the tensor and entropy code.

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Real eigenvalues of a Hermitian matrix, sorted descending.
///
/// Only the lower triangle is trusted by the solver, so the caller is responsible
/// for checking Hermiticity first when the input is not Hermitian by construction.
pub fn hermitian_eigvals(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 1 {
        return vec![m[(0, 0)].re];
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    vals
}

/// Largest elementwise |M - M†|.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().copied().sum()
}

/// Gram matrix of the smaller side of `x`: `x x†` if `x` is wide, `x† x` otherwise.
/// Both share the same nonzero spectrum.
pub fn small_gram(x: &CMatrix) -> CMatrix {
    if x.nrows() <= x.ncols() {
        x * x.adjoint()
    } else {
        x.adjoint() * x
    }
}

/// Closest matrix with orthonormal columns (polar factor `A B†` of the SVD `A Σ B†`).
pub fn polar_project(x: &CMatrix) -> CMatrix {
    let svd = SVD::new(x.clone(), true, true);
    let u = svd.u.expect("svd u requested");
    let v_t = svd.v_t.expect("svd v_t requested");
    u * v_t
}

/// max |(X†X - I)_{ij}|
pub fn isometry_defect(x: &CMatrix) -> f64 {
    let g = x.adjoint() * x;
    let mut worst = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}
