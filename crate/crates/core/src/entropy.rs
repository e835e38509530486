//! Spectral entropies in bits: von Neumann, conditional, mutual information,
//! binary entropy and the Fannes–Audenaert continuity bound.

use crate::error::{QsrError, Result};
use crate::linalg::{self, CMatrix};
use crate::tensor::{DensityOperator, PureState, SubsetMask};

/// Eigenvalues with magnitude below this are treated as exact zeros.
pub const CLIP_TOL: f64 = 1e-12;
/// Eigenvalues below `-NEGATIVE_TOL` are rejected.
pub const NEGATIVE_TOL: f64 = 1e-9;

/// Descending eigenvalues of a density operator.
pub fn hermitian_eigenvalues(op: &DensityOperator) -> Result<Vec<f64>> {
    let defect = linalg::hermiticity_defect(op.matrix());
    if defect > crate::tensor::NORM_TOL {
        return Err(QsrError::InvalidDensity(format!(
            "not Hermitian (defect {defect:e})"
        )));
    }
    Ok(linalg::hermitian_eigvals(op.matrix()))
}

/// `-Σ λ log2 λ` with `0 log 0 = 0`, floored at 0 against roundoff.
pub fn spectrum_entropy(eigenvalues: &[f64]) -> Result<f64> {
    let mut h = 0.0;
    for &l in eigenvalues {
        if l < -NEGATIVE_TOL {
            return Err(QsrError::InvalidDensity(format!(
                "negative eigenvalue {l:e}"
            )));
        }
        if l > CLIP_TOL {
            h -= l * l.log2();
        }
    }
    Ok(h.max(0.0))
}

pub fn von_neumann(op: &DensityOperator) -> Result<f64> {
    spectrum_entropy(&hermitian_eigenvalues(op)?)
}

/// Entropy of a PSD matrix known to be Hermitian by construction (a Gram matrix).
pub(crate) fn gram_entropy(gram: &CMatrix) -> Result<f64> {
    spectrum_entropy(&linalg::hermitian_eigvals(gram))
}

/// Entropy of the marginal on `parts` (a mask over the state's parts).
/// The empty set has entropy 0.
pub fn subset_entropy(state: &PureState, parts: SubsetMask) -> Result<f64> {
    if parts.m() != state.layout().num_parts() {
        return Err(QsrError::InvalidSubset(format!(
            "mask over {} parts, state has {}",
            parts.m(),
            state.layout().num_parts()
        )));
    }
    if parts.is_empty() || parts.is_full() {
        return Ok(0.0);
    }
    let x = state.bipartite_matrix(parts)?;
    gram_entropy(&linalg::small_gram(&x))
}

/// `H(X|Y) = H(XY) - H(Y)`.
pub fn conditional_entropy(state: &PureState, x: SubsetMask, y: SubsetMask) -> Result<f64> {
    if !x.is_disjoint(&y) {
        return Err(QsrError::InvalidSubset(format!("{x} and {y} overlap")));
    }
    Ok(subset_entropy(state, x.union(&y))? - subset_entropy(state, y)?)
}

/// `I(X;Y) = H(X) + H(Y) - H(XY)`.
pub fn mutual_information(state: &PureState, x: SubsetMask, y: SubsetMask) -> Result<f64> {
    if !x.is_disjoint(&y) {
        return Err(QsrError::InvalidSubset(format!("{x} and {y} overlap")));
    }
    Ok(subset_entropy(state, x)? + subset_entropy(state, y)? - subset_entropy(state, x.union(&y))?)
}

pub fn binary_entropy(eps: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(QsrError::OutOfRange(format!(
            "binary entropy argument {eps}"
        )));
    }
    let term = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    Ok(term(eps) + term(1.0 - eps))
}

/// `eps log2(d-1) + h(eps)`, an upper bound on `|H(ρ) - H(σ)|` for states of
/// dimension `d` at trace distance `eps = ‖ρ-σ‖₁/2`.
pub fn fannes_audenaert_bound(d: usize, eps: f64) -> Result<f64> {
    if d < 2 {
        return Err(QsrError::OutOfRange(format!("dimension {d} < 2")));
    }
    Ok(eps * ((d - 1) as f64).log2() + binary_entropy(eps)?)
}

/// `‖ρ - σ‖₁ / 2`.
pub fn trace_distance(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(QsrError::DimensionMismatch(
            "trace distance of different dimensions".into(),
        ));
    }
    let diff = a.matrix() - b.matrix();
    Ok(linalg::hermitian_eigvals(&diff)
        .iter()
        .map(|l| l.abs())
        .sum::<f64>()
        / 2.0)
}
