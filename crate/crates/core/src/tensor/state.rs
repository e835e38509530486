use nalgebra::DVector;
use num_complex::Complex64;

use super::{DensityOperator, Isometry, Part, SubsetMask, SystemLayout};
use crate::error::{QsrError, Result};
use crate::linalg::CMatrix;

pub const NORM_TOL: f64 = 1e-9;

/// Unit vector over a [`SystemLayout`], indexed big-endian (part 0 is the most
/// significant digit).
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    layout: SystemLayout,
    amps: DVector<Complex64>,
}

impl PureState {
    pub fn new(layout: SystemLayout, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != layout.total_dim() {
            return Err(QsrError::Parse(format!(
                "{} amplitudes for a layout of total dimension {}",
                amps.len(),
                layout.total_dim()
            )));
        }
        let amps = DVector::from_vec(amps);
        let norm = amps.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(QsrError::NotNormalized(norm));
        }
        Ok(PureState { layout, amps })
    }

    /// Normalizes `amps` before building the state.
    pub fn normalized(layout: SystemLayout, amps: Vec<Complex64>) -> Result<Self> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QsrError::NotNormalized(norm));
        }
        Self::new(layout, amps.into_iter().map(|a| a / norm).collect())
    }

    /// Computational basis state `|digits⟩`.
    pub fn basis(layout: SystemLayout, digits: &[usize]) -> Result<Self> {
        let dims = layout.dims();
        if digits.len() != dims.len() || digits.iter().zip(&dims).any(|(d, n)| d >= n) {
            return Err(QsrError::DimensionMismatch(
                "basis digits do not fit layout".into(),
            ));
        }
        let idx = digits.iter().zip(&dims).fold(0, |acc, (d, n)| acc * n + d);
        let mut amps = vec![Complex64::new(0.0, 0.0); layout.total_dim()];
        amps[idx] = Complex64::new(1.0, 0.0);
        Self::new(layout, amps)
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        self.amps.as_slice()
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn num_users(&self) -> usize {
        self.layout.num_users()
    }

    /// Same amplitudes over a relabelled layout of identical dimensions.
    pub fn with_layout(&self, layout: SystemLayout) -> Result<Self> {
        if layout.dims() != self.layout.dims() {
            return Err(QsrError::DimensionMismatch(
                "relayout must keep part dimensions".into(),
            ));
        }
        Ok(PureState {
            layout,
            amps: self.amps.clone(),
        })
    }

    /// Kronecker product `self ⊗ other` over the concatenated layout.
    pub fn tensor_product(&self, other: &PureState) -> Result<PureState> {
        for p in other.layout.parts() {
            if self.layout.index_of(&p.label).is_some() {
                return Err(QsrError::LabelCollision(p.label.clone()));
            }
        }
        let (env, factors) = match (self.layout.env_index(), other.layout.env_index()) {
            (Some(_), Some(_)) => {
                return Err(QsrError::InvalidLayout(
                    "both factors carry an environment".into(),
                ))
            }
            (Some(e), None) => (Some(e), self.layout.env_factors().map(<[usize]>::to_vec)),
            (None, Some(e)) => (
                Some(e + self.layout.num_parts()),
                other.layout.env_factors().map(<[usize]>::to_vec),
            ),
            (None, None) => (None, None),
        };
        let mut parts = self.layout.parts().to_vec();
        parts.extend_from_slice(other.layout.parts());
        let layout = self.layout.with_parts(parts, env, factors)?;
        let nb = other.amps.len();
        let mut amps = Vec::with_capacity(self.amps.len() * nb);
        for a in self.amps.iter() {
            for b in other.amps.iter() {
                amps.push(a * b);
            }
        }
        Ok(PureState {
            layout,
            amps: DVector::from_vec(amps),
        })
    }

    /// Reorders parts so that output part `k` is input part `perm[k]`.
    pub fn permute_parts(&self, perm: &[usize]) -> Result<PureState> {
        let n = self.layout.num_parts();
        check_bijection(perm, n)?;
        let parts: Vec<Part> = perm
            .iter()
            .map(|&p| self.layout.parts()[p].clone())
            .collect();
        let env = self
            .layout
            .env_index()
            .map(|e| perm.iter().position(|&p| p == e).unwrap());
        let layout =
            self.layout
                .with_parts(parts, env, self.layout.env_factors().map(<[usize]>::to_vec))?;
        let amps = permute_amplitudes(&self.layout.dims(), self.amps.as_slice(), perm);
        Ok(PureState {
            layout,
            amps: DVector::from_vec(amps),
        })
    }

    /// Splits the state across the cut `keep | rest` as a `d_keep × d_rest` matrix,
    /// both sides keeping the original part order.
    pub fn bipartite_matrix(&self, keep: SubsetMask) -> Result<CMatrix> {
        let n = self.layout.num_parts();
        if keep.m() != n {
            return Err(QsrError::InvalidSubset(format!(
                "mask over {} parts, state has {n}",
                keep.m()
            )));
        }
        let dims = self.layout.dims();
        let mut perm: Vec<usize> = keep.indices().collect();
        perm.extend(keep.complement().indices());
        let rows: usize = keep.indices().map(|i| dims[i]).product();
        let cols = self.amps.len() / rows;
        let v = permute_amplitudes(&dims, self.amps.as_slice(), &perm);
        Ok(CMatrix::from_fn(rows, cols, |r, c| v[r * cols + c]))
    }

    /// Reduced density operator on the kept parts, in original part order.
    pub fn partial_trace(&self, keep: SubsetMask) -> Result<DensityOperator> {
        if keep.is_empty() {
            return Err(QsrError::InvalidSubset(
                "partial trace keeps no parts".into(),
            ));
        }
        let x = self.bipartite_matrix(keep)?;
        let rho = &x * x.adjoint();
        let parts = keep
            .indices()
            .map(|i| self.layout.parts()[i].clone())
            .collect();
        DensityOperator::new(parts, rho)
    }

    /// Applies `U: E -> V ⊗ W` to the environment. The output layout replaces the
    /// environment by two plain parts `V` and `W` and has no environment.
    pub fn apply_isometry_to_env(&self, u: &Isometry) -> Result<PureState> {
        let e = self
            .layout
            .env_index()
            .ok_or_else(|| QsrError::DimensionMismatch("state has no environment".into()))?;
        let dims = self.layout.dims();
        if dims[e] != u.in_dim() {
            return Err(QsrError::DimensionMismatch(format!(
                "environment dimension {} but isometry input {}",
                dims[e],
                u.in_dim()
            )));
        }
        let left: usize = dims[..e].iter().product();
        let right: usize = dims[e + 1..].iter().product();
        let de = dims[e];
        let dout = u.out_v_dim() * u.out_w_dim();
        let m = u.matrix();
        let mut out = vec![Complex64::new(0.0, 0.0); left * dout * right];
        for l in 0..left {
            for k in 0..de {
                for r in 0..right {
                    let a = self.amps[(l * de + k) * right + r];
                    if a == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for o in 0..dout {
                        out[(l * dout + o) * right + r] += m[(o, k)] * a;
                    }
                }
            }
        }
        let mut parts = self.layout.parts().to_vec();
        let v_label = fresh_label(&parts, "V");
        let w_label = fresh_label(&parts, "W");
        parts.splice(
            e..=e,
            [
                Part::new(v_label, u.out_v_dim()),
                Part::new(w_label, u.out_w_dim()),
            ],
        );
        let layout = self.layout.with_parts(parts, None, None)?;
        Ok(PureState {
            layout,
            amps: DVector::from_vec(out),
        })
    }

    /// Fuses a contiguous run of parts into a single part of product dimension.
    ///
    /// If the run contains the environment, the fused part becomes the
    /// environment and its factor structure records the fused dimensions.
    pub fn coarse_grain_parts(&self, group: SubsetMask, new_label: &str) -> Result<PureState> {
        let n = self.layout.num_parts();
        if group.m() != n || group.is_empty() {
            return Err(QsrError::InvalidSubset(
                "coarse-grain group must be non-empty".into(),
            ));
        }
        let idx = group.to_vec();
        let (first, last) = (idx[0], *idx.last().unwrap());
        if last - first + 1 != idx.len() {
            return Err(QsrError::InvalidSubset(format!(
                "group {group} is not contiguous"
            )));
        }
        let old = self.layout.parts();
        if old
            .iter()
            .enumerate()
            .any(|(i, p)| !group.contains(i) && p.label == new_label)
        {
            return Err(QsrError::LabelCollision(new_label.to_string()));
        }
        let dim: usize = idx.iter().map(|&i| old[i].dim).product();
        let mut parts: Vec<Part> = old[..first].to_vec();
        parts.push(Part::new(new_label, dim));
        parts.extend_from_slice(&old[last + 1..]);

        let shift = |i: usize| if i > last { i - (idx.len() - 1) } else { i };
        let (env, factors) = match self.layout.env_index() {
            Some(e) if group.contains(e) => {
                let mut f = Vec::new();
                for &i in &idx {
                    if i == e {
                        match self.layout.env_factors() {
                            Some(ef) => f.extend_from_slice(ef),
                            None => f.push(old[i].dim),
                        }
                    } else {
                        f.push(old[i].dim);
                    }
                }
                f.retain(|&d| d > 1);
                let factors = if f.len() > 1 { Some(f) } else { None };
                (Some(first), factors)
            }
            Some(e) => (
                Some(shift(e)),
                self.layout.env_factors().map(<[usize]>::to_vec),
            ),
            None => (None, None),
        };
        let layout = self.layout.with_parts(parts, env, factors)?;
        Ok(PureState {
            layout,
            amps: self.amps.clone(),
        })
    }

    /// Replaces a factored environment by one plain part per factor (`E1`, `E2`, ..).
    /// Returns the new state and the part indices of the factors.
    pub fn split_environment(&self) -> Result<(PureState, Vec<usize>)> {
        let e = self
            .layout
            .env_index()
            .ok_or_else(|| QsrError::DimensionMismatch("state has no environment".into()))?;
        let factors = self
            .layout
            .env_factors()
            .map(<[usize]>::to_vec)
            .unwrap_or_else(|| vec![self.layout.env_dim()]);
        let mut parts = self.layout.parts().to_vec();
        let new: Vec<Part> = factors
            .iter()
            .enumerate()
            .map(|(k, &d)| Part::new(fresh_label(&parts, &format!("E{}", k + 1)), d))
            .collect();
        let positions = (e..e + new.len()).collect();
        parts.splice(e..=e, new);
        let layout = self.layout.with_parts(parts, None, None)?;
        Ok((
            PureState {
                layout,
                amps: self.amps.clone(),
            },
            positions,
        ))
    }

    /// |⟨self|other⟩|
    pub fn overlap(&self, other: &PureState) -> f64 {
        self.amps.dotc(&other.amps).norm()
    }
}

fn fresh_label(parts: &[Part], base: &str) -> String {
    let mut label = base.to_string();
    while parts.iter().any(|p| p.label == label) {
        label.push('\'');
    }
    label
}

pub(crate) fn check_bijection(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(QsrError::InvalidPermutation(format!(
            "permutation of length {} for {n} elements",
            perm.len()
        )));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(QsrError::InvalidPermutation(format!(
                "{perm:?} is not a bijection"
            )));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Big-endian tensor transpose: output digit `k` is input digit `perm[k]`.
pub(crate) fn permute_amplitudes(
    dims: &[usize],
    amps: &[Complex64],
    perm: &[usize],
) -> Vec<Complex64> {
    let n = dims.len();
    if perm.iter().enumerate().all(|(k, &p)| k == p) {
        return amps.to_vec();
    }
    let mut out_stride = vec![1usize; n];
    for k in (0..n.saturating_sub(1)).rev() {
        out_stride[k] = out_stride[k + 1] * dims[perm[k + 1]];
    }
    let mut stride_of_input = vec![0usize; n];
    for (k, &p) in perm.iter().enumerate() {
        stride_of_input[p] = out_stride[k];
    }
    let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
    let mut digits = vec![0usize; n];
    let mut out_idx = 0usize;
    for &a in amps {
        out[out_idx] = a;
        for j in (0..n).rev() {
            digits[j] += 1;
            out_idx += stride_of_input[j];
            if digits[j] < dims[j] {
                break;
            }
            out_idx -= stride_of_input[j] * dims[j];
            digits[j] = 0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Part;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn qubit(label: &str, amps: [f64; 2]) -> PureState {
        let l = SystemLayout::new(vec![Part::new(label, 2)], None, None).unwrap();
        PureState::normalized(l, amps.iter().map(|&a| c(a)).collect()).unwrap()
    }

    fn ebit(a: &str, b: &str) -> PureState {
        let l = SystemLayout::new(vec![Part::new(a, 2), Part::new(b, 2)], None, None).unwrap();
        PureState::normalized(l, vec![c(1.0), c(0.0), c(0.0), c(1.0)]).unwrap()
    }

    #[test]
    fn product_of_basis_states() {
        let s = qubit("A", [1.0, 0.0])
            .tensor_product(&qubit("B", [1.0, 0.0]))
            .unwrap();
        assert_eq!(s.amplitudes(), &[c(1.0), c(0.0), c(0.0), c(0.0)]);
    }

    #[test]
    fn ebit_times_zero_uses_big_endian_order() {
        let s = ebit("A1", "A2")
            .tensor_product(&qubit("A3", [1.0, 0.0]))
            .unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expected = [h, 0.0, 0.0, 0.0, 0.0, 0.0, h, 0.0];
        for (a, e) in s.amplitudes().iter().zip(expected) {
            assert!((a - c(e)).norm() < 1e-15);
        }
    }

    #[test]
    fn product_rejects_label_collision() {
        assert!(matches!(
            qubit("A", [1.0, 0.0]).tensor_product(&qubit("A", [1.0, 0.0])),
            Err(QsrError::LabelCollision(_))
        ));
    }

    #[test]
    fn wrong_amplitude_count_is_a_parse_error() {
        let l = SystemLayout::qubits(2, 1).unwrap();
        assert!(matches!(
            PureState::new(l, vec![c(1.0); 3]),
            Err(QsrError::Parse(_))
        ));
    }

    #[test]
    fn unnormalized_vector_is_rejected() {
        let l = SystemLayout::qubits(1, 1).unwrap();
        assert!(matches!(
            PureState::new(l, vec![c(1.0), c(1.0)]),
            Err(QsrError::NotNormalized(_))
        ));
    }

    #[test]
    fn permutation_rejects_non_bijection() {
        let s = ebit("A1", "A2");
        assert!(s.permute_parts(&[0, 0]).is_err());
        assert!(s.permute_parts(&[0]).is_err());
    }

    #[test]
    fn permutation_moves_digits() {
        // |0⟩_A ⊗ |1⟩_B ⊗ |0⟩_C, dims (2, 3, 2) -> order (C, A, B)
        let l = SystemLayout::new(
            vec![Part::new("A", 2), Part::new("B", 3), Part::new("C", 2)],
            None,
            None,
        )
        .unwrap();
        let s = PureState::basis(l, &[1, 2, 0]).unwrap();
        let p = s.permute_parts(&[2, 0, 1]).unwrap();
        assert_eq!(p.layout().dims(), vec![2, 2, 3]);
        let idx = p.amplitudes().iter().position(|a| a.norm() > 0.5).unwrap();
        assert_eq!(idx, 5); // digits (0, 1, 2) over dims (2, 2, 3)
    }

    #[test]
    fn coarse_grain_rejects_gaps() {
        let s = ebit("A1", "A2")
            .tensor_product(&qubit("A3", [1.0, 0.0]))
            .unwrap();
        let g = SubsetMask::from_indices(3, &[0, 2]).unwrap();
        assert!(s.coarse_grain_parts(g, "X").is_err());
    }

    #[test]
    fn coarse_grain_into_environment_records_factors() {
        let l = SystemLayout::new(
            vec![Part::new("A1", 2), Part::new("A2", 3), Part::new("E", 2)],
            Some(2),
            None,
        )
        .unwrap();
        let s = PureState::basis(l, &[0, 0, 0]).unwrap();
        let g = SubsetMask::from_indices(3, &[1, 2]).unwrap();
        let f = s.coarse_grain_parts(g, "E").unwrap();
        assert_eq!(f.layout().env_index(), Some(1));
        assert_eq!(f.layout().env_factors(), Some(&[3usize, 2][..]));
        assert_eq!(f.amplitudes(), s.amplitudes());
    }

    #[test]
    fn split_environment_exposes_factors() {
        let l = SystemLayout::new(
            vec![Part::new("A1", 2), Part::new("E", 6)],
            Some(1),
            Some(vec![2, 3]),
        )
        .unwrap();
        let s = PureState::basis(l, &[1, 4]).unwrap();
        let (t, idx) = s.split_environment().unwrap();
        assert_eq!(idx, vec![1, 2]);
        assert_eq!(t.layout().dims(), vec![2, 2, 3]);
        assert_eq!(t.amplitudes(), s.amplitudes());
    }
}
