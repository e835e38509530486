//! Segment entanglement rates: the values forced on any zero-total-rate
//! protocol, the pair-incidence system behind them, and the merge-and-send
//! rate table.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bounds::LowerBoundSolver;
use crate::error::{QsrError, Result};
use crate::task::RotationTask;
use crate::tensor::SubsetMask;

/// Symmetric `M × M` table of segment rates `e_{i,j}` with zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentRateMatrix {
    m: usize,
    rates: DMatrix<f64>,
    exact: bool,
}

#[derive(Serialize, Deserialize)]
struct RateJson {
    m: usize,
    rates: Vec<Vec<f64>>,
    total: f64,
    exact: bool,
}

impl SegmentRateMatrix {
    pub fn zeros(m: usize) -> Self {
        SegmentRateMatrix {
            m,
            rates: DMatrix::zeros(m, m),
            exact: true,
        }
    }

    pub fn from_matrix(rates: DMatrix<f64>, exact: bool) -> Result<Self> {
        let m = rates.nrows();
        if rates.ncols() != m {
            return Err(QsrError::DimensionMismatch(
                "rate matrix is not square".into(),
            ));
        }
        for i in 0..m {
            if rates[(i, i)] != 0.0 {
                return Err(QsrError::InvalidSubset(format!(
                    "rate matrix diagonal entry {} is nonzero",
                    i + 1
                )));
            }
            for j in 0..i {
                if (rates[(i, j)] - rates[(j, i)]).abs() > 1e-12 {
                    return Err(QsrError::InvalidSubset(format!(
                        "rate matrix not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(SegmentRateMatrix { m, rates, exact })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.rates
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rates[(i, j)]
    }

    /// False when built from l-values that are only lower bounds.
    pub fn exact(&self) -> bool {
        self.exact
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        self.rates[(i, j)] += v;
        self.rates[(j, i)] += v;
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.rates[(i, j)] = v;
        self.rates[(j, i)] = v;
    }
}

impl Serialize for SegmentRateMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RateJson {
            m: self.m,
            rates: (0..self.m)
                .map(|i| (0..self.m).map(|j| self.rates[(i, j)]).collect())
                .collect(),
            total: e_total(self),
            exact: self.exact,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SegmentRateMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = RateJson::deserialize(d)?;
        if j.rates.len() != j.m || j.rates.iter().any(|r| r.len() != j.m) {
            return Err(serde::de::Error::custom("rates must be an m x m array"));
        }
        let mat = DMatrix::from_fn(j.m, j.m, |a, b| j.rates[a][b]);
        SegmentRateMatrix::from_matrix(mat, j.exact).map_err(serde::de::Error::custom)
    }
}

/// `Σ_{i∈P, j∉P} e_{i,j}`
pub fn e_partition(rates: &SegmentRateMatrix, p: SubsetMask) -> Result<f64> {
    if p.m() != rates.m || !p.is_proper() {
        return Err(QsrError::InvalidSubset(format!(
            "{p} is not a nonempty proper subset of {} users",
            rates.m
        )));
    }
    let mut s = 0.0;
    for i in p.indices() {
        for j in p.complement().indices() {
            s += rates.rates[(i, j)];
        }
    }
    Ok(s)
}

/// `Σ_{i<j} e_{i,j}`
pub fn e_total(rates: &SegmentRateMatrix) -> f64 {
    let mut s = 0.0;
    for i in 0..rates.m {
        for j in i + 1..rates.m {
            s += rates.rates[(i, j)];
        }
    }
    s
}

/// `l_P` values keyed by the side of the cut containing user 0, so `P` and
/// `P^c` share an entry.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LValueTable {
    m: usize,
    values: HashMap<u64, f64>,
    exact: bool,
}

impl LValueTable {
    pub fn new(m: usize, exact: bool) -> Self {
        LValueTable {
            m,
            values: HashMap::new(),
            exact,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn exact(&self) -> bool {
        self.exact
    }

    pub fn insert(&mut self, p: SubsetMask, value: f64) -> Result<()> {
        if p.m() != self.m || !p.is_proper() {
            return Err(QsrError::InvalidSubset(format!("{p}")));
        }
        self.values.insert(p.canonical().bits(), value);
        Ok(())
    }

    pub fn get(&self, p: SubsetMask) -> Result<f64> {
        self.values
            .get(&p.canonical().bits())
            .copied()
            .ok_or_else(|| QsrError::MissingLValue(p.to_string()))
    }

    fn pair(&self, i: usize, j: usize) -> Result<f64> {
        self.get(SubsetMask::from_indices(self.m, &[i, j])?)
    }

    fn single(&self, i: usize) -> Result<f64> {
        self.get(SubsetMask::singleton(self.m, i)?)
    }

    /// Singleton and pair cuts of a task, exact when its environment is trivial.
    pub fn singletons_and_pairs(solver: &LowerBoundSolver<'_>) -> Result<Self> {
        let m = solver.task().m();
        let mut t = LValueTable::new(m, solver.task().has_trivial_env());
        for k in 1..=2.min(m - 1) {
            for p in SubsetMask::all_of_size(m, k) {
                t.insert(p, solver.l_subset(p)?.value)?;
            }
        }
        Ok(t)
    }
}

/// Lexicographic enumeration of the two-element subsets of `0..m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairIndexMap {
    m: usize,
    pairs: Vec<(usize, usize)>,
}

impl PairIndexMap {
    pub fn new(m: usize) -> Self {
        let pairs = (0..m)
            .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
            .collect();
        PairIndexMap { m, pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pair(&self, s: usize) -> (usize, usize) {
        self.pairs[s]
    }

    pub fn index_of(&self, i: usize, j: usize) -> Option<usize> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        if a == b || b >= self.m {
            return None;
        }
        // pairs before row a: Σ_{r<a} (m-1-r)
        Some(a * (2 * self.m - a - 1) / 2 + (b - a - 1))
    }

    fn meet(&self, s: usize, t: usize) -> usize {
        let (a, b) = self.pairs[s];
        let (c, d) = self.pairs[t];
        usize::from(a == c || a == d) + usize::from(b == c || b == d)
    }
}

/// The pair-incidence matrix `D_M` (pairs adjacent iff distinct and sharing a
/// user) together with its closed-form inverse scaled by `α_M`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairIncidenceMatrix {
    m: usize,
    index: PairIndexMap,
    d: DMatrix<i64>,
}

/// Outcome of checking `D_M · D_M⁻¹ = I`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseCheck {
    pub m: usize,
    pub alpha: i64,
    pub beta: i64,
    pub gamma: i64,
    /// `D · (α D⁻¹) = α I` holds exactly in integers.
    pub exact: bool,
    /// max |(D D⁻¹ - I)_{st}| in floating point.
    pub float_residual: f64,
    pub row_sums: Vec<i64>,
    /// `|T^{(1)}_{s,s}|`, identical for every `s`.
    pub t1: usize,
    /// `[|T^{(2)}|, |T^{(3)}|, |T^{(4)}|]` for pairs sharing a user.
    pub t_sharing: [usize; 3],
    /// The same sizes for disjoint pairs.
    pub t_disjoint: [usize; 3],
}

pub fn alpha_beta_gamma(m: usize) -> (i64, i64, i64) {
    let m = m as i64;
    (2 * (m - 2) * (m - 4), 2 - (m - 4) * (m - 4), m - 4)
}

pub fn build_d_matrix(m: usize) -> Result<PairIncidenceMatrix> {
    if m < 5 {
        return Err(QsrError::Unsupported(format!(
            "D_M is only inverted in closed form for M >= 5, got {m}"
        )));
    }
    let index = PairIndexMap::new(m);
    let n = index.len();
    let d = DMatrix::from_fn(n, n, |s, t| i64::from(s != t && index.meet(s, t) > 0));
    Ok(PairIncidenceMatrix { m, index, d })
}

impl PairIncidenceMatrix {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn index(&self) -> &PairIndexMap {
        &self.index
    }

    pub fn matrix(&self) -> &DMatrix<i64> {
        &self.d
    }

    /// `α_M D_M⁻¹`, with integer entries `β`, `γ`, `-2`.
    pub fn scaled_inverse(&self) -> DMatrix<i64> {
        let (_, beta, gamma) = alpha_beta_gamma(self.m);
        let n = self.index.len();
        DMatrix::from_fn(n, n, |s, t| {
            if s == t {
                beta
            } else if self.index.meet(s, t) > 0 {
                gamma
            } else {
                -2
            }
        })
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        let (alpha, _, _) = alpha_beta_gamma(self.m);
        self.scaled_inverse().map(|x| x as f64 / alpha as f64)
    }

    fn t_sizes(&self, s: usize, t: usize) -> [usize; 3] {
        let n = self.index.len();
        let hits = |a: usize, k: usize| self.index.meet(a, k) > 0;
        let t2 = (0..n).filter(|&k| k == s && k != t && hits(t, k)).count();
        let t3 = (0..n)
            .filter(|&k| k != s && hits(s, k) && k != t && hits(t, k))
            .count();
        let t4 = (0..n)
            .filter(|&k| k != s && !hits(s, k) && k != t && hits(t, k))
            .count();
        [t2, t3, t4]
    }

    pub fn check_inverse(&self) -> InverseCheck {
        let (alpha, beta, gamma) = alpha_beta_gamma(self.m);
        let n = self.index.len();
        let prod = &self.d * self.scaled_inverse();
        let exact = prod == DMatrix::from_diagonal_element(n, n, alpha);
        let fprod = self.d.map(|x| x as f64) * self.inverse();
        let float_residual = (fprod - DMatrix::<f64>::identity(n, n)).amax();
        let row_sums = (0..n).map(|s| self.d.row(s).sum()).collect();
        let t1 = (0..n)
            .filter(|&k| k != 0 && self.index.meet(k, 0) == 1)
            .count();
        let sharing = (1..n).find(|&t| self.index.meet(0, t) > 0).expect("M >= 5");
        let disjoint = (1..n)
            .find(|&t| self.index.meet(0, t) == 0)
            .expect("M >= 5");
        InverseCheck {
            m: self.m,
            alpha,
            beta,
            gamma,
            exact,
            float_residual,
            row_sums,
            t1,
            t_sharing: self.t_sizes(0, sharing),
            t_disjoint: self.t_sizes(0, disjoint),
        }
    }
}

/// Segment rates any zero-total-rate protocol must have, from exact (or
/// lower-bound) cut values. Needs pair cuts, and singleton cuts when `M = 4`.
pub fn segment_rates_zero_total(l: &LValueTable) -> Result<SegmentRateMatrix> {
    let m = l.m();
    if m < 3 {
        return Err(QsrError::Unsupported(
            "zero-total-rate segment rates are determined only for M >= 3; the two-user exchange is not covered".into(),
        ));
    }
    let mut out = SegmentRateMatrix::zeros(m);
    out.exact = l.exact();
    match m {
        3 => {
            for i in 0..3 {
                for j in i + 1..3 {
                    out.set(i, j, -l.pair(i, j)?);
                }
            }
        }
        4 => {
            for i in 0..4 {
                for j in i + 1..4 {
                    out.set(i, j, 0.5 * (l.single(i)? + l.single(j)? - l.pair(i, j)?));
                }
            }
        }
        _ => {
            let (alpha, beta, gamma) = alpha_beta_gamma(m);
            let (alpha, beta, gamma) = (alpha as f64, beta as f64, gamma as f64);
            let mut lp = DMatrix::<f64>::zeros(m, m);
            for s in 0..m {
                for t in s + 1..m {
                    let v = l.pair(s, t)?;
                    lp[(s, t)] = v;
                    lp[(t, s)] = v;
                }
            }
            for i in 0..m {
                for j in i + 1..m {
                    let mut touching = 0.0;
                    for s in [i, j] {
                        for t in (0..m).filter(|&t| t != i && t != j) {
                            touching += lp[(s, t)];
                        }
                    }
                    let mut apart = 0.0;
                    for s in (0..m).filter(|&s| s != i && s != j) {
                        for t in (s + 1..m).filter(|&t| t != i && t != j) {
                            apart += lp[(s, t)];
                        }
                    }
                    out.set(
                        i,
                        j,
                        (beta * lp[(i, j)] + gamma * touching - 2.0 * apart) / alpha,
                    );
                }
            }
        }
    }
    Ok(out)
}

/// Segment rates of merge-and-send starting at user `start` (0-based): segment
/// `(j, j+1)` carries `H(A_j|A_{j+1})` except the closing segment
/// `(start-1, start)`, which carries `H(A_{start-1})`. With two users both
/// segments are the same pair and their rates add.
pub fn merge_and_send_rates(task: &RotationTask, start: usize) -> Result<SegmentRateMatrix> {
    let m = task.m();
    if m < 2 {
        return Err(QsrError::Unsupported(
            "merge-and-send needs at least two users".into(),
        ));
    }
    if start >= m {
        return Err(QsrError::OutOfRange(format!(
            "start user {start} not in 0..{m}"
        )));
    }
    let mut out = SegmentRateMatrix::zeros(m);
    let closing = (start + m - 1) % m;
    for j in 0..m {
        let next = (j + 1) % m;
        let v = if j == closing {
            task.h_user(j)?
        } else {
            task.cond_next(j)?
        };
        out.add(j, next, v);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub max_residual: f64,
    /// The cut with the largest `|e_P - l_P|`.
    pub worst: Option<SubsetMask>,
    pub checked: usize,
}

/// Largest `|e_P - l_P|` over all singleton and pair cuts.
pub fn verify_zero_rate_consistency(
    rates: &SegmentRateMatrix,
    l: &LValueTable,
) -> Result<ConsistencyReport> {
    let m = rates.m();
    if l.m() != m {
        return Err(QsrError::DimensionMismatch(
            "rate matrix and l-table disagree on M".into(),
        ));
    }
    let mut report = ConsistencyReport {
        max_residual: 0.0,
        worst: None,
        checked: 0,
    };
    for k in 1..=2.min(m - 1) {
        for p in SubsetMask::all_of_size(m, k) {
            let r = (e_partition(rates, p)? - l.get(p)?).abs();
            report.checked += 1;
            if report.worst.is_none() || r > report.max_residual {
                report.max_residual = r;
                report.worst = Some(p);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{u_start_task, OptimizerConfig};
    use crate::states::{random_pure, StateSpec};
    use crate::tensor::{binomial, PureState, SystemLayout};
    use proptest::prelude::*;

    fn table_for(state: &PureState) -> LValueTable {
        let task = RotationTask::new(state).unwrap();
        let solver = LowerBoundSolver::new(&task, OptimizerConfig::default()).unwrap();
        LValueTable::singletons_and_pairs(&solver).unwrap()
    }

    fn rates_for(name: &str) -> SegmentRateMatrix {
        segment_rates_zero_total(&table_for(&StateSpec::named(name).make().unwrap())).unwrap()
    }

    #[test]
    fn phi5_rates() {
        let r = rates_for("phi5");
        let even = [1, 3, 5];
        let odd = [0, 2, 4];
        for i in 0..6 {
            for j in 0..6 {
                let expected = if i == j {
                    0.0
                } else if even.contains(&i) && even.contains(&j) {
                    1.0
                } else if odd.contains(&i) && odd.contains(&j) {
                    -1.0
                } else {
                    0.0
                };
                assert!(
                    (r.get(i, j) - expected).abs() < 1e-9,
                    "({i},{j}) = {}",
                    r.get(i, j)
                );
            }
        }
        assert!(e_total(&r).abs() < 1e-9);
        assert!(
            (e_partition(&r, SubsetMask::singleton(6, 1).unwrap()).unwrap() - 2.0).abs() < 1e-9
        );
        let c =
            verify_zero_rate_consistency(&r, &table_for(&StateSpec::named("phi5").make().unwrap()))
                .unwrap();
        assert!(c.max_residual < 1e-9);
        assert_eq!(c.checked, 6 + 15);
    }

    #[test]
    fn phi6_rates() {
        let r = rates_for("phi6");
        let expected = [
            ((0, 1), -1.0),
            ((0, 2), -1.0),
            ((0, 3), 0.0),
            ((1, 2), 0.0),
            ((1, 3), 1.0),
            ((2, 3), 1.0),
        ];
        for ((i, j), e) in expected {
            assert!((r.get(i, j) - e).abs() < 1e-9);
        }
        assert!(
            (e_partition(&r, SubsetMask::singleton(4, 0).unwrap()).unwrap() + 2.0).abs() < 1e-9
        );
        let c =
            verify_zero_rate_consistency(&r, &table_for(&StateSpec::named("phi6").make().unwrap()))
                .unwrap();
        assert!(c.max_residual < 1e-9);
    }

    #[test]
    fn product_states_give_zero_rates() {
        for m in 3..=6 {
            let s = PureState::basis(SystemLayout::qubits(m, 1).unwrap(), &vec![0; m + 1]).unwrap();
            let r = segment_rates_zero_total(&table_for(&s)).unwrap();
            assert!(r.matrix().amax() < 1e-12);
            for p in SubsetMask::all(m).filter(|p| p.is_proper()) {
                assert!(e_partition(&r, p).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_users_and_missing_values_rejected() {
        let s = StateSpec::named("ebit").make().unwrap();
        assert!(matches!(
            segment_rates_zero_total(&table_for(&s)),
            Err(QsrError::Unsupported(_))
        ));
        let mut partial = LValueTable::new(4, true);
        partial
            .insert(SubsetMask::singleton(4, 0).unwrap(), 0.0)
            .unwrap();
        assert!(matches!(
            segment_rates_zero_total(&partial),
            Err(QsrError::MissingLValue(_))
        ));
    }

    #[test]
    fn remark_style_totals() {
        let h = 0.7;
        let mut m = DMatrix::zeros(3, 3);
        m[(0, 1)] = -h;
        m[(1, 0)] = -h;
        m[(1, 2)] = h;
        m[(2, 1)] = h;
        let r = SegmentRateMatrix::from_matrix(m, true).unwrap();
        assert!(e_total(&r).abs() < 1e-15);
        let s = random_pure(&SystemLayout::qubits(4, 1).unwrap(), 2).unwrap();
        let t = RotationTask::new(&s).unwrap();
        // start at user 0: closing segment (M-1, 0) carries H(A_M)
        let ms = merge_and_send_rates(&t, 0).unwrap();
        let expected = t.h_user(3).unwrap() + (0..3).map(|j| t.cond_next(j).unwrap()).sum::<f64>();
        assert!((e_total(&ms) - expected).abs() < 1e-12);
    }

    #[test]
    fn merge_and_send_on_phi2() {
        let s = StateSpec::named("phi2")
            .with_m(4)
            .with_theta(0.5)
            .make()
            .unwrap();
        let t = RotationTask::new(&s).unwrap();
        let r = merge_and_send_rates(&t, 0).unwrap();
        for j in 0..4 {
            assert!((r.get(j, (j + 1) % 4) - t.h_user(j).unwrap()).abs() < 1e-12);
        }
        assert!(r.get(0, 2).abs() < 1e-15);
        let prod = PureState::basis(SystemLayout::qubits(3, 1).unwrap(), &[0; 4]).unwrap();
        assert!(
            merge_and_send_rates(&RotationTask::new(&prod).unwrap(), 1)
                .unwrap()
                .matrix()
                .amax()
                < 1e-12
        );
    }

    #[test]
    fn d_matrix_shape_and_parameters() {
        let d5 = build_d_matrix(5).unwrap();
        assert_eq!(d5.matrix().nrows(), 10);
        assert!(d5.check_inverse().row_sums.iter().all(|&r| r == 6));
        let d6 = build_d_matrix(6).unwrap();
        assert_eq!(d6.matrix().nrows(), 15);
        let c6 = d6.check_inverse();
        assert!(c6.row_sums.iter().all(|&r| r == 8));
        assert_eq!((c6.alpha, c6.beta, c6.gamma), (16, -2, 2));
        assert!(build_d_matrix(4).is_err());
    }

    #[test]
    fn closed_form_inverse_is_exact() {
        for m in 5..=9 {
            let c = build_d_matrix(m).unwrap().check_inverse();
            assert!(c.exact, "M = {m}");
            assert!(c.float_residual < 1e-12);
            assert_eq!(c.t1, 2 * (m - 2));
            assert_eq!(c.t_sharing, [1, m - 2, m - 3]);
            assert_eq!(c.t_disjoint, [0, 4, 2 * (m - 4)]);
        }
    }

    #[test]
    fn pair_index_is_a_bijection() {
        for m in 2..9 {
            let map = PairIndexMap::new(m);
            assert_eq!(map.len(), m * (m - 1) / 2);
            for s in 0..map.len() {
                let (i, j) = map.pair(s);
                assert!(i < j);
                assert_eq!(map.index_of(i, j), Some(s));
                assert_eq!(map.index_of(j, i), Some(s));
            }
            assert_eq!(map.index_of(0, 0), None);
        }
    }

    #[test]
    fn small_rings_are_consistent_on_random_states() {
        for m in [3, 4] {
            for seed in 0..20 {
                let s = random_pure(&SystemLayout::qubits(m, 1).unwrap(), seed).unwrap();
                let t = table_for(&s);
                let r = segment_rates_zero_total(&t).unwrap();
                assert!(e_total(&r).abs() < 1e-8);
                assert!(verify_zero_rate_consistency(&r, &t).unwrap().max_residual < 1e-8);
            }
        }
    }

    #[test]
    fn larger_rings_solve_pairs_but_not_singletons() {
        // for M > 4 the pair cuts fix the rates; generic states then miss the singleton cuts
        let s = random_pure(&SystemLayout::qubits(5, 1).unwrap(), 1).unwrap();
        let t = table_for(&s);
        let r = segment_rates_zero_total(&t).unwrap();
        for p in SubsetMask::all_of_size(5, 2) {
            assert!((e_partition(&r, p).unwrap() - t.get(p).unwrap()).abs() < 1e-9);
        }
        assert!(e_total(&r).abs() < 1e-9);
        assert!(verify_zero_rate_consistency(&r, &t).unwrap().max_residual > 1e-3);
    }

    #[test]
    fn json_round_trip() {
        let r = rates_for("phi6");
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains("\"total\""));
        let back: SegmentRateMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert!(serde_json::from_str::<SegmentRateMatrix>(
            r#"{"m":2,"rates":[[0,1],[2,0]],"total":1,"exact":true}"#
        )
        .is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn cut_average_equals_total(seed in 0u64..10_000, m in 3usize..8) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut mat = DMatrix::zeros(m, m);
            for i in 0..m {
                for j in i + 1..m {
                    let v: f64 = rng.random_range(-2.0..2.0);
                    mat[(i, j)] = v;
                    mat[(j, i)] = v;
                }
            }
            let r = SegmentRateMatrix::from_matrix(mat, true).unwrap();
            for k in 1..m {
                let s: f64 = SubsetMask::all_of_size(m, k).map(|p| e_partition(&r, p).unwrap()).sum();
                prop_assert!((s / (2.0 * binomial(m - 2, k - 1)) - e_total(&r)).abs() < 1e-9);
            }
        }

        #[test]
        fn merge_and_send_totals_match_starts(seed in 0u64..10_000, m in 2usize..6) {
            let s = random_pure(&SystemLayout::uniform(m, 2, 2).unwrap(), seed).unwrap();
            let t = RotationTask::new(&s).unwrap();
            for i in 0..m {
                let r = merge_and_send_rates(&t, i).unwrap();
                prop_assert!((e_total(&r) - u_start_task(&t, i).unwrap()).abs() < 1e-9);
            }
        }
    }
}
