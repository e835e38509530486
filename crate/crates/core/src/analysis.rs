//! Condition checks and scenario transforms: the environment-asymmetry
//! positivity detector, the even-subset identity for `l_1`, the four-user cycle
//! allocation bound, SWAP invariance, user reduction and fusion, and
//! decomposition of permutations into cycles.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bounds::{u_upper_task, LowerBoundSolver, OptimizerConfig};
use crate::error::{QsrError, Result};
use crate::task::RotationTask;
use crate::tensor::{check_bijection, PureState, SubsetMask};

pub const POSITIVITY_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// Some pair of users has `|H(E|A_i) - H(E|A_j)| > tol`, which forces a
    /// strictly positive optimal cost.
    pub positive_cost_detected: bool,
    /// The pair with the largest gap (users counted from 1, `i < j`) and that gap.
    pub witness_pair: Option<(usize, usize, f64)>,
    /// `H(E|A_i)` for each user.
    pub env_given_user: Vec<f64>,
    pub even_subset_lhs: f64,
    pub even_subset_rhs: f64,
    pub residual: f64,
    /// `even_subset_rhs / 2`, a lower bound on `l_1`.
    pub l1_entropy_lower_bound: f64,
    pub tol: f64,
}

fn env_conditionals(task: &RotationTask) -> Result<Vec<f64>> {
    (0..task.m()).map(|i| task.env_given_user(i)).collect()
}

pub fn positivity_condition_task(task: &RotationTask, tol: f64) -> Result<ConditionReport> {
    let g = env_conditionals(task)?;
    let lo = (0..g.len()).fold(0, |b, i| if g[i] < g[b] { i } else { b });
    let hi = (0..g.len()).fold(0, |b, i| if g[i] > g[b] { i } else { b });
    let gap = g[hi] - g[lo];
    let detected = gap > tol;
    let lhs = even_subset_lhs_task(task)?;
    let rhs = even_subset_rhs_values(&g);
    Ok(ConditionReport {
        positive_cost_detected: detected,
        witness_pair: detected.then(|| (lo.min(hi) + 1, lo.max(hi) + 1, gap)),
        env_given_user: g,
        even_subset_lhs: lhs,
        even_subset_rhs: rhs,
        residual: (lhs - rhs).abs(),
        l1_entropy_lower_bound: rhs / 2.0,
        tol,
    })
}

pub fn positivity_condition(state: &PureState, tol: f64) -> Result<ConditionReport> {
    positivity_condition_task(&RotationTask::new(state)?, tol)
}

/// `Σ_i max{α_i, β_i}` with `α_i = H(A_{i-1}) - H(A_i)`, `β_i = H(A_{i-1}E) - H(A_iE)`.
pub fn even_subset_lhs_task(task: &RotationTask) -> Result<f64> {
    let m = task.m();
    let mut sum = 0.0;
    for i in 0..m {
        let p = task.user(i);
        let alpha = task.shifted_difference(p, false)?;
        let beta = task.shifted_difference(p, true)?;
        sum += alpha.max(beta);
    }
    Ok(sum)
}

/// Largest `|Σ_j (-1)^j g_{i_j}|` over even-size index sets `i_1 < i_2 < ..`.
fn even_subset_rhs_values(g: &[f64]) -> f64 {
    let m = g.len();
    let mut best = 0.0f64;
    for bits in 0u64..1 << m {
        if bits.count_ones() % 2 == 1 || bits == 0 {
            continue;
        }
        let mut s = 0.0;
        let mut sign = -1.0;
        for (i, gi) in g.iter().enumerate() {
            if bits >> i & 1 == 1 {
                s += sign * gi;
                sign = -sign;
            }
        }
        best = best.max(s.abs());
    }
    best
}

pub fn even_subset_lhs(state: &PureState) -> Result<f64> {
    even_subset_lhs_task(&RotationTask::new(state)?)
}

pub fn even_subset_rhs(state: &PureState) -> Result<f64> {
    Ok(even_subset_rhs_values(&env_conditionals(
        &RotationTask::new(state)?,
    )?))
}

pub fn l1_entropy_lower_bound(state: &PureState) -> Result<f64> {
    Ok(even_subset_rhs(state)? / 2.0)
}

/// `|l_{1} + l_{3}|` (users 1 and 3 counted from one) for a four-user state
/// with trivial environment.
pub fn cycle_allocation_bound_m4(state: &PureState) -> Result<f64> {
    let task = RotationTask::new(state)?;
    if task.m() != 4 {
        return Err(QsrError::Unsupported(format!(
            "cycle allocation bound needs M = 4, got {}",
            task.m()
        )));
    }
    if !task.has_trivial_env() {
        return Err(QsrError::Unsupported(
            "cycle allocation bound needs a trivial environment".into(),
        ));
    }
    let a = task.shifted_difference(task.user(0), false)?;
    let b = task.shifted_difference(task.user(2), false)?;
    Ok((a + b).abs())
}

/// Whether exchanging parts `i` and `j` leaves `|ψ⟩⟨ψ|` unchanged within `tol`
/// (max-abs over all matrix entries).
pub fn swap_invariance(state: &PureState, i: usize, j: usize, tol: f64) -> Result<bool> {
    let dims = state.layout().dims();
    if i >= dims.len() || j >= dims.len() {
        return Err(QsrError::OutOfRange(format!(
            "part index out of range ({i}, {j})"
        )));
    }
    if dims[i] != dims[j] {
        return Err(QsrError::DimensionMismatch(format!(
            "parts {i} and {j} have dimensions {} and {}",
            dims[i], dims[j]
        )));
    }
    let mut perm: Vec<usize> = (0..dims.len()).collect();
    perm.swap(i, j);
    let swapped = state.permute_parts(&perm)?;
    let a = state.amplitudes();
    let b = swapped.amplitudes();
    for x in 0..a.len() {
        for y in 0..a.len() {
            if (b[x] * b[y].conj() - a[x] * a[y].conj()).norm() > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Keeps the users `keep` (0-based, in the given order, which becomes the new
/// cyclic order) and fuses every other user together with the environment
/// into a single environment part `E`, recording its factors.
pub fn restrict_to_users(state: &PureState, keep: &[usize]) -> Result<PureState> {
    let layout = state.layout();
    let m = layout.num_users();
    let user_parts = layout.user_parts();
    if keep.is_empty() {
        return Err(QsrError::InvalidSubset("no users kept".into()));
    }
    let kept = SubsetMask::from_indices(m, keep)?;
    if kept.len() != keep.len() {
        return Err(QsrError::InvalidSubset(format!(
            "repeated user in {keep:?}"
        )));
    }
    let mut perm: Vec<usize> = keep.iter().map(|&u| user_parts[u]).collect();
    let dropped: Vec<usize> = kept.complement().indices().map(|u| user_parts[u]).collect();
    perm.extend(&dropped);
    perm.extend(layout.env_index());
    let moved = state.permute_parts(&perm)?;
    let n = perm.len();
    let tail = n - keep.len();
    if tail == 0 {
        let l = moved.layout().clone().with_env(None, None)?;
        return moved.with_layout(l);
    }
    let label = if keep
        .iter()
        .any(|&u| layout.parts()[user_parts[u]].label == "E")
    {
        "E_env"
    } else {
        "E"
    };
    let group = SubsetMask::from_indices(n, &(keep.len()..n).collect::<Vec<_>>())?;
    if layout.env_index().is_some() {
        return moved.coarse_grain_parts(group, label);
    }
    // no environment yet: mark the last dropped user as one so the fused part inherits the role
    let marked = moved.with_layout(moved.layout().clone().with_env(Some(n - 1), None)?)?;
    marked.coarse_grain_parts(group, label)
}

/// Removes user `drop` (0-based) from the task by moving its part into the
/// environment; the remaining users keep their cyclic order.
pub fn user_reduction(state: &PureState, drop: usize) -> Result<PureState> {
    let m = state.num_users();
    if m < 3 {
        return Err(QsrError::Unsupported(format!(
            "user reduction needs M >= 3, got {m}"
        )));
    }
    if drop >= m {
        return Err(QsrError::OutOfRange(format!("user {drop} not in 0..{m}")));
    }
    let keep: Vec<usize> = (0..m).filter(|&u| u != drop).collect();
    restrict_to_users(state, &keep)
}

/// Merges users that are adjacent in part order (0-based, ascending, no gaps)
/// into one user whose label joins theirs.
pub fn fuse_users(state: &PureState, users: &[usize]) -> Result<PureState> {
    let layout = state.layout();
    let m = layout.num_users();
    let mask = SubsetMask::from_indices(m, users)?;
    if mask.len() < 2 {
        return Err(QsrError::InvalidSubset(
            "fusion needs at least two users".into(),
        ));
    }
    let parts = layout.users_to_parts(mask, false)?;
    let label: String = parts
        .indices()
        .map(|p| layout.parts()[p].label.clone())
        .collect::<Vec<_>>()
        .join("");
    state.coarse_grain_parts(parts, &label)
}

/// Bijection on `0..m`, stored as images. JSON form: array of 1-based images.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        check_bijection(&images, images.len())?;
        Ok(Permutation { images })
    }

    pub fn from_one_based(images: &[usize]) -> Result<Self> {
        if images.contains(&0) {
            return Err(QsrError::InvalidPermutation(
                "images are counted from 1".into(),
            ));
        }
        Self::new(images.iter().map(|&x| x - 1).collect())
    }

    pub fn identity(m: usize) -> Self {
        Permutation {
            images: (0..m).collect(),
        }
    }

    /// Builds `σ` from disjoint cycles, each `c[0] → c[1] → .. → c[0]`.
    pub fn from_cycles(m: usize, cycles: &[Vec<usize>]) -> Result<Self> {
        let mut images: Vec<usize> = (0..m).collect();
        for c in cycles {
            for (k, &x) in c.iter().enumerate() {
                if x >= m {
                    return Err(QsrError::InvalidPermutation(format!("{x} not in 0..{m}")));
                }
                images[x] = c[(k + 1) % c.len()];
            }
        }
        Self::new(images)
    }

    pub fn m(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn apply(&self, i: usize) -> usize {
        self.images[i]
    }
}

impl Serialize for Permutation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.images
            .iter()
            .map(|x| x + 1)
            .collect::<Vec<_>>()
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Permutation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        Permutation::from_one_based(&v).map_err(serde::de::Error::custom)
    }
}

/// Disjoint cycles, each starting at its smallest element, ordered by that
/// element; fixed points appear as 1-cycles.
pub fn permutation_cycles(sigma: &Permutation) -> Vec<Vec<usize>> {
    let m = sigma.m();
    let mut seen = vec![false; m];
    let mut cycles = Vec::new();
    for start in 0..m {
        if seen[start] {
            continue;
        }
        let mut c = vec![start];
        seen[start] = true;
        let mut x = sigma.apply(start);
        while x != start {
            seen[x] = true;
            c.push(x);
            x = sigma.apply(x);
        }
        cycles.push(c);
    }
    cycles
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CycleBounds {
    /// Users in rotation order, counted from 1.
    pub users: Vec<usize>,
    pub l: f64,
    pub u: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PermutationReport {
    pub cycles: Vec<CycleBounds>,
    pub l_sum: f64,
    pub u_sum: f64,
    /// Always true: correlations across cycles are folded into each
    /// sub-task's environment, so the sums are not proven bounds.
    pub heuristic: bool,
}

/// Treats each cycle of `sigma` as its own rotation task (other users moved to
/// the environment) and sums the per-cycle bounds.
pub fn permutation_bounds(
    state: &PureState,
    sigma: &Permutation,
    cfg: &OptimizerConfig,
) -> Result<PermutationReport> {
    let m = state.num_users();
    if sigma.m() != m {
        return Err(QsrError::InvalidPermutation(format!(
            "permutation on {} users, state has {m}",
            sigma.m()
        )));
    }
    let mut cycles = Vec::new();
    for c in permutation_cycles(sigma) {
        let users = c.iter().map(|x| x + 1).collect();
        if c.len() == 1 {
            cycles.push(CycleBounds {
                users,
                l: 0.0,
                u: 0.0,
            });
            continue;
        }
        let sub = restrict_to_users(state, &c)?;
        let task = RotationTask::new(&sub)?;
        let (l, _) = LowerBoundSolver::new(&task, cfg.clone())?.l_lower()?;
        let (u, _) = u_upper_task(&task)?;
        cycles.push(CycleBounds { users, l, u });
    }
    Ok(PermutationReport {
        l_sum: cycles.iter().map(|c| c.l).sum(),
        u_sum: cycles.iter().map(|c| c.u).sum(),
        cycles,
        heuristic: true,
    })
}
