//! Lower bounds `l_P`, `l_k`, `l` and upper bounds `u_i`, `u` on the optimal
//! entanglement cost of rotating a state, plus the bipartite entanglement
//! difference of a resource ledger.

mod search;

use std::collections::HashMap;
use std::sync::Mutex;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::analysis::{positivity_condition_task, ConditionReport, POSITIVITY_TOL};
use crate::error::{QsrError, Result};
use crate::task::RotationTask;
use crate::tensor::{binomial, PureState, SubsetMask};

pub use search::Witness;

/// Tolerance for the two algebraic forms of `u_i` to agree.
pub const U_FORM_TOL: f64 = 1e-9;
const TIE_TOL: f64 = 1e-12;

fn default_seed() -> u64 {
    0
}
fn default_restarts() -> usize {
    16
}
fn default_iters() -> usize {
    100
}
fn default_decay() -> f64 {
    0.9
}
fn default_initial_step() -> f64 {
    0.5
}

/// Settings for the isometry search used when the environment is nontrivial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_restarts")]
    pub random_restarts: usize,
    #[serde(default = "default_iters")]
    pub refine_iters: usize,
    /// Candidate `d_V` values; `None` means `{1, d_E}` plus each declared
    /// environment factor and its cofactor.
    #[serde(default)]
    pub dv_sweep: Option<Vec<usize>>,
    #[serde(default = "default_decay")]
    pub step_decay: f64,
    #[serde(default = "default_initial_step")]
    pub initial_step: f64,
    /// Dimension of the discarded output `W`; `None` means `d_E`.
    #[serde(default)]
    pub d_w: Option<usize>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            seed: default_seed(),
            random_restarts: default_restarts(),
            refine_iters: default_iters(),
            dv_sweep: None,
            step_decay: default_decay(),
            initial_step: default_initial_step(),
            d_w: None,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(dv) = &self.dv_sweep {
            if dv.is_empty() || dv.contains(&0) {
                return Err(QsrError::OutOfRange(
                    "dv_sweep must be a nonempty list of positive dimensions".into(),
                ));
            }
        }
        if !(self.step_decay > 0.0 && self.step_decay < 1.0) {
            return Err(QsrError::OutOfRange(format!(
                "step_decay {} not in (0,1)",
                self.step_decay
            )));
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return Err(QsrError::OutOfRange(format!(
                "initial_step {}",
                self.initial_step
            )));
        }
        if self.d_w == Some(0) {
            return Err(QsrError::OutOfRange("d_w must be positive".into()));
        }
        Ok(())
    }
}

/// Value of `l_P`. `exact` is true when the environment is one-dimensional;
/// otherwise `value` is the best lower bound found by the isometry search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LValue {
    pub subset: SubsetMask,
    pub value: f64,
    pub exact: bool,
    pub witness: Witness,
}

fn check_cut(task: &RotationTask, p: SubsetMask) -> Result<()> {
    if p.m() != task.m() {
        return Err(QsrError::InvalidSubset(format!(
            "mask over {} users, task has {}",
            p.m(),
            task.m()
        )));
    }
    if !p.is_proper() {
        return Err(QsrError::InvalidSubset(format!(
            "{p} is not a nonempty proper subset"
        )));
    }
    Ok(())
}

/// Caches `l_P` values (shared between `P` and `P^c`) for one task and config.
#[derive(Debug)]
pub struct LowerBoundSolver<'a> {
    task: &'a RotationTask,
    cfg: OptimizerConfig,
    cache: Mutex<HashMap<u64, (f64, bool, Witness)>>,
}

impl<'a> LowerBoundSolver<'a> {
    pub fn new(task: &'a RotationTask, cfg: OptimizerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(LowerBoundSolver {
            task,
            cfg,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn task(&self) -> &RotationTask {
        self.task
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.cfg
    }

    pub fn l_subset(&self, p: SubsetMask) -> Result<LValue> {
        check_cut(self.task, p)?;
        let key = p.canonical().bits();
        if let Some((value, exact, witness)) = self.cache.lock().unwrap().get(&key).cloned() {
            return Ok(LValue {
                subset: p,
                value,
                exact,
                witness,
            });
        }
        let lv = if self.task.has_trivial_env() {
            l_exact_task(self.task, p)?
        } else {
            let (value, witness) = search::search_cut(self.task, p, &self.cfg)?;
            LValue {
                subset: p,
                value,
                exact: false,
                witness,
            }
        };
        self.cache
            .lock()
            .unwrap()
            .insert(key, (lv.value, lv.exact, lv.witness.clone()));
        Ok(lv)
    }

    /// `l_k = Σ_{|P|=k} l_P / (2 C(M-2, k-1))`.
    pub fn l_k(&self, k: usize) -> Result<f64> {
        let m = self.task.m();
        if k == 0 || k >= m {
            return Err(QsrError::OutOfRange(format!("k = {k} not in 1..{m}")));
        }
        let mut sum = 0.0;
        for p in SubsetMask::all_of_size(m, k) {
            sum += self.l_subset(p)?.value;
        }
        Ok(sum / (2.0 * binomial(m - 2, k - 1)))
    }

    /// `max_{1≤k≤⌊M/2⌋} l_k` and the maximizing `k` (smallest on ties).
    pub fn l_lower(&self) -> Result<(f64, usize)> {
        let m = self.task.m();
        if m < 2 {
            return Err(QsrError::Unsupported(
                "lower bound needs at least two users".into(),
            ));
        }
        let mut best = (f64::NEG_INFINITY, 0);
        for k in 1..=m / 2 {
            let v = self.l_k(k)?;
            if v > best.0 + TIE_TOL {
                best = (v, k);
            }
        }
        Ok(best)
    }
}

fn l_exact_task(task: &RotationTask, p: SubsetMask) -> Result<LValue> {
    check_cut(task, p)?;
    if !task.has_trivial_env() {
        return Err(QsrError::Unsupported(format!(
            "exact l_P needs a one-dimensional environment (dim {})",
            task.env_dim()
        )));
    }
    Ok(LValue {
        subset: p,
        value: task.shifted_difference(p, false)?,
        exact: true,
        witness: Witness::Trivial,
    })
}

/// Exact `l_P = H(A_{P-1}) - H(A_P)` for a state with trivial environment.
pub fn l_subset_exact(state: &PureState, p: SubsetMask) -> Result<LValue> {
    l_exact_task(&RotationTask::new(state)?, p)
}

/// Best lower bound on `l_P` over the candidate isometries of `cfg`; exact when
/// the environment is trivial.
pub fn l_subset_certified(
    state: &PureState,
    p: SubsetMask,
    cfg: &OptimizerConfig,
) -> Result<LValue> {
    let task = RotationTask::new(state)?;
    LowerBoundSolver::new(&task, cfg.clone())?.l_subset(p)
}

pub fn l_k(state: &PureState, k: usize, cfg: &OptimizerConfig) -> Result<f64> {
    let task = RotationTask::new(state)?;
    LowerBoundSolver::new(&task, cfg.clone())?.l_k(k)
}

pub fn l_lower(state: &PureState, cfg: &OptimizerConfig) -> Result<f64> {
    let task = RotationTask::new(state)?;
    Ok(LowerBoundSolver::new(&task, cfg.clone())?.l_lower()?.0)
}

fn conditional_sum(task: &RotationTask) -> Result<f64> {
    (0..task.m()).map(|j| task.cond_next(j)).sum()
}

/// Merge-and-send cost starting at user `i` (0-based):
/// `H(A_{i-1}) + Σ_{j≠i-1} H(A_j|A_{j+1})`, checked against
/// `I(A_i;A_{i-1}) + Σ_j H(A_j|A_{j+1})`.
pub fn u_start_task(task: &RotationTask, i: usize) -> Result<f64> {
    let m = task.m();
    if m < 2 {
        return Err(QsrError::Unsupported(
            "upper bound needs at least two users".into(),
        ));
    }
    if i >= m {
        return Err(QsrError::OutOfRange(format!(
            "start user {i} not in 0..{m}"
        )));
    }
    let prev = (i + m - 1) % m;
    let mut direct = task.h_user(prev)?;
    for j in (0..m).filter(|&j| j != prev) {
        direct += task.cond_next(j)?;
    }
    let dual = task.mutual(i, prev)? + conditional_sum(task)?;
    if (direct - dual).abs() > U_FORM_TOL {
        return Err(QsrError::Numerical(format!(
            "u_{i}: forms disagree ({direct} vs {dual})"
        )));
    }
    Ok(direct)
}

pub fn u_start(state: &PureState, i: usize) -> Result<f64> {
    u_start_task(&RotationTask::new(state)?, i)
}

/// `Σ_j H(A_j|A_{j+1}) + min_i I(A_i;A_{i+1})` and the start user attaining it
/// (smallest index on ties).
pub fn u_upper_task(task: &RotationTask) -> Result<(f64, usize)> {
    let m = task.m();
    let mut best = (f64::INFINITY, 0);
    for i in 0..m {
        let v = u_start_task(task, i)?;
        if v < best.0 - TIE_TOL {
            best = (v, i);
        }
    }
    let min_mi = (0..m)
        .map(|i| task.mutual(i, (i + 1) % m))
        .collect::<Result<Vec<_>>>()?;
    let closed = conditional_sum(task)? + min_mi.iter().copied().fold(f64::INFINITY, f64::min);
    if (closed - best.0).abs() > U_FORM_TOL {
        return Err(QsrError::Numerical(format!(
            "u: closed form {closed} vs min_i u_i {}",
            best.0
        )));
    }
    Ok(best)
}

pub fn u_upper(state: &PureState) -> Result<(f64, usize)> {
    u_upper_task(&RotationTask::new(state)?)
}

fn check_ledger(t: &DMatrix<f64>, name: &str) -> Result<()> {
    if t.nrows() != t.ncols() {
        return Err(QsrError::DimensionMismatch(format!(
            "{name} table is not square"
        )));
    }
    for i in 0..t.nrows() {
        if t[(i, i)] != 0.0 {
            return Err(QsrError::InvalidSubset(format!(
                "{name} table has nonzero diagonal at {}",
                i + 1
            )));
        }
        for j in 0..i {
            if (t[(i, j)] - t[(j, i)]).abs() > 1e-12 {
                return Err(QsrError::InvalidSubset(format!(
                    "{name} table is not symmetric at ({}, {})",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    Ok(())
}

/// `d_P = Σ_{i∈P, j∉P} (before[i,j] - after[i,j])` for symmetric tables of
/// log Schmidt ranks of the pairwise resources.
pub fn d_partition_difference(
    before: &DMatrix<f64>,
    after: &DMatrix<f64>,
    p: SubsetMask,
) -> Result<f64> {
    check_ledger(before, "before")?;
    check_ledger(after, "after")?;
    if before.shape() != after.shape() || before.nrows() != p.m() {
        return Err(QsrError::DimensionMismatch(
            "ledger tables and subset disagree in size".into(),
        ));
    }
    let mut d = 0.0;
    for i in p.indices() {
        for j in p.complement().indices() {
            d += before[(i, j)] - after[(i, j)];
        }
    }
    Ok(d)
}

/// Everything the bounds computation produces for one state.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundsReport {
    pub m: usize,
    pub env_dim: usize,
    /// `l_P` for every `P` with `1 ≤ |P| ≤ ⌊M/2⌋`.
    pub l_values: Vec<LValue>,
    /// `l_k` for `k = 1..=⌊M/2⌋`.
    pub l_k: Vec<f64>,
    pub l: f64,
    pub l_argmax_k: usize,
    /// `u_i` for each start user.
    pub u_start: Vec<f64>,
    pub u: f64,
    /// Start user attaining `u`, counted from 1.
    pub u_argmin: usize,
    pub exact: bool,
    pub flags: ConditionReport,
}

pub fn bounds_report_task(task: &RotationTask, cfg: &OptimizerConfig) -> Result<BoundsReport> {
    let m = task.m();
    if m < 2 {
        return Err(QsrError::Unsupported(
            "bounds need at least two users".into(),
        ));
    }
    let solver = LowerBoundSolver::new(task, cfg.clone())?;
    let mut l_values = Vec::new();
    for k in 1..=m / 2 {
        for p in SubsetMask::all_of_size(m, k) {
            l_values.push(solver.l_subset(p)?);
        }
    }
    let l_k = (1..=m / 2)
        .map(|k| solver.l_k(k))
        .collect::<Result<Vec<_>>>()?;
    let (l, l_argmax_k) = solver.l_lower()?;
    let u_start = (0..m)
        .map(|i| u_start_task(task, i))
        .collect::<Result<Vec<_>>>()?;
    let (u, u_argmin) = u_upper_task(task)?;
    Ok(BoundsReport {
        m,
        env_dim: task.env_dim(),
        l_values,
        l_k,
        l,
        l_argmax_k,
        u_start,
        u,
        u_argmin: u_argmin + 1,
        exact: task.has_trivial_env(),
        flags: positivity_condition_task(task, POSITIVITY_TOL)?,
    })
}

pub fn bounds_report(state: &PureState, cfg: &OptimizerConfig) -> Result<BoundsReport> {
    bounds_report_task(&RotationTask::new(state)?, cfg)
}

#[cfg(test)]
mod tests;
