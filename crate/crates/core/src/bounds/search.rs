//! Derivative-free search over environment isometries for one cut `P`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::OptimizerConfig;
use crate::entropy::gram_entropy;
use crate::error::{QsrError, Result};
use crate::linalg::{small_gram, CMatrix};
use crate::task::RotationTask;
use crate::tensor::{Isometry, SubsetMask};

const STEP_FLOOR: f64 = 1e-4;

/// How the best isometry for a cut was obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// `V` one-dimensional.
    Trivial,
    /// `V = E`.
    FullEnv,
    /// `V` = the listed environment factors (0-based), `W` = the rest.
    FactorSplit { v_factors: Vec<usize> },
    /// Hill climb from a seeded random isometry.
    Random {
        d_v: usize,
        d_w: usize,
        seed: u64,
        stream: u64,
    },
}

/// `ψ` arranged as a `(d_S·d_R) × d_E` matrix for a user set `S` and its complement `R`.
struct Side {
    d_s: usize,
    d_r: usize,
    y: CMatrix,
}

impl Side {
    fn new(task: &RotationTask, users: SubsetMask) -> Result<Self> {
        let state = task.state();
        let layout = state.layout();
        let env = layout.env_index().ok_or_else(|| {
            QsrError::InvalidLayout("isometry search needs an environment part".into())
        })?;
        let user_parts = layout.user_parts();
        let dims = layout.dims();
        let mut perm: Vec<usize> = users.indices().map(|u| user_parts[u]).collect();
        perm.extend(users.complement().indices().map(|u| user_parts[u]));
        perm.push(env);
        let d_s: usize = users.indices().map(|u| dims[user_parts[u]]).product();
        let d_e = dims[env];
        let d_r = layout.total_dim() / (d_s * d_e);
        let moved = state.permute_parts(&perm)?;
        let a = moved.amplitudes();
        let y = CMatrix::from_fn(d_s * d_r, d_e, |row, e| a[row * d_e + e]);
        Ok(Side { d_s, d_r, y })
    }

    /// `H(A_S V)` after applying `u` to the environment.
    fn entropy(&self, u: &Isometry) -> Result<f64> {
        let z = &self.y * u.matrix().transpose();
        let (dv, dw) = (u.out_v_dim(), u.out_w_dim());
        let d_r = self.d_r;
        let x = CMatrix::from_fn(self.d_s * dv, d_r * dw, |row, col| {
            let (s, v) = (row / dv, row % dv);
            let (r, w) = (col / dw, col % dw);
            z[(s * d_r + r, v * dw + w)]
        });
        gram_entropy(&small_gram(&x))
    }
}

/// `U ↦ H(A_{P-1} V) - H(A_P V)`.
pub(crate) struct CutObjective {
    pred: Side,
    cut: Side,
}

impl CutObjective {
    pub(crate) fn new(task: &RotationTask, p: SubsetMask) -> Result<Self> {
        Ok(CutObjective {
            pred: Side::new(task, p.predecessors())?,
            cut: Side::new(task, p)?,
        })
    }

    pub(crate) fn eval(&self, u: &Isometry) -> Result<f64> {
        Ok(self.pred.entropy(u)? - self.cut.entropy(u)?)
    }
}

pub(crate) fn default_dv_sweep(d_e: usize, factors: Option<&[usize]>) -> Vec<usize> {
    let mut dv = vec![1, d_e];
    for &f in factors.unwrap_or(&[]) {
        dv.push(f);
        dv.push(d_e / f);
    }
    dv.sort_unstable();
    dv.dedup();
    dv
}

fn better(a: &(f64, Witness), b: &(f64, Witness)) -> bool {
    a.0 > b.0
}

/// Best candidate value for the cut `p` together with its witness.
pub(crate) fn search_cut(
    task: &RotationTask,
    p: SubsetMask,
    cfg: &OptimizerConfig,
) -> Result<(f64, Witness)> {
    let layout = task.state().layout();
    let d_e = layout.env_dim();
    let mut best = (task.shifted_difference(p, false)?, Witness::Trivial);
    if d_e == 1 {
        return Ok(best);
    }
    let full = (task.shifted_difference(p, true)?, Witness::FullEnv);
    if better(&full, &best) {
        best = full;
    }
    let objective = CutObjective::new(task, p)?;
    if let Some(factors) = layout.env_factors() {
        let r = factors.len();
        for mask in 1..(1u64 << r) - 1 {
            let v: Vec<usize> = (0..r).filter(|k| mask >> k & 1 == 1).collect();
            let u = Isometry::factor_split(factors, &v)?;
            let cand = (objective.eval(&u)?, Witness::FactorSplit { v_factors: v });
            if better(&cand, &best) {
                best = cand;
            }
        }
    }
    let sweep = cfg
        .dv_sweep
        .clone()
        .unwrap_or_else(|| default_dv_sweep(d_e, layout.env_factors()));
    for (dv_index, &dv) in sweep.iter().enumerate() {
        if dv <= 1 || cfg.random_restarts == 0 {
            continue;
        }
        let dw = cfg.d_w.unwrap_or(d_e).max(d_e.div_ceil(dv));
        let runs: Vec<Result<(f64, Witness)>> = (0..cfg.random_restarts as u64)
            .into_par_iter()
            .map(|restart| {
                let stream = ((dv_index as u64) << 32) | restart;
                let value = hill_climb(&objective, d_e, dv, dw, cfg, stream)?;
                Ok((
                    value,
                    Witness::Random {
                        d_v: dv,
                        d_w: dw,
                        seed: cfg.seed,
                        stream,
                    },
                ))
            })
            .collect();
        for run in runs {
            let cand = run?;
            if better(&cand, &best) {
                best = cand;
            }
        }
    }
    Ok(best)
}

fn hill_climb(
    objective: &CutObjective,
    d_e: usize,
    dv: usize,
    dw: usize,
    cfg: &OptimizerConfig,
    stream: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let mut u = Isometry::random(d_e, dv, dw, &mut rng)?;
    let mut value = objective.eval(&u)?;
    let mut step = cfg.initial_step;
    for _ in 0..cfg.refine_iters {
        let trial = u.perturbed(step, &mut rng)?;
        let v = objective.eval(&trial)?;
        if v > value {
            u = trial;
            value = v;
        } else {
            step = (step * cfg.step_decay).max(STEP_FLOOR);
        }
    }
    Ok(value)
}
