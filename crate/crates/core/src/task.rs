use std::collections::HashMap;
use std::sync::Mutex;

use crate::entropy;
use crate::error::{QsrError, Result};
use crate::tensor::{PureState, SubsetMask};

/// User-level entropy view of an initial state `|ψ⟩_{A_1..A_M E}`.
///
/// Users are numbered `0..M` in part order; cyclic successor of user `i` is
/// `(i + 1) mod M`. Entropies of user sets (optionally joined with `E`) are
/// memoized.
#[derive(Debug)]
pub struct RotationTask {
    state: PureState,
    m: usize,
    cache: Mutex<HashMap<(u64, bool), f64>>,
}

impl Clone for RotationTask {
    fn clone(&self) -> Self {
        RotationTask::new(&self.state).expect("already validated")
    }
}

impl RotationTask {
    pub fn new(state: &PureState) -> Result<Self> {
        let m = state.num_users();
        if m == 0 {
            return Err(QsrError::InvalidLayout("state has no users".into()));
        }
        Ok(RotationTask {
            state: state.clone(),
            m,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn state(&self) -> &PureState {
        &self.state
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn env_dim(&self) -> usize {
        self.state.layout().env_dim()
    }

    pub fn has_trivial_env(&self) -> bool {
        self.env_dim() == 1
    }

    pub fn user(&self, i: usize) -> SubsetMask {
        SubsetMask::singleton(self.m, i % self.m).expect("index reduced mod m")
    }

    pub fn users(&self, idx: &[usize]) -> Result<SubsetMask> {
        SubsetMask::from_indices(self.m, idx)
    }

    /// `H(A_S)` or `H(A_S E)`.
    pub fn h(&self, users: SubsetMask, with_env: bool) -> Result<f64> {
        if users.m() != self.m {
            return Err(QsrError::InvalidSubset(format!(
                "mask over {} users, task has {}",
                users.m(),
                self.m
            )));
        }
        let key = (users.bits(), with_env);
        if let Some(&v) = self.cache.lock().unwrap().get(&key) {
            return Ok(v);
        }
        let parts = self.state.layout().users_to_parts(users, with_env)?;
        let v = entropy::subset_entropy(&self.state, parts)?;
        self.cache.lock().unwrap().insert(key, v);
        Ok(v)
    }

    pub fn h_user(&self, i: usize) -> Result<f64> {
        self.h(self.user(i), false)
    }

    /// `H(A_j | A_{j+1})`
    pub fn cond_next(&self, j: usize) -> Result<f64> {
        let next = (j + 1) % self.m;
        let both = self.user(j).union(&self.user(next));
        Ok(self.h(both, false)? - self.h_user(next)?)
    }

    /// `I(A_i ; A_j)` for distinct users.
    pub fn mutual(&self, i: usize, j: usize) -> Result<f64> {
        if i % self.m == j % self.m {
            return Err(QsrError::InvalidSubset(
                "mutual information of a user with itself".into(),
            ));
        }
        let both = self.user(i).union(&self.user(j));
        Ok(self.h_user(i)? + self.h_user(j)? - self.h(both, false)?)
    }

    /// `H(E | A_i) = H(A_i E) - H(A_i)`
    pub fn env_given_user(&self, i: usize) -> Result<f64> {
        Ok(self.h(self.user(i), true)? - self.h_user(i)?)
    }

    /// `H(A_{P-1}) - H(A_P)`: the cut quantity with a trivial isometry, which is
    /// the exact `l_P` when the environment is one-dimensional.
    pub fn shifted_difference(&self, p: SubsetMask, with_env: bool) -> Result<f64> {
        Ok(self.h(p.predecessors(), with_env)? - self.h(p, with_env)?)
    }
}
