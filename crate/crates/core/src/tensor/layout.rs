use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::SubsetMask;
use crate::error::{QsrError, Result};

/// Default cap on the total Hilbert-space dimension of a layout.
pub const DEFAULT_DIM_CAP: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Part {
    pub label: String,
    pub dim: usize,
}

impl Part {
    pub fn new(label: impl Into<String>, dim: usize) -> Self {
        Part {
            label: label.into(),
            dim,
        }
    }
}

/// Ordered subsystems of a multipartite Hilbert space.
///
/// Every part that is not the environment is a user; users are numbered in
/// part order. The environment, when present, may carry a factor structure
/// `E = E_1 ⊗ .. ⊗ E_r` which the isometry search can split along.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemLayout {
    parts: Vec<Part>,
    env: Option<usize>,
    env_factors: Option<Vec<usize>>,
    cap: usize,
}

impl SystemLayout {
    pub fn new(
        parts: Vec<Part>,
        env: Option<usize>,
        env_factors: Option<Vec<usize>>,
    ) -> Result<Self> {
        Self::with_cap(parts, env, env_factors, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(
        parts: Vec<Part>,
        env: Option<usize>,
        env_factors: Option<Vec<usize>>,
        cap: usize,
    ) -> Result<Self> {
        if parts.is_empty() {
            return Err(QsrError::InvalidLayout("layout has no parts".into()));
        }
        let mut seen = HashSet::new();
        for p in &parts {
            if p.dim == 0 {
                return Err(QsrError::InvalidLayout(format!(
                    "part {} has dimension 0",
                    p.label
                )));
            }
            if !seen.insert(p.label.as_str()) {
                return Err(QsrError::LabelCollision(p.label.clone()));
            }
        }
        if let Some(e) = env {
            if e >= parts.len() {
                return Err(QsrError::InvalidLayout(format!(
                    "environment index {e} out of range"
                )));
            }
        }
        if let Some(f) = &env_factors {
            let e = env.ok_or_else(|| {
                QsrError::InvalidLayout("env_factors given without an environment".into())
            })?;
            if f.contains(&0) {
                return Err(QsrError::InvalidLayout(
                    "environment factor of dimension 0".into(),
                ));
            }
            let prod: usize = f.iter().product();
            if prod != parts[e].dim {
                return Err(QsrError::InvalidLayout(format!(
                    "environment factors multiply to {prod}, environment has dimension {}",
                    parts[e].dim
                )));
            }
        }
        if parts.len() - usize::from(env.is_some()) > super::MAX_SUBSET_SIZE {
            return Err(QsrError::InvalidLayout("too many parts".into()));
        }
        let layout = SystemLayout {
            parts,
            env,
            env_factors,
            cap,
        };
        let dim = layout.checked_total_dim()?;
        if dim > cap {
            return Err(QsrError::DimensionCap { dim, cap });
        }
        Ok(layout)
    }

    /// Qubit users `A1..AM` with an environment of dimension `env_dim` appended last.
    pub fn qubits(m: usize, env_dim: usize) -> Result<Self> {
        Self::uniform(m, 2, env_dim)
    }

    /// `m` users of dimension `d` followed by an environment `E` of dimension `env_dim`.
    pub fn uniform(m: usize, d: usize, env_dim: usize) -> Result<Self> {
        let mut parts: Vec<Part> = (1..=m).map(|i| Part::new(format!("A{i}"), d)).collect();
        parts.push(Part::new("E", env_dim));
        Self::new(parts, Some(m), None)
    }

    fn checked_total_dim(&self) -> Result<usize> {
        self.parts.iter().try_fold(1usize, |acc, p| {
            acc.checked_mul(p.dim).ok_or(QsrError::DimensionCap {
                dim: usize::MAX,
                cap: self.cap,
            })
        })
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    pub fn num_parts(&self) -> usize {
        self.parts.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.parts.iter().map(|p| p.dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.parts.iter().map(|p| p.dim).product()
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn env_index(&self) -> Option<usize> {
        self.env
    }

    /// Dimension of the environment; 1 when there is none.
    pub fn env_dim(&self) -> usize {
        self.env.map_or(1, |e| self.parts[e].dim)
    }

    pub fn env_factors(&self) -> Option<&[usize]> {
        self.env_factors.as_deref()
    }

    /// Part indices of the users, in order.
    pub fn user_parts(&self) -> Vec<usize> {
        (0..self.parts.len())
            .filter(|&i| Some(i) != self.env)
            .collect()
    }

    pub fn num_users(&self) -> usize {
        self.parts.len() - usize::from(self.env.is_some())
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.parts.iter().position(|p| p.label == label)
    }

    /// Translates a user subset into a subset of parts, optionally adding the environment.
    pub fn users_to_parts(&self, users: SubsetMask, with_env: bool) -> Result<SubsetMask> {
        if users.m() != self.num_users() {
            return Err(QsrError::InvalidSubset(format!(
                "user mask over {} users, layout has {}",
                users.m(),
                self.num_users()
            )));
        }
        let up = self.user_parts();
        let mut idx: Vec<usize> = users.indices().map(|u| up[u]).collect();
        if with_env {
            if let Some(e) = self.env {
                idx.push(e);
            }
        }
        SubsetMask::from_indices(self.parts.len(), &idx)
    }

    pub fn with_env(mut self, env: Option<usize>, env_factors: Option<Vec<usize>>) -> Result<Self> {
        self.env = env;
        self.env_factors = env_factors;
        Self::with_cap(self.parts, self.env, self.env_factors, self.cap)
    }

    pub fn with_parts(
        &self,
        parts: Vec<Part>,
        env: Option<usize>,
        env_factors: Option<Vec<usize>>,
    ) -> Result<Self> {
        Self::with_cap(parts, env, env_factors, self.cap)
    }
}
