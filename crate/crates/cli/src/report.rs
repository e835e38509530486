//! Serializable command outputs and their text renderings.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use qsr_core::analysis::{ConditionReport, Permutation, PermutationReport};
use qsr_core::rates::ConsistencyReport;
use qsr_core::verify::CheckOutcome;
use qsr_core::{BoundsReport, SegmentRateMatrix};

/// Formats `x` with 9 significant digits, switching to scientific notation
/// outside `[1e-4, 1e9)`.
pub fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-4..9).contains(&exp) {
        return format!("{x:.8e}");
    }
    let s = format!("{:.*}", (8 - exp).max(0) as usize, x);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn list(values: &[f64]) -> String {
    values
        .iter()
        .map(|&v| sig9(v))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Entropies in bits. Index `i` of the per-user vectors refers to user `i + 1`;
/// "next" wraps from the last user to the first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub users: Vec<String>,
    pub env_dim: usize,
    pub h_env: f64,
    pub h_user: Vec<f64>,
    pub h_user_env: Vec<f64>,
    pub h_pair_next: Vec<f64>,
    pub cond_next: Vec<f64>,
    pub mutual_next: Vec<f64>,
    pub env_given_user: Vec<f64>,
}

impl EntropyReport {
    pub fn to_text(&self) -> String {
        let m = self.users.len();
        let mut s = String::new();
        let _ = writeln!(s, "users: {m}, environment dimension {}", self.env_dim);
        let _ = writeln!(s, "H(E) = {}", sig9(self.h_env));
        for i in 0..m {
            let (a, b) = (&self.users[i], &self.users[(i + 1) % m]);
            let _ = writeln!(
                s,
                "H({a}) = {}  H({a}E) = {}  H({a}{b}) = {}  H({a}|{b}) = {}  I({a};{b}) = {}  H(E|{a}) = {}",
                sig9(self.h_user[i]),
                sig9(self.h_user_env[i]),
                sig9(self.h_pair_next[i]),
                sig9(self.cond_next[i]),
                sig9(self.mutual_next[i]),
                sig9(self.env_given_user[i]),
            );
        }
        s
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundsOutput {
    pub bounds: BoundsReport,
    /// `l <= u + sandwich_tol`.
    pub sandwich_ok: bool,
    pub sandwich_tol: f64,
}

impl BoundsOutput {
    pub fn to_text(&self) -> String {
        let b = &self.bounds;
        let mut s = String::new();
        let kind = if b.exact {
            "exact cut values"
        } else {
            "cut values are search lower bounds"
        };
        let _ = writeln!(
            s,
            "users: {}, environment dimension {} ({kind})",
            b.m, b.env_dim
        );
        for lv in &b.l_values {
            let _ = writeln!(s, "l{} = {}", lv.subset, sig9(lv.value));
        }
        for (k, v) in b.l_k.iter().enumerate() {
            let _ = writeln!(s, "l_{} = {}", k + 1, sig9(*v));
        }
        let _ = writeln!(s, "l = {} (k = {})", sig9(b.l), b.l_argmax_k);
        for (i, v) in b.u_start.iter().enumerate() {
            let _ = writeln!(s, "u_{} = {}", i + 1, sig9(*v));
        }
        let _ = writeln!(s, "u = {} (start user {})", sig9(b.u), b.u_argmin);
        let _ = writeln!(
            s,
            "l <= u: {}",
            if self.sandwich_ok { "ok" } else { "VIOLATED" }
        );
        let _ = write!(s, "{}", condition_text(&b.flags));
        s
    }
}

fn condition_text(c: &ConditionReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "H(E|A_i) = [{}]", list(&c.env_given_user));
    match c.witness_pair {
        Some((i, j, gap)) => {
            let _ = writeln!(
                s,
                "positive cost detected: yes (users {i} and {j}, gap {})",
                sig9(gap)
            );
        }
        None => {
            let _ = writeln!(s, "positive cost detected: no (tol {})", sig9(c.tol));
        }
    }
    let _ = writeln!(
        s,
        "even-subset identity: lhs = {}, rhs = {}, residual = {}",
        sig9(c.even_subset_lhs),
        sig9(c.even_subset_rhs),
        sig9(c.residual)
    );
    let _ = writeln!(s, "l_1 >= {}", sig9(c.l1_entropy_lower_bound));
    s
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatesOutput {
    /// The unique rates a zero-total-rate protocol would need.
    pub zero_total: SegmentRateMatrix,
    /// How far those rates are from reproducing every singleton and pair cut.
    pub consistency: ConsistencyReport,
    /// Rates of the merge-and-send protocol started at `merge_and_send_start` (from 1).
    pub merge_and_send: SegmentRateMatrix,
    pub merge_and_send_start: usize,
}

fn matrix_text(r: &SegmentRateMatrix) -> String {
    let mut s = String::new();
    for i in 0..r.m() {
        let row: Vec<String> = (0..r.m())
            .map(|j| format!("{:>16}", sig9(r.get(i, j))))
            .collect();
        let _ = writeln!(s, "  {}", row.join(""));
    }
    s
}

impl RatesOutput {
    pub fn to_text(&self) -> String {
        let z = &self.zero_total;
        let mut s = String::new();
        let kind = if z.exact() {
            "exact cut values"
        } else {
            "cut values are search lower bounds"
        };
        let _ = writeln!(s, "zero-total-rate segment rates e_ij ({kind}):");
        s.push_str(&matrix_text(z));
        let _ = writeln!(s, "total = {}", sig9(qsr_core::rates::e_total(z)));
        let worst = self
            .consistency
            .worst
            .map_or("-".to_string(), |w| w.to_string());
        let _ = writeln!(
            s,
            "cut consistency: max |e_P - l_P| = {} at {} over {} cuts",
            sig9(self.consistency.max_residual),
            worst,
            self.consistency.checked
        );
        let _ = writeln!(
            s,
            "merge-and-send rates from user {}:",
            self.merge_and_send_start
        );
        s.push_str(&matrix_text(&self.merge_and_send));
        let _ = writeln!(
            s,
            "total = {}",
            sig9(qsr_core::rates::e_total(&self.merge_and_send))
        );
        s
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConditionsOutput {
    pub condition: ConditionReport,
    /// `|l_{1} + l_{3}|` when `M = 4` and the environment is trivial.
    pub cycle_allocation_m4: Option<f64>,
    /// Neighbouring user pairs (from 1) whose exchange leaves the state unchanged.
    pub swap_invariant_neighbours: Vec<(usize, usize)>,
}

impl ConditionsOutput {
    pub fn to_text(&self) -> String {
        let mut s = condition_text(&self.condition);
        if let Some(c) = self.cycle_allocation_m4 {
            let _ = writeln!(s, "|l{{1}} + l{{3}}| = {}", sig9(c));
        }
        let pairs: Vec<String> = self
            .swap_invariant_neighbours
            .iter()
            .map(|(i, j)| format!("({i},{j})"))
            .collect();
        let _ = writeln!(
            s,
            "swap-invariant neighbours: {}",
            if pairs.is_empty() {
                "none".into()
            } else {
                pairs.join(" ")
            }
        );
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: String,
    pub description: String,
    pub user_dims: Vec<usize>,
    pub env_dim: usize,
}

pub fn catalog_text(entries: &[CatalogEntry]) -> String {
    let mut s = String::new();
    for e in entries {
        let dims: Vec<String> = e.user_dims.iter().map(usize::to_string).collect();
        let _ = writeln!(
            s,
            "{:<14} users [{}], env {}  {}",
            e.name,
            dims.join(","),
            e.env_dim,
            e.description
        );
    }
    s
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PermuteOutput {
    pub sigma: Permutation,
    pub report: PermutationReport,
}

impl PermuteOutput {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.report.cycles {
            let users: Vec<String> = c.users.iter().map(usize::to_string).collect();
            let _ = writeln!(
                s,
                "cycle ({}): l = {}, u = {}",
                users.join(" "),
                sig9(c.l),
                sig9(c.u)
            );
        }
        let _ = writeln!(
            s,
            "sum: l = {}, u = {}",
            sig9(self.report.l_sum),
            sig9(self.report.u_sum)
        );
        if self.report.heuristic {
            let _ = writeln!(s, "note: per-cycle sums are heuristic, not proven bounds");
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutput {
    pub seed: u64,
    pub outcomes: Vec<CheckOutcome>,
    pub passed: usize,
    pub total: usize,
}

impl VerifyOutput {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for o in &self.outcomes {
            let _ = writeln!(s, "{o}");
        }
        let _ = writeln!(
            s,
            "{}/{} checks passed (seed {})",
            self.passed, self.total, self.seed
        );
        s
    }
}
