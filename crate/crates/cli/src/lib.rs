//! The `qsr` command line: argument parsing, input resolution and dispatch.

mod input;
pub mod report;

use std::ffi::OsString;
use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qsr_core::analysis::{
    cycle_allocation_bound_m4, permutation_bounds, positivity_condition_task, swap_invariance,
    POSITIVITY_TOL,
};
use qsr_core::bounds::{bounds_report_task, U_FORM_TOL};
use qsr_core::rates::{
    merge_and_send_rates, segment_rates_zero_total, verify_zero_rate_consistency, LValueTable,
};
use qsr_core::states::CATALOG;
use qsr_core::verify::{run_check, VerifyOptions, CHECK_IDS};
use qsr_core::{LowerBoundSolver, QsrError, RotationTask, StateSpec};

pub use input::parse_angle;
use report::*;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or malformed input.
    Input(String),
    /// A computation failed or produced an inconsistent result.
    Invariant(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Invariant(_) => EXIT_INVARIANT,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Invariant(m) => write!(f, "{m}"),
        }
    }
}

impl From<QsrError> for CliError {
    fn from(e: QsrError) -> Self {
        match e {
            QsrError::Parse(_) => CliError::Input(e.to_string()),
            other => CliError::Invariant(other.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "qsr",
    version,
    about = "Bounds on the communication cost of rotating a multipartite pure state around a ring of users",
    after_help = "Exit codes: 0 success, 1 verification failure, 2 input error, 3 invariant violation or unsupported task."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: GlobalOpts,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Marginal, conditional and mutual entropies of the users and environment.
    Entropy,
    /// Lower bound l, upper bound u and the positivity detector.
    Bounds,
    /// Zero-total-rate segment rates (M >= 3) and merge-and-send rates.
    Rates,
    /// Positivity detector, even-subset identity, cycle allocation and swap symmetry.
    Conditions,
    /// List the named example states.
    Catalog,
    /// Per-cycle bounds for an arbitrary permutation of the users.
    Permute {
        /// 1-based images, e.g. `2,3,1`, a JSON array, or a file containing one.
        #[arg(long)]
        sigma: String,
    },
    /// Run the built-in acceptance checks.
    Verify {
        /// Run only these checks (repeatable); default is all.
        #[arg(long = "check")]
        checks: Vec<u32>,
        /// Add a fixed amount to this check's residual so that it fails (test hook).
        #[arg(long)]
        perturb_check: Option<u32>,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Args, Debug, Default)]
pub struct GlobalOpts {
    /// Catalog name, path to a JSON state or state-spec file, or inline JSON.
    #[arg(long, global = true)]
    pub state: Option<String>,
    /// Number of users for catalog states.
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// Pair angle for catalog states: number, `pi/N` or `K*pi/N`.
    #[arg(long, global = true, value_parser = input::parse_angle, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Per-pair angles for phi2, comma separated.
    #[arg(long, global = true, value_delimiter = ',', value_parser = input::parse_angle)]
    pub thetas: Option<Vec<f64>>,
    /// Local dimension for random_pure and max_entangled.
    #[arg(long, global = true)]
    pub d: Option<usize>,
    /// Environment dimension for random_pure.
    #[arg(long, global = true)]
    pub env_dim: Option<usize>,
    /// Seed for random_pure, the isometry search and verify.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Random restarts per d_V in the isometry search.
    #[arg(long, global = true)]
    pub restarts: Option<usize>,
    /// Hill-climb iterations per restart.
    #[arg(long, global = true)]
    pub iters: Option<usize>,
    /// Optimizer settings as JSON (file path or inline).
    #[arg(long, global = true)]
    pub config: Option<String>,
    /// Move this user (from 1) into the environment.
    #[arg(long, global = true)]
    pub drop_user: Option<usize>,
    /// Merge these contiguous users (from 1, comma separated) into one; applied before --drop-user.
    #[arg(long, global = true)]
    pub fuse_users: Option<String>,
    /// Tolerance of the positivity detector and of the l <= u check.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = err.write_all(rendered.as_bytes());
                EXIT_INPUT
            } else {
                let _ = out.write_all(rendered.as_bytes());
                EXIT_OK
            };
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "qsr: {e}");
            e.code()
        }
    }
}

fn emit<T: Serialize>(
    out: &mut dyn Write,
    format: Format,
    value: &T,
    text: impl FnOnce(&T) -> String,
) -> Result<(), CliError> {
    let s = match format {
        Format::Text => text(value),
        Format::Json => {
            let mut j = serde_json::to_string_pretty(value)
                .map_err(|e| CliError::Invariant(e.to_string()))?;
            j.push('\n');
            j
        }
    };
    out.write_all(s.as_bytes())
        .map_err(|e| CliError::Invariant(format!("cannot write output: {e}")))
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    let o = &cli.opts;
    match &cli.command {
        Command::Entropy => {
            let task = RotationTask::new(&input::load_state(o)?)?;
            emit(
                out,
                o.format,
                &entropy_report(&task)?,
                EntropyReport::to_text,
            )?;
            Ok(EXIT_OK)
        }
        Command::Bounds => {
            let task = RotationTask::new(&input::load_state(o)?)?;
            let cfg = input::load_config(o)?;
            let bounds = bounds_report_task(&task, &cfg)?;
            let tol = o.tol.unwrap_or(U_FORM_TOL);
            let report = BoundsOutput {
                sandwich_ok: bounds.l <= bounds.u + tol,
                sandwich_tol: tol,
                bounds,
            };
            emit(out, o.format, &report, BoundsOutput::to_text)?;
            if report.sandwich_ok {
                Ok(EXIT_OK)
            } else {
                Err(CliError::Invariant(format!(
                    "l = {} exceeds u = {}",
                    report.bounds.l, report.bounds.u
                )))
            }
        }
        Command::Rates => {
            let task = RotationTask::new(&input::load_state(o)?)?;
            let cfg = input::load_config(o)?;
            let solver = LowerBoundSolver::new(&task, cfg)?;
            let table = LValueTable::singletons_and_pairs(&solver)?;
            let zero_total = segment_rates_zero_total(&table)?;
            let consistency = verify_zero_rate_consistency(&zero_total, &table)?;
            let (_, start) = qsr_core::bounds::u_upper_task(&task)?;
            let report = RatesOutput {
                zero_total,
                consistency,
                merge_and_send: merge_and_send_rates(&task, start)?,
                merge_and_send_start: start + 1,
            };
            emit(out, o.format, &report, RatesOutput::to_text)?;
            Ok(EXIT_OK)
        }
        Command::Conditions => {
            let state = input::load_state(o)?;
            let task = RotationTask::new(&state)?;
            let tol = o.tol.unwrap_or(POSITIVITY_TOL);
            let layout = state.layout();
            let up = layout.user_parts();
            let dims = layout.dims();
            let m = up.len();
            let mut swaps = Vec::new();
            for i in 0..m {
                let j = (i + 1) % m;
                if m > 1
                    && (m > 2 || i == 0)
                    && dims[up[i]] == dims[up[j]]
                    && swap_invariance(&state, up[i], up[j], tol)?
                {
                    swaps.push(((i + 1).min(j + 1), (i + 1).max(j + 1)));
                }
            }
            let report = ConditionsOutput {
                condition: positivity_condition_task(&task, tol)?,
                cycle_allocation_m4: if m == 4 && task.has_trivial_env() {
                    Some(cycle_allocation_bound_m4(&state)?)
                } else {
                    None
                },
                swap_invariant_neighbours: swaps,
            };
            emit(out, o.format, &report, ConditionsOutput::to_text)?;
            Ok(EXIT_OK)
        }
        Command::Catalog => {
            let entries = catalog()?;
            emit(out, o.format, &entries, |e| catalog_text(e))?;
            Ok(EXIT_OK)
        }
        Command::Permute { sigma } => {
            let state = input::load_state(o)?;
            let cfg = input::load_config(o)?;
            let sigma = input::load_permutation(sigma)?;
            if sigma.m() != state.num_users() {
                return Err(CliError::Input(format!(
                    "permutation on {} users, state has {}",
                    sigma.m(),
                    state.num_users()
                )));
            }
            let report = permutation_bounds(&state, &sigma, &cfg)?;
            emit(
                out,
                o.format,
                &PermuteOutput { sigma, report },
                PermuteOutput::to_text,
            )?;
            Ok(EXIT_OK)
        }
        Command::Verify {
            checks,
            perturb_check,
        } => {
            let ids: Vec<u32> = if checks.is_empty() {
                CHECK_IDS.to_vec()
            } else {
                checks.clone()
            };
            if let Some(bad) = ids
                .iter()
                .chain(perturb_check.iter())
                .find(|id| !CHECK_IDS.contains(id))
            {
                return Err(CliError::Input(format!(
                    "no check {bad}; checks are 1..=10"
                )));
            }
            let opts = VerifyOptions {
                seed: o.seed.unwrap_or(0),
                perturb: *perturb_check,
            };
            let outcomes = ids
                .iter()
                .map(|&id| run_check(id, &opts))
                .collect::<Result<Vec<_>, _>>()?;
            let passed = outcomes.iter().filter(|c| c.passed).count();
            let report = VerifyOutput {
                seed: opts.seed,
                total: outcomes.len(),
                passed,
                outcomes,
            };
            emit(out, o.format, &report, VerifyOutput::to_text)?;
            Ok(if report.passed == report.total {
                EXIT_OK
            } else {
                EXIT_VERIFY_FAILED
            })
        }
    }
}

fn entropy_report(task: &RotationTask) -> Result<EntropyReport, CliError> {
    let m = task.m();
    let layout = task.state().layout();
    let users = layout
        .user_parts()
        .iter()
        .map(|&p| layout.parts()[p].label.clone())
        .collect();
    let per_user = |f: &dyn Fn(usize) -> qsr_core::Result<f64>| {
        (0..m).map(f).collect::<qsr_core::Result<Vec<f64>>>()
    };
    let next = |i: usize| (i + 1) % m;
    Ok(EntropyReport {
        users,
        env_dim: task.env_dim(),
        h_env: task.h(qsr_core::SubsetMask::empty(m), true)?,
        h_user: per_user(&|i| task.h_user(i))?,
        h_user_env: per_user(&|i| task.h(task.user(i), true))?,
        h_pair_next: per_user(&|i| task.h(task.users(&[i, next(i)])?, false))?,
        cond_next: per_user(&|i| task.cond_next(i))?,
        mutual_next: per_user(&|i| task.mutual(i, next(i)))?,
        env_given_user: per_user(&|i| task.env_given_user(i))?,
    })
}

const DESCRIPTIONS: [(&str, &str); 12] = [
    ("ghz", "GHZ state on M qubits (default M = 3)"),
    ("ebit", "cos(theta)|00> + sin(theta)|11> on two qubits"),
    ("max_entangled", "maximally entangled pair of d-level users"),
    (
        "random_pure",
        "seeded Gaussian random state; params m, d, env_dim, seed",
    ),
    ("phi1", "pair on users 1,2 of three qubits"),
    (
        "phi2",
        "each user paired with its own environment qubit, angles thetas",
    ),
    ("phi3", "pair on users 1,3 of four qubits"),
    ("phi4", "phi2 with one common angle"),
    (
        "phi5",
        "two GHZ states over users 1,3,5 of six (4-level on those users)",
    ),
    ("phi6", "two GHZ states over users 1,2,3 of four"),
    ("phi7", "pair on users 2,3 of four qubits"),
    ("phi8", "pair on users 2,3 of three qubits"),
];

fn catalog() -> Result<Vec<CatalogEntry>, CliError> {
    CATALOG
        .iter()
        .map(|&name| {
            let state = StateSpec::named(name).make()?;
            let layout = state.layout();
            let description = DESCRIPTIONS
                .iter()
                .find(|(n, _)| *n == name)
                .map_or("", |(_, d)| d);
            Ok(CatalogEntry {
                name: name.to_string(),
                description: description.to_string(),
                user_dims: layout
                    .user_parts()
                    .iter()
                    .map(|&p| layout.dims()[p])
                    .collect(),
                env_dim: layout.env_dim(),
            })
        })
        .collect()
}
