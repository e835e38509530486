use std::f64::consts::PI;
use std::fs;

use qsr_core::analysis::{fuse_users, user_reduction, Permutation};
use qsr_core::states::{StateParams, CATALOG};
use qsr_core::tensor::parse_state_json;
use qsr_core::{OptimizerConfig, PureState, StateSpec};

use crate::{CliError, GlobalOpts};

fn input_err(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

/// Accepts a plain number, `pi`, `pi/N` or `K*pi/N`.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase().replace(' ', "");
    if let Ok(x) = t.parse::<f64>() {
        return Ok(x);
    }
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (
            n.to_string(),
            d.parse::<f64>().map_err(|_| format!("bad angle '{s}'"))?,
        ),
        None => (t.clone(), 1.0),
    };
    let k = match num.strip_suffix("pi") {
        Some("") => 1.0,
        Some(k) => k
            .trim_end_matches('*')
            .parse::<f64>()
            .map_err(|_| format!("bad angle '{s}'"))?,
        None => return Err(format!("bad angle '{s}'")),
    };
    Ok(k * PI / den)
}

/// Comma-separated list of positive integers, optionally wrapped in brackets.
pub fn parse_index_list(s: &str) -> Result<Vec<usize>, CliError> {
    let t = s.trim().trim_start_matches('[').trim_end_matches(']');
    t.split(',')
        .map(|x| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Input(format!("'{s}' is not a list of user numbers")))
        })
        .collect()
}

fn read_text(arg: &str) -> Result<String, CliError> {
    if arg.trim_start().starts_with('{') || arg.trim_start().starts_with('[') {
        return Ok(arg.to_string());
    }
    fs::read_to_string(arg).map_err(|e| CliError::Input(format!("cannot read '{arg}': {e}")))
}

fn overlay_params(params: &mut StateParams, opts: &GlobalOpts) {
    if opts.m.is_some() {
        params.m = opts.m;
    }
    if opts.theta.is_some() {
        params.theta = opts.theta;
    }
    if let Some(t) = &opts.thetas {
        params.thetas = Some(t.clone());
    }
    if opts.d.is_some() {
        params.d = opts.d;
    }
    if opts.env_dim.is_some() {
        params.env_dim = opts.env_dim;
    }
    if opts.seed.is_some() {
        params.seed = opts.seed;
    }
}

fn state_from_text(text: &str, opts: &GlobalOpts) -> Result<PureState, CliError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("invalid JSON: {e}")))?;
    if value.get("amplitudes").is_some() {
        return parse_state_json(text).map_err(input_err);
    }
    if value.get("name").is_some() {
        let mut spec: StateSpec = serde_json::from_value(value)
            .map_err(|e| CliError::Input(format!("invalid state spec: {e}")))?;
        overlay_params(&mut spec.params, opts);
        return spec.make().map_err(input_err);
    }
    Err(CliError::Input(
        "JSON input is neither an amplitude state nor a state spec".into(),
    ))
}

/// Resolves `--state` (catalog name, inline JSON or file path) and applies
/// `--fuse-users`, then `--drop-user`.
pub fn load_state(opts: &GlobalOpts) -> Result<PureState, CliError> {
    let raw = opts
        .state
        .as_deref()
        .ok_or_else(|| CliError::Input("--state is required".into()))?;
    let mut state = if CATALOG.contains(&raw) {
        let mut spec = StateSpec::named(raw);
        overlay_params(&mut spec.params, opts);
        spec.make().map_err(input_err)?
    } else {
        state_from_text(&read_text(raw)?, opts)?
    };
    if let Some(list) = &opts.fuse_users {
        let users = parse_index_list(list)?;
        if users.contains(&0) {
            return Err(CliError::Input("users are counted from 1".into()));
        }
        let zero: Vec<usize> = users.iter().map(|u| u - 1).collect();
        state = fuse_users(&state, &zero).map_err(input_err)?;
    }
    if let Some(u) = opts.drop_user {
        if u == 0 || u > state.num_users() {
            return Err(CliError::Input(format!(
                "--drop-user {u} not in 1..={}",
                state.num_users()
            )));
        }
        state = user_reduction(&state, u - 1).map_err(input_err)?;
    }
    Ok(state)
}

/// Optimizer settings from `--config`, overridden by `--seed`, `--restarts`, `--iters`.
pub fn load_config(opts: &GlobalOpts) -> Result<OptimizerConfig, CliError> {
    let mut cfg = match &opts.config {
        Some(arg) => serde_json::from_str(&read_text(arg)?)
            .map_err(|e| CliError::Input(format!("invalid config: {e}")))?,
        None => OptimizerConfig::default(),
    };
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    if let Some(r) = opts.restarts {
        cfg.random_restarts = r;
    }
    if let Some(i) = opts.iters {
        cfg.refine_iters = i;
    }
    cfg.validate().map_err(input_err)?;
    Ok(cfg)
}

/// `--sigma` as an inline list of 1-based images, a JSON array, or a file holding one.
pub fn load_permutation(arg: &str) -> Result<Permutation, CliError> {
    let t = arg.trim();
    if t.starts_with('[') {
        return serde_json::from_str(t)
            .map_err(|e| CliError::Input(format!("invalid permutation: {e}")));
    }
    if t.chars()
        .all(|c| c.is_ascii_digit() || c == ',' || c == ' ')
    {
        return Permutation::from_one_based(&parse_index_list(t)?).map_err(input_err);
    }
    serde_json::from_str(&read_text(t)?)
        .map_err(|e| CliError::Input(format!("invalid permutation: {e}")))
}
