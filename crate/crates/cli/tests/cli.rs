use std::io::Write;
use std::process::{Command, Output};

use serde::de::DeserializeOwned;
use serde::Serialize;

use qsr_cli::report::{
    BoundsOutput, CatalogEntry, ConditionsOutput, EntropyReport, PermuteOutput, RatesOutput,
    VerifyOutput,
};

fn qsr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsr"))
        .args(args)
        .output()
        .expect("qsr runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn ok_json(args: &[&str]) -> String {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let o = qsr(&all);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{args:?}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    stdout(&o)
}

/// Parses into the typed report and re-emits; the bytes must match.
fn round_trip<T: Serialize + DeserializeOwned>(text: &str) -> T {
    let value: T = serde_json::from_str(text).unwrap();
    let mut again = serde_json::to_string_pretty(&value).unwrap();
    again.push('\n');
    assert_eq!(again, text);
    value
}

fn h2(p: f64) -> f64 {
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

#[test]
fn phi3_bounds() {
    let b: BoundsOutput = round_trip(&ok_json(&["bounds", "--state", "phi3"]));
    assert!((b.bounds.u - 2.0).abs() < 1e-9);
    assert!(b.bounds.l.abs() < 1e-9);
    assert!(b.sandwich_ok && b.bounds.exact);
}

#[test]
fn phi2_bounds_meet_at_sum_of_marginals() {
    for theta in ["pi/4", "pi/6"] {
        let text = ok_json(&[
            "bounds",
            "--state",
            "phi2",
            "--m",
            "3",
            "--theta",
            theta,
            "--restarts",
            "2",
            "--iters",
            "20",
        ]);
        let b: BoundsOutput = round_trip(&text);
        let t: f64 = qsr_cli::parse_angle(theta).unwrap();
        let sum = 3.0 * h2(t.sin().powi(2));
        assert!(
            (b.bounds.l - sum).abs() < 1e-6,
            "{theta}: l = {}",
            b.bounds.l
        );
        assert!(
            (b.bounds.u - sum).abs() < 1e-6,
            "{theta}: u = {}",
            b.bounds.u
        );
    }
}

#[test]
fn phi7_and_its_user_reduction() {
    let b: BoundsOutput = round_trip(&ok_json(&["bounds", "--state", "phi7"]));
    assert!(b.bounds.l.abs() < 1e-9);
    let r: BoundsOutput = round_trip(&ok_json(&[
        "bounds",
        "--state",
        "phi7",
        "--drop-user",
        "3",
        "--restarts",
        "0",
    ]));
    assert_eq!(r.bounds.m, 3);
    assert!(r.bounds.l >= 1.0 - 1e-6);
    assert!(r.bounds.flags.positive_cost_detected);
}

#[test]
fn phi5_entropies() {
    let e: EntropyReport = round_trip(&ok_json(&["entropy", "--state", "phi5"]));
    assert!((e.h_user[0] - 2.0).abs() < 1e-12);
    assert!(e.h_user[1].abs() < 1e-12);
    let text = stdout(&qsr(&["entropy", "--state", "phi5"]));
    assert!(text.contains("H(A1) = 2 "), "{text}");
}

#[test]
fn text_uses_nine_significant_digits() {
    let text = stdout(&qsr(&["entropy", "--state", "phi8", "--theta", "pi/6"]));
    assert!(text.contains("H(A2) = 0.811278124 "), "{text}");
}

#[test]
fn every_report_round_trips() {
    round_trip::<RatesOutput>(&ok_json(&["rates", "--state", "phi6"]));
    round_trip::<ConditionsOutput>(&ok_json(&["conditions", "--state", "phi3"]));
    round_trip::<Vec<CatalogEntry>>(&ok_json(&["catalog"]));
    round_trip::<PermuteOutput>(&ok_json(&[
        "permute", "--state", "phi3", "--sigma", "2,1,4,3",
    ]));
    round_trip::<VerifyOutput>(&ok_json(&["verify", "--check", "5"]));
    round_trip::<EntropyReport>(&ok_json(&[
        "entropy",
        "--state",
        "random_pure",
        "--m",
        "3",
        "--env-dim",
        "2",
        "--seed",
        "4",
    ]));
}

#[test]
fn phi5_rates_are_consistent() {
    let r: RatesOutput = round_trip(&ok_json(&["rates", "--state", "phi5"]));
    assert!(r.consistency.max_residual < 1e-9);
    assert!((r.zero_total.get(0, 2) + 1.0).abs() < 1e-9);
    assert!(qsr_core::rates::e_total(&r.zero_total).abs() < 1e-9);
}

#[test]
fn rates_reject_two_users_with_exit_3() {
    let o = qsr(&["rates", "--state", "ebit"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("M >= 3"));
}

#[test]
fn malformed_amplitudes_exit_2() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    write!(
        f,
        r#"{{"parts":[{{"label":"A1","dim":2}},{{"label":"A2","dim":2}}],"amplitudes":[[1,0],[0,0],[0,0]]}}"#
    )
    .unwrap();
    let o = qsr(&["entropy", "--state", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("amplitudes"));
}

#[test]
fn state_files_and_inline_specs_load() {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut f = tempfile::NamedTempFile::new().unwrap();
    write!(
        f,
        r#"{{"parts":[{{"label":"A1","dim":2}},{{"label":"A2","dim":2}},{{"label":"A3","dim":2}}],"amplitudes":[[{h},0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[{h},0]]}}"#
    )
    .unwrap();
    let e: EntropyReport = round_trip(&ok_json(&[
        "entropy",
        "--state",
        f.path().to_str().unwrap(),
    ]));
    assert!(e.h_user.iter().all(|&x| (x - 1.0).abs() < 1e-12));
    let spec = r#"{"name":"phi2","params":{"thetas":[0.7853981633974483,0.5235987755982988]}}"#;
    let b: BoundsOutput = round_trip(&ok_json(&["bounds", "--state", spec, "--restarts", "0"]));
    assert_eq!(b.bounds.m, 2);
}

#[test]
fn input_errors_exit_2() {
    assert_eq!(qsr(&["bounds", "--state", "nosuch"]).status.code(), Some(2));
    assert_eq!(qsr(&["bounds"]).status.code(), Some(2));
    assert_eq!(
        qsr(&["bounds", "--state", "phi3", "--bogus"]).status.code(),
        Some(2)
    );
    assert_eq!(
        qsr(&["bounds", "--state", "phi3", "--drop-user", "9"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        qsr(&["bounds", "--state", "{not json"]).status.code(),
        Some(2)
    );
    assert_eq!(
        qsr(&["permute", "--state", "phi3", "--sigma", "1,1,2,3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        qsr(&[
            "bounds",
            "--state",
            "phi3",
            "--config",
            r#"{"step_decay": 2}"#
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn fused_users_form_one_user() {
    let e: EntropyReport = round_trip(&ok_json(&[
        "entropy",
        "--state",
        "phi7",
        "--fuse-users",
        "2,3",
    ]));
    assert_eq!(e.users.len(), 3);
    assert_eq!(e.users[1], "A2A3");
    assert!(e.h_user[1].abs() < 1e-12);
}

#[test]
fn verify_perturbation_fails_the_target_check() {
    assert_eq!(qsr(&["verify", "--check", "5"]).status.code(), Some(0));
    let o = qsr(&[
        "verify",
        "--check",
        "5",
        "--check",
        "2",
        "--perturb-check",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("[FAIL] check  5"), "{text}");
    assert!(text.contains("[PASS] check  2"), "{text}");
}

#[test]
fn verify_is_deterministic_for_a_seed() {
    let args = [
        "verify", "--seed", "7", "--check", "8", "--check", "9", "--check", "10",
    ];
    let a = ok_json(&args);
    assert_eq!(a, ok_json(&args));
    let v: VerifyOutput = round_trip(&a);
    assert_eq!((v.seed, v.passed, v.total), (7, 3, 3));
}

#[test]
fn in_process_run_matches_binary() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = qsr_cli::run(
        ["qsr", "bounds", "--state", "phi3", "--format", "json"],
        &mut out,
        &mut err,
    );
    assert_eq!(code, 0);
    assert_eq!(
        String::from_utf8(out).unwrap(),
        ok_json(&["bounds", "--state", "phi3"])
    );
}
