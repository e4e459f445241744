//! End-to-end runs of the compiled binary: the determinism criterion plus
//! exit-code and report-shape checks for each subcommand.

use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lograte")).args(args).output().expect("binary runs")
}

#[test]
fn criterion_9_reports_are_deterministic() {
    let model = fixture("dip.json");
    let sweep_args = ["sweep", "--model", &model, "--grid", "0.1:5:64", "--format", "csv"];
    let compare_args = ["compare", "--model", &model, "--u", "2", "--v", "0", "--N", "40"];

    let mut ok = true;
    for args in [&sweep_args[..], &compare_args[..]] {
        let first = run(args);
        let second = run(args);
        assert!(first.status.success(), "{args:?} failed: {:?}", first);
        ok &= first.stdout == second.stdout;
    }
    println!(
        "acceptance 9, determinism: {} (repeated sweep and compare runs byte-identical: {ok})",
        if ok { "pass" } else { "fail" }
    );
    assert!(ok);
}

#[test]
fn validation_failure_exits_2_and_names_the_entry() {
    let out = run(&["validate", "--model", &fixture("bad.json")]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("(1,2)"), "diagnostic does not name the entry: {stderr}");
    assert!(out.stdout.is_empty(), "no report on the success stream after a failure");
}

#[test]
fn rate_report_matches_the_closed_form() {
    let out = run(&["rate", "--model", &fixture("dip.json"), "--dose", "1.0"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["irreducible"], serde_json::json!(true));
    let rho = report["rho"].as_f64().unwrap();
    let expected = lograte::closed_form_eigenvalue(100.0, 1.0, -1.0, 1.0, 1.0).unwrap().lambda_max;
    assert!((rho - expected).abs() <= 1e-9 * (1.0 + expected.abs()));
}

#[test]
fn rate_flags_reducible_doses_instead_of_failing() {
    let out = run(&["rate", "--model", &fixture("dip.json"), "--dose", "0.0"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["irreducible"], serde_json::json!(false));
    assert!(report["warning"].as_str().unwrap().contains("reducible"));
}

#[test]
fn compare_report_carries_one_drug_budget() {
    let out =
        run(&["compare", "--model", &fixture("dip.json"), "--u", "2", "--v", "0", "--N", "40"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["total_drug"], serde_json::json!(40.0));
    assert_eq!(report["verdict"], serde_json::json!("pulsed_superior_for_growth"));
}

#[test]
fn simulate_emits_trajectory_csv_and_sidecar() {
    let out = run(&[
        "simulate",
        "--model",
        &fixture("dip.json"),
        "--dose",
        "1.0",
        "--N",
        "20",
        "--samples",
        "4",
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("t,y,log_y,x_1,x_2\n"));
    let stderr = String::from_utf8_lossy(&out.stderr);
    let sidecar_start = stderr.find('{').expect("sidecar JSON on stderr");
    let sidecar: serde_json::Value = serde_json::from_str(&stderr[sidecar_start..]).unwrap();
    assert!(sidecar["estimated_rate"].is_number());
    assert!(sidecar["kappa"].is_number());
}

#[test]
fn dip_table_shows_first_order_convergence() {
    let out = run(&["dip", "--model", &fixture("dip.json"), "--dose", "1.0", "--format", "csv"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    let errors: Vec<f64> = stdout
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(errors.len(), 4);
    assert!(errors.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn unknown_flags_are_rejected() {
    let out = run(&["rate", "--model", &fixture("dip.json"), "--dose", "1.0", "--frobnicate"]);
    assert!(!out.status.success());
    assert!(out.stdout.is_empty());
}
