use std::process::Command;

use contactlab::scenario::{
    export_plotdata, filter_by_anchor, list_scenarios, registry_problems, run_scenario, Expectation, Overrides, Report,
    ANCHORS,
};
use contactlab::Error;

fn quick() -> Overrides {
    Overrides { samples: Some(50), ..Overrides::default() }
}

#[test]
fn registry_is_complete_and_resolves() {
    let rows = list_scenarios();
    assert!(rows.len() >= 12, "{} scenarios", rows.len());
    assert!(registry_problems().is_empty(), "{:?}", registry_problems());
    for r in &rows {
        assert!(!r.anchor.is_empty() && !r.description.is_empty(), "{}", r.name);
    }
    // every anchor is exercised by some scenario
    for (a, _) in ANCHORS {
        assert!(rows.iter().any(|r| r.anchor == *a), "anchor {a} unused");
    }
    assert!(rows.iter().any(|r| r.expectation == Expectation::ExpectedFail));
}

#[test]
fn anchor_filter_is_case_insensitive() {
    let rows = filter_by_anchor("PRESCRIPTION");
    assert!(rows.len() >= 2);
    assert!(rows.iter().all(|r| r.anchor.contains("prescription")));
    assert!(filter_by_anchor("no-such-anchor").is_empty());
}

#[test]
fn runs_are_deterministic() {
    for name in ["reeb-ot-closed-form", "milnor-checks", "prescription-epsilon"] {
        let a = run_scenario(name, &quick()).unwrap();
        let b = run_scenario(name, &quick()).unwrap();
        assert_eq!(a.canonical_json(), b.canonical_json(), "{name}");
    }
}

#[test]
fn seed_changes_sampled_measurements() {
    let a = run_scenario("reeb-ot-closed-form", &quick()).unwrap();
    let b = run_scenario("reeb-ot-closed-form", &Overrides { seed: Some(9), ..quick() }).unwrap();
    assert_eq!(b.environment.seed, 9);
    assert_ne!(a.canonical_json(), b.canonical_json());
}

#[test]
fn report_round_trips_through_json() {
    let r = run_scenario("calculus-kernel", &quick()).unwrap();
    let back: Report = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(back.canonical_json(), r.canonical_json());
    let ids: Vec<&str> = r.checks.iter().map(|c| c.id.as_str()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
    assert_eq!(r.checks_csv().lines().count(), r.checks.len() + 1);
}

#[test]
fn expected_failures_keep_the_report_ok() {
    let r = run_scenario("bourgeois-eps-zero", &quick()).unwrap();
    assert!(r.ok);
    assert!(r.checks.iter().any(|c| c.expectation == Expectation::ExpectedFail && !c.passed && c.ok));
}

#[test]
fn bad_inputs_are_usage_errors() {
    assert!(matches!(run_scenario("nope", &quick()), Err(Error::UnknownScenario(_))));
    let bad = Overrides { step: Some(0.0), ..quick() };
    assert!(matches!(run_scenario("calculus-kernel", &bad), Err(Error::InvalidOverride { .. })));
    assert!(matches!(Overrides::from_json(r#"{"samples": 3, "colour": 1}"#), Err(Error::InvalidOverride { .. })));
    let o = Overrides::from_json(r#"{"samples": 3, "tol_scale": 2.0}"#).unwrap();
    assert_eq!((o.samples, o.tol_scale), (Some(3), Some(2.0)));
}

#[test]
fn plot_export_writes_one_file_per_payload() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_scenario("area-law-circle", &Overrides { step: Some(1.0 / 400.0), ..Overrides::default() }).unwrap();
    assert!(!r.payloads.is_empty());
    let files = export_plotdata(&r, dir.path()).unwrap();
    assert_eq!(files.len(), r.payloads.len());
    let text = std::fs::read_to_string(&files[0]).unwrap();
    assert_eq!(text.lines().next().unwrap(), r.payloads[0].columns.join(","));
    assert_eq!(text.lines().count(), r.payloads[0].rows.len() + 1);

    let empty = run_scenario("calculus-kernel", &quick()).unwrap();
    assert!(empty.payloads.is_empty());
    let sub = dir.path().join("none");
    assert!(export_plotdata(&empty, &sub).unwrap().is_empty());
    assert!(!sub.exists());
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_contactlab")).args(args).output().unwrap()
}

#[test]
fn cli_exit_codes() {
    let ok = cli(&["run", "calculus-kernel", "--samples", "20"]);
    assert_eq!(ok.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(v["scenario"], "calculus-kernel");
    assert_eq!(v["schema_version"], 1);

    assert_eq!(cli(&["run", "no-such-scenario"]).status.code(), Some(2));
    assert_eq!(cli(&["run", "calculus-kernel", "--step", "3"]).status.code(), Some(2));
    assert_eq!(cli(&["run", "calculus-kernel", "--samples", "0"]).status.code(), Some(2));
    assert_eq!(cli(&["frobnicate"]).status.code(), Some(2));
    // tightening every tolerance to nothing forces failures
    assert_eq!(cli(&["run", "reeb-ot-closed-form", "--samples", "20", "--tol-scale", "1e-300"]).status.code(), Some(1));
}

#[test]
fn cli_list_config_and_csv() {
    let list = cli(&["list", "--anchor", "prescription"]);
    assert_eq!(list.status.code(), Some(0));
    assert!(String::from_utf8(list.stdout).unwrap().lines().count() >= 2);

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("o.json");
    std::fs::write(&cfg, r#"{"samples": 15, "seed": 4}"#).unwrap();
    let out = dir.path().join("r.csv");
    let run = cli(&[
        "run",
        "milnor-checks",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "5",
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.lines().next().unwrap().starts_with("scenario,id,"));
    assert_eq!(csv.lines().filter(|l| l.starts_with("scenario,id,")).count(), 1);

    std::fs::write(&cfg, r#"{"sample": 15}"#).unwrap();
    assert_eq!(cli(&["run", "milnor-checks", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}
