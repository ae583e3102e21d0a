use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sigfactor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sigfactor")).args(args).output().unwrap()
}

fn ok(args: &[&str]) {
    let out = sigfactor(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn p(dir: &Path, rel: &str) -> String {
    dir.join(rel).display().to_string()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn simulate_fit_score_smoke() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    ok(&[
        "simulate",
        "--kind",
        "regression",
        "--variables",
        "40",
        "--planted",
        "10",
        "--control-probes",
        "4",
        "--out",
        &p(d, "sim"),
    ]);
    ok(&[
        "fit-signatures",
        "--expression",
        &p(d, "sim/expression.tsv"),
        "--design",
        &p(d, "sim/design.tsv"),
        "--controls",
        "2",
        "--no-filter",
        "--iterations",
        "300",
        "--burnin",
        "100",
        "--out",
        &p(d, "sig"),
    ]);
    ok(&["score", "--signatures", &p(d, "sig"), "--expression", &p(d, "sim/expression.tsv"), "--out", &p(d, "score")]);

    let scores = fs::read_to_string(d.join("score/scores.tsv")).unwrap();
    let mut lines = scores.lines();
    let header: Vec<&str> = lines.next().unwrap().split('\t').collect();
    assert_eq!(header.len(), 28);
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split('\t').skip(1).map(|v| v.parse().unwrap()).collect()).collect();
    // eight treatments plus two artefact controls
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r.len() == 27 && r.iter().all(|v| v.is_finite())));

    let effects = fs::read_to_string(d.join("sig/effects.tsv")).unwrap();
    assert_eq!(effects.lines().filter(|l| l.contains("\tartefact_control\t")).count(), 2);
    let vars = fs::read_to_string(d.join("sig/variables.tsv")).unwrap();
    assert!(!vars.contains("AFFX"));

    let m = manifest(&d.join("sig"));
    assert_eq!(m["subcommand"], "fit-signatures");
    assert_eq!(m["seed"], 1);
    assert_eq!(m["config"]["mcmc"]["iterations"], 300);
    let inputs = m["inputs"].as_array().unwrap();
    assert_eq!(inputs.len(), 2);
    assert!(inputs.iter().all(|i| i["sha256"].as_str().unwrap().len() == 64));
    assert!(m["outputs"].as_array().unwrap().iter().any(|o| o == "posterior.json"));
}

#[test]
fn factor_project_survival_smoke() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    ok(&[
        "simulate",
        "--kind",
        "pipeline",
        "--variables",
        "60",
        "--samples",
        "40",
        "--planted",
        "10",
        "--factors",
        "2",
        "--members",
        "10",
        "--out",
        &p(d, "sim"),
    ]);
    ok(&[
        "fit-factors",
        "--expression",
        &p(d, "sim/cohort.tsv"),
        "--founders-file",
        &p(d, "sim/founders.txt"),
        "--iterations",
        "200",
        "--burnin",
        "50",
        "--out",
        &p(d, "fac"),
    ]);
    let heat = fs::read_to_string(d.join("fac/heatmap.csv")).unwrap();
    assert_eq!(heat.lines().next().unwrap(), "id,factor1,factor2");
    assert_eq!(heat.lines().count(), 61);

    ok(&[
        "project",
        "--model",
        &p(d, "fac"),
        "--expression",
        &p(d, "sim/validation.tsv"),
        "--gls",
        "--out",
        &p(d, "proj"),
    ]);
    let proj = fs::read_to_string(d.join("proj/scores.tsv")).unwrap();
    assert!(proj.starts_with("factor\tv1\t"));

    ok(&["project", "--model", &p(d, "fac"), "--expression", &p(d, "sim/cohort.tsv"), "--out", &p(d, "pc")]);
    ok(&[
        "surv-search",
        "--survival",
        &p(d, "sim/survival.tsv"),
        "--covariates",
        &p(d, "pc/scores.tsv"),
        "--iterations",
        "10",
        "--out",
        &p(d, "ss"),
    ]);
    let incl = fs::read_to_string(d.join("ss/inclusion.tsv")).unwrap();
    assert_eq!(incl.lines().count(), 4);
    ok(&[
        "surv-predict",
        "--ledger",
        &p(d, "ss"),
        "--survival",
        &p(d, "sim/survival.tsv"),
        "--covariates",
        &p(d, "pc/scores.tsv"),
        "--out",
        &p(d, "sp"),
    ]);
    let pred = fs::read_to_string(d.join("sp/predictions.tsv")).unwrap();
    assert_eq!(pred.lines().count(), 41);
    assert!(pred.lines().skip(1).all(|l| l.rsplit('\t').next().unwrap().parse::<f64>().unwrap() > 0.0));

    ok(&[
        "km",
        "--survival",
        &p(d, "sim/survival.tsv"),
        "--covariates",
        &p(d, "pc/scores.tsv"),
        "--stratify-by",
        "factor1",
        "--out",
        &p(d, "km"),
    ]);
    let km = fs::read_to_string(d.join("km/km.csv")).unwrap();
    assert!(km.starts_with("group,time,survival,at_risk,deaths\nlow,0,1,"));
    assert!(km.contains("\nhigh,0,1,"));
    let groups = fs::read_to_string(d.join("km/groups.tsv")).unwrap();
    let low = groups.lines().filter(|l| l.ends_with("\tlow")).count();
    assert_eq!(low, 20);
}

#[test]
fn augment_and_evolve_write_traces() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    ok(&[
        "simulate",
        "--kind",
        "factor",
        "--variables",
        "80",
        "--samples",
        "40",
        "--factors",
        "1",
        "--members",
        "15",
        "--out",
        &p(d, "sim"),
    ]);
    ok(&[
        "evolve",
        "--expression",
        &p(d, "sim/expression.tsv"),
        "--founders",
        "g1",
        "--iterations",
        "200",
        "--burnin",
        "50",
        "--max-iterations",
        "3",
        "--out",
        &p(d, "ev"),
    ]);
    let trace = fs::read_to_string(d.join("ev/trace.jsonl")).unwrap();
    let steps: Vec<Value> = trace.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(!steps.is_empty() && steps.len() <= 3);
    assert_eq!(steps[0]["model_size"], 1);
    let summary: Value = serde_json::from_str(&fs::read_to_string(d.join("ev/evolution.json")).unwrap()).unwrap();
    assert!(summary["stop_reason"].is_string());

    fs::write(
        d.join("scores.tsv"),
        format!(
            "effect\t{}\nm1\t{}\n",
            (1..=40).map(|i| format!("s{i}")).collect::<Vec<_>>().join("\t"),
            vec!["1.5"; 40].join("\t")
        ),
    )
    .unwrap();
    ok(&[
        "augment",
        "--expression",
        &p(d, "sim/expression.tsv"),
        "--scores",
        &p(d, "scores.tsv"),
        "--out",
        &p(d, "aug"),
    ]);
    let aug = fs::read_to_string(d.join("aug/expression.tsv")).unwrap();
    assert!(aug.lines().nth(1).unwrap().starts_with("m1\t1.5\t"));
    assert_eq!(fs::read_to_string(d.join("aug/metagenes.txt")).unwrap(), "m1\n");
}

#[test]
fn unknown_subcommand_is_usage_error() {
    assert_eq!(sigfactor(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(sigfactor(&["km", "--bogus-flag"]).status.code(), Some(2));
    assert_eq!(sigfactor(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_input_names_the_path() {
    let t = tempfile::tempdir().unwrap();
    let missing = t.path().join("absent.tsv").display().to_string();
    let out = sigfactor(&["km", "--survival", &missing, "--out", &p(t.path(), "o")]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error kind=io path="));
    assert!(err.contains(&missing));
}

#[test]
fn model_errors_are_single_line() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    ok(&[
        "simulate",
        "--kind",
        "factor",
        "--variables",
        "30",
        "--samples",
        "10",
        "--factors",
        "1",
        "--members",
        "5",
        "--out",
        &p(d, "sim"),
    ]);
    let out = sigfactor(&[
        "fit-factors",
        "--expression",
        &p(d, "sim/expression.tsv"),
        "--founders",
        "nope",
        "--out",
        &p(d, "f"),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error kind=config message="), "{err}");
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    let conf = d.join("run.conf");
    fs::write(&conf, "# survival simulation\nkind = survival\nsamples = 30\nseed = 4\n").unwrap();
    ok(&["--config", conf.to_str().unwrap(), "simulate", "--seed", "9", "--out", &p(d, "a")]);
    let m = manifest(&d.join("a"));
    assert_eq!(m["seed"], 9);
    assert_eq!(m["config"]["samples"], 30);
    assert_eq!(fs::read_to_string(d.join("a/survival.tsv")).unwrap().lines().count(), 31);
}

#[test]
fn thread_count_does_not_change_outputs() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    ok(&["simulate", "--kind", "survival", "--samples", "80", "--out", &p(d, "sim")]);
    for (threads, out) in [("1", "a"), ("3", "b")] {
        ok(&[
            "--threads",
            threads,
            "surv-search",
            "--survival",
            &p(d, "sim/survival.tsv"),
            "--iterations",
            "20",
            "--out",
            &p(d, out),
        ]);
    }
    for f in ["ledger.json", "models.tsv", "pairwise.tsv"] {
        assert_eq!(fs::read(d.join("a").join(f)).unwrap(), fs::read(d.join("b").join(f)).unwrap(), "{f}");
    }
}
