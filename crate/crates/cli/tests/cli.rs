//! End-to-end runs of the `hfpc` binary and its library entry point on the
//! bundled fixture.

use std::path::{Path, PathBuf};
use std::process::Command;

use hfpc_core::metrics::Evaluation;
use hfpc_core::synthetic::{write_fixture, FIXTURE_MANIFEST, FIXTURE_SEED};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/hfpc12")
}

fn manifest() -> String {
    fixture().join(FIXTURE_MANIFEST).to_string_lossy().into_owned()
}

fn hfpc(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hfpc")).args(args).env_remove("HFPC_SEED").output().unwrap()
}

fn run(args: &[&str]) -> i32 {
    hfpc_cli::run(std::iter::once("hfpc").chain(args.iter().copied()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn sorted_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

fn train_bundle(dir: &Path) -> PathBuf {
    let bundle = dir.join("bundle");
    assert_eq!(run(&["train", "--manifest", &manifest(), "--out", p(&bundle), "--seed", "7", "--epochs", "20"]), 0);
    bundle
}

#[test]
fn bundled_fixture_regenerates_identically() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), FIXTURE_SEED).unwrap();
    let fresh = sorted_files(dir.path());
    let bundled = sorted_files(&fixture());
    assert_eq!(fresh.len(), bundled.len());
    for (a, b) in fresh.iter().zip(&bundled) {
        assert_eq!(a.file_name(), b.file_name());
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap(), "{b:?}");
    }
}

#[test]
fn help_and_usage_exit_codes() {
    let out = hfpc(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("evaluate"));
    let out = hfpc(&["train", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--no-such-flag"));
    assert_eq!(hfpc(&[]).status.code(), Some(2));
    assert_eq!(hfpc(&["evaluate", "--manifest", "m.jsonl"]).status.code(), Some(2));
}

#[test]
fn data_errors_exit_one_and_name_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.jsonl");
    let out = hfpc(&["train", "--manifest", p(&missing), "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.jsonl"));

    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"id\": 1}\n").unwrap();
    let out = hfpc(&["split", "--manifest", p(&bad), "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.jsonl") && err.contains("line 1"), "{err}");

    // k larger than the record count
    let out = hfpc(&["cluster-balance", "--manifest", &manifest(), "--out", p(&dir.path().join("b.jsonl"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn invalid_thresholds_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = train_bundle(dir.path());
    let out = dir.path().join("eval");
    assert_eq!(
        run(&["evaluate", "--manifest", &manifest(), "--params", p(&bundle), "--out", p(&out), "--theta-bg", "1.5"]),
        2
    );
    assert_eq!(
        run(&["evaluate", "--manifest", &manifest(), "--params", p(&bundle), "--out", p(&out), "--tau-match", "1.5"]),
        2
    );
}

#[test]
fn evaluate_verdict_is_the_conjunction() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = train_bundle(dir.path());
    let out = dir.path().join("eval");
    assert_eq!(run(&["evaluate", "--manifest", &manifest(), "--params", p(&bundle), "--out", p(&out)]), 0);
    let eval: Evaluation = hfpc_core::metrics::read_json(&out.join("evaluation.json")).unwrap();

    let scratch = tempfile::tempdir().unwrap();
    let (_, truth) = write_fixture(scratch.path(), FIXTURE_SEED).unwrap();
    assert_eq!(eval.images.len(), truth.len());
    for (v, t) in eval.images.iter().zip(&truth) {
        assert_eq!((v.record.as_str(), v.generated_index, v.label), (t.record.as_str(), t.generated_index, t.label));
        assert_eq!(v.consistent, t.consistent, "{} g{}", v.record, v.generated_index);
        assert_eq!(v.background_pass, v.background_score >= eval.config.theta_bg);
        assert_eq!(v.pass, v.background_pass && v.consistent);
        // both diagnoses are always present
        assert!(v.consistent || !v.diagnostics.is_empty());
    }
}

#[test]
fn seeded_subcommands_are_byte_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [a.path(), b.path()] {
        train_bundle(dir);
        let balanced = dir.join("balanced.jsonl");
        assert_eq!(
            run(&["cluster-balance", "--manifest", &manifest(), "--out", p(&balanced), "--k", "3", "--seed", "5"]),
            0
        );
        assert_eq!(run(&["split", "--manifest", &manifest(), "--out", p(&dir.join("split")), "--seed", "5"]), 0);
    }
    for rel in [
        "bundle/params.json",
        "bundle/w1.hft",
        "bundle/training.json",
        "balanced.jsonl",
        "split/train.jsonl",
        "split/val.jsonl",
    ] {
        assert_eq!(std::fs::read(a.path().join(rel)).unwrap(), std::fs::read(b.path().join(rel)).unwrap(), "{rel}");
    }
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let (x, y) = (dir.path().join("x.jsonl"), dir.path().join("y.jsonl"));
    let flag = hfpc(&["cluster-balance", "--manifest", &manifest(), "--out", p(&x), "--k", "4", "--seed", "11"]);
    assert_eq!(flag.status.code(), Some(0));
    let env = Command::new(env!("CARGO_BIN_EXE_hfpc"))
        .args(["cluster-balance", "--manifest", &manifest(), "--out", p(&y), "--k", "4"])
        .env("HFPC_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(env.status.code(), Some(0));
    assert_eq!(std::fs::read(&x).unwrap(), std::fs::read(&y).unwrap());
}

#[test]
fn balanced_and_split_manifests_stay_loadable() {
    let dir = tempfile::tempdir().unwrap();
    let balanced = dir.path().join("out/balanced.jsonl");
    assert_eq!(
        run(&["cluster-balance", "--manifest", &manifest(), "--out", p(&balanced), "--k", "3", "--seed", "2"]),
        0
    );
    let records = hfpc_core::dataset::load_manifest_file(&balanced).unwrap();
    assert!(records.len() >= 12);
    assert!(records.iter().all(|r| r.cluster_id.is_some()));
    assert_eq!(records.iter().filter(|r| !r.augmented).count(), 12);

    let split = dir.path().join("split");
    assert_eq!(
        run(&[
            "split",
            "--manifest",
            p(&balanced),
            "--out",
            p(&split),
            "--train-fraction",
            "0.5",
            "--val-fraction",
            "0.25"
        ]),
        0
    );
    let bundle = dir.path().join("bundle");
    let train = split.join("train.jsonl");
    let val = split.join("val.jsonl");
    assert_eq!(
        run(&["train", "--manifest", p(&train), "--val-manifest", p(&val), "--out", p(&bundle), "--epochs", "3"]),
        0
    );
    let sizes: Vec<usize> = ["train", "val", "test"]
        .iter()
        .map(|n| hfpc_core::dataset::load_manifest_file(&split.join(format!("{n}.jsonl"))).unwrap().len())
        .collect();
    assert_eq!(sizes.iter().sum::<usize>(), records.len());
}

#[test]
fn score_and_consistency_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = train_bundle(dir.path());
    let f = fixture();
    let out = hfpc(&[
        "score",
        "--params",
        p(&bundle),
        "--original",
        p(&f.join("rec00.hft")),
        "--generated",
        p(&f.join("rec00_g0.hft")),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let score = v["score"].as_f64().unwrap();
    assert!(score > 0.0 && score < 1.0);
    assert_eq!(v["pass"].as_bool().unwrap(), score >= 0.5);

    // rec01 has two products; its failing generation erases the first
    let verdict = dir.path().join("verdict.json");
    let code = run(&[
        "consistency",
        "--original-image",
        p(&f.join("rec01.ppm")),
        "--generated-image",
        p(&f.join("rec01_g2.ppm")),
        "--original-masks",
        &format!("{},{}", p(&f.join("rec01.mask0.pgm")), p(&f.join("rec01.mask1.pgm"))),
        "--generated-masks",
        p(&f.join("rec01_g2.mask0.pgm")),
        "--out",
        p(&verdict),
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&verdict).unwrap()).unwrap();
    assert_eq!(v["consistent"], false);
    assert_eq!(v["unmatched_ori"], serde_json::json!([0]));
}

#[test]
fn report_formats() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = train_bundle(dir.path());
    let eval = dir.path().join("eval");
    assert_eq!(run(&["evaluate", "--manifest", &manifest(), "--params", p(&bundle), "--out", p(&eval)]), 0);
    let results = eval.join("evaluation.json");
    let json_only = dir.path().join("r1");
    assert_eq!(run(&["report", "--results", p(&results), "--out", p(&json_only)]), 0);
    assert_eq!(sorted_files(&json_only), vec![json_only.join("report.json")]);

    let all = dir.path().join("r2");
    assert_eq!(run(&["report", "--results", p(&results), "--out", p(&all), "--format", "csv,svg"]), 0);
    let report = hfpc_core::metrics::load_report(&all.join("report.json")).unwrap();
    let roc = report.curves.roc_low.unwrap();
    let csv = std::fs::read_to_string(all.join("roc_low.csv")).unwrap();
    assert_eq!(csv.lines().count(), roc.points.len() + 1);
    assert!(std::fs::read_to_string(all.join("pr_low.svg")).unwrap().starts_with("<svg"));
    assert_eq!(std::fs::read(json_only.join("report.json")).unwrap(), std::fs::read(all.join("report.json")).unwrap());
    assert_eq!(run(&["report", "--results", p(&results), "--out", p(&all), "--format", "pdf"]), 2);
}
