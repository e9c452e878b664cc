use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_commentforge"))
        .current_dir(dir)
        .arg("--quiet")
        .args(args)
        .env_remove("COMMENTFORGE_SEED")
        .output()
        .unwrap()
}

fn report(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

const HYP: &str = r#"{"article_id": "a1", "text": "the mayor should resign now"}
{"article_id": "a2", "text": "what a lovely day it is"}
"#;

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn invalid_override_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["--set", "alpha=3", "make-toy", "--out", "x.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("x.jsonl").exists());
}

#[test]
fn evaluate_identical_files_scores_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("hyp.jsonl"), HYP).unwrap();
    std::fs::write(dir.path().join("ref.jsonl"), HYP).unwrap();
    let out = run(
        dir.path(),
        &[
            "evaluate",
            "--hyp",
            "hyp.jsonl",
            "--ref",
            "ref.jsonl",
            "--out",
            "report.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path(), "report.json");
    assert_eq!(r["bleu1"], 1.0);
    assert_eq!(r["rouge_l"], 1.0);
    assert_eq!(r["n_pairs"], 2);
}

#[test]
fn evaluate_empty_hypotheses_warns() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("hyp.jsonl"), "").unwrap();
    std::fs::write(dir.path().join("ref.jsonl"), HYP).unwrap();
    let out = run(
        dir.path(),
        &[
            "evaluate",
            "--hyp",
            "hyp.jsonl",
            "--ref",
            "ref.jsonl",
            "--out",
            "report.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path(), "report.json");
    assert_eq!(r["bleu1"], 0.0);
    assert_eq!(r["cider"], 0.0);
    assert!(!r["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn refuses_to_overwrite_inputs() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("hyp.jsonl"), HYP).unwrap();
    let out = run(
        dir.path(),
        &[
            "evaluate",
            "--hyp",
            "hyp.jsonl",
            "--ref",
            "hyp.jsonl",
            "--out",
            "hyp.jsonl",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(std::fs::read_to_string(dir.path().join("hyp.jsonl")).unwrap(), HYP);
}

#[test]
fn missing_checkpoint_prints_resume_hint() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(
            dir.path(),
            &["make-toy", "--articles", "5", "--seed", "2", "--out", "toy.jsonl"]
        )
        .status
        .code(),
        Some(0)
    );
    let out = run(
        dir.path(),
        &[
            "score",
            "--model",
            "us.ckpt",
            "--corpus",
            "toy.jsonl",
            "--out",
            "s.jsonl",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("train-us"));
}

#[test]
fn seed_flag_and_environment_agree() {
    let dir = tempfile::tempdir().unwrap();
    run(
        dir.path(),
        &["make-toy", "--articles", "4", "--seed", "9", "--out", "flag.jsonl"],
    );
    let out = Command::new(env!("CARGO_BIN_EXE_commentforge"))
        .current_dir(dir.path())
        .args(["--quiet", "make-toy", "--articles", "4", "--out", "env.jsonl"])
        .env("COMMENTFORGE_SEED", "9")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let read = |n: &str| std::fs::read(dir.path().join(n)).unwrap();
    assert_eq!(read("flag.jsonl"), read("env.jsonl"));
    run(
        dir.path(),
        &["make-toy", "--articles", "4", "--seed", "10", "--out", "other.jsonl"],
    );
    assert_ne!(read("flag.jsonl"), read("other.jsonl"));
}
