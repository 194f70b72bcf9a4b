mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::write_e2e_fixture;

fn argentail(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_argentail"));
    cmd.args(args).env("RUST_LOG", "error").env_remove("ARGENTAIL_CONFIG");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn mismatched_ids_exit_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let fx = write_e2e_fixture(dir.path(), 3);
    let pred = dir.path().join("pred.jsonl");
    let out = argentail(
        &["detect", "--docs", s(&fx.docs), "--predicates", s(&fx.predicates), "--config", s(&fx.config), "--out", s(&pred)],
        &[],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&pred).unwrap();
    let truncated: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
    std::fs::write(&pred, truncated).unwrap();
    let out = argentail(&["evaluate", "--gold", s(&fx.gold), "--pred", s(&pred), "--docs", s(&fx.docs)], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("instance ids differ"));
}

#[test]
fn invalid_config_exits_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let fx = write_e2e_fixture(dir.path(), 2);
    let pred = dir.path().join("pred.jsonl");
    let args = ["detect", "--docs", s(&fx.docs), "--predicates", s(&fx.predicates), "--config", s(&fx.config), "--out", s(&pred)];
    let out = argentail(&args, &[("ARGENTAIL_PIPELINE_CANDIDATE_THRESHOLD", "1.5")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!pred.exists());
}

#[test]
fn unreachable_endpoint_exits_with_backend_error() {
    let dir = tempfile::tempdir().unwrap();
    let fx = write_e2e_fixture(dir.path(), 2);
    let pred = dir.path().join("pred.jsonl");
    let args = ["detect", "--docs", s(&fx.docs), "--predicates", s(&fx.predicates), "--config", s(&fx.config), "--out", s(&pred)];
    let out = argentail(
        &args,
        &[
            ("ARGENTAIL_ENTAILMENT_KIND", "remote"),
            ("ARGENTAIL_ENTAILMENT_URL", "http://127.0.0.1:9/nli"),
            ("ARGENTAIL_ENTAILMENT_TIMEOUT_SECS", "2"),
            ("ARGENTAIL_ENTAILMENT_RETRIES", "0"),
        ],
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn environment_override_changes_detections() {
    let dir = tempfile::tempdir().unwrap();
    let fx = write_e2e_fixture(dir.path(), 4);
    let base = dir.path().join("base.jsonl");
    let strict = dir.path().join("strict.jsonl");
    let run = |out: &Path, envs: &[(&str, &str)]| {
        let o = argentail(
            &["detect", "--docs", s(&fx.docs), "--predicates", s(&fx.predicates), "--config", s(&fx.config), "--out", s(out)],
            envs,
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    };
    run(&base, &[]);
    run(&strict, &[("ARGENTAIL_PIPELINE_CANDIDATE_THRESHOLD", "1.0")]);
    let count = |p: &Path| std::fs::read_to_string(p).unwrap().matches("\"accepted\":true").count();
    assert!(count(&base) > 0);
    assert_eq!(count(&strict), 0);
    let manifest = std::fs::read_to_string(dir.path().join("strict.jsonl.manifest.json")).unwrap();
    assert!(manifest.contains("\"candidate_threshold\": 1.0"), "{manifest}");
}

#[test]
fn build_nli_writes_stats_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = common::rng(3);
    let corpus = common::qasrl_corpus(&mut rng, 40);
    let input = dir.path().join("corpus.jsonl");
    let body: String = corpus.iter().map(|r| serde_json::to_string(r).unwrap() + "\n").collect();
    std::fs::write(&input, body).unwrap();
    let out = dir.path().join("nli.jsonl");
    let o = argentail(&["build-nli", "--corpus", s(&input), "--out", s(&out), "--seed", "5"], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(std::fs::read_to_string(&out).unwrap().lines().count() > 40);
    assert!(dir.path().join("nli.stats.json").exists());
    assert!(dir.path().join("nli.jsonl.manifest.json").exists());
}
