use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgreason"))
        .current_dir(dir)
        .env("KGREASON_THREADS", "2")
        .args(args)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn body_rows(tsv: &str) -> Vec<&str> {
    tsv.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn katz_on_single_edge() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("g.tsv"), "a\tr\tb\n").unwrap();
    let out = stdout(&run(dir.path(), &["paths", "--graph", "g.tsv", "--method", "katz", "--beta", "0.5", "--iters", "3"]));
    assert!(out.starts_with("# config: {"));
    assert_eq!(body_rows(&out), ["a\ta\t1", "a\tb\t0.5", "b\tb\t1"]);
}

#[test]
fn eval_ranks_fixture() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("ranks.txt"), "1 2\n4\n").unwrap();
    let doc: Value = serde_json::from_str(&stdout(&run(dir.path(), &["eval", "--ranks", "ranks.txt"]))).unwrap();
    assert!((doc["mrr"].as_f64().unwrap() - 7.0 / 12.0).abs() < 1e-12);
    assert_eq!(doc["config"]["subcommand"], "eval");
}

#[test]
fn one_hop_query_is_adjacency() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("g.tsv"), "a\tr\tb\na\tr\tc\nb\tr\tc\na\ts\td\n").unwrap();
    fs::write(dir.path().join("q.txt"), "# one hop\n(p r {a})\n(ip r {c})\n").unwrap();
    let doc: Value = serde_json::from_str(&stdout(&run(dir.path(), &["query", "--graph", "g.tsv", "--queries", "q.txt"]))).unwrap();
    let answers = |i: usize| -> Vec<String> {
        doc["queries"][i]["answers"]
            .as_array()
            .unwrap()
            .iter()
            .map(|a| a["entity"].as_str().unwrap().to_string())
            .collect()
    };
    assert_eq!(answers(0), ["b", "c"]);
    assert_eq!(answers(1), ["a", "b"]);
    assert_eq!(doc["queries"][0]["cardinality"], 2);
    assert_eq!(doc["queries"][0]["type"], "1p");
}

#[test]
fn sampled_queries_evaluate_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("full.tsv"), "a\tr\tb\nb\tr\tc\nc\tr\ta\na\ts\tc\nb\ts\ta\nc\tr\tb\n").unwrap();
    fs::write(d.join("train.tsv"), "a\tr\tb\nb\tr\tc\nc\tr\ta\na\ts\tc\n").unwrap();
    stdout(&run(d, &["sample-queries", "--train", "train.tsv", "--full", "full.tsv", "--types", "1p", "--count", "3", "-o", "s.json"]));
    assert!(fs::read_to_string(d.join("s.json.entities.tsv")).unwrap().starts_with("a\t0\n"));
    stdout(&run(d, &["query", "--graph", "full.tsv", "--queries", "s.json", "-o", "q.json"]));
    let doc: Value = serde_json::from_str(&stdout(&run(d, &["eval", "--predictions", "q.json", "--truth", "s.json"]))).unwrap();
    // Boolean execution on the full graph recovers every answer.
    assert_eq!(doc["overall"]["cardinality"]["mape"], 0.0);
    assert_eq!(doc["overall"]["queries"], 3);
}

#[test]
fn exit_codes_classify_failures() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("g.tsv"), "a\tr\tb\nb\tr\ta\na\ts\tb\nb\ts\ta\na\tt\tb\nb\tt\ta\n").unwrap();
    let code = |args: &[&str]| {
        let out = run(d, args);
        let err = String::from_utf8(out.stderr).unwrap();
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(err.starts_with("error["), "{err}");
        out.status.code().unwrap()
    };
    assert_eq!(code(&["paths", "--graph", "g.tsv"]), 1);
    assert_eq!(code(&["paths", "--graph", "g.tsv", "--method", "katz", "--beta", "1.5"]), 1);
    assert_eq!(code(&["paths", "--graph", "missing.tsv", "--method", "katz"]), 2);
    assert_eq!(code(&["prune", "--graph", "g.tsv", "--method", "katz", "--source", "zz"]), 2);
    assert_eq!(code(&["paths", "--graph", "g.tsv", "--method", "katz", "--beta", "0.9", "--iters", "5000"]), 3);
}

#[test]
fn prune_trace_counts_messages() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("g.tsv"), "a\tr\tb\nb\tr\tc\nc\tr\td\n").unwrap();
    let args = ["prune", "--graph", "g.tsv", "--method", "widest", "--source", "a", "--nodes", "1", "--iters", "4"];
    let doc: Value = serde_json::from_str(&stdout(&run(dir.path(), &args))).unwrap();
    let rounds = doc["trace"]["iterations"].as_array().unwrap();
    assert_eq!(rounds.len(), 4);
    let total: u64 = rounds.iter().map(|r| r["edges"].as_u64().unwrap()).sum();
    assert_eq!(doc["trace"]["messages"].as_u64().unwrap(), total);
    assert!(rounds.iter().all(|r| r["nodes"] == 1));
}
