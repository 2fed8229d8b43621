use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn secluster(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_secluster"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn clusters(file: &Path) -> Vec<Vec<String>> {
    let v: serde_json::Value = serde_json::from_slice(&fs::read(file).unwrap()).unwrap();
    serde_json::from_value(v["clusters"].clone()).unwrap()
}

#[test]
fn one_message_is_one_event() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = path(dir.path(), "c.jsonl");
    fs::write(&corpus, "{\"id\":\"solo\",\"attributes\":[\"tag:#a\"],\"embedding\":[0.3,0.4]}\n").unwrap();
    let out = path(dir.path(), "p.json");
    let report = path(dir.path(), "r.json");
    let o = secluster(&["detect", "--corpus", s(&corpus), "--out", s(&out), "--report", s(&report)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(clusters(&out), vec![vec!["solo".to_string()]]);
    let r: serde_json::Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert_eq!(r["messages"], 1);
}

#[test]
fn missing_embedding_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = path(dir.path(), "c.jsonl");
    fs::write(
        &corpus,
        "{\"id\":\"a\",\"attributes\":[],\"embedding\":[1.0,0.0]}\n{\"id\":\"b\",\"attributes\":[]}\n",
    )
    .unwrap();
    let o = secluster(&["detect", "--corpus", s(&corpus)]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains(":2:") && err.contains("'b'"), "{err}");
}

#[test]
fn malformed_record_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = path(dir.path(), "c.jsonl");
    fs::write(&corpus, "{\"id\":\"a\",\"attributes\":[\"nokind\"],\"embedding\":[1.0]}\n").unwrap();
    let o = secluster(&["detect", "--corpus", s(&corpus)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains(":1:"));
}

#[test]
fn usage_errors_exit_with_input_status() {
    assert_eq!(secluster(&["detect"]).status.code(), Some(1));
    assert_eq!(secluster(&["bench", "--sizes", ""]).status.code(), Some(1));
}

#[test]
fn synth_detect_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = path(dir.path(), "c.jsonl");
    let emb = path(dir.path(), "c.seev");
    let truth = path(dir.path(), "t.json");
    let pred = path(dir.path(), "p.json");
    let metrics = path(dir.path(), "m.json");
    let o = secluster(&[
        "synth", "--out", s(&corpus), "--truth", s(&truth), "--embeddings", s(&emb),
        "--events", "4", "--messages-per-event", "50", "--noise-ratio", "0", "--leak", "0",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = 200;
    let dim = 32;
    assert_eq!(fs::metadata(&emb).unwrap().len() as usize, 14 + 4 * rows * dim);

    let o = secluster(&[
        "detect", "--corpus", s(&corpus), "--embeddings", s(&emb), "--out", s(&pred),
        "--report", s(&path(dir.path(), "r.json")),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = secluster(&["eval", "--pred", s(&pred), "--truth", s(&truth), "--out", s(&metrics)]);
    assert!(o.status.success());
    let m: serde_json::Value = serde_json::from_slice(&fs::read(&metrics).unwrap()).unwrap();
    assert_eq!(m["ari"], 1.0);

    // Inline embeddings next to a sidecar are refused.
    let inline = path(dir.path(), "inline.jsonl");
    secluster(&["synth", "--out", s(&inline), "--truth", s(&truth), "--events", "4", "--messages-per-event", "50"]);
    let o = secluster(&["detect", "--corpus", s(&inline), "--embeddings", s(&emb)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn eval_identical_files_and_universe_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let a = path(dir.path(), "a.json");
    let b = path(dir.path(), "b.json");
    fs::write(&a, r#"{"clusters":[["x","y"],["z"]]}"#).unwrap();
    fs::write(&b, r#"{"clusters":[["x"],["y","w"]]}"#).unwrap();
    let o = secluster(&["eval", "--pred", s(&a), "--truth", s(&a)]);
    assert!(o.status.success());
    let m: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!((m["ari"].as_f64(), m["ami"].as_f64(), m["nmi"].as_f64()), (Some(1.0), Some(1.0), Some(1.0)));
    let o = secluster(&["eval", "--pred", s(&a), "--truth", s(&b)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn eval_six_item_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let pred = path(dir.path(), "p.json");
    let truth = path(dir.path(), "t.json");
    fs::write(&pred, r#"{"clusters":[["a","b"],["c","d"],["e","f"]]}"#).unwrap();
    fs::write(&truth, r#"{"clusters":[["a","b","c"],["d","e","f"]]}"#).unwrap();
    let o = secluster(&["eval", "--pred", s(&pred), "--truth", s(&truth)]);
    let m: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((m["ari"].as_f64().unwrap() - 0.24242424242424243).abs() <= 1e-12);
    assert!((m["ami"].as_f64().unwrap() - 0.22504228319830885).abs() <= 1e-12);
    assert!((m["nmi"].as_f64().unwrap() - 0.5158037429793889).abs() <= 1e-12);
}

#[test]
fn synth_is_deterministic_and_rejects_zero_events() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let c = path(dir.path(), &format!("c{tag}.jsonl"));
        let t = path(dir.path(), &format!("t{tag}.json"));
        let o = secluster(&["synth", "--out", s(&c), "--truth", s(&t), "--events", "3", "--seed", "99"]);
        assert!(o.status.success());
        (fs::read(c).unwrap(), fs::read(t).unwrap())
    };
    assert_eq!(run("1"), run("2"));
    let o = secluster(&[
        "synth", "--out", s(&path(dir.path(), "x")), "--truth", s(&path(dir.path(), "y")), "--events", "0",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = path(dir.path(), "c.jsonl");
    let truth = path(dir.path(), "t.json");
    secluster(&["synth", "--out", s(&corpus), "--truth", s(&truth), "--events", "3", "--messages-per-event", "20"]);
    let config = path(dir.path(), "run.toml");
    fs::write(&config, "subgraph_size = 1\n").unwrap();
    let o = secluster(&["detect", "--corpus", s(&corpus), "--config", s(&config)]);
    assert_eq!(o.status.code(), Some(1), "n = 1 from the file is rejected");
    let o = secluster(&["detect", "--corpus", s(&corpus), "--config", s(&config), "--subgraph-size", "10"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    fs::write(&config, "no_such_key = 3\n").unwrap();
    let o = secluster(&["detect", "--corpus", s(&corpus), "--config", s(&config)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn blob_fixture_gives_two_events() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = path(dir.path(), "blobs.jsonl");
    let mut lines = String::new();
    for i in 0..16 {
        let blob = i / 8;
        let jitter = (i % 8) as f64 * 0.01;
        let e = if blob == 0 { [1.0, jitter, 0.0, 0.0] } else { [0.0, 0.0, 1.0, jitter] };
        lines.push_str(&format!(
            "{{\"id\":\"b{i}\",\"attributes\":[\"tag:#blob{blob}\"],\"embedding\":[{},{},{},{}]}}\n",
            e[0], e[1], e[2], e[3]
        ));
    }
    fs::write(&corpus, lines).unwrap();
    let out = path(dir.path(), "p.json");
    let report = path(dir.path(), "r.json");
    let o = secluster(&["detect", "--corpus", s(&corpus), "--out", s(&out), "--report", s(&report)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let found = clusters(&out);
    assert_eq!(found.len(), 2);
    assert!(found.iter().all(|c| c.len() == 8));
    let r: serde_json::Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert!(r["chosen_k"].as_u64().is_some());
}

#[test]
fn knn_trace_and_bench_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = path(dir.path(), "c.jsonl");
    let truth = path(dir.path(), "t.json");
    secluster(&["synth", "--out", s(&corpus), "--truth", s(&truth), "--events", "3", "--messages-per-event", "10"]);
    let o = secluster(&["knn-trace", "--corpus", s(&corpus)]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,se_1d,chosen"));
    assert_eq!(text.matches(",true").count(), 1);

    let o = secluster(&["bench", "--sizes", "120", "--n", "30"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("nodes,edges,mode,subgraph_size,scope,seconds,clusters,se_2d"));
    assert_eq!(text.lines().count(), 3);
}
