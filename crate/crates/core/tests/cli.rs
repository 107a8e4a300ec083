mod common;

use std::path::Path;
use std::process::{Command, Output};

fn analyze(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_analyze"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn analyze")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fast_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("fast.toml");
    std::fs::write(
        &path,
        "[classify]\nfolds = 3\n[classify.linear]\nepochs = 5\n[classify.lstm]\nhidden = 4\nembed_dim = 4\nepochs = 1\npad_length = 12\n[network.layout]\niterations = 20\n",
    )
    .unwrap();
    path
}

#[test]
fn label_from_corpus_writes_lexicon_and_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let f = common::write_fixture(dir.path(), 200, 1);
    let out = dir.path().join("out");
    let o = analyze(&[
        "label", "--corpus", s(&f.corpus), "--annotations", s(&f.ann_a), s(&f.ann_b), "--out-dir", s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lex = std::fs::read_to_string(out.join("label/lexicon.tsv")).unwrap();
    assert!(lex.contains("prayforirma\tsolidarity"));
    assert!(!lex.contains("standwithpr"), "disputed tag must not enter the lexicon");
    let agreement: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("label/agreement.json")).unwrap()).unwrap();
    let kappa = agreement["agreement"]["kappa"].as_f64().unwrap();
    assert!(kappa > 0.8 && kappa < 1.0, "kappa {kappa}");
    assert!(out.join("label/manifest.json").is_file());
}

#[test]
fn kappa_gate_fails_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let f = common::write_fixture(dir.path(), 50, 1);
    let out = dir.path().join("out");
    let o = analyze(&[
        "label", "--corpus", s(&f.corpus), "--annotations", s(&f.ann_a), s(&f.ann_b), "--min-kappa", "0.99",
        "--out-dir", s(&out),
    ]);
    assert!(!o.status.success());
    // The report is still written.
    assert!(out.join("label/agreement.json").is_file());
    assert!(!out.join("label/labeled.jsonl").exists());
}

#[test]
fn downstream_stage_without_label_names_missing_stage() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = analyze(&["diffusion", "--class", "solidarity", "--threshold", "50", "--out-dir", s(&out)]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("label"), "{err}");
}

#[test]
fn unknown_subcommand_prints_usage() {
    let o = analyze(&["frobnicate"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn full_run_produces_every_stage_output() {
    let dir = tempfile::tempdir().unwrap();
    let f = common::write_fixture(dir.path(), 300, 2);
    let out = dir.path().join("out");
    let cfg = fast_config(dir.path());
    let o = analyze(&[
        "run", "--config", s(&cfg), "--corpus", s(&f.corpus), "--annotations", s(&f.ann_a), s(&f.ann_b),
        "--out-dir", s(&out), "--threads", "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for p in [
        "ingest/corpus.jsonl",
        "label/labeled.jsonl",
        "classify/summary.json",
        "classify/linear_tfidf_plus_bigram_with_emoji.json",
        "classify/lstm_without_emoji.bin",
        "emoji-stats/top_solidarity.csv",
        "geo/partition.json",
        "network/edges_solidarity_all.csv",
        "network/graph_solidarity_all.graphml",
        "network/graph_solidarity_all.svg",
        "diffusion/diffusion_solidarity_all.csv",
    ] {
        assert!(out.join(p).is_file(), "missing {p}");
    }
    for stage in ["ingest", "label", "classify", "emoji-stats", "geo", "network", "diffusion"] {
        assert!(out.join(stage).join("manifest.json").is_file(), "{stage} manifest");
    }

    // Downstream stages rerun on their own against the label output.
    let o = analyze(&[
        "diffusion", "--out-dir", s(&out), "--threshold", "1", "--region", "affected", "--tz-offset", "-04:00",
        "--sentiment", s(&f.sentiment),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("diffusion/diffusion_solidarity_affected.csv")).unwrap();
    assert!(csv.starts_with("emoji,"), "{csv}");
    let o = analyze(&["network", "--out-dir", s(&out), "--pair-mode", "occurrences", "--min-edge-weight", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}
