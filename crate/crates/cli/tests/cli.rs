use std::path::Path;
use std::process::{Command, Output};

fn semrob(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semrob")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(format!("{name}.json"));
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

fn small_sweep(dir: &Path) -> String {
    write_config(
        dir,
        "sweep",
        r#"{
            "name": "tiny",
            "graph": {"source": "synthetic", "n": 150, "structure": {"variant": "CSBM", "p": 0.04, "q": 0.01}},
            "k_values": [0.5],
            "seeds": 1,
            "test_nodes": 20,
            "classifiers": ["GCN", "LP"]
        }"#,
    )
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn sweep_writes_expected_layout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_sweep(dir.path());
    let out = dir.path().join("out");
    let o = semrob(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let root = out.join("tiny");
    for f in [
        "provenance.json",
        "bundle.json",
        "summary.csv",
        "summary.json",
        "aggregates.csv",
        "K0.5/GCN/l2-weak.csv",
        "K0.5/GCN/l2-weak.json",
        "K0.5/LP/l2-weak.csv",
        "r_over_l2-weak_Bdeg.svg",
    ] {
        assert!(root.join(f).is_file(), "missing {f}");
    }
}

#[test]
fn format_flag_limits_outputs_and_empty_summary_keeps_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bayes",
        r#"{"name": "b", "k_values": [1.0], "seeds": 1, "test_nodes": 50}"#,
    );
    let out = dir.path().join("out");
    let o = semrob(&["bayes-table", "--config", &cfg, "--out", out.to_str().unwrap(), "--formats", "csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let root = out.join("b");
    assert!(root.join("bayes_table.csv").is_file());
    assert!(!root.join("bayes_table.json").exists());
    assert!(!root.join("bayes_accuracy.svg").exists());
    let summary = std::fs::read_to_string(root.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1);
    assert!(summary.starts_with("k,"));
}

#[test]
fn emit_reproduces_tables_from_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_sweep(dir.path());
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    assert_eq!(code(&semrob(&["sweep", "--config", &cfg, "--out", first.to_str().unwrap()])), 0);
    let bundle = first.join("tiny/bundle.json");
    let o = semrob(&["emit", "--input", bundle.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["summary.csv", "aggregates.csv", "K0.5/GCN/l2-weak.csv", "bundle.json"] {
        assert_eq!(
            std::fs::read(first.join("tiny").join(f)).unwrap(),
            std::fs::read(second.join("tiny").join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn gen_saves_one_graph_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "gen",
        r#"{"name": "g", "graph": {"source": "synthetic", "n": 60, "structure": {"variant": "CSBM", "p": 0.1, "q": 0.02}},
            "k_values": [0.5, 2.0], "seeds": 2}"#,
    );
    let out = dir.path().join("out");
    let o = semrob(&["gen", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let graphs = std::fs::read_dir(out.join("g/graphs")).unwrap().count();
    assert_eq!(graphs, 4);
}

#[test]
fn invalid_configs_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad", r#"{"name": "x", "seeds": 0}"#);
    let out = dir.path().join("out");
    assert_eq!(code(&semrob(&["sweep", "--config", &bad, "--out", out.to_str().unwrap()])), 2);
    let unknown = write_config(dir.path(), "unknown", r#"{"name": "x", "colour": 3}"#);
    assert_eq!(code(&semrob(&["sweep", "--config", &unknown, "--out", out.to_str().unwrap()])), 2);
    let missing = dir.path().join("none.json");
    assert_eq!(code(&semrob(&["sweep", "--config", missing.to_str().unwrap()])), 2);
    assert_eq!(code(&semrob(&["sweep", "--no-such-flag"])), 2);
    assert!(!out.exists());
}

#[test]
fn check_flag_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let good = write_config(
        dir.path(),
        "good",
        r#"{"name": "good", "k_values": [5.0], "seeds": 2, "test_nodes": 500}"#,
    );
    let o = semrob(&["bayes-table", "--config", &good, "--out", out.to_str().unwrap(), "--check"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{stdout}");
    assert!(stdout.contains("PASS bayes"));

    // Equal edge probabilities carry no class information, so Bayes accuracy
    // at K = 0.1 stays near chance.
    let blind = write_config(
        dir.path(),
        "blind",
        r#"{"name": "blind", "graph": {"source": "synthetic", "n": 1000, "structure": {"variant": "CSBM", "p": 0.004, "q": 0.004}},
            "k_values": [0.1], "seeds": 1, "test_nodes": 300}"#,
    );
    let o = semrob(&["bayes-table", "--config", &blind, "--out", out.to_str().unwrap(), "--check"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 3, "{stdout}");
    assert!(stdout.contains("FAIL bayes"));
}
