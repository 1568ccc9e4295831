use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn pprec(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pprec"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn synth_dataset(dir: &Path) -> PathBuf {
    let out = pprec(
        dir,
        &["synth", "--out", "likes.tsv", "--seed", "5", "--users", "120", "--items", "60", "--mean-likes", "15", "--min-likes", "4", "--genres", "4"],
    );
    ok(&out);
    dir.join("likes.tsv")
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn ingest_movielens_writes_canonical_pairs() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("ratings.csv"),
        "userId,movieId,rating,timestamp\n1,31,2.5,1260759144\n1,1029,3.0,1260759179\n2,31,4.0,1260759185\n1,31,5.0,1260759200\n",
    )
    .unwrap();
    let stdout = ok(&pprec(dir.path(), &["ingest", "--format", "movielens-csv", "--in", "ratings.csv", "--out", "likes.tsv"]));
    assert!(stdout.contains("users=2 items=2 likes=3"), "{stdout}");
    // Canonical order: re-ingesting reproduces the same dense ids.
    assert_eq!(read(dir.path().join("likes.tsv")), "1\t31\n2\t31\n1\t1029\n");
}

#[test]
fn ingest_subsample_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    synth_dataset(dir.path());
    let args = |out: &'static str| {
        ["ingest", "--format", "pairs-tsv", "--in", "likes.tsv", "--out", out, "--max-users", "40", "--sample-seed", "7", "--max-items", "30"]
    };
    let first = ok(&pprec(dir.path(), &args("a.tsv")));
    ok(&pprec(dir.path(), &args("b.tsv")));
    assert!(first.contains("users=40"), "{first}");
    assert_eq!(read(dir.path().join("a.tsv")), read(dir.path().join("b.tsv")));
    ok(&pprec(dir.path(), &["ingest", "--format", "pairs-tsv", "--in", "likes.tsv", "--out", "c.tsv", "--max-users", "40", "--sample-seed", "8"]));
    assert_ne!(read(dir.path().join("a.tsv")), read(dir.path().join("c.tsv")));
}

#[test]
fn missing_input_exits_2_with_path() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["ingest", "--format", "pairs-tsv", "--in", "absent.tsv", "--out", "x.tsv"],
        vec!["run", "--data", "absent.tsv", "--k", "5"],
    ] {
        let out = pprec(dir.path(), &args);
        assert_eq!(out.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&out.stderr).contains("absent.tsv"));
    }
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    synth_dataset(dir.path());
    let cases: [&[&str]; 7] = [
        &["run", "--data", "likes.tsv"],
        &["run", "--data", "likes.tsv", "--k", "5", "--k-frac", "0.2"],
        &["run", "--data", "likes.tsv", "--k", "5", "--mode", "cosine"],
        &["run", "--data", "likes.tsv", "--k-frac", "1.5"],
        &["run", "--data", "likes.tsv", "--k", "5", "--seeds", "9..2"],
        &["ingest", "--format", "xml", "--in", "likes.tsv", "--out", "x.tsv"],
        &["frobnicate"],
    ];
    for args in cases {
        assert_eq!(pprec(dir.path(), args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn malformed_input_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.csv"), "userId,movieId,rating,timestamp\nabc,,\n").unwrap();
    let out = pprec(dir.path(), &["ingest", "--format", "movielens-csv", "--in", "bad.csv", "--out", "x.tsv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn run_writes_report_config_echo_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    synth_dataset(dir.path());
    std::fs::write(dir.path().join("exp.cfg"), "# shared settings\nn = 5\nseeds = 1..3\nrho = 0.4\n").unwrap();
    let stdout = ok(&pprec(
        dir.path(),
        &["run", "--config", "exp.cfg", "--data", "likes.tsv", "--k-frac", "0.3", "--n", "3", "--mode", "paper-literal,union-normalized", "--emit-roundlog", "--out-dir", "out"],
    ));
    assert!(stdout.contains("union-normalized"));
    let out = dir.path().join("out");

    let config: Value = serde_json::from_str(&read(out.join("config.json"))).unwrap();
    assert_eq!(config["settings"]["n"]["value"], "3");
    assert_eq!(config["settings"]["n"]["source"], "flag");
    assert_eq!(config["settings"]["rho"]["source"], "config");
    assert_eq!(config["settings"]["ratio"]["source"], "default");
    assert_eq!(config["experiment"]["seeds"], serde_json::json!([1, 2, 3]));

    let (header, rows) = csv_rows(&read(out.join("report.csv")));
    assert_eq!(rows.len(), 3);
    let (mode, n, k) = (column(&header, "mode"), column(&header, "n"), column(&header, "k"));
    assert_eq!(rows[0][mode], "exact");
    assert_eq!(rows[1][mode], "paper-literal");
    assert_eq!(rows[2][mode], "union-normalized");
    assert!(rows.iter().all(|r| r[n] == "3"));
    assert_eq!(rows[1][k], "36");
    for c in ["coverage@0.03", "bound@0.04", "coverage@0.05"] {
        column(&header, c);
    }

    for seed in 1..=3 {
        let log = read(out.join(format!("roundlogs/seed{seed}_k36.jsonl")));
        assert_eq!(log.lines().count(), 36);
        let first: Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
        let keys: Vec<&str> = first.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, ["round", "contributor", "deliverer", "hops", "items"]);
    }
    assert!(out.join("ae_histograms/union-normalized_k36.csv").is_file());

    let manifest: Value = serde_json::from_str(&read(out.join("manifest.json"))).unwrap();
    let listed: Vec<&str> = manifest["artifacts"].as_array().unwrap().iter().map(|a| a["path"].as_str().unwrap()).collect();
    for path in &listed {
        assert!(out.join(path).is_file(), "{path}");
    }
    assert!(listed.contains(&"report.json") && listed.contains(&"config.json"));
}

#[test]
fn redacted_roundlog_has_no_contributor() {
    let dir = tempfile::tempdir().unwrap();
    synth_dataset(dir.path());
    ok(&pprec(dir.path(), &["run", "--data", "likes.tsv", "--k", "20", "--seeds", "4", "--emit-roundlog", "--redact-roundlog", "--out-dir", "out"]));
    let log = read(dir.path().join("out/roundlogs/seed4_k20.jsonl"));
    assert_eq!(log.lines().count(), 20);
    assert!(!log.contains("contributor"));
}

fn without_timing(csv: &str) -> Vec<Vec<String>> {
    let (header, rows) = csv_rows(csv);
    let t = column(&header, "sim_time_ms");
    rows.into_iter()
        .map(|mut r| {
            r.remove(t);
            r
        })
        .collect()
}

#[test]
fn sweep_rows_and_repeatability() {
    let dir = tempfile::tempdir().unwrap();
    synth_dataset(dir.path());
    let args = |out: &'static str| {
        ["sweep", "--data", "likes.tsv", "--seeds", "1,2", "--mode", "union-normalized,paper-literal", "--alphas", "0.03,0.04,0.05", "--out-dir", out]
    };
    ok(&pprec(dir.path(), &args("a")));
    let mut single = vec!["--threads", "1"];
    single.extend(args("b"));
    ok(&pprec(dir.path(), &single));
    let a = read(dir.path().join("a/report.csv"));
    let (header, rows) = csv_rows(&a);
    let mode = column(&header, "mode");
    assert_eq!(rows.iter().filter(|r| r[mode] == "union-normalized").count(), 10);
    assert_eq!(rows.iter().filter(|r| r[mode] == "paper-literal").count(), 10);
    assert_eq!(without_timing(&a), without_timing(&read(dir.path().join("b/report.csv"))));
}

#[test]
fn sweep_config_k_list_overridden_by_flag() {
    let dir = tempfile::tempdir().unwrap();
    synth_dataset(dir.path());
    std::fs::write(dir.path().join("s.cfg"), "ks = 5, 10\nseeds = 1\n").unwrap();
    ok(&pprec(dir.path(), &["sweep", "--config", "s.cfg", "--data", "likes.tsv", "--out-dir", "cfgk"]));
    let (_, rows) = csv_rows(&read(dir.path().join("cfgk/report.csv")));
    assert_eq!(rows.len(), 3);
    ok(&pprec(dir.path(), &["sweep", "--config", "s.cfg", "--data", "likes.tsv", "--k-fracs", "0.5", "--out-dir", "flagk"]));
    let (_, rows) = csv_rows(&read(dir.path().join("flagk/report.csv")));
    assert_eq!(rows.len(), 2);
}

#[test]
fn rho_file_must_cover_every_user() {
    let dir = tempfile::tempdir().unwrap();
    synth_dataset(dir.path());
    std::fs::write(dir.path().join("rho.txt"), "0.5\n0.5\n").unwrap();
    let out = pprec(dir.path(), &["run", "--data", "likes.tsv", "--k", "10", "--rho-file", "rho.txt"]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(dir.path().join("rho.txt"), "0.3\n".repeat(120)).unwrap();
    ok(&pprec(dir.path(), &["run", "--data", "likes.tsv", "--k", "10", "--seeds", "1", "--rho-file", "rho.txt", "--out-dir", "r"]));
}
