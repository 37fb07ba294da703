mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::*;

fn cli(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_structxfer"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&cli(&[], dir.path())), 1);
    assert_eq!(code(&cli(&["walk", "--graph", "x"], dir.path())), 1);
    assert_eq!(code(&cli(&["--help"], dir.path())), 0);
    std::fs::write(dir.path().join("g.edges"), "a b\n").unwrap();
    let out = cli(
        &["walk", "--graph", "g.edges", "--out", "w.txt", "--p", "0"],
        dir.path(),
    );
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("p must be positive"));
    assert_eq!(
        code(&cli(
            &["pipeline", "--config", "run.toml", "--from-stage", "nope"],
            dir.path()
        )),
        1
    );
}

#[test]
fn validate_lists_every_problem() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bad.toml"),
        "[source_walk]\np = 0.0\n[embed]\ndim = 0\n",
    )
    .unwrap();
    let out = cli(&["validate", "--config", "bad.toml"], dir.path());
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    for needle in ["p must be positive", "dim must be >= 1", "target_edges is required"] {
        assert!(err.contains(needle), "{needle} missing from {err}");
    }
}

#[test]
fn stage_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&cli(
            &["walk", "--graph", "missing.edges", "--out", "w.txt"],
            dir.path()
        )),
        2
    );
    std::fs::write(dir.path().join("g.edges"), "a b -1\n").unwrap();
    assert_eq!(code(&cli(&["diagnose", "--graph", "g.edges"], dir.path())), 2);
}

#[test]
fn subcommands_chain() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_pipeline(dir.path(), 3);
    std::fs::write(dir.path().join("run.toml"), cfg.to_toml()).unwrap();
    let ok = |args: &[&str]| {
        let out = cli(args, dir.path());
        assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };
    assert!(ok(&["validate", "--config", "run.toml"]).contains("ok"));
    let table = ok(&["pipeline", "--config", "run.toml"]);
    assert!(table.contains("Micro-F1") && table.contains("90%"));
    assert!(dir.path().join("out/manifest.json").exists());
    ok(&[
        "pipeline",
        "--config",
        "run.toml",
        "--from-stage",
        "embed",
        "--threads",
        "2",
    ]);

    ok(&[
        "walk",
        "--graph",
        "target.edges",
        "--out",
        "w.txt",
        "--length",
        "10",
        "--walks-per-node",
        "2",
        "--p",
        "0.5",
    ]);
    ok(&[
        "coarsen",
        "--source",
        "source.edges",
        "--target",
        "target.edges",
        "--out",
        "sg.txt",
    ]);
    ok(&[
        "transfer",
        "--source",
        "source.edges",
        "--target",
        "target.edges",
        "--reweighted",
        "rw.edges",
        "--walks",
        "tw.txt",
        "--length",
        "10",
        "--walks-per-node",
        "2",
    ]);
    ok(&[
        "embed",
        "--graph",
        "target.edges",
        "--walks",
        "tw.txt",
        "--out",
        "emb.txt",
        "--dim",
        "8",
        "--epochs",
        "1",
    ]);
    let report = ok(&[
        "eval",
        "--graph",
        "target.edges",
        "--labels",
        "target.labels",
        "--embeddings",
        "emb.txt",
        "--repeats",
        "2",
        "--fractions",
        "0.5,0.7",
        "--json",
        "r.json",
    ]);
    assert!(report.contains("50%") && report.contains("70%"));
    assert!(dir.path().join("r.json").exists());
    let fit = ok(&[
        "diagnose",
        "--graph",
        "source.edges",
        "--walks",
        "out/source_walks.txt",
        "--csv",
        "fit.csv",
    ]);
    assert!(fit.contains("slope"));
    assert!(std::fs::read_to_string(dir.path().join("fit.csv"))
        .unwrap()
        .starts_with("value,count,ccdf,in_fit"));
}
