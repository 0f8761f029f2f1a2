//! The `refagent` binary: exit codes, outputs and config precedence.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use refagent_core::toolchain::tree_digest;
use serde_json::Value;

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .unwrap()
}

fn copy_dir(src: &Path, dst: &Path) {
    fs::create_dir_all(dst).unwrap();
    for entry in fs::read_dir(src).unwrap() {
        let entry = entry.unwrap();
        if entry.file_name() == ".refagent" {
            continue;
        }
        let target = dst.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &target);
        } else {
            fs::copy(entry.path(), &target).unwrap();
        }
    }
}

fn stage_shop() -> (tempfile::TempDir, PathBuf) {
    let tmp = tempfile::tempdir().unwrap();
    copy_dir(&repo_root().join("fixtures/toolchain"), &tmp.path().join("toolchain"));
    let ws = tmp.path().join("projects/shop");
    copy_dir(&repo_root().join("fixtures/projects/shop"), &ws);
    (tmp, ws)
}

fn refagent<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_refagent"))
        .args(args)
        .env_remove("REFAGENT_API_KEY")
        .output()
        .unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&refagent(["frobnicate"])), 2);
    assert_eq!(code(&refagent::<[&str; 0], &str>([])), 2);
    assert_eq!(code(&refagent(["refactor", ".", "--no-such-flag"])), 2);
    assert_eq!(
        code(&refagent([
            "evaluate",
            "align",
            "--ours",
            "a",
            "--theirs",
            "b",
            "--scenario",
            "3"
        ])),
        2
    );
    assert_eq!(
        code(&refagent(["report", "j", "--out", "o", "--range-rule", "jaccard:2"])),
        2
    );
    assert_eq!(code(&refagent(["--help"])), 0);
}

#[test]
fn analyze_writes_tables() {
    let (_t, ws) = stage_shop();
    let out = ws.join("analysis");
    let o = refagent(["analyze", p(&ws), "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let smells = fs::read_to_string(out.join("smells.csv")).unwrap();
    assert!(smells.contains("shop.Inventory"));
    let metrics = fs::read_to_string(out.join("class_metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 4, "{metrics}");
    let design: Value = serde_json::from_str(&fs::read_to_string(out.join("design.json")).unwrap()).unwrap();
    assert!(design.is_object());
}

#[test]
fn graph_prints_json() {
    let (_t, ws) = stage_shop();
    let o = refagent(["graph", p(&ws), "--target", "shop.PriceCalculator"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("shop.Order"));
    let o = refagent(["graph", p(&ws), "--target", "shop.Nope"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn dry_run_keeps_digest() {
    let (_t, ws) = stage_shop();
    let before = tree_digest(&ws).unwrap();
    let o = refagent(["refactor", p(&ws), "--dry-run"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("SKIPPED"));
    assert_eq!(tree_digest(&ws).unwrap(), before);
    assert!(ws.join(".refagent/journal/manifest.json").exists());
}

#[test]
fn config_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = |extra: &[&str]| {
        let mut args = vec!["config", p(dir.path())];
        args.extend(extra.iter().copied());
        let o = refagent(args);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        stdout_json(&o)
    };

    let defaults = cfg(&[]);
    assert_eq!(defaults["seed"], 0);
    assert_eq!(defaults["token_budget"], 4096);
    assert_eq!(defaults["backend"]["temperature"], 0.7);

    fs::write(
        dir.path().join("refagent.toml"),
        "seed = 7\ntoken_budget = 1000\n[backend]\ntemperature = 0.2\n",
    )
    .unwrap();
    let file = cfg(&[]);
    assert_eq!(file["seed"], 7);
    assert_eq!(file["token_budget"], 1000);
    assert_eq!(file["backend"]["temperature"], 0.2);
    assert_eq!(file["max_compile_iters"], 20);

    let flags = cfg(&["--seed", "9", "--temperature", "0.5", "--no-depgraph"]);
    assert_eq!(flags["seed"], 9);
    assert_eq!(flags["token_budget"], 1000);
    assert_eq!(flags["backend"]["temperature"], 0.5);
    assert_eq!(flags["ablation"]["depgraph"], false);
    assert_eq!(flags["ablation"]["context"], true);

    let o = refagent(["config", p(dir.path()), "--max-compile-iters", "21"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn refactor_report_and_align() {
    let (_t, ws) = stage_shop();
    let journal = ws.join(".refagent/journal");
    let out = ws.join("reports");
    let o = refagent(["report", p(&journal), "--out", p(&out)]);
    assert_eq!(code(&o), 1, "empty journal must be a domain error");

    let o = refagent(["refactor", p(&ws), "--seed", "0"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.matches("\tCOMMITTED\t").count(), 2, "{text}");
    assert_eq!(text.matches("\tREVERTED\t").count(), 1, "{text}");

    let miner = repo_root().join("fixtures/miner/shop_refactorings.json");
    let o = refagent(["report", p(&journal), "--out", p(&out), "--theirs", p(&miner)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "align_s1.csv",
        "align_s2.csv",
        "srr.csv",
        "qmood_qi.csv",
        "passk.csv",
        "report.json",
    ] {
        assert!(out.join(f).is_file(), "{f}");
    }

    let o = refagent([
        "evaluate",
        "align",
        "--ours",
        p(&journal),
        "--theirs",
        p(&miner),
        "--scenario",
        "2",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = stdout_json(&o);
    assert_eq!(r["scenario"], 2);
    assert_eq!(r["fn"].as_u64().unwrap() + r["tp"].as_u64().unwrap(), 6);
}

#[test]
fn unknown_class_is_domain_error() {
    let (_t, ws) = stage_shop();
    let o = refagent(["refactor", p(&ws), "--class", "shop.Missing"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn wilcoxon_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("pairs.csv");
    fs::write(&csv, "before,after\n1,3\n2,5\n3,4\n4,9\n9,5\n").unwrap();
    let o = refagent(["evaluate", "wilcoxon", p(&csv)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = stdout_json(&o);
    // differences 2, 3, 1, 5, -4: W- = 4, and 7 of 32 sign patterns reach it
    assert_eq!(r["statistic"], 4.0);
    assert!((r["p_value"].as_f64().unwrap() - 14.0 / 32.0).abs() < 1e-12);

    fs::write(&csv, "1,1\n2,2\n").unwrap();
    assert_eq!(code(&refagent(["evaluate", "wilcoxon", p(&csv)])), 1);
}

#[test]
fn quality_of_identical_versions_is_flat() {
    let (_t, ws) = stage_shop();
    let o = refagent(["evaluate", "quality", "--before", p(&ws), "--after", p(&ws)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("Reusability") || text.contains("reusability"), "{text}");
}
