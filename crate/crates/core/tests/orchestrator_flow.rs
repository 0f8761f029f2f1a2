//! End-to-end sessions on the staged shop project with scripted backends.

mod common;

use std::fs;
use std::path::Path;

use refagent_core::config::EngineConfig;
use refagent_core::evaluation::{emit_reports, EvalError, ReportOptions};
use refagent_core::llm::backend_from_config;
use refagent_core::orchestrator::{run_project, run_single_agent, OrchestratorError, Phase, ProjectReport, RunOptions};
use refagent_core::toolchain::tree_digest;

use common::{fixture, journal_contents, stage_project};

fn run(ws: &Path, cfg: &EngineConfig, only: Option<&str>, dry_run: bool) -> Result<ProjectReport, OrchestratorError> {
    let backend = backend_from_config(&cfg.backend).unwrap();
    run_project(
        ws,
        cfg,
        backend.as_ref(),
        &ws.join(".refagent/journal"),
        only,
        RunOptions { dry_run },
    )
}

fn with_playbook(ws: &Path, playbook: &str) -> EngineConfig {
    let mut cfg = EngineConfig::load(ws).unwrap();
    cfg.backend.playbook_path = Some(fixture(playbook));
    cfg
}

#[test]
fn shop_run_is_deterministic() {
    let (_a, ws_a) = stage_project("shop");
    let (_b, ws_b) = stage_project("shop");
    let ra = run(&ws_a, &EngineConfig::load(&ws_a).unwrap(), None, false).unwrap();
    let rb = run(&ws_b, &EngineConfig::load(&ws_b).unwrap(), None, false).unwrap();

    let verdicts: Vec<(&str, &str)> = ra.sessions.iter().map(|s| (s.fqn.as_str(), s.verdict.name())).collect();
    let mut sorted = verdicts.clone();
    sorted.sort();
    assert_eq!(
        sorted,
        [
            ("shop.Inventory", "COMMITTED"),
            ("shop.Order", "REVERTED"),
            ("shop.PriceCalculator", "COMMITTED"),
        ]
    );
    assert_eq!(ra.tallies[&Phase::Committed], 2);
    assert_eq!(ra.tallies[&Phase::Reverted], 1);
    let calc = ra.sessions.iter().find(|s| s.fqn == "shop.PriceCalculator").unwrap();
    assert_eq!(calc.compile_attempts, 2);
    assert_eq!(ra.order, rb.order);

    let ja = journal_contents(&ws_a.join(".refagent/journal"));
    let jb = journal_contents(&ws_b.join(".refagent/journal"));
    assert_eq!(ja.keys().collect::<Vec<_>>(), jb.keys().collect::<Vec<_>>());
    for (k, v) in &ja {
        assert_eq!(v, &jb[k], "journal file {k} differs");
    }
    assert!(ja.values().all(|t| !t.contains(&*ws_a.to_string_lossy())));
}

#[test]
fn reverted_session_restores_snapshot() {
    let (_t, ws) = stage_project("shop");
    let before = fs::read(ws.join("src/main/java/shop/Order.java")).unwrap();
    let r = run(&ws, &EngineConfig::load(&ws).unwrap(), Some("shop.Order"), false).unwrap();
    let s = &r.sessions[0];
    assert_eq!(s.verdict, Phase::Reverted);
    assert_eq!(s.snapshot_digest, s.final_digest);
    assert_eq!(fs::read(ws.join("src/main/java/shop/Order.java")).unwrap(), before);
    assert!(
        !ws.join("src/test/java/shop/generated").exists()
            || fs::read_dir(ws.join("src/test/java/shop/generated"))
                .unwrap()
                .next()
                .is_none()
    );
}

#[test]
fn dry_run_leaves_workspace_untouched() {
    let (_t, ws) = stage_project("shop");
    let digest = tree_digest(&ws).unwrap();
    let r = run(&ws, &EngineConfig::load(&ws).unwrap(), None, true).unwrap();
    assert!(r
        .sessions
        .iter()
        .all(|s| s.verdict == Phase::Skipped && s.reason == "dry run"));
    assert_eq!(tree_digest(&ws).unwrap(), digest);
    assert!(ws.join(".refagent/journal/shop.Inventory/plan.json").exists());
}

#[test]
fn failing_baseline_aborts_before_any_session() {
    let (_t, ws) = stage_project("shop");
    let test = ws.join("src/test/java/shop/InventoryTest.java");
    let text = fs::read_to_string(&test).unwrap();
    fs::write(&test, text.replacen("assertEquals(", "assertEquals(1 + ", 1)).unwrap();
    let err = run(&ws, &EngineConfig::load(&ws).unwrap(), None, false).unwrap_err();
    assert!(matches!(err, OrchestratorError::BaselineFailure { .. }), "{err}");
    assert!(!ws.join(".refagent/journal/shop.Inventory").exists());
}

#[test]
fn compile_cap_reverts() {
    let (_t, ws) = stage_project("shop");
    let cfg = with_playbook(&ws, "playbooks/always_broken.json");
    let digest = tree_digest(&ws).unwrap();
    let r = run(&ws, &cfg, Some("shop.Inventory"), false).unwrap();
    let s = &r.sessions[0];
    assert_eq!(
        (s.verdict, s.compile_attempts, s.test_attempts),
        (Phase::Reverted, 20, 0)
    );
    assert_eq!(s.final_digest, s.snapshot_digest);
    assert_eq!(tree_digest(&ws).unwrap(), digest);
}

#[test]
fn test_cap_reverts() {
    let (_t, ws) = stage_project("shop");
    let cfg = with_playbook(&ws, "playbooks/never_passing.json");
    let digest = tree_digest(&ws).unwrap();
    let r = run(&ws, &cfg, Some("shop.Inventory"), false).unwrap();
    let s = &r.sessions[0];
    assert_eq!((s.verdict, s.test_attempts), (Phase::Reverted, 20));
    assert_eq!(s.final_digest, s.snapshot_digest);
    assert_eq!(tree_digest(&ws).unwrap(), digest);
}

#[test]
fn lower_caps_are_honoured() {
    let (_t, ws) = stage_project("shop");
    let mut cfg = with_playbook(&ws, "playbooks/always_broken.json");
    cfg.max_compile_iters = 3;
    let r = run(&ws, &cfg, Some("shop.Inventory"), false).unwrap();
    assert_eq!(r.sessions[0].compile_attempts, 3);
    assert_eq!(r.sessions[0].verdict, Phase::Reverted);
}

#[test]
fn oversized_target_is_skipped() {
    let (_t, ws) = stage_project("shop");
    let path = ws.join("src/main/java/shop/Inventory.java");
    let mut text = fs::read_to_string(&path).unwrap();
    text.push_str(&format!("// {}\n", "x".repeat(2000)));
    fs::write(&path, text).unwrap();
    let digest = tree_digest(&ws).unwrap();
    let mut cfg = EngineConfig::load(&ws).unwrap();
    cfg.token_budget = 256;
    let r = run(&ws, &cfg, Some("shop.Inventory"), false).unwrap();
    assert_eq!(r.sessions[0].verdict, Phase::Skipped);
    assert!(r.sessions[0].reason.contains("budget"), "{}", r.sessions[0].reason);
    assert_eq!(tree_digest(&ws).unwrap(), digest);
}

#[test]
fn unknown_class_is_an_error() {
    let (_t, ws) = stage_project("shop");
    let err = run(&ws, &EngineConfig::load(&ws).unwrap(), Some("shop.Missing"), false).unwrap_err();
    assert!(matches!(err, OrchestratorError::UnknownClass(_)), "{err}");
}

#[test]
fn single_agent_baseline_reverts_every_candidate() {
    let (_t, ws) = stage_project("shop");
    let cfg = with_playbook(&ws, "playbooks/never_passing.json");
    let backend = backend_from_config(&cfg.backend).unwrap();
    let digest = tree_digest(&ws).unwrap();
    let journal = ws.join(".refagent/journal");
    let r = run_single_agent(&ws, "shop.Inventory", &cfg, backend.as_ref(), 3, &journal).unwrap();
    assert_eq!(r.verdicts, [false, false, false]);
    assert_eq!(tree_digest(&ws).unwrap(), digest);
    assert!(journal.join("single_agent/shop.Inventory.json").exists());
}

#[test]
fn reports_are_reproducible() {
    let (_t, ws) = stage_project("shop");
    let journal = ws.join(".refagent/journal");
    let out = ws.join("out");
    assert!(matches!(
        emit_reports(&journal, &out, &ReportOptions::default()),
        Err(EvalError::IncompleteJournal(_))
    ));

    run(&ws, &EngineConfig::load(&ws).unwrap(), None, false).unwrap();
    let theirs = refagent_core::evaluation::load_miner_records(&fixture("miner/shop_refactorings.json")).unwrap();
    let opts = ReportOptions {
        theirs: Some(theirs),
        range_rule: None,
    };
    let files = emit_reports(&journal, &out, &opts).unwrap();
    let names: Vec<String> = files
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    for want in [
        "align_s1.csv",
        "align_s2.csv",
        "srr.csv",
        "qmood_qi.csv",
        "passk.csv",
        "report.json",
    ] {
        assert!(names.iter().any(|n| n == want), "{want} missing from {names:?}");
    }
    let first: Vec<Vec<u8>> = files.iter().map(|p| fs::read(p).unwrap()).collect();
    let again = emit_reports(&journal, &out, &opts).unwrap();
    let second: Vec<Vec<u8>> = again.iter().map(|p| fs::read(p).unwrap()).collect();
    assert_eq!(first, second);
}
