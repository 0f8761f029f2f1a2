//! Committed external-format inputs: RefactoringMiner output and build logs.

mod common;

use refagent_core::evaluation::{load_miner_records, parse_miner_json, RecordSource};
use refagent_core::source_model::LineRange;
use refagent_core::toolchain::{parse_compiler_log, parse_test_log, Severity};

use common::fixture;

#[test]
fn miner_fixture_records() {
    let path = fixture("miner/shop_refactorings.json");
    let (records, warnings) = parse_miner_json(&std::fs::read_to_string(&path).unwrap(), &path).unwrap();
    assert_eq!(records.len(), 6);
    assert_eq!(warnings.len(), 1);
    assert!(records.iter().all(|r| r.source == RecordSource::Miner));

    let got: Vec<(&str, &str, Option<&str>, Option<LineRange>)> = records
        .iter()
        .map(|r| {
            (
                r.refactoring_type.as_str(),
                r.class_fqn.as_str(),
                r.method_signature.as_deref(),
                r.line_range,
            )
        })
        .collect();
    assert_eq!(
        got,
        vec![
            (
                "Extract Method",
                "shop.PriceCalculator",
                Some("total(int,int,boolean,String)"),
                Some(LineRange::new(19, 31))
            ),
            (
                "Extract Attribute",
                "shop.PriceCalculator",
                None,
                Some(LineRange::new(4, 4))
            ),
            (
                "Change Attribute Access Modifier",
                "shop.Inventory",
                None,
                Some(LineRange::new(7, 7))
            ),
            (
                "Extract Method",
                "shop.Order",
                Some("total(boolean,String)"),
                Some(LineRange::new(30, 32))
            ),
            (
                "Rename Variable",
                "shop.Order",
                Some("total(boolean,String)"),
                Some(LineRange::new(35, 35))
            ),
            ("Rename Method", "shop.Order", Some("addLine(String,int)"), None),
        ]
    );
    assert_eq!(
        records[0].commit_id.as_deref(),
        Some("3f1c9e2a7b5d4e6f8a9b0c1d2e3f4a5b6c7d8e9f")
    );
    assert_eq!(
        records[5].commit_id.as_deref(),
        Some("9d04b7e1c2a3f4e5d6c7b8a9f0e1d2c3b4a5f6e7")
    );
}

#[test]
fn miner_empty_and_malformed() {
    let p = std::path::Path::new("x.json");
    let (r, w) = parse_miner_json(r#"{"commits":[{"sha1":"a","refactorings":[]}]}"#, p).unwrap();
    assert!(r.is_empty() && w.is_empty());
    assert!(parse_miner_json(r#"{"refactorings":[]}"#, p).is_err());
    assert!(load_miner_records(&fixture("miner/missing.json")).is_err());
}

#[test]
fn maven_compile_log() {
    let raw = std::fs::read_to_string(fixture("logs/maven_compile_failure.log")).unwrap();
    let d = parse_compiler_log(&raw);
    let summary: Vec<(String, u32, Severity, String)> = d
        .iter()
        .map(|d| (d.file.clone(), d.line, d.severity, d.message.clone()))
        .collect();
    assert_eq!(
        summary,
        vec![
            (
                "/work/shop/src/main/java/shop/Inventory.java".into(),
                3,
                Severity::Warning,
                "unused import: java.util.List".into()
            ),
            (
                "/work/shop/src/main/java/shop/PriceCalculator.java".into(),
                20,
                Severity::Error,
                "';' expected".into()
            ),
            (
                "/work/shop/src/main/java/shop/PriceCalculator.java".into(),
                31,
                Severity::Error,
                "cannot find symbol".into()
            ),
            (
                "/work/shop/src/main/java/shop/Order.java".into(),
                33,
                Severity::Error,
                "incompatible types: java.lang.String cannot be converted to int".into()
            ),
        ]
    );
}

#[test]
fn javac_log() {
    let raw = std::fs::read_to_string(fixture("logs/javac_failure.log")).unwrap();
    let d = parse_compiler_log(&raw);
    let errors: Vec<(&str, u32)> = d
        .iter()
        .filter(|d| d.severity == Severity::Error)
        .map(|d| (d.file.as_str(), d.line))
        .collect();
    assert_eq!(
        errors,
        vec![
            ("src/main/java/shop/PriceCalculator.java", 20),
            ("src/main/java/shop/Order.java", 33)
        ]
    );
    assert_eq!(d.iter().filter(|d| d.severity == Severity::Warning).count(), 1);
}

#[test]
fn surefire_2_log() {
    let raw = std::fs::read_to_string(fixture("logs/surefire2_failure.log")).unwrap();
    let o = parse_test_log(&raw).unwrap();
    assert_eq!((o.total, o.passed, o.failed, o.skipped), (7, 4, 2, 1));
    let ids: Vec<&str> = o.failures.iter().map(|f| f.test_id.as_str()).collect();
    assert_eq!(
        ids,
        [
            "shop.OrderTest#totalsLines",
            "shop.PriceCalculatorTest#largeOrderShipsFree"
        ]
    );
    assert!(o.failures[0].message.contains("expected:<17> but was:<18>"));
    assert!(!o.all_passed());
}

#[test]
fn surefire_3_log() {
    let raw = std::fs::read_to_string(fixture("logs/surefire3_failure.log")).unwrap();
    let o = parse_test_log(&raw).unwrap();
    assert_eq!((o.total, o.passed, o.failed, o.skipped), (4, 3, 1, 0));
    assert_eq!(o.failures[0].test_id, "shop.OrderTest#totalsLines");
    assert!(o.failures[0].trace_excerpt.contains("OrderTest.java:18"));
}
