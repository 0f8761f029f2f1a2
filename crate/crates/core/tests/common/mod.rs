//! Shared helpers for the integration tests: fixture staging, journal
//! normalization, a random class generator with metric oracles computed
//! from the generator's own description, and brute-force statistics.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use proptest::prelude::*;
use serde_json::Value;

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .unwrap()
}

pub fn fixture(rel: &str) -> PathBuf {
    repo_root().join("fixtures").join(rel)
}

pub fn copy_dir(src: &Path, dst: &Path) {
    for entry in walkdir::WalkDir::new(src) {
        let entry = entry.unwrap();
        let rel = entry.path().strip_prefix(src).unwrap();
        if rel.components().any(|c| c.as_os_str() == ".refagent") {
            continue;
        }
        let target = dst.join(rel);
        if entry.file_type().is_dir() {
            fs::create_dir_all(&target).unwrap();
        } else {
            fs::copy(entry.path(), &target).unwrap();
        }
    }
}

/// Copies the stand-in toolchain and a fixture project side by side into a
/// fresh directory, matching the relative tool paths in the project config.
pub fn stage_project(name: &str) -> (tempfile::TempDir, PathBuf) {
    let tmp = tempfile::tempdir().unwrap();
    copy_dir(&fixture("toolchain"), &tmp.path().join("toolchain"));
    let ws = tmp.path().join("projects").join(name);
    copy_dir(&fixture(&format!("projects/{name}")), &ws);
    (tmp, ws)
}

const VOLATILE: &[&str] = &["timestamp", "started_at", "finished_at"];

/// Removes wall-clock fields from a journal document.
pub fn strip_volatile(v: &mut Value) {
    match v {
        Value::Object(map) => {
            for k in VOLATILE {
                map.remove(*k);
            }
            for child in map.values_mut() {
                strip_volatile(child);
            }
        }
        Value::Array(items) => items.iter_mut().for_each(strip_volatile),
        _ => {}
    }
}

/// Journal files keyed by relative path, JSON documents normalized.
pub fn journal_contents(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.unwrap();
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(dir).unwrap().to_string_lossy().into_owned();
        let text = fs::read_to_string(entry.path()).unwrap();
        let text = if rel.ends_with(".json") {
            let mut v: Value = serde_json::from_str(&text).unwrap();
            strip_volatile(&mut v);
            serde_json::to_string_pretty(&v).unwrap()
        } else {
            text
        };
        out.insert(rel, text);
    }
    out
}

// --------------------------------------------------------- class generator

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ty {
    Int,
    Bool,
    Str,
    IntArr,
    List,
    Class(usize),
}

impl Ty {
    fn java(self) -> String {
        match self {
            Ty::Int => "int".into(),
            Ty::Bool => "boolean".into(),
            Ty::Str => "String".into(),
            Ty::IntArr => "int[]".into(),
            Ty::List => "List<String>".into(),
            Ty::Class(i) => format!("C{i}"),
        }
    }

    /// Erased simple name as it appears in signatures.
    pub fn display(self) -> String {
        match self {
            Ty::List => "List".into(),
            other => other.java(),
        }
    }

    fn default_value(self) -> &'static str {
        match self {
            Ty::Int => "0",
            Ty::Bool => "false",
            Ty::Str => "\"\"",
            _ => "null",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vis {
    Public,
    Protected,
    Private,
    Package,
}

impl Vis {
    fn keyword(self) -> &'static str {
        match self {
            Vis::Public => "public ",
            Vis::Protected => "protected ",
            Vis::Private => "private ",
            Vis::Package => "",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FieldSpec {
    pub vis: Vis,
    pub ty: Ty,
}

#[derive(Debug, Clone)]
pub struct MethodSpec {
    pub name: usize,
    pub vis: Vis,
    pub is_static: bool,
    pub params: Vec<Ty>,
    pub ret: Option<Ty>,
    pub ifs: u32,
    pub loops: u32,
    pub ands: u32,
    pub ternaries: u32,
    pub cases: u32,
}

impl MethodSpec {
    pub fn signature(&self) -> String {
        format!(
            "m{}({})",
            self.name,
            self.params.iter().map(|t| t.display()).collect::<Vec<_>>().join(",")
        )
    }

    /// Decision points are exactly the constructs the body was built from.
    pub fn cc(&self) -> u32 {
        1 + self.ifs + self.loops + self.ands + self.ternaries + self.cases
    }
}

#[derive(Debug, Clone)]
pub struct ClassSpec {
    pub parent: Option<usize>,
    pub fields: Vec<FieldSpec>,
    pub ctor_params: Vec<Ty>,
    pub methods: Vec<MethodSpec>,
}

fn ty_strategy(classes: usize) -> impl Strategy<Value = Ty> {
    prop_oneof![
        Just(Ty::Int),
        Just(Ty::Bool),
        Just(Ty::Str),
        Just(Ty::IntArr),
        Just(Ty::List),
        (0..classes).prop_map(Ty::Class),
    ]
}

fn vis_strategy() -> impl Strategy<Value = Vis> {
    prop_oneof![
        Just(Vis::Public),
        Just(Vis::Protected),
        Just(Vis::Private),
        Just(Vis::Package)
    ]
}

fn method_strategy(classes: usize) -> impl Strategy<Value = MethodSpec> {
    (
        0usize..4,
        vis_strategy(),
        proptest::bool::weighted(0.2),
        proptest::collection::vec(ty_strategy(classes), 0..4),
        proptest::option::of(ty_strategy(classes)),
        (0u32..3, 0u32..3, 0u32..2, 0u32..2, 0u32..4),
    )
        .prop_map(
            |(name, vis, is_static, params, ret, (ifs, loops, ands, ternaries, cases))| MethodSpec {
                name,
                vis,
                is_static,
                params,
                ret,
                ifs,
                loops,
                ands,
                ternaries,
                cases,
            },
        )
}

fn class_strategy(index: usize, classes: usize) -> impl Strategy<Value = ClassSpec> {
    let parent = if index == 0 {
        Just(None).boxed()
    } else {
        proptest::option::weighted(0.5, 0..index).boxed()
    };
    (
        parent,
        proptest::collection::vec(
            (vis_strategy(), ty_strategy(classes)).prop_map(|(vis, ty)| FieldSpec { vis, ty }),
            0..5,
        ),
        proptest::collection::vec(ty_strategy(classes), 0..3),
        proptest::collection::vec(method_strategy(classes), 0..6),
    )
        .prop_map(|(parent, fields, ctor_params, mut methods)| {
            // one method per name keeps every signature unique in the class
            let mut seen = BTreeSet::new();
            methods.retain(|m| seen.insert(m.name));
            ClassSpec {
                parent,
                fields,
                ctor_params,
                methods,
            }
        })
}

/// Projects of one to five classes; class `i` may extend any `j < i`.
pub fn project_strategy() -> impl Strategy<Value = Vec<ClassSpec>> {
    (1usize..=5).prop_flat_map(|n| (0..n).map(|i| class_strategy(i, n)).collect::<Vec<_>>())
}

fn render_body(m: &MethodSpec) -> String {
    let mut b = String::from("        int v = 0;\n");
    for i in 0..m.ifs {
        b.push_str(&format!(
            "        if (v > {i}) {{\n            v = v + 1;\n        }}\n"
        ));
    }
    for i in 0..m.loops {
        b.push_str(&format!(
            "        for (int i{i} = 0; i{i} < v; i{i}++) {{\n            v = v - 1;\n        }}\n"
        ));
    }
    for i in 0..m.ands {
        b.push_str(&format!("        boolean b{i} = v > 0 && v < 3;\n"));
    }
    for i in 0..m.ternaries {
        b.push_str(&format!("        int t{i} = v > 0 ? 1 : 2;\n"));
    }
    if m.cases > 0 {
        b.push_str("        switch (v) {\n");
        for c in 0..m.cases {
            b.push_str(&format!(
                "            case {c}:\n                v = v + 1;\n                break;\n"
            ));
        }
        b.push_str("            default:\n                break;\n        }\n");
    }
    if let Some(r) = m.ret {
        b.push_str(&format!("        return {};\n", r.default_value()));
    }
    b
}

pub fn render_class(i: usize, c: &ClassSpec) -> String {
    let mut s = String::from("package gen;\n\nimport java.util.List;\n\n");
    s.push_str(&format!("public class C{i}"));
    if let Some(p) = c.parent {
        s.push_str(&format!(" extends C{p}"));
    }
    s.push_str(" {\n");
    for (k, f) in c.fields.iter().enumerate() {
        s.push_str(&format!("    {}{} f{k};\n", f.vis.keyword(), f.ty.java()));
    }
    let params = |ps: &[Ty]| {
        ps.iter()
            .enumerate()
            .map(|(k, t)| format!("{} a{k}", t.java()))
            .collect::<Vec<_>>()
            .join(", ")
    };
    s.push_str(&format!("\n    public C{i}({}) {{\n    }}\n", params(&c.ctor_params)));
    for m in &c.methods {
        let ret = m.ret.map_or("void".to_string(), |t| t.java());
        let stat = if m.is_static { "static " } else { "" };
        s.push_str(&format!(
            "\n    {}{stat}{ret} m{}({}) {{\n{}    }}\n",
            m.vis.keyword(),
            m.name,
            params(&m.params),
            render_body(m)
        ));
    }
    s.push_str("}\n");
    s
}

/// Writes the project under `root/src/main/java/gen`.
pub fn write_project(root: &Path, classes: &[ClassSpec]) {
    let dir = root.join("src/main/java/gen");
    fs::create_dir_all(&dir).unwrap();
    for (i, c) in classes.iter().enumerate() {
        fs::write(dir.join(format!("C{i}.java")), render_class(i, c)).unwrap();
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleMetrics {
    pub cc: BTreeMap<String, u32>,
    pub cam: f64,
    pub dcc: u32,
    pub dam: f64,
    pub mfa: f64,
    pub moa: u32,
}

fn ancestors(classes: &[ClassSpec], i: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut cur = classes[i].parent;
    while let Some(p) = cur {
        out.push(p);
        cur = classes[p].parent;
    }
    out
}

/// Metrics of class `i` straight from its description.
pub fn oracle(classes: &[ClassSpec], i: usize) -> OracleMetrics {
    let c = &classes[i];
    let cc = c.methods.iter().map(|m| (m.signature(), m.cc())).collect();

    let n = c.methods.len();
    let mut union = BTreeSet::new();
    let mut sum = 0usize;
    for m in &c.methods {
        let set: BTreeSet<String> = m.params.iter().map(|t| t.display()).collect();
        sum += set.len();
        union.extend(set);
    }
    let cam = if n == 0 || union.is_empty() {
        0.0
    } else {
        sum as f64 / (n * union.len()) as f64
    };

    let mut used = BTreeSet::new();
    let all_types = c
        .fields
        .iter()
        .map(|f| f.ty)
        .chain(c.ctor_params.iter().copied())
        .chain(c.methods.iter().flat_map(|m| m.params.iter().copied().chain(m.ret)));
    for t in all_types {
        if let Ty::Class(j) = t {
            if j != i {
                used.insert(j);
            }
        }
    }

    let hidden = c
        .fields
        .iter()
        .filter(|f| matches!(f.vis, Vis::Private | Vis::Protected))
        .count();
    let dam = if c.fields.is_empty() {
        1.0
    } else {
        hidden as f64 / c.fields.len() as f64
    };

    let declared: BTreeSet<String> = c.methods.iter().map(MethodSpec::signature).collect();
    let mut inherited = BTreeSet::new();
    for a in ancestors(classes, i) {
        for m in &classes[a].methods {
            if m.vis != Vis::Private && !declared.contains(&m.signature()) {
                inherited.insert(m.signature());
            }
        }
    }
    let total = inherited.len() + declared.len();
    let mfa = if total == 0 {
        0.0
    } else {
        inherited.len() as f64 / total as f64
    };

    let moa = c.fields.iter().filter(|f| matches!(f.ty, Ty::Class(_))).count() as u32;
    OracleMetrics {
        cc,
        cam,
        dcc: used.len() as u32,
        dam,
        mfa,
        moa,
    }
}

/// Writes `classes` to a scratch project and compares every class against
/// its oracle, also checking that ratio metrics stay in [0, 1].
pub fn check_project(classes: &[ClassSpec]) -> Result<(), TestCaseError> {
    use refagent_core::metrics::compute_class_metrics;
    use refagent_core::source_model::load_project;

    let dir = tempfile::tempdir().unwrap();
    write_project(dir.path(), classes);
    let (model, errors) = load_project(dir.path(), &["src/main/java".into()], &["src/test/java".into()]).unwrap();
    prop_assert!(errors.is_empty(), "parse errors: {errors:?}");
    for i in 0..classes.len() {
        let fqn = format!("gen.C{i}");
        let got = compute_class_metrics(&model, &fqn).unwrap();
        let want = oracle(classes, i);
        for (sig, cc) in &want.cc {
            let m = got.methods.iter().find(|m| &m.signature == sig);
            prop_assert!(m.is_some(), "{fqn}: method {sig} missing");
            prop_assert_eq!(m.unwrap().cc, *cc, "{} {}", fqn, sig);
        }
        prop_assert!(
            (got.cam - want.cam).abs() < 1e-12,
            "{fqn} CAM {} vs {}",
            got.cam,
            want.cam
        );
        prop_assert_eq!(got.dcc, want.dcc, "{} DCC", fqn);
        prop_assert!((got.dam - want.dam).abs() < 1e-12, "{fqn} DAM");
        prop_assert!(
            (got.mfa - want.mfa).abs() < 1e-12,
            "{fqn} MFA {} vs {}",
            got.mfa,
            want.mfa
        );
        prop_assert_eq!(got.moa, want.moa, "{} MOA", fqn);
        for (name, v) in [("CAM", got.cam), ("DAM", got.dam), ("MFA", got.mfa), ("LCOM", got.lcom)] {
            prop_assert!((0.0..=1.0).contains(&v), "{fqn} {name}={v}");
        }
    }
    Ok(())
}

// ------------------------------------------------------------ statistics

/// Rank of each value by counting: smaller values plus the midpoint of the
/// tie group.
pub fn counting_ranks(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|v| {
            let less = values.iter().filter(|w| *w < v).count() as f64;
            let equal = values.iter().filter(|w| *w == v).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Two-sided signed-rank p-value by visiting all 2^n sign assignments.
pub fn brute_force_wilcoxon(pairs: &[(f64, f64)]) -> (f64, f64) {
    let d: Vec<f64> = pairs.iter().map(|(b, a)| a - b).filter(|x| *x != 0.0).collect();
    let n = d.len();
    let ranks = counting_ranks(&d.iter().map(|x| x.abs()).collect::<Vec<_>>());
    let w_obs: f64 = d.iter().zip(&ranks).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum();
    let total: f64 = ranks.iter().sum();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n).filter(|k| mask >> k & 1 == 1).map(|k| ranks[k]).sum();
        if w <= w_obs + 1e-9 {
            le += 1;
        }
        if w >= w_obs - 1e-9 {
            ge += 1;
        }
    }
    let all = (1u64 << n) as f64;
    let p = (2.0 * (le.min(ge) as f64) / all).min(1.0);
    (w_obs.min(total - w_obs), p)
}
