//! Design and implementation smell detection over production types.
//!
//! The catalog is the `CATALOG` table; adding a smell means adding a variant
//! and one row there.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::depgraph::DependencyGraph;
use crate::metrics::cyclomatic_complexity;
use crate::quality::{improvement_rate, QualityError};
use crate::source_model::{DesignModel, LineRange, MethodDecl, Modifier, NumericLiteral, TypeDecl};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SmellKind {
    LongMethod,
    ComplexMethod,
    LongParameterList,
    MagicNumber,
    DeficientEncapsulation,
    InsufficientModularization,
    UnutilizedAbstraction,
    CyclicDependency,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmellCategory {
    Design,
    Implementation,
}

type Detector = fn(&Ctx<'_>, &TypeDecl, &mut Vec<SmellInstance>);

pub struct CatalogEntry {
    pub kind: SmellKind,
    pub category: SmellCategory,
    detect: Detector,
}

pub const CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        kind: SmellKind::LongMethod,
        category: SmellCategory::Implementation,
        detect: detect_long_method,
    },
    CatalogEntry {
        kind: SmellKind::ComplexMethod,
        category: SmellCategory::Implementation,
        detect: detect_complex_method,
    },
    CatalogEntry {
        kind: SmellKind::LongParameterList,
        category: SmellCategory::Implementation,
        detect: detect_long_parameter_list,
    },
    CatalogEntry {
        kind: SmellKind::MagicNumber,
        category: SmellCategory::Implementation,
        detect: detect_magic_number,
    },
    CatalogEntry {
        kind: SmellKind::DeficientEncapsulation,
        category: SmellCategory::Design,
        detect: detect_deficient_encapsulation,
    },
    CatalogEntry {
        kind: SmellKind::InsufficientModularization,
        category: SmellCategory::Design,
        detect: detect_insufficient_modularization,
    },
    CatalogEntry {
        kind: SmellKind::UnutilizedAbstraction,
        category: SmellCategory::Design,
        detect: detect_unutilized_abstraction,
    },
    CatalogEntry {
        kind: SmellKind::CyclicDependency,
        category: SmellCategory::Design,
        detect: detect_cyclic_dependency,
    },
];

impl SmellKind {
    pub fn category(self) -> SmellCategory {
        CATALOG
            .iter()
            .find(|e| e.kind == self)
            .expect("kind is cataloged")
            .category
    }

    pub fn all() -> impl Iterator<Item = SmellKind> {
        CATALOG.iter().map(|e| e.kind)
    }

    pub fn name(self) -> &'static str {
        match self {
            SmellKind::LongMethod => "LongMethod",
            SmellKind::ComplexMethod => "ComplexMethod",
            SmellKind::LongParameterList => "LongParameterList",
            SmellKind::MagicNumber => "MagicNumber",
            SmellKind::DeficientEncapsulation => "DeficientEncapsulation",
            SmellKind::InsufficientModularization => "InsufficientModularization",
            SmellKind::UnutilizedAbstraction => "UnutilizedAbstraction",
            SmellKind::CyclicDependency => "CyclicDependency",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub long_method_loc: u32,
    pub complex_method_cc: u32,
    pub long_params: u32,
    pub large_class_nom: u32,
    pub large_class_loc: u32,
    pub magic_allowlist: Vec<f64>,
    /// Types never reported as unutilized, in addition to any type
    /// declaring `public static void main(String[])`.
    pub entry_points: Vec<String>,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            long_method_loc: 100,
            complex_method_cc: 8,
            long_params: 6,
            large_class_nom: 20,
            large_class_loc: 1000,
            magic_allowlist: vec![-1.0, 0.0, 1.0, 2.0],
            entry_points: Vec::new(),
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), String> {
        let named = [
            ("long_method_loc", self.long_method_loc),
            ("complex_method_cc", self.complex_method_cc),
            ("long_params", self.long_params),
            ("large_class_nom", self.large_class_nom),
            ("large_class_loc", self.large_class_loc),
        ];
        match named.iter().find(|(_, v)| *v == 0) {
            Some((name, _)) => Err(format!("threshold {name} must be positive")),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmellInstance {
    pub kind: SmellKind,
    pub category: SmellCategory,
    pub fqn: String,
    pub method: Option<String>,
    #[serde(flatten)]
    pub line_range: LineRange,
    pub evidence: String,
}

struct Ctx<'a> {
    model: &'a DesignModel,
    graph: &'a DependencyGraph,
    thresholds: &'a Thresholds,
    cycles: Vec<Vec<String>>,
}

fn instance(
    kind: SmellKind,
    t: &TypeDecl,
    method: Option<&MethodDecl>,
    range: LineRange,
    evidence: String,
) -> SmellInstance {
    SmellInstance {
        kind,
        category: kind.category(),
        fqn: t.fqn.clone(),
        method: method.map(|m| m.signature.clone()),
        line_range: range,
        evidence,
    }
}

fn detect_long_method(cx: &Ctx<'_>, t: &TypeDecl, out: &mut Vec<SmellInstance>) {
    let limit = cx.thresholds.long_method_loc;
    for m in t.methods.iter().filter(|m| m.body_stats.loc > limit) {
        out.push(instance(
            SmellKind::LongMethod,
            t,
            Some(m),
            m.line_range,
            format!("loc {} > {limit}", m.body_stats.loc),
        ));
    }
}

fn detect_complex_method(cx: &Ctx<'_>, t: &TypeDecl, out: &mut Vec<SmellInstance>) {
    let limit = cx.thresholds.complex_method_cc;
    for m in &t.methods {
        let cc = cyclomatic_complexity(m);
        if cc > limit {
            out.push(instance(
                SmellKind::ComplexMethod,
                t,
                Some(m),
                m.line_range,
                format!("cc {cc} > {limit}"),
            ));
        }
    }
}

fn detect_long_parameter_list(cx: &Ctx<'_>, t: &TypeDecl, out: &mut Vec<SmellInstance>) {
    let limit = cx.thresholds.long_params;
    for m in t.methods.iter().filter(|m| m.params.len() as u32 >= limit) {
        out.push(instance(
            SmellKind::LongParameterList,
            t,
            Some(m),
            m.line_range,
            format!("params {} >= {limit}", m.params.len()),
        ));
    }
}

fn is_magic(th: &Thresholds, lit: &NumericLiteral) -> bool {
    let v = lit.signed_value();
    !th.magic_allowlist.contains(&v)
}

fn detect_magic_number(cx: &Ctx<'_>, t: &TypeDecl, out: &mut Vec<SmellInstance>) {
    for f in t.fields.iter().filter(|f| !f.is_constant) {
        for lit in f.initializer_literals.iter().filter(|l| is_magic(cx.thresholds, l)) {
            out.push(instance(
                SmellKind::MagicNumber,
                t,
                None,
                LineRange::new(lit.line, lit.line),
                format!("literal {} in field {}", literal_text(lit), f.name),
            ));
        }
    }
    for m in &t.methods {
        for lit in m.body_stats.literals.iter().filter(|l| is_magic(cx.thresholds, l)) {
            out.push(instance(
                SmellKind::MagicNumber,
                t,
                Some(m),
                LineRange::new(lit.line, lit.line),
                format!("literal {}", literal_text(lit)),
            ));
        }
    }
}

fn literal_text(lit: &NumericLiteral) -> String {
    if lit.negated {
        format!("-{}", lit.text)
    } else {
        lit.text.clone()
    }
}

fn detect_deficient_encapsulation(_: &Ctx<'_>, t: &TypeDecl, out: &mut Vec<SmellInstance>) {
    for f in t.fields.iter().filter(|f| f.has(Modifier::Public) && !f.is_constant) {
        out.push(instance(
            SmellKind::DeficientEncapsulation,
            t,
            None,
            LineRange::new(f.line, f.line),
            format!("public field {}", f.name),
        ));
    }
}

fn detect_insufficient_modularization(cx: &Ctx<'_>, t: &TypeDecl, out: &mut Vec<SmellInstance>) {
    let nom = t.plain_methods().count() as u32;
    let (max_nom, max_loc) = (cx.thresholds.large_class_nom, cx.thresholds.large_class_loc);
    let mut reasons = Vec::new();
    if nom > max_nom {
        reasons.push(format!("nom {nom} > {max_nom}"));
    }
    if t.loc > max_loc {
        reasons.push(format!("loc {} > {max_loc}", t.loc));
    }
    if !reasons.is_empty() {
        out.push(instance(
            SmellKind::InsufficientModularization,
            t,
            None,
            t.line_range,
            reasons.join(", "),
        ));
    }
}

fn has_main(t: &TypeDecl) -> bool {
    t.methods.iter().any(|m| {
        m.name == "main"
            && m.has(Modifier::Public)
            && m.has(Modifier::Static)
            && m.params.len() == 1
            && m.params[0].ty.display() == "String[]"
    })
}

fn is_unutilized(cx: &Ctx<'_>, t: &TypeDecl) -> bool {
    let used = cx
        .graph
        .edges
        .iter()
        .any(|e| e.to == t.fqn && !cx.model.is_test_type(&e.from));
    let is_root = !cx.model.children(&t.fqn).is_empty();
    !used && !is_root && !cx.thresholds.entry_points.contains(&t.fqn) && !has_main(t)
}

fn detect_unutilized_abstraction(cx: &Ctx<'_>, t: &TypeDecl, out: &mut Vec<SmellInstance>) {
    if is_unutilized(cx, t) {
        out.push(instance(
            SmellKind::UnutilizedAbstraction,
            t,
            None,
            t.line_range,
            "no incoming dependencies from production types".into(),
        ));
    }
}

fn detect_cyclic_dependency(cx: &Ctx<'_>, t: &TypeDecl, out: &mut Vec<SmellInstance>) {
    if let Some(cycle) = cx.cycles.iter().find(|c| c.contains(&t.fqn)) {
        out.push(instance(
            SmellKind::CyclicDependency,
            t,
            None,
            t.line_range,
            format!("cycle {}", cycle.join(" -> ")),
        ));
    }
}

fn sort_key(s: &SmellInstance) -> (&str, LineRange, SmellKind, Option<&str>, &str) {
    (&s.fqn, s.line_range, s.kind, s.method.as_deref(), &s.evidence)
}

/// All catalog smells of the production types, sorted by (fqn, line range, kind).
pub fn detect_smells(model: &DesignModel, graph: &DependencyGraph, thresholds: &Thresholds) -> Vec<SmellInstance> {
    let cx = Ctx {
        model,
        graph,
        thresholds,
        cycles: graph.find_cycles(),
    };
    let mut out = Vec::new();
    for t in model.production_types() {
        for entry in CATALOG {
            (entry.detect)(&cx, t, &mut out);
        }
    }
    out.sort_by(|a, b| sort_key(a).cmp(&sort_key(b)));
    out
}

/// Re-evaluates the rule that produced `smell` against the model.
pub fn verify(model: &DesignModel, graph: &DependencyGraph, thresholds: &Thresholds, smell: &SmellInstance) -> bool {
    let Ok(t) = model.get(&smell.fqn) else { return false };
    let method = smell.method.as_deref().and_then(|sig| t.method_by_signature(sig));
    let th = thresholds;
    match smell.kind {
        SmellKind::LongMethod => method.is_some_and(|m| m.body_stats.loc > th.long_method_loc),
        SmellKind::ComplexMethod => method.is_some_and(|m| cyclomatic_complexity(m) > th.complex_method_cc),
        SmellKind::LongParameterList => method.is_some_and(|m| m.params.len() as u32 >= th.long_params),
        SmellKind::MagicNumber => {
            let line = smell.line_range.start;
            let at_line = |l: &&NumericLiteral| l.line == line && is_magic(th, l);
            match method {
                Some(m) => m.body_stats.literals.iter().any(|l| at_line(&l)),
                None => t
                    .fields
                    .iter()
                    .filter(|f| !f.is_constant)
                    .any(|f| f.initializer_literals.iter().any(|l| at_line(&l))),
            }
        }
        SmellKind::DeficientEncapsulation => t
            .fields
            .iter()
            .any(|f| f.line == smell.line_range.start && f.has(Modifier::Public) && !f.is_constant),
        SmellKind::InsufficientModularization => {
            t.plain_methods().count() as u32 > th.large_class_nom || t.loc > th.large_class_loc
        }
        SmellKind::UnutilizedAbstraction => {
            let cx = Ctx {
                model,
                graph,
                thresholds,
                cycles: Vec::new(),
            };
            is_unutilized(&cx, t)
        }
        SmellKind::CyclicDependency => graph.find_cycles().iter().any(|c| c.contains(&t.fqn)),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmellDelta {
    pub removed: u32,
    pub introduced: u32,
    pub unchanged: u32,
}

/// Per-kind multiset comparison keyed by (kind, fqn, method); line ranges
/// are ignored. Every catalog kind is present in the result.
pub fn smell_diff(before: &[SmellInstance], after: &[SmellInstance]) -> BTreeMap<SmellKind, SmellDelta> {
    type Key<'a> = (SmellKind, &'a str, Option<&'a str>);
    fn count(list: &[SmellInstance]) -> BTreeMap<Key<'_>, u32> {
        let mut m = BTreeMap::new();
        for s in list {
            *m.entry((s.kind, s.fqn.as_str(), s.method.as_deref())).or_insert(0) += 1;
        }
        m
    }
    let (b, a) = (count(before), count(after));
    let mut out: BTreeMap<SmellKind, SmellDelta> = SmellKind::all().map(|k| (k, SmellDelta::default())).collect();
    let keys: BTreeSet<&Key<'_>> = b.keys().chain(a.keys()).collect();
    for key in keys {
        let nb = b.get(key).copied().unwrap_or(0);
        let na = a.get(key).copied().unwrap_or(0);
        let same = nb.min(na);
        let d = out.entry(key.0).or_default();
        d.unchanged += same;
        d.removed += nb - same;
        d.introduced += na - same;
    }
    out
}

/// Smell reduction rate in percent.
pub fn smell_reduction_rate(before_count: u32, after_count: u32) -> Result<f64, QualityError> {
    improvement_rate(before_count as f64, after_count as f64)
}

/// Smell counts per kind, every catalog kind present.
pub fn counts_by_kind(smells: &[SmellInstance]) -> BTreeMap<SmellKind, u32> {
    let mut m: BTreeMap<SmellKind, u32> = SmellKind::all().map(|k| (k, 0)).collect();
    for s in smells {
        *m.entry(s.kind).or_default() += 1;
    }
    m
}
