//! QMOOD design metrics plus the auxiliary per-method measures used for
//! planner context and smell detection.
//!
//! Normative definitions (class level, constructors excluded unless noted):
//!
//! - DCC: distinct other project types used as field, parameter (constructor
//!   parameters included) or return types.
//! - CAM: `sum |P_i| / (n * |T|)` over the n methods, `P_i` the distinct
//!   parameter type names of method i and `T` their union; 0 when n = 0 or
//!   T is empty.
//! - CIS: public methods. NOM: methods.
//! - NOP: methods that are neither static, final nor private, plus abstract
//!   methods; every method of an interface.
//! - DAM: private and protected fields over all fields (constants
//!   included); 1 when there are no fields.
//! - MOA: fields whose type is a project type.
//! - MFA: inherited-not-overridden over (inherited-not-overridden +
//!   declared); inherited methods are the non-private methods of project
//!   ancestors, deduplicated by signature; 0 when both are zero.
//! - ANA: number of project ancestors.
//! - LCOM: `1 - sum_f |methods touching f| / (NOM * |fields|)`, clamped to
//!   [0, 1]; 0 when there are no methods or no fields.
//!
//! Design level: DSC is the number of types, NOH the number of hierarchy
//! roots with at least one project descendant, and every other metric is the
//! arithmetic mean of the per-class values.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::source_model::{DesignModel, MethodDecl, ModelError, Modifier, TypeDecl, TypeKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodMetrics {
    pub signature: String,
    pub cc: u32,
    pub loc: u32,
    pub param_count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub fqn: String,
    pub dcc: u32,
    pub cam: f64,
    pub cis: u32,
    pub nom: u32,
    pub nop: u32,
    pub dam: f64,
    pub moa: u32,
    pub mfa: f64,
    pub ana: u32,
    pub lcom: f64,
    pub loc: u32,
    pub max_cc: u32,
    pub methods: Vec<MethodMetrics>,
}

/// Column order of the per-class CSV/JSON rows.
pub const CLASS_COLUMNS: &[&str] = &[
    "fqn", "dcc", "cam", "cis", "nom", "nop", "dam", "moa", "mfa", "ana", "lcom", "loc", "max_cc",
];

impl ClassMetrics {
    pub fn row(&self) -> Vec<String> {
        vec![
            self.fqn.clone(),
            self.dcc.to_string(),
            fmt_ratio(self.cam),
            self.cis.to_string(),
            self.nom.to_string(),
            self.nop.to_string(),
            fmt_ratio(self.dam),
            self.moa.to_string(),
            fmt_ratio(self.mfa),
            self.ana.to_string(),
            fmt_ratio(self.lcom),
            self.loc.to_string(),
            self.max_cc.to_string(),
        ]
    }
}

fn fmt_ratio(v: f64) -> String {
    format!("{v:.6}")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignMetrics {
    pub dsc: u32,
    pub noh: u32,
    pub mean_ana: f64,
}

/// The eleven QMOOD metrics aggregated to design level.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub struct MetricVector {
    pub dsc: f64,
    pub nom: f64,
    pub dcc: f64,
    pub nop: f64,
    pub noh: f64,
    pub cam: f64,
    pub ana: f64,
    pub dam: f64,
    pub moa: f64,
    pub mfa: f64,
    pub cis: f64,
}

impl MetricVector {
    pub const NAMES: [&'static str; 11] = [
        "DSC", "NOM", "DCC", "NOP", "NOH", "CAM", "ANA", "DAM", "MOA", "MFA", "CIS",
    ];

    /// Metric by its QMOOD abbreviation.
    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "DSC" => self.dsc,
            "NOM" => self.nom,
            "DCC" => self.dcc,
            "NOP" => self.nop,
            "NOH" => self.noh,
            "CAM" => self.cam,
            "ANA" => self.ana,
            "DAM" => self.dam,
            "MOA" => self.moa,
            "MFA" => self.mfa,
            "CIS" => self.cis,
            _ => return None,
        })
    }

    pub fn from_values(values: [f64; 11]) -> Self {
        let [dsc, nom, dcc, nop, noh, cam, ana, dam, moa, mfa, cis] = values;
        Self {
            dsc,
            nom,
            dcc,
            nop,
            noh,
            cam,
            ana,
            dam,
            moa,
            mfa,
            cis,
        }
    }

    pub fn values(&self) -> [f64; 11] {
        Self::NAMES.map(|n| self.get(n).unwrap())
    }
}

pub fn cyclomatic_complexity(method: &MethodDecl) -> u32 {
    method.body_stats.decision_points + 1
}

pub fn method_metrics(method: &MethodDecl) -> MethodMetrics {
    MethodMetrics {
        signature: method.signature.clone(),
        cc: cyclomatic_complexity(method),
        loc: method.body_stats.loc,
        param_count: method.params.len() as u32,
    }
}

fn is_overridable(t: &TypeDecl, m: &MethodDecl) -> bool {
    if t.kind == TypeKind::Interface || m.has(Modifier::Abstract) {
        return true;
    }
    !(m.has(Modifier::Static) || m.has(Modifier::Final) || m.has(Modifier::Private))
}

fn cam(t: &TypeDecl) -> f64 {
    let per_method: Vec<BTreeSet<String>> = t
        .plain_methods()
        .map(|m| m.params.iter().map(|p| p.ty.display()).collect())
        .collect();
    let union: BTreeSet<&String> = per_method.iter().flatten().collect();
    if per_method.is_empty() || union.is_empty() {
        return 0.0;
    }
    let sum: usize = per_method.iter().map(BTreeSet::len).sum();
    sum as f64 / (per_method.len() * union.len()) as f64
}

fn dcc(t: &TypeDecl) -> u32 {
    let mut used = BTreeSet::new();
    let refs = t
        .fields
        .iter()
        .map(|f| &f.ty)
        .chain(t.methods.iter().flat_map(|m| m.params.iter().map(|p| &p.ty)))
        .chain(t.methods.iter().filter_map(|m| m.return_type.as_ref()));
    for r in refs {
        if let Some(fqn) = r.project_fqn() {
            if fqn != t.fqn {
                used.insert(fqn);
            }
        }
    }
    used.len() as u32
}

fn mfa(model: &DesignModel, t: &TypeDecl) -> Result<f64, ModelError> {
    let declared: BTreeSet<&str> = t.plain_methods().map(|m| m.signature.as_str()).collect();
    let mut inherited = BTreeSet::new();
    for a in model.ancestors(&t.fqn)? {
        for m in model.get(&a)?.plain_methods() {
            if !m.has(Modifier::Private) && !declared.contains(m.signature.as_str()) {
                inherited.insert(m.signature.clone());
            }
        }
    }
    let total = inherited.len() + declared.len();
    Ok(if total == 0 {
        0.0
    } else {
        inherited.len() as f64 / total as f64
    })
}

fn lcom(t: &TypeDecl) -> f64 {
    let nom = t.plain_methods().count();
    let nf = t.fields.len();
    if nom == 0 || nf == 0 {
        return 0.0;
    }
    let touching: usize = t
        .fields
        .iter()
        .map(|f| {
            t.plain_methods()
                .filter(|m| m.body_stats.accessed_fields.contains(&f.name))
                .count()
        })
        .sum();
    (1.0 - touching as f64 / (nom * nf) as f64).clamp(0.0, 1.0)
}

pub fn compute_class_metrics(model: &DesignModel, fqn: &str) -> Result<ClassMetrics, ModelError> {
    let t = model.get(fqn)?;
    let nom = t.plain_methods().count() as u32;
    let dam = if t.fields.is_empty() {
        1.0
    } else {
        let hidden = t
            .fields
            .iter()
            .filter(|f| f.has(Modifier::Private) || f.has(Modifier::Protected))
            .count();
        hidden as f64 / t.fields.len() as f64
    };
    let methods: Vec<MethodMetrics> = t.methods.iter().map(method_metrics).collect();
    Ok(ClassMetrics {
        fqn: fqn.to_string(),
        dcc: dcc(t),
        cam: cam(t),
        cis: t.plain_methods().filter(|m| m.has(Modifier::Public)).count() as u32,
        nom,
        nop: t.plain_methods().filter(|m| is_overridable(t, m)).count() as u32,
        dam,
        moa: t.fields.iter().filter(|f| f.ty.project_fqn().is_some()).count() as u32,
        mfa: mfa(model, t)?,
        ana: model.ancestors(fqn)?.len() as u32,
        lcom: lcom(t),
        loc: t.loc,
        max_cc: methods.iter().map(|m| m.cc).max().unwrap_or(0),
        methods,
    })
}

/// Metrics of every production type, ordered by FQN.
pub fn compute_all_class_metrics(model: &DesignModel) -> Result<Vec<ClassMetrics>, ModelError> {
    model
        .production_types()
        .map(|t| compute_class_metrics(model, &t.fqn))
        .collect()
}

pub fn compute_design_metrics(model: &DesignModel) -> Result<DesignMetrics, ModelError> {
    let types: Vec<&TypeDecl> = model.production_types().collect();
    let mut roots = BTreeSet::new();
    let mut ana_sum = 0usize;
    for t in &types {
        let chain = model.ancestors(&t.fqn)?;
        ana_sum += chain.len();
        if let Some(root) = chain.last() {
            roots.insert(root.clone());
        }
    }
    Ok(DesignMetrics {
        dsc: types.len() as u32,
        noh: roots.len() as u32,
        mean_ana: if types.is_empty() {
            0.0
        } else {
            ana_sum as f64 / types.len() as f64
        },
    })
}

/// Design-level vector: per-class means, DSC and NOH taken directly.
pub fn aggregate(classes: &[ClassMetrics], design: &DesignMetrics) -> MetricVector {
    let n = classes.len() as f64;
    let mean = |f: &dyn Fn(&ClassMetrics) -> f64| {
        if classes.is_empty() {
            0.0
        } else {
            classes.iter().map(f).sum::<f64>() / n
        }
    };
    MetricVector {
        dsc: design.dsc as f64,
        noh: design.noh as f64,
        nom: mean(&|c| c.nom as f64),
        dcc: mean(&|c| c.dcc as f64),
        nop: mean(&|c| c.nop as f64),
        cam: mean(&|c| c.cam),
        ana: mean(&|c| c.ana as f64),
        dam: mean(&|c| c.dam),
        moa: mean(&|c| c.moa as f64),
        mfa: mean(&|c| c.mfa),
        cis: mean(&|c| c.cis as f64),
    }
}

/// Per-class metrics and the aggregated design vector in one pass.
pub fn design_vector(model: &DesignModel) -> Result<(Vec<ClassMetrics>, MetricVector), ModelError> {
    let classes = compute_all_class_metrics(model)?;
    let design = compute_design_metrics(model)?;
    let v = aggregate(&classes, &design);
    Ok((classes, v))
}

#[cfg(test)]
mod tests {
    use std::path::Path;

    use super::*;
    use crate::source_model::{build_design_model, parse_source};

    fn model(files: &[&str]) -> DesignModel {
        let units = files
            .iter()
            .enumerate()
            .map(|(i, src)| parse_source(src, Path::new(&format!("F{i}.java"))).unwrap())
            .collect();
        build_design_model(units).unwrap()
    }

    fn class(src: &str, fqn: &str) -> ClassMetrics {
        compute_class_metrics(&model(&[src]), fqn).unwrap()
    }

    #[test]
    fn cc_counts() {
        let c = class(
            "class A { void f() {} void g(int a, int[] xs) { if (a > 0 && a < 9) { for (int x : xs) {} } } \
             int h(int k) { switch (k) { case 1: return 1; case 2: return 2; case 3: return 3; default: return 0; } } }",
            "A",
        );
        let cc: Vec<u32> = c.methods.iter().map(|m| m.cc).collect();
        assert_eq!(cc, [1, 4, 4]);
        assert_eq!(c.max_cc, 4);
    }

    #[test]
    fn dam_ratio() {
        let c = class("class A { private int a; private int b; public int c; }", "A");
        assert!((c.dam - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(class("class A {}", "A").dam, 1.0);
    }

    #[test]
    fn cam_example() {
        let c = class(
            "class A { void f(int a) {} void g(int a, String s) {} void h() {} }",
            "A",
        );
        assert!((c.cam - 0.5).abs() < 1e-12);
        assert_eq!(class("class A { void f() {} }", "A").cam, 0.0);
    }

    #[test]
    fn mfa_example() {
        let m = model(&[
            "package p; class A { void a1() {} void a2() {} void a3() {} void a4() {} }",
            "package p; class B extends A { void b1() {} void b2() {} }",
        ]);
        let b = compute_class_metrics(&m, "p.B").unwrap();
        assert!((b.mfa - 4.0 / 6.0).abs() < 1e-12);
        assert_eq!(b.ana, 1);
        assert_eq!(compute_class_metrics(&m, "p.A").unwrap().mfa, 0.0);
    }

    #[test]
    fn mfa_excludes_overridden_and_private() {
        let m = model(&[
            "package p; class A { void a() {} private void hidden() {} }",
            "package p; class B extends A { void a() {} void b() {} }",
        ]);
        assert_eq!(compute_class_metrics(&m, "p.B").unwrap().mfa, 0.0);
    }

    #[test]
    fn nop_cis_nom() {
        let c = class(
            "abstract class A { A() {} public void a() {} public static void s() {} private void p() {} \
             public final void f() {} abstract void x(); }",
            "A",
        );
        assert_eq!(c.nom, 5);
        assert_eq!(c.cis, 3);
        assert_eq!(c.nop, 2);
        let i = class("interface I { void a(); static void s() {} }", "I");
        assert_eq!(i.nop, 2);
        assert_eq!(i.cis, 2);
    }

    #[test]
    fn dcc_and_moa() {
        let m = model(&[
            "package p; class A { B b; B b2; C c; int n; java.util.List l; A(D d) {} E make() { return null; } }",
            "package p; class B {}",
            "package p; class C {}",
            "package p; class D {}",
            "package p; class E {}",
        ]);
        let a = compute_class_metrics(&m, "p.A").unwrap();
        assert_eq!(a.dcc, 4);
        assert_eq!(a.moa, 3);
    }

    #[test]
    fn lcom_values() {
        let c = class("class A { int x; int y; void f() { x = 1; } void g() { y = x; } }", "A");
        // x touched by 2 methods, y by 1: 1 - 3/4
        assert!((c.lcom - 0.25).abs() < 1e-12);
        assert_eq!(class("class A { int x; }", "A").lcom, 0.0);
    }

    #[test]
    fn design_level() {
        let unrelated = model(&["class A {}", "class B {}", "class C {}"]);
        let d = compute_design_metrics(&unrelated).unwrap();
        assert_eq!((d.dsc, d.noh), (3, 0));

        let tree = model(&[
            "class A {}",
            "class B extends A {}",
            "class C extends A {}",
            "class D {}",
        ]);
        let d = compute_design_metrics(&tree).unwrap();
        assert_eq!((d.dsc, d.noh), (4, 1));
        assert!((d.mean_ana - 0.5).abs() < 1e-12);

        let chains = model(&[
            "class A {}",
            "class B extends A {}",
            "class C {}",
            "class D extends C {}",
        ]);
        assert_eq!(compute_design_metrics(&chains).unwrap().noh, 2);
    }

    #[test]
    fn aggregate_means() {
        let m = model(&["class A { public void f() {} }", "class B { }"]);
        let (_, v) = design_vector(&m).unwrap();
        assert_eq!(v.dsc, 2.0);
        assert_eq!(v.cis, 0.5);
        assert_eq!(v.nom, 0.5);
        assert_eq!(v.dam, 1.0);
        assert_eq!(v.get("CIS"), Some(0.5));
        assert_eq!(v.get("XYZ"), None);
        assert_eq!(MetricVector::from_values(v.values()), v);
    }
}
