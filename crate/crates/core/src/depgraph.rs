//! Class-level dependency graph and the code-search module that assembles
//! the source context handed to the planner.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::estimate_tokens;
use crate::source_model::{DesignModel, Resolution, TypeRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Extends,
    Implements,
    FieldType,
    ParamType,
    ReturnType,
    Invocation,
    Import,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub kind: EdgeKind,
}

/// Edge to a type outside the project, kept aside from the node set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExternalEdge {
    pub from: String,
    pub to_name: String,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DependencyGraph {
    pub nodes: BTreeSet<String>,
    pub edges: BTreeSet<Edge>,
    #[serde(default)]
    pub external_edges: BTreeSet<ExternalEdge>,
    /// Node -> source file path, relative to the project root.
    #[serde(default)]
    pub sources: BTreeMap<String, PathBuf>,
}

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("unknown type {fqn}")]
    UnknownType { fqn: String },
    #[error("target {fqn} needs ~{tokens} tokens, over the budget of {budget}")]
    TargetOverBudget { fqn: String, tokens: usize, budget: usize },
}

pub fn extract_dependencies(model: &DesignModel) -> DependencyGraph {
    let mut g = DependencyGraph {
        nodes: model.types.keys().cloned().collect(),
        ..Default::default()
    };
    let mut add = |from: &str, r: &TypeRef, kind: EdgeKind| match &r.resolution {
        Resolution::Project(to) => {
            if to != from {
                g.edges.insert(Edge {
                    from: from.to_string(),
                    to: to.clone(),
                    kind,
                });
            }
        }
        Resolution::External => {
            g.external_edges.insert(ExternalEdge {
                from: from.to_string(),
                to_name: r.name.clone(),
                kind,
            });
        }
        _ => {}
    };

    for t in model.types.values() {
        if let Some(s) = &t.supertype {
            add(&t.fqn, s, EdgeKind::Extends);
        }
        for i in &t.interfaces {
            add(&t.fqn, i, EdgeKind::Implements);
        }
        for f in &t.fields {
            add(&t.fqn, &f.ty, EdgeKind::FieldType);
            for r in &f.initializer_types {
                add(&t.fqn, r, EdgeKind::Invocation);
            }
        }
        for m in &t.methods {
            for p in &m.params {
                add(&t.fqn, &p.ty, EdgeKind::ParamType);
            }
            if let Some(r) = &m.return_type {
                add(&t.fqn, r, EdgeKind::ReturnType);
            }
            for r in &m.body_stats.invoked_types {
                add(&t.fqn, r, EdgeKind::Invocation);
            }
        }
    }

    for unit in &model.units {
        for imp in unit.imports.iter().filter(|i| !i.is_static && !i.wildcard) {
            if !model.types.contains_key(&imp.name) {
                continue;
            }
            for t in &unit.types {
                if t.fqn != imp.name {
                    g.edges.insert(Edge {
                        from: t.fqn.clone(),
                        to: imp.name.clone(),
                        kind: EdgeKind::Import,
                    });
                }
            }
        }
        for t in &unit.types {
            g.sources.insert(t.fqn.clone(), unit.path.clone());
        }
    }
    g
}

impl DependencyGraph {
    fn require(&self, fqn: &str) -> Result<(), GraphError> {
        if self.nodes.contains(fqn) {
            Ok(())
        } else {
            Err(GraphError::UnknownType { fqn: fqn.to_string() })
        }
    }

    /// Classes with a direct edge onto `fqn`.
    pub fn first_degree_dependents(&self, fqn: &str) -> Result<BTreeSet<String>, GraphError> {
        self.require(fqn)?;
        Ok(self
            .edges
            .iter()
            .filter(|e| e.to == fqn)
            .map(|e| e.from.clone())
            .collect())
    }

    /// Classes `fqn` has a direct edge onto.
    pub fn first_degree_dependencies(&self, fqn: &str) -> Result<BTreeSet<String>, GraphError> {
        self.require(fqn)?;
        Ok(self
            .edges
            .iter()
            .filter(|e| e.from == fqn)
            .map(|e| e.to.clone())
            .collect())
    }

    /// Distinct edge kinds from `from` into `to`.
    pub fn edge_kinds(&self, from: &str, to: &str) -> BTreeSet<EdgeKind> {
        self.edges
            .iter()
            .filter(|e| e.from == from && e.to == to)
            .map(|e| e.kind)
            .collect()
    }

    /// Edges touching `fqn`, in either direction.
    pub fn edges_of<'a>(&'a self, fqn: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.from == fqn || e.to == fqn)
    }

    fn is_under(&self, fqn: &str, roots: &[PathBuf]) -> bool {
        self.sources
            .get(fqn)
            .is_some_and(|p| roots.iter().any(|r| p.starts_with(r)))
    }

    /// Test types related to `fqn`: any test-root type with an edge into it,
    /// plus `<Target>Test` / `Test<Target>` naming matches.
    pub fn related_tests(&self, fqn: &str, test_roots: &[PathBuf]) -> BTreeSet<String> {
        let simple = fqn.rsplit('.').next().unwrap_or(fqn);
        let conventional = [format!("{simple}Test"), format!("Test{simple}")];
        self.nodes
            .iter()
            .filter(|n| n.as_str() != fqn && self.is_under(n, test_roots))
            .filter(|n| {
                let n_simple = n.rsplit('.').next().unwrap_or(n);
                conventional.iter().any(|c| c == n_simple) || self.edges.iter().any(|e| &e.from == *n && e.to == fqn)
            })
            .cloned()
            .collect()
    }

    /// Strongly connected components with more than one member, each sorted
    /// so that it starts at its lexicographically least FQN.
    pub fn find_cycles(&self) -> Vec<Vec<String>> {
        let mut graph = DiGraph::<&str, ()>::new();
        let mut index = BTreeMap::new();
        for n in &self.nodes {
            index.insert(n.as_str(), graph.add_node(n.as_str()));
        }
        let mut seen = BTreeSet::new();
        for e in &self.edges {
            if seen.insert((e.from.as_str(), e.to.as_str())) {
                graph.add_edge(index[e.from.as_str()], index[e.to.as_str()], ());
            }
        }
        let mut cycles: Vec<Vec<String>> = tarjan_scc(&graph)
            .into_iter()
            .filter(|scc| scc.len() > 1)
            .map(|scc| {
                let mut members: Vec<String> = scc.iter().map(|&i| graph[i].to_string()).collect();
                members.sort();
                members
            })
            .collect();
        cycles.sort();
        cycles
    }

    /// JSON document `{nodes, edges}`; with a target, restricted to the
    /// target's neighborhood and annotated with its dependents.
    pub fn to_json(&self, target: Option<&str>) -> Result<serde_json::Value, GraphError> {
        let edges: Vec<&Edge> = match target {
            Some(t) => {
                self.require(t)?;
                self.edges_of(t).collect()
            }
            None => self.edges.iter().collect(),
        };
        let nodes: BTreeSet<&str> = match target {
            Some(t) => edges
                .iter()
                .flat_map(|e| [e.from.as_str(), e.to.as_str()])
                .chain([t])
                .collect(),
            None => self.nodes.iter().map(String::as_str).collect(),
        };
        let mut doc = serde_json::json!({
            "nodes": nodes,
            "edges": edges,
        });
        if let Some(t) = target {
            doc["target"] = serde_json::json!(t);
            doc["dependents"] = serde_json::json!(self.first_degree_dependents(t)?);
        }
        Ok(doc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeBundle {
    pub target_fqn: String,
    pub target_path: PathBuf,
    pub target_source: String,
    pub dependent_sources: BTreeMap<String, String>,
    /// Dependents in the order they were considered for inclusion.
    pub dependent_order: Vec<String>,
    pub truncated: bool,
}

impl CodeBundle {
    pub fn estimated_tokens(&self) -> usize {
        estimate_tokens(&self.target_source)
            + self
                .dependent_sources
                .values()
                .map(|s| estimate_tokens(s))
                .sum::<usize>()
    }
}

/// Retrieves the target's source file and the sources of its first-degree
/// dependents, most-coupled first, within `token_budget`.
pub fn collect_bundle(
    model: &DesignModel,
    graph: &DependencyGraph,
    fqn: &str,
    token_budget: usize,
) -> Result<CodeBundle, GraphError> {
    graph.require(fqn)?;
    let unit = model
        .unit_of(fqn)
        .ok_or_else(|| GraphError::UnknownType { fqn: fqn.to_string() })?;
    let target_tokens = estimate_tokens(&unit.raw_text);
    if target_tokens > token_budget {
        return Err(GraphError::TargetOverBudget {
            fqn: fqn.to_string(),
            tokens: target_tokens,
            budget: token_budget,
        });
    }

    let mut dependents: Vec<(usize, String)> = graph
        .first_degree_dependents(fqn)?
        .into_iter()
        .filter(|d| model.unit_of(d).is_some_and(|u| u.path != unit.path))
        .map(|d| (graph.edge_kinds(&d, fqn).len(), d))
        .collect();
    dependents.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));

    let mut bundle = CodeBundle {
        target_fqn: fqn.to_string(),
        target_path: unit.path.clone(),
        target_source: unit.raw_text.clone(),
        dependent_sources: BTreeMap::new(),
        dependent_order: dependents.iter().map(|(_, d)| d.clone()).collect(),
        truncated: false,
    };
    let mut used = target_tokens;
    for (_, dep) in &dependents {
        let text = &model.unit_of(dep).expect("dependent has a unit").raw_text;
        let cost = estimate_tokens(text);
        if used + cost > token_budget {
            bundle.truncated = true;
            break;
        }
        used += cost;
        bundle.dependent_sources.insert(dep.clone(), text.clone());
    }
    Ok(bundle)
}

/// Source file of a project type, relative to the project root.
pub fn source_path<'a>(graph: &'a DependencyGraph, fqn: &str) -> Option<&'a Path> {
    graph.sources.get(fqn).map(PathBuf::as_path)
}

#[cfg(test)]
mod tests {
    use std::path::Path;

    use super::*;
    use crate::source_model::{build_design_model, parse_source};

    fn model(files: &[(&str, &str)]) -> DesignModel {
        let units = files
            .iter()
            .map(|(path, src)| {
                let mut u = parse_source(src, Path::new(path)).unwrap();
                u.is_test = path.starts_with("src/test/java");
                u
            })
            .collect();
        build_design_model(units).unwrap()
    }

    fn edge(from: &str, to: &str, kind: EdgeKind) -> Edge {
        Edge {
            from: from.into(),
            to: to.into(),
            kind,
        }
    }

    #[test]
    fn field_and_invocation_edges() {
        let m = model(&[
            (
                "A.java",
                "package p; class A { B b; java.util.List l; void f() { Object o = new C(); } }",
            ),
            ("B.java", "package p; class B {}"),
            ("C.java", "package p; class C {}"),
        ]);
        let g = extract_dependencies(&m);
        assert!(g.edges.contains(&edge("p.A", "p.B", EdgeKind::FieldType)));
        assert!(g.edges.contains(&edge("p.A", "p.C", EdgeKind::Invocation)));
        assert!(g.external_edges.iter().any(|e| e.to_name == "java.util.List"));
        assert!(!g.nodes.contains("java.util.List"));
    }

    #[test]
    fn no_self_edges() {
        let m = model(&[(
            "A.java",
            "package p; class A { A next; A copy(A other) { return new A(); } }",
        )]);
        let g = extract_dependencies(&m);
        assert!(g.edges.is_empty());
    }

    #[test]
    fn dependents_and_unknown() {
        let m = model(&[
            ("A.java", "package p; class A { B b; }"),
            ("B.java", "package p; class B {}"),
            ("C.java", "package p; class C {}"),
        ]);
        let g = extract_dependencies(&m);
        assert_eq!(
            g.first_degree_dependents("p.B").unwrap(),
            BTreeSet::from(["p.A".to_string()])
        );
        assert!(g.first_degree_dependents("p.C").unwrap().is_empty());
        assert_eq!(
            g.first_degree_dependents("p.Nope"),
            Err(GraphError::UnknownType { fqn: "p.Nope".into() })
        );
    }

    #[test]
    fn related_tests_by_edge_and_name() {
        let m = model(&[
            ("src/main/java/p/Account.java", "package p; public class Account {}"),
            ("src/main/java/p/Foo.java", "package p; public class Foo {}"),
            (
                "src/test/java/p/AccountTest.java",
                "package p; class AccountTest { void t() { Account a = new Account(); } }",
            ),
            ("src/test/java/p/FooTest.java", "package p; class FooTest { }"),
        ]);
        let g = extract_dependencies(&m);
        let roots = [PathBuf::from("src/test/java")];
        assert_eq!(
            g.related_tests("p.Account", &roots),
            BTreeSet::from(["p.AccountTest".to_string()])
        );
        assert_eq!(
            g.related_tests("p.Foo", &roots),
            BTreeSet::from(["p.FooTest".to_string()])
        );
        assert!(g.related_tests("p.Foo", &[]).is_empty());
    }

    #[test]
    fn cycles_are_canonical() {
        let m = model(&[
            ("B.java", "package p; class B { A a; }"),
            ("A.java", "package p; class A { B b; }"),
            ("C.java", "package p; class C { A a; }"),
        ]);
        let g = extract_dependencies(&m);
        assert_eq!(g.find_cycles(), vec![vec!["p.A".to_string(), "p.B".to_string()]]);
    }

    #[test]
    fn bundle_orders_by_coupling_and_truncates() {
        let m = model(&[
            ("T.java", "package p; class T {}"),
            ("D1.java", "package p; class D1 { T t; }"),
            (
                "D2.java",
                "package p; class D2 extends T { T t; T get() { return null; } }",
            ),
        ]);
        let g = extract_dependencies(&m);
        let big = collect_bundle(&m, &g, "p.T", 10_000).unwrap();
        assert_eq!(big.dependent_order, ["p.D2", "p.D1"]);
        assert!(!big.truncated);
        assert_eq!(big.dependent_sources.len(), 2);

        let target_only = crate::llm::estimate_tokens(&big.target_source);
        let tight = collect_bundle(&m, &g, "p.T", target_only).unwrap();
        assert!(tight.truncated);
        assert!(tight.dependent_sources.is_empty());
    }

    #[test]
    fn target_over_budget() {
        let body = "x".repeat(20_000);
        let src = format!("package p; class Big {{ String s = \"{body}\"; }}");
        let m = model(&[("Big.java", &src)]);
        let g = extract_dependencies(&m);
        assert!(matches!(
            collect_bundle(&m, &g, "p.Big", 4096),
            Err(GraphError::TargetOverBudget { budget: 4096, .. })
        ));
    }

    #[test]
    fn graph_json_shape() {
        let m = model(&[
            ("A.java", "package p; class A { B b; }"),
            ("B.java", "package p; class B {}"),
        ]);
        let g = extract_dependencies(&m);
        let doc = g.to_json(None).unwrap();
        assert_eq!(doc["nodes"], serde_json::json!(["p.A", "p.B"]));
        assert_eq!(
            doc["edges"][0],
            serde_json::json!({"from": "p.A", "to": "p.B", "kind": "field_type"})
        );
        let focused = g.to_json(Some("p.B")).unwrap();
        assert_eq!(focused["dependents"], serde_json::json!(["p.A"]));
    }
}
