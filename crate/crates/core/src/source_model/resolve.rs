use std::collections::{BTreeMap, BTreeSet};

use super::{DesignModel, ModelError, Resolution, SourceUnit, TypeDecl, TypeRef};

/// Resolves type references across the units and materializes the
/// inheritance hierarchy.
///
/// Lookup order for a written name: exact FQN, member types of the
/// enclosing declarations, single-type imports, same package, wildcard
/// imports. Anything left is external.
pub fn build_design_model(mut units: Vec<SourceUnit>) -> Result<DesignModel, ModelError> {
    let mut known = BTreeSet::new();
    for unit in &units {
        for t in &unit.types {
            if !known.insert(t.fqn.clone()) {
                return Err(ModelError::DuplicateType { fqn: t.fqn.clone() });
            }
        }
    }

    for unit in &mut units {
        let ctx = UnitContext::new(unit, &known);
        let mut types = std::mem::take(&mut unit.types);
        for t in &mut types {
            resolve_type(t, &ctx);
        }
        unit.types = types;
    }

    let mut types = BTreeMap::new();
    let mut type_unit = BTreeMap::new();
    let mut hierarchy = BTreeMap::new();
    for (idx, unit) in units.iter().enumerate() {
        for t in &unit.types {
            if let Some(parent) = t.supertype.as_ref().and_then(|s| s.project_fqn()) {
                hierarchy.insert(t.fqn.clone(), parent.to_string());
            }
            types.insert(t.fqn.clone(), t.clone());
            type_unit.insert(t.fqn.clone(), idx);
        }
    }

    // Reject inheritance cycles; each chain walk is bounded by the type count.
    for start in hierarchy.keys() {
        let mut seen = BTreeSet::from([start.as_str()]);
        let mut cur = start.as_str();
        while let Some(parent) = hierarchy.get(cur) {
            if !seen.insert(parent.as_str()) {
                return Err(ModelError::CyclicHierarchy { fqn: start.clone() });
            }
            cur = parent;
        }
    }

    Ok(DesignModel {
        types,
        hierarchy,
        units,
        type_unit,
    })
}

struct UnitContext<'a> {
    known: &'a BTreeSet<String>,
    package: String,
    single_imports: BTreeMap<String, String>,
    wildcard_imports: Vec<String>,
}

impl<'a> UnitContext<'a> {
    fn new(unit: &SourceUnit, known: &'a BTreeSet<String>) -> Self {
        let mut single_imports = BTreeMap::new();
        let mut wildcard_imports = Vec::new();
        for imp in unit.imports.iter().filter(|i| !i.is_static) {
            if imp.wildcard {
                wildcard_imports.push(imp.name.clone());
            } else {
                let simple = imp.name.rsplit('.').next().unwrap_or(&imp.name).to_string();
                single_imports.insert(simple, imp.name.clone());
            }
        }
        Self {
            known,
            package: unit.package.clone(),
            single_imports,
            wildcard_imports,
        }
    }

    fn qualify(&self, simple: &str) -> String {
        if self.package.is_empty() {
            simple.to_string()
        } else {
            format!("{}.{}", self.package, simple)
        }
    }

    fn lookup(&self, name: &str, scope: &str) -> Resolution {
        if self.known.contains(name) {
            return Resolution::Project(name.to_string());
        }
        // member types visible from the declaring type and its enclosers
        let mut outer = Some(scope);
        while let Some(s) = outer {
            let candidate = format!("{s}.{name}");
            if self.known.contains(&candidate) {
                return Resolution::Project(candidate);
            }
            outer = s.rsplit_once('.').map(|(head, _)| head);
        }
        let (head, tail) = match name.split_once('.') {
            Some((h, t)) => (h, Some(t)),
            None => (name, None),
        };
        let with_tail = |base: &str| match tail {
            Some(t) => format!("{base}.{t}"),
            None => base.to_string(),
        };
        if let Some(full) = self.single_imports.get(head) {
            let candidate = with_tail(full);
            if self.known.contains(&candidate) {
                return Resolution::Project(candidate);
            }
            return Resolution::External;
        }
        let candidate = with_tail(&self.qualify(head));
        if self.known.contains(&candidate) {
            return Resolution::Project(candidate);
        }
        for pkg in &self.wildcard_imports {
            let candidate = with_tail(&format!("{pkg}.{head}"));
            if self.known.contains(&candidate) {
                return Resolution::Project(candidate);
            }
        }
        Resolution::External
    }

    fn resolve(&self, r: &mut TypeRef, scope: &str) {
        if r.resolution == Resolution::Primitive {
            return;
        }
        r.resolution = self.lookup(&r.name, scope);
    }
}

fn resolve_type(t: &mut TypeDecl, ctx: &UnitContext<'_>) {
    let scope = t.fqn.clone();
    // supertypes resolve from the enclosing scope, not the type itself
    let outer_scope = t
        .enclosing
        .clone()
        .unwrap_or_else(|| ctx.qualify("").trim_end_matches('.').to_string());
    if let Some(s) = &mut t.supertype {
        ctx.resolve(s, &outer_scope);
        if s.project_fqn() == Some(t.fqn.as_str()) {
            s.resolution = Resolution::External;
        }
    }
    for i in &mut t.interfaces {
        ctx.resolve(i, &outer_scope);
    }
    for f in &mut t.fields {
        ctx.resolve(&mut f.ty, &scope);
        f.initializer_types = f
            .initializer_types
            .iter()
            .cloned()
            .map(|mut r| {
                ctx.resolve(&mut r, &scope);
                r
            })
            .collect();
    }
    for m in &mut t.methods {
        for p in &mut m.params {
            ctx.resolve(&mut p.ty, &scope);
        }
        if let Some(r) = &mut m.return_type {
            ctx.resolve(r, &scope);
        }
        m.body_stats.invoked_types = m
            .body_stats
            .invoked_types
            .iter()
            .cloned()
            .map(|mut r| {
                ctx.resolve(&mut r, &scope);
                r
            })
            .collect();
    }
}
