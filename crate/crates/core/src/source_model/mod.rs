//! Parsed design model of a Java project.
//!
//! The parser covers the declaration-level subset needed for design metrics,
//! smells and dependency extraction: package and import clauses, classes,
//! interfaces and enums (including nested ones), fields, constructors and
//! methods. Method bodies are not turned into an AST; they are scanned at
//! token level for decision points, field accesses, instantiated types and
//! numeric literals. Generics are erased to raw type names and annotations
//! are skipped.

mod lexer;
mod parser;
mod resolve;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

pub use lexer::literal_value;
pub use parser::parse_source;
pub use resolve::build_design_model;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: u32,
    pub message: String,
}

impl ParseError {
    pub fn new(line: u32, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("duplicate type declaration {fqn}")]
    DuplicateType { fqn: String },
    #[error("unknown type {fqn}")]
    UnknownType { fqn: String },
    #[error("inheritance cycle through {fqn}")]
    CyclicHierarchy { fqn: String },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: ParseError,
    },
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypeKind {
    Class,
    Interface,
    Enum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modifier {
    Public,
    Protected,
    Private,
    Static,
    Abstract,
    Final,
    Default,
    Native,
    Synchronized,
    Transient,
    Volatile,
    Strictfp,
    Sealed,
    NonSealed,
}

impl Modifier {
    pub fn from_keyword(word: &str) -> Option<Self> {
        Some(match word {
            "public" => Self::Public,
            "protected" => Self::Protected,
            "private" => Self::Private,
            "static" => Self::Static,
            "abstract" => Self::Abstract,
            "final" => Self::Final,
            "default" => Self::Default,
            "native" => Self::Native,
            "synchronized" => Self::Synchronized,
            "transient" => Self::Transient,
            "volatile" => Self::Volatile,
            "strictfp" => Self::Strictfp,
            "sealed" => Self::Sealed,
            _ => return None,
        })
    }
}

pub type Modifiers = BTreeSet<Modifier>;

/// How a type reference was resolved against the project.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "fqn")]
pub enum Resolution {
    /// Not yet resolved; only seen on freshly parsed units.
    Unresolved,
    Primitive,
    Project(String),
    External,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TypeRef {
    /// Raw (erased) name as written, possibly qualified.
    pub name: String,
    pub array_dims: u8,
    pub resolution: Resolution,
}

pub const PRIMITIVES: &[&str] = &[
    "boolean", "byte", "char", "short", "int", "long", "float", "double", "void", "var",
];

impl TypeRef {
    pub fn new(name: impl Into<String>, array_dims: u8) -> Self {
        let name = name.into();
        let resolution = if PRIMITIVES.contains(&name.as_str()) {
            Resolution::Primitive
        } else {
            Resolution::Unresolved
        };
        Self {
            name,
            array_dims,
            resolution,
        }
    }

    /// Erased display name used in signatures, e.g. `int[]` or `List`.
    pub fn display(&self) -> String {
        let mut s = self.simple_name().to_string();
        for _ in 0..self.array_dims {
            s.push_str("[]");
        }
        s
    }

    pub fn simple_name(&self) -> &str {
        self.name.rsplit('.').next().unwrap_or(&self.name)
    }

    pub fn project_fqn(&self) -> Option<&str> {
        match &self.resolution {
            Resolution::Project(fqn) => Some(fqn),
            _ => None,
        }
    }

    pub fn is_external(&self) -> bool {
        self.resolution == Resolution::External
    }
}

impl fmt::Display for TypeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LineRange {
    pub start: u32,
    pub end: u32,
}

impl LineRange {
    pub fn new(start: u32, end: u32) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, line: u32) -> bool {
        self.start <= line && line <= self.end
    }
}

/// A numeric literal found in a method body or a field initializer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericLiteral {
    pub text: String,
    pub value: f64,
    pub negated: bool,
    pub line: u32,
}

impl NumericLiteral {
    pub fn signed_value(&self) -> f64 {
        if self.negated {
            -self.value
        } else {
            self.value
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BodyStats {
    /// Source lines inside the declaration that carry at least one token.
    pub loc: u32,
    pub decision_points: u32,
    pub accessed_fields: BTreeSet<String>,
    pub invoked_types: BTreeSet<TypeRef>,
    /// Parameters and local variables declared in the body.
    pub local_names: BTreeSet<String>,
    pub literals: Vec<NumericLiteral>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub ty: TypeRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodDecl {
    pub name: String,
    pub signature: String,
    pub params: Vec<Param>,
    /// `None` for constructors.
    pub return_type: Option<TypeRef>,
    pub is_constructor: bool,
    pub modifiers: Modifiers,
    pub body_stats: BodyStats,
    pub line_range: LineRange,
}

impl MethodDecl {
    pub fn has(&self, m: Modifier) -> bool {
        self.modifiers.contains(&m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldDecl {
    pub name: String,
    pub ty: TypeRef,
    pub modifiers: Modifiers,
    pub is_constant: bool,
    pub line: u32,
    /// Numeric literals in the initializer expression.
    pub initializer_literals: Vec<NumericLiteral>,
    pub initializer_types: BTreeSet<TypeRef>,
}

impl FieldDecl {
    pub fn has(&self, m: Modifier) -> bool {
        self.modifiers.contains(&m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeDecl {
    pub fqn: String,
    pub kind: TypeKind,
    pub supertype: Option<TypeRef>,
    pub interfaces: Vec<TypeRef>,
    pub fields: Vec<FieldDecl>,
    pub methods: Vec<MethodDecl>,
    pub modifiers: Modifiers,
    pub line_range: LineRange,
    /// Code lines (lines carrying tokens) inside the declaration.
    pub loc: u32,
    /// FQN of the lexically enclosing type for nested declarations.
    pub enclosing: Option<String>,
}

impl TypeDecl {
    pub fn simple_name(&self) -> &str {
        self.fqn.rsplit('.').next().unwrap_or(&self.fqn)
    }

    pub fn has(&self, m: Modifier) -> bool {
        self.modifiers.contains(&m)
    }

    /// Methods excluding constructors.
    pub fn plain_methods(&self) -> impl Iterator<Item = &MethodDecl> {
        self.methods.iter().filter(|m| !m.is_constructor)
    }

    pub fn field(&self, name: &str) -> Option<&FieldDecl> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn method_by_signature(&self, signature: &str) -> Option<&MethodDecl> {
        self.methods.iter().find(|m| m.signature == signature)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Import {
    pub name: String,
    pub is_static: bool,
    pub wildcard: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceUnit {
    pub path: PathBuf,
    pub package: String,
    pub imports: Vec<Import>,
    pub types: Vec<TypeDecl>,
    pub raw_text: String,
    pub line_count: u32,
    /// True when the unit was discovered under a test root.
    #[serde(default)]
    pub is_test: bool,
}

impl SourceUnit {
    pub fn qualify(&self, simple: &str) -> String {
        if self.package.is_empty() {
            simple.to_string()
        } else {
            format!("{}.{}", self.package, simple)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignModel {
    pub types: BTreeMap<String, TypeDecl>,
    /// child FQN -> parent FQN, project-internal `extends` edges only.
    pub hierarchy: BTreeMap<String, String>,
    pub units: Vec<SourceUnit>,
    /// FQN -> index into `units`.
    pub type_unit: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AncestorOptions {
    /// Append the first external supertype (by name) as a terminal marker.
    pub include_external: bool,
}

impl DesignModel {
    pub fn get(&self, fqn: &str) -> Result<&TypeDecl, ModelError> {
        self.types
            .get(fqn)
            .ok_or_else(|| ModelError::UnknownType { fqn: fqn.to_string() })
    }

    pub fn unit_of(&self, fqn: &str) -> Option<&SourceUnit> {
        self.type_unit.get(fqn).map(|&i| &self.units[i])
    }

    pub fn is_test_type(&self, fqn: &str) -> bool {
        self.unit_of(fqn).is_some_and(|u| u.is_test)
    }

    /// Types declared under production source roots.
    pub fn production_types(&self) -> impl Iterator<Item = &TypeDecl> {
        self.types.values().filter(|t| !self.is_test_type(&t.fqn))
    }

    /// Top-level production types, one per refactorable file.
    pub fn top_level_production_types(&self) -> impl Iterator<Item = &TypeDecl> {
        self.production_types().filter(|t| t.enclosing.is_none())
    }

    pub fn ancestors(&self, fqn: &str) -> Result<Vec<String>, ModelError> {
        self.ancestors_with(fqn, AncestorOptions::default())
    }

    pub fn ancestors_with(&self, fqn: &str, opts: AncestorOptions) -> Result<Vec<String>, ModelError> {
        let mut current = self.get(fqn)?;
        let mut chain = Vec::new();
        let mut seen = BTreeSet::from([fqn.to_string()]);
        while let Some(sup) = &current.supertype {
            match &sup.resolution {
                Resolution::Project(parent) => {
                    if !seen.insert(parent.clone()) {
                        return Err(ModelError::CyclicHierarchy { fqn: parent.clone() });
                    }
                    chain.push(parent.clone());
                    current = self.get(parent)?;
                }
                _ => {
                    if opts.include_external {
                        chain.push(sup.name.clone());
                    }
                    break;
                }
            }
        }
        Ok(chain)
    }

    /// Direct project-internal subtypes via `extends`.
    pub fn children(&self, fqn: &str) -> Vec<&str> {
        self.hierarchy
            .iter()
            .filter(|(_, parent)| parent.as_str() == fqn)
            .map(|(child, _)| child.as_str())
            .collect()
    }
}

/// Parses every `.java` file under the given roots (relative to `project`).
///
/// Paths stored in the units are relative to `project`. Files that fail to
/// parse are returned separately so callers can report and continue.
pub fn load_units(
    project: &Path,
    source_roots: &[PathBuf],
    test_roots: &[PathBuf],
) -> Result<(Vec<SourceUnit>, Vec<ModelError>), ModelError> {
    let mut files = Vec::new();
    for (roots, is_test) in [(source_roots, false), (test_roots, true)] {
        for root in roots {
            let dir = project.join(root);
            if !dir.is_dir() {
                continue;
            }
            for entry in WalkDir::new(&dir).sort_by_file_name() {
                let entry = entry.map_err(|e| ModelError::Io {
                    path: dir.clone(),
                    source: e.into(),
                })?;
                if entry.file_type().is_file() && entry.path().extension().is_some_and(|e| e == "java") {
                    files.push((entry.into_path(), is_test));
                }
            }
        }
    }

    let parsed: Vec<Result<SourceUnit, ModelError>> = files
        .par_iter()
        .map(|(path, is_test)| {
            let text = std::fs::read_to_string(path).map_err(|e| ModelError::Io {
                path: path.clone(),
                source: e,
            })?;
            let rel = path.strip_prefix(project).unwrap_or(path).to_path_buf();
            let mut unit = parse_source(&text, &rel).map_err(|e| ModelError::Parse {
                path: rel.clone(),
                source: e,
            })?;
            unit.is_test = *is_test;
            Ok(unit)
        })
        .collect();

    let mut units = Vec::new();
    let mut errors = Vec::new();
    for r in parsed {
        match r {
            Ok(u) => units.push(u),
            Err(e @ ModelError::Parse { .. }) => errors.push(e),
            Err(e) => return Err(e),
        }
    }
    Ok((units, errors))
}

/// Loads and builds the design model of a project, skipping unparseable files.
pub fn load_project(
    project: &Path,
    source_roots: &[PathBuf],
    test_roots: &[PathBuf],
) -> Result<(DesignModel, Vec<ModelError>), ModelError> {
    let (units, errors) = load_units(project, source_roots, test_roots)?;
    for e in &errors {
        log::warn!("skipping unparseable source: {e}");
    }
    Ok((build_design_model(units)?, errors))
}
