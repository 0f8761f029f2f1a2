//! Engine configuration.
//!
//! Values come from `<workspace>/refagent.toml` when present, otherwise from
//! defaults; command-line flags are applied on top by the caller. Relative
//! paths in the file are resolved against the workspace. Credentials are
//! never read from the file, only from the environment.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::llm::BackendConfig;
use crate::quality::CoefficientTable;
use crate::smells::Thresholds;
use crate::toolchain::{BuildAdapter, GeneratorConfig};

pub const CONFIG_FILE: &str = "refagent.toml";
pub const DEFAULT_JOURNAL: &str = ".refagent/journal";
/// Upper bound of either feedback loop.
pub const MAX_ITERATIONS: u32 = 20;
pub const MIN_TOKEN_BUDGET: usize = 256;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {detail}")]
    File { path: PathBuf, detail: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Planner context switches; `true` keeps the component enabled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ablation {
    /// Metrics and smells table.
    pub context: bool,
    /// Dependency analysis section and graph tool.
    pub depgraph: bool,
    /// Dependent-class sources and the code search tool.
    pub codesearch: bool,
}

impl Default for Ablation {
    fn default() -> Self {
        Self {
            context: true,
            depgraph: true,
            codesearch: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub backend: BackendConfig,
    pub token_budget: usize,
    pub max_compile_iters: u32,
    pub max_test_iters: u32,
    pub seed: u64,
    pub thresholds: Thresholds,
    /// `default`, `printed`, `printed-literal`, or a TOML file path.
    pub coefficient_table: String,
    pub ablation: Ablation,
    pub source_roots: Vec<PathBuf>,
    pub test_roots: Vec<PathBuf>,
    pub toolchain: BuildAdapter,
    pub generator: GeneratorConfig,
    /// Ask the backend for an error summary in addition to the digest.
    pub llm_summaries: bool,
    /// Tool-call rounds the planner may use before it must answer.
    pub planner_tool_rounds: u32,
    /// Command run in the workspace after each committed session, with
    /// `{fqn}` replaced by the class; empty disables it.
    pub commit_hook: Vec<String>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            backend: BackendConfig::default(),
            token_budget: 4096,
            max_compile_iters: MAX_ITERATIONS,
            max_test_iters: MAX_ITERATIONS,
            seed: 0,
            thresholds: Thresholds::default(),
            coefficient_table: "default".into(),
            ablation: Ablation::default(),
            source_roots: vec![PathBuf::from("src/main/java")],
            test_roots: vec![PathBuf::from("src/test/java")],
            toolchain: BuildAdapter::maven(),
            generator: GeneratorConfig::None,
            llm_summaries: false,
            planner_tool_rounds: 3,
            commit_hook: Vec::new(),
        }
    }
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl EngineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Reads `<workspace>/refagent.toml`, falling back to defaults when the
    /// file does not exist.
    pub fn load(workspace: &Path) -> Result<Self, ConfigError> {
        let path = workspace.join(CONFIG_FILE);
        let mut cfg = if path.is_file() {
            let text = std::fs::read_to_string(&path).map_err(|e| ConfigError::File {
                path: path.clone(),
                detail: e.to_string(),
            })?;
            toml::from_str(&text).map_err(|e| ConfigError::File {
                path: path.clone(),
                detail: e.to_string(),
            })?
        } else {
            EngineConfig::default()
        };
        cfg.resolve_paths(workspace);
        Ok(cfg)
    }

    /// Makes file references absolute. Source and test roots stay relative
    /// to the workspace.
    pub fn resolve_paths(&mut self, workspace: &Path) {
        for p in [&mut self.backend.playbook_path, &mut self.backend.record_path]
            .into_iter()
            .flatten()
        {
            resolve(workspace, p);
        }
        if let GeneratorConfig::Stub { dir } = &mut self.generator {
            resolve(workspace, dir);
        }
        let table = Path::new(&self.coefficient_table);
        if table.extension().is_some_and(|e| e == "toml") && table.is_relative() {
            self.coefficient_table = workspace.join(table).to_string_lossy().into_owned();
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let iters = 1..=MAX_ITERATIONS;
        if !iters.contains(&self.max_compile_iters) || !iters.contains(&self.max_test_iters) {
            return Err(ConfigError::Invalid(format!(
                "iteration caps must be within 1..={MAX_ITERATIONS}"
            )));
        }
        if self.token_budget < MIN_TOKEN_BUDGET {
            return Err(ConfigError::Invalid(format!(
                "token_budget must be at least {MIN_TOKEN_BUDGET}"
            )));
        }
        if self.source_roots.is_empty() {
            return Err(ConfigError::Invalid("at least one source root is required".into()));
        }
        self.thresholds.validate().map_err(ConfigError::Invalid)?;
        Ok(())
    }

    pub fn coefficients(&self) -> Result<CoefficientTable, ConfigError> {
        CoefficientTable::named(&self.coefficient_table).map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::BackendKind;

    #[test]
    fn defaults() {
        let c = EngineConfig::default();
        assert_eq!(c.token_budget, 4096);
        assert_eq!((c.max_compile_iters, c.max_test_iters, c.seed), (20, 20, 0));
        assert_eq!(c.backend.temperature, 0.7);
        assert!(c.ablation.context && c.ablation.depgraph && c.ablation.codesearch);
        c.validate().unwrap();
    }

    #[test]
    fn file_values_override_defaults() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join(CONFIG_FILE),
            r#"
seed = 7
token_budget = 1000

[backend]
kind = "replay"
playbook_path = "cassette.json"

[ablation]
context = false

[generator]
kind = "stub"
dir = "stubs"
"#,
        )
        .unwrap();
        let c = EngineConfig::load(dir.path()).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.token_budget, 1000);
        assert_eq!(c.backend.kind, BackendKind::Replay);
        assert_eq!(c.backend.playbook_path.unwrap(), dir.path().join("cassette.json"));
        assert!(!c.ablation.context && c.ablation.depgraph);
        assert_eq!(
            c.generator,
            GeneratorConfig::Stub {
                dir: dir.path().join("stubs")
            }
        );
        assert_eq!(c.max_compile_iters, 20);
    }

    #[test]
    fn validation_bounds() {
        let mut c = EngineConfig {
            max_compile_iters: 0,
            ..EngineConfig::default()
        };
        assert!(c.validate().is_err());
        c.max_compile_iters = 21;
        assert!(c.validate().is_err());
        c.max_compile_iters = 1;
        c.token_budget = 255;
        assert!(c.validate().is_err());
        c.token_budget = 256;
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(EngineConfig::from_toml_str("sede = 3").is_err());
    }
}
