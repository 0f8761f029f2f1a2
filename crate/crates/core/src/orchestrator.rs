//! Refactoring sessions.
//!
//! A session takes one class through plan, generate, compile loop and test
//! loop, then either commits the candidate to the working tree or restores
//! the pre-session snapshot. The project loop runs one session per class in
//! a seeded order. Everything a session does is written to a journal
//! directory so runs can be inspected, reported on and replayed.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Ablation, ConfigError, EngineConfig};
use crate::depgraph::{collect_bundle, extract_dependencies, CodeBundle, DependencyGraph, GraphError};
use crate::llm::{
    self, extract_code_block, extract_plan, ChatBackend, ChatMessage, ChatRequest, ChatResponse, LlmError, PlanEntry,
    RefactoringPlan, RegionKind, SessionKeys, ToolSpec, Transcript,
};
use crate::metrics::{design_vector, ClassMetrics, MetricVector};
use crate::quality::{
    improvement_rate, qmood_attributes, quality_improvement, Attribute, CoefficientTable, Improvement, QmoodVector,
};
use crate::smells::{counts_by_kind, detect_smells, smell_diff, SmellDelta, SmellInstance, SmellKind};
use crate::source_model::{load_project, DesignModel, LineRange, ModelError, TypeDecl};
use crate::toolchain::{
    compile_project, generate_tests, run_tests, test_fqn, BuildStatus, Diagnostic, Snapshot, TestOutcome,
    ToolchainError, STATE_DIR,
};

#[derive(Debug, thiserror::Error)]
pub enum OrchestratorError {
    #[error("baseline check failed: {detail}")]
    BaselineFailure { detail: String },
    #[error("unknown class {0}")]
    UnknownClass(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Toolchain(#[from] ToolchainError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("{0}")]
    Analysis(String),
    #[error("journal {path}: {detail}")]
    Journal { path: PathBuf, detail: String },
    #[error("revert left the tree at {actual}, snapshot was {expected}")]
    RevertMismatch { expected: String, actual: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    Planning,
    Generating,
    Compiling,
    Testing,
    Committed,
    Reverted,
    Skipped,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Planning => "PLANNING",
            Phase::Generating => "GENERATING",
            Phase::Compiling => "COMPILING",
            Phase::Testing => "TESTING",
            Phase::Committed => "COMMITTED",
            Phase::Reverted => "REVERTED",
            Phase::Skipped => "SKIPPED",
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, Phase::Committed | Phase::Reverted | Phase::Skipped)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttemptKind {
    Initial,
    CompileFix,
    TestFix,
}

impl AttemptKind {
    fn phase(self) -> &'static str {
        match self {
            AttemptKind::Initial => "initial",
            AttemptKind::CompileFix => "compile_fix",
            AttemptKind::TestFix => "test_fix",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttemptVerdict {
    CompileFail,
    TestFail,
    Pass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub number: u32,
    pub kind: AttemptKind,
    pub candidate_source: String,
    pub verdict: AttemptVerdict,
    pub error_summary: String,
    #[serde(default)]
    pub compile_log: Option<String>,
    #[serde(default)]
    pub test_log: Option<String>,
}

/// Plan entry after resolution against the target's parse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedEntry {
    pub entry: PlanEntry,
    pub method_signature: Option<String>,
    pub range: Option<LineRange>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub target_fqn: String,
    pub entries: Vec<ResolvedEntry>,
    pub dropped: Vec<(PlanEntry, String)>,
    /// Entries aimed at other classes; recorded, never applied.
    pub advisory: Vec<PlanEntry>,
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSnapshot {
    pub class: Option<ClassMetrics>,
    pub design: MetricVector,
    pub qmood: QmoodVector,
    pub smell_counts: BTreeMap<SmellKind, u32>,
    pub smells: Vec<SmellInstance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionVerdict {
    pub fqn: String,
    pub verdict: Phase,
    pub reason: String,
    pub compile_attempts: u32,
    pub test_attempts: u32,
    pub snapshot_digest: String,
    pub final_digest: String,
    pub warnings: Vec<String>,
    pub smell_delta: Option<BTreeMap<SmellKind, SmellDelta>>,
    pub quality_improvement: Option<BTreeMap<Attribute, Improvement>>,
    pub timestamp: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Plan only; the workspace is left untouched.
    pub dry_run: bool,
}

// ----------------------------------------------------------------- analysis

/// Model, graph, metrics, quality and smells of a project tree.
pub struct ProjectAnalysis {
    pub model: DesignModel,
    pub graph: DependencyGraph,
    pub classes: Vec<ClassMetrics>,
    pub vector: MetricVector,
    pub qmood: QmoodVector,
    pub smells: Vec<SmellInstance>,
    pub parse_errors: Vec<String>,
}

pub fn analyze_project(
    root: &Path,
    cfg: &EngineConfig,
    coeffs: &CoefficientTable,
) -> Result<ProjectAnalysis, OrchestratorError> {
    let (model, errors) = load_project(root, &cfg.source_roots, &cfg.test_roots)?;
    let graph = extract_dependencies(&model);
    let (classes, vector) = design_vector(&model)?;
    let qmood = qmood_attributes(&vector, coeffs).map_err(|e| OrchestratorError::Analysis(e.to_string()))?;
    let smells = detect_smells(&model, &graph, &cfg.thresholds);
    Ok(ProjectAnalysis {
        model,
        graph,
        classes,
        vector,
        qmood,
        smells,
        parse_errors: errors.iter().map(ToString::to_string).collect(),
    })
}

impl ProjectAnalysis {
    fn snapshot(&self, fqn: Option<&str>) -> MetricsSnapshot {
        MetricsSnapshot {
            class: fqn.and_then(|f| self.classes.iter().find(|c| c.fqn == f).cloned()),
            design: self.vector,
            qmood: self.qmood,
            smell_counts: counts_by_kind(&self.smells),
            smells: self.smells.clone(),
        }
    }
}

// ------------------------------------------------------------------ prompts

/// Inputs of the planner prompt.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerContext {
    pub fqn: String,
    pub target_path: String,
    pub target_source: String,
    pub dependents: Vec<(String, String)>,
    pub dependency_analysis: String,
    pub metrics_table: String,
}

pub const PLANNER_SYSTEM: &str = "You are a software design expert planning refactorings of a Java class. \
Identify refactoring opportunities that improve design quality without changing behavior, and assign a \
refactoring to each affected code region.";

pub const GENERATOR_SYSTEM: &str = "You are a Java developer applying a refactoring plan. Produce the complete, \
compilable source file of the target class. Preserve external behavior.";

const PLAN_FORMAT: &str = "Reply with one ```json block holding an array of plan entries. Each entry has:\n\
- \"region_kind\": one of \"class\", \"method\", \"field\", \"variable\"\n\
- \"identifier\": the name of the region in the target class (a method may be given as name or signature)\n\
- \"line_range\": [start, end] in the target file, or null\n\
- \"refactoring_type\": the refactoring to apply, e.g. \"Extract Method\"\n\
- \"instruction\": a precise instruction another developer can follow\n\
Only plan changes to the target class.";

fn fence(lang: &str, body: &str) -> String {
    format!("```{lang}\n{}\n```", body.trim_end())
}

fn target_section(ctx: &PlannerContext) -> String {
    format!(
        "### Target class\n{} ({})\n{}",
        ctx.fqn,
        ctx.target_path,
        fence("java", &ctx.target_source)
    )
}

fn dependents_section(deps: &[(String, String)]) -> String {
    let mut s = String::from("### Dependent classes");
    if deps.is_empty() {
        s.push_str("\nNo first-degree dependents.");
    }
    for (fqn, src) in deps {
        s.push_str(&format!("\n#### {fqn}\n{}", fence("java", src)));
    }
    s
}

/// Planner conversation for `ctx`; disabled components leave out their
/// section entirely.
pub fn planner_prompt(ctx: &PlannerContext, ablation: Ablation) -> Vec<ChatMessage> {
    let mut sections = vec![target_section(ctx)];
    if ablation.codesearch {
        sections.push(dependents_section(&ctx.dependents));
    }
    if ablation.depgraph {
        sections.push(format!(
            "### Dependency analysis\n{}",
            ctx.dependency_analysis.trim_end()
        ));
    }
    if ablation.context {
        sections.push(format!("### Quality metrics\n{}", ctx.metrics_table.trim_end()));
    }
    sections.push(format!("### Output format\n{PLAN_FORMAT}"));
    vec![
        ChatMessage::system(PLANNER_SYSTEM),
        ChatMessage::user(sections.join("\n\n")),
    ]
}

fn kind_name<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default()
}

pub fn dependency_analysis(graph: &DependencyGraph, fqn: &str) -> String {
    let list = |items: BTreeSet<String>, kinds: &dyn Fn(&str) -> Vec<String>| {
        if items.is_empty() {
            return "- none".to_string();
        }
        items
            .iter()
            .map(|i| format!("- {i} [{}]", kinds(i).join(", ")))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let dependents = graph.first_degree_dependents(fqn).unwrap_or_default();
    let dependencies = graph.first_degree_dependencies(fqn).unwrap_or_default();
    let to_target = |d: &str| graph.edge_kinds(d, fqn).iter().map(kind_name).collect();
    let from_target = |d: &str| graph.edge_kinds(fqn, d).iter().map(kind_name).collect();
    let external: BTreeSet<&str> = graph
        .external_edges
        .iter()
        .filter(|e| e.from == fqn)
        .map(|e| e.to_name.as_str())
        .collect();
    let cycles: Vec<String> = graph
        .find_cycles()
        .into_iter()
        .filter(|c| c.iter().any(|m| m == fqn))
        .map(|c| c.join(" -> "))
        .collect();
    format!(
        "Classes depending on {fqn}:\n{}\nClasses {fqn} depends on:\n{}\nExternal types used: {}\nDependency cycles through {fqn}: {}",
        list(dependents, &to_target),
        list(dependencies, &from_target),
        if external.is_empty() { "none".into() } else { external.into_iter().collect::<Vec<_>>().join(", ") },
        if cycles.is_empty() { "none".into() } else { cycles.join("; ") },
    )
}

pub fn metrics_table(class: Option<&ClassMetrics>, smells: &[SmellInstance]) -> String {
    let mut s = String::new();
    if let Some(c) = class {
        s.push_str("| metric | value |\n|---|---|\n");
        let rows: [(&str, String); 12] = [
            ("DCC", c.dcc.to_string()),
            ("CAM", format!("{:.3}", c.cam)),
            ("CIS", c.cis.to_string()),
            ("NOM", c.nom.to_string()),
            ("NOP", c.nop.to_string()),
            ("DAM", format!("{:.3}", c.dam)),
            ("MOA", c.moa.to_string()),
            ("MFA", format!("{:.3}", c.mfa)),
            ("ANA", c.ana.to_string()),
            ("LCOM", format!("{:.3}", c.lcom)),
            ("LOC", c.loc.to_string()),
            ("max CC", c.max_cc.to_string()),
        ];
        for (k, v) in rows {
            s.push_str(&format!("| {k} | {v} |\n"));
        }
        if !c.methods.is_empty() {
            s.push_str("\n| method | CC | LOC | params |\n|---|---|---|---|\n");
            for m in &c.methods {
                s.push_str(&format!(
                    "| {} | {} | {} | {} |\n",
                    m.signature, m.cc, m.loc, m.param_count
                ));
            }
        }
    }
    s.push_str("\nDetected smells:\n");
    if smells.is_empty() {
        s.push_str("- none\n");
    }
    for sm in smells {
        let place = sm.method.as_deref().unwrap_or("class");
        s.push_str(&format!(
            "- {} in {} (lines {}-{}): {}\n",
            sm.kind.name(),
            place,
            sm.line_range.start,
            sm.line_range.end,
            sm.evidence
        ));
    }
    s
}

/// Feedback carried into a generator prompt.
#[derive(Debug, Clone, PartialEq)]
pub enum GenContext {
    Initial,
    CompileFix { summary: String },
    TestFix { summary: String },
}

impl GenContext {
    fn kind(&self) -> AttemptKind {
        match self {
            GenContext::Initial => AttemptKind::Initial,
            GenContext::CompileFix { .. } => AttemptKind::CompileFix,
            GenContext::TestFix { .. } => AttemptKind::TestFix,
        }
    }
}

pub fn render_plan(entries: &[ResolvedEntry]) -> String {
    entries
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let e = &r.entry;
            let range = r
                .range
                .or(e.line_range)
                .map(|l| format!(", lines {}-{}", l.start, l.end))
                .unwrap_or_default();
            format!(
                "{}. {} on {} `{}`{}: {}",
                i + 1,
                e.refactoring_type,
                kind_name(&e.region_kind),
                e.identifier,
                range,
                e.instruction
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Generator conversation. The plan is restated in every variant.
pub fn generator_prompt(
    plan: &[ResolvedEntry],
    ctx: &PlannerContext,
    ablation: Ablation,
    current: Option<&str>,
    feedback: &GenContext,
) -> Vec<ChatMessage> {
    let mut sections = vec![
        format!("### Refactoring plan\n{}", render_plan(plan)),
        target_section(ctx),
    ];
    if ablation.codesearch && !ctx.dependents.is_empty() {
        sections.push(dependents_section(&ctx.dependents));
    }
    if ablation.context {
        sections.push(format!("### Quality metrics\n{}", ctx.metrics_table.trim_end()));
    }
    if let Some(cur) = current {
        sections.push(format!("### Current candidate\n{}", fence("java", cur)));
    }
    match feedback {
        GenContext::Initial => {}
        GenContext::CompileFix { summary } => sections.push(format!(
            "### Compilation errors\nThe current candidate does not compile.\n{summary}"
        )),
        GenContext::TestFix { summary } => sections.push(format!(
            "### Failing tests\nThe current candidate compiles but changes behavior.\n{summary}"
        )),
    }
    sections.push(format!(
        "### Output format\nThe refactoring plan above remains the guiding principle. Return the complete content \
of {} in a single ```java block.",
        ctx.target_path
    ));
    vec![
        ChatMessage::system(GENERATOR_SYSTEM),
        ChatMessage::user(sections.join("\n\n")),
    ]
}

// ---------------------------------------------------------------- summaries

/// Optional model call that explains an error digest.
pub type Summarizer<'a> = &'a mut dyn FnMut(&str) -> Option<String>;

/// Token budget of an error digest.
pub const SUMMARY_TOKEN_BUDGET: usize = 1024;
const LISTED_LINES: usize = 5;

/// Deterministic digest of compiler diagnostics: grouped by file, sorted by
/// line, repeated messages folded into one entry with a count, cut to
/// `token_budget`. A summarizer's text, when given, is appended.
pub fn summarize_errors(diagnostics: &[Diagnostic], token_budget: usize, summarizer: Option<Summarizer<'_>>) -> String {
    let mut by_file: BTreeMap<&str, BTreeMap<(&str, bool), Vec<u32>>> = BTreeMap::new();
    for d in diagnostics {
        by_file
            .entry(d.file.as_str())
            .or_default()
            .entry((d.message.as_str(), d.severity == crate::toolchain::Severity::Warning))
            .or_default()
            .push(d.line);
    }
    let mut lines = Vec::new();
    for (file, groups) in &by_file {
        lines.push(format!("{file}:"));
        let mut entries: Vec<(Vec<u32>, &str, bool)> = groups
            .iter()
            .map(|((msg, warn), ls)| {
                let mut ls = ls.clone();
                ls.sort_unstable();
                (ls, *msg, *warn)
            })
            .collect();
        entries.sort();
        for (ls, msg, warn) in entries {
            let shown: Vec<String> = ls.iter().take(LISTED_LINES).map(u32::to_string).collect();
            let more = if ls.len() > LISTED_LINES { ",..." } else { "" };
            let count = if ls.len() > 1 {
                format!(" (x{})", ls.len())
            } else {
                String::new()
            };
            let sev = if warn { "warning" } else { "error" };
            let label = if ls.len() > 1 { "lines" } else { "line" };
            lines.push(format!("  {label} {}{more}: {sev}: {msg}{count}", shown.join(",")));
        }
    }
    let digest = truncate_lines(&lines, token_budget);
    append_summary(digest, summarizer)
}

fn truncate_lines(lines: &[String], token_budget: usize) -> String {
    let mut out = String::new();
    for (i, l) in lines.iter().enumerate() {
        if llm::estimate_tokens(&out) + llm::estimate_tokens(l) > token_budget {
            out.push_str(&format!("... {} more lines omitted\n", lines.len() - i));
            break;
        }
        out.push_str(l);
        out.push('\n');
    }
    out.trim_end().to_string()
}

fn append_summary(digest: String, summarizer: Option<Summarizer<'_>>) -> String {
    match summarizer.and_then(|f| f(&digest)) {
        Some(extra) if !extra.trim().is_empty() => format!("{digest}\n\nAnalysis:\n{}", extra.trim()),
        _ => digest,
    }
}

/// Digest of a failing test run.
pub fn summarize_failures(outcome: &TestOutcome, token_budget: usize, summarizer: Option<Summarizer<'_>>) -> String {
    let mut lines = vec![format!(
        "{} of {} tests failed ({} passed, {} skipped)",
        outcome.failed, outcome.total, outcome.passed, outcome.skipped
    )];
    let mut failures: Vec<_> = outcome.failures.iter().collect();
    failures.sort_by(|a, b| a.test_id.cmp(&b.test_id));
    for f in failures {
        lines.push(format!("- {}: {}", f.test_id, f.message));
        for t in f.trace_excerpt.lines() {
            lines.push(format!("    {t}"));
        }
    }
    append_summary(truncate_lines(&lines, token_budget), summarizer)
}

// ------------------------------------------------------------------ journal

const WORKSPACE_TOKEN: &str = "${workspace}";

/// Writes journal files with the workspace location masked so journals do
/// not depend on where the project was checked out.
struct JournalWriter {
    dir: PathBuf,
    masks: Vec<String>,
}

impl JournalWriter {
    fn new(dir: PathBuf, workspace: &Path) -> Result<Self, OrchestratorError> {
        fs::create_dir_all(&dir).map_err(|e| journal_err(&dir, e))?;
        let mut masks: Vec<String> = [Some(workspace.to_path_buf()), workspace.canonicalize().ok()]
            .into_iter()
            .flatten()
            .map(|p| p.to_string_lossy().into_owned())
            .filter(|s| s.len() > 1)
            .collect();
        masks.sort_by_key(|m| std::cmp::Reverse(m.len()));
        masks.dedup();
        Ok(Self { dir, masks })
    }

    fn mask(&self, text: &str) -> String {
        self.masks
            .iter()
            .fold(text.to_string(), |acc, m| acc.replace(m.as_str(), WORKSPACE_TOKEN))
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), OrchestratorError> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|e| journal_err(&path, e))?;
        text.push('\n');
        let text = self.mask(&text);
        fs::write(&path, text).map_err(|e| journal_err(&path, e))
    }

    fn text(&self, name: &str, text: &str) -> Result<(), OrchestratorError> {
        let path = self.dir.join(name);
        fs::write(&path, self.mask(text)).map_err(|e| journal_err(&path, e))
    }
}

fn journal_err(path: &Path, e: impl std::fmt::Display) -> OrchestratorError {
    OrchestratorError::Journal {
        path: path.to_path_buf(),
        detail: e.to_string(),
    }
}

/// Journal subdirectory of a class.
pub fn session_dir(journal: &Path, fqn: &str) -> PathBuf {
    journal.join(fqn)
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339()
}

/// Unified diff of one file.
pub fn unified_diff(path: &str, before: &str, after: &str) -> String {
    similar::TextDiff::from_lines(before, after)
        .unified_diff()
        .context_radius(3)
        .header(&format!("a/{path}"), &format!("b/{path}"))
        .to_string()
}

// ------------------------------------------------------------------ session

/// Exclusive per-workspace session lock.
struct SessionLock(File);

impl SessionLock {
    fn acquire(workspace: &Path) -> Result<Self, OrchestratorError> {
        let dir = workspace.join(STATE_DIR);
        fs::create_dir_all(&dir).map_err(|e| journal_err(&dir, e))?;
        let path = dir.join("session.lock");
        let f = File::options()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&path)
            .map_err(|e| journal_err(&path, e))?;
        f.lock().map_err(|e| journal_err(&path, e))?;
        Ok(Self(f))
    }
}

impl Drop for SessionLock {
    fn drop(&mut self) {
        let _ = self.0.unlock();
    }
}

enum LoopEnd {
    Done,
    Exhausted(String),
    Aborted(String),
}

struct Session<'a> {
    ws: &'a Path,
    cfg: &'a EngineConfig,
    backend: &'a dyn ChatBackend,
    fqn: String,
    ctx: PlannerContext,
    plan: Vec<ResolvedEntry>,
    tests_filter: Option<BTreeSet<String>>,
    phase: Phase,
    compile_attempts: u32,
    test_attempts: u32,
    attempts: Vec<AttemptRecord>,
    transcript: Transcript,
    warnings: Vec<String>,
}

impl Session<'_> {
    fn ask(
        &mut self,
        keys: SessionKeys,
        messages: Vec<ChatMessage>,
        tools: Vec<ToolSpec>,
    ) -> Result<ChatResponse, LlmError> {
        let request = ChatRequest {
            keys,
            messages,
            tools,
            temperature: self.cfg.backend.temperature,
            max_output_tokens: Some(self.cfg.backend.max_output_tokens),
        };
        let response = llm::complete(self.backend, &request, self.cfg.backend.context_budget)?;
        self.transcript.record(&request, &response);
        Ok(response)
    }

    fn keys(&self, agent: &str, phase: &str, attempt: u32) -> SessionKeys {
        SessionKeys {
            agent: agent.into(),
            phase: phase.into(),
            attempt,
            target: self.fqn.clone(),
        }
    }

    fn summarizer_text(&mut self, phase: &str, digest: &str) -> Option<String> {
        if !self.cfg.llm_summaries {
            return None;
        }
        let keys = self.keys("summarizer", phase, self.attempts.len() as u32);
        let messages = vec![
            ChatMessage::system(
                "Summarize the root causes of these build or test failures for the developer fixing them.",
            ),
            ChatMessage::user(digest.to_string()),
        ];
        match self.ask(keys, messages, Vec::new()) {
            Ok(r) => Some(r.text),
            Err(e) => {
                self.warnings.push(format!("summarizer unavailable: {e}"));
                None
            }
        }
    }

    fn target_file(&self) -> PathBuf {
        self.ws.join(&self.ctx.target_path)
    }

    /// Asks for a candidate and installs it. Returns false when the answer
    /// held no code; the attempt is still recorded.
    fn generate(&mut self, feedback: GenContext) -> Result<bool, String> {
        self.phase = Phase::Generating;
        let number = self.attempts.len() as u32 + 1;
        let current = self
            .attempts
            .iter()
            .rev()
            .find(|a| !a.candidate_source.is_empty())
            .map(|a| a.candidate_source.clone());
        let messages = generator_prompt(&self.plan, &self.ctx, self.cfg.ablation, current.as_deref(), &feedback);
        let keys = self.keys("generator", feedback.kind().phase(), number);
        let response = self
            .ask(keys, messages, Vec::new())
            .map_err(|e| format!("generator failed: {e}"))?;
        let kind = feedback.kind();
        match extract_code_block(&response.text) {
            Ok(source) => {
                let mut text = source;
                text.push('\n');
                let path = self.target_file();
                fs::write(&path, &text).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
                self.attempts.push(AttemptRecord {
                    number,
                    kind,
                    candidate_source: text,
                    verdict: AttemptVerdict::CompileFail,
                    error_summary: String::new(),
                    compile_log: None,
                    test_log: None,
                });
                Ok(true)
            }
            Err(e) => {
                self.attempts.push(AttemptRecord {
                    number,
                    kind,
                    candidate_source: String::new(),
                    verdict: AttemptVerdict::CompileFail,
                    error_summary: format!("{e}; the answer must contain the full class in a ```java block"),
                    compile_log: None,
                    test_log: None,
                });
                Ok(false)
            }
        }
    }

    fn compile_loop(&mut self, mut has_candidate: bool) -> LoopEnd {
        let cap = self.cfg.max_compile_iters;
        loop {
            if self.compile_attempts >= cap {
                return LoopEnd::Exhausted(format!("compile loop exhausted after {cap} attempts"));
            }
            self.phase = Phase::Compiling;
            self.compile_attempts += 1;
            let summary = if has_candidate {
                let outcome = match compile_project(self.ws, &self.cfg.toolchain) {
                    Ok(o) => o,
                    Err(e) => return LoopEnd::Aborted(e.to_string()),
                };
                let last = self.attempts.last_mut().expect("candidate installed");
                last.compile_log = Some(outcome.raw_log.clone());
                if outcome.status == BuildStatus::Success {
                    return LoopEnd::Done;
                }
                let diags: Vec<Diagnostic> = outcome.errors().cloned().collect();
                let digest = summarize_errors(&diags, SUMMARY_TOKEN_BUDGET, None);
                let summary = match self.summarizer_text("compile", &digest) {
                    Some(extra) => append_summary(digest, Some(&mut |_: &str| Some(extra.clone()))),
                    None => digest,
                };
                self.attempts.last_mut().unwrap().error_summary = summary.clone();
                summary
            } else {
                self.attempts
                    .last()
                    .map(|a| a.error_summary.clone())
                    .unwrap_or_default()
            };
            if self.compile_attempts >= cap {
                return LoopEnd::Exhausted(format!("compile loop exhausted after {cap} attempts"));
            }
            has_candidate = match self.generate(GenContext::CompileFix { summary }) {
                Ok(b) => b,
                Err(e) => return LoopEnd::Aborted(e),
            };
        }
    }

    fn test_loop(&mut self) -> LoopEnd {
        let cap = self.cfg.max_test_iters;
        loop {
            self.phase = Phase::Testing;
            self.test_attempts += 1;
            let outcome = match run_tests(self.ws, &self.cfg.toolchain, self.tests_filter.as_ref()) {
                Ok(o) => o,
                Err(e) => return LoopEnd::Aborted(e.to_string()),
            };
            let last = self.attempts.last_mut().expect("candidate installed");
            last.test_log = Some(outcome.raw_log.clone());
            if outcome.all_passed() {
                last.verdict = AttemptVerdict::Pass;
                return LoopEnd::Done;
            }
            last.verdict = AttemptVerdict::TestFail;
            let digest = summarize_failures(&outcome, SUMMARY_TOKEN_BUDGET, None);
            let summary = match self.summarizer_text("test", &digest) {
                Some(extra) => append_summary(digest, Some(&mut |_: &str| Some(extra.clone()))),
                None => digest,
            };
            self.attempts.last_mut().unwrap().error_summary = summary.clone();
            if self.test_attempts >= cap {
                return LoopEnd::Exhausted(format!("test loop exhausted after {cap} attempts"));
            }
            let installed = match self.generate(GenContext::TestFix { summary }) {
                Ok(b) => b,
                Err(e) => return LoopEnd::Aborted(e),
            };
            match self.compile_loop(installed) {
                LoopEnd::Done => {}
                LoopEnd::Exhausted(r) => return LoopEnd::Exhausted(format!("{r} while fixing tests")),
                LoopEnd::Aborted(r) => return LoopEnd::Aborted(r),
            }
        }
    }
}

// ----------------------------------------------------------------- planning

fn planner_tools(ablation: Ablation) -> Vec<ToolSpec> {
    let arg = serde_json::json!({
        "type": "object",
        "properties": {"fqn": {"type": "string", "description": "fully qualified class name"}},
        "required": ["fqn"]
    });
    let mut tools = Vec::new();
    if ablation.depgraph {
        tools.push(ToolSpec {
            name: "dependency_graph".into(),
            description: "Class-level dependency graph around a class".into(),
            parameters: arg.clone(),
        });
    }
    if ablation.context {
        tools.push(ToolSpec {
            name: "class_metrics".into(),
            description: "Design metrics and code smells of a class".into(),
            parameters: arg.clone(),
        });
    }
    if ablation.codesearch {
        tools.push(ToolSpec {
            name: "code_search".into(),
            description: "Source code of a project class".into(),
            parameters: arg,
        });
    }
    tools
}

fn run_tool_call(analysis: &ProjectAnalysis, name: &str, arguments: &str) -> String {
    let fqn = serde_json::from_str::<serde_json::Value>(arguments)
        .ok()
        .and_then(|v| v.get("fqn").and_then(|f| f.as_str()).map(String::from))
        .unwrap_or_default();
    match name {
        "dependency_graph" => match analysis.graph.to_json(Some(&fqn)) {
            Ok(v) => v.to_string(),
            Err(e) => format!("error: {e}"),
        },
        "class_metrics" => {
            let class = analysis.classes.iter().find(|c| c.fqn == fqn);
            let smells: Vec<&SmellInstance> = analysis.smells.iter().filter(|s| s.fqn == fqn).collect();
            match class {
                Some(c) => serde_json::json!({"metrics": c, "smells": smells}).to_string(),
                None => format!("error: unknown class {fqn}"),
            }
        }
        "code_search" => match analysis.model.unit_of(&fqn) {
            Some(u) => u.raw_text.clone(),
            None => format!("error: unknown class {fqn}"),
        },
        other => format!("error: unknown tool {other}"),
    }
}

/// Maps a plan entry onto the target's parse. `Err` carries the reason it
/// was dropped.
fn resolve_entry(model: &DesignModel, target: &TypeDecl, e: &PlanEntry) -> Result<ResolvedEntry, String> {
    let id = e.identifier.trim();
    let simple = target.simple_name();
    let unresolved = || format!("{} `{id}` not found in {}", kind_name(&e.region_kind), target.fqn);
    let resolved = |sig: Option<String>, range: Option<LineRange>| ResolvedEntry {
        entry: e.clone(),
        method_signature: sig,
        range: range.or(e.line_range),
    };
    match e.region_kind {
        RegionKind::Class => {
            let nested = model.types.values().find(|t| {
                t.enclosing.as_deref() == Some(target.fqn.as_str()) && (t.simple_name() == id || t.fqn == id)
            });
            if id == simple || id == target.fqn {
                Ok(resolved(None, Some(target.line_range)))
            } else if let Some(n) = nested {
                Ok(resolved(None, Some(n.line_range)))
            } else {
                Err(unresolved())
            }
        }
        RegionKind::Method => {
            let bare = id.split('(').next().unwrap_or(id).trim();
            let compact: String = id.chars().filter(|c| !c.is_whitespace()).collect();
            let by_sig = target.methods.iter().find(|m| m.signature == compact);
            let by_name: Vec<_> = target.methods.iter().filter(|m| m.name == bare).collect();
            let by_range = e.line_range.and_then(|r| {
                by_name
                    .iter()
                    .find(|m| m.line_range.start <= r.end && r.start <= m.line_range.end)
                    .copied()
            });
            let m = by_sig.or(by_range).or_else(|| by_name.first().copied());
            m.map(|m| resolved(Some(m.signature.clone()), Some(m.line_range)))
                .ok_or_else(unresolved)
        }
        RegionKind::Field => target
            .field(id)
            .map(|f| resolved(None, Some(LineRange::new(f.line, f.line))))
            .ok_or_else(unresolved),
        RegionKind::Variable => {
            let owner = target
                .methods
                .iter()
                .find(|m| m.body_stats.local_names.iter().any(|n| n == id) || m.params.iter().any(|p| p.name == id));
            owner
                .map(|m| resolved(Some(m.signature.clone()), Some(m.line_range)))
                .ok_or_else(unresolved)
        }
    }
}

/// True when the entry names another project class rather than the target.
fn is_foreign(model: &DesignModel, target: &TypeDecl, e: &PlanEntry) -> bool {
    let id = e.identifier.trim();
    let owner = id.split('(').next().unwrap_or(id);
    model.types.keys().any(|fqn| {
        fqn != &target.fqn
            && model
                .types
                .get(fqn)
                .is_some_and(|t| t.enclosing.as_deref() != Some(target.fqn.as_str()))
            && (owner == fqn
                || owner.starts_with(&format!("{fqn}."))
                || (e.region_kind == RegionKind::Class && fqn.rsplit('.').next() == Some(owner)))
    })
}

enum PlanResult {
    Ready(PlanRecord),
    Skip(String, Option<PlanRecord>),
}

const PLANNER_CALLS: u32 = 3;

fn plan(session: &mut Session<'_>, analysis: &ProjectAnalysis) -> PlanResult {
    session.phase = Phase::Planning;
    let base = planner_prompt(&session.ctx, session.cfg.ablation);
    let prompt_text = base[1].content.clone();
    let tools = if session.cfg.planner_tool_rounds > 0 {
        planner_tools(session.cfg.ablation)
    } else {
        Vec::new()
    };
    let target = match analysis.model.get(&session.fqn) {
        Ok(t) => t.clone(),
        Err(e) => return PlanResult::Skip(e.to_string(), None),
    };
    let mut last_error = String::new();
    for call in 1..=PLANNER_CALLS {
        let mut messages = base.clone();
        if call > 1 {
            messages.push(ChatMessage::user(format!(
                "Your previous answer could not be used: {last_error}. Answer again following the output format."
            )));
        }
        let keys = session.keys("planner", "plan", call);
        let mut response = match session.ask(keys.clone(), messages.clone(), tools.clone()) {
            Ok(r) => r,
            Err(e) => return PlanResult::Skip(format!("planner failed: {e}"), None),
        };
        let mut rounds = 0;
        while !response.tool_calls.is_empty() && rounds < session.cfg.planner_tool_rounds {
            rounds += 1;
            let mut assistant = ChatMessage::new(llm::Role::Assistant, response.text.clone());
            assistant.tool_calls = response.tool_calls.clone();
            messages.push(assistant);
            for call in &response.tool_calls {
                messages.push(ChatMessage::tool_result(
                    &call.id,
                    run_tool_call(analysis, &call.name, &call.arguments),
                ));
            }
            let t = if rounds < session.cfg.planner_tool_rounds {
                tools.clone()
            } else {
                Vec::new()
            };
            response = match session.ask(keys.clone(), messages.clone(), t) {
                Ok(r) => r,
                Err(e) => return PlanResult::Skip(format!("planner failed: {e}"), None),
            };
        }
        let parsed: RefactoringPlan = match extract_plan(&response.text, &session.fqn) {
            Ok(p) => p,
            Err(e) => {
                last_error = e.to_string();
                session
                    .warnings
                    .push(format!("planner answer {call} rejected: {last_error}"));
                continue;
            }
        };
        let mut record = PlanRecord {
            target_fqn: session.fqn.clone(),
            entries: Vec::new(),
            dropped: Vec::new(),
            advisory: Vec::new(),
            prompt: prompt_text.clone(),
        };
        for e in parsed.entries {
            match resolve_entry(&analysis.model, &target, &e) {
                Ok(r) => record.entries.push(r),
                Err(_) if is_foreign(&analysis.model, &target, &e) => {
                    session.warnings.push(format!(
                        "plan entry for `{}` targets another class; kept as advisory",
                        e.identifier
                    ));
                    record.advisory.push(e);
                }
                Err(reason) => {
                    session.warnings.push(format!("plan entry dropped: {reason}"));
                    record.dropped.push((e, reason));
                }
            }
        }
        if record.entries.is_empty() {
            return PlanResult::Skip("plan has no applicable entries".into(), Some(record));
        }
        return PlanResult::Ready(record);
    }
    PlanResult::Skip(
        format!("no usable plan after {PLANNER_CALLS} planner answers: {last_error}"),
        None,
    )
}

// ----------------------------------------------------------- entry points

fn planner_context(analysis: &ProjectAnalysis, bundle: &CodeBundle) -> PlannerContext {
    let fqn = &bundle.target_fqn;
    let class = analysis.classes.iter().find(|c| &c.fqn == fqn);
    let smells: Vec<SmellInstance> = analysis.smells.iter().filter(|s| &s.fqn == fqn).cloned().collect();
    PlannerContext {
        fqn: fqn.clone(),
        target_path: bundle.target_path.to_string_lossy().replace('\\', "/"),
        target_source: bundle.target_source.clone(),
        dependents: bundle
            .dependent_order
            .iter()
            .filter_map(|d| bundle.dependent_sources.get(d).map(|s| (d.clone(), s.clone())))
            .collect(),
        dependency_analysis: dependency_analysis(&analysis.graph, fqn),
        metrics_table: metrics_table(class, &smells),
    }
}

/// Planner prompt for `fqn` in the project at `root`, as a session would
/// build it.
pub fn build_planner_prompt(root: &Path, fqn: &str, cfg: &EngineConfig) -> Result<Vec<ChatMessage>, OrchestratorError> {
    let coeffs = cfg.coefficients()?;
    let analysis = analyze_project(root, cfg, &coeffs)?;
    let bundle = collect_bundle(&analysis.model, &analysis.graph, fqn, cfg.token_budget)
        .map_err(|e| OrchestratorError::Analysis(e.to_string()))?;
    Ok(planner_prompt(&planner_context(&analysis, &bundle), cfg.ablation))
}

/// Runs one class session against the current state of `ws`.
pub fn run_class_session(
    ws: &Path,
    fqn: &str,
    cfg: &EngineConfig,
    backend: &dyn ChatBackend,
    journal: &Path,
    opts: RunOptions,
) -> Result<SessionVerdict, OrchestratorError> {
    let coeffs = cfg.coefficients()?;
    let _lock = SessionLock::acquire(ws)?;
    let snapshot = Snapshot::take(ws)?;
    let before = analyze_project(ws, cfg, &coeffs)?;
    if before.model.get(fqn).is_err() {
        return Err(OrchestratorError::UnknownClass(fqn.to_string()));
    }
    let dir = session_dir(journal, fqn);
    if dir.exists() {
        fs::remove_dir_all(&dir).map_err(|e| journal_err(&dir, e))?;
    }
    let writer = JournalWriter::new(dir, ws)?;
    let metrics_before = before.snapshot(Some(fqn));
    writer.json("metrics_before.json", &metrics_before)?;

    let finish = |verdict: Phase,
                  reason: String,
                  session: Option<&Session<'_>>,
                  warnings: Vec<String>,
                  after: Option<&MetricsSnapshot>|
     -> Result<SessionVerdict, OrchestratorError> {
        if verdict != Phase::Committed {
            snapshot.restore(ws)?;
        }
        let final_digest = crate::toolchain::tree_digest(ws)?;
        if verdict != Phase::Committed && final_digest != snapshot.digest {
            return Err(OrchestratorError::RevertMismatch {
                expected: snapshot.digest.clone(),
                actual: final_digest,
            });
        }
        let after = after.unwrap_or(&metrics_before);
        writer.json("metrics_after.json", after)?;
        let changed = verdict == Phase::Committed;
        let v = SessionVerdict {
            fqn: fqn.to_string(),
            verdict,
            reason,
            compile_attempts: session.map_or(0, |s| s.compile_attempts),
            test_attempts: session.map_or(0, |s| s.test_attempts),
            snapshot_digest: snapshot.digest.clone(),
            final_digest,
            warnings,
            smell_delta: changed.then(|| smell_diff(&metrics_before.smells, &after.smells)),
            quality_improvement: changed.then(|| quality_improvement(&metrics_before.qmood, &after.qmood)),
            timestamp: now(),
        };
        if let Some(s) = session {
            for a in &s.attempts {
                writer.json(&format!("attempt_{}.json", a.number), a)?;
            }
            writer.json("transcript.json", &s.transcript)?;
        }
        writer.json("verdict.json", &v)?;
        Ok(v)
    };

    let bundle = match collect_bundle(&before.model, &before.graph, fqn, cfg.token_budget) {
        Ok(b) => b,
        Err(e @ GraphError::TargetOverBudget { .. }) => {
            return finish(Phase::Skipped, e.to_string(), None, Vec::new(), None);
        }
        Err(e) => return Err(OrchestratorError::Analysis(e.to_string())),
    };

    let mut session = Session {
        ws,
        cfg,
        backend,
        fqn: fqn.to_string(),
        ctx: planner_context(&before, &bundle),
        plan: Vec::new(),
        tests_filter: None,
        phase: Phase::Planning,
        compile_attempts: 0,
        test_attempts: 0,
        attempts: Vec::new(),
        transcript: Transcript::default(),
        warnings: Vec::new(),
    };

    // Regression tests are generated from the original sources.
    let mut generated = Vec::new();
    if !opts.dry_run {
        match generate_tests(&cfg.generator, fqn, ws, &cfg.test_roots[0]) {
            Ok(files) => generated = files,
            Err(ToolchainError::GeneratorUnavailable { tool }) => {
                if tool != "none" {
                    session
                        .warnings
                        .push(format!("test generator {tool} unavailable; using developer tests"))
                }
            }
            Err(e) => session.warnings.push(format!("test generation failed: {e}")),
        }
    }
    let mut filter: BTreeSet<String> = before.graph.related_tests(fqn, &cfg.test_roots);
    for f in &generated {
        if let Some(name) = cfg.test_roots.iter().find_map(|r| test_fqn(r, f)) {
            filter.insert(name);
        }
    }
    session.tests_filter = (!filter.is_empty()).then_some(filter);

    let record = match plan(&mut session, &before) {
        PlanResult::Ready(r) => r,
        PlanResult::Skip(reason, record) => {
            if let Some(r) = record {
                writer.json("plan.json", &r)?;
            }
            let warnings = session.warnings.clone();
            return finish(Phase::Skipped, reason, Some(&session), warnings, None);
        }
    };
    writer.json("plan.json", &record)?;
    session.plan = record.entries.clone();
    if opts.dry_run {
        let warnings = session.warnings.clone();
        return finish(Phase::Skipped, "dry run".into(), Some(&session), warnings, None);
    }

    let outcome = match session.generate(GenContext::Initial) {
        Err(e) => LoopEnd::Aborted(e),
        Ok(installed) => match session.compile_loop(installed) {
            LoopEnd::Done => session.test_loop(),
            other => other,
        },
    };
    let warnings = session.warnings.clone();
    match outcome {
        LoopEnd::Done => {
            for f in &generated {
                let _ = fs::remove_file(ws.join(f));
            }
            crate::toolchain::remove_generated_tests(ws, &cfg.test_roots[0], fqn)?;
            let rel = session.ctx.target_path.clone();
            let before_text = String::from_utf8_lossy(snapshot.files.get(Path::new(&rel)).map_or(&[][..], |v| v));
            let after_text = fs::read_to_string(ws.join(&rel)).unwrap_or_default();
            writer.text("diff.patch", &unified_diff(&rel, &before_text, &after_text))?;
            let after = analyze_project(ws, cfg, &coeffs)?;
            let after_snapshot = after.snapshot(Some(fqn));
            let mut warnings = warnings;
            if let Some(w) = run_commit_hook(ws, &cfg.commit_hook, fqn) {
                warnings.push(w);
            }
            finish(
                Phase::Committed,
                "candidate compiles and passes tests".into(),
                Some(&session),
                warnings,
                Some(&after_snapshot),
            )
        }
        LoopEnd::Exhausted(reason) | LoopEnd::Aborted(reason) => {
            finish(Phase::Reverted, reason, Some(&session), warnings, None)
        }
    }
}

/// Runs the configured commit command; returns a warning when it fails.
fn run_commit_hook(ws: &Path, hook: &[String], fqn: &str) -> Option<String> {
    let (program, args) = hook.split_first()?;
    let status = std::process::Command::new(program)
        .args(args.iter().map(|a| a.replace("{fqn}", fqn)))
        .current_dir(ws)
        .status();
    match status {
        Ok(s) if s.success() => None,
        Ok(s) => Some(format!("commit hook exited with {s}")),
        Err(e) => Some(format!("commit hook failed to start: {e}")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectReport {
    pub seed: u64,
    pub order: Vec<String>,
    pub sessions: Vec<SessionVerdict>,
    pub tallies: BTreeMap<Phase, u32>,
    pub smells_before: u32,
    pub smells_after: u32,
    /// Smell reduction rate in percent; absent when there were no smells.
    pub srr: Option<f64>,
    pub quality_improvement: BTreeMap<Attribute, Improvement>,
    pub qmood_before: QmoodVector,
    pub qmood_after: QmoodVector,
}

#[derive(Serialize)]
struct Manifest<'a> {
    seed: u64,
    config: &'a EngineConfig,
    order: &'a [String],
    tallies: &'a BTreeMap<Phase, u32>,
    sessions: Vec<(&'a str, Phase)>,
    smell_counts_before: BTreeMap<SmellKind, u32>,
    smell_counts_after: BTreeMap<SmellKind, u32>,
    qmood_before: QmoodVector,
    qmood_after: QmoodVector,
    srr: Option<f64>,
    quality_improvement: &'a BTreeMap<Attribute, Improvement>,
    dry_run: bool,
    started_at: String,
    finished_at: String,
}

/// Session order for a project: a seeded permutation of the sorted classes.
pub fn class_order(classes: &[String], seed: u64) -> Vec<String> {
    let mut v = classes.to_vec();
    v.sort();
    v.dedup();
    v.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    v
}

fn check_baseline(ws: &Path, cfg: &EngineConfig) -> Result<(), OrchestratorError> {
    let build = compile_project(ws, &cfg.toolchain)?;
    if build.status != BuildStatus::Success {
        let errs: Vec<String> = build.errors().map(Diagnostic::render).collect();
        return Err(OrchestratorError::BaselineFailure {
            detail: format!("project does not compile:\n{}", errs.join("\n")),
        });
    }
    let tests = run_tests(ws, &cfg.toolchain, None)?;
    if !tests.all_passed() {
        let ids: Vec<String> = tests
            .failures
            .iter()
            .map(|f| format!("{}: {}", f.test_id, f.message))
            .collect();
        return Err(OrchestratorError::BaselineFailure {
            detail: format!("{} failing tests:\n{}", tests.failed, ids.join("\n")),
        });
    }
    Ok(())
}

/// Runs a session for every top-level production class (or only `only`),
/// in seeded order, and writes the project manifest.
pub fn run_project(
    ws: &Path,
    cfg: &EngineConfig,
    backend: &dyn ChatBackend,
    journal: &Path,
    only: Option<&str>,
    opts: RunOptions,
) -> Result<ProjectReport, OrchestratorError> {
    cfg.validate()?;
    let coeffs = cfg.coefficients()?;
    let started_at = now();
    check_baseline(ws, cfg)?;
    let before = analyze_project(ws, cfg, &coeffs)?;
    let classes: Vec<String> = before
        .model
        .top_level_production_types()
        .map(|t| t.fqn.clone())
        .collect();
    let targets = match only {
        Some(c) if classes.iter().any(|x| x == c) => vec![c.to_string()],
        Some(c) => return Err(OrchestratorError::UnknownClass(c.to_string())),
        None => classes,
    };
    let order = class_order(&targets, cfg.seed);
    let mut sessions = Vec::new();
    for fqn in &order {
        log::info!("session {fqn}");
        let v = run_class_session(ws, fqn, cfg, backend, journal, opts)?;
        log::info!("{fqn}: {} ({})", v.verdict.name(), v.reason);
        sessions.push(v);
    }
    let after = analyze_project(ws, cfg, &coeffs)?;
    let mut tallies: BTreeMap<Phase, u32> = [Phase::Committed, Phase::Reverted, Phase::Skipped]
        .into_iter()
        .map(|p| (p, 0))
        .collect();
    for s in &sessions {
        *tallies.entry(s.verdict).or_default() += 1;
    }
    let (nb, na) = (before.smells.len() as u32, after.smells.len() as u32);
    let qi = quality_improvement(&before.qmood, &after.qmood);
    let srr = improvement_rate(nb as f64, na as f64).ok();
    let writer = JournalWriter::new(journal.to_path_buf(), ws)?;
    writer.json(
        "manifest.json",
        &Manifest {
            seed: cfg.seed,
            config: cfg,
            order: &order,
            tallies: &tallies,
            sessions: sessions.iter().map(|s| (s.fqn.as_str(), s.verdict)).collect(),
            smell_counts_before: counts_by_kind(&before.smells),
            smell_counts_after: counts_by_kind(&after.smells),
            qmood_before: before.qmood,
            qmood_after: after.qmood,
            srr,
            quality_improvement: &qi,
            dry_run: opts.dry_run,
            started_at,
            finished_at: now(),
        },
    )?;
    Ok(ProjectReport {
        seed: cfg.seed,
        order,
        sessions,
        tallies,
        smells_before: nb,
        smells_after: na,
        srr,
        quality_improvement: qi,
        qmood_before: before.qmood,
        qmood_after: after.qmood,
    })
}

// --------------------------------------------------------- single agent

pub const SINGLE_AGENT_SYSTEM: &str =
    "You are a Java developer. Refactor the given class to improve its design quality without changing behavior.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleAgentResult {
    pub fqn: String,
    pub k: u32,
    /// One entry per candidate: compiled and passed the related tests.
    pub verdicts: Vec<bool>,
    pub notes: Vec<String>,
}

/// Baseline without planning or feedback: `k` independent candidates, each
/// compiled and tested once and then reverted.
pub fn run_single_agent(
    ws: &Path,
    fqn: &str,
    cfg: &EngineConfig,
    backend: &dyn ChatBackend,
    k: u32,
    journal: &Path,
) -> Result<SingleAgentResult, OrchestratorError> {
    let coeffs = cfg.coefficients()?;
    let _lock = SessionLock::acquire(ws)?;
    let analysis = analyze_project(ws, cfg, &coeffs)?;
    let unit = analysis
        .model
        .unit_of(fqn)
        .ok_or_else(|| OrchestratorError::UnknownClass(fqn.to_string()))?;
    let path = unit.path.to_string_lossy().replace('\\', "/");
    let prompt = vec![
        ChatMessage::system(SINGLE_AGENT_SYSTEM),
        ChatMessage::user(format!(
            "### Target class\n{fqn} ({path})\n{}\n\nReturn the complete content of {path} in a single ```java block.",
            fence("java", &unit.raw_text)
        )),
    ];
    let related = analysis.graph.related_tests(fqn, &cfg.test_roots);
    let filter = (!related.is_empty()).then_some(related);
    let snapshot = Snapshot::take(ws)?;
    let mut transcript = Transcript::default();
    let mut result = SingleAgentResult {
        fqn: fqn.to_string(),
        k,
        verdicts: Vec::new(),
        notes: Vec::new(),
    };
    for i in 1..=k {
        let request = ChatRequest {
            keys: SessionKeys {
                agent: "single_agent".into(),
                phase: "generate".into(),
                attempt: i,
                target: fqn.to_string(),
            },
            messages: prompt.clone(),
            tools: Vec::new(),
            temperature: cfg.backend.temperature,
            max_output_tokens: Some(cfg.backend.max_output_tokens),
        };
        let verdict = match llm::complete(backend, &request, cfg.backend.context_budget) {
            Err(e) => {
                result.notes.push(format!("candidate {i}: {e}"));
                false
            }
            Ok(resp) => {
                transcript.record(&request, &resp);
                match extract_code_block(&resp.text) {
                    Err(e) => {
                        result.notes.push(format!("candidate {i}: {e}"));
                        false
                    }
                    Ok(src) => {
                        fs::write(ws.join(&path), format!("{src}\n")).map_err(|e| journal_err(&ws.join(&path), e))?;
                        let ok = compile_project(ws, &cfg.toolchain)?.status == BuildStatus::Success
                            && run_tests(ws, &cfg.toolchain, filter.as_ref())?.all_passed();
                        snapshot.restore(ws)?;
                        ok
                    }
                }
            }
        };
        result.verdicts.push(verdict);
    }
    let writer = JournalWriter::new(journal.join("single_agent"), ws)?;
    writer.json(&format!("{fqn}.json"), &result)?;
    writer.json(&format!("{fqn}.transcript.json"), &transcript)?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toolchain::Severity;

    fn diag(file: &str, line: u32, msg: &str) -> Diagnostic {
        Diagnostic {
            file: file.into(),
            line,
            severity: Severity::Error,
            message: msg.into(),
        }
    }

    #[test]
    fn digest_groups_and_sorts() {
        let d = vec![
            diag("b/B.java", 9, "x"),
            diag("a/A.java", 7, "late"),
            diag("a/A.java", 3, "early"),
        ];
        let s = summarize_errors(&d, 1000, None);
        assert_eq!(
            s,
            "a/A.java:\n  line 3: error: early\n  line 7: error: late\nb/B.java:\n  line 9: error: x"
        );
    }

    #[test]
    fn digest_folds_duplicates() {
        let d: Vec<Diagnostic> = (1..=40).map(|l| diag("A.java", l, "cannot find symbol")).collect();
        let s = summarize_errors(&d, 1000, None);
        assert_eq!(s, "A.java:\n  lines 1,2,3,4,5,...: error: cannot find symbol (x40)");
    }

    #[test]
    fn digest_truncates_and_appends() {
        let d: Vec<Diagnostic> = (1..=200)
            .map(|l| diag("A.java", l, &format!("problem number {l}")))
            .collect();
        let s = summarize_errors(&d, 100, None);
        assert!(llm::estimate_tokens(&s) <= 110);
        assert!(s.ends_with("more lines omitted"));
        let mut f = |_: &str| Some("missing import".to_string());
        let s = summarize_errors(&d[..1], 100, Some(&mut f));
        assert_eq!(
            s,
            "A.java:\n  line 1: error: problem number 1\n\nAnalysis:\nmissing import"
        );
    }

    #[test]
    fn order_is_seeded_permutation() {
        let classes: Vec<String> = ["c", "a", "b", "d"].iter().map(|s| s.to_string()).collect();
        let a = class_order(&classes, 0);
        assert_eq!(a, class_order(&classes, 0));
        let mut sorted = a.clone();
        sorted.sort();
        assert_eq!(sorted, vec!["a", "b", "c", "d"]);
    }

    fn ctx() -> PlannerContext {
        PlannerContext {
            fqn: "p.A".into(),
            target_path: "src/p/A.java".into(),
            target_source: "class A {}".into(),
            dependents: vec![("p.B".into(), "class B { A a; }".into())],
            dependency_analysis: "DEPS".into(),
            metrics_table: "METRICS".into(),
        }
    }

    #[test]
    fn ablation_removes_single_sections() {
        let full = planner_prompt(&ctx(), Ablation::default())[1].content.clone();
        for (ab, gone) in [
            (
                Ablation {
                    context: false,
                    ..Ablation::default()
                },
                "### Quality metrics",
            ),
            (
                Ablation {
                    depgraph: false,
                    ..Ablation::default()
                },
                "### Dependency analysis",
            ),
            (
                Ablation {
                    codesearch: false,
                    ..Ablation::default()
                },
                "### Dependent classes",
            ),
        ] {
            let p = planner_prompt(&ctx(), ab)[1].content.clone();
            assert!(full.contains(gone));
            assert!(!p.contains(gone));
            assert!(p.contains("### Target class") && p.contains("### Output format"));
        }
    }

    #[test]
    fn generator_restates_plan_in_every_variant() {
        let plan = vec![ResolvedEntry {
            entry: PlanEntry {
                region_kind: RegionKind::Method,
                identifier: "run".into(),
                line_range: None,
                refactoring_type: "Extract Method".into(),
                instruction: "split it".into(),
            },
            method_signature: Some("run()".into()),
            range: Some(LineRange::new(3, 9)),
        }];
        for fb in [
            GenContext::Initial,
            GenContext::CompileFix { summary: "E1".into() },
            GenContext::TestFix { summary: "T1".into() },
        ] {
            let p = generator_prompt(&plan, &ctx(), Ablation::default(), Some("class A {}"), &fb)[1]
                .content
                .clone();
            assert!(p.contains("1. Extract Method on method `run`, lines 3-9: split it"));
            match fb {
                GenContext::CompileFix { .. } => assert!(p.contains("E1")),
                GenContext::TestFix { .. } => assert!(p.contains("T1")),
                GenContext::Initial => assert!(!p.contains("### Compilation errors")),
            }
        }
    }
}
