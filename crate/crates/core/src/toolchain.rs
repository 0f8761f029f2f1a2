//! Build, test and test-generation adapters.
//!
//! Tools run as subprocesses inside the workspace under an exclusive
//! workspace lock and a wall-clock timeout. Their output is kept verbatim and
//! parsed into [`Diagnostic`]s and [`TestOutcome`]s by pure functions.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::LazyLock;
use std::thread;
use std::time::{Duration, Instant};

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

#[derive(Debug, thiserror::Error)]
pub enum ToolchainError {
    #[error("build tool failure: {exit_detail}")]
    ToolError { exit_detail: String },
    #[error("test generator `{tool}` is not available")]
    GeneratorUnavailable { tool: String },
    #[error("{path}: {detail}")]
    Io { path: PathBuf, detail: String },
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> ToolchainError {
    ToolchainError::Io {
        path: path.to_path_buf(),
        detail: e.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub file: String,
    /// 0 when the tool printed no location.
    pub line: u32,
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    pub fn render(&self) -> String {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        format!("{}:{}: {}: {}", self.file, self.line, sev, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuildStatus {
    Success,
    Failure,
    ToolError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildOutcome {
    pub status: BuildStatus,
    pub diagnostics: Vec<Diagnostic>,
    pub raw_log: String,
    pub duration: f64,
}

impl BuildOutcome {
    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Error)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestFailure {
    pub test_id: String,
    pub message: String,
    pub trace_excerpt: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub total: u32,
    pub passed: u32,
    pub failed: u32,
    pub skipped: u32,
    pub failures: Vec<TestFailure>,
    pub raw_log: String,
}

impl TestOutcome {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

// ------------------------------------------------------------------ parsing

static MAVEN_DIAG: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\[(ERROR|WARNING)\]\s+(.+?\.java):\[(\d+)(?:,(\d+))?\]\s*(.*)$").unwrap());
static JAVAC_DIAG: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(.+?\.java):(\d+):\s*(error|warning):\s*(.*)$").unwrap());

/// Diagnostics found in a compiler log, deduplicated, in order of first
/// appearance. Lines that are not diagnostics are ignored.
pub fn parse_compiler_log(raw: &str) -> Vec<Diagnostic> {
    let mut out: Vec<Diagnostic> = Vec::new();
    let mut seen = BTreeSet::new();
    for line in raw.lines() {
        let line = line.trim_end();
        let diag = if let Some(c) = MAVEN_DIAG.captures(line) {
            Diagnostic {
                file: c[2].trim().to_string(),
                line: c[3].parse().unwrap_or(0),
                severity: if &c[1] == "ERROR" {
                    Severity::Error
                } else {
                    Severity::Warning
                },
                message: c[5].trim().to_string(),
            }
        } else if let Some(c) = JAVAC_DIAG.captures(line) {
            Diagnostic {
                file: c[1].trim().to_string(),
                line: c[2].parse().unwrap_or(0),
                severity: if &c[3] == "error" {
                    Severity::Error
                } else {
                    Severity::Warning
                },
                message: c[4].trim().to_string(),
            }
        } else {
            continue;
        };
        let key = (diag.file.clone(), diag.line, diag.severity, diag.message.clone());
        if seen.insert(key) {
            out.push(diag);
        }
    }
    out
}

static RUN_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"Tests run:\s*(\d+),\s*Failures:\s*(\d+),\s*Errors:\s*(\d+),\s*Skipped:\s*(\d+)(.*)$").unwrap()
});
// surefire 2.x: `name(pkg.Class)  <<< FAILURE!`
static FAIL_OLD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(?:\[ERROR\]\s+)?([\w$]+)\(([\w.$]+)\).*<<<\s*(FAILURE|ERROR)!").unwrap());
// surefire 3.x: `pkg.Class.name  Time elapsed: 0.1 s  <<< FAILURE!`
static FAIL_NEW: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?:\[ERROR\]\s+)?([\w.$]+)\.([\w$]+)(?:\s+(?:--\s+)?Time elapsed:.*?)?\s+<<<\s*(FAILURE|ERROR)!")
        .unwrap()
});

const TRACE_LINES: usize = 5;

/// Parses a surefire-style console log. Counts come from the `Results:`
/// aggregate when present, otherwise from the per-class summaries.
/// Returns `None` when the log contains no test summary at all.
pub fn parse_test_log(raw: &str) -> Option<TestOutcome> {
    let lines: Vec<&str> = raw.lines().collect();
    let mut per_class = [0u32; 4];
    let mut aggregate: Option<[u32; 4]> = None;
    let mut in_results = false;
    let mut any = false;
    let mut failures = Vec::new();
    let mut seen = BTreeSet::new();
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i].trim_end();
        // `Results:` in surefire 3.x, `Results :` in 2.x
        if line.trim_start_matches("[INFO]").trim().replace(' ', "") == "Results:" {
            in_results = true;
        }
        if let Some(c) = RUN_LINE.captures(line) {
            any = true;
            let v = [1, 2, 3, 4].map(|k| c[k].parse::<u32>().unwrap_or(0));
            let rest = &c[5];
            if in_results && !rest.contains(" - in ") && !rest.contains("<<<") {
                aggregate = Some(v);
            } else if !in_results {
                for k in 0..4 {
                    per_class[k] += v[k];
                }
            }
            i += 1;
            continue;
        }
        let hit = if let Some(c) = FAIL_OLD.captures(line) {
            Some(format!("{}#{}", &c[2], &c[1]))
        } else if !line.contains("Tests run:") {
            FAIL_NEW.captures(line).map(|c| format!("{}#{}", &c[1], &c[2]))
        } else {
            None
        };
        if let Some(test_id) = hit {
            let message = lines
                .get(i + 1)
                .map(|l| l.trim().to_string())
                .filter(|l| !l.starts_with("at ") && !l.starts_with('['))
                .unwrap_or_default();
            let mut trace = Vec::new();
            let mut j = i + 1 + usize::from(!message.is_empty());
            while j < lines.len() && lines[j].trim_start().starts_with("at ") {
                if trace.len() < TRACE_LINES {
                    trace.push(lines[j].trim().to_string());
                }
                j += 1;
            }
            if seen.insert(test_id.clone()) {
                failures.push(TestFailure {
                    test_id,
                    message,
                    trace_excerpt: trace.join("\n"),
                });
            }
            i = j;
            continue;
        }
        i += 1;
    }
    if !any {
        return None;
    }
    let [run, fail, err, skip] = aggregate.unwrap_or(per_class);
    Some(assemble(run, fail + err, skip, failures, raw))
}

/// Builds an outcome that satisfies the arithmetic invariants even when the
/// tool's counts and the listed failures disagree.
fn assemble(run: u32, failed_count: u32, skipped: u32, mut failures: Vec<TestFailure>, raw: &str) -> TestOutcome {
    while (failures.len() as u32) < failed_count {
        failures.push(TestFailure {
            test_id: format!("unnamed#{}", failures.len() + 1),
            message: String::new(),
            trace_excerpt: String::new(),
        });
    }
    let failed = failures.len() as u32;
    let total = run.max(failed + skipped);
    TestOutcome {
        total,
        passed: total - failed - skipped,
        failed,
        skipped,
        failures,
        raw_log: raw.to_string(),
    }
}

static XML_SUITE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r#"<testsuite\b[^>]*>"#).unwrap());
static XML_CASE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"(?s)<testcase\b([^>]*?)(/>|>(.*?)</testcase>)"#).unwrap());
static XML_ATTR: LazyLock<Regex> = LazyLock::new(|| Regex::new(r#"(\w+)="([^"]*)""#).unwrap());
static XML_FAIL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"(?s)<(failure|error)\b([^>]*?)(?:/>|>(.*?)</(?:failure|error)>)"#).unwrap());

fn attrs(s: &str) -> BTreeMap<String, String> {
    XML_ATTR
        .captures_iter(s)
        .map(|c| (c[1].to_string(), xml_unescape(&c[2])))
        .collect()
}

fn xml_unescape(s: &str) -> String {
    s.replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&apos;", "'")
        .replace("&amp;", "&")
}

/// Parses surefire XML reports (`TEST-*.xml`). Used when the console log was
/// too quiet to carry summaries.
pub fn parse_surefire_reports(dir: &Path, raw: &str) -> Option<TestOutcome> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .ok()?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("TEST-") && n.ends_with(".xml"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return None;
    }
    let (mut run, mut skipped) = (0u32, 0u32);
    let mut failures = Vec::new();
    for f in files {
        let text = fs::read_to_string(&f).ok()?;
        if XML_SUITE.find(&text).is_none() {
            continue;
        }
        for c in XML_CASE.captures_iter(&text) {
            run += 1;
            let a = attrs(&c[1]);
            let body = c.get(3).map(|m| m.as_str()).unwrap_or("");
            if body.contains("<skipped") {
                skipped += 1;
            } else if let Some(fc) = XML_FAIL.captures(body) {
                let fa = attrs(&fc[2]);
                let detail = xml_unescape(fc.get(3).map(|m| m.as_str()).unwrap_or(""));
                let trace: Vec<&str> = detail
                    .lines()
                    .map(str::trim)
                    .filter(|l| l.starts_with("at "))
                    .take(TRACE_LINES)
                    .collect();
                failures.push(TestFailure {
                    test_id: format!(
                        "{}#{}",
                        a.get("classname").cloned().unwrap_or_default(),
                        a.get("name").cloned().unwrap_or_default()
                    ),
                    message: fa.get("message").cloned().unwrap_or_default(),
                    trace_excerpt: trace.join("\n"),
                });
            }
        }
    }
    Some(assemble(run, failures.len() as u32, skipped, failures, raw))
}

// ----------------------------------------------------------------- adapters

/// How to drive a build tool. The reference preset follows Maven
/// conventions; any command line can be configured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildAdapter {
    pub name: String,
    /// File that must exist at the workspace root.
    pub descriptor: String,
    pub compile: Vec<String>,
    pub test: Vec<String>,
    /// Appended to the test command when a filter is given; `{}` is replaced
    /// by the comma-separated test class names.
    pub test_filter: Vec<String>,
    /// Directory of XML test reports, relative to the workspace.
    pub reports_dir: String,
    pub timeout_secs: u64,
}

impl Default for BuildAdapter {
    fn default() -> Self {
        Self::maven()
    }
}

impl BuildAdapter {
    pub fn maven() -> Self {
        let argv = |s: &str| s.split_whitespace().map(String::from).collect();
        Self {
            name: "maven".into(),
            descriptor: "pom.xml".into(),
            compile: argv("mvn -q -B compile -DskipTests"),
            test: argv("mvn -q -B test"),
            test_filter: argv("-Dtest={} -Dsurefire.failIfNoSpecifiedTests=false"),
            reports_dir: "target/surefire-reports".into(),
            timeout_secs: 600,
        }
    }

    fn test_argv(&self, filter: Option<&BTreeSet<String>>) -> Vec<String> {
        let mut argv = self.test.clone();
        if let Some(f) = filter.filter(|f| !f.is_empty()) {
            let joined = f.iter().cloned().collect::<Vec<_>>().join(",");
            argv.extend(self.test_filter.iter().map(|a| a.replace("{}", &joined)));
        }
        argv
    }
}

struct RunResult {
    log: String,
    success: bool,
    duration: f64,
}

/// Holds the workspace lock file for the lifetime of a tool invocation.
struct WorkspaceLock(File);

impl WorkspaceLock {
    fn acquire(workspace: &Path) -> Result<Self, ToolchainError> {
        let dir = workspace.join(STATE_DIR);
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        let path = dir.join("workspace.lock");
        let file = File::options()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&path)
            .map_err(|e| io_err(&path, e))?;
        file.lock().map_err(|e| io_err(&path, e))?;
        Ok(Self(file))
    }
}

impl Drop for WorkspaceLock {
    fn drop(&mut self) {
        let _ = self.0.unlock();
    }
}

fn run_tool(workspace: &Path, argv: &[String], timeout: Duration) -> Result<RunResult, ToolchainError> {
    let (program, args) = argv.split_first().ok_or_else(|| ToolchainError::ToolError {
        exit_detail: "empty command line".into(),
    })?;
    let _lock = WorkspaceLock::acquire(workspace)?;
    let start = Instant::now();
    let mut child = Command::new(program)
        .args(args)
        .current_dir(workspace)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| ToolchainError::ToolError {
            exit_detail: format!("cannot start `{program}`: {e}"),
        })?;
    let drain = |mut r: Box<dyn Read + Send>| {
        thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = r.read_to_end(&mut buf);
            buf
        })
    };
    let out = drain(Box::new(child.stdout.take().unwrap()));
    let err = drain(Box::new(child.stderr.take().unwrap()));
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) if start.elapsed() >= timeout => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(ToolchainError::ToolError {
                    exit_detail: format!("`{program}` timed out after {} s", timeout.as_secs()),
                });
            }
            Ok(None) => thread::sleep(Duration::from_millis(5)),
            Err(e) => {
                return Err(ToolchainError::ToolError {
                    exit_detail: format!("waiting for `{program}`: {e}"),
                })
            }
        }
    };
    let mut log = String::from_utf8_lossy(&out.join().unwrap_or_default()).into_owned();
    log.push_str(&String::from_utf8_lossy(&err.join().unwrap_or_default()));
    if status.code().is_none() {
        return Err(ToolchainError::ToolError {
            exit_detail: format!("`{program}` terminated by signal\n{log}"),
        });
    }
    Ok(RunResult {
        log,
        success: status.success(),
        duration: start.elapsed().as_secs_f64(),
    })
}

fn check_descriptor(workspace: &Path, adapter: &BuildAdapter) -> Result<(), ToolchainError> {
    if workspace.join(&adapter.descriptor).is_file() {
        Ok(())
    } else {
        Err(ToolchainError::ToolError {
            exit_detail: format!(
                "no {} build descriptor ({}) in {}",
                adapter.name,
                adapter.descriptor,
                workspace.display()
            ),
        })
    }
}

fn relativize(diags: &mut [Diagnostic], workspace: &Path) {
    let roots: Vec<PathBuf> = [Some(workspace.to_path_buf()), workspace.canonicalize().ok()]
        .into_iter()
        .flatten()
        .collect();
    for d in diags {
        let p = Path::new(&d.file);
        if let Some(rel) = roots.iter().find_map(|r| p.strip_prefix(r).ok()) {
            d.file = rel.to_string_lossy().replace('\\', "/");
        }
    }
}

pub fn compile_project(workspace: &Path, adapter: &BuildAdapter) -> Result<BuildOutcome, ToolchainError> {
    check_descriptor(workspace, adapter)?;
    let run = run_tool(workspace, &adapter.compile, Duration::from_secs(adapter.timeout_secs))?;
    let mut diagnostics = parse_compiler_log(&run.log);
    relativize(&mut diagnostics, workspace);
    let has_errors = diagnostics.iter().any(|d| d.severity == Severity::Error);
    let status = match (run.success, has_errors) {
        (true, false) => BuildStatus::Success,
        (_, true) => BuildStatus::Failure,
        (false, false) => {
            return Err(ToolchainError::ToolError {
                exit_detail: format!("build tool failed without diagnostics\n{}", run.log),
            })
        }
    };
    Ok(BuildOutcome {
        status,
        diagnostics,
        raw_log: run.log,
        duration: run.duration,
    })
}

/// Test id used when the sources fail to build during a test run.
pub const BUILD_FAILURE_TEST_ID: &str = "<build>";

pub fn run_tests(
    workspace: &Path,
    adapter: &BuildAdapter,
    filter: Option<&BTreeSet<String>>,
) -> Result<TestOutcome, ToolchainError> {
    check_descriptor(workspace, adapter)?;
    let reports = workspace.join(&adapter.reports_dir);
    let _ = fs::remove_dir_all(&reports);
    let run = run_tool(
        workspace,
        &adapter.test_argv(filter),
        Duration::from_secs(adapter.timeout_secs),
    )?;
    if let Some(outcome) = parse_test_log(&run.log).or_else(|| parse_surefire_reports(&reports, &run.log)) {
        return Ok(outcome);
    }
    let mut diagnostics = parse_compiler_log(&run.log);
    relativize(&mut diagnostics, workspace);
    let errors: Vec<String> = diagnostics
        .iter()
        .filter(|d| d.severity == Severity::Error)
        .map(Diagnostic::render)
        .collect();
    if !errors.is_empty() {
        return Ok(assemble(
            1,
            1,
            0,
            vec![TestFailure {
                test_id: BUILD_FAILURE_TEST_ID.into(),
                message: "compilation failed".into(),
                trace_excerpt: errors.join("\n"),
            }],
            &run.log,
        ));
    }
    if run.success {
        return Ok(assemble(0, 0, 0, Vec::new(), &run.log));
    }
    Err(ToolchainError::ToolError {
        exit_detail: format!("test run failed without a test summary\n{}", run.log),
    })
}

// ---------------------------------------------------------- test generation

/// Package suffix under which generated tests are installed.
pub const GENERATED_PACKAGE: &str = "refagent_generated";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorConfig {
    #[default]
    None,
    /// Copies `<dir>/<SimpleName>*.java` files.
    Stub { dir: PathBuf },
    /// Runs `command`; `{fqn}`, `{classpath}` and `{out}` are substituted.
    External {
        command: Vec<String>,
        #[serde(default = "default_classpath")]
        classpath: String,
    },
}

fn default_classpath() -> String {
    "target/classes".into()
}

fn package_of(fqn: &str) -> &str {
    fqn.rsplit_once('.').map(|(p, _)| p).unwrap_or("")
}

fn simple_of(fqn: &str) -> &str {
    fqn.rsplit_once('.').map(|(_, s)| s).unwrap_or(fqn)
}

/// Directory holding the generated tests for `fqn`.
pub fn generated_dir(workspace: &Path, test_root: &Path, fqn: &str) -> PathBuf {
    let mut dir = workspace.join(test_root);
    for part in package_of(fqn).split('.').filter(|p| !p.is_empty()) {
        dir.push(part);
    }
    dir.join(GENERATED_PACKAGE)
}

fn generated_package(fqn: &str) -> String {
    match package_of(fqn) {
        "" => GENERATED_PACKAGE.to_string(),
        p => format!("{p}.{GENERATED_PACKAGE}"),
    }
}

static PACKAGE_DECL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?m)^\s*package\s+[\w.]+\s*;").unwrap());

fn with_package(source: &str, package: &str) -> String {
    let decl = format!("package {package};");
    if PACKAGE_DECL.is_match(source) {
        PACKAGE_DECL.replace(source, decl.as_str()).into_owned()
    } else {
        format!("{decl}\n\n{source}")
    }
}

fn on_path(program: &str) -> bool {
    if program.contains('/') {
        return Path::new(program).is_file();
    }
    std::env::var_os("PATH")
        .map(|paths| std::env::split_paths(&paths).any(|d| d.join(program).is_file()))
        .unwrap_or(false)
}

/// Installs generated regression tests for `fqn` and returns the created
/// files, relative to the workspace. Must run against the original sources.
pub fn generate_tests(
    config: &GeneratorConfig,
    fqn: &str,
    workspace: &Path,
    test_root: &Path,
) -> Result<Vec<PathBuf>, ToolchainError> {
    let dest = generated_dir(workspace, test_root, fqn);
    let package = generated_package(fqn);
    let sources: Vec<(String, String)> = match config {
        GeneratorConfig::None => return Err(ToolchainError::GeneratorUnavailable { tool: "none".into() }),
        GeneratorConfig::Stub { dir } => {
            let dir = if dir.is_absolute() {
                dir.clone()
            } else {
                workspace.join(dir)
            };
            let prefix = simple_of(fqn);
            let mut found = Vec::new();
            if let Ok(entries) = fs::read_dir(&dir) {
                for e in entries.flatten() {
                    let name = e.file_name().to_string_lossy().into_owned();
                    if name.starts_with(prefix) && name.ends_with(".java") {
                        let text = fs::read_to_string(e.path()).map_err(|x| io_err(&e.path(), x))?;
                        found.push((name, text));
                    }
                }
            }
            found
        }
        GeneratorConfig::External { command, classpath } => {
            let program = command.first().ok_or_else(|| ToolchainError::ToolError {
                exit_detail: "empty generator command".into(),
            })?;
            if !on_path(program) {
                return Err(ToolchainError::GeneratorUnavailable { tool: program.clone() });
            }
            let out = workspace.join(STATE_DIR).join("generated");
            let _ = fs::remove_dir_all(&out);
            fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;
            let argv: Vec<String> = command
                .iter()
                .map(|a| {
                    a.replace("{fqn}", fqn)
                        .replace("{classpath}", classpath)
                        .replace("{out}", &out.to_string_lossy())
                })
                .collect();
            let run = run_tool(workspace, &argv, Duration::from_secs(600))?;
            if !run.success {
                return Err(ToolchainError::ToolError {
                    exit_detail: format!("test generator failed\n{}", run.log),
                });
            }
            let mut found = Vec::new();
            for e in WalkDir::new(&out).sort_by_file_name().into_iter().flatten() {
                let p = e.path();
                if p.extension().is_some_and(|x| x == "java") {
                    let text = fs::read_to_string(p).map_err(|x| io_err(p, x))?;
                    found.push((e.file_name().to_string_lossy().into_owned(), text));
                }
            }
            found
        }
    };
    fs::create_dir_all(&dest).map_err(|e| io_err(&dest, e))?;
    let mut sources = sources;
    sources.sort();
    let mut created = Vec::new();
    for (name, text) in sources {
        let path = dest.join(&name);
        fs::write(&path, with_package(&text, &package)).map_err(|e| io_err(&path, e))?;
        created.push(path.strip_prefix(workspace).unwrap_or(&path).to_path_buf());
    }
    Ok(created)
}

/// Removes the generated tests of `fqn`.
pub fn remove_generated_tests(workspace: &Path, test_root: &Path, fqn: &str) -> Result<(), ToolchainError> {
    let dir = generated_dir(workspace, test_root, fqn);
    if dir.exists() {
        fs::remove_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    }
    Ok(())
}

/// FQN of a test class from its path under a test root.
pub fn test_fqn(test_root: &Path, file: &Path) -> Option<String> {
    let rel = file.strip_prefix(test_root).ok()?;
    let stem = rel.with_extension("");
    let parts: Vec<String> = stem
        .components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect();
    (!parts.is_empty()).then(|| parts.join("."))
}

// ---------------------------------------------------------------- workspace

/// Engine state directory inside a workspace; excluded from digests.
pub const STATE_DIR: &str = ".refagent";
const EXCLUDED: &[&str] = &[STATE_DIR, "target", ".git"];

fn is_excluded(rel: &Path) -> bool {
    rel.components()
        .next()
        .is_some_and(|c| EXCLUDED.iter().any(|x| c.as_os_str() == *x))
}

/// Contents of every workspace file outside the state, output and VCS
/// directories, keyed by relative path.
pub fn tree_files(root: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>, ToolchainError> {
    let mut out = BTreeMap::new();
    for entry in WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| e.path().strip_prefix(root).map(|rel| !is_excluded(rel)).unwrap_or(true))
    {
        let entry = entry.map_err(|e| io_err(root, e))?;
        if entry.file_type().is_file() {
            let rel = entry.path().strip_prefix(root).unwrap().to_path_buf();
            let bytes = fs::read(entry.path()).map_err(|e| io_err(entry.path(), e))?;
            out.insert(rel, bytes);
        }
    }
    Ok(out)
}

pub fn files_digest(files: &BTreeMap<PathBuf, Vec<u8>>) -> String {
    let mut h = Sha256::new();
    for (path, bytes) in files {
        h.update(path.to_string_lossy().as_bytes());
        h.update([0]);
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    hex::encode(h.finalize())
}

pub fn tree_digest(root: &Path) -> Result<String, ToolchainError> {
    Ok(files_digest(&tree_files(root)?))
}

/// Copy of a workspace tree that can be restored byte for byte.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub files: BTreeMap<PathBuf, Vec<u8>>,
    pub digest: String,
}

impl Snapshot {
    pub fn take(root: &Path) -> Result<Self, ToolchainError> {
        let files = tree_files(root)?;
        let digest = files_digest(&files);
        Ok(Self { files, digest })
    }

    /// Rewrites changed files, recreates deleted ones and removes files that
    /// did not exist when the snapshot was taken.
    pub fn restore(&self, root: &Path) -> Result<(), ToolchainError> {
        let current = tree_files(root)?;
        for path in current.keys() {
            if !self.files.contains_key(path) {
                let abs = root.join(path);
                fs::remove_file(&abs).map_err(|e| io_err(&abs, e))?;
                let mut dir = abs.parent();
                while let Some(d) = dir.filter(|d| *d != root) {
                    if fs::remove_dir(d).is_err() {
                        break;
                    }
                    dir = d.parent();
                }
            }
        }
        for (path, bytes) in &self.files {
            if current.get(path) != Some(bytes) {
                let abs = root.join(path);
                if let Some(parent) = abs.parent() {
                    fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
                }
                fs::write(&abs, bytes).map_err(|e| io_err(&abs, e))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maven_and_javac_lines() {
        let log = "\
[INFO] Downloading from central: https://repo/x.pom
[ERROR] /w/src/main/java/a/A.java:[12,5] ';' expected
[WARNING] /w/src/main/java/a/B.java:[3] unchecked call
src/main/java/a/C.java:7: error: cannot find symbol
[ERROR] /w/src/main/java/a/A.java:[12,5] ';' expected
";
        let d = parse_compiler_log(log);
        assert_eq!(d.len(), 3);
        assert_eq!(d[0].render(), "/w/src/main/java/a/A.java:12: error: ';' expected");
        assert_eq!(d[1].severity, Severity::Warning);
        assert_eq!(d[1].line, 3);
        assert_eq!(d[2].file, "src/main/java/a/C.java");
        assert!(parse_compiler_log("").is_empty());
        assert!(parse_compiler_log("nothing here\n[INFO] BUILD SUCCESS").is_empty());
    }

    #[test]
    fn surefire_old_and_new_formats() {
        let old = "\
[INFO] Running a.FooTest
[ERROR] Tests run: 3, Failures: 1, Errors: 0, Skipped: 1 <<< FAILURE! - in a.FooTest
[ERROR] testAdd(a.FooTest)  <<< FAILURE!
java.lang.AssertionError: expected:<3> but was:<4>
\tat a.FooTest.testAdd(FooTest.java:14)
[INFO] Results:
[ERROR] Tests run: 3, Failures: 1, Errors: 0, Skipped: 1
";
        let o = parse_test_log(old).unwrap();
        assert_eq!((o.total, o.passed, o.failed, o.skipped), (3, 1, 1, 1));
        assert_eq!(o.failures[0].test_id, "a.FooTest#testAdd");
        assert_eq!(
            o.failures[0].message,
            "java.lang.AssertionError: expected:<3> but was:<4>"
        );
        assert_eq!(o.failures[0].trace_excerpt, "at a.FooTest.testAdd(FooTest.java:14)");

        let new = "\
[ERROR] Tests run: 2, Failures: 0, Errors: 1, Skipped: 0, Time elapsed: 0.02 s <<< FAILURE! -- in a.BarTest
[ERROR] a.BarTest.boom -- Time elapsed: 0.01 s <<< ERROR!
java.lang.IllegalStateException: no
\tat a.Bar.run(Bar.java:3)
";
        let o = parse_test_log(new).unwrap();
        assert_eq!((o.total, o.passed, o.failed), (2, 1, 1));
        assert_eq!(o.failures[0].test_id, "a.BarTest#boom");
        assert!(parse_test_log("[INFO] BUILD SUCCESS").is_none());
    }

    #[test]
    fn counts_without_named_failures_stay_consistent() {
        let o = parse_test_log("Tests run: 4, Failures: 2, Errors: 0, Skipped: 0").unwrap();
        assert_eq!(o.failed as usize, o.failures.len());
        assert_eq!(o.total, o.passed + o.failed + o.skipped);
    }

    #[test]
    fn xml_reports() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("TEST-a.FooTest.xml"),
            r#"<?xml version="1.0"?><testsuite name="a.FooTest" tests="3">
<testcase name="ok" classname="a.FooTest" time="0"/>
<testcase name="bad" classname="a.FooTest"><failure message="expected:&lt;1&gt;" type="AssertionError">boom
	at a.FooTest.bad(FooTest.java:9)</failure></testcase>
<testcase name="skip" classname="a.FooTest"><skipped/></testcase>
</testsuite>"#,
        )
        .unwrap();
        let o = parse_surefire_reports(dir.path(), "").unwrap();
        assert_eq!((o.total, o.passed, o.failed, o.skipped), (3, 1, 1, 1));
        assert_eq!(o.failures[0].message, "expected:<1>");
        assert_eq!(o.failures[0].trace_excerpt, "at a.FooTest.bad(FooTest.java:9)");
    }

    #[test]
    fn filter_expansion() {
        let a = BuildAdapter::maven();
        let f: BTreeSet<String> = ["a.XTest".to_string(), "a.YTest".to_string()].into();
        let argv = a.test_argv(Some(&f));
        assert!(argv.contains(&"-Dtest=a.XTest,a.YTest".to_string()));
        assert_eq!(a.test_argv(None), a.test);
    }

    #[test]
    fn snapshot_restores_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        fs::create_dir_all(root.join("src/a")).unwrap();
        fs::write(root.join("src/a/A.java"), "class A {}").unwrap();
        let snap = Snapshot::take(root).unwrap();
        fs::write(root.join("src/a/A.java"), "class A { int x; }").unwrap();
        fs::create_dir_all(root.join("src/b")).unwrap();
        fs::write(root.join("src/b/B.java"), "class B {}").unwrap();
        fs::create_dir_all(root.join("target")).unwrap();
        fs::write(root.join("target/out"), "x").unwrap();
        assert_ne!(tree_digest(root).unwrap(), snap.digest);
        snap.restore(root).unwrap();
        assert_eq!(tree_digest(root).unwrap(), snap.digest);
        assert!(!root.join("src/b").exists());
    }

    #[test]
    fn missing_descriptor_is_tool_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = compile_project(dir.path(), &BuildAdapter::maven()).unwrap_err();
        assert!(matches!(err, ToolchainError::ToolError { .. }));
    }

    #[test]
    fn absent_tool_is_tool_error() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("pom.xml"), "<project/>").unwrap();
        let adapter = BuildAdapter {
            compile: vec!["definitely-not-a-build-tool-xyz".into()],
            ..BuildAdapter::maven()
        };
        assert!(matches!(
            compile_project(dir.path(), &adapter),
            Err(ToolchainError::ToolError { .. })
        ));
    }

    #[test]
    fn timeout_is_tool_error() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("pom.xml"), "<project/>").unwrap();
        let adapter = BuildAdapter {
            compile: vec!["sleep".into(), "5".into()],
            timeout_secs: 0,
            ..BuildAdapter::maven()
        };
        let err = compile_project(dir.path(), &adapter).unwrap_err();
        assert!(err.to_string().contains("timed out"));
    }

    #[test]
    fn stub_generator_rewrites_package() {
        let dir = tempfile::tempdir().unwrap();
        let ws = dir.path();
        fs::create_dir_all(ws.join("stubs")).unwrap();
        fs::write(ws.join("stubs/CartGenTest.java"), "package x;\nclass CartGenTest {}\n").unwrap();
        fs::write(ws.join("stubs/Other.java"), "class Other {}\n").unwrap();
        let cfg = GeneratorConfig::Stub { dir: "stubs".into() };
        let created = generate_tests(&cfg, "shop.Cart", ws, Path::new("src/test/java")).unwrap();
        assert_eq!(
            created,
            vec![PathBuf::from("src/test/java/shop/refagent_generated/CartGenTest.java")]
        );
        let text = fs::read_to_string(ws.join(&created[0])).unwrap();
        assert!(text.starts_with("package shop.refagent_generated;"));
        assert_eq!(
            test_fqn(Path::new("src/test/java"), &created[0]).unwrap(),
            "shop.refagent_generated.CartGenTest"
        );
        remove_generated_tests(ws, Path::new("src/test/java"), "shop.Cart").unwrap();
        assert!(!ws.join("src/test/java/shop/refagent_generated").exists());
    }

    #[test]
    fn external_generator_missing() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = GeneratorConfig::External {
            command: vec!["no-such-generator-xyz".into(), "{fqn}".into()],
            classpath: default_classpath(),
        };
        assert!(matches!(
            generate_tests(&cfg, "a.B", dir.path(), Path::new("src/test/java")),
            Err(ToolchainError::GeneratorUnavailable { .. })
        ));
    }
}
