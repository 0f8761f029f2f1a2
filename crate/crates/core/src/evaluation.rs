//! Evaluation: alignment of refactoring records, pass@k, the Wilcoxon
//! signed-rank test and report files.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::config::EngineConfig;
use crate::metrics::{ClassMetrics, MetricVector, CLASS_COLUMNS};
use crate::orchestrator::{
    analyze_project, OrchestratorError, Phase, PlanRecord, ProjectAnalysis, SessionVerdict, SingleAgentResult,
};
use crate::quality::{improvement_rate, quality_improvement, Attribute, Improvement, QmoodVector};
use crate::smells::{counts_by_kind, SmellKind};
use crate::source_model::LineRange;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{path}: {detail}")]
    Schema { path: PathBuf, detail: String },
    #[error("record {index} of the {side} side has no line range")]
    MissingRange { side: &'static str, index: usize },
    #[error("expected {expected} verdicts, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("all differences are zero")]
    AllZeroDifferences,
    #[error("incomplete journal: {0}")]
    IncompleteJournal(String),
    #[error("{path}: {detail}")]
    Io { path: PathBuf, detail: String },
    #[error(transparent)]
    Analysis(#[from] OrchestratorError),
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> EvalError {
    EvalError::Io {
        path: path.to_path_buf(),
        detail: e.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordSource {
    Engine,
    Miner,
    Baseline,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefactoringRecord {
    pub source: RecordSource,
    pub refactoring_type: String,
    pub class_fqn: String,
    #[serde(default)]
    pub method_signature: Option<String>,
    #[serde(default, with = "opt_range")]
    pub line_range: Option<LineRange>,
    #[serde(default)]
    pub commit_id: Option<String>,
}

/// Ranges are written as `[start, end]`.
mod opt_range {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::source_model::LineRange;

    pub fn serialize<S: Serializer>(r: &Option<LineRange>, s: S) -> Result<S::Ok, S::Error> {
        r.map(|r| [r.start, r.end]).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<LineRange>, D::Error> {
        Ok(Option::<[u32; 2]>::deserialize(d)?.map(|[a, b]| LineRange::new(a, b)))
    }
}

// ---------------------------------------------------------------- ingestion

static IN_CLASS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(?:in|from) class ([\w.$]+)").unwrap());

/// Refactoring type names used by RefactoringMiner.
pub const MINER_TYPES: &[&str] = &[
    "Extract Method",
    "Inline Method",
    "Rename Method",
    "Move Method",
    "Move And Rename Method",
    "Pull Up Method",
    "Push Down Method",
    "Extract And Move Method",
    "Move And Inline Method",
    "Change Return Type",
    "Add Parameter",
    "Remove Parameter",
    "Reorder Parameter",
    "Rename Parameter",
    "Change Parameter Type",
    "Parameterize Variable",
    "Merge Parameter",
    "Split Parameter",
    "Extract Variable",
    "Inline Variable",
    "Rename Variable",
    "Change Variable Type",
    "Merge Variable",
    "Split Variable",
    "Replace Variable With Attribute",
    "Extract Attribute",
    "Rename Attribute",
    "Move Attribute",
    "Pull Up Attribute",
    "Push Down Attribute",
    "Change Attribute Type",
    "Encapsulate Attribute",
    "Merge Attribute",
    "Split Attribute",
    "Replace Attribute",
    "Extract Class",
    "Extract Subclass",
    "Extract Superclass",
    "Extract Interface",
    "Rename Class",
    "Move Class",
    "Move And Rename Class",
    "Inline Class",
    "Replace Magic Number With Constant",
    "Decompose Conditional",
    "Replace Conditional With Polymorphism",
    "Introduce Parameter Object",
    "Add Method Modifier",
    "Remove Method Modifier",
    "Change Access Modifier",
    "Change Attribute Access Modifier",
    "Change Method Access Modifier",
    "Add Attribute Modifier",
    "Remove Attribute Modifier",
];

/// Case-insensitive, whitespace-collapsed type name; known names map onto
/// the miner's spelling, others are kept as written.
pub fn normalize_type(name: &str) -> String {
    let collapsed = name.split_whitespace().collect::<Vec<_>>().join(" ");
    MINER_TYPES
        .iter()
        .find(|t| t.eq_ignore_ascii_case(&collapsed))
        .map_or(collapsed, |t| t.to_string())
}

fn strip_generics(s: &str) -> String {
    let mut depth = 0;
    s.chars()
        .filter(|&c| match c {
            '<' => {
                depth += 1;
                false
            }
            '>' => {
                depth -= 1;
                false
            }
            _ => depth == 0,
        })
        .collect()
}

fn simple_type(t: &str) -> String {
    let t = strip_generics(t).replace("...", "[]");
    let t: String = t.chars().filter(|c| !c.is_whitespace()).collect();
    let dims = t.matches("[]").count();
    let base = t.trim_end_matches("[]");
    let base = base.rsplit('.').next().unwrap_or(base);
    format!("{base}{}", "[]".repeat(dims))
}

/// Normalizes a miner method element such as
/// `public sum(values List<Integer>, scale int) : int` to `sum(List,int)`.
/// Returns `None` when the element is not a method.
pub fn method_signature(code_element: &str) -> Option<String> {
    let open = code_element.find('(')?;
    let close = code_element.rfind(')')?;
    let name = code_element[..open].split_whitespace().last()?;
    let inner = &code_element[open + 1..close];
    let mut params = Vec::new();
    let mut depth = 0;
    let mut cur = String::new();
    for c in inner.chars() {
        match c {
            '<' => depth += 1,
            '>' => depth -= 1,
            ',' if depth == 0 => {
                params.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    params.push(cur);
    let types: Vec<String> = params
        .iter()
        .map(|p| p.trim())
        .filter(|p| !p.is_empty())
        .map(|p| {
            // miner writes `name Type`; tolerate a bare type
            let ty = p.split_once(' ').map_or(p, |(_, ty)| ty);
            simple_type(ty.trim_start_matches("final "))
        })
        .collect();
    Some(format!("{name}({})", types.join(",")))
}

fn class_from_path(file_path: &str) -> Option<String> {
    let p = file_path.replace('\\', "/");
    let stem = p.strip_suffix(".java")?;
    let rel = ["src/main/java/", "src/test/java/", "src/java/", "java/", "src/"]
        .iter()
        .find_map(|root| stem.rfind(root).map(|i| &stem[i + root.len()..]))
        .unwrap_or(stem);
    Some(rel.replace('/', "."))
}

#[derive(Deserialize)]
struct MinerLocation {
    #[serde(rename = "filePath", default)]
    file_path: String,
    #[serde(rename = "startLine")]
    start_line: u32,
    #[serde(rename = "endLine")]
    end_line: u32,
    #[serde(rename = "codeElementType", default)]
    code_element_type: String,
    #[serde(rename = "codeElement", default)]
    code_element: Option<String>,
}

#[derive(Deserialize)]
struct MinerRefactoring {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    description: String,
    #[serde(rename = "leftSideLocations", default)]
    left: Vec<MinerLocation>,
    #[serde(rename = "rightSideLocations", default)]
    right: Option<Vec<MinerLocation>>,
}

#[derive(Deserialize)]
struct MinerCommit {
    #[serde(default)]
    sha1: Option<String>,
    refactorings: Vec<MinerRefactoring>,
}

#[derive(Deserialize)]
struct MinerFile {
    commits: Vec<MinerCommit>,
}

fn is_method(loc: &MinerLocation) -> bool {
    loc.code_element_type == "METHOD_DECLARATION"
}

/// Parses RefactoringMiner output. The second value lists tolerated
/// problems such as entries without right-side locations.
pub fn parse_miner_json(text: &str, path: &Path) -> Result<(Vec<RefactoringRecord>, Vec<String>), EvalError> {
    let file: MinerFile = serde_json::from_str(text).map_err(|e| EvalError::Schema {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for commit in file.commits {
        for (i, r) in commit.refactorings.into_iter().enumerate() {
            let right = r.right.unwrap_or_default();
            if right.is_empty() {
                warnings.push(format!(
                    "commit {} refactoring {} ({}) has no right-side locations",
                    commit.sha1.as_deref().unwrap_or("?"),
                    i + 1,
                    r.kind
                ));
            }
            let any = right.first().or(r.left.first());
            let class_fqn = IN_CLASS
                .captures(&r.description)
                .map(|c| c[1].to_string())
                .or_else(|| any.and_then(|l| class_from_path(&l.file_path)))
                .ok_or_else(|| EvalError::Schema {
                    path: path.to_path_buf(),
                    detail: format!("refactoring {i} names no class"),
                })?;
            // The pre-refactoring method identifies the refactored code; the
            // range comes from the right-side location of that same method.
            let method = r
                .left
                .iter()
                .find(|l| is_method(l))
                .or_else(|| right.iter().find(|l| is_method(l)))
                .and_then(|l| l.code_element.as_deref())
                .and_then(method_signature);
            let line_range = right
                .iter()
                .find(|l| is_method(l) && l.code_element.as_deref().and_then(method_signature) == method)
                .or(right.first())
                .map(|l| LineRange::new(l.start_line, l.end_line));
            records.push(RefactoringRecord {
                source: RecordSource::Miner,
                refactoring_type: normalize_type(&r.kind),
                class_fqn,
                method_signature: method,
                line_range,
                commit_id: commit.sha1.clone(),
            });
        }
    }
    Ok((records, warnings))
}

pub fn load_miner_records(path: &Path) -> Result<Vec<RefactoringRecord>, EvalError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let (records, warnings) = parse_miner_json(&text, path)?;
    for w in warnings {
        log::warn!("{}: {w}", path.display());
    }
    Ok(records)
}

/// Engine records of a journal: the applied plan entries of every
/// committed session.
pub fn load_journal_records(journal: &Path) -> Result<Vec<RefactoringRecord>, EvalError> {
    let mut records = Vec::new();
    for dir in session_dirs(journal)? {
        let verdict: SessionVerdict = read_json(&dir.join("verdict.json"))?;
        if verdict.verdict != Phase::Committed {
            continue;
        }
        let plan: PlanRecord = read_json(&dir.join("plan.json"))?;
        for r in plan.entries {
            records.push(RefactoringRecord {
                source: RecordSource::Engine,
                refactoring_type: normalize_type(&r.entry.refactoring_type),
                class_fqn: plan.target_fqn.clone(),
                method_signature: r.method_signature,
                line_range: r.range,
                commit_id: None,
            });
        }
    }
    Ok(records)
}

/// Records from a journal directory or a JSON array file.
pub fn load_records(path: &Path) -> Result<Vec<RefactoringRecord>, EvalError> {
    if path.is_dir() {
        load_journal_records(path)
    } else {
        read_json(path)
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, EvalError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| EvalError::Schema {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}

fn session_dirs(journal: &Path) -> Result<Vec<PathBuf>, EvalError> {
    let mut dirs = Vec::new();
    let entries = fs::read_dir(journal).map_err(|e| io_err(journal, e))?;
    for e in entries {
        let p = e.map_err(|e| io_err(journal, e))?.path();
        if p.join("verdict.json").is_file() {
            dirs.push(p);
        }
    }
    dirs.sort();
    Ok(dirs)
}

// ---------------------------------------------------------------- alignment

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "tau", rename_all = "snake_case")]
pub enum RangeRule {
    /// At least one shared line.
    Intersect,
    Exact,
    /// Jaccard index of the line sets at least `tau`.
    Jaccard(f64),
}

impl RangeRule {
    pub fn aligned(self, a: LineRange, b: LineRange) -> bool {
        let lo = a.start.max(b.start);
        let hi = a.end.min(b.end);
        match self {
            RangeRule::Intersect => lo <= hi,
            RangeRule::Exact => a == b,
            RangeRule::Jaccard(tau) => {
                let inter = if lo <= hi { (hi - lo + 1) as f64 } else { 0.0 };
                let union = (a.end - a.start + 1) as f64 + (b.end - b.start + 1) as f64 - inter;
                inter / union >= tau
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub scenario: u8,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// `None` when undefined.
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    /// Index pairs into the `ours` and `theirs` inputs.
    pub matched_pairs: Vec<(usize, usize)>,
}

pub fn scores(tp: usize, fp: usize, fn_: usize) -> (Option<f64>, Option<f64>, Option<f64>) {
    let ratio = |n: usize, d: usize| (d > 0).then(|| n as f64 / d as f64);
    let p = ratio(tp, tp + fp);
    let r = ratio(tp, tp + fn_);
    let f1 = match (p, r) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    (p, r, f1)
}

fn order(records: &[RefactoringRecord]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..records.len()).collect();
    idx.sort_by_key(|&i| {
        let r = &records[i];
        (
            r.class_fqn.clone(),
            r.line_range.map_or(0, |l| l.start),
            r.method_signature.clone(),
            normalize_type(&r.refactoring_type),
        )
    });
    idx
}

fn greedy(
    scenario: u8,
    ours: &[RefactoringRecord],
    theirs: &[RefactoringRecord],
    matches: impl Fn(&RefactoringRecord, &RefactoringRecord) -> bool,
) -> AlignmentReport {
    let their_order = order(theirs);
    let mut used = vec![false; theirs.len()];
    let mut pairs = Vec::new();
    for i in order(ours) {
        if let Some(&j) = their_order.iter().find(|&&j| !used[j] && matches(&ours[i], &theirs[j])) {
            used[j] = true;
            pairs.push((i, j));
        }
    }
    let tp = pairs.len();
    let (fp, fn_) = (ours.len() - tp, theirs.len() - tp);
    let (precision, recall, f1) = scores(tp, fp, fn_);
    AlignmentReport {
        scenario,
        tp,
        fp,
        fn_,
        precision,
        recall,
        f1,
        matched_pairs: pairs,
    }
}

fn same_target(a: &RefactoringRecord, b: &RefactoringRecord) -> bool {
    normalize_type(&a.refactoring_type) == normalize_type(&b.refactoring_type)
        && a.class_fqn == b.class_fqn
        && a.method_signature == b.method_signature
}

/// Type, class, method and line range must all align.
pub fn match_scenario1(
    ours: &[RefactoringRecord],
    theirs: &[RefactoringRecord],
    rule: RangeRule,
) -> Result<AlignmentReport, EvalError> {
    for (side, list) in [("ours", ours), ("theirs", theirs)] {
        if let Some(index) = list.iter().position(|r| r.line_range.is_none()) {
            return Err(EvalError::MissingRange { side, index });
        }
    }
    Ok(greedy(1, ours, theirs, |a, b| {
        same_target(a, b) && rule.aligned(a.line_range.unwrap(), b.line_range.unwrap())
    }))
}

/// Type, class and method must align; ranges are ignored.
pub fn match_scenario2(ours: &[RefactoringRecord], theirs: &[RefactoringRecord]) -> AlignmentReport {
    greedy(2, ours, theirs, same_target)
}

pub fn pass_at_k(verdicts: &[bool], k: usize) -> Result<bool, EvalError> {
    if verdicts.len() != k {
        return Err(EvalError::ArityMismatch {
            expected: k,
            got: verdicts.len(),
        });
    }
    Ok(verdicts.iter().any(|&v| v))
}

// ----------------------------------------------------------------- wilcoxon

/// Largest sample decided by exact enumeration.
pub const EXACT_MAX_N: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// min(W+, W-).
    pub statistic: f64,
    pub p_value: f64,
    /// Pairs with a nonzero difference.
    pub n: usize,
    pub method: WilcoxonMethod,
}

/// Average ranks of `values` (ascending, ties share the mean rank).
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Null distribution of W+ for the given ranks as (value, probability)
/// pairs in ascending order. Ranks must be multiples of one half.
pub fn exact_distribution(ranks: &[f64]) -> Vec<(f64, f64)> {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0f64; total + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    let all = 2f64.powi(ranks.len() as i32);
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0.0)
        .map(|(s, &c)| (s as f64 / 2.0, c / all))
        .collect()
}

fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// Two-sided Wilcoxon signed-rank test on paired samples.
pub fn wilcoxon_signed_rank(pairs: &[(f64, f64)]) -> Result<WilcoxonResult, EvalError> {
    let diffs: Vec<f64> = pairs.iter().map(|(b, a)| a - b).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        return Err(EvalError::AllZeroDifferences);
    }
    let n = diffs.len();
    let ranks = average_ranks(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let statistic = w_plus.min(total - w_plus);
    if n <= EXACT_MAX_N {
        let dist = exact_distribution(&ranks);
        let eps = 1e-9;
        let le: f64 = dist.iter().filter(|(w, _)| *w <= w_plus + eps).map(|(_, p)| p).sum();
        let ge: f64 = dist.iter().filter(|(w, _)| *w >= w_plus - eps).map(|(_, p)| p).sum();
        return Ok(WilcoxonResult {
            statistic,
            p_value: (2.0 * le.min(ge)).min(1.0),
            n,
            method: WilcoxonMethod::Exact,
        });
    }
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut sorted = ranks.clone();
    sorted.sort_by(f64::total_cmp);
    for group in sorted.chunk_by(|a, b| a == b) {
        let t = group.len() as f64;
        tie_term += t * t * t - t;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let z = (w_plus - mean) / var.sqrt();
    Ok(WilcoxonResult {
        statistic,
        p_value: (2.0 * normal_sf(z.abs())).min(1.0),
        n,
        method: WilcoxonMethod::Normal,
    })
}

// ------------------------------------------------------------------ reports

#[derive(Debug, Clone, Deserialize)]
struct ManifestView {
    order: Vec<String>,
    tallies: BTreeMap<Phase, u32>,
    smell_counts_before: BTreeMap<SmellKind, u32>,
    smell_counts_after: BTreeMap<SmellKind, u32>,
    qmood_before: QmoodVector,
    qmood_after: QmoodVector,
}

#[derive(Debug, Clone, Default)]
pub struct ReportOptions {
    /// Baseline records; alignment tables stay empty without them.
    pub theirs: Option<Vec<RefactoringRecord>>,
    pub range_rule: Option<RangeRule>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn align_rows(
    report: Option<&AlignmentReport>,
    ours: &[RefactoringRecord],
    theirs: &[RefactoringRecord],
) -> Vec<Vec<String>> {
    let Some(r) = report else { return Vec::new() };
    let describe = |rec: &RefactoringRecord| {
        vec![
            rec.refactoring_type.clone(),
            rec.class_fqn.clone(),
            rec.method_signature.clone().unwrap_or_default(),
            rec.line_range
                .map(|l| format!("{}-{}", l.start, l.end))
                .unwrap_or_default(),
        ]
    };
    let mut rows = Vec::new();
    let matched_ours: BTreeSet<usize> = r.matched_pairs.iter().map(|p| p.0).collect();
    let matched_theirs: BTreeSet<usize> = r.matched_pairs.iter().map(|p| p.1).collect();
    for &(i, j) in &r.matched_pairs {
        let mut row = vec!["tp".to_string()];
        row.extend(describe(&ours[i]));
        row.push(
            theirs[j]
                .line_range
                .map(|l| format!("{}-{}", l.start, l.end))
                .unwrap_or_default(),
        );
        rows.push(row);
    }
    for (_, rec) in ours.iter().enumerate().filter(|(i, _)| !matched_ours.contains(i)) {
        let mut row = vec!["fp".to_string()];
        row.extend(describe(rec));
        row.push(String::new());
        rows.push(row);
    }
    for (_, rec) in theirs.iter().enumerate().filter(|(j, _)| !matched_theirs.contains(j)) {
        let mut row = vec!["fn".to_string()];
        let mut d = describe(rec);
        let their_range = std::mem::take(&mut d[3]);
        row.extend(d);
        row.push(their_range);
        rows.push(row);
    }
    rows.push(vec![
        "summary".into(),
        format!("tp={} fp={} fn={}", r.tp, r.fp, r.fn_),
        format!("precision={}", fmt_opt(r.precision)),
        format!("recall={}", fmt_opt(r.recall)),
        format!("f1={}", fmt_opt(r.f1)),
        String::new(),
    ]);
    rows
}

const ALIGN_HEADER: &[&str] = &[
    "outcome",
    "refactoring_type",
    "class",
    "method",
    "our_range",
    "their_range",
];

/// Writes the report files for a finished journal and returns their paths.
pub fn emit_reports(journal: &Path, out: &Path, opts: &ReportOptions) -> Result<Vec<PathBuf>, EvalError> {
    let manifest_path = journal.join("manifest.json");
    if !manifest_path.is_file() {
        return Err(EvalError::IncompleteJournal(format!(
            "{} is missing",
            manifest_path.display()
        )));
    }
    let manifest: ManifestView = read_json(&manifest_path)?;
    let mut sessions = Vec::new();
    for fqn in &manifest.order {
        let p = journal.join(fqn).join("verdict.json");
        if !p.is_file() {
            return Err(EvalError::IncompleteJournal(format!("no verdict for {fqn}")));
        }
        sessions.push(read_json::<SessionVerdict>(&p)?);
    }

    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let lock_path = out.join(".report.lock");
    let lock = File::create(&lock_path).map_err(|e| io_err(&lock_path, e))?;
    lock.lock().map_err(|e| io_err(&lock_path, e))?;
    let mut created = Vec::new();

    let verdict_rows: Vec<Vec<String>> = sessions
        .iter()
        .map(|s| {
            vec![
                s.fqn.clone(),
                s.verdict.name().to_string(),
                s.compile_attempts.to_string(),
                s.test_attempts.to_string(),
                s.reason.clone(),
            ]
        })
        .collect();
    let p = out.join("verdicts.csv");
    write_csv(
        &p,
        &["class", "verdict", "compile_attempts", "test_attempts", "reason"],
        &verdict_rows,
    )?;
    created.push(p);

    let mut srr_rows = Vec::new();
    let mut srr_json = Vec::new();
    for kind in SmellKind::all() {
        let b = manifest.smell_counts_before.get(&kind).copied().unwrap_or(0);
        let a = manifest.smell_counts_after.get(&kind).copied().unwrap_or(0);
        let rate = improvement_rate(b as f64, a as f64).ok();
        srr_rows.push(vec![
            kind.name().to_string(),
            b.to_string(),
            a.to_string(),
            fmt_opt(rate),
        ]);
        srr_json.push(serde_json::json!({"smell_kind": kind.name(), "before": b, "after": a, "srr": rate}));
    }
    let (tb, ta): (u32, u32) = (
        manifest.smell_counts_before.values().sum(),
        manifest.smell_counts_after.values().sum(),
    );
    let total_srr = improvement_rate(tb as f64, ta as f64).ok();
    srr_rows.push(vec!["total".into(), tb.to_string(), ta.to_string(), fmt_opt(total_srr)]);
    let p = out.join("srr.csv");
    write_csv(&p, &["smell_kind", "before", "after", "srr"], &srr_rows)?;
    created.push(p);

    let qi = quality_improvement(&manifest.qmood_before, &manifest.qmood_after);
    let qi_rows: Vec<Vec<String>> = Attribute::ALL
        .iter()
        .map(|&a| {
            vec![
                a.name().to_string(),
                manifest.qmood_before.get(a).to_string(),
                manifest.qmood_after.get(a).to_string(),
                fmt_opt(qi[&a].value()),
            ]
        })
        .collect();
    let p = out.join("qmood_qi.csv");
    write_csv(&p, &["attribute", "before", "after", "qi"], &qi_rows)?;
    created.push(p);

    let ours = load_journal_records(journal)?;
    let theirs = opts.theirs.clone().unwrap_or_default();
    let rule = opts.range_rule.unwrap_or(RangeRule::Intersect);
    let (s1, s2) = match &opts.theirs {
        Some(t) => {
            let s1 = match match_scenario1(&ours, t, rule) {
                Ok(r) => Some(r),
                Err(EvalError::MissingRange { .. }) => None,
                Err(e) => return Err(e),
            };
            (s1, Some(match_scenario2(&ours, t)))
        }
        None => (None, None),
    };
    for (name, report) in [("align_s1.csv", s1.as_ref()), ("align_s2.csv", s2.as_ref())] {
        let p = out.join(name);
        write_csv(&p, ALIGN_HEADER, &align_rows(report, &ours, &theirs))?;
        created.push(p);
    }

    let mut passk = Vec::new();
    let single = journal.join("single_agent");
    if single.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(&single)
            .map_err(|e| io_err(&single, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension().is_some_and(|e| e == "json") && !p.to_string_lossy().ends_with(".transcript.json")
            })
            .collect();
        files.sort();
        for f in files {
            passk.push(read_json::<SingleAgentResult>(&f)?);
        }
    }
    let passk_rows: Vec<Vec<String>> = passk
        .iter()
        .map(|r| {
            vec![
                r.fqn.clone(),
                r.k.to_string(),
                r.verdicts.iter().filter(|v| **v).count().to_string(),
                r.verdicts.first().copied().unwrap_or(false).to_string(),
                r.verdicts.iter().any(|v| *v).to_string(),
            ]
        })
        .collect();
    let p = out.join("passk.csv");
    write_csv(&p, &["class", "k", "passed", "pass_at_1", "pass_at_k"], &passk_rows)?;
    created.push(p);

    let report = serde_json::json!({
        "verdicts": manifest.tallies.iter().map(|(k, v)| (k.name().to_string(), *v)).collect::<BTreeMap<_, _>>(),
        "sessions": sessions.iter().map(|s| serde_json::json!({
            "class": s.fqn,
            "verdict": s.verdict.name(),
            "compile_attempts": s.compile_attempts,
            "test_attempts": s.test_attempts,
            "reason": s.reason,
        })).collect::<Vec<_>>(),
        "srr": {"per_kind": srr_json, "total": total_srr},
        "qmood_qi": Attribute::ALL.iter().map(|&a| serde_json::json!({
            "attribute": a.name(),
            "before": manifest.qmood_before.get(a),
            "after": manifest.qmood_after.get(a),
            "qi": qi[&a].value(),
        })).collect::<Vec<_>>(),
        "alignment": {
            "matching": "one-to-one",
            "range_rule": rule,
            "scenario1": s1,
            "scenario2": s2,
        },
        "pass_at_k": passk,
    });
    let p = out.join("report.json");
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| io_err(&p, e))?;
    text.push('\n');
    fs::write(&p, text).map_err(|e| io_err(&p, e))?;
    created.push(p);
    let _ = lock.unlock();
    Ok(created)
}

// ----------------------------------------------------------------- analysis

/// Writes `class_metrics.csv`, `smells.csv` and `design.json` for one
/// analyzed project.
pub fn emit_analysis(analysis: &ProjectAnalysis, out: &Path) -> Result<Vec<PathBuf>, EvalError> {
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let mut created = Vec::new();
    let rows: Vec<Vec<String>> = analysis.classes.iter().map(ClassMetrics::row).collect();
    let p = out.join("class_metrics.csv");
    write_csv(&p, CLASS_COLUMNS, &rows)?;
    created.push(p);
    let rows: Vec<Vec<String>> = analysis
        .smells
        .iter()
        .map(|s| {
            vec![
                s.kind.name().to_string(),
                s.fqn.clone(),
                s.method.clone().unwrap_or_default(),
                s.line_range.start.to_string(),
                s.line_range.end.to_string(),
                s.evidence.clone(),
            ]
        })
        .collect();
    let p = out.join("smells.csv");
    write_csv(
        &p,
        &["smell", "class", "method", "start_line", "end_line", "evidence"],
        &rows,
    )?;
    created.push(p);
    let design = serde_json::json!({
        "design_metrics": MetricVector::NAMES.iter().map(|n| (n.to_string(), analysis.vector.get(n))).collect::<BTreeMap<_, _>>(),
        "qmood": Attribute::ALL.iter().map(|&a| (a.name().to_string(), analysis.qmood.get(a))).collect::<BTreeMap<_, _>>(),
        "smell_counts": counts_by_kind(&analysis.smells).iter().map(|(k, v)| (k.name().to_string(), *v)).collect::<BTreeMap<_, _>>(),
        "parse_errors": analysis.parse_errors,
    });
    let p = out.join("design.json");
    let mut text = serde_json::to_string_pretty(&design).map_err(|e| io_err(&p, e))?;
    text.push('\n');
    fs::write(&p, text).map_err(|e| io_err(&p, e))?;
    created.push(p);
    Ok(created)
}

// --------------------------------------------------------- quality compare

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityComparison {
    pub qmood_before: QmoodVector,
    pub qmood_after: QmoodVector,
    pub quality_improvement: BTreeMap<Attribute, Improvement>,
    pub smells_before: BTreeMap<SmellKind, u32>,
    pub smells_after: BTreeMap<SmellKind, u32>,
    /// Smell reduction per kind; `None` where the kind was absent before.
    pub srr: BTreeMap<SmellKind, Option<f64>>,
    pub total_srr: Option<f64>,
}

/// QMOOD and smell comparison of two versions of a project.
pub fn compare_quality(before: &Path, after: &Path, cfg: &EngineConfig) -> Result<QualityComparison, EvalError> {
    let coeffs = cfg.coefficients().map_err(OrchestratorError::from)?;
    let b = analyze_project(before, cfg, &coeffs)?;
    let a = analyze_project(after, cfg, &coeffs)?;
    let (sb, sa) = (counts_by_kind(&b.smells), counts_by_kind(&a.smells));
    let srr = sb
        .iter()
        .map(|(k, &n)| (*k, improvement_rate(n as f64, sa[k] as f64).ok()))
        .collect();
    Ok(QualityComparison {
        qmood_before: b.qmood,
        qmood_after: a.qmood,
        quality_improvement: quality_improvement(&b.qmood, &a.qmood),
        total_srr: improvement_rate(b.smells.len() as f64, a.smells.len() as f64).ok(),
        smells_before: sb,
        smells_after: sa,
        srr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type_names_normalize() {
        assert_eq!(normalize_type("  extract   METHOD "), "Extract Method");
        assert_eq!(normalize_type("Split  Loop Body"), "Split Loop Body");
    }

    #[test]
    fn method_elements_normalize() {
        assert_eq!(method_signature("public run() : void").unwrap(), "run()");
        assert_eq!(
            method_signature("private total(items List<Map<String,Integer>>, rate double) : double").unwrap(),
            "total(List,double)"
        );
        assert_eq!(
            method_signature("public join(parts java.lang.String...) : String").unwrap(),
            "join(String[])"
        );
        assert_eq!(method_signature("count : int"), None);
    }

    #[test]
    fn class_from_file_path() {
        assert_eq!(class_from_path("core/src/main/java/a/b/C.java").unwrap(), "a.b.C");
        assert_eq!(class_from_path("C.txt"), None);
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn pass_at_k_rule() {
        assert!(pass_at_k(&[false, true, false], 3).unwrap());
        assert!(!pass_at_k(&[false], 1).unwrap());
        assert!(matches!(
            pass_at_k(&[true, true], 3),
            Err(EvalError::ArityMismatch { .. })
        ));
    }

    #[test]
    fn all_zero_differences_rejected() {
        assert!(matches!(
            wilcoxon_signed_rank(&[(1.0, 1.0), (2.0, 2.0)]),
            Err(EvalError::AllZeroDifferences)
        ));
    }

    #[test]
    fn jaccard_rule() {
        let r = RangeRule::Jaccard(0.5);
        assert!(r.aligned(LineRange::new(1, 10), LineRange::new(1, 5)));
        assert!(!r.aligned(LineRange::new(1, 10), LineRange::new(1, 4)));
        assert!(RangeRule::Exact.aligned(LineRange::new(2, 3), LineRange::new(2, 3)));
    }
}
