//! Chat-completion gateway.
//!
//! Backends: an OpenAI-compatible HTTP client, a scripted playbook player for
//! offline runs, and a replay cassette (plus a recorder that produces one).
//! Also hosts the structured-output extractors for code and plans.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::source_model::LineRange;

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("backend error (status {status}): {body}")]
    BackendError { status: u16, body: String },
    #[error("playbook exhausted for agent={agent} phase={phase} attempt={attempt}")]
    PlaybookExhausted { agent: String, phase: String, attempt: u32 },
    #[error("no recorded response for request digest {digest}")]
    ReplayMiss { digest: String },
    #[error("prompt needs ~{tokens} tokens, context budget is {budget}")]
    PromptTooLarge { tokens: usize, budget: usize },
    #[error("response contains no fenced code block")]
    NoCodeBlock,
    #[error("plan parse error: {detail}")]
    PlanParseError { detail: String },
    #[error("invalid backend configuration: {0}")]
    Config(String),
    #[error("{path}: {detail}")]
    File { path: PathBuf, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
            Role::Tool => "tool",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolCall {
    pub id: String,
    pub name: String,
    /// JSON-encoded arguments.
    pub arguments: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_calls: Vec<ToolCall>,
    /// For `tool` messages: id of the assistant tool call being answered.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_call_id: Option<String>,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
            tool_calls: Vec::new(),
            tool_call_id: None,
        }
    }

    pub fn system(content: impl Into<String>) -> Self {
        Self::new(Role::System, content)
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self::new(Role::User, content)
    }

    pub fn tool_result(call_id: &str, content: impl Into<String>) -> Self {
        Self {
            tool_call_id: Some(call_id.to_string()),
            ..Self::new(Role::Tool, content)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolSpec {
    pub name: String,
    pub description: String,
    pub parameters: serde_json::Value,
}

/// Keys identifying a request inside a session; used by the scripted backend.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionKeys {
    pub agent: String,
    pub phase: String,
    pub attempt: u32,
    #[serde(default)]
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub keys: SessionKeys,
    pub messages: Vec<ChatMessage>,
    #[serde(default)]
    pub tools: Vec<ToolSpec>,
    pub temperature: f64,
    #[serde(default)]
    pub max_output_tokens: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    #[serde(default)]
    pub tool_calls: Vec<ToolCall>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    HttpChat,
    #[default]
    Scripted,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    /// Largest prompt accepted, in estimated tokens.
    pub context_budget: usize,
    pub playbook_path: Option<PathBuf>,
    /// When set on an http backend, every exchange is also written here.
    pub record_path: Option<PathBuf>,
    pub timeout_secs: u64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Scripted,
            endpoint: "http://localhost:8000".into(),
            model: "gpt-4o".into(),
            temperature: 0.7,
            max_output_tokens: 4096,
            context_budget: 128_000,
            playbook_path: None,
            record_path: None,
            timeout_secs: 300,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(LlmError::Config(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if matches!(self.kind, BackendKind::Scripted | BackendKind::Replay) && self.playbook_path.is_none() {
            return Err(LlmError::Config(
                "playbook_path is required for scripted and replay backends".into(),
            ));
        }
        Ok(())
    }
}

pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError>;
}

/// Builds the backend described by `config`.
pub fn backend_from_config(config: &BackendConfig) -> Result<Box<dyn ChatBackend>, LlmError> {
    config.validate()?;
    Ok(match config.kind {
        BackendKind::Scripted => Box::new(ScriptedBackend::load(config.playbook_path.as_deref().unwrap())?),
        BackendKind::Replay => Box::new(ReplayBackend::load(config.playbook_path.as_deref().unwrap())?),
        BackendKind::HttpChat => {
            let http = HttpBackend::new(config)?;
            match &config.record_path {
                Some(p) => Box::new(RecordingBackend::new(http, p.clone())),
                None => Box::new(http),
            }
        }
    })
}

/// Sends `request` after checking it against the context budget.
pub fn complete(
    backend: &dyn ChatBackend,
    request: &ChatRequest,
    context_budget: usize,
) -> Result<ChatResponse, LlmError> {
    if request.messages.is_empty() {
        return Err(LlmError::Config("request has no messages".into()));
    }
    let tokens: usize = request.messages.iter().map(|m| estimate_tokens(&m.content)).sum();
    if tokens > context_budget {
        return Err(LlmError::PromptTooLarge {
            tokens,
            budget: context_budget,
        });
    }
    backend.complete(request)
}

/// ceil(chars / 4).
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

/// Hash of the (role, content) sequence with whitespace runs collapsed.
pub fn request_digest(messages: &[ChatMessage]) -> String {
    let mut h = Sha256::new();
    for m in messages {
        h.update(m.role.as_str().as_bytes());
        h.update([0u8]);
        let normalized = m.content.split_whitespace().collect::<Vec<_>>().join(" ");
        h.update(normalized.as_bytes());
        h.update([1u8]);
    }
    hex::encode(h.finalize())
}

// ---------------------------------------------------------------- scripted

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaybookEntry {
    pub agent: String,
    #[serde(default)]
    pub phase: Option<String>,
    #[serde(default)]
    pub attempt: Option<u32>,
    #[serde(default)]
    pub target: Option<String>,
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub tool_calls: Vec<ToolCall>,
    /// Reusable entries are never consumed.
    #[serde(default)]
    pub reusable: bool,
}

impl PlaybookEntry {
    fn matches(&self, k: &SessionKeys) -> bool {
        self.agent == k.agent
            && self.phase.as_ref().is_none_or(|p| *p == k.phase)
            && self.attempt.is_none_or(|a| a == k.attempt)
            && self.target.as_ref().is_none_or(|t| *t == k.target)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Playbook {
    pub entries: Vec<PlaybookEntry>,
}

/// Replays playbook entries keyed by (agent, phase, attempt, target).
///
/// The first unconsumed entry whose keys match is returned; absent keys in
/// an entry act as wildcards.
pub struct ScriptedBackend {
    entries: Vec<PlaybookEntry>,
    consumed: Mutex<Vec<bool>>,
}

impl ScriptedBackend {
    pub fn new(playbook: Playbook) -> Self {
        let n = playbook.entries.len();
        Self {
            entries: playbook.entries,
            consumed: Mutex::new(vec![false; n]),
        }
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        Ok(Self::new(read_json(path)?))
    }

    pub fn remaining(&self) -> usize {
        let consumed = self.consumed.lock().unwrap();
        self.entries
            .iter()
            .zip(consumed.iter())
            .filter(|(e, c)| !e.reusable && !**c)
            .count()
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let mut consumed = self.consumed.lock().unwrap();
        let hit = self
            .entries
            .iter()
            .enumerate()
            .find(|(i, e)| !consumed[*i] && e.matches(&request.keys));
        match hit {
            Some((i, e)) => {
                if !e.reusable {
                    consumed[i] = true;
                }
                Ok(ChatResponse {
                    text: e.text.clone(),
                    tool_calls: e.tool_calls.clone(),
                })
            }
            None => Err(LlmError::PlaybookExhausted {
                agent: request.keys.agent.clone(),
                phase: request.keys.phase.clone(),
                attempt: request.keys.attempt,
            }),
        }
    }
}

// ------------------------------------------------------------ record/replay

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub digest: String,
    pub response: ChatResponse,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Cassette {
    pub entries: Vec<CassetteEntry>,
}

pub struct ReplayBackend {
    responses: BTreeMap<String, ChatResponse>,
}

impl ReplayBackend {
    pub fn new(cassette: Cassette) -> Self {
        Self {
            responses: cassette.entries.into_iter().map(|e| (e.digest, e.response)).collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        Ok(Self::new(read_json(path)?))
    }
}

impl ChatBackend for ReplayBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let digest = request_digest(&request.messages);
        self.responses
            .get(&digest)
            .cloned()
            .ok_or(LlmError::ReplayMiss { digest })
    }
}

/// Wraps a backend and appends every exchange to a cassette file.
pub struct RecordingBackend<B> {
    inner: B,
    path: PathBuf,
    cassette: Mutex<Cassette>,
}

impl<B: ChatBackend> RecordingBackend<B> {
    pub fn new(inner: B, path: PathBuf) -> Self {
        Self {
            inner,
            path,
            cassette: Mutex::new(Cassette::default()),
        }
    }

    pub fn cassette(&self) -> Cassette {
        self.cassette.lock().unwrap().clone()
    }
}

impl<B: ChatBackend> ChatBackend for RecordingBackend<B> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let response = self.inner.complete(request)?;
        let mut cassette = self.cassette.lock().unwrap();
        cassette.entries.push(CassetteEntry {
            digest: request_digest(&request.messages),
            response: response.clone(),
        });
        write_json(&self.path, &*cassette)?;
        Ok(response)
    }
}

// --------------------------------------------------------------------- http

pub struct HttpBackend {
    client: reqwest::blocking::Client,
    url: String,
    model: String,
    api_key: Option<String>,
}

impl HttpBackend {
    pub fn new(config: &BackendConfig) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        Ok(Self {
            client,
            url: format!("{}/v1/chat/completions", config.endpoint.trim_end_matches('/')),
            model: config.model.clone(),
            api_key: std::env::var("REFAGENT_API_KEY").ok(),
        })
    }

    fn body(&self, request: &ChatRequest) -> serde_json::Value {
        let messages: Vec<serde_json::Value> = request
            .messages
            .iter()
            .map(|m| {
                let mut v = serde_json::json!({"role": m.role.as_str(), "content": m.content});
                if !m.tool_calls.is_empty() {
                    v["tool_calls"] = m
                        .tool_calls
                        .iter()
                        .map(|c| {
                            serde_json::json!({
                                "id": c.id,
                                "type": "function",
                                "function": {"name": c.name, "arguments": c.arguments},
                            })
                        })
                        .collect();
                }
                if let Some(id) = &m.tool_call_id {
                    v["tool_call_id"] = serde_json::json!(id);
                }
                v
            })
            .collect();
        let mut body = serde_json::json!({
            "model": self.model,
            "messages": messages,
            "temperature": request.temperature,
        });
        if let Some(max) = request.max_output_tokens {
            body["max_tokens"] = serde_json::json!(max);
        }
        if !request.tools.is_empty() {
            body["tools"] = request
                .tools
                .iter()
                .map(|t| {
                    serde_json::json!({
                        "type": "function",
                        "function": {"name": t.name, "description": t.description, "parameters": t.parameters},
                    })
                })
                .collect();
        }
        body
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let mut req = self.client.post(&self.url).json(&self.body(request));
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| LlmError::BackendError {
            status: 0,
            body: e.to_string(),
        })?;
        let status = resp.status().as_u16();
        let text = resp.text().map_err(|e| LlmError::BackendError {
            status,
            body: e.to_string(),
        })?;
        if !(200..300).contains(&status) {
            return Err(LlmError::BackendError { status, body: text });
        }
        parse_chat_completion(&text).map_err(|detail| LlmError::BackendError { status, body: detail })
    }
}

/// Extracts the first choice from an OpenAI-style completion body.
pub fn parse_chat_completion(body: &str) -> Result<ChatResponse, String> {
    let v: serde_json::Value = serde_json::from_str(body).map_err(|e| format!("invalid JSON: {e}"))?;
    let msg = v
        .pointer("/choices/0/message")
        .ok_or_else(|| "response has no choices[0].message".to_string())?;
    let text = msg
        .get("content")
        .and_then(|c| c.as_str())
        .unwrap_or_default()
        .to_string();
    let tool_calls = msg
        .get("tool_calls")
        .and_then(|c| c.as_array())
        .map(|calls| {
            calls
                .iter()
                .map(|c| ToolCall {
                    id: c["id"].as_str().unwrap_or_default().to_string(),
                    name: c
                        .pointer("/function/name")
                        .and_then(|n| n.as_str())
                        .unwrap_or_default()
                        .to_string(),
                    arguments: c
                        .pointer("/function/arguments")
                        .and_then(|a| a.as_str())
                        .unwrap_or("{}")
                        .to_string(),
                })
                .collect()
        })
        .unwrap_or_default();
    Ok(ChatResponse { text, tool_calls })
}

// --------------------------------------------------------------- transcript

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub timestamp: String,
    pub keys: SessionKeys,
    pub request: Vec<ChatMessage>,
    pub response: ChatResponse,
    pub prompt_tokens: usize,
    pub response_tokens: usize,
}

/// Append-only log of the exchanges of one session.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn record(&mut self, request: &ChatRequest, response: &ChatResponse) {
        self.entries.push(TranscriptEntry {
            timestamp: chrono::Utc::now().to_rfc3339(),
            keys: request.keys.clone(),
            request: request.messages.clone(),
            response: response.clone(),
            prompt_tokens: request.messages.iter().map(|m| estimate_tokens(&m.content)).sum(),
            response_tokens: estimate_tokens(&response.text),
        });
    }
}

// ---------------------------------------------------------------- extraction

struct Fence {
    tag: String,
    body: String,
}

/// Complete ``` fences in order of appearance. An unterminated fence is ignored.
fn fences(text: &str) -> Vec<Fence> {
    let mut out = Vec::new();
    let mut open: Option<(String, Vec<&str>)> = None;
    for line in text.lines() {
        let trimmed = line.trim();
        match open.take() {
            None => {
                if let Some(tag) = trimmed.strip_prefix("```") {
                    open = Some((tag.trim().to_string(), Vec::new()));
                }
            }
            Some((tag, mut body)) => {
                if trimmed == "```" {
                    out.push(Fence {
                        tag,
                        body: body.join("\n"),
                    });
                } else {
                    body.push(line);
                    open = Some((tag, body));
                }
            }
        }
    }
    out
}

/// Body of the last `java` fence, else of the last fence, trimmed.
pub fn extract_code_block(response: &str) -> Result<String, LlmError> {
    let all = fences(response);
    all.iter()
        .rev()
        .find(|f| f.tag.eq_ignore_ascii_case("java"))
        .or_else(|| all.last())
        .map(|f| f.body.trim().to_string())
        .ok_or(LlmError::NoCodeBlock)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionKind {
    Class,
    Method,
    Field,
    Variable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanEntry {
    pub region_kind: RegionKind,
    pub identifier: String,
    #[serde(default, with = "range_pair")]
    pub line_range: Option<LineRange>,
    pub refactoring_type: String,
    pub instruction: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefactoringPlan {
    pub target_fqn: String,
    pub entries: Vec<PlanEntry>,
}

mod range_pair {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::source_model::LineRange;

    pub fn serialize<S: Serializer>(r: &Option<LineRange>, s: S) -> Result<S::Ok, S::Error> {
        r.map(|r| [r.start, r.end]).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<LineRange>, D::Error> {
        let pair: Option<[u32; 2]> = Option::deserialize(d)?;
        match pair {
            Some([s, e]) if s > e => Err(serde::de::Error::custom(format!("line_range [{s}, {e}] is reversed"))),
            Some([s, e]) => Ok(Some(LineRange::new(s, e))),
            None => Ok(None),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PlanDoc {
    List(Vec<serde_json::Value>),
    Wrapped { entries: Vec<serde_json::Value> },
}

/// Parses the last JSON fence (tag `json`, else any fence whose body is JSON)
/// into plan entries. Accepts either an array or `{"entries": [...]}`.
pub fn extract_plan(response: &str, target_fqn: &str) -> Result<RefactoringPlan, LlmError> {
    let all = fences(response);
    let body = all
        .iter()
        .rev()
        .find(|f| f.tag.eq_ignore_ascii_case("json"))
        .or_else(|| {
            all.iter()
                .rev()
                .find(|f| serde_json::from_str::<serde_json::Value>(&f.body).is_ok())
        })
        .map(|f| f.body.as_str())
        .ok_or_else(|| LlmError::PlanParseError {
            detail: "no fenced JSON block found".into(),
        })?;
    let doc: PlanDoc = serde_json::from_str(body).map_err(|e| LlmError::PlanParseError {
        detail: format!("expected a JSON array of plan entries: {e}"),
    })?;
    let raw = match doc {
        PlanDoc::List(v) | PlanDoc::Wrapped { entries: v } => v,
    };
    let entries = raw
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            serde_json::from_value::<PlanEntry>(v).map_err(|e| LlmError::PlanParseError {
                detail: format!("entry {i}: {e}"),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RefactoringPlan {
        target_fqn: target_fqn.to_string(),
        entries,
    })
}

// ---------------------------------------------------------------- file i/o

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, LlmError> {
    let text = std::fs::read_to_string(path).map_err(|e| LlmError::File {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| LlmError::File {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), LlmError> {
    let err = |e: String| LlmError::File {
        path: path.to_path_buf(),
        detail: e,
    };
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| err(e.to_string()))?;
    }
    let text = serde_json::to_string_pretty(value).map_err(|e| err(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| err(e.to_string()))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn keys(agent: &str, phase: &str, attempt: u32) -> SessionKeys {
        SessionKeys {
            agent: agent.into(),
            phase: phase.into(),
            attempt,
            target: "p.A".into(),
        }
    }

    fn request(k: SessionKeys, content: &str) -> ChatRequest {
        ChatRequest {
            keys: k,
            messages: vec![ChatMessage::user(content)],
            tools: vec![],
            temperature: 0.7,
            max_output_tokens: None,
        }
    }

    fn entry(agent: &str, phase: Option<&str>, attempt: Option<u32>, text: &str) -> PlaybookEntry {
        PlaybookEntry {
            agent: agent.into(),
            phase: phase.map(Into::into),
            attempt,
            target: None,
            text: text.into(),
            tool_calls: vec![],
            reusable: false,
        }
    }

    #[test]
    fn token_estimate() {
        assert_eq!(estimate_tokens(""), 0);
        assert_eq!(estimate_tokens(&"a".repeat(400)), 100);
        assert_eq!(estimate_tokens(&"a".repeat(401)), 101);
    }

    proptest! {
        #[test]
        fn token_estimate_is_monotone(a in ".{0,200}", b in ".{0,50}") {
            let longer = format!("{a}{b}");
            prop_assert!(estimate_tokens(&a) <= estimate_tokens(&longer));
        }
    }

    #[test]
    fn scripted_matches_keys_in_order() {
        let b = ScriptedBackend::new(Playbook {
            entries: vec![
                entry("planner", Some("plan"), Some(1), "plan text"),
                entry("generator", Some("initial"), Some(1), "first"),
                entry("generator", None, None, "any"),
            ],
        });
        let r = b.complete(&request(keys("generator", "initial", 1), "x")).unwrap();
        assert_eq!(r.text, "first");
        let r = b.complete(&request(keys("generator", "compile_fix", 1), "x")).unwrap();
        assert_eq!(r.text, "any");
        assert!(matches!(
            b.complete(&request(keys("generator", "compile_fix", 2), "x")),
            Err(LlmError::PlaybookExhausted { .. })
        ));
        assert_eq!(b.remaining(), 1);
    }

    #[test]
    fn reusable_entries_repeat() {
        let mut e = entry("generator", None, None, "again");
        e.reusable = true;
        let b = ScriptedBackend::new(Playbook { entries: vec![e] });
        for i in 1..=5 {
            assert_eq!(
                b.complete(&request(keys("generator", "x", i), "x")).unwrap().text,
                "again"
            );
        }
    }

    #[test]
    fn digest_ignores_whitespace_layout() {
        let a = [ChatMessage::user("hello   world\n")];
        let b = [ChatMessage::user(" hello world")];
        let c = [ChatMessage::system("hello world")];
        assert_eq!(request_digest(&a), request_digest(&b));
        assert_ne!(request_digest(&a), request_digest(&c));
    }

    #[test]
    fn replay_hit_and_miss() {
        let req = request(keys("planner", "plan", 1), "prompt");
        let b = ReplayBackend::new(Cassette {
            entries: vec![CassetteEntry {
                digest: request_digest(&req.messages),
                response: ChatResponse {
                    text: "recorded".into(),
                    tool_calls: vec![],
                },
            }],
        });
        assert_eq!(b.complete(&req).unwrap().text, "recorded");
        assert!(matches!(
            b.complete(&request(keys("planner", "plan", 1), "other")),
            Err(LlmError::ReplayMiss { .. })
        ));
    }

    #[test]
    fn context_budget_is_enforced() {
        let b = ScriptedBackend::new(Playbook::default());
        let req = request(keys("planner", "plan", 1), &"x".repeat(100));
        assert!(matches!(
            complete(&b, &req, 10),
            Err(LlmError::PromptTooLarge { tokens: 25, budget: 10 })
        ));
    }

    #[test]
    fn temperature_range() {
        let mut c = BackendConfig {
            playbook_path: Some("p.json".into()),
            ..Default::default()
        };
        assert_eq!(c.temperature, 0.7);
        assert!(c.validate().is_ok());
        c.temperature = 2.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn code_block_rules() {
        assert_eq!(extract_code_block("```java\nclass A {}\n```").unwrap(), "class A {}");
        let two = "Here:\n```java\nclass A {}\n```\nand\n```text\nnotes\n```\n";
        assert_eq!(extract_code_block(two).unwrap(), "class A {}");
        let mixed = "```text\nnotes\n```\nthen\n```java\nclass B {}\n```";
        assert_eq!(extract_code_block(mixed).unwrap(), "class B {}");
        assert_eq!(extract_code_block("```\nplain\n```").unwrap(), "plain");
        assert!(matches!(extract_code_block("prose only"), Err(LlmError::NoCodeBlock)));
        assert!(matches!(
            extract_code_block("```java\nunterminated"),
            Err(LlmError::NoCodeBlock)
        ));
    }

    #[test]
    fn plan_extraction() {
        let text = r#"Plan:
```json
[{"region_kind": "method", "identifier": "total(int)", "line_range": [3, 9],
  "refactoring_type": "Extract Method", "instruction": "split the loop"}]
```"#;
        let plan = extract_plan(text, "p.A").unwrap();
        assert_eq!(plan.entries.len(), 1);
        assert_eq!(plan.entries[0].region_kind, RegionKind::Method);
        assert_eq!(plan.entries[0].line_range, Some(LineRange::new(3, 9)));

        let wrapped = "```json\n{\"entries\": [{\"region_kind\": \"class\", \"identifier\": \"A\", \"refactoring_type\": \"Frobnicate\", \"instruction\": \"x\"}]}\n```";
        let plan = extract_plan(wrapped, "p.A").unwrap();
        assert_eq!(plan.entries[0].refactoring_type, "Frobnicate");
        assert_eq!(plan.entries[0].line_range, None);

        let bad_kind = "```json\n[{\"region_kind\": \"package\", \"identifier\": \"p\", \"refactoring_type\": \"Move\", \"instruction\": \"x\"}]\n```";
        assert!(matches!(
            extract_plan(bad_kind, "p.A"),
            Err(LlmError::PlanParseError { .. })
        ));
        assert!(matches!(
            extract_plan("no fences", "p.A"),
            Err(LlmError::PlanParseError { .. })
        ));
    }

    #[test]
    fn completion_body_parsing() {
        let body = r#"{"choices":[{"message":{"role":"assistant","content":null,
            "tool_calls":[{"id":"c1","type":"function","function":{"name":"code_search","arguments":"{\"fqn\":\"p.A\"}"}}]}}]}"#;
        let r = parse_chat_completion(body).unwrap();
        assert_eq!(r.text, "");
        assert_eq!(r.tool_calls[0].name, "code_search");
        assert!(parse_chat_completion("{}").is_err());
    }
}
