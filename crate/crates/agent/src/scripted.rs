//! A deterministic provider that replays per-query scripts: an optional classification turn,
//! fixed tool-call turns whose arguments may reference earlier tool results, and a templated answer.
//!
//! Templates are written `{{k/json/pointer}}`, where `k` is the index of an earlier tool result
//! (classification excluded) and the rest is a JSON pointer into it. A `*` segment maps over an
//! array. Filters: `|2` rounds to 2 decimals (any digit count works), `|pct` renders a share as a
//! percentage. A string that is exactly one template takes the referenced JSON value itself.

use std::path::Path;

use bems_core::TokenUsage;
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::provider::{ChatRequest, ChatResponse, Message, Provider, ProviderError, Reply, ResponseType, Role, ToolCallRequest};
use crate::run::count_tool_turns;
use crate::tools::CLASSIFY_TOOL;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptedClassification {
    pub primary: String,
    pub secondary: String,
    #[serde(default)]
    pub rationale: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptedCall {
    pub name: String,
    pub arguments: Value,
}

impl ScriptedCall {
    pub fn new(name: &str, arguments: Value) -> Self {
        ScriptedCall { name: name.to_string(), arguments }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Script {
    /// The query text, used when a request carries no query id.
    #[serde(default)]
    pub query: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classification: Option<ScriptedClassification>,
    /// Tool calls per turn, after the classification turn.
    #[serde(default)]
    pub turns: Vec<Vec<ScriptedCall>>,
    #[serde(rename = "final")]
    pub final_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response_type: Option<ResponseType>,
}

impl Script {
    pub fn new(query: impl Into<String>, final_text: impl Into<String>) -> Self {
        Script { query: query.into(), classification: None, turns: vec![], final_text: final_text.into(), response_type: None }
    }

    pub fn classify(mut self, primary: &str, secondary: &str, rationale: &str) -> Self {
        self.classification = Some(ScriptedClassification {
            primary: primary.to_string(),
            secondary: secondary.to_string(),
            rationale: rationale.to_string(),
        });
        self
    }

    pub fn turn(mut self, calls: Vec<ScriptedCall>) -> Self {
        self.turns.push(calls);
        self
    }

    pub fn respond_as(mut self, t: ResponseType) -> Self {
        self.response_type = Some(t);
        self
    }

    fn calls_at(&self, t: usize) -> Option<Vec<ToolCallRequest>> {
        let classify = self.classification.as_ref().map(|c| {
            vec![ToolCallRequest {
                id: String::new(),
                name: CLASSIFY_TOOL.to_string(),
                arguments: json!({"primary": c.primary, "secondary": c.secondary, "rationale": c.rationale}),
            }]
        });
        let turn = match (&classify, t) {
            (Some(c), 0) => Some(c.clone()),
            (Some(_), t) => self.turns.get(t - 1).map(|calls| to_requests(calls)),
            (None, t) => self.turns.get(t).map(|calls| to_requests(calls)),
        }?;
        Some(turn.into_iter().enumerate().map(|(i, mut c)| {
            c.id = format!("call_{t}_{i}");
            c
        }).collect())
    }
}

fn to_requests(calls: &[ScriptedCall]) -> Vec<ToolCallRequest> {
    calls.iter().map(|c| ToolCallRequest { id: String::new(), name: c.name.clone(), arguments: c.arguments.clone() }).collect()
}

/// Query id → script.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub scripts: IndexMap<String, Script>,
}

impl Fixture {
    pub fn insert(&mut self, query_id: impl Into<String>, script: Script) {
        self.scripts.insert(query_id.into(), script);
    }

    pub fn find(&self, query_id: Option<&str>, query: Option<&str>) -> Option<&Script> {
        if let Some(s) = query_id.and_then(|id| self.scripts.get(id)) {
            return Some(s);
        }
        let q = query?.trim();
        self.scripts.values().find(|s| s.query.trim().eq_ignore_ascii_case(q))
    }

    pub fn load(path: &Path) -> std::io::Result<Fixture> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(path, text + "\n")
    }
}

#[derive(Clone, Debug, Default)]
pub struct ScriptedProvider {
    pub fixture: Fixture,
}

impl ScriptedProvider {
    pub fn new(fixture: Fixture) -> Self {
        ScriptedProvider { fixture }
    }
}

/// Rough token count: four characters per token.
pub fn approx_tokens(chars: usize) -> u64 {
    chars.div_ceil(4) as u64
}

impl Provider for ScriptedProvider {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        let script = self
            .fixture
            .find(request.query_id.as_deref(), request.query())
            .ok_or_else(|| ProviderError::FixtureMiss(request.query_id.clone().or(request.query().map(String::from)).unwrap_or_default()))?;
        let results = tool_results(&request.messages);
        let t = count_tool_turns(&request.messages);
        let reply = match script.calls_at(t) {
            Some(calls) => Reply::ToolCalls {
                calls: calls
                    .into_iter()
                    .map(|mut c| {
                        c.arguments = render_value(&c.arguments, &results);
                        c
                    })
                    .collect(),
            },
            None => Reply::Final { text: render_text(&script.final_text, &results), response_type: script.response_type },
        };
        let prompt_chars = serde_json::to_string(&request.messages).map(|s| s.len()).unwrap_or(0)
            + serde_json::to_string(&request.tools).map(|s| s.len()).unwrap_or(0);
        let completion_chars = serde_json::to_string(&reply).map(|s| s.len()).unwrap_or(0);
        Ok(ChatResponse { reply, usage: TokenUsage::new(approx_tokens(prompt_chars), approx_tokens(completion_chars)) })
    }
}

/// Parsed results of the tool calls so far, classification excluded.
fn tool_results(messages: &[Message]) -> Vec<Value> {
    messages
        .iter()
        .filter(|m| m.role == Role::Tool && m.name.as_deref() != Some(CLASSIFY_TOOL))
        .map(|m| serde_json::from_str(&m.content).unwrap_or(Value::String(m.content.clone())))
        .collect()
}

fn lookup(results: &[Value], expr: &str) -> Value {
    let (idx, pointer) = expr.split_once('/').map(|(i, p)| (i, format!("/{p}"))).unwrap_or((expr, String::new()));
    let Some(root) = idx.trim().parse::<usize>().ok().and_then(|k| results.get(k)) else { return Value::Null };
    walk(root, &pointer)
}

fn walk(v: &Value, pointer: &str) -> Value {
    match pointer.split_once("/*") {
        Some((head, tail)) => {
            let arr = if head.is_empty() { Some(v) } else { v.pointer(head) };
            match arr.and_then(Value::as_array) {
                Some(items) => Value::Array(items.iter().map(|item| walk(item, tail)).collect()),
                None => Value::Null,
            }
        }
        None if pointer.is_empty() => v.clone(),
        None => v.pointer(pointer).cloned().unwrap_or(Value::Null),
    }
}

fn apply_filter(v: Value, filter: Option<&str>) -> Value {
    match (filter, &v) {
        (Some("pct"), Value::Number(n)) => json!(format!("{:.1}%", n.as_f64().unwrap_or(0.0) * 100.0)),
        (Some(f), Value::Number(n)) => match f.parse::<usize>() {
            Ok(d) => {
                let x = n.as_f64().unwrap_or(0.0);
                let p = 10f64.powi(d as i32);
                json!((x * p).round() / p)
            }
            Err(_) => v,
        },
        (Some(_), Value::Array(items)) => Value::Array(items.iter().map(|i| apply_filter(i.clone(), filter)).collect()),
        _ => v,
    }
}

fn resolve(results: &[Value], inner: &str) -> (Value, Option<usize>) {
    let (expr, filter) = match inner.split_once('|') {
        Some((e, f)) => (e.trim(), Some(f.trim())),
        None => (inner.trim(), None),
    };
    let digits = filter.and_then(|f| f.parse::<usize>().ok());
    (apply_filter(lookup(results, expr), filter), digits)
}

fn as_text(v: &Value, digits: Option<usize>) -> String {
    match v {
        Value::Null => "unknown".to_string(),
        Value::String(s) => s.clone(),
        Value::Number(n) => match digits {
            Some(d) => format!("{:.*}", d, n.as_f64().unwrap_or(0.0)),
            None => n.to_string(),
        },
        Value::Array(items) => items.iter().map(|i| as_text(i, digits)).collect::<Vec<_>>().join(", "),
        other => other.to_string(),
    }
}

/// Substitutes every template in `s` with its text rendering.
pub fn render_text(s: &str, results: &[Value]) -> String {
    let mut out = String::new();
    let mut rest = s;
    while let Some(start) = rest.find("{{") {
        let Some(len) = rest[start..].find("}}") else { break };
        out.push_str(&rest[..start]);
        let (v, digits) = resolve(results, &rest[start + 2..start + len]);
        out.push_str(&as_text(&v, digits));
        rest = &rest[start + len + 2..];
    }
    out.push_str(rest);
    out
}

/// Renders templates inside argument values; a whole-string template keeps its JSON type.
pub fn render_value(v: &Value, results: &[Value]) -> Value {
    match v {
        Value::String(s) => {
            let t = s.trim();
            if t.starts_with("{{") && t.ends_with("}}") && t.matches("{{").count() == 1 {
                resolve(results, &t[2..t.len() - 2]).0
            } else if s.contains("{{") {
                Value::String(render_text(s, results))
            } else {
                v.clone()
            }
        }
        Value::Array(items) => Value::Array(items.iter().map(|i| render_value(i, results)).collect()),
        Value::Object(map) => Value::Object(map.iter().map(|(k, x)| (k.clone(), render_value(x, results))).collect()),
        other => other.clone(),
    }
}
