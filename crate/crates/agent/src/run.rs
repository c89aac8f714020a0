//! The run state machine: classification, tool-calling turns and final synthesis, with a full
//! interaction log of timings, tokens and tool results.

use std::time::Instant;

use bems_core::{taxonomy_check, IntentLabel, Primary, Secondary, TokenUsage};
use bems_home::AuditEntry;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::chart::ChartArtifact;
use crate::profile::AgentProfile;
use crate::provider::{ChatRequest, ChatResponse, Message, Provider, ProviderError, Reply, ResponseType, Role};
use crate::tools::{AgentEnv, ToolRegistry, CLASSIFY_TOOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunState {
    Queued,
    InProgress,
    RequiresAction,
    End,
}

impl RunState {
    /// The allowed edges: queued→in_progress, in_progress⇄requires_action, in_progress→end.
    pub fn can_go(self, to: RunState) -> bool {
        use RunState::*;
        matches!((self, to), (Queued, InProgress) | (InProgress, RequiresAction) | (RequiresAction, InProgress) | (InProgress, End))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub from: RunState,
    pub to: RunState,
    pub at_ms: u64,
}

/// What the model reported through the classification pseudo-tool.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ClassificationRecord {
    Label { label: IntentLabel, rationale: String },
    Failure { raw: Value, reason: String },
}

impl ClassificationRecord {
    pub fn label(&self) -> Option<IntentLabel> {
        match self {
            ClassificationRecord::Label { label, .. } => Some(*label),
            ClassificationRecord::Failure { .. } => None,
        }
    }

    /// Checks raw pseudo-tool arguments. Unknown or inconsistent categories become a failure
    /// record rather than being coerced to the nearest label.
    pub fn from_arguments(registry: &ToolRegistry, args: &Value) -> Self {
        let fail = |reason: String| ClassificationRecord::Failure { raw: args.clone(), reason };
        if let Err(e) = registry.validate(CLASSIFY_TOOL, args) {
            return fail(e.message);
        }
        let field = |k: &str| args.get(k).and_then(Value::as_str).unwrap_or_default();
        let primary: Primary = match field("primary").parse() {
            Ok(p) => p,
            Err(e) => return fail(format!("primary: {e}")),
        };
        let secondary: Secondary = match field("secondary").parse() {
            Ok(s) => s,
            Err(e) => return fail(format!("secondary: {e}")),
        };
        let label = IntentLabel::new(primary, secondary);
        if !taxonomy_check(&label) {
            return fail(format!("{} is not under {}", secondary.name(), primary.name()));
        }
        ClassificationRecord::Label { label, rationale: field("rationale").to_string() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolCallRecord {
    pub call_id: String,
    pub name: String,
    pub arguments: Value,
    pub result: Value,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_code: Option<String>,
    pub turn: usize,
    pub started_ms: u64,
    pub ended_ms: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnOutcome {
    ToolCalls,
    Final,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub index: usize,
    pub outcome: TurnOutcome,
    pub usage: TokenUsage,
    pub started_ms: u64,
    pub ended_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentResponse {
    pub text: String,
    pub response_type: ResponseType,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub artifacts: Vec<ChartArtifact>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunError {
    pub code: String,
    pub message: String,
}

/// The interaction log of one query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentRun {
    pub run_id: String,
    pub building_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_id: Option<String>,
    pub query: String,
    pub model: String,
    pub state: RunState,
    pub transitions: Vec<Transition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classification: Option<ClassificationRecord>,
    pub tool_calls: Vec<ToolCallRecord>,
    pub turns: Vec<TurnRecord>,
    pub response: AgentResponse,
    pub token_usage: TokenUsage,
    pub wall_time_ms: u64,
    /// Device commands attempted during the run, from the home's audit log.
    pub state_changes: Vec<AuditEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<RunError>,
}

/// Tools whose success changes devices, schedules or memories.
pub fn is_mutating(tool: &str) -> bool {
    matches!(tool, "devices.execute" | "schedule.create" | "schedule.change" | "memory.create" | "memory.change")
}

impl AgentRun {
    pub fn classification_executed(&self) -> bool {
        self.classification.is_some()
    }

    pub fn wall_time_s(&self) -> f64 {
        self.wall_time_ms as f64 / 1000.0
    }

    pub fn tool_names(&self) -> Vec<&str> {
        self.tool_calls.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).unwrap_or(Value::Null)
    }

    /// Human-readable log: function calls, execution time, token usage and the response.
    pub fn to_markdown(&self) -> String {
        let mut s = format!("# Run {}\n\n", self.run_id);
        s.push_str(&format!("- Building: {}\n- Query: {}\n- Model: {}\n", self.building_id, self.query, self.model));
        s.push_str(&format!("- Execution time: {:.3} s\n", self.wall_time_s()));
        let u = &self.token_usage;
        s.push_str(&format!(
            "- Token usage: {} prompt + {} completion = {} total\n",
            u.prompt_tokens, u.completion_tokens, u.total_tokens
        ));
        match &self.classification {
            Some(ClassificationRecord::Label { label, rationale }) => {
                s.push_str(&format!("- Intent: {label}"));
                if !rationale.is_empty() {
                    s.push_str(&format!(" ({rationale})"));
                }
                s.push('\n');
            }
            Some(ClassificationRecord::Failure { reason, .. }) => s.push_str(&format!("- Intent: invalid ({reason})\n")),
            None => s.push_str("- Intent: not classified\n"),
        }
        s.push_str("\n## Function calls\n\n");
        if self.tool_calls.is_empty() {
            s.push_str("None.\n");
        }
        for (i, c) in self.tool_calls.iter().enumerate() {
            let status = if c.ok { "ok".to_string() } else { format!("error {}", c.error_code.as_deref().unwrap_or("")) };
            s.push_str(&format!(
                "{}. `{}` {} ({} ms, {})\n   - arguments: `{}`\n   - result: `{}`\n",
                i + 1,
                c.name,
                status,
                c.ended_ms - c.started_ms,
                c.started_ms,
                c.arguments,
                truncate(&c.result.to_string(), 400)
            ));
        }
        if !self.state_changes.is_empty() {
            s.push_str("\n## Device changes\n\n");
            for a in &self.state_changes {
                let what = match &a.applied {
                    Some(v) => format!("{} → {}", a.previous.as_ref().map(|p| p.to_string()).unwrap_or_default(), v),
                    None => "rejected".to_string(),
                };
                s.push_str(&format!("- {}.{}: {}\n", a.device_id, a.attribute, what));
            }
        }
        s.push_str(&format!("\n## Response ({})\n\n{}\n", self.response.response_type.name(), self.response.text));
        for a in &self.response.artifacts {
            s.push_str(&format!("\n- Chart: {:?} \"{}\" with {} points\n", a.kind, a.title, a.labels.len()));
        }
        s
    }
}

fn truncate(s: &str, n: usize) -> String {
    if s.chars().count() <= n {
        s.to_string()
    } else {
        format!("{}…", s.chars().take(n).collect::<String>())
    }
}

/// Simulated latency: each provider turn costs a base delay plus per-token time, each tool a fixed delay.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyModel {
    pub turn_base_ms: u64,
    pub prompt_token_us: u64,
    pub completion_token_ms: u64,
    pub tool_ms: u64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel { turn_base_ms: 800, prompt_token_us: 50, completion_token_ms: 20, tool_ms: 50 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RunClock {
    /// Real elapsed time.
    System,
    /// Deterministic simulated time, for reproducible logs.
    Virtual(LatencyModel),
}

enum Timer {
    System(Instant),
    Virtual { now_ms: u64, model: LatencyModel },
}

impl Timer {
    fn start(clock: RunClock) -> Self {
        match clock {
            RunClock::System => Timer::System(Instant::now()),
            RunClock::Virtual(model) => Timer::Virtual { now_ms: 0, model },
        }
    }

    fn now_ms(&self) -> u64 {
        match self {
            Timer::System(t) => t.elapsed().as_millis() as u64,
            Timer::Virtual { now_ms, .. } => *now_ms,
        }
    }

    fn provider_turn(&mut self, usage: &TokenUsage) {
        if let Timer::Virtual { now_ms, model } = self {
            *now_ms += model.turn_base_ms
                + usage.prompt_tokens * model.prompt_token_us / 1000
                + usage.completion_tokens * model.completion_token_ms;
        }
    }

    fn tool_call(&mut self) {
        if let Timer::Virtual { now_ms, model } = self {
            *now_ms += model.tool_ms;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub max_turns: usize,
    pub clock: RunClock,
    pub query_id: Option<String>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { max_turns: 12, clock: RunClock::System, query_id: None }
    }
}

impl RunOptions {
    pub fn deterministic(query_id: Option<String>) -> Self {
        RunOptions { max_turns: 12, clock: RunClock::Virtual(LatencyModel::default()), query_id }
    }
}

/// FNV-1a, for stable run ids.
fn fnv64(s: &str) -> u64 {
    s.bytes().fold(0xcbf29ce484222325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100000001b3))
}

struct Recorder {
    timer: Timer,
    state: RunState,
    transitions: Vec<Transition>,
}

impl Recorder {
    fn go(&mut self, to: RunState) {
        debug_assert!(self.state.can_go(to), "{:?} → {:?}", self.state, to);
        self.transitions.push(Transition { from: self.state, to, at_ms: self.timer.now_ms() });
        self.state = to;
    }
}

/// Answers one query against `env`, using the standard tool registry.
pub fn run_query(query: &str, env: &AgentEnv, profile: &AgentProfile, provider: &dyn Provider, opts: &RunOptions) -> AgentRun {
    run_with_registry(query, env, profile, provider, ToolRegistry::shared(), opts)
}

pub fn run_with_registry(
    query: &str,
    env: &AgentEnv,
    profile: &AgentProfile,
    provider: &dyn Provider,
    registry: &ToolRegistry,
    opts: &RunOptions,
) -> AgentRun {
    let _guard = env.lock_run();
    let building_id = profile.building.building_id.clone();
    let run_id = match &opts.query_id {
        Some(q) => format!("{building_id}-{q}"),
        None => format!("{building_id}-{:016x}", fnv64(query)),
    };
    let audit_mark = env.home.audit_len();
    let mut rec = Recorder { timer: Timer::start(opts.clock), state: RunState::Queued, transitions: vec![] };
    let mut messages = vec![Message::system(profile.system_prompt()), Message::user(query)];
    let tools = registry.specs();
    let mut classification: Option<ClassificationRecord> = None;
    let mut tool_calls: Vec<ToolCallRecord> = Vec::new();
    let mut turns: Vec<TurnRecord> = Vec::new();
    let mut artifacts: Vec<ChartArtifact> = Vec::new();
    let mut error: Option<RunError> = None;

    rec.go(RunState::InProgress);
    let (text, response_type) = loop {
        let turn = turns.len();
        if turn >= opts.max_turns {
            error = Some(RunError { code: "max_turns".into(), message: format!("no final answer after {turn} turns") });
            break (format!("I could not finish this request within {turn} steps."), Some(ResponseType::Error));
        }
        let request = ChatRequest {
            model: profile.model.clone(),
            messages: messages.clone(),
            tools: tools.clone(),
            query_id: opts.query_id.clone(),
        };
        let started = rec.timer.now_ms();
        let reply = provider.chat(&request);
        let (outcome, usage) = match &reply {
            Ok(ChatResponse { reply: Reply::ToolCalls { .. }, usage }) => (TurnOutcome::ToolCalls, *usage),
            Ok(ChatResponse { reply: Reply::Final { .. }, usage }) => (TurnOutcome::Final, *usage),
            Err(_) => (TurnOutcome::Error, TokenUsage::default()),
        };
        rec.timer.provider_turn(&usage);
        turns.push(TurnRecord { index: turn, outcome, usage, started_ms: started, ended_ms: rec.timer.now_ms() });
        match reply {
            Err(e) => {
                error = Some(RunError { code: e.code().into(), message: e.to_string() });
                break (provider_error_text(&e), Some(ResponseType::Error));
            }
            Ok(ChatResponse { reply: Reply::Final { text, response_type }, .. }) => {
                messages.push(Message::assistant(text.clone()));
                break (text, response_type);
            }
            Ok(ChatResponse { reply: Reply::ToolCalls { calls }, .. }) => {
                rec.go(RunState::RequiresAction);
                messages.push(Message::assistant_calls(calls.clone()));
                for call in &calls {
                    let result = if call.name == CLASSIFY_TOOL {
                        let record = ClassificationRecord::from_arguments(registry, &call.arguments);
                        let reply = match &record {
                            ClassificationRecord::Label { label, .. } => json!({"recorded": true, "label": label}),
                            ClassificationRecord::Failure { reason, .. } => {
                                json!({"error": {"code": "invalid_label", "message": reason}})
                            }
                        };
                        classification.get_or_insert(record);
                        reply
                    } else {
                        let started = rec.timer.now_ms();
                        let out = registry.dispatch(env, &call.name, &call.arguments);
                        rec.timer.tool_call();
                        let (result, ok, code) = match out {
                            Ok(o) => {
                                artifacts.extend(o.artifact);
                                (o.result, true, None)
                            }
                            Err(e) => (e.to_value(), false, Some(e.code)),
                        };
                        tool_calls.push(ToolCallRecord {
                            call_id: call.id.clone(),
                            name: call.name.clone(),
                            arguments: call.arguments.clone(),
                            result: result.clone(),
                            ok,
                            error_code: code,
                            turn,
                            started_ms: started,
                            ended_ms: rec.timer.now_ms(),
                        });
                        result
                    };
                    messages.push(Message::tool_result(call, &result));
                }
                rec.go(RunState::InProgress);
            }
        }
    };
    let response_type = response_type.unwrap_or_else(|| infer_response_type(&text, &tool_calls));
    rec.go(RunState::End);
    AgentRun {
        run_id,
        building_id,
        query_id: opts.query_id.clone(),
        query: query.to_string(),
        model: profile.model.clone(),
        state: rec.state,
        wall_time_ms: rec.transitions.last().map(|t| t.at_ms).unwrap_or(0),
        transitions: rec.transitions,
        classification,
        token_usage: turns.iter().map(|t| t.usage).sum(),
        tool_calls,
        turns,
        response: AgentResponse { text, response_type, artifacts },
        state_changes: env.home.audit_since(audit_mark),
        error,
    }
}

fn provider_error_text(e: &ProviderError) -> String {
    match e {
        ProviderError::Timeout(_) => "The assistant took too long to respond. Please try again.".into(),
        _ => format!("The assistant is unavailable right now ({}).", e.code()),
    }
}

/// Used when the provider does not label its final answer: a failed last tool call makes the
/// answer advisory; a question with nothing changed asks for clarification.
pub fn infer_response_type(text: &str, calls: &[ToolCallRecord]) -> ResponseType {
    if calls.last().is_some_and(|c| !c.ok) {
        return ResponseType::Advisory;
    }
    let changed = calls.iter().any(|c| c.ok && is_mutating(&c.name));
    if text.trim_end().ends_with('?') && !changed {
        return ResponseType::NeedsClarification;
    }
    ResponseType::Answer
}

#[derive(Debug, thiserror::Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("the model answered without classifying")]
    NotClassified,
    #[error("invalid classification: {reason}")]
    Invalid { raw: Value, reason: String },
}

/// A single classification turn: only the pseudo-tool is offered.
pub fn classify_intent(query: &str, profile: &AgentProfile, provider: &dyn Provider) -> Result<(IntentLabel, String), ClassifyError> {
    let registry = ToolRegistry::shared();
    let request = ChatRequest {
        model: profile.model.clone(),
        messages: vec![Message::system(profile.system_prompt()), Message::user(query)],
        tools: vec![registry.classify_spec()],
        query_id: None,
    };
    let resp = provider.chat(&request)?;
    let Reply::ToolCalls { calls } = resp.reply else { return Err(ClassifyError::NotClassified) };
    let call = calls.iter().find(|c| c.name == CLASSIFY_TOOL).ok_or(ClassifyError::NotClassified)?;
    match ClassificationRecord::from_arguments(registry, &call.arguments) {
        ClassificationRecord::Label { label, rationale } => Ok((label, rationale)),
        ClassificationRecord::Failure { raw, reason } => Err(ClassifyError::Invalid { raw, reason }),
    }
}

/// Assistant turns that requested tools so far.
pub(crate) fn count_tool_turns(messages: &[Message]) -> usize {
    messages.iter().filter(|m| m.role == Role::Assistant && !m.tool_calls.is_empty()).count()
}
