//! The chat-with-tool-calls wire contract every model backend speaks.

use bems_core::TokenUsage;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolCallRequest {
    pub id: String,
    pub name: String,
    pub arguments: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    #[serde(default)]
    pub content: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_calls: Vec<ToolCallRequest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_call_id: Option<String>,
    /// Tool name, on tool-result messages.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Message { role: Role::System, content: content.into(), tool_calls: vec![], tool_call_id: None, name: None }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Message { role: Role::User, content: content.into(), tool_calls: vec![], tool_call_id: None, name: None }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Message { role: Role::Assistant, content: content.into(), tool_calls: vec![], tool_call_id: None, name: None }
    }

    pub fn assistant_calls(calls: Vec<ToolCallRequest>) -> Self {
        Message { role: Role::Assistant, content: String::new(), tool_calls: calls, tool_call_id: None, name: None }
    }

    pub fn tool_result(call: &ToolCallRequest, result: &Value) -> Self {
        Message {
            role: Role::Tool,
            content: result.to_string(),
            tool_calls: vec![],
            tool_call_id: Some(call.id.clone()),
            name: Some(call.name.clone()),
        }
    }
}

/// A tool as advertised to the model: a name, a description and a JSON Schema for its arguments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolSpec {
    pub name: String,
    pub description: String,
    pub parameters: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<Message>,
    pub tools: Vec<ToolSpec>,
    /// Battery query id, when the run belongs to a benchmark. Live backends ignore it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_id: Option<String>,
}

impl ChatRequest {
    /// The first user message, i.e. the query being answered.
    pub fn query(&self) -> Option<&str> {
        self.messages.iter().find(|m| m.role == Role::User).map(|m| m.content.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseType {
    Answer,
    Advisory,
    NeedsClarification,
    Error,
}

impl ResponseType {
    pub fn name(self) -> &'static str {
        match self {
            ResponseType::Answer => "answer",
            ResponseType::Advisory => "advisory",
            ResponseType::NeedsClarification => "needs_clarification",
            ResponseType::Error => "error",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reply {
    ToolCalls { calls: Vec<ToolCallRequest> },
    Final {
        text: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        response_type: Option<ResponseType>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub reply: Reply,
    pub usage: TokenUsage,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("provider unavailable: {0}")]
    Unavailable(String),
    #[error("provider timed out after {0} s")]
    Timeout(u64),
    #[error("provider protocol error: {0}")]
    Protocol(String),
    #[error("no fixture script for query {0:?}")]
    FixtureMiss(String),
}

impl ProviderError {
    pub fn code(&self) -> &'static str {
        match self {
            ProviderError::Unavailable(_) => "provider_unavailable",
            ProviderError::Timeout(_) => "provider_timeout",
            ProviderError::Protocol(_) => "provider_protocol",
            ProviderError::FixtureMiss(_) => "fixture_miss",
        }
    }
}

pub trait Provider: Send + Sync {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError>;
}

impl<P: Provider + ?Sized> Provider for &P {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        (**self).chat(request)
    }
}

impl<P: Provider + ?Sized> Provider for std::sync::Arc<P> {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        (**self).chat(request)
    }
}
