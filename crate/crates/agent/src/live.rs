//! HTTP provider for services speaking the OpenAI-style chat-completions format with function tools.

use std::collections::HashMap;
use std::fmt;
use std::time::Duration;

use bems_core::TokenUsage;
use serde_json::{json, Value};

use crate::provider::{ChatRequest, ChatResponse, Message, Provider, ProviderError, Reply, Role, ToolCallRequest};

#[derive(Clone, PartialEq)]
pub struct LiveConfig {
    /// Base URL up to and including the version segment, e.g. `https://api.openai.com/v1`.
    pub base_url: String,
    pub api_key: String,
    pub timeout: Duration,
}

impl fmt::Debug for LiveConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LiveConfig")
            .field("base_url", &self.base_url)
            .field("api_key", &"<redacted>")
            .field("timeout", &self.timeout)
            .finish()
    }
}

pub struct LiveProvider {
    config: LiveConfig,
    agent: ureq::Agent,
}

impl fmt::Debug for LiveProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LiveProvider").field("config", &self.config).finish()
    }
}

/// Function names may not contain dots on the wire.
fn wire_name(name: &str) -> String {
    name.replace('.', "_")
}

fn wire_message(m: &Message) -> Value {
    match m.role {
        Role::Assistant if !m.tool_calls.is_empty() => json!({
            "role": "assistant",
            "content": null,
            "tool_calls": m.tool_calls.iter().map(|c| json!({
                "id": c.id,
                "type": "function",
                "function": {"name": wire_name(&c.name), "arguments": c.arguments.to_string()}
            })).collect::<Vec<_>>()
        }),
        Role::Tool => json!({"role": "tool", "tool_call_id": m.tool_call_id, "content": m.content}),
        role => json!({"role": role, "content": m.content}),
    }
}

impl LiveProvider {
    pub fn new(config: LiveConfig) -> Self {
        let agent: ureq::Agent =
            ureq::Agent::config_builder().timeout_global(Some(config.timeout)).http_status_as_error(false).build().into();
        LiveProvider { config, agent }
    }

    pub fn request_body(request: &ChatRequest) -> Value {
        json!({
            "model": request.model,
            "messages": request.messages.iter().map(wire_message).collect::<Vec<_>>(),
            "tools": request.tools.iter().map(|t| json!({
                "type": "function",
                "function": {"name": wire_name(&t.name), "description": t.description, "parameters": t.parameters}
            })).collect::<Vec<_>>(),
            "tool_choice": "auto",
        })
    }

    /// Maps a chat-completions response back onto the provider contract.
    pub fn parse_response(request: &ChatRequest, body: &Value) -> Result<ChatResponse, ProviderError> {
        let names: HashMap<String, &str> = request.tools.iter().map(|t| (wire_name(&t.name), t.name.as_str())).collect();
        let message = body
            .pointer("/choices/0/message")
            .ok_or_else(|| ProviderError::Protocol("response has no choices[0].message".into()))?;
        let usage = body.get("usage").map_or(TokenUsage::default(), |u| {
            let n = |k: &str| u.get(k).and_then(Value::as_u64).unwrap_or(0);
            TokenUsage::new(n("prompt_tokens"), n("completion_tokens"))
        });
        let calls = message.get("tool_calls").and_then(Value::as_array).filter(|c| !c.is_empty());
        let reply = match calls {
            Some(calls) => Reply::ToolCalls {
                calls: calls
                    .iter()
                    .map(|c| {
                        let wire = c.pointer("/function/name").and_then(Value::as_str).unwrap_or_default();
                        let raw = c.pointer("/function/arguments").and_then(Value::as_str).unwrap_or("{}");
                        ToolCallRequest {
                            id: c.get("id").and_then(Value::as_str).unwrap_or_default().to_string(),
                            name: names.get(wire).map_or_else(|| wire.to_string(), |n| n.to_string()),
                            // Unparseable arguments stay a string and fail schema validation downstream.
                            arguments: serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string())),
                        }
                    })
                    .collect(),
            },
            None => Reply::Final {
                text: message.get("content").and_then(Value::as_str).unwrap_or_default().to_string(),
                response_type: None,
            },
        };
        Ok(ChatResponse { reply, usage })
    }
}

impl Provider for LiveProvider {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let sent = self
            .agent
            .post(&url)
            .header("Authorization", &format!("Bearer {}", self.config.api_key))
            .send_json(Self::request_body(request));
        let mut resp = match sent {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => return Err(ProviderError::Timeout(self.config.timeout.as_secs())),
            Err(e) => return Err(ProviderError::Unavailable(e.to_string())),
        };
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| match e {
            ureq::Error::Timeout(_) => ProviderError::Timeout(self.config.timeout.as_secs()),
            e => ProviderError::Unavailable(e.to_string()),
        })?;
        match status {
            200..=299 => {}
            401 | 403 => return Err(ProviderError::Unavailable(format!("credential rejected (HTTP {status})"))),
            408 | 429 | 500..=599 => return Err(ProviderError::Unavailable(format!("HTTP {status}"))),
            _ => return Err(ProviderError::Protocol(format!("HTTP {status}: {}", text.chars().take(200).collect::<String>()))),
        }
        let body: Value = serde_json::from_str(&text).map_err(|e| ProviderError::Protocol(e.to_string()))?;
        Self::parse_response(request, &body)
    }
}
