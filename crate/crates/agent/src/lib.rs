//! The agent runtime: a pluggable chat provider, a closed schema-checked tool registry over the
//! simulated home and the analytics engines, intent classification and the run state machine.

pub mod analysis;
pub mod chart;
pub mod classifier;
pub mod live;
pub mod pricing;
pub mod profile;
pub mod provider;
pub mod run;
pub mod scripted;
pub mod tools;

pub use analysis::{run_analysis, AnalysisError, AnalysisKind, AnalysisOutput, AnalysisRequest};
pub use chart::{ChartArtifact, ChartKind, ChartSeries};
pub use classifier::rule_classifier;
pub use live::{LiveConfig, LiveProvider};
pub use pricing::{pricing_search, PricingError};
pub use profile::{AgentProfile, ProfileError};
pub use provider::{ChatRequest, ChatResponse, Message, Provider, ProviderError, Reply, ResponseType, Role, ToolCallRequest, ToolSpec};
pub use run::{
    classify_intent, infer_response_type, is_mutating, run_query, run_with_registry, AgentResponse, AgentRun,
    ClassificationRecord, ClassifyError, LatencyModel, RunClock, RunError, RunOptions, RunState, ToolCallRecord,
    Transition, TurnOutcome, TurnRecord,
};
pub use scripted::{Fixture, Script, ScriptedCall, ScriptedClassification, ScriptedProvider};
pub use tools::{tool_family, AgentEnv, ToolError, ToolOutput, ToolRegistry, CLASSIFY_TOOL, TOOL_NAMES};
