//! Agent configuration: role, user profile, reasoning instructions and per-category tool routing,
//! rendered into the system prompt.

use bems_core::{BuildingProfile, Primary, Secondary};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::tools::{ToolRegistry, CLASSIFY_TOOL};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("routing for {category:?} names unregistered tool {tool:?}")]
pub struct ProfileError {
    pub category: String,
    pub tool: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub role: String,
    pub user_profile: String,
    pub building: BuildingProfile,
    pub model: String,
    /// Secondary category → tools the model should reach for.
    pub routing: IndexMap<Secondary, Vec<String>>,
}

pub const DEFAULT_MODEL: &str = "gpt-4o";

const ROLE: &str = "You are a building energy management assistant for a single household. You answer questions \
about the home's energy use and cost, read meters, control smart devices, manage schedules and automations, and \
remember the occupants' preferences. Only act through the provided tools.";

const REASONING: &str = "For every query, first call classify_intent with one primary and one secondary category \
from the taxonomy below. Then work step by step: pick the tools routed for that category, call them, read their \
results, and call more tools if needed. Before changing a device, sync the device list and query its current state. \
If a device is offline or a tool reports an error, explain the problem and suggest what the user can check. If the \
request is ambiguous, ask one clarifying question instead of acting. Report energy in kWh and money in USD.";

pub fn default_routing() -> IndexMap<Secondary, Vec<String>> {
    use Secondary::*;
    let route = |tools: &[&str]| tools.iter().map(|t| t.to_string()).collect::<Vec<_>>();
    Secondary::ALL
        .into_iter()
        .map(|s| {
            let tools = match s {
                HistoricalEnergy | EnergyPrediction | EnergySuggestions | EnergyVisualization | CostInformation
                | CostPrediction | CostVisualization => route(&["analysis.run"]),
                EnergyOptimization | CostSuggestions => route(&["analysis.run", "pricing.search"]),
                MeterStatus => route(&["meters.query"]),
                DeviceStatus | Troubleshooting => route(&["devices.query"]),
                DeviceOperation | GroupManagement | CustomConfiguration => {
                    route(&["devices.sync", "devices.query", "devices.execute"])
                }
                ScheduleInformation => route(&["schedule.sync"]),
                GeneralScheduling => route(&["devices.sync", "schedule.create", "pricing.search"]),
                ConditionalAutomation => route(&["devices.sync", "schedule.create"]),
                ScheduleManagement => route(&["schedule.sync", "schedule.change"]),
                MemoryInformation => route(&["memory.sync"]),
                MemoryCreation => route(&["memory.create"]),
                MemoryManagement => route(&["memory.sync", "memory.change"]),
                Guidance => route(&["devices.sync"]),
                Faq => vec![],
            };
            (s, tools)
        })
        .collect()
}

impl AgentProfile {
    pub fn new(building: BuildingProfile) -> Self {
        let user_profile = building.render();
        AgentProfile { role: ROLE.to_string(), user_profile, building, model: DEFAULT_MODEL.to_string(), routing: default_routing() }
    }

    pub fn with_model(mut self, model: impl Into<String>) -> Self {
        self.model = model.into();
        self
    }

    /// Every routed tool must be registered.
    pub fn validate(&self, registry: &ToolRegistry) -> Result<(), ProfileError> {
        for (cat, tools) in &self.routing {
            if let Some(t) = tools.iter().find(|t| !registry.contains(t)) {
                return Err(ProfileError { category: cat.name().to_string(), tool: t.clone() });
            }
        }
        Ok(())
    }

    pub fn system_prompt(&self) -> String {
        let mut out = format!("{}\n\n# User profile\n{}\n\n# Reasoning\n{}\n\n# Taxonomy and tool routing\n", self.role, self.user_profile, REASONING);
        for p in Primary::ALL {
            out.push_str(&format!("{}:\n", p.name()));
            for s in p.secondaries() {
                let tools = self.routing.get(&s).map(|t| t.join(", ")).unwrap_or_default();
                let tools = if tools.is_empty() { "no tools".to_string() } else { tools };
                out.push_str(&format!("  - {}: {}\n", s.name(), tools));
            }
        }
        out.push_str(&format!("\nRecord the classification with {CLASSIFY_TOOL} before any other tool.\n"));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_routing_is_registered() {
        let p = AgentProfile::new(BuildingProfile::preset("TX-01").unwrap());
        p.validate(&ToolRegistry::standard()).unwrap();
        assert_eq!(p.routing.len(), 24);
        assert!(p.system_prompt().contains("Meter Status Check: meters.query"));
    }

    #[test]
    fn unknown_routed_tool_is_rejected() {
        let mut p = AgentProfile::new(BuildingProfile::preset("TX-01").unwrap());
        p.routing.insert(Secondary::Faq, vec!["shell.exec".into()]);
        let e = p.validate(&ToolRegistry::standard()).unwrap_err();
        assert_eq!(e.tool, "shell.exec");
    }
}
