//! The closed tool registry: every tool the agent may call, its argument schema, and dispatch
//! into the home, the analysis catalogue, the pricing document and the memory store.

use std::sync::{Arc, Mutex, MutexGuard, OnceLock, RwLock};

use bems_core::{AttributeValue, BuildingProfile, EnergySeries, RateSchedule};
use bems_home::{
    CommandSource, Home, MemoryDraft, MemoryEdit, MemoryFilter, MemorySource, MemoryStore, NewSchedule, ScheduleEdit,
    Selector, Trigger,
};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analysis::{run_analysis, AnalysisKind, AnalysisRequest};
use crate::chart::ChartArtifact;
use crate::pricing::pricing_search;
use crate::provider::ToolSpec;

/// The pseudo-tool the model calls to record its intent classification.
pub const CLASSIFY_TOOL: &str = "classify_intent";

pub const TOOL_NAMES: [&str; 12] = [
    "analysis.run",
    "pricing.search",
    "meters.query",
    "devices.sync",
    "devices.query",
    "devices.execute",
    "schedule.create",
    "schedule.sync",
    "schedule.change",
    "memory.create",
    "memory.sync",
    "memory.change",
];

/// Tools grouped by what they touch. Used to tell a reasonable extra call from a wrong one.
pub fn tool_family(name: &str) -> Option<&'static str> {
    match name {
        "analysis.run" | "pricing.search" => Some("analysis"),
        "meters.query" | "devices.sync" | "devices.query" | "devices.execute" => Some("device"),
        "schedule.create" | "schedule.sync" | "schedule.change" => Some("schedule"),
        "memory.create" | "memory.sync" | "memory.change" => Some("memory"),
        _ => None,
    }
}

/// Everything the tools act on for one building.
pub struct AgentEnv {
    pub home: Arc<Home>,
    pub series: Arc<EnergySeries>,
    pub rates: RateSchedule,
    /// Text of the pricing document `pricing.search` reads; `None` when absent.
    pub pricing_document: Option<String>,
    pub memory: Arc<RwLock<MemoryStore>>,
    pub profile: BuildingProfile,
    run_lock: Mutex<()>,
}

impl AgentEnv {
    pub fn new(home: Arc<Home>, series: Arc<EnergySeries>, profile: BuildingProfile) -> Self {
        let rates = profile.rate_schedule.clone();
        AgentEnv {
            home,
            series,
            pricing_document: Some(rates.to_document()),
            rates,
            memory: Arc::new(RwLock::new(MemoryStore::new())),
            profile,
            run_lock: Mutex::new(()),
        }
    }

    /// A fresh home built from the profile and series.
    pub fn from_profile(profile: BuildingProfile, series: EnergySeries) -> Self {
        let home = Arc::new(Home::from_profile(&profile, &series));
        AgentEnv::new(home, Arc::new(series), profile)
    }

    pub fn with_memory(mut self, memory: Arc<RwLock<MemoryStore>>) -> Self {
        self.memory = memory;
        self
    }

    pub fn with_pricing_document(mut self, document: Option<String>) -> Self {
        self.pricing_document = document;
        self
    }

    /// Serializes runs against this home.
    pub(crate) fn lock_run(&self) -> MutexGuard<'_, ()> {
        self.run_lock.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn memory_snapshot(&self) -> MemoryStore {
        self.memory.read().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolError {
    pub code: String,
    pub message: String,
}

impl ToolError {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        ToolError { code: code.to_string(), message: message.into() }
    }

    /// The payload returned to the provider.
    pub fn to_value(&self) -> Value {
        json!({"error": {"code": self.code, "message": self.message}})
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToolOutput {
    pub result: Value,
    pub artifact: Option<ChartArtifact>,
}

struct Registered {
    spec: ToolSpec,
    validator: jsonschema::Validator,
}

/// Name → schema-checked tool. Only registered tools can be dispatched.
pub struct ToolRegistry {
    tools: IndexMap<String, Registered>,
    classify: Registered,
}

fn value_schema() -> Value {
    json!({"type": ["boolean", "number", "string"]})
}

fn tool_schemas() -> Vec<(&'static str, &'static str, Value)> {
    let kinds: Vec<&str> = AnalysisKind::ALL.iter().map(|k| k.name()).collect();
    let trigger = json!({
        "oneOf": [
            {
                "type": "object",
                "properties": {
                    "type": {"const": "time"},
                    "at": {"type": "string", "pattern": "^([01][0-9]|2[0-3]):[0-5][0-9]$"},
                    "recurrence": {"enum": ["once", "daily", "weekdays", "weekends"]}
                },
                "required": ["type", "at", "recurrence"],
                "additionalProperties": false
            },
            {
                "type": "object",
                "properties": {
                    "type": {"const": "condition"},
                    "device_id": {"type": "string", "minLength": 1},
                    "attribute": {"type": "string", "minLength": 1},
                    "op": {"enum": ["eq", "ne", "gt", "ge", "lt", "le"]},
                    "value": value_schema()
                },
                "required": ["type", "device_id", "attribute", "op", "value"],
                "additionalProperties": false
            }
        ]
    });
    vec![
        (
            "analysis.run",
            "Runs one energy or cost analysis over the building's historical data. Energy is in kWh, money in USD.",
            json!({
                "type": "object",
                "properties": {
                    "kind": {"enum": kinds},
                    "scope": {"type": "string", "description": "total, grid, or a device/channel term"},
                    "channel": {"type": "string"},
                    "window": {"type": "string", "description": "all, last_week, last_N_days, YYYY-MM-DD or START/END"},
                    "granularity": {"enum": ["interval", "hourly", "daily", "monthly"]},
                    "k": {"type": "integer", "minimum": 1, "maximum": 24},
                    "method": {"enum": ["moving_average", "linear_regression"]},
                    "ma_window": {"type": "integer", "minimum": 1},
                    "horizon": {"type": "integer", "minimum": 1, "maximum": 366},
                    "z": {"type": "number", "exclusiveMinimum": 0},
                    "chart": {"enum": ["bar", "line", "pie", "heatmap"]}
                },
                "required": ["kind"],
                "additionalProperties": false
            }),
        ),
        (
            "pricing.search",
            "Searches the energy pricing document for time-of-use windows, rates, export credit and the EV discount.",
            json!({
                "type": "object",
                "properties": {"topic": {"type": "string"}},
                "additionalProperties": false
            }),
        ),
        (
            "meters.query",
            "Reads live energy meters. Omit `meter` to list all of them.",
            json!({
                "type": "object",
                "properties": {"meter": {"type": "string", "minLength": 1}},
                "additionalProperties": false
            }),
        ),
        (
            "devices.sync",
            "Lists every smart device with its room, attributes and allowed values.",
            json!({"type": "object", "properties": {}, "additionalProperties": false}),
        ),
        (
            "devices.query",
            "Reads one device's current state by id or name.",
            json!({
                "type": "object",
                "properties": {"device": {"type": "string", "minLength": 1}},
                "required": ["device"],
                "additionalProperties": false
            }),
        ),
        (
            "devices.execute",
            "Sets one attribute on a device, or on every device matched by a room or tag selector.",
            json!({
                "type": "object",
                "properties": {
                    "device": {"type": "string", "minLength": 1},
                    "selector": {
                        "type": "object",
                        "properties": {"by": {"enum": ["room", "tag"]}, "value": {"type": "string", "minLength": 1}},
                        "required": ["by", "value"],
                        "additionalProperties": false
                    },
                    "attribute": {"type": "string", "minLength": 1},
                    "value": value_schema()
                },
                "required": ["attribute", "value"],
                "oneOf": [{"required": ["device"]}, {"required": ["selector"]}],
                "additionalProperties": false
            }),
        ),
        (
            "schedule.create",
            "Creates a time or condition triggered schedule. `until` adds a second daily entry restoring a value, for spans.",
            json!({
                "type": "object",
                "properties": {
                    "device": {"type": "string", "minLength": 1},
                    "attribute": {"type": "string", "minLength": 1},
                    "value": value_schema(),
                    "trigger": trigger,
                    "label": {"type": "string"},
                    "until": {
                        "type": "object",
                        "properties": {
                            "at": {"type": "string", "pattern": "^([01][0-9]|2[0-3]):[0-5][0-9]$"},
                            "value": value_schema()
                        },
                        "required": ["at", "value"],
                        "additionalProperties": false
                    }
                },
                "required": ["device", "attribute", "value", "trigger"],
                "additionalProperties": false
            }),
        ),
        (
            "schedule.sync",
            "Lists schedules, optionally only those acting on one device.",
            json!({
                "type": "object",
                "properties": {"device": {"type": "string", "minLength": 1}},
                "additionalProperties": false
            }),
        ),
        (
            "schedule.change",
            "Modifies, disables, enables or deletes a schedule.",
            json!({
                "type": "object",
                "properties": {
                    "schedule_id": {"type": "string", "minLength": 1},
                    "action": {"enum": ["modify", "disable", "enable", "delete"]},
                    "trigger": trigger,
                    "attribute": {"type": "string", "minLength": 1},
                    "value": value_schema()
                },
                "required": ["schedule_id", "action"],
                "additionalProperties": false
            }),
        ),
        (
            "memory.create",
            "Stores a long-term user preference, from the user's own words or as structured fields.",
            json!({
                "type": "object",
                "properties": {
                    "utterance": {"type": "string", "minLength": 1},
                    "fields": {"type": "object"}
                },
                "oneOf": [{"required": ["utterance"]}, {"required": ["fields"]}],
                "additionalProperties": false
            }),
        ),
        (
            "memory.sync",
            "Lists stored preferences, optionally filtered by device or by text.",
            json!({
                "type": "object",
                "properties": {
                    "device": {"type": "string", "minLength": 1},
                    "text": {"type": "string", "minLength": 1}
                },
                "additionalProperties": false
            }),
        ),
        (
            "memory.change",
            "Updates or deletes a stored preference.",
            json!({
                "type": "object",
                "properties": {
                    "memory_id": {"type": "string", "minLength": 1},
                    "action": {"enum": ["update", "delete"]},
                    "summary": {"type": "string"},
                    "fields": {"type": "object"}
                },
                "required": ["memory_id", "action"],
                "additionalProperties": false
            }),
        ),
    ]
}

fn classify_schema() -> Value {
    let primaries: Vec<&str> = bems_core::Primary::ALL.iter().map(|p| p.name()).collect();
    let secondaries: Vec<&str> = bems_core::Secondary::ALL.iter().map(|s| s.name()).collect();
    json!({
        "type": "object",
        "properties": {
            "primary": {"type": "string", "description": format!("one of: {}", primaries.join("; "))},
            "secondary": {"type": "string", "description": format!("one of: {}", secondaries.join("; "))},
            "rationale": {"type": "string"}
        },
        "required": ["primary", "secondary"],
        "additionalProperties": false
    })
}

fn register(name: &str, description: &str, parameters: Value) -> Registered {
    let validator = jsonschema::validator_for(&parameters).unwrap_or_else(|e| panic!("schema for {name} is invalid: {e}"));
    Registered { spec: ToolSpec { name: name.to_string(), description: description.to_string(), parameters }, validator }
}

impl Default for ToolRegistry {
    fn default() -> Self {
        ToolRegistry::standard()
    }
}

impl ToolRegistry {
    pub fn standard() -> Self {
        let tools = tool_schemas().into_iter().map(|(n, d, p)| (n.to_string(), register(n, d, p))).collect();
        let classify = register(
            CLASSIFY_TOOL,
            "Records the intent classification of the user's query: one primary and one secondary category.",
            classify_schema(),
        );
        ToolRegistry { tools, classify }
    }

    /// One process-wide standard registry, so schemas are compiled once.
    pub fn shared() -> &'static ToolRegistry {
        static SHARED: OnceLock<ToolRegistry> = OnceLock::new();
        SHARED.get_or_init(ToolRegistry::standard)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tools.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tools.keys().map(String::as_str)
    }

    /// Specs advertised to the provider: the classification pseudo-tool first, then the tools.
    pub fn specs(&self) -> Vec<ToolSpec> {
        std::iter::once(self.classify.spec.clone()).chain(self.tools.values().map(|t| t.spec.clone())).collect()
    }

    pub fn classify_spec(&self) -> ToolSpec {
        self.classify.spec.clone()
    }

    /// Schema check for a call's arguments, by tool name.
    pub fn validate(&self, name: &str, arguments: &Value) -> Result<(), ToolError> {
        let reg = if name == CLASSIFY_TOOL {
            &self.classify
        } else {
            self.tools.get(name).ok_or_else(|| ToolError::new("unknown_tool", format!("no tool named {name:?}")))?
        };
        let errors: Vec<String> = reg
            .validator
            .iter_errors(arguments)
            .map(|e| {
                let path = e.instance_path().to_string();
                if path.is_empty() { e.to_string() } else { format!("{path}: {e}") }
            })
            .collect();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ToolError::new("invalid_arguments", errors.join("; ")))
        }
    }

    /// Validates, then runs the tool. Failures come back as structured errors.
    pub fn dispatch(&self, env: &AgentEnv, name: &str, arguments: &Value) -> Result<ToolOutput, ToolError> {
        if name == CLASSIFY_TOOL {
            return Err(ToolError::new("unknown_tool", "classification is not dispatched as a tool"));
        }
        self.validate(name, arguments)?;
        let plain = |result: Value| Ok(ToolOutput { result, artifact: None });
        let source = CommandSource::Agent;
        match name {
            "analysis.run" => {
                let req: AnalysisRequest = parse(arguments)?;
                let out = run_analysis(&env.series, &env.rates, &req).map_err(|e| ToolError::new(e.code(), e.to_string()))?;
                let mut result = json!({"kind": req.kind.name(), "result": out.result});
                if let Some(a) = &out.artifact {
                    result["chart"] = json!({"kind": a.kind, "title": a.title, "points": a.labels.len()});
                }
                Ok(ToolOutput { result, artifact: out.artifact })
            }
            "pricing.search" => {
                let topic = arguments.get("topic").and_then(Value::as_str);
                pricing_search(env.pricing_document.as_deref(), topic)
                    .map_err(|e| ToolError::new(e.code(), e.to_string()))
                    .and_then(plain)
            }
            "meters.query" => {
                let meter = arguments.get("meter").and_then(Value::as_str);
                let meters = env.home.meters_query(meter).map_err(home_err)?;
                plain(json!({"meters": meters}))
            }
            "devices.sync" => plain(json!({"devices": env.home.devices_sync()})),
            "devices.query" => {
                let key = str_arg(arguments, "device")?;
                plain(json!({"device": env.home.devices_query(key).map_err(home_err)?}))
            }
            "devices.execute" => {
                let attribute = str_arg(arguments, "attribute")?;
                let value: AttributeValue = parse(&arguments["value"])?;
                if let Some(sel) = arguments.get("selector") {
                    let selector: Selector = parse(sel)?;
                    let outcomes = env.home.group_execute(&selector, attribute, &value, source);
                    if outcomes.is_empty() {
                        return Err(ToolError::new("no_match", format!("no device matches {selector:?}")));
                    }
                    plain(json!({"outcomes": outcomes}))
                } else {
                    let device = env.home.devices_execute(str_arg(arguments, "device")?, attribute, &value, source).map_err(home_err)?;
                    plain(json!({"device": device}))
                }
            }
            "schedule.create" => {
                let device = str_arg(arguments, "device")?;
                let attribute = str_arg(arguments, "attribute")?;
                let trigger: Trigger = parse(&arguments["trigger"])?;
                let label = arguments.get("label").and_then(Value::as_str).map(String::from);
                let mut news = vec![NewSchedule {
                    device_id: device.to_string(),
                    attribute: attribute.to_string(),
                    value: parse(&arguments["value"])?,
                    trigger,
                    label: label.clone(),
                }];
                if let Some(until) = arguments.get("until") {
                    let at = chrono::NaiveTime::parse_from_str(str_arg(until, "at")?, "%H:%M")
                        .map_err(|e| ToolError::new("invalid_arguments", e.to_string()))?;
                    news.push(NewSchedule {
                        device_id: device.to_string(),
                        attribute: attribute.to_string(),
                        value: parse(&until["value"])?,
                        trigger: Trigger::daily(at),
                        label: label.map(|l| format!("{l} (end)")),
                    });
                }
                let mut created = Vec::new();
                for new in news {
                    match env.home.schedule_create(new) {
                        Ok(e) => created.push(e),
                        Err(e) => {
                            // Keep the pair atomic: drop the half already created.
                            for c in &created {
                                let _ = env.home.schedule_change(&c.schedule_id, ScheduleEdit::Delete);
                            }
                            return Err(ToolError::new(e.code(), e.to_string()));
                        }
                    }
                }
                plain(json!({"created": created}))
            }
            "schedule.sync" => {
                let device = match arguments.get("device").and_then(Value::as_str) {
                    Some(d) => Some(env.home.devices_query(d).map_err(home_err)?.device_id),
                    None => None,
                };
                plain(json!({"schedules": env.home.schedule_sync(device.as_deref())}))
            }
            "schedule.change" => {
                let id = str_arg(arguments, "schedule_id")?;
                let mut edit = arguments.clone();
                if let Some(o) = edit.as_object_mut() {
                    o.remove("schedule_id");
                }
                let edit: ScheduleEdit = parse(&edit)?;
                let r = env.home.schedule_change(id, edit).map_err(|e| ToolError::new(e.code(), e.to_string()))?;
                plain(match r {
                    Some(e) => json!({"schedule": e}),
                    None => json!({"deleted": id}),
                })
            }
            "memory.create" => {
                let now = env.home.sim_clock();
                let mut store = env.memory.write().unwrap_or_else(|e| e.into_inner());
                let entry = if let Some(u) = arguments.get("utterance").and_then(Value::as_str) {
                    store.create_from_utterance(u, now)
                } else {
                    let draft: MemoryDraft = parse(&arguments["fields"])?;
                    store.create_structured(draft, MemorySource::Explicit, now)
                }
                .map_err(|e| ToolError::new(e.code(), e.to_string()))?;
                plain(json!({"memory": entry}))
            }
            "memory.sync" => {
                let filter = match (arguments.get("device").and_then(Value::as_str), arguments.get("text").and_then(Value::as_str)) {
                    (Some(d), _) => MemoryFilter::Device(d.to_string()),
                    (None, Some(t)) => MemoryFilter::Text(t.to_string()),
                    (None, None) => MemoryFilter::All,
                };
                let store = env.memory.read().unwrap_or_else(|e| e.into_inner());
                plain(json!({"memories": store.sync(&filter)}))
            }
            "memory.change" => {
                let id = str_arg(arguments, "memory_id")?;
                let edit = match str_arg(arguments, "action")? {
                    "delete" => MemoryEdit::Delete,
                    _ => MemoryEdit::Update {
                        summary: arguments.get("summary").and_then(Value::as_str).map(String::from),
                        fields: match arguments.get("fields") {
                            Some(f) => parse(f)?,
                            None => MemoryDraft::default(),
                        },
                    },
                };
                let mut store = env.memory.write().unwrap_or_else(|e| e.into_inner());
                let r = store.change(id, edit).map_err(|e| ToolError::new(e.code(), e.to_string()))?;
                plain(match r {
                    Some(e) => json!({"memory": e}),
                    None => json!({"deleted": id}),
                })
            }
            _ => Err(ToolError::new("unknown_tool", format!("no tool named {name:?}"))),
        }
    }
}

fn parse<T: for<'de> Deserialize<'de>>(v: &Value) -> Result<T, ToolError> {
    T::deserialize(v).map_err(|e| ToolError::new("invalid_arguments", e.to_string()))
}

fn str_arg<'a>(v: &'a Value, key: &str) -> Result<&'a str, ToolError> {
    v.get(key).and_then(Value::as_str).ok_or_else(|| ToolError::new("invalid_arguments", format!("missing {key:?}")))
}

fn home_err(e: bems_home::HomeError) -> ToolError {
    ToolError::new(e.code(), e.to_string())
}
