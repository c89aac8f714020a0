//! Long-term preference memory: rule-based extraction from utterances, storage and retrieval.

use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::LazyLock;

use chrono::{NaiveDateTime, NaiveTime, Timelike};
use indexmap::IndexMap;
use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::automation::Recurrence;
use crate::home::save_json_atomic;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum MemoryError {
    #[error("no extractable content in {0:?}")]
    NoContent(String),
    #[error("utterance has no memory marker such as \"remember that\"")]
    NoMarker,
    #[error("unknown memory {0:?}")]
    UnknownMemory(String),
    #[error("memory document: {0}")]
    Document(String),
}

impl MemoryError {
    pub fn code(&self) -> &'static str {
        match self {
            MemoryError::NoContent(_) => "no_content",
            MemoryError::NoMarker => "no_marker",
            MemoryError::UnknownMemory(_) => "unknown_memory",
            MemoryError::Document(_) => "document",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemorySource {
    Explicit,
    Inferred,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Moment {
    Bedtime,
    Sunset,
    Sunrise,
    Morning,
    Evening,
    Night,
}

impl Moment {
    fn phrase(self) -> &'static str {
        match self {
            Moment::Bedtime => "at bedtime",
            Moment::Sunset => "at sunset",
            Moment::Sunrise => "at sunrise",
            Moment::Morning => "in the morning",
            Moment::Evening => "in the evening",
            Moment::Night => "at night",
        }
    }
}

/// When a preference applies: a clock time or a named moment of the day.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeCondition {
    #[serde(with = "clock12")]
    Clock(NaiveTime),
    Moment(Moment),
}

impl fmt::Display for TimeCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeCondition::Clock(t) => write!(f, "at {}", format_12h(*t)),
            TimeCondition::Moment(m) => f.write_str(m.phrase()),
        }
    }
}

/// "22:00" → "10:00 PM".
pub fn format_12h(t: NaiveTime) -> String {
    let (pm, h) = t.hour12();
    format!("{}:{:02} {}", h, t.minute(), if pm { "PM" } else { "AM" })
}

mod clock12 {
    use chrono::NaiveTime;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &NaiveTime, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_12h(*t))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveTime, D::Error> {
        let s = String::deserialize(d)?;
        NaiveTime::parse_from_str(&s, "%l:%M %p")
            .or_else(|_| NaiveTime::parse_from_str(&s, "%H:%M"))
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub memory_id: String,
    pub summary: String,
    pub target_device: Option<String>,
    /// The device as the user referred to it, e.g. "bedroom lights".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    pub time_condition: Option<TimeCondition>,
    pub recurrence: Option<Recurrence>,
    pub source: MemorySource,
    pub created_at: NaiveDateTime,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utterance: Option<String>,
}

/// The structured fields of a memory, before an id and summary are assigned.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MemoryDraft {
    #[serde(default)]
    pub target_device: Option<String>,
    #[serde(default)]
    pub subject: Option<String>,
    #[serde(default)]
    pub attribute: Option<String>,
    #[serde(default)]
    pub value: Option<String>,
    #[serde(default)]
    pub time_condition: Option<TimeCondition>,
    #[serde(default)]
    pub recurrence: Option<Recurrence>,
    /// Used verbatim when the fields are too sparse for a template.
    #[serde(default)]
    pub note: Option<String>,
}

impl MemoryDraft {
    fn is_structured(&self) -> bool {
        self.subject.is_some() && (self.attribute.is_some() || self.value.is_some())
    }
}

/// Renders the normalized one-sentence summary for a draft.
pub fn render_summary(d: &MemoryDraft) -> Option<String> {
    let mut tail = String::new();
    if let Some(t) = d.time_condition {
        tail.push(' ');
        tail.push_str(&t.to_string());
    }
    match d.recurrence {
        Some(Recurrence::Daily) => tail.push_str(" on a daily basis"),
        Some(Recurrence::Weekdays) => tail.push_str(" on weekdays"),
        Some(Recurrence::Weekends) => tail.push_str(" on weekends"),
        _ => {}
    }
    if !d.is_structured() {
        return d.note.as_deref().map(str::trim).filter(|n| !n.is_empty()).map(|n| {
            let n = n.trim_end_matches('.');
            let mut c = n.chars();
            match c.next() {
                Some(f) => format!("{}{}", f.to_uppercase(), c.as_str()),
                None => String::new(),
            }
        });
    }
    let subject = d.subject.as_deref().unwrap_or_default();
    let attr_noun = d.attribute.as_deref().map(|a| a.replace('_', " "));
    let body = match (attr_noun.as_deref(), d.value.as_deref()) {
        (Some(a), Some(v @ ("lower" | "higher"))) => format!("a {v} {subject} {a}"),
        (Some("power") | None, Some(v @ ("on" | "off"))) => format!("the {subject} to be turned {v}"),
        (Some(a), Some(v @ ("on" | "off"))) => format!("the {subject} {a} to be {v}"),
        (Some("setpoint") | None, Some(v)) => format!("the {subject} set to {v}"),
        (Some(a), Some(v)) => format!("the {subject} {a} set to {v}"),
        (Some(a), None) => format!("to adjust the {subject} {a}"),
        (None, None) => return None,
    };
    Some(format!("The user prefers {body}{tail}"))
}

static MARKER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^\s*(?:please\s+)?(remember\s+that|remember\s+to|remember|note\s+that|keep\s+in\s+mind\s+that|keep\s+in\s+mind|don'?t\s+forget\s+that|don'?t\s+forget|do\s+not\s+forget)\b[\s,:]*")
        .expect("marker regex")
});

static CLOCK: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(?:at|after|by|around|from)?\s*(\d{1,2})(?::(\d{2}))?\s*(a\.?m\.?|p\.?m\.?)(?:\W|$)").expect("clock regex")
});

static CLOCK24: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b([01]?\d|2[0-3]):([0-5]\d)\b").expect("24h regex"));

static IN_THE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\bat\s+(\d{1,2})(?::(\d{2}))?\s+(?:o'clock\s+)?in\s+the\s+(morning|evening|afternoon)").expect("in-the regex")
});

static DEGREES: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)(\d{1,2}(?:\.\d)?)\s*(?:degrees?|°\s*c?|celsius)").expect("degrees regex")
});

static PERCENT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(\d{1,3})\s*(?:%|percent)").expect("percent regex"));

static RECURRENCE: &[(&str, Recurrence)] = &[
    ("on a daily basis", Recurrence::Daily),
    ("every day", Recurrence::Daily),
    ("everyday", Recurrence::Daily),
    ("each day", Recurrence::Daily),
    ("every night", Recurrence::Daily),
    ("every evening", Recurrence::Daily),
    ("every morning", Recurrence::Daily),
    ("nightly", Recurrence::Daily),
    ("daily", Recurrence::Daily),
    ("on weekdays", Recurrence::Weekdays),
    ("every weekday", Recurrence::Weekdays),
    ("weekdays", Recurrence::Weekdays),
    ("on weekends", Recurrence::Weekends),
    ("every weekend", Recurrence::Weekends),
    ("weekends", Recurrence::Weekends),
];

/// Spoken device names, longest first, mapped to catalog ids.
static ALIASES: &[(&str, &str)] = &[
    ("living room lights", "living_room_light"),
    ("living room light", "living_room_light"),
    ("kitchen lights", "kitchen_light"),
    ("kitchen light", "kitchen_light"),
    ("bedroom lights", "bedroom_light"),
    ("bedroom light", "bedroom_light"),
    ("air conditioning", "ac"),
    ("air conditioner", "ac"),
    ("washing machine", "washing_machine"),
    ("coffee maker", "coffee_maker"),
    ("coffee machine", "coffee_maker"),
    ("ceiling fan", "ceiling_fan"),
    ("car charger", "ev_charger"),
    ("ev charger", "ev_charger"),
    ("thermostat", "ac"),
    ("dishwasher", "dishwasher"),
    ("microwave", "microwave"),
    ("kettle", "kettle"),
    ("heater", "heater"),
    ("washer", "washing_machine"),
    ("a/c", "ac"),
    ("ac", "ac"),
    ("car", "ev_charger"),
];

fn find_phrase(haystack: &str, phrase: &str) -> Option<usize> {
    let mut from = 0;
    while let Some(pos) = haystack[from..].find(phrase) {
        let start = from + pos;
        let end = start + phrase.len();
        let before_ok = haystack[..start].chars().next_back().is_none_or(|c| !c.is_alphanumeric());
        let after_ok = haystack[end..].chars().next().is_none_or(|c| !c.is_alphanumeric());
        if before_ok && after_ok {
            return Some(start);
        }
        from = start + 1;
    }
    None
}

/// Matches the first known device mention: (catalog id, the words used).
pub fn match_device(text: &str) -> Option<(String, String)> {
    let lower = text.to_lowercase();
    ALIASES
        .iter()
        .filter_map(|(alias, id)| find_phrase(&lower, alias).map(|pos| (pos, *alias, *id)))
        .min_by_key(|(pos, alias, _)| (*pos, std::cmp::Reverse(alias.len())))
        .map(|(_, alias, id)| {
            let subject = match alias {
                "ac" | "a/c" | "air conditioner" | "air conditioning" | "thermostat" => "AC".to_string(),
                "car" => "car charger".to_string(),
                other => other.to_string(),
            };
            (id.to_string(), subject)
        })
}

fn parse_time(text: &str) -> Option<TimeCondition> {
    if let Some(c) = IN_THE.captures(text) {
        let mut h: u32 = c[1].parse().ok()?;
        let m: u32 = c.get(2).map_or(Some(0), |m| m.as_str().parse().ok())?;
        if c[3].eq_ignore_ascii_case("morning") {
            h %= 12;
        } else if h < 12 {
            h += 12;
        }
        return NaiveTime::from_hms_opt(h, m, 0).map(TimeCondition::Clock);
    }
    if let Some(c) = CLOCK.captures(text) {
        let h: u32 = c[1].parse().ok()?;
        let m: u32 = c.get(2).map_or(Some(0), |m| m.as_str().parse().ok())?;
        if !(1..=12).contains(&h) {
            return None;
        }
        let pm = c[3].to_ascii_lowercase().starts_with('p');
        let h24 = (h % 12) + if pm { 12 } else { 0 };
        return NaiveTime::from_hms_opt(h24, m, 0).map(TimeCondition::Clock);
    }
    if let Some(c) = CLOCK24.captures(text) {
        return NaiveTime::from_hms_opt(c[1].parse().ok()?, c[2].parse().ok()?, 0).map(TimeCondition::Clock);
    }
    let lower = text.to_lowercase();
    let moments = [
        ("bedtime", Moment::Bedtime),
        ("before bed", Moment::Bedtime),
        ("go to bed", Moment::Bedtime),
        ("go to sleep", Moment::Bedtime),
        ("sunset", Moment::Sunset),
        ("sundown", Moment::Sunset),
        ("sunrise", Moment::Sunrise),
        ("morning", Moment::Morning),
        ("evening", Moment::Evening),
        ("night", Moment::Night),
    ];
    moments.iter().find(|(p, _)| lower.contains(p)).map(|(_, m)| TimeCondition::Moment(*m))
}

fn parse_recurrence(lower: &str) -> (Option<Recurrence>, String) {
    for (phrase, r) in RECURRENCE {
        if let Some(pos) = find_phrase(lower, phrase) {
            let mut rest = lower.to_string();
            rest.replace_range(pos..pos + phrase.len(), " ");
            return (Some(*r), rest);
        }
    }
    (None, lower.to_string())
}

/// Rewrites a first-person clause into third person: "I usually like X" → "the user usually likes X".
fn third_person(clause: &str) -> String {
    let words: Vec<&str> = clause.split_whitespace().collect();
    let mut out: Vec<String> = Vec::new();
    let mut conjugate_next = false;
    for w in words {
        let bare = w.trim_matches(|c: char| !c.is_alphanumeric() && c != '\'');
        let punct = &w[w.find(bare).map_or(0, |i| i + bare.len())..];
        let lower = bare.to_lowercase();
        let replaced = match lower.as_str() {
            "i" => {
                conjugate_next = true;
                "the user".to_string()
            }
            "i'm" => "the user is".to_string(),
            "i've" => "the user has".to_string(),
            "i'd" => "the user would".to_string(),
            "my" => "their".to_string(),
            "me" | "myself" => "them".to_string(),
            "mine" => "theirs".to_string(),
            _ if conjugate_next => {
                if ["usually", "always", "often", "never", "sometimes", "generally", "really"].contains(&lower.as_str()) {
                    lower.clone()
                } else {
                    conjugate_next = false;
                    match lower.as_str() {
                        "am" => "is".into(),
                        "have" => "has".into(),
                        "do" => "does".into(),
                        "go" => "goes".into(),
                        "don't" => "doesn't".into(),
                        "was" | "can" | "will" | "would" | "should" | "could" | "might" | "must" => lower.clone(),
                        v if v.ends_with("sh") || v.ends_with("ch") || v.ends_with('x') || v.ends_with('s') => {
                            format!("{v}es")
                        }
                        v if v.ends_with('y') && !v.ends_with("ay") && !v.ends_with("ey") && !v.ends_with("oy") => {
                            format!("{}ies", &v[..v.len() - 1])
                        }
                        v => format!("{v}s"),
                    }
                }
            }
            _ => bare.to_string(),
        };
        out.push(format!("{replaced}{punct}"));
    }
    out.join(" ")
}

/// Extracts structured fields from an utterance with its memory marker removed.
pub fn derive(content: &str) -> MemoryDraft {
    let content = content.trim().trim_end_matches(['.', '!']);
    let (recurrence, rest) = parse_recurrence(&content.to_lowercase());
    let time_condition = parse_time(&rest);
    let device = match_device(&rest);
    let lower = rest;
    let has = |w: &str| find_phrase(&lower, w).is_some();
    let mut attribute = None;
    let mut value = None;
    if let Some((id, _)) = &device {
        let climate = id == "ac" || id == "heater";
        if climate && has("fan") {
            attribute = Some("fan_mode".to_string());
        } else if climate
            && (has("setpoint") || has("temperature") || DEGREES.is_match(&lower) || has("lower") || has("higher") || has("cooler") || has("warmer"))
        {
            attribute = Some("setpoint".to_string());
        } else if has("brightness") || has("dim") || has("brighter") || PERCENT.is_match(&lower) {
            attribute = Some("brightness".to_string());
        } else if id == "ac" && (has("eco") || has("cool mode") || has("heat mode")) {
            attribute = Some("mode".to_string());
        } else {
            attribute = Some("power".to_string());
        }
        value = if let Some(c) = DEGREES.captures(&lower) {
            Some(format!("{} degrees", &c[1]))
        } else if let Some(c) = PERCENT.captures(&lower) {
            Some(format!("{}%", &c[1]))
        } else if has("lower") || has("cooler") || has("colder") || has("reduce") || has("decrease") {
            Some("lower".to_string())
        } else if has("higher") || has("warmer") || has("raise") || has("increase") {
            Some("higher".to_string())
        } else if has("off") || has("turned off") || has("switch off") {
            Some("off".to_string())
        } else if has("on") || has("turned on") || has("switch on") || has("running") {
            Some("on".to_string())
        } else if attribute.as_deref() == Some("mode") {
            ["eco", "cool", "heat"].iter().find(|m| has(m)).map(|m| m.to_string())
        } else {
            None
        };
        if attribute.as_deref() == Some("power") && value.is_none() {
            attribute = None;
        }
    }
    let note = Some(third_person(content)).filter(|n| !n.trim().is_empty());
    MemoryDraft {
        target_device: device.as_ref().map(|(id, _)| id.clone()),
        subject: device.map(|(_, s)| s),
        attribute,
        value,
        time_condition,
        recurrence,
        note,
    }
}

/// Splits off a leading memory marker. Returns the remaining content if one was present.
pub fn strip_marker(utterance: &str) -> Option<&str> {
    MARKER.find(utterance).map(|m| &utterance[m.end()..])
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "by", content = "value", rename_all = "snake_case")]
pub enum MemoryFilter {
    All,
    Device(String),
    Text(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum MemoryEdit {
    /// Replaces the given fields and re-renders the summary, unless `summary` itself is supplied.
    Update {
        #[serde(default)]
        summary: Option<String>,
        #[serde(flatten)]
        fields: MemoryDraft,
    },
    Delete,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MemoryStore {
    entries: IndexMap<String, MemoryEntry>,
    next_id: u64,
}

const STOPWORDS: &[&str] = &[
    "the", "and", "what", "which", "when", "where", "who", "how", "did", "does", "do", "you", "your", "usually", "time",
    "device", "devices", "turn", "set", "for", "with", "about", "that", "this", "have", "are", "was", "any", "there",
];

impl MemoryStore {
    pub fn new() -> Self {
        MemoryStore { entries: IndexMap::new(), next_id: 1 }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&MemoryEntry> {
        self.entries.get(id)
    }

    /// Creates an explicit memory; the utterance must open with a marker like "Remember that".
    pub fn create_from_utterance(&mut self, utterance: &str, now: NaiveDateTime) -> Result<MemoryEntry, MemoryError> {
        if utterance.trim().is_empty() {
            return Err(MemoryError::NoContent(utterance.to_string()));
        }
        let content = strip_marker(utterance).ok_or(MemoryError::NoMarker)?;
        self.insert_derived(utterance, content, MemorySource::Explicit, now)
    }

    /// Creates an inferred memory from any utterance. No caller does this automatically.
    pub fn infer_from_utterance(&mut self, utterance: &str, now: NaiveDateTime) -> Result<MemoryEntry, MemoryError> {
        let content = strip_marker(utterance).unwrap_or(utterance);
        self.insert_derived(utterance, content, MemorySource::Inferred, now)
    }

    fn insert_derived(
        &mut self,
        utterance: &str,
        content: &str,
        source: MemorySource,
        now: NaiveDateTime,
    ) -> Result<MemoryEntry, MemoryError> {
        let draft = derive(content);
        let mut e = self.build(draft, source, now)?;
        e.utterance = Some(utterance.trim().to_string());
        self.entries.insert(e.memory_id.clone(), e.clone());
        Ok(e)
    }

    /// Stores a pre-structured entry, as submitted by a tool call.
    pub fn create_structured(
        &mut self,
        draft: MemoryDraft,
        source: MemorySource,
        now: NaiveDateTime,
    ) -> Result<MemoryEntry, MemoryError> {
        let e = self.build(draft, source, now)?;
        self.entries.insert(e.memory_id.clone(), e.clone());
        Ok(e)
    }

    fn build(&mut self, draft: MemoryDraft, source: MemorySource, now: NaiveDateTime) -> Result<MemoryEntry, MemoryError> {
        let summary = render_summary(&draft)
            .filter(|s| !s.trim().is_empty())
            .ok_or_else(|| MemoryError::NoContent(draft.note.clone().unwrap_or_default()))?;
        let memory_id = format!("mem-{}", self.next_id.max(1));
        self.next_id = self.next_id.max(1) + 1;
        Ok(MemoryEntry {
            memory_id,
            summary,
            target_device: draft.target_device,
            subject: draft.subject,
            attribute: draft.attribute,
            value: draft.value,
            time_condition: draft.time_condition,
            recurrence: draft.recurrence,
            source,
            created_at: now,
            utterance: None,
        })
    }

    pub fn sync(&self, filter: &MemoryFilter) -> Vec<MemoryEntry> {
        self.entries.values().filter(|e| matches_filter(e, filter)).cloned().collect()
    }

    pub fn change(&mut self, id: &str, edit: MemoryEdit) -> Result<Option<MemoryEntry>, MemoryError> {
        match edit {
            MemoryEdit::Delete => self
                .entries
                .shift_remove(id)
                .map(|_| None)
                .ok_or_else(|| MemoryError::UnknownMemory(id.to_string())),
            MemoryEdit::Update { summary, fields } => {
                let e = self.entries.get_mut(id).ok_or_else(|| MemoryError::UnknownMemory(id.to_string()))?;
                let mut draft = MemoryDraft {
                    target_device: fields.target_device.or(e.target_device.clone()),
                    subject: fields.subject.or(e.subject.clone()),
                    attribute: fields.attribute.or(e.attribute.clone()),
                    value: fields.value.or(e.value.clone()),
                    time_condition: fields.time_condition.or(e.time_condition),
                    recurrence: fields.recurrence.or(e.recurrence),
                    note: fields.note.or(Some(e.summary.clone())),
                };
                let rendered = match summary {
                    Some(s) if !s.trim().is_empty() => s,
                    Some(_) => return Err(MemoryError::NoContent(String::new())),
                    None => render_summary(&draft).ok_or_else(|| MemoryError::NoContent(e.summary.clone()))?,
                };
                draft.note = None;
                e.summary = rendered;
                e.target_device = draft.target_device;
                e.subject = draft.subject;
                e.attribute = draft.attribute;
                e.value = draft.value;
                e.time_condition = draft.time_condition;
                e.recurrence = draft.recurrence;
                Ok(Some(e.clone()))
            }
        }
    }

    pub fn to_document(&self) -> Value {
        serde_json::to_value(self.entries.values().collect::<Vec<_>>()).unwrap_or(Value::Array(vec![]))
    }

    pub fn from_document(doc: &Value) -> Result<Self, MemoryError> {
        let entries: Vec<MemoryEntry> =
            serde_json::from_value(doc.clone()).map_err(|e| MemoryError::Document(e.to_string()))?;
        let mut store = MemoryStore::new();
        for e in entries {
            if e.summary.trim().is_empty() {
                return Err(MemoryError::Document(format!("{} has an empty summary", e.memory_id)));
            }
            if let Some(n) = e.memory_id.strip_prefix("mem-").and_then(|n| n.parse::<u64>().ok()) {
                store.next_id = store.next_id.max(n + 1);
            }
            store.entries.insert(e.memory_id.clone(), e);
        }
        Ok(store)
    }

    pub fn save(&self, path: &Path) -> Result<(), MemoryError> {
        save_json_atomic(path, &self.to_document()).map_err(|e| MemoryError::Document(e.to_string()))
    }

    /// Loads a memory document; a missing file is an empty store.
    pub fn load(path: &Path) -> Result<Self, MemoryError> {
        match fs::read_to_string(path) {
            Ok(text) => {
                let doc: Value = serde_json::from_str(&text).map_err(|e| MemoryError::Document(e.to_string()))?;
                MemoryStore::from_document(&doc)
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(MemoryStore::new()),
            Err(e) => Err(MemoryError::Document(e.to_string())),
        }
    }
}

fn matches_filter(e: &MemoryEntry, filter: &MemoryFilter) -> bool {
    match filter {
        MemoryFilter::All => true,
        MemoryFilter::Device(key) => {
            let key_l = key.to_lowercase();
            let by_alias = match_device(key).map(|(id, _)| id);
            e.target_device.as_deref().is_some_and(|d| d == key || Some(d) == by_alias.as_deref())
                || e.subject.as_deref().is_some_and(|s| s.to_lowercase() == key_l)
        }
        MemoryFilter::Text(q) => {
            let hay = format!("{} {}", e.summary, e.utterance.as_deref().unwrap_or("")).to_lowercase();
            let q = q.to_lowercase();
            if hay.contains(q.trim()) {
                return true;
            }
            q.split(|c: char| !c.is_alphanumeric())
                .filter(|w| w.len() >= 3 && !STOPWORDS.contains(w))
                .any(|w| find_phrase(&hay, w).is_some())
        }
    }
}
