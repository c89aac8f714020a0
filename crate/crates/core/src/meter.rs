//! Live meter readings and the smart-meters JSON document.

use chrono::NaiveDateTime;
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MeterStatus {
    Available,
    Unavailable,
}

/// One meter reading. `value` is absent when the meter is unavailable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeterSnapshot {
    pub meter_id: String,
    pub name: String,
    pub description: String,
    pub status: MeterStatus,
    pub online: bool,
    pub unit: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub observed_at: NaiveDateTime,
}

impl MeterSnapshot {
    pub fn available(name: &str, description: &str, kw: f64, observed_at: NaiveDateTime) -> Self {
        MeterSnapshot {
            meter_id: name.to_string(),
            name: name.to_string(),
            description: description.to_string(),
            status: MeterStatus::Available,
            online: true,
            unit: "kW".to_string(),
            value: Some(kw),
            observed_at,
        }
    }

    pub fn unavailable(name: &str, description: &str, observed_at: NaiveDateTime) -> Self {
        MeterSnapshot {
            meter_id: name.to_string(),
            name: name.to_string(),
            description: description.to_string(),
            status: MeterStatus::Unavailable,
            online: false,
            unit: "kW".to_string(),
            value: None,
            observed_at,
        }
    }

    /// The document entry for this meter, in the field order of the meters file.
    pub fn to_entry(&self) -> Value {
        let mut m = Map::new();
        m.insert("name".into(), Value::from(self.name.clone()));
        m.insert("description".into(), Value::from(self.description.clone()));
        m.insert("status".into(), serde_json::to_value(self.status).unwrap_or(Value::Null));
        m.insert("online".into(), Value::from(self.online));
        m.insert("unit".into(), Value::from(self.unit.clone()));
        if let (MeterStatus::Available, Some(v)) = (self.status, self.value) {
            m.insert("value".into(), Value::from(v));
        }
        Value::Object(m)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MeterError {
    #[error("meters document is not a JSON object")]
    NotAnObject,
    #[error("meter {meter:?}: missing required field {field:?}")]
    MissingField { meter: String, field: &'static str },
    #[error("meter {meter:?}: field {field:?} has the wrong type")]
    BadField { meter: String, field: &'static str },
    #[error("meter {meter:?}: unit mismatch, expected \"kW\" but found {unit:?}")]
    UnitMismatch { meter: String, unit: String },
    #[error("meter {meter:?}: non-finite value")]
    NonFinite { meter: String },
    #[error("invalid JSON: {0}")]
    Json(String),
}

fn field<'a>(meter: &str, entry: &'a Map<String, Value>, name: &'static str) -> Result<&'a Value, MeterError> {
    entry.get(name).ok_or_else(|| MeterError::MissingField { meter: meter.to_string(), field: name })
}

fn text(meter: &str, entry: &Map<String, Value>, name: &'static str) -> Result<String, MeterError> {
    field(meter, entry, name)?
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| MeterError::BadField { meter: meter.to_string(), field: name })
}

/// Parses a meters document: a JSON object keyed by meter name. A wrapper of the form
/// `{"meters": {...}}` is also accepted. Unknown extra fields are ignored.
pub fn load_meters(document: &Value, observed_at: NaiveDateTime) -> Result<Vec<MeterSnapshot>, MeterError> {
    let root = document.as_object().ok_or(MeterError::NotAnObject)?;
    let entries = match root.get("meters") {
        Some(Value::Object(inner)) => inner,
        _ => root,
    };
    let mut out = Vec::with_capacity(entries.len());
    for (key, entry) in entries {
        let entry = entry
            .as_object()
            .ok_or_else(|| MeterError::BadField { meter: key.clone(), field: "entry" })?;
        let name = text(key, entry, "name")?;
        let description = text(key, entry, "description")?;
        let status: MeterStatus = serde_json::from_value(field(key, entry, "status")?.clone())
            .map_err(|_| MeterError::BadField { meter: key.clone(), field: "status" })?;
        let online = field(key, entry, "online")?
            .as_bool()
            .ok_or_else(|| MeterError::BadField { meter: key.clone(), field: "online" })?;
        let unit = text(key, entry, "unit")?;
        if unit != "kW" {
            return Err(MeterError::UnitMismatch { meter: key.clone(), unit });
        }
        let value = match (status, entry.get("value")) {
            (MeterStatus::Unavailable, _) => None,
            (MeterStatus::Available, None) => {
                return Err(MeterError::MissingField { meter: key.clone(), field: "value" })
            }
            (MeterStatus::Available, Some(v)) => {
                let v = v
                    .as_f64()
                    .ok_or_else(|| MeterError::BadField { meter: key.clone(), field: "value" })?;
                if !v.is_finite() {
                    return Err(MeterError::NonFinite { meter: key.clone() });
                }
                Some(v)
            }
        };
        out.push(MeterSnapshot {
            meter_id: key.clone(),
            name,
            description,
            status,
            online,
            unit,
            value,
            observed_at,
        });
    }
    Ok(out)
}

pub fn load_meters_str(text: &str, observed_at: NaiveDateTime) -> Result<Vec<MeterSnapshot>, MeterError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| MeterError::Json(e.to_string()))?;
    load_meters(&doc, observed_at)
}

/// Renders snapshots back into the meters document shape.
pub fn meters_document<'a>(meters: impl IntoIterator<Item = &'a MeterSnapshot>) -> Value {
    let map: IndexMap<String, Value> =
        meters.into_iter().map(|m| (m.meter_id.clone(), m.to_entry())).collect();
    serde_json::to_value(map).unwrap_or(Value::Null)
}

/// The stock description used for generated meter entries.
pub fn egauge_description(name: &str) -> String {
    format!("eGauge meter data present for power draw of the {}.", name.to_lowercase())
}
