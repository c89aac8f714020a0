//! Controllable devices: attribute specs, values and conformance.

use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// What values an attribute accepts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttributeSpec {
    Switch,
    Numeric {
        min: f64,
        max: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        step: Option<f64>,
        unit: String,
    },
    Mode {
        values: Vec<String>,
    },
}

impl AttributeSpec {
    pub fn numeric(min: f64, max: f64, unit: &str) -> Self {
        AttributeSpec::Numeric { min, max, step: None, unit: unit.to_string() }
    }

    pub fn modes(values: &[&str]) -> Self {
        AttributeSpec::Mode { values: values.iter().map(|v| v.to_string()).collect() }
    }

    /// Coerces a loosely typed value ("on", "75", 1) into the canonical value for this spec.
    pub fn coerce(&self, value: &AttributeValue) -> Result<AttributeValue, ValueError> {
        match (self, value) {
            (AttributeSpec::Switch, AttributeValue::Bool(b)) => Ok(AttributeValue::Bool(*b)),
            (AttributeSpec::Switch, AttributeValue::Text(t)) => match t.trim().to_ascii_lowercase().as_str() {
                "on" | "true" | "1" => Ok(AttributeValue::Bool(true)),
                "off" | "false" | "0" => Ok(AttributeValue::Bool(false)),
                _ => Err(ValueError::WrongType),
            },
            (AttributeSpec::Switch, AttributeValue::Number(n)) if *n == 0.0 || *n == 1.0 => {
                Ok(AttributeValue::Bool(*n == 1.0))
            }
            (AttributeSpec::Numeric { min, max, step, .. }, v) => {
                let n = match v {
                    AttributeValue::Number(n) => *n,
                    AttributeValue::Text(t) => t.trim().parse::<f64>().map_err(|_| ValueError::WrongType)?,
                    AttributeValue::Bool(_) => return Err(ValueError::WrongType),
                };
                if !n.is_finite() || n < *min || n > *max {
                    return Err(ValueError::OutOfRange { min: *min, max: *max, value: n });
                }
                if let Some(step) = step {
                    let k = (n - min) / step;
                    if (k - k.round()).abs() > 1e-9 {
                        return Err(ValueError::OffStep { step: *step, value: n });
                    }
                }
                Ok(AttributeValue::Number(n))
            }
            (AttributeSpec::Mode { values }, AttributeValue::Text(t)) => values
                .iter()
                .find(|v| v.eq_ignore_ascii_case(t.trim()))
                .map(|v| AttributeValue::Text(v.clone()))
                .ok_or_else(|| ValueError::UnknownMode { allowed: values.clone(), value: t.clone() }),
            (AttributeSpec::Mode { values }, AttributeValue::Bool(b)) => {
                let want = if *b { "on" } else { "off" };
                values
                    .iter()
                    .find(|v| v.as_str() == want)
                    .map(|v| AttributeValue::Text(v.clone()))
                    .ok_or(ValueError::WrongType)
            }
            _ => Err(ValueError::WrongType),
        }
    }

    /// True iff `value` is already in canonical, conforming form.
    pub fn conforms(&self, value: &AttributeValue) -> bool {
        match self.coerce(value) {
            Ok(canonical) => &canonical == value,
            Err(_) => false,
        }
    }
}

/// An attribute value as it appears in the devices document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttributeValue {
    Bool(bool),
    Number(f64),
    Text(String),
}

impl AttributeValue {
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            AttributeValue::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            AttributeValue::Number(n) => Some(*n),
            _ => None,
        }
    }

    /// Whether this value means "running": true, a nonzero number, or any mode other than "off".
    pub fn is_active(&self) -> bool {
        match self {
            AttributeValue::Bool(b) => *b,
            AttributeValue::Number(n) => *n != 0.0,
            AttributeValue::Text(t) => !t.eq_ignore_ascii_case("off"),
        }
    }
}

impl fmt::Display for AttributeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttributeValue::Bool(true) => f.write_str("on"),
            AttributeValue::Bool(false) => f.write_str("off"),
            AttributeValue::Number(n) => write!(f, "{n}"),
            AttributeValue::Text(t) => f.write_str(t),
        }
    }
}

impl From<bool> for AttributeValue {
    fn from(b: bool) -> Self {
        AttributeValue::Bool(b)
    }
}

impl From<f64> for AttributeValue {
    fn from(n: f64) -> Self {
        AttributeValue::Number(n)
    }
}

impl From<&str> for AttributeValue {
    fn from(t: &str) -> Self {
        AttributeValue::Text(t.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ValueError {
    #[error("value has the wrong type for this attribute")]
    WrongType,
    #[error("value {value} outside range [{min}, {max}]")]
    OutOfRange { min: f64, max: f64, value: f64 },
    #[error("value {value} is not a multiple of step {step}")]
    OffStep { step: f64, value: f64 },
    #[error("mode {value:?} not one of {allowed:?}")]
    UnknownMode { allowed: Vec<String>, value: String },
}

/// A registered device and its current state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceState {
    pub device_id: String,
    pub name: String,
    pub room: String,
    /// Device class, e.g. "light", "thermostat", "ev_charger".
    pub kind: String,
    #[serde(default)]
    pub tags: Vec<String>,
    pub online: bool,
    pub attributes: IndexMap<String, AttributeValue>,
    pub attribute_specs: IndexMap<String, AttributeSpec>,
}

impl DeviceState {
    pub fn new(device_id: &str, name: &str, room: &str, kind: &str) -> Self {
        DeviceState {
            device_id: device_id.to_string(),
            name: name.to_string(),
            room: room.to_string(),
            kind: kind.to_string(),
            tags: Vec::new(),
            online: true,
            attributes: IndexMap::new(),
            attribute_specs: IndexMap::new(),
        }
    }

    pub fn with_attr(mut self, name: &str, spec: AttributeSpec, initial: AttributeValue) -> Self {
        self.attribute_specs.insert(name.to_string(), spec);
        self.attributes.insert(name.to_string(), initial);
        self
    }

    pub fn with_tags(mut self, tags: &[&str]) -> Self {
        self.tags = tags.iter().map(|t| t.to_string()).collect();
        self
    }

    pub fn offline(mut self) -> Self {
        self.online = false;
        self
    }

    /// Names of attributes whose value does not conform to its spec (or has no spec).
    pub fn nonconforming(&self) -> Vec<String> {
        let mut bad: Vec<String> = self
            .attributes
            .iter()
            .filter(|(name, value)| {
                self.attribute_specs.get(*name).is_none_or(|spec| !spec.conforms(value))
            })
            .map(|(name, _)| name.clone())
            .collect();
        bad.extend(
            self.attribute_specs
                .keys()
                .filter(|name| !self.attributes.contains_key(*name))
                .cloned(),
        );
        bad
    }

    pub fn is_conformant(&self) -> bool {
        self.nonconforming().is_empty()
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.iter().any(|t| t.eq_ignore_ascii_case(tag))
    }

    /// The attribute that switches the device on and off, if any.
    pub fn power_attribute(&self) -> Option<&str> {
        ["power", "mode"]
            .into_iter()
            .find(|a| self.attribute_specs.contains_key(*a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn light() -> DeviceState {
        DeviceState::new("living_room_light", "Living Room Light", "living room", "light")
            .with_attr("power", AttributeSpec::Switch, true.into())
            .with_attr("brightness", AttributeSpec::numeric(0.0, 100.0, "%"), 50.0.into())
    }

    #[test]
    fn coercion_rules() {
        let sw = AttributeSpec::Switch;
        assert_eq!(sw.coerce(&"ON".into()).unwrap(), AttributeValue::Bool(true));
        assert_eq!(sw.coerce(&0.0.into()).unwrap(), AttributeValue::Bool(false));
        assert!(sw.coerce(&"dim".into()).is_err());

        let b = AttributeSpec::numeric(0.0, 100.0, "%");
        assert_eq!(b.coerce(&"75".into()).unwrap(), AttributeValue::Number(75.0));
        assert!(matches!(b.coerce(&150.0.into()), Err(ValueError::OutOfRange { .. })));

        let m = AttributeSpec::modes(&["off", "on", "cool", "heat", "fan-only", "eco"]);
        assert_eq!(m.coerce(&"Cool".into()).unwrap(), AttributeValue::Text("cool".into()));
        assert_eq!(m.coerce(&false.into()).unwrap(), AttributeValue::Text("off".into()));
        assert!(m.coerce(&"turbo".into()).is_err());
    }

    #[test]
    fn step_enforced() {
        let spec = AttributeSpec::Numeric { min: 16.0, max: 30.0, step: Some(0.5), unit: "°C".into() };
        assert!(spec.coerce(&21.5.into()).is_ok());
        assert!(matches!(spec.coerce(&21.3.into()), Err(ValueError::OffStep { .. })));
    }

    #[test]
    fn conformance_detects_drift() {
        let mut d = light();
        assert!(d.is_conformant());
        d.attributes.insert("brightness".into(), 101.0.into());
        assert_eq!(d.nonconforming(), vec!["brightness".to_string()]);
        d.attributes.insert("brightness".into(), "75".into());
        assert!(!d.is_conformant(), "non-canonical text value is not conformant");
    }

    #[test]
    fn untagged_values_serialize_plainly() {
        let d = light();
        let json = serde_json::to_value(&d.attributes).unwrap();
        assert_eq!(json, serde_json::json!({"power": true, "brightness": 50.0}));
        let back: IndexMap<String, AttributeValue> = serde_json::from_value(json).unwrap();
        assert_eq!(back, d.attributes);
    }
}
