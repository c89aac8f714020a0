//! Uniform 15-minute multi-channel power history for one building.

use std::fmt;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::units::INTERVAL_MINUTES;

/// What a channel measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelRole {
    Grid,
    Generation,
    EvCharger,
    Appliance,
}

impl ChannelRole {
    /// Roles billed as consumption.
    pub fn is_consumption(self) -> bool {
        matches!(self, ChannelRole::Appliance | ChannelRole::EvCharger)
    }
}

/// End-use tag, used to resolve user terms such as "AC" or "heating".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndUse {
    Cooling,
    Heating,
    WaterHeating,
    Other,
}

/// A building's power history. Timestamps are implied by `start + k × interval`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySeries {
    pub building_id: String,
    /// Local, timezone-naive building time of the first sample.
    pub start: NaiveDateTime,
    pub interval_minutes: u32,
    /// Channel name → power samples in kW.
    pub channels: IndexMap<String, Vec<f64>>,
    pub roles: IndexMap<String, ChannelRole>,
    #[serde(default)]
    pub end_uses: IndexMap<String, EndUse>,
}

impl EnergySeries {
    pub fn new(building_id: impl Into<String>, start: NaiveDateTime) -> Self {
        EnergySeries {
            building_id: building_id.into(),
            start,
            interval_minutes: INTERVAL_MINUTES,
            channels: IndexMap::new(),
            roles: IndexMap::new(),
            end_uses: IndexMap::new(),
        }
    }

    /// Adds a channel; the end use is inferred from the name.
    pub fn with_channel(mut self, name: &str, role: ChannelRole, samples: Vec<f64>) -> Self {
        self.push_channel(name, role, samples);
        self
    }

    pub fn push_channel(&mut self, name: &str, role: ChannelRole, samples: Vec<f64>) {
        self.channels.insert(name.to_string(), samples);
        self.roles.insert(name.to_string(), role);
        self.end_uses.insert(name.to_string(), infer_end_use(name));
    }

    /// Number of samples (length of the first channel).
    pub fn len(&self) -> usize {
        self.channels.values().next().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn interval(&self) -> Duration {
        Duration::minutes(self.interval_minutes as i64)
    }

    pub fn timestamp(&self, index: usize) -> NaiveDateTime {
        self.start + self.interval() * index as i32
    }

    /// Exclusive end of the covered period.
    pub fn end(&self) -> NaiveDateTime {
        self.timestamp(self.len())
    }

    /// Index of the sample starting at `t`, if `t` is on the grid and inside the series.
    pub fn index_of(&self, t: NaiveDateTime) -> Option<usize> {
        let minutes = (t - self.start).num_minutes();
        let step = self.interval_minutes as i64;
        if minutes < 0 || minutes % step != 0 || (t - self.start).num_seconds() % 60 != 0 {
            return None;
        }
        let idx = (minutes / step) as usize;
        (idx < self.len()).then_some(idx)
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels.get(name).map(Vec::as_slice)
    }

    pub fn role(&self, name: &str) -> Option<ChannelRole> {
        self.roles.get(name).copied()
    }

    pub fn end_use(&self, name: &str) -> EndUse {
        self.end_uses.get(name).copied().unwrap_or(EndUse::Other)
    }

    fn channel_with_role(&self, role: ChannelRole) -> Option<&str> {
        self.channels
            .keys()
            .find(|name| self.role(name) == Some(role))
            .map(String::as_str)
    }

    pub fn grid_channel(&self) -> Option<&str> {
        self.channel_with_role(ChannelRole::Grid)
    }

    pub fn generation_channel(&self) -> Option<&str> {
        self.channel_with_role(ChannelRole::Generation)
    }

    pub fn ev_channel(&self) -> Option<&str> {
        self.channel_with_role(ChannelRole::EvCharger)
    }

    /// Appliance and EV channels, in declaration order.
    pub fn consumption_channels(&self) -> impl Iterator<Item = &str> {
        self.channels
            .keys()
            .filter(|name| self.role(name).is_some_and(ChannelRole::is_consumption))
            .map(String::as_str)
    }

    /// Distinct calendar days covered, in order.
    pub fn days(&self) -> Vec<NaiveDate> {
        let mut days: Vec<NaiveDate> = Vec::new();
        for i in 0..self.len() {
            let d = self.timestamp(i).date();
            if days.last() != Some(&d) {
                days.push(d);
            }
        }
        days
    }
}

/// Infers an end-use tag from a channel name.
pub fn infer_end_use(name: &str) -> EndUse {
    let lower = name.to_ascii_lowercase();
    let compact: String = lower.chars().filter(|c| c.is_ascii_alphanumeric()).collect();
    if compact.contains("waterheater") {
        return EndUse::WaterHeating;
    }
    let words: Vec<&str> = lower
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty())
        .collect();
    let has = |prefix: &str| words.iter().any(|w| w.trim_end_matches(char::is_numeric) == prefix);
    if has("furnace") || has("heater") || has("heating") || has("heatpump") {
        EndUse::Heating
    } else if has("air") || has("ac") || has("cooling") || has("airconditioner") {
        EndUse::Cooling
    } else {
        EndUse::Other
    }
}

/// Kind of invariant violation found by [`validate_series`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    EmptySeries,
    LengthMismatch,
    NegativeNonGrid,
    NonFinite,
    MissingRole,
    MissingGrid,
    MultipleGrid,
    MultipleGeneration,
    BadInterval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub channel: Option<String>,
    pub index: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)?;
        if let Some(ch) = &self.channel {
            write!(f, " (channel {ch:?}")?;
            if let Some(i) = self.index {
                write!(f, ", sample {i}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Every invariant violation of a series. Empty means valid.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    fn push(&mut self, kind: ViolationKind, channel: Option<&str>, index: Option<usize>, message: &str) {
        self.violations.push(Violation {
            kind,
            channel: channel.map(str::to_string),
            index,
            message: message.to_string(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every series invariant and reports each violation with its channel and index.
pub fn validate_series(series: &EnergySeries) -> ValidationReport {
    let mut report = ValidationReport::default();
    if series.interval_minutes != INTERVAL_MINUTES {
        report.push(ViolationKind::BadInterval, None, None, "interval must be 15 minutes");
    }
    let expected_len = series.len();
    if series.channels.is_empty() || expected_len == 0 {
        report.push(ViolationKind::EmptySeries, None, None, "series has no samples");
    }
    let mut grids = 0;
    let mut generators = 0;
    for (name, samples) in &series.channels {
        if samples.len() != expected_len {
            report.push(ViolationKind::LengthMismatch, Some(name), None, "length mismatch");
        }
        let role = match series.role(name) {
            Some(role) => role,
            None => {
                report.push(ViolationKind::MissingRole, Some(name), None, "channel has no role");
                continue;
            }
        };
        match role {
            ChannelRole::Grid => grids += 1,
            ChannelRole::Generation => generators += 1,
            _ => {}
        }
        for (i, &v) in samples.iter().enumerate() {
            if !v.is_finite() {
                report.push(ViolationKind::NonFinite, Some(name), Some(i), "non-finite sample");
            } else if v < 0.0 && role != ChannelRole::Grid {
                report.push(ViolationKind::NegativeNonGrid, Some(name), Some(i), "negative non-grid sample");
            }
        }
    }
    match grids {
        0 => report.push(ViolationKind::MissingGrid, None, None, "no grid channel"),
        1 => {}
        _ => report.push(ViolationKind::MultipleGrid, None, None, "more than one grid channel"),
    }
    if generators > 1 {
        report.push(ViolationKind::MultipleGeneration, None, None, "more than one generation channel");
    }
    report
}
