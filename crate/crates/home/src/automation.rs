//! Time and condition schedules driven by the simulated clock.

use std::collections::BTreeMap;
use std::fmt;

use bems_core::rates::clock_time;
use bems_core::{AttributeSpec, AttributeValue};
use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, NaiveTime, Weekday};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::home::{CommandSource, HomeCore, HomeState};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum AutomationError {
    #[error("unknown device {0:?}")]
    UnknownDevice(String),
    #[error("device {device_id} has no attribute {attribute:?}")]
    UnknownAttribute { device_id: String, attribute: String },
    #[error("malformed trigger: {0}")]
    MalformedTrigger(String),
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("unknown schedule {0:?}")]
    UnknownSchedule(String),
    #[error("clock moved backwards from {prev} to {now}")]
    ClockRegression { prev: NaiveDateTime, now: NaiveDateTime },
}

impl AutomationError {
    pub fn code(&self) -> &'static str {
        match self {
            AutomationError::UnknownDevice(_) => "unknown_device",
            AutomationError::UnknownAttribute { .. } => "invalid_attribute",
            AutomationError::MalformedTrigger(_) => "malformed_trigger",
            AutomationError::InvalidValue(_) => "value_out_of_range",
            AutomationError::UnknownSchedule(_) => "unknown_schedule",
            AutomationError::ClockRegression { .. } => "clock_regression",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recurrence {
    Once,
    Daily,
    Weekdays,
    Weekends,
}

impl Recurrence {
    pub fn allows(self, date: NaiveDate) -> bool {
        let weekend = matches!(date.weekday(), Weekday::Sat | Weekday::Sun);
        match self {
            Recurrence::Once | Recurrence::Daily => true,
            Recurrence::Weekdays => !weekend,
            Recurrence::Weekends => weekend,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompareOp {
    Eq,
    Ne,
    Gt,
    Ge,
    Lt,
    Le,
}

impl CompareOp {
    fn ordered(self) -> bool {
        matches!(self, CompareOp::Gt | CompareOp::Ge | CompareOp::Lt | CompareOp::Le)
    }

    pub fn eval(self, lhs: &AttributeValue, rhs: &AttributeValue) -> bool {
        match self {
            CompareOp::Eq => lhs == rhs,
            CompareOp::Ne => lhs != rhs,
            _ => match (lhs.as_f64(), rhs.as_f64()) {
                (Some(a), Some(b)) => match self {
                    CompareOp::Gt => a > b,
                    CompareOp::Ge => a >= b,
                    CompareOp::Lt => a < b,
                    _ => a <= b,
                },
                _ => false,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Trigger {
    Time {
        #[serde(with = "hhmm")]
        at: NaiveTime,
        recurrence: Recurrence,
    },
    /// Fires when the predicate over another device's attribute turns from false to true.
    Condition { device_id: String, attribute: String, op: CompareOp, value: AttributeValue },
}

impl Trigger {
    pub fn daily(at: NaiveTime) -> Self {
        Trigger::Time { at, recurrence: Recurrence::Daily }
    }

    pub fn when(device_id: &str, attribute: &str, op: CompareOp, value: AttributeValue) -> Self {
        Trigger::Condition { device_id: device_id.into(), attribute: attribute.into(), op, value }
    }
}

impl fmt::Display for Trigger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Trigger::Time { at, recurrence } => write!(f, "{} {:?}", at.format("%H:%M"), recurrence),
            Trigger::Condition { device_id, attribute, op, value } => {
                write!(f, "when {device_id}.{attribute} {op:?} {value}")
            }
        }
    }
}

mod hhmm {
    use chrono::NaiveTime;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &NaiveTime, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&t.format("%H:%M").to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveTime, D::Error> {
        let s = String::deserialize(d)?;
        NaiveTime::parse_from_str(&s, "%H:%M")
            .or_else(|_| NaiveTime::parse_from_str(&s, "%H:%M:%S"))
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub schedule_id: String,
    pub device_id: String,
    pub attribute: String,
    pub value: AttributeValue,
    pub trigger: Trigger,
    pub enabled: bool,
    pub created_at: NaiveDateTime,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_fired: Option<NaiveDateTime>,
}

/// A schedule as submitted for creation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewSchedule {
    pub device_id: String,
    pub attribute: String,
    pub value: AttributeValue,
    pub trigger: Trigger,
    #[serde(default)]
    pub label: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum ScheduleEdit {
    Modify {
        #[serde(default)]
        trigger: Option<Trigger>,
        #[serde(default)]
        attribute: Option<String>,
        #[serde(default)]
        value: Option<AttributeValue>,
    },
    Disable,
    Enable,
    Delete,
}

/// The record of one schedule firing and the command it issued.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiredAction {
    pub schedule_id: String,
    pub instant: NaiveDateTime,
    pub device_id: String,
    pub attribute: String,
    pub value: AttributeValue,
    /// Number of scheduled instants merged into this firing (1 unless the clock jumped).
    pub coalesced: u32,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Two daily schedules that switch a device on at `start` and off at `end` (minutes of day).
pub fn span_schedules(
    device_id: &str,
    attribute: &str,
    on: AttributeValue,
    off: AttributeValue,
    start: u16,
    end: u16,
    label: &str,
) -> [NewSchedule; 2] {
    let mk = |value, minute, what: &str| NewSchedule {
        device_id: device_id.to_string(),
        attribute: attribute.to_string(),
        value,
        trigger: Trigger::daily(clock_time(minute % 1440)),
        label: Some(format!("{label} ({what})")),
    };
    [mk(on, start, "start"), mk(off, end, "end")]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scheduler {
    entries: IndexMap<String, ScheduleEntry>,
    next_id: u64,
    last_tick: NaiveDateTime,
    /// Last observed predicate value per condition entry. Absent means false.
    edges: BTreeMap<String, bool>,
}

impl Scheduler {
    pub fn new(start: NaiveDateTime) -> Self {
        Scheduler { entries: IndexMap::new(), next_id: 1, last_tick: start, edges: BTreeMap::new() }
    }

    /// Rebuilds a scheduler from persisted entries; ids continue after the largest seen.
    pub fn from_entries(start: NaiveDateTime, entries: Vec<ScheduleEntry>) -> Self {
        let mut s = Scheduler::new(start);
        for e in entries {
            if let Some(n) = e.schedule_id.strip_prefix("sch-").and_then(|n| n.parse::<u64>().ok()) {
                s.next_id = s.next_id.max(n + 1);
            }
            s.entries.insert(e.schedule_id.clone(), e);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn last_tick(&self) -> NaiveDateTime {
        self.last_tick
    }

    pub fn get(&self, id: &str) -> Option<&ScheduleEntry> {
        self.entries.get(id)
    }

    pub fn create(&mut self, state: &HomeState, new: NewSchedule) -> Result<ScheduleEntry, AutomationError> {
        let (device_id, value) = validate_target(state, &new.device_id, &new.attribute, &new.value)?;
        let trigger = validate_trigger(state, new.trigger)?;
        let schedule_id = format!("sch-{}", self.next_id);
        self.next_id += 1;
        let entry = ScheduleEntry {
            schedule_id: schedule_id.clone(),
            device_id,
            attribute: new.attribute,
            value,
            trigger,
            enabled: true,
            created_at: state.sim_clock,
            label: new.label,
            last_fired: None,
        };
        self.entries.insert(schedule_id, entry.clone());
        Ok(entry)
    }

    /// Entries in creation order, optionally only those acting on `device_id`.
    pub fn sync(&self, device_id: Option<&str>) -> Vec<ScheduleEntry> {
        self.entries
            .values()
            .filter(|e| device_id.is_none_or(|d| e.device_id == d))
            .cloned()
            .collect()
    }

    /// Applies an edit. Returns the updated entry, or `None` after a deletion.
    pub fn change(
        &mut self,
        state: &HomeState,
        id: &str,
        edit: ScheduleEdit,
    ) -> Result<Option<ScheduleEntry>, AutomationError> {
        let current = self.entries.get(id).ok_or_else(|| AutomationError::UnknownSchedule(id.to_string()))?.clone();
        let updated = match edit {
            ScheduleEdit::Delete => {
                self.entries.shift_remove(id);
                self.edges.remove(id);
                return Ok(None);
            }
            ScheduleEdit::Disable => ScheduleEntry { enabled: false, ..current },
            ScheduleEdit::Enable => {
                self.edges.remove(id);
                ScheduleEntry { enabled: true, ..current }
            }
            ScheduleEdit::Modify { trigger, attribute, value } => {
                let attribute = attribute.unwrap_or(current.attribute.clone());
                let value = value.unwrap_or(current.value.clone());
                let (_, value) = validate_target(state, &current.device_id, &attribute, &value)?;
                let trigger = match trigger {
                    Some(t) => {
                        self.edges.remove(id);
                        validate_trigger(state, t)?
                    }
                    None => current.trigger.clone(),
                };
                ScheduleEntry { attribute, value, trigger, ..current }
            }
        };
        self.entries.insert(id.to_string(), updated.clone());
        Ok(Some(updated))
    }

    /// The first instant after `from` at which a time entry would fire.
    pub fn next_fire(&self, id: &str, from: NaiveDateTime) -> Option<NaiveDateTime> {
        let e = self.entries.get(id)?;
        if !e.enabled {
            return None;
        }
        let Trigger::Time { at, recurrence } = e.trigger else {
            return None;
        };
        let from = e.last_fired.map_or(from, |l| l.max(from));
        match recurrence {
            Recurrence::Once => Some(once_instant(e.created_at, at)).filter(|t| *t > from),
            _ => (0..=7)
                .map(|k| (from.date() + Duration::days(k)).and_time(at))
                .find(|t| *t > from && recurrence.allows(t.date())),
        }
    }

    /// Advances to `now`: fires time entries due in (last tick, now], then condition
    /// entries whose predicate has just become true.
    pub fn tick(&mut self, now: NaiveDateTime, core: &mut HomeCore) -> Result<Vec<FiredAction>, AutomationError> {
        let prev = self.last_tick;
        if now < prev {
            return Err(AutomationError::ClockRegression { prev, now });
        }
        let mut due: Vec<(NaiveDateTime, usize, String, u32)> = Vec::new();
        for (order, e) in self.entries.values().enumerate() {
            if !e.enabled {
                continue;
            }
            let Trigger::Time { at, recurrence } = e.trigger else { continue };
            let floor = e.last_fired.map_or(prev, |l| l.max(prev));
            if let Some((instant, count)) = due_instant(at, recurrence, e.created_at, floor, now) {
                due.push((instant, order, e.schedule_id.clone(), count));
            }
        }
        due.sort();
        let mut fired = Vec::new();
        for (instant, _, id, count) in due {
            let e = &mut self.entries[&id];
            e.last_fired = Some(instant);
            if matches!(e.trigger, Trigger::Time { recurrence: Recurrence::Once, .. }) {
                e.enabled = false;
            }
            let e = e.clone();
            core.state.sim_clock = instant;
            fired.push(run(core, &e, instant, count));
        }
        core.state.sim_clock = now;
        let conditions: Vec<ScheduleEntry> = self
            .entries
            .values()
            .filter(|e| e.enabled && matches!(e.trigger, Trigger::Condition { .. }))
            .cloned()
            .collect();
        for e in conditions {
            let Trigger::Condition { device_id, attribute, op, value } = &e.trigger else { continue };
            let holds = core
                .state
                .devices
                .get(device_id)
                .and_then(|d| d.attributes.get(attribute))
                .is_some_and(|v| op.eval(v, value));
            let was = self.edges.insert(e.schedule_id.clone(), holds).unwrap_or(false);
            if holds && !was {
                self.entries[&e.schedule_id].last_fired = Some(now);
                fired.push(run(core, &e, now, 1));
            }
        }
        self.last_tick = now;
        Ok(fired)
    }
}

fn run(core: &mut HomeCore, e: &ScheduleEntry, instant: NaiveDateTime, coalesced: u32) -> FiredAction {
    let source = CommandSource::Schedule { schedule_id: e.schedule_id.clone() };
    let r = core.execute(&e.device_id, &e.attribute, &e.value, source);
    FiredAction {
        schedule_id: e.schedule_id.clone(),
        instant,
        device_id: e.device_id.clone(),
        attribute: e.attribute.clone(),
        value: e.value.clone(),
        coalesced,
        ok: r.is_ok(),
        error: r.err().map(|err| err.to_string()),
    }
}

fn once_instant(created_at: NaiveDateTime, at: NaiveTime) -> NaiveDateTime {
    let same_day = created_at.date().and_time(at);
    if same_day > created_at {
        same_day
    } else {
        same_day + Duration::days(1)
    }
}

/// Latest scheduled instant in (floor, now] and how many instants the window held.
fn due_instant(
    at: NaiveTime,
    recurrence: Recurrence,
    created_at: NaiveDateTime,
    floor: NaiveDateTime,
    now: NaiveDateTime,
) -> Option<(NaiveDateTime, u32)> {
    if recurrence == Recurrence::Once {
        let t = once_instant(created_at, at);
        return (t > floor && t <= now).then_some((t, 1));
    }
    let mut latest = None;
    let mut count = 0u32;
    let mut day = floor.date();
    while day <= now.date() {
        let t = day.and_time(at);
        if t > floor && t <= now && recurrence.allows(day) {
            latest = Some(t);
            count += 1;
        }
        day = day.succ_opt()?;
    }
    latest.map(|t| (t, count))
}

fn validate_target(
    state: &HomeState,
    key: &str,
    attribute: &str,
    value: &AttributeValue,
) -> Result<(String, AttributeValue), AutomationError> {
    let d = state.resolve_device(key).ok_or_else(|| AutomationError::UnknownDevice(key.to_string()))?;
    let spec = d.attribute_specs.get(attribute).ok_or_else(|| AutomationError::UnknownAttribute {
        device_id: d.device_id.clone(),
        attribute: attribute.to_string(),
    })?;
    let v = spec.coerce(value).map_err(|e| AutomationError::InvalidValue(e.to_string()))?;
    Ok((d.device_id.clone(), v))
}

fn validate_trigger(state: &HomeState, trigger: Trigger) -> Result<Trigger, AutomationError> {
    match trigger {
        Trigger::Time { .. } => Ok(trigger),
        Trigger::Condition { device_id, attribute, op, value } => {
            let (device_id, value) = validate_target(state, &device_id, &attribute, &value)
                .map_err(|e| AutomationError::MalformedTrigger(e.to_string()))?;
            let spec = &state.devices[&device_id].attribute_specs[&attribute];
            if op.ordered() && !matches!(spec, AttributeSpec::Numeric { .. }) {
                return Err(AutomationError::MalformedTrigger(format!(
                    "{op:?} needs a numeric attribute, {device_id}.{attribute} is not"
                )));
            }
            Ok(Trigger::Condition { device_id, attribute, op, value })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::device_template;

    fn t(d: u32, h: u32, m: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2018, 1, d).unwrap().and_hms_opt(h, m, 0).unwrap()
    }

    fn core() -> HomeCore {
        let mut s = HomeState::empty("test", t(1, 0, 0));
        for name in ["Coffee Maker", "Dishwasher", "Kitchen Light", "EV Charger", "AC", "Kettle"] {
            let d = device_template(name).unwrap();
            s.devices.insert(d.device_id.clone(), d);
        }
        HomeCore::new(s)
    }

    fn coffee(at: NaiveTime) -> NewSchedule {
        NewSchedule {
            device_id: "Coffee Maker".into(),
            attribute: "power".into(),
            value: "on".into(),
            trigger: Trigger::daily(at),
            label: None,
        }
    }

    fn hm(h: u32, m: u32) -> NaiveTime {
        NaiveTime::from_hms_opt(h, m, 0).unwrap()
    }

    #[test]
    fn create_validates_against_inventory() {
        let c = core();
        let mut s = Scheduler::new(t(1, 0, 0));
        let e = s.create(&c.state, coffee(hm(7, 0))).unwrap();
        assert_eq!(e.schedule_id, "sch-1");
        assert_eq!(e.device_id, "coffee_maker");
        assert_eq!(e.value, AttributeValue::Bool(true));
        let mut tv = coffee(hm(7, 0));
        tv.device_id = "TV".into();
        assert_eq!(s.create(&c.state, tv), Err(AutomationError::UnknownDevice("TV".into())));
        let mut bad = coffee(hm(7, 0));
        bad.attribute = "volume".into();
        assert!(matches!(s.create(&c.state, bad), Err(AutomationError::UnknownAttribute { .. })));
        let ordered_on_switch = NewSchedule {
            trigger: Trigger::when("dishwasher", "power", CompareOp::Gt, true.into()),
            ..coffee(hm(7, 0))
        };
        assert!(matches!(s.create(&c.state, ordered_on_switch), Err(AutomationError::MalformedTrigger(_))));
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn modify_moves_next_fire() {
        let c = core();
        let mut s = Scheduler::new(t(1, 0, 0));
        let id = s.create(&c.state, coffee(hm(7, 0))).unwrap().schedule_id;
        assert_eq!(s.next_fire(&id, t(1, 0, 0)), Some(t(1, 7, 0)));
        let edit = ScheduleEdit::Modify { trigger: Some(Trigger::daily(hm(6, 30))), attribute: None, value: None };
        s.change(&c.state, &id, edit).unwrap();
        assert_eq!(s.next_fire(&id, t(1, 0, 0)), Some(t(1, 6, 30)));
        assert_eq!(s.next_fire(&id, t(1, 6, 30)), Some(t(2, 6, 30)));
    }

    #[test]
    fn weekday_recurrence() {
        // 2018-01-06 is a Saturday.
        assert!(!Recurrence::Weekdays.allows(NaiveDate::from_ymd_opt(2018, 1, 6).unwrap()));
        assert!(Recurrence::Weekends.allows(NaiveDate::from_ymd_opt(2018, 1, 7).unwrap()));
        assert!(Recurrence::Weekdays.allows(NaiveDate::from_ymd_opt(2018, 1, 8).unwrap()));
    }

    #[test]
    fn clock_cannot_go_back() {
        let mut c = core();
        let mut s = Scheduler::new(t(2, 0, 0));
        assert!(matches!(s.tick(t(1, 0, 0), &mut c), Err(AutomationError::ClockRegression { .. })));
    }

    #[test]
    fn once_fires_once_then_disables() {
        let mut c = core();
        let mut s = Scheduler::new(t(1, 0, 0));
        let mut new = coffee(hm(7, 0));
        new.trigger = Trigger::Time { at: hm(7, 0), recurrence: Recurrence::Once };
        let id = s.create(&c.state, new).unwrap().schedule_id;
        assert_eq!(s.tick(t(3, 0, 0), &mut c).unwrap().len(), 1);
        assert!(!s.get(&id).unwrap().enabled);
        assert!(s.tick(t(5, 0, 0), &mut c).unwrap().is_empty());
    }

    #[test]
    fn span_covers_off_peak() {
        let [on, off] = span_schedules("ev_charger", "power", true.into(), false.into(), 1200, 1020, "off-peak");
        assert_eq!(on.trigger, Trigger::daily(hm(20, 0)));
        assert_eq!(off.trigger, Trigger::daily(hm(17, 0)));
    }

    #[test]
    fn trigger_json_shape() {
        let v = serde_json::to_value(Trigger::daily(hm(7, 0))).unwrap();
        assert_eq!(v, serde_json::json!({"type": "time", "at": "07:00", "recurrence": "daily"}));
        let back: Trigger = serde_json::from_value(v).unwrap();
        assert_eq!(back, Trigger::daily(hm(7, 0)));
    }
}
