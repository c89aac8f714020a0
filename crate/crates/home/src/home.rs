//! The simulated home: meter readings, device inventory and the command path.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use bems_core::meter::{egauge_description, meters_document};
use bems_core::{AttributeValue, BuildingProfile, DeviceState, EnergySeries, MeterSnapshot, ValueError};
use chrono::{Duration, NaiveDateTime, Timelike};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::automation::{AutomationError, FiredAction, NewSchedule, ScheduleEdit, ScheduleEntry, Scheduler};
use crate::catalog::device_template;

/// Reading forced onto the Dishwasher meter in frozen snapshots, in kW.
pub const DISHWASHER_SNAPSHOT_KW: f64 = 1.8;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum HomeError {
    #[error("unknown meter {0:?}")]
    UnknownMeter(String),
    #[error("unknown device {0:?}")]
    UnknownDevice(String),
    #[error("device {0} is offline")]
    OfflineDevice(String),
    #[error("device {device_id} has no attribute {attribute:?}")]
    InvalidAttribute { device_id: String, attribute: String },
    #[error("invalid value for {device_id}.{attribute}: {reason}")]
    ValueOutOfRange { device_id: String, attribute: String, reason: ValueError },
    #[error("devices document: {0}")]
    Document(String),
    #[error("io: {0}")]
    Io(String),
}

impl HomeError {
    /// Short machine-readable code, used in tool results and the HTTP API.
    pub fn code(&self) -> &'static str {
        match self {
            HomeError::UnknownMeter(_) => "unknown_meter",
            HomeError::UnknownDevice(_) => "unknown_device",
            HomeError::OfflineDevice(_) => "offline_device",
            HomeError::InvalidAttribute { .. } => "invalid_attribute",
            HomeError::ValueOutOfRange { .. } => "value_out_of_range",
            HomeError::Document(_) => "document",
            HomeError::Io(_) => "io",
        }
    }
}

/// Who issued a command.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CommandSource {
    Agent,
    User,
    Api,
    Schedule { schedule_id: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Applied,
    Rejected { code: String, reason: String },
}

/// One attempted command. Rejected attempts are recorded too.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub seq: u64,
    pub at: NaiveDateTime,
    pub device_id: String,
    pub attribute: String,
    pub previous: Option<AttributeValue>,
    pub requested: AttributeValue,
    pub applied: Option<AttributeValue>,
    pub outcome: Outcome,
    pub source: CommandSource,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomeState {
    pub building_id: String,
    pub meters: IndexMap<String, MeterSnapshot>,
    pub devices: IndexMap<String, DeviceState>,
    pub sim_clock: NaiveDateTime,
}

impl HomeState {
    pub fn empty(building_id: &str, sim_clock: NaiveDateTime) -> Self {
        HomeState { building_id: building_id.to_string(), meters: IndexMap::new(), devices: IndexMap::new(), sim_clock }
    }

    /// Devices from the catalog for every profile device, and meters frozen from the
    /// series at 19:00 on its last day.
    pub fn from_profile(profile: &BuildingProfile, series: &EnergySeries) -> Self {
        let at = frozen_instant(series);
        let mut meters = meters_at(series, at);
        if let Some(m) = meters.get_mut("Dishwasher") {
            m.value = Some(DISHWASHER_SNAPSHOT_KW);
        }
        let devices = profile
            .devices
            .iter()
            .filter_map(|name| device_template(name))
            .map(|d| (d.device_id.clone(), d))
            .collect();
        HomeState { building_id: profile.building_id.clone(), meters, devices, sim_clock: at }
    }

    /// Finds a device by id or, case-insensitively, by display name.
    pub fn resolve_device(&self, key: &str) -> Option<&DeviceState> {
        self.devices.get(key).or_else(|| {
            let k = key.trim();
            self.devices
                .values()
                .find(|d| d.name.eq_ignore_ascii_case(k) || d.device_id.eq_ignore_ascii_case(k))
        })
    }

    pub fn resolve_meter(&self, key: &str) -> Option<&MeterSnapshot> {
        self.meters.get(key).or_else(|| self.meters.values().find(|m| m.name.eq_ignore_ascii_case(key.trim())))
    }
}

/// 19:00 on the last day of the series, clamped to the series end.
pub fn frozen_instant(series: &EnergySeries) -> NaiveDateTime {
    let last = series.end() - series.interval();
    let evening = last.date().and_hms_opt(19, 0, 0).unwrap_or(last);
    evening.min(last).max(series.start)
}

/// Meter readings derived from the series sample covering `t`.
pub fn meters_at(series: &EnergySeries, t: NaiveDateTime) -> IndexMap<String, MeterSnapshot> {
    let index = if series.is_empty() {
        None
    } else {
        let floored = t - Duration::minutes((t.minute() % series.interval_minutes.max(1)) as i64)
            - Duration::seconds(t.second() as i64);
        series.index_of(floored)
    };
    series
        .channels
        .iter()
        .map(|(name, samples)| {
            let desc = egauge_description(name);
            let snap = match index.and_then(|i| samples.get(i)) {
                Some(v) if v.is_finite() => MeterSnapshot::available(name, &desc, *v, t),
                _ => MeterSnapshot::unavailable(name, &desc, t),
            };
            (name.clone(), snap)
        })
        .collect()
}

/// Home state plus its audit log; the unit that commands mutate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomeCore {
    pub state: HomeState,
    pub audit: Vec<AuditEntry>,
}

impl HomeCore {
    pub fn new(state: HomeState) -> Self {
        HomeCore { state, audit: Vec::new() }
    }

    /// Validates and applies one command, appending an audit entry either way.
    pub fn execute(
        &mut self,
        key: &str,
        attribute: &str,
        value: &AttributeValue,
        source: CommandSource,
    ) -> Result<DeviceState, HomeError> {
        let device_id = self
            .state
            .resolve_device(key)
            .map(|d| d.device_id.clone())
            .ok_or_else(|| HomeError::UnknownDevice(key.to_string()))?;
        let at = self.state.sim_clock;
        let device = &mut self.state.devices[&device_id];
        let previous = device.attributes.get(attribute).cloned();
        let result = check(device, attribute, value);
        let seq = self.audit.len() as u64 + 1;
        match result {
            Ok(canonical) => {
                device.attributes.insert(attribute.to_string(), canonical.clone());
                let snapshot = device.clone();
                self.audit.push(AuditEntry {
                    seq,
                    at,
                    device_id,
                    attribute: attribute.to_string(),
                    previous,
                    requested: value.clone(),
                    applied: Some(canonical),
                    outcome: Outcome::Applied,
                    source,
                });
                Ok(snapshot)
            }
            Err(e) => {
                self.audit.push(AuditEntry {
                    seq,
                    at,
                    device_id,
                    attribute: attribute.to_string(),
                    previous,
                    requested: value.clone(),
                    applied: None,
                    outcome: Outcome::Rejected { code: e.code().to_string(), reason: e.to_string() },
                    source,
                });
                Err(e)
            }
        }
    }
}

fn check(device: &DeviceState, attribute: &str, value: &AttributeValue) -> Result<AttributeValue, HomeError> {
    let spec = device.attribute_specs.get(attribute).ok_or_else(|| HomeError::InvalidAttribute {
        device_id: device.device_id.clone(),
        attribute: attribute.to_string(),
    })?;
    if !device.online {
        return Err(HomeError::OfflineDevice(device.device_id.clone()));
    }
    spec.coerce(value).map_err(|reason| HomeError::ValueOutOfRange {
        device_id: device.device_id.clone(),
        attribute: attribute.to_string(),
        reason,
    })
}

/// Which devices a group command addresses.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "by", content = "value", rename_all = "snake_case")]
pub enum Selector {
    Room(String),
    Tag(String),
}

impl Selector {
    pub fn matches(&self, d: &DeviceState) -> bool {
        match self {
            Selector::Room(r) => d.room.eq_ignore_ascii_case(r.trim()),
            Selector::Tag(t) => d.has_tag(t.trim()),
        }
    }
}

/// Per-device result of a group command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupOutcome {
    pub device_id: String,
    pub name: String,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<AttributeValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub code: Option<String>,
}

/// Notifications pushed to subscribers after a mutation commits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum HomeEvent {
    DeviceUpdated { device: DeviceState, source: CommandSource },
    CommandRejected { device_id: String, attribute: String, code: String, reason: String },
    SchedulesChanged { count: usize },
    ScheduleFired { action: FiredAction },
    ClockAdvanced { now: NaiveDateTime },
}

pub type Listener = Arc<dyn Fn(&HomeEvent) + Send + Sync>;

struct Inner {
    core: HomeCore,
    scheduler: Scheduler,
    playback: Option<Arc<EnergySeries>>,
    persist_to: Option<PathBuf>,
}

/// A save point holding everything a benchmark query can change.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomeSnapshot {
    pub state: HomeState,
    pub scheduler: Scheduler,
}

/// Thread-safe handle over one home. Reads share a lock, commands are serialized.
pub struct Home {
    inner: RwLock<Inner>,
    listeners: RwLock<Vec<Listener>>,
}

impl Home {
    pub fn new(state: HomeState) -> Self {
        let scheduler = Scheduler::new(state.sim_clock);
        Home {
            inner: RwLock::new(Inner { core: HomeCore::new(state), scheduler, playback: None, persist_to: None }),
            listeners: RwLock::new(Vec::new()),
        }
    }

    pub fn from_profile(profile: &BuildingProfile, series: &EnergySeries) -> Self {
        Home::new(HomeState::from_profile(profile, series))
    }

    /// Derive meter readings from `series` at the simulated clock instead of the frozen snapshot.
    pub fn with_playback(self, series: Arc<EnergySeries>) -> Self {
        self.write().playback = Some(series);
        self
    }

    /// Rewrite the devices document at `path` after every committed change.
    pub fn with_persistence(self, path: impl Into<PathBuf>) -> Self {
        self.write().persist_to = Some(path.into());
        self
    }

    pub fn subscribe(&self, listener: Listener) {
        self.listeners.write().unwrap_or_else(|e| e.into_inner()).push(listener);
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, Inner> {
        self.inner.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> std::sync::RwLockWriteGuard<'_, Inner> {
        self.inner.write().unwrap_or_else(|e| e.into_inner())
    }

    fn emit(&self, events: Vec<HomeEvent>) {
        if events.is_empty() {
            return;
        }
        let listeners = self.listeners.read().unwrap_or_else(|e| e.into_inner()).clone();
        for e in &events {
            for l in &listeners {
                l(e);
            }
        }
    }

    fn persist(inner: &Inner) -> Result<(), HomeError> {
        match &inner.persist_to {
            Some(path) => save_json_atomic(path, &devices_document(&inner.core.state, &inner.scheduler)),
            None => Ok(()),
        }
    }

    pub fn building_id(&self) -> String {
        self.read().core.state.building_id.clone()
    }

    pub fn state(&self) -> HomeState {
        self.read().core.state.clone()
    }

    pub fn sim_clock(&self) -> NaiveDateTime {
        self.read().core.state.sim_clock
    }

    pub fn meters_query(&self, name: Option<&str>) -> Result<Vec<MeterSnapshot>, HomeError> {
        let inner = self.read();
        let state = &inner.core.state;
        let live;
        let meters = match &inner.playback {
            Some(series) => {
                live = meters_at(series, state.sim_clock);
                &live
            }
            None => &state.meters,
        };
        match name {
            None => Ok(meters.values().cloned().collect()),
            Some(key) => meters
                .get(key)
                .or_else(|| meters.values().find(|m| m.name.eq_ignore_ascii_case(key.trim())))
                .map(|m| vec![m.clone()])
                .ok_or_else(|| HomeError::UnknownMeter(key.to_string())),
        }
    }

    pub fn devices_sync(&self) -> Vec<DeviceState> {
        self.read().core.state.devices.values().cloned().collect()
    }

    pub fn devices_query(&self, key: &str) -> Result<DeviceState, HomeError> {
        self.read()
            .core
            .state
            .resolve_device(key)
            .cloned()
            .ok_or_else(|| HomeError::UnknownDevice(key.to_string()))
    }

    pub fn devices_execute(
        &self,
        key: &str,
        attribute: &str,
        value: &AttributeValue,
        source: CommandSource,
    ) -> Result<DeviceState, HomeError> {
        let (result, events) = {
            let mut inner = self.write();
            let result = inner.core.execute(key, attribute, value, source.clone());
            if result.is_ok() {
                Self::persist(&inner)?;
            }
            let event = event_for(&result, key, attribute, source);
            (result, event.into_iter().collect())
        };
        self.emit(events);
        result
    }

    /// Applies the command to every matching device independently; no rollback.
    pub fn group_execute(
        &self,
        selector: &Selector,
        attribute: &str,
        value: &AttributeValue,
        source: CommandSource,
    ) -> Vec<GroupOutcome> {
        let mut out = Vec::new();
        let mut events = Vec::new();
        {
            let mut inner = self.write();
            let ids: Vec<String> = inner
                .core
                .state
                .devices
                .values()
                .filter(|d| selector.matches(d))
                .map(|d| d.device_id.clone())
                .collect();
            for id in ids {
                let name = inner.core.state.devices[&id].name.clone();
                let r = inner.core.execute(&id, attribute, value, source.clone());
                out.push(match &r {
                    Ok(d) => GroupOutcome {
                        device_id: id.clone(),
                        name,
                        ok: true,
                        value: d.attributes.get(attribute).cloned(),
                        error: None,
                        code: None,
                    },
                    Err(e) => GroupOutcome {
                        device_id: id.clone(),
                        name,
                        ok: false,
                        value: None,
                        error: Some(e.to_string()),
                        code: Some(e.code().to_string()),
                    },
                });
                events.extend(event_for(&r, &id, attribute, source.clone()));
            }
            if out.iter().any(|o| o.ok) {
                let _ = Self::persist(&inner);
            }
        }
        self.emit(events);
        out
    }

    pub fn audit(&self) -> Vec<AuditEntry> {
        self.read().core.audit.clone()
    }

    /// Audit entries with `seq` strictly greater than `seq`.
    pub fn audit_since(&self, seq: u64) -> Vec<AuditEntry> {
        self.read().core.audit.iter().filter(|a| a.seq > seq).cloned().collect()
    }

    pub fn audit_len(&self) -> u64 {
        self.read().core.audit.len() as u64
    }

    pub fn snapshot(&self) -> HomeSnapshot {
        let inner = self.read();
        HomeSnapshot { state: inner.core.state.clone(), scheduler: inner.scheduler.clone() }
    }

    /// Restores devices, meters, clock and schedules. The audit log is kept.
    pub fn restore(&self, snap: &HomeSnapshot) {
        {
            let mut inner = self.write();
            inner.core.state = snap.state.clone();
            inner.scheduler = snap.scheduler.clone();
            let _ = Self::persist(&inner);
        }
        self.emit(vec![HomeEvent::SchedulesChanged { count: snap.scheduler.len() }]);
    }

    pub fn schedule_create(&self, new: NewSchedule) -> Result<ScheduleEntry, AutomationError> {
        let (entry, count) = {
            let mut inner = self.write();
            let Inner { core, scheduler, .. } = &mut *inner;
            let entry = scheduler.create(&core.state, new)?;
            let count = scheduler.len();
            let _ = Self::persist(&inner);
            (entry, count)
        };
        self.emit(vec![HomeEvent::SchedulesChanged { count }]);
        Ok(entry)
    }

    pub fn schedule_sync(&self, device: Option<&str>) -> Vec<ScheduleEntry> {
        let inner = self.read();
        let id = device.map(|k| inner.core.state.resolve_device(k).map(|d| d.device_id.clone()).unwrap_or(k.to_string()));
        inner.scheduler.sync(id.as_deref())
    }

    pub fn schedule_change(&self, schedule_id: &str, edit: ScheduleEdit) -> Result<Option<ScheduleEntry>, AutomationError> {
        let (r, count) = {
            let mut inner = self.write();
            let Inner { core, scheduler, .. } = &mut *inner;
            let r = scheduler.change(&core.state, schedule_id, edit)?;
            let count = scheduler.len();
            let _ = Self::persist(&inner);
            (r, count)
        };
        self.emit(vec![HomeEvent::SchedulesChanged { count }]);
        Ok(r)
    }

    /// Advances the simulated clock, firing due schedules.
    pub fn tick(&self, now: NaiveDateTime) -> Result<Vec<FiredAction>, AutomationError> {
        let fired = {
            let mut inner = self.write();
            let Inner { core, scheduler, .. } = &mut *inner;
            let fired = scheduler.tick(now, core)?;
            let _ = Self::persist(&inner);
            fired
        };
        let mut events: Vec<HomeEvent> = Vec::new();
        for f in &fired {
            events.push(HomeEvent::ScheduleFired { action: f.clone() });
        }
        events.push(HomeEvent::ClockAdvanced { now });
        self.emit(events);
        Ok(fired)
    }

    pub fn next_fire(&self, schedule_id: &str) -> Option<NaiveDateTime> {
        let inner = self.read();
        inner.scheduler.next_fire(schedule_id, inner.core.state.sim_clock)
    }

    pub fn devices_document(&self) -> Value {
        let inner = self.read();
        devices_document(&inner.core.state, &inner.scheduler)
    }

    pub fn meters_document(&self) -> Value {
        meters_document(self.read().core.state.meters.values())
    }
}

fn event_for(
    result: &Result<DeviceState, HomeError>,
    key: &str,
    attribute: &str,
    source: CommandSource,
) -> Option<HomeEvent> {
    match result {
        Ok(d) => Some(HomeEvent::DeviceUpdated { device: d.clone(), source }),
        Err(HomeError::UnknownDevice(_)) => None,
        Err(e) => Some(HomeEvent::CommandRejected {
            device_id: key.to_string(),
            attribute: attribute.to_string(),
            code: e.code().to_string(),
            reason: e.to_string(),
        }),
    }
}

/// The devices document: static metadata, current state and the schedules collection.
pub fn devices_document(state: &HomeState, scheduler: &Scheduler) -> Value {
    let info: Vec<Value> = state
        .devices
        .values()
        .map(|d| {
            json!({
                "device_id": d.device_id,
                "name": d.name,
                "room": d.room,
                "kind": d.kind,
                "tags": d.tags,
                "attribute_specs": d.attribute_specs,
            })
        })
        .collect();
    let mut states = serde_json::Map::new();
    for d in state.devices.values() {
        states.insert(d.device_id.clone(), json!({ "online": d.online, "attributes": d.attributes }));
    }
    json!({
        "building_id": state.building_id,
        "devices-info": info,
        "devices-state": states,
        "schedules": scheduler.sync(None),
    })
}

#[derive(Deserialize)]
struct InfoEntry {
    device_id: String,
    name: String,
    room: String,
    kind: String,
    #[serde(default)]
    tags: Vec<String>,
    attribute_specs: IndexMap<String, bems_core::AttributeSpec>,
}

#[derive(Deserialize)]
struct StateEntry {
    online: bool,
    attributes: IndexMap<String, AttributeValue>,
}

/// Parses a devices document back into devices and schedules, rejecting nonconforming state.
pub fn load_devices_document(doc: &Value) -> Result<(IndexMap<String, DeviceState>, Vec<ScheduleEntry>), HomeError> {
    let bad = |e: serde_json::Error| HomeError::Document(e.to_string());
    let info: Vec<InfoEntry> = serde_json::from_value(doc.get("devices-info").cloned().unwrap_or(Value::Array(vec![])))
        .map_err(bad)?;
    let states: IndexMap<String, StateEntry> =
        serde_json::from_value(doc.get("devices-state").cloned().unwrap_or(json!({}))).map_err(bad)?;
    let schedules: Vec<ScheduleEntry> =
        serde_json::from_value(doc.get("schedules").cloned().unwrap_or(Value::Array(vec![]))).map_err(bad)?;
    let mut devices = IndexMap::new();
    for i in info {
        let st = states
            .get(&i.device_id)
            .ok_or_else(|| HomeError::Document(format!("no state for device {}", i.device_id)))?;
        let d = DeviceState {
            device_id: i.device_id.clone(),
            name: i.name,
            room: i.room,
            kind: i.kind,
            tags: i.tags,
            online: st.online,
            attributes: st.attributes.clone(),
            attribute_specs: i.attribute_specs,
        };
        if !d.is_conformant() {
            return Err(HomeError::Document(format!("device {} has nonconforming {:?}", d.device_id, d.nonconforming())));
        }
        devices.insert(i.device_id, d);
    }
    Ok((devices, schedules))
}

/// Writes JSON to a sibling temp file and renames it into place.
pub fn save_json_atomic(path: &Path, value: &Value) -> Result<(), HomeError> {
    let io = |e: std::io::Error| HomeError::Io(e.to_string());
    let text = serde_json::to_string_pretty(value).map_err(|e| HomeError::Document(e.to_string()))?;
    let tmp = path.with_extension("json.tmp");
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(&tmp, text).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use bems_core::ingestion::synth_month;

    fn tx01() -> Home {
        let p = BuildingProfile::preset("TX-01").unwrap();
        let s = synth_month(7, &p, 31, p.season).unwrap();
        Home::from_profile(&p, &s)
    }

    #[test]
    fn meters_match_profile() {
        let h = tx01();
        let all = h.meters_query(None).unwrap();
        assert_eq!(all.len(), 18);
        let dw = h.meters_query(Some("Dishwasher")).unwrap();
        assert_eq!(dw[0].value, Some(1.8));
        assert!(matches!(h.meters_query(Some("TV")), Err(HomeError::UnknownMeter(_))));
        assert_eq!(h.sim_clock().to_string(), "2018-01-31 19:00:00");
    }

    #[test]
    fn brightness_workflow() {
        let h = tx01();
        let light = h.devices_query("Living Room Light").unwrap();
        assert_eq!(light.attributes["brightness"], AttributeValue::Number(50.0));
        let d = h.devices_execute("living_room_light", "brightness", &75.0.into(), CommandSource::Agent).unwrap();
        assert_eq!(d.attributes["brightness"], AttributeValue::Number(75.0));
        let e = h.devices_execute("living_room_light", "brightness", &150.0.into(), CommandSource::Agent);
        assert!(matches!(e, Err(HomeError::ValueOutOfRange { .. })));
        assert_eq!(h.audit().len(), 2);
    }

    #[test]
    fn offline_kettle_rejects() {
        let h = tx01();
        assert!(!h.devices_query("kettle").unwrap().online);
        let e = h.devices_execute("kettle", "power", &"on".into(), CommandSource::Agent);
        assert_eq!(e, Err(HomeError::OfflineDevice("kettle".into())));
        assert!(matches!(
            h.devices_execute("kettle", "colour", &"on".into(), CommandSource::Agent),
            Err(HomeError::InvalidAttribute { .. })
        ));
        assert!(matches!(h.devices_query("tv"), Err(HomeError::UnknownDevice(_))));
    }

    #[test]
    fn events_reach_subscribers() {
        let h = tx01();
        let seen = Arc::new(std::sync::Mutex::new(Vec::new()));
        let sink = seen.clone();
        h.subscribe(Arc::new(move |e: &HomeEvent| sink.lock().unwrap().push(e.clone())));
        h.devices_execute("ac", "setpoint", &"22".into(), CommandSource::Api).unwrap();
        let _ = h.devices_execute("kettle", "power", &true.into(), CommandSource::Api);
        let seen = seen.lock().unwrap();
        assert!(matches!(&seen[0], HomeEvent::DeviceUpdated { device, .. } if device.attributes["setpoint"] == AttributeValue::Number(22.0)));
        assert!(matches!(&seen[1], HomeEvent::CommandRejected { code, .. } if code == "offline_device"));
    }

    #[test]
    fn document_round_trip_and_persistence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("devices.json");
        let h = tx01().with_persistence(&path);
        h.devices_execute("bedroom_light", "power", &true.into(), CommandSource::User).unwrap();
        let doc: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        let (devices, schedules) = load_devices_document(&doc).unwrap();
        assert_eq!(devices, h.state().devices);
        assert!(schedules.is_empty());
        assert!(!path.with_extension("json.tmp").exists());
    }
}
