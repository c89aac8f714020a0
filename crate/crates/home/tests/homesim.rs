use bems_core::ingestion::synth_month;
use bems_core::{AttributeSpec, AttributeValue, BuildingProfile, DeviceState};
use bems_home::{device_template, CommandSource, Home, HomeCore, HomeError, HomeState, Selector};
use chrono::NaiveDate;
use proptest::prelude::*;

const NAMES: [&str; 13] = [
    "Living Room Light",
    "Kitchen Light",
    "Bedroom Light",
    "AC",
    "Heater",
    "Ceiling Fan",
    "Kettle",
    "Coffee Maker",
    "Dishwasher",
    "Microwave",
    "EV Charger",
    "Washing Machine",
    "TV",
];

fn full_core() -> HomeCore {
    let t = NaiveDate::from_ymd_opt(2018, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let mut s = HomeState::empty("all", t);
    for n in NAMES {
        if let Some(d) = device_template(n) {
            s.devices.insert(d.device_id.clone(), d);
        }
    }
    HomeCore::new(s)
}

/// Independent acceptance rule for one command, written against the spec fields directly.
fn accepts(d: &DeviceState, attr: &str, v: &AttributeValue) -> Option<AttributeValue> {
    let spec = d.attribute_specs.get(attr)?;
    if !d.online {
        return None;
    }
    match (spec, v) {
        (AttributeSpec::Switch, AttributeValue::Bool(b)) => Some(AttributeValue::Bool(*b)),
        (AttributeSpec::Switch, AttributeValue::Text(t)) if t == "on" => Some(true.into()),
        (AttributeSpec::Switch, AttributeValue::Text(t)) if t == "off" => Some(false.into()),
        (AttributeSpec::Switch, AttributeValue::Number(n)) if *n == 0.0 || *n == 1.0 => Some((*n == 1.0).into()),
        (AttributeSpec::Numeric { min, max, step, .. }, AttributeValue::Number(n)) => {
            let on_step = step.is_none_or(|s| ((n - min) / s).fract() == 0.0);
            (*n >= *min && *n <= *max && on_step).then_some(AttributeValue::Number(*n))
        }
        (AttributeSpec::Mode { values }, AttributeValue::Text(t)) => values.contains(t).then(|| t.as_str().into()),
        // A switch-style boolean on a mode attribute means its "on"/"off" mode, where one exists.
        (AttributeSpec::Mode { values }, AttributeValue::Bool(b)) => {
            let m = if *b { "on" } else { "off" };
            values.iter().any(|v| v == m).then(|| m.into())
        }
        _ => None,
    }
}

fn arb_value() -> impl Strategy<Value = AttributeValue> {
    prop_oneof![
        any::<bool>().prop_map(AttributeValue::Bool),
        (-20i32..220).prop_map(|h| AttributeValue::Number(h as f64 / 2.0)),
        prop::sample::select(vec!["on", "off", "cool", "heat", "eco", "fan-only", "auto", "low", "high", "normal", "heavy", "delicate", "turbo", ""])
            .prop_map(AttributeValue::from),
    ]
}

fn arb_command() -> impl Strategy<Value = (String, String, AttributeValue)> {
    (
        prop::sample::select(NAMES.to_vec()),
        prop::sample::select(vec!["power", "brightness", "mode", "setpoint", "fan_mode", "speed", "program", "charge_current", "volume"]),
        arb_value(),
    )
        .prop_map(|(n, a, v)| (n.to_string(), a.to_string(), v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn random_command_sequences_stay_conformant(cmds in prop::collection::vec(arb_command(), 1..25)) {
        let mut core = full_core();
        let ids: Vec<String> = core.state.devices.keys().cloned().collect();
        let attrs: Vec<Vec<String>> = core.state.devices.values().map(|d| d.attributes.keys().cloned().collect()).collect();
        for (name, attr, value) in cmds {
            let before = core.state.clone();
            let audit_before = core.audit.len();
            let target = before.devices.values().find(|d| d.name == name);
            let expected = target.and_then(|d| accepts(d, &attr, &value));
            let r = core.execute(&name, &attr, &value, CommandSource::Agent);
            match (target, expected) {
                (None, _) => {
                    prop_assert_eq!(r, Err(HomeError::UnknownDevice(name.clone())));
                    prop_assert_eq!(core.audit.len(), audit_before);
                }
                (Some(d), Some(v)) => {
                    let after = r.unwrap();
                    prop_assert_eq!(&after.attributes[&attr], &v);
                    let mut want = d.clone();
                    want.attributes.insert(attr.clone(), v);
                    prop_assert_eq!(&core.state.devices[&d.device_id], &want);
                    prop_assert_eq!(core.audit.len(), audit_before + 1);
                }
                (Some(d), None) => {
                    let e = r.unwrap_err();
                    if !d.attribute_specs.contains_key(&attr) {
                        prop_assert!(matches!(e, HomeError::InvalidAttribute { .. }), "{e:?}");
                    } else if !d.online {
                        prop_assert_eq!(e, HomeError::OfflineDevice(d.device_id.clone()));
                    } else {
                        prop_assert!(matches!(e, HomeError::ValueOutOfRange { .. }), "{e:?}");
                    }
                    prop_assert_eq!(&core.state, &before);
                    prop_assert_eq!(core.audit.len(), audit_before + 1);
                }
            }
            for d in core.state.devices.values() {
                prop_assert!(d.is_conformant(), "{}: {:?}", d.device_id, d.nonconforming());
            }
            let now_ids: Vec<String> = core.state.devices.keys().cloned().collect();
            prop_assert_eq!(&now_ids, &ids);
            let now_attrs: Vec<Vec<String>> = core.state.devices.values().map(|d| d.attributes.keys().cloned().collect()).collect();
            prop_assert_eq!(&now_attrs, &attrs);
        }
    }
}

fn tx01() -> Home {
    let p = BuildingProfile::preset("TX-01").unwrap();
    let s = synth_month(7, &p, 31, p.season).unwrap();
    Home::from_profile(&p, &s)
}

#[test]
fn every_preset_home_matches_its_profile() {
    for p in BuildingProfile::presets() {
        let s = synth_month(3, &p, p.days, p.season).unwrap();
        let h = Home::from_profile(&p, &s);
        let meters: Vec<String> = h.meters_query(None).unwrap().into_iter().map(|m| m.name).collect();
        assert_eq!(meters, p.sensors);
        let devices: Vec<String> = h.devices_sync().into_iter().map(|d| d.name).collect();
        assert_eq!(devices, p.devices);
        assert_eq!(h.devices_sync(), h.devices_sync());
    }
}

#[test]
fn kitchen_group_reports_each_device() {
    let h = tx01();
    h.devices_execute("coffee_maker", "power", &true.into(), CommandSource::User).unwrap();
    h.devices_execute("microwave", "power", &true.into(), CommandSource::User).unwrap();
    let out = h.group_execute(&Selector::Tag("kitchen_appliance".into()), "power", &"off".into(), CommandSource::Agent);
    // Expected by applying the single-device rule to each member.
    let want: Vec<(&str, bool)> = vec![("kettle", false), ("coffee_maker", true), ("dishwasher", true), ("microwave", true)];
    let got: Vec<(&str, bool)> = out.iter().map(|o| (o.device_id.as_str(), o.ok)).collect();
    assert_eq!(got, want);
    assert_eq!(out[0].code.as_deref(), Some("offline_device"));
    for id in ["coffee_maker", "dishwasher", "microwave"] {
        assert_eq!(h.devices_query(id).unwrap().attributes["power"], AttributeValue::Bool(false));
    }
    assert!(h.group_execute(&Selector::Room("attic".into()), "power", &false.into(), CommandSource::Agent).is_empty());
    let kitchen = h.group_execute(&Selector::Room("Kitchen".into()), "power", &false.into(), CommandSource::Agent);
    assert_eq!(kitchen.len(), 5);
}

#[test]
fn switch_commands_are_idempotent() {
    let h = tx01();
    let a = h.devices_execute("ac", "mode", &"eco".into(), CommandSource::Agent).unwrap();
    let b = h.devices_execute("ac", "mode", &"ECO".into(), CommandSource::Agent).unwrap();
    assert_eq!(a, b);
    assert_eq!(h.audit_len(), 2);
    let audit = h.audit_since(1);
    assert_eq!(audit.len(), 1);
    assert_eq!(audit[0].previous, Some("eco".into()));
}

#[test]
fn snapshot_restore_resets_devices_but_keeps_audit() {
    let h = tx01();
    let snap = h.snapshot();
    h.devices_execute("living_room_light", "brightness", &75.0.into(), CommandSource::Agent).unwrap();
    h.restore(&snap);
    assert_eq!(h.devices_query("living_room_light").unwrap().attributes["brightness"], AttributeValue::Number(50.0));
    assert_eq!(h.audit_len(), 1);
}

#[test]
fn empty_home_has_no_devices() {
    let t = NaiveDate::from_ymd_opt(2018, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let h = Home::new(HomeState::empty("none", t));
    assert!(h.devices_sync().is_empty());
    assert!(h.meters_query(None).unwrap().is_empty());
}

#[test]
fn concurrent_commands_are_linearizable() {
    let h = std::sync::Arc::new(tx01());
    let threads: Vec<_> = (0..8)
        .map(|k| {
            let h = h.clone();
            std::thread::spawn(move || {
                for i in 0..50 {
                    let v = ((k * 50 + i) % 101) as f64;
                    h.devices_execute("living_room_light", "brightness", &v.into(), CommandSource::Api).unwrap();
                    assert!(h.devices_query("living_room_light").unwrap().is_conformant());
                }
            })
        })
        .collect();
    for t in threads {
        t.join().unwrap();
    }
    let audit = h.audit();
    assert_eq!(audit.len(), 400);
    for pair in audit.windows(2) {
        assert_eq!(pair[1].previous, pair[0].applied, "each command observes the one before it");
    }
    assert_eq!(h.devices_query("living_room_light").unwrap().attributes["brightness"], audit[399].applied.clone().unwrap());
}
