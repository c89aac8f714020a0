//! Templates for the smart devices a preset home can contain.

use bems_core::{AttributeSpec, DeviceState};

pub const AC_MODES: &[&str] = &["off", "on", "cool", "heat", "fan-only", "eco"];
pub const FAN_MODES: &[&str] = &["auto", "on", "low", "high"];

/// `"Living Room Light"` → `"living_room_light"`.
pub fn device_id_for(name: &str) -> String {
    let mut id = String::new();
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            id.push(c.to_ascii_lowercase());
        } else if !id.ends_with('_') && !id.is_empty() {
            id.push('_');
        }
    }
    id.trim_end_matches('_').to_string()
}

fn light(name: &str, room: &str, on: bool, brightness: f64) -> DeviceState {
    DeviceState::new(&device_id_for(name), name, room, "light")
        .with_tags(&["light", "lighting"])
        .with_attr("power", AttributeSpec::Switch, on.into())
        .with_attr("brightness", AttributeSpec::numeric(0.0, 100.0, "%"), brightness.into())
}

fn kitchen_switch(name: &str) -> DeviceState {
    DeviceState::new(&device_id_for(name), name, "kitchen", "appliance")
        .with_tags(&["kitchen_appliance", "appliance"])
        .with_attr("power", AttributeSpec::Switch, false.into())
}

/// The stock definition of a named device, or `None` if the catalog does not know it.
pub fn device_template(name: &str) -> Option<DeviceState> {
    let d = match name {
        "Living Room Light" => light(name, "living room", true, 50.0),
        "Kitchen Light" => light(name, "kitchen", false, 80.0),
        "Bedroom Light" => light(name, "bedroom", false, 60.0),
        "AC" => DeviceState::new("ac", name, "living room", "thermostat")
            .with_tags(&["hvac", "cooling"])
            .with_attr("mode", AttributeSpec::modes(AC_MODES), "cool".into())
            .with_attr(
                "setpoint",
                AttributeSpec::Numeric { min: 16.0, max: 30.0, step: Some(0.5), unit: "°C".into() },
                24.0.into(),
            )
            .with_attr("fan_mode", AttributeSpec::modes(FAN_MODES), "auto".into()),
        "Heater" => DeviceState::new("heater", name, "living room", "heater")
            .with_tags(&["hvac", "heating"])
            .with_attr("mode", AttributeSpec::modes(&["off", "on", "eco"]), "off".into())
            .with_attr(
                "setpoint",
                AttributeSpec::Numeric { min: 10.0, max: 30.0, step: Some(0.5), unit: "°C".into() },
                20.0.into(),
            ),
        "Ceiling Fan" => DeviceState::new("ceiling_fan", name, "bedroom", "fan")
            .with_tags(&["fan"])
            .with_attr("power", AttributeSpec::Switch, false.into())
            .with_attr(
                "speed",
                AttributeSpec::Numeric { min: 1.0, max: 3.0, step: Some(1.0), unit: "level".into() },
                2.0.into(),
            ),
        "Kettle" => kitchen_switch(name).offline(),
        "Coffee Maker" => kitchen_switch(name),
        "Microwave" => kitchen_switch(name),
        "Dishwasher" => kitchen_switch(name)
            .with_attr("program", AttributeSpec::modes(&["eco", "normal", "heavy"]), "normal".into()),
        "EV Charger" => DeviceState::new("ev_charger", name, "garage", "ev_charger")
            .with_tags(&["ev", "charger"])
            .with_attr("power", AttributeSpec::Switch, false.into())
            .with_attr(
                "charge_current",
                AttributeSpec::Numeric { min: 6.0, max: 48.0, step: Some(1.0), unit: "A".into() },
                32.0.into(),
            ),
        "Washing Machine" => DeviceState::new("washing_machine", name, "utility room", "appliance")
            .with_tags(&["laundry", "appliance"])
            .with_attr("power", AttributeSpec::Switch, false.into())
            .with_attr("program", AttributeSpec::modes(&["normal", "delicate", "heavy", "eco"]), "normal".into()),
        _ => return None,
    };
    Some(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use bems_core::BuildingProfile;

    #[test]
    fn ids() {
        assert_eq!(device_id_for("Living Room Light"), "living_room_light");
        assert_eq!(device_id_for("EV Charger"), "ev_charger");
        assert_eq!(device_id_for("  Oven 1 "), "oven_1");
    }

    #[test]
    fn every_preset_device_is_known_and_conformant() {
        for p in BuildingProfile::presets() {
            for name in &p.devices {
                let d = device_template(name).unwrap_or_else(|| panic!("{name}"));
                assert_eq!(&d.name, name);
                assert!(d.is_conformant(), "{name}: {:?}", d.nonconforming());
            }
        }
        assert!(device_template("TV").is_none());
    }

    #[test]
    fn reference_states() {
        let light = device_template("Living Room Light").unwrap();
        assert_eq!(light.attributes["brightness"].as_f64(), Some(50.0));
        assert!(!device_template("Kettle").unwrap().online);
    }
}
