//! Building profiles, including the four testbed presets.

use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::rates::RateSchedule;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Season {
    Heating,
    Cooling,
}

impl fmt::Display for Season {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Season::Heating => "heating",
            Season::Cooling => "cooling",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildingProfile {
    pub building_id: String,
    pub description: String,
    pub location: String,
    pub floor_area_sqft: u32,
    pub occupants: String,
    pub season: Season,
    pub start_date: NaiveDate,
    pub days: u32,
    /// Energy meter names. These are also the CSV channel names.
    pub sensors: Vec<String>,
    /// Controllable smart device names.
    pub devices: Vec<String>,
    pub rate_schedule: RateSchedule,
}

const TX01_SENSORS: &[&str] = &[
    "Electrical Grid",
    "Photovoltaic System",
    "Living Room",
    "First Bathroom",
    "Utility Room",
    "Air Compressor",
    "Electric Vehicle Charger",
    "Clothes Washing Machine",
    "Electricity Clothes Dryer",
    "Natural Gas Clothes Dryer",
    "Dishwasher",
    "Furnace Air Handler",
    "Kitchen App 1",
    "Kitchen App 2",
    "Microwave",
    "Oven",
    "Refrigerator",
    "Vent Hood",
];

const TX02_SENSORS: &[&str] = &[
    "Electrical Grid",
    "Photovoltaic System",
    "Air Compressor",
    "Electric Vehicle Charger",
    "Clothes Washing Machine",
    "Dishwasher",
    "Disposal",
    "Electricity Clothes Dryer",
    "Furnace Air Handler",
    "Kitchen App 1",
    "Kitchen App 2",
    "Microwave",
    "Oven 1",
    "Oven 2",
    "Refrigerator",
    "Vent Hood",
];

const NY01_SENSORS: &[&str] = &[
    "Electrical Grid",
    "Photovoltaic System",
    "Air Compressor",
    "Air Compressor 2",
    "Waterheater",
    "Electric Vehicle Charger",
    "Cloth Washer and Dryer",
    "Freezer",
    "Kitchen App 1",
    "Kitchen App 2",
    "Well Pump",
    "Garage",
];

const NY02_SENSORS: &[&str] = &[
    "Electrical Grid",
    "Photovoltaic System",
    "Heater",
    "Waterheater",
    "Electric Vehicle Charger",
    "Well Pump",
    "Range",
    "Electricity Clothes Dryer",
    "Kitchen App 1",
    "Garage",
];

/// Smart devices present in every preset home.
const COMMON_DEVICES: &[&str] = &[
    "Living Room Light",
    "Kitchen Light",
    "Bedroom Light",
    "AC",
    "Ceiling Fan",
    "Kettle",
    "Coffee Maker",
    "Dishwasher",
    "Microwave",
    "EV Charger",
    "Washing Machine",
];

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

impl BuildingProfile {
    pub const PRESET_IDS: [&'static str; 4] = ["TX-01", "TX-02", "NY-01", "NY-02"];

    /// One of the four testbed configurations, by id.
    pub fn preset(id: &str) -> Option<BuildingProfile> {
        let heating = NaiveDate::from_ymd_opt(2018, 1, 1)?;
        let cooling = NaiveDate::from_ymd_opt(2019, 6, 1)?;
        let (location, sqft, occupants, season, start, days, sensors, extra): (
            &str,
            u32,
            &str,
            Season,
            NaiveDate,
            u32,
            &[&str],
            &[&str],
        ) = match id {
            "TX-01" => ("Austin, Texas", 1725, "3 adults", Season::Heating, heating, 31, TX01_SENSORS, &[]),
            "TX-02" => (
                "Austin, Texas",
                2700,
                "2 adults, 2 children",
                Season::Heating,
                heating,
                31,
                TX02_SENSORS,
                &[],
            ),
            "NY-01" => (
                "Brooktondale, New York",
                1575,
                "2 adults",
                Season::Cooling,
                cooling,
                30,
                NY01_SENSORS,
                &[],
            ),
            "NY-02" => (
                "Ithaca, New York",
                1750,
                "2 adults, 2 children",
                Season::Cooling,
                cooling,
                30,
                NY02_SENSORS,
                &["Heater"],
            ),
            _ => return None,
        };
        let mut devices = names(COMMON_DEVICES);
        devices.extend(names(extra));
        Some(BuildingProfile {
            building_id: id.to_string(),
            description: format!(
                "Single-family house in {location}, {sqft} sq ft, with rooftop PV and an EV charger."
            ),
            location: location.to_string(),
            floor_area_sqft: sqft,
            occupants: occupants.to_string(),
            season,
            start_date: start,
            days,
            sensors: names(sensors),
            devices,
            rate_schedule: RateSchedule::default(),
        })
    }

    pub fn presets() -> Vec<BuildingProfile> {
        Self::PRESET_IDS.iter().filter_map(|id| Self::preset(id)).collect()
    }

    /// Expected number of 15-minute samples for the profile's period.
    pub fn expected_points(&self) -> usize {
        self.days as usize * crate::units::INTERVALS_PER_DAY
    }

    /// Text block describing the building, as given to the agent.
    pub fn render(&self) -> String {
        let mut s = format!(
            "Building {id}: {desc}\nLocation: {loc}\nOccupants: {occ}\nData period: {start} ({days} days, {season} season)\n",
            id = self.building_id,
            desc = self.description,
            loc = self.location,
            occ = self.occupants,
            start = self.start_date,
            days = self.days,
            season = self.season,
        );
        s.push_str("Energy meters: ");
        s.push_str(&self.sensors.join(", "));
        s.push_str("\nSmart devices: ");
        s.push_str(&self.devices.join(", "));
        s.push('\n');
        let r = &self.rate_schedule;
        let fmt_windows = |ws: &[crate::rates::ClockWindow]| {
            ws.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(", ")
        };
        s.push_str(&format!(
            "Time-of-use rates: off-peak {} at {}/kWh; peak {} at {}/kWh; export credit {}/kWh; EV discount {} at {}/kWh\n",
            fmt_windows(&r.off_peak_windows),
            r.off_peak_rate.as_decimal(),
            fmt_windows(&r.peak_windows),
            r.peak_rate.as_decimal(),
            r.export_credit.as_decimal(),
            r.ev_discount_window,
            r.ev_discounted_rate.as_decimal(),
        ));
        s
    }
}
