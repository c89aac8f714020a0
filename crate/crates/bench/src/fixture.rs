//! Canonical replay fixtures for the battery.
//!
//! The canonical script for each query is the ideal tool sequence. Whether the script opens with
//! a classification call follows a fixed pattern, so that the classification execution rate is
//! well below one and differs between buildings only when asked to.

use bems_agent::{Fixture, Script};
use bems_core::{BuildingProfile, EnergySeries, Secondary};

use crate::battery::{entries, Entry};

/// Categories whose canonical scripts answer directly without classifying.
const DIRECT: [Secondary; 8] = [
    Secondary::MemoryInformation,
    Secondary::MemoryCreation,
    Secondary::MemoryManagement,
    Secondary::Faq,
    Secondary::Guidance,
    Secondary::MeterStatus,
    Secondary::DeviceStatus,
    Secondary::ScheduleInformation,
];

/// Categories whose fifth query is answered without classifying.
const DIRECT_FIFTH: [Secondary; 8] = [
    Secondary::HistoricalEnergy,
    Secondary::EnergyVisualization,
    Secondary::CostInformation,
    Secondary::CostVisualization,
    Secondary::DeviceOperation,
    Secondary::GroupManagement,
    Secondary::GeneralScheduling,
    Secondary::Troubleshooting,
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FixtureOptions {
    /// Strip the classification call from the first N scripts that would carry one.
    pub drop_classifications: usize,
}

pub fn classifies(entry: &Entry) -> bool {
    let sec = entry.query.label.secondary;
    let fifth = entry.query.query_id.ends_with("-5");
    !(DIRECT.contains(&sec) || (fifth && DIRECT_FIFTH.contains(&sec)))
}

fn with_label(entry: &Entry) -> Script {
    let l = entry.query.label;
    entry.script.clone().classify(l.primary.name(), l.secondary.name(), "matches the request")
}

pub fn canonical_fixture(profile: &BuildingProfile, series: &EnergySeries, opts: FixtureOptions) -> Fixture {
    let mut fixture = Fixture::default();
    let mut dropped = 0;
    for e in entries(profile, series) {
        let script = if classifies(&e) {
            if dropped < opts.drop_classifications {
                dropped += 1;
                e.script.clone()
            } else {
                with_label(&e)
            }
        } else {
            e.script.clone()
        };
        fixture.insert(e.query.query_id.clone(), script);
    }
    fixture
}

/// A preset building with a synthetic month of data; the seed is offset per preset.
pub fn synthetic_building(id: &str, seed: u64) -> Option<(BuildingProfile, EnergySeries)> {
    let profile = BuildingProfile::preset(id)?;
    let offset = BuildingProfile::PRESET_IDS.iter().position(|p| *p == id).unwrap_or(0) as u64;
    let series = bems_core::ingestion::synth_month(seed + offset, &profile, profile.days, profile.season).ok()?;
    Some((profile, series))
}
