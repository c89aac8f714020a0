//! Synthetic building months shaped like the four testbeds.
//!
//! Every channel draws from its own ChaCha8 stream seeded by `seed` and the channel
//! name, so adding a channel never perturbs the others. Samples are quantized to
//! whole watts and the grid channel is computed in integer watts, which makes
//! `grid + generation - consumption == 0` hold exactly at every interval.

use chrono::{NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::history::RoleMap;
use super::IngestError;
use crate::profile::{BuildingProfile, Season};
use crate::series::{infer_end_use, ChannelRole, EndUse, EnergySeries};
use crate::units::INTERVALS_PER_DAY;

/// Sunrise and sunset, in hours, for the generation envelope.
pub fn daylight_window(season: Season) -> (f64, f64) {
    match season {
        Season::Heating => (7.0, 18.0),
        Season::Cooling => (6.0, 20.0),
    }
}

/// Peak PV output in kW on a clear day.
pub fn pv_capacity_kw(season: Season) -> f64 {
    match season {
        Season::Heating => 4.5,
        Season::Cooling => 6.0,
    }
}

pub fn season_start(season: Season) -> NaiveDateTime {
    let d = match season {
        Season::Heating => NaiveDate::from_ymd_opt(2018, 1, 1),
        Season::Cooling => NaiveDate::from_ymd_opt(2019, 6, 1),
    };
    d.and_then(|d| d.and_hms_opt(0, 0, 0)).unwrap_or_default()
}

fn fnv1a(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn channel_rng(seed: u64, name: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ fnv1a(name))
}

/// Midpoint of interval `i` as fractional hour of day.
fn hour_of(i: usize) -> f64 {
    (i % INTERVALS_PER_DAY) as f64 / 4.0 + 0.125
}

fn milli(kw: f64) -> i64 {
    (kw * 1000.0).round().max(0.0) as i64
}

/// A burst profile: per day, a random number of events each starting in one of `hours`.
struct Bursts {
    per_day: (u32, u32),
    hours: (u32, u32),
    duration: (usize, usize),
    power: (f64, f64),
    base: f64,
}

enum Archetype {
    Generation,
    EvCharger,
    Cooling { power: f64 },
    Heating { power: f64 },
    Cold,
    Room,
    WaterHeater,
    Bursty(Bursts),
}

fn bursts(per_day: (u32, u32), hours: (u32, u32), duration: (usize, usize), power: (f64, f64)) -> Archetype {
    Archetype::Bursty(Bursts { per_day, hours, duration, power, base: 0.0 })
}

fn archetype(name: &str, role: ChannelRole) -> Archetype {
    match role {
        ChannelRole::Generation => return Archetype::Generation,
        ChannelRole::EvCharger => return Archetype::EvCharger,
        _ => {}
    }
    let lower = name.to_ascii_lowercase();
    match infer_end_use(name) {
        EndUse::Cooling => {
            return Archetype::Cooling { power: if lower.ends_with(" 2") { 2.0 } else { 3.0 } }
        }
        EndUse::Heating => {
            return Archetype::Heating { power: if lower.contains("furnace") { 0.6 } else { 4.0 } }
        }
        EndUse::WaterHeating => return Archetype::WaterHeater,
        EndUse::Other => {}
    }
    let has = |k: &str| lower.contains(k);
    if has("refrigerator") || has("freezer") {
        Archetype::Cold
    } else if has("living room") || has("bathroom") || has("utility") || has("garage") {
        Archetype::Room
    } else if has("dishwasher") {
        bursts((0, 1), (19, 22), (4, 6), (1.2, 1.8))
    } else if has("microwave") {
        bursts((1, 3), (7, 19), (1, 1), (1.0, 1.4))
    } else if has("oven") || has("range") {
        bursts((0, 1), (17, 19), (3, 6), (2.0, 3.0))
    } else if has("washer") || has("washing") {
        bursts((0, 1), (9, 20), (3, 4), (0.4, 0.6))
    } else if has("gas") {
        bursts((0, 1), (10, 21), (3, 5), (0.2, 0.3))
    } else if has("dryer") {
        bursts((0, 1), (10, 21), (3, 5), (3.0, 5.0))
    } else if has("vent") {
        bursts((0, 2), (17, 19), (1, 2), (0.1, 0.2))
    } else if has("kitchen") {
        bursts((1, 3), (7, 20), (1, 2), (0.6, 1.5))
    } else if has("disposal") {
        bursts((0, 2), (8, 20), (1, 1), (0.3, 0.5))
    } else if has("pump") {
        bursts((3, 6), (6, 22), (1, 1), (0.8, 1.2))
    } else {
        bursts((0, 2), (8, 21), (1, 3), (0.2, 1.0))
    }
}

fn generate(arch: &Archetype, season: Season, n: usize, rng: &mut ChaCha8Rng) -> Vec<i64> {
    let days = n.div_ceil(INTERVALS_PER_DAY);
    let mut kw = vec![0.0f64; n];
    match arch {
        Archetype::Generation => {
            let (rise, set) = daylight_window(season);
            let cap = pv_capacity_kw(season);
            let clear: Vec<f64> = (0..days).map(|_| rng.random_range(0.35..1.0)).collect();
            for (i, v) in kw.iter_mut().enumerate() {
                let h = hour_of(i);
                let jitter = rng.random_range(0.9..1.0);
                if h >= rise && h < set {
                    let shape = (std::f64::consts::PI * (h - rise) / (set - rise)).sin();
                    *v = cap * shape * clear[i / INTERVALS_PER_DAY] * jitter;
                }
            }
        }
        Archetype::EvCharger => {
            for d in 0..days {
                if !rng.random_bool(0.65) {
                    continue;
                }
                // Plug-in between 21:00 and 01:00.
                let start = d * INTERVALS_PER_DAY + 84 + rng.random_range(0..17usize);
                let len = rng.random_range(6..=16usize);
                let power = if rng.random_bool(0.7) { 6.6 } else { 3.3 };
                for v in kw.iter_mut().skip(start).take(len) {
                    *v = power;
                }
            }
        }
        Archetype::Cooling { power } => {
            for (i, v) in kw.iter_mut().enumerate() {
                let h = hour_of(i);
                let p = match season {
                    Season::Cooling => 0.1 + 0.6 * (std::f64::consts::PI * (h - 8.0) / 14.0).sin().max(0.0),
                    Season::Heating => 0.01,
                };
                if rng.random_bool(p.min(1.0)) {
                    *v = power * rng.random_range(0.85..1.0);
                }
            }
        }
        Archetype::Heating { power } => {
            for (i, v) in kw.iter_mut().enumerate() {
                let h = hour_of(i);
                let p = match season {
                    Season::Heating if (6.0..9.0).contains(&h) => 0.55,
                    Season::Heating if (9.0..17.0).contains(&h) => 0.2,
                    Season::Heating => 0.4,
                    Season::Cooling if *power < 1.0 => 0.25,
                    Season::Cooling => 0.005,
                };
                if rng.random_bool(p) {
                    *v = power * rng.random_range(0.85..1.0);
                }
            }
        }
        Archetype::Cold => {
            for v in kw.iter_mut() {
                *v = if rng.random_bool(0.45) { rng.random_range(0.12..0.18) } else { 0.005 };
            }
        }
        Archetype::Room => {
            for (i, v) in kw.iter_mut().enumerate() {
                let h = hour_of(i);
                let p = if (17.0..23.0).contains(&h) {
                    0.6
                } else if (6.0..8.0).contains(&h) {
                    0.3
                } else {
                    0.05
                };
                *v = 0.05 + if rng.random_bool(p) { rng.random_range(0.2..0.5) } else { 0.0 };
            }
        }
        Archetype::WaterHeater => {
            for d in 0..days {
                for (lo, hi) in [(6usize, 9usize), (18, 22)] {
                    let start = d * INTERVALS_PER_DAY + rng.random_range(lo * 4..hi * 4);
                    let len = rng.random_range(2..=4usize);
                    for v in kw.iter_mut().skip(start).take(len) {
                        *v = 4.5;
                    }
                }
            }
            for v in kw.iter_mut() {
                if *v == 0.0 {
                    *v = 0.02;
                }
            }
        }
        Archetype::Bursty(b) => {
            for d in 0..days {
                let events = rng.random_range(b.per_day.0..=b.per_day.1);
                for _ in 0..events {
                    let hour = rng.random_range(b.hours.0..=b.hours.1) as usize;
                    let start = d * INTERVALS_PER_DAY + hour * 4 + rng.random_range(0..4usize);
                    let len = rng.random_range(b.duration.0..=b.duration.1);
                    let power = rng.random_range(b.power.0..=b.power.1);
                    for v in kw.iter_mut().skip(start).take(len) {
                        *v += power;
                    }
                }
            }
            for v in kw.iter_mut() {
                *v += b.base;
            }
        }
    }
    kw.into_iter().map(milli).collect()
}

/// Generates a deterministic month of 15-minute data for `profile`'s meters.
pub fn synth_month(seed: u64, profile: &BuildingProfile, days: u32, season: Season) -> Result<EnergySeries, IngestError> {
    if !(28..=31).contains(&days) {
        return Err(IngestError::InvalidDays(days));
    }
    let n = days as usize * INTERVALS_PER_DAY;
    let roles = RoleMap::default();
    let mut names: Vec<(String, ChannelRole)> =
        profile.sensors.iter().map(|s| (s.clone(), roles.role_for(s))).collect();
    if !names.iter().any(|(_, r)| *r == ChannelRole::Grid) {
        names.insert(0, ("grid".to_string(), ChannelRole::Grid));
    }

    let mut milli_channels: Vec<(String, ChannelRole, Vec<i64>)> = Vec::new();
    let mut net = vec![0i64; n];
    for (name, role) in &names {
        if *role == ChannelRole::Grid {
            milli_channels.push((name.clone(), *role, Vec::new()));
            continue;
        }
        let mut rng = channel_rng(seed, name);
        let samples = generate(&archetype(name, *role), season, n, &mut rng);
        let sign = if *role == ChannelRole::Generation { -1 } else { 1 };
        for (acc, v) in net.iter_mut().zip(&samples) {
            *acc += sign * v;
        }
        milli_channels.push((name.clone(), *role, samples));
    }

    let mut series = EnergySeries::new(&profile.building_id, season_start(season));
    let mut grid_done = false;
    for (name, role, samples) in milli_channels {
        let values = if role == ChannelRole::Grid && !grid_done {
            grid_done = true;
            net.iter().map(|&w| w as f64 / 1000.0).collect()
        } else {
            samples.into_iter().map(|w| w as f64 / 1000.0).collect()
        };
        series.push_channel(&name, role, values);
    }
    Ok(series)
}
