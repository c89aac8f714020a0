use bems_core::ingestion::{history_to_string, read_history, save_history, load_history, synth_month, LoadOptions};
use bems_core::{validate_series, BuildingProfile, ChannelRole, EnergySeries, Season};
use chrono::{NaiveDate, Timelike};
use proptest::prelude::*;

fn tx01() -> BuildingProfile {
    BuildingProfile::preset("TX-01").unwrap()
}

fn milli(kw: f64) -> i64 {
    (kw * 1000.0).round() as i64
}

#[test]
fn seed_7_month_matches_testbed_shape() {
    let s = synth_month(7, &tx01(), 31, Season::Heating).unwrap();
    assert_eq!(s.channels.len(), 18);
    assert!(s.channels.values().all(|v| v.len() == 2976));
    assert!(validate_series(&s).is_ok());
    assert_eq!(s.start, NaiveDate::from_ymd_opt(2018, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap());
    for p in BuildingProfile::presets() {
        let s = synth_month(11, &p, p.days, p.season).unwrap();
        assert_eq!(s.len(), p.expected_points(), "{}", p.building_id);
        assert_eq!(s.channels.len(), p.sensors.len());
        assert_eq!(s.channels.keys().cloned().collect::<Vec<_>>(), p.sensors);
    }
}

#[test]
fn synthesis_is_deterministic_and_seed_sensitive() {
    let a = synth_month(7, &tx01(), 31, Season::Heating).unwrap();
    let b = synth_month(7, &tx01(), 31, Season::Heating).unwrap();
    let c = synth_month(8, &tx01(), 31, Season::Heating).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn generation_is_dark_outside_daylight() {
    // Envelope stated independently: heating daylight 07:00-18:00, cooling 06:00-20:00.
    for (season, rise, set) in [(Season::Heating, 7u32, 18u32), (Season::Cooling, 6, 20)] {
        let s = synth_month(7, &tx01(), 30, season).unwrap();
        let pv = s.channel("Photovoltaic System").unwrap();
        let mut produced = 0.0;
        for (i, &kw) in pv.iter().enumerate() {
            let t = s.timestamp(i);
            if t.hour() == 3 || t.hour() < rise || t.hour() >= set {
                assert_eq!(kw, 0.0, "{season} {t}");
            }
            produced += kw;
        }
        assert!(produced > 0.0);
    }
}

#[test]
fn balance_identity_holds_exactly() {
    for p in BuildingProfile::presets() {
        for seed in 0..5 {
            let s = synth_month(seed, &p, p.days, p.season).unwrap();
            let grid = s.channel(s.grid_channel().unwrap()).unwrap();
            let gen = s.channel(s.generation_channel().unwrap()).unwrap();
            for i in 0..s.len() {
                let consumption: i64 = s.consumption_channels().map(|c| milli(s.channel(c).unwrap()[i])).sum();
                assert_eq!(milli(grid[i]) + milli(gen[i]) - consumption, 0);
                // Samples are whole watts.
                for v in s.channels.values() {
                    assert_eq!(v[i], milli(v[i]) as f64 / 1000.0);
                }
            }
            assert!(grid.iter().any(|&g| g < 0.0), "PV export expected in {}", p.building_id);
        }
    }
}

#[test]
fn csv_round_trip_on_synthetic_month() {
    let s = synth_month(7, &tx01(), 31, Season::Heating).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tx01.csv");
    save_history(&s, &path).unwrap();
    let (back, report) = load_history(&path, "TX-01", &LoadOptions::default()).unwrap();
    assert_eq!(back, s);
    assert_eq!(report.rows_read, 2976);
    assert_eq!(report.gaps_filled, 0);
    assert_eq!(report.channels_found.len(), 18);
}

#[test]
fn one_deleted_row_is_interpolated_from_neighbours() {
    let s = synth_month(7, &tx01(), 31, Season::Heating).unwrap();
    let text = history_to_string(&s);
    let mut lines: Vec<&str> = text.lines().collect();
    let deleted = 500; // data row index; line 0 is the header
    lines.remove(deleted + 1);
    let (back, report) = read_history(lines.join("\n").as_bytes(), "TX-01", &LoadOptions::default()).unwrap();
    assert_eq!(report.gaps_filled, 1);
    assert_eq!(report.rows_read, 2975);
    assert_eq!(back.len(), 2976);
    for (name, orig) in &s.channels {
        let got = back.channel(name).unwrap();
        let expected = (orig[deleted - 1] + orig[deleted + 1]) / 2.0;
        assert_eq!(got[deleted], expected, "{name}");
        assert_eq!(got[deleted - 1], orig[deleted - 1]);
        assert_eq!(got[deleted + 1], orig[deleted + 1]);
    }
}

#[test]
fn one_minute_data_downsamples_by_mean() {
    let mut text = String::from("timestamp,grid,oven\n");
    let mut oracle_grid = vec![0.0f64; 4];
    for m in 0..60u32 {
        let g = (m as f64 * 0.37).sin() * 2.0;
        let o = (m % 7) as f64 * 0.1;
        text.push_str(&format!("2018-01-01T00:{m:02}:00,{g},{o}\n"));
        oracle_grid[(m / 15) as usize] += g;
    }
    let opts = LoadOptions { resample: true, ..Default::default() };
    let (s, r) = read_history(text.as_bytes(), "b", &opts).unwrap();
    assert!(r.resampled);
    assert_eq!(s.len(), 4);
    for (i, want) in oracle_grid.iter().enumerate() {
        assert!((s.channel("grid").unwrap()[i] - want / 15.0).abs() < 1e-12);
    }
}

fn arb_series() -> impl Strategy<Value = EnergySeries> {
    (1usize..200, 1usize..5).prop_flat_map(|(n, k)| {
        (
            proptest::collection::vec(-50.0f64..50.0, n),
            proptest::collection::vec(proptest::collection::vec(0.0f64..20.0, n), k),
            0u32..3000,
        )
            .prop_map(|(grid, apps, day)| {
                let start = NaiveDate::from_ymd_opt(2018, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap()
                    + chrono::Duration::minutes(15 * day as i64);
                let mut s = EnergySeries::new("p", start).with_channel("grid", ChannelRole::Grid, grid);
                for (i, a) in apps.into_iter().enumerate() {
                    s.push_channel(&format!("appliance {i}"), ChannelRole::Appliance, a);
                }
                s
            })
    })
}

proptest! {
    #[test]
    fn save_then_load_is_identity(s in arb_series()) {
        let text = history_to_string(&s);
        let (back, _) = read_history(text.as_bytes(), "p", &LoadOptions::default()).unwrap();
        prop_assert_eq!(back, s);
    }
}
