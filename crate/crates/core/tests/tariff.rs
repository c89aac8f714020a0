use std::time::Instant;

use bems_core::analytics::{forecast, ForecastMethod, Granularity, Scope};
use bems_core::ingestion::synth_month;
use bems_core::rates::{Band, RateSchedule};
use bems_core::tariff::{cost, cost_forecast};
use bems_core::{BuildingProfile, ChannelRole, EnergySeries, Money, Window};
use chrono::{NaiveDate, Timelike};
use proptest::prelude::*;

fn round_half_even(num: i128, den: i128) -> i128 {
    let q = num.div_euclid(den);
    let r = num.rem_euclid(den);
    if 2 * r > den || (2 * r == den && q % 2 == 1) {
        q + 1
    } else {
        q
    }
}

struct Oracle {
    gross: i128,
    credit: i128,
    peak: i128,
    ev_savings: i128,
}

/// Per-interval recomputation with hard-coded windows: peak [17, 20), EV discount [0, 6).
fn brute_force(s: &EnergySeries, r: &RateSchedule) -> Oracle {
    let mut o = Oracle { gross: 0, credit: 0, peak: 0, ev_savings: 0 };
    for i in 0..s.len() {
        let hour = s.timestamp(i).hour();
        let peak = (17..20).contains(&hour);
        let band_rate = if peak { r.peak_rate.micros() } else { r.off_peak_rate.micros() } as i128;
        for (name, samples) in &s.channels {
            let role = s.role(name).unwrap();
            let nano = (samples[i] * 1000.0).round() as i128 * 250_000;
            match role {
                ChannelRole::Appliance | ChannelRole::EvCharger => {
                    let rate = if role == ChannelRole::EvCharger && hour < 6 {
                        r.ev_discounted_rate.micros() as i128
                    } else {
                        band_rate
                    };
                    let c = round_half_even(nano * rate, 1_000_000_000);
                    o.gross += c;
                    if peak {
                        o.peak += c;
                    }
                    if rate != band_rate {
                        o.ev_savings += round_half_even(nano * band_rate, 1_000_000_000) - c;
                    }
                }
                ChannelRole::Grid if nano < 0 => {
                    o.credit += round_half_even(-nano * r.export_credit.micros() as i128, 1_000_000_000);
                }
                _ => {}
            }
        }
    }
    o
}

fn random_rates(seed: u64) -> RateSchedule {
    let m = |x: u64| Money::from_micros(x as i64);
    RateSchedule {
        off_peak_rate: m(50_000 + seed * 1_237 % 100_000),
        peak_rate: m(150_000 + seed * 7_919 % 200_000),
        export_credit: m(seed * 3_571 % 90_000),
        ev_discounted_rate: m(seed * 911 % 60_000),
        ..RateSchedule::default()
    }
}

#[test]
fn fifty_random_months_match_brute_force_exactly() {
    let started = Instant::now();
    let presets = BuildingProfile::presets();
    for seed in 0..50u64 {
        let p = &presets[seed as usize % 4];
        let days = 28 + (seed % 4) as u32;
        let s = synth_month(1000 + seed, p, days, p.season).unwrap();
        let r = random_rates(seed);
        let b = cost(&s, &r, &Window::ALL).unwrap();
        let o = brute_force(&s, &r);
        assert_eq!(b.gross_total.micros() as i128, o.gross, "seed {seed}");
        assert_eq!(b.export_credit_total.micros() as i128, o.credit);
        assert_eq!(b.net_total.micros() as i128, o.gross - o.credit);
        assert_eq!(b.per_band[&Band::Peak].micros() as i128, o.peak);
        assert_eq!(b.ev_discount_savings.micros() as i128, o.ev_savings);
        let bands: Money = b.per_band.values().copied().sum();
        assert_eq!(bands, b.gross_total);
        assert!(b.export_credit_total >= Money::ZERO);
    }
    assert!(started.elapsed().as_secs_f64() < 10.0, "{:?}", started.elapsed());
}

#[test]
fn cost_forecast_composes_forecast_and_band_shares() {
    let p = BuildingProfile::preset("NY-01").unwrap();
    let s = synth_month(5, &p, 30, p.season).unwrap();
    let r = RateSchedule::default();
    let method = ForecastMethod::MovingAverage { window: 96 * 7 };
    let f = cost_forecast(&s, &r, method, 96 * 30, &Window::ALL).unwrap();
    let mut total = 0i128;
    for name in s.consumption_channels() {
        let pred = forecast(&s, &Scope::Channel(name.into()), Granularity::Interval, method, 96 * 30, &Window::ALL).unwrap();
        let e: i128 = pred.predicted.iter().map(|&k| (k.max(0.0) * 1e9).round() as i128).sum();
        // Historical energy per rate class for this channel.
        let ev = s.role(name) == Some(ChannelRole::EvCharger);
        let mut classes: std::collections::BTreeMap<i64, i128> = Default::default();
        for (i, &kw) in s.channel(name).unwrap().iter().enumerate() {
            let h = s.timestamp(i).hour();
            let rate = if ev && h < 6 {
                r.ev_discounted_rate
            } else if (17..20).contains(&h) {
                r.peak_rate
            } else {
                r.off_peak_rate
            };
            *classes.entry(rate.micros()).or_default() += (kw * 1000.0).round() as i128 * 250_000;
        }
        let denom: i128 = classes.values().sum();
        let mut remaining = e;
        let mut c = 0i128;
        let n = classes.len();
        for (k, (rate, part)) in classes.iter().enumerate() {
            let piece = if k + 1 == n { remaining } else { round_half_even(e * part, denom) };
            remaining -= piece;
            c += round_half_even(piece * *rate as i128, 1_000_000_000);
        }
        assert_eq!(f.per_channel[name].energy.nano_kwh() as i128, e, "{name}");
        assert_eq!(f.per_channel[name].cost.micros() as i128, c, "{name}");
        total += c;
    }
    assert_eq!(f.predicted_cost.micros() as i128, total);
}

fn two_channel(a: Vec<u32>, b: Vec<u32>, exported: Vec<u32>) -> (EnergySeries, EnergySeries, EnergySeries) {
    let start = NaiveDate::from_ymd_opt(2018, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let kw = |v: &[u32]| v.iter().map(|&m| m as f64 / 1000.0).collect::<Vec<f64>>();
    let grid = |v: &[u32]| v.iter().map(|&m| -(m as f64) / 1000.0).collect::<Vec<f64>>();
    let zero = vec![0.0; a.len()];
    let sa = EnergySeries::new("x", start)
        .with_channel("grid", ChannelRole::Grid, grid(&exported))
        .with_channel("a", ChannelRole::Appliance, kw(&a));
    let sb = EnergySeries::new("x", start)
        .with_channel("grid", ChannelRole::Grid, zero)
        .with_channel("b", ChannelRole::EvCharger, kw(&b));
    let both = EnergySeries::new("x", start)
        .with_channel("grid", ChannelRole::Grid, grid(&exported))
        .with_channel("a", ChannelRole::Appliance, kw(&a))
        .with_channel("b", ChannelRole::EvCharger, kw(&b));
    (sa, sb, both)
}

proptest! {
    #[test]
    fn cost_is_linear_over_disjoint_channels(
        (a, b, x) in (1usize..400).prop_flat_map(|n| (
            proptest::collection::vec(0u32..8000, n),
            proptest::collection::vec(0u32..8000, n),
            proptest::collection::vec(0u32..4000, n),
        )),
        seed in 0u64..1000,
    ) {
        let r = random_rates(seed);
        let (sa, sb, both) = two_channel(a, b, x);
        let ca = cost(&sa, &r, &Window::ALL).unwrap();
        let cb = cost(&sb, &r, &Window::ALL).unwrap();
        let cab = cost(&both, &r, &Window::ALL).unwrap();
        prop_assert_eq!(ca.net_total + cb.net_total, cab.net_total);
        prop_assert_eq!(ca.gross_total + cb.gross_total, cab.gross_total);
        prop_assert!(cab.export_credit_total >= Money::ZERO);
        prop_assert_eq!(cab.net_total, cab.gross_total - cab.export_credit_total);
    }

    #[test]
    fn band_sums_do_not_depend_on_order(seed in 0u64..200) {
        let p = BuildingProfile::preset("NY-02").unwrap();
        let s = synth_month(seed, &p, 30, p.season).unwrap();
        let b = cost(&s, &RateSchedule::default(), &Window::ALL).unwrap();
        let forward: Money = b.per_channel.values().map(|c| c.cost).sum();
        let backward: Money = b.per_channel.values().rev().map(|c| c.cost).sum();
        prop_assert_eq!(forward, backward);
        prop_assert_eq!(forward, b.per_band.values().copied().sum::<Money>());
    }
}
