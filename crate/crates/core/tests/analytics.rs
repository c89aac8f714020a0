use bems_core::analytics::{
    aggregate, detect_anomalies, device_breakdown, forecast, linear_fit, moving_average, peak_hours, self_consumption,
    to_energy, ForecastMethod, Granularity, Scope,
};
use bems_core::ingestion::synth_month;
use bems_core::{BuildingProfile, ChannelRole, Energy, EnergySeries, Window};
use chrono::{NaiveDate, Timelike};
use proptest::prelude::*;

fn month(seed: u64) -> EnergySeries {
    let p = BuildingProfile::preset("TX-01").unwrap();
    synth_month(seed, &p, 31, p.season).unwrap()
}

/// Energy of one sample from whole-watt data, computed without touching the library:
/// milli-kW × 0.25 h = milli × 250_000 nano-kWh.
fn nano(kw: f64) -> i64 {
    (kw * 1000.0).round() as i64 * 250_000
}

#[test]
fn to_energy_sum_matches_raw_file_sum() {
    let s = month(7);
    for name in s.channels.keys() {
        let raw = s.channel(name).unwrap();
        let e = to_energy(&s, name).unwrap();
        for (kw, kwh) in raw.iter().zip(&e) {
            assert_eq!(*kwh, kw * 0.25);
        }
        let direct: i64 = raw.iter().map(|&kw| nano(kw)).sum();
        let total = aggregate(&s, Granularity::Monthly, &Scope::Channel(name.clone()), &Window::ALL).unwrap().total();
        assert_eq!(total.nano_kwh(), direct, "{name}");
    }
}

#[test]
fn hourly_grid_matches_brute_force() {
    let s = month(7);
    let grid = s.channel("Electrical Grid").unwrap();
    let view = aggregate(&s, Granularity::Hourly, &Scope::NetGrid, &Window::ALL).unwrap();
    assert_eq!(view.buckets.len(), 31 * 24);
    for (h, b) in view.buckets.iter().enumerate() {
        let want: i64 = grid[h * 4..h * 4 + 4].iter().map(|&kw| nano(kw)).sum();
        assert_eq!(b.energy.nano_kwh(), want);
        assert_eq!(b.start, s.timestamp(h * 4));
        assert!(!b.partial);
    }
}

#[test]
fn coarser_granularity_is_sum_of_finer() {
    let s = month(3);
    for scope in [Scope::TotalConsumption, Scope::NetGrid, Scope::Channel("Microwave".into())] {
        let interval = aggregate(&s, Granularity::Interval, &scope, &Window::ALL).unwrap();
        let hourly = aggregate(&s, Granularity::Hourly, &scope, &Window::ALL).unwrap();
        let daily = aggregate(&s, Granularity::Daily, &scope, &Window::ALL).unwrap();
        let monthly = aggregate(&s, Granularity::Monthly, &scope, &Window::ALL).unwrap();
        for (d, day) in daily.buckets.iter().enumerate() {
            let sum: Energy = hourly.buckets[d * 24..d * 24 + 24].iter().map(|b| b.energy).sum();
            assert_eq!(day.energy, sum);
        }
        for (h, hour) in hourly.buckets.iter().enumerate() {
            let sum: Energy = interval.buckets[h * 4..h * 4 + 4].iter().map(|b| b.energy).sum();
            assert_eq!(hour.energy, sum);
        }
        assert_eq!(monthly.buckets.len(), 1);
        assert_eq!(monthly.total(), daily.total());
    }
    let per_channel: Energy = s
        .consumption_channels()
        .map(|c| aggregate(&s, Granularity::Monthly, &Scope::Channel(c.into()), &Window::ALL).unwrap().total())
        .sum();
    let total = aggregate(&s, Granularity::Monthly, &Scope::TotalConsumption, &Window::ALL).unwrap().total();
    assert_eq!(per_channel, total);
}

#[test]
fn peak_hours_match_24_bin_means() {
    let s = month(7);
    let mut bins = [0i64; 24];
    for name in s.consumption_channels() {
        for (i, &kw) in s.channel(name).unwrap().iter().enumerate() {
            bins[s.timestamp(i).hour() as usize] += nano(kw);
        }
    }
    let mut order: Vec<usize> = (0..24).collect();
    order.sort_by(|&a, &b| bins[b].cmp(&bins[a]).then(a.cmp(&b)));
    let ranks = peak_hours(&s, &Scope::TotalConsumption, 24, &Window::ALL).unwrap();
    let got: Vec<usize> = ranks.iter().map(|r| r.hour as usize).collect();
    assert_eq!(got, order);
    for r in &ranks {
        let mean = bins[r.hour as usize] as f64 / 1e9 / 31.0;
        assert!((r.mean_kwh - mean).abs() < 1e-9);
    }
}

#[test]
fn breakdown_matches_channel_sums() {
    let s = month(7);
    let b = device_breakdown(&s, &Window::ALL).unwrap();
    assert!(!b.shares.contains_key("Electrical Grid"));
    assert!(!b.shares.contains_key("Photovoltaic System"));
    assert_eq!(b.shares.len(), 16);
    let total: i64 = s.consumption_channels().flat_map(|c| s.channel(c).unwrap().iter().map(|&kw| nano(kw))).sum();
    assert_eq!(b.total.nano_kwh(), total);
    for (name, share) in &b.shares {
        let own: i64 = s.channel(name).unwrap().iter().map(|&kw| nano(kw)).sum();
        assert!((share - own as f64 / total as f64).abs() < 1e-15);
        assert!(*share >= 0.0);
    }
    assert!((b.shares.values().sum::<f64>() - 1.0).abs() <= 1e-9);
}

#[test]
fn ols_matches_normal_equations() {
    let s = month(7);
    let daily = aggregate(&s, Granularity::Daily, &Scope::TotalConsumption, &Window::ALL).unwrap().values_kwh();
    // Uncentered normal equations: [n Σt; Σt Σt²][a b]ᵀ = [Σy Σty]ᵀ.
    let n = daily.len() as f64;
    let (mut st, mut stt, mut sy, mut sty) = (0.0, 0.0, 0.0, 0.0);
    for (t, y) in daily.iter().enumerate() {
        let t = t as f64;
        st += t;
        stt += t * t;
        sy += y;
        sty += t * y;
    }
    let det = n * stt - st * st;
    let slope = (n * sty - st * sy) / det;
    let intercept = (stt * sy - st * sty) / det;
    let (got_slope, got_intercept) = linear_fit(&daily).unwrap();
    assert!((got_slope - slope).abs() <= 1e-9 * slope.abs().max(1e-3));
    assert!((got_intercept - intercept).abs() <= 1e-9 * intercept.abs());
    let f = forecast(&s, &Scope::TotalConsumption, Granularity::Daily, ForecastMethod::LinearRegression, 30, &Window::ALL).unwrap();
    assert_eq!(f.predicted.len(), 30);
    assert!((f.predicted[0] - (intercept + slope * 31.0)).abs() < 1e-9 * f.predicted[0].abs());
}

#[test]
fn self_consumption_matches_per_interval() {
    let s = month(7);
    let grid = s.channel("Electrical Grid").unwrap();
    let gen = s.channel("Photovoltaic System").unwrap();
    let generated: i64 = gen.iter().map(|&kw| nano(kw)).sum();
    let exported: i64 = grid.iter().filter(|&&g| g < 0.0).map(|&g| nano(-g)).sum();
    let sc = self_consumption(&s, &Window::ALL).unwrap();
    assert_eq!(sc.generated.nano_kwh(), generated);
    assert_eq!(sc.exported.nano_kwh(), exported);
    assert_eq!(sc.self_consumed.nano_kwh(), generated - exported);
    assert!(exported > 0 && exported < generated);
}

#[test]
fn anomalies_match_direct_z_scores() {
    let s = month(7);
    for name in ["Microwave", "Refrigerator", "Electrical Grid"] {
        let xs = s.channel(name).unwrap();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let sd = (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
        let want: Vec<usize> = xs
            .iter()
            .enumerate()
            .filter(|(_, x)| ((*x - mean) / sd).abs() > 4.0)
            .map(|(i, _)| i)
            .collect();
        let got: Vec<usize> = detect_anomalies(&s, name, 4.0, &Window::ALL).unwrap().anomalies.iter().map(|a| a.index).collect();
        assert_eq!(got, want, "{name}");
    }
}

#[test]
fn windows_restrict_every_operation() {
    let s = month(7);
    let day = Window::day(NaiveDate::from_ymd_opt(2018, 1, 5).unwrap());
    let v = aggregate(&s, Granularity::Hourly, &Scope::TotalConsumption, &day).unwrap();
    assert_eq!(v.buckets.len(), 24);
    let whole = aggregate(&s, Granularity::Daily, &Scope::TotalConsumption, &Window::ALL).unwrap();
    assert_eq!(v.total(), whole.buckets[4].energy);
    assert!(aggregate(&s, Granularity::Hourly, &Scope::TotalConsumption, &Window::day(NaiveDate::from_ymd_opt(2018, 3, 1).unwrap())).is_err());
}

fn milli_series(hours: Vec<Vec<u32>>) -> EnergySeries {
    let start = NaiveDate::from_ymd_opt(2018, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let samples: Vec<f64> = hours.into_iter().flatten().map(|m| m as f64 / 1000.0).collect();
    EnergySeries::new("p", start)
        .with_channel("grid", ChannelRole::Grid, samples.clone())
        .with_channel("load", ChannelRole::Appliance, samples)
}

proptest! {
    #[test]
    fn peak_ranking_is_scale_invariant(
        days in proptest::collection::vec(proptest::collection::vec(0u32..5000, 96), 1..4),
        factor in 1u32..200,
        k in 1usize..=24,
    ) {
        let base = milli_series(days.clone());
        let scaled = milli_series(days.into_iter().map(|d| d.into_iter().map(|m| m * factor).collect()).collect());
        let a: Vec<u32> = peak_hours(&base, &Scope::TotalConsumption, k, &Window::ALL).unwrap().iter().map(|r| r.hour).collect();
        let b: Vec<u32> = peak_hours(&scaled, &Scope::TotalConsumption, k, &Window::ALL).unwrap().iter().map(|r| r.hour).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn moving_average_stays_inside_its_window(
        xs in proptest::collection::vec(-1e3f64..1e3, 1..300),
        w in 1usize..300,
    ) {
        let w = w.min(xs.len());
        let (p, _) = moving_average(&xs, w, 3).unwrap();
        let tail = &xs[xs.len() - w..];
        let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for v in p {
            prop_assert!(v >= lo && v <= hi);
        }
    }

    #[test]
    fn constant_moving_average_is_that_constant(c in 0.0f64..100.0, n in 1usize..400) {
        let (p, _) = moving_average(&vec![c; n], n, 2).unwrap();
        prop_assert_eq!(p, vec![c, c]);
    }

    #[test]
    fn ols_recovers_exact_lines(a in -50.0f64..50.0, b in 0.01f64..5.0, n in 2usize..500) {
        let ys: Vec<f64> = (0..n).map(|t| a + b * t as f64).collect();
        let (slope, intercept) = linear_fit(&ys).unwrap();
        prop_assert!((slope - b).abs() <= 1e-9 * b);
        prop_assert!((intercept - a).abs() <= 1e-9 * a.abs().max(b * n as f64));
    }

    #[test]
    fn breakdown_shares_sum_to_one(seed in 0u64..500) {
        let b = device_breakdown(&month(seed), &Window::ALL).unwrap();
        prop_assert!((b.shares.values().sum::<f64>() - 1.0).abs() <= 1e-9);
    }
}
