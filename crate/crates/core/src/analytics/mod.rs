//! Energy analytics over a series. Every public result is in kWh.

mod forecast;

use std::cmp::Ordering;
use std::ops::Range;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use forecast::{forecast, forecast_values, linear_fit, moving_average, FitDiagnostics, ForecastMethod, ForecastResult};

use crate::series::{ChannelRole, EndUse, EnergySeries};
use crate::units::{Energy, INTERVAL_HOURS};
use crate::window::{Window, WindowError};

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticsError {
    #[error("unknown channel {0:?}")]
    UnknownChannel(String),
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error("empty breakdown")]
    EmptyBreakdown,
    #[error("no generation channel")]
    NoGeneration,
    #[error("insufficient history: need {needed} points, have {have}")]
    InsufficientHistory { needed: usize, have: usize },
    #[error("k must be between 1 and 24, got {0}")]
    BadK(usize),
    #[error("horizon must be at least 1")]
    BadHorizon,
}

/// Per-sample energy (kW × 0.25 h).
pub fn to_energy(series: &EnergySeries, channel: &str) -> Result<Vec<f64>, AnalyticsError> {
    let samples = series.channel(channel).ok_or_else(|| AnalyticsError::UnknownChannel(channel.to_string()))?;
    Ok(samples.iter().map(|kw| kw * INTERVAL_HOURS).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Interval,
    Hourly,
    Daily,
    Monthly,
}

impl Granularity {
    fn bucket_start(self, t: NaiveDateTime) -> NaiveDateTime {
        let midnight = |d: NaiveDate| d.and_hms_opt(0, 0, 0).unwrap_or_default();
        match self {
            Granularity::Interval => t,
            Granularity::Hourly => t.date().and_hms_opt(t.hour(), 0, 0).unwrap_or(t),
            Granularity::Daily => midnight(t.date()),
            Granularity::Monthly => midnight(t.date().with_day(1).unwrap_or(t.date())),
        }
    }

    /// Number of 15-minute intervals in a full bucket starting at `start`.
    fn full_len(self, start: NaiveDateTime) -> usize {
        match self {
            Granularity::Interval => 1,
            Granularity::Hourly => 4,
            Granularity::Daily => 96,
            Granularity::Monthly => {
                let d = start.date();
                let next = if d.month() == 12 {
                    NaiveDate::from_ymd_opt(d.year() + 1, 1, 1)
                } else {
                    NaiveDate::from_ymd_opt(d.year(), d.month() + 1, 1)
                };
                next.map_or(0, |n| (n - d).num_days() as usize * 96)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "channel", rename_all = "snake_case")]
pub enum Scope {
    Channel(String),
    TotalConsumption,
    NetGrid,
}

impl Scope {
    /// Exact per-interval energies for the scope.
    pub fn energies(&self, series: &EnergySeries) -> Result<Vec<Energy>, AnalyticsError> {
        match self {
            Scope::Channel(name) => channel_energy(series, name),
            Scope::NetGrid => {
                let g = series.grid_channel().ok_or_else(|| AnalyticsError::UnknownChannel("grid".into()))?;
                channel_energy(series, g)
            }
            Scope::TotalConsumption => {
                let mut total = vec![Energy::ZERO; series.len()];
                for name in series.consumption_channels() {
                    for (acc, e) in total.iter_mut().zip(channel_energy(series, name)?) {
                        *acc += e;
                    }
                }
                Ok(total)
            }
        }
    }
}

/// Exact per-interval energy of one channel.
pub fn channel_energy(series: &EnergySeries, channel: &str) -> Result<Vec<Energy>, AnalyticsError> {
    let samples = series.channel(channel).ok_or_else(|| AnalyticsError::UnknownChannel(channel.to_string()))?;
    Ok(samples.iter().map(|&kw| Energy::from_interval_kw(kw)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub start: NaiveDateTime,
    pub energy: Energy,
    pub intervals: usize,
    /// True when the bucket is cut short by the window edge.
    pub partial: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateView {
    pub granularity: Granularity,
    pub scope: Scope,
    pub buckets: Vec<Bucket>,
}

impl AggregateView {
    pub fn total(&self) -> Energy {
        self.buckets.iter().map(|b| b.energy).sum()
    }

    pub fn values_kwh(&self) -> Vec<f64> {
        self.buckets.iter().map(|b| b.energy.kwh()).collect()
    }
}

/// Sums energy into calendar buckets. Additivity across granularities is exact.
pub fn aggregate(series: &EnergySeries, granularity: Granularity, scope: &Scope, window: &Window) -> Result<AggregateView, AnalyticsError> {
    let range = window.resolve(series)?;
    let energies = scope.energies(series)?;
    Ok(AggregateView { granularity, scope: scope.clone(), buckets: bucketize(series, &energies, range, granularity) })
}

fn bucketize(series: &EnergySeries, energies: &[Energy], range: Range<usize>, g: Granularity) -> Vec<Bucket> {
    let mut buckets: Vec<Bucket> = Vec::new();
    for i in range {
        let start = g.bucket_start(series.timestamp(i));
        match buckets.last_mut() {
            Some(b) if b.start == start => {
                b.energy += energies[i];
                b.intervals += 1;
            }
            _ => buckets.push(Bucket { start, energy: energies[i], intervals: 1, partial: false }),
        }
    }
    for b in &mut buckets {
        b.partial = b.intervals < g.full_len(b.start);
    }
    buckets
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HourRank {
    pub hour: u32,
    /// Mean energy used in this hour of day, per day.
    pub mean_kwh: f64,
    #[serde(skip)]
    total: Energy,
    #[serde(skip)]
    samples: usize,
}

impl HourRank {
    fn cmp_mean(&self, other: &HourRank) -> Ordering {
        // total/samples compared exactly by cross-multiplication.
        let a = self.total.nano_kwh() as i128 * other.samples as i128;
        let b = other.total.nano_kwh() as i128 * self.samples as i128;
        a.cmp(&b)
    }
}

/// Hour-of-day profile ranked by mean energy; ties go to the earlier hour.
pub fn hour_profile(series: &EnergySeries, scope: &Scope, window: &Window) -> Result<Vec<HourRank>, AnalyticsError> {
    let range = window.resolve(series)?;
    let energies = scope.energies(series)?;
    let mut totals = [Energy::ZERO; 24];
    let mut counts = [0usize; 24];
    for i in range {
        let h = series.timestamp(i).hour() as usize;
        totals[h] += energies[i];
        counts[h] += 1;
    }
    Ok((0..24)
        .filter(|&h| counts[h] > 0)
        .map(|h| HourRank {
            hour: h as u32,
            // samples per hour-of-day / 4 = days observed.
            mean_kwh: totals[h].kwh() * 4.0 / counts[h] as f64,
            total: totals[h],
            samples: counts[h],
        })
        .collect())
}

pub fn peak_hours(series: &EnergySeries, scope: &Scope, k: usize, window: &Window) -> Result<Vec<HourRank>, AnalyticsError> {
    if !(1..=24).contains(&k) {
        return Err(AnalyticsError::BadK(k));
    }
    let mut ranks = hour_profile(series, scope, window)?;
    ranks.sort_by(|a, b| b.cmp_mean(a).then(a.hour.cmp(&b.hour)));
    ranks.truncate(k);
    Ok(ranks)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub total: Energy,
    pub energy: IndexMap<String, Energy>,
    pub shares: IndexMap<String, f64>,
}

impl Breakdown {
    /// Channels sorted by descending energy (stable for ties).
    pub fn ranked(&self) -> Vec<(&str, Energy)> {
        let mut v: Vec<(&str, Energy)> = self.energy.iter().map(|(k, e)| (k.as_str(), *e)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1));
        v
    }
}

/// Share of total consumption per appliance/EV channel.
pub fn device_breakdown(series: &EnergySeries, window: &Window) -> Result<Breakdown, AnalyticsError> {
    let range = window.resolve(series)?;
    let mut energy = IndexMap::new();
    for name in series.consumption_channels() {
        let e: Energy = channel_energy(series, name)?[range.clone()].iter().sum();
        energy.insert(name.to_string(), e);
    }
    let total: Energy = energy.values().sum();
    if total <= Energy::ZERO {
        return Err(AnalyticsError::EmptyBreakdown);
    }
    let t = total.nano_kwh() as f64;
    let shares = energy.iter().map(|(k, e)| (k.clone(), e.nano_kwh() as f64 / t)).collect();
    Ok(Breakdown { total, energy, shares })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfConsumption {
    pub generated: Energy,
    pub exported: Energy,
    pub self_consumed: Energy,
}

impl SelfConsumption {
    pub fn self_consumption_ratio(&self) -> Option<f64> {
        (!self.generated.is_zero()).then(|| self.self_consumed.kwh() / self.generated.kwh())
    }
}

pub fn self_consumption(series: &EnergySeries, window: &Window) -> Result<SelfConsumption, AnalyticsError> {
    let range = window.resolve(series)?;
    let gen = series.generation_channel().ok_or(AnalyticsError::NoGeneration)?;
    let generated: Energy = channel_energy(series, gen)?[range.clone()].iter().sum();
    let grid = series.grid_channel().ok_or_else(|| AnalyticsError::UnknownChannel("grid".into()))?;
    let exported: Energy = series.channel(grid).unwrap_or(&[])[range]
        .iter()
        .map(|&kw| Energy::from_interval_kw((-kw).max(0.0)))
        .sum();
    let self_consumed = (generated - exported).max(Energy::ZERO);
    Ok(SelfConsumption { generated, exported, self_consumed })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Anomaly {
    pub index: usize,
    pub timestamp: NaiveDateTime,
    pub kw: f64,
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnomalyReport {
    pub channel: String,
    pub mean_kw: f64,
    pub std_kw: f64,
    pub threshold: f64,
    pub anomalies: Vec<Anomaly>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Flags samples with |z| > threshold, z against the window's mean and population σ.
pub fn detect_anomalies(series: &EnergySeries, channel: &str, z_threshold: f64, window: &Window) -> Result<AnomalyReport, AnalyticsError> {
    let range = window.resolve(series)?;
    let samples = series.channel(channel).ok_or_else(|| AnalyticsError::UnknownChannel(channel.to_string()))?;
    let xs = &samples[range.clone()];
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    let mut report = AnomalyReport {
        channel: channel.to_string(),
        mean_kw: mean,
        std_kw: std,
        threshold: z_threshold,
        anomalies: Vec::new(),
        warning: None,
    };
    if xs.len() < 2 || std == 0.0 {
        report.warning = Some("zero variance: no anomalies can be scored".into());
        return Ok(report);
    }
    for (offset, &kw) in xs.iter().enumerate() {
        let z = (kw - mean) / std;
        if z.abs() > z_threshold {
            let index = range.start + offset;
            report.anomalies.push(Anomaly { index, timestamp: series.timestamp(index), kw, z });
        }
    }
    Ok(report)
}

/// Daily × hourly energy matrix (rows are days, 24 columns).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HourDayMatrix {
    pub days: Vec<NaiveDate>,
    pub values_kwh: Vec<[f64; 24]>,
}

pub fn hour_day_matrix(series: &EnergySeries, scope: &Scope, window: &Window) -> Result<HourDayMatrix, AnalyticsError> {
    let view = aggregate(series, Granularity::Hourly, scope, window)?;
    let mut days: Vec<NaiveDate> = Vec::new();
    let mut values: Vec<[f64; 24]> = Vec::new();
    for b in &view.buckets {
        let d = b.start.date();
        if days.last() != Some(&d) {
            days.push(d);
            values.push([0.0; 24]);
        }
        if let Some(row) = values.last_mut() {
            row[b.start.hour() as usize] = b.energy.kwh();
        }
    }
    Ok(HourDayMatrix { days, values_kwh: values })
}

/// Maps a user's term ("AC", "furnace", "my car", "oven") to channel names.
pub fn resolve_channel(series: &EnergySeries, term: &str) -> Result<Vec<String>, AnalyticsError> {
    let t = term.trim().to_ascii_lowercase();
    let t = t.trim_start_matches("my ").trim_start_matches("the ").trim();
    if let Some(name) = series.channels.keys().find(|k| k.eq_ignore_ascii_case(t)) {
        return Ok(vec![name.clone()]);
    }
    let by_end_use = |eu: EndUse| -> Vec<String> {
        series.channels.keys().filter(|k| series.end_use(k) == eu).cloned().collect()
    };
    let by_role = |r: ChannelRole| -> Vec<String> {
        series.channels.keys().filter(|k| series.role(k) == Some(r)).cloned().collect()
    };
    let found = match t {
        "ac" | "a/c" | "air conditioning" | "air conditioner" | "cooling" | "air" => by_end_use(EndUse::Cooling),
        "heating" | "heat" | "furnace" | "heater" => by_end_use(EndUse::Heating),
        "water heater" | "water heating" | "hot water" => by_end_use(EndUse::WaterHeating),
        "car" | "ev" | "car charger" | "ev charger" | "electric vehicle" | "charging" => by_role(ChannelRole::EvCharger),
        "pv" | "solar" | "pv panels" | "solar panels" | "panels" => by_role(ChannelRole::Generation),
        "grid" => by_role(ChannelRole::Grid),
        _ => series
            .channels
            .keys()
            .filter(|k| k.to_ascii_lowercase().contains(t))
            .cloned()
            .collect(),
    };
    if found.is_empty() {
        Err(AnalyticsError::UnknownChannel(term.to_string()))
    } else {
        Ok(found)
    }
}
