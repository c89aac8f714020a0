//! The typed analysis catalogue behind the `analysis.run` tool. Each request names one
//! analytics or tariff operation; results are plain JSON in kWh and currency units.

use bems_core::analytics::{
    self, aggregate, device_breakdown, forecast_values, hour_day_matrix, hour_profile, peak_hours, resolve_channel,
    self_consumption, AnalyticsError, Bucket, ForecastMethod, Granularity, Scope,
};
use bems_core::tariff::{self, TariffError};
use bems_core::{Band, Energy, EnergySeries, Money, RateSchedule, Window};
use chrono::Duration;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::chart::{ChartArtifact, ChartKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisKind {
    Aggregate,
    PeakHours,
    DeviceBreakdown,
    Cost,
    ChannelCost,
    DailyCost,
    CostForecast,
    Forecast,
    SelfConsumption,
    PvValue,
    PvSavingsForecast,
    ShiftSavings,
    Anomalies,
    Heatmap,
}

impl AnalysisKind {
    pub const ALL: [AnalysisKind; 14] = [
        AnalysisKind::Aggregate,
        AnalysisKind::PeakHours,
        AnalysisKind::DeviceBreakdown,
        AnalysisKind::Cost,
        AnalysisKind::ChannelCost,
        AnalysisKind::DailyCost,
        AnalysisKind::CostForecast,
        AnalysisKind::Forecast,
        AnalysisKind::SelfConsumption,
        AnalysisKind::PvValue,
        AnalysisKind::PvSavingsForecast,
        AnalysisKind::ShiftSavings,
        AnalysisKind::Anomalies,
        AnalysisKind::Heatmap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AnalysisKind::Aggregate => "aggregate",
            AnalysisKind::PeakHours => "peak_hours",
            AnalysisKind::DeviceBreakdown => "device_breakdown",
            AnalysisKind::Cost => "cost",
            AnalysisKind::ChannelCost => "channel_cost",
            AnalysisKind::DailyCost => "daily_cost",
            AnalysisKind::CostForecast => "cost_forecast",
            AnalysisKind::Forecast => "forecast",
            AnalysisKind::SelfConsumption => "self_consumption",
            AnalysisKind::PvValue => "pv_value",
            AnalysisKind::PvSavingsForecast => "pv_savings_forecast",
            AnalysisKind::ShiftSavings => "shift_savings",
            AnalysisKind::Anomalies => "anomalies",
            AnalysisKind::Heatmap => "heatmap",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    MovingAverage,
    LinearRegression,
}

/// One analysis request. Fields a kind does not use are ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRequest {
    pub kind: AnalysisKind,
    /// "total", "grid", or a channel term such as "AC", "my car" or "Oven".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scope: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<String>,
    /// Window keyword understood by [`Window::parse`]; the whole history by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub granularity: Option<Granularity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodName>,
    /// Moving-average window, in buckets (days for cost and PV forecasts).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ma_window: Option<usize>,
    /// Forecast horizon, in buckets (days for cost and PV forecasts).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart: Option<ChartKind>,
}

impl AnalysisRequest {
    pub fn new(kind: AnalysisKind) -> Self {
        AnalysisRequest {
            kind,
            scope: None,
            channel: None,
            window: None,
            granularity: None,
            k: None,
            method: None,
            ma_window: None,
            horizon: None,
            z: None,
            chart: None,
        }
    }

    /// The forecast method this request resolves to, with defaults applied.
    pub fn forecast_method(&self, default_window: usize) -> ForecastMethod {
        match self.method.unwrap_or(MethodName::MovingAverage) {
            MethodName::LinearRegression => ForecastMethod::LinearRegression,
            MethodName::MovingAverage => ForecastMethod::MovingAverage { window: self.ma_window.unwrap_or(default_window) },
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Tariff(#[from] TariffError),
}

impl AnalysisError {
    pub fn code(&self) -> &'static str {
        match self {
            AnalysisError::InvalidArgument(_) => "invalid_argument",
            AnalysisError::Analytics(AnalyticsError::UnknownChannel(_)) => "unknown_channel",
            AnalysisError::Analytics(AnalyticsError::Window(_)) | AnalysisError::Tariff(TariffError::Window(_)) => {
                "invalid_window"
            }
            _ => "analysis_failed",
        }
    }
}

impl From<bems_core::window::WindowError> for AnalysisError {
    fn from(e: bems_core::window::WindowError) -> Self {
        AnalysisError::Analytics(AnalyticsError::Window(e))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisOutput {
    pub result: Value,
    pub artifact: Option<ChartArtifact>,
}

/// Days of 15-minute intervals.
const DAY: usize = 96;

fn money(m: Money) -> f64 {
    m.as_decimal()
}

fn kwh(e: Energy) -> f64 {
    e.kwh()
}

/// A scope term resolved to the series scopes it covers.
struct Resolved {
    label: String,
    scopes: Vec<Scope>,
    channels: Vec<String>,
}

fn resolve_scope(series: &EnergySeries, term: Option<&str>) -> Result<Resolved, AnalysisError> {
    let t = term.unwrap_or("total").trim();
    match t.to_ascii_lowercase().as_str() {
        "" | "total" | "all" | "consumption" | "total consumption" | "home" | "house" => Ok(Resolved {
            label: "total consumption".into(),
            scopes: vec![Scope::TotalConsumption],
            channels: series.consumption_channels().map(String::from).collect(),
        }),
        "net" | "net grid" | "grid" => {
            let g = series.grid_channel().ok_or_else(|| AnalyticsError::UnknownChannel("grid".into()))?;
            Ok(Resolved { label: g.to_string(), scopes: vec![Scope::NetGrid], channels: vec![g.to_string()] })
        }
        _ => {
            let channels = resolve_channel(series, t)?;
            Ok(Resolved {
                label: channels.join(" + "),
                scopes: channels.iter().map(|c| Scope::Channel(c.clone())).collect(),
                channels,
            })
        }
    }
}

/// Buckets of the summed scopes. All scopes share bucket boundaries, so the sum is exact.
fn summed_buckets(series: &EnergySeries, r: &Resolved, g: Granularity, window: &Window) -> Result<Vec<Bucket>, AnalysisError> {
    let mut out: Vec<Bucket> = Vec::new();
    for scope in &r.scopes {
        let view = aggregate(series, g, scope, window)?;
        if out.is_empty() {
            out = view.buckets;
        } else {
            for (acc, b) in out.iter_mut().zip(view.buckets) {
                acc.energy += b.energy;
            }
        }
    }
    Ok(out)
}

fn bucket_label(b: &Bucket, g: Granularity) -> String {
    let fmt = match g {
        Granularity::Interval => "%Y-%m-%d %H:%M",
        Granularity::Hourly => "%Y-%m-%d %H:00",
        Granularity::Daily => "%Y-%m-%d",
        Granularity::Monthly => "%Y-%m",
    };
    b.start.format(fmt).to_string()
}

fn window_of(series: &EnergySeries, req: &AnalysisRequest) -> Result<Window, AnalysisError> {
    Ok(Window::parse(req.window.as_deref().unwrap_or("all"), series)?)
}

fn need_chart(req: &AnalysisRequest, allowed: &[ChartKind]) -> Result<Option<ChartKind>, AnalysisError> {
    match req.chart {
        Some(k) if !allowed.contains(&k) => Err(AnalysisError::InvalidArgument(format!(
            "{} cannot be drawn as a {:?} chart",
            req.kind.name(),
            k
        ))),
        other => Ok(other),
    }
}

/// Runs one analysis against the series and tariff.
pub fn run_analysis(series: &EnergySeries, rates: &RateSchedule, req: &AnalysisRequest) -> Result<AnalysisOutput, AnalysisError> {
    let window = window_of(series, req)?;
    match req.kind {
        AnalysisKind::Aggregate => {
            let chart = need_chart(req, &[ChartKind::Bar, ChartKind::Line])?;
            let r = resolve_scope(series, req.scope.as_deref().or(req.channel.as_deref()))?;
            let g = req.granularity.unwrap_or(Granularity::Daily);
            let buckets = summed_buckets(series, &r, g, &window)?;
            let total: Energy = buckets.iter().map(|b| b.energy).sum();
            let max = buckets.iter().max_by(|a, b| a.energy.cmp(&b.energy).then(b.start.cmp(&a.start)));
            let min = buckets.iter().min_by(|a, b| a.energy.cmp(&b.energy).then(a.start.cmp(&b.start)));
            let mut result = json!({
                "scope": r.label,
                "channels": r.channels,
                "granularity": g,
                "window": window.to_string(),
                "total_kwh": kwh(total),
                "bucket_count": buckets.len(),
                "mean_kwh": if buckets.is_empty() { 0.0 } else { kwh(total) / buckets.len() as f64 },
                "max": max.map(|b| json!({"label": bucket_label(b, g), "kwh": kwh(b.energy)})),
                "min": min.map(|b| json!({"label": bucket_label(b, g), "kwh": kwh(b.energy)})),
            });
            if buckets.len() <= 62 {
                result["buckets"] = buckets
                    .iter()
                    .map(|b| json!({"label": bucket_label(b, g), "kwh": kwh(b.energy), "partial": b.partial}))
                    .collect();
            }
            let artifact = chart.map(|k| {
                ChartArtifact::new(k, format!("Energy use, {}", r.label), "period", "kWh")
                    .with_labels(buckets.iter().map(|b| bucket_label(b, g)).collect())
                    .with_series(r.label.clone(), buckets.iter().map(|b| kwh(b.energy)).collect())
            });
            Ok(AnalysisOutput { result, artifact })
        }
        AnalysisKind::PeakHours => {
            let chart = need_chart(req, &[ChartKind::Bar, ChartKind::Line])?;
            let k = req.k.unwrap_or(3);
            let r = resolve_scope(series, req.scope.as_deref())?;
            let [scope] = r.scopes.as_slice() else {
                return Err(AnalysisError::InvalidArgument(format!("{:?} covers several channels", r.label)));
            };
            let ranked = peak_hours(series, scope, k, &window)?;
            let hours: Vec<Value> = ranked
                .iter()
                .map(|h| json!({"hour": h.hour, "label": format!("{:02}:00", h.hour), "mean_kwh": h.mean_kwh}))
                .collect();
            let artifact = match chart {
                Some(kind) => {
                    let profile = hour_profile(series, scope, &window)?;
                    Some(
                        ChartArtifact::new(kind, format!("Mean energy by hour, {}", r.label), "hour of day", "kWh")
                            .with_labels(profile.iter().map(|h| format!("{:02}:00", h.hour)).collect())
                            .with_series(r.label.clone(), profile.iter().map(|h| h.mean_kwh).collect()),
                    )
                }
                None => None,
            };
            Ok(AnalysisOutput { result: json!({"scope": r.label, "k": k, "window": window.to_string(), "hours": hours}), artifact })
        }
        AnalysisKind::DeviceBreakdown => {
            let chart = need_chart(req, &[ChartKind::Pie, ChartKind::Bar])?;
            let b = device_breakdown(series, &window)?;
            let ranked: Vec<Value> = b
                .ranked()
                .iter()
                .map(|(name, e)| json!({"channel": name, "kwh": kwh(*e), "share": b.shares[*name]}))
                .collect();
            let artifact = chart.map(|k| {
                ChartArtifact::new(k, "Energy use by device", "device", "kWh")
                    .with_labels(b.energy.keys().cloned().collect())
                    .with_series("energy", b.energy.values().map(|e| kwh(*e)).collect())
            });
            Ok(AnalysisOutput { result: json!({"window": window.to_string(), "total_kwh": kwh(b.total), "ranked": ranked}), artifact })
        }
        AnalysisKind::Cost => {
            let chart = need_chart(req, &[ChartKind::Pie, ChartKind::Bar])?;
            let c = tariff::cost(series, rates, &window)?;
            let mut ranked: Vec<(&String, &tariff::ChannelCost)> = c.per_channel.iter().collect();
            ranked.sort_by(|a, b| b.1.cost.cmp(&a.1.cost));
            let band = |b: Band| json!({"cost": money(c.per_band[&b]), "kwh": kwh(c.energy_per_band[&b])});
            let result = json!({
                "window": window.to_string(),
                "gross_total": money(c.gross_total),
                "net_total": money(c.net_total),
                "export_credit": money(c.export_credit_total),
                "exported_kwh": kwh(c.exported_energy),
                "ev_discount_savings": money(c.ev_discount_savings),
                "per_band": {"peak": band(Band::Peak), "off_peak": band(Band::OffPeak)},
                "ranked": ranked.iter().map(|(n, cc)| json!({"channel": n, "cost": money(cc.cost), "kwh": kwh(cc.energy)})).collect::<Vec<_>>(),
            });
            let artifact = chart.map(|k| match k {
                ChartKind::Pie => ChartArtifact::new(k, "Cost by device", "device", "USD")
                    .with_labels(c.per_channel.keys().cloned().collect())
                    .with_series("cost", c.per_channel.values().map(|cc| money(cc.cost).max(0.0)).collect()),
                _ => ChartArtifact::new(k, "Cost by pricing period", "period", "USD")
                    .with_labels(vec!["peak".into(), "off-peak".into()])
                    .with_series("cost", vec![money(c.per_band[&Band::Peak]), money(c.per_band[&Band::OffPeak])]),
            });
            Ok(AnalysisOutput { result, artifact })
        }
        AnalysisKind::ChannelCost | AnalysisKind::DailyCost => {
            let chart = need_chart(req, &[ChartKind::Bar, ChartKind::Line])?;
            let term = req.channel.as_deref().or(req.scope.as_deref());
            if req.kind == AnalysisKind::ChannelCost && term.is_none() {
                return Err(AnalysisError::InvalidArgument("channel_cost needs a channel".into()));
            }
            let r = resolve_scope(series, term)?;
            let c = tariff::cost(series, rates, &window)?;
            let total = if r.scopes == [Scope::TotalConsumption] { c.gross_total } else { c.channel_cost(&r.channels) };
            let energy = if r.scopes == [Scope::TotalConsumption] {
                c.per_channel.values().map(|x| x.energy).sum()
            } else {
                c.channel_energy(&r.channels)
            };
            let peak: Energy = r.channels.iter().filter_map(|n| c.per_channel.get(n)).map(|x| x.peak_energy).sum();
            let off: Energy = r.channels.iter().filter_map(|n| c.per_channel.get(n)).map(|x| x.off_peak_energy).sum();
            let mut result = json!({
                "channel": r.label,
                "channels": r.channels,
                "window": window.to_string(),
                "cost": money(total),
                "kwh": kwh(energy),
                "peak_kwh": kwh(peak),
                "off_peak_kwh": kwh(off),
            });
            let wants_days = req.kind == AnalysisKind::DailyCost || chart.is_some();
            let mut artifact = None;
            if wants_days {
                let range = window.resolve(series)?;
                let (first, last) = (series.timestamp(range.start), series.timestamp(range.end - 1));
                let mut labels = Vec::new();
                let mut values = Vec::new();
                let mut day = first.date();
                while day <= last.date() {
                    let start = day.and_hms_opt(0, 0, 0).unwrap_or(first).max(first);
                    let end = (day.and_hms_opt(0, 0, 0).unwrap_or(first) + Duration::days(1)).min(series.timestamp(range.end - 1) + series.interval());
                    let dc = tariff::cost(series, rates, &Window::between(start, end))?;
                    let v = if r.scopes == [Scope::TotalConsumption] { dc.gross_total } else { dc.channel_cost(&r.channels) };
                    labels.push(day.format("%Y-%m-%d").to_string());
                    values.push(money(v));
                    day += Duration::days(1);
                }
                result["days"] = labels.iter().zip(&values).map(|(d, v)| json!({"label": d, "cost": v})).collect();
                artifact = chart.map(|k| {
                    ChartArtifact::new(k, format!("Daily cost, {}", r.label), "day", "USD")
                        .with_labels(labels.clone())
                        .with_series(r.label.clone(), values.clone())
                });
            }
            Ok(AnalysisOutput { result, artifact })
        }
        AnalysisKind::CostForecast => {
            let chart = need_chart(req, &[ChartKind::Line, ChartKind::Bar])?;
            let days = req.horizon.unwrap_or(30);
            if days == 0 {
                return Err(AnalysisError::InvalidArgument("horizon must be at least one day".into()));
            }
            let method = day_method(req);
            let f = tariff::cost_forecast(series, rates, method, days * DAY, &window)?;
            let mut result = json!({
                "method": method,
                "horizon_days": days,
                "predicted_kwh": kwh(f.predicted_energy),
                "predicted_cost": money(f.predicted_cost),
            });
            if let Some(term) = req.channel.as_deref() {
                let r = resolve_scope(series, Some(term))?;
                let picked: Vec<&tariff::ChannelForecast> = r.channels.iter().filter_map(|n| f.per_channel.get(n)).collect();
                result["channel"] = json!(r.label);
                result["channel_cost"] = json!(money(picked.iter().map(|c| c.cost).sum()));
                result["channel_kwh"] = json!(kwh(picked.iter().map(|c| c.energy).sum()));
            }
            let artifact = match chart {
                Some(k) => {
                    let mut labels = Vec::new();
                    let mut values = Vec::new();
                    let mut prev = Money::ZERO;
                    for d in 1..=days {
                        let cum = tariff::cost_forecast(series, rates, method, d * DAY, &window)?.predicted_cost;
                        labels.push(format!("day {d}"));
                        values.push(money(cum - prev));
                        prev = cum;
                    }
                    Some(ChartArtifact::new(k, "Forecast daily cost", "day ahead", "USD").with_labels(labels).with_series("predicted", values))
                }
                None => None,
            };
            Ok(AnalysisOutput { result, artifact })
        }
        AnalysisKind::Forecast => {
            let chart = need_chart(req, &[ChartKind::Line, ChartKind::Bar])?;
            let r = resolve_scope(series, req.scope.as_deref().or(req.channel.as_deref()))?;
            let g = req.granularity.unwrap_or(Granularity::Daily);
            let default_window = match g {
                Granularity::Interval => DAY,
                Granularity::Hourly => 24,
                Granularity::Daily => 7,
                Granularity::Monthly => 1,
            };
            let method = req.forecast_method(default_window);
            let horizon = req.horizon.unwrap_or(30);
            let buckets = summed_buckets(series, &r, g, &window)?;
            let history: Vec<f64> = buckets.iter().map(|b| kwh(b.energy)).collect();
            let f = forecast_values(&history, g, method, horizon)?;
            let mut result = json!({
                "scope": r.label,
                "channels": r.channels,
                "granularity": g,
                "method": method,
                "horizon": horizon,
                "history_len": f.history_len,
                "total_kwh": f.total_kwh,
                "first_kwh": f.predicted.first(),
                "slope": f.slope,
                "intercept": f.intercept,
                "residual_rmse": f.diagnostics.residual_rmse,
            });
            if horizon <= 62 {
                result["predicted"] = json!(f.predicted);
            }
            let artifact = chart.map(|k| {
                let n = history.len();
                let mut labels: Vec<String> = buckets.iter().map(|b| bucket_label(b, g)).collect();
                labels.extend((1..=horizon).map(|h| format!("+{h}")));
                let hist: Vec<Option<f64>> = history.iter().map(|v| Some(*v)).chain(std::iter::repeat_n(None, horizon)).collect();
                let pred: Vec<Option<f64>> = std::iter::repeat_n(None, n).chain(f.predicted.iter().map(|v| Some(*v))).collect();
                ChartArtifact::new(k, format!("Forecast, {}", r.label), "period", "kWh")
                    .with_labels(labels)
                    .with_cells("history", hist)
                    .with_cells("forecast", pred)
            });
            Ok(AnalysisOutput { result, artifact })
        }
        AnalysisKind::SelfConsumption => {
            let s = self_consumption(series, &window)?;
            Ok(AnalysisOutput {
                result: json!({
                    "window": window.to_string(),
                    "generated_kwh": kwh(s.generated),
                    "exported_kwh": kwh(s.exported),
                    "self_consumed_kwh": kwh(s.self_consumed),
                    "self_consumption_ratio": s.self_consumption_ratio(),
                }),
                artifact: None,
            })
        }
        AnalysisKind::PvValue => {
            let v = tariff::pv_value(series, rates, &window)?;
            Ok(AnalysisOutput {
                result: json!({
                    "window": window.to_string(),
                    "generated_kwh": kwh(v.generated),
                    "self_consumed_kwh": kwh(v.self_consumed),
                    "exported_kwh": kwh(v.exported),
                    "value": money(v.value),
                }),
                artifact: None,
            })
        }
        AnalysisKind::PvSavingsForecast => {
            let days = req.horizon.unwrap_or(30);
            if days == 0 {
                return Err(AnalysisError::InvalidArgument("horizon must be at least one day".into()));
            }
            let method = day_method(req);
            let f = tariff::pv_savings_forecast(series, rates, method, days * DAY, &window)?;
            Ok(AnalysisOutput {
                result: json!({
                    "method": method,
                    "horizon_days": days,
                    "predicted_generation_kwh": kwh(f.predicted_generation),
                    "predicted_savings": money(f.predicted_savings),
                    "historical_value": money(f.historical.value),
                    "historical_generated_kwh": kwh(f.historical.generated),
                }),
                artifact: None,
            })
        }
        AnalysisKind::ShiftSavings => {
            let chart = need_chart(req, &[ChartKind::Bar])?;
            let ops = tariff::shift_savings(series, rates, &window)?;
            let total: Money = ops.iter().map(|o| o.savings).sum();
            let mut result = json!({
                "window": window.to_string(),
                "total_savings": money(total),
                "opportunities": ops.iter().map(|o| json!({"channel": o.channel, "peak_kwh": kwh(o.peak_energy), "savings": money(o.savings)})).collect::<Vec<_>>(),
            });
            if let Some(term) = req.channel.as_deref() {
                let r = resolve_scope(series, Some(term))?;
                let picked: Money = ops.iter().filter(|o| r.channels.contains(&o.channel)).map(|o| o.savings).sum();
                result["channel"] = json!(r.label);
                result["channel_savings"] = json!(money(picked));
            }
            let artifact = chart.map(|k| {
                ChartArtifact::new(k, "Savings from shifting peak use", "device", "USD")
                    .with_labels(ops.iter().map(|o| o.channel.clone()).collect())
                    .with_series("savings", ops.iter().map(|o| money(o.savings)).collect())
            });
            Ok(AnalysisOutput { result, artifact })
        }
        AnalysisKind::Anomalies => {
            let term = req.channel.as_deref().or(req.scope.as_deref()).unwrap_or("grid");
            let r = resolve_scope(series, Some(term))?;
            let [name] = r.channels.as_slice() else {
                return Err(AnalysisError::InvalidArgument(format!("{term:?} covers several channels")));
            };
            let z = req.z.unwrap_or(3.0);
            if !(z.is_finite() && z > 0.0) {
                return Err(AnalysisError::InvalidArgument("z must be positive".into()));
            }
            let rep = analytics::detect_anomalies(series, name, z, &window)?;
            Ok(AnalysisOutput {
                result: json!({
                    "channel": rep.channel,
                    "threshold": rep.threshold,
                    "mean_kw": rep.mean_kw,
                    "std_kw": rep.std_kw,
                    "count": rep.anomalies.len(),
                    "anomalies": rep.anomalies.iter().take(10).map(|a| json!({
                        "timestamp": a.timestamp.format("%Y-%m-%d %H:%M").to_string(), "kw": a.kw, "z": a.z
                    })).collect::<Vec<_>>(),
                    "warning": rep.warning,
                }),
                artifact: None,
            })
        }
        AnalysisKind::Heatmap => {
            need_chart(req, &[ChartKind::Heatmap])?;
            let r = resolve_scope(series, req.scope.as_deref())?;
            let [scope] = r.scopes.as_slice() else {
                return Err(AnalysisError::InvalidArgument(format!("{:?} covers several channels", r.label)));
            };
            let m = hour_day_matrix(series, scope, &window)?;
            let mut art = ChartArtifact::new(ChartKind::Heatmap, format!("Hourly energy by day, {}", r.label), "hour of day", "kWh")
                .with_labels((0..24).map(|h| format!("{h:02}:00")).collect());
            let mut peak = (String::new(), 0usize, f64::MIN);
            for (d, row) in m.days.iter().zip(&m.values_kwh) {
                let day = d.format("%Y-%m-%d").to_string();
                for (h, v) in row.iter().enumerate() {
                    if *v > peak.2 {
                        peak = (day.clone(), h, *v);
                    }
                }
                art = art.with_series(day, row.to_vec());
            }
            Ok(AnalysisOutput {
                result: json!({
                    "scope": r.label,
                    "days": m.days.len(),
                    "peak_cell": {"day": peak.0, "hour": peak.1, "kwh": peak.2},
                }),
                artifact: Some(art),
            })
        }
    }
}

/// Interval-level forecast method whose moving-average window is given in days.
fn day_method(req: &AnalysisRequest) -> ForecastMethod {
    match req.method.unwrap_or(MethodName::MovingAverage) {
        MethodName::LinearRegression => ForecastMethod::LinearRegression,
        MethodName::MovingAverage => ForecastMethod::MovingAverage { window: req.ma_window.unwrap_or(7) * DAY },
    }
}
