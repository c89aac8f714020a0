//! The 120-query benchmark battery: five queries per secondary category, each with its
//! ground-truth label, expected tools, answer comparator and any state it needs seeded.
//!
//! Queries are parametrized by building (appliance names, which channels exist) and every
//! numeric answer is computed here from the raw series, independently of the agent tools.
//! The canonical script for each query lives alongside it; see [`crate::fixture`].

use std::collections::BTreeMap;

use bems_agent::{ChartKind, ResponseType, Script, ScriptedCall};
use bems_core::analytics::resolve_channel;
use bems_core::analytics::ForecastMethod;
use bems_core::{tariff, AttributeValue, BuildingProfile, EnergySeries, IntentLabel, Primary, RateSchedule, Secondary, Window};
use bems_home::home::frozen_instant;
use bems_home::{CompareOp, NewSchedule, Recurrence, Trigger};
use chrono::{NaiveTime, Timelike};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// State a query expects to exist before it runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetupAction {
    Device { device_id: String, attribute: String, value: AttributeValue },
    Schedule { schedule: NewSchedule },
    /// Seeded through the memory marker path; skipped if an entry with this utterance exists.
    Memory { utterance: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceExpect {
    pub device_id: String,
    pub attribute: String,
    pub value: AttributeValue,
}

/// A pattern over a schedule entry; absent fields match anything.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScheduleMatch {
    pub device_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<AttributeValue>,
    /// "HH:MM" for time triggers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recurrence: Option<Recurrence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition_device: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enabled: Option<bool>,
}

/// A pattern over a memory entry. `value` and `text` are case-insensitive substring tests.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MemoryMatch {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StateDiffSpec {
    #[serde(default)]
    pub devices: Vec<DeviceExpect>,
    #[serde(default)]
    pub schedules_added: Vec<ScheduleMatch>,
    #[serde(default)]
    pub schedules_removed: Vec<ScheduleMatch>,
    #[serde(default)]
    pub schedules_changed: Vec<ScheduleMatch>,
    #[serde(default)]
    pub memories_added: Vec<MemoryMatch>,
    #[serde(default)]
    pub memories_removed: Vec<MemoryMatch>,
    #[serde(default)]
    pub memories_changed: Vec<MemoryMatch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response_type: Option<ResponseType>,
}

/// How a response is judged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AnswerSpec {
    /// Some number in the text is within the tolerance of `value`.
    Numeric { value: f64, unit: String, rel_tol: f64, abs_tol: f64 },
    /// The items of `universe` the text mentions are exactly `expected`.
    SetEquality { expected: Vec<String>, universe: Vec<String> },
    /// The home, schedules and memory changed exactly as described.
    StateDiff(StateDiffSpec),
    /// The response has this type, mentions every term and carries a chart of an allowed kind.
    Response {
        expected: ResponseType,
        #[serde(default)]
        must_mention: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        artifact: Option<Vec<ChartKind>>,
    },
}

pub const REL_TOL: f64 = 0.01;
pub const ABS_TOL: f64 = 0.01;

impl AnswerSpec {
    pub fn numeric(value: f64, unit: &str) -> Self {
        AnswerSpec::Numeric { value, unit: unit.to_string(), rel_tol: REL_TOL, abs_tol: ABS_TOL }
    }

    pub fn answer(must_mention: &[&str]) -> Self {
        AnswerSpec::Response {
            expected: ResponseType::Answer,
            must_mention: must_mention.iter().map(|s| s.to_string()).collect(),
            artifact: None,
        }
    }

    pub fn chart(kinds: &[ChartKind]) -> Self {
        AnswerSpec::Response { expected: ResponseType::Answer, must_mention: vec![], artifact: Some(kinds.to_vec()) }
    }

    pub fn set(expected: Vec<String>, universe: Vec<String>) -> Self {
        AnswerSpec::SetEquality { expected, universe }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkQuery {
    pub query_id: String,
    pub text: String,
    pub label: IntentLabel,
    pub expected_tools: Vec<String>,
    pub answer: AnswerSpec,
    /// The request is underspecified; asking for clarification earns partial credit.
    #[serde(default)]
    pub ambiguous: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub setup: Vec<SetupAction>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Battery {
    pub building_id: String,
    pub queries: Vec<BenchmarkQuery>,
}

impl Battery {
    pub fn get(&self, query_id: &str) -> Option<&BenchmarkQuery> {
        self.queries.iter().find(|q| q.query_id == query_id)
    }
}

/// Query-id prefix per secondary category.
pub fn code(s: Secondary) -> &'static str {
    use Secondary::*;
    match s {
        HistoricalEnergy => "HE",
        EnergyPrediction => "EP",
        EnergyOptimization => "EO",
        EnergySuggestions => "ES",
        EnergyVisualization => "EV",
        CostInformation => "CI",
        CostPrediction => "CP",
        CostSuggestions => "CS",
        CostVisualization => "CV",
        MeterStatus => "MS",
        DeviceStatus => "DS",
        DeviceOperation => "DO",
        GroupManagement => "GM",
        CustomConfiguration => "CC",
        ScheduleInformation => "SI",
        GeneralScheduling => "GS",
        ConditionalAutomation => "CA",
        ScheduleManagement => "SM",
        MemoryInformation => "MI",
        MemoryCreation => "MC",
        MemoryManagement => "MM",
        Guidance => "GU",
        Troubleshooting => "TS",
        Faq => "FQ",
    }
}

/// A battery query together with the script an ideal agent would follow.
#[derive(Clone, Debug)]
pub struct Entry {
    pub query: BenchmarkQuery,
    pub script: Script,
}

pub fn battery_for(profile: &BuildingProfile, series: &EnergySeries) -> Battery {
    Battery { building_id: profile.building_id.clone(), queries: entries(profile, series).into_iter().map(|e| e.query).collect() }
}

fn a(args: Value) -> ScriptedCall {
    ScriptedCall::new("analysis.run", args)
}

fn c(name: &str, args: Value) -> ScriptedCall {
    ScriptedCall::new(name, args)
}

fn hm(h: u32, m: u32) -> NaiveTime {
    NaiveTime::from_hms_opt(h, m, 0).expect("valid clock time")
}

fn b(v: bool) -> AttributeValue {
    AttributeValue::Bool(v)
}

fn n(v: f64) -> AttributeValue {
    AttributeValue::Number(v)
}

fn t(v: &str) -> AttributeValue {
    AttributeValue::Text(v.to_string())
}

fn sched(device: &str, attribute: &str, value: AttributeValue, trigger: Trigger) -> SetupAction {
    SetupAction::Schedule {
        schedule: NewSchedule { device_id: device.into(), attribute: attribute.into(), value, trigger, label: None },
    }
}

fn dev(device: &str, attribute: &str, value: AttributeValue) -> SetupAction {
    SetupAction::Device { device_id: device.into(), attribute: attribute.into(), value }
}

fn mem(utterance: &str) -> SetupAction {
    SetupAction::Memory { utterance: utterance.into() }
}

fn expect(device: &str, attribute: &str, value: AttributeValue) -> DeviceExpect {
    DeviceExpect { device_id: device.into(), attribute: attribute.into(), value }
}

fn sm(device: &str) -> ScheduleMatch {
    ScheduleMatch { device_id: device.into(), ..Default::default() }
}

fn mm(device: Option<&str>, text: Option<&str>) -> MemoryMatch {
    MemoryMatch { device: device.map(String::from), text: text.map(String::from), ..Default::default() }
}

/// Raw-series figures the answers are computed from, all in kWh or USD.
struct Oracle<'a> {
    series: &'a EnergySeries,
    rates: &'a RateSchedule,
    consumption: Vec<String>,
}

const DAY: usize = 96;

impl<'a> Oracle<'a> {
    fn new(series: &'a EnergySeries, rates: &'a RateSchedule) -> Self {
        Oracle { series, rates, consumption: series.consumption_channels().map(String::from).collect() }
    }

    fn samples(&self, name: &str) -> &[f64] {
        self.series.channel(name).unwrap_or(&[])
    }

    /// Per-interval total consumption in kW.
    fn total_kw(&self) -> Vec<f64> {
        let mut tot = vec![0.0; self.series.len()];
        for name in &self.consumption {
            for (acc, v) in tot.iter_mut().zip(self.samples(name)) {
                *acc += v;
            }
        }
        tot
    }

    fn kwh(kw: &[f64]) -> f64 {
        kw.iter().sum::<f64>() * 0.25
    }

    fn daily(kw: &[f64]) -> Vec<f64> {
        kw.chunks(DAY).map(Self::kwh).collect()
    }

    fn last_days(kw: &[f64], days: usize) -> &[f64] {
        &kw[kw.len().saturating_sub(days * DAY)..]
    }

    /// Trailing 7-day mean held flat over the horizon.
    fn ma_forecast(kw: &[f64], horizon: usize) -> f64 {
        let d = Self::daily(kw);
        let tail = &d[d.len().saturating_sub(7)..];
        tail.iter().sum::<f64>() / tail.len() as f64 * horizon as f64
    }

    /// OLS line through the daily totals, evaluated one day past the end.
    fn linear_next(kw: &[f64]) -> f64 {
        let d = Self::daily(kw);
        let nn = d.len() as f64;
        let xm = (nn - 1.0) / 2.0;
        let ym = d.iter().sum::<f64>() / nn;
        let sxy: f64 = d.iter().enumerate().map(|(i, y)| (i as f64 - xm) * (y - ym)).sum();
        let sxx: f64 = (0..d.len()).map(|i| (i as f64 - xm).powi(2)).sum();
        let slope = sxy / sxx;
        ym + slope * (nn - xm)
    }

    /// Hours of day ranked by mean interval energy.
    fn peak_hours(&self, k: usize) -> Vec<String> {
        let tot = self.total_kw();
        let mut sums = [0.0f64; 24];
        let mut counts = [0usize; 24];
        for (i, v) in tot.iter().enumerate() {
            let h = self.series.timestamp(i).hour() as usize;
            sums[h] += v * 0.25;
            counts[h] += 1;
        }
        let mut hours: Vec<(usize, f64)> = (0..24).map(|h| (h, sums[h] / counts[h].max(1) as f64)).collect();
        hours.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        hours.iter().take(k).map(|(h, _)| format!("{h:02}:00")).collect()
    }

    fn ranked_consumers(&self) -> Vec<String> {
        let mut v: Vec<(String, f64)> = self.consumption.iter().map(|n| (n.clone(), Self::kwh(self.samples(n)))).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1));
        v.into_iter().map(|(n, _)| n).collect()
    }

    fn cost(&self, window: &Window) -> tariff::CostBreakdown {
        tariff::cost(self.series, self.rates, window).expect("cost over a valid window")
    }

    fn shift(&self) -> Vec<tariff::ShiftOpportunity> {
        tariff::shift_savings(self.series, self.rates, &Window::ALL).expect("shift savings")
    }

    fn cost_forecast(&self, days: usize) -> tariff::CostForecast {
        tariff::cost_forecast(self.series, self.rates, ForecastMethod::MovingAverage { window: 7 * DAY }, days * DAY, &Window::ALL)
            .expect("cost forecast")
    }

    /// Samples of the channel more than 3 population σ from its mean.
    fn anomaly_count(&self, name: &str) -> usize {
        let x = self.samples(name);
        let m = x.iter().sum::<f64>() / x.len() as f64;
        let sd = (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64).sqrt();
        if sd == 0.0 {
            return 0;
        }
        x.iter().filter(|v| ((*v - m) / sd).abs() > 3.0).count()
    }
}

/// Every battery entry for one building, in category order.
pub fn entries(profile: &BuildingProfile, series: &EnergySeries) -> Vec<Entry> {
    use Secondary::*;
    let rates = &profile.rate_schedule;
    let o = Oracle::new(series, rates);
    let tot = o.total_kw();
    let grid = series.grid_channel().unwrap_or("Electrical Grid").to_string();
    let pv = series.generation_channel().unwrap_or("Photovoltaic System").to_string();
    let ev = series.ev_channel().unwrap_or("Electric Vehicle Charger").to_string();
    let app = ["Dishwasher", "Freezer", "Range", "Waterheater", "Kitchen App 1"]
        .into_iter()
        .find(|n| series.channel(n).is_some())
        .unwrap_or("Kitchen App 1")
        .to_string();
    let app_l = if app.starts_with("Kitchen") { app.clone() } else { app.to_lowercase() };
    let one = |name: &str| vec![name.to_string()];
    let all = Window::ALL;
    let week = Window::last_days(series, 7);
    let month_cost = o.cost(&all);
    let peak_window = rates.peak_windows.first().map(|w| w.to_string()).unwrap_or_default();
    let span = rates.off_peak_span().map(|(s, e)| (bems_core::rates::format_clock(s), bems_core::rates::format_clock(e % 1440)));
    let (span_start, span_end) = span.clone().unwrap_or(("20:00".into(), "17:00".into()));
    let days: Vec<String> = series.days().iter().map(|d| d.format("%Y-%m-%d").to_string()).collect();
    let daily_tot = Oracle::daily(&tot);
    let max_day = daily_tot
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc })
        .0;
    let ranked = o.ranked_consumers();
    let shift = o.shift();
    let device_names: Vec<String> = profile.devices.clone();
    let sensors: Vec<String> = series.channels.keys().cloned().collect();
    let cooling = resolve_channel(series, "AC").ok();
    let frozen = series.index_of(frozen_instant(series)).unwrap_or(0);
    let meter_kw = |name: &str| {
        if name == "Dishwasher" {
            bems_home::home::DISHWASHER_SNAPSHOT_KW
        } else {
            o.samples(name).get(frozen).copied().unwrap_or(0.0)
        }
    };
    let top_cost = month_cost
        .per_channel
        .iter()
        .max_by(|a, b| a.1.cost.cmp(&b.1.cost))
        .map(|(n, _)| n.clone())
        .unwrap_or_default();
    let shift_of = |names: &[String]| -> f64 {
        shift.iter().filter(|s| names.contains(&s.channel)).map(|s| s.savings.as_decimal()).sum()
    };

    let mut out: Vec<Entry> = Vec::new();
    let mut push = |sec: Secondary, text: &str, tools: &[&str], answer: AnswerSpec, setup: Vec<SetupAction>, script: Script| {
        let idx = out.iter().filter(|e| e.query.label.secondary == sec).count() + 1;
        let query = BenchmarkQuery {
            query_id: format!("{}-{}", code(sec), idx),
            text: text.to_string(),
            label: IntentLabel::of(sec),
            expected_tools: tools.iter().map(|s| s.to_string()).collect(),
            answer,
            ambiguous: false,
            setup,
        };
        out.push(Entry { query, script: Script { query: text.to_string(), ..script } });
    };
    let s = |fin: &str| Script::new("", fin);
    let an = &["analysis.run"];
    let an_pr = &["analysis.run", "pricing.search"];

    // Historical energy.
    push(HistoricalEnergy, "How much energy did I use last month?", an,
        AnswerSpec::numeric(Oracle::kwh(&tot), "kWh"), vec![],
        s("You used {{0/result/total_kwh|2}} kWh last month.")
            .turn(vec![a(json!({"kind": "aggregate", "scope": "total", "window": "month", "granularity": "daily"}))]));
    push(HistoricalEnergy, &format!("How much energy did my {app_l} use over the past month?"), an,
        AnswerSpec::numeric(Oracle::kwh(o.samples(&app)), "kWh"), vec![],
        s("Your {{0/result/scope}} used {{0/result/total_kwh|2}} kWh over the past month.")
            .turn(vec![a(json!({"kind": "aggregate", "scope": app, "window": "month"}))]));
    push(HistoricalEnergy, "How much energy did I use in the last week?", an,
        AnswerSpec::numeric(Oracle::kwh(Oracle::last_days(&tot, 7)), "kWh"), vec![],
        s("You used {{0/result/total_kwh|2}} kWh in the last week.")
            .turn(vec![a(json!({"kind": "aggregate", "scope": "total", "window": "last_week"}))]));
    push(HistoricalEnergy, "When are the peak hours of my energy usage over the past month?", an,
        AnswerSpec::set(o.peak_hours(3), (0..24).map(|h| format!("{h:02}:00")).collect()), vec![],
        s("Your usage peaks in the hours starting {{0/result/hours/*/label}}.")
            .turn(vec![a(json!({"kind": "peak_hours", "scope": "total", "k": 3, "window": "month"}))]));
    push(HistoricalEnergy, "Which day last month had the highest energy consumption?", an,
        AnswerSpec::set(one(&days[max_day]), days.clone()), vec![],
        s("Your highest day was {{0/result/max/label}}.")
            .turn(vec![a(json!({"kind": "aggregate", "scope": "total", "window": "month", "granularity": "daily"}))]));

    // Energy prediction.
    push(EnergyPrediction, "What is the predicted energy use for the next month?", an,
        AnswerSpec::numeric(Oracle::ma_forecast(&tot, 30), "kWh"), vec![],
        s("Based on your recent daily average, you should use about {{0/result/total_kwh|2}} kWh over the next 30 days.")
            .turn(vec![a(json!({"kind": "forecast", "scope": "total", "granularity": "daily", "method": "moving_average", "ma_window": 7, "horizon": 30}))]));
    push(EnergyPrediction, "How much energy will my EV charger use next week?", an,
        AnswerSpec::numeric(Oracle::ma_forecast(o.samples(&ev), 7), "kWh"), vec![],
        s("Your EV charger should use about {{0/result/total_kwh|2}} kWh next week.")
            .turn(vec![a(json!({"kind": "forecast", "scope": "EV", "granularity": "daily", "horizon": 7}))]));
    push(EnergyPrediction, "How much solar energy will my PV panels generate tomorrow?", an,
        AnswerSpec::numeric(Oracle::ma_forecast(o.samples(&pv), 1), "kWh"), vec![],
        s("Your panels should generate about {{0/result/total_kwh|2}} kWh tomorrow.")
            .turn(vec![a(json!({"kind": "forecast", "scope": "solar", "granularity": "daily", "horizon": 1}))]));
    push(EnergyPrediction, "Forecast my total energy consumption for tomorrow.", an,
        AnswerSpec::numeric(Oracle::linear_next(&tot), "kWh"), vec![],
        s("Following the trend of the past month, tomorrow's consumption should be about {{0/result/total_kwh|2}} kWh.")
            .turn(vec![a(json!({"kind": "forecast", "scope": "total", "granularity": "daily", "method": "linear_regression", "horizon": 1}))]));
    push(EnergyPrediction, &format!("What will my {app_l} consume over the next week?"), an,
        AnswerSpec::numeric(Oracle::ma_forecast(o.samples(&app), 7), "kWh"), vec![],
        s("Your {{0/result/scope}} should consume about {{0/result/total_kwh|2}} kWh over the next week.")
            .turn(vec![a(json!({"kind": "forecast", "scope": app, "granularity": "daily", "horizon": 7}))]));

    // Energy optimization.
    push(EnergyOptimization, "How can I reduce my energy consumption during peak hours?", an_pr,
        AnswerSpec::answer(&[&peak_window]), vec![],
        s("Peak pricing applies {{0/peak/windows}}. Your heaviest hours are {{1/result/hours/*/label}}. Move laundry, dishwashing and EV charging outside the peak window and pre-cool the house before it starts.")
            .turn(vec![c("pricing.search", json!({"topic": "peak"}))])
            .turn(vec![a(json!({"kind": "peak_hours", "scope": "total", "k": 3, "window": "month"}))]));
    push(EnergyOptimization, "Which appliances should I shift to off-peak hours to save the most?", an_pr,
        AnswerSpec::set(shift.iter().take(2).map(|s| s.channel.clone()).collect(), o.consumption.clone()), vec![],
        s("Shift {{0/result/opportunities/0/channel}} and {{0/result/opportunities/1/channel}} first; they use the most energy during peak hours. Off-peak hours are {{1/off_peak/windows}}.")
            .turn(vec![a(json!({"kind": "shift_savings", "window": "month"}))])
            .turn(vec![c("pricing.search", json!({"topic": "off-peak"}))]));
    push(EnergyOptimization, "How much would I save by moving my peak-hour usage to off-peak times?", an_pr,
        AnswerSpec::numeric(shift.iter().map(|s| s.savings.as_decimal()).sum(), "USD"), vec![],
        s("Moving all of last month's peak-hour use to off-peak hours would have saved ${{1/result/total_savings|2}}.")
            .turn(vec![c("pricing.search", json!({"topic": "off-peak"}))])
            .turn(vec![a(json!({"kind": "shift_savings", "window": "month"}))]));
    push(EnergyOptimization, &format!("What is the best time of day to run my {app_l} to reduce peak demand?"), an_pr,
        AnswerSpec::answer(&[&span_start]), vec![],
        s(&format!("Run your {app_l} after {{{{0/off_peak_span/start}}}}, once the peak window ({{{{0/peak/windows}}}}) has ended. Your own demand peaks around {{{{1/result/hours/*/label}}}}."))
            .turn(vec![c("pricing.search", json!({"topic": "off-peak"}))])
            .turn(vec![a(json!({"kind": "peak_hours", "scope": "total", "k": 3}))]));
    let sc = tariff::pv_value(series, rates, &all).ok();
    let sc_ratio = sc.as_ref().filter(|v| !v.generated.is_zero()).map(|v| v.self_consumed.kwh() / v.generated.kwh() * 100.0).unwrap_or(0.0);
    push(EnergyOptimization, "How can I make better use of the energy generated by my PV panels?", an_pr,
        AnswerSpec::numeric(sc_ratio, "%"), vec![],
        s("You used {{0/result/self_consumption_ratio|pct}} of your solar generation directly and exported the rest. Run flexible loads around midday to use more of it yourself.")
            .turn(vec![a(json!({"kind": "self_consumption", "window": "month"}))])
            .turn(vec![c("pricing.search", json!({"topic": "export"}))]));

    // Energy suggestions.
    let top = ranked.first().cloned().unwrap_or_default();
    push(EnergySuggestions, "Based on my past month energy use, can you give me some suggestions to save energy?", an,
        AnswerSpec::answer(&[&top]), vec![],
        s("Your largest load was {{0/result/ranked/0/channel}} ({{0/result/ranked/0/share|pct}} of use), followed by {{0/result/ranked/1/channel}}. Trimming their run time and moving them off peak will save the most.")
            .turn(vec![a(json!({"kind": "device_breakdown", "window": "month"}))]));
    push(EnergySuggestions, "Do you have any tips to use less energy at home?", an,
        AnswerSpec::answer(&[&top]), vec![],
        s("Start with {{0/result/ranked/0/channel}}, your biggest consumer. Also switch off idle devices and use eco modes.")
            .turn(vec![a(json!({"kind": "device_breakdown", "window": "month"}))]));
    push(EnergySuggestions, "Are there any unusual spikes in my energy use that I should look into?", an,
        AnswerSpec::numeric(o.anomaly_count(&grid) as f64, "count"), vec![],
        s("I found {{0/result/count}} unusual readings on your grid meter.")
            .turn(vec![a(json!({"kind": "anomalies", "channel": "grid"}))]));
    push(EnergySuggestions, "What should I do to lower my heating and cooling energy use?", an,
        AnswerSpec::answer(&["setpoint"]), vec![],
        s("Raise the cooling setpoint or lower the heating setpoint by a degree or two, and use eco mode while you are away. Your largest load is {{0/result/ranked/0/channel}}.")
            .turn(vec![a(json!({"kind": "device_breakdown", "window": "month"}))]));
    push(EnergySuggestions, "Which devices should I focus on to save energy?", an,
        AnswerSpec::set(ranked.iter().take(3).cloned().collect(), o.consumption.clone()), vec![],
        s("Focus on {{0/result/ranked/0/channel}}, {{0/result/ranked/1/channel}} and {{0/result/ranked/2/channel}}.")
            .turn(vec![a(json!({"kind": "device_breakdown", "window": "month"}))]));

    // Energy visualization.
    push(EnergyVisualization, "Can you show me a pie chart of my energy energy use by device or system?", an,
        AnswerSpec::chart(&[ChartKind::Pie]), vec![],
        s("Here is your energy use by device. {{0/result/ranked/0/channel}} is the largest slice.")
            .turn(vec![a(json!({"kind": "device_breakdown", "window": "month", "chart": "pie"}))]));
    push(EnergyVisualization, "Plot my daily energy consumption over the past month.", an,
        AnswerSpec::chart(&[ChartKind::Bar, ChartKind::Line]), vec![],
        s("Here is your daily consumption; the highest day was {{0/result/max/label}}.")
            .turn(vec![a(json!({"kind": "aggregate", "scope": "total", "window": "month", "granularity": "daily", "chart": "bar"}))]));
    push(EnergyVisualization, "Show me a heatmap of my hourly energy use for each day.", an,
        AnswerSpec::chart(&[ChartKind::Heatmap]), vec![],
        s("Here is your hourly use for each day. The busiest hour was {{0/result/peak_cell/hour}}:00 on {{0/result/peak_cell/day}}.")
            .turn(vec![a(json!({"kind": "heatmap", "scope": "total", "window": "month", "chart": "heatmap"}))]));
    push(EnergyVisualization, "Draw a line chart of my solar generation over the last week.", an,
        AnswerSpec::chart(&[ChartKind::Line, ChartKind::Bar]), vec![],
        s("Here is your solar generation over the last week, {{0/result/total_kwh|2}} kWh in total.")
            .turn(vec![a(json!({"kind": "aggregate", "scope": "solar", "window": "last_week", "granularity": "daily", "chart": "line"}))]));
    push(EnergyVisualization, "Visualize how much energy my EV charger used each day.", an,
        AnswerSpec::chart(&[ChartKind::Bar, ChartKind::Line]), vec![],
        s("Here is your EV charger's daily energy use.")
            .turn(vec![a(json!({"kind": "aggregate", "scope": "EV", "window": "month", "granularity": "daily", "chart": "bar"}))]));

    // Cost information.
    match &cooling {
        Some(names) => push(CostInformation, "How much did I spend on AC last month?", an,
            AnswerSpec::numeric(month_cost.channel_cost(names).as_decimal(), "USD"), vec![],
            s("Your AC ({{0/result/channel}}) cost ${{0/result/cost|2}} last month.")
                .turn(vec![a(json!({"kind": "channel_cost", "channel": "AC", "window": "month"}))])),
        None => push(CostInformation, "How much did I spend on AC last month?", an,
            AnswerSpec::Response { expected: ResponseType::Advisory, must_mention: vec!["AC".into()], artifact: None }, vec![],
            s("I couldn't find a metered AC circuit in this home, so I can't price its use. If the AC shares a circuit with other loads, ask me about total cost instead.")
                .turn(vec![a(json!({"kind": "channel_cost", "channel": "AC", "window": "month"}))])
                .respond_as(ResponseType::Advisory)),
    }
    push(CostInformation, "What was my total electricity bill last month?", an,
        AnswerSpec::numeric(month_cost.net_total.as_decimal(), "USD"), vec![],
        s("Your bill last month came to ${{0/result/net_total|2}} after solar export credit.")
            .turn(vec![a(json!({"kind": "cost", "window": "month"}))]));
    push(CostInformation, "How much did I pay for electricity during peak hours last month?", an,
        AnswerSpec::numeric(month_cost.per_band.get(&bems_core::Band::Peak).map(|m| m.as_decimal()).unwrap_or(0.0), "USD"), vec![],
        s("Peak-hour electricity cost you ${{0/result/per_band/peak/cost|2}} last month.")
            .turn(vec![a(json!({"kind": "cost", "window": "month"}))]));
    push(CostInformation, "How much credit did I earn from exporting solar energy last month?", an,
        AnswerSpec::numeric(month_cost.export_credit_total.as_decimal(), "USD"), vec![],
        s("You earned ${{0/result/export_credit|2}} in export credit last month.")
            .turn(vec![a(json!({"kind": "cost", "window": "month"}))]));
    push(CostInformation, "How much did charging my car cost last week?", an,
        AnswerSpec::numeric(o.cost(&week).channel_cost(&one(&ev)).as_decimal(), "USD"), vec![],
        s("Charging your car cost ${{0/result/cost|2}} last week.")
            .turn(vec![a(json!({"kind": "channel_cost", "channel": "car", "window": "last_week"}))]));

    // Cost prediction.
    let pv_save = tariff::pv_savings_forecast(series, rates, ForecastMethod::MovingAverage { window: 7 * DAY }, 30 * DAY, &all)
        .map(|f| f.predicted_savings.as_decimal())
        .unwrap_or(0.0);
    push(CostPrediction, "How much money will I save from my PV panels next month?", an,
        AnswerSpec::numeric(pv_save, "USD"), vec![],
        s("Your panels should save you about ${{0/result/predicted_savings|2}} next month.")
            .turn(vec![a(json!({"kind": "pv_savings_forecast", "horizon": 30}))]));
    let f30 = o.cost_forecast(30);
    push(CostPrediction, "What will my electricity bill be next month?", an,
        AnswerSpec::numeric(f30.predicted_cost.as_decimal(), "USD"), vec![],
        s("Your electricity bill for the next 30 days should be about ${{0/result/predicted_cost|2}}.")
            .turn(vec![a(json!({"kind": "cost_forecast", "horizon": 30}))]));
    let f7 = o.cost_forecast(7);
    let fc = |f: &tariff::CostForecast, name: &str| f.per_channel.get(name).map(|c| c.cost.as_decimal()).unwrap_or(0.0);
    push(CostPrediction, "How much will charging my EV cost next week?", an,
        AnswerSpec::numeric(fc(&f7, &ev), "USD"), vec![],
        s("Charging your EV should cost about ${{0/result/channel_cost|2}} next week.")
            .turn(vec![a(json!({"kind": "cost_forecast", "channel": "EV", "horizon": 7}))]));
    push(CostPrediction, "Estimate my electricity cost for tomorrow.", an,
        AnswerSpec::numeric(o.cost_forecast(1).predicted_cost.as_decimal(), "USD"), vec![],
        s("Tomorrow's electricity should cost about ${{0/result/predicted_cost|2}}.")
            .turn(vec![a(json!({"kind": "cost_forecast", "horizon": 1}))]));
    push(CostPrediction, &format!("How much will my {app_l} cost to run next month?"), an,
        AnswerSpec::numeric(fc(&f30, &app), "USD"), vec![],
        s("Your {{0/result/channel}} should cost about ${{0/result/channel_cost|2}} to run over the next 30 days.")
            .turn(vec![a(json!({"kind": "cost_forecast", "channel": app, "horizon": 30}))]));

    // Cost suggestions.
    push(CostSuggestions, "Based on my past month energy cost, can you give me some suggestions to save money on energy?", an_pr,
        AnswerSpec::answer(&[&top_cost]), vec![],
        s("Your most expensive load was {{0/result/ranked/0/channel}} at ${{0/result/ranked/0/cost|2}}. Peak rates apply {{1/peak/windows}}, so running it off-peak is the biggest lever.")
            .turn(vec![a(json!({"kind": "cost", "window": "month"}))])
            .turn(vec![c("pricing.search", json!({}))]));
    push(CostSuggestions, "How can I lower my electricity bill?", an_pr,
        AnswerSpec::answer(&["off-peak"]), vec![],
        s("Moving peak-hour use to off-peak hours ({{1/off_peak/windows}}) would have saved ${{0/result/total_savings|2}} last month.")
            .turn(vec![a(json!({"kind": "shift_savings", "window": "month"}))])
            .turn(vec![c("pricing.search", json!({"topic": "off-peak"}))]));
    push(CostSuggestions, "Would moving my EV charging out of peak hours save money?", an_pr,
        AnswerSpec::numeric(shift_of(&one(&ev)), "USD"), vec![],
        s("Charging only off-peak would have saved ${{0/result/channel_savings|2}} last month.")
            .turn(vec![a(json!({"kind": "shift_savings", "channel": "EV", "window": "month"}))])
            .turn(vec![c("pricing.search", json!({"topic": "EV"}))]));
    push(CostSuggestions, "What changes would cut my energy costs the most?", an_pr,
        AnswerSpec::answer(&[&shift.first().map(|s| s.channel.clone()).unwrap_or_default()]), vec![],
        s("Shifting {{0/result/opportunities/0/channel}} out of the peak window saves the most.")
            .turn(vec![a(json!({"kind": "shift_savings", "window": "month"}))])
            .turn(vec![c("pricing.search", json!({"topic": "peak"}))]));
    push(CostSuggestions, &format!("Is it worth running my {app_l} at night to save money?"), an_pr,
        AnswerSpec::numeric(shift_of(&one(&app)), "USD"), vec![],
        s("Running it only off-peak would have saved ${{0/result/channel_savings|2}} last month.")
            .turn(vec![a(json!({"kind": "shift_savings", "channel": app, "window": "month"}))])
            .turn(vec![c("pricing.search", json!({"topic": "off-peak"}))]));

    // Cost visualization.
    push(CostVisualization, "Show me the cost I spent on charging my car over the past month in a plot.", an,
        AnswerSpec::chart(&[ChartKind::Line, ChartKind::Bar]), vec![],
        s("Here is your daily car charging cost; ${{0/result/cost|2}} over the month.")
            .turn(vec![a(json!({"kind": "daily_cost", "channel": "car", "window": "month", "chart": "line"}))]));
    push(CostVisualization, "Plot my daily electricity cost for the past month.", an,
        AnswerSpec::chart(&[ChartKind::Bar, ChartKind::Line]), vec![],
        s("Here is your daily electricity cost, ${{0/result/cost|2}} in total.")
            .turn(vec![a(json!({"kind": "daily_cost", "window": "month", "chart": "bar"}))]));
    push(CostVisualization, "Show a pie chart of my electricity costs by appliance.", an,
        AnswerSpec::chart(&[ChartKind::Pie]), vec![],
        s("Here is your cost by appliance.")
            .turn(vec![a(json!({"kind": "cost", "window": "month", "chart": "pie"}))]));
    push(CostVisualization, "Chart my peak versus off-peak spending.", an,
        AnswerSpec::chart(&[ChartKind::Bar, ChartKind::Pie]), vec![],
        s("Here is peak versus off-peak spending.")
            .turn(vec![a(json!({"kind": "cost", "window": "month", "chart": "bar"}))]));
    push(CostVisualization, "Plot the forecast of my electricity cost over the next week.", an,
        AnswerSpec::chart(&[ChartKind::Line, ChartKind::Bar]), vec![],
        s("Here is the forecast daily cost for the next week, ${{0/result/predicted_cost|2}} in total.")
            .turn(vec![a(json!({"kind": "cost_forecast", "horizon": 7, "chart": "line"}))]));

    // Meter status.
    let mq = &["meters.query"];
    for (text, meter) in [
        ("What is my PV panel meter reading?".to_string(), pv.clone()),
        ("What is the current reading of my grid meter?".to_string(), grid.clone()),
        (format!("Show me the current reading of my {app_l} meter."), app.clone()),
        ("How much power is my EV charger meter showing?".to_string(), ev.clone()),
    ] {
        push(MeterStatus, &text, mq, AnswerSpec::numeric(meter_kw(&meter), "kW"), vec![],
            s("Your {{0/meters/0/name}} meter reads {{0/meters/0/value}} kW.").turn(vec![c("meters.query", json!({"meter": meter}))]));
    }
    push(MeterStatus, "List all of my energy meters.", mq,
        AnswerSpec::set(sensors.clone(), sensors.clone()), vec![],
        s("Your meters are: {{0/meters/*/name}}.").turn(vec![c("meters.query", json!({}))]));

    // Device status.
    let dq = &["devices.query"];
    let query = |d: &str| vec![c("devices.query", json!({"device": d}))];
    push(DeviceStatus, "Is the living room light currently on?", dq, AnswerSpec::answer(&["yes"]), vec![],
        s("Yes, the living room light is on at {{0/device/attributes/brightness}}% brightness.").turn(query("Living Room Light")));
    push(DeviceStatus, "What temperature is the AC set to?", dq, AnswerSpec::numeric(24.0, "°C"), vec![],
        s("The AC is set to {{0/device/attributes/setpoint}} degrees.").turn(query("AC")));
    push(DeviceStatus, "Is my kettle online?", dq, AnswerSpec::answer(&["offline"]), vec![],
        s("No, the kettle is offline.").turn(query("Kettle")));
    push(DeviceStatus, "What is the brightness of the kitchen light?", dq, AnswerSpec::numeric(80.0, "%"), vec![],
        s("The kitchen light's brightness is set to {{0/device/attributes/brightness}}%.").turn(query("Kitchen Light")));
    push(DeviceStatus, "What mode is the AC in right now?", dq, AnswerSpec::answer(&["cool"]), vec![],
        s("The AC is in {{0/device/attributes/mode}} mode.").turn(query("AC")));

    // Device operation: sync, query, execute.
    let op = &["devices.sync", "devices.query", "devices.execute"];
    let operate = |name: &str, attr: &str, v: Value, fin: &str| {
        s(fin)
            .turn(vec![c("devices.sync", json!({}))])
            .turn(vec![c("devices.query", json!({"device": name}))])
            .turn(vec![c("devices.execute", json!({"device": name, "attribute": attr, "value": v}))])
    };
    let diff = |devices: Vec<DeviceExpect>| AnswerSpec::StateDiff(StateDiffSpec { devices, ..Default::default() });
    push(DeviceOperation, "Set the AC to 20 degrees.", op, diff(vec![expect("ac", "setpoint", n(20.0))]), vec![],
        operate("AC", "setpoint", json!(20), "The AC is now set to {{2/device/attributes/setpoint}} degrees."));
    push(DeviceOperation, "Turn on the bedroom light.", op, diff(vec![expect("bedroom_light", "power", b(true))]), vec![],
        operate("Bedroom Light", "power", json!(true), "The bedroom light is on."));
    push(DeviceOperation, "Turn on the kettle.", op,
        AnswerSpec::StateDiff(StateDiffSpec { response_type: Some(ResponseType::Advisory), ..Default::default() }), vec![],
        operate("Kettle", "power", json!(true), "I couldn't turn on the kettle because it is offline. Check that it is plugged in and connected to Wi-Fi.")
            .respond_as(ResponseType::Advisory));
    push(DeviceOperation, "Set the ceiling fan to speed 3.", op, diff(vec![expect("ceiling_fan", "speed", n(3.0))]), vec![],
        operate("Ceiling Fan", "speed", json!(3), "The ceiling fan is set to speed {{2/device/attributes/speed}}."));
    push(DeviceOperation, "Switch the AC to heat mode.", op, diff(vec![expect("ac", "mode", t("heat"))]), vec![],
        operate("AC", "mode", json!("heat"), "The AC is now in {{2/device/attributes/mode}} mode."));

    // Group management: sync, then one selector command.
    let gm = &["devices.sync", "devices.execute"];
    let group = |by: &str, value: &str, on: bool, fin: &str| {
        s(fin)
            .turn(vec![c("devices.sync", json!({}))])
            .turn(vec![c("devices.execute", json!({"selector": {"by": by, "value": value}, "attribute": "power", "value": on}))])
    };
    push(GroupManagement, "Turn off all kitchen appliances.", gm,
        diff(vec![expect("coffee_maker", "power", b(false)), expect("microwave", "power", b(false)), expect("dishwasher", "power", b(false))]),
        vec![dev("coffee_maker", "power", b(true)), dev("microwave", "power", b(true))],
        group("tag", "kitchen_appliance", false, "I turned off the kitchen appliances. The kettle is offline, so I couldn't reach it."));
    let lights = |on: bool| ["living_room_light", "kitchen_light", "bedroom_light"].map(|d| expect(d, "power", b(on))).to_vec();
    push(GroupManagement, "Turn on all the lights.", gm, diff(lights(true)), vec![],
        group("tag", "light", true, "All the lights are on."));
    push(GroupManagement, "Turn off everything in the bedroom.", gm,
        diff(vec![expect("bedroom_light", "power", b(false)), expect("ceiling_fan", "power", b(false))]),
        vec![dev("bedroom_light", "power", b(true)), dev("ceiling_fan", "power", b(true))],
        group("room", "bedroom", false, "Everything in the bedroom is off."));
    push(GroupManagement, "Turn off all the lights.", gm, diff(lights(false)), vec![dev("kitchen_light", "power", b(true))],
        group("tag", "light", false, "All the lights are off."));
    push(GroupManagement, "Turn off all laundry appliances.", gm, diff(vec![expect("washing_machine", "power", b(false))]),
        vec![dev("washing_machine", "power", b(true))],
        group("tag", "laundry", false, "The laundry appliances are off."));

    // Custom configuration.
    push(CustomConfiguration, "Set the living room light to a brightness level good for reading.", op,
        diff(vec![expect("living_room_light", "brightness", n(75.0))]), vec![],
        operate("Living Room Light", "brightness", json!(75), "The living room light is now at {{2/device/attributes/brightness}}% brightness, which works well for reading."));
    push(CustomConfiguration, "Dim the bedroom light for a movie night.", op,
        diff(vec![expect("bedroom_light", "power", b(true)), expect("bedroom_light", "brightness", n(20.0))]), vec![],
        s("The bedroom light is on at {{3/device/attributes/brightness}}% for your movie.")
            .turn(vec![c("devices.sync", json!({}))])
            .turn(vec![c("devices.query", json!({"device": "Bedroom Light"}))])
            .turn(vec![
                c("devices.execute", json!({"device": "Bedroom Light", "attribute": "power", "value": true})),
                c("devices.execute", json!({"device": "Bedroom Light", "attribute": "brightness", "value": 20})),
            ]));
    push(CustomConfiguration, "Put the AC in eco mode.", op, diff(vec![expect("ac", "mode", t("eco"))]), vec![],
        operate("AC", "mode", json!("eco"), "The AC is now in eco mode."));
    push(CustomConfiguration, "Set the EV charger to charge at 16 amps.", op, diff(vec![expect("ev_charger", "charge_current", n(16.0))]), vec![],
        operate("EV Charger", "charge_current", json!(16), "The EV charger will now charge at {{2/device/attributes/charge_current}} A."));
    push(CustomConfiguration, "Run the dishwasher on the eco program.", op,
        diff(vec![expect("dishwasher", "program", t("eco")), expect("dishwasher", "power", b(true))]), vec![],
        s("The dishwasher is running the eco program.")
            .turn(vec![c("devices.sync", json!({}))])
            .turn(vec![c("devices.query", json!({"device": "Dishwasher"}))])
            .turn(vec![
                c("devices.execute", json!({"device": "Dishwasher", "attribute": "program", "value": "eco"})),
                c("devices.execute", json!({"device": "Dishwasher", "attribute": "power", "value": true})),
            ]));

    // Schedule information.
    let si = &["schedule.sync"];
    let ssync = |d: Option<&str>| vec![c("schedule.sync", d.map_or(json!({}), |d| json!({"device": d})))];
    let ev_22 = sched("ev_charger", "power", b(true), Trigger::daily(hm(22, 0)));
    let coffee_7 = sched("coffee_maker", "power", b(true), Trigger::daily(hm(7, 0)));
    let lr_23 = sched("living_room_light", "power", b(false), Trigger::daily(hm(23, 0)));
    push(ScheduleInformation, "Have I set a schedule for my car charger?", si, AnswerSpec::answer(&["22:00"]), vec![ev_22.clone()],
        s("Yes. Your EV charger turns on at {{0/schedules/0/trigger/at}} ({{0/schedules/0/trigger/recurrence}}).").turn(ssync(Some("EV Charger"))));
    push(ScheduleInformation, "What schedules do I have set up?", si,
        AnswerSpec::set(vec!["Coffee Maker".into(), "Living Room Light".into()], device_names.clone()), vec![coffee_7.clone(), lr_23.clone()],
        s("You have schedules for: {{0/schedules/*/device_id}}.").turn(ssync(None)));
    push(ScheduleInformation, "When will my coffee maker turn on next?", si, AnswerSpec::answer(&["07:00"]), vec![coffee_7.clone()],
        s("Your coffee maker turns on at {{0/schedules/0/trigger/at}} ({{0/schedules/0/trigger/recurrence}}).").turn(ssync(Some("Coffee Maker"))));
    push(ScheduleInformation, "Is there any automation for the kitchen light?", si, AnswerSpec::answer(&["dishwasher"]),
        vec![sched("kitchen_light", "power", b(true), Trigger::when("dishwasher", "power", CompareOp::Eq, b(true)))],
        s("Yes. The kitchen light turns on when the {{0/schedules/0/trigger/device_id}} turns on.").turn(ssync(Some("Kitchen Light"))));
    push(ScheduleInformation, "Do I have any schedules for the washing machine?", si, AnswerSpec::answer(&["no"]), vec![],
        s("No, there are no schedules for the washing machine.").turn(ssync(Some("Washing Machine"))));

    // General scheduling.
    let gs = &["devices.sync", "schedule.create"];
    let added = |m: Vec<ScheduleMatch>| AnswerSpec::StateDiff(StateDiffSpec { schedules_added: m, ..Default::default() });
    let create = |args: Value, fin: &str| s(fin).turn(vec![c("devices.sync", json!({}))]).turn(vec![c("schedule.create", args)]);
    let timed = |d: &str, attr: &str, v: AttributeValue, at: &str, r: Option<Recurrence>| ScheduleMatch {
        attribute: Some(attr.into()),
        value: Some(v),
        at: Some(at.into()),
        recurrence: r,
        ..sm(d)
    };
    push(GeneralScheduling, "Turn on my coffee maker at 7 in the morning.", gs,
        added(vec![timed("coffee_maker", "power", b(true), "07:00", None)]), vec![],
        create(json!({"device": "coffee_maker", "attribute": "power", "value": true, "trigger": {"type": "time", "at": "07:00", "recurrence": "daily"}}),
            "Your coffee maker will turn on at 7:00 AM every day."));
    push(GeneralScheduling, "Charge my car during off-peak hours.", &["devices.sync", "schedule.create", "pricing.search"],
        added(vec![
            timed("ev_charger", "power", b(true), &span_start, Some(Recurrence::Daily)),
            timed("ev_charger", "power", b(false), &span_end, Some(Recurrence::Daily)),
        ]), vec![],
        s("Your car will charge during off-peak hours, from {{0/off_peak_span/start}} to {{0/off_peak_span/end}} every day.")
            .turn(vec![c("pricing.search", json!({"topic": "off-peak"}))])
            .turn(vec![c("devices.sync", json!({}))])
            .turn(vec![c("schedule.create", json!({
                "device": "ev_charger", "attribute": "power", "value": true,
                "trigger": {"type": "time", "at": "{{0/off_peak_span/start}}", "recurrence": "daily"},
                "until": {"at": "{{0/off_peak_span/end}}", "value": false},
                "label": "Off-peak charging"
            }))]));
    push(GeneralScheduling, "Turn off the living room light at 11 PM every day.", gs,
        added(vec![timed("living_room_light", "power", b(false), "23:00", Some(Recurrence::Daily))]), vec![],
        create(json!({"device": "living_room_light", "attribute": "power", "value": false, "trigger": {"type": "time", "at": "23:00", "recurrence": "daily"}}),
            "The living room light will turn off at 11:00 PM every day."));
    push(GeneralScheduling, "Start the washing machine at 9 AM on weekdays.", gs,
        added(vec![timed("washing_machine", "power", b(true), "09:00", Some(Recurrence::Weekdays))]), vec![],
        create(json!({"device": "washing_machine", "attribute": "power", "value": true, "trigger": {"type": "time", "at": "09:00", "recurrence": "weekdays"}}),
            "The washing machine will start at 9:00 AM on weekdays."));
    push(GeneralScheduling, "Set the AC to 21 degrees when I go to sleep.", gs,
        added(vec![ScheduleMatch { attribute: Some("setpoint".into()), value: Some(n(21.0)), ..sm("ac") }]), vec![],
        s("What time do you usually go to sleep? I'll schedule the AC for then.").respond_as(ResponseType::NeedsClarification));

    // Conditional automation.
    let ca = &["devices.sync", "schedule.create"];
    let cond = |target: &str, attr: &str, v: Value, src: &str, sattr: &str, sv: Value, fin: &str| {
        create(json!({"device": target, "attribute": attr, "value": v, "trigger": {"type": "condition", "device_id": src, "attribute": sattr, "op": "eq", "value": sv}}), fin)
    };
    let when = |target: &str, attr: &str, v: AttributeValue, src: &str| {
        added(vec![ScheduleMatch { attribute: Some(attr.into()), value: Some(v), condition_device: Some(src.into()), ..sm(target) }])
    };
    push(ConditionalAutomation, "If the dishwasher is on, keep the kitchen light on.", ca, when("kitchen_light", "power", b(true), "dishwasher"), vec![],
        cond("kitchen_light", "power", json!(true), "dishwasher", "power", json!(true), "Done. The kitchen light will turn on whenever the dishwasher starts."));
    push(ConditionalAutomation, "When the washing machine turns on, turn off the EV charger.", ca, when("ev_charger", "power", b(false), "washing_machine"), vec![],
        cond("ev_charger", "power", json!(false), "washing_machine", "power", json!(true), "Done. The EV charger will switch off when the washing machine turns on."));
    push(ConditionalAutomation, "If the AC is switched to heat mode, turn off the ceiling fan.", ca, when("ceiling_fan", "power", b(false), "ac"), vec![],
        cond("ceiling_fan", "power", json!(false), "ac", "mode", json!("heat"), "Done. The ceiling fan will turn off when the AC switches to heat mode."));
    push(ConditionalAutomation, "Whenever the kitchen light turns on, turn on the living room light too.", ca, when("living_room_light", "power", b(true), "kitchen_light"), vec![],
        cond("living_room_light", "power", json!(true), "kitchen_light", "power", json!(true), "Done. The living room light will follow the kitchen light turning on."));
    push(ConditionalAutomation, "If the EV charger is on, put the AC in eco mode.", ca, when("ac", "mode", t("eco"), "ev_charger"), vec![],
        cond("ac", "mode", json!("eco"), "ev_charger", "power", json!(true), "Done. The AC will switch to eco mode when the EV charger turns on."));

    // Schedule management.
    let smt = &["schedule.sync", "schedule.change"];
    let change = |d: &str, edit: Value, fin: &str| {
        let mut args = json!({"schedule_id": "{{0/schedules/0/schedule_id}}"});
        if let (Some(o), Some(e)) = (args.as_object_mut(), edit.as_object()) {
            o.extend(e.clone());
        }
        s(fin).turn(ssync(Some(d))).turn(vec![c("schedule.change", args)])
    };
    let sdiff = |removed: Vec<ScheduleMatch>, changed: Vec<ScheduleMatch>| {
        AnswerSpec::StateDiff(StateDiffSpec { schedules_removed: removed, schedules_changed: changed, ..Default::default() })
    };
    push(ScheduleManagement, "Remove the schedule I set for AC.", smt, sdiff(vec![sm("ac")], vec![]),
        vec![sched("ac", "setpoint", n(22.0), Trigger::daily(hm(18, 0)))],
        change("AC", json!({"action": "delete"}), "I removed the AC schedule."));
    push(ScheduleManagement, "Disable my coffee maker schedule.", smt,
        sdiff(vec![], vec![ScheduleMatch { enabled: Some(false), ..sm("coffee_maker") }]), vec![coffee_7.clone()],
        change("Coffee Maker", json!({"action": "disable"}), "Your coffee maker schedule is disabled."));
    push(ScheduleManagement, "Change my coffee maker schedule to 6:30 AM.", smt,
        sdiff(vec![], vec![ScheduleMatch { at: Some("06:30".into()), ..sm("coffee_maker") }]), vec![coffee_7.clone()],
        change("Coffee Maker", json!({"action": "modify", "trigger": {"type": "time", "at": "06:30", "recurrence": "daily"}}),
            "Your coffee maker will now turn on at 6:30 AM."));
    push(ScheduleManagement, "Delete all the schedules for my EV charger.", smt, sdiff(vec![sm("ev_charger"), sm("ev_charger")], vec![]),
        vec![
            sched("ev_charger", "power", b(true), Trigger::daily(hm(20, 0))),
            sched("ev_charger", "power", b(false), Trigger::daily(hm(17, 0))),
        ],
        s("I deleted both EV charger schedules.").turn(ssync(Some("EV Charger"))).turn(vec![
            c("schedule.change", json!({"schedule_id": "{{0/schedules/0/schedule_id}}", "action": "delete"})),
            c("schedule.change", json!({"schedule_id": "{{0/schedules/1/schedule_id}}", "action": "delete"})),
        ]));
    push(ScheduleManagement, "Pause the living room light schedule.", smt,
        sdiff(vec![], vec![ScheduleMatch { enabled: Some(false), ..sm("living_room_light") }]), vec![lr_23.clone()],
        change("Living Room Light", json!({"action": "disable"}), "The living room light schedule is paused."));

    // Memory information.
    let mi = &["memory.sync"];
    let msync = |args: Value| vec![c("memory.sync", args)];
    let sunset = "Remember that I like the bedroom lights to be turned on at sunset.";
    let bedtime = "Remember to set the AC to 21 degrees at bedtime.";
    let coffee = "Remember that I like the coffee maker turned on at 7 in the morning.";
    let ac_fan = "Remember that I usually like to have the fan on for my AC.";
    let ev_pref = "Remember that I like the EV charger turned on after 8 p.m.";
    push(MemoryInformation, "What device do I usually turn on at sunset time?", mi, AnswerSpec::answer(&["bedroom"]), vec![mem(sunset)],
        s("You like the bedroom lights turned on at sunset. ({{0/memories/0/summary}})").turn(msync(json!({"text": "sunset"}))));
    push(MemoryInformation, "What are my AC preferences?", mi, AnswerSpec::answer(&["21"]), vec![mem(bedtime)],
        s("Here is what I have for the AC: {{0/memories/*/summary}}.").turn(msync(json!({"device": "ac"}))));
    push(MemoryInformation, "Do you remember when I like my coffee?", mi, AnswerSpec::answer(&["7:00"]), vec![mem(coffee)],
        s("Yes: {{0/memories/0/summary}}.").turn(msync(json!({"text": "coffee"}))));
    push(MemoryInformation, "What preferences have you saved about me?", mi, AnswerSpec::answer(&["sunset", "bedtime"]),
        vec![mem(sunset), mem(bedtime)],
        s("I have saved: {{0/memories/*/summary}}.").turn(msync(json!({}))));
    push(MemoryInformation, "Do I have any saved preferences for the EV charger?", mi, AnswerSpec::answer(&["no"]), vec![],
        s("No, I have no saved preferences for the EV charger.").turn(msync(json!({"device": "ev_charger"}))));

    // Memory creation.
    let madd = |m: MemoryMatch| AnswerSpec::StateDiff(StateDiffSpec { memories_added: vec![m], ..Default::default() });
    let remember = |u: &str| s("I'll remember that. {{0/memory/summary}}.").turn(vec![c("memory.create", json!({"utterance": u}))]);
    let mfull = |d: &str, attr: &str, v: &str| MemoryMatch {
        device: Some(d.into()),
        attribute: Some(attr.into()),
        value: Some(v.into()),
        text: None,
    };
    let mc = &["memory.create"];
    push(MemoryCreation, ac_fan, mc, madd(mfull("ac", "fan_mode", "on")), vec![], remember(ac_fan));
    let lower = "Remember that I prefer a lower AC setpoint after 10 p.m. every day.";
    push(MemoryCreation, lower, mc, madd(MemoryMatch { text: Some("10:00 PM".into()), ..mfull("ac", "setpoint", "lower") }), vec![], remember(lower));
    let kl = "Remember that I like the kitchen light turned off at night.";
    push(MemoryCreation, kl, mc, madd(mfull("kitchen_light", "power", "off")), vec![], remember(kl));
    let lr = "Remember that I want the living room light at 60 percent in the evening.";
    push(MemoryCreation, lr, mc, madd(mfull("living_room_light", "brightness", "60")), vec![], remember(lr));
    push(MemoryCreation, ev_pref, mc, madd(mfull("ev_charger", "power", "on")), vec![], remember(ev_pref));

    // Memory management.
    let mmt = &["memory.sync", "memory.change"];
    let mdiff = |removed: Vec<MemoryMatch>, changed: Vec<MemoryMatch>| {
        AnswerSpec::StateDiff(StateDiffSpec { memories_removed: removed, memories_changed: changed, ..Default::default() })
    };
    let forget = |filter: Value, fin: &str| {
        s(fin).turn(msync(filter)).turn(vec![c("memory.change", json!({"memory_id": "{{0/memories/0/memory_id}}", "action": "delete"}))])
    };
    push(MemoryManagement, "Forget my preference for the AC fan mode settings.", mmt, mdiff(vec![mm(Some("ac"), Some("fan"))], vec![]), vec![mem(ac_fan)],
        forget(json!({"text": "fan"}), "I've forgotten your AC fan preference."));
    push(MemoryManagement, "Delete my bedtime AC preference.", mmt, mdiff(vec![mm(Some("ac"), Some("bedtime"))], vec![]), vec![mem(bedtime)],
        forget(json!({"text": "bedtime"}), "I deleted your bedtime AC preference."));
    push(MemoryManagement, "Update my coffee preference to 6:30 in the morning.", mmt, mdiff(vec![], vec![mm(Some("coffee_maker"), Some("6:30"))]),
        vec![mem(coffee)],
        s("Updated: {{1/memory/summary}}.").turn(msync(json!({"text": "coffee"}))).turn(vec![c("memory.change", json!({
            "memory_id": "{{0/memories/0/memory_id}}", "action": "update", "fields": {"time_condition": "6:30 AM"}
        }))]));
    push(MemoryManagement, "Forget what I said about the bedroom lights.", mmt, mdiff(vec![mm(Some("bedroom_light"), None)], vec![]), vec![mem(sunset)],
        forget(json!({"text": "bedroom lights"}), "I've forgotten your bedroom lights preference."));
    push(MemoryManagement, "Remove my EV charger preference.", mmt, mdiff(vec![mm(Some("ev_charger"), None)], vec![]), vec![mem(ev_pref)],
        forget(json!({"text": "EV charger"}), "I removed your EV charger preference."));

    // Guidance.
    let gu = &["devices.sync"];
    let sync1 = || vec![c("devices.sync", json!({}))];
    push(Guidance, "Guide me through the process of controlling my smart devices.", gu, AnswerSpec::answer(&["Kettle"]), vec![],
        s("Your devices are: {{0/devices/*/name}}. Ask me to turn one on or off, change a setting such as brightness or temperature, or schedule it for later.").turn(sync1()));
    push(Guidance, "How do I set up a schedule for one of my devices?", gu, AnswerSpec::answer(&["schedule"]), vec![],
        s("Tell me the device, what it should do and when, for example \"turn on the coffee maker at 7 AM every day\". I'll create the schedule. You can schedule any of: {{0/devices/*/name}}.").turn(sync1()));
    push(Guidance, "What kinds of things can you help me with?", gu, AnswerSpec::answer(&["energy"]), vec![],
        s("I can report and forecast your energy use and cost, read your meters, control your devices ({{0/devices/*/name}}), manage schedules and automations, and remember your preferences.").turn(sync1()));
    push(Guidance, "Explain how to create an automation rule between two devices.", gu, AnswerSpec::answer(&["when"]), vec![],
        s("Describe the trigger and the action, for example \"when the dishwasher turns on, turn on the kitchen light\". Devices you can use: {{0/devices/*/name}}.").turn(sync1()));
    push(Guidance, "How do I ask you about my energy usage?", gu, AnswerSpec::answer(&["kWh"]), vec![],
        s("Ask in plain words, such as \"how much energy did I use last week?\". I answer in kWh and can break usage down by device, including {{0/devices/0/name}}.").turn(sync1()));

    // Troubleshooting.
    let ts = &["devices.query"];
    push(Troubleshooting, "My kettle doesn't work, can you help me check it?", ts,
        AnswerSpec::Response { expected: ResponseType::Advisory, must_mention: vec!["offline".into()], artifact: None }, vec![],
        s("Your kettle is offline. Check that it is plugged in and that your Wi-Fi is working, then try again.").turn(query("Kettle")).respond_as(ResponseType::Advisory));
    push(Troubleshooting, "My coffee maker won't turn on, what's wrong?", ts, AnswerSpec::answer(&["online"]), vec![],
        s("The coffee maker is online and responding. Try turning it on again, and check its water tank.").turn(query("Coffee Maker")));
    push(Troubleshooting, "The AC isn't cooling the room, can you check it?", ts, AnswerSpec::answer(&["cool"]), vec![],
        s("The AC is online in {{0/device/attributes/mode}} mode with a setpoint of {{0/device/attributes/setpoint}} degrees. Lower the setpoint or check the filter.").turn(query("AC")));
    push(Troubleshooting, "Why isn't my EV charger charging my car?", ts, AnswerSpec::answer(&["off"]), vec![],
        s("The EV charger is switched off. Turn it on and check the cable is seated.").turn(query("EV Charger")));
    push(Troubleshooting, "The kitchen light seems unresponsive, can you help?", ts, AnswerSpec::answer(&["online"]), vec![],
        s("The kitchen light is online and responding. Try switching it again or check the bulb.").turn(query("Kitchen Light")));

    // FAQ.
    let faq: [(&str, &str, &str); 5] = [
        ("What should I do if I want to add a new device to my smart network?", "network",
            "Pair the device with its companion app, connect it to your home network, and then ask me to sync your devices."),
        ("What is a time-of-use tariff?", "peak",
            "A time-of-use tariff charges different prices at different times of day, with a higher peak rate when demand is high."),
        ("What does kWh mean?", "kilowatt-hour",
            "A kWh, or kilowatt-hour, is the energy used by a 1,000-watt load running for one hour."),
        ("What is net metering?", "export",
            "Net metering credits you for solar energy you export to the grid, offsetting what you import."),
        ("Is my data kept private?", "local",
            "Your energy data stays on this local system and is only used to answer your questions."),
    ];
    for (text, word, fin) in faq {
        push(Faq, text, &[], AnswerSpec::answer(&[word]), vec![], s(fin));
    }

    // Bedtime is unknown, so asking is a reasonable move.
    for e in out.iter_mut().filter(|e| e.query.query_id == "GS-5") {
        e.query.ambiguous = true;
    }
    out
}

/// Category-ordered secondary codes, for reports.
pub fn secondary_order() -> Vec<Secondary> {
    Primary::ALL.iter().flat_map(|p| p.secondaries()).collect()
}

/// Ground-truth label counts, for sanity checks.
pub fn label_counts(b: &Battery) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for q in &b.queries {
        *m.entry(q.label.secondary.name().to_string()).or_default() += 1;
    }
    m
}
