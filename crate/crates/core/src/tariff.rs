//! Time-of-use cost engine. All money sums are exact integer micro-units.

use std::collections::BTreeMap;
use std::ops::Range;

use chrono::NaiveDateTime;
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{self, AnalyticsError, ForecastMethod, Granularity, Scope};
use crate::rates::{minute_of_day, Band, RateSchedule};
use crate::series::{ChannelRole, EnergySeries};
use crate::units::{Energy, Money};
use crate::window::{Window, WindowError};

#[derive(Debug, Error, PartialEq)]
pub enum TariffError {
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
}

pub fn band_of(t: NaiveDateTime, rates: &RateSchedule) -> Band {
    rates.band_at_minute(minute_of_day(t.time()))
}

/// The rate a channel pays in the interval starting at `t`. The EV discount
/// replaces the band rate for the EV channel inside its window.
pub fn rate_for(role: ChannelRole, t: NaiveDateTime, rates: &RateSchedule) -> Money {
    if role == ChannelRole::EvCharger && rates.ev_discount_window.contains(t.time()) {
        rates.ev_discounted_rate
    } else {
        rates.rate_for(band_of(t, rates))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChannelCost {
    pub energy: Energy,
    pub cost: Money,
    pub peak_energy: Energy,
    pub off_peak_energy: Energy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub window: Window,
    pub per_channel: IndexMap<String, ChannelCost>,
    pub per_band: IndexMap<Band, Money>,
    pub energy_per_band: IndexMap<Band, Energy>,
    pub exported_energy: Energy,
    pub export_credit_total: Money,
    pub ev_discount_savings: Money,
    pub gross_total: Money,
    pub net_total: Money,
}

impl CostBreakdown {
    pub fn channel_cost(&self, names: &[String]) -> Money {
        names.iter().filter_map(|n| self.per_channel.get(n)).map(|c| c.cost).sum()
    }

    pub fn channel_energy(&self, names: &[String]) -> Energy {
        names.iter().filter_map(|n| self.per_channel.get(n)).map(|c| c.energy).sum()
    }
}

/// Bills every consumption channel per interval at its rate and credits exported energy.
pub fn cost(series: &EnergySeries, rates: &RateSchedule, window: &Window) -> Result<CostBreakdown, TariffError> {
    let range = window.resolve(series)?;
    let mut per_channel = IndexMap::new();
    let mut per_band: IndexMap<Band, Money> = [(Band::OffPeak, Money::ZERO), (Band::Peak, Money::ZERO)].into_iter().collect();
    let mut energy_per_band: IndexMap<Band, Energy> =
        [(Band::OffPeak, Energy::ZERO), (Band::Peak, Energy::ZERO)].into_iter().collect();
    let mut ev_discount_savings = Money::ZERO;
    let bands: Vec<Band> = range.clone().map(|i| band_of(series.timestamp(i), rates)).collect();

    for name in series.consumption_channels() {
        let role = series.role(name).unwrap_or(ChannelRole::Appliance);
        let samples = series.channel(name).unwrap_or(&[]);
        let mut c = ChannelCost::default();
        for (k, i) in range.clone().enumerate() {
            let t = series.timestamp(i);
            let e = Energy::from_interval_kw(samples[i]);
            let band = bands[k];
            let band_rate = rates.rate_for(band);
            let rate = rate_for(role, t, rates);
            let billed = Money::for_energy(e, rate);
            if rate != band_rate {
                ev_discount_savings += Money::for_energy(e, band_rate) - billed;
            }
            c.energy += e;
            c.cost += billed;
            match band {
                Band::Peak => c.peak_energy += e,
                Band::OffPeak => c.off_peak_energy += e,
            }
            per_band[&band] += billed;
            energy_per_band[&band] += e;
        }
        per_channel.insert(name.to_string(), c);
    }

    let mut exported_energy = Energy::ZERO;
    let mut export_credit_total = Money::ZERO;
    if let Some(grid) = series.grid_channel().and_then(|g| series.channel(g)) {
        for i in range {
            if grid[i] < 0.0 {
                let e = Energy::from_interval_kw(-grid[i]);
                exported_energy += e;
                export_credit_total += Money::for_energy(e, rates.export_credit);
            }
        }
    }
    let gross_total: Money = per_channel.values().map(|c| c.cost).sum();
    Ok(CostBreakdown {
        window: *window,
        per_channel,
        per_band,
        energy_per_band,
        exported_energy,
        export_credit_total,
        ev_discount_savings,
        gross_total,
        net_total: gross_total - export_credit_total,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelForecast {
    pub energy: Energy,
    pub cost: Money,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostForecast {
    pub method: ForecastMethod,
    pub horizon: usize,
    pub predicted_energy: Energy,
    pub predicted_cost: Money,
    pub per_channel: IndexMap<String, ChannelForecast>,
}

/// Rate classes a channel's historical energy fell into, keyed by rate.
fn rate_shares(series: &EnergySeries, rates: &RateSchedule, name: &str, range: Range<usize>) -> BTreeMap<Money, Energy> {
    let role = series.role(name).unwrap_or(ChannelRole::Appliance);
    let samples = series.channel(name).unwrap_or(&[]);
    let mut shares: BTreeMap<Money, Energy> = BTreeMap::new();
    for i in range {
        *shares.entry(rate_for(role, series.timestamp(i), rates)).or_default() += Energy::from_interval_kw(samples[i]);
    }
    shares
}

/// Clock-time share of each rate, for channels with no history to learn from.
fn clock_shares(rates: &RateSchedule, role: ChannelRole) -> BTreeMap<Money, Energy> {
    let mut shares: BTreeMap<Money, Energy> = BTreeMap::new();
    let day = chrono::NaiveDate::from_ymd_opt(2000, 1, 1).and_then(|d| d.and_hms_opt(0, 0, 0)).unwrap_or_default();
    for q in 0..96 {
        let t = day + chrono::Duration::minutes(15 * q);
        *shares.entry(rate_for(role, t, rates)).or_default() += Energy::from_nano_kwh(1);
    }
    shares
}

/// Splits `total` across rate classes in proportion to `shares`. The pieces add up to
/// `total` exactly; classes sharing a rate are priced together.
pub fn price_by_shares(total: Energy, shares: &BTreeMap<Money, Energy>) -> Money {
    let denom: Energy = shares.values().sum();
    if total.is_zero() || denom.is_zero() {
        return Money::ZERO;
    }
    let mut remaining = total;
    let mut cost = Money::ZERO;
    let last = shares.len() - 1;
    for (k, (rate, part)) in shares.iter().enumerate() {
        let piece = if k == last { remaining } else { total.scale(*part, denom) };
        remaining -= piece;
        cost += Money::for_energy(piece, *rate);
    }
    cost
}

/// Forecasts each consumption channel and prices the prediction by that channel's
/// historical rate mix. Negative predictions count as zero.
pub fn cost_forecast(
    series: &EnergySeries,
    rates: &RateSchedule,
    method: ForecastMethod,
    horizon: usize,
    window: &Window,
) -> Result<CostForecast, TariffError> {
    let range = window.resolve(series)?;
    let mut per_channel = IndexMap::new();
    for name in series.consumption_channels() {
        let f = analytics::forecast(series, &Scope::Channel(name.to_string()), Granularity::Interval, method, horizon, window)?;
        let energy: Energy = f.predicted.iter().map(|&kwh| Energy::from_kwh(kwh.max(0.0))).sum();
        let mut shares = rate_shares(series, rates, name, range.clone());
        if shares.values().all(|e| e.is_zero()) {
            shares = clock_shares(rates, series.role(name).unwrap_or(ChannelRole::Appliance));
        }
        let cost = price_by_shares(energy, &shares);
        per_channel.insert(name.to_string(), ChannelForecast { energy, cost });
    }
    Ok(CostForecast {
        method,
        horizon,
        predicted_energy: per_channel.values().map(|c| c.energy).sum(),
        predicted_cost: per_channel.values().map(|c| c.cost).sum(),
        per_channel,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PvValue {
    pub generated: Energy,
    pub self_consumed: Energy,
    pub exported: Energy,
    /// Bills avoided by self-consumption plus export credits.
    pub value: Money,
}

/// Money the PV system saved over the window: self-consumed energy valued at the
/// band rate of its interval, plus export credit.
pub fn pv_value(series: &EnergySeries, rates: &RateSchedule, window: &Window) -> Result<PvValue, TariffError> {
    let range = window.resolve(series)?;
    let gen_name = series.generation_channel().ok_or(AnalyticsError::NoGeneration)?;
    let gen = series.channel(gen_name).unwrap_or(&[]);
    let grid = series.grid_channel().and_then(|g| series.channel(g)).unwrap_or(&[]);
    let mut out = PvValue { generated: Energy::ZERO, self_consumed: Energy::ZERO, exported: Energy::ZERO, value: Money::ZERO };
    for i in range {
        let g = Energy::from_interval_kw(gen[i]);
        let x = Energy::from_interval_kw((-grid.get(i).copied().unwrap_or(0.0)).max(0.0));
        let own = (g - x).max(Energy::ZERO);
        out.generated += g;
        out.exported += x;
        out.self_consumed += own;
        out.value += Money::for_energy(own, rates.rate_for(band_of(series.timestamp(i), rates)))
            + Money::for_energy(x, rates.export_credit);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PvSavingsForecast {
    pub predicted_generation: Energy,
    pub predicted_savings: Money,
    pub historical: PvValue,
}

/// Projects PV savings: forecast generation priced at the window's historical value per kWh.
pub fn pv_savings_forecast(
    series: &EnergySeries,
    rates: &RateSchedule,
    method: ForecastMethod,
    horizon: usize,
    window: &Window,
) -> Result<PvSavingsForecast, TariffError> {
    let historical = pv_value(series, rates, window)?;
    let gen_name = series.generation_channel().ok_or(AnalyticsError::NoGeneration)?;
    let f = analytics::forecast(series, &Scope::Channel(gen_name.to_string()), Granularity::Interval, method, horizon, window)?;
    let predicted_generation: Energy = f.predicted.iter().map(|&kwh| Energy::from_kwh(kwh.max(0.0))).sum();
    let predicted_savings = if historical.generated.is_zero() {
        Money::ZERO
    } else {
        let num = historical.value.micros() as i128 * predicted_generation.nano_kwh() as i128;
        Money::from_micros(crate::units::div_round_half_even(num, historical.generated.nano_kwh() as i128) as i64)
    };
    Ok(PvSavingsForecast { predicted_generation, predicted_savings, historical })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftOpportunity {
    pub channel: String,
    pub peak_energy: Energy,
    /// Saved if all of the channel's peak-band energy moved to off-peak.
    pub savings: Money,
}

/// Channels ranked by what shifting their peak-band use to off-peak would save.
pub fn shift_savings(series: &EnergySeries, rates: &RateSchedule, window: &Window) -> Result<Vec<ShiftOpportunity>, TariffError> {
    let breakdown = cost(series, rates, window)?;
    let delta = rates.peak_rate - rates.off_peak_rate;
    let mut out: Vec<ShiftOpportunity> = breakdown
        .per_channel
        .iter()
        .map(|(name, c)| ShiftOpportunity {
            channel: name.clone(),
            peak_energy: c.peak_energy,
            savings: Money::for_energy(c.peak_energy, delta),
        })
        .collect();
    out.sort_by(|a, b| b.peak_energy.cmp(&a.peak_energy));
    Ok(out)
}
