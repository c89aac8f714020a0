//! Time-of-use rate schedule and its human-editable pricing document.

use std::fmt;
use std::str::FromStr;

use chrono::{NaiveTime, Timelike};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::units::Money;

pub const MINUTES_PER_DAY: u16 = 1440;

/// A half-open `[start, end)` range of wall-clock minutes; `end` may be 1440 ("24:00").
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClockWindow {
    pub start: u16,
    pub end: u16,
}

impl ClockWindow {
    pub fn new(start: u16, end: u16) -> Result<Self, RateError> {
        if start >= end || end > MINUTES_PER_DAY {
            return Err(RateError::BadWindow(format_clock(start) + "-" + &format_clock(end)));
        }
        Ok(ClockWindow { start, end })
    }

    pub fn hours(start_h: u16, end_h: u16) -> Self {
        ClockWindow { start: start_h * 60, end: end_h * 60 }
    }

    pub fn contains_minute(&self, minute: u16) -> bool {
        self.start <= minute && minute < self.end
    }

    pub fn contains(&self, t: NaiveTime) -> bool {
        self.contains_minute(minute_of_day(t))
    }

    pub fn len_minutes(&self) -> u16 {
        self.end - self.start
    }

    pub fn start_time(&self) -> NaiveTime {
        clock_time(self.start)
    }
}

pub fn minute_of_day(t: NaiveTime) -> u16 {
    (t.hour() * 60 + t.minute()) as u16
}

/// `minute` as a time of day; 1440 maps to midnight.
pub fn clock_time(minute: u16) -> NaiveTime {
    let m = (minute % MINUTES_PER_DAY) as u32;
    NaiveTime::from_hms_opt(m / 60, m % 60, 0).unwrap_or(NaiveTime::MIN)
}

pub fn format_clock(minute: u16) -> String {
    format!("{:02}:{:02}", minute / 60, minute % 60)
}

fn parse_clock(s: &str) -> Option<u16> {
    let (h, m) = s.trim().split_once(':')?;
    let h: u16 = h.parse().ok()?;
    let m: u16 = m.parse().ok()?;
    let total = h.checked_mul(60)?.checked_add(m)?;
    (m < 60 && total <= MINUTES_PER_DAY).then_some(total)
}

impl fmt::Display for ClockWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", format_clock(self.start), format_clock(self.end))
    }
}

impl FromStr for ClockWindow {
    type Err = RateError;

    /// Parses "HH:MM-HH:MM" (spaces and en dashes tolerated).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || RateError::BadWindow(s.to_string());
        let cleaned = s.replace('–', "-");
        let (a, b) = cleaned.split_once('-').ok_or_else(bad)?;
        let start = parse_clock(a).ok_or_else(bad)?;
        let end = parse_clock(b).ok_or_else(bad)?;
        ClockWindow::new(start, end)
    }
}

impl Serialize for ClockWindow {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ClockWindow {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    Peak,
    OffPeak,
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Band::Peak => "peak",
            Band::OffPeak => "off_peak",
        })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RateError {
    #[error("malformed clock window {0:?}")]
    BadWindow(String),
    #[error("rate windows overlap at {0}")]
    Overlap(String),
    #[error("rate windows leave {0} uncovered")]
    Gap(String),
    #[error("negative rate {0}")]
    NegativeRate(&'static str),
    #[error("pricing document: {0}")]
    Document(String),
}

/// Time-of-use pricing. All money values are per kWh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSchedule {
    pub off_peak_windows: Vec<ClockWindow>,
    pub peak_windows: Vec<ClockWindow>,
    pub off_peak_rate: Money,
    pub peak_rate: Money,
    pub export_credit: Money,
    pub ev_discount_window: ClockWindow,
    pub ev_discounted_rate: Money,
}

impl Default for RateSchedule {
    /// Windows as published for the testbeds; the prices are synthetic placeholders.
    fn default() -> Self {
        RateSchedule {
            off_peak_windows: vec![ClockWindow::hours(0, 17), ClockWindow::hours(20, 24)],
            peak_windows: vec![ClockWindow::hours(17, 20)],
            off_peak_rate: Money::from_decimal(0.10),
            peak_rate: Money::from_decimal(0.20),
            export_credit: Money::from_decimal(0.08),
            ev_discount_window: ClockWindow::hours(0, 6),
            ev_discounted_rate: Money::from_decimal(0.05),
        }
    }
}

impl RateSchedule {
    /// Flat single-rate schedule: everything off-peak at `rate`, EV at `rate` too.
    pub fn flat(rate: Money) -> Self {
        RateSchedule {
            off_peak_windows: vec![ClockWindow::hours(0, 24)],
            peak_windows: Vec::new(),
            off_peak_rate: rate,
            peak_rate: rate,
            export_credit: Money::ZERO,
            ev_discount_window: ClockWindow::hours(0, 6),
            ev_discounted_rate: rate,
        }
    }

    /// Checks that peak and off-peak windows partition the day and that no rate is negative.
    pub fn validate(&self) -> Result<(), RateError> {
        for (name, r) in [
            ("off_peak_rate", self.off_peak_rate),
            ("peak_rate", self.peak_rate),
            ("export_credit", self.export_credit),
            ("ev_discounted_rate", self.ev_discounted_rate),
        ] {
            if r.is_negative() {
                return Err(RateError::NegativeRate(name));
            }
        }
        let mut all: Vec<ClockWindow> =
            self.off_peak_windows.iter().chain(&self.peak_windows).copied().collect();
        all.sort();
        let mut cursor = 0u16;
        for w in &all {
            if w.start < cursor {
                return Err(RateError::Overlap(format_clock(w.start)));
            }
            if w.start > cursor {
                return Err(RateError::Gap(format_clock(cursor)));
            }
            cursor = w.end;
        }
        if cursor != MINUTES_PER_DAY {
            return Err(RateError::Gap(format_clock(cursor)));
        }
        Ok(())
    }

    pub fn band_at_minute(&self, minute: u16) -> Band {
        if self.peak_windows.iter().any(|w| w.contains_minute(minute)) {
            Band::Peak
        } else {
            Band::OffPeak
        }
    }

    pub fn rate_for(&self, band: Band) -> Money {
        match band {
            Band::Peak => self.peak_rate,
            Band::OffPeak => self.off_peak_rate,
        }
    }

    /// Off-peak windows merged across midnight, e.g. 20:00–17:00 for the default schedule.
    /// Returned as (start minute, end minute) where end < start means the span wraps.
    pub fn off_peak_span(&self) -> Option<(u16, u16)> {
        let mut ws = self.off_peak_windows.clone();
        ws.sort();
        let mut merged: Vec<ClockWindow> = Vec::new();
        for w in ws {
            match merged.last_mut() {
                Some(last) if last.end == w.start => last.end = w.end,
                _ => merged.push(w),
            }
        }
        match merged.as_slice() {
            [only] => Some((only.start, only.end % MINUTES_PER_DAY)),
            [first, .., last] if first.start == 0 && last.end == MINUTES_PER_DAY && merged.len() == 2 => {
                Some((last.start, first.end))
            }
            _ => None,
        }
    }

    /// The human-editable pricing document.
    pub fn to_document(&self) -> String {
        let body = toml::to_string_pretty(&PricingDoc::from(self)).unwrap_or_default();
        format!(
            "# Time-of-use electricity pricing. Windows are [start, end) in local building time.\n\
             # Prices are per kWh and are synthetic defaults, edit to match your utility.\n\n{body}"
        )
    }

    pub fn from_document(text: &str) -> Result<Self, RateError> {
        let doc: PricingDoc = toml::from_str(text).map_err(|e| RateError::Document(e.to_string()))?;
        let rates = RateSchedule::try_from(doc)?;
        rates.validate()?;
        Ok(rates)
    }
}

#[derive(Serialize, Deserialize)]
struct PricingDoc {
    currency: String,
    off_peak: BandDoc,
    peak: BandDoc,
    export: ExportDoc,
    ev_discount: EvDoc,
}

#[derive(Serialize, Deserialize)]
struct BandDoc {
    windows: Vec<ClockWindow>,
    rate_per_kwh: f64,
}

#[derive(Serialize, Deserialize)]
struct ExportDoc {
    credit_per_kwh: f64,
}

#[derive(Serialize, Deserialize)]
struct EvDoc {
    window: ClockWindow,
    rate_per_kwh: f64,
}

impl From<&RateSchedule> for PricingDoc {
    fn from(r: &RateSchedule) -> Self {
        PricingDoc {
            currency: "USD".into(),
            off_peak: BandDoc { windows: r.off_peak_windows.clone(), rate_per_kwh: r.off_peak_rate.as_decimal() },
            peak: BandDoc { windows: r.peak_windows.clone(), rate_per_kwh: r.peak_rate.as_decimal() },
            export: ExportDoc { credit_per_kwh: r.export_credit.as_decimal() },
            ev_discount: EvDoc { window: r.ev_discount_window, rate_per_kwh: r.ev_discounted_rate.as_decimal() },
        }
    }
}

impl TryFrom<PricingDoc> for RateSchedule {
    type Error = RateError;

    fn try_from(d: PricingDoc) -> Result<Self, RateError> {
        Ok(RateSchedule {
            off_peak_windows: d.off_peak.windows,
            peak_windows: d.peak.windows,
            off_peak_rate: Money::from_decimal(d.off_peak.rate_per_kwh),
            peak_rate: Money::from_decimal(d.peak.rate_per_kwh),
            export_credit: Money::from_decimal(d.export.credit_per_kwh),
            ev_discount_window: d.ev_discount.window,
            ev_discounted_rate: Money::from_decimal(d.ev_discount.rate_per_kwh),
        })
    }
}
