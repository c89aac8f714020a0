//! Analysis windows: half-open time ranges resolved against a series.

use std::fmt;
use std::ops::Range;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::EnergySeries;

/// `[start, end)` in building-local time. `None` bounds mean "from the beginning"/"to the end".
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<NaiveDateTime>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<NaiveDateTime>,
}

#[derive(Debug, Error, PartialEq)]
pub enum WindowError {
    #[error("window {0} lies outside the series")]
    OutOfRange(Window),
    #[error("window {0} is not aligned to the 15-minute grid")]
    Misaligned(Window),
    #[error("window {0} is empty")]
    Empty(Window),
    #[error("unrecognized window {0:?}")]
    Unrecognized(String),
}

impl Window {
    /// The whole series.
    pub const ALL: Window = Window { start: None, end: None };

    pub fn between(start: NaiveDateTime, end: NaiveDateTime) -> Self {
        Window { start: Some(start), end: Some(end) }
    }

    pub fn day(date: NaiveDate) -> Self {
        let start = date.and_hms_opt(0, 0, 0).unwrap_or_default();
        Window::between(start, start + Duration::days(1))
    }

    /// The trailing `days` days of `series`.
    pub fn last_days(series: &EnergySeries, days: i64) -> Self {
        let end = series.end();
        Window::between(end - Duration::days(days), end)
    }

    /// Parses a window keyword: "all"/"month"/"past_month", "last_week", "last_N_days",
    /// "YYYY-MM-DD" (one day), or "START/END" with ISO datetimes.
    pub fn parse(spec: &str, series: &EnergySeries) -> Result<Self, WindowError> {
        let s = spec.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        match s.as_str() {
            "" | "all" | "month" | "past_month" | "last_month" | "whole" => return Ok(Window::ALL),
            "last_week" | "past_week" => return Ok(Window::last_days(series, 7)),
            "last_day" | "yesterday" => return Ok(Window::last_days(series, 1)),
            _ => {}
        }
        if let Some(n) = s.strip_prefix("last_").and_then(|r| r.strip_suffix("_days")) {
            if let Ok(n) = n.parse::<i64>() {
                return Ok(Window::last_days(series, n));
            }
        }
        if let Ok(d) = NaiveDate::parse_from_str(spec.trim(), "%Y-%m-%d") {
            return Ok(Window::day(d));
        }
        if let Some((a, b)) = spec.split_once('/') {
            let p = |x: &str| {
                NaiveDateTime::parse_from_str(x.trim(), "%Y-%m-%dT%H:%M:%S")
                    .or_else(|_| NaiveDateTime::parse_from_str(x.trim(), "%Y-%m-%dT%H:%M"))
                    .ok()
            };
            if let (Some(a), Some(b)) = (p(a), p(b)) {
                return Ok(Window::between(a, b));
            }
        }
        Err(WindowError::Unrecognized(spec.to_string()))
    }

    /// Sample index range covered by the window. The window must be on the grid and inside the series.
    pub fn resolve(&self, series: &EnergySeries) -> Result<Range<usize>, WindowError> {
        let start = self.start.unwrap_or(series.start);
        let end = self.end.unwrap_or_else(|| series.end());
        let step = series.interval_minutes as i64 * 60;
        let offset = |t: NaiveDateTime| (t - series.start).num_seconds();
        let (a, b) = (offset(start), offset(end));
        if a % step != 0 || b % step != 0 {
            return Err(WindowError::Misaligned(*self));
        }
        if a < 0 || b > offset(series.end()) {
            return Err(WindowError::OutOfRange(*self));
        }
        if b <= a {
            return Err(WindowError::Empty(*self));
        }
        Ok((a / step) as usize..(b / step) as usize)
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.start, self.end) {
            (None, None) => f.write_str("[all]"),
            (s, e) => write!(
                f,
                "[{}, {})",
                s.map_or("start".to_string(), |t| t.to_string()),
                e.map_or("end".to_string(), |t| t.to_string())
            ),
        }
    }
}
