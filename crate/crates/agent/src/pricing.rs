//! The `pricing.search` tool: reads the pricing document and returns its rate windows.

use bems_core::rates::format_clock;
use bems_core::RateSchedule;
use serde_json::{json, Value};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PricingError {
    #[error("no pricing document is available")]
    Missing,
    #[error("pricing document is unreadable: {0}")]
    Unreadable(String),
}

impl PricingError {
    pub fn code(&self) -> &'static str {
        match self {
            PricingError::Missing => "pricing_missing",
            PricingError::Unreadable(_) => "pricing_unreadable",
        }
    }
}

/// Parses the document and extracts the windows and rates. `topic` narrows the
/// answer ("ev", "peak", "off-peak", "export") but the full schedule is always included.
pub fn pricing_search(document: Option<&str>, topic: Option<&str>) -> Result<Value, PricingError> {
    let text = document.ok_or(PricingError::Missing)?;
    let r = RateSchedule::from_document(text).map_err(|e| PricingError::Unreadable(e.to_string()))?;
    let windows = |ws: &[bems_core::ClockWindow]| ws.iter().map(|w| w.to_string()).collect::<Vec<_>>();
    let mut out = json!({
        "currency": "USD",
        "off_peak": {"windows": windows(&r.off_peak_windows), "rate_per_kwh": r.off_peak_rate.as_decimal()},
        "peak": {"windows": windows(&r.peak_windows), "rate_per_kwh": r.peak_rate.as_decimal()},
        "export_credit_per_kwh": r.export_credit.as_decimal(),
        "ev_discount": {"window": r.ev_discount_window.to_string(), "rate_per_kwh": r.ev_discounted_rate.as_decimal()},
    });
    if let Some((start, end)) = r.off_peak_span() {
        out["off_peak_span"] = json!({"start": format_clock(start), "end": format_clock(end % 1440)});
    }
    if let Some(t) = topic {
        let t = t.to_ascii_lowercase();
        let focus = if t.contains("ev") || t.contains("car") || t.contains("vehicle") {
            out["ev_discount"].clone()
        } else if t.contains("export") || t.contains("solar") || t.contains("pv") {
            json!({"export_credit_per_kwh": out["export_credit_per_kwh"]})
        } else if t.contains("off") {
            out["off_peak"].clone()
        } else if t.contains("peak") {
            out["peak"].clone()
        } else {
            Value::Null
        };
        if !focus.is_null() {
            out["focus"] = focus;
        }
    }
    Ok(out)
}
