//! Loading historical CSV and meter documents, and generating synthetic months.

mod history;
mod synth;

use chrono::NaiveDateTime;
use thiserror::Error;

pub use crate::meter::{load_meters, load_meters_str, meters_document, MeterError};
pub use history::{
    history_to_string, load_history, read_history, save_history, write_history, IngestionReport,
    LoadOptions, Rejection, RoleMap,
};
pub use synth::{daylight_window, pv_capacity_kw, season_start, synth_month};

use crate::series::ValidationReport;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("no data rows")]
    NoDataRows,
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("non-monotone timestamps at {at}")]
    NonMonotone { at: NaiveDateTime },
    #[error("interval is not 15 minutes at {at} (enable resampling to average into 15-minute buckets)")]
    BadInterval { at: NaiveDateTime },
    #[error("gap of {missing} missing intervals after {after}")]
    Gap { after: NaiveDateTime, missing: usize },
    #[error("series failed validation: {0}")]
    Invalid(ValidationReport),
    #[error("days must be between 28 and 31, got {0}")]
    InvalidDays(u32),
    #[error("{0}")]
    Io(String),
}
