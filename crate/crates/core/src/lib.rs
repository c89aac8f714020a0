//! Core building-energy types and the deterministic analytics and tariff engines.
//!
//! Energy is held as integer nano-kWh ([`Energy`]) and money as integer micro-units
//! ([`Money`]), so aggregation and billing are exact regardless of summation order.

pub mod analytics;
pub mod device;
pub mod ingestion;
pub mod meter;
pub mod profile;
pub mod rates;
pub mod series;
pub mod tariff;
pub mod taxonomy;
pub mod tokens;
pub mod units;
pub mod window;

pub use device::{AttributeSpec, AttributeValue, DeviceState, ValueError};
pub use meter::{MeterSnapshot, MeterStatus};
pub use profile::{BuildingProfile, Season};
pub use rates::{Band, ClockWindow, RateSchedule};
pub use series::{validate_series, ChannelRole, EndUse, EnergySeries, ValidationReport, Violation, ViolationKind};
pub use taxonomy::{taxonomy_check, IntentLabel, Primary, Secondary};
pub use tokens::{TokenCost, TokenPricing, TokenUsage};
pub use units::{Energy, Money, INTERVALS_PER_DAY, INTERVAL_HOURS, INTERVAL_MINUTES};
pub use window::Window;
