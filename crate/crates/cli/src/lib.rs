//! Command-line entry points and the HTTP service for the home energy agent.

pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod server;

pub use config::{ProviderKind, ServiceConfig};
pub use error::CliError;
