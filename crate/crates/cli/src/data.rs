//! Buildings and providers as the configuration describes them.

use std::path::PathBuf;
use std::time::Duration;

use bems_agent::{Fixture, LiveConfig, LiveProvider, Provider, ScriptedProvider};
use bems_bench::fixture::synthetic_building;
use bems_core::ingestion::{load_history, LoadOptions};
use bems_core::{BuildingProfile, EnergySeries};

use crate::config::{ProviderKind, ServiceConfig};
use crate::error::CliError;

pub fn history_path(cfg: &ServiceConfig, building_id: &str) -> PathBuf {
    cfg.data_dir.join(format!("{building_id}.csv"))
}

/// The building's profile with its ingested history, or a synthetic month when none was ingested.
pub fn load_building(cfg: &ServiceConfig, building_id: &str) -> Result<(BuildingProfile, EnergySeries), CliError> {
    let path = history_path(cfg, building_id);
    if path.exists() {
        let profile = BuildingProfile::preset(building_id)
            .ok_or_else(|| CliError::Input(format!("no profile for building {building_id}")))?;
        let (series, _) = load_history(&path, building_id, &LoadOptions::default())
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        return Ok((profile, series));
    }
    synthetic_building(building_id, cfg.seed).ok_or_else(|| CliError::Input(format!("unknown building {building_id}")))
}

pub fn build_provider(cfg: &ServiceConfig, building_id: &str) -> Result<Box<dyn Provider>, CliError> {
    match cfg.provider.kind {
        ProviderKind::Scripted => {
            let path = cfg.provider.fixture.as_ref().ok_or_else(|| CliError::Config("no fixture path".into()))?;
            let file = if path.is_dir() { path.join(format!("{building_id}.json")) } else { path.clone() };
            let fixture = Fixture::load(&file).map_err(|e| CliError::Input(format!("fixture {}: {e}", file.display())))?;
            Ok(Box::new(ScriptedProvider::new(fixture)))
        }
        ProviderKind::Live => {
            let base_url = cfg.provider.endpoint.clone().ok_or_else(|| CliError::Config("no endpoint".into()))?;
            let api_key = cfg.credential.clone().ok_or_else(|| CliError::Config("no credential".into()))?;
            let timeout = Duration::from_secs(cfg.provider.timeout_s);
            Ok(Box::new(LiveProvider::new(LiveConfig { base_url, api_key, timeout })))
        }
    }
}
