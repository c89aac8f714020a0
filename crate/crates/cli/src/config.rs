//! Service configuration, read from TOML with the provider credential taken from the environment.

use std::fmt;
use std::path::{Path, PathBuf};

use bems_bench::report::DEFAULT_OUTLIER_S;
use bems_core::{BuildingProfile, Money, TokenPricing};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_CREDENTIAL_ENV: &str = "BEMS_API_KEY";
pub const DEFAULT_TOKEN_ENV: &str = "BEMS_SERVICE_TOKEN";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[default]
    Scripted,
    Live,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    /// A fixture file, or a directory holding one `<building>.json` per building.
    pub fixture: Option<PathBuf>,
    /// Chat-completions base URL for the live provider.
    pub endpoint: Option<String>,
    /// Name of the environment variable holding the live provider's key.
    pub credential_env: String,
    pub model: Option<String>,
    pub timeout_s: u64,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            kind: ProviderKind::Scripted,
            fixture: Some(PathBuf::from("data/fixtures")),
            endpoint: None,
            credential_env: DEFAULT_CREDENTIAL_ENV.into(),
            model: None,
            timeout_s: 120,
        }
    }
}

/// Token prices in dollars per million tokens.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PricingConfig {
    pub input_per_million: f64,
    pub output_per_million: f64,
}

impl Default for PricingConfig {
    fn default() -> Self {
        let d = TokenPricing::default();
        PricingConfig {
            input_per_million: d.input_price_per_million.as_decimal(),
            output_per_million: d.output_price_per_million.as_decimal(),
        }
    }
}

impl PricingConfig {
    pub fn pricing(&self) -> TokenPricing {
        TokenPricing {
            input_price_per_million: Money::from_decimal(self.input_per_million),
            output_price_per_million: Money::from_decimal(self.output_per_million),
        }
    }
}

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    /// Ingested histories (`<building>.csv`), bench output and chart files live here.
    pub data_dir: PathBuf,
    pub buildings: Vec<String>,
    /// Seed for synthetic months when a building has no ingested history.
    pub seed: u64,
    pub provider: ProviderConfig,
    pub listen: String,
    pub pricing: PricingConfig,
    pub outlier_threshold_s: f64,
    /// Static UI bundle served under `/`.
    pub static_dir: Option<PathBuf>,
    /// Environment variable holding the API token; the API is open when it is unset.
    pub token_env: String,
    #[serde(skip)]
    pub credential: Option<String>,
    #[serde(skip)]
    pub api_token: Option<String>,
}

impl fmt::Debug for ServiceConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ServiceConfig")
            .field("data_dir", &self.data_dir)
            .field("buildings", &self.buildings)
            .field("seed", &self.seed)
            .field("provider", &self.provider)
            .field("listen", &self.listen)
            .field("pricing", &self.pricing)
            .field("outlier_threshold_s", &self.outlier_threshold_s)
            .field("static_dir", &self.static_dir)
            .field("credential", &self.credential.as_ref().map(|_| "<redacted>"))
            .field("api_token", &self.api_token.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            data_dir: PathBuf::from("data"),
            buildings: BuildingProfile::PRESET_IDS.iter().map(|s| s.to_string()).collect(),
            seed: 7,
            provider: ProviderConfig::default(),
            listen: "127.0.0.1:8080".into(),
            pricing: PricingConfig::default(),
            outlier_threshold_s: DEFAULT_OUTLIER_S,
            static_dir: None,
            token_env: DEFAULT_TOKEN_ENV.into(),
            credential: None,
            api_token: None,
        }
    }
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))
    }

    /// Reads the file when given, fills secrets from the environment and validates.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let cfg = Self::load_unchecked(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Like [`ServiceConfig::load`] without the provider checks, for commands that never call a model.
    pub fn load_unchecked(path: Option<&Path>) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                Self::from_toml(&text)?
            }
            None => ServiceConfig::default(),
        };
        cfg.resolve_env(|k| std::env::var(k).ok());
        Ok(cfg)
    }

    pub fn resolve_env(&mut self, get: impl Fn(&str) -> Option<String>) {
        self.credential = get(&self.provider.credential_env).filter(|v| !v.is_empty());
        self.api_token = get(&self.token_env).filter(|v| !v.is_empty());
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if self.buildings.is_empty() {
            return bad("at least one building is required");
        }
        if !(self.outlier_threshold_s > 0.0) {
            return bad("outlier_threshold_s must be positive");
        }
        if self.pricing.input_per_million < 0.0 || self.pricing.output_per_million < 0.0 {
            return bad("token prices must not be negative");
        }
        match self.provider.kind {
            ProviderKind::Scripted if self.provider.fixture.is_none() => bad("the scripted provider needs a fixture path"),
            ProviderKind::Live if self.provider.endpoint.is_none() => bad("the live provider needs an endpoint"),
            ProviderKind::Live if self.credential.is_none() => {
                Err(CliError::Config(format!("the live provider needs a credential in ${}", self.provider.credential_env)))
            }
            _ => Ok(()),
        }
    }
}
