//! The two-level intent taxonomy: 6 primary categories, 24 secondary ones.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Primary {
    #[serde(rename = "Energy Consumption & Analysis")]
    EnergyConsumption,
    #[serde(rename = "Cost Management")]
    CostManagement,
    #[serde(rename = "Device Status & Control")]
    DeviceControl,
    #[serde(rename = "Device Scheduling & Automation")]
    Scheduling,
    #[serde(rename = "Memory")]
    Memory,
    #[serde(rename = "General Information & Support")]
    GeneralSupport,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Secondary {
    #[serde(rename = "Historical Energy Data")]
    HistoricalEnergy,
    #[serde(rename = "Energy Prediction")]
    EnergyPrediction,
    #[serde(rename = "Energy Optimization")]
    EnergyOptimization,
    #[serde(rename = "Energy Suggestions")]
    EnergySuggestions,
    #[serde(rename = "Energy Visualization")]
    EnergyVisualization,
    #[serde(rename = "Cost Information")]
    CostInformation,
    #[serde(rename = "Cost Prediction")]
    CostPrediction,
    #[serde(rename = "Cost Suggestions")]
    CostSuggestions,
    #[serde(rename = "Cost Visualization")]
    CostVisualization,
    #[serde(rename = "Meter Status Check")]
    MeterStatus,
    #[serde(rename = "Device Status Check")]
    DeviceStatus,
    #[serde(rename = "Device General Operation")]
    DeviceOperation,
    #[serde(rename = "Group Device Management")]
    GroupManagement,
    #[serde(rename = "Device Custom Configurations")]
    CustomConfiguration,
    #[serde(rename = "Schedule Information")]
    ScheduleInformation,
    #[serde(rename = "General Scheduling")]
    GeneralScheduling,
    #[serde(rename = "Conditional Automation")]
    ConditionalAutomation,
    #[serde(rename = "Schedule Management")]
    ScheduleManagement,
    #[serde(rename = "Memory Information")]
    MemoryInformation,
    #[serde(rename = "Memory Creation")]
    MemoryCreation,
    #[serde(rename = "Memory Management")]
    MemoryManagement,
    #[serde(rename = "System Guidance and Tutorials")]
    Guidance,
    #[serde(rename = "Troubleshooting and Technical Support")]
    Troubleshooting,
    #[serde(rename = "FAQs and General Queries")]
    Faq,
}

impl Primary {
    pub const ALL: [Primary; 6] = [
        Primary::EnergyConsumption,
        Primary::CostManagement,
        Primary::DeviceControl,
        Primary::Scheduling,
        Primary::Memory,
        Primary::GeneralSupport,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Primary::EnergyConsumption => "Energy Consumption & Analysis",
            Primary::CostManagement => "Cost Management",
            Primary::DeviceControl => "Device Status & Control",
            Primary::Scheduling => "Device Scheduling & Automation",
            Primary::Memory => "Memory",
            Primary::GeneralSupport => "General Information & Support",
        }
    }

    /// Secondary categories listed under this primary, in table order.
    pub fn secondaries(self) -> impl Iterator<Item = Secondary> {
        Secondary::ALL.into_iter().filter(move |s| s.primary() == self)
    }
}

impl Secondary {
    pub const ALL: [Secondary; 24] = [
        Secondary::HistoricalEnergy,
        Secondary::EnergyPrediction,
        Secondary::EnergyOptimization,
        Secondary::EnergySuggestions,
        Secondary::EnergyVisualization,
        Secondary::CostInformation,
        Secondary::CostPrediction,
        Secondary::CostSuggestions,
        Secondary::CostVisualization,
        Secondary::MeterStatus,
        Secondary::DeviceStatus,
        Secondary::DeviceOperation,
        Secondary::GroupManagement,
        Secondary::CustomConfiguration,
        Secondary::ScheduleInformation,
        Secondary::GeneralScheduling,
        Secondary::ConditionalAutomation,
        Secondary::ScheduleManagement,
        Secondary::MemoryInformation,
        Secondary::MemoryCreation,
        Secondary::MemoryManagement,
        Secondary::Guidance,
        Secondary::Troubleshooting,
        Secondary::Faq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Secondary::HistoricalEnergy => "Historical Energy Data",
            Secondary::EnergyPrediction => "Energy Prediction",
            Secondary::EnergyOptimization => "Energy Optimization",
            Secondary::EnergySuggestions => "Energy Suggestions",
            Secondary::EnergyVisualization => "Energy Visualization",
            Secondary::CostInformation => "Cost Information",
            Secondary::CostPrediction => "Cost Prediction",
            Secondary::CostSuggestions => "Cost Suggestions",
            Secondary::CostVisualization => "Cost Visualization",
            Secondary::MeterStatus => "Meter Status Check",
            Secondary::DeviceStatus => "Device Status Check",
            Secondary::DeviceOperation => "Device General Operation",
            Secondary::GroupManagement => "Group Device Management",
            Secondary::CustomConfiguration => "Device Custom Configurations",
            Secondary::ScheduleInformation => "Schedule Information",
            Secondary::GeneralScheduling => "General Scheduling",
            Secondary::ConditionalAutomation => "Conditional Automation",
            Secondary::ScheduleManagement => "Schedule Management",
            Secondary::MemoryInformation => "Memory Information",
            Secondary::MemoryCreation => "Memory Creation",
            Secondary::MemoryManagement => "Memory Management",
            Secondary::Guidance => "System Guidance and Tutorials",
            Secondary::Troubleshooting => "Troubleshooting and Technical Support",
            Secondary::Faq => "FAQs and General Queries",
        }
    }

    /// The one primary this secondary is listed under.
    pub fn primary(self) -> Primary {
        use Secondary::*;
        match self {
            HistoricalEnergy | EnergyPrediction | EnergyOptimization | EnergySuggestions
            | EnergyVisualization => Primary::EnergyConsumption,
            CostInformation | CostPrediction | CostSuggestions | CostVisualization => {
                Primary::CostManagement
            }
            MeterStatus | DeviceStatus | DeviceOperation | GroupManagement
            | CustomConfiguration => Primary::DeviceControl,
            ScheduleInformation | GeneralScheduling | ConditionalAutomation
            | ScheduleManagement => Primary::Scheduling,
            MemoryInformation | MemoryCreation | MemoryManagement => Primary::Memory,
            Guidance | Troubleshooting | Faq => Primary::GeneralSupport,
        }
    }

    /// Stable position in table order (0..24), used for heatmap rows.
    pub fn index(self) -> usize {
        Secondary::ALL.iter().position(|&s| s == self).unwrap_or(0)
    }
}

impl fmt::Display for Primary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Secondary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown category {0:?}")]
pub struct UnknownCategory(pub String);

fn normalize(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect::<String>()
        .replace("and", "")
}

impl FromStr for Primary {
    type Err = UnknownCategory;

    /// Accepts the table name with any casing, punctuation or "&"/"and" spelling.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = normalize(s);
        Primary::ALL
            .into_iter()
            .find(|p| normalize(p.name()) == key)
            .ok_or_else(|| UnknownCategory(s.to_string()))
    }
}

impl FromStr for Secondary {
    type Err = UnknownCategory;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = normalize(s);
        Secondary::ALL
            .into_iter()
            .find(|c| normalize(c.name()) == key)
            .ok_or_else(|| UnknownCategory(s.to_string()))
    }
}

/// A (primary, secondary) pair. Not necessarily consistent; see [`taxonomy_check`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntentLabel {
    pub primary: Primary,
    pub secondary: Secondary,
}

impl IntentLabel {
    pub fn new(primary: Primary, secondary: Secondary) -> Self {
        IntentLabel { primary, secondary }
    }

    /// The consistent label for a secondary category.
    pub fn of(secondary: Secondary) -> Self {
        IntentLabel { primary: secondary.primary(), secondary }
    }

    pub fn is_valid(&self) -> bool {
        taxonomy_check(self)
    }
}

impl fmt::Display for IntentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} / {}", self.primary, self.secondary)
    }
}

/// True iff `label.secondary` is listed under `label.primary`.
pub fn taxonomy_check(label: &IntentLabel) -> bool {
    label.secondary.primary() == label.primary
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_shape() {
        let counts: Vec<usize> = Primary::ALL.iter().map(|p| p.secondaries().count()).collect();
        assert_eq!(counts, vec![5, 4, 5, 4, 3, 3]);
    }

    #[test]
    fn exactly_24_pairs_accepted() {
        let mut accepted = 0;
        for p in Primary::ALL {
            for s in Secondary::ALL {
                if taxonomy_check(&IntentLabel::new(p, s)) {
                    accepted += 1;
                }
            }
        }
        assert_eq!(accepted, 24);
    }

    #[test]
    fn known_pairs() {
        assert!(taxonomy_check(&IntentLabel::new(Primary::Memory, Secondary::MemoryCreation)));
        assert!(!taxonomy_check(&IntentLabel::new(
            Primary::CostManagement,
            Secondary::EnergyPrediction
        )));
    }

    #[test]
    fn names_parse_back() {
        for s in Secondary::ALL {
            assert_eq!(s.name().parse::<Secondary>().unwrap(), s);
            assert_eq!(s.index(), Secondary::ALL.iter().position(|&x| x == s).unwrap());
        }
        for p in Primary::ALL {
            assert_eq!(p.name().parse::<Primary>().unwrap(), p);
        }
        assert_eq!(
            "device status and control".parse::<Primary>().unwrap(),
            Primary::DeviceControl
        );
        assert!("Weather".parse::<Primary>().is_err());
    }

    #[test]
    fn serde_uses_table_names() {
        let label = IntentLabel::of(Secondary::Faq);
        let json = serde_json::to_string(&label).unwrap();
        assert_eq!(
            json,
            r#"{"primary":"General Information & Support","secondary":"FAQs and General Queries"}"#
        );
    }
}
