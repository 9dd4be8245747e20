use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use classchain_core::consensus::ConsensusConfig;
use classchain_core::metrics::NetworkProfile;
use classchain_core::sim::SimulationConfig;
use classchain_core::vm::GasSchedule;
use serde::{Deserialize, Serialize};

/// Who a bearer token belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Principal {
    Instructor,
    Team(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tokens {
    pub instructor: String,
    /// team id -> token
    pub teams: BTreeMap<String, String>,
}

/// The JSON config file read by `serve` (and optionally `simulate`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub simulation: SimulationConfig,
    pub tokens: Tokens,
    pub gas_schedule: GasSchedule,
    pub network_profiles: Vec<NetworkProfile>,
    pub consensus: ConsensusConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            simulation: SimulationConfig::default(),
            tokens: Tokens::default(),
            gas_schedule: GasSchedule::default(),
            network_profiles: NetworkProfile::defaults(),
            consensus: ConsensusConfig::default(),
        }
    }
}

impl ServiceConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let config: Self = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.simulation.validate().map_err(anyhow::Error::msg)?;
        self.gas_schedule.validate().map_err(anyhow::Error::msg)?;
        if self.tokens.instructor.is_empty() {
            bail!("tokens.instructor must be set");
        }
        let mut seen = vec![self.tokens.instructor.as_str()];
        for (team, token) in &self.tokens.teams {
            if token.is_empty() {
                bail!("empty token for {team}");
            }
            if seen.contains(&token.as_str()) {
                bail!("token for {team} is not unique");
            }
            seen.push(token);
        }
        Ok(())
    }

    pub fn principals(&self) -> HashMap<String, Principal> {
        let mut map = HashMap::new();
        map.insert(self.tokens.instructor.clone(), Principal::Instructor);
        for (team, token) in &self.tokens.teams {
            map.insert(token.clone(), Principal::Team(team.clone()));
        }
        map
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file() {
        let json = r#"{"tokens":{"instructor":"i","teams":{"team-1":"a","team-2":"b"}}}"#;
        let cfg: ServiceConfig = serde_json::from_str(json).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.principals().get("a"), Some(&Principal::Team("team-1".into())));
        assert_eq!(cfg.network_profiles.len(), 3);
    }

    #[test]
    fn duplicate_tokens_rejected() {
        let json = r#"{"tokens":{"instructor":"i","teams":{"team-1":"i"}}}"#;
        let cfg: ServiceConfig = serde_json::from_str(json).unwrap();
        assert!(cfg.validate().is_err());
    }
}
