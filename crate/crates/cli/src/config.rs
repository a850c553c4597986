use std::path::Path;

use autopath::mpc::MpcParams;
use autopath::planner::PlannerConfig;
use autopath::simulator::SimConfig;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

pub const CONFIG_VERSION: &str = "autopath-config/1";

/// Everything a run or experiment needs besides the scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub version: String,
    pub planner: PlannerConfig,
    pub mpc: MpcParams,
    pub sim: SimConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION.into(),
            planner: PlannerConfig::default(),
            mpc: MpcParams::default(),
            sim: SimConfig::default(),
        }
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| HarnessError::Input(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::from_json(&crate::read_text(path)?)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.version != CONFIG_VERSION {
            return Err(HarnessError::Input(format!(
                "config: unsupported version {:?} (expected {CONFIG_VERSION:?})",
                self.version
            )));
        }
        self.planner
            .validate()
            .map_err(|e| HarnessError::Input(format!("config: {e}")))?;
        self.mpc.validate().map_err(|e| HarnessError::Input(format!("config: {e}")))?;
        self.sim.substeps().map_err(|e| HarnessError::Input(format!("config: {e}")))?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
