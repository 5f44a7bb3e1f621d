//! Optional TOML solver configuration. Command-line flags take precedence.
//!
//! ```toml
//! [anneal]
//! iterations = 200000
//! t0_fraction = 0.05
//! cooling = 0.9995
//! penalty_fraction = 0.01
//! null_width = 0.1
//!
//! [local_search]
//! budget = 2000000
//! radius = 8
//!
//! [cp]
//! node_limit = 1500000
//! lns = true
//! complete_nodes = 100000
//! free_waves = 24
//! nodes_per_round = 2000
//!
//! [objective]
//! target_weights = [1.0, 1.0, 1.0, 1.0]
//! promise_weights = [1.0, 0.5, 0.25, 0.125, 0.0625]
//! ```

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct AnnealSection {
    pub iterations: Option<u64>,
    /// Initial temperature as a fraction of the KPI normalization.
    pub t0_fraction: Option<f64>,
    pub cooling: Option<f64>,
    pub moves_per_step: Option<usize>,
    /// Penalty per violation as a fraction of the KPI normalization.
    pub penalty_fraction: Option<f64>,
    pub null_width: Option<f64>,
    pub trace_stride: Option<u64>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct LocalSearchSection {
    pub budget: Option<u64>,
    pub radius: Option<u8>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct CpSection {
    pub node_limit: Option<u64>,
    pub lns: Option<bool>,
    pub complete_nodes: Option<u64>,
    pub free_waves: Option<usize>,
    pub nodes_per_round: Option<u64>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSection {
    pub target_weights: Option<[f64; 4]>,
    pub promise_weights: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub anneal: AnnealSection,
    #[serde(default)]
    pub local_search: LocalSearchSection,
    #[serde(default)]
    pub cp: CpSection,
    #[serde(default)]
    pub objective: ObjectiveSection,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Config::parse(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}
