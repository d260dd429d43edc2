//! Flat TOML configuration.
//!
//! Every parameter is one top-level key; miners are an array of tables:
//!
//! ```toml
//! policy = "v2"
//! t2_classical = 0.1
//! seed = 7
//!
//! [[miners]]
//! count = 10
//! strategy = "classical"
//!
//! [[miners]]
//! count = 10
//! strategy = "solver"
//! ```

use std::fs;
use std::path::Path;

use dips_core::difficulty::DEFAULT_MAX_UPDATE_FACTOR;
use dips_core::engine::{DEFAULT_GRAPH_N, DEFAULT_GRAPH_P, DEFAULT_SATURATION_WINDOW, DEFAULT_SOLVER_STEPS_PER_SECOND};
use dips_core::{BitcoinParams, MinerSpec, Policy, PolicyParamsV1, PolicyParamsV2, ProblemParams, SimConfig, Strategy};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const TOP_LEVEL_KEYS: &[&str] = &[
    "policy",
    "eta",
    "n1",
    "target_time",
    "n2_classical",
    "n2_solution",
    "t2_classical",
    "t2_solution",
    "max_update_factor",
    "initial_db",
    "initial_dr",
    "miners",
    "graph_n",
    "graph_p",
    "max_blocks",
    "saturation_window",
    "replace_on_saturation",
    "seed",
];

pub const MINER_KEYS: &[&str] = &[
    "count",
    "hashrate",
    "strategy",
    "solver_steps_per_second",
    "hoard_target",
];

pub const DEFAULT_ETA: f64 = 1.0 / 200.0;
pub const DEFAULT_HASHRATE: f64 = 1000.0;
pub const DEFAULT_TARGET_TIME: f64 = 0.1;
pub const DEFAULT_N1: u64 = 10;
pub const DEFAULT_N2_CLASSICAL: u64 = 10;
pub const DEFAULT_N2_SOLUTION: u64 = 5;
pub const DEFAULT_MAX_BLOCKS: u64 = 200;
pub const DEFAULT_CLASSICAL_MINERS: u32 = 10;

#[derive(Debug, Error)]
pub enum ConfigFileError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid config: {0}")]
    Validation(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyName {
    Bitcoin,
    V1,
    V2,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinerEntry {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hashrate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Strategy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver_steps_per_second: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hoard_target: Option<u32>,
}

/// Raw config as written; missing keys take defaults in [`ConfigFile::resolve`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<PolicyName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n1: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n2_classical: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n2_solution: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t2_classical: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t2_solution: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_update_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_dr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph_n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_blocks: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub saturation_window: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replace_on_saturation: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    // Arrays of tables must come last in TOML output.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub miners: Option<Vec<MinerEntry>>,
}

/// A validated configuration with every parameter resolved.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedConfig {
    /// The resolved key set, suitable for writing back out.
    pub file: ConfigFile,
    pub sim: SimConfig,
    pub bitcoin: BitcoinParams,
    pub v1: PolicyParamsV1,
    pub v2: PolicyParamsV2,
}

impl ResolvedConfig {
    /// Same run under a different policy, keeping all other parameters.
    pub fn with_policy(&self, name: PolicyName) -> SimConfig {
        let mut sim = self.sim.clone();
        sim.policy = match name {
            PolicyName::Bitcoin => Policy::Bitcoin(self.bitcoin),
            PolicyName::V1 => Policy::V1(self.v1),
            PolicyName::V2 => Policy::V2(self.v2),
        };
        sim
    }

    /// Same configuration with a different master seed.
    pub fn with_seed(&self, seed: u64) -> Result<ResolvedConfig, ConfigFileError> {
        let mut file = self.file.clone();
        file.seed = Some(seed);
        file.resolve()
    }

    /// Snapshot of every resolved key as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.file).expect("config serializes")
    }
}

pub fn parse_config(path: &Path) -> Result<ResolvedConfig, ConfigFileError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ResolvedConfig, ConfigFileError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigFileError::Parse(e.to_string()))?;
    check_keys(&table)?;
    let file: ConfigFile = table
        .try_into()
        .map_err(|e: toml::de::Error| ConfigFileError::Parse(e.to_string()))?;
    file.resolve()
}

fn check_keys(table: &toml::Table) -> Result<(), ConfigFileError> {
    if let Some(key) = table.keys().find(|k| !TOP_LEVEL_KEYS.contains(&k.as_str())) {
        return Err(ConfigFileError::UnknownKey(key.clone()));
    }
    if let Some(toml::Value::Array(miners)) = table.get("miners") {
        for miner in miners {
            if let toml::Value::Table(entry) = miner {
                if let Some(key) = entry.keys().find(|k| !MINER_KEYS.contains(&k.as_str())) {
                    return Err(ConfigFileError::UnknownKey(format!("miners.{key}")));
                }
            }
        }
    }
    Ok(())
}

fn invalid(msg: impl Into<String>) -> ConfigFileError {
    ConfigFileError::Validation(msg.into())
}

impl ConfigFile {
    /// Fills defaults and validates.
    pub fn resolve(&self) -> Result<ResolvedConfig, ConfigFileError> {
        let policy = self.policy.unwrap_or(PolicyName::V2);
        let eta = self.eta.unwrap_or(DEFAULT_ETA);
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(invalid(format!("eta must lie in (0, 1], got {eta}")));
        }
        let x = self.max_update_factor.unwrap_or(DEFAULT_MAX_UPDATE_FACTOR);
        let n1 = self.n1.unwrap_or(DEFAULT_N1);
        let target_time = self.target_time.unwrap_or(DEFAULT_TARGET_TIME);
        let bitcoin = BitcoinParams {
            epoch_length: n1,
            target_block_time: target_time,
            max_update_factor: x,
        };
        let v1 = PolicyParamsV1 {
            eta,
            epoch_length: n1,
            target_block_time: target_time,
            max_update_factor: x,
        };
        let v2 = PolicyParamsV2 {
            classical_epoch: self.n2_classical.unwrap_or(DEFAULT_N2_CLASSICAL),
            solution_epoch: self.n2_solution.unwrap_or(DEFAULT_N2_SOLUTION),
            classical_target_time: self.t2_classical.unwrap_or(DEFAULT_TARGET_TIME),
            solution_target_time: self.t2_solution.unwrap_or(DEFAULT_TARGET_TIME),
            max_update_factor: x,
        };
        for p in [Policy::Bitcoin(bitcoin), Policy::V1(v1), Policy::V2(v2)] {
            p.validate().map_err(|e| invalid(e.to_string()))?;
        }
        let policy_params = match policy {
            PolicyName::Bitcoin => Policy::Bitcoin(bitcoin),
            PolicyName::V1 => Policy::V1(v1),
            PolicyName::V2 => Policy::V2(v2),
        };

        let entries = self.miners.clone().unwrap_or_else(|| {
            vec![MinerEntry {
                count: Some(DEFAULT_CLASSICAL_MINERS),
                ..MinerEntry::default()
            }]
        });
        let mut resolved_entries = Vec::with_capacity(entries.len());
        let mut miners = Vec::new();
        for entry in &entries {
            let strategy = entry.strategy.unwrap_or(Strategy::Classical);
            let speed = entry.solver_steps_per_second.unwrap_or(match strategy {
                Strategy::Classical => 0.0,
                _ => DEFAULT_SOLVER_STEPS_PER_SECOND,
            });
            let hashrate = entry.hashrate.unwrap_or(DEFAULT_HASHRATE);
            if strategy == Strategy::Bubka && entry.hoard_target.is_none() {
                return Err(invalid("bubka miners need a hoard_target"));
            }
            if strategy != Strategy::Bubka && entry.hoard_target.is_some() {
                return Err(invalid("hoard_target applies to bubka miners only"));
            }
            let count = entry.count.unwrap_or(1);
            for _ in 0..count {
                let id = miners.len() as u32;
                miners.push(MinerSpec {
                    id,
                    hashrate,
                    strategy,
                    solver_steps_per_second: speed,
                    hoard_target: entry.hoard_target,
                });
            }
            resolved_entries.push(MinerEntry {
                count: Some(count),
                hashrate: Some(hashrate),
                strategy: Some(strategy),
                solver_steps_per_second: Some(speed),
                hoard_target: entry.hoard_target,
            });
        }

        let total_hashrate: f64 = miners.iter().map(|m| m.hashrate).sum();
        let initial_db = self
            .initial_db
            .unwrap_or(total_hashrate * policy_params.classical_target_time());
        let initial_dr = self.initial_dr.unwrap_or(eta * initial_db);
        let sim = SimConfig {
            policy: policy_params,
            miners,
            initial_d_b: initial_db,
            initial_d_r: initial_dr,
            problem: ProblemParams {
                n: self.graph_n.unwrap_or(DEFAULT_GRAPH_N),
                edge_prob: self.graph_p.unwrap_or(DEFAULT_GRAPH_P),
            },
            max_blocks: self.max_blocks.unwrap_or(DEFAULT_MAX_BLOCKS),
            saturation_window: self.saturation_window.unwrap_or(DEFAULT_SATURATION_WINDOW),
            replace_on_saturation: self.replace_on_saturation.unwrap_or(true),
            rng_seed: self.seed.unwrap_or(0),
        };
        sim.validate().map_err(|e| invalid(e.to_string()))?;

        let file = ConfigFile {
            policy: Some(policy),
            eta: Some(eta),
            n1: Some(n1),
            target_time: Some(target_time),
            n2_classical: Some(v2.classical_epoch),
            n2_solution: Some(v2.solution_epoch),
            t2_classical: Some(v2.classical_target_time),
            t2_solution: Some(v2.solution_target_time),
            max_update_factor: Some(x),
            initial_db: Some(initial_db),
            initial_dr: Some(initial_dr),
            graph_n: Some(sim.problem.n),
            graph_p: Some(sim.problem.edge_prob),
            max_blocks: Some(sim.max_blocks),
            saturation_window: Some(sim.saturation_window),
            replace_on_saturation: Some(sim.replace_on_saturation),
            seed: Some(sim.rng_seed),
            miners: Some(resolved_entries),
        };
        Ok(ResolvedConfig {
            file,
            sim,
            bitcoin,
            v1,
            v2,
        })
    }
}
