//! Run manifests: everything needed to reproduce an output directory.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::records::Format;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Which experiment produced a directory, with its extra arguments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    Fig2,
    Fig3,
    EtaSweep { etas: Vec<f64>, instances: usize },
    Bubka { hoard_targets: Vec<u32>, seeds: usize },
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Fig2 => "fig2",
            Experiment::Fig3 => "fig3",
            Experiment::EtaSweep { .. } => "eta-sweep",
            Experiment::Bubka { .. } => "bubka",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub experiment: Experiment,
    pub master_seed: u64,
    pub format: String,
    /// Every resolved config key, as TOML.
    pub config: String,
    /// Output files relative to the manifest's directory.
    pub outputs: Vec<String>,
    /// Wall-clock Unix seconds.
    pub started: f64,
    pub finished: f64,
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed manifest: {0}")]
    Parse(#[from] serde_json::Error),
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

impl RunManifest {
    pub fn format(&self) -> Result<Format, String> {
        self.format.parse()
    }

    pub fn write(&self, dir: &Path) -> Result<(), ManifestError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(dir.join(MANIFEST_FILE), text)?;
        Ok(())
    }

    /// Reads a manifest file, or `manifest.json` inside a directory.
    pub fn read(path: &Path) -> Result<Self, ManifestError> {
        let path = if path.is_dir() {
            path.join(MANIFEST_FILE)
        } else {
            path.to_path_buf()
        };
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}
