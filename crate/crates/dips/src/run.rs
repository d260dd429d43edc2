//! Runs an experiment into an output directory and writes its manifest.

use std::fs;
use std::path::{Path, PathBuf};

use dips_core::{SimError, SimRecord};
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigFileError, PolicyName, ResolvedConfig};
use crate::experiments::{
    run_block_growth_experiment, run_bubka_experiment, run_difficulty_trajectories, run_eta_sweep, BubkaResult,
    EtaSweepResult, ExperimentError, TrajectoryResult,
};
use crate::graph_io::write_graphs;
use crate::manifest::{unix_now, Experiment, ManifestError, RunManifest, VERSION};
use crate::records::{format_g17, write_records, Format, RecordsError};

pub const CONFIG_SNAPSHOT_FILE: &str = "config.toml";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigFileError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Records(#[from] RecordsError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl RunError {
    /// Configuration problems as opposed to failures while running.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            RunError::Config(_)
                | RunError::Experiment(ExperimentError::Precondition(_))
                | RunError::Experiment(ExperimentError::Sim(SimError::Config(_)))
        )
    }
}

struct Outputs<'a> {
    dir: &'a Path,
    format: Format,
    files: Vec<String>,
}

impl Outputs<'_> {
    fn path(&mut self, name: String) -> Result<PathBuf, RunError> {
        let path = self.dir.join(&name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        self.files.push(name);
        Ok(path)
    }

    fn records(&mut self, stem: &str, records: &[SimRecord]) -> Result<(), RunError> {
        let path = self.path(format!("{stem}.{}", self.format.extension()))?;
        write_records(records, &path, self.format)?;
        Ok(())
    }

    fn table(&mut self, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), RunError> {
        let mut writer = csv::Writer::from_path(self.path(name.to_string())?)?;
        writer.write_record(header)?;
        for row in rows {
            writer.write_record(row)?;
        }
        writer.flush()?;
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), RunError> {
        let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::from)?;
        text.push('\n');
        fs::write(self.path(name.to_string())?, text)?;
        Ok(())
    }

    fn trajectory(&mut self, name: &str, t: &TrajectoryResult) -> Result<(), RunError> {
        let baseline = t.baseline();
        let rows = (0..t.len())
            .map(|h| {
                vec![
                    h.to_string(),
                    format_g17(t.d_b[h]),
                    format_g17(t.d_r[h]),
                    t.cum_classical[h].to_string(),
                    t.cum_solution[h].to_string(),
                    baseline[h].to_string(),
                    t.replacement_heights.contains(&(h as u64)).to_string(),
                ]
            })
            .collect();
        self.table(
            name,
            &[
                "height",
                "d_b",
                "d_r",
                "cum_classical",
                "cum_solution",
                "classical_baseline",
                "replaced_after",
            ],
            rows,
        )
    }
}

fn sweep_tables(out: &mut Outputs, result: &EtaSweepResult) -> Result<(), RunError> {
    for run in &result.runs {
        out.records(
            &format!("runs/{}_eta{:02}_inst{:02}", run.protocol, run.eta_index, run.instance),
            &run.records,
        )?;
    }
    let rows = [("v1", &result.v1), ("v2", &result.v2)]
        .into_iter()
        .flat_map(|(protocol, cells)| {
            cells.iter().enumerate().map(move |(i, c)| {
                vec![
                    protocol.to_string(),
                    i.to_string(),
                    format_g17(c.eta),
                    format_g17(1.0 / c.eta),
                    format_g17(c.mean),
                    format_g17(c.sd),
                    result.instances.to_string(),
                    result.chain_height.to_string(),
                ]
            })
        })
        .collect();
    out.table(
        "eta_sweep.csv",
        &[
            "protocol",
            "eta_index",
            "eta",
            "inverse_eta",
            "mean_fraction",
            "sd_fraction",
            "instances",
            "chain_height",
        ],
        rows,
    )?;
    out.json("eta_sweep.json", result)
}

fn bubka_tables(out: &mut Outputs, result: &BubkaResult) -> Result<(), RunError> {
    for (variant, runs) in &result.runs {
        let label = variant.map_or("honest".to_string(), |t| format!("hoard{t}"));
        for (s, records) in runs.iter().enumerate() {
            out.records(&format!("runs/{label}_seed{s:02}"), records)?;
        }
    }
    let rows = std::iter::once(&result.honest)
        .chain(&result.rows)
        .map(|r| {
            vec![
                r.hoard_target.map_or("honest".to_string(), |t| t.to_string()),
                format_g17(r.win_fraction_mean),
                format_g17(r.win_fraction_sd),
                format_g17(r.max_run_mean),
                format_g17(r.max_run_sd),
                result.seeds.to_string(),
            ]
        })
        .collect();
    out.table(
        "bubka.csv",
        &[
            "hoard_target",
            "win_fraction_mean",
            "win_fraction_sd",
            "max_run_mean",
            "max_run_sd",
            "seeds",
        ],
        rows,
    )?;
    out.json("bubka.json", result)
}

fn single_run(out: &mut Outputs, stem: &str, config: &dips_core::SimConfig) -> Result<(), RunError> {
    let outcome = dips_core::run_simulation(config.clone()).map_err(ExperimentError::from)?;
    out.records(&format!("records{stem}"), &outcome.records)?;
    write_graphs(&outcome.graphs, &out.path(format!("graphs{stem}.txt"))?)?;
    Ok(())
}

/// Runs `experiment` under `config`, writing every output into `dir`
/// followed by `manifest.json`. Returns the manifest.
pub fn run_experiment(
    config: &ResolvedConfig,
    experiment: &Experiment,
    format: Format,
    dir: &Path,
) -> Result<RunManifest, RunError> {
    let started = unix_now();
    fs::create_dir_all(dir)?;
    let mut out = Outputs {
        dir,
        format,
        files: Vec::new(),
    };
    let snapshot = config.to_toml();
    fs::write(out.path(CONFIG_SNAPSHOT_FILE.to_string())?, &snapshot)?;
    let sim = &config.sim;
    match experiment {
        Experiment::Simulate => single_run(&mut out, "", sim)?,
        Experiment::Fig2 => {
            let t = run_block_growth_experiment(sim)?;
            out.records("records", &t.records)?;
            write_graphs(&t.graphs, &out.path("graphs.txt".to_string())?)?;
            out.trajectory("fig2.csv", &t)?;
        }
        Experiment::Fig3 => {
            for name in [PolicyName::V1, PolicyName::V2] {
                let policy_config = config.with_policy(name);
                let t = run_difficulty_trajectories(&policy_config)?;
                let label = policy_config.policy.name();
                out.records(&format!("records_{label}"), &t.records)?;
                write_graphs(&t.graphs, &out.path(format!("graphs_{label}.txt"))?)?;
                out.trajectory(&format!("fig3_{label}.csv"), &t)?;
            }
        }
        Experiment::EtaSweep { etas, instances } => {
            let result = run_eta_sweep(
                sim,
                config.with_policy(PolicyName::V1).policy,
                config.with_policy(PolicyName::V2).policy,
                etas,
                *instances,
            )?;
            sweep_tables(&mut out, &result)?;
        }
        Experiment::Bubka { hoard_targets, seeds } => {
            let result = run_bubka_experiment(sim, hoard_targets, *seeds)?;
            bubka_tables(&mut out, &result)?;
        }
    }
    let manifest = RunManifest {
        version: VERSION.to_string(),
        experiment: experiment.clone(),
        master_seed: sim.rng_seed,
        format: format.extension().to_string(),
        config: snapshot,
        outputs: out.files,
        started,
        finished: unix_now(),
    };
    manifest.write(dir)?;
    Ok(manifest)
}

/// Re-runs the experiment recorded in `manifest` into `dir`.
pub fn replay_manifest(manifest: &RunManifest, dir: &Path) -> Result<RunManifest, RunError> {
    let config = crate::config::parse_config_str(&manifest.config)?;
    let format = manifest
        .format()
        .map_err(|e| RunError::Config(ConfigFileError::Validation(e)))?;
    run_experiment(&config, &manifest.experiment, format, dir)
}
