//! Named experiments and their summary statistics.
//!
//! Every summary is a pure function of the raw records each experiment keeps,
//! so it can be recomputed from the emitted record files.

use dips_core::metrics::{longest_run, mean, solution_fraction, spearman, std_dev, win_fraction};
use dips_core::seed::derive_seed;
use dips_core::{run_simulation, Graph, MinerSpec, Policy, SimConfig, SimError, SimRecord, Strategy};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{0}")]
    Precondition(String),
}

fn precondition(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Precondition(msg.into())
}

/// Per-height series of one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryResult {
    pub policy: String,
    pub d_b: Vec<f64>,
    pub d_r: Vec<f64>,
    pub cum_classical: Vec<u64>,
    pub cum_solution: Vec<u64>,
    /// Heights of the last block mined on each retired problem.
    pub replacement_heights: Vec<u64>,
    #[serde(skip)]
    pub records: Vec<SimRecord>,
    /// One graph per problem epoch.
    #[serde(skip)]
    pub graphs: Vec<Graph>,
}

impl TrajectoryResult {
    pub fn from_records(
        policy: &str,
        records: Vec<SimRecord>,
        replacement_heights: Vec<u64>,
        graphs: Vec<Graph>,
    ) -> Self {
        Self {
            policy: policy.to_string(),
            d_b: records.iter().map(|r| r.d_b).collect(),
            d_r: records.iter().map(|r| r.d_r).collect(),
            cum_classical: records.iter().map(|r| r.cumulative_classical).collect(),
            cum_solution: records.iter().map(|r| r.cumulative_solution).collect(),
            replacement_heights,
            records,
            graphs,
        }
    }

    pub fn len(&self) -> usize {
        self.d_b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d_b.is_empty()
    }

    /// Classical-only baseline: every block is classical, so the count is `h + 1`.
    pub fn baseline(&self) -> Vec<u64> {
        (1..=self.len() as u64).collect()
    }
}

fn trajectory(config: &SimConfig) -> Result<TrajectoryResult, ExperimentError> {
    let outcome = run_simulation(config.clone())?;
    Ok(TrajectoryResult::from_records(
        config.policy.name(),
        outcome.records,
        outcome.replacement_heights,
        outcome.graphs,
    ))
}

/// Cumulative classical and solution block counts under v2 with problem
/// replacement.
pub fn run_block_growth_experiment(config: &SimConfig) -> Result<TrajectoryResult, ExperimentError> {
    if !matches!(config.policy, Policy::V2(_)) {
        return Err(precondition("block growth runs under the v2 policy"));
    }
    if !config.replace_on_saturation {
        return Err(precondition("block growth needs replace_on_saturation = true"));
    }
    trajectory(config)
}

/// Difficulty series for a v1 or v2 run.
pub fn run_difficulty_trajectories(config: &SimConfig) -> Result<TrajectoryResult, ExperimentError> {
    if matches!(config.policy, Policy::Bitcoin(_)) {
        return Err(precondition("difficulty trajectories need policy v1 or v2"));
    }
    trajectory(config)
}

/// `count` log-spaced values from 1 down to `smallest`.
pub fn log_spaced_etas(count: usize, smallest: f64) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![1.0],
        _ => (0..count)
            .map(|i| smallest.powf(i as f64 / (count - 1) as f64))
            .collect(),
    }
}

/// Default grid: ten values from 1 to 1/1000.
pub fn default_etas() -> Vec<f64> {
    log_spaced_etas(10, 1e-3)
}

/// Seed of one sweep cell. Shared by both protocols for common random numbers.
pub fn sweep_cell_seed(master: u64, eta_index: usize, instance: usize) -> u64 {
    derive_seed(master, &[eta_index as u64, instance as u64])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellStats {
    pub eta: f64,
    pub mean: f64,
    pub sd: f64,
    pub fractions: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRun {
    pub protocol: String,
    pub eta_index: usize,
    pub instance: usize,
    pub seed: u64,
    #[serde(skip)]
    pub records: Vec<SimRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EtaSweepResult {
    pub eta_values: Vec<f64>,
    pub instances: usize,
    pub chain_height: u64,
    pub master_seed: u64,
    pub v1: Vec<CellStats>,
    pub v2: Vec<CellStats>,
    /// Mean v2 fraction across the whole grid.
    pub v2_mean_line: f64,
    /// Spearman correlation of v1 fraction with 1/eta.
    pub v1_rho_inverse_eta: f64,
    /// Spearman correlation of v2 fraction with eta.
    pub v2_rho_eta: f64,
    #[serde(skip)]
    pub runs: Vec<SweepRun>,
}

impl EtaSweepResult {
    /// Summary statistics recomputed from raw runs.
    pub fn from_runs(
        eta_values: Vec<f64>,
        instances: usize,
        chain_height: u64,
        master_seed: u64,
        runs: Vec<SweepRun>,
    ) -> Self {
        let stats = |protocol: &str| -> Vec<CellStats> {
            eta_values
                .iter()
                .enumerate()
                .map(|(i, &eta)| {
                    let fractions: Vec<f64> = runs
                        .iter()
                        .filter(|r| r.protocol == protocol && r.eta_index == i)
                        .map(|r| solution_fraction(&r.records))
                        .collect();
                    CellStats {
                        eta,
                        mean: mean(&fractions),
                        sd: std_dev(&fractions),
                        fractions,
                    }
                })
                .collect()
        };
        let v1 = stats("v1");
        let v2 = stats("v2");
        let v1_means: Vec<f64> = v1.iter().map(|c| c.mean).collect();
        let v2_means: Vec<f64> = v2.iter().map(|c| c.mean).collect();
        let inverse: Vec<f64> = eta_values.iter().map(|e| 1.0 / e).collect();
        Self {
            v1_rho_inverse_eta: spearman(&v1_means, &inverse),
            v2_rho_eta: spearman(&v2_means, &eta_values),
            v2_mean_line: mean(&v2_means),
            eta_values,
            instances,
            chain_height,
            master_seed,
            v1,
            v2,
            runs,
        }
    }

    /// Pooled sd of v1 at the smallest eta and the v2 grid.
    pub fn pooled_sd_at_smallest_eta(&self) -> f64 {
        let Some(last) = self.v1.last() else { return f64::NAN };
        let v2_all: Vec<f64> = self.v2.iter().flat_map(|c| c.fractions.iter().copied()).collect();
        ((last.sd.powi(2) + std_dev(&v2_all).powi(2)) / 2.0).sqrt()
    }
}

/// Sweep config for one cell: same miners and seed, eta applied to v1 and to
/// the starting `d_r` of both protocols.
fn sweep_config(base: &SimConfig, v1: Policy, v2: Policy, eta: f64, seed: u64, protocol: &str) -> SimConfig {
    let mut config = base.clone();
    config.rng_seed = seed;
    config.initial_d_r = eta * base.initial_d_b;
    config.policy = match (protocol, v1, v2) {
        ("v1", Policy::V1(mut p), _) => {
            p.eta = eta;
            Policy::V1(p)
        }
        (_, _, v2) => v2,
    };
    config
}

/// Solution-block fraction against eta for both protocols.
///
/// `v1` and `v2` carry the policy parameters; `base` supplies miners, graph and
/// chain height. Cells run in parallel and merge by index.
pub fn run_eta_sweep(
    base: &SimConfig,
    v1: Policy,
    v2: Policy,
    eta_values: &[f64],
    instances: usize,
) -> Result<EtaSweepResult, ExperimentError> {
    if instances < 2 {
        return Err(precondition("eta sweep needs at least 2 instances"));
    }
    if eta_values.is_empty() {
        return Err(precondition("eta sweep needs at least one eta"));
    }
    if let Some(eta) = eta_values.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
        return Err(precondition(format!("eta must lie in (0, 1], got {eta}")));
    }
    if !matches!(v1, Policy::V1(_)) || !matches!(v2, Policy::V2(_)) {
        return Err(precondition("eta sweep needs v1 and v2 policy parameters"));
    }
    let master = base.rng_seed;
    let cells: Vec<(&str, usize, usize)> = ["v1", "v2"]
        .into_iter()
        .flat_map(|p| (0..eta_values.len()).flat_map(move |e| (0..instances).map(move |i| (p, e, i))))
        .collect();
    let runs = cells
        .par_iter()
        .map(|&(protocol, eta_index, instance)| {
            let seed = sweep_cell_seed(master, eta_index, instance);
            let config = sweep_config(base, v1, v2, eta_values[eta_index], seed, protocol);
            run_simulation(config).map(|o| SweepRun {
                protocol: protocol.to_string(),
                eta_index,
                instance,
                seed,
                records: o.records,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EtaSweepResult::from_runs(
        eta_values.to_vec(),
        instances,
        base.max_blocks,
        master,
        runs,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BubkaRow {
    /// `None` for the honest baseline.
    pub hoard_target: Option<u32>,
    pub win_fraction_mean: f64,
    pub win_fraction_sd: f64,
    pub max_run_mean: f64,
    pub max_run_sd: f64,
    pub win_fractions: Vec<f64>,
    pub max_runs: Vec<f64>,
}

impl BubkaRow {
    fn from_runs(hoard_target: Option<u32>, attacker: u32, runs: &[Vec<SimRecord>]) -> Self {
        let win_fractions: Vec<f64> = runs.iter().map(|r| win_fraction(r, attacker)).collect();
        let max_runs: Vec<f64> = runs.iter().map(|r| longest_run(r, attacker) as f64).collect();
        Self {
            hoard_target,
            win_fraction_mean: mean(&win_fractions),
            win_fraction_sd: std_dev(&win_fractions),
            max_run_mean: mean(&max_runs),
            max_run_sd: std_dev(&max_runs),
            win_fractions,
            max_runs,
        }
    }

    /// Standard error of the mean win fraction.
    pub fn win_fraction_se(&self) -> f64 {
        self.win_fraction_sd / (self.win_fractions.len() as f64).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BubkaResult {
    pub attacker_id: u32,
    pub seeds: usize,
    pub master_seed: u64,
    /// The attacker replaced by an honest solver of equal spec.
    pub honest: BubkaRow,
    pub rows: Vec<BubkaRow>,
    /// Raw records: honest runs first, then one block per hoard target.
    #[serde(skip)]
    pub runs: Vec<(Option<u32>, Vec<Vec<SimRecord>>)>,
}

pub fn bubka_seed(master: u64, index: usize) -> u64 {
    derive_seed(master, &[index as u64])
}

/// Attacker statistics per hoard target, averaged over `seeds` runs that share
/// seeds across targets.
pub fn run_bubka_experiment(
    base: &SimConfig,
    hoard_targets: &[u32],
    seeds: usize,
) -> Result<BubkaResult, ExperimentError> {
    let attackers: Vec<usize> = base
        .miners
        .iter()
        .enumerate()
        .filter(|(_, m)| m.strategy == Strategy::Bubka)
        .map(|(i, _)| i)
        .collect();
    let &[slot] = attackers.as_slice() else {
        return Err(precondition(format!(
            "bubka experiment needs exactly one bubka miner, found {}",
            attackers.len()
        )));
    };
    if seeds == 0 {
        return Err(precondition("bubka experiment needs at least one seed"));
    }
    if hoard_targets.contains(&0) {
        return Err(precondition("hoard targets must be at least 1"));
    }
    let attacker = base.miners[slot].clone();
    let variants: Vec<Option<u32>> = core::iter::once(None)
        .chain(hoard_targets.iter().copied().map(Some))
        .collect();
    let config_for = |variant: Option<u32>, seed: u64| {
        let mut config = base.clone();
        config.rng_seed = seed;
        config.miners[slot] = match variant {
            None => MinerSpec::solver(attacker.id, attacker.hashrate, attacker.solver_steps_per_second),
            Some(t) => MinerSpec::bubka(attacker.id, attacker.hashrate, attacker.solver_steps_per_second, t),
        };
        config
    };
    let cells: Vec<(usize, usize)> = (0..variants.len())
        .flat_map(|v| (0..seeds).map(move |s| (v, s)))
        .collect();
    let records = cells
        .par_iter()
        .map(|&(v, s)| run_simulation(config_for(variants[v], bubka_seed(base.rng_seed, s))).map(|o| o.records))
        .collect::<Result<Vec<_>, _>>()?;
    let runs: Vec<(Option<u32>, Vec<Vec<SimRecord>>)> = variants
        .iter()
        .zip(records.chunks(seeds))
        .map(|(v, chunk)| (*v, chunk.to_vec()))
        .collect();
    let mut rows: Vec<BubkaRow> = runs
        .iter()
        .map(|(v, r)| BubkaRow::from_runs(*v, attacker.id, r))
        .collect();
    let honest = rows.remove(0);
    Ok(BubkaResult {
        attacker_id: attacker.id,
        seeds,
        master_seed: base.rng_seed,
        honest,
        rows,
        runs,
    })
}
