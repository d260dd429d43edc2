//! Discrete-event simulation of the mining network.
//!
//! Each round every miner draws an exponential waiting time with mean
//! `difficulty / hashrate`; the earliest draw wins the block. Miners holding
//! a publishable solution hash at `d_r`, everyone else at `d_b`. Solvers run
//! their Bron–Kerbosch cursors on separate hardware for the elapsed simulated
//! time before the winner publishes.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{Block, BlockKind, Chain, ChainError, CliqueSolution};
use crate::clique::{bk_advance, gen_random_graph, CliqueError, Graph, ProblemInstance, SolverCursor};
use crate::difficulty::{DifficultyError, DifficultyState, Policy};
use crate::seed::{derive_seed, exponential, rng_from_seed, SimRng};

/// Seed-derivation stream tags.
const STREAM_MINING: u64 = 0;
const STREAM_GRAPH: u64 = 1;
const STREAM_ORDER: u64 = 2;

pub const DEFAULT_GRAPH_N: usize = 60;
pub const DEFAULT_GRAPH_P: f64 = 0.5;
pub const DEFAULT_SATURATION_WINDOW: u64 = 50;
/// A lone solver at this speed exhausts a default G(60, 0.5) instance (about
/// 4400 frame expansions) in roughly 500 blocks at 0.1 s spacing.
pub const DEFAULT_SOLVER_STEPS_PER_SECOND: f64 = 90.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Classical,
    Solver,
    #[serde(alias = "bubka-attacker")]
    Bubka,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinerSpec {
    pub id: u32,
    /// Hashes per simulated second.
    pub hashrate: f64,
    pub strategy: Strategy,
    /// Bron–Kerbosch frame expansions per simulated second.
    pub solver_steps_per_second: f64,
    /// Attacker only: improvements to stockpile before releasing.
    pub hoard_target: Option<u32>,
}

impl MinerSpec {
    pub fn classical(id: u32, hashrate: f64) -> Self {
        Self {
            id,
            hashrate,
            strategy: Strategy::Classical,
            solver_steps_per_second: 0.0,
            hoard_target: None,
        }
    }

    pub fn solver(id: u32, hashrate: f64, steps_per_second: f64) -> Self {
        Self {
            id,
            hashrate,
            strategy: Strategy::Solver,
            solver_steps_per_second: steps_per_second,
            hoard_target: None,
        }
    }

    pub fn bubka(id: u32, hashrate: f64, steps_per_second: f64, hoard_target: u32) -> Self {
        Self {
            id,
            hashrate,
            strategy: Strategy::Bubka,
            solver_steps_per_second: steps_per_second,
            hoard_target: Some(hoard_target),
        }
    }

    /// Whether this miner runs a clique solver at all.
    pub fn solves(&self) -> bool {
        self.strategy != Strategy::Classical && self.solver_steps_per_second > 0.0
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let reason = if !(self.hashrate.is_finite() && self.hashrate > 0.0) {
            Some("hashrate must be positive")
        } else if !(self.solver_steps_per_second.is_finite() && self.solver_steps_per_second >= 0.0) {
            Some("solver speed must be non-negative")
        } else if self.strategy == Strategy::Bubka && self.hoard_target.is_none_or(|t| t == 0) {
            Some("attacker needs hoard_target >= 1")
        } else {
            None
        };
        match reason {
            Some(reason) => Err(ConfigError::InvalidMiner { id: self.id, reason }),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MinerState {
    pub spec: MinerSpec,
    pub cursor: Option<SolverCursor>,
    /// Honest solver: best unpublished improvement.
    pub held_solution: Option<CliqueSolution>,
    /// Attacker: stockpiled improvements, ascending by score.
    pub hoard: Vec<CliqueSolution>,
    /// Attacker: currently releasing its stockpile.
    pub releasing: bool,
    carry: f64,
}

impl MinerState {
    pub fn new(spec: MinerSpec) -> Self {
        Self {
            spec,
            cursor: None,
            held_solution: None,
            hoard: Vec::new(),
            releasing: false,
            carry: 0.0,
        }
    }

    /// The solution this miner would put in a block if it won now.
    pub fn publishable(&self) -> Option<&CliqueSolution> {
        match self.spec.strategy {
            Strategy::Classical => None,
            Strategy::Solver => self.held_solution.as_ref(),
            Strategy::Bubka if self.releasing => self.hoard.first(),
            Strategy::Bubka => None,
        }
    }

    /// Best score this miner knows of but has not published.
    pub fn best_unpublished(&self) -> u32 {
        let held = self.held_solution.as_ref().map_or(0, |s| s.score);
        let hoarded = self.hoard.last().map_or(0, |s| s.score);
        held.max(hoarded)
    }

    fn receive(&mut self, solution: CliqueSolution, published_best: u32) {
        match self.spec.strategy {
            Strategy::Classical => {}
            Strategy::Solver => self.held_solution = Some(solution),
            Strategy::Bubka => {
                self.hoard.push(solution);
                let capacity = self.spec.hoard_target.unwrap_or(1).max(1) as usize;
                if self.hoard.len() > capacity {
                    self.hoard.remove(0);
                }
                bubka_strategy_step(self, published_best);
            }
        }
    }

    fn take_publication(&mut self) -> Option<CliqueSolution> {
        match self.spec.strategy {
            Strategy::Classical => None,
            Strategy::Solver => self.held_solution.take(),
            Strategy::Bubka => {
                let released = (self.releasing && !self.hoard.is_empty()).then(|| self.hoard.remove(0));
                if self.hoard.is_empty() {
                    self.releasing = false;
                }
                released
            }
        }
    }

    /// Drops anything the published best has overtaken.
    fn observe_published_best(&mut self, best: u32) {
        if self.held_solution.as_ref().is_some_and(|s| s.score <= best) {
            self.held_solution = None;
        }
        if self.spec.strategy == Strategy::Bubka {
            bubka_strategy_step(self, best);
        }
    }

    fn reset_for_problem(&mut self, graph: &Graph, epoch: u64, master_seed: u64) {
        self.held_solution = None;
        self.hoard.clear();
        self.releasing = false;
        self.carry = 0.0;
        self.cursor = self.spec.solves().then(|| {
            let order_seed = derive_seed(master_seed, &[STREAM_ORDER, epoch, u64::from(self.spec.id)]);
            SolverCursor::shuffled(graph, epoch, order_seed)
        });
    }
}

/// Attacker bookkeeping after the published best moves: discard overtaken
/// hoard entries, start releasing once the stockpile is full, and stop when
/// it runs dry.
pub fn bubka_strategy_step(attacker: &mut MinerState, chain_best: u32) {
    attacker.hoard.retain(|s| s.score > chain_best);
    let target = attacker.spec.hoard_target.unwrap_or(1).max(1) as usize;
    if attacker.hoard.is_empty() {
        attacker.releasing = false;
    } else if attacker.hoard.len() >= target {
        attacker.releasing = true;
    }
}

/// Outcome of one mining race.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockWin {
    /// Index into the miner list.
    pub index: usize,
    pub miner_id: u32,
    pub kind: BlockKind,
    pub dt: f64,
}

/// Races all miners once. Exact ties go to the earlier miner in the list.
pub fn sample_block_winner(miners: &[MinerState], d_b: f64, d_r: f64, rng: &mut SimRng) -> Option<BlockWin> {
    let mut winner: Option<BlockWin> = None;
    for (index, miner) in miners.iter().enumerate() {
        let (kind, difficulty) = if miner.publishable().is_some() {
            (BlockKind::Solution, d_r)
        } else {
            (BlockKind::Classical, d_b)
        };
        let dt = exponential(rng, difficulty / miner.spec.hashrate);
        if winner.is_none_or(|w| dt < w.dt) {
            winner = Some(BlockWin {
                index,
                miner_id: miner.spec.id,
                kind,
                dt,
            });
        }
    }
    winner
}

/// Runs every solver for `dt` simulated seconds of its own hardware,
/// keeping fractional steps as carry. Improvements over both the published
/// best and the miner's own unpublished best are kept.
pub fn advance_solvers(miners: &mut [MinerState], dt: f64, problem: &ProblemInstance) -> Result<(), CliqueError> {
    for miner in miners.iter_mut() {
        if !miner.spec.solves() || miner.cursor.as_ref().is_none_or(SolverCursor::is_exhausted) {
            continue;
        }
        let total = miner.spec.solver_steps_per_second * dt + miner.carry;
        let steps = libm::floor(total);
        miner.carry = total - steps;
        let mut remaining = steps as u64;
        while remaining > 0 {
            let threshold = problem.best_score.max(miner.best_unpublished());
            let cursor = miner.cursor.as_mut().expect("solver has a cursor");
            let before = cursor.steps_consumed();
            let found = bk_advance(cursor, &problem.graph, remaining, threshold)?;
            remaining -= cursor.steps_consumed() - before;
            match found {
                Some(solution) => miner.receive(solution, problem.best_score),
                None => break,
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub n: usize,
    pub edge_prob: f64,
}

impl Default for ProblemParams {
    fn default() -> Self {
        Self {
            n: DEFAULT_GRAPH_N,
            edge_prob: DEFAULT_GRAPH_P,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub policy: Policy,
    pub miners: Vec<MinerSpec>,
    pub initial_d_b: f64,
    pub initial_d_r: f64,
    pub problem: ProblemParams,
    pub max_blocks: u64,
    /// Blocks without improvement after which the problem is replaced.
    pub saturation_window: u64,
    pub replace_on_saturation: bool,
    pub rng_seed: u64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("at least one miner is required")]
    NoMiners,
    #[error("miner {id}: {reason}")]
    InvalidMiner { id: u32, reason: &'static str },
    #[error("duplicate miner id {0}")]
    DuplicateMinerId(u32),
    #[error("initial difficulties must be positive")]
    NonPositiveDifficulty,
    #[error("max_blocks must be at least 1")]
    NoBlocks,
    #[error("saturation_window must be at least 1")]
    ZeroWindow,
    #[error(transparent)]
    Policy(#[from] DifficultyError),
    #[error(transparent)]
    Problem(#[from] CliqueError),
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.miners.is_empty() {
            return Err(ConfigError::NoMiners);
        }
        for (i, miner) in self.miners.iter().enumerate() {
            miner.validate()?;
            if self.miners[..i].iter().any(|m| m.id == miner.id) {
                return Err(ConfigError::DuplicateMinerId(miner.id));
            }
        }
        let positive = |d: f64| d.is_finite() && d > 0.0;
        if !positive(self.initial_d_b) || !positive(self.initial_d_r) {
            return Err(ConfigError::NonPositiveDifficulty);
        }
        if self.max_blocks == 0 {
            return Err(ConfigError::NoBlocks);
        }
        if self.saturation_window == 0 {
            return Err(ConfigError::ZeroWindow);
        }
        self.policy.validate()?;
        let p = self.problem.edge_prob;
        if self.problem.n == 0 || !(p > 0.0 && p < 1.0) {
            return Err(CliqueError::InvalidParams {
                n: self.problem.n,
                edge_prob: p,
            }
            .into());
        }
        Ok(())
    }

    pub fn total_hashrate(&self) -> f64 {
        self.miners.iter().map(|m| m.hashrate).sum()
    }
}

/// One row per block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimRecord {
    pub height: u64,
    pub sim_time: f64,
    pub kind: BlockKind,
    pub miner_id: u32,
    /// Difficulties in force when the block was mined.
    pub d_b: f64,
    pub d_r: f64,
    /// Published best score of the block's problem after this block.
    pub best_score: u32,
    pub problem_epoch: u64,
    #[serde(rename = "cum_classical")]
    pub cumulative_classical: u64,
    #[serde(rename = "cum_solution")]
    pub cumulative_solution: u64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Clique(#[from] CliqueError),
    #[error("engine produced an invalid block: {0}")]
    Chain(#[from] ChainError),
}

/// Why a problem was retired.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Saturation {
    /// Every solver has exhausted its enumeration.
    Exhausted,
    /// No improvement for a full saturation window.
    Stagnant,
}

pub fn saturation_cause(miners: &[MinerState], blocks_since_improvement: u64, window: u64) -> Option<Saturation> {
    let mut solvers = miners.iter().filter(|m| m.spec.solves()).peekable();
    solvers.peek()?;
    if solvers.all(|m| m.cursor.as_ref().is_some_and(SolverCursor::is_exhausted)) {
        Some(Saturation::Exhausted)
    } else if blocks_since_improvement >= window {
        Some(Saturation::Stagnant)
    } else {
        None
    }
}

/// Fresh problem for the next epoch when the current one has saturated.
pub fn check_saturation_and_replace(
    problem: &ProblemInstance,
    miners: &[MinerState],
    blocks_since_improvement: u64,
    config: &SimConfig,
) -> Result<Option<ProblemInstance>, CliqueError> {
    if !config.replace_on_saturation
        || saturation_cause(miners, blocks_since_improvement, config.saturation_window).is_none()
    {
        return Ok(None);
    }
    problem_for_epoch(config, problem.epoch + 1).map(Some)
}

fn problem_for_epoch(config: &SimConfig, epoch: u64) -> Result<ProblemInstance, CliqueError> {
    let seed = derive_seed(config.rng_seed, &[STREAM_GRAPH, epoch]);
    let graph = gen_random_graph(config.problem.n, config.problem.edge_prob, seed)?;
    Ok(ProblemInstance::new(graph, epoch))
}

/// Everything a finished run produced.
#[derive(Clone, Debug)]
pub struct SimOutcome {
    pub records: Vec<SimRecord>,
    pub chain: Chain,
    pub difficulty: DifficultyState,
    /// Heights of the last block mined on each retired problem.
    pub replacement_heights: Vec<u64>,
    /// One graph per problem epoch.
    pub graphs: Vec<Graph>,
}

/// Stepwise simulation state.
#[derive(Clone, Debug)]
pub struct Simulation {
    config: SimConfig,
    rng: SimRng,
    miners: Vec<MinerState>,
    problem: ProblemInstance,
    chain: Chain,
    difficulty: DifficultyState,
    clock: f64,
    records: Vec<SimRecord>,
    cumulative_classical: u64,
    cumulative_solution: u64,
    blocks_since_improvement: u64,
    replacement_heights: Vec<u64>,
    graphs: Vec<Graph>,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let problem = problem_for_epoch(&config, 0)?;
        let mut miners: Vec<MinerState> = config.miners.iter().cloned().map(MinerState::new).collect();
        miners.sort_by_key(|m| m.spec.id);
        for miner in &mut miners {
            miner.reset_for_problem(&problem.graph, 0, config.rng_seed);
        }
        Ok(Self {
            rng: rng_from_seed(derive_seed(config.rng_seed, &[STREAM_MINING])),
            difficulty: DifficultyState::new(config.initial_d_b, config.initial_d_r),
            graphs: alloc::vec![problem.graph.clone()],
            miners,
            problem,
            chain: Chain::new(),
            clock: 0.0,
            records: Vec::new(),
            cumulative_classical: 0,
            cumulative_solution: 0,
            blocks_since_improvement: 0,
            replacement_heights: Vec::new(),
            config,
        })
    }

    pub fn miners(&self) -> &[MinerState] {
        &self.miners
    }

    pub fn problem(&self) -> &ProblemInstance {
        &self.problem
    }

    pub fn difficulty(&self) -> &DifficultyState {
        &self.difficulty
    }

    pub fn records(&self) -> &[SimRecord] {
        &self.records
    }

    pub fn is_finished(&self) -> bool {
        self.records.len() as u64 >= self.config.max_blocks
    }

    /// Mines one block.
    pub fn step(&mut self) -> Result<&SimRecord, SimError> {
        let (d_b, d_r) = (self.difficulty.d_b, self.difficulty.d_r);
        let win = sample_block_winner(&self.miners, d_b, d_r, &mut self.rng).expect("validated non-empty miners");
        let mut now = self.clock + win.dt;
        if now <= self.clock {
            now = self.clock.next_up();
        }
        advance_solvers(&mut self.miners, now - self.clock, &self.problem)?;
        self.clock = now;
        if let Some(optimum) = self
            .miners
            .iter()
            .filter_map(|m| m.cursor.as_ref())
            .find(|c| c.is_exhausted())
            .map(SolverCursor::largest_seen)
        {
            self.problem.optimum = Some(optimum);
        }

        let height = self.records.len() as u64;
        let solution = match win.kind {
            BlockKind::Solution => self.miners[win.index].take_publication(),
            BlockKind::Classical => None,
        };
        debug_assert_eq!(solution.is_some(), win.kind == BlockKind::Solution);
        let block = Block {
            height,
            kind: win.kind,
            miner_id: win.miner_id,
            sim_time: now,
            difficulty_used: if solution.is_some() { d_r } else { d_b },
            solution,
            problem_epoch: self.problem.epoch,
        };
        self.chain
            .append_block(block.clone(), &self.problem, &self.difficulty)?;

        match &block.solution {
            Some(solution) => {
                self.problem.publish(solution.score);
                self.blocks_since_improvement = 0;
                self.cumulative_solution += 1;
            }
            None => {
                self.blocks_since_improvement += 1;
                self.cumulative_classical += 1;
            }
        }
        let best = self.problem.best_score;
        for miner in &mut self.miners {
            miner.observe_published_best(best);
        }
        self.config.policy.on_block(&mut self.difficulty, &block);

        self.records.push(SimRecord {
            height,
            sim_time: now,
            kind: block.kind,
            miner_id: block.miner_id,
            d_b,
            d_r,
            best_score: best,
            problem_epoch: self.problem.epoch,
            cumulative_classical: self.cumulative_classical,
            cumulative_solution: self.cumulative_solution,
        });

        if let Some(next) =
            check_saturation_and_replace(&self.problem, &self.miners, self.blocks_since_improvement, &self.config)?
        {
            self.replacement_heights.push(height);
            for miner in &mut self.miners {
                miner.reset_for_problem(&next.graph, next.epoch, self.config.rng_seed);
            }
            self.graphs.push(next.graph.clone());
            self.problem = next;
            self.blocks_since_improvement = 0;
        }
        Ok(self.records.last().expect("just pushed"))
    }

    pub fn finish(self) -> SimOutcome {
        SimOutcome {
            records: self.records,
            chain: self.chain,
            difficulty: self.difficulty,
            replacement_heights: self.replacement_heights,
            graphs: self.graphs,
        }
    }
}

/// Runs a configuration to `max_blocks`. Fully determined by `rng_seed`.
pub fn run_simulation(config: SimConfig) -> Result<SimOutcome, SimError> {
    let mut sim = Simulation::new(config)?;
    while !sim.is_finished() {
        sim.step()?;
    }
    Ok(sim.finish())
}
