//! Core of a useful-work proof-of-work simulator.
//!
//! Miners either hash classically at difficulty `d_b`, or publish a strictly
//! better clique for the current maximum-clique problem and hash at the
//! reduced difficulty `d_r`. The crate holds the chain rules, three
//! difficulty policies, the clique workload and a deterministic
//! discrete-event engine. It is `no_std` (with `alloc`); file formats and
//! the command line live in the companion `dips` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bitset;
pub mod chain;
pub mod clique;
pub mod difficulty;
pub mod engine;
pub mod metrics;
pub mod seed;

pub use chain::{verify_solution_block, Block, BlockKind, Chain, ChainError, CliqueSolution};
pub use clique::{
    bk_advance, brute_force_max_clique, find_clique_of_size, gen_random_graph, max_clique_size, CliqueError, Graph,
    ProblemInstance, SolverCursor,
};
pub use difficulty::{
    clamp_factor, BitcoinParams, DifficultyError, DifficultyState, Policy, PolicyParamsV1, PolicyParamsV2,
};
pub use engine::{
    advance_solvers, bubka_strategy_step, check_saturation_and_replace, run_simulation, sample_block_winner,
    ConfigError, MinerSpec, MinerState, ProblemParams, SimConfig, SimError, SimOutcome, SimRecord, Simulation,
    Strategy,
};
