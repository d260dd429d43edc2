//! Blocks and the append-only chain.
//!
//! A block carries no payload: the only mining work it records is the
//! difficulty it was mined at. Solution blocks additionally carry a clique
//! that must strictly improve the best score published for the active
//! problem.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clique::{Graph, ProblemInstance};
use crate::difficulty::DifficultyState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Classical,
    Solution,
}

impl BlockKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BlockKind::Classical => "classical",
            BlockKind::Solution => "solution",
        }
    }
}

/// A clique offered as a witness for "is there a clique larger than the best?".
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliqueSolution {
    pub problem_epoch: u64,
    /// Sorted vertex indices.
    pub vertices: Vec<usize>,
    /// Clique size.
    pub score: u32,
}

impl CliqueSolution {
    pub fn new(problem_epoch: u64, mut vertices: Vec<usize>) -> Self {
        vertices.sort_unstable();
        let score = vertices.len() as u32;
        Self {
            problem_epoch,
            vertices,
            score,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub height: u64,
    pub kind: BlockKind,
    pub miner_id: u32,
    pub sim_time: f64,
    pub difficulty_used: f64,
    pub solution: Option<CliqueSolution>,
    pub problem_epoch: u64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("block height {got} does not extend chain of length {expected}")]
    HeightMismatch { expected: u64, got: u64 },
    #[error("block kind does not match presence of a solution")]
    KindMismatch,
    #[error("block references problem epoch {got}, active epoch is {active}")]
    EpochMismatch { active: u64, got: u64 },
    #[error("difficulty {got} differs from the policy value {expected}")]
    InvalidDifficulty { expected: f64, got: f64 },
    #[error("solution score {score} does not beat published best {best}")]
    StaleSolution { score: u32, best: u32 },
    #[error("solution vertices do not form a clique")]
    MalformedClique,
    #[error("block time {got} is not after parent time {parent}")]
    NonMonotonicTime { parent: f64, got: f64 },
}

/// Linear chain with per-epoch best published scores.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Chain {
    blocks: Vec<Block>,
    best_score_per_epoch: BTreeMap<u64, u32>,
}

impl Chain {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn tip(&self) -> Option<&Block> {
        self.blocks.last()
    }

    /// Best published score for `epoch` (0 if nothing published yet).
    pub fn best_score(&self, epoch: u64) -> u32 {
        self.best_score_per_epoch.get(&epoch).copied().unwrap_or(0)
    }

    pub fn best_score_per_epoch(&self) -> &BTreeMap<u64, u32> {
        &self.best_score_per_epoch
    }

    /// Validates `block` against the active problem and the difficulty state in
    /// force at its height, then appends it. The chain is unchanged on error.
    pub fn append_block(
        &mut self,
        block: Block,
        problem: &ProblemInstance,
        state: &DifficultyState,
    ) -> Result<(), ChainError> {
        let expected = self.blocks.len() as u64;
        if block.height != expected {
            return Err(ChainError::HeightMismatch {
                expected,
                got: block.height,
            });
        }
        if (block.kind == BlockKind::Solution) != block.solution.is_some() {
            return Err(ChainError::KindMismatch);
        }
        let floor_epoch = self.tip().map_or(0, |b| b.problem_epoch);
        if block.problem_epoch != problem.epoch || block.problem_epoch < floor_epoch {
            return Err(ChainError::EpochMismatch {
                active: problem.epoch,
                got: block.problem_epoch,
            });
        }
        let parent_time = self.tip().map_or(-0.0, |b| b.sim_time);
        let time_ok = block.sim_time.is_finite()
            && block.sim_time >= 0.0
            && (self.blocks.is_empty() || block.sim_time > parent_time);
        if !time_ok {
            return Err(ChainError::NonMonotonicTime {
                parent: parent_time,
                got: block.sim_time,
            });
        }
        let policy_difficulty = match block.kind {
            BlockKind::Classical => state.d_b,
            BlockKind::Solution => state.d_r,
        };
        if block.difficulty_used != policy_difficulty {
            return Err(ChainError::InvalidDifficulty {
                expected: policy_difficulty,
                got: block.difficulty_used,
            });
        }
        if let Some(solution) = &block.solution {
            if solution.problem_epoch != block.problem_epoch {
                return Err(ChainError::EpochMismatch {
                    active: block.problem_epoch,
                    got: solution.problem_epoch,
                });
            }
            if !is_valid_clique(solution, &problem.graph) {
                return Err(ChainError::MalformedClique);
            }
            let best = self.best_score(block.problem_epoch);
            if solution.score <= best {
                return Err(ChainError::StaleSolution {
                    score: solution.score,
                    best,
                });
            }
            self.best_score_per_epoch.insert(block.problem_epoch, solution.score);
        }
        self.blocks.push(block);
        Ok(())
    }
}

fn is_valid_clique(solution: &CliqueSolution, graph: &Graph) -> bool {
    solution.score as usize == solution.vertices.len() && graph.is_clique(&solution.vertices)
}

/// True iff the block's vertices form a clique in `graph` and its score beats
/// `current_best`. Uses O(score²) edge lookups.
pub fn verify_solution_block(block: &Block, graph: &Graph, current_best: u32) -> bool {
    match &block.solution {
        Some(solution) => is_valid_clique(solution, graph) && solution.score > current_best,
        None => false,
    }
}
