//! Replays a record stream through chain validation.
//!
//! Records carry clique sizes but not vertices, so each solution block gets a
//! witness clique of the recorded size searched for in its epoch's graph.

use dips_core::{
    find_clique_of_size, Block, BlockKind, Chain, CliqueSolution, DifficultyState, Graph, Policy, ProblemInstance,
    SimRecord,
};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("height {height}: {reason}")]
pub struct VerifyFailure {
    pub height: u64,
    pub reason: String,
}

/// Policy and starting difficulties to replay difficulties against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolicyReplay {
    pub policy: Policy,
    pub initial_d_b: f64,
    pub initial_d_r: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub blocks: usize,
    pub solution_blocks: u64,
    pub epochs: u64,
    pub policy_replayed: bool,
}

fn fail(height: u64, reason: impl Into<String>) -> VerifyFailure {
    VerifyFailure {
        height,
        reason: reason.into(),
    }
}

/// Checks heights, times, epochs, running counts and best scores, appends every
/// block through [`Chain::append_block`], and with `replay` also recomputes
/// both difficulties from genesis and compares them exactly.
pub fn verify_records(
    records: &[SimRecord],
    graphs: &[Graph],
    replay: Option<&PolicyReplay>,
) -> Result<VerifyReport, VerifyFailure> {
    if records.is_empty() {
        return Err(fail(0, "no records"));
    }
    let mut chain = Chain::new();
    let mut problem: Option<ProblemInstance> = None;
    let mut state = replay.map(|r| DifficultyState::new(r.initial_d_b, r.initial_d_r));
    let (mut classical, mut solution) = (0u64, 0u64);

    for record in records {
        let h = record.height;
        let epoch = record.problem_epoch;
        let expected_epoch = problem.as_ref().map_or(0, |p| p.epoch);
        if epoch != expected_epoch && epoch != expected_epoch + 1 {
            return Err(fail(h, format!("problem epoch jumps from {expected_epoch} to {epoch}")));
        }
        if problem.as_ref().is_none_or(|p| p.epoch != epoch) {
            let graph = graphs
                .get(epoch as usize)
                .ok_or_else(|| fail(h, format!("graph file has no graph for epoch {epoch}")))?;
            problem = Some(ProblemInstance::new(graph.clone(), epoch));
        }
        let problem = problem.as_mut().expect("set above");

        let in_force = match &state {
            Some(s) => {
                if s.d_b != record.d_b || s.d_r != record.d_r {
                    return Err(fail(
                        h,
                        format!(
                            "recorded difficulties ({}, {}) differ from policy replay ({}, {})",
                            record.d_b, record.d_r, s.d_b, s.d_r
                        ),
                    ));
                }
                s.clone()
            }
            None => DifficultyState::new(record.d_b, record.d_r),
        };

        let witness = match record.kind {
            BlockKind::Classical => None,
            BlockKind::Solution => {
                let vertices = find_clique_of_size(&problem.graph, record.best_score).ok_or_else(|| {
                    fail(
                        h,
                        format!("graph for epoch {epoch} has no clique of size {}", record.best_score),
                    )
                })?;
                Some(CliqueSolution::new(epoch, vertices))
            }
        };
        let block = Block {
            height: h,
            kind: record.kind,
            miner_id: record.miner_id,
            sim_time: record.sim_time,
            difficulty_used: match record.kind {
                BlockKind::Classical => record.d_b,
                BlockKind::Solution => record.d_r,
            },
            solution: witness,
            problem_epoch: epoch,
        };
        chain
            .append_block(block.clone(), problem, &in_force)
            .map_err(|e| fail(h, e.to_string()))?;

        match record.kind {
            BlockKind::Classical => classical += 1,
            BlockKind::Solution => {
                problem.publish(record.best_score);
                solution += 1;
            }
        }
        if record.best_score != problem.best_score {
            return Err(fail(
                h,
                format!(
                    "best score {} differs from published best {}",
                    record.best_score, problem.best_score
                ),
            ));
        }
        if record.cumulative_classical != classical || record.cumulative_solution != solution {
            return Err(fail(h, "cumulative block counts do not match the chain"));
        }
        if let (Some(r), Some(s)) = (replay, state.as_mut()) {
            r.policy.on_block(s, &block);
        }
    }
    Ok(VerifyReport {
        blocks: chain.len(),
        solution_blocks: solution,
        epochs: problem.map_or(0, |p| p.epoch + 1),
        policy_replayed: replay.is_some(),
    })
}
