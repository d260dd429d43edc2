//! Difficulty policies: the single-difficulty Bitcoin baseline, the coupled
//! two-difficulty scheme (v1) and the independently retargeted scheme (v2).
//!
//! Difficulties are expected hash counts. Every multiplicative update is
//! clamped to `[1/x, x]` where `x` is the policy's `max_update_factor`.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{Block, BlockKind};

pub const DEFAULT_MAX_UPDATE_FACTOR: f64 = 4.0;

/// Difficulties never drop below the smallest normal `f64`.
pub const MIN_DIFFICULTY: f64 = f64::MIN_POSITIVE;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DifficultyError {
    #[error("update factor must be positive, got {0}")]
    NonPositiveFactor(f64),
    #[error("invalid policy parameter: {0}")]
    InvalidParams(&'static str),
}

/// Clamps a raw update factor into `[1/x, x]`.
pub fn clamp_factor(raw: f64, x: f64) -> Result<f64, DifficultyError> {
    if raw.is_nan() || raw <= 0.0 {
        return Err(DifficultyError::NonPositiveFactor(raw));
    }
    Ok(raw.clamp(1.0 / x, x))
}

/// Clamped factor `expected_span / elapsed`; an empty span clamps upward to `x`.
fn retarget_factor(expected_span: f64, elapsed: f64, x: f64) -> f64 {
    if elapsed <= 0.0 {
        return x;
    }
    clamp_factor(expected_span / elapsed, x).unwrap_or(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BitcoinParams {
    pub epoch_length: u64,
    pub target_block_time: f64,
    pub max_update_factor: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyParamsV1 {
    /// Enforced long-run average of `d_r / d_b`.
    pub eta: f64,
    pub epoch_length: u64,
    pub target_block_time: f64,
    pub max_update_factor: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyParamsV2 {
    pub classical_epoch: u64,
    pub solution_epoch: u64,
    pub classical_target_time: f64,
    pub solution_target_time: f64,
    pub max_update_factor: f64,
}

fn check_factor(x: f64) -> Result<(), DifficultyError> {
    if x.is_finite() && x > 1.0 {
        Ok(())
    } else {
        Err(DifficultyError::InvalidParams(
            "max_update_factor must be a finite value > 1",
        ))
    }
}

fn check_time(t: f64, what: &'static str) -> Result<(), DifficultyError> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(DifficultyError::InvalidParams(what))
    }
}

impl BitcoinParams {
    pub fn validate(&self) -> Result<(), DifficultyError> {
        if self.epoch_length == 0 {
            return Err(DifficultyError::InvalidParams("epoch length must be positive"));
        }
        check_time(self.target_block_time, "target block time must be positive")?;
        check_factor(self.max_update_factor)
    }
}

impl PolicyParamsV1 {
    pub fn validate(&self) -> Result<(), DifficultyError> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(DifficultyError::InvalidParams("eta must lie in (0, 1]"));
        }
        BitcoinParams {
            epoch_length: self.epoch_length,
            target_block_time: self.target_block_time,
            max_update_factor: self.max_update_factor,
        }
        .validate()
    }
}

impl PolicyParamsV2 {
    pub fn validate(&self) -> Result<(), DifficultyError> {
        if self.classical_epoch == 0 || self.solution_epoch == 0 {
            return Err(DifficultyError::InvalidParams("epoch lengths must be positive"));
        }
        check_time(self.classical_target_time, "classical target time must be positive")?;
        check_time(self.solution_target_time, "solution target time must be positive")?;
        check_factor(self.max_update_factor)
    }
}

/// Which of the two difficulties an update touched.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DifficultyKind {
    Classical,
    Reduced,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum UpdateCause {
    /// Block-time retarget at the end of an epoch.
    Retarget,
    /// v1: moving `d_r` toward `eta * d_b`.
    RatioTracking,
    /// v2: `d_r / x` after a run of classical blocks.
    Drought,
}

/// One logged multiplicative update.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DifficultyUpdate {
    pub height: u64,
    pub kind: DifficultyKind,
    pub cause: UpdateCause,
    pub factor: f64,
    pub old: f64,
    pub new: f64,
    /// The [`MIN_DIFFICULTY`] floor overrode the factor.
    pub floored: bool,
}

/// Difficulties after an update event at `height`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub height: u64,
    pub d_b: f64,
    pub d_r: f64,
}

/// Live state of a difficulty policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DifficultyState {
    pub d_b: f64,
    pub d_r: f64,
    pub classical_count_in_epoch: u64,
    pub solution_count_in_epoch: u64,
    pub total_count_in_epoch: u64,
    pub epoch_start_time: f64,
    pub classical_epoch_start_time: f64,
    pub solution_epoch_start_time: f64,
    pub consecutive_classical: u64,
    pub history: Vec<Snapshot>,
    pub updates: Vec<DifficultyUpdate>,
}

impl DifficultyState {
    /// Fresh state with all epoch clocks at simulated time zero.
    pub fn new(d_b: f64, d_r: f64) -> Self {
        Self {
            d_b,
            d_r,
            classical_count_in_epoch: 0,
            solution_count_in_epoch: 0,
            total_count_in_epoch: 0,
            epoch_start_time: 0.0,
            classical_epoch_start_time: 0.0,
            solution_epoch_start_time: 0.0,
            consecutive_classical: 0,
            history: Vec::new(),
            updates: Vec::new(),
        }
    }

    pub fn difficulty(&self, kind: DifficultyKind) -> f64 {
        match kind {
            DifficultyKind::Classical => self.d_b,
            DifficultyKind::Reduced => self.d_r,
        }
    }

    fn apply(&mut self, height: u64, kind: DifficultyKind, cause: UpdateCause, factor: f64) {
        let old = self.difficulty(kind);
        self.set(height, kind, cause, factor, old * factor);
    }

    /// The drought cut divides rather than multiplying by `1/x`, so the logged
    /// `new == old / x` holds exactly for any `x`.
    fn apply_drought(&mut self, height: u64, x: f64) {
        let old = self.d_r;
        self.set(height, DifficultyKind::Reduced, UpdateCause::Drought, 1.0 / x, old / x);
    }

    fn set(&mut self, height: u64, kind: DifficultyKind, cause: UpdateCause, factor: f64, scaled: f64) {
        let old = self.difficulty(kind);
        let new = scaled.max(MIN_DIFFICULTY);
        match kind {
            DifficultyKind::Classical => self.d_b = new,
            DifficultyKind::Reduced => self.d_r = new,
        }
        self.updates.push(DifficultyUpdate {
            height,
            kind,
            cause,
            factor,
            old,
            new,
            floored: new != scaled,
        });
    }

    fn snapshot(&mut self, height: u64) {
        self.history.push(Snapshot {
            height,
            d_b: self.d_b,
            d_r: self.d_r,
        });
    }

    /// Bitcoin baseline: retarget `d_b` every `epoch_length` blocks.
    pub fn on_block_bitcoin(&mut self, params: &BitcoinParams, block_time: f64, height: u64) {
        self.total_count_in_epoch += 1;
        if self.total_count_in_epoch < params.epoch_length {
            return;
        }
        let elapsed = block_time - self.epoch_start_time;
        let expected = params.epoch_length as f64 * params.target_block_time;
        let factor = retarget_factor(expected, elapsed, params.max_update_factor);
        self.apply(height, DifficultyKind::Classical, UpdateCause::Retarget, factor);
        self.total_count_in_epoch = 0;
        self.epoch_start_time = block_time;
        self.snapshot(height);
    }

    /// v1: every `epoch_length` blocks of any kind, retarget `d_b` from the
    /// elapsed time, then move `d_r` toward `eta * d_b`. Both steps are clamped.
    pub fn on_block_v1(&mut self, params: &PolicyParamsV1, block_time: f64, height: u64) {
        self.total_count_in_epoch += 1;
        if self.total_count_in_epoch < params.epoch_length {
            return;
        }
        let x = params.max_update_factor;
        let elapsed = block_time - self.epoch_start_time;
        let expected = params.epoch_length as f64 * params.target_block_time;
        self.apply(
            height,
            DifficultyKind::Classical,
            UpdateCause::Retarget,
            retarget_factor(expected, elapsed, x),
        );
        let ratio_factor = clamp_factor(params.eta * self.d_b / self.d_r, x).unwrap_or(x);
        self.apply(
            height,
            DifficultyKind::Reduced,
            UpdateCause::RatioTracking,
            ratio_factor,
        );
        self.total_count_in_epoch = 0;
        self.epoch_start_time = block_time;
        self.snapshot(height);
    }

    /// v2: `d_b` retargets over classical blocks, `d_r` over solution blocks,
    /// and every run of `classical_epoch` consecutive classical blocks cuts
    /// `d_r` by the full factor.
    pub fn on_block_v2(&mut self, params: &PolicyParamsV2, block: &Block) {
        let x = params.max_update_factor;
        let now = block.sim_time;
        let mut changed = false;
        match block.kind {
            BlockKind::Classical => {
                self.classical_count_in_epoch += 1;
                self.consecutive_classical += 1;
                if self.classical_count_in_epoch == params.classical_epoch {
                    let elapsed = now - self.classical_epoch_start_time;
                    let expected = params.classical_epoch as f64 * params.classical_target_time;
                    self.apply(
                        block.height,
                        DifficultyKind::Classical,
                        UpdateCause::Retarget,
                        retarget_factor(expected, elapsed, x),
                    );
                    self.classical_count_in_epoch = 0;
                    self.classical_epoch_start_time = now;
                    changed = true;
                }
                if self.consecutive_classical == params.classical_epoch {
                    self.apply_drought(block.height, x);
                    self.consecutive_classical = 0;
                    changed = true;
                }
            }
            BlockKind::Solution => {
                self.consecutive_classical = 0;
                self.solution_count_in_epoch += 1;
                if self.solution_count_in_epoch == params.solution_epoch {
                    let elapsed = now - self.solution_epoch_start_time;
                    let expected = params.solution_epoch as f64 * params.solution_target_time;
                    self.apply(
                        block.height,
                        DifficultyKind::Reduced,
                        UpdateCause::Retarget,
                        retarget_factor(expected, elapsed, x),
                    );
                    self.solution_count_in_epoch = 0;
                    self.solution_epoch_start_time = now;
                    changed = true;
                }
            }
        }
        if changed {
            self.snapshot(block.height);
        }
    }
}

/// A difficulty policy with its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Policy {
    Bitcoin(BitcoinParams),
    V1(PolicyParamsV1),
    V2(PolicyParamsV2),
}

impl Policy {
    pub fn validate(&self) -> Result<(), DifficultyError> {
        match self {
            Policy::Bitcoin(p) => p.validate(),
            Policy::V1(p) => p.validate(),
            Policy::V2(p) => p.validate(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Policy::Bitcoin(_) => "bitcoin",
            Policy::V1(_) => "v1",
            Policy::V2(_) => "v2",
        }
    }

    pub fn max_update_factor(&self) -> f64 {
        match self {
            Policy::Bitcoin(p) => p.max_update_factor,
            Policy::V1(p) => p.max_update_factor,
            Policy::V2(p) => p.max_update_factor,
        }
    }

    /// Target spacing of classical blocks.
    pub fn classical_target_time(&self) -> f64 {
        match self {
            Policy::Bitcoin(p) => p.target_block_time,
            Policy::V1(p) => p.target_block_time,
            Policy::V2(p) => p.classical_target_time,
        }
    }

    /// Applies the policy to an appended block.
    pub fn on_block(&self, state: &mut DifficultyState, block: &Block) {
        match self {
            Policy::Bitcoin(p) => state.on_block_bitcoin(p, block.sim_time, block.height),
            Policy::V1(p) => state.on_block_v1(p, block.sim_time, block.height),
            Policy::V2(p) => state.on_block_v2(p, block),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(height: u64, kind: BlockKind, time: f64) -> Block {
        Block {
            height,
            kind,
            miner_id: 0,
            sim_time: time,
            difficulty_used: 1.0,
            solution: None,
            problem_epoch: 0,
        }
    }

    fn v1(eta: f64) -> PolicyParamsV1 {
        PolicyParamsV1 {
            eta,
            epoch_length: 4,
            target_block_time: 0.1,
            max_update_factor: 4.0,
        }
    }

    fn v2() -> PolicyParamsV2 {
        PolicyParamsV2 {
            classical_epoch: 10,
            solution_epoch: 5,
            classical_target_time: 0.1,
            solution_target_time: 0.1,
            max_update_factor: 4.0,
        }
    }

    /// Runs one v1 epoch of four evenly spaced blocks ending at `elapsed`.
    fn v1_epoch(state: &mut DifficultyState, params: &PolicyParamsV1, elapsed: f64) {
        for i in 1..=4 {
            state.on_block_v1(params, elapsed * i as f64 / 4.0, i - 1);
        }
    }

    #[test]
    fn clamp_examples() {
        assert_eq!(clamp_factor(1.0, 4.0), Ok(1.0));
        assert_eq!(clamp_factor(10.0, 4.0), Ok(4.0));
        assert_eq!(clamp_factor(0.1, 4.0), Ok(0.25));
        assert_eq!(clamp_factor(0.0, 4.0), Err(DifficultyError::NonPositiveFactor(0.0)));
        assert!(clamp_factor(-1.0, 4.0).is_err());
        assert!(clamp_factor(f64::NAN, 4.0).is_err());
        assert_eq!(clamp_factor(f64::INFINITY, 4.0), Ok(4.0));
    }

    #[test]
    fn v1_on_target_is_fixed_point() {
        let params = v1(1.0 / 200.0);
        let mut state = DifficultyState::new(100.0, 0.5);
        v1_epoch(&mut state, &params, 0.4);
        assert!((state.d_b - 100.0).abs() < 1e-12);
        assert!((state.d_r - 0.5).abs() < 1e-12);
        assert_eq!(state.history.len(), 1);
        assert_eq!(state.total_count_in_epoch, 0);
    }

    #[test]
    fn v1_fast_epoch_doubles_both() {
        let params = v1(1.0 / 200.0);
        let mut state = DifficultyState::new(100.0, 0.5);
        v1_epoch(&mut state, &params, 0.2);
        // Independent scalar recomputation of the two-step rule.
        let f_b = (4.0 * 0.1 / 0.2_f64).clamp(0.25, 4.0);
        let d_b = 100.0 * f_b;
        let f_r = ((1.0 / 200.0) * d_b / 0.5_f64).clamp(0.25, 4.0);
        let d_r = 0.5 * f_r;
        assert_eq!((d_b, d_r), (200.0, 1.0));
        assert!((state.d_b - d_b).abs() < 1e-12);
        assert!((state.d_r - d_r).abs() < 1e-12);
    }

    #[test]
    fn v1_slow_epoch_clamps_down() {
        let params = v1(1.0 / 200.0);
        let mut state = DifficultyState::new(100.0, 0.5);
        v1_epoch(&mut state, &params, 4.0);
        assert_eq!(state.d_b, 25.0);
        assert_eq!(state.d_r, 0.125);
    }

    #[test]
    fn v1_zero_elapsed_clamps_up() {
        let params = v1(0.5);
        let mut state = DifficultyState::new(100.0, 50.0);
        for h in 0..4 {
            state.on_block_v1(&params, 0.0, h);
        }
        assert_eq!(state.d_b, 400.0);
    }

    #[test]
    fn v2_drought_cuts_reduced_difficulty() {
        let params = v2();
        let mut state = DifficultyState::new(1000.0, 1000.0);
        for h in 0..10 {
            state.on_block_v2(&params, &block(h, BlockKind::Classical, 0.1 * (h + 1) as f64));
        }
        assert_eq!(state.d_r, 250.0);
        assert_eq!(state.consecutive_classical, 0);
        let drought: Vec<_> = state
            .updates
            .iter()
            .filter(|u| u.cause == UpdateCause::Drought)
            .collect();
        assert_eq!(drought.len(), 1);
        assert_eq!(drought[0].new, drought[0].old / 4.0);
        // On-target classical epoch leaves d_b alone.
        assert!((state.d_b - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn v2_drought_repeats_and_resets_on_solution() {
        let params = v2();
        let mut state = DifficultyState::new(1000.0, 1024.0);
        let mut h = 0;
        let mut t = 0.0;
        let mut push = |state: &mut DifficultyState, kind| {
            t += 0.1;
            state.on_block_v2(&params, &block(h, kind, t));
            h += 1;
        };
        for _ in 0..9 {
            push(&mut state, BlockKind::Classical);
        }
        assert_eq!(state.consecutive_classical, 9);
        push(&mut state, BlockKind::Solution);
        assert_eq!(state.consecutive_classical, 0);
        assert_eq!(state.d_r, 1024.0);
        for _ in 0..20 {
            push(&mut state, BlockKind::Classical);
        }
        assert_eq!(state.d_r, 64.0);
    }

    #[test]
    fn v2_on_target_solution_epoch() {
        let params = v2();
        let mut state = DifficultyState::new(1000.0, 5.0);
        for h in 0..5 {
            state.on_block_v2(&params, &block(h, BlockKind::Solution, 0.1 * (h + 1) as f64));
        }
        assert!((state.d_r - 5.0).abs() < 1e-12);
        assert_eq!(state.solution_count_in_epoch, 0);
        assert_eq!(state.solution_epoch_start_time, 0.5);
    }

    #[test]
    fn v2_classical_epoch_not_reset_by_solution() {
        let params = v2();
        let mut state = DifficultyState::new(1000.0, 5.0);
        for h in 0..5 {
            state.on_block_v2(&params, &block(h, BlockKind::Classical, 0.1 * (h + 1) as f64));
        }
        state.on_block_v2(&params, &block(5, BlockKind::Solution, 0.6));
        assert_eq!(state.classical_count_in_epoch, 5);
        assert_eq!(state.consecutive_classical, 0);
    }

    #[test]
    fn bitcoin_retarget() {
        let params = BitcoinParams {
            epoch_length: 4,
            target_block_time: 0.1,
            max_update_factor: 4.0,
        };
        let mut state = DifficultyState::new(100.0, 1.0);
        for h in 0..4 {
            state.on_block_bitcoin(&params, 0.1 * (h + 1) as f64, h);
        }
        assert!((state.d_b - 100.0).abs() < 1e-9);
        for h in 4..8 {
            state.on_block_bitcoin(&params, 0.4 + 0.05 * (h - 3) as f64, h);
        }
        assert!((state.d_b - 200.0).abs() < 1e-9);
        assert_eq!(state.d_r, 1.0);
    }

    #[test]
    fn bitcoin_converges_after_hashrate_doubling() {
        // Deterministic block spacing d / h: the recurrence d' = d * (N T / (N d / h))
        // has fixed point d = h T, so doubling h doubles the fixed point.
        let params = BitcoinParams {
            epoch_length: 10,
            target_block_time: 0.1,
            max_update_factor: 4.0,
        };
        let hashrate = 20.0;
        let mut state = DifficultyState::new(hashrate * 0.1, 1.0);
        let mut t = 0.0;
        for h in 0..100 {
            t += state.d_b / (2.0 * hashrate);
            state.on_block_bitcoin(&params, t, h);
        }
        assert!((state.d_b - 2.0 * hashrate * 0.1).abs() < 1e-9, "{}", state.d_b);
    }

    #[test]
    fn policy_validation() {
        assert!(Policy::V1(v1(1.5)).validate().is_err());
        assert!(Policy::V1(v1(0.0)).validate().is_err());
        assert!(Policy::V1(v1(1.0)).validate().is_ok());
        let mut p = v2();
        p.max_update_factor = 1.0;
        assert!(Policy::V2(p).validate().is_err());
        assert!(Policy::V2(v2()).validate().is_ok());
    }
}
