//! Difficulty retargeting, block-time kinematics and the per-block cost model.
//!
//! Everything here is an expectation: a network running at hash rate `H`
//! against difficulty `D` finds a block every
//! `target_block_minutes * (D / D_r) * (H_r / H)` minutes, and the per-block
//! cost of doing so scales linearly with `D`.

use crate::error::{Error, Result};
use crate::model::{Btc, Difficulty, EconomicParams, HashRate};

/// Largest factor a clamped retarget may move the difficulty in one step.
pub const MAX_RETARGET_FACTOR: f64 = 4.0;

/// The reference operating point: at `(H_r, D_r)` a period lasts exactly
/// `target_period_days` and each block costs `C_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceFrame {
    pub hash: HashRate,
    pub difficulty: Difficulty,
    pub cost: Btc,
    pub target_period_days: f64,
}

impl ReferenceFrame {
    pub fn new(params: &EconomicParams) -> Self {
        ReferenceFrame {
            hash: HashRate::REFERENCE,
            difficulty: Difficulty::REFERENCE,
            cost: params.ref_cost,
            target_period_days: params.target_period_days,
        }
    }
}

/// Period-boundary difficulty adjustment `D' = D * target / t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Retarget {
    pub target_period_days: f64,
    /// Bound each step to `[1/4, 4]` like the deployed network does.
    pub clamp: bool,
}

impl Retarget {
    pub fn new(params: &EconomicParams) -> Self {
        Retarget {
            target_period_days: params.target_period_days,
            clamp: false,
        }
    }

    pub fn clamped(self, clamp: bool) -> Self {
        Retarget { clamp, ..self }
    }

    pub fn next(&self, previous: Difficulty, previous_days: f64) -> Result<Difficulty> {
        if !(previous_days.is_finite() && previous_days > 0.0) {
            return Err(Error::domain(format!(
                "retarget needs a positive period duration, got {previous_days} days"
            )));
        }
        let mut factor = self.target_period_days / previous_days;
        if self.clamp {
            factor = factor.clamp(1.0 / MAX_RETARGET_FACTOR, MAX_RETARGET_FACTOR);
        }
        Difficulty::new(previous.value() * factor)
    }
}

/// Unclamped retarget against the standard 14-day target.
pub fn retarget(previous: Difficulty, previous_days: f64) -> Result<Difficulty> {
    Retarget {
        target_period_days: EconomicParams::DEFAULT_PERIOD_DAYS,
        clamp: false,
    }
    .next(previous, previous_days)
}

/// Expected minutes per block, given the nominal block time at the reference frame.
pub fn block_time_at(difficulty: Difficulty, hash: HashRate, target_block_minutes: f64) -> Result<f64> {
    if hash.is_zero() {
        return Err(Error::DegenerateNetwork { period: None });
    }
    Ok(target_block_minutes * difficulty.value() / hash.value())
}

pub fn block_time(difficulty: Difficulty, hash: HashRate, params: &EconomicParams) -> Result<f64> {
    block_time_at(difficulty, hash, params.target_block_minutes)
}

/// Days needed to mine one full period at a constant hash rate:
/// `blocks_per_period * block_time`, evaluated as
/// `target_period_days * (D / D_r) / (H / H_r)`.
pub fn period_duration(difficulty: Difficulty, hash: HashRate, params: &EconomicParams) -> Result<f64> {
    if hash.is_zero() {
        return Err(Error::DegenerateNetwork { period: None });
    }
    Ok(params.target_period_days * difficulty.value() / hash.value())
}

/// Network-wide cost of mining one block at `difficulty`: `C_r * D / D_r`.
pub fn mining_cost(difficulty: Difficulty, frame: &ReferenceFrame) -> Btc {
    frame.cost.scale(difficulty.value() / frame.difficulty.value())
}
