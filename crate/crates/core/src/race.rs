//! Seeded Monte Carlo fork race with optional block-propagation delay.
//!
//! Each pool finds its next block after an exponential waiting time whose
//! rate is proportional to its hash, scaled so the whole network averages
//! one block per `target_block_minutes * D / H_total`. A branch's time is
//! the earliest time among its pools. Without delay the earliest branch
//! wins. With a delay window `Δ`, two branches finishing less than `Δ`
//! apart leave the split unresolved and the race is rerun, up to
//! `round_cap` rounds; the last round always goes to the earliest branch.
//!
//! Trial `i` draws from ChaCha8 stream `i` keyed by the master seed, so a
//! trial's result does not depend on how many trials run or on which
//! thread runs it.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Backend;
use crate::fork::{branch_win_probability, expected_branch_utility, per_pool_expected_utility, SplitScenario};
use crate::model::{BranchId, Btc, Difficulty, EconomicParams, PoolId};

#[derive(Debug, Clone, PartialEq)]
pub struct RaceConfig {
    pub trials: u64,
    pub seed: u64,
    /// Propagation delay window in minutes; `None` resolves every split at
    /// the first block.
    pub delay_minutes: Option<f64>,
    pub round_cap: u32,
    pub difficulty: Difficulty,
    pub target_block_minutes: f64,
    /// Add expected contested-block retention to the per-pool figures.
    pub include_at_risk: bool,
}

impl RaceConfig {
    pub const DEFAULT_ROUND_CAP: u32 = 8;

    pub fn new(trials: u64, seed: u64) -> Self {
        RaceConfig {
            trials,
            seed,
            delay_minutes: None,
            round_cap: Self::DEFAULT_ROUND_CAP,
            difficulty: Difficulty::REFERENCE,
            target_block_minutes: EconomicParams::DEFAULT_BLOCK_MINUTES,
            include_at_risk: false,
        }
    }

    pub fn with_delay(self, delay_minutes: Option<f64>) -> Self {
        RaceConfig { delay_minutes, ..self }
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::domain("a race needs at least one trial"));
        }
        if self.round_cap == 0 {
            return Err(Error::domain("round cap must be at least 1"));
        }
        if let Some(delay) = self.delay_minutes {
            if !(delay.is_finite() && delay >= 0.0) {
                return Err(Error::domain(format!("delay must be >= 0 minutes, got {delay}")));
            }
        }
        if !(self.target_block_minutes.is_finite() && self.target_block_minutes > 0.0) {
            return Err(Error::domain("target block time must be > 0 minutes"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialResult {
    /// Index into the scenario's branch list.
    pub winner: usize,
    pub rounds: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RaceOutcome {
    pub analytic_win_prob: BTreeMap<BranchId, f64>,
    pub empirical_win_freq: BTreeMap<BranchId, f64>,
    pub wins: BTreeMap<BranchId, u64>,
    pub trials: u64,
    pub seed: u64,
    pub delay_minutes: Option<f64>,
    /// Trials that needed more than one round.
    pub reraced_trials: u64,
    pub total_rounds: u64,
    pub expected_branch_utility: BTreeMap<BranchId, Btc>,
    pub per_pool_expected: BTreeMap<PoolId, Btc>,
}

impl RaceOutcome {
    /// Binomial standard error of the empirical frequency of `branch`
    /// around its analytic probability.
    pub fn sigma(&self, branch: &str) -> f64 {
        let p = self.analytic_win_prob[branch];
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Precomputed per-branch exponential samplers.
pub struct Race {
    branches: Vec<Vec<Exp<f64>>>,
    key: [u8; 32],
    delay: Option<f64>,
    round_cap: u32,
}

impl Race {
    pub fn new(scenario: &SplitScenario, config: &RaceConfig) -> Result<Self> {
        config.validate()?;
        if scenario.total_hash().is_zero() {
            return Err(Error::DegenerateNetwork { period: None });
        }
        // Pool rate: hash / (target * D) blocks per minute, so the network
        // rate is H_total / (target * D).
        let unit = config.target_block_minutes * config.difficulty.value();
        let branches = scenario
            .branches()
            .iter()
            .map(|b| {
                scenario
                    .pools()
                    .iter()
                    .filter(|p| scenario.allocation()[&p.id] == *b && !p.base_hash.is_zero())
                    .map(|p| Exp::new(p.base_hash.value() / unit).map_err(|e| Error::domain(e.to_string())))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let key = ChaCha8Rng::seed_from_u64(config.seed).get_seed();
        Ok(Race {
            branches,
            key,
            delay: config.delay_minutes,
            round_cap: config.round_cap,
        })
    }

    /// Runs trial number `trial` on its own random stream.
    pub fn trial(&self, trial: u64) -> TrialResult {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(trial);
        let mut round = 1;
        loop {
            let (mut first, mut second) = ((f64::INFINITY, 0usize), f64::INFINITY);
            for (i, pools) in self.branches.iter().enumerate() {
                let t = pools
                    .iter()
                    .map(|exp| exp.sample(&mut rng))
                    .fold(f64::INFINITY, f64::min);
                if t < first.0 {
                    second = first.0;
                    first = (t, i);
                } else if t < second {
                    second = t;
                }
            }
            let unresolved = self.delay.is_some_and(|d| second - first.0 < d);
            if !unresolved || round >= self.round_cap {
                return TrialResult {
                    winner: first.1,
                    rounds: round,
                };
            }
            round += 1;
        }
    }
}

#[derive(Clone)]
struct Tally {
    wins: Vec<u64>,
    reraced: u64,
    rounds: u64,
}

impl Tally {
    fn new(branches: usize) -> Self {
        Tally {
            wins: vec![0; branches],
            reraced: 0,
            rounds: 0,
        }
    }

    fn record(mut self, result: TrialResult) -> Self {
        self.wins[result.winner] += 1;
        self.reraced += u64::from(result.rounds > 1);
        self.rounds += u64::from(result.rounds);
        self
    }

    fn merge(mut self, other: Tally) -> Self {
        for (a, b) in self.wins.iter_mut().zip(other.wins) {
            *a += b;
        }
        self.reraced += other.reraced;
        self.rounds += other.rounds;
        self
    }
}

pub fn monte_carlo_race(scenario: &SplitScenario, config: &RaceConfig) -> Result<RaceOutcome> {
    monte_carlo_race_with(scenario, config, Backend::default())
}

pub fn monte_carlo_race_with(scenario: &SplitScenario, config: &RaceConfig, backend: Backend) -> Result<RaceOutcome> {
    let race = Race::new(scenario, config)?;
    let n_branches = scenario.branches().len();
    let tally = backend.fold_range(
        config.trials,
        || Tally::new(n_branches),
        |tally, i| tally.record(race.trial(i)),
        Tally::merge,
    );

    let branches = scenario.branches();
    let wins: BTreeMap<BranchId, u64> = branches.iter().cloned().zip(tally.wins.iter().copied()).collect();
    let empirical_win_freq = branches
        .iter()
        .cloned()
        .zip(&tally.wins)
        .map(|(b, &w)| (b, w as f64 / config.trials as f64))
        .collect();
    Ok(RaceOutcome {
        analytic_win_prob: branch_win_probability(scenario)?,
        empirical_win_freq,
        wins,
        trials: config.trials,
        seed: config.seed,
        delay_minutes: config.delay_minutes,
        reraced_trials: tally.reraced,
        total_rounds: tally.rounds,
        expected_branch_utility: expected_branch_utility(scenario)?,
        per_pool_expected: per_pool_expected_utility(scenario, config.include_at_risk)?,
    })
}
