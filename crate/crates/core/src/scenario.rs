//! JSON scenario files.
//!
//! A scenario file declares the economics and the pools, picks a `mode`, and
//! carries the section that mode needs:
//!
//! | mode      | sections                   |
//! |-----------|----------------------------|
//! | `periods` | `schedule`                 |
//! | `sweep`   | `schedule`, `sweep`        |
//! | `split`   | `split`                    |
//! | `race`    | `split`, `race`            |
//!
//! Unknown fields are rejected anywhere in the file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::Error;
use crate::fork::{apply_towing, branch_win_probability, expected_branch_utility, pool_expectations};
use crate::fork::{PoolExpectation, SplitScenario, Stake, TowingAgreement};
use crate::model::{BranchId, Btc, Difficulty, EconomicParams, HashSchedule, Pool, PoolId, MINUTES_PER_DAY};
use crate::period::{PeriodScenario, ScenarioReport};
use crate::race::{monte_carlo_race, RaceConfig, RaceOutcome};
use crate::sweep::{sweep_shutdown_fraction, SweepReport};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Model(#[from] Error),
}

impl RunError {
    pub const EXIT_VALIDATION: i32 = 2;
    pub const EXIT_IO: i32 = 3;
    pub const EXIT_DEGENERATE: i32 = 4;

    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Read { .. } | RunError::Write { .. } => Self::EXIT_IO,
            RunError::Model(Error::DegenerateNetwork { .. }) => Self::EXIT_DEGENERATE,
            RunError::Parse { .. } | RunError::Model(_) => Self::EXIT_VALIDATION,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Periods,
    Sweep,
    Split,
    Race,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub economics: EconomicsConfig,
    pub pools: Vec<PoolConfig>,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub race: Option<RaceSection>,
    #[serde(default)]
    pub flags: Flags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconomicsConfig {
    pub reward: f64,
    pub ref_cost: f64,
    #[serde(default = "default_blocks")]
    pub blocks_per_period: u32,
    #[serde(default = "default_block_minutes")]
    pub target_block_minutes: f64,
}

fn default_blocks() -> u32 {
    EconomicParams::DEFAULT_BLOCKS_PER_PERIOD
}

fn default_block_minutes() -> f64 {
    EconomicParams::DEFAULT_BLOCK_MINUTES
}

fn default_one() -> f64 {
    1.0
}

fn default_round_cap() -> u32 {
    RaceConfig::DEFAULT_ROUND_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolConfig {
    pub id: String,
    #[serde(default)]
    pub name: String,
    pub base_hash: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub first_period: u32,
    #[serde(default = "default_one")]
    pub initial_difficulty: f64,
    /// One map of pool id to multiplier per period.
    pub multipliers: Vec<BTreeMap<String, f64>>,
    /// Defaults to the first period.
    #[serde(default)]
    pub baseline_period: Option<u32>,
    /// Inclusive `[first, last]` averaging window.
    pub window: [u32; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub pool: String,
    pub fractions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub branches: Vec<String>,
    /// Pool id to the branch whose block it received first.
    pub allocation: BTreeMap<String, String>,
    #[serde(default)]
    pub agreements: Vec<AgreementConfig>,
    #[serde(default)]
    pub stakes: BTreeMap<String, StakeConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgreementConfig {
    pub helper: String,
    pub beneficiary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StakeConfig {
    pub proposer: String,
    pub at_risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RaceSection {
    pub trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub delay_minutes: Option<f64>,
    #[serde(default = "default_round_cap")]
    pub round_cap: u32,
    #[serde(default = "default_one")]
    pub difficulty: f64,
    /// Race the allocation after towing agreements are applied.
    #[serde(default)]
    pub apply_towing: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flags {
    #[serde(default)]
    pub clamp: bool,
    #[serde(default)]
    pub include_at_risk: bool,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub clamp: bool,
    pub at_risk: bool,
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path).map_err(|source| RunError::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text).map_err(|source| RunError::Parse {
            path: path.to_owned(),
            source,
        })
    }

    /// Fills in defaults that depend on other fields.
    pub fn normalized(mut self) -> Self {
        if let Some(schedule) = self.schedule.as_mut() {
            schedule.baseline_period.get_or_insert(schedule.first_period);
        }
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario files always serialize")
    }

    pub fn apply(mut self, overrides: &Overrides) -> Result<Self, Error> {
        if overrides.seed.is_some() || overrides.trials.is_some() {
            let race = self
                .race
                .as_mut()
                .ok_or_else(|| Error::invalid("race", "--seed/--trials need a `race` section"))?;
            if let Some(seed) = overrides.seed {
                race.seed = seed;
            }
            if let Some(trials) = overrides.trials {
                race.trials = trials;
            }
        }
        self.flags.clamp |= overrides.clamp;
        self.flags.include_at_risk |= overrides.at_risk;
        Ok(self)
    }

    fn params(&self) -> Result<EconomicParams, Error> {
        let e = &self.economics;
        let reward = Btc::from_f64(e.reward).map_err(|err| Error::invalid("economics.reward", err.to_string()))?;
        let ref_cost =
            Btc::from_f64(e.ref_cost).map_err(|err| Error::invalid("economics.ref_cost", err.to_string()))?;
        if e.blocks_per_period == 0 {
            return Err(Error::invalid("economics.blocks_per_period", "must be > 0"));
        }
        let days = f64::from(e.blocks_per_period) * e.target_block_minutes / MINUTES_PER_DAY;
        EconomicParams::new(reward, ref_cost, e.blocks_per_period, e.target_block_minutes, days)
    }

    fn pool_list(&self) -> Result<Vec<Pool>, Error> {
        if self.pools.is_empty() {
            return Err(Error::invalid("pools", "at least one pool is required"));
        }
        self.pools
            .iter()
            .enumerate()
            .map(|(i, p)| {
                Pool::new(p.id.clone(), p.name.clone(), p.base_hash).map_err(|e| match e {
                    Error::Validation { reason, .. } => Error::invalid(format!("pools[{i}]"), reason),
                    other => other,
                })
            })
            .collect()
    }

    fn section<'a, T>(section: &'a Option<T>, name: &str, mode: Mode) -> Result<&'a T, Error> {
        section
            .as_ref()
            .ok_or_else(|| Error::invalid(name, format!("section is required for mode {mode:?}").to_lowercase()))
    }

    fn period_scenario(&self, pools: Vec<Pool>) -> Result<PeriodScenario, Error> {
        let cfg = Self::section(&self.schedule, "schedule", self.mode)?;
        let rows = cfg
            .multipliers
            .iter()
            .enumerate()
            .map(|(k, row)| {
                if let Some(stray) = row.keys().find(|id| !pools.iter().any(|p| p.id.as_str() == *id)) {
                    return Err(Error::invalid(
                        format!("schedule.multipliers[{k}]"),
                        format!("unknown pool `{stray}`"),
                    ));
                }
                pools
                    .iter()
                    .map(|p| {
                        row.get(p.id.as_str()).copied().ok_or_else(|| {
                            Error::invalid(format!("schedule.multipliers[{k}]"), format!("missing pool `{}`", p.id))
                        })
                    })
                    .collect()
            })
            .collect::<Result<Vec<Vec<f64>>, Error>>()?;
        let schedule = HashSchedule::new(pools, cfg.first_period, rows)?;
        let initial = Difficulty::new(cfg.initial_difficulty)
            .map_err(|e| Error::invalid("schedule.initial_difficulty", e.to_string()))?;
        let baseline = cfg.baseline_period.unwrap_or(cfg.first_period);
        Ok(
            PeriodScenario::new(schedule, self.params()?, baseline, cfg.window[0]..=cfg.window[1])?
                .with_initial_difficulty(initial)
                .with_clamp(self.flags.clamp),
        )
    }

    fn split_scenario(&self, pools: Vec<Pool>) -> Result<SplitScenario, Error> {
        let cfg = Self::section(&self.split, "split", self.mode)?;
        let params = self.params()?;
        let agreements = cfg
            .agreements
            .iter()
            .map(|a| TowingAgreement::new(a.helper.clone(), a.beneficiary.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        let stakes = cfg
            .stakes
            .iter()
            .map(|(branch, s)| {
                let at_risk = Btc::from_f64(s.at_risk)
                    .map_err(|e| Error::invalid(format!("split.stakes.{branch}.at_risk"), e.to_string()))?;
                Ok((
                    BranchId::new(branch.clone()),
                    Stake {
                        proposer: PoolId::new(s.proposer.clone()),
                        at_risk,
                    },
                ))
            })
            .collect::<Result<BTreeMap<_, _>, Error>>()?;
        SplitScenario::new(
            pools,
            cfg.branches.iter().map(|b| BranchId::new(b.clone())).collect(),
            cfg.allocation
                .iter()
                .map(|(p, b)| (PoolId::new(p.clone()), BranchId::new(b.clone())))
                .collect(),
            agreements,
            stakes,
            params.reward,
            params.ref_cost,
        )
    }

    /// Checks the whole file and builds the in-memory scenario.
    pub fn validate(&self) -> Result<Scenario, Error> {
        let params = self.params()?;
        let pools = self.pool_list()?;
        match self.mode {
            Mode::Periods => Ok(Scenario::Periods(self.period_scenario(pools)?)),
            Mode::Sweep => {
                let cfg = Self::section(&self.sweep, "sweep", self.mode)?;
                Ok(Scenario::Sweep {
                    base: self.period_scenario(pools)?,
                    pool: cfg.pool.clone(),
                    fractions: cfg.fractions.clone(),
                })
            }
            Mode::Split => Ok(Scenario::Split {
                scenario: self.split_scenario(pools)?,
                include_at_risk: self.flags.include_at_risk,
            }),
            Mode::Race => {
                let cfg = Self::section(&self.race, "race", self.mode)?;
                let mut scenario = self.split_scenario(pools)?;
                if cfg.apply_towing {
                    scenario = apply_towing(&scenario)?;
                }
                let difficulty =
                    Difficulty::new(cfg.difficulty).map_err(|e| Error::invalid("race.difficulty", e.to_string()))?;
                if cfg.trials == 0 {
                    return Err(Error::invalid("race.trials", "must be >= 1"));
                }
                if cfg.round_cap == 0 {
                    return Err(Error::invalid("race.round_cap", "must be >= 1"));
                }
                if cfg.delay_minutes.is_some_and(|d| !(d.is_finite() && d >= 0.0)) {
                    return Err(Error::invalid("race.delay_minutes", "must be >= 0"));
                }
                Ok(Scenario::Race {
                    scenario,
                    config: RaceConfig {
                        trials: cfg.trials,
                        seed: cfg.seed,
                        delay_minutes: cfg.delay_minutes,
                        round_cap: cfg.round_cap,
                        difficulty,
                        target_block_minutes: params.target_block_minutes,
                        include_at_risk: self.flags.include_at_risk,
                    },
                })
            }
        }
    }
}

/// A validated, ready-to-run scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Periods(PeriodScenario),
    Sweep {
        base: PeriodScenario,
        pool: String,
        fractions: Vec<f64>,
    },
    Split {
        scenario: SplitScenario,
        include_at_risk: bool,
    },
    Race {
        scenario: SplitScenario,
        config: RaceConfig,
    },
}

/// A split analysed as mined and again after towing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitStage {
    pub label: String,
    pub allocation: BTreeMap<PoolId, BranchId>,
    pub win_probability: BTreeMap<BranchId, f64>,
    pub branch_utility: BTreeMap<BranchId, Btc>,
    pub pools: BTreeMap<PoolId, PoolExpectation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitReport {
    pub branches: Vec<BranchId>,
    pub pool_order: Vec<PoolId>,
    pub include_at_risk: bool,
    pub stages: Vec<SplitStage>,
}

pub fn analyze_split(scenario: &SplitScenario, include_at_risk: bool) -> Result<SplitReport, Error> {
    let stage = |label: &str, s: &SplitScenario| -> Result<SplitStage, Error> {
        Ok(SplitStage {
            label: label.to_owned(),
            allocation: s.allocation().clone(),
            win_probability: branch_win_probability(s)?,
            branch_utility: expected_branch_utility(s)?,
            pools: pool_expectations(s)?,
        })
    };
    let towed = apply_towing(scenario)?;
    Ok(SplitReport {
        branches: scenario.branches().to_vec(),
        pool_order: scenario.pools().iter().map(|p| p.id.clone()).collect(),
        include_at_risk,
        stages: vec![stage("first-received", scenario)?, stage("towing", &towed)?],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Report {
    Periods(ScenarioReport),
    Sweep(SweepReport),
    Split(SplitReport),
    Race(RaceOutcome),
}

impl Scenario {
    pub fn run(&self) -> Result<Report, Error> {
        match self {
            Scenario::Periods(s) => Ok(Report::Periods(s.run()?)),
            Scenario::Sweep { base, pool, fractions } => {
                Ok(Report::Sweep(sweep_shutdown_fraction(base, pool, fractions)?))
            }
            Scenario::Split {
                scenario,
                include_at_risk,
            } => Ok(Report::Split(analyze_split(scenario, *include_at_risk)?)),
            Scenario::Race { scenario, config } => Ok(Report::Race(monte_carlo_race(scenario, config)?)),
        }
    }
}
