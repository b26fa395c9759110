//! Multi-period shutdown scenarios: difficulty, duration and cost per period,
//! per-pool daily expected utility (DEU), window averages and improvement
//! values.

use std::ops::RangeInclusive;

use rust_decimal::Decimal;
use serde::Serialize;

use crate::difficulty::{block_time, mining_cost, period_duration, ReferenceFrame, Retarget};
use crate::error::{Error, Result};
use crate::model::{Btc, Difficulty, EconomicParams, HashRate, HashSchedule, PoolId};

/// Daily expected utility `share * (R - C) * blocks / days`.
///
/// Negative whenever the per-block cost exceeds the reward.
pub fn deu(share: f64, reward: Btc, cost: Btc, duration_days: f64, blocks_per_period: u32) -> Result<Btc> {
    if !(duration_days.is_finite() && duration_days > 0.0) {
        return Err(Error::domain(format!(
            "DEU needs a positive period duration, got {duration_days} days"
        )));
    }
    if !(0.0..=1.0).contains(&share) {
        return Err(Error::domain(format!("hash share {share} is outside [0, 1]")));
    }
    Ok(period_utility(share, reward, cost, blocks_per_period).per(duration_days))
}

fn period_utility(share: f64, reward: Btc, cost: Btc, blocks_per_period: u32) -> Btc {
    (reward - cost).times(blocks_per_period).scale(share)
}

/// One pool's slice of a period.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoolPeriod {
    pub pool: PoolId,
    pub multiplier: f64,
    /// Full capacity `base_hash`.
    pub capacity: HashRate,
    /// Hash actually running, `multiplier * capacity`.
    pub hash: HashRate,
    pub share: f64,
    /// BTC per day.
    pub deu: Btc,
    /// Expected net utility over the whole period.
    pub period_total: Btc,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodResult {
    pub period: u32,
    pub difficulty: Difficulty,
    pub total_hash: HashRate,
    pub block_minutes: f64,
    pub duration_days: f64,
    pub cost_per_block: Btc,
    pub pools: Vec<PoolPeriod>,
}

impl PeriodResult {
    pub fn pool(&self, id: &str) -> Result<&PoolPeriod> {
        self.pools
            .iter()
            .find(|p| p.pool.as_str() == id)
            .ok_or_else(|| Error::UnknownPool(id.to_owned()))
    }

    /// `(R - C^j) * blocks`, the utility all pools share this period.
    pub fn network_total(&self, params: &EconomicParams) -> Btc {
        (params.reward - self.cost_per_block).times(params.blocks_per_period)
    }
}

/// Runs `n_periods` periods of `schedule` under the unclamped retarget rule.
pub fn simulate(
    schedule: &HashSchedule,
    params: &EconomicParams,
    initial_difficulty: Difficulty,
    n_periods: usize,
) -> Result<Vec<PeriodResult>> {
    simulate_with(schedule, params, initial_difficulty, n_periods, Retarget::new(params))
}

pub fn simulate_with(
    schedule: &HashSchedule,
    params: &EconomicParams,
    initial_difficulty: Difficulty,
    n_periods: usize,
    retarget: Retarget,
) -> Result<Vec<PeriodResult>> {
    if n_periods == 0 {
        return Err(Error::domain("simulate needs at least one period"));
    }
    if n_periods > schedule.len() {
        return Err(Error::ScheduleBounds {
            period: schedule.first_period() + n_periods as u32 - 1,
            first: schedule.first_period(),
            last: schedule.last_period(),
        });
    }
    let frame = ReferenceFrame::new(params);
    let mut results: Vec<PeriodResult> = Vec::with_capacity(n_periods);
    let mut difficulty = initial_difficulty;

    for period in schedule.periods().take(n_periods) {
        if let Some(prev) = results.last() {
            difficulty = retarget.next(prev.difficulty, prev.duration_days)?;
        }
        let hashes = schedule.pool_hashes(period)?;
        let total: HashRate = hashes.iter().copied().sum();
        if total.is_zero() {
            return Err(Error::DegenerateNetwork { period: Some(period) });
        }
        let block_minutes = block_time(difficulty, total, params)?;
        let duration_days = period_duration(difficulty, total, params)?;
        let cost = mining_cost(difficulty, &frame);

        let pools = schedule
            .pools()
            .iter()
            .zip(schedule.multipliers(period)?)
            .zip(&hashes)
            .map(|((pool, &multiplier), &hash)| {
                let share = hash.value() / total.value();
                Ok(PoolPeriod {
                    pool: pool.id.clone(),
                    multiplier,
                    capacity: pool.base_hash,
                    hash,
                    share,
                    deu: deu(share, params.reward, cost, duration_days, params.blocks_per_period)?,
                    period_total: period_utility(share, params.reward, cost, params.blocks_per_period),
                })
            })
            .collect::<Result<Vec<_>>>()?;

        results.push(PeriodResult {
            period,
            difficulty,
            total_hash: total,
            block_minutes,
            duration_days,
            cost_per_block: cost,
            pools,
        });
    }
    Ok(results)
}

fn window_slice<'a>(results: &'a [PeriodResult], window: &RangeInclusive<u32>) -> Result<&'a [PeriodResult]> {
    if window.is_empty() {
        return Err(Error::domain(format!(
            "averaging window {}..={} is empty",
            window.start(),
            window.end()
        )));
    }
    let first = results
        .first()
        .ok_or_else(|| Error::domain("no period results to average"))?
        .period;
    let last = first + results.len() as u32 - 1;
    if *window.start() < first || *window.end() > last {
        let period = if *window.start() < first {
            *window.start()
        } else {
            *window.end()
        };
        return Err(Error::ScheduleBounds { period, first, last });
    }
    Ok(&results[(window.start() - first) as usize..=(window.end() - first) as usize])
}

/// Time-weighted average DEU: total utility over total elapsed days.
pub fn window_average_deu(results: &[PeriodResult], pool: &str, window: RangeInclusive<u32>) -> Result<Btc> {
    let slice = window_slice(results, &window)?;
    let mut utility = Btc::ZERO;
    let mut days = 0.0;
    for r in slice {
        utility += r.pool(pool)?.period_total;
        days += r.duration_days;
    }
    Ok(utility.per(days))
}

/// Unweighted mean of per-period DEUs. Kept for comparison only; it does not
/// reproduce the published averages.
pub fn simple_mean_deu(results: &[PeriodResult], pool: &str, window: RangeInclusive<u32>) -> Result<Btc> {
    let slice = window_slice(results, &window)?;
    let total: Btc = slice.iter().map(|r| r.pool(pool).map(|p| p.deu)).sum::<Result<Btc>>()?;
    Ok(total.per(slice.len() as f64))
}

/// Percentage improvement of `average` over `baseline`.
pub fn improvement_value(average: Btc, baseline: Btc) -> Result<f64> {
    if baseline <= Btc::ZERO {
        return Err(Error::domain(format!(
            "improvement needs a positive baseline DEU, got {baseline}"
        )));
    }
    let ratio = average.as_decimal() / baseline.as_decimal();
    Ok(Btc::from_decimal((ratio - Decimal::ONE) * Decimal::ONE_HUNDRED).to_f64())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowAverage {
    pub pool: PoolId,
    pub avg_deu: Btc,
    pub baseline_deu: Btc,
    pub improvement_pct: f64,
}

/// Simulated periods plus the per-pool window summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub periods: Vec<PeriodResult>,
    pub baseline_period: u32,
    pub window: (u32, u32),
    pub window_averages: Vec<WindowAverage>,
}

impl ScenarioReport {
    pub fn average(&self, pool: &str) -> Result<&WindowAverage> {
        self.window_averages
            .iter()
            .find(|w| w.pool.as_str() == pool)
            .ok_or_else(|| Error::UnknownPool(pool.to_owned()))
    }

    pub fn period(&self, period: u32) -> Result<&PeriodResult> {
        let first = self.periods[0].period;
        let last = first + self.periods.len() as u32 - 1;
        self.periods
            .iter()
            .find(|r| r.period == period)
            .ok_or(Error::ScheduleBounds { period, first, last })
    }
}

/// Summarizes `periods`: each pool's DEU in `baseline_period` is the
/// baseline its window average is compared against.
pub fn analyze(
    periods: Vec<PeriodResult>,
    window: RangeInclusive<u32>,
    baseline_period: u32,
) -> Result<ScenarioReport> {
    let baseline = window_slice(&periods, &(baseline_period..=baseline_period))?[0].clone();
    let window_averages = baseline
        .pools
        .iter()
        .map(|p| {
            let avg_deu = window_average_deu(&periods, p.pool.as_str(), window.clone())?;
            Ok(WindowAverage {
                pool: p.pool.clone(),
                avg_deu,
                baseline_deu: p.deu,
                improvement_pct: improvement_value(avg_deu, p.deu)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScenarioReport {
        periods,
        baseline_period,
        window: (*window.start(), *window.end()),
        window_averages,
    })
}

/// A complete shutdown experiment: the plan, the economics, and how to
/// summarize it.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodScenario {
    pub schedule: HashSchedule,
    pub params: EconomicParams,
    pub initial_difficulty: Difficulty,
    pub retarget: Retarget,
    pub baseline_period: u32,
    /// Periods averaged for the improvement value; its first period is the
    /// one a sweep varies.
    pub window: RangeInclusive<u32>,
}

impl PeriodScenario {
    pub fn new(
        schedule: HashSchedule,
        params: EconomicParams,
        baseline_period: u32,
        window: RangeInclusive<u32>,
    ) -> Result<Self> {
        let periods = schedule.periods();
        if !periods.contains(&baseline_period) {
            return Err(Error::invalid(
                "schedule.baseline_period",
                format!(
                    "period {baseline_period} is not in {}..={}",
                    periods.start(),
                    periods.end()
                ),
            ));
        }
        if window.is_empty() || !periods.contains(window.start()) || !periods.contains(window.end()) {
            return Err(Error::invalid(
                "schedule.window",
                format!(
                    "{}..={} must be a non-empty range inside {}..={}",
                    window.start(),
                    window.end(),
                    periods.start(),
                    periods.end()
                ),
            ));
        }
        let retarget = Retarget::new(&params);
        Ok(PeriodScenario {
            schedule,
            params,
            initial_difficulty: Difficulty::REFERENCE,
            retarget,
            baseline_period,
            window,
        })
    }

    pub fn with_initial_difficulty(self, initial_difficulty: Difficulty) -> Self {
        PeriodScenario {
            initial_difficulty,
            ..self
        }
    }

    pub fn with_clamp(self, clamp: bool) -> Self {
        PeriodScenario {
            retarget: self.retarget.clamped(clamp),
            ..self
        }
    }

    pub fn simulate(&self) -> Result<Vec<PeriodResult>> {
        simulate_with(
            &self.schedule,
            &self.params,
            self.initial_difficulty,
            self.schedule.len(),
            self.retarget,
        )
    }

    pub fn run(&self) -> Result<ScenarioReport> {
        analyze(self.simulate()?, self.window.clone(), self.baseline_period)
    }
}
