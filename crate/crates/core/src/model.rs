//! Domain values shared by every simulator.
//!
//! Hash rates and difficulties are dimensionless multiples of the reference
//! total hash rate `H_r` and reference difficulty `D_r`. Monetary amounts are
//! kept in exact decimal so that per-pool utilities add back up to the
//! network total without binary drift.

use std::borrow::Borrow;
use std::collections::HashSet;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, RangeInclusive, Sub};
use std::str::FromStr;

use rust_decimal::prelude::ToPrimitive;
use rust_decimal::Decimal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Satoshis per bitcoin.
pub const SATOSHI_PER_BTC: i64 = 100_000_000;

/// An amount of bitcoin (possibly negative, e.g. a loss-making utility).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Btc(Decimal);

impl Btc {
    pub const ZERO: Btc = Btc(Decimal::ZERO);

    pub fn from_decimal(amount: Decimal) -> Self {
        Btc(amount)
    }

    /// Parses the shortest decimal representation of `amount`, so `10.35`
    /// becomes exactly 10.35 BTC rather than its nearest binary neighbour.
    pub fn from_f64(amount: f64) -> Result<Self> {
        if !amount.is_finite() {
            return Err(Error::domain(format!("BTC amount must be finite, got {amount}")));
        }
        decimal(amount)
            .map(Btc)
            .ok_or_else(|| Error::domain(format!("BTC amount {amount} is not representable")))
    }

    pub fn from_sat(sat: i64) -> Self {
        Btc(Decimal::new(sat, 8))
    }

    pub fn as_decimal(&self) -> Decimal {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Nearest whole satoshi (banker's rounding).
    pub fn to_sat(&self) -> i64 {
        (self.0 * Decimal::from(SATOSHI_PER_BTC))
            .round()
            .to_i64()
            .expect("BTC amount out of satoshi range")
    }

    /// Multiplies by a real factor, read as its shortest decimal
    /// representation (0.2 is exactly 0.2).
    pub fn scale(&self, factor: f64) -> Btc {
        Btc(self.0 * real(factor))
    }

    /// Divides by a real divisor (e.g. a duration in days).
    pub fn per(&self, divisor: f64) -> Btc {
        Btc(self.0 / real(divisor))
    }

    pub fn times(&self, count: u32) -> Btc {
        Btc(self.0 * Decimal::from(count))
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_sign_negative() && !self.0.is_zero()
    }

    pub fn abs(&self) -> Btc {
        Btc(self.0.abs())
    }
}

fn decimal(x: f64) -> Option<Decimal> {
    Decimal::from_str(&x.to_string())
        .or_else(|_| Decimal::from_scientific(&format!("{x:e}")))
        .ok()
        .or_else(|| Decimal::from_f64_retain(x))
}

fn real(x: f64) -> Decimal {
    decimal(x).unwrap_or_else(|| panic!("{x} is not representable as a decimal"))
}

impl fmt::Display for Btc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match f.precision() {
            Some(p) => write!(f, "{:.*}", p, self.0.round_dp(p as u32)),
            None => write!(f, "{}", self.0.normalize()),
        }
    }
}

impl Add for Btc {
    type Output = Btc;
    fn add(self, rhs: Btc) -> Btc {
        Btc(self.0 + rhs.0)
    }
}

impl AddAssign for Btc {
    fn add_assign(&mut self, rhs: Btc) {
        self.0 += rhs.0;
    }
}

impl Sub for Btc {
    type Output = Btc;
    fn sub(self, rhs: Btc) -> Btc {
        Btc(self.0 - rhs.0)
    }
}

impl Neg for Btc {
    type Output = Btc;
    fn neg(self) -> Btc {
        Btc(-self.0)
    }
}

impl Sum for Btc {
    fn sum<I: Iterator<Item = Btc>>(iter: I) -> Btc {
        iter.fold(Btc::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a Btc> for Btc {
    fn sum<I: Iterator<Item = &'a Btc>>(iter: I) -> Btc {
        iter.copied().sum()
    }
}

impl Serialize for Btc {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.to_f64())
    }
}

impl<'de> Deserialize<'de> for Btc {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let x = f64::deserialize(deserializer)?;
        Btc::from_f64(x).map_err(serde::de::Error::custom)
    }
}

/// Hash rate as a multiple of the reference total hash rate.
#[derive(Debug, Clone, Copy, Default, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct HashRate(f64);

impl HashRate {
    pub const ZERO: HashRate = HashRate(0.0);
    pub const REFERENCE: HashRate = HashRate(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value >= 0.0 {
            Ok(HashRate(value))
        } else {
            Err(Error::domain(format!("hash rate must be finite and >= 0, got {value}")))
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0 == 0.0
    }
}

impl Add for HashRate {
    type Output = HashRate;
    fn add(self, rhs: HashRate) -> HashRate {
        HashRate(self.0 + rhs.0)
    }
}

impl Sum for HashRate {
    fn sum<I: Iterator<Item = HashRate>>(iter: I) -> HashRate {
        iter.fold(HashRate::ZERO, Add::add)
    }
}

/// Mining difficulty as a multiple of the reference difficulty.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Difficulty(f64);

impl Difficulty {
    pub const REFERENCE: Difficulty = Difficulty(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Difficulty(value))
        } else {
            Err(Error::domain(format!("difficulty must be finite and > 0, got {value}")))
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

impl Default for Difficulty {
    fn default() -> Self {
        Difficulty::REFERENCE
    }
}

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                $name(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.pad(&self.0)
            }
        }

        impl Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }

        impl From<&str> for $name {
            fn from(id: &str) -> Self {
                $name(id.to_owned())
            }
        }
    };
}

id_type!(
    /// Short identifier of a mining pool, unique within a scenario.
    PoolId
);
id_type!(
    /// Identifier of a chain branch in a split.
    BranchId
);

#[derive(Debug, Clone, PartialEq)]
pub struct Pool {
    pub id: PoolId,
    pub name: String,
    /// Full capacity, before any shutdown.
    pub base_hash: HashRate,
}

impl Pool {
    pub fn new(id: impl Into<String>, name: impl Into<String>, base_hash: f64) -> Result<Self> {
        let id = PoolId::new(id);
        if id.as_str().is_empty() {
            return Err(Error::invalid("pool.id", "must not be empty"));
        }
        let base_hash =
            HashRate::new(base_hash).map_err(|e| Error::invalid(format!("pools[{id}].base_hash"), e.to_string()))?;
        if base_hash.is_zero() {
            return Err(Error::invalid(format!("pools[{id}].base_hash"), "must be > 0"));
        }
        Ok(Pool {
            id,
            name: name.into(),
            base_hash,
        })
    }
}

/// Rejects empty pool lists and duplicate ids.
pub(crate) fn check_pool_set(pools: &[Pool]) -> Result<()> {
    if pools.is_empty() {
        return Err(Error::invalid("pools", "at least one pool is required"));
    }
    let mut seen = HashSet::new();
    for pool in pools {
        if !seen.insert(pool.id.as_str()) {
            return Err(Error::invalid("pools", format!("duplicate pool id `{}`", pool.id)));
        }
    }
    Ok(())
}

pub const MINUTES_PER_DAY: f64 = 1440.0;

/// Network-wide economic constants.
#[derive(Debug, Clone, PartialEq)]
pub struct EconomicParams {
    /// Block reward `R`.
    pub reward: Btc,
    /// Per-block mining cost `C_r` at the reference difficulty.
    pub ref_cost: Btc,
    pub blocks_per_period: u32,
    pub target_block_minutes: f64,
    pub target_period_days: f64,
}

impl EconomicParams {
    pub const DEFAULT_BLOCKS_PER_PERIOD: u32 = 2016;
    pub const DEFAULT_BLOCK_MINUTES: f64 = 10.0;
    pub const DEFAULT_PERIOD_DAYS: f64 = 14.0;

    pub fn new(
        reward: Btc,
        ref_cost: Btc,
        blocks_per_period: u32,
        target_block_minutes: f64,
        target_period_days: f64,
    ) -> Result<Self> {
        if blocks_per_period == 0 {
            return Err(Error::invalid("economics.blocks_per_period", "must be > 0"));
        }
        if !(target_block_minutes.is_finite() && target_block_minutes > 0.0) {
            return Err(Error::invalid("economics.target_block_minutes", "must be > 0"));
        }
        if !(target_period_days.is_finite() && target_period_days > 0.0) {
            return Err(Error::invalid("economics.target_period_days", "must be > 0"));
        }
        let implied_days = f64::from(blocks_per_period) * target_block_minutes / MINUTES_PER_DAY;
        if (implied_days - target_period_days).abs() > 1e-9 * target_period_days {
            return Err(Error::invalid(
                "economics.target_period_days",
                format!(
                    "{blocks_per_period} blocks x {target_block_minutes} min is {implied_days} days, not {target_period_days}"
                ),
            ));
        }
        Ok(EconomicParams {
            reward,
            ref_cost,
            blocks_per_period,
            target_block_minutes,
            target_period_days,
        })
    }

    /// 2016-block periods of 10-minute blocks (14 days).
    pub fn standard(reward: Btc, ref_cost: Btc) -> Self {
        EconomicParams {
            reward,
            ref_cost,
            blocks_per_period: Self::DEFAULT_BLOCKS_PER_PERIOD,
            target_block_minutes: Self::DEFAULT_BLOCK_MINUTES,
            target_period_days: Self::DEFAULT_PERIOD_DAYS,
        }
    }
}

/// Per-period hash-rate multipliers for every pool: the shutdown plan.
///
/// Row `k` describes period `first_period + k`; column `i` is pool `i`'s
/// multiplier, so the pool runs at `multiplier * base_hash` for that whole
/// period.
#[derive(Debug, Clone, PartialEq)]
pub struct HashSchedule {
    pools: Vec<Pool>,
    first_period: u32,
    rows: Vec<Vec<f64>>,
}

impl HashSchedule {
    pub fn new(pools: Vec<Pool>, first_period: u32, rows: Vec<Vec<f64>>) -> Result<Self> {
        check_pool_set(&pools)?;
        if rows.is_empty() {
            return Err(Error::invalid(
                "schedule.multipliers",
                "at least one period is required",
            ));
        }
        if first_period.checked_add(rows.len() as u32 - 1).is_none() {
            return Err(Error::invalid("schedule.first_period", "period index overflows"));
        }
        for (k, row) in rows.iter().enumerate() {
            let period = first_period + k as u32;
            if row.len() != pools.len() {
                return Err(Error::invalid(
                    format!("schedule.multipliers[{k}]"),
                    format!(
                        "period {period} has {} multipliers for {} pools",
                        row.len(),
                        pools.len()
                    ),
                ));
            }
            for (m, pool) in row.iter().zip(&pools) {
                if !(0.0..=1.0).contains(m) {
                    return Err(Error::invalid(
                        format!("schedule.multipliers[{k}].{}", pool.id),
                        format!("multiplier {m} is outside [0, 1]"),
                    ));
                }
            }
        }
        Ok(HashSchedule {
            pools,
            first_period,
            rows,
        })
    }

    /// Every pool at full capacity for `n_periods` periods.
    pub fn steady(pools: Vec<Pool>, first_period: u32, n_periods: usize) -> Result<Self> {
        let width = pools.len();
        HashSchedule::new(pools, first_period, vec![vec![1.0; width]; n_periods])
    }

    pub fn pools(&self) -> &[Pool] {
        &self.pools
    }

    pub fn first_period(&self) -> u32 {
        self.first_period
    }

    pub fn last_period(&self) -> u32 {
        self.first_period + self.rows.len() as u32 - 1
    }

    pub fn periods(&self) -> RangeInclusive<u32> {
        self.first_period..=self.last_period()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn pool_index(&self, pool: &str) -> Result<usize> {
        self.pools
            .iter()
            .position(|p| p.id.as_str() == pool)
            .ok_or_else(|| Error::UnknownPool(pool.to_owned()))
    }

    fn row(&self, period: u32) -> Result<&[f64]> {
        period
            .checked_sub(self.first_period)
            .and_then(|k| self.rows.get(k as usize))
            .map(Vec::as_slice)
            .ok_or(Error::ScheduleBounds {
                period,
                first: self.first_period,
                last: self.last_period(),
            })
    }

    pub fn multipliers(&self, period: u32) -> Result<&[f64]> {
        self.row(period)
    }

    pub fn multiplier(&self, period: u32, pool: &str) -> Result<f64> {
        let i = self.pool_index(pool)?;
        Ok(self.row(period)?[i])
    }

    /// `H_i^j` for every pool, in pool order.
    pub fn pool_hashes(&self, period: u32) -> Result<Vec<HashRate>> {
        let row = self.row(period)?;
        Ok(self
            .pools
            .iter()
            .zip(row)
            .map(|(p, m)| HashRate(m * p.base_hash.value()))
            .collect())
    }

    pub fn pool_hash(&self, period: u32, pool: &str) -> Result<HashRate> {
        let i = self.pool_index(pool)?;
        let m = self.row(period)?[i];
        Ok(HashRate(m * self.pools[i].base_hash.value()))
    }

    /// Network total `H_total^j`.
    pub fn total_hash(&self, period: u32) -> Result<HashRate> {
        Ok(self.pool_hashes(period)?.into_iter().sum())
    }

    /// `r_i^j = H_i^j / H_total^j`.
    pub fn hash_share(&self, period: u32, pool: &str) -> Result<f64> {
        let own = self.pool_hash(period, pool)?;
        let total = self.total_hash(period)?;
        if total.is_zero() {
            return Err(Error::DegenerateNetwork { period: Some(period) });
        }
        Ok(own.value() / total.value())
    }

    /// Copy of the schedule with one entry replaced.
    pub fn with_multiplier(&self, period: u32, pool: &str, multiplier: f64) -> Result<Self> {
        let i = self.pool_index(pool)?;
        self.row(period)?;
        let mut rows = self.rows.clone();
        rows[(period - self.first_period) as usize][i] = multiplier;
        HashSchedule::new(self.pools.clone(), self.first_period, rows)
    }
}
