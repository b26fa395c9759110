//! Chain splits and the Towing tactic.
//!
//! Two (or more) blocks of the same height split the network. Every pool
//! mines on the branch whose block it received first, and the split resolves
//! at the next block: branch `b` wins with probability `H_b / H_total`.
//! A towing agreement lets a helper pool abandon its branch and join its
//! accomplice's, raising that branch's odds.

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{check_pool_set, BranchId, Btc, HashRate, Pool, PoolId};

/// Pre-arranged pact: `helper` joins `beneficiary`'s branch in a split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TowingAgreement {
    pub helper: PoolId,
    pub beneficiary: PoolId,
}

impl TowingAgreement {
    pub fn new(helper: impl Into<String>, beneficiary: impl Into<String>) -> Result<Self> {
        let helper = PoolId::new(helper);
        let beneficiary = PoolId::new(beneficiary);
        if helper == beneficiary {
            return Err(Error::invalid(
                "split.agreements",
                format!("pool `{helper}` cannot tow itself"),
            ));
        }
        Ok(TowingAgreement { helper, beneficiary })
    }
}

/// The contested block already sitting at the tip of a branch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stake {
    pub proposer: PoolId,
    /// Net utility the proposer keeps only if its branch wins.
    pub at_risk: Btc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitScenario {
    pools: Vec<Pool>,
    branches: Vec<BranchId>,
    allocation: BTreeMap<PoolId, BranchId>,
    agreements: Vec<TowingAgreement>,
    stakes: BTreeMap<BranchId, Stake>,
    pub reward: Btc,
    pub cost: Btc,
}

impl SplitScenario {
    pub fn new(
        pools: Vec<Pool>,
        branches: Vec<BranchId>,
        allocation: BTreeMap<PoolId, BranchId>,
        agreements: Vec<TowingAgreement>,
        stakes: BTreeMap<BranchId, Stake>,
        reward: Btc,
        cost: Btc,
    ) -> Result<Self> {
        check_pool_set(&pools)?;
        if branches.len() < 2 {
            return Err(Error::invalid("split.branches", "a split needs at least two branches"));
        }
        let mut seen = HashSet::new();
        for b in &branches {
            if !seen.insert(b) {
                return Err(Error::invalid("split.branches", format!("duplicate branch `{b}`")));
            }
        }
        let known_pool = |id: &PoolId| pools.iter().any(|p| &p.id == id);
        for pool in &pools {
            match allocation.get(&pool.id) {
                None => {
                    return Err(Error::invalid(
                        "split.allocation",
                        format!("pool `{}` is not allocated to a branch", pool.id),
                    ))
                }
                Some(b) if !branches.contains(b) => {
                    return Err(Error::invalid(
                        format!("split.allocation.{}", pool.id),
                        format!("unknown branch `{b}`"),
                    ))
                }
                Some(_) => {}
            }
        }
        if let Some(stray) = allocation.keys().find(|id| !known_pool(id)) {
            return Err(Error::UnknownPool(stray.to_string()));
        }
        for agreement in &agreements {
            if agreement.helper == agreement.beneficiary {
                return Err(Error::invalid(
                    "split.agreements",
                    format!("pool `{}` cannot tow itself", agreement.helper),
                ));
            }
            for id in [&agreement.helper, &agreement.beneficiary] {
                if !known_pool(id) {
                    return Err(Error::UnknownPool(id.to_string()));
                }
            }
        }
        for (branch, stake) in &stakes {
            if !branches.contains(branch) {
                return Err(Error::invalid("split.stakes", format!("unknown branch `{branch}`")));
            }
            if !known_pool(&stake.proposer) {
                return Err(Error::UnknownPool(stake.proposer.to_string()));
            }
            if allocation.get(&stake.proposer) != Some(branch) {
                return Err(Error::invalid(
                    format!("split.stakes.{branch}"),
                    format!("proposer `{}` must mine on its own branch", stake.proposer),
                ));
            }
        }
        Ok(SplitScenario {
            pools,
            branches,
            allocation,
            agreements,
            stakes,
            reward,
            cost,
        })
    }

    pub fn pools(&self) -> &[Pool] {
        &self.pools
    }

    pub fn branches(&self) -> &[BranchId] {
        &self.branches
    }

    pub fn allocation(&self) -> &BTreeMap<PoolId, BranchId> {
        &self.allocation
    }

    pub fn agreements(&self) -> &[TowingAgreement] {
        &self.agreements
    }

    pub fn stakes(&self) -> &BTreeMap<BranchId, Stake> {
        &self.stakes
    }

    pub fn branch_of(&self, pool: &str) -> Result<&BranchId> {
        self.allocation
            .get(pool)
            .ok_or_else(|| Error::UnknownPool(pool.to_owned()))
    }

    /// Summed hash of the pools mining on each branch, in branch order.
    pub fn branch_hashes(&self) -> Vec<HashRate> {
        self.branches
            .iter()
            .map(|b| {
                self.pools
                    .iter()
                    .filter(|p| &self.allocation[&p.id] == b)
                    .map(|p| p.base_hash)
                    .sum()
            })
            .collect()
    }

    pub fn total_hash(&self) -> HashRate {
        self.pools.iter().map(|p| p.base_hash).sum()
    }

    pub fn with_agreements(&self, agreements: Vec<TowingAgreement>) -> Result<Self> {
        SplitScenario::new(
            self.pools.clone(),
            self.branches.clone(),
            self.allocation.clone(),
            agreements,
            self.stakes.clone(),
            self.reward,
            self.cost,
        )
    }

    fn is_proposer_on(&self, pool: &PoolId, branch: &BranchId) -> bool {
        self.stakes.get(branch).is_some_and(|s| &s.proposer == pool)
    }
}

/// Moves every helper onto its beneficiary's branch.
///
/// Agreements are applied in order, pass after pass, until the allocation
/// stops changing, so chained agreements settle and a second application is
/// a no-op. A helper that proposed the contested block on its own branch
/// never leaves it.
pub fn apply_towing(scenario: &SplitScenario) -> Result<SplitScenario> {
    let mut allocation = scenario.allocation.clone();
    for _ in 0..=scenario.agreements.len() {
        let before = allocation.clone();
        for agreement in &scenario.agreements {
            let target = allocation
                .get(&agreement.beneficiary)
                .ok_or_else(|| Error::UnknownPool(agreement.beneficiary.to_string()))?
                .clone();
            let current = allocation
                .get_mut(&agreement.helper)
                .ok_or_else(|| Error::UnknownPool(agreement.helper.to_string()))?;
            if *current != target && !scenario.is_proposer_on(&agreement.helper, current) {
                *current = target;
            }
        }
        if allocation == before {
            return Ok(SplitScenario {
                allocation,
                ..scenario.clone()
            });
        }
    }
    Err(Error::invalid(
        "split.agreements",
        "towing agreements never settle on a stable allocation",
    ))
}

/// `P_b = H_b / H_total` for the allocation as given.
pub fn branch_win_probability(scenario: &SplitScenario) -> Result<BTreeMap<BranchId, f64>> {
    let total = scenario.total_hash();
    if total.is_zero() {
        return Err(Error::DegenerateNetwork { period: None });
    }
    Ok(scenario
        .branches
        .iter()
        .cloned()
        .zip(scenario.branch_hashes())
        .map(|(b, h)| (b, h.value() / total.value()))
        .collect())
}

/// Expected next-block utility of each branch's miners collectively:
/// `P_b * (R - C)`.
pub fn expected_branch_utility(scenario: &SplitScenario) -> Result<BTreeMap<BranchId, Btc>> {
    let net = scenario.reward - scenario.cost;
    Ok(branch_win_probability(scenario)?
        .into_iter()
        .map(|(b, p)| (b, net.scale(p)))
        .collect())
}

/// One pool's expectation in a split.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoolExpectation {
    pub branch: BranchId,
    /// Pro-rata share of its branch's next-block utility.
    pub next_block: Btc,
    /// `P_b * at_risk` when the pool proposed branch `b`'s contested block.
    pub at_risk_retention: Btc,
}

impl PoolExpectation {
    pub fn total(&self, include_at_risk: bool) -> Btc {
        if include_at_risk {
            self.next_block + self.at_risk_retention
        } else {
            self.next_block
        }
    }
}

pub fn pool_expectations(scenario: &SplitScenario) -> Result<BTreeMap<PoolId, PoolExpectation>> {
    let probability = branch_win_probability(scenario)?;
    let branch_hash: BTreeMap<&BranchId, HashRate> = scenario.branches.iter().zip(scenario.branch_hashes()).collect();
    let net = scenario.reward - scenario.cost;
    Ok(scenario
        .pools
        .iter()
        .map(|pool| {
            let branch = &scenario.allocation[&pool.id];
            let p = probability[branch];
            let on_branch = branch_hash[branch];
            let weight = if on_branch.is_zero() {
                0.0
            } else {
                pool.base_hash.value() / on_branch.value()
            };
            let at_risk_retention = match scenario.stakes.get(branch) {
                Some(stake) if stake.proposer == pool.id => stake.at_risk.scale(p),
                _ => Btc::ZERO,
            };
            let expectation = PoolExpectation {
                branch: branch.clone(),
                next_block: net.scale(p).scale(weight),
                at_risk_retention,
            };
            (pool.id.clone(), expectation)
        })
        .collect())
}

/// Per-pool expected utility: the pro-rata next-block component, plus the
/// expected retention of a contested block when `include_at_risk` is set.
pub fn per_pool_expected_utility(scenario: &SplitScenario, include_at_risk: bool) -> Result<BTreeMap<PoolId, Btc>> {
    Ok(pool_expectations(scenario)?
        .into_iter()
        .map(|(id, e)| (id, e.total(include_at_risk)))
        .collect())
}
