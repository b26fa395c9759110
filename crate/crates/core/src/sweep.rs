//! How deep should a pool shut down? Re-runs a dip-and-restore scenario
//! for every fraction on a grid and tabulates the window-average DEUs.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Backend;
use crate::model::PoolId;
use crate::period::{PeriodScenario, WindowAverage};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    /// Fraction of the pool's capacity switched off during the dip period.
    pub fraction: f64,
    pub pools: Vec<WindowAverage>,
}

impl SweepPoint {
    pub fn pool(&self, id: &str) -> Result<&WindowAverage> {
        self.pools
            .iter()
            .find(|w| w.pool.as_str() == id)
            .ok_or_else(|| Error::UnknownPool(id.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub pool: PoolId,
    pub dip_period: u32,
    pub points: Vec<SweepPoint>,
    /// Fraction maximizing the shutdown pool's window-average DEU; the
    /// smallest such fraction on ties.
    pub best_fraction: f64,
}

/// Sweeps the shutdown depth of `pool` in the first period of the base
/// scenario's averaging window. Every other multiplier is taken from the
/// base schedule. Points come back in the order of `fractions`.
pub fn sweep_shutdown_fraction(base: &PeriodScenario, pool: &str, fractions: &[f64]) -> Result<SweepReport> {
    sweep_shutdown_fraction_with(base, pool, fractions, Backend::default())
}

pub fn sweep_shutdown_fraction_with(
    base: &PeriodScenario,
    pool: &str,
    fractions: &[f64],
    backend: Backend,
) -> Result<SweepReport> {
    if fractions.is_empty() {
        return Err(Error::invalid("sweep.fractions", "at least one fraction is required"));
    }
    if let Some(bad) = fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(Error::invalid(
            "sweep.fractions",
            format!("fraction {bad} is outside [0, 1]"),
        ));
    }
    let pool_id = base.schedule.pools()[base.schedule.pool_index(pool)?].id.clone();
    let dip_period = *base.window.start();

    let evaluated = backend.map(fractions, |&fraction| -> Result<SweepPoint> {
        let schedule = base.schedule.with_multiplier(dip_period, pool, 1.0 - fraction)?;
        let scenario = PeriodScenario {
            schedule,
            ..base.clone()
        };
        let report = scenario.run()?;
        Ok(SweepPoint {
            fraction,
            pools: report.window_averages,
        })
    });
    let points = evaluated.into_iter().collect::<Result<Vec<_>>>()?;

    let mut best = &points[0];
    for point in &points[1..] {
        if point.pool(pool)?.avg_deu > best.pool(pool)?.avg_deu {
            best = point;
        }
    }
    let best_fraction = best.fraction;
    Ok(SweepReport {
        pool: pool_id,
        dip_period,
        points,
        best_fraction,
    })
}
