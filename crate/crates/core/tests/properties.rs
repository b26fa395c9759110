use proptest::prelude::*;

use mining_tactics::period::{simulate, window_average_deu, PeriodScenario};
use mining_tactics::sweep::sweep_shutdown_fraction;
use mining_tactics::{Btc, Difficulty, EconomicParams, HashSchedule, Pool};

fn params() -> EconomicParams {
    EconomicParams::standard(Btc::from_f64(12.5).unwrap(), Btc::from_f64(11.5).unwrap())
}

fn schedule_strategy() -> impl Strategy<Value = HashSchedule> {
    (1usize..=10, 1usize..=6).prop_flat_map(|(n_pools, n_periods)| {
        (
            prop::collection::vec(0.01f64..1.0, n_pools),
            prop::collection::vec(prop::collection::vec(0.01f64..=1.0, n_pools), n_periods),
        )
            .prop_map(|(hashes, rows)| {
                let pools = hashes
                    .iter()
                    .enumerate()
                    .map(|(i, h)| Pool::new(format!("P{i}"), "", *h).unwrap())
                    .collect();
                HashSchedule::new(pools, 100, rows).unwrap()
            })
    })
}

proptest! {
    #[test]
    fn shares_partition_and_utility_is_conserved(schedule in schedule_strategy()) {
        let p = params();
        let results = simulate(&schedule, &p, Difficulty::REFERENCE, schedule.len()).unwrap();
        for r in &results {
            let shares: f64 = r.pools.iter().map(|x| x.share).sum();
            prop_assert!((shares - 1.0).abs() < 1e-12);
            let totals: Btc = r.pools.iter().map(|x| x.period_total).sum();
            prop_assert!((totals - r.network_total(&p)).abs().to_f64() < 1e-9);
            for x in &r.pools {
                let back = x.deu.scale(r.duration_days);
                prop_assert!((back - x.period_total).abs().to_f64() < 1e-9);
            }
        }
    }

    #[test]
    fn simulation_is_deterministic(schedule in schedule_strategy()) {
        let p = params();
        let a = simulate(&schedule, &p, Difficulty::REFERENCE, schedule.len()).unwrap();
        let b = simulate(&schedule, &p, Difficulty::REFERENCE, schedule.len()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn window_average_lies_between_period_deus(schedule in schedule_strategy()) {
        let results = simulate(&schedule, &params(), Difficulty::REFERENCE, schedule.len()).unwrap();
        let pool = schedule.pools()[0].id.as_str();
        let avg = window_average_deu(&results, pool, schedule.periods()).unwrap().to_f64();
        let deus: Vec<f64> = results.iter().map(|r| r.pool(pool).unwrap().deu.to_f64()).collect();
        let lo = deus.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = deus.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(avg >= lo - 1e-9 && avg <= hi + 1e-9);
    }

    #[test]
    fn shutdown_pool_never_beats_the_others(
        hashes in prop::collection::vec(0.05f64..1.0, 2..=6),
        fraction in 0.0f64..=1.0,
    ) {
        // A network at H_r, so the baseline is steady and profitable.
        let total: f64 = hashes.iter().sum();
        let pools: Vec<Pool> = hashes
            .iter()
            .enumerate()
            .map(|(i, h)| Pool::new(format!("P{i}"), "", h / total).unwrap())
            .collect();
        let schedule = HashSchedule::steady(pools, 1, 4).unwrap();
        let base = PeriodScenario::new(schedule, params(), 1, 2..=3).unwrap();
        let report = sweep_shutdown_fraction(&base, "P0", &[fraction]).unwrap();
        let point = &report.points[0];
        let own = point.pool("P0").unwrap().improvement_pct;
        for w in &point.pools[1..] {
            prop_assert!(w.improvement_pct >= own - 1e-9);
        }
    }
}
