//! Rendering of run reports: aligned text tables for people, CSV and JSON
//! for machines.
//!
//! Tables round for display only (two decimals for BTC, one for
//! percentages). CSV and JSON carry every number at full precision.

use std::fmt::Write as _;
use std::path::Path;

use crate::model::Btc;
use crate::period::ScenarioReport;
use crate::race::RaceOutcome;
use crate::scenario::{Report, RunError, SplitReport};
use crate::sweep::SweepReport;

pub const PERIOD_CSV_HEADER: [&str; 9] = [
    "period",
    "pool",
    "hash_multiplier",
    "share",
    "difficulty",
    "duration_days",
    "cost_per_block",
    "deu",
    "period_total",
];

pub const SWEEP_CSV_HEADER: [&str; 5] = ["fraction", "pool", "avg_deu", "baseline_deu", "improvement_pct"];

pub const SPLIT_CSV_HEADER: [&str; 8] = [
    "stage",
    "pool",
    "branch",
    "branch_win_probability",
    "branch_utility",
    "next_block_utility",
    "at_risk_retention",
    "expected_utility",
];

pub const RACE_CSV_HEADER: [&str; 9] = [
    "branch",
    "analytic_win_prob",
    "empirical_win_freq",
    "wins",
    "trials",
    "seed",
    "delay_minutes",
    "sigma",
    "expected_branch_utility",
];

fn num(x: f64) -> String {
    format!("{x}")
}

fn btc(x: Btc) -> String {
    format!("{x}")
}

fn csv_string(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header).expect("in-memory CSV write");
    for row in rows {
        writer.write_record(&row).expect("in-memory CSV write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory CSV flush")).expect("CSV is UTF-8")
}

/// Flat CSV rendering of any report.
pub fn to_csv(report: &Report) -> String {
    match report {
        Report::Periods(r) => periods_csv(r),
        Report::Sweep(r) => sweep_csv(r),
        Report::Split(r) => split_csv(r),
        Report::Race(r) => race_csv(r),
    }
}

/// One row per (period, pool).
pub fn periods_csv(report: &ScenarioReport) -> String {
    let rows = report
        .periods
        .iter()
        .flat_map(|r| {
            r.pools.iter().map(move |p| {
                vec![
                    r.period.to_string(),
                    p.pool.to_string(),
                    num(p.multiplier),
                    num(p.share),
                    num(r.difficulty.value()),
                    num(r.duration_days),
                    btc(r.cost_per_block),
                    btc(p.deu),
                    btc(p.period_total),
                ]
            })
        })
        .collect();
    csv_string(&PERIOD_CSV_HEADER, rows)
}

pub fn sweep_csv(report: &SweepReport) -> String {
    let rows = report
        .points
        .iter()
        .flat_map(|pt| {
            pt.pools.iter().map(move |w| {
                vec![
                    num(pt.fraction),
                    w.pool.to_string(),
                    btc(w.avg_deu),
                    btc(w.baseline_deu),
                    num(w.improvement_pct),
                ]
            })
        })
        .collect();
    csv_string(&SWEEP_CSV_HEADER, rows)
}

pub fn split_csv(report: &SplitReport) -> String {
    let rows = report
        .stages
        .iter()
        .flat_map(|stage| {
            report.pool_order.iter().map(move |id| {
                let e = &stage.pools[id];
                vec![
                    stage.label.clone(),
                    id.to_string(),
                    e.branch.to_string(),
                    num(stage.win_probability[&e.branch]),
                    btc(stage.branch_utility[&e.branch]),
                    btc(e.next_block),
                    btc(e.at_risk_retention),
                    btc(e.total(report.include_at_risk)),
                ]
            })
        })
        .collect();
    csv_string(&SPLIT_CSV_HEADER, rows)
}

pub fn race_csv(outcome: &RaceOutcome) -> String {
    let rows = outcome
        .analytic_win_prob
        .keys()
        .map(|b| {
            vec![
                b.to_string(),
                num(outcome.analytic_win_prob[b]),
                num(outcome.empirical_win_freq[b]),
                outcome.wins[b].to_string(),
                outcome.trials.to_string(),
                outcome.seed.to_string(),
                outcome.delay_minutes.map(num).unwrap_or_default(),
                num(outcome.sigma(b.as_str())),
                btc(outcome.expected_branch_utility[b]),
            ]
        })
        .collect();
    csv_string(&RACE_CSV_HEADER, rows)
}

pub fn to_json(report: &Report) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("reports always serialize");
    text.push('\n');
    text
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), RunError> {
    std::fs::write(path, contents).map_err(|source| RunError::Write {
        path: path.to_owned(),
        source,
    })
}

pub fn render_table(report: &Report) -> String {
    match report {
        Report::Periods(r) => periods_table(r),
        Report::Sweep(r) => sweep_table(r),
        Report::Split(r) => split_table(r),
        Report::Race(r) => race_table(r),
    }
}

/// Per-period kinematics, then the tactic summary laid out one
/// `H / DEU / IV` column group per pool.
pub fn periods_table(report: &ScenarioReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>7} {:>10} {:>8} {:>9} {:>9} {:>10}",
        "period", "difficulty", "H_total", "block_min", "days", "cost/block"
    );
    for r in &report.periods {
        let _ = writeln!(
            out,
            "{:>7} {:>10.4} {:>8.4} {:>9.3} {:>9.3} {:>10.4}",
            r.period,
            r.difficulty.value(),
            r.total_hash.value(),
            r.block_minutes,
            r.duration_days,
            r.cost_per_block.to_f64()
        );
    }
    out.push('\n');

    let (first, last) = report.window;
    let window_start = report.periods.iter().find(|r| r.period == first);
    let baseline = report.periods.iter().find(|r| r.period == report.baseline_period);

    let _ = write!(out, "{:<6}", "mode");
    for w in &report.window_averages {
        let _ = write!(out, " | {:^22}", format!("pool {}", w.pool));
    }
    out.push('\n');
    let _ = write!(out, "{:<6}", "");
    for _ in &report.window_averages {
        let _ = write!(out, " | {:>5} {:>8} {:>7}", "H", "DEU", "IV");
    }
    out.push('\n');

    let _ = write!(out, "{:<6}", "None");
    for w in &report.window_averages {
        let h = baseline
            .and_then(|r| r.pool(w.pool.as_str()).ok())
            .map(|p| p.hash.value() * 100.0)
            .unwrap_or(f64::NAN);
        let _ = write!(out, " | {:>5.0} {:>8.2} {:>7.1}", h, w.baseline_deu.to_f64(), 0.0);
    }
    out.push('\n');
    let _ = write!(out, "{:<6}", "ST");
    for w in &report.window_averages {
        let h = window_start
            .and_then(|r| r.pool(w.pool.as_str()).ok())
            .map(|p| p.hash.value() * 100.0)
            .unwrap_or(f64::NAN);
        let _ = write!(
            out,
            " | {:>5.0} {:>8.2} {:>7.1}",
            h,
            w.avg_deu.to_f64(),
            w.improvement_pct
        );
    }
    out.push('\n');
    let _ = writeln!(
        out,
        "\nH in % of H_r; DEU in BTC/day; None = period {}, ST = time-weighted average over periods {first}-{last}; IV in %.",
        report.baseline_period
    );
    out
}

pub fn sweep_table(report: &SweepReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "shutdown of pool {} in period {} (window-average DEU in BTC/day, IV in %)",
        report.pool, report.dip_period
    );
    let _ = write!(out, "{:>8}", "fraction");
    if let Some(pt) = report.points.first() {
        for w in &pt.pools {
            let _ = write!(out, " | {:^16}", format!("pool {}", w.pool));
        }
    }
    out.push('\n');
    for pt in &report.points {
        let _ = write!(out, "{:>8.3}", pt.fraction);
        for w in &pt.pools {
            let _ = write!(out, " | {:>8.2} {:>7.1}", w.avg_deu.to_f64(), w.improvement_pct);
        }
        out.push('\n');
    }
    let _ = writeln!(
        out,
        "\nbest fraction for pool {}: {}",
        report.pool, report.best_fraction
    );
    out
}

pub fn split_table(report: &SplitReport) -> String {
    let mut out = String::new();
    for stage in &report.stages {
        let _ = writeln!(out, "[{}]", stage.label);
        let _ = writeln!(out, "{:>10} {:>8} {:>10}", "branch", "P", "utility");
        for b in &report.branches {
            let _ = writeln!(
                out,
                "{:>10} {:>8.4} {:>10.2}",
                b,
                stage.win_probability[b],
                stage.branch_utility[b].to_f64()
            );
        }
        let _ = writeln!(
            out,
            "{:>10} {:>10} {:>10} {:>10} {:>10}",
            "pool", "branch", "next", "at_risk", "expected"
        );
        for id in &report.pool_order {
            let e = &stage.pools[id];
            let _ = writeln!(
                out,
                "{:>10} {:>10} {:>10.2} {:>10.2} {:>10.2}",
                id,
                e.branch,
                e.next_block.to_f64(),
                e.at_risk_retention.to_f64(),
                e.total(report.include_at_risk).to_f64()
            );
        }
        out.push('\n');
    }
    let _ = writeln!(
        out,
        "utilities in BTC; expected {} contested-block retention",
        if report.include_at_risk { "includes" } else { "excludes" }
    );
    out
}

pub fn race_table(outcome: &RaceOutcome) -> String {
    let mut out = String::new();
    let delay = outcome
        .delay_minutes
        .map(|d| format!("{d} min"))
        .unwrap_or_else(|| "none".into());
    let _ = writeln!(
        out,
        "{} trials, seed {}, delay {}, {} re-raced",
        outcome.trials, outcome.seed, delay, outcome.reraced_trials
    );
    let _ = writeln!(
        out,
        "{:>10} {:>10} {:>10} {:>10} {:>8} {:>10}",
        "branch", "analytic", "empirical", "wins", "z", "utility"
    );
    for (b, p) in &outcome.analytic_win_prob {
        let sigma = outcome.sigma(b.as_str());
        let z = if sigma > 0.0 {
            (outcome.empirical_win_freq[b] - p) / sigma
        } else {
            0.0
        };
        let _ = writeln!(
            out,
            "{:>10} {:>10.6} {:>10.6} {:>10} {:>8.2} {:>10.2}",
            b,
            p,
            outcome.empirical_win_freq[b],
            outcome.wins[b],
            z,
            outcome.expected_branch_utility[b].to_f64()
        );
    }
    out
}
