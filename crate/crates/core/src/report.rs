//! Report emission: per-trial CSV, JSON summaries, plain-text tables and
//! plot-ready curves. Output is a pure function of the report structs, so a
//! fixed seed yields byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::experiment::{RoeReport, SeparationTable};

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Request sequence as `time,vertex` rows.
pub fn sequence_csv(sequence: &crate::schedule::RequestSequence) -> String {
    let mut out = String::from("time,vertex\n");
    for r in sequence.requests() {
        writeln!(out, "{},{}", r.time, r.location).expect("string write");
    }
    out
}

/// Per-trial CSV: one row per (trial, scheduler) pair.
pub fn roe_trials_csv(report: &RoeReport, scheduler_names: &[String]) -> String {
    let mut out = String::from("trial,scheduler,cost,denominator\n");
    for record in &report.per_trial {
        for (i, name) in scheduler_names.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{}",
                record.trial, name, record.costs[i], record.denominator
            )
            .expect("string write");
        }
    }
    out
}

/// Summary table with one line per scheduler.
pub fn roe_table(report: &RoeReport) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "trials: {}   resampled: {}   denominator: {} (mean {:.6}, se {:.6})",
        report.trials,
        report.resampled_trials,
        report.denominator_label,
        report.denominator_mean,
        report.denominator_se
    )
    .unwrap();
    writeln!(
        out,
        "{:<18} {:>14} {:>12} {:>10} {:>10} {:>12}",
        "scheduler", "mean cost", "se", "ratio", "ratio se", "known bound"
    )
    .unwrap();
    for s in &report.schedulers {
        writeln!(
            out,
            "{:<18} {:>14.6} {:>12.6} {:>10.4} {:>10.4} {:>12}",
            s.scheduler,
            s.mean_cost,
            s.se_cost,
            s.ratio,
            s.ratio_se,
            s.known_roe_bound
                .map_or_else(|| "n/a".into(), |b| format!("{b:.2}")),
        )
        .unwrap();
    }
    out
}

/// Plot-ready CSV of the separation experiment: ratios against star size.
pub fn separation_csv(table: &SeparationTable) -> String {
    let mut out = String::from(
        "n,horizon,instant_mean,instant_expected,plan_mean,plan_expected,\
         hybrid_mean,hybrid_expected,ratio_instant_hybrid,ratio_plan_hybrid\n",
    );
    for row in &table.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            row.n,
            row.horizon,
            row.instant_mean,
            row.instant_expected,
            row.plan_mean,
            row.plan_expected,
            row.hybrid_mean,
            row.hybrid_expected,
            row.ratio_instant_hybrid,
            row.ratio_plan_hybrid
        )
        .expect("string write");
    }
    out
}

pub fn separation_table_text(table: &SeparationTable) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:>6} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12} {:>10} {:>10}",
        "n",
        "instant",
        "inst. th.",
        "plan",
        "plan th.",
        "hybrid",
        "hybrid th.",
        "inst/hyb",
        "plan/hyb"
    )
    .unwrap();
    for row in &table.rows {
        writeln!(
            out,
            "{:>6} {:>12.1} {:>12.1} {:>12.1} {:>12.1} {:>12.1} {:>12.1} {:>10.3} {:>10.3}",
            row.n,
            row.instant_mean,
            row.instant_expected,
            row.plan_mean,
            row.plan_expected,
            row.hybrid_mean,
            row.hybrid_expected,
            row.ratio_instant_hybrid,
            row.ratio_plan_hybrid
        )
        .unwrap();
    }
    out
}
