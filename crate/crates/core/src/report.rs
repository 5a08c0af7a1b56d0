//! Output encodings.
//!
//! - Session summaries: one JSON object, or `key=value` lines in
//!   [`SessionReport::FIELDS`] order with `none` for missing values.
//! - Round logs: one JSON object per line.
//! - Oracle and sweep tables: CSV with one row per reflectivity.

use std::io::Write;

use serde_json::Value;

use crate::adversary::EveStrategy;
use crate::error::{Error, Result};
use crate::oracle::{self, Scenario, Verdict};
use crate::protocol::{RoundRecord, SessionReport};

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::internal(format!("write failed: {e}"))
}

pub fn summary_json(report: &SessionReport) -> Result<String> {
    serde_json::to_string_pretty(report).map_err(io_err)
}

fn kv_value(v: &Value) -> String {
    match v {
        Value::Null => "none".to_string(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn summary_kv(report: &SessionReport) -> Result<String> {
    let value = serde_json::to_value(report).map_err(io_err)?;
    let mut out = String::new();
    for key in SessionReport::FIELDS {
        let v = value
            .get(key)
            .ok_or_else(|| Error::internal(format!("summary field '{key}' missing")))?;
        out.push_str(key);
        out.push('=');
        out.push_str(&kv_value(v));
        out.push('\n');
    }
    Ok(out)
}

/// Writes one JSON line per round.
pub fn write_round_log<W: Write>(mut w: W, records: &[RoundRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(io_err)?;
        w.write_all(b"\n").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

fn column_prefix(s: EveStrategy) -> String {
    s.name().replace('-', "_")
}

/// Header of the oracle table for the selected strategies.
pub fn oracle_csv_header(strategies: &[EveStrategy]) -> Vec<String> {
    let mut cols: Vec<String> = [
        "reflectivity",
        "transmissivity",
        "blocked_d1",
        "blocked_d2",
        "blocked_d3",
        "unblocked_d1",
        "unblocked_d2",
        "unblocked_d3",
        "qci_p1",
        "qci_p2",
        "qci_p3",
        "qci_p4",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for &s in strategies {
        let p = column_prefix(s);
        for stat in ["sift_rate", "d1_rate", "qber", "eve_info", "d3_anomaly_rate"] {
            cols.push(format!("{p}_{stat}"));
        }
    }
    cols
}

/// Closed-form detection, QCI and per-strategy figures, one row per `R`.
pub fn oracle_csv(grid: &[f64], strategies: &[EveStrategy]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(oracle_csv_header(strategies)).map_err(io_err)?;
    for &r in grid {
        let blocked = oracle::detection_table(r, Scenario::Blocked)?;
        let unblocked = oracle::detection_table(r, Scenario::Unblocked)?;
        let q = oracle::qci_table(r)?;
        let mut row = vec![
            r,
            1.0 - r,
            blocked.p_d1,
            blocked.p_d2,
            blocked.p_d3,
            unblocked.p_d1,
            unblocked.p_d2,
            unblocked.p_d3,
            q.p1,
            q.p2,
            q.p3,
            q.p4,
        ];
        for &s in strategies {
            let e = oracle::expectations(r, s)?;
            row.extend([e.sift_rate, e.d1_rate, e.qber, e.eve_info, e.d3_anomaly_rate]);
        }
        w.write_record(row.iter().map(|x| x.to_string())).map_err(io_err)?;
    }
    let bytes = w.into_inner().map_err(io_err)?;
    String::from_utf8(bytes).map_err(io_err)
}

pub const SWEEP_HEADER: [&str; 14] = [
    "reflectivity",
    "strategy",
    "rounds",
    "seed",
    "sift_rate",
    "expected_sift_rate",
    "qber",
    "expected_qber",
    "eve_info",
    "expected_eve_info",
    "d3_anomaly_rate",
    "expected_d3_anomaly_rate",
    "counterfactual_fraction",
    "verdict",
];

/// One Monte Carlo session per row next to its closed-form values.
pub fn sweep_csv(rows: &[(SessionReport, Option<Verdict>)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER).map_err(io_err)?;
    let opt = |x: Option<f64>| x.map_or_else(|| "none".to_string(), |v| v.to_string());
    for (rep, verdict) in rows {
        let e = oracle::expectations(rep.reflectivity, rep.strategy)?;
        let verdict = match verdict {
            Some(v) if v.passed => "pass",
            Some(_) => "fail",
            None => "skipped",
        };
        w.write_record([
            rep.reflectivity.to_string(),
            rep.strategy.to_string(),
            rep.rounds.to_string(),
            rep.seed.to_string(),
            rep.sift_rate.to_string(),
            e.sift_rate.to_string(),
            opt(rep.qber),
            e.qber.to_string(),
            opt(rep.eve_info_fraction),
            e.eve_info.to_string(),
            rep.d3_anomaly_rate().to_string(),
            e.d3_anomaly_rate.to_string(),
            rep.counterfactual_fraction.to_string(),
            verdict.to_string(),
        ])
        .map_err(io_err)?;
    }
    let bytes = w.into_inner().map_err(io_err)?;
    String::from_utf8(bytes).map_err(io_err)
}
