//! CSV rows and JSON provenance sidecars.

use entprobe_core::engine::{GridNode, NodeStatus};
use entprobe_core::response::{Channel, Transition};
use entprobe_core::spin_algebra::Vec3;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Bumped whenever the column set or order changes.
pub const SCHEMA_VERSION: u32 = 1;

pub const COLUMNS: [&str; 10] = ["theta", "phi", "dcs_st", "dcs_ts", "dcs_tt", "dcs_total", "px", "py", "pz", "flag"];

/// One output direction.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub theta: f64,
    pub phi: f64,
    /// Indexed st, ts, tt.
    pub dcs: [Option<f64>; 3],
    pub total: Option<f64>,
    pub polarization: Option<Vec3>,
    pub status: NodeStatus,
}

pub fn slot(t: Transition) -> usize {
    match t {
        Transition::SingletToTriplet => 0,
        Transition::TripletToSinglet => 1,
        Transition::TripletToTriplet => 2,
    }
}

impl Row {
    pub fn from_node(node: &GridNode, channels: &[Channel]) -> Self {
        let mut dcs = [None; 3];
        for (ch, v) in channels.iter().zip(&node.dcs) {
            dcs[slot(ch.transition)] = *v;
        }
        Self { theta: node.theta, phi: node.phi, dcs, total: node.total, polarization: node.polarization, status: node.status.clone() }
    }

    /// Convergence shortfalls and failures, as opposed to expected flags.
    pub fn is_warning(&self) -> bool {
        matches!(self.status, NodeStatus::Convergence { .. } | NodeStatus::Failed { .. })
    }
}

/// C-style `%.12e`: two-digit minimum exponent with explicit sign.
pub fn fmt_e(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
}

fn opt(x: Option<f64>) -> String { x.map(fmt_e).unwrap_or_default() }

pub fn csv(rows: &[Row]) -> String {
    let mut out = COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        let p = r.polarization;
        let fields = [
            fmt_e(r.theta),
            fmt_e(r.phi),
            opt(r.dcs[0]),
            opt(r.dcs[1]),
            opt(r.dcs[2]),
            opt(r.total),
            opt(p.map(|v| v.x)),
            opt(p.map(|v| v.y)),
            opt(p.map(|v| v.z)),
            r.status.label().to_string(),
        ];
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}

pub fn convergence_report(rows: &[Row]) -> Value {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in rows {
        *counts.entry(r.status.label()).or_default() += 1;
    }
    let flagged: Vec<Value> = rows
        .iter()
        .filter(|r| r.status != NodeStatus::Ok)
        .map(|r| json!({"theta": r.theta, "phi": r.phi, "status": r.status}))
        .collect();
    json!({
        "nodes": rows.len(),
        "status_counts": counts,
        "warnings": rows.iter().filter(|r| r.is_warning()).count(),
        "flagged_nodes": flagged,
    })
}

pub fn sidecar(command: &str, config: Value, run: Value, rows: &[Row]) -> String {
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "columns": COLUMNS,
        "tool": {"name": "entprobe", "version": env!("CARGO_PKG_VERSION"), "core_version": entprobe_core_version()},
        "command": command,
        "config": config,
        "run": run,
        "convergence": convergence_report(rows),
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("sidecar serializes");
    s.push('\n');
    s
}

fn entprobe_core_version() -> &'static str { entprobe_core::VERSION }

/// Writes `<dir>/<stem>.csv` and `<dir>/<stem>.json`.
pub fn write_pair(dir: &Path, stem: &str, csv_text: &str, json_text: &str) -> std::io::Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let (c, j) = (dir.join(format!("{stem}.csv")), dir.join(format!("{stem}.json")));
    std::fs::write(&c, csv_text)?;
    std::fs::write(&j, json_text)?;
    Ok((c, j))
}
