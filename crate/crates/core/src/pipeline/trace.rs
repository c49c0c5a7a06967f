use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::ConvergenceReport;

pub const TRACE_HEADER: &str = "iter,T1,T2,T3,T4,Phi,Sigma,energy";

/// One CSV row of the run trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    #[serde(rename = "T1")]
    pub t1: f64,
    #[serde(rename = "T2")]
    pub t2: f64,
    #[serde(rename = "T3")]
    pub t3: f64,
    #[serde(rename = "T4")]
    pub t4: f64,
    #[serde(rename = "Phi")]
    pub phi: f64,
    #[serde(rename = "Sigma")]
    pub sigma: f64,
    pub energy: f64,
}

impl TraceRow {
    pub fn metrics(&self) -> [f64; 6] {
        [self.t1, self.t2, self.t3, self.t4, self.phi, self.sigma]
    }
}

/// Rows of a report, `iter` counted from 1.
pub fn trace_rows(report: &ConvergenceReport) -> Vec<TraceRow> {
    (0..report.len())
        .map(|k| {
            let m = report.metrics(k);
            TraceRow {
                iter: k + 1,
                t1: m.t1,
                t2: m.t2,
                t3: m.t3,
                t4: m.t4,
                phi: m.phi,
                sigma: m.sigma,
                energy: report.energy[k],
            }
        })
        .collect()
}

/// The trace as CSV text. Floats use the shortest representation that
/// parses back to the same value.
pub fn trace_csv(report: &ConvergenceReport) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in trace_rows(report) {
        writeln!(
            out,
            "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            r.iter, r.t1, r.t2, r.t3, r.t4, r.phi, r.sigma, r.energy
        )
        .expect("writing to a string");
    }
    out
}

pub fn export_trace(report: &ConvergenceReport, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, trace_csv(report))?;
    Ok(())
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == TRACE_HEADER => {}
        other => return Err(Error::Parse(format!("trace header {other:?}"))),
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(n, line)| {
            let cells: Vec<&str> = line.split(',').collect();
            let bad = || Error::Parse(format!("trace row {}: `{line}`", n + 1));
            if cells.len() != 8 {
                return Err(bad());
            }
            let f = |k: usize| cells[k].trim().parse::<f64>().map_err(|_| bad());
            Ok(TraceRow {
                iter: cells[0].trim().parse().map_err(|_| bad())?,
                t1: f(1)?,
                t2: f(2)?,
                t3: f(3)?,
                t4: f(4)?,
                phi: f(5)?,
                sigma: f(6)?,
                energy: f(7)?,
            })
        })
        .collect()
}
