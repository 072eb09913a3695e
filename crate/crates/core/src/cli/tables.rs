//! Side-by-side reproduction of the published cost-effectiveness tables.

use std::fmt::Write as _;

use serde::Serialize;

use crate::costeff::{assurance_known, CostEffConfig};
use crate::error::Result;
use crate::mc_engine::MCSettings;
use crate::statkit::mix_seed;

/// Published `(K, n, {R = 250, 500, 1000})` assurance at the sample size each
/// threshold was sized to.
pub const SIZED_CELLS: [(f64, usize, [f64; 3]); 4] = [
    (5000.0, 1048, [0.708, 0.701, 0.700]),
    (7000.0, 541, [0.676, 0.714, 0.694]),
    (10000.0, 382, [0.688, 0.676, 0.697]),
    (20000.0, 285, [0.716, 0.698, 0.719]),
];

pub const SIZED_REPLICATES: [usize; 3] = [250, 500, 1000];

/// Published curve subsets, one column per threshold, at `R = 1000`.
pub const CURVE_CELLS: [(f64, [(usize, f64); 7]); 4] = [
    (
        20000.0,
        [(1, 0.473), (185, 0.655), (205, 0.669), (235, 0.687), (285, 0.697), (335, 0.716), (1200, 0.782)],
    ),
    (
        10000.0,
        [(1, 0.463), (282, 0.673), (332, 0.693), (382, 0.695), (482, 0.716), (750, 0.743), (1200, 0.758)],
    ),
    (
        7000.0,
        [(1, 0.463), (440, 0.687), (490, 0.694), (541, 0.698), (640, 0.712), (750, 0.719), (1200, 0.735)],
    ),
    (
        5000.0,
        [(1, 0.470), (500, 0.667), (750, 0.689), (875, 0.699), (1000, 0.695), (1048, 0.700), (1200, 0.710)],
    ),
];

pub const CURVE_REPLICATES: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableRow {
    pub set: &'static str,
    pub k: f64,
    pub n: usize,
    pub replicates: usize,
    pub published: f64,
    pub reproduced: f64,
    pub stderr: f64,
    pub diff: f64,
    pub tolerance: f64,
    pub within: bool,
}

impl TableRow {
    fn new(set: &'static str, k: f64, n: usize, replicates: usize, published: f64, reproduced: f64, stderr: f64) -> Self {
        let diff = (reproduced - published).abs();
        let tolerance = 3.5 * stderr;
        Self {
            set,
            k,
            n,
            replicates,
            published,
            reproduced,
            stderr,
            diff,
            tolerance,
            within: diff <= tolerance,
        }
    }
}

/// Every cell gets its own seed derived from `seed`, the table and the cell
/// position, so rows can be rerun independently.
pub fn reproduce_tables(seed: u64, workers: usize) -> Result<Vec<TableRow>> {
    let mut rows = Vec::new();
    for (i, &(k, n, published)) in SIZED_CELLS.iter().enumerate() {
        for (j, &r) in SIZED_REPLICATES.iter().enumerate() {
            let s = MCSettings::new(r, mix_seed(seed, (2 << 16) | (i << 8 | j) as u64)).with_workers(workers);
            let est = assurance_known(&CostEffConfig::new(k, n), &s)?;
            rows.push(TableRow::new("sized", k, n, r, published[j], est.delta_hat, est.stderr));
        }
    }
    for (i, (k, cells)) in CURVE_CELLS.iter().enumerate() {
        for (j, &(n, published)) in cells.iter().enumerate() {
            let s = MCSettings::new(CURVE_REPLICATES, mix_seed(seed, (3 << 16) | (i << 8 | j) as u64))
                .with_workers(workers);
            let est = assurance_known(&CostEffConfig::new(*k, n), &s)?;
            rows.push(TableRow::new("curve", *k, n, CURVE_REPLICATES, published, est.delta_hat, est.stderr));
        }
    }
    Ok(rows)
}

/// Fixed-width text report, one line per cell.
pub fn format_report(rows: &[TableRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<6} {:>6} {:>5} {:>5} {:>9} {:>10} {:>7} {:>9}  status",
        "set", "K", "n", "R", "published", "reproduced", "|diff|", "3.5*se"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<6} {:>6} {:>5} {:>5} {:>9.3} {:>10.3} {:>7.3} {:>9.3}  {}",
            r.set,
            r.k,
            r.n,
            r.replicates,
            r.published,
            r.reproduced,
            r.diff,
            r.tolerance,
            if r.within { "ok" } else { "EXCEEDS" }
        );
    }
    let bad = rows.iter().filter(|r| !r.within).count();
    let _ = writeln!(out, "{bad} of {} rows exceed 3.5 standard errors", rows.len());
    out
}
