use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::energy::EnergyBreakdown;
use crate::error::{Error, Result};
use crate::fmt::sci;

/// State after one completed outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based outer iteration index.
    pub k: usize,
    pub energy: EnergyBreakdown,
    /// `|H_k - H_{k-1}|^2 + |S_k - S_{k-1}|^2`.
    pub residual: f64,
    pub min_degree: f64,
    pub max_rownorm: f64,
    pub n_at_zero: usize,
    pub n_at_one: usize,
    /// Step sizes actually used in this iteration.
    pub eta1: f64,
    pub eta2: f64,
    /// Sufficient-decrease constant of this iteration; NaN when undefined.
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SolverTrace {
    /// Objective at the starting point.
    pub initial: EnergyBreakdown,
    pub records: Vec<IterationRecord>,
}

pub const CSV_HEADER: &str =
    "k,total,feature_fidelity,smoothing,structure_fidelity,l1,fro,residual,min_degree,max_rownorm,n_at_zero,n_at_one";

impl SolverTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Objective totals, starting point first.
    pub fn totals(&self) -> Vec<f64> {
        std::iter::once(self.initial.total)
            .chain(self.records.iter().map(|r| r.energy.total))
            .collect()
    }

    /// Iterations `k` whose objective exceeds the previous one by more than `slack`.
    pub fn increases(&self, slack: f64) -> Vec<usize> {
        let totals = self.totals();
        self.records
            .iter()
            .zip(totals.windows(2))
            .filter(|(_, w)| w[1] > w[0] + slack)
            .map(|(r, _)| r.k)
            .collect()
    }

    pub fn best_total(&self) -> f64 {
        self.totals().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Smallest per-iteration decrease constant; the one the rate bound uses.
    pub fn min_rho(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.rho)
            .fold(f64::INFINITY, f64::min)
    }

    /// One line per iteration in `%.12e`, after the fixed header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let e = &r.energy;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.k,
                sci(e.total, 12),
                sci(e.feature_fidelity, 12),
                sci(e.smoothing, 12),
                sci(e.structure_fidelity, 12),
                sci(e.l1, 12),
                sci(e.fro, 12),
                sci(r.residual, 12),
                sci(r.min_degree, 12),
                sci(r.max_rownorm, 12),
                r.n_at_zero,
                r.n_at_one
            );
        }
        out
    }
}

/// Outcome of checking the sublinear rate bound against a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub rho: f64,
    pub p0: f64,
    pub p_star: f64,
    /// Number of prefixes checked (one per iteration).
    pub checked: usize,
    /// Prefix lengths `K` at which the bound failed.
    pub violations: Vec<usize>,
}

impl RateReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Absolute slack for the rate comparison; absorbs rounding in residuals that
/// are zero in exact arithmetic.
pub const RATE_SLACK: f64 = 1e-12;

/// For every prefix length `K`, checks
/// `min_{k <= K} residual_k <= (p0 - p_star) / (rho K)`.
pub fn rate_check(trace: &SolverTrace, rho: f64, p_star: f64) -> Result<RateReport> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter {
            name: "rho",
            value: rho,
            reason: "decrease constant must be positive",
        });
    }
    let p0 = trace.initial.total;
    let mut best = f64::INFINITY;
    let mut violations = Vec::new();
    for (idx, r) in trace.records.iter().enumerate() {
        best = best.min(r.residual);
        let big_k = (idx + 1) as f64;
        if best > (p0 - p_star) / (rho * big_k) + RATE_SLACK {
            violations.push(idx + 1);
        }
    }
    Ok(RateReport {
        rho,
        p0,
        p_star,
        checked: trace.records.len(),
        violations,
    })
}
