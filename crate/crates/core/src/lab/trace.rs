//! Per-step convergence records and empirical order estimates.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::pencil::Status;

use super::LabError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub error: f64,
    pub residual: f64,
    pub order_estimate: Option<f64>,
    pub elapsed_seconds: f64,
}

/// Error and residual history of one solve.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
    pub status: Option<Status>,
    /// Solver failure message when the run stopped on an error.
    pub failure: Option<String>,
}

impl ConvergenceTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, step: usize, error: f64, residual: f64, elapsed_seconds: f64) {
        self.records.push(TraceRecord {
            step,
            error,
            residual,
            order_estimate: None,
            elapsed_seconds,
        });
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.error).collect()
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.residual).collect()
    }

    /// Fills `order_estimate` on record `k+1` from errors `k-1, k, k+1`,
    /// using only errors strictly above `saturation_floor`.
    pub fn fill_orders(&mut self, saturation_floor: f64) {
        let errs = self.errors();
        for r in &mut self.records {
            r.order_estimate = None;
        }
        for k in 1..errs.len().saturating_sub(1) {
            let window = [errs[k - 1], errs[k], errs[k + 1]];
            if window.iter().any(|&e| !(e > saturation_floor)) {
                continue;
            }
            self.records[k + 1].order_estimate = order_from_triple(window[0], window[1], window[2]);
        }
    }

    /// Order estimates present in the trace, in step order.
    pub fn order_estimates(&self) -> Vec<f64> {
        self.records
            .iter()
            .filter_map(|r| r.order_estimate)
            .collect()
    }

    /// Successive error ratios `e_{k+1} / e_k` over the leading stretch of
    /// records whose error stays above `floor`.
    pub fn leading_error_ratios(&self, floor: f64) -> Vec<f64> {
        let head: Vec<f64> = self
            .records
            .iter()
            .map(|r| r.error)
            .take_while(|&e| e > floor)
            .collect();
        head.windows(2).map(|w| w[1] / w[0]).collect()
    }

    /// CSV with columns `step,error,residual,order_estimate,elapsed_seconds`;
    /// numbers carry 17 significant digits, a missing order is left blank.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), LabError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "step",
            "error",
            "residual",
            "order_estimate",
            "elapsed_seconds",
        ])?;
        for r in &self.records {
            w.write_record([
                r.step.to_string(),
                sci17(r.error),
                sci17(r.residual),
                r.order_estimate.map(sci17).unwrap_or_default(),
                sci17(r.elapsed_seconds),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `x` with 17 significant digits in scientific notation.
pub fn sci17(x: f64) -> String {
    format!("{x:.16e}")
}

fn order_from_triple(e0: f64, e1: f64, e2: f64) -> Option<f64> {
    let den = (e1 / e0).ln();
    let num = (e2 / e1).ln();
    if !den.is_finite() || !num.is_finite() || den.abs() < 1e-12 {
        return None;
    }
    Some(num / den)
}

/// `ln(e_{k+1}/e_k) / ln(e_k/e_{k-1})` for every admissible `k`; triples
/// whose logs degenerate are skipped.
pub fn estimate_order(errors: &[f64]) -> Result<Vec<f64>, LabError> {
    let positive = errors.iter().filter(|&&e| e > 0.0).count();
    if errors.len() < 3 || positive < 3 {
        return Err(LabError::InsufficientData(errors.len()));
    }
    Ok(errors
        .windows(3)
        .filter(|w| w.iter().all(|&e| e > 0.0))
        .filter_map(|w| order_from_triple(w[0], w[1], w[2]))
        .collect())
}
