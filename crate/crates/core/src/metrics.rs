//! Fairness and efficiency statistics.

use serde::Serialize;
use thiserror::Error;

/// Default short-term fairness window, seconds.
pub const DEFAULT_WINDOW_S: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("Jain index is undefined for an empty or all-zero vector")]
    ZeroVector,
    #[error("negative or non-finite entry {0}")]
    BadEntry(f64),
    #[error("trace has no windows")]
    EmptyTrace,
    #[error("nothing was sent")]
    NothingSent,
}

/// J = (Σx)² / (N·Σx²).
pub fn jain_index(x: &[f64]) -> Result<f64, MetricsError> {
    if let Some(&bad) = x.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(MetricsError::BadEntry(bad));
    }
    // Scale by the largest entry so squares neither overflow nor underflow.
    let max = x.iter().cloned().fold(0.0, f64::max);
    if x.is_empty() || max == 0.0 {
        return Err(MetricsError::ZeroVector);
    }
    let (sum, sum_sq) = x.iter().fold((0.0, 0.0), |(s, q), v| {
        let y = v / max;
        (s + y, q + y * y)
    });
    let j = sum * sum / (x.len() as f64 * sum_sq);
    Ok(j.min(1.0))
}

/// Per-window delivered bits of each flow. Windows tile the measured
/// interval back to back, starting at `start`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowedTrace {
    pub window: f64,
    pub start: f64,
    /// bits[w][k]
    pub bits: Vec<Vec<f64>>,
}

impl WindowedTrace {
    pub fn new(window: f64, start: f64, flows: usize, windows: usize) -> Self {
        assert!(window > 0.0);
        Self {
            window,
            start,
            bits: vec![vec![0.0; flows]; windows],
        }
    }

    /// Credits `bits` to `flow` at time `t`; times outside the trace are ignored.
    pub fn record(&mut self, t: f64, flow: usize, bits: f64) {
        if t < self.start {
            return;
        }
        let w = ((t - self.start) / self.window) as usize;
        if let Some(row) = self.bits.get_mut(w) {
            row[flow] += bits;
        }
    }

    pub fn flows(&self) -> usize {
        self.bits.first().map_or(0, Vec::len)
    }

    /// Per-flow totals over all windows.
    pub fn totals(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.flows()];
        for row in &self.bits {
            for (o, b) in out.iter_mut().zip(row) {
                *o += b;
            }
        }
        out
    }

    /// Per-window rates in `unit` bits (e.g. the packet size) per second.
    pub fn rates(&self, unit: f64) -> Vec<Vec<f64>> {
        self.bits
            .iter()
            .map(|row| row.iter().map(|b| b / unit / self.window).collect())
            .collect()
    }
}

/// Mean of per-window Jain indices, skipping windows where nothing was
/// delivered.
pub fn windowed_jain(trace: &WindowedTrace) -> Result<f64, MetricsError> {
    if trace.bits.is_empty() {
        return Err(MetricsError::EmptyTrace);
    }
    let values: Vec<f64> = trace.bits.iter().filter_map(|row| jain_index(row).ok()).collect();
    if values.is_empty() {
        return Err(MetricsError::ZeroVector);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

pub fn long_term_jain(totals: &[f64]) -> Result<f64, MetricsError> {
    jain_index(totals)
}

/// Delivered over sent.
pub fn goodput_ratio(delivered: f64, sent: f64) -> Result<f64, MetricsError> {
    if !(sent > 0.0) {
        return Err(MetricsError::NothingSent);
    }
    Ok(delivered / sent)
}

/// ΣX_k / C.
pub fn utilization(throughputs: &[f64], capacity: f64) -> f64 {
    throughputs.iter().sum::<f64>() / capacity
}
