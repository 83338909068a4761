//! Steady-state summaries shared by the three engines, and their JSON form.

use serde::{Deserialize, Serialize};

use crate::scenario::{Discipline, FlowKind, Scenario};

/// Share of the horizon discarded as transient when no warmup is given.
pub const DEFAULT_WARMUP_FRACTION: f64 = 0.2;

/// Per-flow long-run means, in packets/second and packets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSummary {
    pub kind: FlowKind,
    /// Ā_k
    pub sending_rate: f64,
    /// X̄_k
    pub throughput: f64,
    /// Q̄_k, absent when the engine has no meaningful value for it.
    pub mean_queue: Option<f64>,
    /// L̄_k
    pub loss_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    /// C, packets/second.
    pub capacity: f64,
    /// B, packets.
    pub buffer: Option<f64>,
    pub packet_bytes: Option<u32>,
    /// 1/PD_k² per TCP flow, null for UDP flows.
    pub alpha: Vec<Option<f64>>,
}

impl Parameters {
    pub fn from_scenario(s: &Scenario) -> Self {
        Self {
            capacity: s.capacity(),
            buffer: Some(s.buffer_pkts()),
            packet_bytes: Some(s.units().packet_bytes()),
            alpha: s.alphas(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateSummary {
    pub engine: String,
    pub discipline: Discipline,
    pub parameters: Parameters,
    pub flows: Vec<FlowSummary>,
    /// ΣX̄_k / C
    pub utilization: f64,
    /// SQF limit-cycle period in seconds.
    pub cycle_period: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl SteadyStateSummary {
    pub fn throughputs(&self) -> Vec<f64> {
        self.flows.iter().map(|f| f.throughput).collect()
    }

    pub fn sending_rates(&self) -> Vec<f64> {
        self.flows.iter().map(|f| f.sending_rate).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}
