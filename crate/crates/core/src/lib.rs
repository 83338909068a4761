//! Fluid, closed-form and packet-level models of TCP/UDP flows sharing a
//! per-flow-queued bottleneck with longest-queue drop.

pub mod analytic;
pub mod fluid;
pub mod metrics;
pub mod packetsim;
pub mod scenario;
pub mod summary;
pub mod units;

pub use scenario::{load_scenario, DetectionMode, Discipline, FlowKind, RttMode, Scenario, ScenarioDoc, ScenarioError};
pub use summary::{FlowSummary, SteadyStateSummary, DEFAULT_WARMUP_FRACTION};
pub use units::Units;
