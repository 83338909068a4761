//! Scenario documents and the validated, canonical [`Scenario`].
//!
//! A scenario file is UTF-8 text made of `key = value` lines. `#` starts a
//! comment. Global keys come first; every `[flow]` header opens a new flow
//! block whose keys may follow on the header line itself or on the lines
//! below it:
//!
//! ```text
//! capacity_mbps = 10
//! buffer_kb = 150
//! discipline = sqf
//! [flow] kind=tcp rtt_ms=20
//! [flow]
//! kind = udp
//! rate_mbps = 3
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::Units;

pub const DEFAULT_PACKET_BYTES: u32 = 1500;
pub const DEFAULT_HORIZON_S: f64 = 60.0;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("flow is {actual}, expected {expected}")]
    WrongKind { expected: FlowKind, actual: FlowKind },
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid(msg.into())
}

/// Per-flow link scheduling discipline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Discipline {
    Fq,
    Lqf,
    Sqf,
}

impl Discipline {
    pub const ALL: [Discipline; 3] = [Discipline::Fq, Discipline::Lqf, Discipline::Sqf];

    pub fn as_str(&self) -> &'static str {
        match self {
            Discipline::Fq => "fq",
            Discipline::Lqf => "lqf",
            Discipline::Sqf => "sqf",
        }
    }
}

impl fmt::Display for Discipline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Discipline {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fq" => Ok(Discipline::Fq),
            "lqf" => Ok(Discipline::Lqf),
            "sqf" => Ok(Discipline::Sqf),
            other => Err(format!("unknown discipline `{other}` (expected fq|lqf|sqf)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RttMode {
    /// R_k = PD_k.
    Constant,
    /// R_k(t) = PD_k + Q_k(t)/C.
    QueueAugmented,
}

impl RttMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            RttMode::Constant => "constant",
            RttMode::QueueAugmented => "queue_augmented",
        }
    }
}

impl FromStr for RttMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "constant" => Ok(RttMode::Constant),
            "queue_augmented" => Ok(RttMode::QueueAugmented),
            other => Err(format!(
                "unknown rtt_mode `{other}` (expected constant|queue_augmented)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionMode {
    /// Sources react to losses at the instant they happen.
    Instantaneous,
    /// Sources react one round-trip time after the loss.
    Delayed,
}

impl DetectionMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DetectionMode::Instantaneous => "instantaneous",
            DetectionMode::Delayed => "delayed",
        }
    }
}

impl FromStr for DetectionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "instantaneous" => Ok(DetectionMode::Instantaneous),
            "delayed" => Ok(DetectionMode::Delayed),
            other => Err(format!(
                "unknown detection_mode `{other}` (expected instantaneous|delayed)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowKind {
    Tcp,
    Udp,
}

impl fmt::Display for FlowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FlowKind::Tcp => "tcp",
            FlowKind::Udp => "udp",
        })
    }
}

impl FromStr for FlowKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tcp" => Ok(FlowKind::Tcp),
            "udp" => Ok(FlowKind::Udp),
            other => Err(format!("unknown flow kind `{other}` (expected tcp|udp)")),
        }
    }
}

/// One flow block of a scenario document, in file units.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowDoc {
    pub kind: Option<FlowKind>,
    pub rtt_ms: Option<f64>,
    pub rate_mbps: Option<f64>,
    pub initial_rate_pps: Option<f64>,
    pub initial_queue_pkts: Option<f64>,
}

impl FlowDoc {
    pub fn tcp(rtt_ms: f64) -> Self {
        Self {
            kind: Some(FlowKind::Tcp),
            rtt_ms: Some(rtt_ms),
            ..Self::default()
        }
    }

    pub fn udp(rate_mbps: f64) -> Self {
        Self {
            kind: Some(FlowKind::Udp),
            rate_mbps: Some(rate_mbps),
            ..Self::default()
        }
    }

    fn set(&mut self, key: &str, value: &str, line: usize) -> Result<(), ScenarioError> {
        match key {
            "kind" => self.kind = Some(parse_value(value, line)?),
            "rtt_ms" => self.rtt_ms = Some(parse_number(value, line)?),
            "rate_mbps" => self.rate_mbps = Some(parse_number(value, line)?),
            "initial_rate_pps" => self.initial_rate_pps = Some(parse_number(value, line)?),
            "initial_queue_pkts" => self.initial_queue_pkts = Some(parse_number(value, line)?),
            other => return Err(ScenarioError::UnknownKey(other.to_string())),
        }
        Ok(())
    }
}

/// A scenario as written in a file: external units, optional keys.
///
/// This is the form that `--set` overrides and parameter sweeps edit before
/// the document is validated into a [`Scenario`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDoc {
    pub capacity_mbps: Option<f64>,
    pub buffer_kb: Option<f64>,
    pub packet_bytes: Option<u32>,
    pub discipline: Option<Discipline>,
    pub horizon_s: Option<f64>,
    pub rtt_mode: Option<RttMode>,
    pub detection_mode: Option<DetectionMode>,
    pub seed: Option<u64>,
    pub slow_start: Option<bool>,
    pub flows: Vec<FlowDoc>,
}

fn parse_value<T: FromStr>(value: &str, line: usize) -> Result<T, ScenarioError>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| ScenarioError::Parse {
        line,
        message: e.to_string(),
    })
}

fn parse_number(value: &str, line: usize) -> Result<f64, ScenarioError> {
    let x: f64 = value.parse().map_err(|_| ScenarioError::Parse {
        line,
        message: format!("`{value}` is not a number"),
    })?;
    if !x.is_finite() {
        return Err(ScenarioError::Parse {
            line,
            message: format!("`{value}` is not finite"),
        });
    }
    Ok(x)
}

fn split_pair(token: &str, line: usize) -> Result<(&str, &str), ScenarioError> {
    let (k, v) = token.split_once('=').ok_or_else(|| ScenarioError::Parse {
        line,
        message: format!("expected `key = value`, found `{token}`"),
    })?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() || v.is_empty() {
        return Err(ScenarioError::Parse {
            line,
            message: format!("expected `key = value`, found `{token}`"),
        });
    }
    Ok((k, v))
}

impl ScenarioDoc {
    pub fn new(capacity_mbps: f64, buffer_kb: f64, discipline: Discipline) -> Self {
        Self {
            capacity_mbps: Some(capacity_mbps),
            buffer_kb: Some(buffer_kb),
            discipline: Some(discipline),
            ..Self::default()
        }
    }

    pub fn with_flow(mut self, flow: FlowDoc) -> Self {
        self.flows.push(flow);
        self
    }

    pub fn tcp(self, rtt_ms: f64) -> Self {
        self.with_flow(FlowDoc::tcp(rtt_ms))
    }

    pub fn udp(self, rate_mbps: f64) -> Self {
        self.with_flow(FlowDoc::udp(rate_mbps))
    }

    pub fn horizon(mut self, seconds: f64) -> Self {
        self.horizon_s = Some(seconds);
        self
    }

    pub fn rtt_mode(mut self, mode: RttMode) -> Self {
        self.rtt_mode = Some(mode);
        self
    }

    pub fn detection_mode(mut self, mode: DetectionMode) -> Self {
        self.detection_mode = Some(mode);
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn build(&self) -> Result<Scenario, ScenarioError> {
        Scenario::from_doc(self)
    }

    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut doc = ScenarioDoc::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix("[flow]") {
                doc.flows.push(FlowDoc::default());
                let flow = doc.flows.last_mut().expect("just pushed");
                for token in rest.split_whitespace() {
                    let (k, v) = split_pair(token, line)?;
                    flow.set(k, v, line)?;
                }
                continue;
            }
            if content.starts_with('[') {
                return Err(ScenarioError::Parse {
                    line,
                    message: format!("unknown section `{content}`"),
                });
            }
            let (k, v) = split_pair(content, line)?;
            match doc.flows.last_mut() {
                Some(flow) => flow.set(k, v, line)?,
                None => doc.set_global(k, v, line)?,
            }
        }
        Ok(doc)
    }

    fn set_global(&mut self, key: &str, value: &str, line: usize) -> Result<(), ScenarioError> {
        match key {
            "capacity_mbps" => self.capacity_mbps = Some(parse_number(value, line)?),
            "buffer_kb" => self.buffer_kb = Some(parse_number(value, line)?),
            "packet_bytes" => self.packet_bytes = Some(parse_value(value, line)?),
            "discipline" => self.discipline = Some(parse_value(value, line)?),
            "horizon_s" => self.horizon_s = Some(parse_number(value, line)?),
            "rtt_mode" => self.rtt_mode = Some(parse_value(value, line)?),
            "detection_mode" => self.detection_mode = Some(parse_value(value, line)?),
            "seed" => self.seed = Some(parse_value(value, line)?),
            "slow_start" => self.slow_start = Some(parse_value(value, line)?),
            other => return Err(ScenarioError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Apply a `key=value` override. Flow keys are addressed as
    /// `flowN.key` with N counted from 1.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ScenarioError> {
        let key = key.trim();
        let value = value.trim();
        if let Some(rest) = key.strip_prefix("flow") {
            if let Some((idx, flow_key)) = rest.split_once('.') {
                let n: usize = idx.parse().map_err(|_| ScenarioError::UnknownKey(key.to_string()))?;
                let count = self.flows.len();
                let flow = n
                    .checked_sub(1)
                    .and_then(|i| self.flows.get_mut(i))
                    .ok_or_else(|| invalid(format!("`{key}` names flow {n} but the scenario has {count} flows")))?;
                return flow.set(flow_key, value, 0);
            }
        }
        self.set_global(key, value, 0)
    }

    /// Render back to the file format. Only keys that are set are written.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push_str(&format!("{k} = {v}\n"));
            }
        };
        put("capacity_mbps", self.capacity_mbps.map(|x| x.to_string()));
        put("buffer_kb", self.buffer_kb.map(|x| x.to_string()));
        put("packet_bytes", self.packet_bytes.map(|x| x.to_string()));
        put("discipline", self.discipline.map(|x| x.to_string()));
        put("horizon_s", self.horizon_s.map(|x| x.to_string()));
        put("rtt_mode", self.rtt_mode.map(|x| x.as_str().to_string()));
        put("detection_mode", self.detection_mode.map(|x| x.as_str().to_string()));
        put("seed", self.seed.map(|x| x.to_string()));
        put("slow_start", self.slow_start.map(|x| x.to_string()));
        for flow in &self.flows {
            let mut line = String::from("[flow]");
            if let Some(kind) = flow.kind {
                line.push_str(&format!(" kind={kind}"));
            }
            for (k, v) in [
                ("rtt_ms", flow.rtt_ms),
                ("rate_mbps", flow.rate_mbps),
                ("initial_rate_pps", flow.initial_rate_pps),
                ("initial_queue_pkts", flow.initial_queue_pkts),
            ] {
                if let Some(v) = v {
                    line.push_str(&format!(" {k}={v}"));
                }
            }
            out.push_str(&line);
            out.push('\n');
        }
        out
    }
}

/// Traffic source of a flow, in canonical units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Source {
    /// AIMD source with round-trip propagation delay in seconds.
    Tcp { propagation_rtt: f64 },
    /// Constant bit rate source, rate in packets/second.
    Udp { rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub source: Source,
    /// Packets/second at t = 0 (TCP only; UDP always starts at its rate).
    pub initial_rate: f64,
    /// Packets queued at t = 0.
    pub initial_queue: f64,
}

impl FlowSpec {
    pub fn kind(&self) -> FlowKind {
        match self.source {
            Source::Tcp { .. } => FlowKind::Tcp,
            Source::Udp { .. } => FlowKind::Udp,
        }
    }

    pub fn is_tcp(&self) -> bool {
        matches!(self.source, Source::Tcp { .. })
    }

    pub fn propagation_rtt(&self) -> Option<f64> {
        match self.source {
            Source::Tcp { propagation_rtt } => Some(propagation_rtt),
            Source::Udp { .. } => None,
        }
    }

    pub fn udp_rate(&self) -> Option<f64> {
        match self.source {
            Source::Udp { rate } => Some(rate),
            Source::Tcp { .. } => None,
        }
    }
}

/// Additive-increase slope 1/PD² (packets/s²) of a TCP flow.
pub fn alpha_of(flow: &FlowSpec) -> Result<f64, ScenarioError> {
    match flow.source {
        Source::Tcp { propagation_rtt } => Ok(1.0 / (propagation_rtt * propagation_rtt)),
        Source::Udp { .. } => Err(ScenarioError::WrongKind {
            expected: FlowKind::Tcp,
            actual: FlowKind::Udp,
        }),
    }
}

/// A validated scenario in canonical units. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    units: Units,
    capacity: f64,
    buffer: u64,
    discipline: Discipline,
    flows: Vec<FlowSpec>,
    horizon: f64,
    rtt_mode: RttMode,
    detection_mode: DetectionMode,
    seed: u64,
    slow_start: bool,
    #[serde(skip)]
    doc: ScenarioDoc,
}

impl Scenario {
    pub fn from_doc(doc: &ScenarioDoc) -> Result<Self, ScenarioError> {
        let packet_bytes = doc.packet_bytes.unwrap_or(DEFAULT_PACKET_BYTES);
        if packet_bytes == 0 {
            return Err(invalid("packet_bytes must be positive"));
        }
        let units = Units::new(packet_bytes);

        let capacity_mbps = doc.capacity_mbps.ok_or_else(|| invalid("missing capacity_mbps"))?;
        if !(capacity_mbps > 0.0) {
            return Err(invalid("capacity must be positive"));
        }
        let capacity = units.mbps_to_pps(capacity_mbps);

        let buffer_kb = doc.buffer_kb.ok_or_else(|| invalid("missing buffer_kb"))?;
        let buffer_bytes = buffer_kb * 1000.0;
        if !(buffer_bytes >= 2.0 * f64::from(packet_bytes)) {
            return Err(invalid("buffer must hold at least two packets"));
        }
        let buffer = units.bytes_to_packets(buffer_bytes);

        let discipline = doc.discipline.ok_or_else(|| invalid("missing discipline"))?;

        let horizon = doc.horizon_s.unwrap_or(DEFAULT_HORIZON_S);
        if !(horizon > 0.0) {
            return Err(invalid("horizon must be positive"));
        }

        if doc.flows.is_empty() {
            return Err(invalid("scenario needs at least one flow"));
        }
        let mut flows = Vec::with_capacity(doc.flows.len());
        for (i, f) in doc.flows.iter().enumerate() {
            let n = i + 1;
            let kind = f.kind.ok_or_else(|| invalid(format!("flow {n}: missing kind")))?;
            let source = match kind {
                FlowKind::Tcp => {
                    if f.rate_mbps.is_some() {
                        return Err(invalid(format!("flow {n}: tcp flow cannot set rate_mbps")));
                    }
                    let rtt_ms = f
                        .rtt_ms
                        .ok_or_else(|| invalid(format!("flow {n}: tcp flow needs rtt_ms")))?;
                    if !(rtt_ms > 0.0) {
                        return Err(invalid(format!("flow {n}: propagation rtt must be positive")));
                    }
                    Source::Tcp {
                        propagation_rtt: rtt_ms / 1000.0,
                    }
                }
                FlowKind::Udp => {
                    if f.rtt_ms.is_some() {
                        return Err(invalid(format!("flow {n}: udp flow cannot set rtt_ms")));
                    }
                    if f.initial_rate_pps.is_some() {
                        return Err(invalid(format!("flow {n}: udp flow cannot set initial_rate_pps")));
                    }
                    let rate_mbps = f
                        .rate_mbps
                        .ok_or_else(|| invalid(format!("flow {n}: udp flow needs rate_mbps")))?;
                    if !(rate_mbps > 0.0) {
                        return Err(invalid(format!("flow {n}: udp rate must be positive")));
                    }
                    if rate_mbps > capacity_mbps {
                        return Err(invalid(format!("flow {n}: udp rate exceeds capacity")));
                    }
                    Source::Udp {
                        rate: units.mbps_to_pps(rate_mbps),
                    }
                }
            };
            let initial_rate = match source {
                Source::Tcp { .. } => f.initial_rate_pps.unwrap_or(0.0),
                Source::Udp { rate } => rate,
            };
            if !(initial_rate >= 0.0) {
                return Err(invalid(format!("flow {n}: initial rate must be non-negative")));
            }
            let initial_queue = f.initial_queue_pkts.unwrap_or(0.0);
            if !(initial_queue >= 0.0) {
                return Err(invalid(format!("flow {n}: initial queue must be non-negative")));
            }
            flows.push(FlowSpec {
                source,
                initial_rate,
                initial_queue,
            });
        }
        let queued: f64 = flows.iter().map(|f| f.initial_queue).sum();
        if queued > buffer as f64 {
            return Err(invalid("initial queues exceed the buffer"));
        }

        Ok(Scenario {
            units,
            capacity,
            buffer,
            discipline,
            flows,
            horizon,
            rtt_mode: doc.rtt_mode.unwrap_or(RttMode::Constant),
            detection_mode: doc.detection_mode.unwrap_or(DetectionMode::Instantaneous),
            seed: doc.seed.unwrap_or(DEFAULT_SEED),
            slow_start: doc.slow_start.unwrap_or(false),
            doc: doc.clone(),
        })
    }

    pub fn units(&self) -> Units {
        self.units
    }

    /// Link capacity C in packets/second.
    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    /// Shared memory B in whole packets.
    pub fn buffer(&self) -> u64 {
        self.buffer
    }

    pub fn buffer_pkts(&self) -> f64 {
        self.buffer as f64
    }

    pub fn discipline(&self) -> Discipline {
        self.discipline
    }

    pub fn flows(&self) -> &[FlowSpec] {
        &self.flows
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn rtt_mode(&self) -> RttMode {
        self.rtt_mode
    }

    pub fn detection_mode(&self) -> DetectionMode {
        self.detection_mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn slow_start(&self) -> bool {
        self.slow_start
    }

    pub fn doc(&self) -> &ScenarioDoc {
        &self.doc
    }

    /// α_k = 1/PD_k² for every TCP flow, `None` for UDP flows.
    pub fn alphas(&self) -> Vec<Option<f64>> {
        self.flows.iter().map(|f| alpha_of(f).ok()).collect()
    }

    pub fn tcp_count(&self) -> usize {
        self.flows.iter().filter(|f| f.is_tcp()).count()
    }

    /// Same scenario under another discipline.
    pub fn with_discipline(&self, discipline: Discipline) -> Self {
        let mut s = self.clone();
        s.discipline = discipline;
        s.doc.discipline = Some(discipline);
        s
    }

    /// Same scenario with another packet-engine seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut s = self.clone();
        s.seed = seed;
        s.doc.seed = Some(seed);
        s
    }
}

/// Parse and validate a scenario document.
pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    ScenarioDoc::parse(text)?.build()
}
