//! Packet engine: a discrete-event simulation of AIMD and CBR sources
//! sharing one bottleneck link.
//!
//! Packets reach the bottleneck as soon as they are released, wait in a
//! per-flow virtual queue of a shared memory of B packets, and are
//! delivered when their transmission ends. The ACK reaches the sender one
//! propagation RTT later. A dropped packet is reported to its sender one
//! propagation RTT after the drop, with no retransmission machinery.
//!
//! A TCP window starts at the flow's `initial_rate_pps` times its
//! propagation RTT or, when the scenario leaves that unset, at its fair
//! share C/N of the link. Under LQF a window-limited flow that is not
//! served gets no ACKs and no losses, so a flow that starts with a small
//! window can be locked out for good; starting from the fair share avoids
//! making that start-up accident the steady state.
//!
//! The seed only places the sources in time: each CBR source starts at a
//! random phase of its packet interval and each TCP source at a random
//! point of its first RTT. Everything else is deterministic.

mod sched;
mod tcp;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

pub use sched::{lqd_admit, scheduler_select, Admission, RoundRobin};
pub use tcp::{tcp_on_ack, tcp_on_loss, TcpState};

use crate::metrics::{self, WindowedTrace, DEFAULT_WINDOW_S};
use crate::scenario::{Scenario, Source};
use crate::summary::{FlowSummary, Parameters, SteadyStateSummary, DEFAULT_WARMUP_FRACTION};

pub const ENGINE: &str = "packet";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PacketError {
    #[error("warmup {warmup} s must lie in [0, {horizon}) s")]
    Warmup { warmup: f64, horizon: f64 },
    #[error("window must be positive, got {0}")]
    Window(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketOptions {
    /// Start of the measured interval, seconds.
    pub warmup: f64,
    /// Short-term fairness window, seconds.
    pub window: f64,
}

impl PacketOptions {
    pub fn for_scenario(s: &Scenario) -> Self {
        Self {
            warmup: DEFAULT_WARMUP_FRACTION * s.horizon(),
            window: DEFAULT_WINDOW_S,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Packet {
    flow: usize,
    sent_at: f64,
    queued_at: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Event {
    /// The packet on the link has been transmitted.
    Departure,
    Ack {
        flow: usize,
        sent_at: f64,
    },
    LossNotice {
        flow: usize,
    },
    CbrSend {
        flow: usize,
    },
    TcpStart {
        flow: usize,
    },
}

#[derive(Debug, Clone, Copy)]
struct Scheduled {
    t: f64,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // reversed: BinaryHeap is a max-heap and the earliest event must pop first
    fn cmp(&self, other: &Self) -> Ordering {
        other.t.total_cmp(&self.t).then(other.seq.cmp(&self.seq))
    }
}

/// Packet counts of one flow since t = 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FlowCounters {
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
    /// Waiting in the virtual queue now.
    pub queued: u64,
    /// On the link now (0 or 1).
    pub in_service: u64,
}

impl FlowCounters {
    /// sent = delivered + dropped + queued + in service.
    pub fn conserved(&self) -> bool {
        self.sent == self.delivered + self.dropped + self.queued + self.in_service
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Measured {
    sent: u64,
    delivered: u64,
    dropped: u64,
    queue_area: f64,
}

#[derive(Debug, Clone)]
struct FlowState {
    source: Source,
    queue: VecDeque<Packet>,
    tcp: Option<TcpState>,
    /// Window in force at the last release.
    released_under: f64,
    counters: FlowCounters,
    measured: Measured,
    last_queue_change: f64,
}

/// A packet-level run in progress. [`PacketSim::step`] processes one event;
/// [`run_packet_sim`] drives it to the horizon.
#[derive(Debug, Clone)]
pub struct PacketSim {
    scenario: Scenario,
    options: PacketOptions,
    buffer: usize,
    /// Transmission time of one packet.
    tx_time: f64,
    now: f64,
    seq: u64,
    calendar: BinaryHeap<Scheduled>,
    flows: Vec<FlowState>,
    on_link: Option<Packet>,
    rr: RoundRobin,
    lengths: Vec<usize>,
    heads: Vec<f64>,
    trace: WindowedTrace,
    events: u64,
}

impl PacketSim {
    pub fn new(scenario: &Scenario, options: PacketOptions) -> Result<Self, PacketError> {
        let horizon = scenario.horizon();
        if !(options.warmup >= 0.0 && options.warmup < horizon) {
            return Err(PacketError::Warmup {
                warmup: options.warmup,
                horizon,
            });
        }
        if !(options.window > 0.0 && options.window.is_finite()) {
            return Err(PacketError::Window(options.window));
        }
        let n = scenario.flows().len();
        let windows = ((horizon - options.warmup) / options.window + 1e-9).floor() as usize;
        let mut sim = Self {
            scenario: scenario.clone(),
            options,
            buffer: scenario.buffer() as usize,
            tx_time: 1.0 / scenario.capacity(),
            now: 0.0,
            seq: 0,
            calendar: BinaryHeap::new(),
            flows: Vec::with_capacity(n),
            on_link: None,
            rr: RoundRobin::new(),
            lengths: vec![0; n],
            heads: vec![0.0; n],
            trace: WindowedTrace::new(options.window, options.warmup, n, windows),
            events: 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed());
        let fair_rate = scenario.capacity() / n as f64;
        for (k, f) in scenario.flows().iter().enumerate() {
            let rate = match scenario.doc().flows.get(k).and_then(|d| d.initial_rate_pps) {
                Some(_) => f.initial_rate,
                None => fair_rate,
            };
            let tcp = f
                .propagation_rtt()
                .map(|pd| TcpState::new(rate * pd, pd, scenario.slow_start()));
            match f.source {
                Source::Tcp { propagation_rtt } => {
                    let start = rng.random::<f64>() * propagation_rtt;
                    sim.schedule(start, Event::TcpStart { flow: k });
                }
                Source::Udp { rate } => {
                    let start = rng.random::<f64>() / rate;
                    sim.schedule(start, Event::CbrSend { flow: k });
                }
            }
            sim.flows.push(FlowState {
                source: f.source,
                queue: VecDeque::new(),
                released_under: tcp.as_ref().map_or(0.0, |t| t.cwnd),
                tcp,
                counters: FlowCounters::default(),
                measured: Measured::default(),
                last_queue_change: 0.0,
            });
        }
        Ok(sim)
    }

    fn schedule(&mut self, t: f64, event: Event) {
        self.seq += 1;
        self.calendar.push(Scheduled {
            t,
            seq: self.seq,
            event,
        });
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn events_processed(&self) -> u64 {
        self.events
    }

    pub fn counters(&self) -> Vec<FlowCounters> {
        self.flows.iter().map(|f| f.counters).collect()
    }

    pub fn queue_lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn tcp_state(&self, flow: usize) -> Option<&TcpState> {
        self.flows[flow].tcp.as_ref()
    }

    fn measuring(&self) -> bool {
        self.now >= self.options.warmup
    }

    /// Accumulates queue-length × time up to now before a queue changes.
    fn touch_queue(&mut self, flow: usize) {
        let from = self.flows[flow].last_queue_change.max(self.options.warmup);
        if self.now > from {
            let f = &mut self.flows[flow];
            f.measured.queue_area += f.queue.len() as f64 * (self.now - from);
        }
        self.flows[flow].last_queue_change = self.now;
    }

    fn record_drop(&mut self, flow: usize) {
        let measuring = self.measuring();
        let f = &mut self.flows[flow];
        f.counters.dropped += 1;
        if measuring {
            f.measured.dropped += 1;
        }
        if let Source::Tcp { propagation_rtt } = f.source {
            self.schedule(self.now + propagation_rtt, Event::LossNotice { flow });
        }
    }

    /// A packet of `flow` reaches the bottleneck.
    fn arrive(&mut self, flow: usize) {
        let measuring = self.measuring();
        let f = &mut self.flows[flow];
        f.counters.sent += 1;
        if measuring {
            f.measured.sent += 1;
        }
        let packet = Packet {
            flow,
            sent_at: self.now,
            queued_at: self.now,
        };
        match lqd_admit(&self.lengths, self.buffer, flow) {
            Admission::Dropped => {
                self.record_drop(flow);
                return;
            }
            Admission::PushedOut { victim } => {
                self.touch_queue(victim);
                self.flows[victim].queue.pop_back();
                self.flows[victim].counters.queued -= 1;
                self.lengths[victim] -= 1;
                self.record_drop(victim);
            }
            Admission::Enqueued => {}
        }
        self.touch_queue(flow);
        let f = &mut self.flows[flow];
        f.queue.push_back(packet);
        f.counters.queued += 1;
        self.lengths[flow] += 1;
        self.start_service();
    }

    fn start_service(&mut self) {
        if self.on_link.is_some() {
            return;
        }
        for (h, f) in self.heads.iter_mut().zip(&self.flows) {
            *h = f.queue.front().map_or(f64::INFINITY, |p| p.queued_at);
        }
        let Some(k) = scheduler_select(&self.lengths, &self.heads, self.scenario.discipline(), &mut self.rr) else {
            return;
        };
        self.touch_queue(k);
        let f = &mut self.flows[k];
        let packet = f.queue.pop_front().expect("selected queue is backlogged");
        f.counters.queued -= 1;
        f.counters.in_service += 1;
        self.lengths[k] -= 1;
        self.on_link = Some(packet);
        self.schedule(self.now + self.tx_time, Event::Departure);
    }

    fn release_tcp(&mut self, flow: usize) {
        loop {
            let tcp = self.flows[flow].tcp.as_mut().expect("tcp flow");
            if !tcp.can_send() {
                return;
            }
            tcp.on_send();
            let cwnd = tcp.cwnd;
            self.flows[flow].released_under = cwnd;
            self.arrive(flow);
        }
    }

    /// Processes the next event at or before the horizon. Returns false when
    /// none is left.
    pub fn step(&mut self) -> bool {
        let horizon = self.scenario.horizon();
        match self.calendar.peek() {
            Some(next) if next.t <= horizon => {}
            _ => return false,
        }
        let Scheduled { t, event, .. } = self.calendar.pop().expect("peeked");
        self.now = t;
        self.events += 1;
        match event {
            Event::Departure => {
                let packet = self.on_link.take().expect("a packet is on the link");
                let k = packet.flow;
                // a delivery counts in the interval its transmission started in,
                // so at most span/tx packets are delivered per measured span
                let measuring = t - self.tx_time >= self.options.warmup;
                let bits = self.scenario.units().packet_bits();
                let f = &mut self.flows[k];
                f.counters.in_service -= 1;
                f.counters.delivered += 1;
                if measuring {
                    f.measured.delivered += 1;
                }
                if let Source::Tcp { propagation_rtt } = f.source {
                    self.schedule(
                        t + propagation_rtt,
                        Event::Ack {
                            flow: k,
                            sent_at: packet.sent_at,
                        },
                    );
                }
                self.trace.record(t, k, bits);
                self.start_service();
            }
            Event::Ack { flow, sent_at } => {
                let tcp = self.flows[flow].tcp.as_mut().expect("tcp flow");
                tcp.on_ack(t - sent_at);
                self.release_tcp(flow);
            }
            Event::LossNotice { flow } => {
                let tcp = self.flows[flow].tcp.as_mut().expect("tcp flow");
                tcp.on_loss_notice(t);
                self.release_tcp(flow);
            }
            Event::CbrSend { flow } => {
                let Source::Udp { rate } = self.flows[flow].source else {
                    unreachable!("cbr event for a tcp flow")
                };
                self.schedule(t + 1.0 / rate, Event::CbrSend { flow });
                self.arrive(flow);
            }
            Event::TcpStart { flow } => self.release_tcp(flow),
        }
        true
    }

    /// Checks the run-time invariants: the shared occupancy stays within B,
    /// packets are conserved per flow, and no TCP flow holds more than
    /// ceil(cwnd) + 1 packets beyond the window it last released under.
    pub fn check_invariants(&self) -> Result<(), String> {
        let occupancy: usize = self.flows.iter().map(|f| f.queue.len()).sum();
        if occupancy != self.lengths.iter().sum::<usize>() || occupancy > self.buffer {
            return Err(format!("occupancy {occupancy} with B = {}", self.buffer));
        }
        for (k, f) in self.flows.iter().enumerate() {
            if !f.counters.conserved() || f.counters.queued as usize != f.queue.len() {
                return Err(format!("flow {}: counters {:?}", k + 1, f.counters));
            }
            if let Some(tcp) = &f.tcp {
                if f64::from(tcp.outstanding) > f.released_under.ceil() + 1.0 {
                    return Err(format!(
                        "flow {}: {} outstanding under cwnd {}",
                        k + 1,
                        tcp.outstanding,
                        f.released_under
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> PacketSimReport {
        while self.step() {}
        self.now = self.scenario.horizon();
        for k in 0..self.flows.len() {
            self.touch_queue(k);
        }
        let span = self.scenario.horizon() - self.options.warmup;
        let flows: Vec<FlowSummary> = self
            .scenario
            .flows()
            .iter()
            .zip(&self.flows)
            .map(|(spec, f)| FlowSummary {
                kind: spec.kind(),
                sending_rate: f.measured.sent as f64 / span,
                throughput: f.measured.delivered as f64 / span,
                mean_queue: Some(f.measured.queue_area / span),
                loss_rate: f.measured.dropped as f64 / span,
            })
            .collect();
        let throughputs: Vec<f64> = flows.iter().map(|f| f.throughput).collect();
        let goodput_ratio = self
            .flows
            .iter()
            .map(|f| {
                // packets still queued at either end of the interval would bias
                // delivered/sent; only losses count against the ratio
                let kept = f.measured.sent.saturating_sub(f.measured.dropped);
                metrics::goodput_ratio(kept as f64, f.measured.sent as f64).ok()
            })
            .collect();
        let summary = SteadyStateSummary {
            engine: ENGINE.into(),
            discipline: self.scenario.discipline(),
            parameters: Parameters::from_scenario(&self.scenario),
            utilization: metrics::utilization(&throughputs, self.scenario.capacity()),
            flows,
            cycle_period: None,
            notes: vec![format!(
                "measured over [{:.3}, {:.3}] s, seed {}",
                self.options.warmup,
                self.scenario.horizon(),
                self.scenario.seed()
            )],
        };
        PacketSimReport {
            short_term_jain: metrics::windowed_jain(&self.trace).ok(),
            long_term_jain: metrics::long_term_jain(&throughputs).ok(),
            summary,
            counters: self.counters(),
            goodput_ratio,
            events: self.events,
            trace: self.trace,
        }
    }
}

/// Outcome of a packet run. Rates are packets/second over the measured
/// interval; counters cover the whole run.
#[derive(Debug, Clone, Serialize)]
pub struct PacketSimReport {
    #[serde(flatten)]
    pub summary: SteadyStateSummary,
    pub counters: Vec<FlowCounters>,
    /// Share of the packets sent in the measured interval that were not
    /// dropped, per flow; null for a flow that sent nothing.
    pub goodput_ratio: Vec<Option<f64>>,
    pub short_term_jain: Option<f64>,
    pub long_term_jain: Option<f64>,
    pub events: u64,
    #[serde(skip)]
    pub trace: WindowedTrace,
}

impl PacketSimReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Per-window delivery rates, header `t,flow,rate_pkts`; `t` is the
    /// window start and flows count from 1.
    pub fn write_trace_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,flow,rate_pkts")?;
        let bits = self
            .summary
            .parameters
            .packet_bytes
            .map_or(12_000.0, |b| f64::from(b) * 8.0);
        for (i, row) in self.trace.rates(bits).iter().enumerate() {
            let t = self.trace.start + i as f64 * self.trace.window;
            for (k, r) in row.iter().enumerate() {
                writeln!(w, "{t},{},{r}", k + 1)?;
            }
        }
        Ok(())
    }
}

/// Runs `scenario` to its horizon with the default warmup and window.
pub fn run_packet_sim(scenario: &Scenario) -> PacketSimReport {
    run_packet_sim_with(scenario, PacketOptions::for_scenario(scenario)).expect("default options are valid")
}

pub fn run_packet_sim_with(scenario: &Scenario, options: PacketOptions) -> Result<PacketSimReport, PacketError> {
    Ok(PacketSim::new(scenario, options)?.finish())
}
