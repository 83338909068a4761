use std::io::{self, Write};

use serde::Serialize;

use super::{FluidError, FluidModel, FluidState, Rates};
use crate::scenario::{Discipline, Scenario};
use crate::summary::{FlowSummary, Parameters, SteadyStateSummary};

pub const ENGINE: &str = "fluid";

/// Share of the link a flow must hold to count as the one in service.
const DOMINANT_SHARE: f64 = 0.5;
/// A change of served flow or of queue order must persist this long to be
/// recorded, so that tie chattering does not register as events.
const CONFIRM_TIME: f64 = 1e-3;
const MAX_EVENTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum FluidEvent {
    /// The buffer filled with ΣA ≥ C (the first one is t_s).
    Saturation { t: f64 },
    /// `flow` (0-based) took over at least half the link.
    ServiceSwitch { t: f64, flow: usize },
    /// Two-flow queues crossed.
    MeetingPoint { t: f64 },
}

impl FluidEvent {
    pub fn time(&self) -> f64 {
        match *self {
            FluidEvent::Saturation { t } | FluidEvent::ServiceSwitch { t, .. } | FluidEvent::MeetingPoint { t } => t,
        }
    }
}

/// A value that only counts as changed once the change has held for a
/// number of consecutive observations.
#[derive(Debug, Clone)]
struct Debounce<T> {
    confirmed: Option<T>,
    candidate: Option<(T, f64, usize)>,
}

impl<T: Copy + PartialEq> Debounce<T> {
    fn new() -> Self {
        Self {
            confirmed: None,
            candidate: None,
        }
    }

    /// Returns the start time of a newly confirmed value.
    fn observe(&mut self, value: T, t: f64, need: usize) -> Option<(T, f64)> {
        if self.confirmed == Some(value) {
            self.candidate = None;
            return None;
        }
        match &mut self.candidate {
            Some((v, _, count)) if *v == value => *count += 1,
            _ => self.candidate = Some((value, t, 1)),
        }
        let (v, start, count) = self.candidate.expect("just set");
        if count >= need {
            let first = self.confirmed.is_none();
            self.confirmed = Some(v);
            self.candidate = None;
            if !first {
                return Some((v, start));
            }
        }
        None
    }
}

/// Sampled fluid run. Each sample carries the running integrals of A, Q, D
/// and L since t = 0, so time averages over any sample-aligned window are
/// exact to the integration step.
#[derive(Debug, Clone)]
pub struct Trajectory {
    scenario: Scenario,
    dt: f64,
    sample_period: f64,
    flows: usize,
    times: Vec<f64>,
    /// Per sample: A, Q, D, L, ∫A, ∫Q, ∫D, ∫L, each N wide.
    data: Vec<f64>,
    events: Vec<FluidEvent>,
    first_saturation: Option<f64>,
    was_saturated: bool,
    dominant: Debounce<usize>,
    order: Debounce<bool>,
}

/// One recorded sample.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub t: f64,
    pub a: &'a [f64],
    pub q: &'a [f64],
    pub d: &'a [f64],
    pub l: &'a [f64],
    cumulative: &'a [f64],
}

impl Sample<'_> {
    pub fn total_queue(&self) -> f64 {
        self.q.iter().sum()
    }

    pub fn total_rate(&self) -> f64 {
        self.a.iter().sum()
    }
}

impl Trajectory {
    pub(super) fn new(scenario: Scenario, dt: f64, sample_period: f64) -> Self {
        let flows = scenario.flows().len();
        Self {
            scenario,
            dt,
            sample_period,
            flows,
            times: Vec::new(),
            data: Vec::new(),
            events: Vec::new(),
            first_saturation: None,
            was_saturated: false,
            dominant: Debounce::new(),
            order: Debounce::new(),
        }
    }

    pub(super) fn observe(&mut self, state: &FluidState, rates: &Rates, model: &FluidModel) {
        let t = state.t;
        if state.saturated && !self.was_saturated {
            self.first_saturation.get_or_insert(t);
            self.push_event(FluidEvent::Saturation { t });
        }
        self.was_saturated = state.saturated;

        let need = ((CONFIRM_TIME / self.dt).round() as usize).max(1);
        let (k, dk) =
            rates.d.iter().cloned().enumerate().fold(
                (0, f64::NEG_INFINITY),
                |best, (k, d)| if d > best.1 { (k, d) } else { best },
            );
        if dk >= DOMINANT_SHARE * model.capacity {
            if let Some((flow, start)) = self.dominant.observe(k, t, need) {
                self.push_event(FluidEvent::ServiceSwitch { t: start, flow });
            }
        }
        if self.flows == 2 && self.first_saturation.is_some() {
            let diff = state.q[0] - state.q[1];
            if diff.abs() > model.eps_q {
                if let Some((_, start)) = self.order.observe(diff > 0.0, t, need) {
                    self.push_event(FluidEvent::MeetingPoint { t: start });
                }
            }
        }
    }

    fn push_event(&mut self, e: FluidEvent) {
        if self.events.len() < MAX_EVENTS {
            self.events.push(e);
        }
    }

    pub(super) fn push_sample(&mut self, t: f64, a: &[f64], q: &[f64], d: &[f64], l: &[f64], cumulative: &[f64]) {
        self.times.push(t);
        for v in [a, q, d, l] {
            self.data.extend_from_slice(v);
        }
        self.data.extend_from_slice(cumulative);
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn flows(&self) -> usize {
        self.flows
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn sample(&self, i: usize) -> Sample<'_> {
        let n = self.flows;
        let row = &self.data[i * 8 * n..(i + 1) * 8 * n];
        Sample {
            t: self.times[i],
            a: &row[..n],
            q: &row[n..2 * n],
            d: &row[2 * n..3 * n],
            l: &row[3 * n..4 * n],
            cumulative: &row[4 * n..],
        }
    }

    pub fn samples(&self) -> impl Iterator<Item = Sample<'_>> {
        (0..self.len()).map(|i| self.sample(i))
    }

    pub fn events(&self) -> &[FluidEvent] {
        &self.events
    }

    /// t_s: first entry into the full-buffer regime.
    pub fn first_saturation(&self) -> Option<f64> {
        self.first_saturation
    }

    pub fn service_switches(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.events.iter().filter_map(|e| match *e {
            FluidEvent::ServiceSwitch { t, flow } => Some((t, flow)),
            _ => None,
        })
    }

    /// Mean time between successive take-overs of the link by the same flow,
    /// over switches after `after`.
    pub fn service_period(&self, after: f64) -> Option<f64> {
        let mut last = vec![None; self.flows];
        let (mut sum, mut count) = (0.0, 0usize);
        for (t, flow) in self.service_switches().filter(|(t, _)| *t >= after) {
            if let Some(prev) = last[flow] {
                sum += t - prev;
                count += 1;
            }
            last[flow] = Some(t);
        }
        (count > 0).then(|| sum / count as f64)
    }

    /// Per-flow time averages of (A, Q, D, L) between samples `i` and `j`.
    fn means(&self, i: usize, j: usize) -> [Vec<f64>; 4] {
        let n = self.flows;
        let (si, sj) = (self.sample(i), self.sample(j));
        let span = sj.t - si.t;
        let col = |block: usize| -> Vec<f64> {
            (0..n)
                .map(|k| (sj.cumulative[block * n + k] - si.cumulative[block * n + k]) / span)
                .collect()
        };
        [col(0), col(1), col(2), col(3)]
    }

    pub fn summarize(&self, warmup: f64) -> Result<SteadyStateSummary, FluidError> {
        let horizon = *self.times.last().unwrap_or(&0.0);
        if !(warmup >= 0.0) || warmup >= horizon {
            return Err(FluidError::WarmupBeyondHorizon { warmup, horizon });
        }
        let start = self.times.partition_point(|&t| t < warmup - 1e-12);
        let end = self.len() - 1;
        if start >= end {
            return Err(FluidError::WarmupBeyondHorizon { warmup, horizon });
        }
        let [a, q, d, l] = self.means(start, end);
        let c = self.scenario.capacity();
        let flows = self
            .scenario
            .flows()
            .iter()
            .enumerate()
            .map(|(k, f)| FlowSummary {
                kind: f.kind(),
                sending_rate: a[k],
                throughput: d[k],
                mean_queue: Some(q[k]),
                loss_rate: l[k],
            })
            .collect::<Vec<_>>();
        let cycle_period = match self.scenario.discipline() {
            Discipline::Sqf => self.service_period(self.times[start]),
            _ => None,
        };
        let mut notes = Vec::new();
        match self.first_saturation {
            Some(ts) => notes.push(format!("buffer first saturated at t = {ts:.4} s")),
            None => notes.push("buffer never saturated".into()),
        }
        Ok(SteadyStateSummary {
            engine: ENGINE.into(),
            discipline: self.scenario.discipline(),
            parameters: Parameters::from_scenario(&self.scenario),
            utilization: d.iter().sum::<f64>() / c,
            flows,
            cycle_period,
            notes,
        })
    }

    /// CSV with header `t,A1..AN,Q1..QN,D1..DN,L1..LN`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.flows;
        let mut header = vec!["t".to_string()];
        for sym in ["A", "Q", "D", "L"] {
            header.extend((1..=n).map(|k| format!("{sym}{k}")));
        }
        writeln!(w, "{}", header.join(","))?;
        let mut line = String::new();
        for s in self.samples() {
            line.clear();
            line.push_str(&format!("{}", s.t));
            for v in s.a.iter().chain(s.q).chain(s.d).chain(s.l) {
                line.push(',');
                line.push_str(&format!("{v}"));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}
