//! Fluid engine: fixed-step integration of the coupled sending-rate and
//! virtual-queue equations.
//!
//! For a TCP flow
//!
//! ```text
//! dA_k/dt = (1/R_k²)·(1{Q=0} + (D_k/C)·1{Q>0}) − (A_k/2)·L_k(τ)
//! dQ_k/dt = A_k − D_k − L_k
//! ```
//!
//! with τ = t (instantaneous detection) or t − R_k (delayed), and R_k = PD_k
//! or PD_k + Q_k/C. UDP flows keep dA/dt = 0.
//!
//! Once the buffer is full and the aggregate input is at least C, the total
//! queue cannot move: the engine switches to a saturation regime where the
//! losses are scaled to absorb exactly ΣA − C. It leaves the regime when ΣA
//! drops below C.

mod discipline;
mod trajectory;

use thiserror::Error;

pub use discipline::{departure_rates, loss_rates};
pub use trajectory::{FluidEvent, Sample, Trajectory};

use crate::scenario::{DetectionMode, Discipline, RttMode, Scenario};
use discipline::{departure_rates_into, loss_rates_into};

/// Default spacing of recorded samples, seconds.
pub const DEFAULT_SAMPLE_PERIOD: f64 = 1e-3;
/// Upper bound on the integration step, seconds.
pub const MAX_STEP: f64 = 50e-6;
/// Steps per smallest propagation RTT.
pub const STEPS_PER_RTT: f64 = 200.0;
/// Largest relative multiplicative decrease tolerated in one step.
pub const MAX_STEP_DECREASE: f64 = 0.2;
/// Relative tie tolerance on queue lengths (times B).
pub const TIE_TOLERANCE: f64 = 1e-9;
/// Relative tolerance for "buffer full" (times B).
pub const FULL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FluidError {
    #[error(
        "step too large at t = {t:.6} s: flow {flow} would lose {fraction:.1}% of its rate in one step; \
         reduce the step size"
    )]
    StepTooLarge { t: f64, flow: usize, fraction: f64 },
    #[error("warmup {warmup} s leaves nothing to average before the horizon {horizon} s")]
    WarmupBeyondHorizon { warmup: f64, horizon: f64 },
    #[error("invalid option: {0}")]
    InvalidOption(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidOptions {
    /// Integration step; `None` picks min(min PD / 200, 50 µs), shrunk to
    /// divide the sample period.
    pub dt: Option<f64>,
    pub sample_period: f64,
}

impl Default for FluidOptions {
    fn default() -> Self {
        Self {
            dt: None,
            sample_period: DEFAULT_SAMPLE_PERIOD,
        }
    }
}

/// Scenario parameters in the form the right-hand side needs.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidModel {
    pub capacity: f64,
    pub buffer: f64,
    pub discipline: Discipline,
    pub rtt_mode: RttMode,
    pub detection_mode: DetectionMode,
    /// Propagation RTT per flow, `None` for UDP.
    pub propagation_rtt: Vec<Option<f64>>,
    pub eps_q: f64,
    pub eps_b: f64,
}

impl FluidModel {
    pub fn from_scenario(scenario: &Scenario) -> Self {
        let buffer = scenario.buffer_pkts();
        Self {
            capacity: scenario.capacity(),
            buffer,
            discipline: scenario.discipline(),
            rtt_mode: scenario.rtt_mode(),
            detection_mode: scenario.detection_mode(),
            propagation_rtt: scenario.flows().iter().map(|f| f.propagation_rtt()).collect(),
            eps_q: TIE_TOLERANCE * buffer,
            eps_b: FULL_TOLERANCE * buffer,
        }
    }

    pub fn flows(&self) -> usize {
        self.propagation_rtt.len()
    }

    /// Default step for this model.
    pub fn default_step(&self) -> f64 {
        let min_pd = self
            .propagation_rtt
            .iter()
            .flatten()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        (min_pd / STEPS_PER_RTT).min(MAX_STEP)
    }

    fn rtt(&self, k: usize, q: f64) -> Option<f64> {
        self.propagation_rtt[k].map(|pd| match self.rtt_mode {
            RttMode::Constant => pd,
            RttMode::QueueAugmented => pd + q / self.capacity,
        })
    }

    /// Longest round trip a flow can see, which bounds how far back the
    /// delayed loss term reaches.
    fn max_rtt(&self) -> f64 {
        let pd = self.propagation_rtt.iter().flatten().cloned().fold(0.0, f64::max);
        match self.rtt_mode {
            RttMode::Constant => pd,
            RttMode::QueueAugmented => pd + self.buffer / self.capacity,
        }
    }
}

/// Past loss rates, one entry per integration step.
#[derive(Debug, Clone, PartialEq)]
pub struct LossHistory {
    dt: f64,
    flows: usize,
    slots: usize,
    /// Index of the next step to be pushed.
    next: usize,
    data: Vec<f64>,
}

impl LossHistory {
    pub fn new(dt: f64, flows: usize, span: f64) -> Self {
        let slots = (span / dt).ceil() as usize + 3;
        Self {
            dt,
            flows,
            slots,
            next: 0,
            data: vec![0.0; slots * flows],
        }
    }

    /// Span of past time kept, seconds.
    pub fn span(&self) -> f64 {
        (self.slots - 2) as f64 * self.dt
    }

    pub fn push(&mut self, l: &[f64]) {
        let slot = self.next % self.slots;
        self.data[slot * self.flows..(slot + 1) * self.flows].copy_from_slice(l);
        self.next += 1;
    }

    fn get(&self, step: usize, k: usize) -> f64 {
        if step >= self.next || step + self.slots <= self.next {
            return 0.0;
        }
        self.data[(step % self.slots) * self.flows + k]
    }

    /// L_k at time `t`, linearly interpolated between steps. Times before
    /// the start of the run read as zero loss.
    pub fn at(&self, k: usize, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let x = t / self.dt;
        let i = x.floor();
        let frac = x - i;
        let i = i as usize;
        let lo = self.get(i, k);
        if frac == 0.0 {
            return lo;
        }
        let hi = if i + 1 < self.next { self.get(i + 1, k) } else { lo };
        lo + frac * (hi - lo)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    pub t: f64,
    pub a: Vec<f64>,
    pub q: Vec<f64>,
    /// Inside the full-buffer regime.
    pub saturated: bool,
    pub loss_history: LossHistory,
}

impl FluidState {
    pub fn initial(scenario: &Scenario, model: &FluidModel, dt: f64) -> Self {
        let flows = scenario.flows();
        let a = flows.iter().map(|f| f.udp_rate().unwrap_or(f.initial_rate)).collect();
        let q = flows.iter().map(|f| f.initial_queue).collect();
        Self {
            t: 0.0,
            a,
            q,
            saturated: false,
            loss_history: LossHistory::new(dt, flows.len(), model.max_rtt() + dt),
        }
    }

    /// Enters or leaves the saturation regime.
    pub fn update_regime(&mut self, model: &FluidModel) {
        let total_a: f64 = self.a.iter().sum();
        if self.saturated {
            if total_a < model.capacity {
                self.saturated = false;
            }
        } else {
            let total_q: f64 = self.q.iter().sum();
            if total_q >= model.buffer - model.eps_b && total_a >= model.capacity {
                self.saturated = true;
                scale_to(&mut self.q, model.buffer);
            }
        }
    }
}

fn scale_to(q: &mut [f64], target: f64) {
    let total: f64 = q.iter().sum();
    if total > 0.0 {
        let s = target / total;
        q.iter_mut().for_each(|x| *x *= s);
    }
}

/// Instantaneous rates at a state.
#[derive(Debug, Clone, PartialEq)]
pub struct Rates {
    pub d: Vec<f64>,
    pub l: Vec<f64>,
    /// Loss rate each TCP source reacts to (delayed in delayed mode).
    pub l_seen: Vec<f64>,
    pub da: Vec<f64>,
    pub dq: Vec<f64>,
}

impl Rates {
    fn zeros(n: usize) -> Self {
        Self {
            d: vec![0.0; n],
            l: vec![0.0; n],
            l_seen: vec![0.0; n],
            da: vec![0.0; n],
            dq: vec![0.0; n],
        }
    }
}

/// Time derivative of (A, Q) at `state`.
pub fn rhs(state: &FluidState, model: &FluidModel) -> Rates {
    let mut out = Rates::zeros(model.flows());
    rhs_into(state, model, &mut out);
    out
}

fn rhs_into(state: &FluidState, model: &FluidModel, out: &mut Rates) {
    let (a, q) = (&state.a, &state.q);
    let c = model.capacity;
    departure_rates_into(a, q, c, model.discipline, model.eps_q, &mut out.d);

    if state.saturated {
        // LQD losses with the buffer treated as exactly full, scaled so that
        // the total queue stays put.
        let total_q: f64 = q.iter().sum();
        loss_rates_into(a, q, &out.d, total_q, c, model.eps_q, model.eps_b, &mut out.l);
        let excess = (a.iter().sum::<f64>() - c).max(0.0);
        let total_l: f64 = out.l.iter().sum();
        if total_l > 0.0 {
            let s = excess / total_l;
            out.l.iter_mut().for_each(|x| *x *= s);
        } else if excess > 0.0 {
            let max = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let longest: Vec<usize> = (0..q.len()).filter(|&k| q[k] >= max - model.eps_q).collect();
            let demand: f64 = longest.iter().map(|&k| a[k]).sum();
            for &k in &longest {
                out.l[k] = if demand > 0.0 {
                    excess * a[k] / demand
                } else {
                    excess / longest.len() as f64
                };
            }
        }
    } else {
        loss_rates_into(a, q, &out.d, model.buffer, c, model.eps_q, model.eps_b, &mut out.l);
    }

    let empty = q.iter().sum::<f64>() <= model.eps_q;
    for k in 0..a.len() {
        out.dq[k] = a[k] - out.d[k] - out.l[k];
        match model.rtt(k, q[k]) {
            None => {
                out.da[k] = 0.0;
                out.l_seen[k] = 0.0;
            }
            Some(r) => {
                let seen = match model.detection_mode {
                    DetectionMode::Instantaneous => out.l[k],
                    DetectionMode::Delayed => state.loss_history.at(k, state.t - r),
                };
                let share = if empty { 1.0 } else { out.d[k] / c };
                out.l_seen[k] = seen;
                out.da[k] = share / (r * r) - 0.5 * a[k] * seen;
            }
        }
    }
}

/// Integrates `scenario` over its horizon with default options.
pub fn simulate(scenario: &Scenario) -> Result<Trajectory, FluidError> {
    simulate_with(scenario, &FluidOptions::default())
}

pub fn simulate_with(scenario: &Scenario, options: &FluidOptions) -> Result<Trajectory, FluidError> {
    let model = FluidModel::from_scenario(scenario);
    if !(options.sample_period > 0.0 && options.sample_period.is_finite()) {
        return Err(FluidError::InvalidOption("sample period must be positive".into()));
    }
    let (dt, every) = match options.dt {
        Some(dt) if !(dt > 0.0 && dt.is_finite()) => {
            return Err(FluidError::InvalidOption("step must be positive".into()))
        }
        Some(dt) => (dt, ((options.sample_period / dt).round() as usize).max(1)),
        None => {
            let every = (options.sample_period / model.default_step()).ceil().max(1.0);
            (options.sample_period / every, every as usize)
        }
    };
    let steps = (scenario.horizon() / dt).round() as usize;
    let n = model.flows();

    let mut state = FluidState::initial(scenario, &model, dt);
    let mut rates = Rates::zeros(n);
    let mut traj = Trajectory::new(scenario.clone(), dt, dt * every as f64);
    let mut cumulative = vec![0.0; 4 * n];

    for step in 0..=steps {
        state.t = step as f64 * dt;
        state.update_regime(&model);
        rhs_into(&state, &model, &mut rates);
        traj.observe(&state, &rates, &model);
        if step % every == 0 || step == steps {
            traj.push_sample(state.t, &state.a, &state.q, &rates.d, &rates.l, &cumulative);
        }
        if step == steps {
            break;
        }

        for k in 0..n {
            if model.propagation_rtt[k].is_some() {
                let fraction = 0.5 * dt * rates.l_seen[k];
                if fraction > MAX_STEP_DECREASE {
                    return Err(FluidError::StepTooLarge {
                        t: state.t,
                        flow: k + 1,
                        fraction: 100.0 * fraction,
                    });
                }
            }
            cumulative[k] += dt * state.a[k];
            cumulative[n + k] += dt * state.q[k];
            cumulative[2 * n + k] += dt * rates.d[k];
            cumulative[3 * n + k] += dt * rates.l[k];
        }
        state.loss_history.push(&rates.l);
        for k in 0..n {
            state.a[k] = (state.a[k] + dt * rates.da[k]).max(0.0);
            state.q[k] = (state.q[k] + dt * rates.dq[k]).max(0.0);
        }
        let total_q: f64 = state.q.iter().sum();
        if state.saturated || total_q > model.buffer {
            scale_to(&mut state.q, model.buffer);
        }
    }
    Ok(traj)
}

/// Time averages over [warmup, horizon].
pub fn summarize(trajectory: &Trajectory, warmup: f64) -> Result<crate::summary::SteadyStateSummary, FluidError> {
    trajectory.summarize(warmup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioDoc;

    const C10: f64 = 1e7 / 12_000.0;

    fn state(a: Vec<f64>, q: Vec<f64>, saturated: bool) -> FluidState {
        let n = a.len();
        FluidState {
            t: 0.0,
            a,
            q,
            saturated,
            loss_history: LossHistory::new(1e-5, n, 0.1),
        }
    }

    fn two_tcp(discipline: Discipline) -> FluidModel {
        let s = ScenarioDoc::new(10.0, 150.0, discipline)
            .tcp(20.0)
            .tcp(50.0)
            .build()
            .unwrap();
        FluidModel::from_scenario(&s)
    }

    #[test]
    fn empty_queue_grows_at_one_over_rtt_squared() {
        let m = two_tcp(Discipline::Fq);
        let r = rhs(&state(vec![10.0, 10.0], vec![0.0, 0.0], false), &m);
        assert!((r.da[0] - 2500.0).abs() < 1e-9);
        assert!((r.da[1] - 400.0).abs() < 1e-9);
        assert_eq!(r.dq, vec![0.0, 0.0]);
    }

    #[test]
    fn served_alone_and_losing() {
        let m = two_tcp(Discipline::Sqf);
        // flow 1 shortest: served alone, flow 2 longest: all the losses
        let s = state(vec![400.0, 900.0], vec![30.0, 70.0], true);
        let r = rhs(&s, &m);
        assert!((r.d[0] - C10).abs() < 1e-9 && r.d[1] == 0.0);
        assert!((r.da[0] - 2500.0).abs() < 1e-9);
        let excess = 1300.0 - C10;
        assert!((r.l[1] - excess).abs() < 1e-9);
        assert!((r.da[1] - (-0.5 * 900.0 * excess)).abs() < 1e-9);
        assert!(r.dq.iter().sum::<f64>().abs() < 1e-9);
    }

    #[test]
    fn history_interpolates() {
        let mut h = LossHistory::new(0.1, 1, 0.5);
        for i in 0..10 {
            h.push(&[i as f64]);
        }
        assert_eq!(h.at(0, -1.0), 0.0);
        assert!((h.at(0, 0.85) - 8.5).abs() < 1e-9);
        assert!((h.at(0, 0.6) - 6.0).abs() < 1e-9);
        // evicted entries read as zero
        assert_eq!(h.at(0, 0.0), 0.0);
    }
}
