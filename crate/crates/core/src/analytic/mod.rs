//! Closed-form stationary results for the simplified fluid system
//! (constant round-trip times, instantaneous loss detection).
//!
//! All rates are packets/second, α_k = 1/PD_k² is packets/s², queues are
//! packets.

pub mod decay;
mod recursion;
pub mod special;

use serde::Serialize;
use thiserror::Error;

pub use decay::{decay_rate, f_decay, g_decay, phase_volume, LOSS_GAIN};
pub use recursion::{epsilon_recursion, EpsilonRecursion};
pub use special::{erf, erfc, erfcx};

use crate::scenario::{Discipline, FlowKind, Scenario, Source};
use crate::summary::{FlowSummary, Parameters, SteadyStateSummary};

pub const ENGINE: &str = "analytic";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("parameter `{0}` must be positive and finite")]
    NonPositive(&'static str),
    #[error("no closed form for this flow mix: {0}")]
    UnsupportedMix(String),
}

fn positive(name: &'static str, x: f64) -> Result<f64, AnalyticError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(AnalyticError::NonPositive(name))
    }
}

/// One service phase of the SQF limit cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Phase {
    /// Index of the flow in service.
    pub flow: usize,
    /// 2C/α_flow, seconds.
    pub duration: f64,
}

/// SQF stationary cycle: flows are served one at a time, each for 2C/α_k,
/// starting from rate zero and ramping as α_k·t.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitCycle {
    pub capacity: f64,
    pub buffer: f64,
    pub alpha: Vec<f64>,
    pub phases: Vec<Phase>,
    pub period: f64,
}

impl LimitCycle {
    pub fn new(alpha: &[f64], capacity: f64, buffer: f64) -> Self {
        let phases: Vec<Phase> = alpha
            .iter()
            .enumerate()
            .map(|(flow, &a)| Phase {
                flow,
                duration: 2.0 * capacity / a,
            })
            .collect();
        let period = phases.iter().map(|p| p.duration).sum();
        Self {
            capacity,
            buffer,
            alpha: alpha.to_vec(),
            phases,
            period,
        }
    }

    /// Whether the in-service queue stays non-empty through its phase, which
    /// the cycle needs: B/2 − C²/(2α_k) ≥ 0 for every flow.
    pub fn queues_stay_backlogged(&self) -> bool {
        self.alpha
            .iter()
            .all(|a| self.buffer >= self.capacity * self.capacity / a)
    }

    /// Phase containing time `t` (taken modulo the period) and the offset
    /// from that phase's start.
    pub fn locate(&self, t: f64) -> (usize, f64) {
        let mut u = t.rem_euclid(self.period);
        for (i, p) in self.phases.iter().enumerate() {
            if u < p.duration {
                return (i, u);
            }
            u -= p.duration;
        }
        let last = self.phases.len() - 1;
        (last, self.phases[last].duration)
    }

    /// Stationary (Ã, Q̃) at time `t` into the cycle, phase 1 starting at 0.
    /// Only defined for two flows.
    pub fn state_at(&self, t: f64) -> Option<([f64; 2], [f64; 2])> {
        if self.alpha.len() != 2 {
            return None;
        }
        let (phase, u) = self.locate(t);
        let on = self.phases[phase].flow;
        let off = 1 - on;
        let c = self.capacity;
        let slope = self.alpha[on];
        let mut rates = [0.0; 2];
        rates[on] = slope * u;
        rates[off] = decay_rate(2.0 * c, 0.0, u, slope, c, LOSS_GAIN);
        let mut queues = [0.0; 2];
        queues[on] = self.buffer / 2.0 + 0.5 * slope * u * u - c * u;
        queues[off] = self.buffer - queues[on];
        Some((rates, queues))
    }
}

/// Two TCP flows under SQF.
pub fn sqf_steady(
    alpha: f64,
    beta: f64,
    capacity: f64,
    buffer: f64,
) -> Result<(SteadyStateSummary, LimitCycle), AnalyticError> {
    positive("alpha", alpha)?;
    positive("beta", beta)?;
    let c = positive("capacity", capacity)?;
    let b = positive("buffer", buffer)?;

    let cycle = LimitCycle::new(&[alpha, beta], c, b);
    let period = cycle.period;
    let x1 = c * beta / (alpha + beta);
    let x2 = c * alpha / (alpha + beta);
    // Flow 1 decays from 2C through flow 2's phase (slope β), and vice versa.
    let lossy1 = phase_volume(2.0 * c, 0.0, 2.0 * c / beta, beta, c, LOSS_GAIN);
    let lossy2 = phase_volume(2.0 * c, 0.0, 2.0 * c / alpha, alpha, c, LOSS_GAIN);
    let a1 = x1 + lossy1 / period;
    let a2 = x2 + lossy2 / period;

    let mut notes = Vec::new();
    let (q1, q2) = if cycle.queues_stay_backlogged() {
        let q1 = b / 2.0 + c * c * (alpha - beta) / (3.0 * alpha * beta);
        (Some(q1), Some(b - q1))
    } else {
        notes.push(format!(
            "buffer {b:.1} pkt is below C²/min(α) = {:.1} pkt: the in-service queue empties \
             within its phase, so the mean-queue formula does not apply",
            c * c / alpha.min(beta)
        ));
        (None, None)
    };

    let flows = vec![
        FlowSummary {
            kind: FlowKind::Tcp,
            sending_rate: a1,
            throughput: x1,
            mean_queue: q1,
            loss_rate: a1 - x1,
        },
        FlowSummary {
            kind: FlowKind::Tcp,
            sending_rate: a2,
            throughput: x2,
            mean_queue: q2,
            loss_rate: a2 - x2,
        },
    ];
    let summary = SteadyStateSummary {
        engine: ENGINE.into(),
        discipline: Discipline::Sqf,
        parameters: Parameters {
            capacity: c,
            buffer: Some(b),
            packet_bytes: None,
            alpha: vec![Some(alpha), Some(beta)],
        },
        utilization: (x1 + x2) / c,
        flows,
        cycle_period: Some(period),
        notes,
    };
    Ok((summary, cycle))
}

fn check_alphas(alphas: &[f64]) -> Result<(), AnalyticError> {
    if alphas.is_empty() {
        return Err(AnalyticError::UnsupportedMix("no TCP flows".into()));
    }
    for &a in alphas {
        positive("alpha", a)?;
    }
    Ok(())
}

/// TCP flows under LQF. Exact for one or two flows; for more, the two-flow
/// fixed point with α+β replaced by Σα_j (flagged in the notes).
pub fn lqf_steady(alphas: &[f64], capacity: f64, buffer: Option<f64>) -> Result<SteadyStateSummary, AnalyticError> {
    check_alphas(alphas)?;
    let c = positive("capacity", capacity)?;
    let n = alphas.len();
    let sum_alpha: f64 = alphas.iter().sum();
    let total_rate = c / 2.0 * (1.0 + (1.0 + 8.0 * sum_alpha / (c * c)).sqrt());

    let mut notes = vec![format!(
        "8Σα/C² = {:.3e}; sending rates ≈ throughputs when this is small",
        8.0 * sum_alpha / (c * c)
    )];
    if n > 2 {
        notes.push("sending rates for more than two flows are extrapolated".into());
    }
    let flows = alphas
        .iter()
        .map(|&a| {
            let sending = a / sum_alpha * total_rate;
            let throughput = c * a / sum_alpha;
            FlowSummary {
                kind: FlowKind::Tcp,
                sending_rate: sending,
                throughput,
                mean_queue: buffer.map(|b| b / n as f64),
                loss_rate: sending - throughput,
            }
        })
        .collect();
    Ok(SteadyStateSummary {
        engine: ENGINE.into(),
        discipline: Discipline::Lqf,
        parameters: Parameters {
            capacity: c,
            buffer,
            packet_bytes: None,
            alpha: alphas.iter().map(|&a| Some(a)).collect(),
        },
        flows,
        utilization: 1.0,
        cycle_period: None,
        notes,
    })
}

/// Fixed point of dA/dt = α·S/C − (A/2)(A − S) for a flow served at share S
/// while it holds a longest queue of a full buffer.
fn rate_at_share(alpha: f64, share: f64, capacity: f64) -> f64 {
    share / 2.0 * (1.0 + (1.0 + 8.0 * alpha / (capacity * share)).sqrt())
}

/// TCP flows under FQ: every flow gets C/N and its sending rate settles
/// where its additive increase balances its tie-branch losses.
pub fn fq_steady(alphas: &[f64], capacity: f64, buffer: Option<f64>) -> Result<SteadyStateSummary, AnalyticError> {
    check_alphas(alphas)?;
    let c = positive("capacity", capacity)?;
    let n = alphas.len() as f64;
    let share = c / n;
    let flows = alphas
        .iter()
        .map(|&a| {
            let sending = rate_at_share(a, share, c);
            FlowSummary {
                kind: FlowKind::Tcp,
                sending_rate: sending,
                throughput: share,
                mean_queue: buffer.map(|b| b / n),
                loss_rate: sending - share,
            }
        })
        .collect();
    Ok(SteadyStateSummary {
        engine: ENGINE.into(),
        discipline: Discipline::Fq,
        parameters: Parameters {
            capacity: c,
            buffer,
            packet_bytes: None,
            alpha: alphas.iter().map(|&a| Some(a)).collect(),
        },
        flows,
        utilization: 1.0,
        cycle_period: None,
        notes: Vec::new(),
    })
}

/// Long-run throughput shares of N TCP flows.
pub fn nflow_throughputs(discipline: Discipline, rtts: &[f64], capacity: f64) -> Result<Vec<f64>, AnalyticError> {
    if rtts.is_empty() {
        return Err(AnalyticError::UnsupportedMix("no TCP flows".into()));
    }
    for &r in rtts {
        positive("rtt", r)?;
    }
    let c = positive("capacity", capacity)?;
    let n = rtts.len() as f64;
    Ok(match discipline {
        Discipline::Fq => vec![c / n; rtts.len()],
        Discipline::Lqf => {
            let weights: Vec<f64> = rtts.iter().map(|r| 1.0 / (r * r)).collect();
            let total: f64 = weights.iter().sum();
            weights.iter().map(|w| c * w / total).collect()
        }
        Discipline::Sqf => {
            // 1/α_k = R_k²
            let weights: Vec<f64> = rtts.iter().map(|r| r * r).collect();
            let total: f64 = weights.iter().sum();
            weights.iter().map(|w| c * w / total).collect()
        }
    })
}

/// One TCP flow against one CBR flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UdpMetrics {
    /// L̄ of the UDP flow.
    pub udp_loss: f64,
    /// X̄ of the TCP flow.
    pub tcp_throughput: f64,
    /// Ā of the TCP flow.
    pub tcp_rate: f64,
}

pub fn udp_metrics(discipline: Discipline, x_udp: f64, capacity: f64, alpha: f64) -> Result<UdpMetrics, AnalyticError> {
    let c = positive("capacity", capacity)?;
    positive("x_udp", x_udp)?;
    positive("alpha", alpha)?;
    if x_udp > c {
        return Err(AnalyticError::UnsupportedMix("udp rate exceeds capacity".into()));
    }
    Ok(match discipline {
        Discipline::Sqf => {
            // UDP's queue stays empty; TCP sees a link of C − X.
            let residual = c - x_udp;
            UdpMetrics {
                udp_loss: 0.0,
                tcp_throughput: residual,
                tcp_rate: rate_at_share(alpha, residual, c),
            }
        }
        Discipline::Lqf => {
            let residual = c - x_udp;
            let tcp_rate = if residual > 0.0 {
                residual / 2.0 * (1.0 + (1.0 + 8.0 * alpha / (residual * residual)).sqrt())
            } else {
                (2.0 * alpha).sqrt()
            };
            let udp_loss = c * x_udp / (x_udp + tcp_rate);
            UdpMetrics {
                udp_loss,
                tcp_throughput: c - (x_udp - udp_loss),
                tcp_rate,
            }
        }
        Discipline::Fq => {
            let udp_loss = (x_udp - c / 2.0).max(0.0);
            let tcp_throughput = c - x_udp + udp_loss;
            UdpMetrics {
                udp_loss,
                tcp_throughput,
                tcp_rate: rate_at_share(alpha, tcp_throughput, c),
            }
        }
    })
}

/// Closed-form summary for a scenario, dispatching on its flow mix.
pub fn analyze(scenario: &Scenario) -> Result<SteadyStateSummary, AnalyticError> {
    let c = scenario.capacity();
    let b = scenario.buffer_pkts();
    let flows = scenario.flows();
    let tcp: Vec<f64> = flows
        .iter()
        .filter_map(|f| f.propagation_rtt())
        .map(|r| 1.0 / (r * r))
        .collect();
    let udp: Vec<(usize, f64)> = flows
        .iter()
        .enumerate()
        .filter_map(|(i, f)| f.udp_rate().map(|r| (i, r)))
        .collect();

    let mut summary = if udp.is_empty() {
        match (scenario.discipline(), tcp.len()) {
            (Discipline::Sqf, 2) => sqf_steady(tcp[0], tcp[1], c, b)?.0,
            (_, 1) => {
                // A lone flow is served alone whatever the discipline.
                let mut s = lqf_steady(&tcp, c, Some(b))?;
                s.discipline = scenario.discipline();
                s.notes.clear();
                s
            }
            (Discipline::Sqf, _) => sqf_nflow(&tcp, c, b)?,
            (Discipline::Lqf, _) => lqf_steady(&tcp, c, Some(b))?,
            (Discipline::Fq, _) => fq_steady(&tcp, c, Some(b))?,
        }
    } else if udp.len() == 1 && tcp.len() == 1 {
        let (udp_idx, x) = udp[0];
        let m = udp_metrics(scenario.discipline(), x, c, tcp[0])?;
        let tcp_flow = FlowSummary {
            kind: FlowKind::Tcp,
            sending_rate: m.tcp_rate,
            throughput: m.tcp_throughput,
            mean_queue: None,
            loss_rate: (m.tcp_rate - m.tcp_throughput).max(0.0),
        };
        let mut notes = Vec::new();
        if m.tcp_throughput > m.tcp_rate {
            notes.push(format!(
                "closed forms disagree for this mix: TCP throughput {:.3} exceeds its stationary sending rate {:.3} pkt/s; TCP loss shown as 0",
                m.tcp_throughput, m.tcp_rate
            ));
        }
        let udp_flow = FlowSummary {
            kind: FlowKind::Udp,
            sending_rate: x,
            throughput: x - m.udp_loss,
            mean_queue: None,
            loss_rate: m.udp_loss,
        };
        let flows = if udp_idx == 0 {
            vec![udp_flow, tcp_flow]
        } else {
            vec![tcp_flow, udp_flow]
        };
        SteadyStateSummary {
            engine: ENGINE.into(),
            discipline: scenario.discipline(),
            parameters: Parameters::from_scenario(scenario),
            utilization: flows.iter().map(|f| f.throughput).sum::<f64>() / c,
            flows,
            cycle_period: None,
            notes,
        }
    } else if tcp.is_empty() {
        // CBR sources only: whatever fits is carried.
        let offered: f64 = udp.iter().map(|(_, r)| r).sum();
        let scale = if offered > c { c / offered } else { 1.0 };
        let flows: Vec<FlowSummary> = udp
            .iter()
            .map(|&(_, r)| FlowSummary {
                kind: FlowKind::Udp,
                sending_rate: r,
                throughput: r * scale,
                mean_queue: None,
                loss_rate: r * (1.0 - scale),
            })
            .collect();
        if offered > c {
            return Err(AnalyticError::UnsupportedMix("overloaded CBR-only link".into()));
        }
        SteadyStateSummary {
            engine: ENGINE.into(),
            discipline: scenario.discipline(),
            parameters: Parameters::from_scenario(scenario),
            utilization: offered / c,
            flows,
            cycle_period: None,
            notes: Vec::new(),
        }
    } else {
        return Err(AnalyticError::UnsupportedMix(format!(
            "{} tcp and {} udp flows",
            tcp.len(),
            udp.len()
        )));
    };
    summary.parameters = Parameters::from_scenario(scenario);
    Ok(summary)
}

/// SQF with more than two TCP flows: throughput shares and cycle period only.
fn sqf_nflow(alphas: &[f64], capacity: f64, buffer: f64) -> Result<SteadyStateSummary, AnalyticError> {
    check_alphas(alphas)?;
    let rtts: Vec<f64> = alphas.iter().map(|a| 1.0 / a.sqrt()).collect();
    let x = nflow_throughputs(Discipline::Sqf, &rtts, capacity)?;
    let cycle = LimitCycle::new(alphas, capacity, buffer);
    let flows = x
        .iter()
        .map(|&x| FlowSummary {
            kind: FlowKind::Tcp,
            sending_rate: x,
            throughput: x,
            mean_queue: None,
            loss_rate: 0.0,
        })
        .collect();
    Ok(SteadyStateSummary {
        engine: ENGINE.into(),
        discipline: Discipline::Sqf,
        parameters: Parameters {
            capacity,
            buffer: Some(buffer),
            packet_bytes: None,
            alpha: alphas.iter().map(|&a| Some(a)).collect(),
        },
        flows,
        utilization: 1.0,
        cycle_period: Some(cycle.period),
        notes: vec!["no closed form for sending rates or queues beyond two flows; \
                     sending rates shown equal to throughputs"
            .into()],
    })
}

/// Flow kinds in scenario order; helper for callers that build tables.
pub fn flow_kinds(scenario: &Scenario) -> Vec<FlowKind> {
    scenario
        .flows()
        .iter()
        .map(|f| match f.source {
            Source::Tcp { .. } => FlowKind::Tcp,
            Source::Udp { .. } => FlowKind::Udp,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const C10: f64 = 1e7 / 12_000.0;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs())
    }

    #[test]
    fn sqf_symmetric() {
        let (s, cycle) = sqf_steady(900.0, 900.0, C10, 2000.0).unwrap();
        assert!(close(s.flows[0].throughput, C10 / 2.0, 1e-15));
        assert!(close(s.flows[1].throughput, C10 / 2.0, 1e-15));
        assert_eq!(s.flows[0].mean_queue, Some(1000.0));
        assert_eq!(s.flows[1].mean_queue, Some(1000.0));
        assert!(close(cycle.period, 4.0 * C10 / 900.0, 1e-15));
    }

    #[test]
    fn sqf_throughput_ratio() {
        let (s, _) = sqf_steady(2500.0, 400.0, C10, 100.0).unwrap();
        let ratio = s.flows[1].throughput / s.flows[0].throughput;
        assert!((ratio - 6.25).abs() < 1e-12);
        // B = 100 pkt cannot hold the cycle's queue excursions
        assert!(s.flows[0].mean_queue.is_none());
        assert!(!s.notes.is_empty());
    }

    #[test]
    fn sqf_cycle_state_is_consistent() {
        let (_, cycle) = sqf_steady(2500.0, 400.0, C10, 4000.0).unwrap();
        for i in 0..1000 {
            let t = cycle.period * i as f64 / 1000.0;
            let (rates, queues) = cycle.state_at(t).unwrap();
            assert!((queues[0] + queues[1] - 4000.0).abs() < 1e-9);
            assert!(queues.iter().all(|&q| (0.0..=4000.0).contains(&q)));
            assert!(rates.iter().all(|&r| r >= 0.0));
        }
        // in-service rate at the end of phase 1 is 2C
        let (rates, _) = cycle.state_at(cycle.phases[0].duration * (1.0 - 1e-12)).unwrap();
        assert!(close(rates[0], 2.0 * C10, 1e-9));
    }

    #[test]
    fn lqf_examples() {
        let s = lqf_steady(&[700.0, 700.0], C10, Some(100.0)).unwrap();
        assert!(close(s.flows[0].throughput, C10 / 2.0, 1e-15));
        let s = lqf_steady(&[2500.0, 400.0], C10, Some(100.0)).unwrap();
        let x = s.throughputs();
        assert!((x[0] / x[1] - 6.25).abs() < 1e-12);
        let a = s.sending_rates();
        assert!((a[1] - 400.0 / 2500.0 * a[0]).abs() < 1e-9);
        assert_eq!(s.flows[0].mean_queue, Some(50.0));
    }

    #[test]
    fn fq_rate_is_the_fixed_point() {
        let s = fq_steady(&[2500.0, 400.0], C10, Some(100.0)).unwrap();
        for (f, alpha) in s.flows.iter().zip([2500.0, 400.0]) {
            let a = f.sending_rate;
            // dA/dt = α/2 − (A/2)(A − C/2) = 0
            let residual = alpha / 2.0 - a / 2.0 * (a - C10 / 2.0);
            assert!(residual.abs() < 1e-9, "{residual}");
            assert_eq!(f.throughput, C10 / 2.0);
        }
        // α → 0: sending rate → C/2
        let s = fq_steady(&[1e-9, 1e-9], C10, None).unwrap();
        assert!(close(s.flows[0].sending_rate, C10 / 2.0, 1e-12));
    }

    #[test]
    fn nflow_examples() {
        let x = nflow_throughputs(Discipline::Sqf, &[0.01, 0.1, 0.2], 1.0).unwrap();
        let want = [1e-4 / 0.0501, 0.01 / 0.0501, 0.04 / 0.0501];
        for (a, b) in x.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((x[0] - 0.002).abs() < 5e-4 && (x[1] - 0.199).abs() < 1e-3 && (x[2] - 0.798).abs() < 1e-3);
        let x = nflow_throughputs(Discipline::Lqf, &[0.05; 4], 1.0).unwrap();
        assert!(x.iter().all(|&v| (v - 0.25).abs() < 1e-15));
        let x = nflow_throughputs(Discipline::Fq, &[0.01, 0.3, 0.7], 3.0).unwrap();
        assert!(x.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn udp_table() {
        let mbps = |x: f64| x * 1e6 / 12_000.0;
        let to_mbps = |x: f64| x * 12_000.0 / 1e6;
        let alpha = 2500.0;
        let m = udp_metrics(Discipline::Fq, mbps(3.0), C10, alpha).unwrap();
        assert!(to_mbps(m.udp_loss).abs() < 1e-12);
        assert!((to_mbps(m.tcp_throughput) - 7.0).abs() < 1e-9);
        let m = udp_metrics(Discipline::Fq, mbps(7.0), C10, alpha).unwrap();
        assert!((to_mbps(m.udp_loss) - 2.0).abs() < 1e-9);
        assert!((to_mbps(m.tcp_throughput) - 5.0).abs() < 1e-9);
        let m = udp_metrics(Discipline::Sqf, mbps(7.0), C10, alpha).unwrap();
        assert_eq!(m.udp_loss, 0.0);
        assert!((to_mbps(m.tcp_throughput) - 3.0).abs() < 1e-9);
        let m = udp_metrics(Discipline::Lqf, mbps(3.0), C10, alpha).unwrap();
        assert!(to_mbps(m.udp_loss) < 3.0 && to_mbps(m.udp_loss) > 2.9);
        // bounds C·X/(C + √(2α)) < L < X
        let x = mbps(3.0);
        assert!(m.udp_loss > C10 * x / (C10 + (2.0 * alpha).sqrt()));
    }

    proptest! {
        #[test]
        fn conservation_and_duality(
            r1 in 0.001f64..0.5, r2 in 0.001f64..0.5, r3 in 0.001f64..0.5,
            c in 10.0f64..1e5,
        ) {
            let rtts = [r1, r2, r3];
            for d in Discipline::ALL {
                let x = nflow_throughputs(d, &rtts, c).unwrap();
                prop_assert!((x.iter().sum::<f64>() - c).abs() <= 1e-9 * c);
            }
            // SQF with RTTs r behaves like LQF with RTTs 1/r.
            let sqf = nflow_throughputs(Discipline::Sqf, &rtts, c).unwrap();
            let inv: Vec<f64> = rtts.iter().map(|r| 1.0 / r).collect();
            let lqf = nflow_throughputs(Discipline::Lqf, &inv, c).unwrap();
            for (a, b) in sqf.iter().zip(&lqf) {
                prop_assert!((a - b).abs() <= 1e-9 * c);
            }
        }

        #[test]
        fn two_flow_summaries(
            r1 in 0.002f64..0.3, r2 in 0.002f64..0.3, c in 50.0f64..5000.0,
        ) {
            let (alpha, beta) = (1.0 / (r1 * r1), 1.0 / (r2 * r2));
            let b = 2.0 * c * c / alpha.min(beta);
            let (sqf, _) = sqf_steady(alpha, beta, c, b).unwrap();
            let lqf = lqf_steady(&[alpha, beta], c, Some(b)).unwrap();
            let fq = fq_steady(&[alpha, beta], c, Some(b)).unwrap();
            for s in [&sqf, &lqf, &fq] {
                let total: f64 = s.throughputs().iter().sum();
                prop_assert!((total - c).abs() <= 1e-9 * c);
                for f in &s.flows {
                    prop_assert!(f.sending_rate >= f.throughput);
                    if let Some(q) = f.mean_queue {
                        prop_assert!((0.0..=b).contains(&q));
                    }
                }
            }
            for f in &sqf.flows {
                prop_assert!(f.sending_rate > f.throughput);
            }
            let q: f64 = sqf.flows.iter().map(|f| f.mean_queue.unwrap()).sum();
            prop_assert!((q - b).abs() <= 1e-12 * b);
        }
    }
}
