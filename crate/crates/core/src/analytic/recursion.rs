//! Phase-start rates of the SQF transient and their contraction to zero.
//!
//! ε_i and γ_i are the rates of flows 1 and 2 when their i-th service phase
//! begins. Each is the previous value pushed through one lossy phase, so they
//! shrink by at least the factor K per cycle.

use serde::Serialize;

use super::decay::{log_contraction_constant, log_decay_factor, LOSS_GAIN};
use super::special::log_add_exp;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonRecursion {
    /// ε_1..ε_n.
    pub eps: Vec<f64>,
    /// ln ε_i; stays finite after ε_i underflows.
    pub log_eps: Vec<f64>,
    pub log_gamma: Vec<f64>,
    /// ln of ε_1K^{i−1} + Σ_{j=1}^{i−1} (2C)^{i−j} K^j.
    pub log_envelope: Vec<f64>,
    pub k: f64,
    pub log_k: f64,
}

impl EpsilonRecursion {
    /// Whether every iterate is below its envelope (up to rounding).
    pub fn within_envelope(&self) -> bool {
        self.log_eps
            .iter()
            .zip(&self.log_envelope)
            .all(|(e, env)| *e <= env + 1e-9)
    }
}

/// Time for a phase started at rate `prev` to bring its queue back to B/2.
fn meeting_time(slope: f64, prev: f64, capacity: f64) -> f64 {
    // The radicand goes negative once the previous phase-start rate exceeds
    // C²/2·slope; the phase then lasts the minimum C/slope.
    let radicand = (1.0 - 2.0 * slope * prev / (capacity * capacity)).max(0.0);
    capacity / slope * (1.0 + radicand.sqrt())
}

/// Iterates the ε/γ recursion `n` times starting from ε_1 = γ_1 = `eps1`
/// (and ε_0 = γ_0 = 0).
pub fn epsilon_recursion(alpha: f64, beta: f64, capacity: f64, eps1: f64, n: usize) -> EpsilonRecursion {
    assert!(n >= 1, "need at least one iterate");
    assert!(alpha > 0.0 && beta > 0.0 && capacity > 0.0 && eps1 > 0.0);
    let c = capacity;
    let log_k = log_contraction_constant(beta, c, LOSS_GAIN);

    let mut log_eps = vec![eps1.ln()];
    let mut log_gamma = vec![eps1.ln()];
    // ε_0 = γ_0 = 0
    let mut tau = meeting_time(alpha, 0.0, c);
    let mut tau_p = meeting_time(beta, 0.0, c);
    for i in 0..n - 1 {
        let (le, lg) = (log_eps[i], log_gamma[i]);
        let (e, g) = (le.exp(), lg.exp());
        let next_e = le + log_decay_factor(e + alpha * tau, g, tau_p, beta, c, LOSS_GAIN);
        let tau_next = meeting_time(alpha, e, c);
        let next_g = lg + log_decay_factor(g + beta * tau_p, e, tau_next, alpha, c, LOSS_GAIN);
        log_eps.push(next_e);
        log_gamma.push(next_g);
        tau = tau_next;
        tau_p = meeting_time(beta, g, c);
    }

    let log_2c = (2.0 * c).ln();
    let log_envelope = (1..=n)
        .map(|i| {
            let mut acc = eps1.ln() + (i - 1) as f64 * log_k;
            for j in 1..i {
                acc = log_add_exp(acc, (i - j) as f64 * log_2c + j as f64 * log_k);
            }
            acc
        })
        .collect();

    EpsilonRecursion {
        eps: log_eps.iter().map(|l| l.exp()).collect(),
        log_eps,
        log_gamma,
        log_envelope,
        k: log_k.exp(),
        log_k,
    }
}
