//! Rate decay of a flow that is out of service and absorbing every loss.
//!
//! While one flow is served with a linearly growing rate b + slope·t and the
//! other holds the longest queue of a full buffer, the losing flow obeys
//!
//! ```text
//! dA/dt = −κ·A·(A + b + slope·t − C),   A(0) = a
//! ```
//!
//! with κ = 1/2 for the fluid source equation. The Bernoulli substitution
//! u = 1/A gives the closed form
//!
//! ```text
//! A(t) = a·e^{−Φ(t)} / (1 + κ·a·∫₀ᵗ e^{−Φ}),   Φ(t) = κ((b − C)t + slope·t²/2)
//! ```
//!
//! whose integral is a difference of error functions scaled by
//! e^{κ(b−C)²/(2·slope)}. That factor overflows for any realistic link, so
//! everything here is evaluated in log space.

use std::f64::consts::PI;

use super::special::{erf, log_add_exp, log_scaled_erf_diff};

/// Loss-reaction gain of the fluid source equation: dA/dt ⊃ −(A/2)·L.
pub const LOSS_GAIN: f64 = 0.5;

/// ln of the multiplicative decay A(t)/a.
pub fn log_decay_factor(a: f64, b: f64, t: f64, slope: f64, capacity: f64, gain: f64) -> f64 {
    debug_assert!(a >= 0.0 && t >= 0.0 && slope > 0.0 && gain > 0.0);
    let s = (gain / (2.0 * slope)).sqrt();
    let z0 = s * (b - capacity);
    let z1 = s * (slope * t + b - capacity);
    let phi = gain * ((b - capacity) * t + 0.5 * slope * t * t);
    let log_integral_term = if a > 0.0 && t > 0.0 {
        (gain * a).ln() + 0.5 * (PI / (2.0 * gain * slope)).ln() + log_scaled_erf_diff(z0, z1)
    } else {
        f64::NEG_INFINITY
    };
    -log_add_exp(phi, log_integral_term)
}

/// A(t) for the lossy phase.
pub fn decay_rate(a: f64, b: f64, t: f64, slope: f64, capacity: f64, gain: f64) -> f64 {
    a * log_decay_factor(a, b, t, slope, capacity, gain).exp()
}

/// f(a, b, t): 2√β·a·f(a, b, t) is the rate of the losing flow while the
/// other flow ramps with slope β from rate b.
pub fn f_decay(a: f64, b: f64, t: f64, beta: f64, capacity: f64) -> f64 {
    log_decay_factor(a, b, t, beta, capacity, LOSS_GAIN).exp() / (2.0 * beta.sqrt())
}

/// g(a, b, t): f with the roles of the two slopes exchanged.
pub fn g_decay(a: f64, b: f64, t: f64, alpha: f64, capacity: f64) -> f64 {
    f_decay(a, b, t, alpha, capacity)
}

/// ln ∫₀ᵀ A(t) dt over a lossy phase of length `t`: (1/κ)·ln(1 + κ·a·∫e^{−Φ}).
pub fn log_phase_volume_arg(a: f64, b: f64, t: f64, slope: f64, capacity: f64, gain: f64) -> f64 {
    let s = (gain / (2.0 * slope)).sqrt();
    let z0 = s * (b - capacity);
    let z1 = s * (slope * t + b - capacity);
    // ln(κ·a·∫e^{−Φ}) = ln(κa) + κ(b−C)²/(2 slope) + ½ln(π/(2κ slope)) + ln(erf z1 − erf z0)
    let log_erf_diff = log_scaled_erf_diff(z0, z1) - z1 * z1;
    (gain * a).ln() + z0 * z0 + 0.5 * (PI / (2.0 * gain * slope)).ln() + log_erf_diff
}

/// ∫₀ᵀ A(t) dt for the lossy phase.
pub fn phase_volume(a: f64, b: f64, t: f64, slope: f64, capacity: f64, gain: f64) -> f64 {
    if a <= 0.0 || t <= 0.0 {
        return 0.0;
    }
    let x = log_phase_volume_arg(a, b, t, slope, capacity, gain);
    // ln(1 + e^x)
    let log1p_exp = if x > 35.0 { x + (-x).exp() } else { x.exp().ln_1p() };
    log1p_exp / gain
}

/// ln K, with K = 1/(1 + κ·C·∫₀^{2C/β} e^{−Φ}) for b = 0, the per-phase
/// contraction bound of the phase-start rates. For κ = 1 this is
/// 2√β / (2√β + 2C·e^{C²/2β}·√(2π)·Erf(C/√(2β))).
pub fn log_contraction_constant(beta: f64, capacity: f64, gain: f64) -> f64 {
    let t = 2.0 * capacity / beta;
    let x = log_phase_volume_arg(capacity, 0.0, t, beta, capacity, gain);
    let log1p_exp = if x > 35.0 { x + (-x).exp() } else { x.exp().ln_1p() };
    -log1p_exp
}

/// The unit-gain contraction constant evaluated directly. Only finite while
/// C²/(2β) stays well inside the exponent range.
pub fn printed_contraction_constant(beta: f64, capacity: f64) -> f64 {
    let sb = beta.sqrt();
    2.0 * sb
        / (2.0 * sb
            + 2.0
                * capacity
                * (capacity * capacity / (2.0 * beta)).exp()
                * (2.0 * PI).sqrt()
                * erf(capacity / (2.0 * beta).sqrt()))
}
