//! Error function family.
//!
//! `erf` uses the all-positive series e^{-x²} Σ (2x²)^n x / (2n+1)!! below
//! |x| = 2.5 (no cancellation), and the Laplace continued fraction for erfc
//! above it. `erfcx` is the scaled complement e^{x²} erfc(x), which the decay
//! formulas need far beyond the range where e^{x²} is representable.

use std::f64::consts::PI;

const SERIES_LIMIT: f64 = 2.5;

fn two_over_sqrt_pi() -> f64 {
    2.0 / PI.sqrt()
}

/// e^{x²}·erf(x)·√π/2 / x expanded as Σ (2x²)^n / (2n+1)!!, times the prefactor.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term.abs() <= sum.abs() * 1e-17 {
            break;
        }
    }
    two_over_sqrt_pi() * (-x2).exp() * sum
}

/// e^{x²} erfc(x) for x ≥ SERIES_LIMIT via the continued fraction
/// erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + …)))).
fn erfcx_continued_fraction(x: f64) -> f64 {
    // Modified Lentz on b0 + a1/(b1 + a2/(b2 + ...)) with b = x, a_n = n/2.
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for n in 1..500 {
        let a = n as f64 / 2.0;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / (PI.sqrt() * f)
}

pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.abs() < SERIES_LIMIT {
        erf_series(x)
    } else {
        let tail = (-x * x).exp() * erfcx_continued_fraction(x.abs());
        (1.0 - tail).copysign(x)
    }
}

pub fn erfc(x: f64) -> f64 {
    if x < SERIES_LIMIT {
        if x <= -SERIES_LIMIT {
            2.0 - (-x * x).exp() * erfcx_continued_fraction(-x)
        } else {
            1.0 - erf_series(x)
        }
    } else {
        (-x * x).exp() * erfcx_continued_fraction(x)
    }
}

/// Scaled complementary error function e^{x²} erfc(x).
pub fn erfcx(x: f64) -> f64 {
    if x >= SERIES_LIMIT {
        erfcx_continued_fraction(x)
    } else if x >= 0.0 {
        (x * x).exp() * (1.0 - erf_series(x))
    } else {
        // erfc(x) = 2 - erfc(-x)
        2.0 * (x * x).exp() - erfcx(-x)
    }
}

/// ln(a + b) from ln a and ln b.
pub(crate) fn log_add_exp(la: f64, lb: f64) -> f64 {
    if la == f64::NEG_INFINITY {
        return lb;
    }
    if lb == f64::NEG_INFINITY {
        return la;
    }
    let (hi, lo) = if la > lb { (la, lb) } else { (lb, la) };
    hi + (lo - hi).exp().ln_1p()
}

/// ln(e^{z1²}(erf(z1) − erf(z0))) for z0 ≤ z1, finite for arguments where
/// neither e^{z1²} nor the erf difference is representable.
pub(crate) fn log_scaled_erf_diff(z0: f64, z1: f64) -> f64 {
    debug_assert!(z0 <= z1);
    if z1 == z0 {
        return f64::NEG_INFINITY;
    }
    if z1 <= 0.0 {
        // erf z1 − erf z0 = erfc(−z1) − erfc(−z0), with w1 = −z1 ≤ w0 = −z0.
        let (w1, w0) = (-z1, -z0);
        let v = erfcx(w1) - erfcx(w0) * (w1 * w1 - w0 * w0).exp();
        v.ln()
    } else if z0 >= 0.0 {
        // erfc(z0) − erfc(z1) = e^{-z0²} erfcx(z0) − e^{-z1²} erfcx(z1).
        let shift = z1 * z1 - z0 * z0;
        let first = erfcx(z0).ln() + shift;
        let second = erfcx(z1).ln();
        // first ≥ second; ln(e^first − e^second)
        first + (-(second - first).exp()).ln_1p()
    } else {
        z1 * z1 + (erf(z1) - erf(z0)).ln()
    }
}
