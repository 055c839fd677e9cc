//! Special functions: error function, Gaussian tail, incomplete gamma.
//!
//! `erf`/`erfc`/`ln Γ` come from `libm`. The lower incomplete gamma is
//! evaluated in the log domain so that shapes in the hundreds or thousands
//! (large pointing-error ratios) neither overflow nor underflow before the
//! final exponentiation.

use std::f64::consts::{LN_2, PI};

use crate::error::{domain, Result};

pub use libm::{erf, erfc};

/// `ln Γ(s)` for `s > 0`.
pub fn ln_gamma(s: f64) -> f64 {
    libm::lgamma(s)
}

const MAX_ITER: usize = 100_000;
const EPS: f64 = 1e-16;
/// Smallest representable magnitude used to guard Lentz's method.
const TINY: f64 = 1e-300;

/// Above this argument `ln_q` switches from `erfc` to a continued fraction.
const Q_TAIL_SWITCH: f64 = 30.0;

/// Standard Gaussian tail probability `Q(x) = P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// `ln Q(x)`, accurate far into the tail where `Q` itself underflows.
pub fn ln_q(x: f64) -> f64 {
    if x < Q_TAIL_SWITCH {
        q_function(x).ln()
    } else {
        ln_q_tail(x)
    }
}

/// `Q(x) = φ(x) / (x + 1/(x + 2/(x + 3/(x + ...))))`, for large `x`.
fn ln_q_tail(x: f64) -> f64 {
    let mut tail = x;
    for n in (1..=40).rev() {
        tail = x + n as f64 / tail;
    }
    -0.5 * x * x - 0.5 * (2.0 * PI).ln() - tail.ln()
}

/// Lower incomplete gamma `γ(s, x) = ∫₀ˣ t^{s-1} e^{-t} dt`.
pub fn lower_incomplete_gamma(s: f64, x: f64) -> Result<f64> {
    Ok(ln_lower_incomplete_gamma(s, x)?.exp())
}

/// Regularized lower incomplete gamma `P(s, x) = γ(s, x) / Γ(s)`.
pub fn regularized_lower_gamma(s: f64, x: f64) -> Result<f64> {
    Ok((ln_lower_incomplete_gamma(s, x)? - ln_gamma(s))
        .exp()
        .min(1.0))
}

/// `ln γ(s, x)`; returns `-inf` at `x = 0`.
///
/// Series expansion for `x < s + 1`, Lentz continued fraction for the upper
/// function otherwise, with `γ = Γ(s) (1 - Q)` taken through `ln_1p`.
pub fn ln_lower_incomplete_gamma(s: f64, x: f64) -> Result<f64> {
    const OP: &str = "lower_incomplete_gamma";
    if !(s > 0.0) || !s.is_finite() {
        return domain(OP, format!("shape {s} must be positive and finite"));
    }
    if !(x >= 0.0) || x.is_nan() {
        return domain(OP, format!("argument {x} must be non-negative"));
    }
    if x == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if x.is_infinite() {
        return Ok(ln_gamma(s));
    }
    if x < s + 1.0 {
        Ok(s * x.ln() - x + ln_series_sum(s, x))
    } else {
        let ln_upper = ln_upper_continued_fraction(s, x);
        let ln_gamma_s = ln_gamma(s);
        let upper_frac = (ln_upper - ln_gamma_s).exp();
        Ok(ln_gamma_s + (-upper_frac).ln_1p())
    }
}

/// `ln Σ_{n≥0} x^n / (s (s+1) ... (s+n))`.
fn ln_series_sum(s: f64, x: f64) -> f64 {
    let mut term = 1.0 / s;
    let mut sum = term;
    let mut denom = s;
    for _ in 0..MAX_ITER {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term < sum * EPS {
            break;
        }
    }
    sum.ln()
}

/// `ln Γ(s, x)` for `x ≥ s + 1` by the modified Lentz method.
fn ln_upper_continued_fraction(s: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - s;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    s * x.ln() - x + h.ln()
}

/// `ln(e^a - e^b)` for `a ≥ b`; `-inf` when the difference is not positive.
pub(crate) fn ln_sub_exp(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    if !(a > b) {
        return f64::NEG_INFINITY;
    }
    a + (-(b - a).exp()).ln_1p()
}

pub(crate) const LN_HALF: f64 = -LN_2;
