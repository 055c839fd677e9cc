//! Symbol error rate of coherent BPSK/QPSK over the misaligned THz channel.
//!
//! The average SER is the conditional AWGN error probability averaged over the
//! power-law density of the misalignment gain. Replacing `Q(x)` by its
//! Chernoff bound `½ exp(-x²/2)` and substituting `t = A (h_m/A0)²` turns the
//! average into a lower incomplete gamma with shape `B = γ²/2` evaluated at
//! `A = ρ̄ A0² (h_p h_a)²`:
//!
//! ```text
//! BPSK: B / (2 A^B) · γ(B, A)
//! QPSK: 2^B B / A^B · γ(B, A/2) − B / (4 A^B) · γ(B, A)
//! ```
//!
//! Both are upper bounds on the exact averages. [`avg_ser_quadrature`]
//! integrates the averaging integral directly, with either the true `Q` or
//! the Chernoff bound, and serves as the oracle for the closed forms.
//!
//! Every average is carried as a natural log alongside its linear value so
//! that large `B` (A^B overflows) and high SNR (SER underflows) stay exact.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::channel::{misalignment_pdf, DeterministicGains, MisalignmentModel};
use crate::error::{domain, Result};
use crate::quadrature::{integrate, QuadOptions};
use crate::special::{self, ln_lower_incomplete_gamma, ln_sub_exp, LN_HALF};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModulationScheme {
    Bpsk,
    Qpsk,
}

impl ModulationScheme {
    pub const ALL: [ModulationScheme; 2] = [ModulationScheme::Bpsk, ModulationScheme::Qpsk];

    pub fn as_str(self) -> &'static str {
        match self {
            ModulationScheme::Bpsk => "bpsk",
            ModulationScheme::Qpsk => "qpsk",
        }
    }
}

impl std::fmt::Display for ModulationScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModulationScheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Self::Bpsk),
            "qpsk" => Ok(Self::Qpsk),
            other => Err(format!(
                "unknown modulation `{other}` (expected bpsk or qpsk)"
            )),
        }
    }
}

/// How the Gaussian tail is evaluated inside the averaging integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QMode {
    /// True `Q` from `erfc`: the exact model average.
    Exact,
    /// `½ exp(-x²/2)`: reproduces the closed forms.
    Chernoff,
}

/// The `(A, B)` pair feeding both closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SerParams {
    pub a_param: f64,
    pub b_param: f64,
}

impl SerParams {
    pub fn new(a_param: f64, b_param: f64) -> Result<Self> {
        let p = Self { a_param, b_param };
        p.validate("SerParams")?;
        Ok(p)
    }

    fn validate(&self, op: &'static str) -> Result<()> {
        if !(self.a_param > 0.0) || !self.a_param.is_finite() {
            return domain(
                op,
                format!("A = {} must be positive and finite", self.a_param),
            );
        }
        if !(self.b_param > 0.0) || !self.b_param.is_finite() {
            return domain(
                op,
                format!("B = {} must be positive and finite", self.b_param),
            );
        }
        Ok(())
    }
}

/// A probability together with its natural logarithm.
///
/// `value` flushes to zero below the `f64` range; `ln_value` does not.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SerValue {
    pub value: f64,
    pub ln_value: f64,
}

impl SerValue {
    pub fn from_ln(ln_value: f64) -> Self {
        Self {
            value: ln_value.exp(),
            ln_value,
        }
    }
}

// ---------------------------------------------------------------------------
// Instantaneous quantities
// ---------------------------------------------------------------------------

/// `|h|² ρ̄`.
pub fn instantaneous_snr(avg_snr: f64, channel_gain: f64) -> f64 {
    channel_gain * channel_gain * avg_snr
}

/// Conditional SER of coherent detection at linear SNR `snr`.
pub fn instantaneous_ser(scheme: ModulationScheme, snr: f64) -> f64 {
    match scheme {
        ModulationScheme::Bpsk => special::q_function((2.0 * snr).sqrt()),
        ModulationScheme::Qpsk => {
            let q = special::q_function(snr.sqrt());
            q * (2.0 - q)
        }
    }
}

/// `ln` of the conditional SER, with the tail taken from `q_mode`.
pub fn ln_conditional_ser(scheme: ModulationScheme, snr: f64, q_mode: QMode) -> f64 {
    let ln_q = |x: f64| match q_mode {
        QMode::Exact => special::ln_q(x),
        QMode::Chernoff => LN_HALF - 0.5 * x * x,
    };
    match scheme {
        ModulationScheme::Bpsk => ln_q((2.0 * snr).sqrt()),
        ModulationScheme::Qpsk => {
            // 1 - (1 - q)² = q (2 - q)
            let lq = ln_q(snr.sqrt());
            lq + (2.0 - lq.exp()).ln()
        }
    }
}

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

/// `A = ρ̄ A0² (h_p h_a)²`, `B = γ²/2`. Not validated: `ρ̄ = 0` yields `A = 0`.
pub fn ser_params(
    avg_snr: f64,
    gains: &DeterministicGains,
    model: &MisalignmentModel,
) -> SerParams {
    SerParams {
        a_param: avg_snr * model.a0 * model.a0 * gains.product * gains.product,
        b_param: 0.5 * model.shape(),
    }
}

/// Chernoff-bound average BPSK SER, `B/(2A^B) γ(B, A)`.
pub fn avg_ser_bpsk_closed(params: &SerParams) -> Result<SerValue> {
    params.validate("avg_ser_bpsk_closed")?;
    let SerParams {
        a_param: a,
        b_param: b,
    } = *params;
    let ln = b.ln() - LN_2 - b * a.ln() + ln_lower_incomplete_gamma(b, a)?;
    Ok(SerValue::from_ln(ln.min(0.0)))
}

/// Chernoff-bound average QPSK SER,
/// `2^B B/A^B γ(B, A/2) − B/(4A^B) γ(B, A)`, clamped to `[0, 1]`.
pub fn avg_ser_qpsk_closed(params: &SerParams) -> Result<SerValue> {
    params.validate("avg_ser_qpsk_closed")?;
    let SerParams {
        a_param: a,
        b_param: b,
    } = *params;
    let common = b.ln() - b * a.ln();
    let first = b * LN_2 + common + ln_lower_incomplete_gamma(b, 0.5 * a)?;
    let second = common - 2.0 * LN_2 + ln_lower_incomplete_gamma(b, a)?;
    Ok(SerValue::from_ln(ln_sub_exp(first, second).min(0.0)))
}

pub fn avg_ser_closed(scheme: ModulationScheme, params: &SerParams) -> Result<SerValue> {
    match scheme {
        ModulationScheme::Bpsk => avg_ser_bpsk_closed(params),
        ModulationScheme::Qpsk => avg_ser_qpsk_closed(params),
    }
}

// ---------------------------------------------------------------------------
// Quadrature oracles
// ---------------------------------------------------------------------------

const QUAD_ABS_TOL: f64 = 1e-12;
const QUAD_REL_TOL: f64 = 1e-11;
const QUAD_MAX_INTERVALS: usize = 50_000;

/// Points in `(0, 1]` of the normalised gain `y = h_m/A0` around which the
/// integrand `y^{2B-1} exp(-c A y²)` concentrates, for `c ∈ {½, 1}`.
fn peak_breakpoints(a: f64, b: f64) -> Vec<f64> {
    let mut pts = Vec::new();
    for c in [0.5, 1.0] {
        let ca = c * a;
        let width = 0.5 / ca.sqrt();
        let peak = if b > 0.5 {
            ((2.0 * b - 1.0) / (2.0 * ca)).sqrt()
        } else {
            0.0
        };
        for k in [-16.0, -8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0, 16.0] {
            pts.push(peak + k * width);
        }
        // geometric ladder toward zero keeps the low-gain tail resolved
        let top = if peak > 0.0 { peak } else { width };
        let mut p = top;
        for _ in 0..12 {
            p *= 0.25;
            pts.push(p);
        }
    }
    pts.retain(|&p| p > 0.0 && p < 1.0 && p.is_finite());
    pts
}

/// Integrate `exp(ln_f)` over `[0, upper]` in the log domain. The integrand is
/// rescaled by its largest sampled value before integration.
fn log_domain_integral<F: Fn(f64) -> f64>(ln_f: F, upper: f64, breakpoints: &[f64]) -> Result<f64> {
    let probe = breakpoints
        .iter()
        .copied()
        .chain((1..=256).map(|i| upper * i as f64 / 256.0));
    let scale = probe
        .map(&ln_f)
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if scale == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let opts = QuadOptions {
        // absolute tolerance expressed in probability units, then rescaled
        abs_tol: (QUAD_ABS_TOL * (-scale).exp()).min(1e-13),
        rel_tol: QUAD_REL_TOL,
        max_intervals: QUAD_MAX_INTERVALS,
    };
    let r = integrate(
        |x| {
            let v = ln_f(x) - scale;
            if v.is_nan() {
                0.0
            } else {
                v.exp()
            }
        },
        0.0,
        upper,
        breakpoints,
        opts,
    )?;
    Ok(scale + r.value.ln())
}

/// Average SER by direct quadrature of the conditional SER against the
/// misalignment density over `(0, A0]`.
pub fn avg_ser_quadrature(
    scheme: ModulationScheme,
    avg_snr: f64,
    gains: &DeterministicGains,
    model: &MisalignmentModel,
    q_mode: QMode,
) -> Result<SerValue> {
    const OP: &str = "avg_ser_quadrature";
    if !(avg_snr > 0.0) || !avg_snr.is_finite() {
        return domain(OP, format!("average SNR {avg_snr} must be positive"));
    }
    if !model.gamma.is_finite() || !(model.gamma > 0.0) {
        return domain(OP, "misalignment model needs a finite positive gamma");
    }
    let params = ser_params(avg_snr, gains, model);
    let a0 = model.a0;
    let breakpoints: Vec<f64> = peak_breakpoints(params.a_param, params.b_param)
        .into_iter()
        .map(|y| y * a0)
        .collect();
    let ln_f = |x: f64| {
        let pdf = misalignment_pdf(x, model);
        if pdf <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let snr = instantaneous_snr(avg_snr, gains.product * x);
        pdf.ln() + ln_conditional_ser(scheme, snr, q_mode)
    };
    Ok(SerValue::from_ln(
        log_domain_integral(ln_f, a0, &breakpoints)?.min(0.0),
    ))
}

/// Same average expressed directly in `(A, B)`: the normalised gain
/// `y = h_m/A0` has density `2B y^{2B-1}` on `(0, 1]` and conditional SNR `A y²`.
pub fn avg_ser_quadrature_params(
    scheme: ModulationScheme,
    params: &SerParams,
    q_mode: QMode,
) -> Result<SerValue> {
    params.validate("avg_ser_quadrature_params")?;
    let SerParams {
        a_param: a,
        b_param: b,
    } = *params;
    let shape = 2.0 * b;
    let ln_shape = shape.ln();
    let ln_f = |y: f64| {
        if y <= 0.0 {
            return f64::NEG_INFINITY;
        }
        ln_shape + (shape - 1.0) * y.ln() + ln_conditional_ser(scheme, a * y * y, q_mode)
    };
    let bps = peak_breakpoints(a, b);
    Ok(SerValue::from_ln(
        log_domain_integral(ln_f, 1.0, &bps)?.min(0.0),
    ))
}
