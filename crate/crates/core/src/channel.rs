//! Deterministic path gains and the pointing-error fading model.
//!
//! The composite amplitude gain of the link is `h = h_p · h_a · h_m`:
//! Friis spreading `h_p`, molecular absorption `h_a` (see [`crate::atmosphere`])
//! and the random misalignment gain `h_m`. The receiver collects a Gaussian
//! beam through a circular aperture; the radial beam-centre offset `r` is
//! Rayleigh distributed, which turns `h_m(r) = A0 exp(-2r²/w_eq²)` into a
//! power-law variable on `(0, A0]` with exponent `γ² - 1`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::atmosphere::{self, AtmosphericConditions};
use crate::error::{domain, Result};
use crate::special::erf;
use crate::SPEED_OF_LIGHT;

// ---------------------------------------------------------------------------
// Link description
// ---------------------------------------------------------------------------

/// How the jitter value of a [`LinkConfig`] maps to the per-axis displacement
/// standard deviation `σ_r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JitterInterpretation {
    /// Jitter is a variance in m²; `σ_r = sqrt(jitter)`.
    #[default]
    Variance,
    /// Jitter is a standard deviation in m.
    StdDev,
}

impl JitterInterpretation {
    pub fn sigma_r(self, jitter_value: f64) -> f64 {
        match self {
            JitterInterpretation::Variance => jitter_value.sqrt(),
            JitterInterpretation::StdDev => jitter_value,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            JitterInterpretation::Variance => "variance",
            JitterInterpretation::StdDev => "std_dev",
        }
    }
}

impl std::str::FromStr for JitterInterpretation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "variance" => Ok(Self::Variance),
            "std_dev" | "stddev" => Ok(Self::StdDev),
            other => Err(format!("expected `variance` or `std_dev`, got `{other}`")),
        }
    }
}

/// Full description of a point-to-point link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkConfig {
    /// Carrier frequency, Hz.
    pub frequency: f64,
    /// Transmit antenna gain, dBi.
    pub gain_tx: f64,
    /// Receive antenna gain, dBi.
    pub gain_rx: f64,
    /// Transmitter-receiver separation, m.
    pub distance: f64,
    /// Receiver aperture radius `a`, m.
    pub aperture_radius: f64,
    /// Beam footprint radius `w_d` at the receiver, m.
    pub beam_waist: f64,
    pub jitter_value: f64,
    pub jitter_interpretation: JitterInterpretation,
    pub conditions: AtmosphericConditions,
}

impl Default for LinkConfig {
    /// 300 GHz, 55 dBi at both ends, 50 m, a = 10 cm, w_d = 60 cm,
    /// jitter variance 0.01 m², 296 K / 101325 Pa / 50 %.
    fn default() -> Self {
        Self {
            frequency: 300e9,
            gain_tx: 55.0,
            gain_rx: 55.0,
            distance: 50.0,
            aperture_radius: 0.1,
            beam_waist: 0.6,
            jitter_value: 0.01,
            jitter_interpretation: JitterInterpretation::Variance,
            conditions: AtmosphericConditions::standard(),
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<()> {
        const OP: &str = "LinkConfig";
        for (name, v) in [
            ("frequency", self.frequency),
            ("distance", self.distance),
            ("aperture_radius", self.aperture_radius),
            ("beam_waist", self.beam_waist),
            ("jitter", self.jitter_value),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return domain(OP, format!("{name} = {v} must be positive and finite"));
            }
        }
        for (name, v) in [("gain_tx", self.gain_tx), ("gain_rx", self.gain_rx)] {
            if !v.is_finite() {
                return domain(OP, format!("{name} = {v} must be finite"));
            }
        }
        if self.aperture_radius >= self.beam_waist {
            return domain(
                OP,
                format!(
                    "aperture_radius {} m must be smaller than beam_waist {} m",
                    self.aperture_radius, self.beam_waist
                ),
            );
        }
        self.conditions.validate()
    }

    pub fn sigma_r(&self) -> f64 {
        self.jitter_interpretation.sigma_r(self.jitter_value)
    }

    pub fn misalignment(&self) -> Result<MisalignmentModel> {
        build_misalignment_model(
            self.aperture_radius,
            self.beam_waist,
            self.jitter_value,
            self.jitter_interpretation,
        )
    }
}

// ---------------------------------------------------------------------------
// Free-space spreading
// ---------------------------------------------------------------------------

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Friis amplitude gain `c sqrt(G_tx G_rx) / (4π d f)` with gains in dBi.
pub fn fspl_gain(frequency: f64, gain_tx: f64, gain_rx: f64, distance: f64) -> Result<f64> {
    const OP: &str = "fspl_gain";
    if !(frequency > 0.0) || !frequency.is_finite() {
        return domain(OP, format!("frequency {frequency} Hz must be positive"));
    }
    if !(distance > 0.0) || !distance.is_finite() {
        return domain(OP, format!("distance {distance} m must be positive"));
    }
    let g = (db_to_linear(gain_tx) * db_to_linear(gain_rx)).sqrt();
    Ok(SPEED_OF_LIGHT * g / (4.0 * PI * distance * frequency))
}

// ---------------------------------------------------------------------------
// Misalignment
// ---------------------------------------------------------------------------

/// Derived parameters of the pointing-error fading distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MisalignmentModel {
    pub u: f64,
    /// Equivalent beam width, m.
    pub w_eq: f64,
    /// Fraction of power collected with zero pointing error, `erf(u)²`.
    pub a0: f64,
    /// `w_eq / (2 σ_r)`; infinite when `σ_r = 0`.
    pub gamma: f64,
    /// Per-axis displacement standard deviation, m.
    pub sigma_r: f64,
}

pub fn build_misalignment_model(
    aperture_radius: f64,
    beam_waist: f64,
    jitter_value: f64,
    interpretation: JitterInterpretation,
) -> Result<MisalignmentModel> {
    const OP: &str = "build_misalignment_model";
    if !(aperture_radius > 0.0) || !(beam_waist > 0.0) || !beam_waist.is_finite() {
        return domain(OP, "aperture_radius and beam_waist must be positive");
    }
    if aperture_radius >= beam_waist {
        return domain(
            OP,
            format!("aperture_radius {aperture_radius} m must be below beam_waist {beam_waist} m"),
        );
    }
    if !(jitter_value > 0.0) || !jitter_value.is_finite() {
        return domain(OP, format!("jitter {jitter_value} must be positive"));
    }
    let u = PI.sqrt() * aperture_radius / (std::f64::consts::SQRT_2 * beam_waist);
    let erf_u = erf(u);
    let w_eq = beam_waist * (PI.sqrt() * erf_u / (2.0 * u * (-u * u).exp())).sqrt();
    let model = MisalignmentModel {
        u,
        w_eq,
        a0: erf_u * erf_u,
        gamma: 0.0,
        sigma_r: 0.0,
    };
    Ok(model.with_sigma_r(interpretation.sigma_r(jitter_value)))
}

impl MisalignmentModel {
    /// Same beam geometry with a different displacement standard deviation.
    pub fn with_sigma_r(self, sigma_r: f64) -> Self {
        Self {
            gamma: self.w_eq / (2.0 * sigma_r),
            sigma_r,
            ..self
        }
    }

    /// Power-law exponent plus one, `γ²`.
    pub fn shape(&self) -> f64 {
        self.gamma * self.gamma
    }

    /// `E[h_m] = A0 γ² / (γ² + 1)`.
    pub fn mean_gain(&self) -> f64 {
        let g2 = self.shape();
        if g2.is_infinite() {
            self.a0
        } else {
            self.a0 * g2 / (g2 + 1.0)
        }
    }

    /// `P(h_m ≤ x) = (x / A0)^{γ²}` on `[0, A0]`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= self.a0 {
            1.0
        } else {
            (x / self.a0).powf(self.shape())
        }
    }
}

/// Misalignment amplitude gain at radial offset `r` (m).
pub fn misalignment_gain(r: f64, model: &MisalignmentModel) -> Result<f64> {
    if !(r >= 0.0) {
        return domain(
            "misalignment_gain",
            format!("radial offset {r} m must be >= 0"),
        );
    }
    Ok(model.a0 * (-2.0 * r * r / (model.w_eq * model.w_eq)).exp())
}

/// Density of `h_m`: `γ²/A0^{γ²} · x^{γ²-1}` on `(0, A0]`, zero elsewhere.
pub fn misalignment_pdf(x: f64, model: &MisalignmentModel) -> f64 {
    if x <= 0.0 || x > model.a0 {
        return 0.0;
    }
    let g2 = model.shape();
    (g2.ln() - g2 * model.a0.ln() + (g2 - 1.0) * x.ln()).exp()
}

/// Rayleigh-distributed radial pointing error with per-axis deviation `sigma_r`,
/// drawn by inverse transform: `r = σ_r sqrt(-2 ln U)`, `U ~ (0, 1]`.
pub fn sample_pointing_error<R: Rng + ?Sized>(rng: &mut R, sigma_r: f64) -> f64 {
    let u: f64 = 1.0 - rng.random::<f64>();
    if sigma_r == 0.0 {
        return 0.0;
    }
    sigma_r * (-2.0 * u.ln()).sqrt()
}

// ---------------------------------------------------------------------------
// Deterministic gains
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeterministicGains {
    pub h_p: f64,
    pub h_a: f64,
    pub product: f64,
}

impl DeterministicGains {
    pub fn new(h_p: f64, h_a: f64) -> Self {
        Self {
            h_p,
            h_a,
            product: h_p * h_a,
        }
    }
}

pub fn deterministic_gains(config: &LinkConfig) -> Result<DeterministicGains> {
    config.validate()?;
    let h_p = fspl_gain(
        config.frequency,
        config.gain_tx,
        config.gain_rx,
        config.distance,
    )?;
    let h_a = atmosphere::absorption_gain(config.frequency, &config.conditions, config.distance)?;
    Ok(DeterministicGains::new(h_p, h_a))
}
