//! Molecular absorption by atmospheric water vapour.
//!
//! A simplified two-line absorption model valid around the 200-400 GHz
//! transmission window. The coefficient is the sum of a cubic polynomial
//! baseline `g(f)` and two Lorentzian-like water-vapour lines centred near
//! 10.835 and 12.664 cm⁻¹ (about 324.8 and 379.7 GHz). The line strengths
//! scale with the volume mixing ratio of water vapour, which in turn follows
//! from temperature, pressure and relative humidity via a Magnus-type
//! saturation-pressure formula.
//!
//! Units: frequencies in Hz, pressure in Pa at the interface (hPa internally),
//! temperature in K, coefficients in 1/m.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::SPEED_OF_LIGHT;

// ---------------------------------------------------------------------------
// Model constants
// ---------------------------------------------------------------------------

/// Saturation vapour pressure constants (Buck-type fit, result in hPa).
const Q1: f64 = 6.1121;
const Q2: f64 = 1.0007;
/// Per hPa.
const Q3: f64 = 3.46e-6;
const Q4: f64 = 17.502;
/// K
const Q5: f64 = 273.15;
/// K
const Q6: f64 = 32.18;

/// Polynomial baseline g(f) = C0 + C1 f + C2 f² + C3 f³, f in Hz.
const C0: f64 = -6.36e-3;
const C1: f64 = 9.06e-14;
const C2: f64 = -3.94e-25;
const C3: f64 = 5.54e-37;

/// Line centres in cm⁻¹.
const LINE1_CENTER: f64 = 10.835;
const LINE2_CENTER: f64 = 12.664;

/// Frequency window over which `absorption_coefficient` accepts input.
pub const MIN_FREQUENCY_HZ: f64 = 100e9;
pub const MAX_FREQUENCY_HZ: f64 = 450e9;

/// Lowest temperature accepted by [`AtmosphericConditions::new`].
pub const MIN_TEMPERATURE_K: f64 = 200.0;

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// Ambient state of the propagation medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AtmosphericConditions {
    /// Absolute temperature in K.
    pub temperature: f64,
    /// Pressure in Pa.
    pub pressure: f64,
    /// Relative humidity in percent, `[0, 100]`.
    pub relative_humidity: f64,
}

impl AtmosphericConditions {
    /// Validated constructor.
    pub fn new(temperature: f64, pressure: f64, relative_humidity: f64) -> Result<Self> {
        let c = Self {
            temperature,
            pressure,
            relative_humidity,
        };
        c.validate()?;
        Ok(c)
    }

    /// 296 K, 1 atm, 50 % relative humidity.
    pub fn standard() -> Self {
        Self {
            temperature: 296.0,
            pressure: 101_325.0,
            relative_humidity: 50.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        const OP: &str = "AtmosphericConditions";
        if !(self.temperature >= MIN_TEMPERATURE_K) || !self.temperature.is_finite() {
            return domain(
                OP,
                format!(
                    "temperature {} K must be finite and at least {MIN_TEMPERATURE_K} K",
                    self.temperature
                ),
            );
        }
        if !(self.pressure > 0.0) || !self.pressure.is_finite() {
            return domain(
                OP,
                format!("pressure {} Pa must be positive", self.pressure),
            );
        }
        if !(0.0..=100.0).contains(&self.relative_humidity) {
            return domain(
                OP,
                format!(
                    "relative humidity {} % must lie in [0, 100]",
                    self.relative_humidity
                ),
            );
        }
        Ok(())
    }
}

impl Default for AtmosphericConditions {
    fn default() -> Self {
        Self::standard()
    }
}

/// Absorption coefficient split into its baseline and line contributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbsorptionBreakdown {
    pub frequency: f64,
    /// Polynomial baseline, 1/m. May be negative below ~230 GHz.
    pub g_term: f64,
    /// First water-vapour line, 1/m.
    pub y1_term: f64,
    /// Second water-vapour line, 1/m.
    pub y2_term: f64,
    /// `g_term + y1_term + y2_term`, unclamped.
    pub coefficient: f64,
    pub mixing_ratio: f64,
    /// Set when `coefficient` is negative (a fit artefact); the effective
    /// coefficient is then clamped to zero.
    pub clamped: bool,
}

impl AbsorptionBreakdown {
    /// Coefficient used for attenuation: `max(coefficient, 0)`.
    pub fn effective_coefficient(&self) -> f64 {
        if self.clamped {
            0.0
        } else {
            self.coefficient
        }
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Saturated water vapour partial pressure in hPa.
///
/// `temperature` in K, `pressure` in Pa. The pressure enters only through the
/// small enhancement factor `Q2 + Q3·p_h`.
pub fn saturated_water_vapor_pressure(temperature: f64, pressure: f64) -> Result<f64> {
    const OP: &str = "saturated_water_vapor_pressure";
    if !(temperature > Q6) || !temperature.is_finite() {
        return domain(
            OP,
            format!("temperature {temperature} K must exceed {Q6} K"),
        );
    }
    if !(pressure > 0.0) || !pressure.is_finite() {
        return domain(OP, format!("pressure {pressure} Pa must be positive"));
    }
    let p_h = pressure / 100.0;
    Ok(Q1 * (Q2 + Q3 * p_h) * (Q4 * (temperature - Q5) / (temperature - Q6)).exp())
}

/// Volume mixing ratio of water vapour (dimensionless).
pub fn volume_mixing_ratio(conditions: &AtmosphericConditions) -> Result<f64> {
    conditions.validate()?;
    let p_w = saturated_water_vapor_pressure(conditions.temperature, conditions.pressure)?;
    let p_h = conditions.pressure / 100.0;
    Ok(conditions.relative_humidity / 100.0 * p_w / p_h)
}

/// Wavenumber in cm⁻¹ for a frequency in Hz.
pub fn wavenumber_per_cm(frequency: f64) -> f64 {
    frequency / (100.0 * SPEED_OF_LIGHT)
}

fn baseline(f: f64) -> f64 {
    C0 + C1 * f + C2 * f * f + C3 * f * f * f
}

fn line1(nu: f64, k: f64) -> f64 {
    let width = 0.4093 * nu + 0.0925;
    let detune = k - LINE1_CENTER;
    0.2205 * nu * (0.1303 * nu + 0.0294) / (width * width + detune * detune)
}

fn line2(nu: f64, k: f64) -> f64 {
    let width = 0.537 * nu + 0.0956;
    let detune = k - LINE2_CENTER;
    2.014 * nu * (0.1702 * nu + 0.0303) / (width * width + detune * detune)
}

/// Molecular absorption coefficient at `frequency` (Hz) with its components.
pub fn absorption_coefficient(
    frequency: f64,
    conditions: &AtmosphericConditions,
) -> Result<AbsorptionBreakdown> {
    if !(MIN_FREQUENCY_HZ..=MAX_FREQUENCY_HZ).contains(&frequency) {
        return domain(
            "absorption_coefficient",
            format!("frequency {frequency} Hz outside [{MIN_FREQUENCY_HZ}, {MAX_FREQUENCY_HZ}] Hz"),
        );
    }
    let nu = volume_mixing_ratio(conditions)?;
    let k = wavenumber_per_cm(frequency);
    let g_term = baseline(frequency);
    let y1_term = line1(nu, k);
    let y2_term = line2(nu, k);
    let coefficient = g_term + y1_term + y2_term;
    Ok(AbsorptionBreakdown {
        frequency,
        g_term,
        y1_term,
        y2_term,
        coefficient,
        mixing_ratio: nu,
        clamped: coefficient < 0.0,
    })
}

/// Amplitude gain `exp(-k_a d / 2)` over `distance` metres.
pub fn absorption_gain(
    frequency: f64,
    conditions: &AtmosphericConditions,
    distance: f64,
) -> Result<f64> {
    if !(distance >= 0.0) || !distance.is_finite() {
        return domain(
            "absorption_gain",
            format!("distance {distance} m must be finite and non-negative"),
        );
    }
    let breakdown = absorption_coefficient(frequency, conditions)?;
    Ok(gain_from_coefficient(
        breakdown.effective_coefficient(),
        distance,
    ))
}

pub(crate) fn gain_from_coefficient(coefficient: f64, distance: f64) -> f64 {
    (-0.5 * coefficient * distance).exp()
}
