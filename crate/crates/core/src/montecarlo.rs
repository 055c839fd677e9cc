//! Monte Carlo estimation of the average SER.
//!
//! Two estimators share the same pointing-error sampler:
//!
//! * **symbol level**: transmit random PSK symbols through `y = h s + n` with
//!   unit-variance complex AWGN, `E_s = ρ̄`, and count ML detection errors;
//! * **semi-analytic**: average the exact conditional SER over sampled
//!   misalignment gains (no noise samples).
//!
//! Trials are cut into fixed-size chunks. Chunk `k` draws from a ChaCha8
//! stream seeded with the run seed and positioned on stream `k`, so results
//! do not depend on how many rayon workers execute the chunks. Chunk results
//! are reduced sequentially in chunk order.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    misalignment_gain, sample_pointing_error, DeterministicGains, MisalignmentModel,
};
use crate::error::{domain, Result};
use crate::ser::{
    avg_ser_quadrature, instantaneous_ser, instantaneous_snr, ModulationScheme, QMode,
};
use crate::stats::{binomial_half_width, wilson_interval, z_for_confidence, RunningMoments};

/// Below this many observed errors the Wilson interval replaces the normal one.
const WILSON_BELOW_ERRORS: u64 = 30;
/// Symbol-level runs expecting fewer errors than this carry a warning.
const MIN_EXPECTED_ERRORS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McMode {
    SymbolLevel,
    SemiAnalytic,
}

impl McMode {
    pub fn as_str(self) -> &'static str {
        match self {
            McMode::SymbolLevel => "symbol_level",
            McMode::SemiAnalytic => "semi_analytic",
        }
    }
}

impl std::str::FromStr for McMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "symbol_level" | "symbol" => Ok(Self::SymbolLevel),
            "semi_analytic" | "semi" => Ok(Self::SemiAnalytic),
            other => Err(format!(
                "unknown mode `{other}` (expected symbol_level or semi_analytic)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McConfig {
    pub mode: McMode,
    /// Symbols (symbol level) or channel draws (semi-analytic).
    pub num_trials: u64,
    pub seed: u64,
    pub chunk_size: u64,
    pub confidence_level: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            mode: McMode::SemiAnalytic,
            num_trials: 1_000_000,
            seed: 2024,
            chunk_size: 1 << 16,
            confidence_level: 0.95,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        const OP: &str = "McConfig";
        if self.num_trials == 0 {
            return domain(OP, "num_trials must be at least 1");
        }
        if self.chunk_size == 0 {
            return domain(OP, "chunk_size must be at least 1");
        }
        if !(self.confidence_level > 0.0 && self.confidence_level < 1.0) {
            return domain(
                OP,
                format!(
                    "confidence_level {} must lie in (0, 1)",
                    self.confidence_level
                ),
            );
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub ser: f64,
    pub half_width: f64,
    pub num_trials: u64,
    /// Symbol errors; only counted at symbol level.
    pub num_errors: Option<u64>,
    pub mode: McMode,
    pub seed: u64,
    /// Set when a symbol-level run expects fewer than 10 errors.
    pub low_count_warning: bool,
}

/// Random stream for chunk `index` of a run seeded with `seed`.
pub fn chunk_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Deterministic 64-bit mix (SplitMix64 finaliser) for deriving sub-seeds.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn chunk_bounds(config: &McConfig) -> Vec<(u64, u64)> {
    let n_chunks = config.num_trials.div_ceil(config.chunk_size);
    (0..n_chunks)
        .map(|k| {
            let len = config
                .chunk_size
                .min(config.num_trials - k * config.chunk_size);
            (k, len)
        })
        .collect()
}

/// One symbol through the channel; returns whether ML detection erred.
fn symbol_error<R: Rng>(rng: &mut R, scheme: ModulationScheme, h: f64, es_sqrt: f64) -> bool {
    // complex AWGN with unit total variance: each component N(0, 1/2)
    let noise_re: f64 = rng.sample::<f64, _>(StandardNormal) * std::f64::consts::FRAC_1_SQRT_2;
    let noise_im: f64 = rng.sample::<f64, _>(StandardNormal) * std::f64::consts::FRAC_1_SQRT_2;
    match scheme {
        ModulationScheme::Bpsk => {
            let bit: bool = rng.random();
            let s = if bit { es_sqrt } else { -es_sqrt };
            let y_re = h * s + noise_re;
            // y_im carries only noise; the nearest point is decided by sign(Re y)
            (y_re >= 0.0) != bit
        }
        ModulationScheme::Qpsk => {
            let bits: u8 = rng.random::<u8>() & 0b11;
            let amp = es_sqrt * std::f64::consts::FRAC_1_SQRT_2;
            let i_bit = bits & 1 == 1;
            let q_bit = bits & 2 == 2;
            let s_re = if i_bit { amp } else { -amp };
            let s_im = if q_bit { amp } else { -amp };
            let y_re = h * s_re + noise_re;
            let y_im = h * s_im + noise_im;
            (y_re >= 0.0) != i_bit || (y_im >= 0.0) != q_bit
        }
    }
}

fn draw_gain<R: Rng>(rng: &mut R, model: &MisalignmentModel) -> f64 {
    let r = sample_pointing_error(rng, model.sigma_r);
    misalignment_gain(r, model).expect("Rayleigh samples are non-negative")
}

/// Estimate the average SER by simulation.
pub fn run_mc(
    config: &McConfig,
    scheme: ModulationScheme,
    avg_snr: f64,
    gains: &DeterministicGains,
    model: &MisalignmentModel,
) -> Result<McEstimate> {
    config.validate()?;
    if !(avg_snr > 0.0) || avg_snr.is_nan() {
        return domain("run_mc", format!("average SNR {avg_snr} must be positive"));
    }
    let z = z_for_confidence(config.confidence_level);
    let chunks = chunk_bounds(config);
    let product = gains.product;

    match config.mode {
        McMode::SymbolLevel => {
            let es_sqrt = avg_snr.sqrt();
            let counts: Vec<u64> = chunks
                .par_iter()
                .map(|&(k, len)| {
                    let mut rng = chunk_rng(config.seed, k);
                    let mut errors = 0u64;
                    for _ in 0..len {
                        let h = product * draw_gain(&mut rng, model);
                        errors += symbol_error(&mut rng, scheme, h, es_sqrt) as u64;
                    }
                    errors
                })
                .collect();
            let errors: u64 = counts.iter().sum();
            let n = config.num_trials;
            let ser = errors as f64 / n as f64;
            let half_width = if errors < WILSON_BELOW_ERRORS {
                let (lo, hi) = wilson_interval(errors, n, z);
                (ser - lo).max(hi - ser)
            } else {
                binomial_half_width(errors, n, z)
            };
            let expected = expected_ser(scheme, avg_snr, gains, model) * n as f64;
            Ok(McEstimate {
                ser,
                half_width,
                num_trials: n,
                num_errors: Some(errors),
                mode: config.mode,
                seed: config.seed,
                low_count_warning: expected < MIN_EXPECTED_ERRORS,
            })
        }
        McMode::SemiAnalytic => {
            let parts: Vec<RunningMoments> = chunks
                .par_iter()
                .map(|&(k, len)| {
                    let mut rng = chunk_rng(config.seed, k);
                    let mut m = RunningMoments::default();
                    for _ in 0..len {
                        let h = product * draw_gain(&mut rng, model);
                        m.push(instantaneous_ser(scheme, instantaneous_snr(avg_snr, h)));
                    }
                    m
                })
                .collect();
            let mut total = RunningMoments::default();
            for p in &parts {
                total.merge(p);
            }
            Ok(McEstimate {
                ser: total.mean,
                half_width: z * total.std_error(),
                num_trials: total.count,
                num_errors: None,
                mode: config.mode,
                seed: config.seed,
                low_count_warning: false,
            })
        }
    }
}

/// Model SER used to size symbol-level runs: exact quadrature, or the
/// conditional SER directly when the misalignment is degenerate.
fn expected_ser(
    scheme: ModulationScheme,
    avg_snr: f64,
    gains: &DeterministicGains,
    model: &MisalignmentModel,
) -> f64 {
    if model.sigma_r == 0.0 || !model.gamma.is_finite() {
        return instantaneous_ser(scheme, instantaneous_snr(avg_snr, gains.product * model.a0));
    }
    avg_ser_quadrature(scheme, avg_snr, gains, model, QMode::Exact)
        .map(|v| v.value)
        .unwrap_or(0.0)
}

/// Run `f` on a dedicated rayon pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool")
        .install(f)
}
