//! Line-of-sight THz link simulator.
//!
//! The crate models a point-to-point link whose amplitude gain is the product
//! of Friis spreading, water-vapour absorption and a random pointing-error
//! loss, and evaluates the average symbol error rate of coherent BPSK and
//! QPSK over it three ways: closed-form Chernoff bounds, direct numerical
//! quadrature, and Monte Carlo simulation.
//!
//! ```
//! use thzsim::channel::{deterministic_gains, LinkConfig};
//! use thzsim::ser::{avg_ser_bpsk_closed, ser_params};
//!
//! let link = LinkConfig::default(); // 300 GHz, 50 m, 55 dBi antennas
//! let gains = deterministic_gains(&link).unwrap();
//! let model = link.misalignment().unwrap();
//! let params = ser_params(1e4, &gains, &model); // 40 dB average SNR
//! let ser = avg_ser_bpsk_closed(&params).unwrap();
//! assert!(ser.value > 1e-3 && ser.value < 1e-2);
//! ```

// `!(x > 0.0)` is the NaN-rejecting form used for input checks throughout
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod atmosphere;
pub mod channel;
pub mod config;
pub mod error;
pub mod experiments;
pub mod montecarlo;
pub mod output;
pub mod quadrature;
pub mod ser;
pub mod special;
pub mod stats;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
