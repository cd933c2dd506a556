//! Circularly-shifted chirps with index modulation (CSC-IM): a DFT-spread
//! OFDM waveform that carries data in the choice and phase of superposed
//! chirps while serving as a radar probe.
//!
//! Module map:
//! - [`chirp`]: chirp Fourier coefficients, spectral shaping, synthesis,
//!   PMEPR, occupied bandwidth and complementary pairs.
//! - [`index_codec`]: counting/ranking of index sets under a cyclic
//!   minimum separation and the bit mapping.
//! - [`modem`]: transmitter, LMMSE equalizer, detectors, union bound.
//! - [`channel`]: AWGN, Rician multipath and the radar channel.
//! - [`radar`]: matched-filter and LMMSE-based range estimation, Fisher
//!   information and Cramér–Rao bounds.
//! - [`harness`]: configuration, presets and reproducible Monte Carlo runs.

pub mod channel;
pub mod chirp;
pub mod dsp;
pub mod error;
pub mod harness;
pub mod index_codec;
pub mod modem;
pub mod radar;
pub mod special;

pub use error::{Error, Result};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
