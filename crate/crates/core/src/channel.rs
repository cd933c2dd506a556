//! Propagation models: AWGN, Rician multipath for the communication link,
//! and the monostatic radar channel with its range-dependent carrier phase.

use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// One point reflector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    /// Range in meters.
    pub range: f64,
    /// Real reflection coefficient (sign included).
    pub alpha: f64,
}

impl Target {
    /// Round-trip delay `2d/c`.
    pub fn delay(&self) -> f64 {
        2.0 * self.range / SPEED_OF_LIGHT
    }
}

/// Targets seen by the radar receiver plus the waveform timing needed to
/// form their frequency response.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarScene {
    targets: Vec<Target>,
    pub carrier: f64,
    pub symbol_duration: f64,
    pub cp_duration: f64,
}

impl RadarScene {
    /// Targets are sorted by range; every delay must fit in the cyclic prefix.
    pub fn new(mut targets: Vec<Target>, carrier: f64, symbol_duration: f64, cp_duration: f64) -> Result<Self> {
        for t in &targets {
            if !(t.range > 0.0) {
                return Err(Error::InvalidConfig(format!("target range {} must be positive", t.range)));
            }
            if t.alpha == 0.0 {
                return Err(Error::InvalidConfig("reflection coefficient must be nonzero".into()));
            }
            if t.delay() > cp_duration {
                return Err(Error::InvalidConfig(format!(
                    "target at {} m is beyond the unambiguous range {} m",
                    t.range,
                    cp_duration * SPEED_OF_LIGHT / 2.0
                )));
            }
        }
        targets.sort_by(|a, b| a.range.total_cmp(&b.range));
        Ok(Self { targets, carrier, symbol_duration, cp_duration })
    }

    pub fn targets(&self) -> &[Target] {
        &self.targets
    }

    pub fn max_range(&self) -> f64 {
        self.cp_duration * SPEED_OF_LIGHT / 2.0
    }
}

/// Delay steering vector `c(τ)_k = e^{−j2π(f_c + k/T_s)τ}` for
/// `k = lower..lower+m`.
pub fn delay_vector(tau: f64, carrier: f64, symbol_duration: f64, lower: i64, m: usize) -> Vec<Complex64> {
    let carrier_phase = Complex64::from_polar(1.0, -2.0 * PI * carrier * tau);
    let step = Complex64::from_polar(1.0, -2.0 * PI * tau / symbol_duration);
    let mut cur = carrier_phase * Complex64::from_polar(1.0, -2.0 * PI * lower as f64 * tau / symbol_duration);
    let mut out = Vec::with_capacity(m);
    for q in 0..m {
        // Re-anchor periodically so rounding in the recurrence cannot build up.
        if q % 64 == 0 {
            let k = lower + q as i64;
            cur = carrier_phase * Complex64::from_polar(1.0, -2.0 * PI * k as f64 * tau / symbol_duration);
        }
        out.push(cur);
        cur *= step;
    }
    out
}

/// Radar frequency response `H_k = Σ_s α_s e^{−j2πf_cτ_s} e^{−j2πkτ_s/T_s}`.
pub fn radar_cfr(scene: &RadarScene, lower: i64, m: usize) -> Vec<Complex64> {
    let mut h = vec![Complex64::new(0.0, 0.0); m];
    for t in scene.targets() {
        let c = delay_vector(t.delay(), scene.carrier, scene.symbol_duration, lower, m);
        for (hk, ck) in h.iter_mut().zip(c) {
            *hk += t.alpha * ck;
        }
    }
    h
}

/// One tap of a power-delay profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdpTap {
    pub delay_ns: f64,
    pub power_db: f64,
    /// Rician K factor (linear); 0 is Rayleigh.
    pub rician_k: f64,
}

/// How the line-of-sight phase of Rician taps is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "value")]
pub enum LosPhase {
    /// Drawn uniformly on `[0, 2π)` per realization.
    Uniform,
    /// Fixed phase in radians.
    Fixed(f64),
}

/// A realized multipath channel.
#[derive(Debug, Clone, PartialEq)]
pub struct CommChannel {
    /// `(delay in seconds, complex gain)` per tap.
    pub taps: Vec<(f64, Complex64)>,
}

impl CommChannel {
    /// Single unit tap at zero delay.
    pub fn identity() -> Self {
        Self { taps: vec![(0.0, Complex64::new(1.0, 0.0))] }
    }

    /// Frequency response at bins `lower..lower+m`, with exact fractional
    /// delays `e^{−j2πkτ/T_s}`.
    pub fn cfr(&self, lower: i64, m: usize, symbol_duration: f64) -> Vec<Complex64> {
        (0..m as i64)
            .map(|q| {
                let k = (lower + q) as f64;
                self.taps
                    .iter()
                    .map(|&(tau, a)| a * Complex64::from_polar(1.0, -2.0 * PI * k * tau / symbol_duration))
                    .sum()
            })
            .collect()
    }

    /// Applies the channel in time to a frame with a cyclic prefix. Delays
    /// must be whole samples and no longer than the prefix.
    pub fn convolve(&self, samples: &[Complex64], sample_rate: f64, n_cp: usize) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); samples.len()];
        for &(tau, a) in &self.taps {
            let lag = tau * sample_rate;
            let d = lag.round();
            if (lag - d).abs() > 1e-9 || d < 0.0 || d as usize > n_cp {
                return Err(Error::InvalidArgument(format!(
                    "tap delay of {lag} samples must be a whole number within the prefix"
                )));
            }
            let d = d as usize;
            for i in d..samples.len() {
                out[i] += a * samples[i - d];
            }
        }
        Ok(out)
    }
}

/// Normalizes the profile to unit total power and draws one realization:
/// `√P·(√(K/(K+1))·e^{jθ} + √(1/(K+1))·CN(0,1))` per tap.
pub fn rician_realize<R: Rng + ?Sized>(pdp: &[PdpTap], los: LosPhase, rng: &mut R) -> Result<CommChannel> {
    if pdp.is_empty() {
        return Err(Error::InvalidConfig("power-delay profile has no taps".into()));
    }
    if let Some(t) = pdp.iter().find(|t| !(t.rician_k >= 0.0) || t.delay_ns < 0.0) {
        return Err(Error::InvalidConfig(format!("invalid tap {t:?}")));
    }
    let lin: Vec<f64> = pdp.iter().map(|t| 10f64.powf(t.power_db / 10.0)).collect();
    let total: f64 = lin.iter().sum();
    let taps = pdp
        .iter()
        .zip(&lin)
        .map(|(t, p)| {
            let p = p / total;
            let k = t.rician_k;
            let theta = match los {
                LosPhase::Uniform => rng.random::<f64>() * 2.0 * PI,
                LosPhase::Fixed(v) => v,
            };
            let los_part = if k.is_infinite() {
                Complex64::from_polar(1.0, theta)
            } else {
                Complex64::from_polar((k / (k + 1.0)).sqrt(), theta)
            };
            let diffuse_scale = if k.is_infinite() { 0.0 } else { (1.0 / (k + 1.0)).sqrt() };
            let g = los_part + complex_gaussian(rng) * diffuse_scale;
            (t.delay_ns * 1e-9, g * p.sqrt())
        })
        .collect();
    Ok(CommChannel { taps })
}

/// Circular complex Gaussian with unit variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Adds i.i.d. circular complex Gaussian noise of variance `noise_var`.
pub fn add_awgn<R: Rng + ?Sized>(x: &mut [Complex64], noise_var: f64, rng: &mut R) -> Result<()> {
    if !(noise_var >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise variance {noise_var} < 0")));
    }
    if noise_var == 0.0 {
        return Ok(());
    }
    let s = noise_var.sqrt();
    for v in x.iter_mut() {
        *v += complex_gaussian(rng) * s;
    }
    Ok(())
}
