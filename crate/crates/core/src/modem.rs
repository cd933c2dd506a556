//! CSC-IM transmitter and receiver, with DFT-s-OFDM-IM (flat shaping) and
//! OFDM-IM (no spreading) as degenerate configurations.

use crate::chirp::{self, ChirpSpec, FdssProfile, FrameSignal, Framing};
use crate::error::{Error, Result};
use crate::index_codec::{BitCapacity, IndexWord, WordCodec};
use crate::special::q_function;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Waveform family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Scheme {
    /// DFT-spread symbols shaped by a chirp's Fourier coefficients.
    CscIm(ChirpSpec),
    /// DFT-spread symbols without shaping.
    DftSOfdmIm,
    /// Symbols placed directly on subcarriers.
    OfdmIm,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::CscIm(_) => "csc-im",
            Scheme::DftSOfdmIm => "dft-s-ofdm-im",
            Scheme::OfdmIm => "ofdm-im",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModemConfig {
    pub scheme: Scheme,
    /// Lowest occupied bin `L_d`.
    pub lower: i64,
    /// Number of chirps / occupied bins.
    pub m: usize,
    pub framing: Framing,
    /// Active chirps per frame.
    pub l: usize,
    /// PSK order.
    pub h: usize,
    /// Minimum cyclic gap between active indices.
    pub delta: usize,
}

impl ModemConfig {
    pub fn new(scheme: Scheme, lower: i64, m: usize, framing: Framing, l: usize, h: usize, delta: usize) -> Result<Self> {
        if let Scheme::CscIm(spec) = scheme {
            if spec.l_d != lower || spec.m() != m {
                return Err(Error::InvalidConfig(format!(
                    "chirp band {}..={} disagrees with the modem band of {m} bins from {lower}",
                    spec.l_d, spec.l_u
                )));
            }
        }
        if l == 0 || l > m / 2 {
            return Err(Error::InvalidConfig(format!("need 1 <= L <= M/2, got L={l}, M={m}")));
        }
        if framing.n <= m {
            return Err(Error::InvalidConfig(format!("IDFT size {} must exceed M = {m}", framing.n)));
        }
        let cfg = Self { scheme, lower, m, framing, l, h, delta };
        let count = crate::index_codec::index_count(l, delta, m);
        if count < 2u32.into() {
            return Err(Error::InvalidConfig(format!(
                "M={m}, L={l}, delta={delta} admits fewer than two index sets"
            )));
        }
        crate::index_codec::bit_capacity(m, l, h, delta)?;
        Ok(cfg)
    }

    /// Energy per active chirp, `M/L`.
    pub fn symbol_energy(&self) -> f64 {
        self.m as f64 / self.l as f64
    }

    pub fn fdss(&self) -> FdssProfile {
        match self.scheme {
            Scheme::CscIm(spec) => spec.fdss(),
            _ => FdssProfile::flat(self.lower, self.m),
        }
    }

    /// Signal bandwidth used for the radar grid: the chirp sweep `D/T_s`,
    /// or the full occupied band `M/T_s` for unshaped schemes.
    pub fn bandwidth(&self) -> f64 {
        match self.scheme {
            Scheme::CscIm(spec) if spec.d > 0.0 => spec.bandwidth(),
            _ => self.m as f64 / self.framing.symbol_duration(),
        }
    }
}

/// Equalized time-domain symbols and the predicted post-equalization SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualizedSymbols {
    pub y: Vec<Complex64>,
    pub snr_post: f64,
}

/// Post-equalization SNR `β/(1−β)` with `β = (1/M)Σ p_k/(p_k+σ²)`, where
/// `p_k` is the effective per-bin gain `|H_k g_k|²`.
pub fn snr_post(gains: &[f64], noise_var: f64) -> f64 {
    if noise_var == 0.0 {
        return f64::INFINITY;
    }
    let beta = gains.iter().map(|p| p / (p + noise_var)).sum::<f64>() / gains.len() as f64;
    beta / (1.0 - beta)
}

/// Single-tap LMMSE equalization per bin followed by the M-point IDFT
/// `(1/√M) Σ_k e_k b_k e^{j2πkl/M}`.
pub fn equalize_lmmse(b: &[Complex64], h_c: &[Complex64], fdss: &FdssProfile, noise_var: f64) -> Result<EqualizedSymbols> {
    equalize_with(b, h_c, fdss, noise_var, &*FftPlanner::new().plan_fft_inverse(fdss.m()))
}

fn equalize_with(
    b: &[Complex64],
    h_c: &[Complex64],
    fdss: &FdssProfile,
    noise_var: f64,
    ifft: &dyn Fft<f64>,
) -> Result<EqualizedSymbols> {
    let m = fdss.m();
    for v in [b.len(), h_c.len()] {
        if v != m {
            return Err(Error::LengthMismatch { expected: m, actual: v });
        }
    }
    if !(noise_var >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise variance {noise_var} < 0")));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    let mut gains = Vec::with_capacity(m);
    for (q, ((bk, hk), gk)) in b.iter().zip(h_c).zip(fdss.g()).enumerate() {
        let eff = hk * gk;
        let p = eff.norm_sqr();
        gains.push(p);
        let den = p + noise_var;
        let e = if den > 0.0 { eff.conj() / den } else { Complex64::new(0.0, 0.0) };
        let k = fdss.lower() + q as i64;
        buf[k.rem_euclid(m as i64) as usize] = e * bk;
    }
    ifft.process(&mut buf);
    let s = 1.0 / (m as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= s);
    Ok(EqualizedSymbols { y: buf, snr_post: snr_post(&gains, noise_var) })
}

/// Best PSK integer for one bin and its metric; ties go to the lowest `z`.
fn best_symbol(h: usize, metric: impl Fn(Complex64) -> f64) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, 0);
    for z in 0..h {
        let v = metric(Complex64::from_polar(1.0, -2.0 * PI * z as f64 / h as f64));
        if v > best.0 {
            best = (v, z);
        }
    }
    best
}

/// Greedy selection of `l` bins from per-bin `(metric, symbol)` pairs such
/// that every two picks are at cyclic distance `≥ Δ+1`. Ties go to the
/// lowest bin. Returns indices in ascending order with their symbols.
pub fn select_greedy(per_bin: &[(f64, usize)], l: usize, delta: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    let m = per_bin.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| per_bin[b].0.total_cmp(&per_bin[a].0).then(a.cmp(&b)));
    let mut picks: Vec<usize> = Vec::with_capacity(l);
    for i in order {
        if picks.len() == l {
            break;
        }
        let ok = picks.iter().all(|&p| {
            let d = i.abs_diff(p);
            d.min(m - d) > delta
        });
        if ok {
            picks.push(i);
        }
    }
    if picks.len() < l {
        return Err(Error::DetectionInfeasible { found: picks.len(), wanted: l });
    }
    picks.sort_unstable();
    let symbols = picks.iter().map(|&i| per_bin[i].1).collect();
    Ok((picks, symbols))
}

/// Per-bin metrics `max_z Re{y_l e^{−j2πz/H}}`.
pub fn psk_metrics(y: &[Complex64], h: usize) -> Vec<(f64, usize)> {
    y.iter().map(|&v| best_symbol(h, |rot| (v * rot).re)).collect()
}

/// Maximum-likelihood detection without separation: the `l` bins with the
/// largest PSK-matched metric.
pub fn ml_detect(y: &EqualizedSymbols, l: usize, h: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    select_greedy(&psk_metrics(&y.y, h), l, 0)
}

/// Greedy detection under the separation constraint.
pub fn ml_detect_is(y: &EqualizedSymbols, l: usize, h: usize, delta: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    select_greedy(&psk_metrics(&y.y, h), l, delta)
}

/// Per-subcarrier ML metrics for OFDM-IM: the log-likelihood gain of
/// "active with symbol z" over "inactive",
/// `2√E_s Re{H* b e^{−j2πz/H}} − |H|² E_s`.
pub fn ofdm_im_metrics(b: &[Complex64], h_c: &[Complex64], h: usize, es: f64) -> Vec<(f64, usize)> {
    let amp = es.sqrt();
    b.iter()
        .zip(h_c)
        .map(|(bk, hk)| {
            let r = hk.conj() * bk;
            let (v, z) = best_symbol(h, |rot| (r * rot).re);
            (2.0 * amp * v - hk.norm_sqr() * es, z)
        })
        .collect()
}

fn psk_error(h: usize, d_psk: f64, n0: f64) -> f64 {
    match h {
        1 => 0.0,
        2 => q_function(d_psk / (2.0 * n0).sqrt()),
        _ => 2.0 * q_function(d_psk / (2.0 * n0).sqrt()),
    }
}

/// Union bound on the block error probability of index modulation with
/// `l` of `m` active bins, `h`-PSK and symbol energy `es` at noise level
/// `n0`; clipped to `[0, 1]`.
pub fn union_bound_bler(m: usize, l: usize, h: usize, es: f64, n0: f64) -> Result<f64> {
    if !(n0 > 0.0) {
        return Err(Error::InvalidArgument(format!("N0 = {n0} must be positive")));
    }
    let d_ind = (2.0 * es).sqrt();
    let d_psk = 2.0 * es.sqrt() * (PI / h as f64).sin();
    // 1 − (1 − q)^L without cancellation for tiny q.
    let any = |q: f64| -(l as f64 * (-q.min(1.0)).ln_1p()).exp_m1();
    let p_ind = any(q_function(d_ind / (2.0 * n0).sqrt()));
    let p_psk = any(psk_error(h, d_psk, n0));
    let p = (m - l) as f64 * h as f64 * p_ind + l as f64 * p_psk;
    Ok(p.clamp(0.0, 1.0))
}

/// Stateful transmitter/receiver for one configuration.
#[derive(Clone)]
pub struct Modem {
    cfg: ModemConfig,
    words: WordCodec,
    fdss: FdssProfile,
    fft_m: Arc<dyn Fft<f64>>,
    fft_n: Arc<dyn Fft<f64>>,
    ifft_m: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Modem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Modem").field("cfg", &self.cfg).finish_non_exhaustive()
    }
}

/// Outcome of detecting one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub word: IndexWord,
    /// Post-equalization SNR (infinite when noiseless; NaN for OFDM-IM).
    pub snr_post: f64,
}

impl Modem {
    pub fn new(cfg: ModemConfig) -> Result<Self> {
        let words = WordCodec::new(cfg.m, cfg.l, cfg.h, cfg.delta)?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            fdss: cfg.fdss(),
            fft_m: planner.plan_fft_forward(cfg.m),
            fft_n: planner.plan_fft_forward(cfg.framing.n),
            ifft_m: planner.plan_fft_inverse(cfg.m),
            cfg,
            words,
        })
    }

    pub fn config(&self) -> &ModemConfig {
        &self.cfg
    }

    pub fn capacity(&self) -> BitCapacity {
        self.words.capacity()
    }

    pub fn word_codec(&self) -> &WordCodec {
        &self.words
    }

    pub fn fdss(&self) -> &FdssProfile {
        &self.fdss
    }

    /// `d_{i_ℓ} = √E_s e^{j2πh_ℓ/H}`, zero elsewhere.
    pub fn symbols(&self, word: &IndexWord) -> Vec<Complex64> {
        let amp = self.cfg.symbol_energy().sqrt();
        let mut d = vec![Complex64::new(0.0, 0.0); self.cfg.m];
        for (&i, &z) in word.indices.iter().zip(&word.symbols) {
            d[i] = Complex64::from_polar(amp, 2.0 * PI * z as f64 / self.cfg.h as f64);
        }
        d
    }

    pub fn encode(&self, bits: &[bool]) -> Result<(IndexWord, Vec<Complex64>)> {
        let word = self.words.bits_to_word(bits)?;
        let d = self.symbols(&word);
        Ok((word, d))
    }

    /// Transmitted frequency-domain bins `w_k` for `k = L_d..=L_u`.
    pub fn tx_bins(&self, d: &[Complex64]) -> Vec<Complex64> {
        match self.cfg.scheme {
            Scheme::OfdmIm => d.to_vec(),
            _ => {
                let m = self.cfg.m;
                let mut buf = d.to_vec();
                self.fft_m.process(&mut buf);
                let s = 1.0 / (m as f64).sqrt();
                (0..m as i64)
                    .zip(self.fdss.g())
                    .map(|(q, g)| buf[(self.cfg.lower + q).rem_euclid(m as i64) as usize] * s * g)
                    .collect()
            }
        }
    }

    pub fn tx_word(&self, word: &IndexWord) -> Result<FrameSignal> {
        chirp::synthesize_bins(&self.tx_bins(&self.symbols(word)), self.cfg.lower, &self.cfg.framing)
    }

    pub fn tx_frame(&self, bits: &[bool]) -> Result<FrameSignal> {
        let (_, d) = self.encode(bits)?;
        chirp::synthesize_bins(&self.tx_bins(&d), self.cfg.lower, &self.cfg.framing)
    }

    /// Strips the prefix and returns the occupied bins, scaled so that a
    /// noiseless loopback reproduces [`Modem::tx_bins`]. White time-domain
    /// noise of variance `v` maps to per-bin variance `v/N`.
    pub fn rx_bins(&self, samples: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.cfg.framing.n;
        let expected = n + self.cfg.framing.n_cp;
        if samples.len() != expected {
            return Err(Error::LengthMismatch { expected, actual: samples.len() });
        }
        let mut body = samples[self.cfg.framing.n_cp..].to_vec();
        self.fft_n.process(&mut body);
        Ok((0..self.cfg.m as i64)
            .map(|q| body[(self.cfg.lower + q).rem_euclid(n as i64) as usize] / n as f64)
            .collect())
    }

    /// Detects the index word from received bins `b = H_c·w + n`.
    pub fn detect(&self, b: &[Complex64], h_c: &[Complex64], noise_var: f64) -> Result<Detection> {
        let (per_bin, snr) = match self.cfg.scheme {
            Scheme::OfdmIm => {
                for v in [b.len(), h_c.len()] {
                    if v != self.cfg.m {
                        return Err(Error::LengthMismatch { expected: self.cfg.m, actual: v });
                    }
                }
                (ofdm_im_metrics(b, h_c, self.cfg.h, self.cfg.symbol_energy()), f64::NAN)
            }
            _ => {
                let eq = equalize_with(b, h_c, &self.fdss, noise_var, &*self.ifft_m)?;
                (psk_metrics(&eq.y, self.cfg.h), eq.snr_post)
            }
        };
        let (indices, symbols) = select_greedy(&per_bin, self.cfg.l, self.cfg.delta)?;
        Ok(Detection {
            word: IndexWord { indices, symbols, delta: self.cfg.delta, m: self.cfg.m, h: self.cfg.h },
            snr_post: snr,
        })
    }

    /// Full receiver: DFT, equalization, detection and bit demapping.
    /// Detected index sets outside the codebook are reported as
    /// [`Error::RankOutOfRange`].
    pub fn rx_frame(&self, frame: &FrameSignal, h_c: &[Complex64], noise_var: f64) -> Result<Vec<bool>> {
        let b = self.rx_bins(&frame.samples)?;
        let det = self.detect(&b, h_c, noise_var)?;
        self.words.word_to_bits(&det.word)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chirp::{ChirpFamily, FdssProfile};

    fn framing() -> Framing {
        Framing { n: 128, n_cp: 32, sample_rate: 0.66e9 }
    }

    #[test]
    fn flat_equalizer_closed_forms() {
        let fdss = FdssProfile::flat(-3, 8);
        let h = vec![Complex64::new(1.0, 0.0); 8];
        let d: Vec<Complex64> = (0..8).map(|i| Complex64::new(i as f64, -1.0)).collect();
        let b = chirp::spread(&d, -3);
        let eq = equalize_lmmse(&b, &h, &fdss, 0.0).unwrap();
        assert!(eq.snr_post.is_infinite());
        for (a, e) in eq.y.iter().zip(&d) {
            assert!((a - e).norm() < 1e-12);
        }
        let eq = equalize_lmmse(&b, &h, &fdss, 1.0).unwrap();
        assert!((eq.snr_post - 1.0).abs() < 1e-12);
    }

    #[test]
    fn snr_post_decreases_with_noise() {
        let spec = ChirpSpec::new(ChirpFamily::Linear, 56.0, -31, 32, 1.0).unwrap();
        let p: Vec<f64> = spec.fdss().g().iter().map(|g| g.norm_sqr()).collect();
        let mut last = f64::INFINITY;
        for k in 0..30 {
            let s = snr_post(&p, 10f64.powf(-3.0 + 0.2 * k as f64));
            assert!(s < last);
            last = s;
        }
    }

    #[test]
    fn bpsk_argmax() {
        let mut y = vec![Complex64::new(0.0, 0.0); 10];
        y[5] = Complex64::new(1.0, 0.0);
        let eq = EqualizedSymbols { y: y.clone(), snr_post: 1.0 };
        assert_eq!(ml_detect(&eq, 1, 2).unwrap(), (vec![5], vec![0]));
        y[5] = Complex64::new(-1.0, 0.0);
        let eq = EqualizedSymbols { y, snr_post: 1.0 };
        assert_eq!(ml_detect(&eq, 1, 2).unwrap(), (vec![5], vec![1]));
    }

    #[test]
    fn greedy_skips_infeasible_second_pick() {
        let mut per_bin = vec![(0.0, 0); 16];
        per_bin[2] = (5.0, 1);
        per_bin[4] = (4.0, 0); // cyclic distance 2 = Δ from bin 2: not allowed
        per_bin[9] = (3.0, 3);
        let (idx, sym) = select_greedy(&per_bin, 2, 2).unwrap();
        assert_eq!(idx, vec![2, 9]);
        assert_eq!(sym, vec![1, 3]);
        assert!(select_greedy(&per_bin, 7, 2).is_err());
    }

    #[test]
    fn ties_go_to_lowest_bin() {
        let per_bin = vec![(1.0, 0); 6];
        assert_eq!(select_greedy(&per_bin, 2, 0).unwrap().0, vec![0, 1]);
    }

    #[test]
    fn union_bound_limits() {
        assert_eq!(union_bound_bler(4, 4, 1, 1.0, 0.5).unwrap(), 0.0);
        assert!(union_bound_bler(64, 2, 4, 32.0, 1e-6).unwrap() < 1e-300);
        assert_eq!(union_bound_bler(64, 2, 4, 32.0, 1e3).unwrap(), 1.0);
        assert!(union_bound_bler(64, 2, 4, 32.0, 0.0).is_err());
    }

    #[test]
    fn config_validation() {
        let spec = ChirpSpec::new(ChirpFamily::Linear, 56.0, -31, 32, 128.0 / 0.66e9).unwrap();
        assert!(ModemConfig::new(Scheme::CscIm(spec), -31, 64, framing(), 2, 4, 0).is_ok());
        assert!(ModemConfig::new(Scheme::CscIm(spec), -30, 64, framing(), 2, 4, 0).is_err());
        assert!(ModemConfig::new(Scheme::DftSOfdmIm, -31, 64, framing(), 33, 4, 0).is_err());
        assert!(ModemConfig::new(Scheme::DftSOfdmIm, -31, 64, framing(), 2, 3, 0).is_err());
        assert!(ModemConfig::new(Scheme::DftSOfdmIm, -31, 64, framing(), 2, 4, 40).is_err());
    }

    #[test]
    fn encode_places_symbols() {
        let f = Framing { n: 16, n_cp: 4, sample_rate: 1.0 };
        let cfg = ModemConfig::new(Scheme::DftSOfdmIm, -4, 10, f, 3, 4, 2).unwrap();
        let modem = Modem::new(cfg).unwrap();
        let (word, d) = modem.encode(&vec![false; modem.capacity().p]).unwrap();
        assert_eq!(word.indices, vec![0, 4, 7]);
        let amp = (10.0f64 / 3.0).sqrt();
        for (i, v) in d.iter().enumerate() {
            let want = if [0, 4, 7].contains(&i) { amp } else { 0.0 };
            assert!((v - Complex64::new(want, 0.0)).norm() < 1e-12);
        }
        let energy: f64 = d.iter().map(|v| v.norm_sqr()).sum();
        assert!((energy - 10.0).abs() < 1e-12);
    }
}
