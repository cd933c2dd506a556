//! Chirp Fourier coefficients, FDSS profiles, DFT-s-OFDM synthesis and the
//! waveform metrics (PMEPR, occupied bandwidth, aperiodic autocorrelation,
//! Golay complementary pairs).

use crate::error::{Error, Result};
use crate::special::{bessel_j_orders, fresnel};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Shape of the periodic chirp's instantaneous frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChirpFamily {
    /// Frequency sweeps linearly from `-D/(2T_s)` to `+D/(2T_s)`.
    Linear,
    /// Frequency follows `D/(2T_s)·cos(2πt/T_s)`.
    Sinusoidal,
}

impl std::fmt::Display for ChirpFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ChirpFamily::Linear => f.write_str("linear"),
            ChirpFamily::Sinusoidal => f.write_str("sinusoidal"),
        }
    }
}

/// One periodic chirp and the band `l_d..=l_u` its Fourier series is
/// truncated to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChirpSpec {
    pub family: ChirpFamily,
    /// Frequency-deviation parameter; the peak deviation is `D/(2T_s)` Hz.
    pub d: f64,
    pub l_d: i64,
    pub l_u: i64,
    /// Symbol (IDFT) duration in seconds.
    pub symbol_duration: f64,
}

impl ChirpSpec {
    pub fn new(family: ChirpFamily, d: f64, l_d: i64, l_u: i64, symbol_duration: f64) -> Result<Self> {
        if !(l_d < 0 && l_u > 0) {
            return Err(Error::InvalidConfig(format!(
                "band edges must satisfy l_d < 0 < l_u, got {l_d}..{l_u}"
            )));
        }
        if !(d >= 0.0 && d.is_finite()) {
            return Err(Error::InvalidConfig(format!("deviation D must be >= 0, got {d}")));
        }
        let m = (l_u - l_d + 1) as f64;
        if m <= d {
            return Err(Error::InvalidConfig(format!(
                "band of {m} bins must exceed the deviation D = {d}"
            )));
        }
        if !(symbol_duration > 0.0) {
            return Err(Error::InvalidConfig("symbol duration must be positive".into()));
        }
        Ok(Self { family, d, l_d, l_u, symbol_duration })
    }

    /// Number of bins `M = l_u - l_d + 1`.
    pub fn m(&self) -> usize {
        (self.l_u - self.l_d + 1) as usize
    }

    /// Swept bandwidth `D/T_s` in Hz.
    pub fn bandwidth(&self) -> f64 {
        self.d / self.symbol_duration
    }

    /// Unnormalized Fourier coefficients `f_k`, `k = l_d..=l_u`.
    pub fn coefficients(&self) -> Vec<Complex64> {
        match self.family {
            ChirpFamily::Linear => linear_coefficients(self.d, self.l_d, self.l_u),
            ChirpFamily::Sinusoidal => sinusoidal_coefficients(self.d, self.l_d, self.l_u),
        }
    }

    pub fn fdss(&self) -> FdssProfile {
        normalize_fdss(&self.coefficients(), self.l_d).expect("chirp coefficients are never all zero")
    }
}

fn tone(l_d: i64, l_u: i64) -> Vec<Complex64> {
    (l_d..=l_u)
        .map(|k| if k == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
        .collect()
}

/// Fourier coefficients of the linear chirp with phase `πD(u² − u)`,
/// `u = t/T_s`, i.e. `(1/T_s)∫ e^{jφ(t)} e^{−j2πkt/T_s} dt`.
///
/// `D = 0` degenerates to a pure tone.
pub fn linear_coefficients(d: f64, l_d: i64, l_u: i64) -> Vec<Complex64> {
    if d == 0.0 {
        return tone(l_d, l_u);
    }
    // Completing the square gives Fresnel integrals at the two band edges
    // of the sweep, seen from bin k.
    let scale = (2.0 / d).sqrt();
    let amp = 1.0 / (2.0 * d).sqrt();
    (l_d..=l_u)
        .map(|k| {
            let kf = k as f64;
            let (ca, sa) = fresnel((0.5 * d + kf) * scale);
            let (cb, sb) = fresnel((0.5 * d - kf) * scale);
            // e^{−jπk} handled exactly through the parity of k.
            let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let phase = -PI * d / 4.0 - PI * kf * kf / d;
            Complex64::from_polar(sign * amp, phase) * Complex64::new(ca + cb, sa + sb)
        })
        .collect()
}

/// Fourier coefficients `J_k(D/2)` of the sinusoidal chirp with phase
/// `(D/2)·sin(2πt/T_s)`.
pub fn sinusoidal_coefficients(d: f64, l_d: i64, l_u: i64) -> Vec<Complex64> {
    let top = l_d.unsigned_abs().max(l_u.unsigned_abs()) as usize;
    let j = bessel_j_orders(top, 0.5 * d);
    (l_d..=l_u)
        .map(|k| {
            let n = k.unsigned_abs() as usize;
            let v = if k < 0 && n % 2 == 1 { -j[n] } else { j[n] };
            Complex64::new(v, 0.0)
        })
        .collect()
}

/// Normalized frequency-domain spectral shaping over bins `lower..lower+M`.
#[derive(Debug, Clone, PartialEq)]
pub struct FdssProfile {
    lower: i64,
    g: Vec<Complex64>,
    raw: Vec<Complex64>,
}

impl FdssProfile {
    /// Flat profile `g ≡ 1` (plain DFT-s-OFDM).
    pub fn flat(lower: i64, m: usize) -> Self {
        let ones = vec![Complex64::new(1.0, 0.0); m];
        Self { lower, g: ones.clone(), raw: ones }
    }

    pub fn m(&self) -> usize {
        self.g.len()
    }

    pub fn lower(&self) -> i64 {
        self.lower
    }

    pub fn upper(&self) -> i64 {
        self.lower + self.g.len() as i64 - 1
    }

    /// Normalized coefficients, `Σ|g_k|² = M`.
    pub fn g(&self) -> &[Complex64] {
        &self.g
    }

    pub fn raw(&self) -> &[Complex64] {
        &self.raw
    }

    /// Bin numbers `k` aligned with [`FdssProfile::g`].
    pub fn bins(&self) -> impl Iterator<Item = i64> + '_ {
        self.lower..=self.upper()
    }
}

/// Scales `raw` so that its energy equals its length.
pub fn normalize_fdss(raw: &[Complex64], lower: i64) -> Result<FdssProfile> {
    let energy: f64 = raw.iter().map(|c| c.norm_sqr()).sum();
    if raw.is_empty() || !(energy > 0.0) || !energy.is_finite() {
        return Err(Error::InvalidArgument("FDSS coefficients must have positive finite energy".into()));
    }
    let s = (raw.len() as f64 / energy).sqrt();
    Ok(FdssProfile {
        lower,
        g: raw.iter().map(|c| c * s).collect(),
        raw: raw.to_vec(),
    })
}

/// IDFT size, cyclic prefix and sampling rate of one transmitted symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Framing {
    pub n: usize,
    pub n_cp: usize,
    pub sample_rate: f64,
}

impl Framing {
    pub fn symbol_duration(&self) -> f64 {
        self.n as f64 / self.sample_rate
    }

    pub fn cp_duration(&self) -> f64 {
        self.n_cp as f64 / self.sample_rate
    }
}

/// Time-domain samples of one symbol, cyclic prefix first.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSignal {
    pub samples: Vec<Complex64>,
    pub n: usize,
    pub n_cp: usize,
    pub sample_rate: f64,
}

impl FrameSignal {
    /// The `N` samples after the cyclic prefix.
    pub fn body(&self) -> &[Complex64] {
        &self.samples[self.n_cp..]
    }
}

/// Normalized M-point DFT of `d` evaluated at bins `lower..lower+M`:
/// `(1/√M) Σ_m d_m e^{−j2πkm/M}`.
pub fn spread(d: &[Complex64], lower: i64) -> Vec<Complex64> {
    let m = d.len();
    let mut buf = d.to_vec();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let s = 1.0 / (m as f64).sqrt();
    (0..m as i64)
        .map(|q| buf[(lower + q).rem_euclid(m as i64) as usize] * s)
        .collect()
}

/// Places `bins` (for `k = lower..`) on an N-point unnormalized IDFT and
/// prepends the cyclic prefix.
pub fn synthesize_bins(bins: &[Complex64], lower: i64, framing: &Framing) -> Result<FrameSignal> {
    let n = framing.n;
    if n <= bins.len() {
        return Err(Error::InvalidConfig(format!(
            "IDFT size {n} must exceed the {} occupied bins",
            bins.len()
        )));
    }
    if framing.n_cp > n {
        return Err(Error::InvalidConfig("cyclic prefix longer than the symbol".into()));
    }
    let mut body = vec![Complex64::new(0.0, 0.0); n];
    for (q, &x) in bins.iter().enumerate() {
        body[(lower + q as i64).rem_euclid(n as i64) as usize] += x;
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut body);
    let mut samples = Vec::with_capacity(n + framing.n_cp);
    samples.extend_from_slice(&body[n - framing.n_cp..]);
    samples.extend_from_slice(&body);
    Ok(FrameSignal { samples, n, n_cp: framing.n_cp, sample_rate: framing.sample_rate })
}

/// DFT-spreads `d`, shapes it with `fdss` and synthesizes the symbol.
pub fn synthesize(d: &[Complex64], fdss: &FdssProfile, framing: &Framing) -> Result<FrameSignal> {
    if d.len() != fdss.m() {
        return Err(Error::LengthMismatch { expected: fdss.m(), actual: d.len() });
    }
    let bins: Vec<_> = spread(d, fdss.lower())
        .into_iter()
        .zip(fdss.g())
        .map(|(x, g)| x * g)
        .collect();
    synthesize_bins(&bins, fdss.lower(), framing)
}

/// Reference for the mean power in the PMEPR denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "value")]
pub enum MeanPower {
    /// Time average of this frame's own oversampled envelope.
    Frame,
    /// Ensemble mean power of the signal (e.g. `M` for normalized FDSS and
    /// unit-power symbols).
    Nominal(f64),
}

/// Oversampled body of a frame: the N-point spectrum is zero-padded to
/// `N·oversample` bins.
pub fn oversample(frame: &FrameSignal, factor: usize) -> Vec<Complex64> {
    let n = frame.n;
    let mut spec = frame.body().to_vec();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut spec);
    let big = n * factor;
    let mut padded = vec![Complex64::new(0.0, 0.0); big];
    let half = n as i64 / 2;
    for (i, x) in spec.iter().enumerate() {
        // Signed frequency of bin i; the Nyquist bin stays on the positive side.
        let k = if (i as i64) < half { i as i64 } else { i as i64 - n as i64 };
        padded[k.rem_euclid(big as i64) as usize] = x / n as f64;
    }
    planner.plan_fft_inverse(big).process(&mut padded);
    padded
}

/// Peak-to-mean envelope power ratio of the body in dB.
pub fn measure_pmepr(frame: &FrameSignal, factor: usize, mean: MeanPower) -> Result<f64> {
    if factor < 4 {
        return Err(Error::InvalidArgument(format!("oversampling factor {factor} < 4")));
    }
    let x = oversample(frame, factor);
    let peak = x.iter().map(|c| c.norm_sqr()).fold(0.0, f64::max);
    let p_av = match mean {
        MeanPower::Frame => x.iter().map(|c| c.norm_sqr()).sum::<f64>() / x.len() as f64,
        MeanPower::Nominal(p) => p,
    };
    if !(p_av > 0.0) || peak == 0.0 {
        return Err(Error::InvalidArgument("PMEPR of a zero-power frame".into()));
    }
    Ok(10.0 * (peak / p_av).log10())
}

/// Smallest number of contiguous bins holding at least `fraction` of the
/// profile's energy. Multiply by `1/T_s` for the bandwidth in Hz.
pub fn occupied_bandwidth(fdss: &FdssProfile, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("fraction {fraction} not in (0, 1)")));
    }
    let p: Vec<f64> = fdss.g().iter().map(|c| c.norm_sqr()).collect();
    let total: f64 = p.iter().sum();
    let target = fraction * total * (1.0 - 1e-12);
    let mut prefix = vec![0.0; p.len() + 1];
    for (i, v) in p.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    for width in 1..=p.len() {
        if (0..=p.len() - width).any(|s| prefix[s + width] - prefix[s] >= target) {
            return Ok(width);
        }
    }
    Ok(p.len())
}

/// Aperiodic autocorrelation `Σ_i a_i* a_{i+l}`; zero for `|l| ≥ len`.
pub fn apac(a: &[Complex64], l: i64) -> Complex64 {
    let m = a.len() as i64;
    if l.abs() >= m {
        return Complex64::new(0.0, 0.0);
    }
    if l < 0 {
        return apac(a, -l).conj();
    }
    let l = l as usize;
    a.iter().zip(&a[l..]).map(|(x, y)| x.conj() * y).sum()
}

/// Outcome of a complementary-pair check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcpReport {
    pub is_gcp: bool,
    /// `max_{l≠0} |ρ_a(l) + ρ_b(l)|` divided by `ρ_a(0) + ρ_b(0)`.
    pub max_violation: f64,
    pub worst_lag: i64,
}

/// Checks whether the autocorrelations of `a` and `b` cancel at every
/// nonzero lag to within `tol` of the zero-lag energy.
pub fn is_gcp(a: &[Complex64], b: &[Complex64], tol: f64) -> Result<GcpReport> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { expected: a.len(), actual: b.len() });
    }
    let energy = (apac(a, 0) + apac(b, 0)).re;
    let mut worst = (0.0, 0);
    for l in 1..a.len() as i64 {
        let v = (apac(a, l) + apac(b, l)).norm();
        if v > worst.0 {
            worst = (v, l);
        }
    }
    let ratio = if energy > 0.0 { worst.0 / energy } else { f64::INFINITY };
    Ok(GcpReport { is_gcp: ratio <= tol, max_violation: ratio, worst_lag: worst.1 })
}

/// Builds the pair `(a, b)` whose entries are the Fourier coefficients of
/// the sum and difference of two circularly shifted copies of one chirp:
/// `a_k = x_p f_k e^{−j2πk·p/M} + x_r f_k e^{−j2πk·r/M}`, `b_k` with a minus.
pub fn gcp_from_chirps(
    coeffs: &[Complex64],
    lower: i64,
    shift_p: i64,
    shift_r: i64,
    x_p: Complex64,
    x_r: Complex64,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let m = coeffs.len() as i64;
    if shift_p.rem_euclid(m) == shift_r.rem_euclid(m) {
        return Err(Error::InvalidArgument("the two chirps need distinct shifts".into()));
    }
    for x in [x_p, x_r] {
        if (x.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("symbol {x} is not unimodular")));
        }
    }
    let mut a = Vec::with_capacity(coeffs.len());
    let mut b = Vec::with_capacity(coeffs.len());
    for (q, f) in coeffs.iter().enumerate() {
        let k = lower + q as i64;
        let p = x_p * f * phase_ramp(k, shift_p, m);
        let r = x_r * f * phase_ramp(k, shift_r, m);
        a.push(p + r);
        b.push(p - r);
    }
    Ok((a, b))
}

/// `e^{−j2π k s / m}` with the product reduced modulo `m` first.
fn phase_ramp(k: i64, s: i64, m: i64) -> Complex64 {
    let r = (k as i128 * s as i128).rem_euclid(m as i128) as f64;
    Complex64::from_polar(1.0, -2.0 * PI * r / m as f64)
}

/// Number of distinct complementary sequences obtainable from pairs of `m`
/// shifted chirps with `h`-PSK symbols: `C(m, 2)·h²`.
pub fn distinct_cs_count(m: u64, h: u64) -> u128 {
    let m = m as u128;
    m * m.saturating_sub(1) / 2 * (h as u128).pow(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_deviation_is_a_tone() {
        for coeffs in [linear_coefficients(0.0, -3, 4), sinusoidal_coefficients(0.0, -3, 4)] {
            for (q, f) in coeffs.iter().enumerate() {
                let want = if q == 3 { 1.0 } else { 0.0 };
                assert!((f - c(want, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn sinusoidal_parity() {
        let f = sinusoidal_coefficients(12.0, -11, 11);
        for k in 1..=11usize {
            let s = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert_relative_eq!(f[11 - k].re, s * f[11 + k].re, epsilon = 1e-15);
        }
    }

    #[test]
    fn linear_coefficients_decay_outside_sweep() {
        let f = linear_coefficients(1382.0, -800, 800);
        let f0 = f[800].norm();
        // 50 bins past the sweep edge the tail is still ~0.11·|f_0|; 100 bins
        // out it is well below a tenth.
        let far = f[800 + 691 + 100].norm();
        assert!(far < f0 / 10.0, "|f_791| = {far}, |f_0| = {f0}");
    }

    #[test]
    fn normalization_examples() {
        let g = normalize_fdss(&[c(1.0, 0.0); 5], 0).unwrap();
        assert!(g.g().iter().all(|x| (x - c(1.0, 0.0)).norm() < 1e-15));
        let g = normalize_fdss(&[c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], 0).unwrap();
        assert_relative_eq!(g.g()[0].re, 2.0, epsilon = 1e-15);
        let spec = ChirpSpec::new(ChirpFamily::Sinusoidal, 12.0, -11, 12, 1.0).unwrap();
        let e: f64 = spec.fdss().g().iter().map(|x| x.norm_sqr()).sum();
        assert_relative_eq!(e, 24.0, max_relative = 1e-12);
        assert!(normalize_fdss(&[c(0.0, 0.0); 3], 0).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(ChirpSpec::new(ChirpFamily::Linear, 56.0, -31, 32, 1.0).is_ok());
        assert!(ChirpSpec::new(ChirpFamily::Linear, 64.0, -31, 32, 1.0).is_err());
        assert!(ChirpSpec::new(ChirpFamily::Linear, 8.0, 0, 32, 1.0).is_err());
        assert!(ChirpSpec::new(ChirpFamily::Linear, -1.0, -31, 32, 1.0).is_err());
    }

    #[test]
    fn apac_examples() {
        let a = [c(1.0, 0.0), c(1.0, 0.0)];
        assert_eq!(apac(&a, 0), c(2.0, 0.0));
        assert_eq!(apac(&a, 1), c(1.0, 0.0));
        assert_eq!(apac(&a, 2), c(0.0, 0.0));
        let g = [c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)];
        assert_eq!(apac(&g, 2), c(0.0, 0.0));
        let z = [c(1.0, 2.0), c(-0.5, 0.3), c(0.1, -1.0)];
        assert_eq!(apac(&z, -1), apac(&z, 1).conj());
    }

    #[test]
    fn canonical_pair() {
        let r = is_gcp(&[c(1.0, 0.0), c(1.0, 0.0)], &[c(1.0, 0.0), c(-1.0, 0.0)], 0.0).unwrap();
        assert!(r.is_gcp);
        assert!(is_gcp(&[c(1.0, 0.0)], &[c(1.0, 0.0), c(1.0, 0.0)], 0.1).is_err());
    }

    #[test]
    fn gcp_rejects_equal_shifts() {
        let f = sinusoidal_coefficients(12.0, -11, 12);
        assert!(gcp_from_chirps(&f, -11, 3, 27, c(1.0, 0.0), c(1.0, 0.0)).is_err());
        assert!(gcp_from_chirps(&f, -11, 3, 4, c(2.0, 0.0), c(1.0, 0.0)).is_err());
    }

    #[test]
    fn cs_count() {
        assert_eq!(distinct_cs_count(10, 4), 720);
    }

    #[test]
    fn ocb_examples() {
        let spec = ChirpSpec::new(ChirpFamily::Sinusoidal, 12.0, -11, 12, 1.0).unwrap();
        assert_eq!(occupied_bandwidth(&spec.fdss(), 0.99).unwrap(), 15);
        for m in [10usize, 64, 100, 128] {
            let flat = FdssProfile::flat(0, m);
            assert_eq!(occupied_bandwidth(&flat, 0.99).unwrap(), (0.99 * m as f64).ceil() as usize);
        }
        let spec = ChirpSpec::new(ChirpFamily::Linear, 56.0, -31, 32, 1.0).unwrap();
        assert_eq!(occupied_bandwidth(&spec.fdss(), 1.0 - 1e-15).unwrap(), 64);
    }

    #[test]
    fn pmepr_rejects_low_oversampling_and_silence() {
        let framing = Framing { n: 16, n_cp: 4, sample_rate: 1.0 };
        let frame = synthesize_bins(&[c(1.0, 0.0); 8], -3, &framing).unwrap();
        assert!(measure_pmepr(&frame, 2, MeanPower::Frame).is_err());
        let silent = synthesize_bins(&[c(0.0, 0.0); 8], -3, &framing).unwrap();
        assert!(measure_pmepr(&silent, 8, MeanPower::Frame).is_err());
    }

    #[test]
    fn synthesis_needs_room() {
        let framing = Framing { n: 8, n_cp: 2, sample_rate: 1.0 };
        assert!(synthesize_bins(&[c(1.0, 0.0); 8], -3, &framing).is_err());
    }
}
