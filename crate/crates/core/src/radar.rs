//! Range and reflection-coefficient estimation from the frequency-domain
//! radar return `b = W H + n`, and the matching Cramér–Rao bounds.

use crate::channel::{delay_vector, RadarScene};
use crate::dsp::czt_unit_circle;
use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Received bins and everything the radar receiver knows about them.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarObservation {
    /// Received bins `b_k`, `k = lower..`.
    pub b: Vec<Complex64>,
    /// Transmitted bins `w_k` (known at the radar receiver).
    pub w: Vec<Complex64>,
    pub noise_var: f64,
    pub lower: i64,
    pub carrier: f64,
    pub symbol_duration: f64,
    pub cp_duration: f64,
}

impl RadarObservation {
    fn check(&self) -> Result<()> {
        if self.b.len() != self.w.len() {
            return Err(Error::LengthMismatch { expected: self.w.len(), actual: self.b.len() });
        }
        if self.w.iter().all(|v| v.norm_sqr() == 0.0) {
            return Err(Error::InvalidArgument("reference bins are all zero".into()));
        }
        Ok(())
    }

    /// Delay steering vector on this observation's bins.
    pub fn steering(&self, tau: f64) -> Vec<Complex64> {
        delay_vector(tau, self.carrier, self.symbol_duration, self.lower, self.w.len())
    }
}

/// Delay-search settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    /// Signal bandwidth `B`; the coarse grid step is `1/(2B)`.
    pub bandwidth: f64,
    /// Points per side of each zoom window are `zoom`; each stage narrows
    /// the step by about this factor.
    pub zoom: usize,
    /// Zoom stages applied to every carrier-resolved candidate peak.
    pub stages: usize,
    /// Re-estimation passes after successive cancellation.
    pub update_passes: usize,
    /// Further passes are run while any delay still moves by more than
    /// `1e-6/B`, up to this total.
    pub max_passes: usize,
    /// Half-carrier-cycle offsets `−span..=span` tried jointly across
    /// targets after the update passes (0 disables).
    pub half_cycle_span: i64,
}

impl SearchParams {
    pub fn new(bandwidth: f64) -> Self {
        Self { bandwidth, zoom: 64, stages: 2, update_passes: 2, max_passes: 32, half_cycle_span: 2 }
    }

    pub fn coarse_step(&self) -> f64 {
        0.5 / self.bandwidth
    }
}

/// Largest target count accepted by the multi-target estimators.
pub const MAX_TARGETS: usize = 16;

/// One estimated reflector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetEstimate {
    pub delay: f64,
    pub alpha: f64,
    pub range: f64,
}

impl TargetEstimate {
    fn new(delay: f64, alpha: f64) -> Self {
        Self { delay, alpha, range: delay * SPEED_OF_LIGHT / 2.0 }
    }
}

/// Estimates plus the search settings that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSet {
    /// Sorted by delay.
    pub targets: Vec<TargetEstimate>,
    pub coarse_step: f64,
    pub zoom: usize,
    pub stages: usize,
    pub update_passes: usize,
    pub max_passes: usize,
}

/// `z(τ) = c(τ)^H u` for `u_k = w_k* r_k`, evaluated pointwise or on
/// uniform delay grids.
struct Correlator<'a> {
    u: Vec<Complex64>,
    obs: &'a RadarObservation,
}

impl<'a> Correlator<'a> {
    fn new(obs: &'a RadarObservation, weights: &[Complex64], r: &[Complex64]) -> Self {
        let u = weights.iter().zip(r).map(|(w, b)| w.conj() * b).collect();
        Self { u, obs }
    }

    fn at(&self, tau: f64) -> Complex64 {
        let c = self.obs.steering(tau);
        c.iter().zip(&self.u).map(|(c, u)| c.conj() * u).sum()
    }

    /// `z(t0 + n·step)` for `n = 0..points`.
    fn grid(&self, t0: f64, step: f64, points: usize) -> Vec<Complex64> {
        let ts = self.obs.symbol_duration;
        let x = czt_unit_circle(&self.u, t0 / ts, step / ts, points);
        let f0 = self.obs.carrier + self.obs.lower as f64 / ts;
        x.into_iter()
            .enumerate()
            .map(|(n, v)| v * Complex64::from_polar(1.0, 2.0 * PI * f0 * (t0 + n as f64 * step)))
            .collect()
    }

    fn argmax(values: impl Iterator<Item = f64>) -> usize {
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, v) in values.enumerate() {
            if v > best.0 {
                best = (v, i);
            }
        }
        best.1
    }

    /// Delay maximizing `|Re z(τ)|` over `[0, T_CP)`.
    fn search(&self, p: &SearchParams) -> f64 {
        let h0 = p.coarse_step();
        let t_cp = self.obs.cp_duration;
        let fc = self.obs.carrier;
        let n0 = ((t_cp / h0).ceil() as usize).max(1);
        // Coarse and envelope stages ignore the carrier oscillation.
        let coarse = self.grid(0.0, h0, n0);
        let mut t = Self::argmax(coarse.iter().map(|v| v.norm())) as f64 * h0;
        let z = p.zoom.max(2);
        let step = h0 / z as f64;
        let env = self.grid(t - h0, step, 2 * z + 1);
        t += Self::argmax(env.iter().map(|v| v.norm())) as f64 * step - h0;

        // Carrier-resolving scan: every peak of |Re z| close to the best one
        // is a candidate, then each is refined.
        let h1 = if fc > 0.0 { (h0 / z as f64).min(1.0 / (16.0 * fc)) } else { h0 / z as f64 };
        let points = (2.0 * h0 / h1).ceil() as usize + 1;
        let h1 = 2.0 * h0 / (points - 1) as f64;
        let start = t - h0;
        let v: Vec<f64> = self.grid(start, h1, points).iter().map(|c| c.re.abs()).collect();
        let vmax = v.iter().cloned().fold(0.0, f64::max);
        let thr = vmax * (PI * fc * h1).cos() * 0.999;
        let mut best = (f64::NEG_INFINITY, t);
        for i in 0..points {
            let peak = (i == 0 || v[i] >= v[i - 1]) && (i + 1 == points || v[i] >= v[i + 1]);
            if !(peak && v[i] >= thr) {
                continue;
            }
            let tt = self.refine(start + i as f64 * h1, h1, p);
            let val = self.at(tt).re.abs();
            if val > best.0 {
                best = (val, tt);
            }
        }
        best.1.clamp(0.0, t_cp * (1.0 - 1e-12))
    }

    /// Zoom stages over ±one grid step, then a three-point parabolic fit.
    fn refine(&self, mut t: f64, mut h: f64, p: &SearchParams) -> f64 {
        let z = p.zoom.max(2);
        for _ in 0..p.stages {
            let step = h / z as f64;
            let v = self.grid(t - h, step, 2 * z + 1);
            t += Self::argmax(v.iter().map(|c| c.re.abs())) as f64 * step - h;
            h = step;
        }
        let v = self.grid(t - h, h, 3);
        let (a, b, c) = (v[0].re.abs(), v[1].re.abs(), v[2].re.abs());
        let den = a - 2.0 * b + c;
        if den < 0.0 {
            let off = 0.5 * (a - c) / den;
            if off.abs() <= 1.0 {
                t += off * h;
            }
        }
        t
    }
}

/// Matched-filter objective `|Re{c(τ)^H W^H b}|` and the implied
/// `α̂ = Re{c(τ)^H W^H b}/(w^H w)`.
pub fn mf_objective(tau: f64, obs: &RadarObservation) -> Result<(f64, f64)> {
    obs.check()?;
    let corr = Correlator::new(obs, &obs.w, &obs.b);
    let z = corr.at(tau).re;
    let ww: f64 = obs.w.iter().map(|v| v.norm_sqr()).sum();
    Ok((z.abs(), z / ww))
}

fn estimate_one(obs: &RadarObservation, weights: &[Complex64], r: &[Complex64], ww: f64, p: &SearchParams) -> TargetEstimate {
    let corr = Correlator::new(obs, weights, r);
    let tau = corr.search(p);
    TargetEstimate::new(tau, corr.at(tau).re / ww)
}

/// Single-target matched-filter estimate.
pub fn estimate_single_mf(obs: &RadarObservation, p: &SearchParams) -> Result<EstimateSet> {
    estimate_multi_mf(obs, 1, p)
}

/// Residual `r = b − Σ_{s∈keep} α_s W c(τ_s)`.
fn residual(obs: &RadarObservation, w: &[Complex64], b: &[Complex64], est: &[TargetEstimate], skip: Option<usize>) -> Vec<Complex64> {
    let mut r = b.to_vec();
    for (s, e) in est.iter().enumerate() {
        if Some(s) == skip {
            continue;
        }
        let c = obs.steering(e.delay);
        for ((rk, wk), ck) in r.iter_mut().zip(w).zip(c) {
            *rk -= e.alpha * wk * ck;
        }
    }
    r
}

/// Solves the small symmetric system `G x = r` by Gaussian elimination with
/// partial pivoting; `None` if singular.
fn solve(mut g: Vec<Vec<f64>>, mut r: Vec<f64>) -> Option<Vec<f64>> {
    let n = r.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| g[a][col].abs().total_cmp(&g[b][col].abs()))?;
        if g[piv][col].abs() < 1e-300 {
            return None;
        }
        g.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..n {
            let f = g[row][col] / g[col][col];
            for k in col..n {
                g[row][k] -= f * g[col][k];
            }
            r[row] -= f * r[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| g[row][k] * x[k]).sum();
        x[row] = (r[row] - s) / g[row][row];
    }
    Some(x)
}

/// Real least-squares reflection coefficients for fixed delays and the
/// resulting residual energy.
fn joint_fit(obs: &RadarObservation, w: &[Complex64], b: &[Complex64], delays: &[f64]) -> Option<(f64, Vec<f64>)> {
    let cols: Vec<Vec<Complex64>> = delays
        .iter()
        .map(|&t| w.iter().zip(obs.steering(t)).map(|(wk, ck)| wk * ck).collect())
        .collect();
    let dot = |a: &[Complex64], c: &[Complex64]| -> f64 { a.iter().zip(c).map(|(x, y)| (x.conj() * y).re).sum() };
    let g: Vec<Vec<f64>> = cols.iter().map(|a| cols.iter().map(|c| dot(a, c)).collect()).collect();
    let r: Vec<f64> = cols.iter().map(|a| dot(a, b)).collect();
    let alpha = solve(g.clone(), r.clone())?;
    let bb: f64 = b.iter().map(|v| v.norm_sqr()).sum();
    let mut res = bb;
    for i in 0..alpha.len() {
        res -= 2.0 * alpha[i] * r[i];
        for j in 0..alpha.len() {
            res += alpha[i] * g[i][j] * alpha[j];
        }
    }
    Some((res, alpha))
}

fn update_passes(obs: &RadarObservation, w: &[Complex64], b: &[Complex64], ww: f64, est: &mut [TargetEstimate], p: &SearchParams) {
    if est.len() < 2 {
        // With one target the residual is `b` itself: re-estimating would
        // reproduce the same answer.
        return;
    }
    let tol = 1e-6 / p.bandwidth;
    for pass in 0..p.max_passes.max(p.update_passes) {
        let mut moved = 0.0f64;
        for n in 0..est.len() {
            let r = residual(obs, w, b, est, Some(n));
            let new = estimate_one(obs, w, &r, ww, p);
            moved = moved.max((new.delay - est[n].delay).abs());
            est[n] = new;
        }
        if pass + 1 >= p.update_passes && moved <= tol {
            break;
        }
    }
}

/// Successive cancellation, update passes, and a joint check of
/// half-carrier-cycle offsets (the matched-filter objective has near-equal
/// peaks `1/(2f_c)` apart, and coordinate-wise updates can lock onto a
/// pair of wrong ones).
fn multi(obs: &RadarObservation, w: &[Complex64], b: &[Complex64], r_targets: usize, p: &SearchParams) -> Result<EstimateSet> {
    if r_targets == 0 || r_targets > MAX_TARGETS {
        return Err(Error::InvalidArgument(format!("target count {r_targets} not in 1..={MAX_TARGETS}")));
    }
    let ww: f64 = w.iter().map(|v| v.norm_sqr()).sum();
    let mut est: Vec<TargetEstimate> = Vec::with_capacity(r_targets);
    for _ in 0..r_targets {
        let r = residual(obs, w, b, &est, None);
        est.push(estimate_one(obs, w, &r, ww, p));
    }
    update_passes(obs, w, b, ww, &mut est, p);

    let span = p.half_cycle_span;
    if r_targets > 1 && span > 0 && obs.carrier > 0.0 && r_targets <= 4 {
        let half = 0.5 / obs.carrier;
        let base: Vec<f64> = est.iter().map(|e| e.delay).collect();
        if let Some((mut best_res, _)) = joint_fit(obs, w, b, &base) {
            let mut best: Option<(Vec<f64>, Vec<f64>)> = None;
            let width = (2 * span + 1) as usize;
            for code in 0..width.pow(r_targets as u32) {
                let mut c = code;
                let mut delays = base.clone();
                let mut moved = false;
                for d in delays.iter_mut() {
                    let n = (c % width) as i64 - span;
                    c /= width;
                    moved |= n != 0;
                    *d += n as f64 * half;
                }
                if !moved || delays.iter().any(|&d| d < 0.0 || d >= obs.cp_duration) {
                    continue;
                }
                if let Some((res, alpha)) = joint_fit(obs, w, b, &delays) {
                    if res < best_res {
                        best_res = res;
                        best = Some((delays, alpha));
                    }
                }
            }
            if let Some((delays, alpha)) = best {
                est = delays.iter().zip(alpha).map(|(&t, a)| TargetEstimate::new(t, a)).collect();
                update_passes(obs, w, b, ww, &mut est, p);
            }
        }
    }
    est.sort_by(|a, b| a.delay.total_cmp(&b.delay));
    Ok(EstimateSet {
        targets: est,
        coarse_step: p.coarse_step(),
        zoom: p.zoom,
        stages: p.stages,
        update_passes: p.update_passes,
        max_passes: p.max_passes,
    })
}

/// Matched-filter estimation of `r_targets` reflectors with successive
/// cancellation and update passes.
pub fn estimate_multi_mf(obs: &RadarObservation, r_targets: usize, p: &SearchParams) -> Result<EstimateSet> {
    obs.check()?;
    multi(obs, &obs.w, &obs.b, r_targets, p)
}

/// Per-bin LMMSE channel estimate `h̃_k = w_k* b_k / (|w_k|² + σ²)`.
pub fn lmmse_channel(obs: &RadarObservation) -> Vec<Complex64> {
    obs.b
        .iter()
        .zip(&obs.w)
        .map(|(b, w)| {
            let den = w.norm_sqr() + obs.noise_var;
            if den > 0.0 {
                w.conj() * b / den
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect()
}

/// Range estimation on the LMMSE channel estimate: the same search as the
/// matched filter with the waveform replaced by all-ones.
pub fn estimate_lmmse(obs: &RadarObservation, r_targets: usize, p: &SearchParams) -> Result<EstimateSet> {
    obs.check()?;
    let h = lmmse_channel(obs);
    let ones = vec![Complex64::new(1.0, 0.0); obs.w.len()];
    multi(obs, &ones, &h, r_targets, p)
}

/// `|v_k|²`, the per-bin weights for the bounds.
pub fn bin_power(v: &[Complex64]) -> Vec<f64> {
    v.iter().map(|c| c.norm_sqr()).collect()
}

fn alphas(scene: &RadarScene) -> Result<Vec<f64>> {
    let a: Vec<f64> = scene.targets().iter().map(|t| t.alpha).collect();
    if a.is_empty() || a.iter().any(|&v| v == 0.0) {
        return Err(Error::InvalidArgument("bounds need at least one target with nonzero alpha".into()));
    }
    Ok(a)
}

fn freq_moment(weights: &[f64], lower: i64, scene: &RadarScene) -> f64 {
    weights
        .iter()
        .enumerate()
        .map(|(q, p)| {
            let f = (lower + q as i64) as f64 / scene.symbol_duration + scene.carrier;
            p * f * f
        })
        .sum()
}

/// Diagonal Fisher information over `(τ_1..τ_R, α_1..α_R)` for per-bin
/// weights `|w_k|²` (or `|g_k|²` for the ensemble version).
pub fn fim(scene: &RadarScene, weights: &[f64], lower: i64, noise_var: f64) -> Result<Vec<Vec<f64>>> {
    let a = alphas(scene)?;
    let r = a.len();
    let mom = freq_moment(weights, lower, scene);
    let energy: f64 = weights.iter().sum();
    let mut j = vec![vec![0.0; 2 * r]; 2 * r];
    for (i, ai) in a.iter().enumerate() {
        j[i][i] = 8.0 * PI * PI * ai * ai / noise_var * mom;
        j[r + i][r + i] = 2.0 * ai * ai / noise_var * energy;
    }
    Ok(j)
}

/// Bound on the sum of range error variances (m²).
pub fn crlb_range(scene: &RadarScene, weights: &[f64], lower: i64, noise_var: f64) -> Result<f64> {
    let inv: f64 = alphas(scene)?.iter().map(|a| 1.0 / (a * a)).sum();
    let mom = freq_moment(weights, lower, scene);
    Ok(noise_var * SPEED_OF_LIGHT.powi(2) / (32.0 * PI * PI * mom) * inv)
}

/// Bound on the sum of reflection-coefficient error variances.
pub fn crlb_coeff(scene: &RadarScene, weights: &[f64], noise_var: f64) -> Result<f64> {
    let inv: f64 = alphas(scene)?.iter().map(|a| 1.0 / (a * a)).sum();
    Ok(noise_var / (2.0 * weights.iter().sum::<f64>()) * inv)
}

/// Range bound when the carrier phase carries no delay information, for a
/// flat spectrum over `m` bins (m²).
pub fn crlb_range_no_phase(scene: &RadarScene, m: usize, noise_var: f64) -> Result<f64> {
    let inv: f64 = alphas(scene)?.iter().map(|a| 1.0 / (a * a)).sum();
    let mf = m as f64;
    Ok(3.0 * noise_var * SPEED_OF_LIGHT.powi(2) * scene.symbol_duration.powi(2) / (8.0 * PI * PI * mf * (mf * mf - 1.0)) * inv)
}

/// Range resolution `c/(2B)`.
pub fn min_resolution(bandwidth: f64) -> f64 {
    0.5 * SPEED_OF_LIGHT / bandwidth
}
