//! Oracles shared by the integration tests and the acceptance target.
#![allow(dead_code)]

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Every `l`-subset of `0..m` whose cyclic gaps are all `≥ delta`, in
/// lexicographic order.
pub fn brute_force_sets(m: usize, l: usize, delta: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(l);
    fn rec(start: usize, m: usize, l: usize, delta: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == l {
            let ok = (1..l).all(|q| cur[q] - cur[q - 1] > delta) && m - 1 - cur[l - 1] + cur[0] >= delta;
            if ok {
                out.push(cur.clone());
            }
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(i + 1, m, l, delta, cur, out);
            cur.pop();
        }
    }
    rec(0, m, l, delta, &mut cur, &mut out);
    out
}

/// `∫_0^1 e^{jφ(u)} e^{−j2πku} du` for `k = l_d..=l_u`, by composite
/// Simpson (`smooth_periodic = false`) or the trapezoid rule (exact to
/// machine precision for smooth periodic integrands) on `n` intervals.
/// All bins come out of one FFT of the weighted samples.
pub fn quadrature_coefficients(phase: impl Fn(f64) -> f64, l_d: i64, l_u: i64, n: usize, smooth_periodic: bool) -> Vec<Complex64> {
    assert!(n % 2 == 0);
    let h = 1.0 / n as f64;
    let mut buf: Vec<Complex64> = (0..n)
        .map(|i| {
            let w = if smooth_periodic {
                h
            } else if i == 0 {
                // u = 0 and u = 1 alias onto the same DFT sample.
                2.0 * h / 3.0
            } else if i % 2 == 1 {
                4.0 * h / 3.0
            } else {
                2.0 * h / 3.0
            };
            Complex64::from_polar(w, phase(i as f64 * h))
        })
        .collect();
    if !smooth_periodic {
        // The two end samples must be equal for the aliasing above.
        assert!((Complex64::from_polar(1.0, phase(0.0)) - Complex64::from_polar(1.0, phase(1.0))).norm() < 1e-9);
    }
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    (l_d..=l_u).map(|k| buf[k.rem_euclid(n as i64) as usize]).collect()
}

pub fn linear_phase(d: f64) -> impl Fn(f64) -> f64 {
    move |u| PI * d * (u * u - u)
}

pub fn sinusoidal_phase(d: f64) -> impl Fn(f64) -> f64 {
    move |u| 0.5 * d * (2.0 * PI * u).sin()
}

/// Worst relative error over bins whose oracle magnitude is at least
/// `floor` times the peak.
pub fn worst_relative_error(got: &[Complex64], oracle: &[Complex64], floor: f64) -> f64 {
    let peak = oracle.iter().map(|c| c.norm()).fold(0.0, f64::max);
    got.iter()
        .zip(oracle)
        .filter(|(_, o)| o.norm() >= floor * peak)
        .map(|(g, o)| (g - o).norm() / o.norm())
        .fold(0.0, f64::max)
}

/// Band `l_d..=l_u` of `m` bins centred as in the presets.
pub fn band(m: usize) -> (i64, i64) {
    let l_u = (m / 2) as i64;
    (l_u - m as i64 + 1, l_u)
}
