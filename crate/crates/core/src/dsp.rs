//! Chirp-Z transform (Bluestein) used for zoomed delay-domain evaluation.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Evaluates `X_n = Σ_q x_q e^{j2π q (t0 + n·step)}` for `n = 0..points`,
/// i.e. the spectrum of `x` sampled on an arbitrary uniform grid of
/// normalized frequencies.
///
/// This is the chirp-Z transform on the unit circle, computed with one
/// FFT-based convolution.
pub fn czt_unit_circle(x: &[Complex64], t0: f64, step: f64, points: usize) -> Vec<Complex64> {
    let m = x.len();
    if m == 0 || points == 0 {
        return vec![Complex64::new(0.0, 0.0); points];
    }
    if m * points <= 4096 {
        return direct(x, t0, step, points);
    }
    // nq = (n² + q² − (n − q)²)/2
    let chirp = |t: i64| {
        let t2 = (t * t) as f64;
        Complex64::from_polar(1.0, PI * step * t2)
    };
    let len = (m + points - 1).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);

    let mut a = vec![Complex64::new(0.0, 0.0); len];
    for (q, v) in x.iter().enumerate() {
        let pre = Complex64::from_polar(1.0, 2.0 * PI * t0 * q as f64);
        a[q] = v * pre * chirp(q as i64);
    }
    let mut b = vec![Complex64::new(0.0, 0.0); len];
    for t in 0..points {
        b[t] = chirp(t as i64).conj();
    }
    for t in 1..m {
        b[len - t] = chirp(t as i64).conj();
    }
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (u, v) in a.iter_mut().zip(&b) {
        *u *= v;
    }
    inv.process(&mut a);
    let s = 1.0 / len as f64;
    (0..points).map(|n| a[n] * chirp(n as i64) * s).collect()
}

fn direct(x: &[Complex64], t0: f64, step: f64, points: usize) -> Vec<Complex64> {
    (0..points)
        .map(|n| {
            let f = t0 + n as f64 * step;
            x.iter()
                .enumerate()
                .map(|(q, v)| v * Complex64::from_polar(1.0, 2.0 * PI * f * q as f64))
                .sum()
        })
        .collect()
}
