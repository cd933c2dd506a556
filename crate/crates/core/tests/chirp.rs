mod common;

use common::*;
use cscim::chirp::*;
use num_complex::Complex64;
use proptest::prelude::*;

const CONFIGS: [(f64, usize); 3] = [(12.0, 24), (56.0, 64), (1382.0, 1448)];

#[test]
fn linear_coefficients_match_quadrature() {
    for (d, m) in CONFIGS {
        let (l_d, l_u) = band(m);
        let oracle = quadrature_coefficients(linear_phase(d), l_d, l_u, 1 << 20, false);
        let err = worst_relative_error(&linear_coefficients(d, l_d, l_u), &oracle, 1e-3);
        assert!(err <= 1e-6, "D={d} M={m}: {err:e}");
    }
}

#[test]
fn sinusoidal_coefficients_match_quadrature() {
    for (d, m) in CONFIGS {
        let (l_d, l_u) = band(m);
        let oracle = quadrature_coefficients(sinusoidal_phase(d), l_d, l_u, 1 << 14, true);
        let err = worst_relative_error(&sinusoidal_coefficients(d, l_d, l_u), &oracle, 1e-3);
        assert!(err <= 1e-6, "D={d} M={m}: {err:e}");
    }
}

#[test]
fn truncation_keeps_most_energy_when_band_exceeds_sweep() {
    // Parseval on the full periodic chirp: Σ|f_k|² = 1 over all k.
    for (d, m) in CONFIGS {
        let (l_d, l_u) = band(m);
        for f in [linear_coefficients(d, l_d, l_u), sinusoidal_coefficients(d, l_d, l_u)] {
            let e: f64 = f.iter().map(|c| c.norm_sqr()).sum();
            assert!(e > 0.9 && e < 1.0 + 1e-9, "D={d} M={m}: {e}");
        }
    }
}

fn shifted_pair(d: f64, m: usize, p: i64, r: i64, x_p: Complex64, x_r: Complex64) -> GcpReport {
    let (l_d, l_u) = band(m);
    let f = sinusoidal_coefficients(d, l_d, l_u);
    let (a, b) = gcp_from_chirps(&f, l_d, p, r, x_p, x_r).unwrap();
    is_gcp(&a, &b, 1e-2).unwrap()
}

#[test]
fn adjacent_shifts_form_a_complementary_pair() {
    let one = Complex64::new(1.0, 0.0);
    assert!(shifted_pair(12.0, 24, 0, 1, one, one).is_gcp);
    let heavy = shifted_pair(24.0, 24, 0, 1, one, one);
    assert!(!heavy.is_gcp, "violation {}", heavy.max_violation);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn complementarity_ignores_symbol_phases(a in 0.0..6.3f64, b in 0.0..6.3f64) {
        let one = Complex64::new(1.0, 0.0);
        let base = shifted_pair(12.0, 24, 0, 1, one, one);
        let r = shifted_pair(12.0, 24, 0, 1, Complex64::from_polar(1.0, a), Complex64::from_polar(1.0, b));
        prop_assert!((r.max_violation - base.max_violation).abs() < 1e-12);
    }

    #[test]
    fn spreading_a_circular_shift_is_a_phase_ramp(
        re in prop::collection::vec(-1.0..1.0f64, 16),
        im in prop::collection::vec(-1.0..1.0f64, 16),
        s in 0usize..16,
    ) {
        let d: Vec<Complex64> = re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        let mut shifted = d.clone();
        shifted.rotate_right(s);
        let (x, y) = (spread(&d, -7), spread(&shifted, -7));
        for (q, (x, y)) in x.iter().zip(&y).enumerate() {
            let k = q as f64 - 7.0;
            let ramp = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * k * s as f64 / 16.0);
            prop_assert!((x * ramp - y).norm() < 1e-12);
        }
    }

    #[test]
    fn synthesis_is_linear_and_energy_preserving(
        re in prop::collection::vec(-1.0..1.0f64, 16),
        im in prop::collection::vec(-1.0..1.0f64, 16),
        c in -2.0..2.0f64,
    ) {
        let framing = Framing { n: 64, n_cp: 8, sample_rate: 1.0 };
        let (l_d, l_u) = band(16);
        let fdss = normalize_fdss(&linear_coefficients(8.0, l_d, l_u), l_d).unwrap();
        let d1: Vec<Complex64> = re.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        let d2: Vec<Complex64> = im.iter().map(|&b| Complex64::new(0.0, b)).collect();
        let sum: Vec<Complex64> = d1.iter().zip(&d2).map(|(a, b)| a + b * c).collect();
        let (s1, s2, s) = (
            synthesize(&d1, &fdss, &framing).unwrap(),
            synthesize(&d2, &fdss, &framing).unwrap(),
            synthesize(&sum, &fdss, &framing).unwrap(),
        );
        for i in 0..s.samples.len() {
            prop_assert!((s1.samples[i] + s2.samples[i] * c - s.samples[i]).norm() < 1e-10);
        }
        // Cyclic prefix is a copy of the tail.
        prop_assert_eq!(&s.samples[..8], &s.body()[56..]);
        // Unnormalized IDFT: Σ|x_n|² = N Σ|X_k|².
        let bins: Vec<Complex64> = spread(&sum, l_d).iter().zip(fdss.g()).map(|(x, g)| x * g).collect();
        let e_t: f64 = s.body().iter().map(|v| v.norm_sqr()).sum();
        let e_f: f64 = bins.iter().map(|v| v.norm_sqr()).sum();
        prop_assert!((e_t - 64.0 * e_f).abs() < 1e-9 * e_t.max(1.0));
    }
}

#[test]
fn single_sinusoidal_chirp_has_constant_envelope() {
    let framing = Framing { n: 128, n_cp: 32, sample_rate: 0.66e9 };
    let spec = ChirpSpec::new(ChirpFamily::Sinusoidal, 32.0, -31, 32, framing.symbol_duration()).unwrap();
    let fdss = spec.fdss();
    let mut d = vec![Complex64::new(0.0, 0.0); 64];
    d[17] = Complex64::new(0.0, 1.0);
    let frame = synthesize(&d, &fdss, &framing).unwrap();
    let x = oversample(&frame, 8);
    let (lo, hi) = x.iter().map(|c| c.norm_sqr()).fold((f64::MAX, 0.0f64), |(a, b), p| (a.min(p), b.max(p)));
    assert!(10.0 * (hi / lo).log10() < 0.05, "envelope ripple {} dB", 10.0 * (hi / lo).log10());
    let pmepr = measure_pmepr(&frame, 8, MeanPower::Nominal(1.0)).unwrap();
    assert!(pmepr.abs() < 0.05, "{pmepr}");
}

#[test]
fn occupied_bandwidth_tracks_the_sweep() {
    // A linear chirp occupies roughly D bins; the flat profile all of them.
    let spec = ChirpSpec::new(ChirpFamily::Linear, 56.0, -31, 32, 1.0).unwrap();
    let ocb = occupied_bandwidth(&spec.fdss(), 0.99).unwrap();
    assert!((50..=64).contains(&ocb), "{ocb}");
    assert_eq!(occupied_bandwidth(&FdssProfile::flat(-31, 64), 0.99).unwrap(), 64);
}
