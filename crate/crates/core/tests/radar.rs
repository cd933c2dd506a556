use cscim::channel::{add_awgn, radar_cfr, RadarScene, Target};
use cscim::chirp::{ChirpFamily, ChirpSpec, Framing};
use cscim::modem::{Modem, ModemConfig, Scheme};
use cscim::radar::*;
use cscim::SPEED_OF_LIGHT;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FC: f64 = 6.48e9;

fn framing() -> Framing {
    Framing { n: 128, n_cp: 32, sample_rate: 0.66e9 }
}

fn modem(family: ChirpFamily, d: f64, l: usize, delta: usize) -> Modem {
    let f = framing();
    let spec = ChirpSpec::new(family, d, -31, 32, f.symbol_duration()).unwrap();
    Modem::new(ModemConfig::new(Scheme::CscIm(spec), -31, 64, f, l, 4, delta).unwrap()).unwrap()
}

fn random_w(m: &Modem, rng: &mut impl Rng) -> Vec<Complex64> {
    let bits: Vec<bool> = (0..m.capacity().p).map(|_| rng.random()).collect();
    let (_, d) = m.encode(&bits).unwrap();
    m.tx_bins(&d)
}

fn observe(w: &[Complex64], targets: Vec<Target>, noise_var: f64, rng: &mut impl Rng) -> (RadarObservation, RadarScene) {
    let f = framing();
    let scene = RadarScene::new(targets, FC, f.symbol_duration(), f.cp_duration()).unwrap();
    let h = radar_cfr(&scene, -31, w.len());
    let mut b: Vec<Complex64> = w.iter().zip(&h).map(|(w, h)| w * h).collect();
    add_awgn(&mut b, noise_var, rng).unwrap();
    let obs = RadarObservation {
        b,
        w: w.to_vec(),
        noise_var,
        lower: -31,
        carrier: FC,
        symbol_duration: f.symbol_duration(),
        cp_duration: f.cp_duration(),
    };
    (obs, scene)
}

#[test]
fn noiseless_single_target_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let m = modem(ChirpFamily::Linear, 56.0, 2, 0);
    let b = m.config().bandwidth();
    let t_cp = framing().cp_duration();
    for _ in 0..20 {
        let w = random_w(&m, &mut rng);
        let tau0 = rng.random_range(0.3..0.7) * t_cp;
        let alpha = if rng.random() { 1.0 } else { -1.0 };
        let (obs, _) = observe(&w, vec![Target { range: tau0 * SPEED_OF_LIGHT / 2.0, alpha }], 0.0, &mut rng);
        let est = estimate_single_mf(&obs, &SearchParams::new(b)).unwrap();
        let e = est.targets[0];
        assert!((e.delay - tau0).abs() < 1e-4 / b, "delay error {}", (e.delay - tau0).abs() * b);
        assert!((e.alpha - alpha).abs() < 1e-3);
        let (metric, a) = mf_objective(tau0, &obs).unwrap();
        assert!((a - alpha).abs() < 1e-10);
        assert!(metric > mf_objective(tau0 + 0.5 / b, &obs).unwrap().0);
    }
}

#[test]
fn multi_with_one_target_equals_single() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let m = modem(ChirpFamily::Sinusoidal, 32.0, 2, 15);
    let w = random_w(&m, &mut rng);
    let (obs, _) = observe(&w, vec![Target { range: 2.4, alpha: -1.0 }], 1e-2, &mut rng);
    let p = SearchParams::new(m.config().bandwidth());
    assert_eq!(estimate_single_mf(&obs, &p).unwrap(), estimate_multi_mf(&obs, 1, &p).unwrap());
}

#[test]
fn two_noiseless_targets_resolved() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = modem(ChirpFamily::Linear, 56.0, 1, 0);
    let b = m.config().bandwidth();
    let r_min = min_resolution(b);
    for _ in 0..5 {
        let w = random_w(&m, &mut rng);
        let d1 = rng.random_range(2.0..3.0);
        let targets = vec![Target { range: d1, alpha: -0.7 }, Target { range: d1 + 3.0 * r_min, alpha: -0.7 }];
        let (obs, scene) = observe(&w, targets, 0.0, &mut rng);
        let est = estimate_multi_mf(&obs, 2, &SearchParams::new(b)).unwrap();
        for (e, t) in est.targets.iter().zip(scene.targets()) {
            assert!((e.range - t.range).abs() < r_min / 100.0, "{} vs {}", e.range, t.range);
        }
    }
}

#[test]
fn lmmse_matches_mf_for_unimodular_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let w: Vec<Complex64> = (0..64).map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..6.28))).collect();
    let (obs, _) = observe(&w, vec![Target { range: 2.7, alpha: -1.0 }], 1e-4, &mut rng);
    let p = SearchParams::new(64.0 / framing().symbol_duration());
    let a = estimate_single_mf(&obs, &p).unwrap().targets[0];
    let b = estimate_lmmse(&obs, 1, &p).unwrap().targets[0];
    assert!((a.delay - b.delay).abs() < 1e-6);
}

#[test]
fn lmmse_vanishes_with_huge_noise_variance() {
    let w = vec![Complex64::new(1.0, 0.0); 64];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut obs, _) = observe(&w, vec![Target { range: 2.0, alpha: 1.0 }], 0.0, &mut rng);
    obs.noise_var = 1e300;
    assert!(lmmse_channel(&obs).iter().all(|h| h.norm() < 1e-290));
}

#[test]
fn single_target_rmse_near_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let m = modem(ChirpFamily::Linear, 56.0, 2, 0);
    let p = SearchParams::new(m.config().bandwidth());
    let noise_var = 1e-3;
    let trials = 300;
    let mut se = 0.0;
    let mut bound = 0.0;
    for _ in 0..trials {
        let w = random_w(&m, &mut rng);
        let d = rng.random_range(2.0..3.0);
        let (obs, scene) = observe(&w, vec![Target { range: d, alpha: -1.0 }], noise_var, &mut rng);
        let e = estimate_single_mf(&obs, &p).unwrap().targets[0];
        se += (e.range - d).powi(2);
        bound += crlb_range(&scene, &bin_power(&w), -31, noise_var).unwrap();
    }
    let gap_db = 10.0 * (se / bound).log10();
    assert!(gap_db.abs() < 1.0, "gap {gap_db} dB");
}

#[test]
fn phase_aware_bound_is_tighter() {
    let f = framing();
    let scene = RadarScene::new(vec![Target { range: 2.5, alpha: -1.0 }], FC, f.symbol_duration(), f.cp_duration()).unwrap();
    let flat = vec![1.0; 64];
    let a = crlb_range(&scene, &flat, -31, 0.01).unwrap();
    let b = crlb_range_no_phase(&scene, 64, 0.01).unwrap();
    assert!(a < b / 100.0);
}
