//! Monte Carlo experiment runners. Each returns typed rows; `write_csv`
//! turns them into the documented CSV files.

use super::config::*;
use super::run::{clopper_pearson, trial_rng, Runner};
use crate::channel::{complex_gaussian, radar_cfr, rician_realize, RadarScene, Target};
use crate::chirp::{measure_pmepr, synthesize_bins};
use crate::error::{Error, Result};
use crate::modem::{snr_post, union_bound_bler, Modem, Scheme};
use crate::radar::{
    bin_power, crlb_coeff, crlb_range, crlb_range_no_phase, estimate_lmmse, estimate_multi_mf, min_resolution,
    RadarObservation, SearchParams,
};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

const EXP_PMEPR: u64 = 1;
const EXP_BLER: u64 = 2;
const EXP_RADAR: u64 = 3;
const EXP_RESOLUTION: u64 = 4;

fn modem(cfg: &ExperimentConfig, name: &str) -> Result<Modem> {
    Modem::new(cfg.scheme(name)?.modem_config(&cfg.system)?)
}

fn random_bits(n: usize, rng: &mut ChaCha8Rng) -> Vec<bool> {
    (0..n).map(|_| rng.random()).collect()
}

/// Transmitted bins for a uniformly random information word.
fn random_tx(m: &Modem, rng: &mut ChaCha8Rng) -> Result<(crate::index_codec::IndexWord, Vec<Complex64>)> {
    let (word, d) = m.encode(&random_bits(m.capacity().p, rng))?;
    Ok((word, m.tx_bins(&d)))
}

fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PmeprRow {
    pub scheme: String,
    pub pmepr_db: f64,
    /// Fraction of frames whose PMEPR exceeds `pmepr_db`.
    pub ccdf: f64,
}

/// PMEPR (dB) of `frames` random frames of one scheme, in frame order.
pub fn pmepr_samples(cfg: &ExperimentConfig, scheme: &str, runner: &Runner) -> Result<Vec<f64>> {
    let m = modem(cfg, scheme)?;
    let p = &cfg.pmepr;
    let idx = scheme_index(cfg, scheme)?;
    let mean = p.mean_power.resolve(cfg.system.m());
    runner.map(0..p.frames, |t| {
        let mut rng = trial_rng(cfg.seed, &[EXP_PMEPR, idx, t]);
        let (_, w) = random_tx(&m, &mut rng)?;
        let frame = synthesize_bins(&w, cfg.system.l_d, &m.config().framing)?;
        measure_pmepr(&frame, p.oversample, mean)
    })
}

fn scheme_index(cfg: &ExperimentConfig, name: &str) -> Result<u64> {
    cfg.schemes
        .iter()
        .position(|s| s.name == name)
        .map(|i| i as u64)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown scheme {name:?}")))
}

/// Empirical CCDF on a grid of `step_db` from the floor of the smallest
/// sample up to the first threshold no frame exceeds.
pub fn run_pmepr_ccdf(cfg: &ExperimentConfig, runner: &Runner) -> Result<Vec<PmeprRow>> {
    let step = cfg.pmepr.step_db;
    let mut rows = Vec::new();
    for name in &cfg.pmepr.schemes {
        let mut s = pmepr_samples(cfg, name, runner)?;
        s.sort_by(f64::total_cmp);
        let n = s.len() as f64;
        let mut i = (s[0] / step).floor() as i64;
        let mut above = s.len();
        loop {
            let thr = i as f64 * step;
            while above > 0 && s[s.len() - above] <= thr {
                above -= 1;
            }
            rows.push(PmeprRow { scheme: name.clone(), pmepr_db: thr, ccdf: above as f64 / n });
            if above == 0 {
                break;
            }
            i += 1;
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlerRow {
    pub scheme: String,
    pub channel: String,
    pub axis: String,
    /// Value on the sweep axis (SNR or Eb/N0).
    pub snr_or_ebn0_db: f64,
    pub snr_db: f64,
    pub ebn0_db: f64,
    pub trials: u64,
    pub errors: u64,
    pub bler: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Union bound; averaged over channel draws in fading, NaN where it
    /// does not apply.
    pub union_bound: f64,
}

struct BlerTrial {
    error: bool,
    bound: f64,
}

/// Simulated block error rate per scheme and sweep point, with the union
/// bound alongside.
pub fn run_bler(cfg: &ExperimentConfig, runner: &Runner) -> Result<Vec<BlerRow>> {
    let b = &cfg.bler;
    let sys = &cfg.system;
    let mf = sys.m() as f64;
    let ts = sys.framing().symbol_duration();
    let mut rows = Vec::new();
    for name in &b.schemes {
        let m = modem(cfg, name)?;
        let idx = scheme_index(cfg, name)?;
        let c = *m.config();
        let bits = m.capacity().p as f64;
        let es = c.symbol_energy();
        let gains = bin_power(m.fdss().g());
        let ofdm = matches!(c.scheme, Scheme::OfdmIm);
        for (pi, &point) in b.points_db.iter().enumerate() {
            let snr = match b.axis {
                SweepAxis::Snr => db_to_lin(point),
                SweepAxis::Ebn0 => db_to_lin(point) * bits / mf,
            };
            let noise_var = 1.0 / snr;
            let trial = |t: u64| -> Result<BlerTrial> {
                let mut rng = trial_rng(cfg.seed, &[EXP_BLER, idx, pi as u64, t]);
                let (word, w) = random_tx(&m, &mut rng)?;
                let h = match b.channel {
                    ChannelKind::Awgn => vec![Complex64::new(1.0, 0.0); c.m],
                    ChannelKind::Rician => rician_realize(&b.pdp, b.los_phase, &mut rng)?.cfr(c.lower, c.m, ts),
                };
                let sd = noise_var.sqrt();
                let rx: Vec<Complex64> =
                    w.iter().zip(&h).map(|(w, h)| h * w + complex_gaussian(&mut rng) * sd).collect();
                let det = m.detect(&rx, &h, noise_var)?;
                let error = det.word.indices != word.indices || det.word.symbols != word.symbols;
                let bound = match (b.channel, ofdm) {
                    (ChannelKind::Rician, false) => union_bound_bler(c.m, c.l, c.h, es, 1.0 / det.snr_post)?,
                    _ => f64::NAN,
                };
                Ok(BlerTrial { error, bound })
            };
            let (mut trials, mut errors, mut bound_sum) = (0u64, 0u64, 0.0);
            while errors < b.min_errors && trials < b.max_trials {
                let end = (trials + b.batch).min(b.max_trials);
                for r in runner.map(trials..end, trial)? {
                    errors += r.error as u64;
                    bound_sum += r.bound;
                }
                trials = end;
            }
            let union_bound = match (b.channel, ofdm) {
                (ChannelKind::Awgn, true) => union_bound_bler(c.m, c.l, c.h, es, noise_var)?,
                (ChannelKind::Awgn, false) => union_bound_bler(c.m, c.l, c.h, es, 1.0 / snr_post(&gains, noise_var))?,
                (ChannelKind::Rician, false) => bound_sum / trials as f64,
                (ChannelKind::Rician, true) => f64::NAN,
            };
            let (lo, hi) = clopper_pearson(errors, trials, b.confidence);
            rows.push(BlerRow {
                scheme: name.clone(),
                channel: format!("{:?}", b.channel).to_lowercase(),
                axis: format!("{:?}", b.axis).to_lowercase(),
                snr_or_ebn0_db: point,
                snr_db: 10.0 * snr.log10(),
                ebn0_db: 10.0 * (snr * mf / bits).log10(),
                trials,
                errors,
                bler: errors as f64 / trials as f64,
                ci_low: lo,
                ci_high: hi,
                union_bound,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadarRow {
    pub scheme: String,
    pub estimator: String,
    pub scenario: String,
    pub snr_db: f64,
    pub trials: u64,
    /// `√(mean Σ_s (d̂_s − d_s)²)`.
    pub rmse_m: f64,
    /// Range bound with the expected per-bin power `|g_k|²`.
    pub crlb_m: f64,
    /// Range bound averaged over the transmitted realizations `|w_k|²`.
    pub crlb_realized_m: f64,
    pub crlb_nophase_m: f64,
}

fn scenario_alphas(s: Scenario) -> Vec<f64> {
    match s {
        Scenario::Single => vec![-1.0],
        Scenario::Two => vec![-std::f64::consts::FRAC_1_SQRT_2; 2],
    }
}

fn search_params(cfg: &ExperimentConfig, bandwidth: f64) -> SearchParams {
    let s = cfg.radar.search;
    SearchParams {
        bandwidth,
        zoom: s.zoom,
        stages: s.stages,
        update_passes: s.update_passes,
        max_passes: s.max_passes,
        half_cycle_span: s.half_cycle_span,
    }
}

/// A nominal scene with the given reflection coefficients, for the bounds
/// (which do not depend on the ranges).
fn nominal_scene(cfg: &ExperimentConfig, alphas: &[f64]) -> Result<RadarScene> {
    let f = cfg.system.framing();
    let targets = alphas.iter().map(|&alpha| Target { range: 1.0, alpha }).collect();
    RadarScene::new(targets, cfg.system.carrier, f.symbol_duration(), f.cp_duration())
}

struct RadarTrial {
    /// Squared range error summed over targets, per estimator.
    se: Vec<f64>,
    bound: f64,
}

/// One radar trial: the ranges and noise come from a stream shared by all
/// schemes (common random numbers); the information bits from another.
fn radar_trial(
    cfg: &ExperimentConfig,
    m: &Modem,
    estimators: &[Estimator],
    ranges: &dyn Fn(&mut ChaCha8Rng) -> Vec<f64>,
    alphas: &[f64],
    noise_var: f64,
    tags: [u64; 3],
) -> Result<RadarTrial> {
    let sys = &cfg.system;
    let f = sys.framing();
    let mut scene_rng = trial_rng(cfg.seed, &[tags[0], tags[1], tags[2], 0]);
    let mut bit_rng = trial_rng(cfg.seed, &[tags[0], tags[1], tags[2], 1]);
    let d = ranges(&mut scene_rng);
    let targets = d.iter().zip(alphas).map(|(&range, &alpha)| Target { range, alpha }).collect();
    let scene = RadarScene::new(targets, sys.carrier, f.symbol_duration(), f.cp_duration())?;
    let (_, w) = random_tx(m, &mut bit_rng)?;
    let h = radar_cfr(&scene, sys.l_d, w.len());
    let sd = noise_var.sqrt();
    let b = w.iter().zip(&h).map(|(w, h)| w * h + complex_gaussian(&mut scene_rng) * sd).collect();
    let bound = crlb_range(&scene, &bin_power(&w), sys.l_d, noise_var)?;
    let obs = RadarObservation {
        b,
        w,
        noise_var,
        lower: sys.l_d,
        carrier: sys.carrier,
        symbol_duration: f.symbol_duration(),
        cp_duration: f.cp_duration(),
    };
    let p = search_params(cfg, m.config().bandwidth());
    let mut truth: Vec<f64> = scene.targets().iter().map(|t| t.range).collect();
    truth.sort_by(f64::total_cmp);
    let se = estimators
        .iter()
        .map(|e| {
            let est = match e {
                Estimator::Mf => estimate_multi_mf(&obs, alphas.len(), &p)?,
                Estimator::Lmmse => estimate_lmmse(&obs, alphas.len(), &p)?,
            };
            Ok(est.targets.iter().zip(&truth).map(|(e, t)| (e.range - t).powi(2)).sum())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(RadarTrial { se, bound })
}

/// Range RMSE against SNR for the configured scenario, with the bounds.
pub fn run_radar_rmse(cfg: &ExperimentConfig, runner: &Runner) -> Result<Vec<RadarRow>> {
    let r = &cfg.radar;
    let alphas = scenario_alphas(r.scenario);
    let nominal = nominal_scene(cfg, &alphas)?;
    let mut rows = Vec::new();
    for name in &r.schemes {
        let m = modem(cfg, name)?;
        let r_min = min_resolution(m.config().bandwidth());
        let ranges = |rng: &mut ChaCha8Rng| {
            let d1 = rng.random_range(r.range_min_m..=r.range_max_m);
            let u = rng.random_range(r.spacing_min..=r.spacing_max);
            match r.scenario {
                Scenario::Single => vec![d1],
                Scenario::Two => vec![d1, d1 + u * r_min],
            }
        };
        let g2 = bin_power(m.fdss().g());
        for (pi, &snr_db) in r.snr_db.iter().enumerate() {
            let noise_var = 1.0 / db_to_lin(snr_db);
            let out = runner.map(0..r.trials, |t| {
                radar_trial(cfg, &m, &r.estimators, &ranges, &alphas, noise_var, [EXP_RADAR, pi as u64, t])
            })?;
            let n = r.trials as f64;
            let realized = (out.iter().map(|o| o.bound).sum::<f64>() / n).sqrt();
            let crlb = crlb_range(&nominal, &g2, cfg.system.l_d, noise_var)?.sqrt();
            let nophase = crlb_range_no_phase(&nominal, cfg.system.m(), noise_var)?.sqrt();
            for (ei, e) in r.estimators.iter().enumerate() {
                rows.push(RadarRow {
                    scheme: name.clone(),
                    estimator: e.name().into(),
                    scenario: format!("{:?}", r.scenario).to_lowercase(),
                    snr_db,
                    trials: r.trials,
                    rmse_m: (out.iter().map(|o| o.se[ei]).sum::<f64>() / n).sqrt(),
                    crlb_m: crlb,
                    crlb_realized_m: realized,
                    crlb_nophase_m: nophase,
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolutionRow {
    pub scheme: String,
    pub estimator: String,
    /// Spacing in units of `r_min`.
    pub spacing_rmin: f64,
    pub spacing_m: f64,
    pub r_min_m: f64,
    pub rmse_m: f64,
    pub crlb_m: f64,
}

/// Two-target RMSE against target spacing at a fixed SNR.
pub fn run_resolution(cfg: &ExperimentConfig, runner: &Runner) -> Result<Vec<ResolutionRow>> {
    let q = &cfg.resolution;
    let r = &cfg.radar;
    let alphas = scenario_alphas(Scenario::Two);
    let nominal = nominal_scene(cfg, &alphas)?;
    let noise_var = 1.0 / db_to_lin(q.snr_db);
    let mut rows = Vec::new();
    for name in &q.schemes {
        let m = modem(cfg, name)?;
        let r_min = min_resolution(m.config().bandwidth());
        let crlb = crlb_range(&nominal, &bin_power(m.fdss().g()), cfg.system.l_d, noise_var)?.sqrt();
        for (si, &k) in q.spacing.iter().enumerate() {
            let spacing = k * r_min;
            let ranges = |rng: &mut ChaCha8Rng| {
                let d1 = rng.random_range(r.range_min_m..=r.range_max_m);
                vec![d1, d1 + spacing]
            };
            let out = runner.map(0..q.trials, |t| {
                radar_trial(cfg, &m, &q.estimators, &ranges, &alphas, noise_var, [EXP_RESOLUTION, si as u64, t])
            })?;
            for (ei, e) in q.estimators.iter().enumerate() {
                rows.push(ResolutionRow {
                    scheme: name.clone(),
                    estimator: e.name().into(),
                    spacing_rmin: k,
                    spacing_m: spacing,
                    r_min_m: r_min,
                    rmse_m: (out.iter().map(|o| o.se[ei]).sum::<f64>() / q.trials as f64).sqrt(),
                    crlb_m: crlb,
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrlbRow {
    pub scheme: String,
    pub scenario: String,
    pub snr_db: f64,
    pub bandwidth_hz: f64,
    pub r_min_m: f64,
    pub crlb_m: f64,
    pub crlb_nophase_m: f64,
    pub crlb_coeff: f64,
}

/// Closed-form bounds for the radar schemes and SNR points; no simulation.
pub fn crlb_table(cfg: &ExperimentConfig) -> Result<Vec<CrlbRow>> {
    let r = &cfg.radar;
    let nominal = nominal_scene(cfg, &scenario_alphas(r.scenario))?;
    let mut rows = Vec::new();
    for name in &r.schemes {
        let m = modem(cfg, name)?;
        let g2 = bin_power(m.fdss().g());
        let bw = m.config().bandwidth();
        for &snr_db in &r.snr_db {
            let nv = 1.0 / db_to_lin(snr_db);
            rows.push(CrlbRow {
                scheme: name.clone(),
                scenario: format!("{:?}", r.scenario).to_lowercase(),
                snr_db,
                bandwidth_hz: bw,
                r_min_m: min_resolution(bw),
                crlb_m: crlb_range(&nominal, &g2, cfg.system.l_d, nv)?.sqrt(),
                crlb_nophase_m: crlb_range_no_phase(&nominal, cfg.system.m(), nv)?.sqrt(),
                crlb_coeff: crlb_coeff(&nominal, &g2, nv)?,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let text = r#"
            [pmepr]
            frames = 50
            schemes = ["csc-sin-l2"]
            [bler]
            points_db = [4.0]
            max_trials = 300
            batch = 100
            schemes = ["dfts-l2"]
            [radar]
            trials = 20
            snr_db = [30.0]
            schemes = ["csc-lin-l2-is"]
            [resolution]
            trials = 10
            spacing = [0.5, 2.0]
            schemes = ["csc-lin-l1"]
        "#;
        ExperimentConfig::load(Some(text), None, None).unwrap()
    }

    #[test]
    fn ccdf_is_monotone_and_ends_at_zero() {
        let cfg = small();
        let rows = run_pmepr_ccdf(&cfg, &Runner::with_threads(2).unwrap()).unwrap();
        assert!(rows.windows(2).all(|w| w[1].ccdf <= w[0].ccdf && w[1].pmepr_db > w[0].pmepr_db));
        assert_eq!(rows.last().unwrap().ccdf, 0.0);
        assert_eq!(rows[0].ccdf, 1.0);
    }

    #[test]
    fn experiments_are_thread_count_independent() {
        let cfg = small();
        let a = Runner::with_threads(1).unwrap();
        let b = Runner::with_threads(3).unwrap();
        assert_eq!(run_bler(&cfg, &a).unwrap(), run_bler(&cfg, &b).unwrap());
        assert_eq!(run_radar_rmse(&cfg, &a).unwrap(), run_radar_rmse(&cfg, &b).unwrap());
        assert_eq!(run_resolution(&cfg, &a).unwrap(), run_resolution(&cfg, &b).unwrap());
    }

    #[test]
    fn crlb_table_orders_bounds() {
        let rows = crlb_table(&small()).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].crlb_m < rows[0].crlb_nophase_m);
    }
}
