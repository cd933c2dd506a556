//! Python bindings: index coding, chirp coefficients, the modem, radar
//! estimation and the experiment runners.

use cscim_core::channel::{RadarScene, Target};
use cscim_core::chirp::{self, ChirpFamily};
use cscim_core::harness::{self, ExperimentConfig, Preset, Runner};
use cscim_core::index_codec;
use cscim_core::modem;
use cscim_core::radar::{self, RadarObservation, SearchParams};
use num_bigint::BigUint;
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn py_err(e: cscim_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_preset(s: &str) -> PyResult<Preset> {
    s.parse().map_err(py_err)
}

fn parse_family(s: &str) -> PyResult<ChirpFamily> {
    match s {
        "linear" => Ok(ChirpFamily::Linear),
        "sinusoidal" => Ok(ChirpFamily::Sinusoidal),
        _ => Err(PyValueError::new_err(format!("unknown chirp family {s:?}"))),
    }
}

/// Number of admissible index sets for `m` bins, `l` active, gap `delta`.
#[pyfunction]
fn index_count(m: usize, l: usize, delta: usize) -> BigUint {
    index_codec::index_count(l, delta, m)
}

/// Largest gap that costs no index bits.
#[pyfunction]
fn delta_no_loss(m: usize, l: usize) -> PyResult<usize> {
    index_codec::delta_no_loss(m, l).map_err(py_err)
}

/// Ranking of index sets under a cyclic minimum gap (ranks are 1-based).
#[pyclass(module = "pycscim")]
struct IndexCodec(index_codec::IndexCodec);

#[pymethods]
impl IndexCodec {
    #[new]
    #[pyo3(signature = (m, l, delta=0))]
    fn new(m: usize, l: usize, delta: usize) -> PyResult<Self> {
        index_codec::IndexCodec::new(m, l, delta).map(Self).map_err(py_err)
    }

    #[getter]
    fn count(&self) -> BigUint {
        self.0.count().clone()
    }

    fn rank(&self, indices: Vec<usize>) -> PyResult<BigUint> {
        self.0.rank(&indices).map_err(py_err)
    }

    fn unrank(&self, n: BigUint) -> PyResult<Vec<usize>> {
        self.0.unrank(&n).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("IndexCodec(m={}, l={}, delta={})", self.0.m(), self.0.l(), self.0.delta())
    }
}

/// Fourier coefficients `f_k`, `k = l_d..=l_u`, of a periodic chirp.
#[pyfunction]
fn chirp_coefficients(family: &str, d: f64, l_d: i64, l_u: i64) -> PyResult<Vec<Complex64>> {
    Ok(match parse_family(family)? {
        ChirpFamily::Linear => chirp::linear_coefficients(d, l_d, l_u),
        ChirpFamily::Sinusoidal => chirp::sinusoidal_coefficients(d, l_d, l_u),
    })
}

/// `(is_gcp, max_violation, worst_lag)` for two sequences.
#[pyfunction]
#[pyo3(signature = (a, b, tol=1e-2))]
fn is_gcp(a: Vec<Complex64>, b: Vec<Complex64>, tol: f64) -> PyResult<(bool, f64, i64)> {
    let r = chirp::is_gcp(&a, &b, tol).map_err(py_err)?;
    Ok((r.is_gcp, r.max_violation, r.worst_lag))
}

/// Union bound on the block error rate.
#[pyfunction]
fn union_bound_bler(m: usize, l: usize, h: usize, es: f64, n0: f64) -> PyResult<f64> {
    modem::union_bound_bler(m, l, h, es, n0).map_err(py_err)
}

/// Minimum resolvable range difference `c/(2B)` in meters.
#[pyfunction]
fn min_resolution(bandwidth: f64) -> f64 {
    radar::min_resolution(bandwidth)
}

/// One scheme of a preset, with its transmitter and receiver.
#[pyclass(module = "pycscim")]
struct Modem {
    inner: modem::Modem,
    carrier: f64,
}

#[pymethods]
impl Modem {
    /// Scheme `name` (e.g. `"csc-lin-l2"`) from preset `"desk"` or `"paper"`.
    #[new]
    #[pyo3(signature = (name, preset="desk"))]
    fn new(name: &str, preset: &str) -> PyResult<Self> {
        let cfg = ExperimentConfig::preset(parse_preset(preset)?).map_err(py_err)?;
        let mc = cfg.scheme(name).map_err(py_err)?.modem_config(&cfg.system).map_err(py_err)?;
        Ok(Self { inner: modem::Modem::new(mc).map_err(py_err)?, carrier: cfg.system.carrier })
    }

    /// Information bits per frame.
    #[getter]
    fn bits_per_frame(&self) -> usize {
        self.inner.capacity().p
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.config().m
    }

    #[getter]
    fn lower(&self) -> i64 {
        self.inner.config().lower
    }

    #[getter]
    fn bandwidth(&self) -> f64 {
        self.inner.config().bandwidth()
    }

    /// `(indices, psk_symbols, tx_bins)` for a list of bits.
    fn encode(&self, bits: Vec<bool>) -> PyResult<(Vec<usize>, Vec<usize>, Vec<Complex64>)> {
        let (word, d) = self.inner.encode(&bits).map_err(py_err)?;
        Ok((word.indices, word.symbols, self.inner.tx_bins(&d)))
    }

    /// Time-domain samples of one frame, cyclic prefix first.
    fn tx_frame(&self, bits: Vec<bool>) -> PyResult<Vec<Complex64>> {
        Ok(self.inner.tx_frame(&bits).map_err(py_err)?.samples)
    }

    /// Occupied bins of a received frame.
    fn rx_bins(&self, samples: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
        self.inner.rx_bins(&samples).map_err(py_err)
    }

    /// Detects `(indices, psk_symbols, snr_post)` from received bins.
    #[pyo3(signature = (b, h=None, noise_var=0.0))]
    fn detect(&self, b: Vec<Complex64>, h: Option<Vec<Complex64>>, noise_var: f64) -> PyResult<(Vec<usize>, Vec<usize>, f64)> {
        let h = h.unwrap_or_else(|| vec![Complex64::new(1.0, 0.0); b.len()]);
        let det = self.inner.detect(&b, &h, noise_var).map_err(py_err)?;
        Ok((det.word.indices, det.word.symbols, det.snr_post))
    }

    /// Bits recovered from time-domain samples.
    #[pyo3(signature = (samples, h=None, noise_var=0.0))]
    fn rx_frame(&self, samples: Vec<Complex64>, h: Option<Vec<Complex64>>, noise_var: f64) -> PyResult<Vec<bool>> {
        let b = self.inner.rx_bins(&samples).map_err(py_err)?;
        let h = h.unwrap_or_else(|| vec![Complex64::new(1.0, 0.0); b.len()]);
        let det = self.inner.detect(&b, &h, noise_var).map_err(py_err)?;
        self.inner.word_codec().word_to_bits(&det.word).map_err(py_err)
    }

    /// PMEPR in dB of the frame carrying `bits`, against mean power `M`.
    #[pyo3(signature = (bits, oversample=8))]
    fn pmepr(&self, bits: Vec<bool>, oversample: usize) -> PyResult<f64> {
        let frame = self.inner.tx_frame(&bits).map_err(py_err)?;
        chirp::measure_pmepr(&frame, oversample, chirp::MeanPower::Nominal(self.inner.config().m as f64)).map_err(py_err)
    }

    /// Radar return `W·H(targets) + noise` for `[(range_m, alpha), …]`,
    /// noiseless unless `noise_var > 0` and `seed` is given.
    #[pyo3(signature = (tx_bins, targets, noise_var=0.0, seed=None))]
    fn radar_return(&self, tx_bins: Vec<Complex64>, targets: Vec<(f64, f64)>, noise_var: f64, seed: Option<u64>) -> PyResult<Vec<Complex64>> {
        let scene = self.scene(&targets)?;
        let h = cscim_core::channel::radar_cfr(&scene, self.lower(), tx_bins.len());
        let mut b: Vec<Complex64> = tx_bins.iter().zip(&h).map(|(w, h)| w * h).collect();
        if let Some(s) = seed {
            let mut rng = harness::trial_rng(s, &[]);
            cscim_core::channel::add_awgn(&mut b, noise_var, &mut rng).map_err(py_err)?;
        }
        Ok(b)
    }

    /// `[(range_m, alpha), …]` for `targets` reflectors, by matched
    /// filtering (`"mf"`) or LMMSE channel estimation (`"lmmse"`).
    #[pyo3(signature = (rx_bins, tx_bins, targets=1, noise_var=1e-3, estimator="mf"))]
    fn estimate_ranges(
        &self,
        rx_bins: Vec<Complex64>,
        tx_bins: Vec<Complex64>,
        targets: usize,
        noise_var: f64,
        estimator: &str,
    ) -> PyResult<Vec<(f64, f64)>> {
        let f = self.inner.config().framing;
        let obs = RadarObservation {
            b: rx_bins,
            w: tx_bins,
            noise_var,
            lower: self.lower(),
            carrier: self.carrier,
            symbol_duration: f.symbol_duration(),
            cp_duration: f.cp_duration(),
        };
        let p = SearchParams::new(self.bandwidth());
        let est = match estimator {
            "mf" => radar::estimate_multi_mf(&obs, targets, &p),
            "lmmse" => radar::estimate_lmmse(&obs, targets, &p),
            _ => return Err(PyValueError::new_err(format!("unknown estimator {estimator:?}"))),
        }
        .map_err(py_err)?;
        Ok(est.targets.iter().map(|t| (t.range, t.alpha)).collect())
    }

    /// Range CRLB (m²) for `[(range_m, alpha), …]` with this scheme's
    /// expected per-bin power.
    fn crlb_range(&self, targets: Vec<(f64, f64)>, noise_var: f64) -> PyResult<f64> {
        let scene = self.scene(&targets)?;
        radar::crlb_range(&scene, &radar::bin_power(self.inner.fdss().g()), self.lower(), noise_var).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Modem({:?})", self.inner.config())
    }
}

impl Modem {
    fn scene(&self, targets: &[(f64, f64)]) -> PyResult<RadarScene> {
        let f = self.inner.config().framing;
        let t = targets.iter().map(|&(range, alpha)| Target { range, alpha }).collect();
        RadarScene::new(t, self.carrier, f.symbol_duration(), f.cp_duration()).map_err(py_err)
    }
}

/// Runs `experiment` (`pmepr`, `bler`, `radar-rmse`, `resolution`, `crlb`)
/// and returns the CSV text, comment line included. `config` is TOML
/// merged over the preset.
#[pyfunction]
#[pyo3(signature = (experiment, preset="desk", config=None, seed=None))]
fn run_experiment(py: Python<'_>, experiment: &str, preset: &str, config: Option<&str>, seed: Option<u64>) -> PyResult<String> {
    let preset = parse_preset(preset)?;
    let cfg = ExperimentConfig::load(config, Some(preset), seed).map_err(py_err)?;
    let experiment = experiment.to_string();
    py.detach(move || {
        let runner = Runner::from_env()?;
        let mut out = Vec::new();
        let (h, s) = (cfg.hash(), cfg.seed);
        match experiment.as_str() {
            "pmepr" => harness::write_csv(&mut out, &h, s, &experiment, &harness::run_pmepr_ccdf(&cfg, &runner)?)?,
            "bler" => harness::write_csv(&mut out, &h, s, &experiment, &harness::run_bler(&cfg, &runner)?)?,
            "radar-rmse" => harness::write_csv(&mut out, &h, s, &experiment, &harness::run_radar_rmse(&cfg, &runner)?)?,
            "resolution" => harness::write_csv(&mut out, &h, s, &experiment, &harness::run_resolution(&cfg, &runner)?)?,
            "crlb" => harness::write_csv(&mut out, &h, s, &experiment, &harness::crlb_table(&cfg)?)?,
            other => return Err(cscim_core::Error::InvalidArgument(format!("unknown experiment {other:?}"))),
        }
        Ok(String::from_utf8(out).expect("CSV is UTF-8"))
    })
    .map_err(py_err)
}

#[pymodule]
fn pycscim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<IndexCodec>()?;
    m.add_class::<Modem>()?;
    m.add_function(wrap_pyfunction!(index_count, m)?)?;
    m.add_function(wrap_pyfunction!(delta_no_loss, m)?)?;
    m.add_function(wrap_pyfunction!(chirp_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(is_gcp, m)?)?;
    m.add_function(wrap_pyfunction!(union_bound_bler, m)?)?;
    m.add_function(wrap_pyfunction!(min_resolution, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
