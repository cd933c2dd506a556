//! Reproducible parallel trial execution and CSV emission.

use crate::error::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use statrs::distribution::{Beta, ContinuousCDF};
use std::io::Write;
use std::ops::Range;

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "CSCIM_THREADS";

/// Independent stream for one trial: ChaCha8 keyed by
/// `SHA-256(seed ‖ tags…)`, all little-endian `u64`s.
pub fn trial_rng(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for t in tags {
        h.update(t.to_le_bytes());
    }
    let mut key = [0u8; 32];
    key.copy_from_slice(&h.finalize());
    ChaCha8Rng::from_seed(key)
}

/// Worker pool. Results never depend on its size: trials are mapped in
/// parallel but reduced in trial order.
pub struct Runner {
    pool: rayon::ThreadPool,
}

impl Runner {
    /// Sized by `CSCIM_THREADS`, else the available parallelism.
    pub fn from_env() -> Result<Self> {
        let n = match std::env::var(THREADS_ENV) {
            Ok(v) => v
                .trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| Error::InvalidConfig(format!("{THREADS_ENV}={v:?} is not a positive integer")))?,
            Err(_) => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        };
        Self::with_threads(n)
    }

    pub fn with_threads(n: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// `f(t)` for every trial in `trials`, in order.
    pub fn map<T, F>(&self, trials: Range<u64>, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync + Send,
    {
        self.pool.install(|| trials.into_par_iter().map(&f).collect())
    }
}

/// Exact (Clopper–Pearson) two-sided interval for `k` successes in `n`.
pub fn clopper_pearson(k: u64, n: u64, confidence: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let a = 0.5 * (1.0 - confidence);
    let (kf, nf) = (k as f64, n as f64);
    let lo = if k == 0 { 0.0 } else { Beta::new(kf, nf - kf + 1.0).expect("valid shape").inverse_cdf(a) };
    let hi = if k == n { 1.0 } else { Beta::new(kf + 1.0, nf - kf).expect("valid shape").inverse_cdf(1.0 - a) };
    (lo, hi)
}

/// Writes `# config_hash=… seed=… experiment=…`, a header, then the rows.
pub fn write_csv<W: Write, R: Serialize>(mut out: W, config_hash: &str, seed: u64, experiment: &str, rows: &[R]) -> Result<()> {
    writeln!(out, "# config_hash={config_hash} seed={seed} experiment={experiment}")?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_keyed() {
        let a: u64 = trial_rng(1, &[2, 3]).random();
        assert_eq!(a, trial_rng(1, &[2, 3]).random::<u64>());
        assert_ne!(a, trial_rng(1, &[2, 4]).random::<u64>());
        assert_ne!(a, trial_rng(2, &[2, 3]).random::<u64>());
        assert_ne!(trial_rng(1, &[23]).random::<u64>(), trial_rng(1, &[2, 3]).random::<u64>());
    }

    #[test]
    fn map_is_ordered_and_size_independent() {
        let f = |t: u64| Ok(trial_rng(5, &[t]).random::<f64>());
        let one = Runner::with_threads(1).unwrap().map(0..500, f).unwrap();
        let four = Runner::with_threads(4).unwrap().map(0..500, f).unwrap();
        assert_eq!(one, four);
        let err = Runner::with_threads(2).unwrap().map(0..10, |t| if t == 7 { Err(Error::Io("x".into())) } else { Ok(t) });
        assert!(err.is_err());
    }

    #[test]
    fn clopper_pearson_reference() {
        // scipy.stats.beta.ppf(0.025, 5, 96), beta.ppf(0.975, 6, 95)
        let (lo, hi) = clopper_pearson(5, 100, 0.95);
        assert!((lo - 0.016431879).abs() < 1e-6, "{lo}");
        assert!((hi - 0.112834911).abs() < 1e-6, "{hi}");
        assert_eq!(clopper_pearson(0, 10, 0.95).0, 0.0);
        assert_eq!(clopper_pearson(10, 10, 0.95).1, 1.0);
    }

    #[test]
    fn csv_has_comment_and_header() {
        #[derive(Serialize)]
        struct Row {
            a: u32,
            b: f64,
        }
        let mut buf = Vec::new();
        write_csv(&mut buf, "abcd", 3, "demo", &[Row { a: 1, b: 0.5 }]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "# config_hash=abcd seed=3 experiment=demo\na,b\n1,0.5\n");
    }
}
