use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use cscim::chirp::{gcp_from_chirps, is_gcp, linear_coefficients, sinusoidal_coefficients, ChirpFamily};
use cscim::harness::{self, ExperimentConfig, Preset, Runner, Scenario};
use cscim::index_codec::{delta_no_loss, index_count, IndexCodec};
use num_bigint::BigUint;
use num_complex::Complex64;
use serde::Serialize;
use std::io::Write;
use std::path::PathBuf;

/// Simulation and combinatorics tools for chirp index modulation.
#[derive(Parser)]
#[command(name = "cscim", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML file overriding the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the file).
    #[arg(long)]
    seed: Option<u64>,
    /// CSV destination; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base numerology.
    #[arg(long, value_parser = parse_preset)]
    preset: Option<Preset>,
}

#[derive(Args)]
struct Combo {
    #[arg(long = "M")]
    m: usize,
    #[arg(long = "L")]
    l: usize,
    #[arg(long, default_value_t = 0)]
    delta: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// PMEPR CCDF per scheme.
    Pmepr(Common),
    /// Block error rate against SNR or Eb/N0.
    Bler(Common),
    /// Range RMSE against SNR.
    RadarRmse {
        #[command(flatten)]
        common: Common,
        /// Overrides the configured scenario.
        #[arg(long, value_parser = parse_scenario)]
        scenario: Option<Scenario>,
    },
    /// Two-target RMSE against spacing.
    Resolution(Common),
    /// Closed-form range and coefficient bounds.
    Crlb(Common),
    /// Rank (1-based) of a comma-separated index set.
    Rank {
        #[arg(long)]
        indices: String,
        #[command(flatten)]
        combo: Combo,
    },
    /// Index set with the given rank (1-based).
    Unrank {
        #[arg(long)]
        n: String,
        #[command(flatten)]
        combo: Combo,
    },
    /// Number of valid index sets.
    Count(Combo),
    /// Largest separation without loss of index bits.
    DeltaNoLoss {
        #[arg(long = "M")]
        m: usize,
        #[arg(long = "L")]
        l: usize,
    },
    /// Checks whether two shifted chirps combine into a complementary pair.
    GcpCheck {
        #[arg(long = "M", default_value_t = 24)]
        m: usize,
        #[arg(long = "D", default_value_t = 12.0)]
        d: f64,
        #[arg(long, default_value = "sinusoidal", value_parser = parse_family)]
        family: ChirpFamily,
        #[arg(long, default_value_t = 0)]
        shift_p: i64,
        #[arg(long, default_value_t = 1)]
        shift_r: i64,
        #[arg(long, default_value_t = 1e-2)]
        tol: f64,
    },
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    match s {
        "desk" => Ok(Preset::Desk),
        "paper" => Ok(Preset::Paper),
        _ => Err(format!("expected desk or paper, got {s:?}")),
    }
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    match s {
        "single" => Ok(Scenario::Single),
        "two" => Ok(Scenario::Two),
        _ => Err(format!("expected single or two, got {s:?}")),
    }
}

fn parse_family(s: &str) -> Result<ChirpFamily, String> {
    match s {
        "linear" => Ok(ChirpFamily::Linear),
        "sinusoidal" => Ok(ChirpFamily::Sinusoidal),
        _ => Err(format!("expected linear or sinusoidal, got {s:?}")),
    }
}

fn load(c: &Common) -> Result<ExperimentConfig> {
    let text = match &c.config {
        Some(p) => Some(std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?),
        None => None,
    };
    Ok(ExperimentConfig::load(text.as_deref(), c.preset, c.seed)?)
}

fn emit<R: Serialize>(c: &Common, cfg: &ExperimentConfig, experiment: &str, rows: &[R]) -> Result<()> {
    let hash = cfg.hash();
    match &c.out {
        Some(p) => {
            let f = std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
            harness::write_csv(std::io::BufWriter::new(f), &hash, cfg.seed, experiment, rows)?;
        }
        None => harness::write_csv(std::io::stdout().lock(), &hash, cfg.seed, experiment, rows)?,
    }
    Ok(())
}

fn parse_indices(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().with_context(|| format!("bad index {t:?}")))
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    match cli.cmd {
        Cmd::Pmepr(c) => {
            let cfg = load(&c)?;
            emit(&c, &cfg, "pmepr", &harness::run_pmepr_ccdf(&cfg, &Runner::from_env()?)?)?;
        }
        Cmd::Bler(c) => {
            let cfg = load(&c)?;
            emit(&c, &cfg, "bler", &harness::run_bler(&cfg, &Runner::from_env()?)?)?;
        }
        Cmd::RadarRmse { common, scenario } => {
            let mut cfg = load(&common)?;
            if let Some(s) = scenario {
                cfg.radar.scenario = s;
            }
            emit(&common, &cfg, "radar-rmse", &harness::run_radar_rmse(&cfg, &Runner::from_env()?)?)?;
        }
        Cmd::Resolution(c) => {
            let cfg = load(&c)?;
            emit(&c, &cfg, "resolution", &harness::run_resolution(&cfg, &Runner::from_env()?)?)?;
        }
        Cmd::Crlb(c) => {
            let cfg = load(&c)?;
            emit(&c, &cfg, "crlb", &harness::crlb_table(&cfg)?)?;
        }
        Cmd::Rank { indices, combo } => {
            let codec = IndexCodec::new(combo.m, combo.l, combo.delta)?;
            writeln!(stdout, "{}", codec.rank(&parse_indices(&indices)?)?)?;
        }
        Cmd::Unrank { n, combo } => {
            let n: BigUint = n.trim().parse().with_context(|| format!("bad rank {n:?}"))?;
            let idx = IndexCodec::new(combo.m, combo.l, combo.delta)?.unrank(&n)?;
            let s: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
            writeln!(stdout, "{}", s.join(","))?;
        }
        Cmd::Count(c) => {
            if c.l == 0 || c.l > c.m {
                bail!("need 1 <= L <= M");
            }
            writeln!(stdout, "{}", index_count(c.l, c.delta, c.m))?;
        }
        Cmd::DeltaNoLoss { m, l } => writeln!(stdout, "{}", delta_no_loss(m, l)?)?,
        Cmd::GcpCheck { m, d, family, shift_p, shift_r, tol } => {
            if m < 2 {
                bail!("M must be at least 2");
            }
            let l_u = (m / 2) as i64;
            let l_d = l_u - m as i64 + 1;
            if !(d >= 0.0) {
                bail!("D must be non-negative");
            }
            // No M > D check here: heavily truncated chirps are exactly what
            // this command is meant to expose.
            let coeffs = match family {
                ChirpFamily::Linear => linear_coefficients(d, l_d, l_u),
                ChirpFamily::Sinusoidal => sinusoidal_coefficients(d, l_d, l_u),
            };
            let one = Complex64::new(1.0, 0.0);
            let (a, b) = gcp_from_chirps(&coeffs, l_d, shift_p, shift_r, one, one)?;
            let r = is_gcp(&a, &b, tol)?;
            writeln!(stdout, "is_gcp={} max_violation={:e} worst_lag={}", r.is_gcp, r.max_violation, r.worst_lag)?;
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
