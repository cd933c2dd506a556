//! Experiment configuration: a preset, optionally overridden by a TOML file.

use crate::channel::{LosPhase, PdpTap};
use crate::chirp::{ChirpFamily, ChirpSpec, Framing, MeanPower};
use crate::error::{Error, Result};
use crate::modem::{ModemConfig, Scheme};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;

/// Base numerology an experiment starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// 64 subcarriers at a sixteenth of the 60 GHz numerology; runs in minutes.
    Desk,
    /// Four bonded 60 GHz channels, 1448 occupied subcarriers.
    Paper,
    /// No defaults: the file must specify everything.
    Custom,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            "custom" => Ok(Preset::Custom),
            _ => Err(Error::InvalidConfig(format!("unknown preset {s:?} (desk, paper, custom)"))),
        }
    }
}

/// Frame numerology shared by all schemes of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub sample_rate: f64,
    pub n: usize,
    pub n_cp: usize,
    pub carrier: f64,
    pub l_d: i64,
    pub l_u: i64,
    /// PSK order.
    pub h: usize,
    /// Reading of the occupied-subcarrier count that the band does not
    /// realize; informational only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nominal_m: Option<usize>,
}

impl SystemConfig {
    pub fn m(&self) -> usize {
        (self.l_u - self.l_d + 1) as usize
    }

    pub fn framing(&self) -> Framing {
        Framing { n: self.n, n_cp: self.n_cp, sample_rate: self.sample_rate }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    CscIm,
    DftSOfdmIm,
    OfdmIm,
}

/// One named waveform configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub name: String,
    pub kind: SchemeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<ChirpFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    pub l: usize,
    #[serde(default)]
    pub delta: usize,
}

impl SchemeConfig {
    fn csc(name: &str, family: ChirpFamily, d: f64, l: usize, delta: usize) -> Self {
        Self { name: name.into(), kind: SchemeKind::CscIm, family: Some(family), d: Some(d), l, delta }
    }

    fn plain(name: &str, kind: SchemeKind, l: usize) -> Self {
        Self { name: name.into(), kind, family: None, d: None, l, delta: 0 }
    }

    pub fn modem_config(&self, sys: &SystemConfig) -> Result<ModemConfig> {
        let framing = sys.framing();
        let scheme = match self.kind {
            SchemeKind::CscIm => {
                let (Some(family), Some(d)) = (self.family, self.d) else {
                    return Err(Error::InvalidConfig(format!("scheme {:?} needs family and d", self.name)));
                };
                Scheme::CscIm(ChirpSpec::new(family, d, sys.l_d, sys.l_u, framing.symbol_duration())?)
            }
            SchemeKind::DftSOfdmIm => Scheme::DftSOfdmIm,
            SchemeKind::OfdmIm => Scheme::OfdmIm,
        };
        ModemConfig::new(scheme, sys.l_d, sys.m(), framing, self.l, sys.h, self.delta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmeprConfig {
    pub schemes: Vec<String>,
    pub frames: u64,
    pub oversample: usize,
    pub mean_power: MeanPowerRef,
    /// Spacing of the CCDF threshold grid.
    pub step_db: f64,
}

/// PMEPR denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeanPowerRef {
    /// Ensemble mean power `M`.
    Nominal,
    /// Each frame's own mean power.
    Frame,
}

impl MeanPowerRef {
    pub fn resolve(self, m: usize) -> MeanPower {
        match self {
            MeanPowerRef::Nominal => MeanPower::Nominal(m as f64),
            MeanPowerRef::Frame => MeanPower::Frame,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Awgn,
    Rician,
}

/// Quantity on the BLER sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Snr,
    Ebn0,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlerConfig {
    pub schemes: Vec<String>,
    pub channel: ChannelKind,
    pub axis: SweepAxis,
    pub points_db: Vec<f64>,
    /// Stop a point after this many block errors...
    pub min_errors: u64,
    /// ...or this many trials, whichever comes first.
    pub max_trials: u64,
    /// Trials per parallel batch; the stopping rule is checked between batches.
    pub batch: u64,
    /// Two-sided confidence level of the reported interval.
    pub confidence: f64,
    pub pdp: Vec<PdpTap>,
    pub los_phase: LosPhase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// One target at a uniform range, `α = −1`.
    Single,
    /// Two targets `[1.5, 2]·r_min` apart, `α = −√2/2` each.
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Mf,
    Lmmse,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Mf => "mf",
            Estimator::Lmmse => "lmmse",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub zoom: usize,
    pub stages: usize,
    pub update_passes: usize,
    pub max_passes: usize,
    pub half_cycle_span: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadarConfig {
    pub schemes: Vec<String>,
    pub estimators: Vec<Estimator>,
    pub scenario: Scenario,
    pub snr_db: Vec<f64>,
    pub trials: u64,
    /// First-target range is uniform on `[range_min_m, range_max_m]`.
    pub range_min_m: f64,
    pub range_max_m: f64,
    /// Two-target spacing is uniform on `[spacing_min, spacing_max]·r_min`.
    pub spacing_min: f64,
    pub spacing_max: f64,
    pub search: SearchConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolutionConfig {
    pub schemes: Vec<String>,
    pub estimators: Vec<Estimator>,
    pub snr_db: f64,
    /// Target spacings in units of `r_min`.
    pub spacing: Vec<f64>,
    pub trials: u64,
}

/// Everything an experiment run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub seed: u64,
    pub system: SystemConfig,
    pub schemes: Vec<SchemeConfig>,
    pub pmepr: PmeprConfig,
    pub bler: BlerConfig,
    pub radar: RadarConfig,
    pub resolution: ResolutionConfig,
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// Three-path profile: 0/−10/−20 dB at 0/10/20 ns, K = 10/0/0.
pub fn default_pdp() -> Vec<PdpTap> {
    vec![
        PdpTap { delay_ns: 0.0, power_db: 0.0, rician_k: 10.0 },
        PdpTap { delay_ns: 10.0, power_db: -10.0, rician_k: 0.0 },
        PdpTap { delay_ns: 20.0, power_db: -20.0, rician_k: 0.0 },
    ]
}

impl ExperimentConfig {
    /// Built-in configuration. `Custom` has no built-in values.
    pub fn preset(p: Preset) -> Result<Self> {
        use ChirpFamily::{Linear, Sinusoidal};
        let (system, lin, sin, delta2, delta5, paper) = match p {
            Preset::Desk => (
                SystemConfig { sample_rate: 0.66e9, n: 128, n_cp: 32, carrier: 6.48e9, l_d: -31, l_u: 32, h: 4, nominal_m: None },
                56.0,
                32.0,
                15,
                10,
                false,
            ),
            Preset::Paper => (
                SystemConfig {
                    sample_rate: 10.56e9,
                    n: 2048,
                    n_cp: 512,
                    carrier: 64.8e9,
                    l_d: -723,
                    l_u: 724,
                    h: 4,
                    nominal_m: Some(1536),
                },
                1382.0,
                1382.0,
                84,
                252,
                true,
            ),
            Preset::Custom => return Err(Error::InvalidConfig("the custom preset has no defaults".into())),
        };
        let schemes = vec![
            SchemeConfig::csc("csc-lin-l1", Linear, lin, 1, 0),
            SchemeConfig::csc("csc-lin-l2", Linear, lin, 2, 0),
            SchemeConfig::csc("csc-lin-l2-is", Linear, lin, 2, delta2),
            SchemeConfig::csc("csc-lin-l5", Linear, lin, 5, 0),
            SchemeConfig::csc("csc-lin-l5-is", Linear, lin, 5, delta5),
            SchemeConfig::csc("csc-sin-l1", Sinusoidal, sin, 1, 0),
            SchemeConfig::csc("csc-sin-l2", Sinusoidal, sin, 2, 0),
            SchemeConfig::csc("csc-sin-l5", Sinusoidal, sin, 5, 0),
            SchemeConfig::plain("dfts-l1", SchemeKind::DftSOfdmIm, 1),
            SchemeConfig::plain("dfts-l2", SchemeKind::DftSOfdmIm, 2),
            SchemeConfig::plain("ofdm-im-l2", SchemeKind::OfdmIm, 2),
        ];
        let radar_schemes = names(&["csc-lin-l1", "csc-lin-l2", "csc-lin-l2-is", "csc-lin-l5", "csc-lin-l5-is", "dfts-l1"]);
        let cfg = Self {
            preset: p,
            seed: 1,
            system,
            schemes,
            pmepr: PmeprConfig {
                schemes: names(&["csc-sin-l1", "csc-sin-l2", "csc-sin-l5", "csc-lin-l2", "csc-lin-l5", "dfts-l2", "ofdm-im-l2"]),
                frames: if paper { 2000 } else { 100_000 },
                oversample: 8,
                mean_power: MeanPowerRef::Nominal,
                step_db: 0.05,
            },
            bler: BlerConfig {
                schemes: names(&["csc-lin-l1", "csc-lin-l2", "csc-lin-l2-is", "csc-lin-l5", "csc-lin-l5-is", "dfts-l2", "ofdm-im-l2"]),
                channel: ChannelKind::Awgn,
                axis: SweepAxis::Snr,
                points_db: (0..=8).map(|i| 2.0 * i as f64 - if paper { 34.0 } else { 16.0 }).collect(),
                min_errors: 100,
                max_trials: if paper { 20_000 } else { 1_000_000 },
                batch: if paper { 1000 } else { 10_000 },
                confidence: 0.95,
                pdp: default_pdp(),
                los_phase: LosPhase::Uniform,
            },
            radar: RadarConfig {
                schemes: radar_schemes.clone(),
                estimators: vec![Estimator::Mf, Estimator::Lmmse],
                scenario: Scenario::Single,
                snr_db: (0..=4).map(|i| 10.0 * i as f64).collect(),
                trials: if paper { 200 } else { 2000 },
                range_min_m: 2.0,
                range_max_m: 3.0,
                spacing_min: 1.5,
                spacing_max: 2.0,
                search: SearchConfig { zoom: 64, stages: 2, update_passes: 2, max_passes: 32, half_cycle_span: 2 },
            },
            resolution: ResolutionConfig {
                schemes: radar_schemes,
                estimators: vec![Estimator::Mf],
                snr_db: 20.0,
                spacing: vec![0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 3.0, 4.0],
                trials: if paper { 100 } else { 1000 },
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses `text` (TOML) over a preset. The preset comes from
    /// `preset_override`, else the file's `preset` key, else `desk`. Tables
    /// merge key by key; arrays replace the preset's arrays wholesale.
    pub fn load(text: Option<&str>, preset_override: Option<Preset>, seed_override: Option<u64>) -> Result<Self> {
        let user: toml::Table = match text {
            Some(t) => toml::from_str(t).map_err(|e| Error::InvalidConfig(e.to_string()))?,
            None => toml::Table::new(),
        };
        let from_file = match user.get("preset") {
            Some(toml::Value::String(s)) => Some(s.parse::<Preset>()?),
            Some(v) => return Err(Error::InvalidConfig(format!("preset must be a string, got {v}"))),
            None => None,
        };
        let preset = preset_override.or(from_file).unwrap_or(Preset::Desk);
        let mut merged = if preset == Preset::Custom {
            user
        } else {
            let mut base = toml::Table::try_from(Self::preset(preset)?).map_err(|e| Error::InvalidConfig(e.to_string()))?;
            merge(&mut base, user);
            base
        };
        merged.insert("preset".into(), toml::Value::try_from(preset).map_err(|e| Error::InvalidConfig(e.to_string()))?);
        let mut cfg: Self = merged.try_into().map_err(|e: toml::de::Error| Error::InvalidConfig(e.to_string()))?;
        if let Some(s) = seed_override {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        let s = &self.system;
        if s.l_d >= 0 || s.l_u <= 0 {
            return bad(format!("band {}..={} must straddle DC", s.l_d, s.l_u));
        }
        if !(s.sample_rate > 0.0) || s.n <= s.m() || s.n_cp == 0 || s.n_cp > s.n || !(s.carrier >= 0.0) {
            return bad("system numerology is inconsistent".into());
        }
        if s.h == 0 || !s.h.is_power_of_two() {
            return bad(format!("PSK order {} must be a power of two", s.h));
        }
        let mut seen = std::collections::BTreeSet::new();
        for sc in &self.schemes {
            if !seen.insert(sc.name.as_str()) {
                return bad(format!("duplicate scheme name {:?}", sc.name));
            }
            sc.modem_config(s)?;
        }
        let lists = [
            ("pmepr", &self.pmepr.schemes),
            ("bler", &self.bler.schemes),
            ("radar", &self.radar.schemes),
            ("resolution", &self.resolution.schemes),
        ];
        for (what, list) in lists {
            for n in list {
                if !seen.contains(n.as_str()) {
                    return bad(format!("{what} refers to unknown scheme {n:?}"));
                }
            }
        }
        if self.pmepr.frames == 0 || self.pmepr.oversample < 4 || !(self.pmepr.step_db > 0.0) {
            return bad("pmepr needs frames >= 1, oversample >= 4 and step_db > 0".into());
        }
        let b = &self.bler;
        if b.points_db.is_empty() || b.max_trials == 0 || b.batch == 0 || !(b.confidence > 0.0 && b.confidence < 1.0) {
            return bad("bler needs points, max_trials >= 1, batch >= 1 and confidence in (0, 1)".into());
        }
        if b.channel == ChannelKind::Rician && b.pdp.is_empty() {
            return bad("rician channel needs a power-delay profile".into());
        }
        let r = &self.radar;
        if r.snr_db.is_empty() || r.trials == 0 || r.estimators.is_empty() {
            return bad("radar needs snr points, trials >= 1 and an estimator".into());
        }
        if !(r.range_min_m > 0.0 && r.range_min_m <= r.range_max_m) || !(r.spacing_min > 0.0 && r.spacing_min <= r.spacing_max) {
            return bad("radar range/spacing intervals are empty".into());
        }
        if r.search.zoom < 2 {
            return bad("search zoom must be >= 2".into());
        }
        let q = &self.resolution;
        if q.spacing.is_empty() || q.trials == 0 || q.estimators.is_empty() || q.spacing.iter().any(|v| !(*v > 0.0)) {
            return bad("resolution needs positive spacings, trials >= 1 and an estimator".into());
        }
        Ok(())
    }

    pub fn scheme(&self, name: &str) -> Result<&SchemeConfig> {
        self.schemes
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown scheme {name:?}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        let mut s = String::with_capacity(16);
        for b in &digest[..8] {
            write!(s, "{b:02x}").unwrap();
        }
        s
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
