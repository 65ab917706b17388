//! Flat `section.key = value` experiment configuration.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use skbmlfx_core::channel::ChannelParams;
use skbmlfx_core::data::SynthConfig;
use skbmlfx_core::planner::{CccpConfig, Level};
use skbmlfx_core::skb::SkbSelection;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for '{key}': {value}")]
    BadValue { line: usize, key: String, value: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// A planner run by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlannerKind {
    Fixed(Level),
    LpRelax,
    Lagrangian,
    Cccp,
    BruteForce,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 8] = [
        PlannerKind::Fixed(Level::Visual),
        PlannerKind::Fixed(Level::Intermediate),
        PlannerKind::Fixed(Level::Semantic),
        PlannerKind::Fixed(Level::Class),
        PlannerKind::LpRelax,
        PlannerKind::Lagrangian,
        PlannerKind::Cccp,
        PlannerKind::BruteForce,
    ];
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fixed(l) => write!(f, "level{}", l.number()),
            Self::LpRelax => f.write_str("lp_relax"),
            Self::Lagrangian => f.write_str("lagrangian"),
            Self::Cccp => f.write_str("cccp"),
            Self::BruteForce => f.write_str("brute_force"),
        }
    }
}

impl FromStr for PlannerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|p| p.to_string() == s)
            .ok_or_else(|| format!("unknown planner '{s}'"))
    }
}

/// Latency budget: fixed, or the midpoint of the all-level-2 and all-level-4
/// average latencies of each trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    Auto,
    Seconds(f64),
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Auto => f.write_str("auto"),
            Self::Seconds(s) => write!(f, "{s:e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// World shape; its seed is replaced per trial.
    pub synth: SynthConfig,
    pub channel: ChannelParams,
    pub k: usize,
    pub lambda_tx: f64,
    pub lambda_rx: f64,
    pub tau: Budget,
    /// Test samples per trial.
    pub m: usize,
    pub skb_tx: SkbSelection,
    pub skb_rx: SkbSelection,
    pub planners: Vec<PlannerKind>,
    pub cccp: CccpConfig,
    pub lagrangian_tol: f64,
    pub lagrangian_steps: usize,
    pub trials: usize,
    pub base_seed: u64,
    pub out_dir: PathBuf,
    /// Adds a wall-clock column to CSV output, which makes files differ between runs.
    pub timing: bool,
    pub sweep_sizes: Vec<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            synth: SynthConfig::default(),
            channel: ChannelParams::default(),
            k: 8,
            lambda_tx: 1.0,
            lambda_rx: 1.0,
            tau: Budget::Auto,
            m: 64,
            skb_tx: SkbSelection::Full,
            skb_rx: SkbSelection::RandomK { k: 7, seed: 1 },
            planners: PlannerKind::ALL.to_vec(),
            cccp: CccpConfig::default(),
            lagrangian_tol: 1e-9,
            lagrangian_steps: 200,
            trials: 50,
            base_seed: 0,
            out_dir: PathBuf::from("out"),
            timing: false,
            sweep_sizes: vec![2, 4, 6, 8, 10],
        }
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                reason: format!("expected 'section.key = value', found '{content}'"),
            })?;
            cfg.set(line, key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::BadValue {
            line,
            key: key.to_string(),
            value: value.to_string(),
        };
        fn num<T: FromStr>(v: &str, bad: impl Fn() -> ConfigError) -> Result<T, ConfigError> {
            v.parse().map_err(|_| bad())
        }
        let list = |v: &str| -> Result<Vec<usize>, ConfigError> {
            v.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
        };
        match key {
            "synth.c_total" => self.synth.c_total = num(value, bad)?,
            "synth.c_seen_tx" => self.synth.c_seen_tx = num(value, bad)?,
            "synth.c_seen_rx" => self.synth.c_seen_rx = num(value, bad)?,
            "synth.d_v" => self.synth.d_v = num(value, bad)?,
            "synth.d_s" => self.synth.d_s = num(value, bad)?,
            "synth.n_per_class" => self.synth.n_per_class = num(value, bad)?,
            "synth.noise_sigma" => self.synth.noise_sigma = num(value, bad)?,
            "channel.beta0_db" => self.channel.beta0_db = num(value, bad)?,
            "channel.d0_m" => self.channel.d0_m = num(value, bad)?,
            "channel.d_m" => self.channel.d_m = num(value, bad)?,
            "channel.zeta" => self.channel.zeta = num(value, bad)?,
            "channel.bandwidth_hz" => self.channel.bandwidth_hz = num(value, bad)?,
            "channel.noise_dbm_per_hz" => self.channel.noise_dbm_per_hz = num(value, bad)?,
            "channel.power_dbm" => self.channel.power_dbm = num(value, bad)?,
            "channel.q_bits" => self.channel.q_bits = num(value, bad)?,
            "extractor.k" => self.k = num(value, bad)?,
            "extractor.lambda_tx" => self.lambda_tx = num(value, bad)?,
            "extractor.lambda_rx" => self.lambda_rx = num(value, bad)?,
            "plan.tau" => {
                self.tau = if value == "auto" {
                    Budget::Auto
                } else {
                    Budget::Seconds(num(value, bad)?)
                }
            }
            "plan.m" => self.m = num(value, bad)?,
            "plan.planners" => {
                self.planners = value
                    .split(',')
                    .map(|t| t.trim().parse().map_err(|_| bad()))
                    .collect::<Result<_, _>>()?
            }
            "cccp.gamma0" => self.cccp.gamma0 = num(value, bad)?,
            "cccp.gamma_growth" => self.cccp.gamma_growth = num(value, bad)?,
            "cccp.restarts" => self.cccp.restarts = num(value, bad)?,
            "cccp.tol" => self.cccp.tol = num(value, bad)?,
            "cccp.max_iters" => self.cccp.max_iters = num(value, bad)?,
            "cccp.polish" => self.cccp.polish = num(value, bad)?,
            "lagrangian.bisect_tol" => self.lagrangian_tol = num(value, bad)?,
            "lagrangian.max_steps" => self.lagrangian_steps = num(value, bad)?,
            "skb.tx" => self.skb_tx = num(value, bad)?,
            "skb.rx" => self.skb_rx = num(value, bad)?,
            "run.trials" => self.trials = num(value, bad)?,
            "run.base_seed" => self.base_seed = num(value, bad)?,
            "run.out_dir" => self.out_dir = PathBuf::from(value),
            "output.timing" => self.timing = num(value, bad)?,
            "sweep.sizes" => self.sweep_sizes = list(value)?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.planners.is_empty() {
            return invalid("at least one planner is required");
        }
        if self.trials == 0 {
            return invalid("run.trials must be at least 1");
        }
        if self.m == 0 {
            return invalid("plan.m must be at least 1");
        }
        if self.k == 0 || self.k > self.synth.d_s.min(self.synth.d_v) {
            return invalid("extractor.k must lie in 1..=min(d_v, d_s)");
        }
        for l in [self.lambda_tx, self.lambda_rx] {
            if !(l.is_finite() && l > 0.0) {
                return invalid("extractor lambdas must be positive");
            }
        }
        if let Budget::Seconds(t) = self.tau {
            if !(t.is_finite() && t > 0.0) {
                return invalid("plan.tau must be positive or 'auto'");
            }
        }
        self.synth_for(0)
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// World configuration for one trial seed.
    pub fn synth_for(&self, seed: u64) -> SynthConfig {
        SynthConfig {
            k_hint: self.k,
            seed,
            ..self.synth
        }
    }

    /// Text form accepted by [`ExperimentConfig::parse`].
    pub fn to_text(&self) -> String {
        let s = &self.synth;
        let c = &self.channel;
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("synth.c_total", s.c_total.to_string());
        put("synth.c_seen_tx", s.c_seen_tx.to_string());
        put("synth.c_seen_rx", s.c_seen_rx.to_string());
        put("synth.d_v", s.d_v.to_string());
        put("synth.d_s", s.d_s.to_string());
        put("synth.n_per_class", s.n_per_class.to_string());
        put("synth.noise_sigma", format!("{:e}", s.noise_sigma));
        put("channel.beta0_db", format!("{:e}", c.beta0_db));
        put("channel.d0_m", format!("{:e}", c.d0_m));
        put("channel.d_m", format!("{:e}", c.d_m));
        put("channel.zeta", format!("{:e}", c.zeta));
        put("channel.bandwidth_hz", format!("{:e}", c.bandwidth_hz));
        put("channel.noise_dbm_per_hz", format!("{:e}", c.noise_dbm_per_hz));
        put("channel.power_dbm", format!("{:e}", c.power_dbm));
        put("channel.q_bits", c.q_bits.to_string());
        put("extractor.k", self.k.to_string());
        put("extractor.lambda_tx", format!("{:e}", self.lambda_tx));
        put("extractor.lambda_rx", format!("{:e}", self.lambda_rx));
        put("plan.tau", self.tau.to_string());
        put("plan.m", self.m.to_string());
        put("plan.planners", join(&self.planners));
        put("cccp.gamma0", format!("{:e}", self.cccp.gamma0));
        put("cccp.gamma_growth", format!("{:e}", self.cccp.gamma_growth));
        put("cccp.restarts", self.cccp.restarts.to_string());
        put("cccp.tol", format!("{:e}", self.cccp.tol));
        put("cccp.max_iters", self.cccp.max_iters.to_string());
        put("cccp.polish", self.cccp.polish.to_string());
        put("lagrangian.bisect_tol", format!("{:e}", self.lagrangian_tol));
        put("lagrangian.max_steps", self.lagrangian_steps.to_string());
        put("skb.tx", self.skb_tx.to_string());
        put("skb.rx", self.skb_rx.to_string());
        put("run.trials", self.trials.to_string());
        put("run.base_seed", self.base_seed.to_string());
        put("run.out_dir", self.out_dir.display().to_string());
        put("output.timing", self.timing.to_string());
        put("sweep.sizes", join(&self.sweep_sizes));
        out
    }
}
