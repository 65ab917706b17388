//! Trial orchestration for the latency/accuracy tradeoff and the SKB sweeps.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Map, Value};
use skbmlfx_core::channel::{achievable_rate, ChannelError};
use skbmlfx_core::data::{generate, DataError, GeneratedWorld, TestSample};
use skbmlfx_core::extractor::{train_extractor, ExtractorError, ExtractorModel};
use skbmlfx_core::lossmodel::{compute_menu, effective_decision, instance_from_menus, LossError, PartyContext, SampleMenu};
use skbmlfx_core::planner::{
    evaluate, solve_brute_force, solve_cccp, solve_fixed_level, solve_lagrangian,
    solve_linear_relaxation, Assignment, CccpConfig, Instance, Level, PlanError, PlannerReport,
    BRUTE_FORCE_CAP,
};
use skbmlfx_core::rng::mix_seed;
use skbmlfx_core::skb::{build_skb, SkbError, SkbSelection};

use crate::config::{Budget, ConfigError, ExperimentConfig, PlannerKind};
use crate::io::{self, IoError};
use crate::stats::{spearman, Spearman};

/// Environment variable capping the worker threads.
pub const WORKERS_ENV: &str = "SKBMLFX_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Extractor(#[from] ExtractorError),
    #[error(transparent)]
    Skb(#[from] SkbError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<HarnessError>,
    },
    #[error("{0}")]
    Invalid(String),
}

/// World, trained parties and test subset of one trial, shared by every
/// planner and SKB size run on it.
#[derive(Debug)]
pub struct PreparedTrial {
    pub trial: usize,
    pub seed: u64,
    pub world: GeneratedWorld,
    pub tx_model: Arc<ExtractorModel>,
    pub rx_model: Arc<ExtractorModel>,
    pub samples: Vec<usize>,
}

impl PreparedTrial {
    pub fn new(cfg: &ExperimentConfig, trial: usize) -> Result<Self, HarnessError> {
        let seed = mix_seed(cfg.base_seed, trial as u64);
        let world = generate(&cfg.synth_for(seed))?;
        let tx_model = Arc::new(train_extractor(&world.tx_train, cfg.k, cfg.lambda_tx)?);
        let rx_model = if world.shared_training() && cfg.lambda_rx == cfg.lambda_tx {
            Arc::clone(&tx_model)
        } else {
            Arc::new(train_extractor(&world.rx_train, cfg.k, cfg.lambda_rx)?)
        };
        let samples = world.test_subset(cfg.m, mix_seed(seed, 3));
        Ok(Self {
            trial,
            seed,
            world,
            tx_model,
            rx_model,
            samples,
        })
    }

    pub fn sample(&self, i: usize) -> &TestSample {
        &self.world.test[self.samples[i]]
    }
}

/// One planner's result on one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerOutcome {
    pub planner: PlannerKind,
    pub report: PlannerReport,
    /// Fraction of samples whose receiver decision is the true class.
    pub accuracy: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial: usize,
    pub tau: f64,
    pub instance: Instance,
    pub menus: Vec<SampleMenu>,
    pub outcomes: Vec<PlannerOutcome>,
}

impl TrialResult {
    pub fn outcome(&self, planner: PlannerKind) -> Option<&PlannerOutcome> {
        self.outcomes.iter().find(|o| o.planner == planner)
    }
}

/// Fraction of samples whose effective receiver decision matches the truth.
pub fn accuracy(prepared: &PreparedTrial, menus: &[SampleMenu], a: &Assignment) -> f64 {
    let hits = a
        .levels()
        .iter()
        .zip(menus)
        .enumerate()
        .filter(|(i, (level, menu))| effective_decision(menu, **level) == prepared.sample(*i).class)
        .count();
    hits as f64 / menus.len() as f64
}

/// Builds menus for the given knowledge bases and runs every configured planner.
pub fn run_trial(
    cfg: &ExperimentConfig,
    prepared: &PreparedTrial,
    skb_tx: &SkbSelection,
    skb_rx: &SkbSelection,
) -> Result<TrialResult, HarnessError> {
    let protos = prepared.world.test_prototypes();
    let trial = prepared.trial as u64;
    let tx_skb = build_skb(Arc::clone(&protos), &skb_tx.for_trial(trial))?;
    let rx_skb = build_skb(protos, &skb_rx.for_trial(trial))?;
    let tx = PartyContext::new(&prepared.tx_model, &tx_skb)?;
    let rx = PartyContext::new(&prepared.rx_model, &rx_skb)?;
    let rate = achievable_rate(&cfg.channel)?;
    let menus = (0..prepared.samples.len())
        .map(|i| compute_menu(&prepared.sample(i).v, tx, rx, &cfg.channel, rate))
        .collect::<Result<Vec<_>, _>>()?;

    let probe = instance_from_menus(&menus, f64::MAX)?;
    let tau = match cfg.tau {
        Budget::Seconds(t) => t,
        Budget::Auto => {
            let lat = |l| evaluate(&probe, &Assignment::uniform(l, probe.m())).map(|r| r.avg_latency);
            0.5 * (lat(Level::Intermediate)? + lat(Level::Class)?)
        }
    };
    let instance = probe.with_tau(tau)?;
    let cccp = CccpConfig {
        seed: prepared.seed,
        ..cfg.cccp
    };

    let mut outcomes = Vec::with_capacity(cfg.planners.len());
    for &planner in &cfg.planners {
        if planner == PlannerKind::BruteForce && instance.m() > BRUTE_FORCE_CAP {
            continue;
        }
        let start = Instant::now();
        let report = match planner {
            PlannerKind::Fixed(level) => solve_fixed_level(&instance, level)?,
            PlannerKind::LpRelax => solve_linear_relaxation(&instance)?,
            PlannerKind::Lagrangian => solve_lagrangian(&instance, cfg.lagrangian_tol, cfg.lagrangian_steps)?,
            PlannerKind::Cccp => solve_cccp(&instance, &cccp)?,
            PlannerKind::BruteForce => solve_brute_force(&instance)?,
        };
        let wall_time_s = start.elapsed().as_secs_f64();
        outcomes.push(PlannerOutcome {
            planner,
            accuracy: accuracy(prepared, &menus, &report.assignment),
            report,
            wall_time_s,
        });
    }
    Ok(TrialResult {
        trial: prepared.trial,
        tau,
        instance,
        menus,
        outcomes,
    })
}

/// Worker count from [`WORKERS_ENV`], else rayon's default.
pub fn worker_count() -> Option<usize> {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Runs `f` over `0..n` in parallel, keeping index order.
fn parallel<T: Send>(
    n: usize,
    f: impl Fn(usize) -> Result<T, HarnessError> + Sync + Send,
) -> Vec<Result<T, HarnessError>> {
    let run = || (0..n).into_par_iter().map(&f).collect::<Vec<_>>();
    match worker_count() {
        Some(threads) => match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        },
        None => run(),
    }
}

/// Splits ordered results into the completed prefix and the first error.
fn ordered<T>(results: Vec<Result<T, HarnessError>>) -> (Vec<T>, Option<HarnessError>) {
    let mut done = Vec::with_capacity(results.len());
    for (trial, r) in results.into_iter().enumerate() {
        match r {
            Ok(t) => done.push(t),
            Err(e) => {
                return (
                    done,
                    Some(HarnessError::Trial {
                        trial,
                        source: Box::new(e),
                    }),
                )
            }
        }
    }
    (done, None)
}

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub const TRADEOFF_HEADER: &str = "trial,planner,avg_loss,avg_latency_s,accuracy,feasible";

pub fn tradeoff_csv(results: &[TrialResult], timing: bool) -> String {
    let mut out = String::from(TRADEOFF_HEADER);
    if timing {
        out.push_str(",wall_time_s");
    }
    out.push('\n');
    for t in results {
        for o in &t.outcomes {
            let _ = write!(
                out,
                "{},{},{},{},{},{}",
                t.trial,
                o.planner,
                real(o.report.avg_loss),
                real(o.report.avg_latency),
                real(o.accuracy),
                o.report.feasible
            );
            if timing {
                let _ = write!(out, ",{}", real(o.wall_time_s));
            }
            out.push('\n');
        }
    }
    out
}

/// Whether CCCP's latency is no higher than every fixed level's while its
/// accuracy is within `margin` of the best fixed level. `None` when any of
/// those planners did not run.
pub fn ordering_holds(t: &TrialResult, margin: f64) -> Option<bool> {
    let c = t.outcome(PlannerKind::Cccp)?;
    let fixed: Vec<&PlannerOutcome> = Level::ALL
        .iter()
        .map(|&l| t.outcome(PlannerKind::Fixed(l)))
        .collect::<Option<_>>()?;
    let fastest = fixed.iter().map(|o| o.report.avg_latency).fold(f64::INFINITY, f64::min);
    let best = fixed.iter().map(|o| o.accuracy).fold(0.0, f64::max);
    Some(c.report.avg_latency <= fastest * (1.0 + 1e-12) && c.accuracy >= best - margin)
}

#[derive(Debug)]
pub struct TradeoffOutput {
    pub results: Vec<TrialResult>,
    pub csv: String,
    pub summary: Value,
}

fn planner_summary(results: &[TrialResult], planner: PlannerKind) -> Option<Value> {
    let runs: Vec<&PlannerOutcome> = results.iter().filter_map(|t| t.outcome(planner)).collect();
    if runs.is_empty() {
        return None;
    }
    let n = runs.len() as f64;
    let mean = |f: &dyn Fn(&PlannerOutcome) -> f64| runs.iter().map(|o| f(o)).sum::<f64>() / n;
    Some(json!({
        "runs": runs.len(),
        "mean_accuracy": mean(&|o| o.accuracy),
        "mean_avg_latency_s": mean(&|o| o.report.avg_latency),
        "mean_avg_loss": mean(&|o| o.report.avg_loss),
        "feasible_fraction": mean(&|o| f64::from(u8::from(o.report.feasible))),
        "mean_wall_time_s": mean(&|o| o.wall_time_s),
    }))
}

/// All trials of the tradeoff experiment. Completed trials are returned with
/// the error when a later one fails.
#[allow(clippy::result_large_err)]
pub fn run_tradeoff(cfg: &ExperimentConfig) -> Result<TradeoffOutput, (TradeoffOutput, HarnessError)> {
    let start = Instant::now();
    let results = parallel(cfg.trials, |trial| {
        let prepared = PreparedTrial::new(cfg, trial)?;
        run_trial(cfg, &prepared, &cfg.skb_tx, &cfg.skb_rx)
    });
    let (results, error) = ordered(results);
    let mut planners = Map::new();
    for &p in &cfg.planners {
        if let Some(v) = planner_summary(&results, p) {
            planners.insert(p.to_string(), v);
        }
    }
    let judged: Vec<bool> = results.iter().filter_map(|t| ordering_holds(t, 0.02)).collect();
    let summary = json!({
        "experiment": "tradeoff",
        "trials": results.len(),
        "samples_per_trial": cfg.m,
        "planners": planners,
        "cccp_ordering": {
            "judged": judged.len(),
            "holds": judged.iter().filter(|&&b| b).count(),
        },
        "wall_time_s": start.elapsed().as_secs_f64(),
        "config": cfg.to_text(),
    });
    let out = TradeoffOutput {
        csv: tradeoff_csv(&results, cfg.timing),
        results,
        summary,
    };
    match error {
        None => Ok(out),
        Some(e) => Err((out, e)),
    }
}

/// Runs the tradeoff experiment and writes `tradeoff.csv` and `summary.json`
/// into `dir`; completed trials are written even when a later one fails.
pub fn write_tradeoff(cfg: &ExperimentConfig, dir: &Path) -> Result<TradeoffOutput, HarnessError> {
    let (out, error) = match run_tradeoff(cfg) {
        Ok(out) => (out, None),
        Err((out, e)) => (out, Some(e)),
    };
    io::write(&dir.join("tradeoff.csv"), &out.csv)?;
    io::write(&dir.join("summary.json"), &pretty(&out.summary))?;
    match error {
        None => Ok(out),
        Some(e) => Err(e),
    }
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serialises");
    s.push('\n');
    s
}

/// Which party's knowledge base a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Tx,
    Rx,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Tx => "tx",
            Side::Rx => "rx",
        })
    }
}

impl std::str::FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "tx" => Ok(Side::Tx),
            "rx" => Ok(Side::Rx),
            other => Err(format!("side must be 'tx' or 'rx', got '{other}'")),
        }
    }
}

/// One planner on one trial at one knowledge-base size.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub trial: usize,
    pub size: usize,
    pub planner: PlannerKind,
    pub accuracy: f64,
    pub avg_latency: f64,
    pub avg_loss: f64,
    pub feasible: bool,
}

#[derive(Debug)]
pub struct SweepOutput {
    pub side: Side,
    pub sizes: Vec<usize>,
    pub points: Vec<SweepPoint>,
    /// Per (size, planner): mean accuracy, latency, loss and feasible fraction.
    pub csv: String,
    pub trials_csv: String,
    pub summary: Value,
}

impl SweepOutput {
    pub fn points_for(&self, planner: PlannerKind) -> impl Iterator<Item = &SweepPoint> {
        self.points.iter().filter(move |p| p.planner == planner)
    }

    pub fn mean_accuracy(&self, planner: PlannerKind, size: usize) -> Option<f64> {
        let acc: Vec<f64> = self
            .points_for(planner)
            .filter(|p| p.size == size)
            .map(|p| p.accuracy)
            .collect();
        (!acc.is_empty()).then(|| acc.iter().sum::<f64>() / acc.len() as f64)
    }

    /// Mean accuracy of `planner` minus that of `baseline` at one size, over
    /// the trials where the baseline met the budget. Returns the trial count too.
    pub fn paired_gap(&self, planner: PlannerKind, baseline: PlannerKind, size: usize) -> Option<(usize, f64)> {
        let pick = |p: PlannerKind| {
            self.points
                .iter()
                .filter(move |q| q.planner == p && q.size == size)
                .map(|q| (q.trial, q))
                .collect::<std::collections::BTreeMap<_, _>>()
        };
        let ours = pick(planner);
        let gaps: Vec<f64> = pick(baseline)
            .into_iter()
            .filter(|(_, b)| b.feasible)
            .filter_map(|(t, b)| ours.get(&t).map(|o| o.accuracy - b.accuracy))
            .collect();
        (!gaps.is_empty()).then(|| (gaps.len(), gaps.iter().sum::<f64>() / gaps.len() as f64))
    }

    /// Rank correlation between size and accuracy over every (trial, size) point.
    pub fn trend(&self, planner: PlannerKind) -> Option<Spearman> {
        let (x, y): (Vec<f64>, Vec<f64>) =
            self.points_for(planner).map(|p| (p.size as f64, p.accuracy)).unzip();
        spearman(&x, &y)
    }
}

/// Knowledge-base rule used at each sweep size: nested random draws that
/// keep the configured seed when there is one.
fn sized(selection: &SkbSelection, size: usize, base_seed: u64) -> SkbSelection {
    match selection {
        SkbSelection::RandomK { .. } => selection.with_size(size),
        _ => SkbSelection::RandomK {
            k: size,
            seed: mix_seed(base_seed, 0x5eed),
        },
    }
}

/// Mean accuracy per knowledge-base size with the other party fixed to its
/// configured selection.
pub fn run_skb_sweep(cfg: &ExperimentConfig, side: Side, sizes: &[usize]) -> Result<SweepOutput, HarnessError> {
    let classes = cfg.synth.c_total - cfg.synth.c_seen_tx.max(cfg.synth.c_seen_rx);
    if sizes.is_empty() || sizes.iter().any(|&s| s == 0 || s > classes) {
        return Err(HarnessError::Invalid(format!(
            "sweep sizes must lie in 1..={classes}, got {sizes:?}"
        )));
    }
    let start = Instant::now();
    let results = parallel(cfg.trials, |trial| {
        let prepared = PreparedTrial::new(cfg, trial)?;
        let mut points = Vec::new();
        for &size in sizes {
            let (tx, rx) = match side {
                Side::Tx => (sized(&cfg.skb_tx, size, cfg.base_seed), cfg.skb_rx.clone()),
                Side::Rx => (cfg.skb_tx.clone(), sized(&cfg.skb_rx, size, cfg.base_seed)),
            };
            let t = run_trial(cfg, &prepared, &tx, &rx)?;
            points.extend(t.outcomes.iter().map(|o| SweepPoint {
                trial,
                size,
                planner: o.planner,
                accuracy: o.accuracy,
                avg_latency: o.report.avg_latency,
                avg_loss: o.report.avg_loss,
                feasible: o.report.feasible,
            }));
        }
        Ok(points)
    });
    let (done, error) = ordered(results);
    if let Some(e) = error {
        return Err(e);
    }
    let points: Vec<SweepPoint> = done.into_iter().flatten().collect();

    let mut csv = String::from("side,size,planner,trials,mean_accuracy,mean_avg_latency_s,mean_avg_loss,feasible_fraction\n");
    let mut trials_csv = String::from("side,trial,size,planner,avg_loss,avg_latency_s,accuracy,feasible\n");
    for p in &points {
        let _ = writeln!(
            trials_csv,
            "{side},{},{},{},{},{},{},{}",
            p.trial,
            p.size,
            p.planner,
            real(p.avg_loss),
            real(p.avg_latency),
            real(p.accuracy),
            p.feasible
        );
    }
    let mut means = Map::new();
    let mut trends = Map::new();
    for &planner in &cfg.planners {
        let mut per_size = Vec::new();
        for &size in sizes {
            let group: Vec<&SweepPoint> = points
                .iter()
                .filter(|p| p.planner == planner && p.size == size)
                .collect();
            if group.is_empty() {
                continue;
            }
            let n = group.len() as f64;
            let mean = |f: &dyn Fn(&SweepPoint) -> f64| group.iter().map(|p| f(p)).sum::<f64>() / n;
            let acc = mean(&|p| p.accuracy);
            per_size.push(acc);
            let _ = writeln!(
                csv,
                "{side},{size},{planner},{},{},{},{},{}",
                group.len(),
                real(acc),
                real(mean(&|p| p.avg_latency)),
                real(mean(&|p| p.avg_loss)),
                real(mean(&|p| f64::from(u8::from(p.feasible))))
            );
        }
        if per_size.is_empty() {
            continue;
        }
        means.insert(planner.to_string(), json!(per_size));
        let (x, y): (Vec<f64>, Vec<f64>) = points
            .iter()
            .filter(|p| p.planner == planner)
            .map(|p| (p.size as f64, p.accuracy))
            .unzip();
        if let Some(s) = spearman(&x, &y) {
            trends.insert(planner.to_string(), json!({"rho": s.rho, "p_value": s.p_value, "n": s.n}));
        }
    }
    let summary = json!({
        "experiment": "sweep",
        "side": side.to_string(),
        "sizes": sizes,
        "trials": cfg.trials,
        "mean_accuracy": means,
        "spearman": trends,
        "wall_time_s": start.elapsed().as_secs_f64(),
        "config": cfg.to_text(),
    });
    Ok(SweepOutput {
        side,
        sizes: sizes.to_vec(),
        points,
        csv,
        trials_csv,
        summary,
    })
}

/// Runs a sweep and writes `sweep_<side>.csv`, `sweep_<side>_trials.csv` and
/// `sweep_<side>_summary.json` into `dir`.
pub fn write_skb_sweep(
    cfg: &ExperimentConfig,
    side: Side,
    sizes: &[usize],
    dir: &Path,
) -> Result<SweepOutput, HarnessError> {
    let out = run_skb_sweep(cfg, side, sizes)?;
    io::write(&dir.join(format!("sweep_{side}.csv")), &out.csv)?;
    io::write(&dir.join(format!("sweep_{side}_trials.csv")), &out.trials_csv)?;
    io::write(&dir.join(format!("sweep_{side}_summary.json")), &pretty(&out.summary))?;
    Ok(out)
}
