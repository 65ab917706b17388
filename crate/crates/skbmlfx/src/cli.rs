//! Command-line surface. Exit codes: 0 success, 1 usage error, 2 runtime error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand};
use serde_json::json;
use skbmlfx_core::data::generate;
use skbmlfx_core::extractor::train_extractor;
use skbmlfx_core::linalg::{eigh_sym, pinv};
use skbmlfx_core::planner::{
    evaluate, random_instance, solve_brute_force, solve_cccp, solve_fixed_level, solve_lagrangian,
    solve_linear_relaxation, solve_lp_mck, CccpConfig, PlannerReport,
};
use skbmlfx_core::rng::{mix_seed, seeded, standard_normal};
use skbmlfx_core::Matrix;

use crate::config::{ExperimentConfig, PlannerKind};
use crate::harness::{self, HarnessError, Side};
use crate::io;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "skbmlfx", version, about = "Multi-level feature transmission planner and experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// `default` or a path to a `section.key = value` file.
    #[arg(long, default_value = "default")]
    config: String,
    /// Overrides `run.base_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `run.out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Writes a synthetic world: training features per party, test features and prototypes.
    GenData(Common),
    /// Trains both parties' extractors and writes them as JSON.
    Train(Common),
    /// Solves a planning instance read from CSV and prints the report as JSON.
    Plan {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "cccp")]
        planner: PlannerKind,
        /// Overrides the budget stored in the file.
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Writes the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Latency/accuracy tradeoff over all planners.
    Tradeoff(Common),
    /// Accuracy against knowledge-base size on one side.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        side: Side,
        /// Comma-separated sizes; defaults to `sweep.sizes`.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
    },
    /// CCCP against exhaustive search on random instances.
    Oracle {
        #[arg(long, default_value_t = 8)]
        m: usize,
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Quick invariant checks over kernels, planners and the pipeline.
    Selftest,
}

type Failure = Box<dyn std::error::Error>;

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let mut text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                if !text.contains("Usage:") {
                    text.push_str(&format!("\n{}\n", Cli::command().render_usage()));
                }
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_RUNTIME
        }
    }
}

fn load_config(c: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = if c.config == "default" {
        ExperimentConfig::default()
    } else {
        let path = Path::new(&c.config);
        let text = std::fs::read_to_string(path).map_err(|source| io::IoError::IoFailure {
            path: path.display().to_string(),
            source,
        })?;
        ExperimentConfig::parse(&text)?
    };
    if let Some(seed) = c.seed {
        cfg.base_seed = seed;
    }
    if let Some(dir) = &c.out {
        cfg.out_dir = dir.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32, Failure> {
    match cmd {
        Command::GenData(c) => {
            let cfg = load_config(&c)?;
            let world = generate(&cfg.synth_for(cfg.base_seed))?;
            let dir = &cfg.out_dir;
            let d_s = cfg.synth.d_s;
            io::save_features(&dir.join("tx_train.csv"), world.tx_train.visual(), world.tx_train.labels(), d_s)?;
            io::save_features(&dir.join("rx_train.csv"), world.rx_train.visual(), world.rx_train.labels(), d_s)?;
            let (visual, labels): (Vec<&[f64]>, Vec<_>) = world.test.iter().map(|t| (t.v.as_slice(), t.class)).unzip();
            let test = Matrix::from_columns(&visual)?;
            io::save_features(&dir.join("test.csv"), &test, &labels, d_s)?;
            io::save_prototypes(&dir.join("prototypes.csv"), &world.prototypes)?;
            writeln!(out, "wrote {}", dir.display())?;
        }
        Command::Train(c) => {
            let cfg = load_config(&c)?;
            let world = generate(&cfg.synth_for(cfg.base_seed))?;
            for (name, set, lambda) in [
                ("model_tx.json", &world.tx_train, cfg.lambda_tx),
                ("model_rx.json", &world.rx_train, cfg.lambda_rx),
            ] {
                let model = train_extractor(set, cfg.k, lambda)?;
                let mut text = serde_json::to_string_pretty(&model)?;
                text.push('\n');
                io::write(&cfg.out_dir.join(name), &text)?;
            }
            writeln!(out, "wrote {}", cfg.out_dir.display())?;
        }
        Command::Plan {
            instance,
            planner,
            tau,
            seed,
            out: path,
        } => {
            let mut inst = io::load_instance(&instance)?;
            if let Some(t) = tau {
                inst = inst.with_tau(t)?;
            }
            let report = plan(&inst, planner, seed.unwrap_or(0))?;
            let text = io::report_to_json(&report);
            match path {
                Some(p) => io::write(&p, &text)?,
                None => write!(out, "{text}")?,
            }
        }
        Command::Tradeoff(c) => {
            let cfg = load_config(&c)?;
            let result = harness::write_tradeoff(&cfg, &cfg.out_dir)?;
            let order = &result.summary["cccp_ordering"];
            writeln!(
                out,
                "wrote {} ({} trials; cccp ordering held on {}/{})",
                cfg.out_dir.display(),
                result.results.len(),
                order["holds"],
                order["judged"]
            )?;
        }
        Command::Sweep { common, side, sizes } => {
            let cfg = load_config(&common)?;
            let sizes = sizes.unwrap_or_else(|| cfg.sweep_sizes.clone());
            let result = harness::write_skb_sweep(&cfg, side, &sizes, &cfg.out_dir)?;
            match result.trend(PlannerKind::Cccp) {
                Some(s) => writeln!(out, "sweep {side}: cccp spearman rho {:.4} p {:.3e}", s.rho, s.p_value)?,
                None => writeln!(out, "sweep {side}: cccp trend undefined")?,
            }
        }
        Command::Oracle { m, instances, seed } => {
            let o = oracle(m, instances, seed)?;
            writeln!(out, "{}", serde_json::to_string(&o)?)?;
        }
        Command::Selftest => return selftest(out),
    }
    Ok(EXIT_OK)
}

/// Runs one planner; `seed` only affects CCCP restarts.
pub fn plan(inst: &skbmlfx_core::planner::Instance, planner: PlannerKind, seed: u64) -> Result<PlannerReport, HarnessError> {
    Ok(match planner {
        PlannerKind::Fixed(l) => solve_fixed_level(inst, l)?,
        PlannerKind::LpRelax => solve_linear_relaxation(inst)?,
        PlannerKind::Lagrangian => solve_lagrangian(inst, 1e-9, 200)?,
        PlannerKind::Cccp => solve_cccp(inst, &CccpConfig { seed, ..CccpConfig::default() })?,
        PlannerKind::BruteForce => solve_brute_force(inst)?,
    })
}

/// Match statistics of CCCP against exhaustive search.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct OracleSummary {
    pub m: usize,
    pub instances: usize,
    pub matches: usize,
    pub match_rate: f64,
    pub worst_ratio: f64,
    pub all_feasible: bool,
}

pub fn oracle(m: usize, instances: usize, seed: u64) -> Result<OracleSummary, HarnessError> {
    if instances == 0 {
        return Err(HarnessError::Invalid("instances must be at least 1".into()));
    }
    let mut matches = 0;
    let mut worst: f64 = 1.0;
    let mut all_feasible = true;
    for i in 0..instances {
        let s = mix_seed(seed, i as u64);
        let inst = random_instance(m, s);
        let exact = solve_brute_force(&inst)?;
        let c = solve_cccp(&inst, &CccpConfig { seed: s, ..CccpConfig::default() })?;
        all_feasible &= c.feasible;
        let ratio = c.avg_loss / exact.avg_loss;
        if c.avg_loss <= exact.avg_loss + 1e-9 * exact.avg_loss.abs().max(1.0) {
            matches += 1;
        }
        worst = worst.max(ratio);
    }
    Ok(OracleSummary {
        m,
        instances,
        matches,
        match_rate: matches as f64 / instances as f64,
        worst_ratio: worst,
        all_feasible,
    })
}

fn selftest(out: &mut dyn Write) -> Result<i32, Failure> {
    let mut failed = 0;
    let mut check = |name: &str, ok: bool, out: &mut dyn Write| -> std::io::Result<()> {
        failed += usize::from(!ok);
        writeln!(out, "{} {name}", if ok { "ok  " } else { "FAIL" })
    };

    let mut rng = seeded(11);
    let n = 12;
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let x = standard_normal(&mut rng);
            a[(i, j)] = x;
            a[(j, i)] = x;
        }
    }
    let eig = eigh_sym(&a)?;
    let recon = eig.vectors.matmul(&Matrix::diag(&eig.values)).matmul_t(&eig.vectors);
    check("eigendecomposition reconstructs", recon.sub(&a).max_abs() < 1e-10, out)?;
    let p = pinv(&a)?;
    check("pseudo-inverse identity", a.matmul(&p).matmul(&a).sub(&a).max_abs() < 1e-8, out)?;

    let mut chain = true;
    let mut feasible = true;
    for i in 0..20u64 {
        let inst = random_instance(6, i);
        let exact = solve_brute_force(&inst)?;
        let lp = solve_lp_mck(&inst, inst.losses())?.objective / inst.m() as f64;
        let c = solve_cccp(&inst, &CccpConfig { seed: i, ..CccpConfig::default() })?;
        let lr = solve_lagrangian(&inst, 1e-9, 200)?;
        let round = solve_linear_relaxation(&inst)?;
        chain &= lp <= exact.avg_loss + 1e-9;
        chain &= [&c, &lr, &round].iter().all(|r| exact.avg_loss <= r.avg_loss + 1e-9);
        feasible &= c.feasible && lr.feasible && round.feasible;
        let again = evaluate(&inst, &c.assignment)?;
        chain &= (again.avg_loss - c.avg_loss).abs() <= 1e-9;
    }
    check("exhaustive optimum bounds heuristics", chain, out)?;
    check("heuristic plans feasible", feasible, out)?;

    let cfg = ExperimentConfig {
        trials: 2,
        m: 16,
        ..ExperimentConfig::default()
    };
    let first = harness::run_tradeoff(&cfg).map_err(|(_, e)| e)?;
    let second = harness::run_tradeoff(&cfg).map_err(|(_, e)| e)?;
    check("tradeoff output deterministic", first.csv == second.csv, out)?;
    let bounded = first
        .results
        .iter()
        .flat_map(|t| &t.outcomes)
        .all(|o| (0.0..=1.0).contains(&o.accuracy));
    check("accuracies within [0, 1]", bounded, out)?;

    writeln!(out, "{}", json!({"failed": failed}))?;
    Ok(if failed == 0 { EXIT_OK } else { EXIT_RUNTIME })
}
