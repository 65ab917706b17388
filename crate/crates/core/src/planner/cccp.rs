use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use super::{
    evaluate, repair, solve_lp_mck, Assignment, FractionalPoint, Instance, Level, PlanError,
    PlannerReport, Row, LEVELS,
};
use crate::rng;

/// Cap on how many times the penalty weight is multiplied before giving up on
/// a binary limit point.
pub const MAX_ESCALATIONS: usize = 20;

/// Convex–concave procedure settings.
///
/// `gamma0` is expressed in units of the instance's loss spread
/// (`max L − min L`), so results do not depend on the loss scale.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CccpConfig {
    pub gamma0: f64,
    pub gamma_growth: f64,
    pub restarts: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Run [`polish`] on each rounded restart.
    pub polish: bool,
}

impl Default for CccpConfig {
    fn default() -> Self {
        Self {
            gamma0: 0.05,
            gamma_growth: 2.0,
            restarts: 8,
            tol: 1e-9,
            max_iters: 100,
            seed: 0,
            polish: true,
        }
    }
}

impl CccpConfig {
    fn validate(&self) -> Result<(), PlanError> {
        let bad = |what: &str| Err(PlanError::InvalidParameter(what.into()));
        if !(self.gamma0.is_finite() && self.gamma0 > 0.0) {
            return bad("gamma0 must be positive");
        }
        if !(self.gamma_growth.is_finite() && self.gamma_growth > 1.0) {
            return bad("gamma_growth must exceed 1");
        }
        if self.restarts == 0 {
            return bad("at least one restart is required");
        }
        if !(self.tol >= 0.0) || self.max_iters == 0 {
            return bad("tol must be non-negative and max_iters positive");
        }
        Ok(())
    }
}

/// Objective of the penalised relaxation at one iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CccpStep {
    /// Absolute penalty weight in force.
    pub gamma: f64,
    /// `Σ x·L + γ Σ x(1 − x)` at this iterate.
    pub objective: f64,
}

/// One CCCP descent from a single starting point.
#[derive(Debug, Clone, PartialEq)]
pub struct CccpRun {
    /// Limit point before rounding.
    pub limit: FractionalPoint,
    /// Rounded (and if needed repaired) assignment.
    pub assignment: Assignment,
    /// Objective before the first step and after every LP solve, tagged with γ.
    pub trace: Vec<CccpStep>,
    pub iterations: usize,
    pub escalations: usize,
    pub gamma_final: f64,
    pub converged: bool,
    pub repaired: bool,
}

/// `Σ x·L + γ Σ x(1 − x)`: the loss plus the concave integrality penalty.
pub fn penalized_objective(inst: &Instance, x: &FractionalPoint, gamma: f64) -> f64 {
    let mut total = 0.0;
    for (r, l) in x.rows().iter().zip(inst.losses()) {
        for j in 0..LEVELS {
            total += r[j] * l[j] + gamma * r[j] * (1.0 - r[j]);
        }
    }
    total
}

/// Runs CCCP from `x0` with absolute starting weight `gamma`.
///
/// Each step linearises the concave penalty at the current iterate and solves
/// the resulting LP, whose costs are `L − γ(2x − 1)`. When the iterates settle
/// on a non-binary point the weight is multiplied by `gamma_growth` and the
/// descent continues.
pub fn cccp_from(
    inst: &Instance,
    x0: &FractionalPoint,
    gamma: f64,
    cfg: &CccpConfig,
) -> Result<CccpRun, PlanError> {
    let mut x = x0.clone();
    let mut gamma = gamma;
    let mut trace = vec![CccpStep {
        gamma,
        objective: penalized_objective(inst, &x, gamma),
    }];
    let mut iterations = 0;
    let mut escalations = 0;
    let converged = loop {
        for _ in 0..cfg.max_iters {
            let costs: Vec<Row> = inst
                .losses()
                .iter()
                .zip(x.rows())
                .map(|(l, r)| core::array::from_fn(|j| l[j] - gamma * (2.0 * r[j] - 1.0)))
                .collect();
            let next = solve_lp_mck(inst, &costs)?.point;
            iterations += 1;
            trace.push(CccpStep {
                gamma,
                objective: penalized_objective(inst, &next, gamma),
            });
            let step = next.max_diff(&x);
            x = next;
            if step <= cfg.tol {
                break;
            }
        }
        if x.is_binary(cfg.tol) {
            break true;
        }
        if escalations == MAX_ESCALATIONS {
            break false;
        }
        escalations += 1;
        gamma *= cfg.gamma_growth;
        trace.push(CccpStep {
            gamma,
            objective: penalized_objective(inst, &x, gamma),
        });
    };

    let (mut assignment, repaired) = round_limit(inst, &x, cfg.tol)?;
    if cfg.polish {
        assignment = polish(inst, assignment)?;
    }
    Ok(CccpRun {
        limit: x,
        assignment,
        trace,
        iterations,
        escalations,
        gamma_final: gamma,
        converged,
        repaired,
    })
}

/// Rounds a limit point to a feasible assignment.
///
/// A binary limit is read off directly. Otherwise the limit is a vertex with
/// one row split between two levels, and the candidates are the argmax
/// rounding plus, for each split row and each level it uses, the assignment
/// with that row fixed there and (when this breaks the budget) one other row
/// moved to a faster level. The feasible candidate of least loss wins; if
/// there is none, [`repair`] runs on the argmax rounding.
fn round_limit(
    inst: &Instance,
    x: &FractionalPoint,
    tol: f64,
) -> Result<(Assignment, bool), PlanError> {
    let rounded = x.round_argmax();
    let fractional = x.fractional_rows(tol);
    let feasible = |a: &Assignment| -> Result<Option<f64>, PlanError> {
        let r = evaluate(inst, a)?;
        Ok(inst.within_budget(r.avg_latency).then_some(r.avg_loss))
    };
    let base = feasible(&rounded)?;
    if fractional.is_empty() && base.is_some() {
        return Ok((rounded, false));
    }

    let lat = inst.latencies();
    let mut best: Option<(Assignment, f64)> = base.map(|l| (rounded.clone(), l));
    let mut offer = |a: Assignment, loss: f64| {
        if best.as_ref().is_none_or(|(_, l)| loss < *l) {
            best = Some((a, loss));
        }
    };
    for &m in &fractional {
        for j in (0..LEVELS).filter(|&j| x.rows()[m][j] > tol) {
            let mut levels = rounded.levels().to_vec();
            levels[m] = Level::ALL[j];
            let fixed = Assignment::new(levels.clone());
            if let Some(loss) = feasible(&fixed)? {
                offer(fixed, loss);
                continue;
            }
            for i in (0..inst.m()).filter(|&i| i != m) {
                let current = levels[i];
                for k in (0..LEVELS).filter(|&k| lat[i][k] < lat[i][current.index()]) {
                    levels[i] = Level::ALL[k];
                    let candidate = Assignment::new(levels.clone());
                    if let Some(loss) = feasible(&candidate)? {
                        offer(candidate, loss);
                    }
                }
                levels[i] = current;
            }
        }
    }
    match best {
        Some((a, _)) => {
            let changed = a != rounded;
            Ok((a, changed))
        }
        None => Ok((repair(inst, rounded)?, true)),
    }
}

/// Best-improvement exchange search: repeatedly applies the single-row or
/// two-row level change that lowers the total loss most while keeping the
/// budget, until none does.
pub fn polish(inst: &Instance, assignment: Assignment) -> Result<Assignment, PlanError> {
    let m = inst.m();
    let (loss, lat) = (inst.losses(), inst.latencies());
    let budget = inst.tau() * m as f64;
    let mut levels: Vec<usize> = assignment.levels().iter().map(|l| l.index()).collect();
    let mut current = evaluate(inst, &assignment)?;
    if !inst.within_budget(current.avg_latency) {
        return Ok(assignment);
    }
    loop {
        let used: f64 = (0..m).map(|i| lat[i][levels[i]]).sum();
        let slack = budget - used;
        // Improving moves as (gain, [(row, level); 2]); single-row moves repeat the row.
        let mut moves: Vec<(f64, [(usize, usize); 2])> = Vec::new();
        for i in 0..m {
            let (li, ti) = (loss[i][levels[i]], lat[i][levels[i]]);
            for a in (0..LEVELS).filter(|&a| a != levels[i]) {
                let (gi, di) = (li - loss[i][a], lat[i][a] - ti);
                if gi > 0.0 && di <= slack {
                    moves.push((gi, [(i, a), (i, a)]));
                }
                for j in i + 1..m {
                    let (lj, tj) = (loss[j][levels[j]], lat[j][levels[j]]);
                    for b in (0..LEVELS).filter(|&b| b != levels[j]) {
                        let gain = gi + lj - loss[j][b];
                        if gain > 0.0 && di + lat[j][b] - tj <= slack {
                            moves.push((gain, [(i, a), (j, b)]));
                        }
                    }
                }
            }
        }
        // Stable sort keeps enumeration order among equal gains.
        moves.sort_by(|x, y| y.0.total_cmp(&x.0));
        let mut accepted = None;
        for (_, mv) in moves {
            let mut next = levels.clone();
            for (i, a) in mv {
                next[i] = a;
            }
            let candidate = Assignment::new(next.iter().map(|&j| Level::ALL[j]).collect());
            let report = evaluate(inst, &candidate)?;
            // The incremental sums only propose; the exact evaluation decides.
            if inst.within_budget(report.avg_latency) && report.avg_loss < current.avg_loss {
                accepted = Some((next, report));
                break;
            }
        }
        match accepted {
            Some((next, report)) => {
                levels = next;
                current = report;
            }
            None => break,
        }
    }
    Ok(current.assignment)
}

/// Starting points: the LP relaxation optimum, then random feasible vertices.
///
/// A random vertex assigns rows in order, each uniformly among the levels that
/// still leave the remaining rows able to meet the budget at their fastest level.
pub fn initial_points(inst: &Instance, cfg: &CccpConfig) -> Result<Vec<FractionalPoint>, PlanError> {
    let relaxed = solve_lp_mck(inst, inst.losses())?.point;
    let mut points = vec![relaxed];
    let m = inst.m();
    let lat = inst.latencies();
    let fastest: Vec<f64> = (0..m).map(|i| lat[i][inst.fastest_level(i).index()]).collect();
    let budget = inst.tau() * m as f64;
    for r in 1..cfg.restarts {
        let mut g = rng::seeded(rng::mix_seed(cfg.seed, r as u64));
        let mut levels = Vec::with_capacity(m);
        let mut used = 0.0;
        let mut rest: f64 = fastest.iter().sum();
        for i in 0..m {
            rest -= fastest[i];
            let allowed: Vec<usize> = (0..LEVELS)
                .filter(|&j| used + lat[i][j] + rest <= budget)
                .collect();
            let j = if allowed.is_empty() {
                inst.fastest_level(i).index()
            } else {
                allowed[g.random_range(0..allowed.len())]
            };
            used += lat[i][j];
            levels.push(Level::ALL[j]);
        }
        let mut a = Assignment::new(levels);
        if !inst.within_budget(evaluate(inst, &a)?.avg_latency) {
            a = repair(inst, a)?;
        }
        points.push(FractionalPoint::from_assignment(&a));
    }
    Ok(points)
}

/// Best rounded CCCP solution over all restarts (lowest average loss, then
/// lowest latency, then earliest restart).
pub fn solve_cccp(inst: &Instance, cfg: &CccpConfig) -> Result<PlannerReport, PlanError> {
    cfg.validate()?;
    inst.check_feasible()?;
    let gamma = cfg.gamma0 * inst.loss_spread();
    let mut best: Option<PlannerReport> = None;
    for x0 in initial_points(inst, cfg)? {
        let run = cccp_from(inst, &x0, gamma, cfg)?;
        let mut report = evaluate(inst, &run.assignment)?;
        report.iterations = run.iterations;
        report.gamma_final = run.gamma_final;
        report.converged = run.converged;
        report.repaired = run.repaired;
        let better = match &best {
            None => true,
            Some(b) => {
                report.avg_loss < b.avg_loss
                    || (report.avg_loss == b.avg_loss && report.avg_latency < b.avg_latency)
            }
        };
        if better {
            best = Some(report);
        }
    }
    let mut best = best.expect("at least one restart");
    best.restarts_used = cfg.restarts;
    Ok(best)
}
