use alloc::vec::Vec;

use super::{evaluate, solve_lp_mck, Assignment, Instance, Level, PlanError, PlannerReport, LEVELS};

/// Every row at the same level; infeasibility is reported, not raised.
pub fn solve_fixed_level(inst: &Instance, level: Level) -> Result<PlannerReport, PlanError> {
    evaluate(inst, &Assignment::uniform(level, inst.m()))
}

/// Moves rows to their fastest level until the budget holds, always taking
/// the row with the least loss increase per unit of latency saved (ties: lower
/// row index).
pub fn repair(inst: &Instance, assignment: Assignment) -> Result<Assignment, PlanError> {
    inst.check_feasible()?;
    let mut levels: Vec<Level> = assignment.levels().to_vec();
    let lat = inst.latencies();
    let loss = inst.losses();
    loop {
        let a = Assignment::new(levels.clone());
        if inst.within_budget(evaluate(inst, &a)?.avg_latency) {
            return Ok(a);
        }
        let mut best: Option<(f64, usize)> = None;
        for (m, level) in levels.iter().enumerate() {
            let (cur, fast) = (level.index(), inst.fastest_level(m).index());
            let saved = lat[m][cur] - lat[m][fast];
            if saved <= 0.0 {
                continue;
            }
            let ratio = (loss[m][fast] - loss[m][cur]) / saved;
            if best.is_none_or(|(r, _)| ratio < r) {
                best = Some((ratio, m));
            }
        }
        match best {
            Some((_, m)) => levels[m] = inst.fastest_level(m),
            // Every row already sits at its fastest level, which meets the guard.
            None => return Ok(Assignment::new(levels)),
        }
    }
}

/// LP relaxation with loss costs, per-row argmax rounding, then [`repair`].
pub fn solve_linear_relaxation(inst: &Instance) -> Result<PlannerReport, PlanError> {
    let lp = solve_lp_mck(inst, inst.losses())?;
    let rounded = lp.point.round_argmax();
    let over = !inst.within_budget(evaluate(inst, &rounded)?.avg_latency);
    let assignment = if over { repair(inst, rounded)? } else { rounded };
    let mut report = evaluate(inst, &assignment)?;
    report.iterations = 1;
    report.repaired = over;
    Ok(report)
}

/// Integer minimiser of the Lagrangian `L + μT/M` row by row (ties: lower
/// latency, then lower level).
pub fn lagrangian_pick(inst: &Instance, mu: f64) -> Assignment {
    let m = inst.m() as f64;
    let levels = inst
        .losses()
        .iter()
        .zip(inst.latencies())
        .map(|(l, t)| {
            let mut best = 0;
            let mut best_value = l[0] + mu * t[0] / m;
            for j in 1..LEVELS {
                let v = l[j] + mu * t[j] / m;
                if v < best_value || (v == best_value && t[j] < t[best]) {
                    best = j;
                    best_value = v;
                }
            }
            Level::ALL[best]
        })
        .collect();
    Assignment::new(levels)
}

/// Lagrangian relaxation of the budget: bisects the multiplier between an
/// infeasible and a feasible value and keeps the best feasible integer pick.
///
/// `bisect_tol` is relative to the upper end of the bracket.
pub fn solve_lagrangian(
    inst: &Instance,
    bisect_tol: f64,
    max_steps: usize,
) -> Result<PlannerReport, PlanError> {
    inst.check_feasible()?;
    if !(bisect_tol.is_finite() && bisect_tol > 0.0) {
        return Err(PlanError::InvalidParameter("bisect_tol must be positive".into()));
    }
    let try_mu = |mu: f64| -> Result<PlannerReport, PlanError> { evaluate(inst, &lagrangian_pick(inst, mu)) };
    let admissible = |r: &PlannerReport| inst.within_budget(r.avg_latency);

    let mut steps = 1;
    let free = try_mu(0.0)?;
    if admissible(&free) {
        let mut report = free;
        report.iterations = steps;
        return Ok(report);
    }

    let mut best: Option<PlannerReport> = None;
    let keep = |r: PlannerReport, best: &mut Option<PlannerReport>| {
        let better = match best {
            None => true,
            Some(b) => r.avg_loss < b.avg_loss || (r.avg_loss == b.avg_loss && r.avg_latency < b.avg_latency),
        };
        if better {
            *best = Some(r);
        }
    };

    let mut lo = 0.0;
    let mut hi = inst.loss_spread() * inst.m() as f64 / inst.latency_spread();
    loop {
        let r = try_mu(hi)?;
        steps += 1;
        if admissible(&r) {
            keep(r, &mut best);
            break;
        }
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(PlanError::InvalidParameter("multiplier overflow".into()));
        }
    }
    while hi - lo > bisect_tol * hi && steps < max_steps {
        let mid = 0.5 * (lo + hi);
        let r = try_mu(mid)?;
        steps += 1;
        if admissible(&r) {
            keep(r, &mut best);
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut report = best.expect("bracket ends feasible");
    report.iterations = steps;
    Ok(report)
}
