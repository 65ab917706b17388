use alloc::vec;

use super::{evaluate, Assignment, Instance, Level, PlanError, PlannerReport, LEVELS};

/// Largest `M` accepted by [`solve_brute_force`] (4¹² ≈ 1.7·10⁷ leaves).
pub const BRUTE_FORCE_CAP: usize = 12;

/// Exact optimum by depth-first enumeration in lexicographic order.
///
/// Branches that cannot meet the budget even with the fastest remaining
/// levels, or cannot beat the incumbent even with the cheapest remaining
/// levels, are pruned. Only strict improvements replace the incumbent, so the
/// lexicographically smallest optimum is returned.
pub fn solve_brute_force(inst: &Instance) -> Result<PlannerReport, PlanError> {
    let m = inst.m();
    if m > BRUTE_FORCE_CAP {
        return Err(PlanError::TooLarge { m, cap: BRUTE_FORCE_CAP });
    }
    inst.check_feasible()?;
    let loss = inst.losses();
    let lat = inst.latencies();
    // Suffix sums of per-row minima for pruning.
    let mut min_lat_tail = vec![0.0; m + 1];
    let mut min_loss_tail = vec![0.0; m + 1];
    for i in (0..m).rev() {
        min_lat_tail[i] = min_lat_tail[i + 1] + super::row_min(&lat[i]);
        min_loss_tail[i] = min_loss_tail[i + 1] + super::row_min(&loss[i]);
    }
    let budget = inst.tau() * m as f64;
    // Pruning is only a speedup, so it keeps a relative slack; leaves are tested exactly.
    let slack = 1e-9 * (budget.abs() + min_lat_tail[0]);

    let mut search = Search {
        inst,
        budget,
        slack,
        min_lat_tail,
        min_loss_tail,
        path: vec![Level::Visual; m],
        best: None,
    };
    search.descend(0, 0.0, 0.0)?;
    let (best, _) = search.best.expect("guard ensures a feasible leaf");
    let mut report = evaluate(inst, &best)?;
    report.iterations = 1;
    Ok(report)
}

struct Search<'a> {
    inst: &'a Instance,
    budget: f64,
    slack: f64,
    min_lat_tail: alloc::vec::Vec<f64>,
    min_loss_tail: alloc::vec::Vec<f64>,
    path: alloc::vec::Vec<Level>,
    /// Incumbent and its average loss.
    best: Option<(Assignment, f64)>,
}

impl Search<'_> {
    fn descend(&mut self, i: usize, loss: f64, lat: f64) -> Result<(), PlanError> {
        let m = self.path.len();
        if i == m {
            let a = Assignment::new(self.path.clone());
            let r = evaluate(self.inst, &a)?;
            if !self.inst.within_budget(r.avg_latency) {
                return Ok(());
            }
            if self.best.as_ref().is_none_or(|(_, best)| r.avg_loss < *best) {
                self.best = Some((a, r.avg_loss));
            }
            return Ok(());
        }
        for j in 0..LEVELS {
            let t = lat + self.inst.latencies()[i][j];
            if t + self.min_lat_tail[i + 1] > self.budget + self.slack {
                continue;
            }
            let l = loss + self.inst.losses()[i][j];
            if let Some((_, best)) = &self.best {
                let incumbent = best * m as f64;
                if l + self.min_loss_tail[i + 1] > incumbent + 1e-9 * incumbent.abs().max(1.0) {
                    continue;
                }
            }
            self.path[i] = Level::ALL[j];
            self.descend(i + 1, l, t)?;
        }
        Ok(())
    }
}
