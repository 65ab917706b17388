use alloc::vec::Vec;

use super::{FractionalPoint, Instance, PlanError, Row, LEVELS};

/// Optimal vertex of the relaxed knapsack.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub point: FractionalPoint,
    /// `Σ c·x`.
    pub objective: f64,
    /// Budget multiplier per unit of average latency (0 when the budget is slack).
    pub multiplier: f64,
}

/// A row switching from one level to a faster one once the latency price
/// reaches `price` (per unit of summed latency).
#[derive(Debug, Clone, Copy)]
struct Switch {
    price: f64,
    row: usize,
    step: usize,
    from: usize,
    to: usize,
}

/// Solves `min Σ c·x` subject to `(1/M) Σ T·x ≤ τ`, unit row sums and `0 ≤ x ≤ 1`.
///
/// Dualising the single budget constraint with price `μ` decouples the rows:
/// each picks `argmin_l c_l + μ·T_l`. As `μ` grows every row walks down the
/// lower envelope of its four lines towards faster levels. Sweeping all
/// envelope breakpoints in price order until the budget is met gives an
/// optimal vertex; the row switching at the critical price is split between
/// its two levels so the budget holds with equality, so at most one row is
/// fractional.
pub fn solve_lp_mck(inst: &Instance, costs: &[Row]) -> Result<LpSolution, PlanError> {
    inst.check_feasible()?;
    if costs.len() != inst.m() {
        return Err(PlanError::InvalidParameter(alloc::format!(
            "{} cost rows for {} samples",
            costs.len(),
            inst.m()
        )));
    }
    let lat = inst.latencies();
    let m = inst.m();

    let mut choice: Vec<usize> = Vec::with_capacity(m);
    let mut switches: Vec<Switch> = Vec::new();
    for (row, (c, t)) in costs.iter().zip(lat).enumerate() {
        let start = cheapest(c, t);
        choice.push(start);
        envelope(row, c, t, start, &mut switches);
    }

    let total = |choice: &[usize]| inst.average(choice.iter().zip(lat).map(|(&j, t)| t[j]));
    let finish = |rows: Vec<Row>, multiplier: f64| {
        let point = FractionalPoint::from_rows_unchecked(rows);
        let objective = point.linear_value(costs);
        LpSolution {
            point,
            objective,
            multiplier,
        }
    };

    if inst.within_budget(total(&choice)) {
        return Ok(finish(one_hot(&choice), 0.0));
    }

    switches.sort_by(|a, b| {
        a.price
            .total_cmp(&b.price)
            .then(a.row.cmp(&b.row))
            .then(a.step.cmp(&b.step))
    });

    let budget = inst.tau() * m as f64;
    let mut load: f64 = choice.iter().zip(lat).map(|(&j, t)| t[j]).sum();
    for s in &switches {
        let saved = lat[s.row][s.from] - lat[s.row][s.to];
        if load - saved <= budget {
            let theta = ((load - budget) / saved).clamp(0.0, 1.0);
            let mut rows = one_hot(&choice);
            rows[s.row][s.from] = 1.0 - theta;
            rows[s.row][s.to] = theta;
            return Ok(finish(rows, s.price * m as f64));
        }
        load -= saved;
        choice[s.row] = s.to;
    }
    // Every row is at its fastest level, which the feasibility check admits.
    let price = switches.last().map_or(0.0, |s| s.price * m as f64);
    Ok(finish(one_hot(&choice), price))
}

/// Lowest cost, then lowest latency, then lowest level.
fn cheapest(c: &Row, t: &Row) -> usize {
    let mut best = 0;
    for j in 1..LEVELS {
        if c[j] < c[best] || (c[j] == c[best] && t[j] < t[best]) {
            best = j;
        }
    }
    best
}

/// Appends the breakpoints of the lower envelope of `c_l + μ·t_l`, `μ ≥ 0`.
fn envelope(row: usize, c: &Row, t: &Row, start: usize, out: &mut Vec<Switch>) {
    let mut cur = start;
    let mut price = 0.0f64;
    let mut step = 0;
    loop {
        let mut next: Option<(f64, usize)> = None;
        for j in 0..LEVELS {
            if t[j] >= t[cur] {
                continue;
            }
            let p = ((c[j] - c[cur]) / (t[cur] - t[j])).max(price);
            let better = match next {
                None => true,
                Some((bp, bj)) => p < bp || (p == bp && (t[j] < t[bj] || (t[j] == t[bj] && c[j] < c[bj]))),
            };
            if better {
                next = Some((p, j));
            }
        }
        let Some((p, j)) = next else { break };
        out.push(Switch {
            price: p,
            row,
            step,
            from: cur,
            to: j,
        });
        cur = j;
        price = p;
        step += 1;
    }
}

fn one_hot(choice: &[usize]) -> Vec<Row> {
    choice
        .iter()
        .map(|&j| {
            let mut r = [0.0; LEVELS];
            r[j] = 1.0;
            r
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn slack_budget_picks_row_minimum() {
        let inst = Instance::new(
            vec![[3.0, 1.0, 2.0, 4.0], [0.5, 0.7, 0.1, 0.9]],
            vec![[4.0, 3.0, 2.0, 1.0]; 2],
            10.0,
        )
        .unwrap();
        let sol = solve_lp_mck(&inst, inst.losses()).unwrap();
        assert_eq!(sol.point.rows(), &[[0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]]);
        assert_eq!(sol.multiplier, 0.0);
        assert!((sol.objective - 1.1).abs() < 1e-15);
    }

    #[test]
    fn two_level_hand_solution() {
        // Levels A = (0, 10), B = (5, 1); the other two are dominated.
        let inst = Instance::new(
            vec![[0.0, 5.0, 100.0, 100.0]],
            vec![[10.0, 1.0, 100.0, 100.0]],
            4.0,
        )
        .unwrap();
        let sol = solve_lp_mck(&inst, inst.losses()).unwrap();
        let r = sol.point.rows()[0];
        assert!((r[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((r[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!((sol.objective - 10.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn equal_costs_prefer_lower_latency() {
        let inst = Instance::new(vec![[1.0; 4]], vec![[4.0, 3.0, 2.0, 1.0]], 10.0).unwrap();
        let sol = solve_lp_mck(&inst, inst.losses()).unwrap();
        assert_eq!(sol.point.rows()[0], [0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn infeasible_budget_is_rejected() {
        let inst = Instance::new(vec![[1.0; 4]], vec![[4.0, 3.0, 2.0, 1.5]], 1.0).unwrap();
        assert!(matches!(
            solve_lp_mck(&inst, inst.losses()),
            Err(PlanError::Infeasible { .. })
        ));
    }
}
