use alloc::vec::Vec;

use super::{solve_lp_mck, FractionalPoint, Instance, PlanError, Row, LEVELS};

const BISECTION_STEPS: usize = 200;

/// Largest value of `Σ x(1 − x)` over the relaxed feasible set.
///
/// Each row contributes at most 3/4, reached at the uniform point. When the
/// uniform point breaks the budget the maximiser lies on the budget face:
/// for a multiplier `ν` each row is the simplex projection of
/// `(1 − ν T)/2`, and `ν` is bisected until the budget is met.
pub fn max_integrality_gap(inst: &Instance) -> Result<f64, PlanError> {
    inst.check_feasible()?;
    let m = inst.m();
    let uniform = [1.0 / LEVELS as f64; LEVELS];
    let uniform_latency = inst.average(inst.latencies().iter().map(|t| dot4(&uniform, t)));
    if inst.within_budget(uniform_latency) {
        return Ok(0.75 * m as f64);
    }
    let point = |nu: f64| -> Vec<Row> {
        inst.latencies()
            .iter()
            .map(|t| project_simplex(core::array::from_fn(|j| 0.5 * (1.0 - nu * t[j]))))
            .collect()
    };
    let latency = |rows: &[Row]| inst.average(rows.iter().zip(inst.latencies()).map(|(x, t)| dot4(x, t)));

    let mut hi = 1.0 / inst.latency_spread().max(f64::MIN_POSITIVE);
    let mut grow = 0;
    while latency(&point(hi)) > inst.tau() && grow < 2000 {
        hi *= 2.0;
        grow += 1;
    }
    let mut lo = 0.0;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if latency(&point(mid)) > inst.tau() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let rows = point(hi);
    Ok(rows
        .iter()
        .flat_map(|r| r.iter().map(|&x| x * (1.0 - x)))
        .sum())
}

/// Penalty weight `(Σ x⁰·L − L̄) / D` above which the penalised relaxation
/// is guaranteed to share its optimum with the binary problem. `L̄` is the LP
/// relaxation optimum and `D` is [`max_integrality_gap`].
pub fn penalty_lower_bound(inst: &Instance, x0: &FractionalPoint) -> Result<f64, PlanError> {
    if x0.rows().len() != inst.m() {
        return Err(PlanError::MalformedAssignment(alloc::format!(
            "point has {} rows, instance has {}",
            x0.rows().len(),
            inst.m()
        )));
    }
    let d = max_integrality_gap(inst)?;
    if d <= 1e-12 {
        return Err(PlanError::DegenerateDenominator(d));
    }
    let relaxed = solve_lp_mck(inst, inst.losses())?.objective;
    let start = x0.linear_value(inst.losses());
    Ok((start - relaxed).max(0.0) / d)
}

fn dot4(a: &Row, b: &Row) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: Row) -> Row {
    let mut sorted = v;
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        cumulative += s;
        let candidate = (cumulative - 1.0) / (i + 1) as f64;
        if s - candidate > 0.0 {
            theta = candidate;
        }
    }
    core::array::from_fn(|j| (v[j] - theta).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn uniform_start_on_single_row() {
        let inst = Instance::new(vec![[0.0, 1.0, 2.0, 3.0]], vec![[1.0; 4]], 10.0).unwrap();
        let x0 = FractionalPoint::new(vec![[0.25; 4]]).unwrap();
        assert!((max_integrality_gap(&inst).unwrap() - 0.75).abs() < 1e-15);
        assert!((penalty_lower_bound(&inst, &x0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn integral_relaxation_gives_zero() {
        let inst = Instance::new(vec![[0.0, 1.0, 2.0, 3.0]], vec![[1.0; 4]], 10.0).unwrap();
        let x0 = solve_lp_mck(&inst, inst.losses()).unwrap().point;
        assert_eq!(penalty_lower_bound(&inst, &x0).unwrap(), 0.0);
    }

    #[test]
    fn tight_budget_with_unique_fastest_level_is_degenerate() {
        let inst = Instance::new(vec![[0.0, 1.0, 2.0, 3.0]], vec![[4.0, 1.0, 2.0, 3.0]], 1.0).unwrap();
        let x0 = FractionalPoint::new(vec![[0.0, 1.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(
            penalty_lower_bound(&inst, &x0),
            Err(PlanError::DegenerateDenominator(_))
        ));
    }

    #[test]
    fn budget_face_maximiser_is_below_uniform_bound() {
        // Two levels of latency 1 and two of latency 3; τ = 1.5 forces weight on the fast pair.
        let inst = Instance::new(vec![[0.0; 4]], vec![[1.0, 1.0, 3.0, 3.0]], 1.5).unwrap();
        let d = max_integrality_gap(&inst).unwrap();
        // Maximiser is (3/8, 3/8, 1/8, 1/8): 2·(3/8·5/8) + 2·(1/8·7/8) = 44/64.
        assert!((d - 44.0 / 64.0).abs() < 1e-9, "{d}");
    }
}
