//! Per-sample transmission-level planning under an average-latency budget.
//!
//! Each of the `M` samples picks exactly one of four levels; the objective is
//! the average semantic loss and the single constraint is the average latency
//! `(1/M) Σ T ≤ τ`: a linear multi-choice knapsack. The main solver runs the
//! convex–concave procedure on the relaxation with a concave integrality
//! penalty; the baselines and an exhaustive oracle share the same types.

mod baselines;
mod cccp;
mod exhaustive;
mod lp;
mod penalty;
mod random;

pub use baselines::{lagrangian_pick, repair, solve_fixed_level, solve_lagrangian, solve_linear_relaxation};
pub use cccp::{cccp_from, initial_points, penalized_objective, polish, solve_cccp, CccpConfig, CccpRun, CccpStep, MAX_ESCALATIONS};
pub use exhaustive::{solve_brute_force, BRUTE_FORCE_CAP};
pub use lp::{solve_lp_mck, LpSolution};
pub use penalty::{max_integrality_gap, penalty_lower_bound};
pub use random::random_instance;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Number of transmission levels.
pub const LEVELS: usize = 4;

/// Reports count as feasible when `avg_latency ≤ τ + FEASIBILITY_TOLERANCE`.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;

/// What is sent for a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(into = "u8", try_from = "u8"))]
pub enum Level {
    /// Raw visual feature; the receiver runs its own extractor.
    Visual,
    /// Intermediate feature from the transmitter's visual encoder.
    Intermediate,
    /// Semantic feature decoded at the transmitter.
    Semantic,
    /// The transmitter's class estimate (label, or prototype when the receiver lacks it).
    Class,
}

impl Level {
    pub const ALL: [Level; LEVELS] = [Level::Visual, Level::Intermediate, Level::Semantic, Level::Class];

    /// Zero-based column index.
    pub fn index(self) -> usize {
        self as usize
    }

    /// One-based level number.
    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn from_number(n: u8) -> Option<Self> {
        (n as usize).checked_sub(1).and_then(Self::from_index)
    }
}

impl From<Level> for u8 {
    fn from(l: Level) -> u8 {
        l.number()
    }
}

impl TryFrom<u8> for Level {
    type Error = String;

    fn try_from(n: u8) -> Result<Self, String> {
        Level::from_number(n).ok_or_else(|| format!("level must be 1..=4, got {n}"))
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("instance is infeasible: minimum average latency {min_avg_latency:e} exceeds budget {tau:e}")]
    Infeasible { min_avg_latency: f64, tau: f64 },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("malformed assignment: {0}")]
    MalformedAssignment(String),
    #[error("exhaustive search limited to {cap} samples, got {m}")]
    TooLarge { m: usize, cap: usize },
    #[error("penalty bound denominator {0:e} is degenerate")]
    DegenerateDenominator(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Row = [f64; LEVELS];

/// Losses `L` (M × 4), latencies `T` (M × 4, seconds) and the average-latency budget `τ`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Instance {
    losses: Vec<Row>,
    latencies: Vec<Row>,
    tau: f64,
}

impl Instance {
    /// Validates shapes, non-negative finite losses and positive finite latencies.
    /// Budget feasibility is checked by the solvers (see [`Instance::check_feasible`]).
    pub fn new(losses: Vec<Row>, latencies: Vec<Row>, tau: f64) -> Result<Self, PlanError> {
        if losses.is_empty() {
            return Err(PlanError::InvalidInstance("no samples".into()));
        }
        if losses.len() != latencies.len() {
            return Err(PlanError::InvalidInstance(format!(
                "{} loss rows but {} latency rows",
                losses.len(),
                latencies.len()
            )));
        }
        if let Some(m) = losses.iter().position(|r| r.iter().any(|&x| !(x.is_finite() && x >= 0.0))) {
            return Err(PlanError::InvalidInstance(format!(
                "row {m}: losses must be finite and non-negative"
            )));
        }
        if let Some(m) = latencies.iter().position(|r| r.iter().any(|&x| !(x.is_finite() && x > 0.0))) {
            return Err(PlanError::InvalidInstance(format!(
                "row {m}: latencies must be finite and positive"
            )));
        }
        if !tau.is_finite() {
            return Err(PlanError::InvalidInstance(format!("budget {tau} is not finite")));
        }
        Ok(Self {
            losses,
            latencies,
            tau,
        })
    }

    /// Number of samples `M`.
    pub fn m(&self) -> usize {
        self.losses.len()
    }

    pub fn losses(&self) -> &[Row] {
        &self.losses
    }

    pub fn latencies(&self) -> &[Row] {
        &self.latencies
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Same losses and latencies under a different budget.
    pub fn with_tau(&self, tau: f64) -> Result<Self, PlanError> {
        Self::new(self.losses.clone(), self.latencies.clone(), tau)
    }

    /// Average of the per-row minimum latency: the least any policy can achieve.
    pub fn min_avg_latency(&self) -> f64 {
        self.average(self.latencies.iter().map(row_min))
    }

    /// Errors unless some assignment meets the budget.
    pub fn check_feasible(&self) -> Result<(), PlanError> {
        let min_avg_latency = self.min_avg_latency();
        if self.within_budget(min_avg_latency) {
            Ok(())
        } else {
            Err(PlanError::Infeasible {
                min_avg_latency,
                tau: self.tau,
            })
        }
    }

    /// Exact budget test used when deciding between integral assignments.
    pub(crate) fn within_budget(&self, avg_latency: f64) -> bool {
        avg_latency <= self.tau
    }

    /// Sums in row order, then divides by `M`; every solver reports through this.
    pub(crate) fn average(&self, values: impl Iterator<Item = f64>) -> f64 {
        let mut total = 0.0;
        for v in values {
            total += v;
        }
        total / self.m() as f64
    }

    /// `max L − min L` over all entries, or 1 when every loss is equal.
    pub fn loss_spread(&self) -> f64 {
        spread(&self.losses)
    }

    pub fn latency_spread(&self) -> f64 {
        spread(&self.latencies)
    }

    /// Per-row level with the lowest latency (ties: lower loss, then lower level).
    pub(crate) fn fastest_level(&self, m: usize) -> Level {
        let t = &self.latencies[m];
        let l = &self.losses[m];
        let mut best = 0;
        for j in 1..LEVELS {
            if t[j] < t[best] || (t[j] == t[best] && l[j] < l[best]) {
                best = j;
            }
        }
        Level::ALL[best]
    }
}

fn spread(rows: &[Row]) -> f64 {
    let (lo, hi) = rows
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if hi > lo {
        hi - lo
    } else {
        1.0
    }
}

pub(crate) fn row_min(r: &Row) -> f64 {
    r.iter().copied().fold(f64::INFINITY, f64::min)
}

/// One level per sample.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Assignment(Vec<Level>);

impl Assignment {
    pub fn new(levels: Vec<Level>) -> Self {
        Self(levels)
    }

    pub fn uniform(level: Level, m: usize) -> Self {
        Self(alloc::vec![level; m])
    }

    /// Builds from 0/1 rows; each row must contain exactly one 1.
    pub fn from_indicator(rows: &[Row]) -> Result<Self, PlanError> {
        rows.iter()
            .enumerate()
            .map(|(m, r)| {
                let ones: Vec<usize> = (0..LEVELS).filter(|&j| r[j] == 1.0).collect();
                let zeros = r.iter().filter(|&&x| x == 0.0).count();
                if ones.len() == 1 && zeros == LEVELS - 1 {
                    Ok(Level::ALL[ones[0]])
                } else {
                    Err(PlanError::MalformedAssignment(format!(
                        "row {m} is not a one-hot selection: {r:?}"
                    )))
                }
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self)
    }

    pub fn levels(&self) -> &[Level] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_indicator(&self) -> Vec<Row> {
        self.0
            .iter()
            .map(|l| {
                let mut r = [0.0; LEVELS];
                r[l.index()] = 1.0;
                r
            })
            .collect()
    }

    /// How many samples use each level.
    pub fn level_counts(&self) -> [usize; LEVELS] {
        let mut c = [0; LEVELS];
        for l in &self.0 {
            c[l.index()] += 1;
        }
        c
    }
}

/// A point of the relaxed polytope: rows on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FractionalPoint(Vec<Row>);

impl FractionalPoint {
    /// Checks the box and unit row sums to `1e-9`.
    pub fn new(rows: Vec<Row>) -> Result<Self, PlanError> {
        for (m, r) in rows.iter().enumerate() {
            let sum: f64 = r.iter().sum();
            if r.iter().any(|&x| !(-1e-12..=1.0 + 1e-12).contains(&x)) || (sum - 1.0).abs() > 1e-9 {
                return Err(PlanError::MalformedAssignment(format!(
                    "row {m} is not on the simplex: {r:?}"
                )));
            }
        }
        Ok(Self(rows))
    }

    pub(crate) fn from_rows_unchecked(rows: Vec<Row>) -> Self {
        Self(rows)
    }

    pub fn from_assignment(a: &Assignment) -> Self {
        Self(a.to_indicator())
    }

    pub fn rows(&self) -> &[Row] {
        &self.0
    }

    /// Every entry within `tol` of 0 or 1.
    pub fn is_binary(&self, tol: f64) -> bool {
        self.0
            .iter()
            .flatten()
            .all(|&x| x.abs() <= tol || (1.0 - x).abs() <= tol)
    }

    /// Rows with an entry strictly between `tol` and `1 − tol`.
    pub fn fractional_rows(&self, tol: f64) -> Vec<usize> {
        (0..self.0.len())
            .filter(|&m| self.0[m].iter().any(|&x| x > tol && x < 1.0 - tol))
            .collect()
    }

    /// Per-row argmax, ties to the lower level.
    pub fn round_argmax(&self) -> Assignment {
        Assignment(
            self.0
                .iter()
                .map(|r| {
                    let mut best = 0;
                    for j in 1..LEVELS {
                        if r[j] > r[best] {
                            best = j;
                        }
                    }
                    Level::ALL[best]
                })
                .collect(),
        )
    }

    /// `‖self − other‖_∞`.
    pub fn max_diff(&self, other: &FractionalPoint) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `Σ_{m,l} c_{m,l} x_{m,l}`.
    pub fn linear_value(&self, costs: &[Row]) -> f64 {
        let mut total = 0.0;
        for (x, c) in self.0.iter().zip(costs) {
            for j in 0..LEVELS {
                total += x[j] * c[j];
            }
        }
        total
    }

    /// `(1/M) Σ T x`.
    pub fn avg_latency(&self, inst: &Instance) -> f64 {
        self.linear_value(inst.latencies()) / inst.m() as f64
    }
}

/// Outcome of a planner run; every field derives from [`evaluate`] except the
/// solver bookkeeping.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PlannerReport {
    pub assignment: Assignment,
    /// `(1/M) Σ x·L`.
    pub avg_loss: f64,
    /// `(1/M) Σ x·T`, seconds.
    pub avg_latency: f64,
    pub feasible: bool,
    pub iterations: usize,
    pub restarts_used: usize,
    pub gamma_final: f64,
    /// False when the penalty escalation hit its cap before the iterates became binary.
    pub converged: bool,
    /// True when a budget repair pass changed the rounded point.
    pub repaired: bool,
}

/// Average loss, average latency and budget feasibility of an assignment.
pub fn evaluate(inst: &Instance, a: &Assignment) -> Result<PlannerReport, PlanError> {
    if a.len() != inst.m() {
        return Err(PlanError::MalformedAssignment(format!(
            "assignment has {} rows, instance has {}",
            a.len(),
            inst.m()
        )));
    }
    let avg_loss = inst.average(
        a.levels()
            .iter()
            .zip(inst.losses())
            .map(|(l, r)| r[l.index()]),
    );
    let avg_latency = inst.average(
        a.levels()
            .iter()
            .zip(inst.latencies())
            .map(|(l, r)| r[l.index()]),
    );
    Ok(PlannerReport {
        assignment: a.clone(),
        avg_loss,
        avg_latency,
        feasible: avg_latency <= inst.tau() + FEASIBILITY_TOLERANCE,
        iterations: 0,
        restarts_used: 0,
        gamma_final: 0.0,
        converged: true,
        repaired: false,
    })
}
