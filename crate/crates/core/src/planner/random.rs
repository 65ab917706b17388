use alloc::vec::Vec;

use rand::Rng as _;

use super::{row_min, Instance, Row};
use crate::rng;

/// Seeded test instance: losses `U(0, 1)`, latencies `U(0.1, 1)`, and `τ`
/// uniform between the least and greatest achievable average latency.
pub fn random_instance(m: usize, seed: u64) -> Instance {
    let mut g = rng::seeded(seed);
    let losses: Vec<Row> = (0..m)
        .map(|_| core::array::from_fn(|_| g.random_range(0.0..1.0)))
        .collect();
    let latencies: Vec<Row> = (0..m)
        .map(|_| core::array::from_fn(|_| g.random_range(0.1..1.0)))
        .collect();
    let lo: f64 = latencies.iter().map(row_min).sum::<f64>() / m as f64;
    let hi: f64 = latencies
        .iter()
        .map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / m as f64;
    let tau = lo + g.random_range(0.0..1.0) * (hi - lo);
    Instance::new(losses, latencies, tau.max(lo)).expect("generated instance is valid")
}
