//! Synthetic zero-shot worlds: prototypes, a linear visual map and a seen/unseen split.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::extractor::{ClassId, ExtractorError, SemanticPrototypes, TrainingSet};
use crate::linalg::{norm, sq_dist, Matrix};
use crate::rng::{self, standard_normal};

/// Attempts per prototype before giving up on the separation requirement.
pub const MAX_REJECTIONS: usize = 10_000;
/// Minimum Euclidean distance between any two prototypes.
pub const MIN_PROTOTYPE_DISTANCE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DataError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("could not place prototype {class} after {attempts} attempts")]
    RejectionExhausted { class: usize, attempts: usize },
    #[error(transparent)]
    Extractor(#[from] ExtractorError),
}

/// Shape and noise of a synthetic world.
///
/// Classes `0..max(c_seen_tx, c_seen_rx)` form the seen pool. The transmitter
/// trains on the first `c_seen_tx` of them and the receiver on the last
/// `c_seen_rx`; every remaining class is unseen and supplies the test samples.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SynthConfig {
    pub c_total: usize,
    pub c_seen_tx: usize,
    pub c_seen_rx: usize,
    pub d_v: usize,
    pub d_s: usize,
    /// Suggested intermediate dimension.
    pub k_hint: usize,
    pub n_per_class: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            c_total: 20,
            c_seen_tx: 10,
            c_seen_rx: 10,
            d_v: 64,
            d_s: 16,
            k_hint: 8,
            n_per_class: 40,
            noise_sigma: 0.05,
            seed: 0,
        }
    }
}

impl SynthConfig {
    fn pool(&self) -> usize {
        self.c_seen_tx.max(self.c_seen_rx)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |msg: String| Err(DataError::ConfigInvalid(msg));
        if self.d_v == 0 || self.d_s == 0 || self.n_per_class == 0 {
            return bad("dimensions and samples per class must be positive".into());
        }
        if self.c_seen_tx == 0 || self.c_seen_rx == 0 {
            return bad("each party needs at least one seen class".into());
        }
        if self.pool() >= self.c_total {
            return bad(alloc::format!(
                "{} classes leave no unseen class after {} seen",
                self.c_total,
                self.pool()
            ));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad("noise_sigma must be finite and non-negative".into());
        }
        if self.k_hint == 0 || self.k_hint > self.d_s.min(self.d_v) {
            return bad("k_hint must lie in 1..=min(d_v, d_s)".into());
        }
        Ok(())
    }

    pub fn seen_tx(&self) -> Vec<ClassId> {
        (0..self.c_seen_tx).map(|c| ClassId(c as u32)).collect()
    }

    pub fn seen_rx(&self) -> Vec<ClassId> {
        (self.pool() - self.c_seen_rx..self.pool()).map(|c| ClassId(c as u32)).collect()
    }

    pub fn test_classes(&self) -> Vec<ClassId> {
        (self.pool()..self.c_total).map(|c| ClassId(c as u32)).collect()
    }
}

/// A visual feature and the class it was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSample {
    pub v: Vec<f64>,
    pub class: ClassId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedWorld {
    pub config: SynthConfig,
    /// Every class, seen and unseen.
    pub prototypes: Arc<SemanticPrototypes>,
    /// Ground-truth `D_v × D_s` map from semantic to visual space.
    pub mixing: Matrix,
    pub tx_train: TrainingSet,
    pub rx_train: TrainingSet,
    /// Unseen classes only, grouped by class.
    pub test: Vec<TestSample>,
}

impl GeneratedWorld {
    pub fn test_classes(&self) -> Vec<ClassId> {
        self.config.test_classes()
    }

    /// Prototypes of the unseen classes only: the recognition domain.
    pub fn test_prototypes(&self) -> Arc<SemanticPrototypes> {
        let ids = self.test_classes();
        let columns: Vec<Vec<f64>> = ids
            .iter()
            .map(|&c| self.prototypes.get(c).expect("generated class"))
            .collect();
        let vectors = Matrix::from_columns(&columns).expect("at least one unseen class");
        Arc::new(SemanticPrototypes::new(ids, vectors).expect("distinct generated ids"))
    }

    /// Indices of `m` test samples drawn without replacement (all of them,
    /// shuffled, when `m` exceeds the pool).
    pub fn test_subset(&self, m: usize, seed: u64) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.test.len()).collect();
        idx.shuffle(&mut rng::seeded(seed));
        idx.truncate(m);
        idx
    }

    /// Whether both parties train on the same samples.
    pub fn shared_training(&self) -> bool {
        self.tx_train == self.rx_train
    }
}

/// Draws a world: unit prototypes at least [`MIN_PROTOTYPE_DISTANCE`] apart, a
/// Gaussian map `G` with entries of variance `1/D_s`, and samples
/// `v = G s_c + σ ε`.
pub fn generate(cfg: &SynthConfig) -> Result<GeneratedWorld, DataError> {
    cfg.validate()?;
    let prototypes = Arc::new(sample_prototypes(cfg)?);

    let mut g = rng::seeded(rng::mix_seed(cfg.seed, 1));
    let scale = 1.0 / libm::sqrt(cfg.d_s as f64);
    let mixing = Matrix::from_fn(cfg.d_v, cfg.d_s, |_, _| scale * standard_normal(&mut g));

    let mut noise = rng::seeded(rng::mix_seed(cfg.seed, 2));
    let mut draw = |class: ClassId| -> Vec<f64> {
        let s = prototypes.get(class).expect("generated class");
        let mut v = mixing.mul_vec(&s);
        for x in &mut v {
            *x += cfg.noise_sigma * standard_normal(&mut noise);
        }
        v
    };

    // Seen pool samples are drawn once so parties with overlapping classes share them.
    let mut pool: Vec<(ClassId, Vec<f64>)> = Vec::new();
    for c in 0..cfg.pool() {
        for _ in 0..cfg.n_per_class {
            pool.push((ClassId(c as u32), draw(ClassId(c as u32))));
        }
    }
    let mut test = Vec::new();
    for class in cfg.test_classes() {
        for _ in 0..cfg.n_per_class {
            test.push(TestSample { v: draw(class), class });
        }
    }

    let training = |classes: &[ClassId]| -> Result<TrainingSet, DataError> {
        let picked: Vec<&(ClassId, Vec<f64>)> =
            pool.iter().filter(|(c, _)| classes.contains(c)).collect();
        let columns: Vec<Vec<f64>> = picked.iter().map(|(_, v)| v.clone()).collect();
        let labels = picked.iter().map(|(c, _)| *c).collect();
        let visual = Matrix::from_columns(&columns).expect("non-empty pool");
        Ok(TrainingSet::new(visual, labels, &prototypes)?)
    };
    let tx_train = training(&cfg.seen_tx())?;
    let rx_train = training(&cfg.seen_rx())?;

    Ok(GeneratedWorld {
        config: *cfg,
        prototypes,
        mixing,
        tx_train,
        rx_train,
        test,
    })
}

fn sample_prototypes(cfg: &SynthConfig) -> Result<SemanticPrototypes, DataError> {
    let mut g = rng::seeded(rng::mix_seed(cfg.seed, 0));
    let mut accepted: Vec<Vec<f64>> = Vec::with_capacity(cfg.c_total);
    for class in 0..cfg.c_total {
        let mut placed = false;
        for _ in 0..MAX_REJECTIONS {
            let mut s: Vec<f64> = (0..cfg.d_s).map(|_| standard_normal(&mut g)).collect();
            let n = norm(&s);
            if n == 0.0 {
                continue;
            }
            s.iter_mut().for_each(|x| *x /= n);
            let d2 = MIN_PROTOTYPE_DISTANCE * MIN_PROTOTYPE_DISTANCE;
            if accepted.iter().all(|p| sq_dist(p, &s) >= d2) {
                accepted.push(s);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(DataError::RejectionExhausted {
                class,
                attempts: MAX_REJECTIONS,
            });
        }
    }
    let ids = (0..cfg.c_total).map(|c| ClassId(c as u32)).collect();
    let vectors = Matrix::from_columns(&accepted).expect("at least one class");
    Ok(SemanticPrototypes::new(ids, vectors)?)
}
