//! Multi-level feature extractor: a shared k-dimensional intermediate space,
//! a visual autoencoder into it, a semantic autoencoder into it, and a
//! nearest-prototype classifier on top.
//!
//! Levels, for a visual feature `v`:
//! 1. `v` itself,
//! 2. the intermediate feature `f = P_v · v`,
//! 3. the semantic feature `s = P_sᵀ · f`,
//! 4. the class whose prototype is nearest to `s`.

mod autoencoder;
mod classify;
mod intermediate;
mod model;

pub use autoencoder::{autoencoder_residual, train_semantic_ae, train_visual_ae};
pub use classify::classify;
pub use intermediate::{train_intermediate, IntermediateSolution};
pub use model::{extract, train_extractor, ExtractorModel, FeatureLevel};

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{LinalgError, Matrix};

/// Class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct ClassId(pub u32);

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExtractorError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("relaxation weight must be positive and finite, got {0}")]
    InvalidLambda(f64),
    #[error("unknown class {0}")]
    UnknownClass(ClassId),
    #[error("duplicate class {0}")]
    DuplicateClass(ClassId),
    #[error("candidate class set is empty")]
    EmptyAllowedSet,
    #[error("training set is empty")]
    EmptyTrainingSet,
}

/// The semantic vector of every known class, one column per class.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticPrototypes {
    class_ids: Vec<ClassId>,
    vectors: Matrix,
    index: BTreeMap<ClassId, usize>,
}

impl SemanticPrototypes {
    /// `vectors` is D_s × C; column `j` belongs to `class_ids[j]`.
    pub fn new(class_ids: Vec<ClassId>, vectors: Matrix) -> Result<Self, ExtractorError> {
        if class_ids.len() != vectors.cols() {
            return Err(ExtractorError::DimensionMismatch(alloc::format!(
                "{} class ids for {} prototype columns",
                class_ids.len(),
                vectors.cols()
            )));
        }
        let mut index = BTreeMap::new();
        for (j, &c) in class_ids.iter().enumerate() {
            if index.insert(c, j).is_some() {
                return Err(ExtractorError::DuplicateClass(c));
            }
        }
        Ok(Self {
            class_ids,
            vectors,
            index,
        })
    }

    pub fn class_ids(&self) -> &[ClassId] {
        &self.class_ids
    }

    /// D_s × C.
    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.vectors.rows()
    }

    pub fn len(&self) -> usize {
        self.class_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_ids.is_empty()
    }

    pub fn contains(&self, c: ClassId) -> bool {
        self.index.contains_key(&c)
    }

    pub fn position(&self, c: ClassId) -> Option<usize> {
        self.index.get(&c).copied()
    }

    pub fn get(&self, c: ClassId) -> Option<Vec<f64>> {
        self.position(c).map(|j| self.vectors.column(j))
    }
}

/// Visual features, labels and the matching semantic matrix of a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    visual: Matrix,
    labels: Vec<ClassId>,
    semantic: Matrix,
}

impl TrainingSet {
    /// `visual` is D_v × N; semantic columns are looked up from `prototypes`.
    pub fn new(
        visual: Matrix,
        labels: Vec<ClassId>,
        prototypes: &SemanticPrototypes,
    ) -> Result<Self, ExtractorError> {
        if labels.is_empty() {
            return Err(ExtractorError::EmptyTrainingSet);
        }
        if labels.len() != visual.cols() {
            return Err(ExtractorError::DimensionMismatch(alloc::format!(
                "{} labels for {} samples",
                labels.len(),
                visual.cols()
            )));
        }
        let mut semantic = Matrix::zeros(prototypes.dim(), labels.len());
        for (n, &c) in labels.iter().enumerate() {
            let j = prototypes
                .position(c)
                .ok_or(ExtractorError::UnknownClass(c))?;
            for d in 0..prototypes.dim() {
                semantic[(d, n)] = prototypes.vectors()[(d, j)];
            }
        }
        Ok(Self {
            visual,
            labels,
            semantic,
        })
    }

    /// D_v × N.
    pub fn visual(&self) -> &Matrix {
        &self.visual
    }

    pub fn labels(&self) -> &[ClassId] {
        &self.labels
    }

    /// D_s × N.
    pub fn semantic(&self) -> &Matrix {
        &self.semantic
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn visual_dim(&self) -> usize {
        self.visual.rows()
    }

    pub fn semantic_dim(&self) -> usize {
        self.semantic.rows()
    }
}
