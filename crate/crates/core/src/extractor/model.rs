use alloc::format;
use alloc::vec::Vec;

use super::{train_intermediate, train_semantic_ae, train_visual_ae, ExtractorError, TrainingSet};
use crate::linalg::Matrix;

const ORTHONORMALITY_TOLERANCE: f64 = 1e-8;

/// A trained extractor: intermediate projections plus both encoders.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "ModelParts"))]
pub struct ExtractorModel {
    w_s: Matrix,
    w_v: Matrix,
    p_v: Matrix,
    p_s: Matrix,
    lambda: f64,
}

#[cfg(feature = "serde")]
#[derive(serde::Deserialize)]
struct ModelParts {
    w_s: Matrix,
    w_v: Matrix,
    p_v: Matrix,
    p_s: Matrix,
    lambda: f64,
}

#[cfg(feature = "serde")]
impl TryFrom<ModelParts> for ExtractorModel {
    type Error = ExtractorError;

    fn try_from(p: ModelParts) -> Result<Self, Self::Error> {
        ExtractorModel::from_parts(p.w_s, p.w_v, p.p_v, p.p_s, p.lambda)
    }
}

impl ExtractorModel {
    /// Assembles a model, checking shapes and that `w_s` has orthonormal rows.
    pub fn from_parts(
        w_s: Matrix,
        w_v: Matrix,
        p_v: Matrix,
        p_s: Matrix,
        lambda: f64,
    ) -> Result<Self, ExtractorError> {
        let k = w_s.rows();
        let (d_s, d_v) = (w_s.cols(), w_v.cols());
        if w_v.rows() != k || p_v.shape() != (k, d_v) || p_s.shape() != (k, d_s) {
            return Err(ExtractorError::DimensionMismatch(format!(
                "w_s {:?}, w_v {:?}, p_v {:?}, p_s {:?}",
                w_s.shape(),
                w_v.shape(),
                p_v.shape(),
                p_s.shape()
            )));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(ExtractorError::InvalidLambda(lambda));
        }
        let defect = w_s.gram().sub(&Matrix::identity(k)).max_abs();
        if defect > ORTHONORMALITY_TOLERANCE {
            return Err(ExtractorError::DimensionMismatch(format!(
                "w_s rows are not orthonormal (defect {defect:e})"
            )));
        }
        Ok(Self {
            w_s,
            w_v,
            p_v,
            p_s,
            lambda,
        })
    }

    pub fn k(&self) -> usize {
        self.w_s.rows()
    }

    pub fn d_v(&self) -> usize {
        self.w_v.cols()
    }

    pub fn d_s(&self) -> usize {
        self.w_s.cols()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// k × D_s.
    pub fn w_s(&self) -> &Matrix {
        &self.w_s
    }

    /// k × D_v.
    pub fn w_v(&self) -> &Matrix {
        &self.w_v
    }

    /// Visual encoder, k × D_v.
    pub fn p_v(&self) -> &Matrix {
        &self.p_v
    }

    /// Semantic encoder, k × D_s; its transpose is the semantic decoder.
    pub fn p_s(&self) -> &Matrix {
        &self.p_s
    }

    /// `P_v · v`.
    pub fn encode(&self, v: &[f64]) -> Vec<f64> {
        self.p_v.mul_vec(v)
    }

    /// `P_sᵀ · f`.
    pub fn decode(&self, f: &[f64]) -> Vec<f64> {
        self.p_s.t_mul_vec(f)
    }

    /// `P_sᵀ · P_v · v`.
    pub fn semantic(&self, v: &[f64]) -> Vec<f64> {
        self.decode(&self.encode(v))
    }
}

/// Trains the intermediate projections and both autoencoders on one training set.
pub fn train_extractor(
    train: &TrainingSet,
    k: usize,
    lambda: f64,
) -> Result<ExtractorModel, ExtractorError> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(ExtractorError::InvalidLambda(lambda));
    }
    let inter = train_intermediate(train, k)?;
    let p_v = train_visual_ae(train.visual(), &inter.f, lambda)?;
    let p_s = train_semantic_ae(train.semantic(), &inter.f, lambda)?;
    ExtractorModel::from_parts(inter.w_s, inter.w_v, p_v, p_s, lambda)
}

/// Extraction depth for a visual feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FeatureLevel {
    /// The visual feature itself (D_v).
    Visual = 1,
    /// `P_v·v` (k).
    Intermediate = 2,
    /// `P_sᵀ·P_v·v` (D_s).
    Semantic = 3,
}

impl TryFrom<u8> for FeatureLevel {
    type Error = u8;

    fn try_from(l: u8) -> Result<Self, u8> {
        match l {
            1 => Ok(Self::Visual),
            2 => Ok(Self::Intermediate),
            3 => Ok(Self::Semantic),
            other => Err(other),
        }
    }
}

pub fn extract(
    model: &ExtractorModel,
    v: &[f64],
    level: FeatureLevel,
) -> Result<Vec<f64>, ExtractorError> {
    if v.len() != model.d_v() {
        return Err(ExtractorError::DimensionMismatch(format!(
            "visual feature has length {}, model expects {}",
            v.len(),
            model.d_v()
        )));
    }
    Ok(match level {
        FeatureLevel::Visual => v.to_vec(),
        FeatureLevel::Intermediate => model.encode(v),
        FeatureLevel::Semantic => model.semantic(v),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn identity_model(n: usize) -> ExtractorModel {
        let i = Matrix::identity(n);
        ExtractorModel::from_parts(i.clone(), i.clone(), i.clone(), i, 1.0).unwrap()
    }

    #[test]
    fn levels_one_and_two_with_identity_encoder() {
        let m = identity_model(3);
        let v = vec![1.0, -2.0, 0.5];
        assert_eq!(extract(&m, &v, FeatureLevel::Visual).unwrap(), v);
        assert_eq!(extract(&m, &v, FeatureLevel::Intermediate).unwrap(), v);
        assert!(extract(&m, &[1.0], FeatureLevel::Visual).is_err());
    }

    #[test]
    fn level_from_number() {
        assert_eq!(FeatureLevel::try_from(3), Ok(FeatureLevel::Semantic));
        assert_eq!(FeatureLevel::try_from(4), Err(4));
    }

    #[test]
    fn rejects_non_orthonormal_projection() {
        let i = Matrix::identity(2);
        let r = ExtractorModel::from_parts(i.scale(2.0), i.clone(), i.clone(), i, 1.0);
        assert!(r.is_err());
    }
}
