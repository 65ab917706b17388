use alloc::format;
use alloc::vec::Vec;

use super::{ExtractorError, TrainingSet};
use crate::linalg::{eigh_sym, svd_thin, Matrix};

/// Solution of the joint visual/semantic projection onto a k-dimensional
/// latent space.
#[derive(Debug, Clone, PartialEq)]
pub struct IntermediateSolution {
    /// k × D_s with orthonormal rows.
    pub w_s: Matrix,
    /// k × D_v.
    pub w_v: Matrix,
    /// k × N intermediate features `w_s · S`.
    pub f: Matrix,
    /// All eigenvalues of `S·H·Sᵀ`, descending.
    pub spectrum: Vec<f64>,
}

impl IntermediateSolution {
    pub fn k(&self) -> usize {
        self.w_s.rows()
    }

    /// `tr(w_s · S H Sᵀ · w_sᵀ)`, the sum of the k leading eigenvalues.
    pub fn objective(&self) -> f64 {
        self.spectrum[..self.k()].iter().sum()
    }
}

/// Trains the semantic projection `w_s` (leading eigenvectors of `S·H·Sᵀ`
/// with `H = V†V`), the matching least-squares visual projection
/// `w_v = w_s·S·V†`, and the intermediate features `F = w_s·S`.
pub fn train_intermediate(
    train: &TrainingSet,
    k: usize,
) -> Result<IntermediateSolution, ExtractorError> {
    let v = train.visual();
    let s = train.semantic();
    let (d_v, d_s, n) = (v.rows(), s.rows(), v.cols());
    if k == 0 || k > d_v.min(d_s) || k > n {
        return Err(ExtractorError::DimensionMismatch(format!(
            "k = {k} must satisfy 1 <= k <= min(D_v = {d_v}, D_s = {d_s}) and k <= N = {n}"
        )));
    }

    let svd = svd_thin(v)?;
    // S·H·Sᵀ with H = V_r V_rᵀ, formed as (S V_r)(S V_r)ᵀ so it is exactly symmetric.
    let m = match &svd {
        Some(svd) => s.matmul(&svd.v).gram(),
        None => Matrix::zeros(d_s, d_s),
    };
    let eig = eigh_sym(&m)?;
    let w_s = eig.leading_rows(k);
    let f = w_s.matmul(s);
    let w_v = match &svd {
        Some(svd) => {
            // w_s S V† = (w_s S V_r) Σ⁻¹ U_rᵀ
            let mut proj = f.matmul(&svd.v);
            for j in 0..proj.cols() {
                for i in 0..proj.rows() {
                    proj[(i, j)] /= svd.sigma[j];
                }
            }
            proj.matmul_t(&svd.u)
        }
        None => Matrix::zeros(k, d_v),
    };
    Ok(IntermediateSolution {
        w_s,
        w_v,
        f,
        spectrum: eig.values,
    })
}
