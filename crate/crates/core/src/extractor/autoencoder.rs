use alloc::format;

use super::ExtractorError;
use crate::linalg::{sylvester_spd, Matrix};

/// Trains the visual encoder `P_v` (k × D_v) tying `P_v·V` to the intermediate
/// features `F`, by solving `F Fᵀ P + λ P V Vᵀ = (1+λ) F Vᵀ`.
pub fn train_visual_ae(v: &Matrix, f: &Matrix, lambda: f64) -> Result<Matrix, ExtractorError> {
    solve_relaxed_autoencoder(v, f, lambda)
}

/// Trains the semantic encoder `P_s` (k × D_s), the same relaxed problem with
/// the semantic matrix `S` in place of `V`.
pub fn train_semantic_ae(s: &Matrix, f: &Matrix, lambda: f64) -> Result<Matrix, ExtractorError> {
    solve_relaxed_autoencoder(s, f, lambda)
}

fn solve_relaxed_autoencoder(x: &Matrix, f: &Matrix, lambda: f64) -> Result<Matrix, ExtractorError> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(ExtractorError::InvalidLambda(lambda));
    }
    if x.cols() != f.cols() {
        return Err(ExtractorError::DimensionMismatch(format!(
            "features have {} samples, intermediate has {}",
            x.cols(),
            f.cols()
        )));
    }
    solve_from_moments(&f.gram(), &x.gram(), &f.matmul_t(x), lambda)
}

/// Solves `ff·P + λ·P·xx = (1+λ)·fx` given the moment matrices `F Fᵀ`, `X Xᵀ`
/// and `F Xᵀ`.
fn solve_from_moments(
    ff: &Matrix,
    xx: &Matrix,
    fx: &Matrix,
    lambda: f64,
) -> Result<Matrix, ExtractorError> {
    Ok(sylvester_spd(ff, &xx.scale(lambda), &fx.scale(1.0 + lambda))?)
}

/// Relative residual `‖F Fᵀ P + λ P X Xᵀ − (1+λ) F Xᵀ‖_F / ‖(1+λ) F Xᵀ‖_F` of
/// the autoencoder stationarity equation.
pub fn autoencoder_residual(p: &Matrix, x: &Matrix, f: &Matrix, lambda: f64) -> f64 {
    let rhs = f.matmul_t(x).scale(1.0 + lambda);
    let lhs = f.gram().matmul(p).add(&p.matmul(&x.gram()).scale(lambda));
    let denom = rhs.frobenius_norm();
    let r = lhs.sub(&rhs).frobenius_norm();
    if denom == 0.0 {
        r
    } else {
        r / denom
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_encoding_is_identity() {
        // V with VVᵀ = I and F = V.
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let v = Matrix::from_rows(&[[h, h, 0.0], [h, -h, 0.0]]).unwrap();
        for lambda in [0.1, 1.0, 10.0] {
            let p = train_visual_ae(&v, &v, lambda).unwrap();
            assert!(p.sub(&Matrix::identity(2)).max_abs() < 1e-14);
            let q = train_semantic_ae(&v, &v, lambda).unwrap();
            assert!(q.sub(&Matrix::identity(2)).max_abs() < 1e-14);
        }
    }

    #[test]
    fn scalar_closed_form() {
        // FFᵀ = 1, VVᵀ = 1, FVᵀ = 2, λ = 1: 2P = 4.
        let one = Matrix::diag(&[1.0]);
        let p = solve_from_moments(&one, &one, &Matrix::diag(&[2.0]), 1.0).unwrap();
        assert!((p[(0, 0)] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_lambda_and_shapes() {
        let v = Matrix::identity(2);
        assert_eq!(
            train_visual_ae(&v, &v, 0.0),
            Err(ExtractorError::InvalidLambda(0.0))
        );
        assert!(train_visual_ae(&v, &Matrix::identity(3), 1.0).is_err());
    }
}
