use super::{eigh_sym, LinalgError, Matrix};

const SINGULARITY_TOLERANCE: f64 = 1e-12;

/// Solves `a·X + X·b = c` for symmetric positive-semidefinite `a` (p × p) and
/// `b` (q × q).
///
/// Both coefficients are diagonalised (`a = Q₁Λ₁Q₁ᵀ`, `b = Q₂Λ₂Q₂ᵀ`), the
/// transformed right-hand side is divided entrywise by `λ₁ᵢ + λ₂ⱼ`, and the
/// result is rotated back.
pub fn sylvester_spd(a: &Matrix, b: &Matrix, c: &Matrix) -> Result<Matrix, LinalgError> {
    if c.rows() != a.rows() || c.cols() != b.rows() {
        return Err(LinalgError::DimensionMismatch {
            expected: (a.rows(), b.rows()),
            found: c.shape(),
        });
    }
    let ea = eigh_sym(a)?;
    let eb = eigh_sym(b)?;
    let threshold = SINGULARITY_TOLERANCE * (a.frobenius_norm() + b.frobenius_norm());
    // Values are sorted descending, so the last pair is the smallest sum.
    let smallest = ea.values[ea.values.len() - 1] + eb.values[eb.values.len() - 1];
    if smallest <= threshold {
        return Err(LinalgError::SingularPencil {
            sum: smallest,
            threshold,
        });
    }

    let q1 = &ea.vectors;
    let q2 = &eb.vectors;
    let mut y = q1.t_matmul(c).matmul(q2);
    for i in 0..y.rows() {
        for j in 0..y.cols() {
            y[(i, j)] /= ea.values[i] + eb.values[j];
        }
    }
    Ok(q1.matmul(&y).matmul_t(q2))
}
