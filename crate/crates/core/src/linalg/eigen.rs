use alloc::vec::Vec;

use super::{LinalgError, Matrix};

const MAX_SWEEPS: usize = 100;
const OFF_DIAGONAL_TOLERANCE: f64 = 1e-12;
const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Eigenpairs of a symmetric matrix, eigenvalues in non-increasing order.
///
/// Column `j` of `vectors` is the unit eigenvector for `values[j]`. Each column
/// is signed so that its largest-magnitude entry (lowest index on ties) is
/// non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl EigenDecomposition {
    /// Rows are the leading `k` eigenvectors.
    pub fn leading_rows(&self, k: usize) -> Matrix {
        self.vectors.transpose().top_rows(k)
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
pub fn eigh_sym(a: &Matrix) -> Result<EigenDecomposition, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare(a.rows(), a.cols()));
    }
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let scale = a.frobenius_norm();
    let asym = a.asymmetry().unwrap_or(0.0);
    if asym > SYMMETRY_TOLERANCE * scale {
        return Err(LinalgError::NotSymmetric { asymmetry: asym });
    }

    let n = a.rows();
    let mut w = a.symmetrized();
    let mut q = Matrix::identity(n);
    let threshold = OFF_DIAGONAL_TOLERANCE * scale;

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&w) <= threshold {
            break;
        }
        for p in 0..n {
            for r in p + 1..n {
                let apr = w[(p, r)];
                if apr == 0.0 {
                    continue;
                }
                let theta = (w[(r, r)] - w[(p, p)]) / (2.0 * apr);
                let t = if theta >= 0.0 {
                    1.0 / (theta + libm::sqrt(theta * theta + 1.0))
                } else {
                    -1.0 / (-theta + libm::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                rotate(&mut w, &mut q, p, r, c, s);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps the lower index first among equal eigenvalues.
    order.sort_by(|&i, &j| w[(j, j)].total_cmp(&w[(i, i)]));
    let values = order.iter().map(|&i| w[(i, i)]).collect();
    let mut vectors = q.select_columns(&order);
    canonicalize_signs(&mut vectors);
    Ok(EigenDecomposition { values, vectors })
}

/// `w ← Jᵀ w J`, `q ← q J` for the plane rotation in coordinates (p, r).
fn rotate(w: &mut Matrix, q: &mut Matrix, p: usize, r: usize, c: f64, s: f64) {
    let n = w.rows();
    for k in 0..n {
        let (wkp, wkr) = (w[(k, p)], w[(k, r)]);
        w[(k, p)] = c * wkp - s * wkr;
        w[(k, r)] = s * wkp + c * wkr;
    }
    for k in 0..n {
        let (wpk, wrk) = (w[(p, k)], w[(r, k)]);
        w[(p, k)] = c * wpk - s * wrk;
        w[(r, k)] = s * wpk + c * wrk;
    }
    w[(p, r)] = 0.0;
    w[(r, p)] = 0.0;
    for k in 0..n {
        let (qkp, qkr) = (q[(k, p)], q[(k, r)]);
        q[(k, p)] = c * qkp - s * qkr;
        q[(k, r)] = s * qkp + c * qkr;
    }
}

fn off_diagonal_norm(w: &Matrix) -> f64 {
    let n = w.rows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += w[(i, j)] * w[(i, j)];
            }
        }
    }
    libm::sqrt(sum)
}

/// Flips each column so that its largest-magnitude entry is non-negative.
pub(crate) fn canonicalize_signs(vectors: &mut Matrix) {
    for j in 0..vectors.cols() {
        let largest = (0..vectors.rows()).fold(0.0f64, |m, i| m.max(vectors[(i, j)].abs()));
        // Magnitudes within rounding of the maximum count as ties.
        let pivot = (0..vectors.rows())
            .find(|&i| vectors[(i, j)].abs() >= largest * (1.0 - 1e-10))
            .unwrap_or(0);
        if vectors[(pivot, j)] < 0.0 {
            for i in 0..vectors.rows() {
                vectors[(i, j)] = -vectors[(i, j)];
            }
        }
    }
}
