use alloc::vec::Vec;

use super::matrix::{dot, norm};
use super::{LinalgError, Matrix};

/// Singular values below `RANK_TOLERANCE · σ_max` are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

const MAX_SWEEPS: usize = 80;
const ORTHOGONALITY_TOLERANCE: f64 = 1e-15;

/// Thin singular value decomposition `a = u · diag(sigma) · vᵀ` restricted to
/// the numerically non-zero singular values.
#[derive(Debug, Clone, PartialEq)]
pub struct Svd {
    /// m × r, orthonormal columns.
    pub u: Matrix,
    /// Descending, all above the rank tolerance.
    pub sigma: Vec<f64>,
    /// n × r, orthonormal columns.
    pub v: Matrix,
}

impl Svd {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }
}

/// One-sided (Hestenes) Jacobi SVD. Returns `None` in the `Ok` slot when the
/// matrix is numerically zero.
pub fn svd_thin(a: &Matrix) -> Result<Option<Svd>, LinalgError> {
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let wide = a.rows() < a.cols();
    // Orthogonalise the columns of the tall orientation.
    let tall = if wide { a.transpose() } else { a.clone() };
    let (m, n) = tall.shape();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| tall.column(j)).collect();
    let mut right: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = alloc::vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == 0.0 || gamma.abs() <= ORTHOGONALITY_TOLERANCE * libm::sqrt(alpha * beta)
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + libm::sqrt(1.0 + zeta * zeta))
                } else {
                    -1.0 / (-zeta + libm::sqrt(1.0 + zeta * zeta))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate_pair(&mut cols, p, q, c, s);
                rotate_pair(&mut right, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let sig: Vec<f64> = cols.iter().map(|c| norm(c)).collect();
    order.sort_by(|&i, &j| sig[j].total_cmp(&sig[i]));
    let sigma_max = sig[order[0]];
    if sigma_max == 0.0 {
        return Ok(None);
    }
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&j| sig[j] > RANK_TOLERANCE * sigma_max)
        .collect();

    let left_vecs: Vec<Vec<f64>> = kept
        .iter()
        .map(|&j| cols[j].iter().map(|x| x / sig[j]).collect())
        .collect();
    let right_vecs: Vec<Vec<f64>> = kept.iter().map(|&j| right[j].clone()).collect();
    let sigma = kept.iter().map(|&j| sig[j]).collect();
    let left = Matrix::from_columns(&left_vecs)?;
    let right = Matrix::from_columns(&right_vecs)?;
    debug_assert_eq!(left.rows(), m);
    let (u, v) = if wide { (right, left) } else { (left, right) };
    Ok(Some(Svd { u, sigma, v }))
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(q);
    let (a, b) = (&mut head[p], &mut tail[0]);
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xp, yq) = (*x, *y);
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// Moore–Penrose pseudo-inverse (n × m for an m × n input).
pub fn pinv(a: &Matrix) -> Result<Matrix, LinalgError> {
    let Some(svd) = svd_thin(a)? else {
        return Ok(Matrix::zeros(a.cols(), a.rows()));
    };
    // a† = V Σ⁻¹ Uᵀ
    let mut v_scaled = svd.v.clone();
    for (j, &s) in svd.sigma.iter().enumerate() {
        for i in 0..v_scaled.rows() {
            v_scaled[(i, j)] /= s;
        }
    }
    Ok(v_scaled.matmul_t(&svd.u))
}

/// Orthogonal projector `v† v` onto the row space of `v` (n × n).
pub fn row_space_projection(v: &Matrix) -> Result<Matrix, LinalgError> {
    let Some(svd) = svd_thin(v)? else {
        return Ok(Matrix::zeros(v.cols(), v.cols()));
    };
    Ok(svd.v.matmul_t(&svd.v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_diagonal() {
        let i3 = Matrix::identity(3);
        assert!(pinv(&i3).unwrap().sub(&i3).max_abs() < 1e-15);
        let d = Matrix::diag(&[2.0, 0.0]);
        let p = pinv(&d).unwrap();
        assert!(p.sub(&Matrix::diag(&[0.5, 0.0])).max_abs() < 1e-15);
    }

    #[test]
    fn rank_one_row_projector() {
        let v = Matrix::from_rows(&[[1.0, 1.0]]).unwrap();
        let h = row_space_projection(&v).unwrap();
        let expected = Matrix::from_rows(&[[0.5, 0.5], [0.5, 0.5]]).unwrap();
        assert!(h.sub(&expected).max_abs() < 1e-15);
    }

    #[test]
    fn square_invertible_projects_to_identity() {
        let v = Matrix::from_rows(&[[2.0, 1.0], [1.0, 3.0]]).unwrap();
        let h = row_space_projection(&v).unwrap();
        assert!(h.sub(&Matrix::identity(2)).max_abs() < 1e-14);
    }

    #[test]
    fn zero_matrix_pinv_is_zero() {
        let p = pinv(&Matrix::zeros(2, 3)).unwrap();
        assert_eq!(p.shape(), (3, 2));
        assert_eq!(p.max_abs(), 0.0);
    }

    #[test]
    fn exact_rank_deficiency_is_detected() {
        // rank 1: second row = 2 × first
        let a = Matrix::from_rows(&[[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]]).unwrap();
        let svd = svd_thin(&a).unwrap().unwrap();
        assert_eq!(svd.rank(), 1);
        let h = row_space_projection(&a).unwrap();
        assert!((h.trace() - 1.0).abs() < 1e-12);
    }
}
