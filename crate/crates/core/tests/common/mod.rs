#![allow(dead_code)]

use skbmlfx_core::linalg::Matrix;
use skbmlfx_core::rng::{self, standard_normal, Rng};

pub fn gaussian(g: &mut Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| standard_normal(g))
}

pub fn rng(seed: u64) -> Rng {
    rng::seeded(seed)
}

/// `X Xᵀ + shift·I` for a Gaussian `X` with `extra` columns.
pub fn spd(g: &mut Rng, n: usize, extra: usize, shift: f64) -> Matrix {
    let x = gaussian(g, n, extra);
    x.matmul_t(&x).add(&Matrix::identity(n).scale(shift))
}

/// Random matrix of the given rank as a product of Gaussian factors.
pub fn with_rank(g: &mut Rng, rows: usize, cols: usize, rank: usize) -> Matrix {
    gaussian(g, rows, rank).matmul(&gaussian(g, rank, cols))
}

/// Orthonormal rows by modified Gram–Schmidt on Gaussian draws.
pub fn orthonormal_rows(g: &mut Rng, k: usize, n: usize) -> Matrix {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(k);
    while rows.len() < k {
        let mut v: Vec<f64> = (0..n).map(|_| standard_normal(g)).collect();
        for r in &rows {
            let d: f64 = r.iter().zip(&v).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(r).for_each(|(x, y)| *x -= d * y);
        }
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len > 1e-8 {
            rows.push(v.into_iter().map(|x| x / len).collect());
        }
    }
    Matrix::from_rows(&rows).unwrap()
}

/// Dense Gaussian elimination with partial pivoting; `a` is n×n row-major.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// `‖diff‖_F / ‖reference‖_F`, or the bare norm when the reference vanishes.
pub fn rel(diff: &Matrix, reference: &Matrix) -> f64 {
    let r = reference.frobenius_norm();
    if r > 0.0 {
        diff.frobenius_norm() / r
    } else {
        diff.frobenius_norm()
    }
}
