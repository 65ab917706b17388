//! Dense linear-algebra kernels: symmetric eigendecomposition, pseudo-inverse,
//! row-space projection and a Sylvester solver for symmetric coefficients.

mod eigen;
mod matrix;
mod svd;
mod sylvester;

pub use eigen::{eigh_sym, EigenDecomposition};
pub use matrix::{dot, norm, sq_dist, Matrix};
pub use svd::{pinv, row_space_projection, svd_thin, Svd, RANK_TOLERANCE};
pub use sylvester::sylvester_spd;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix must have at least one row and one column")]
    Empty,
    #[error("matrix contains NaN or infinite entries")]
    NonFinite,
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("Sylvester pencil is singular: eigenvalue sum {sum:e} <= {threshold:e}")]
    SingularPencil { sum: f64, threshold: f64 },
}
