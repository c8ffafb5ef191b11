//! In-repo dense complex linear algebra: matrices, LU with partial pivoting,
//! a Hessenberg + shifted-QR eigensolver, and power-iteration norm estimates.

mod eigen;
mod lu;
mod mat;
mod power;

pub use eigen::{
    balance, eigen, eigen_with, eigenvalues, hessenberg, qr_eigenvalues, singular_values,
    sort_complex, EigenDecomposition, EigenOptions, DEFLATION_TOL, MAX_SWEEPS_PER_DIM,
};
pub use lu::{HessLu, LuFactorization};
pub use mat::{dot, norm2, normalize, Mat};
pub use power::{matrix_norm, operator_norm, LinearOp, NormEstimate, NORM_REL_TOL};
