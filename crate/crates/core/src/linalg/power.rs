//! Operator 2-norm estimation by power iteration on AᴴA. The estimate is a
//! certified lower bound (it is ‖A v‖ for a unit v); the convergence flag
//! says whether it has also stabilized from below.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::mat::{norm2, normalize, Mat};
use crate::error::{Error, Result};

/// Square linear action with its adjoint, the contract power iteration needs.
pub trait LinearOp {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64>;
    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64>;
}

impl LinearOp for Mat {
    fn dim(&self) -> usize {
        self.rows()
    }
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        Mat::apply(self, x)
    }
    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        Mat::apply_adjoint(self, x)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct NormEstimate {
    /// Lower bound on the largest singular value.
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

pub const NORM_REL_TOL: f64 = 1e-8;

/// Largest-singular-value estimate. `iters` caps the AᴴA iterations and must
/// be at least 20.
pub fn operator_norm(op: &dyn LinearOp, iters: usize, seed: u64) -> Result<NormEstimate> {
    if iters < 20 {
        return Err(Error::Domain(format!(
            "operator_norm: need iters >= 20, got {iters}"
        )));
    }
    let n = op.dim();
    if n == 0 {
        return Ok(NormEstimate {
            value: 0.0,
            converged: true,
            iterations: 0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    normalize(&mut v);
    let mut sigma = 0.0f64;
    let mut converged = false;
    let mut used = 0;
    for it in 0..iters {
        used = it + 1;
        let w = op.apply(&v);
        let s = norm2(&w);
        if s == 0.0 {
            return Ok(NormEstimate {
                value: 0.0,
                converged: true,
                iterations: used,
            });
        }
        let mut u = op.apply_adjoint(&w);
        let un = normalize(&mut u);
        if un == 0.0 {
            sigma = s;
            converged = true;
            break;
        }
        let rel = (s - sigma).abs() / s.max(f64::MIN_POSITIVE);
        sigma = s;
        v = u;
        if it > 0 && rel < NORM_REL_TOL {
            converged = true;
            break;
        }
    }
    Ok(NormEstimate {
        value: sigma,
        converged,
        iterations: used,
    })
}

/// Convenience wrapper for matrices.
pub fn matrix_norm(a: &Mat, seed: u64) -> f64 {
    operator_norm(a, 200, seed).map(|e| e.value).unwrap_or(0.0)
}
