//! LU factorization with partial pivoting, plus the Hessenberg variant used
//! by the contour-integration resolvent solves.

use num_complex::Complex64;

use super::mat::{norm2, Mat};
use crate::error::{Error, Result};

/// P·A = L·U with partial pivoting. L is unit lower triangular, stored below
/// the diagonal of `lu`; U on and above.
pub struct LuFactorization {
    n: usize,
    lu: Mat,
    /// pivots[k] = row swapped with k at elimination step k.
    pivots: Vec<usize>,
    a_norm: f64,
    rcond: f64,
}

impl LuFactorization {
    pub fn new(a: &Mat) -> Result<Self> {
        Self::with_context(a, "lu")
    }

    pub fn with_context(a: &Mat, context: &str) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Config(format!(
                "{context}: LU needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let a_norm = a.frobenius_norm();
        let mut lu = a.clone();
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            // partial pivot
            let mut p = k;
            let mut best = lu[(k, k)].norm_sqr();
            for i in k + 1..n {
                let v = lu[(i, k)].norm_sqr();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            pivots[k] = p;
            lu.swap_rows(k, p);
            let piv = lu[(k, k)];
            if piv.norm() == 0.0 {
                return Err(Error::Pole {
                    context: format!("{context}: exactly singular at column {k}"),
                    rcond: 0.0,
                });
            }
            let inv = Complex64::new(1.0, 0.0) / piv;
            for i in k + 1..n {
                let m = lu[(i, k)] * inv;
                lu[(i, k)] = m;
                if m.re == 0.0 && m.im == 0.0 {
                    continue;
                }
                let (row_k, row_i) = lu.row_pair_mut(k, i);
                for (ri, &rk) in row_i[k + 1..].iter_mut().zip(row_k[k + 1..].iter()) {
                    *ri -= m * rk;
                }
            }
        }
        let mut f = Self {
            n,
            lu,
            pivots,
            a_norm,
            rcond: 0.0,
        };
        f.rcond = f.estimate_rcond();
        Ok(f)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Reciprocal condition estimate σ_min / ‖A‖_F (power iteration on A⁻¹A⁻ᴴ).
    pub fn rcond(&self) -> f64 {
        self.rcond
    }

    fn estimate_rcond(&self) -> f64 {
        if self.a_norm == 0.0 {
            return 0.0;
        }
        // Inverse power iteration: ‖A⁻¹‖₂² is the top eigenvalue of A⁻ᴴA⁻¹.
        let mut v: Vec<Complex64> = (0..self.n)
            .map(|i| {
                // deterministic pseudo-random start, no RNG dependency needed
                let t = (i as f64 * 0.7368062997) % 1.0;
                Complex64::new(1.0 + t, 0.5 - t)
            })
            .collect();
        let mut inv_norm = 0.0f64;
        for _ in 0..6 {
            let nv = norm2(&v);
            if nv == 0.0 {
                return 0.0;
            }
            for z in v.iter_mut() {
                *z /= nv;
            }
            let w = self.solve_vec(&v);
            let u = self.solve_adjoint_vec(&w);
            inv_norm = norm2(&w);
            v = u;
        }
        if inv_norm == 0.0 {
            0.0
        } else {
            1.0 / (inv_norm * self.a_norm)
        }
    }

    /// Solve A x = b.
    pub fn solve_vec(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut x = b.to_vec();
        self.solve_in_place_vec(&mut x);
        x
    }

    pub fn solve_in_place_vec(&self, x: &mut [Complex64]) {
        let n = self.n;
        // rows were swapped in full during factorization, so all swaps apply
        // to the right-hand side before the triangular solves
        for k in 0..n {
            x.swap(k, self.pivots[k]);
        }
        for k in 0..n {
            let xk = x[k];
            if xk.re == 0.0 && xk.im == 0.0 {
                continue;
            }
            for i in k + 1..n {
                x[i] -= self.lu[(i, k)] * xk;
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
    }

    /// Solve A X = B for a block of right-hand sides (columns of `b`).
    /// Works on whole rows of X so the inner loops stream contiguously.
    pub fn solve_mat(&self, b: &Mat) -> Mat {
        assert_eq!(b.rows(), self.n);
        let mut x = b.clone();
        self.solve_in_place_mat(&mut x);
        x
    }

    pub fn solve_in_place_mat(&self, x: &mut Mat) {
        let n = self.n;
        for k in 0..n {
            x.swap_rows(k, self.pivots[k]);
        }
        for k in 0..n {
            for i in k + 1..n {
                let m = self.lu[(i, k)];
                if m.re == 0.0 && m.im == 0.0 {
                    continue;
                }
                let (row_k, row_i) = x.row_pair_mut(k, i);
                for (xi, &xk) in row_i.iter_mut().zip(row_k.iter()) {
                    *xi -= m * xk;
                }
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[(i, j)];
                if u.re == 0.0 && u.im == 0.0 {
                    continue;
                }
                let (row_i, row_j) = x.row_pair_mut(i, j);
                for (xi, &xj) in row_i.iter_mut().zip(row_j.iter()) {
                    *xi -= u * xj;
                }
            }
            let d = Complex64::new(1.0, 0.0) / self.lu[(i, i)];
            for xi in x.row_mut(i).iter_mut() {
                *xi *= d;
            }
        }
    }

    /// Solve Aᴴ y = b. With P·A = L·U this is Uᴴ w = b, Lᴴ u = w, y = Pᵀ u.
    pub fn solve_adjoint_vec(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut y = b.to_vec();
        // Uᴴ is lower triangular
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s -= self.lu[(j, i)].conj() * y[j];
            }
            y[i] = s / self.lu[(i, i)].conj();
        }
        // Lᴴ is unit upper triangular
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= self.lu[(j, i)].conj() * y[j];
            }
            y[i] = s;
        }
        // undo pivoting: y := Pᵀ y (apply recorded swaps in reverse)
        for k in (0..n).rev() {
            y.swap(k, self.pivots[k]);
        }
        y
    }

    /// L·U with the row permutation applied to A, for the reconstruction test.
    pub fn reconstruct_pa(&self) -> Mat {
        let n = self.n;
        let mut l = Mat::identity(n);
        let mut u = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if j < i {
                    l[(i, j)] = self.lu[(i, j)];
                } else {
                    u[(i, j)] = self.lu[(i, j)];
                }
            }
        }
        l.matmul(&u)
    }

    /// The permutation applied to the rows of A by this factorization.
    pub fn permute_rows(&self, a: &Mat) -> Mat {
        let mut pa = a.clone();
        for k in 0..self.n {
            pa.swap_rows(k, self.pivots[k]);
        }
        pa
    }
}

/// LU of an upper-Hessenberg matrix (one subdiagonal). Elimination is O(n²)
/// and each extra right-hand side costs one back-substitution.
pub struct HessLu {
    n: usize,
    u: Mat,
    /// multiplier and swap flag per elimination step
    m: Vec<Complex64>,
    swapped: Vec<bool>,
}

impl HessLu {
    /// Factor (z·I − H) for upper-Hessenberg H.
    pub fn shifted(h: &Mat, z: Complex64) -> Result<Self> {
        let n = h.rows();
        let mut u = Mat::from_fn(n, n, |i, j| {
            let a = if i == j { z } else { Complex64::new(0.0, 0.0) };
            a - h[(i, j)]
        });
        let mut m = vec![Complex64::new(0.0, 0.0); n.saturating_sub(1)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for k in 0..n.saturating_sub(1) {
            if u[(k + 1, k)].norm() > u[(k, k)].norm() {
                u.swap_rows(k, k + 1);
                swapped[k] = true;
            }
            let piv = u[(k, k)];
            if piv.norm() == 0.0 {
                return Err(Error::Pole {
                    context: format!("hessenberg solve at z={z}"),
                    rcond: 0.0,
                });
            }
            let mult = u[(k + 1, k)] / piv;
            m[k] = mult;
            u[(k + 1, k)] = Complex64::new(0.0, 0.0);
            if mult.re != 0.0 || mult.im != 0.0 {
                let (row_k, row_k1) = u.row_pair_mut(k, k + 1);
                for (b, &a) in row_k1[k + 1..].iter_mut().zip(row_k[k + 1..].iter()) {
                    *b -= mult * a;
                }
            }
        }
        if u[(n - 1, n - 1)].norm() == 0.0 {
            return Err(Error::Pole {
                context: format!("hessenberg solve at z={z}"),
                rcond: 0.0,
            });
        }
        Ok(Self { n, u, m, swapped })
    }

    pub fn solve_in_place_mat(&self, x: &mut Mat) {
        let n = self.n;
        for k in 0..n.saturating_sub(1) {
            if self.swapped[k] {
                x.swap_rows(k, k + 1);
            }
            let m = self.m[k];
            if m.re == 0.0 && m.im == 0.0 {
                continue;
            }
            let (row_k, row_k1) = x.row_pair_mut(k, k + 1);
            for (b, &a) in row_k1.iter_mut().zip(row_k.iter()) {
                *b -= m * a;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.u[(i, j)];
                if u.re == 0.0 && u.im == 0.0 {
                    continue;
                }
                let (row_i, row_j) = x.row_pair_mut(i, j);
                for (xi, &xj) in row_i.iter_mut().zip(row_j.iter()) {
                    *xi -= u * xj;
                }
            }
            let d = Complex64::new(1.0, 0.0) / self.u[(i, i)];
            for xi in x.row_mut(i).iter_mut() {
                *xi *= d;
            }
        }
    }

    pub fn solve_in_place_vec(&self, x: &mut [Complex64]) {
        let n = self.n;
        for k in 0..n.saturating_sub(1) {
            if self.swapped[k] {
                x.swap(k, k + 1);
            }
            x[k + 1] -= self.m[k] * x[k];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.u[(i, j)] * x[j];
            }
            x[i] = s / self.u[(i, i)];
        }
    }
}
