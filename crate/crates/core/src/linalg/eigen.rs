//! Dense complex non-symmetric eigensolver: balancing, Householder reduction
//! to upper-Hessenberg form, explicit single-shift QR with Wilkinson shifts
//! and deflation, and inverse-iteration eigenvectors.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::lu::HessLu;
use super::mat::{norm2, normalize, Mat};
use crate::error::{Error, Result};

/// Subdiagonal entries below this multiple of the neighboring diagonal
/// magnitudes are deflated to zero.
pub const DEFLATION_TOL: f64 = 1e-14;
/// Hard cap on QR sweeps, as a multiple of the matrix dimension.
pub const MAX_SWEEPS_PER_DIM: usize = 40;
/// Shift offset used by inverse iteration to avoid an exactly singular solve.
const INVERSE_ITERATION_OFFSET: f64 = 1e-13;

#[derive(Clone, Copy, Debug)]
pub struct EigenOptions {
    pub balance: bool,
    pub compute_vectors: bool,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            balance: true,
            compute_vectors: true,
            seed: 0x5eed,
        }
    }
}

pub struct EigenDecomposition {
    /// Sorted by (re, im).
    pub eigenvalues: Vec<Complex64>,
    /// Unit right eigenvectors, column i pairs with eigenvalues[i].
    /// Empty (0x0) when vectors were not requested.
    pub right_eigenvectors: Mat,
    /// ‖A v_i − λ_i v_i‖₂ per pair; empty when vectors were not requested.
    pub residuals: Vec<f64>,
    /// Total QR sweeps used.
    pub iterations_used: usize,
    pub balanced: bool,
}

pub fn eigen(a: &Mat) -> Result<EigenDecomposition> {
    eigen_with(a, &EigenOptions::default())
}

/// Eigenvalues only; skips the eigenvector stage.
pub fn eigenvalues(a: &Mat) -> Result<Vec<Complex64>> {
    let d = eigen_with(
        a,
        &EigenOptions {
            compute_vectors: false,
            ..Default::default()
        },
    )?;
    Ok(d.eigenvalues)
}

pub fn eigen_with(a: &Mat, opts: &EigenOptions) -> Result<EigenDecomposition> {
    if !a.is_square() {
        return Err(Error::Config(format!(
            "eigen needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.all_finite() {
        return Err(Error::Domain("eigen: matrix has non-finite entries".into()));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(EigenDecomposition {
            eigenvalues: vec![],
            right_eigenvectors: Mat::zeros(0, 0),
            residuals: vec![],
            iterations_used: 0,
            balanced: opts.balance,
        });
    }

    let mut ab = a.clone();
    let scales = if opts.balance {
        balance(&mut ab)
    } else {
        vec![1.0; n]
    };

    let (h, q) = hessenberg(&ab);
    let mut hw = h.clone();
    let (mut vals, sweeps) = qr_eigenvalues(&mut hw)?;
    vals.sort_by(|x, y| {
        x.re.partial_cmp(&y.re)
            .unwrap()
            .then(x.im.partial_cmp(&y.im).unwrap())
    });

    if !opts.compute_vectors {
        return Ok(EigenDecomposition {
            eigenvalues: vals,
            right_eigenvectors: Mat::zeros(0, 0),
            residuals: vec![],
            iterations_used: sweeps,
            balanced: opts.balance,
        });
    }

    let mut vectors = Mat::zeros(n, n);
    let mut residuals = vec![0.0; n];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for (idx, &lambda) in vals.iter().enumerate() {
        let vh = inverse_iteration(&h, lambda, &mut rng)?;
        // back-transform: v = D · (Q v_H)
        let mut v = q.apply(&vh);
        for (vi, &s) in v.iter_mut().zip(scales.iter()) {
            *vi *= s;
        }
        normalize(&mut v);
        let av = a.apply(&v);
        let r: Vec<Complex64> = av
            .iter()
            .zip(v.iter())
            .map(|(&avi, &vi)| avi - lambda * vi)
            .collect();
        residuals[idx] = norm2(&r);
        vectors.set_col(idx, &v);
    }

    Ok(EigenDecomposition {
        eigenvalues: vals,
        right_eigenvectors: vectors,
        residuals,
        iterations_used: sweeps,
        balanced: opts.balance,
    })
}

/// Parlett–Reinsch balancing: diagonal similarity with radix-2 powers until
/// row and column norms are within a factor ~2. Returns the scale vector d
/// with Ã = D⁻¹ A D.
pub fn balance(a: &mut Mat) -> Vec<f64> {
    let n = a.rows();
    let mut d = vec![1.0f64; n];
    let radix = 2.0f64;
    let mut converged = false;
    let mut rounds = 0;
    while !converged && rounds < 100 {
        converged = true;
        rounds += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].norm();
                    r += a[(i, j)].norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut f = 1.0;
            let s = c + r;
            let mut cc = c;
            let mut rr = r;
            while cc < rr / radix {
                cc *= radix;
                rr /= radix;
                f *= radix;
            }
            while cc >= rr * radix {
                cc /= radix;
                rr *= radix;
                f /= radix;
            }
            if (cc + rr) < 0.95 * s && f != 1.0 {
                converged = false;
                d[i] *= f;
                let inv = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= inv;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
    d
}

/// Householder reduction A = Q H Qᴴ with H upper Hessenberg, Q unitary.
pub fn hessenberg(a: &Mat) -> (Mat, Mat) {
    let n = a.rows();
    let mut h = a.clone();
    let mut q = Mat::identity(n);
    if n < 3 {
        return (h, q);
    }
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n - 2 {
        // reflector annihilating h[k+2.., k]
        let m = n - k - 1;
        let slice = &mut v[..m];
        for (t, i) in (k + 1..n).enumerate() {
            slice[t] = h[(i, k)];
        }
        let normx = norm2(slice);
        if normx == 0.0 {
            continue;
        }
        let alpha = slice[0];
        let phase = if alpha.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            alpha / alpha.norm()
        };
        let beta = -phase * normx;
        slice[0] = alpha - beta;
        let vhv: f64 = slice.iter().map(|z| z.norm_sqr()).sum();
        if vhv == 0.0 {
            continue;
        }
        let tau = 2.0 / vhv;
        // left: H[k+1.., k..] -= tau v (vᴴ H)
        for j in k..n {
            let mut s = Complex64::new(0.0, 0.0);
            for (t, i) in (k + 1..n).enumerate() {
                s += slice[t].conj() * h[(i, j)];
            }
            s *= tau;
            for (t, i) in (k + 1..n).enumerate() {
                let upd = slice[t] * s;
                h[(i, j)] -= upd;
            }
        }
        // right: H[.., k+1..] -= tau (H v) vᴴ
        for i in 0..n {
            let mut s = Complex64::new(0.0, 0.0);
            for (t, j) in (k + 1..n).enumerate() {
                s += h[(i, j)] * slice[t];
            }
            s *= tau;
            for (t, j) in (k + 1..n).enumerate() {
                let upd = s * slice[t].conj();
                h[(i, j)] -= upd;
            }
        }
        // accumulate Q := Q · (I − tau v vᴴ)
        for i in 0..n {
            let mut s = Complex64::new(0.0, 0.0);
            for (t, j) in (k + 1..n).enumerate() {
                s += q[(i, j)] * slice[t];
            }
            s *= tau;
            for (t, j) in (k + 1..n).enumerate() {
                let upd = s * slice[t].conj();
                q[(i, j)] -= upd;
            }
        }
        // clean the annihilated column
        h[(k + 1, k)] = beta;
        for i in k + 2..n {
            h[(i, k)] = Complex64::new(0.0, 0.0);
        }
    }
    (h, q)
}

/// Complex Givens rotation: returns (c, s) with c real ≥ 0 such that
/// c·a + s·b = r and −s̄·a + c·b = 0.
#[inline]
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    let an = a.norm();
    if an == 0.0 {
        return (0.0, b.conj() / bn);
    }
    let r = an.hypot(bn);
    let c = an / r;
    let s = (a / an) * b.conj() / r;
    (c, s)
}

/// Eigenvalues of an upper-Hessenberg matrix by explicit single-shift QR with
/// Wilkinson shifts. `h` is destroyed. Returns (eigenvalues, sweeps).
pub fn qr_eigenvalues(h: &mut Mat) -> Result<(Vec<Complex64>, usize)> {
    let n = h.rows();
    let mut vals = vec![Complex64::new(0.0, 0.0); n];
    if n == 0 {
        return Ok((vals, 0));
    }
    if n == 1 {
        vals[0] = h[(0, 0)];
        return Ok((vals, 0));
    }
    let max_sweeps = MAX_SWEEPS_PER_DIM * n;
    let mut sweeps = 0usize;
    let mut hi = n - 1;
    let mut stall = 0usize;
    loop {
        // deflate converged subdiagonals from the bottom
        loop {
            if hi == 0 {
                vals[0] = h[(0, 0)];
                return Ok((vals, sweeps));
            }
            let sub = h[(hi, hi - 1)].norm();
            let scale = h[(hi - 1, hi - 1)].norm() + h[(hi, hi)].norm();
            if sub <= DEFLATION_TOL * scale {
                h[(hi, hi - 1)] = Complex64::new(0.0, 0.0);
                vals[hi] = h[(hi, hi)];
                hi -= 1;
                stall = 0;
            } else {
                break;
            }
        }
        // active block [lo, hi]
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let scale = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if sub <= DEFLATION_TOL * scale {
                h[(lo, lo - 1)] = Complex64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if sweeps >= max_sweeps {
            return Err(Error::Convergence {
                context: "qr_eigenvalues".into(),
                detail: format!("block [{lo},{hi}] failed to deflate within {max_sweeps} sweeps"),
            });
        }
        sweeps += 1;
        stall += 1;

        let shift = if stall.is_multiple_of(12) {
            // exceptional shift to break symmetry-induced stalls
            h[(hi, hi)] + Complex64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };

        // implicit single-shift bulge chase on [lo, hi]
        let mut x = h[(lo, lo)] - shift;
        let mut y = h[(lo + 1, lo)];
        for k in lo..hi {
            let (c, s) = givens(x, y);
            let sc = s.conj();
            let jstart = if k > lo { k - 1 } else { lo };
            // rows k, k+1
            for j in jstart..=hi {
                let a = h[(k, j)];
                let b = h[(k + 1, j)];
                h[(k, j)] = c * a + s * b;
                h[(k + 1, j)] = -sc * a + c * b;
            }
            // cols k, k+1
            let iend = (k + 2).min(hi);
            for i in lo..=iend {
                let a = h[(i, k)];
                let b = h[(i, k + 1)];
                h[(i, k)] = c * a + sc * b;
                h[(i, k + 1)] = -s * a + c * b;
            }
            if k + 1 < hi {
                x = h[(k + 1, k)];
                y = h[(k + 2, k)];
            }
        }
    }
}

/// Eigenvalue of [[a,b],[c,d]] nearest to d.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let tr2 = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = (tr2 * tr2 - det).sqrt();
    let m1 = tr2 + disc;
    let m2 = tr2 - disc;
    if (m1 - d).norm() <= (m2 - d).norm() {
        m1
    } else {
        m2
    }
}

/// Inverse iteration on the Hessenberg form, shifted slightly off the
/// converged eigenvalue.
fn inverse_iteration(h: &Mat, lambda: Complex64, rng: &mut ChaCha8Rng) -> Result<Vec<Complex64>> {
    let n = h.rows();
    let offset = INVERSE_ITERATION_OFFSET * (1.0 + lambda.norm());
    let shifted = lambda + Complex64::new(offset, offset);
    let f = HessLu::shifted(h, shifted)?;
    let mut v: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    normalize(&mut v);
    let mut best = v.clone();
    let mut best_res = f64::INFINITY;
    for _ in 0..4 {
        f.solve_in_place_vec(&mut v);
        let growth = normalize(&mut v);
        if growth == 0.0 {
            break;
        }
        // Hessenberg residual is cheap: ‖H v − λ v‖
        let hv = h.apply(&v);
        let res = norm2(
            &hv.iter()
                .zip(v.iter())
                .map(|(&a, &b)| a - lambda * b)
                .collect::<Vec<_>>(),
        );
        if res < best_res {
            best_res = res;
            best.copy_from_slice(&v);
        }
        if res <= 1e-13 * (1.0 + lambda.norm()) {
            break;
        }
    }
    Ok(best)
}

/// Sort key helper for eigenvalue comparisons in tests and callers.
pub fn sort_complex(vals: &mut [Complex64]) {
    vals.sort_by(|x, y| {
        x.re.partial_cmp(&y.re)
            .unwrap()
            .then(x.im.partial_cmp(&y.im).unwrap())
    });
}

/// Singular values (descending) as square roots of the spectrum of AᴴA.
pub fn singular_values(a: &Mat) -> Result<Vec<f64>> {
    let g = a.adjoint().matmul(a);
    let vals = eigenvalues(&g)?;
    let mut sv: Vec<f64> = vals.iter().map(|z| z.re.max(0.0).sqrt()).collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    Ok(sv)
}
