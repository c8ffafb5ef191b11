//! The discrete Hilbert transform (Gξ)_n = Σ_{k≠n} ξ_k/(k−n), its shifted
//! perturbation G_τ, weighted ℓ²(W) norm machinery, the averaged-product A₂
//! scan, and the dyadic weight construction with its summability checks.
//!
//! Everything infinite is handled as a finite section with an explicit
//! truncation size; plateau and doubling diagnostics say how trustworthy the
//! section is.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{operator_norm, Mat, NormEstimate};

/// Shift magnitude under which pole collisions are impossible.
pub const SHIFT_SAFE_BOUND: f64 = 1.0 / 16.0;

/// A positive weight sequence W(k), with the inverse w(k) cached and block
/// structure recorded when the weight was built dyadically.
#[derive(Clone, Debug)]
pub struct WeightSequence {
    values: Vec<f64>,
    inv: Vec<f64>,
    pub blocks: Option<DyadicBlocks>,
}

/// Breakpoints T_0 = 0 < T_1 < … with W = 2^k on [T_k, T_{k+1}) and gaps
/// t_k = T_k − T_{k−1} growing at ratio ≥ R.
#[derive(Clone, Debug, Serialize)]
pub struct DyadicBlocks {
    pub breakpoints: Vec<usize>,
    pub gaps: Vec<usize>,
    /// ψ-thresholds 2^k that opened breakpoints[1..].
    pub thresholds: Vec<f64>,
    pub ratio: f64,
    /// Set when ψ stopped reaching thresholds before k_max; the last block
    /// extends to the end of the window.
    pub truncated: bool,
}

impl WeightSequence {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("weight sequence: empty".into()));
        }
        if values.iter().any(|&v| !v.is_finite() || v <= 0.0) {
            return Err(Error::Config(
                "weight sequence: all W(k) must be positive and finite".into(),
            ));
        }
        let inv = values.iter().map(|&v| 1.0 / v).collect();
        Ok(Self {
            values,
            inv,
            blocks: None,
        })
    }

    pub fn constant(k_max: usize) -> Self {
        Self::from_values(vec![1.0; k_max]).unwrap()
    }

    /// W(k) = (k+1)^alpha.
    pub fn power(alpha: f64, k_max: usize) -> Self {
        Self::from_values((0..k_max).map(|k| ((k + 1) as f64).powf(alpha)).collect()).unwrap()
    }

    /// W(k) = 2^k (violates the A₂ condition; useful as a negative control).
    pub fn geometric(k_max: usize) -> Self {
        Self::from_values((0..k_max).map(|k| 2.0f64.powi(k as i32)).collect()).unwrap()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    #[inline]
    pub fn inv(&self, k: usize) -> f64 {
        self.inv[k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Pole shifts τ_k for the perturbed transform.
#[derive(Clone, Debug)]
pub struct ShiftSequence {
    pub values: Vec<Complex64>,
    pub sup_bound: f64,
}

impl ShiftSequence {
    pub fn new(values: Vec<Complex64>) -> Self {
        let sup = values.iter().map(|t| t.norm()).fold(0.0, f64::max);
        Self {
            values,
            sup_bound: sup,
        }
    }

    pub fn constant(tau: Complex64, len: usize) -> Self {
        Self::new(vec![tau; len])
    }

    pub fn zero(len: usize) -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0); len])
    }

    #[inline]
    pub fn get(&self, k: usize) -> Complex64 {
        self.values
            .get(k)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }
}

/// (Gξ)_n = Σ_{k≠n} ξ_k/(k−n) for finitely supported ξ, n < out_len.
pub fn apply_g(xi: &[Complex64], out_len: usize) -> Vec<Complex64> {
    (0..out_len)
        .map(|n| {
            let mut s = Complex64::new(0.0, 0.0);
            for (k, &x) in xi.iter().enumerate() {
                if k != n && (x.re != 0.0 || x.im != 0.0) {
                    s += x / Complex64::new(k as f64 - n as f64, 0.0);
                }
            }
            s
        })
        .collect()
}

/// (G_τ ξ)_n = Σ_{k≠n} ξ_k/(k+τ_k−n). Errors on an exact pole collision,
/// which can only happen when some |τ_k| exceeds the safe bound.
pub fn apply_g_tau(xi: &[Complex64], tau: &ShiftSequence, out_len: usize) -> Vec<Complex64> {
    try_apply_g_tau(xi, tau, out_len).expect("pole collision; validate shifts first")
}

pub fn try_apply_g_tau(
    xi: &[Complex64],
    tau: &ShiftSequence,
    out_len: usize,
) -> Result<Vec<Complex64>> {
    let mut out = vec![Complex64::new(0.0, 0.0); out_len];
    for (n, o) in out.iter_mut().enumerate() {
        let mut s = Complex64::new(0.0, 0.0);
        for (k, &x) in xi.iter().enumerate() {
            if k == n {
                continue;
            }
            let d = Complex64::new(k as f64 - n as f64, 0.0) + tau.get(k);
            if d.norm() == 0.0 {
                return Err(Error::Domain(format!(
                    "apply_g_tau: exact pole at k={k}, n={n} (τ_k = {})",
                    tau.get(k)
                )));
            }
            s += x / d;
        }
        *o = s;
    }
    Ok(out)
}

/// Averaged-product condition scan:
/// M = max over 0 ≤ k, k+n < scan of σ⁺(k,n)·σ⁻(k,n) with
/// σ±(k,n) the window averages of W and w. Monotone non-decreasing in scan.
pub fn a2_condition(w: &WeightSequence, scan: usize) -> Result<f64> {
    if scan == 0 || scan > w.len() {
        return Err(Error::Config(format!(
            "a2_condition: scan {scan} outside window 1..={}",
            w.len()
        )));
    }
    // prefix sums; σ products are O(1) per window
    let mut pw = vec![0.0f64; scan + 1];
    let mut pv = vec![0.0f64; scan + 1];
    for i in 0..scan {
        pw[i + 1] = pw[i] + w.value(i);
        pv[i + 1] = pv[i] + w.inv(i);
    }
    let m = (0..scan)
        .into_par_iter()
        .map(|k| {
            let mut best = 0.0f64;
            for end in k + 1..=scan {
                let len = (end - k) as f64;
                let sp = (pw[end] - pw[k]) / len;
                let sm = (pv[end] - pv[k]) / len;
                let prod = sp * sm;
                if prod > best {
                    best = prod;
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(m)
}

/// Dyadic weight from a threshold sequence ψ: block k starts at the first
/// admissible index where ψ reaches 2^k, with gaps forced to grow by the
/// ratio R > 2. Yields W ≤ ψ entrywise for nondecreasing ψ.
pub fn construct_weight(psi: &[f64], ratio: f64, k_max: usize) -> Result<WeightSequence> {
    if ratio <= 2.0 {
        return Err(Error::Config(format!(
            "construct_weight: need R > 2, got {ratio}"
        )));
    }
    if k_max == 0 || psi.len() < k_max {
        return Err(Error::Config(format!(
            "construct_weight: need ψ defined on 0..{k_max}"
        )));
    }
    let mut breakpoints = vec![0usize];
    let mut gaps: Vec<usize> = Vec::new();
    let mut thresholds: Vec<f64> = Vec::new();
    let mut truncated = false;

    // first breakpoint: smallest t ≥ 1 with ψ(t) ≥ 2
    let mut level = 1u32;
    match (1..k_max).find(|&t| psi[t] >= 2.0) {
        Some(t1) => {
            breakpoints.push(t1);
            gaps.push(t1);
            thresholds.push(2.0);
        }
        None => truncated = true,
    }
    while !truncated {
        let t_prev = *gaps.last().unwrap();
        let t_min = (ratio * t_prev as f64).ceil() as usize;
        let start = breakpoints.last().unwrap() + t_min;
        let threshold = 2.0f64.powi(level as i32 + 1);
        match (start..k_max).find(|&t| psi[t] >= threshold) {
            Some(t_next) => {
                gaps.push(t_next - breakpoints.last().unwrap());
                breakpoints.push(t_next);
                thresholds.push(threshold);
                level += 1;
            }
            None => truncated = true,
        }
    }

    let mut values = vec![0.0f64; k_max];
    for j in 0..k_max {
        let block = breakpoints.partition_point(|&t| t <= j) - 1;
        values[j] = 2.0f64.powi(block as i32);
    }
    for (j, &v) in values.iter().enumerate() {
        if v > psi[j] {
            return Err(Error::Domain(format!(
                "construct_weight: W({j}) = {v} exceeds ψ({j}) = {}; \
                 the construction needs an (eventually) nondecreasing ψ",
                psi[j]
            )));
        }
    }
    let inv = values.iter().map(|&v| 1.0 / v).collect();
    Ok(WeightSequence {
        values,
        inv,
        blocks: Some(DyadicBlocks {
            breakpoints,
            gaps,
            thresholds,
            ratio,
            truncated,
        }),
    })
}

/// ψ(k) = 1 / sup{profile[j] : j ≥ k}, the natural threshold sequence of a
/// decaying ‖b h_k‖ profile.
pub fn psi_from_profile(profile: &[f64]) -> Vec<f64> {
    let mut sup_tail = vec![0.0f64; profile.len()];
    let mut running = 0.0f64;
    for (j, &v) in profile.iter().enumerate().rev() {
        running = running.max(v);
        sup_tail[j] = running;
    }
    sup_tail
        .iter()
        .map(|&s| if s > 0.0 { 1.0 / s } else { f64::INFINITY })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct RSumCheck {
    /// r(n) = sup_i W(i+n) w(i) over the available window.
    pub r: Vec<f64>,
    /// partial sums of Σ r(n)/(1+n)².
    pub partial_sums: Vec<f64>,
    /// For dyadic weights: r(n) ≤ 2 + (βn)^γ held at every computed n.
    pub envelope_ok: Option<bool>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    /// Window was shorter than requested.
    pub window_exhausted: bool,
}

/// Kernel-decay sums for the shifted-transform bound. For dyadic weights the
/// growth envelope r(n) ≤ 2 + (βn)^γ with β = R²/t₂ and γ = log 2 / log R is
/// asserted alongside.
pub fn r_sum_check(w: &WeightSequence, n_max: usize) -> RSumCheck {
    let len = w.len();
    let usable = n_max.min(len.saturating_sub(1));
    let mut r = Vec::with_capacity(usable + 1);
    for n in 0..=usable {
        let mut best = 0.0f64;
        for i in 0..len - n {
            let v = w.value(i + n) * w.inv(i);
            if v > best {
                best = v;
            }
        }
        r.push(best);
    }
    let mut partial_sums = Vec::with_capacity(r.len());
    let mut acc = 0.0;
    for (n, &rn) in r.iter().enumerate() {
        acc += rn / ((1 + n) as f64).powi(2);
        partial_sums.push(acc);
    }
    let (envelope_ok, beta, gamma) = match &w.blocks {
        Some(b) if b.gaps.len() >= 2 => {
            let beta = b.ratio * b.ratio / b.gaps[1] as f64;
            let gamma = 2.0f64.ln() / b.ratio.ln();
            let ok = r
                .iter()
                .enumerate()
                .all(|(n, &rn)| rn <= 2.0 + (beta * n as f64).powf(gamma) + 1e-12);
            (Some(ok), Some(beta), Some(gamma))
        }
        _ => (None, None, None),
    };
    RSumCheck {
        r,
        partial_sums,
        envelope_ok,
        beta,
        gamma,
        window_exhausted: usable < n_max,
    }
}

/// Which transform a norm estimate refers to.
pub enum TransformKind<'a> {
    Plain,
    Shifted(&'a ShiftSequence),
}

/// Dense finite section of the transform conjugated to the unweighted frame:
/// M[n][k] = √W(n) · 1/(k + τ_k − n) · 1/√W(k), zero diagonal.
pub fn weighted_section(kind: &TransformKind, w: &WeightSequence, truncation: usize) -> Result<Mat> {
    if truncation == 0 || truncation > w.len() {
        return Err(Error::Config(format!(
            "weighted section: truncation {truncation} outside 1..={}",
            w.len()
        )));
    }
    let sqrt_w: Vec<f64> = (0..truncation).map(|k| w.value(k).sqrt()).collect();
    let mut m = Mat::zeros(truncation, truncation);
    for n in 0..truncation {
        for k in 0..truncation {
            if k == n {
                continue;
            }
            let d = match kind {
                TransformKind::Plain => Complex64::new(k as f64 - n as f64, 0.0),
                TransformKind::Shifted(tau) => {
                    Complex64::new(k as f64 - n as f64, 0.0) + tau.get(k)
                }
            };
            if d.norm() == 0.0 {
                return Err(Error::Domain(format!(
                    "weighted section: exact pole at k={k}, n={n}"
                )));
            }
            m[(n, k)] = Complex64::new(sqrt_w[n] / sqrt_w[k], 0.0) / d;
        }
    }
    Ok(m)
}

/// Finite-section estimate of the ℓ²(W) → ℓ²(W) operator norm by power
/// iteration on the conjugated section.
pub fn weighted_norm_estimate(
    kind: &TransformKind,
    w: &WeightSequence,
    truncation: usize,
    iters: usize,
    seed: u64,
) -> Result<NormEstimate> {
    let m = weighted_section(kind, w, truncation)?;
    operator_norm(&m, iters, seed)
}

/// Apply G_τ to every coefficient column of Ξ independently.
pub fn vector_valued_apply(xi: &Mat, tau: &ShiftSequence) -> Result<Mat> {
    let n = xi.rows();
    let c = xi.cols();
    let mut out = Mat::zeros(n, c);
    for col in 0..c {
        let x: Vec<Complex64> = (0..n).map(|i| xi[(i, col)]).collect();
        let y = try_apply_g_tau(&x, tau, n)?;
        for i in 0..n {
            out[(i, col)] = y[i];
        }
    }
    Ok(out)
}

/// ℓ²(W, ·)-norm estimate of the vector-valued transform on a block of
/// coefficient columns: power iteration on the column-wise action. Equals
/// the scalar norm in exact arithmetic.
pub fn vector_valued_norm_estimate(
    w: &WeightSequence,
    tau: &ShiftSequence,
    truncation: usize,
    columns: usize,
    iters: usize,
    seed: u64,
) -> Result<NormEstimate> {
    struct ColumnwiseOp<'a> {
        m: &'a Mat,
        columns: usize,
    }
    impl crate::linalg::LinearOp for ColumnwiseOp<'_> {
        fn dim(&self) -> usize {
            self.m.rows() * self.columns
        }
        fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
            let n = self.m.rows();
            let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
            for c in 0..self.columns {
                let col: Vec<Complex64> = (0..n).map(|i| x[i * self.columns + c]).collect();
                let out = self.m.apply(&col);
                for i in 0..n {
                    y[i * self.columns + c] = out[i];
                }
            }
            y
        }
        fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
            let n = self.m.rows();
            let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
            for c in 0..self.columns {
                let col: Vec<Complex64> = (0..n).map(|i| x[i * self.columns + c]).collect();
                let out = self.m.apply_adjoint(&col);
                for i in 0..n {
                    y[i * self.columns + c] = out[i];
                }
            }
            y
        }
    }

    let kind = TransformKind::Shifted(tau);
    let m = weighted_section(&kind, w, truncation)?;
    let op = ColumnwiseOp { m: &m, columns };
    operator_norm(&op, iters, seed)
}

/// Exact largest singular value of the weighted finite section (dense SVD).
/// The reference value for the vector-valued comparison: power-iteration
/// estimates of the block transform are lower bounds of this number.
pub fn weighted_norm_exact(
    kind: &TransformKind,
    w: &WeightSequence,
    truncation: usize,
) -> Result<f64> {
    let m = weighted_section(kind, w, truncation)?;
    let sv = crate::linalg::singular_values(&m)?;
    Ok(sv.first().copied().unwrap_or(0.0))
}

/// Partial sums of s = Σ W(j)(1+j)^{-2}, which for dyadic weights stay below
/// t₁ + 2R/(R−2).
pub fn dyadic_series_partial_sums(w: &WeightSequence) -> Vec<f64> {
    let mut acc = 0.0;
    w.values()
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            acc += v / ((1 + j) as f64).powi(2);
            acc
        })
        .collect()
}
