//! Orthonormal Hermite functions and the quadrature rules used to assemble
//! inner products against them.
//!
//! The functions are evaluated with the Gaussian factor folded in,
//!
//!   h_0(x) = π^{-1/4} e^{-x²/2},
//!   h_{k+1}(x) = √(2/(k+1)) x h_k(x) − √(k/(k+1)) h_{k-1}(x),
//!
//! which keeps every intermediate bounded by sup|h_0| < 1 — no overflow for
//! any practical degree. Gauss–Hermite weights are stored pre-multiplied by
//! e^{x_i²}, so an integral ∫ b h_j h_k dx is evaluated literally as
//! Σ_i w_i b(x_i) h_j(x_i) h_k(x_i).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::Potential;

/// Empirical sup-norm calibration: sup_x |h_n(x)| (1+n)^{1/12} over n ≤ 200
/// on a dense grid is 0.75113 (attained at n = 0, where sup h_0 = π^{-1/4});
/// the products decrease in n.
pub const HERMITE_SUP_CONSTANT: f64 = 0.7512;

/// Calibrated constant for the oscillatory-region envelope
/// |h_n(x)| ≤ C (N^{1/3} + |x² − N|)^{-1/4}, N = 2n+1, x² ≤ 2N.
/// Empirical maximum over n ≤ 200 is 0.8933.
pub const ENVELOPE_OSC_CONSTANT: f64 = 0.90;

/// Calibrated tail rate: |h_n(x)| ≤ e^{-γ x²} for x² ≥ 2N holds on the
/// sampled range with γ = 0.136 (n ≤ 200); the WKB limit is ≈ 0.1332.
pub const ENVELOPE_TAIL_GAMMA: f64 = 0.13;

/// Default relative tolerance for the doubled-grid convergence check.
pub const QUAD_RTOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridKind {
    GaussHermiteModified,
    CompositeLegendre,
}

#[derive(Clone, Debug)]
enum GridParams {
    GaussHermite {
        q: usize,
    },
    Composite {
        x_max: f64,
        panels: usize,
        order: usize,
        breaks: Vec<f64>,
    },
}

/// Quadrature rule on the real line. `weights` are the modified weights: the
/// rule approximates ∫ f(x) dx as Σ w_i f(x_i) for integrands carrying the
/// Gaussian decay of Hermite-function products.
#[derive(Clone, Debug)]
pub struct HermiteGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub kind: GridKind,
    /// Highest polynomial degree integrated exactly against e^{-x²}
    /// (Gauss–Hermite), or per-panel polynomial exactness (composite).
    pub max_degree_exact: usize,
    params: GridParams,
}

impl HermiteGrid {
    /// Golub–Welsch Gauss–Hermite rule with `q` nodes; weights modified by
    /// e^{x_i²} via the Christoffel identity w_i e^{x_i²} = 1 / Σ_k h_k(x_i)².
    pub fn gauss_hermite_modified(q: usize) -> Result<Self> {
        if q < 1 {
            return Err(Error::Config("gauss-hermite-modified: need q >= 1".into()));
        }
        let nodes = gauss_hermite_nodes(q);
        let weights: Vec<f64> = nodes
            .par_iter()
            .map(|&x| {
                let h = eval_hermite_unchecked(x, q - 1);
                1.0 / h.iter().map(|v| v * v).sum::<f64>()
            })
            .collect();
        Ok(Self {
            nodes,
            weights,
            kind: GridKind::GaussHermiteModified,
            max_degree_exact: 2 * q - 1,
            params: GridParams::GaussHermite { q },
        })
    }

    /// Composite Gauss–Legendre rule covering [−X, X] with `panels` uniform
    /// panels of the given order.
    pub fn composite_legendre(x_max: f64, panels: usize, order: usize) -> Result<Self> {
        Self::composite_legendre_with_breaks(x_max, panels, order, &[])
    }

    /// Composite rule whose panel edges additionally pass through the given
    /// breakpoints (so piecewise integrands stay smooth per panel).
    pub fn composite_legendre_with_breaks(
        x_max: f64,
        panels: usize,
        order: usize,
        breaks: &[f64],
    ) -> Result<Self> {
        if x_max <= 0.0 {
            return Err(Error::Config("composite-legendre: need X > 0".into()));
        }
        if panels < 1 || order < 2 {
            return Err(Error::Config(
                "composite-legendre: need panels >= 1 and order >= 2".into(),
            ));
        }
        let mut edges: Vec<f64> = (0..=panels)
            .map(|i| -x_max + 2.0 * x_max * i as f64 / panels as f64)
            .collect();
        for &b in breaks {
            if b > -x_max && b < x_max {
                edges.push(b);
            }
        }
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        edges.dedup_by(|a, b| (*a - *b).abs() < 1e-14 * x_max);
        let (xg, wg) = gauss_legendre(order);
        let mut nodes = Vec::with_capacity(order * (edges.len() - 1));
        let mut weights = Vec::with_capacity(order * (edges.len() - 1));
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (x, wt) in xg.iter().zip(wg.iter()) {
                nodes.push(mid + half * x);
                weights.push(half * wt);
            }
        }
        Ok(Self {
            nodes,
            weights,
            kind: GridKind::CompositeLegendre,
            max_degree_exact: 2 * order - 1,
            params: GridParams::Composite {
                x_max,
                panels,
                order,
                breaks: breaks.to_vec(),
            },
        })
    }

    /// Same rule family at doubled resolution (2Q nodes, or split panels).
    pub fn refine(&self) -> Result<Self> {
        match &self.params {
            GridParams::GaussHermite { q } => Self::gauss_hermite_modified(q * 2),
            GridParams::Composite {
                x_max,
                panels,
                order,
                breaks,
            } => Self::composite_legendre_with_breaks(*x_max, panels * 2, *order, breaks),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Σ w_i f(x_i). The integrand must carry its own Gaussian decay.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(self.weights.iter())
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn descriptor(&self) -> GridDescriptor {
        match &self.params {
            GridParams::GaussHermite { q } => GridDescriptor {
                kind: self.kind,
                nodes: *q,
                x_max: None,
                order: None,
            },
            GridParams::Composite { x_max, order, .. } => GridDescriptor {
                kind: self.kind,
                nodes: self.len(),
                x_max: Some(*x_max),
                order: Some(*order),
            },
        }
    }
}

/// Serializable summary of a grid, carried as provenance in reports.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridDescriptor {
    pub kind: GridKind,
    pub nodes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
}

/// Values h_0(x) … h_K(x).
#[derive(Clone, Debug)]
pub struct HermiteValues {
    pub x: f64,
    pub values: Vec<f64>,
}

/// Evaluate h_0..h_K at x by the orthonormal three-term recurrence.
pub fn eval_hermite(x: f64, k_max: usize) -> Result<HermiteValues> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("eval_hermite: non-finite x = {x}")));
    }
    Ok(HermiteValues {
        x,
        values: eval_hermite_unchecked(x, k_max),
    })
}

fn eval_hermite_unchecked(x: f64, k_max: usize) -> Vec<f64> {
    // The folded recurrence keeps every value in [-1, 1] as long as the
    // Gaussian head e^{-x²/2} is representable. Past that, run the same
    // recurrence on mantissas with a common log-scale so the values near the
    // turning point (which are O(1) again) are recovered.
    if x * x / 2.0 < 700.0 {
        let mut v = Vec::with_capacity(k_max + 1);
        let h0 = std::f64::consts::PI.powf(-0.25) * (-x * x / 2.0).exp();
        v.push(h0);
        if k_max == 0 {
            return v;
        }
        v.push(std::f64::consts::SQRT_2 * x * h0);
        for k in 1..k_max {
            let kf = k as f64;
            let next = (2.0 / (kf + 1.0)).sqrt() * x * v[k] - (kf / (kf + 1.0)).sqrt() * v[k - 1];
            v.push(next);
        }
        return v;
    }
    eval_hermite_scaled(x, k_max)
}

/// Recurrence with a running log-scale offset: h_k = m_k · e^{offset}.
fn eval_hermite_scaled(x: f64, k_max: usize) -> Vec<f64> {
    let reconstruct = |m: f64, offset: f64| -> f64 {
        if m == 0.0 {
            0.0
        } else {
            m.signum() * (offset + m.abs().ln()).exp()
        }
    };
    let mut offset = -0.25 * std::f64::consts::PI.ln() - x * x / 2.0;
    let mut m_prev = 1.0f64; // h_0 mantissa
    let mut out = Vec::with_capacity(k_max + 1);
    out.push(reconstruct(m_prev, offset));
    if k_max == 0 {
        return out;
    }
    let mut m_cur = std::f64::consts::SQRT_2 * x * m_prev;
    out.push(reconstruct(m_cur, offset));
    for k in 1..k_max {
        let kf = k as f64;
        let m_next = (2.0 / (kf + 1.0)).sqrt() * x * m_cur - (kf / (kf + 1.0)).sqrt() * m_prev;
        m_prev = m_cur;
        m_cur = m_next;
        let a = m_cur.abs().max(m_prev.abs());
        if a > 1e100 {
            m_cur *= 1e-100;
            m_prev *= 1e-100;
            offset += 100.0 * std::f64::consts::LN_10;
        }
        out.push(reconstruct(m_cur, offset));
    }
    out
}

/// Table of h_k(x_i) for k ≤ k_max over all nodes; row k is contiguous.
pub fn hermite_table(nodes: &[f64], k_max: usize) -> Vec<f64> {
    let q = nodes.len();
    let mut table = vec![0.0f64; (k_max + 1) * q];
    // evaluate per node, write transposed
    let cols: Vec<Vec<f64>> = nodes
        .par_iter()
        .map(|&x| eval_hermite_unchecked(x, k_max))
        .collect();
    for (i, col) in cols.iter().enumerate() {
        for (k, &v) in col.iter().enumerate() {
            table[k * q + i] = v;
        }
    }
    table
}

/// Result of a quadrature with the doubled-resolution convergence check.
#[derive(Clone, Copy, Debug)]
pub struct QuadResult {
    pub value: f64,
    /// Relative change produced by the final refinement.
    pub rel_change: f64,
    /// Set when the first doubling failed the tolerance and an extra
    /// refinement was needed.
    pub accuracy_flag: bool,
}

/// ‖b·h_k‖₂ by quadrature, accepted only when doubling the grid changes the
/// result by less than `rtol`. One extra refinement is attempted before the
/// accuracy error fires.
pub fn weighted_norm(b: &Potential, k: usize, grid: &HermiteGrid) -> Result<QuadResult> {
    weighted_norm_with(b, k, grid, QUAD_RTOL)
}

pub fn weighted_norm_with(
    b: &Potential,
    k: usize,
    grid: &HermiteGrid,
    rtol: f64,
) -> Result<QuadResult> {
    let eval = |g: &HermiteGrid| -> Result<f64> {
        let mut acc = 0.0;
        for (&x, &w) in g.nodes.iter().zip(g.weights.iter()) {
            let h = eval_hermite_unchecked(x, k)[k];
            acc += w * b.eval_abs2(x)? * h * h;
        }
        Ok(acc.max(0.0).sqrt())
    };
    let v0 = eval(grid)?;
    let g1 = grid.refine()?;
    let v1 = eval(&g1)?;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
    if rel(v0, v1) < rtol || (v0 == 0.0 && v1 == 0.0) {
        return Ok(QuadResult {
            value: v1,
            rel_change: rel(v0, v1),
            accuracy_flag: false,
        });
    }
    let g2 = g1.refine()?;
    let v2 = eval(&g2)?;
    if rel(v1, v2) < rtol {
        return Ok(QuadResult {
            value: v2,
            rel_change: rel(v1, v2),
            accuracy_flag: true,
        });
    }
    Err(Error::Accuracy {
        context: format!("weighted_norm(k={k})"),
        coarse: v1,
        fine: v2,
    })
}

/// Envelope calibration report for h_n: smallest constants making the
/// two-regime bound hold on the sample (x² ≤ 2N oscillatory, x² ≥ 2N tail
/// with C = 1), plus the uniform sup-norm constant.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EnvelopeReport {
    pub n: usize,
    pub samples: usize,
    /// max |h_n(x)| (N^{1/3} + |x²−N|)^{1/4} over x² ≤ 2N.
    pub c_oscillatory: f64,
    /// largest γ with |h_n(x)| ≤ e^{-γx²} over the sampled tail.
    pub gamma_tail: f64,
    /// sup_x |h_n(x)| over the sample.
    pub sup_value: f64,
    /// sup |h_n| · (1+n)^{1/12}.
    pub uniform_constant: f64,
}

pub fn envelope_check(n: usize, samples: usize) -> EnvelopeReport {
    let nn = (2 * n + 1) as f64;
    let turn = (2.0 * nn).sqrt();
    let samples = samples.max(16);
    let mut c_osc = 0.0f64;
    let mut sup = 0.0f64;
    for i in 0..samples {
        let x = turn * i as f64 / (samples - 1) as f64;
        let h = eval_hermite_unchecked(x, n)[n].abs();
        sup = sup.max(h);
        let envelope = (nn.powf(1.0 / 3.0) + (x * x - nn).abs()).powf(0.25);
        c_osc = c_osc.max(h * envelope);
    }
    let mut gamma = f64::INFINITY;
    for i in 0..samples {
        let x = turn + 6.0 * i as f64 / (samples - 1) as f64;
        let h = eval_hermite_unchecked(x, n)[n].abs();
        if h > 1e-290 {
            sup = sup.max(h);
            gamma = gamma.min(-h.ln() / (x * x));
        }
    }
    if !gamma.is_finite() {
        gamma = 0.0;
    }
    EnvelopeReport {
        n,
        samples,
        c_oscillatory: c_osc,
        gamma_tail: gamma,
        sup_value: sup,
        uniform_constant: sup * (1.0 + n as f64).powf(1.0 / 12.0),
    }
}

// ---------------------------------------------------------------------------
// node computation

/// Zeros of the degree-q Hermite polynomial via Sturm bisection on the Jacobi
/// matrix (diagonal 0, off-diagonal β_k = √(k/2)), polished by Newton on h_q.
fn gauss_hermite_nodes(q: usize) -> Vec<f64> {
    if q == 1 {
        return vec![0.0];
    }
    let beta2: Vec<f64> = (1..q).map(|k| k as f64 / 2.0).collect(); // β_k²
    let bound = (2.0 * q as f64).sqrt();
    // count of eigenvalues < x
    let count_below = |x: f64| -> usize {
        let mut cnt = 0usize;
        let mut d = -x;
        if d < 0.0 {
            cnt += 1;
        }
        for &b2 in &beta2 {
            if d == 0.0 {
                d = 1e-300;
            }
            d = -x - b2 / d;
            if d < 0.0 {
                cnt += 1;
            }
        }
        cnt
    };
    let newton = |x0: f64| -> f64 {
        let mut x = x0;
        for _ in 0..3 {
            let h = eval_hermite_unchecked(x, q);
            let f = h[q];
            let df = (2.0 * q as f64).sqrt() * h[q - 1] - x * h[q];
            if df == 0.0 {
                break;
            }
            let step = f / df;
            x -= step;
            if step.abs() < 1e-15 * (1.0 + x.abs()) {
                break;
            }
        }
        x
    };
    let half: Vec<f64> = (q / 2..q)
        .into_par_iter()
        .map(|idx| {
            // idx-th smallest eigenvalue, upper half by symmetry
            let mut lo = -bound;
            let mut hi = bound;
            for _ in 0..70 {
                let mid = 0.5 * (lo + hi);
                if count_below(mid) <= idx {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-13 {
                    break;
                }
            }
            newton(0.5 * (lo + hi))
        })
        .collect();
    // half = [x_{q/2}, ..., x_{q-1}] ascending; mirror to the full set
    let mut nodes = Vec::with_capacity(q);
    for &x in half.iter().rev() {
        nodes.push(-x);
    }
    if q % 2 == 1 {
        // middle eigenvalue is exactly zero by symmetry
        *nodes.last_mut().unwrap() = 0.0;
    }
    let skip = q % 2;
    for &x in half.iter().skip(skip) {
        nodes.push(x);
    }
    debug_assert_eq!(nodes.len(), q);
    nodes
}

/// Gauss–Legendre nodes/weights on [−1, 1] by Newton from Chebyshev guesses.
fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let m = n.div_ceil(2);
    let mut nodes = vec![0.0f64; n];
    let mut weights = vec![0.0f64; n];
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and P'_n(x)
            let mut p0 = 1.0f64;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}
