//! The 2×2-block perturbation family with closed-form eigensystem, the
//! block-diagonal operator whose eigenvector system is complete but not a
//! basis, and the dissipative-spectrum unconditional-basis criterion.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Parameters of the block family: a shared coupling t ∈ (0,1) and a
/// per-block k(m) ∈ (0,1), with s(m) = 1 − k(m)².
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    pub t: f64,
    pub k_values: Vec<f64>,
}

impl BlockSpec {
    /// Default family k(m) = 2^{−m−1}, m = 0..m_max.
    pub fn geometric(t: f64, m_max: usize) -> Self {
        Self {
            t,
            k_values: (0..=m_max).map(|m| 0.5f64.powi(m as i32 + 1)).collect(),
        }
    }

    pub fn m_max(&self) -> usize {
        self.k_values.len().saturating_sub(1)
    }

    pub fn k(&self, m: usize) -> f64 {
        self.k_values[m]
    }

    pub fn s(&self, m: usize) -> f64 {
        1.0 - self.k_values[m] * self.k_values[m]
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.t && self.t < 1.0) {
            return Err(Error::Config(format!(
                "block spec: need 0 < t < 1, got {}",
                self.t
            )));
        }
        if self.k_values.is_empty() {
            return Err(Error::Config("block spec: need at least one block".into()));
        }
        for (m, &k) in self.k_values.iter().enumerate() {
            if !(0.0 < k && k < 1.0) {
                return Err(Error::Config(format!(
                    "block spec: need 0 < k(m) < 1, got k({m}) = {k}"
                )));
            }
        }
        Ok(())
    }
}

/// The 2×2 block  [[1−t, t], [−st, −1+t]]  with s = 1 − k².
pub fn block_matrix(t: f64, k: f64) -> Result<Mat> {
    if !(0.0 < t && t < 1.0) || !(0.0 < k && k < 1.0) {
        return Err(Error::Config(format!(
            "block_matrix: need t, k in (0,1), got t={t}, k={k}"
        )));
    }
    let s = 1.0 - k * k;
    let mut b = Mat::zeros(2, 2);
    b[(0, 0)] = Complex64::new(1.0 - t, 0.0);
    b[(0, 1)] = Complex64::new(t, 0.0);
    b[(1, 0)] = Complex64::new(-s * t, 0.0);
    b[(1, 1)] = Complex64::new(-1.0 + t, 0.0);
    Ok(b)
}

/// Exact largest singular value of the 2×2 block.
pub fn block_norm(t: f64, k: f64) -> Result<f64> {
    let b = block_matrix(t, k)?;
    Ok(two_by_two_sigma_max(&b))
}

fn two_by_two_sigma_max(b: &Mat) -> f64 {
    // eigenvalues of BᴴB via the quadratic formula
    let g00 = b[(0, 0)].norm_sqr() + b[(1, 0)].norm_sqr();
    let g11 = b[(0, 1)].norm_sqr() + b[(1, 1)].norm_sqr();
    let g01 = (b[(0, 0)].conj() * b[(0, 1)] + b[(1, 0)].conj() * b[(1, 1)]).norm_sqr();
    let tr = g00 + g11;
    let det = g00 * g11 - g01;
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    (tr / 2.0 + disc).max(0.0).sqrt()
}

/// Closed-form eigensystem of ℓ = diag(E, E+2) + b(t,k) = (E+1)I + t·c:
/// eigenvalues (E+1) ± tk with eigenvectors (1, 1±k)ᵀ.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BlockEigensystem {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub g_plus: [f64; 2],
    pub g_minus: [f64; 2],
}

pub fn block_eigensystem(e: f64, t: f64, k: f64) -> Result<BlockEigensystem> {
    if !(0.0 < t && t < 1.0) || !(0.0 < k && k < 1.0) {
        return Err(Error::Config(format!(
            "block_eigensystem: need t, k in (0,1), got t={t}, k={k}"
        )));
    }
    Ok(BlockEigensystem {
        lambda_plus: (e + 1.0) + t * k,
        lambda_minus: (e + 1.0) - t * k,
        g_plus: [1.0, 1.0 + k],
        g_minus: [1.0, 1.0 - k],
    })
}

/// The angle between the block eigenvectors and the norm of the coordinate
/// functionals of the normalized eigenvector basis:
/// cos²α = 1 − k²/(1 + k⁴/4), ‖Φ₀‖ = ‖Φ₁‖ = 1/sin α > 1/k.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FunctionalNorms {
    pub cos2_alpha: f64,
    pub sin_alpha: f64,
    pub functional_norm: f64,
}

pub fn functional_norms(k: f64) -> Result<FunctionalNorms> {
    if !(0.0 < k && k < 1.0) {
        return Err(Error::Config(format!(
            "functional_norms: need 0 < k < 1, got {k}"
        )));
    }
    // sin²α = k²/(1 + k⁴/4) computed directly; the 1 − cos²α route cancels
    // catastrophically for small k
    let sin2 = k * k / (1.0 + k.powi(4) / 4.0);
    let cos2 = 1.0 - sin2;
    let sin = sin2.sqrt();
    debug_assert!(sin <= k);
    Ok(FunctionalNorms {
        cos2_alpha: cos2,
        sin_alpha: sin,
        functional_norm: 1.0 / sin,
    })
}

/// Functional norm computed independently through the 2×2 Gram inverse of
/// the normalized eigenvector basis {g⁺/‖g⁺‖, g⁻/‖g⁻‖}. Cross-check for
/// `functional_norms`.
pub fn functional_norm_via_gram(k: f64) -> Result<f64> {
    if !(0.0 < k && k < 1.0) {
        return Err(Error::Config(format!(
            "functional_norm_via_gram: need 0 < k < 1, got {k}"
        )));
    }
    let gp = [1.0, 1.0 + k];
    let gm = [1.0, 1.0 - k];
    let np = (gp[0] * gp[0] + gp[1] * gp[1]).sqrt();
    let nm = (gm[0] * gm[0] + gm[1] * gm[1]).sqrt();
    let u0 = [gp[0] / np, gp[1] / np];
    let u1 = [gm[0] / nm, gm[1] / nm];
    let c = u0[0] * u1[0] + u0[1] * u1[1]; // cos α
    // dual vector of u0: (u0 − c u1)/(1 − c²); its norm is ‖Φ₀‖
    let denom = 1.0 - c * c;
    let d0 = [(u0[0] - c * u1[0]) / denom, (u0[1] - c * u1[1]) / denom];
    Ok((d0[0] * d0[0] + d0[1] * d0[1]).sqrt())
}

/// One row of the non-basis witness table.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct WitnessRow {
    pub m: usize,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    /// ‖Φ_m‖ = ‖Ψ_m‖ = 1/sin α_m.
    pub phi_norm: f64,
    /// Growth target 1/k(m); the functional norms exceed it.
    pub growth_floor: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NonBasisWitness {
    pub rows: Vec<WitnessRow>,
    /// sup over blocks of the exact 2×2 operator norm.
    pub b_norm: f64,
    /// ‖Φ_m‖ ≥ 1/k(m) for every block.
    pub phi_growth_ok: bool,
    /// |‖B‖ − 1| within the stated tolerance.
    pub b_norm_ok: bool,
    pub b_norm_tolerance: f64,
}

pub const B_NORM_TOL: f64 = 1e-6;

/// Tabulate the eigenvalues 4m+2 ± t·k(m) and the functional norms of the
/// block-diagonal operator, and check ‖B‖ = sup_m ‖b(m)‖ against 1.
pub fn non_basis_witness(spec: &BlockSpec) -> Result<NonBasisWitness> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.k_values.len());
    let mut b_norm = 0.0f64;
    let mut growth_ok = true;
    for m in 0..=spec.m_max() {
        let k = spec.k(m);
        let e = (4 * m + 1) as f64; // diag entries (4m+1, 4m+3), midpoint 4m+2
        let sys = block_eigensystem(e, spec.t, k)?;
        let norms = functional_norms(k)?;
        b_norm = b_norm.max(block_norm(spec.t, k)?);
        let floor = 1.0 / k;
        if norms.functional_norm < floor {
            growth_ok = false;
        }
        rows.push(WitnessRow {
            m,
            lambda_plus: sys.lambda_plus,
            lambda_minus: sys.lambda_minus,
            phi_norm: norms.functional_norm,
            growth_floor: floor,
        });
    }
    Ok(NonBasisWitness {
        rows,
        b_norm,
        phi_growth_ok: growth_ok,
        b_norm_ok: (b_norm - 1.0).abs() <= B_NORM_TOL,
        b_norm_tolerance: B_NORM_TOL,
    })
}

/// A discrete dissipative spectrum: Im μ_n ≥ 0, plus the upward shift ρ when
/// the spectrum came from the shifted-oscillator model μ_k = 2k+1+ξ_k+iρ.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DissipativeSpectrum {
    pub mus: Vec<Complex64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
}

impl DissipativeSpectrum {
    /// μ_k = 2k+1 + iρ over a finite window.
    pub fn shifted_oscillator(rho: f64, window: usize) -> Self {
        Self {
            mus: (0..window)
                .map(|k| Complex64::new((2 * k + 1) as f64, rho))
                .collect(),
            shift: Some(rho),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct KatsnelsonReport {
    /// sup_j Σ_{k≠j} Im μ_j Im μ_k / |μ_j − μ̄_k|² over the window.
    pub s_star: f64,
    /// sup_{j≠k} 4 Im μ_j Im μ_k / |μ_j − μ̄_k|².
    pub pair_sup: f64,
    pub passes: bool,
    /// For the shifted model: analytic pair bound 4ρ²/((1−ρ)² + 4ρ²).
    pub pair_bound: Option<f64>,
    /// For the shifted model: analytic sum bound 1/(1−ρ)².
    pub s_star_bound: Option<f64>,
    pub window: usize,
}

/// The two basis-criterion quantities over the supplied finite window.
/// `passes` requires pair_sup < 1, and additionally the analytic bounds when
/// the shifted-model ρ is known.
pub fn katsnelson_check(spectrum: &DissipativeSpectrum) -> Result<KatsnelsonReport> {
    let mus = &spectrum.mus;
    if mus.is_empty() {
        return Err(Error::Config("katsnelson_check: empty spectrum".into()));
    }
    for (i, mu) in mus.iter().enumerate() {
        if mu.im < 0.0 {
            return Err(Error::Domain(format!(
                "katsnelson_check: Im μ_{i} = {} < 0 violates dissipativity",
                mu.im
            )));
        }
    }
    let n = mus.len();
    let mut pair_sup = 0.0f64;
    let mut s_star = 0.0f64;
    for j in 0..n {
        let mut row_sum = 0.0f64;
        for k in 0..n {
            if k == j {
                continue;
            }
            let d2 = (mus[j] - mus[k].conj()).norm_sqr();
            let prod = mus[j].im * mus[k].im / d2;
            row_sum += prod;
            pair_sup = pair_sup.max(4.0 * prod);
        }
        s_star = s_star.max(row_sum);
    }
    let (pair_bound, s_star_bound, passes) = match spectrum.shift {
        Some(rho) if rho > 0.0 && rho < 1.0 => {
            let zb = 4.0 * rho * rho / ((1.0 - rho) * (1.0 - rho) + 4.0 * rho * rho);
            let sb = 1.0 / ((1.0 - rho) * (1.0 - rho));
            let ok = pair_sup <= zb + 1e-12 && s_star < sb && pair_sup < 1.0;
            (Some(zb), Some(sb), ok)
        }
        _ => (None, None, pair_sup < 1.0),
    };
    Ok(KatsnelsonReport {
        s_star,
        pair_sup,
        passes,
        pair_bound,
        s_star_bound,
        window: n,
    })
}

/// Witness table as CSV (m, lambda_plus, lambda_minus, phi_norm).
pub fn witness_to_csv(w: &NonBasisWitness) -> String {
    let mut out = String::from("m,lambda_plus,lambda_minus,phi_norm\n");
    for r in &w.rows {
        out.push_str(&format!(
            "{},{:.15e},{:.15e},{:.15e}\n",
            r.m, r.lambda_plus, r.lambda_minus, r.phi_norm
        ));
    }
    out
}
