//! Spectral enclosure, eigenvalue localization, Riesz projections by contour
//! quadrature, resolvent/projection norm bounds, the two-sided projection
//! deviation identity, and the ℓ²-summability deviation sums behind the
//! unconditional-basis property.

mod contour;

pub use contour::{
    circle_rule, strip_rule, ContourIntegral, ContourMeta, ContourNode, ContourRule, Reduction,
    ResolventFactory,
};

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::assembly::TruncatedOperator;
use crate::error::{Error, Result};
use crate::linalg::{
    self, eigenvalues, matrix_norm, norm2, operator_norm, LinearOp, LuFactorization, Mat,
};
use crate::potential::VNormProfile;

/// Profile threshold defining the tail index J.
pub const PROFILE_THRESHOLD: f64 = 1.0 / 68.0;
/// Fixed localization disk radius.
pub const DISK_RADIUS: f64 = 1.0 / 16.0;
/// Default contour node parameter M (the engine evaluates the nested 2M rule).
pub const DEFAULT_CONTOUR_M: usize = 64;
/// Default circle radius for single-eigenvalue projections P_k.
pub const DEFAULT_PK_RADIUS: f64 = 0.5;
/// Default circle radius for deviation/identity contours.
pub const DEFAULT_DEVIATION_RADIUS: f64 = 0.25;
/// Doubling acceptance for circle contours (Frobenius).
pub const CONTOUR_DOUBLING_TOL: f64 = 1e-9;
/// Relative singular-value cutoff for rank estimates.
pub const RANK_SV_REL_TOL: f64 = 1e-6;
/// Minimum quadrature half-height for the strip contour (the region itself
/// may have arbitrarily small Y; the contour may be homotopically widened).
pub const STRIP_MIN_HALF_HEIGHT: f64 = 0.25;
/// Composite panel order for strip edges.
pub const STRIP_PANEL_ORDER: usize = 12;
/// Panel length as a multiple of the local distance to the spectrum.
pub const STRIP_PANEL_FACTOR: f64 = 2.0;

/// The enclosure S(N*) = Π(2N*, Y) ∪ ⋃_{k≥N*} D(2k+1, 1/16), with the
/// constants derived from a computed ‖b h_k‖ profile:
/// J is where the profile stays ≤ 1/68, Y = 8(‖b‖ + 2π‖b‖²), and
/// N* = ⌈(2J + 4‖b‖√J + 1)/2⌉.
#[derive(Clone, Debug, Serialize)]
pub struct EnclosureRegion {
    pub n_star: usize,
    pub y: f64,
    pub j: usize,
    pub b_norm: f64,
    pub disk_radius: f64,
}

impl EnclosureRegion {
    pub fn disk_center(k: usize) -> f64 {
        (2 * k + 1) as f64
    }

    pub fn half_strip_width(&self) -> f64 {
        2.0 * self.n_star as f64
    }

    pub fn contains(&self, z: Complex64) -> bool {
        if z.re.abs() < self.half_strip_width() && z.im.abs() < self.y {
            return true;
        }
        // nearest disk center 2k+1 with k >= n_star
        let k = (((z.re - 1.0) / 2.0).round().max(self.n_star as f64)) as usize;
        (z - Complex64::new(Self::disk_center(k), 0.0)).norm() < self.disk_radius
    }

    /// The resolvent-margin quantity ‖b‖²J/(2(N*−J)−1)², which the N*
    /// selection keeps at or below 1/16.
    pub fn resolvent_margin(&self) -> f64 {
        if self.j == 0 {
            return 0.0;
        }
        let denom = 2.0 * (self.n_star as f64 - self.j as f64) - 1.0;
        self.b_norm * self.b_norm * self.j as f64 / (denom * denom)
    }
}

/// Derive the enclosure constants from a profile. Errors with the not-in-V
/// path when the profile never stays below the threshold.
pub fn build_enclosure(profile: &VNormProfile) -> Result<EnclosureRegion> {
    let norms = &profile.norms;
    if norms.is_empty() {
        return Err(Error::Config("build_enclosure: empty profile".into()));
    }
    // smallest J with profile[k] <= threshold for all computed k >= J
    let mut j = norms.len();
    while j > 0 && norms[j - 1] <= PROFILE_THRESHOLD {
        j -= 1;
    }
    if j == norms.len() {
        return Err(Error::NotInV {
            threshold: PROFILE_THRESHOLD,
            computed_len: norms.len(),
        });
    }
    let b_norm = profile.sup;
    let n_star = ((2.0 * j as f64 + 4.0 * b_norm * (j as f64).sqrt() + 1.0) / 2.0).ceil() as usize;
    let y = 8.0 * (b_norm + 2.0 * std::f64::consts::PI * b_norm * b_norm);
    Ok(EnclosureRegion {
        n_star: n_star.max(1),
        y,
        j,
        b_norm,
        disk_radius: DISK_RADIUS,
    })
}

/// One localized disk: how many computed eigenvalues fell inside.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DiskFinding {
    pub n: usize,
    pub count: usize,
    /// the eigenvalue when the count is exactly one
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub distance_from_center: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalizationReport {
    pub n_star: usize,
    pub n_trust: usize,
    pub disks: Vec<DiskFinding>,
    /// Disk checks were skipped because n_trust < N*.
    pub range_empty: bool,
    pub strip_count: usize,
    pub strip_expected: usize,
    pub violations: usize,
}

impl LocalizationReport {
    pub fn strip_ok(&self) -> bool {
        self.strip_count == self.strip_expected
    }
}

/// For each n in [N*, n_trust] count the eigenvalues inside D(2n+1, 1/16),
/// and compare the half-strip eigenvalue count with N*. Violations are
/// findings, not errors.
pub fn localize(
    eig_values: &[Complex64],
    region: &EnclosureRegion,
    n_trust: usize,
) -> LocalizationReport {
    let mut disks = Vec::new();
    let mut violations = 0usize;
    let range_empty = n_trust < region.n_star;
    if !range_empty {
        for n in region.n_star..=n_trust {
            let center = Complex64::new(EnclosureRegion::disk_center(n), 0.0);
            let mut count = 0usize;
            let mut lambda = Complex64::new(f64::NAN, f64::NAN);
            for &v in eig_values {
                if (v - center).norm() < region.disk_radius {
                    count += 1;
                    lambda = v;
                }
            }
            if count != 1 {
                violations += 1;
            }
            disks.push(DiskFinding {
                n,
                count,
                lambda_re: lambda.re,
                lambda_im: lambda.im,
                distance_from_center: (lambda - center).norm(),
            });
        }
    }
    let hw = region.half_strip_width();
    let strip_count = eig_values
        .iter()
        .filter(|z| z.re.abs() < hw && z.im.abs() < region.y.max(STRIP_MIN_HALF_HEIGHT))
        .count();
    if strip_count != region.n_star {
        violations += 1;
    }
    LocalizationReport {
        n_star: region.n_star,
        n_trust,
        disks,
        range_empty,
        strip_count,
        strip_expected: region.n_star,
        violations,
    }
}

/// A spectral projection obtained by contour quadrature.
#[derive(Clone, Debug)]
pub struct RieszProjection {
    pub matrix: Mat,
    pub meta: ContourMeta,
    /// Number of singular values above RANK_SV_REL_TOL × the largest.
    pub rank_estimate: usize,
    /// Power-iteration 2-norm estimate.
    pub norm_estimate: f64,
    /// ‖P² − P‖_F.
    pub idempotency_defect: f64,
    /// ‖P_fine − P_coarse‖_F for nested rules, or the probe estimate for
    /// panel rules.
    pub doubling_diff: f64,
    pub converged: bool,
}

/// Pipeline context: the operator, its Hessenberg resolvent factory, and the
/// computed spectrum of the truncation.
pub struct ProjectionContext {
    pub op: TruncatedOperator,
    pub factory: ResolventFactory,
    pub eig_values: Vec<Complex64>,
}

impl ProjectionContext {
    pub fn new(op: TruncatedOperator) -> Result<Self> {
        let factory = ResolventFactory::new(&op.matrix);
        let eig_values = eigenvalues(&op.matrix)?;
        Ok(Self {
            op,
            factory,
            eig_values,
        })
    }

    fn check_contour_clear(&self, rule: &ContourRule) -> Result<()> {
        let margin = 10.0 * f64::EPSILON * self.op.matrix.frobenius_norm();
        for &v in &self.eig_values {
            let d = rule.distance_to(v);
            if d <= margin {
                return Err(Error::Contour(format!(
                    "eigenvalue {v} lies within {d:.3e} of the contour \
                     (margin {margin:.3e}); adjust the radius"
                )));
            }
        }
        Ok(())
    }

    /// P = (1/2πi) ∮_{|z−center|=radius} R(z) dz by the trapezoid rule with
    /// the nested doubling check (M and 2M nodes).
    pub fn riesz_projection(
        &self,
        center: Complex64,
        radius: f64,
        m: usize,
    ) -> Result<RieszProjection> {
        if m < 16 {
            return Err(Error::Config(format!(
                "riesz_projection: need M >= 16 contour nodes, got {m}"
            )));
        }
        let symmetric = self.factory.real && center.im == 0.0;
        let rule = circle_rule(center, radius, m, symmetric);
        self.check_contour_clear(&rule)?;
        let one = |_: Complex64| Complex64::new(1.0, 0.0);
        let integral = self.factory.integrate_matrix(&rule, &one)?;
        let diff = integral
            .coarse
            .as_ref()
            .map(|c| integral.fine.sub(c).frobenius_norm())
            .unwrap_or(f64::NAN);
        finish_projection(integral.fine, rule.meta, diff, diff < CONTOUR_DOUBLING_TOL)
    }

    /// S_* = (1/2πi) ∮_{∂Π(2N*, Y')} R(z) dz over the rectangle contour,
    /// Y' = max(Y, STRIP_MIN_HALF_HEIGHT). The doubling check is estimated by
    /// applying the halved-panel rule to random probe columns.
    pub fn strip_projection(&self, region: &EnclosureRegion) -> Result<RieszProjection> {
        let hw = region.half_strip_width();
        let hh = region.y.max(STRIP_MIN_HALF_HEIGHT);
        let (lo, hi) = self.spectrum_real_extent();
        let symmetric = self.factory.real;
        let rule = strip_rule(
            hw,
            hh,
            lo,
            hi,
            STRIP_PANEL_ORDER,
            STRIP_PANEL_FACTOR,
            symmetric,
            false,
        );
        self.check_contour_clear(&rule)?;
        let one = |_: Complex64| Complex64::new(1.0, 0.0);
        let p = self.factory.integrate_matrix(&rule, &one)?.fine;

        // probe-based refinement estimate: ‖(P_h − P_{h/2}) Ω‖_F scaled to
        // the full Frobenius norm
        let n = self.factory.n();
        let probes = 4usize.min(n);
        let mut rng = ChaCha8Rng::seed_from_u64(0x517b);
        let omega = Mat::from_fn(n, probes, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let full_base = strip_rule(hw, hh, lo, hi, STRIP_PANEL_ORDER, STRIP_PANEL_FACTOR, false, false);
        let full_fine = strip_rule(hw, hh, lo, hi, STRIP_PANEL_ORDER, STRIP_PANEL_FACTOR, false, true);
        let pb = self.factory.integrate_apply(&full_base, &one, &omega)?.fine;
        let pf = self.factory.integrate_apply(&full_fine, &one, &omega)?.fine;
        let probe_diff = pb.sub(&pf).frobenius_norm() * (n as f64 / probes as f64).sqrt();
        let converged = probe_diff < 1e-7 * (1.0 + p.frobenius_norm());
        finish_projection(p, rule.meta, probe_diff, converged)
    }

    fn spectrum_real_extent(&self) -> (f64, f64) {
        let lo = self
            .eig_values
            .iter()
            .map(|z| z.re)
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .eig_values
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// The eigenvalue localized in D(2n+1, 1/16), if exactly one.
    pub fn localized_eigenvalue(&self, n: usize) -> Result<Complex64> {
        let center = Complex64::new(EnclosureRegion::disk_center(n), 0.0);
        let mut found = None;
        for &v in &self.eig_values {
            if (v - center).norm() < DISK_RADIUS {
                if found.is_some() {
                    return Err(Error::Domain(format!(
                        "disk around 2·{n}+1 contains more than one eigenvalue"
                    )));
                }
                found = Some(v);
            }
        }
        found.ok_or_else(|| Error::Domain(format!("no eigenvalue inside D(2·{n}+1, 1/16)")))
    }
}

fn finish_projection(
    p: Mat,
    meta: ContourMeta,
    doubling_diff: f64,
    converged: bool,
) -> Result<RieszProjection> {
    let sv = linalg::singular_values(&p)?;
    let top = sv.first().copied().unwrap_or(0.0);
    let rank = sv.iter().filter(|&&s| s > RANK_SV_REL_TOL * top).count();
    let norm = matrix_norm(&p, 0x9021);
    let idem = p.matmul(&p).sub(&p).frobenius_norm();
    Ok(RieszProjection {
        matrix: p,
        meta,
        rank_estimate: rank,
        norm_estimate: norm,
        idempotency_defect: idem,
        doubling_diff,
        converged,
    })
}

/// (z − A)⁻¹ action through a pivoted LU of the full matrix; the path used by
/// single-point resolvent solves away from any precomputed factory.
pub struct ResolventSolve {
    lu: LuFactorization,
}

impl ResolventSolve {
    /// Factor (z − A). Errors when z is numerically at an eigenvalue.
    pub fn new(z: Complex64, op: &TruncatedOperator) -> Result<Self> {
        let n = op.n;
        let m = Mat::from_fn(n, n, |i, j| {
            let d = if i == j { z } else { Complex64::new(0.0, 0.0) };
            d - op.matrix[(i, j)]
        });
        let lu = LuFactorization::with_context(&m, "resolvent")?;
        if lu.rcond() < 1e-14 {
            return Err(Error::Pole {
                context: format!("resolvent at z = {z}"),
                rcond: lu.rcond(),
            });
        }
        Ok(Self { lu })
    }

    pub fn solve(&self, rhs: &Mat) -> Mat {
        self.lu.solve_mat(rhs)
    }

    pub fn rcond(&self) -> f64 {
        self.lu.rcond()
    }
}

impl LinearOp for ResolventSolve {
    fn dim(&self) -> usize {
        self.lu.n()
    }
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.lu.solve_vec(x)
    }
    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.lu.solve_adjoint_vec(x)
    }
}

/// Solve (z − A) x = rhs for a block of right-hand sides.
pub fn lu_solve(z: Complex64, op: &TruncatedOperator, rhs: &Mat) -> Result<Mat> {
    Ok(ResolventSolve::new(z, op)?.solve(rhs))
}

#[derive(Clone, Debug, Serialize)]
pub struct ResolventScanReport {
    /// max over samples of the estimated ‖R(z)‖.
    pub max_resolvent_norm: f64,
    pub samples: usize,
    /// (n, ‖(1/2πi)∮ R(z)/(z−λ_n) dz‖) on radius-1 circles.
    pub deviation_kernel_norms: Vec<(usize, f64)>,
    pub resolvent_bound: f64,
    pub kernel_bound: f64,
    pub resolvent_ok: bool,
    pub kernel_ok: bool,
}

pub const RESOLVENT_BOUND: f64 = 32.0;
pub const KERNEL_BOUND: f64 = 35.0;

/// Max ‖R(z)‖ over sample points outside the enclosure, plus the radius-1
/// weighted-resolvent integrals for the requested localized indices.
pub fn resolvent_bound_scan(
    ctx: &ProjectionContext,
    region: &EnclosureRegion,
    samples: &[Complex64],
    kernel_indices: &[usize],
) -> Result<ResolventScanReport> {
    for &z in samples {
        if region.contains(z) {
            return Err(Error::Config(format!(
                "resolvent_bound_scan: sample {z} lies inside the enclosure"
            )));
        }
    }
    use rayon::prelude::*;
    let norms: Vec<Result<f64>> = samples
        .par_iter()
        .map(|&z| {
            let solve = ResolventSolve::new(z, &ctx.op)?;
            Ok(operator_norm(&solve, 200, 0x5ca9)?.value)
        })
        .collect();
    let mut max_norm = 0.0f64;
    for r in norms {
        max_norm = max_norm.max(r?);
    }

    let mut kernel_norms = Vec::new();
    for &n in kernel_indices {
        let lambda = ctx.localized_eigenvalue(n)?;
        let center = Complex64::new(EnclosureRegion::disk_center(n), 0.0);
        let symmetric = ctx.factory.real && lambda.im == 0.0;
        let rule = circle_rule(center, 1.0, DEFAULT_CONTOUR_M, symmetric);
        ctx.check_contour_clear(&rule)?;
        let kernel = move |z: Complex64| Complex64::new(1.0, 0.0) / (z - lambda);
        let psi = ctx.factory.integrate_matrix(&rule, &kernel)?.fine;
        kernel_norms.push((n, matrix_norm(&psi, 0x21a)));
    }
    let resolvent_ok = max_norm <= RESOLVENT_BOUND;
    let kernel_ok = kernel_norms.iter().all(|&(_, v)| v <= KERNEL_BOUND);
    Ok(ResolventScanReport {
        max_resolvent_norm: max_norm,
        samples: samples.len(),
        deviation_kernel_norms: kernel_norms,
        resolvent_bound: RESOLVENT_BOUND,
        kernel_bound: KERNEL_BOUND,
        resolvent_ok,
        kernel_ok,
    })
}

/// Standard sample-point set outside S(N*): points on radius-1/8 circles
/// around the centers beyond N*, gap midpoints, and a line just above the
/// half-strip.
pub fn scan_samples(region: &EnclosureRegion, n_modes: usize, count: usize) -> Vec<Complex64> {
    let mut pts = Vec::with_capacity(count);
    let k_lo = region.n_star;
    let k_hi = (n_modes.saturating_sub(2)).max(k_lo + 1);
    let mut k = k_lo;
    let angles = 8;
    'outer: loop {
        for a in 0..angles {
            let theta = 2.0 * std::f64::consts::PI * (a as f64 + 0.5) / angles as f64;
            let z = Complex64::new(EnclosureRegion::disk_center(k), 0.0)
                + Complex64::from_polar(0.125, theta);
            if !region.contains(z) {
                pts.push(z);
            }
            if pts.len() >= count * 2 / 3 {
                break 'outer;
            }
        }
        k += 1;
        if k > k_hi {
            break;
        }
    }
    let mut k = k_lo;
    while pts.len() < count * 5 / 6 && k <= k_hi {
        let z = Complex64::new(EnclosureRegion::disk_center(k) + 1.0, 0.0);
        if !region.contains(z) {
            pts.push(z);
        }
        k += 1;
    }
    let above = region.y.max(STRIP_MIN_HALF_HEIGHT) + 0.5;
    let mut i = 0usize;
    while pts.len() < count {
        let frac = (i as f64 + 0.5) / count as f64;
        let x = -region.half_strip_width() + 2.0 * region.half_strip_width() * frac;
        let z = Complex64::new(x, above);
        if !region.contains(z) {
            pts.push(z);
        }
        i += 1;
        if i > 4 * count {
            break;
        }
    }
    pts
}

/// Both sides of the deviation identity
///   P_n − P⁰_n = P_n B Φ⁰_n(λ_n) + Φ_n(λ⁰_n) B P⁰_n
/// computed independently: the left via two contour projections, the right
/// via the diagonal closed form of Φ⁰_n and a contour extraction of the
/// analytic part Φ_n at λ⁰_n.
#[derive(Clone, Debug, Serialize)]
pub struct DeviationIdentityCheck {
    pub n: usize,
    pub lambda_re: f64,
    pub lambda_im: f64,
    /// ‖LHS − RHS‖_F.
    pub discrepancy: f64,
    pub lhs_norm: f64,
    /// ‖P_n − P⁰_n‖₂ and the triangle bound ‖P_n B Φ⁰‖ + ‖Φ B P⁰_n‖.
    pub deviation_norm: f64,
    pub triangle_bound: f64,
}

pub fn deviation_identity_check(
    ctx: &ProjectionContext,
    n: usize,
    radius: f64,
    m: usize,
) -> Result<DeviationIdentityCheck> {
    let nn = ctx.op.n;
    let lambda = ctx.localized_eigenvalue(n)?;
    let lambda0 = Complex64::new(EnclosureRegion::disk_center(n), 0.0);
    let center = lambda0;

    // left side: both projections from contours
    let p_n = ctx.riesz_projection(center, radius, m)?.matrix;
    let diag: Vec<Complex64> = (0..nn)
        .map(|k| Complex64::new((2 * k + 1) as f64, 0.0))
        .collect();
    let unperturbed = Mat::from_diag(&diag);
    let factory0 = ResolventFactory::new(&unperturbed);
    let rule0 = circle_rule(center, radius, m, true);
    let one = |_: Complex64| Complex64::new(1.0, 0.0);
    let p0_n = factory0.integrate_matrix(&rule0, &one)?.fine;
    let lhs = p_n.sub(&p0_n);

    // right side
    let b = ctx.op.perturbation();
    // Φ⁰_n(λ_n) = Σ_{k≠n} e_k e_kᵀ / (λ_n − λ⁰_k)
    let phi0: Vec<Complex64> = (0..nn)
        .map(|k| {
            if k == n {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(1.0, 0.0) / (lambda - Complex64::new((2 * k + 1) as f64, 0.0))
            }
        })
        .collect();
    let phi0_mat = Mat::from_diag(&phi0);
    // Φ_n(λ⁰_n) = (1/2πi)∮ R(z)/(z−λ⁰_n) dz − P_n · q(λ_n, λ⁰_n) where q is
    // the same quadrature applied to 1/((z−λ_n)(z−λ⁰_n)); in exact arithmetic
    // q = 0 with both poles enclosed, so this cancels the quadrature error of
    // the matrix term.
    let symmetric = ctx.factory.real && lambda.im == 0.0;
    let rule = circle_rule(center, radius, m, symmetric);
    ctx.check_contour_clear(&rule)?;
    let kernel = move |z: Complex64| Complex64::new(1.0, 0.0) / (z - lambda0);
    let weighted = ctx.factory.integrate_matrix(&rule, &kernel)?.fine;
    let mut q_scalar = Complex64::new(0.0, 0.0);
    for node in &rule.nodes {
        let g = node.w / ((node.z - lambda) * (node.z - lambda0));
        q_scalar += g;
    }
    let q_scalar = match rule.reduction {
        Reduction::Plain => q_scalar,
        Reduction::ImagOverPi => Complex64::new(q_scalar.im, 0.0),
    };
    let phi = weighted.sub(&p_n.scale(q_scalar));

    let term1 = p_n.matmul(&b).matmul(&phi0_mat);
    let term2 = phi.matmul(&b).matmul(&p0_n);
    let rhs = term1.add(&term2);

    let discrepancy = lhs.sub(&rhs).frobenius_norm();
    let deviation_norm = matrix_norm(&lhs, 0xde7);
    let triangle = matrix_norm(&term1, 0x7a1) + matrix_norm(&term2, 0x7a2);
    Ok(DeviationIdentityCheck {
        n,
        lambda_re: lambda.re,
        lambda_im: lambda.im,
        discrepancy,
        lhs_norm: lhs.frobenius_norm(),
        deviation_norm,
        triangle_bound: triangle,
    })
}

/// Per-mode deviation data extracted through rank-one contour applications.
#[derive(Clone, Debug, Serialize)]
pub struct ModeDeviation {
    pub n: usize,
    pub lambda_re: f64,
    pub lambda_im: f64,
    /// ‖P_n‖₂.
    pub projection_norm: f64,
    /// ‖P_n − P⁰_n‖₂.
    pub deviation_norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DeviationSums {
    pub n_from: usize,
    pub n_to: usize,
    /// Σ over the range of ‖P⁰_n(P_n − P⁰_n) f‖² — running partial sums.
    pub partial_sums: Vec<f64>,
    pub final_sum: f64,
    pub per_mode: Vec<ModeDeviation>,
}

/// Partial sums of Σ_{n} ‖P⁰_n(P_n − P⁰_n) f‖², n from N* (or higher) up to
/// the trusted index, with per-mode projection and deviation norms. The
/// summand reduces to |(P_n f)_n − f_n|², so each mode costs a handful of
/// vector contour solves.
pub fn deviation_sums(
    ctx: &ProjectionContext,
    region: &EnclosureRegion,
    f: &[Complex64],
    n_from: usize,
    n_trust: usize,
    radius: f64,
    m: usize,
) -> Result<DeviationSums> {
    if n_from < region.n_star {
        return Err(Error::Config(format!(
            "deviation_sums: n_from = {n_from} below N* = {}",
            region.n_star
        )));
    }
    let nn = ctx.op.n;
    if f.len() != nn {
        return Err(Error::Config(format!(
            "deviation_sums: f has length {}, operator is {nn}",
            f.len()
        )));
    }
    let fnorm = norm2(f);
    if (fnorm - 1.0).abs() > 1e-8 {
        return Err(Error::Domain(format!(
            "deviation_sums: f must be normalized, got ‖f‖ = {fnorm}"
        )));
    }
    let adjoint_factory = ResolventFactory::new(&ctx.op.matrix.adjoint());
    let one = |_: Complex64| Complex64::new(1.0, 0.0);
    let mut partial_sums = Vec::new();
    let mut per_mode = Vec::new();
    let mut acc = 0.0f64;
    for n in n_from..=n_trust {
        let lambda = ctx.localized_eigenvalue(n)?;
        let center = Complex64::new(EnclosureRegion::disk_center(n), 0.0);
        let rule = circle_rule(center, radius, m, false);
        ctx.check_contour_clear(&rule)?;
        // rhs = [f, e_n]
        let mut rhs = Mat::zeros(nn, 2);
        for i in 0..nn {
            rhs[(i, 0)] = f[i];
        }
        rhs[(n, 1)] = Complex64::new(1.0, 0.0);
        let out = ctx.factory.integrate_apply(&rule, &one, &rhs)?.fine;
        let pf_n = out[(n, 0)];
        let term = (pf_n - f[n]).norm_sqr();
        acc += term;
        partial_sums.push(acc);

        // rank-one factors: u = P_n e_n / ‖·‖, aᴴ = uᴴ P_n
        let mut u: Vec<Complex64> = (0..nn).map(|i| out[(i, 1)]).collect();
        let un = linalg::normalize(&mut u);
        let (proj_norm, dev_norm) = if un == 0.0 {
            (0.0, 1.0) // P_n e_n = 0 means the mode deviated completely
        } else {
            let mut urhs = Mat::zeros(nn, 1);
            for i in 0..nn {
                urhs[(i, 0)] = u[i];
            }
            let rule_adj = circle_rule(center.conj(), radius, m, false);
            let a_mat = adjoint_factory.integrate_apply(&rule_adj, &one, &urhs)?.fine;
            let a: Vec<Complex64> = (0..nn).map(|i| a_mat[(i, 0)]).collect();
            let dev = rank_two_sigma_max(&u, &a, n, nn);
            (norm2(&a), dev)
        };
        per_mode.push(ModeDeviation {
            n,
            lambda_re: lambda.re,
            lambda_im: lambda.im,
            projection_norm: proj_norm,
            deviation_norm: dev_norm,
        });
    }
    Ok(DeviationSums {
        n_from,
        n_to: n_trust,
        final_sum: acc,
        partial_sums,
        per_mode,
    })
}

/// σ_max of u aᴴ − e_n e_nᵀ from the 2×2 reduced problem:
/// with X = [u, e_n] and Y = [a, −e_n] the matrix is X Yᴴ, and its nonzero
/// σ² are the eigenvalues of (XᴴX)(YᴴY).
fn rank_two_sigma_max(u: &[Complex64], a: &[Complex64], n: usize, dim: usize) -> f64 {
    debug_assert!(n < dim);
    let one = Complex64::new(1.0, 0.0);
    let x01 = u[n].conj(); // (XᴴX)_{01} = Σ ū_i (e_n)_i
    let xx = [[linalg::dot(u, u), x01], [x01.conj(), one]];
    let y01 = -a[n].conj(); // (YᴴY)_{01} = Σ ā_i (−e_n)_i
    let yy = [[linalg::dot(a, a), y01], [y01.conj(), one]];
    // product P = XᴴX · YᴴY (2×2), eigenvalues by the quadratic formula
    let p00 = xx[0][0] * yy[0][0] + xx[0][1] * yy[1][0];
    let p01 = xx[0][0] * yy[0][1] + xx[0][1] * yy[1][1];
    let p10 = xx[1][0] * yy[0][0] + xx[1][1] * yy[1][0];
    let p11 = xx[1][0] * yy[0][1] + xx[1][1] * yy[1][1];
    let tr2 = (p00 + p11) * 0.5;
    let det = p00 * p11 - p01 * p10;
    let disc = (tr2 * tr2 - det).sqrt();
    let l1 = (tr2 + disc).re.max(0.0);
    let l2 = (tr2 - disc).re.max(0.0);
    l1.max(l2).sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionResidual {
    pub residual: f64,
    /// max over random summation orders of ‖final_σ − final_base‖₂.
    pub reorder_spread: f64,
    pub orders_tested: usize,
}

/// ‖f − S_* f − Σ_{k=N*}^{n_trust} P_k f‖₂, with the finite-scale
/// unconditionality witness: the same partial sums accumulated in random
/// orders, reporting the spread of the final values.
pub fn decomposition_residual(
    ctx: &ProjectionContext,
    region: &EnclosureRegion,
    f: &[Complex64],
    n_trust: usize,
    m: usize,
    orders: usize,
    seed: u64,
) -> Result<DecompositionResidual> {
    let nn = ctx.op.n;
    if f.len() != nn {
        return Err(Error::Config("decomposition_residual: length mismatch".into()));
    }
    for (i, &c) in f.iter().enumerate() {
        if i > n_trust && c.norm() > 1e-10 {
            return Err(Error::Domain(format!(
                "decomposition_residual: coordinate {i} beyond the trusted range \
                 has magnitude {:.3e}",
                c.norm()
            )));
        }
    }
    let one = |_: Complex64| Complex64::new(1.0, 0.0);
    let hw = region.half_strip_width();
    let hh = region.y.max(STRIP_MIN_HALF_HEIGHT);
    let (lo, hi) = ctx.spectrum_real_extent();
    let rule = strip_rule(hw, hh, lo, hi, STRIP_PANEL_ORDER, STRIP_PANEL_FACTOR, false, false);
    ctx.check_contour_clear(&rule)?;
    let mut rhs = Mat::zeros(nn, 1);
    for i in 0..nn {
        rhs[(i, 0)] = f[i];
    }
    let sf_mat = ctx.factory.integrate_apply(&rule, &one, &rhs)?.fine;
    let mut terms: Vec<Vec<Complex64>> = vec![(0..nn).map(|i| sf_mat[(i, 0)]).collect()];

    for k in region.n_star..=n_trust {
        let center = Complex64::new(EnclosureRegion::disk_center(k), 0.0);
        let crule = circle_rule(center, DEFAULT_PK_RADIUS, m, false);
        ctx.check_contour_clear(&crule)?;
        let pk = ctx.factory.integrate_apply(&crule, &one, &rhs)?.fine;
        terms.push((0..nn).map(|i| pk[(i, 0)]).collect());
    }

    let sum_in_order = |order: &[usize]| -> Vec<Complex64> {
        let mut acc = vec![Complex64::new(0.0, 0.0); nn];
        for &t in order {
            for (a, &v) in acc.iter_mut().zip(terms[t].iter()) {
                *a += v;
            }
        }
        acc
    };
    let base_order: Vec<usize> = (0..terms.len()).collect();
    let base = sum_in_order(&base_order);
    let residual = norm2(
        &f.iter()
            .zip(base.iter())
            .map(|(&a, &b)| a - b)
            .collect::<Vec<_>>(),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spread = 0.0f64;
    for _ in 0..orders {
        let mut order = base_order.clone();
        order.shuffle(&mut rng);
        let s = sum_in_order(&order);
        let d = norm2(
            &s.iter()
                .zip(base.iter())
                .map(|(&a, &b)| a - b)
                .collect::<Vec<_>>(),
        );
        spread = spread.max(d);
    }
    Ok(DecompositionResidual {
        residual,
        reorder_spread: spread,
        orders_tested: orders,
    })
}
