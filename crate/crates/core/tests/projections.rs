//! Contour-quadrature projection tests: unperturbed closed forms, enclosure
//! constants, the deviation identity, deviation sums, and the spectral
//! decomposition residual.

use num_complex::Complex64;
use osc_spectra::assembly::{assemble, default_grid, truncation_trust_index, TruncatedOperator};
use osc_spectra::linalg::Mat;
use osc_spectra::potential::{v_norm_profile, Potential, VNormProfile};
use osc_spectra::projections::{
    build_enclosure, decomposition_residual, deviation_identity_check, deviation_sums, localize,
    lu_solve, resolvent_bound_scan, scan_samples, EnclosureRegion, ProjectionContext,
    DEFAULT_CONTOUR_M, DEFAULT_DEVIATION_RADIUS, DEFAULT_PK_RADIUS,
};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn zero_operator(n: usize) -> TruncatedOperator {
    let grid = osc_spectra::hermite::HermiteGrid::gauss_hermite_modified((4 * n).max(256)).unwrap();
    assemble(&Potential::Zero, n, &grid).unwrap()
}

fn synthetic_profile(norms: Vec<f64>) -> VNormProfile {
    let sup = norms.iter().cloned().fold(0.0, f64::max);
    VNormProfile {
        norms,
        sup,
        tail_slope: 0.0,
        decays: true,
        max_rel_change: 0.0,
    }
}

#[test]
fn enclosure_constants_from_synthetic_profile() {
    // ‖b‖ = 1 with the profile dropping below 1/68 at J = 10:
    // Y = 8(1 + 2π) ≈ 58.27, N* = ⌈(20 + 4√10 + 1)/2⌉ = 17
    let mut norms = vec![1.0; 10];
    norms.extend(vec![0.01; 30]);
    let region = build_enclosure(&synthetic_profile(norms)).unwrap();
    assert_eq!(region.j, 10);
    assert_eq!(region.n_star, 17);
    assert!((region.y - 8.0 * (1.0 + 2.0 * std::f64::consts::PI)).abs() < 1e-12);
    assert!(region.resolvent_margin() <= 1.0 / 16.0 + 1e-12);
}

#[test]
fn enclosure_zero_potential() {
    let region = build_enclosure(&synthetic_profile(vec![0.0; 16])).unwrap();
    assert_eq!(region.j, 0);
    assert_eq!(region.n_star, 1);
    assert_eq!(region.y, 0.0);
}

#[test]
fn enclosure_rejects_non_decaying_profile() {
    let err = build_enclosure(&synthetic_profile(vec![1.0; 64]));
    assert!(matches!(err, Err(osc_spectra::Error::NotInV { .. })));
}

#[test]
fn unperturbed_projections_are_coordinate_projections() {
    let op = zero_operator(32);
    let ctx = ProjectionContext::new(op).unwrap();
    for k in [0usize, 3, 11] {
        let p = ctx
            .riesz_projection(c((2 * k + 1) as f64, 0.0), 0.25, DEFAULT_CONTOUR_M)
            .unwrap();
        assert!(p.converged, "doubling diff {:.3e}", p.doubling_diff);
        assert_eq!(p.rank_estimate, 1);
        let expect = Mat::outer(
            &(0..32).map(|i| c(if i == k { 1.0 } else { 0.0 }, 0.0)).collect::<Vec<_>>(),
            &(0..32).map(|i| c(if i == k { 1.0 } else { 0.0 }, 0.0)).collect::<Vec<_>>(),
        );
        let err = p.matrix.sub(&expect).frobenius_norm();
        assert!(err < 1e-9, "k={k}: ‖P − e_k e_kᵀ‖ = {err:.3e}");
        assert!((p.norm_estimate - 1.0).abs() < 1e-8);
        assert!(p.idempotency_defect < 1e-8);
    }
}

#[test]
fn two_eigenvalue_contour_has_rank_two() {
    let op = zero_operator(16);
    let ctx = ProjectionContext::new(op).unwrap();
    let p = ctx.riesz_projection(c(2.0, 0.0), 1.5, DEFAULT_CONTOUR_M).unwrap();
    assert_eq!(p.rank_estimate, 2);
    // projection onto span{e₀, e₁}
    let mut expect = Mat::zeros(16, 16);
    expect[(0, 0)] = c(1.0, 0.0);
    expect[(1, 1)] = c(1.0, 0.0);
    assert!(p.matrix.sub(&expect).frobenius_norm() < 1e-9);
}

#[test]
fn contour_radius_independence() {
    let b = Potential::Gaussian { amplitude: 0.05, rate: 1.0 };
    let grid = default_grid(&b, 32).unwrap();
    let op = assemble(&b, 32, &grid).unwrap();
    let ctx = ProjectionContext::new(op).unwrap();
    let center = c(21.0, 0.0); // k = 10
    let p1 = ctx.riesz_projection(center, 0.25, DEFAULT_CONTOUR_M).unwrap();
    let p2 = ctx.riesz_projection(center, 0.5, DEFAULT_CONTOUR_M).unwrap();
    let d = p1.matrix.sub(&p2.matrix).frobenius_norm();
    assert!(d < 1e-8, "radius dependence {d:.3e}");
}

#[test]
fn projections_are_mutually_orthogonal_idempotents() {
    let b = Potential::Gaussian { amplitude: 0.05, rate: 1.0 };
    let grid = default_grid(&b, 32).unwrap();
    let op = assemble(&b, 32, &grid).unwrap();
    let ctx = ProjectionContext::new(op).unwrap();
    let pj = ctx.riesz_projection(c(17.0, 0.0), DEFAULT_PK_RADIUS, DEFAULT_CONTOUR_M).unwrap();
    let pk = ctx.riesz_projection(c(19.0, 0.0), DEFAULT_PK_RADIUS, DEFAULT_CONTOUR_M).unwrap();
    assert!(pj.idempotency_defect < 1e-7 * (1.0 + pj.norm_estimate.powi(2)));
    let cross = pj.matrix.matmul(&pk.matrix).frobenius_norm();
    assert!(cross < 1e-7, "P_j P_k = {cross:.3e}");
    let self_prod = pj.matrix.matmul(&pj.matrix).sub(&pj.matrix).frobenius_norm();
    assert!(self_prod < 1e-7);
}

#[test]
fn strip_projection_unperturbed() {
    let op = zero_operator(32);
    let ctx = ProjectionContext::new(op).unwrap();
    let region = build_enclosure(&synthetic_profile(vec![0.0; 16])).unwrap();
    let s = ctx.strip_projection(&region).unwrap();
    assert_eq!(s.rank_estimate, 1); // N* = 1: only λ₀ = 1 inside Π(2, ·)
    let mut expect = Mat::zeros(32, 32);
    expect[(0, 0)] = c(1.0, 0.0);
    assert!(s.matrix.sub(&expect).frobenius_norm() < 1e-9);
}

#[test]
fn localization_zero_potential_hits_disk_centers() {
    let op = zero_operator(32);
    let ctx = ProjectionContext::new(op).unwrap();
    let region = build_enclosure(&synthetic_profile(vec![0.0; 16])).unwrap();
    let report = localize(&ctx.eig_values, &region, 16);
    assert_eq!(report.violations, 0);
    assert!(report.strip_ok());
    for d in &report.disks {
        assert_eq!(d.count, 1);
        assert!(d.distance_from_center < 1e-10);
    }
}

#[test]
fn resolvent_solve_closed_forms() {
    // A = diag(1,3): (2 − A)⁻¹ e₀ = e₀
    let op = zero_operator(2);
    let rhs = Mat::from_fn(2, 1, |i, _| c(if i == 0 { 1.0 } else { 0.0 }, 0.0));
    let x = lu_solve(c(2.0, 0.0), &op, &rhs).unwrap();
    assert!((x[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
    assert!(x[(1, 0)].norm() < 1e-14);

    // R⁰(z) h_k = h_k / (z − (2k+1))
    let op = zero_operator(8);
    let z = c(4.5, 1.0);
    let rhs = Mat::identity(8);
    let x = lu_solve(z, &op, &rhs).unwrap();
    for k in 0..8 {
        let expect = c(1.0, 0.0) / (z - c((2 * k + 1) as f64, 0.0));
        assert!((x[(k, k)] - expect).norm() < 1e-13);
    }

    // solving at an eigenvalue is a pole error
    assert!(lu_solve(c(3.0, 0.0), &op, &rhs).is_err());
}

#[test]
fn resolvent_scan_unperturbed_disk_boundary() {
    let op = zero_operator(24);
    let ctx = ProjectionContext::new(op).unwrap();
    let region = build_enclosure(&synthetic_profile(vec![0.0; 16])).unwrap();
    // distance exactly 1/16 from an eigenvalue: ‖R⁰‖ = 16
    let samples = vec![c(9.0 + 1.0 / 16.0, 0.0), c(15.0, 0.5)];
    let report = resolvent_bound_scan(&ctx, &region, &samples, &[5]).unwrap();
    assert!((report.max_resolvent_norm - 16.0).abs() < 1e-6);
    assert!(report.resolvent_ok);
    // for b ≡ 0 the kernel integral is Σ_{k≠n} P⁰_k/(λ⁰_k − λ⁰_n): norm 1/2
    let (n, v) = report.deviation_kernel_norms[0];
    assert_eq!(n, 5);
    assert!((v - 0.5).abs() < 1e-8, "kernel norm {v}");
    assert!(report.kernel_ok);
}

#[test]
fn scan_sample_generator_stays_outside_region() {
    let region = EnclosureRegion {
        n_star: 3,
        y: 0.4,
        j: 2,
        b_norm: 0.05,
        disk_radius: 1.0 / 16.0,
    };
    let pts = scan_samples(&region, 64, 200);
    assert!(pts.len() >= 200);
    for z in &pts {
        assert!(!region.contains(*z), "sample {z} inside region");
    }
}

#[test]
fn deviation_identity_rank_one_perturbation() {
    // B = ε e₀ e₁ᵀ on N = 64: closed forms P₁ − P⁰₁ = (ε/2) e₀ e₁ᵀ and
    // P₀ − P⁰₀ = −(ε/2) e₀ e₁ᵀ
    let eps = 0.01;
    let n = 64;
    let mut m = Mat::zeros(n, n);
    for j in 0..n {
        m[(j, j)] = c((2 * j + 1) as f64, 0.0);
    }
    m[(0, 1)] = c(eps, 0.0);
    let op = TruncatedOperator {
        n,
        matrix: m,
        source: osc_spectra::assembly::SourceDescriptor::Pointwise(Potential::Zero),
        grid: None,
        assembly_rtol: 0.0,
        max_rel_discrepancy: 0.0,
    };
    let ctx = ProjectionContext::new(op).unwrap();
    for (idx, sign) in [(1usize, 1.0f64), (0usize, -1.0f64)] {
        let chk =
            deviation_identity_check(&ctx, idx, DEFAULT_DEVIATION_RADIUS, DEFAULT_CONTOUR_M)
                .unwrap();
        assert!(
            chk.discrepancy <= 1e-6,
            "n={idx}: identity discrepancy {:.3e}",
            chk.discrepancy
        );
        // compare the left side against the closed form
        let p = ctx
            .riesz_projection(c((2 * idx + 1) as f64, 0.0), DEFAULT_DEVIATION_RADIUS, DEFAULT_CONTOUR_M)
            .unwrap();
        let mut expect = Mat::zeros(n, n);
        expect[(idx, idx)] = c(1.0, 0.0);
        expect[(0, 1)] = c(sign * eps / 2.0, 0.0);
        if idx == 1 {
            expect[(1, 1)] = c(1.0, 0.0);
            expect[(idx, idx)] = c(1.0, 0.0);
            expect[(0, 0)] = c(0.0, 0.0);
        }
        let err = p.matrix.sub(&expect).frobenius_norm();
        assert!(err < 1e-9, "P_{idx} off closed form by {err:.3e}");
        assert!(chk.deviation_norm <= chk.triangle_bound + 1e-6);
    }
}

#[test]
fn deviation_identity_smooth_potential() {
    let b = Potential::Gaussian { amplitude: 0.05, rate: 1.0 };
    let grid = default_grid(&b, 64).unwrap();
    let op = assemble(&b, 64, &grid).unwrap();
    let ctx = ProjectionContext::new(op).unwrap();
    for n in [12usize, 14, 20] {
        let chk =
            deviation_identity_check(&ctx, n, DEFAULT_DEVIATION_RADIUS, DEFAULT_CONTOUR_M)
                .unwrap();
        assert!(
            chk.discrepancy <= 1e-6,
            "n={n}: discrepancy {:.3e}",
            chk.discrepancy
        );
        assert!(chk.deviation_norm <= chk.triangle_bound + 1e-6);
    }
}

#[test]
fn deviation_sums_zero_potential_vanish() {
    let op = zero_operator(24);
    let ctx = ProjectionContext::new(op).unwrap();
    let region = build_enclosure(&synthetic_profile(vec![0.0; 16])).unwrap();
    let mut f = vec![c(0.0, 0.0); 24];
    f[0] = c(1.0, 0.0);
    let sums = deviation_sums(&ctx, &region, &f, 1, 12, DEFAULT_DEVIATION_RADIUS, 32).unwrap();
    assert!(sums.final_sum <= 1e-12, "sum {:.3e}", sums.final_sum);
}

#[test]
fn deviation_sums_smooth_potential_below_half() {
    let b = Potential::Gaussian { amplitude: 0.05, rate: 1.0 };
    let grid = default_grid(&b, 64).unwrap();
    let op = assemble(&b, 64, &grid).unwrap();
    let profile = v_norm_profile(&b, 200, &default_grid(&b, 200).unwrap()).unwrap();
    let region = build_enclosure(&profile).unwrap();
    let ctx = ProjectionContext::new(op).unwrap();
    let n_trust = 32;
    let mut f = vec![c(0.0, 0.0); 64];
    f[0] = c(1.0, 0.0);
    let sums = deviation_sums(
        &ctx,
        &region,
        &f,
        region.n_star,
        n_trust,
        DEFAULT_DEVIATION_RADIUS,
        DEFAULT_CONTOUR_M,
    )
    .unwrap();
    assert!(sums.final_sum <= 0.5, "deviation sum {:.3e}", sums.final_sum);
    // deviations trend downward along n for a decaying profile
    let devs: Vec<f64> = sums.per_mode.iter().map(|m| m.deviation_norm).collect();
    let first_third: f64 = devs[..devs.len() / 3].iter().sum::<f64>();
    let last_third: f64 = devs[devs.len() - devs.len() / 3..].iter().sum::<f64>();
    assert!(
        last_third < first_third,
        "deviations do not decay: head {first_third:.3e} tail {last_third:.3e}"
    );
}

#[test]
fn decomposition_residual_unperturbed_basis_vector() {
    let op = zero_operator(32);
    let ctx = ProjectionContext::new(op).unwrap();
    let region = build_enclosure(&synthetic_profile(vec![0.0; 16])).unwrap();
    let mut f = vec![c(0.0, 0.0); 32];
    f[3] = c(1.0, 0.0);
    let r = decomposition_residual(&ctx, &region, &f, 16, 32, 20, 0xfeed).unwrap();
    assert!(r.residual < 1e-9, "residual {:.3e}", r.residual);
    assert!(r.reorder_spread < 1e-12, "spread {:.3e}", r.reorder_spread);
}

#[test]
fn decomposition_residual_smooth_potential() {
    let n = 128usize;
    let b = Potential::Gaussian { amplitude: 0.05, rate: 1.0 };
    let grid = default_grid(&b, n).unwrap();
    let op = assemble(&b, n, &grid).unwrap();
    let profile = v_norm_profile(&b, 200, &default_grid(&b, 200).unwrap()).unwrap();
    let region = build_enclosure(&profile).unwrap();
    let ctx = ProjectionContext::new(op).unwrap();
    let n_trust = n / 2;
    // random real vector supported well below n_trust: support close to the
    // summation cutoff would leak into the first excluded eigenvectors
    // through the (slowly decaying) mode coupling of the perturbation
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    let mut f = vec![c(0.0, 0.0); n];
    for x in f.iter_mut().take(n_trust / 2) {
        *x = c(rng.gen::<f64>() - 0.5, 0.0);
    }
    let norm = osc_spectra::linalg::norm2(&f);
    for x in f.iter_mut() {
        *x /= norm;
    }
    let r = decomposition_residual(&ctx, &region, &f, n_trust, DEFAULT_CONTOUR_M, 20, 1).unwrap();
    assert!(r.residual < 1e-6, "residual {:.3e}", r.residual);
}

#[test]
fn decomposition_residual_rejects_untrusted_support() {
    let op = zero_operator(16);
    let ctx = ProjectionContext::new(op).unwrap();
    let region = build_enclosure(&synthetic_profile(vec![0.0; 16])).unwrap();
    let mut f = vec![c(0.0, 0.0); 16];
    f[15] = c(1.0, 0.0);
    assert!(decomposition_residual(&ctx, &region, &f, 8, 32, 4, 2).is_err());
}

#[test]
fn localization_with_smooth_small_potential() {
    let b = Potential::Gaussian { amplitude: 0.05, rate: 1.0 };
    let grid = default_grid(&b, 128).unwrap();
    let op = assemble(&b, 128, &grid).unwrap();
    let trust = truncation_trust_index(&op).unwrap();
    let profile = v_norm_profile(&b, 300, &default_grid(&b, 300).unwrap()).unwrap();
    let region = build_enclosure(&profile).unwrap();
    assert!(region.n_star <= 16, "N* = {}", region.n_star);
    let ctx = ProjectionContext::new(op).unwrap();
    let report = localize(&ctx.eig_values, &region, trust.n_trust);
    assert_eq!(report.violations, 0, "{report:?}");
    assert!(report.strip_ok());
    assert!(!report.range_empty);
}
