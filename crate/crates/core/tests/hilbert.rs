//! Discrete Hilbert transform tests: closed-form actions, the averaged
//! product condition, the dyadic weight construction, kernel-decay sums, and
//! weighted norm estimates.

use num_complex::Complex64;
use osc_spectra::hilbert::{
    a2_condition, apply_g, construct_weight, dyadic_series_partial_sums, psi_from_profile,
    r_sum_check, try_apply_g_tau, vector_valued_apply, vector_valued_norm_estimate,
    weighted_norm_estimate, weighted_section, ShiftSequence, TransformKind, WeightSequence,
};
use osc_spectra::linalg::{matrix_norm, norm2, Mat};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn e(k: usize, len: usize) -> Vec<Complex64> {
    let mut v = vec![c(0.0, 0.0); len];
    v[k] = c(1.0, 0.0);
    v
}

#[test]
fn transform_of_first_basis_vector() {
    let out = apply_g(&e(0, 1), 8);
    assert_eq!(out[0], c(0.0, 0.0));
    for n in 1..8 {
        assert_eq!(out[n], c(-1.0 / n as f64, 0.0));
    }
}

#[test]
fn transform_is_linear_on_basis_pair() {
    let mut xi = e(0, 2);
    xi[1] = c(1.0, 0.0);
    let out = apply_g(&xi, 8);
    assert_eq!(out[0], c(1.0, 0.0));
    assert_eq!(out[1], c(-1.0, 0.0));
    for n in 2..8 {
        let expect = -1.0 / n as f64 - 1.0 / (n as f64 - 1.0);
        assert!((out[n] - c(expect, 0.0)).norm() < 1e-15);
    }
}

#[test]
fn plain_norm_estimate_stays_below_pi() {
    let w = WeightSequence::constant(2048);
    let est = weighted_norm_estimate(&TransformKind::Plain, &w, 2048, 300, 7).unwrap();
    assert!(est.value <= std::f64::consts::PI + 0.01, "‖G‖ = {}", est.value);
    // the 2048-section norm is 3.13594…, well on its way to π
    assert!(est.value > 3.12, "estimate too low: {}", est.value);
}

#[test]
fn zero_shift_reduces_to_plain_transform() {
    let xi: Vec<Complex64> = (0..16).map(|k| c((k as f64).sin(), 0.3 * k as f64)).collect();
    let tau = ShiftSequence::zero(16);
    let a = apply_g(&xi, 16);
    let b = try_apply_g_tau(&xi, &tau, 16).unwrap();
    for (x, y) in a.iter().zip(b.iter()) {
        assert_eq!(x, y);
    }
}

#[test]
fn shifted_transform_of_basis_vector() {
    let tau = ShiftSequence::constant(c(1.0 / 16.0, 0.0), 1);
    let out = try_apply_g_tau(&e(0, 6), &tau, 6).unwrap();
    for (n, v) in out.iter().enumerate() {
        if n == 0 {
            continue;
        }
        let expect = 1.0 / (1.0 / 16.0 - n as f64);
        assert!((v - c(expect, 0.0)).norm() < 1e-15, "n={n}");
    }
}

#[test]
fn exact_pole_collision_is_domain_error() {
    // τ_0 = 1 puts the k=0 pole exactly on n=1
    let tau = ShiftSequence::constant(c(1.0, 0.0), 1);
    assert!(try_apply_g_tau(&e(0, 4), &tau, 4).is_err());
}

#[test]
fn difference_bound_for_small_shifts() {
    // ‖G − G_τ‖ ≤ 2 Σ_{t≥1} t^{-2} = π²/3 for any |τ| ≤ 1/16 on the flat
    // weight; compare the numerical norm of the difference section
    let n = 1024;
    let tau = ShiftSequence::constant(c(1.0 / 16.0, 0.0), n);
    let w = WeightSequence::constant(n);
    let g = weighted_section(&TransformKind::Plain, &w, n).unwrap();
    let gt = weighted_section(&TransformKind::Shifted(&tau), &w, n).unwrap();
    let diff = g.sub(&gt);
    let nd = matrix_norm(&diff, 5);
    let bound = std::f64::consts::PI.powi(2) / 3.0;
    assert!(nd <= bound, "‖G−G_τ‖ = {nd} > {bound}");
    assert!(nd > 0.0);
}

#[test]
fn a2_of_flat_weight_is_exactly_one() {
    for scan in [4usize, 64, 1000] {
        let w = WeightSequence::constant(scan);
        assert_eq!(a2_condition(&w, scan).unwrap(), 1.0);
    }
}

#[test]
fn a2_of_square_root_weight_plateaus() {
    let w = WeightSequence::power(0.5, 16384);
    let m1 = a2_condition(&w, 4096).unwrap();
    let m2 = a2_condition(&w, 8192).unwrap();
    let m3 = a2_condition(&w, 16384).unwrap();
    assert!(m2 >= m1 && m3 >= m2, "scan monotonicity violated");
    let growth = (m3 - m2) / m2;
    assert!(growth < 0.01, "no plateau: {m1} {m2} {m3}");
    assert!(m3 < 2.0, "A₂ constant unexpectedly large: {m3}");
}

#[test]
fn a2_of_geometric_weight_diverges() {
    let w = WeightSequence::geometric(64);
    let m1 = a2_condition(&w, 32).unwrap();
    let m2 = a2_condition(&w, 64).unwrap();
    assert!(m2 > 1.5 * m1, "geometric weight should fail the condition: {m1} vs {m2}");
}

#[test]
fn constructed_weight_from_linear_psi() {
    // ψ(k) = k+1, R = 3: blocks T = 0, 1, 4, 13, 40, 121, …
    let psi: Vec<f64> = (0..1000).map(|k| (k + 1) as f64).collect();
    let w = construct_weight(&psi, 3.0, 1000).unwrap();
    let blocks = w.blocks.as_ref().unwrap();
    assert_eq!(&blocks.breakpoints[..6], &[0, 1, 4, 13, 40, 121]);
    for (j, &v) in w.values().iter().enumerate() {
        assert!(v <= psi[j], "W({j}) = {v} > ψ = {}", psi[j]);
    }
    for g in blocks.gaps.windows(2) {
        assert!(g[1] as f64 >= 3.0 * g[0] as f64, "gap ratio violated: {g:?}");
    }
}

#[test]
fn constructed_weight_from_geometric_psi_has_slack() {
    let psi: Vec<f64> = (0..200).map(|k| 2.0f64.powi(k.min(1000))).collect();
    let w = construct_weight(&psi, 2.5, 200).unwrap();
    for (j, &v) in w.values().iter().enumerate() {
        assert!(v <= psi[j]);
    }
    // plenty of slack: W stays below ψ by at least a factor 2 past the head
    let tail_ok = (50..200).all(|j| w.value(j) * 2.0 <= psi[j]);
    assert!(tail_ok);
}

#[test]
fn construct_weight_degenerate_psi_warns() {
    let psi = vec![1.5f64; 64]; // never reaches 2
    let w = construct_weight(&psi, 3.0, 64).unwrap();
    assert!(w.blocks.as_ref().unwrap().truncated);
    assert!(w.values().iter().all(|&v| v == 1.0));
}

#[test]
fn construct_weight_validates_ratio() {
    let psi: Vec<f64> = (0..10).map(|k| (k + 1) as f64).collect();
    assert!(construct_weight(&psi, 2.0, 10).is_err());
}

#[test]
fn r_sum_flat_weight_partial_sums() {
    let w = WeightSequence::constant(4096);
    let r = r_sum_check(&w, 512);
    assert!(r.r.iter().all(|&v| v == 1.0));
    // Σ_{n=0}^{512} 1/(1+n)² approaches π²/6 from below
    let last = *r.partial_sums.last().unwrap();
    let limit = std::f64::consts::PI.powi(2) / 6.0;
    assert!(last < limit && last > limit - 2.5e-3, "partial sum {last}");
}

#[test]
fn r_sum_dyadic_envelope_holds() {
    let psi: Vec<f64> = (0..2000).map(|k| (k + 1) as f64).collect();
    let w = construct_weight(&psi, 3.0, 2000).unwrap();
    let r = r_sum_check(&w, 256);
    assert_eq!(r.envelope_ok, Some(true));
    // β = R²/t₂ = 9/3 = 3, γ = log 2/log 3
    assert!((r.beta.unwrap() - 3.0).abs() < 1e-12);
    assert!((r.gamma.unwrap() - 0.6309297535714574).abs() < 1e-12);
}

#[test]
fn r_values_match_brute_force_for_monotone_weight() {
    let w = WeightSequence::power(0.7, 300);
    let r = r_sum_check(&w, 16);
    for n in 0..=16usize {
        let mut brute = 0.0f64;
        for i in 0..300 - n {
            brute = brute.max(w.value(i + n) * w.inv(i));
        }
        assert!((r.r[n] - brute).abs() < 1e-15, "n={n}");
    }
}

#[test]
fn dyadic_series_bound() {
    // s = Σ W(j)(1+j)^{-2} ≤ t₁ + 2R/(R−2)
    let psi: Vec<f64> = (0..3000).map(|k| (k + 1) as f64).collect();
    let w = construct_weight(&psi, 3.0, 3000).unwrap();
    let blocks = w.blocks.as_ref().unwrap();
    let bound = blocks.gaps[0] as f64 + 2.0 * 3.0 / (3.0 - 2.0);
    let sums = dyadic_series_partial_sums(&w);
    assert!(sums.iter().all(|&s| s <= bound), "series bound violated");
}

#[test]
fn weighted_norm_estimate_flat_weight_reduces_to_plain() {
    let w = WeightSequence::constant(512);
    let est = weighted_norm_estimate(&TransformKind::Plain, &w, 512, 200, 3).unwrap();
    assert!(est.value <= std::f64::consts::PI + 0.01);
}

#[test]
fn weighted_norm_estimate_power_weight_plateaus() {
    let w = WeightSequence::power(0.5, 2048);
    let e1 = weighted_norm_estimate(&TransformKind::Plain, &w, 512, 200, 3).unwrap();
    let e2 = weighted_norm_estimate(&TransformKind::Plain, &w, 1024, 200, 3).unwrap();
    let e3 = weighted_norm_estimate(&TransformKind::Plain, &w, 2048, 200, 3).unwrap();
    assert!(e3.value < 1.05 * e2.value, "{} {} {}", e1.value, e2.value, e3.value);
    assert!(e3.value < 8.0);
}

#[test]
fn weighted_norm_estimate_dyadic_with_shift_is_finite() {
    let psi: Vec<f64> = (0..1024).map(|k| (k + 1) as f64).collect();
    let w = construct_weight(&psi, 3.0, 1024).unwrap();
    let tau = ShiftSequence::constant(c(1.0 / 16.0, 0.0), 1024);
    let est =
        weighted_norm_estimate(&TransformKind::Shifted(&tau), &w, 1024, 200, 3).unwrap();
    assert!(est.value.is_finite() && est.value < 12.0, "est {}", est.value);
}

#[test]
fn vector_valued_single_column_matches_scalar() {
    let n = 64;
    let tau = ShiftSequence::constant(c(0.05, 0.0), n);
    let xi: Vec<Complex64> = (0..n).map(|k| c((k as f64 * 0.37).cos(), 0.1)).collect();
    let mut m = Mat::zeros(n, 1);
    for i in 0..n {
        m[(i, 0)] = xi[i];
    }
    let out = vector_valued_apply(&m, &tau).unwrap();
    let scalar = try_apply_g_tau(&xi, &tau, n).unwrap();
    for i in 0..n {
        assert_eq!(out[(i, 0)], scalar[i]);
    }
}

#[test]
fn vector_valued_norm_is_pythagorean_on_orthogonal_columns() {
    let n = 64;
    let tau = ShiftSequence::constant(c(1.0 / 16.0, 0.0), n);
    // columns supported on disjoint index sets
    let mut m = Mat::zeros(n, 2);
    for i in 0..n / 2 {
        m[(i, 0)] = c(1.0 / (1.0 + i as f64), 0.0);
        m[(n / 2 + i, 1)] = c(0.5 / (1.0 + i as f64), 0.0);
    }
    let out = vector_valued_apply(&m, &tau).unwrap();
    let c0: Vec<Complex64> = (0..n).map(|i| out[(i, 0)]).collect();
    let c1: Vec<Complex64> = (0..n).map(|i| out[(i, 1)]).collect();
    let total: f64 = out.frobenius_norm();
    let pythag = (norm2(&c0).powi(2) + norm2(&c1).powi(2)).sqrt();
    assert!((total - pythag).abs() < 1e-10);
}

#[test]
fn vector_valued_norm_estimate_matches_scalar_bound() {
    let n = 512;
    let psi: Vec<f64> = (0..n).map(|k| (k + 1) as f64).collect();
    let w = construct_weight(&psi, 3.0, n).unwrap();
    let tau = ShiftSequence::constant(c(1.0 / 16.0, 0.0), n);
    // reference: exact section norm; the block estimate is a lower bound
    let scalar = osc_spectra::hilbert::weighted_norm_exact(&TransformKind::Shifted(&tau), &w, n)
        .unwrap();
    let vector = vector_valued_norm_estimate(&w, &tau, n, 16, 250, 11).unwrap();
    assert!(
        vector.value <= scalar + 1e-8,
        "vector {} vs scalar {}",
        vector.value,
        scalar
    );
    // and the two routes agree to iteration accuracy
    assert!(scalar - vector.value < 1e-2, "estimates far apart");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn kernel_antisymmetry(support in prop::collection::vec(-3.0f64..3.0, 2..12)) {
        // ⟨Gξ, η⟩ = −⟨ξ, Gη⟩ for real finitely supported sequences
        let n = support.len() + 6;
        let xi: Vec<Complex64> = support.iter().map(|&v| c(v, 0.0))
            .chain(std::iter::repeat_n(c(0.0,0.0), 6)).collect();
        let eta: Vec<Complex64> = support.iter().rev().map(|&v| c(0.5*v - 1.0, 0.0))
            .chain(std::iter::repeat_n(c(0.0,0.0), 6)).collect();
        let gxi = apply_g(&xi, n);
        let geta = apply_g(&eta, n);
        let lhs: f64 = gxi.iter().zip(eta.iter()).map(|(a, b)| (a * b.conj()).re).sum();
        let rhs: f64 = xi.iter().zip(geta.iter()).map(|(a, b)| (a * b.conj()).re).sum();
        prop_assert!((lhs + rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
    }
}

#[test]
fn psi_from_profile_is_reciprocal_sup_tail() {
    let profile = vec![0.5, 0.2, 0.3, 0.1, 0.05];
    let psi = psi_from_profile(&profile);
    assert!((psi[0] - 2.0).abs() < 1e-15); // sup tail from 0 is 0.5
    assert!((psi[1] - 1.0 / 0.3).abs() < 1e-15);
    assert!((psi[4] - 20.0).abs() < 1e-15);
}
