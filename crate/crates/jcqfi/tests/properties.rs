use std::f64::consts::{E, PI};

use jcqfi::asymptotic::{self, build_asymptotic_channel, optimal_revival_qfi, qfi_revival, qfi_short_time};
use jcqfi::bloch::{fi_population, qfi_bloch, qfi_sld, sld, BlochState, DensityMatrix2};
use jcqfi::collision::{compose_n, composed_qfi, optimal_sequence_numeric};
use jcqfi::fock::{choose_cutoff, coherent_vector, d_alpha_ket, poisson_expect, DEFAULT_TAIL_TOL};
use jcqfi::jc_channel::{apply_channel, default_cutoff, gram_matrix, gram_with_derivative, qfi_jc, AffineChannel};
use jcqfi::limits::covariant_channel;
use jcqfi::lindblad::{evolve_master, qfi_rate, steady_state};
use jcqfi::oracle::{joint_evolve, joint_evolve_expm, qfi_finite_difference, reduced_state};
use nalgebra::Vector3;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn ball_point() -> impl Strategy<Value = Vector3<f64>> {
    (0.0..1.0f64, 0.0..PI, 0.0..2.0 * PI).prop_map(|(r, th, ph)| {
        let r = r.cbrt();
        Vector3::new(r * th.sin() * ph.cos(), r * th.sin() * ph.sin(), r * th.cos())
    })
}

fn real_pure() -> impl Strategy<Value = BlochState> {
    (0.0..2.0 * PI).prop_map(|t| BlochState::new(t.sin(), 0.0, t.cos()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn qfi_is_nonnegative(r in ball_point(), dr in prop::array::uniform3(-5.0..5.0f64)) {
        prop_assume!(1.0 - r.norm_squared() > 1e-9);
        let s = BlochState::new(r.x, r.y, r.z).with_derivative(Vector3::from(dr));
        prop_assert!(qfi_bloch(&s).unwrap() >= 0.0);
    }

    #[test]
    fn population_fi_is_below_qfi(r in ball_point(), dr in prop::array::uniform3(-2.0..2.0f64)) {
        prop_assume!(1.0 - r.norm_squared() > 1e-6);
        let s = BlochState::new(r.x, r.y, r.z).with_derivative(Vector3::from(dr));
        let fi = fi_population(r.z, dr[2]).unwrap();
        prop_assert!(fi <= qfi_bloch(&s).unwrap() * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn sld_solves_the_lyapunov_equation(r in ball_point(), dr in prop::array::uniform3(-2.0..2.0f64)) {
        prop_assume!(1.0 - r.norm() > 1e-3);
        let d = Vector3::from(dr);
        let rho = DensityMatrix2::from_bloch(&r);
        let drho = DensityMatrix2::from_bloch_with_trace(0.0, &d);
        let l = sld(&rho, &drho).unwrap();
        let res = (l.m * rho.m + rho.m * l.m) * C64::new(0.5, 0.0) - drho.m;
        prop_assert!(res.iter().map(|c| c.norm()).fold(0.0, f64::max) < 1e-10);
        let q = qfi_bloch(&BlochState::new(r.x, r.y, r.z).with_derivative(d)).unwrap();
        prop_assert!((qfi_sld(&rho, &drho).unwrap() - q).abs() < 1e-8 * (1.0 + q));
    }

    #[test]
    fn qfi_matches_bures_finite_difference(
        a in 0.2..2.0f64, b in 0.0..PI, c in 0.1..0.6f64, w in 0.3..1.5f64, theta in -1.0..1.0f64,
    ) {
        // Smooth mixed family with rotating direction and breathing length.
        let fam = |t: f64| {
            let len = 0.5 + c * (w * t).sin() * 0.5;
            Vector3::new(len * (a * t + b).sin() * 0.8, len * 0.6, len * (a * t + b).cos() * 0.8)
        };
        let h = 1e-6;
        let dr = (fam(theta + h) - fam(theta - h)) / (2.0 * h);
        let r = fam(theta);
        let q = qfi_bloch(&BlochState::new(r.x, r.y, r.z).with_derivative(dr)).unwrap();
        let fd = qfi_finite_difference(|t| Ok(DensityMatrix2::from_bloch(&fam(t))), theta, 1e-2).unwrap();
        prop_assert!((q - fd).abs() < 1e-5 * (1.0 + q), "{} {}", q, fd);
    }

    #[test]
    fn coherent_norm_plus_tail(alpha in 0.0..60.0f64) {
        let v = coherent_vector(alpha, choose_cutoff(alpha, DEFAULT_TAIL_TOL)).unwrap();
        prop_assert!((v.norm_squared() + v.tail_mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn poisson_moments(alpha in 0.1..30.0f64) {
        let n = choose_cutoff(alpha, 1e-16);
        let a2 = alpha * alpha;
        let m0 = poisson_expect(alpha, |_| 1.0, n).unwrap();
        let m1 = poisson_expect(alpha, |k| k as f64, n).unwrap();
        let m2 = poisson_expect(alpha, |k| (k * k) as f64, n).unwrap();
        prop_assert!((m0 - 1.0).abs() < 1e-10);
        prop_assert!((m1 / a2 - 1.0).abs() < 1e-10);
        prop_assert!((m2 / (a2 * a2 + a2) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gram_preserves_trace(alpha in 0.0..20.0f64, tau in 0.0..200.0f64) {
        let g = gram_matrix(alpha, tau, default_cutoff(alpha));
        prop_assert!(g.trace_residual() < 1e-10);
    }

    #[test]
    fn channel_output_is_a_state(alpha in 0.0..10.0f64, tau in 0.0..60.0f64, r in ball_point()) {
        let g = gram_matrix(alpha, tau, default_cutoff(alpha));
        let out = apply_channel(&g, &DensityMatrix2::from_bloch(&r));
        let (lo, hi) = out.eigenvalues();
        prop_assert!(lo >= -1e-10 && hi <= 1.0 + 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn global_bound(alpha in 0.0..10.0f64, tau in 0.0..50.0f64, excited in any::<bool>()) {
        let init = if excited { BlochState::excited() } else { BlochState::ground() };
        prop_assert!(qfi_jc(alpha, tau, &init).unwrap() <= 4.0 + 1e-8);
    }

    #[test]
    fn gram_channel_equals_partial_trace(alpha in 0.0..6.0f64, tau in 0.0..30.0f64, init in real_pure()) {
        let n = choose_cutoff(alpha, 1e-18);
        let field = coherent_vector(alpha, n).unwrap();
        let oracle = reduced_state(&joint_evolve(tau, &init, &field).unwrap());
        let g = gram_matrix(alpha, tau, default_cutoff(alpha));
        let ours = apply_channel(&g, &init.density());
        prop_assert!(ours.max_abs_diff(&oracle) < 1e-10);
    }

    #[test]
    fn gram_derivative_matches_finite_difference(alpha in 0.05..6.0f64, tau in 0.0..30.0f64) {
        let n = default_cutoff(alpha + 1e-3);
        let dg = gram_with_derivative(alpha, tau, n).unwrap().dg.unwrap();
        let h = 1e-5 * alpha.max(1.0);
        let fd = (gram_matrix(alpha + h, tau, n).g - gram_matrix(alpha - h, tau, n).g) / (2.0 * h);
        prop_assert!((dg - fd).abs().max() <= 1e-6 * (1.0 + dg.abs().max()));
    }

    #[test]
    fn joint_evolution_conserves_norm(alpha in 0.0..6.0f64, tau in 0.0..50.0f64, init in real_pure()) {
        let field = coherent_vector(alpha, default_cutoff(alpha)).unwrap();
        let s = joint_evolve(tau, &init, &field).unwrap();
        prop_assert!((s.norm_squared() - field.norm_squared()).abs() < field.tail_mass + 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn evolution_routes_agree(alpha in 0.0..4.0f64, tau in 0.0..20.0f64, init in real_pure()) {
        let field = coherent_vector(alpha, choose_cutoff(alpha, 1e-16)).unwrap();
        let a = joint_evolve(tau, &init, &field).unwrap();
        let b = joint_evolve_expm(tau, &init, &field).unwrap();
        prop_assert!(a.max_abs_diff(&b) < 1e-8);
    }

    #[test]
    fn composed_qfi_is_additive_bounded(alpha in 0.5..20.0f64, tau in 0.05..2.0f64, n in 1usize..12) {
        let q = composed_qfi(alpha, tau, n, &BlochState::ground()).unwrap();
        prop_assert!(q <= 4.0 * n as f64 + 1e-6);
    }

    #[test]
    fn lindblad_stays_physical(eps in 0.0..5.0f64, s in 0.0..30.0f64, r in ball_point()) {
        let st = evolve_master(eps, s, &BlochState::new(r.x, r.y, r.z)).unwrap();
        prop_assert!(st.r.norm() <= 1.0 + 1e-10);
    }

    #[test]
    fn lindblad_sensitivity_matches_finite_difference(eps in 0.0..5.0f64, s in 0.0..20.0f64, r in ball_point()) {
        let init = BlochState::new(r.x, r.y, r.z);
        let h = 1e-5;
        let st = evolve_master(eps, s, &init).unwrap();
        let fd = (evolve_master(eps + h, s, &init).unwrap().r - evolve_master(eps - h, s, &init).unwrap().r) / (2.0 * h);
        prop_assert!((fd - st.dr.unwrap()).norm() < 1e-6);
    }

    #[test]
    fn asymptotic_amplitudes_and_ball(alpha in 10.0..200.0f64, tau in 0.0..5e4f64) {
        let ch = build_asymptotic_channel(alpha, tau, None).unwrap();
        for t in &ch.fast_terms {
            prop_assert!((0.0..=1.0).contains(&t.q));
        }
        for t in &ch.slow_terms {
            prop_assert!((0.0..=1.0).contains(&t.p));
        }
        let aff = ch.affine();
        for k in 0..6 {
            let mut r = Vector3::zeros();
            r[k / 2] = if k % 2 == 0 { 1.0 } else { -1.0 };
            let out = aff.a * r + aff.b;
            prop_assert!(out.norm() <= 1.0 + 1e-6, "axis {} -> {}", k, out.norm());
        }
    }

    #[test]
    fn short_time_bound(tau in 0.0..10.0f64) {
        prop_assert!(qfi_short_time(tau) <= 4.0 / E + 1e-12);
    }
}

#[test]
fn identity_composition_for_all_n() {
    let init = BlochState::new(0.3, -0.1, 0.5);
    for n in [0, 1, 7, 100] {
        let s = compose_n(&AffineChannel::identity(), &init, n).unwrap();
        assert_eq!(s.r, init.r);
        assert_eq!(s.dr.unwrap(), Vector3::zeros());
    }
}

#[test]
fn derivative_ket_orthonormal() {
    for &a in &[0.1, 1.0, 5.0, 20.0] {
        let n = choose_cutoff(a, DEFAULT_TAIL_TOL);
        let c = coherent_vector(a, n).unwrap();
        let d = d_alpha_ket(a, n).unwrap();
        assert!((d.norm_squared() - 1.0).abs() < 1e-10);
        assert!(c.dot(&d).abs() < 1e-10);
    }
}

#[test]
fn revival_optimum_consistency() {
    for nu in 1..=6 {
        let o = optimal_revival_qfi(nu).unwrap();
        let a = 80.0;
        let centre = 2.0 * PI * a * nu as f64;
        assert!((qfi_revival(a, centre + o.tau_offset, nu) - o.qfi).abs() < 1e-10);
    }
}

#[test]
fn short_time_equality_only_at_one() {
    assert!((qfi_short_time(1.0) - 4.0 / E).abs() < 1e-15);
    for &t in &[0.9, 0.99, 1.01, 1.2] {
        assert!(qfi_short_time(t) < 4.0 / E);
    }
}

#[test]
fn covariant_equals_short_time_channel() {
    for &(a, t) in &[(20.0, 0.7), (100.0, 1.0), (50.0, 2.3)] {
        let cov = covariant_channel(a, t);
        let asy = asymptotic::AsymptoticChannel {
            slow_terms: vec![],
            ..build_asymptotic_channel(a, t, Some(0)).unwrap()
        }
        .affine();
        for (i, j) in [(0, 0), (0, 2), (2, 0), (2, 2)] {
            assert!((cov.a[(i, j)] - asy.a[(i, j)]).abs() < 1e-15);
            assert!((cov.da.unwrap()[(i, j)] - asy.da.unwrap()[(i, j)]).abs() < 1e-12);
        }
    }
}

#[test]
fn sequence_argmax() {
    for n in [1usize, 2, 4, 9, 16] {
        let m = optimal_sequence_numeric(n);
        assert!((m.x - 1.0 / (n as f64).sqrt()).abs() < 1e-6);
    }
}

#[test]
fn steady_state_is_long_time_limit() {
    for &e in &[0.0, 0.3, 1.0, 3.0] {
        let late = evolve_master(e, 60.0, &BlochState::excited()).unwrap();
        assert!((late.r - steady_state(e).r).norm() < 1e-8);
    }
}

#[test]
fn rate_below_four() {
    for &e in &[0.0, 0.2, 0.5, 1.0, 3.0] {
        for init in [BlochState::ground(), BlochState::excited()] {
            assert!(qfi_rate(e, &init).value <= 4.0 + 1e-6);
        }
    }
}

#[test]
fn late_window_peak_matches_oracle_derivative() {
    // A fast-revival interference peak inside the alpha = 20 late-revival window.
    let (a, t) = (20.0, 188008.05);
    let n = choose_cutoff(21.0, 1e-18);
    let r = |al: f64| {
        let f = coherent_vector(al, n).unwrap();
        reduced_state(&joint_evolve(t, &BlochState::ground(), &f).unwrap()).bloch()
    };
    let h = 1e-6;
    let dr = (r(a + h) - r(a - h)) / (2.0 * h);
    let r0 = r(a);
    let oracle = qfi_bloch(&BlochState::new(r0.x, r0.y, r0.z).with_derivative(dr)).unwrap();
    let exact = qfi_jc(a, t, &BlochState::ground()).unwrap();
    assert!((exact - oracle).abs() < 1e-8, "{exact} {oracle}");
    assert!(exact > 0.55);
}
