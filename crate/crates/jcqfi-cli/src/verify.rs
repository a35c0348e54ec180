//! Invariant and oracle-equivalence suite behind `jcqfi verify`.
//!
//! Every check reduces to a non-negative discrepancy compared against a
//! tolerance, so scaling all tolerances by zero demands exact agreement.

use std::f64::consts::{E, PI};

use jcqfi::asymptotic::{
    asymptotic_state, build_asymptotic_channel, optimal_revival_qfi, qfi_revival, qfi_short_time,
};
use jcqfi::bloch::{fi_population, qfi_bloch, qfi_sld, sld, BlochState, DensityMatrix2};
use jcqfi::collision::{
    compose_n, composed_qfi, continuous_limit_check, infinite_modes_limit, optimal_sequence_numeric,
};
use jcqfi::fock::{choose_cutoff, coherent_vector, d_alpha_ket, poisson_expect, DEFAULT_TAIL_TOL};
use jcqfi::jc_channel::{
    apply_channel, default_cutoff, gram_matrix, gram_with_derivative, qfi_jc, AffineChannel, JcChannel,
};
use jcqfi::limits::{covariant_channel, vacuum_series};
use jcqfi::lindblad::{closed_form_zero_field, evolve_master, qfi_lindblad, qfi_rate, steady_state};
use jcqfi::oracle::{joint_evolve, joint_evolve_expm, qfi_finite_difference, reduced_state};
use nalgebra::Vector3;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::commands::run_scan;
use crate::config::{Format, Initial, Mode, Range, SweepConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub seed: u64,
    pub tol_scale: f64,
    pub passed: usize,
    pub failed: usize,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.failed == 0
    }
}

struct Suite {
    scale: f64,
    checks: Vec<Check>,
}

impl Suite {
    fn record(&mut self, name: &str, value: f64, tolerance: f64) {
        let tolerance = tolerance * self.scale;
        // NaN discrepancies fail.
        let pass = value <= tolerance;
        self.checks.push(Check { name: name.into(), value, tolerance, pass });
    }
}

fn max_of(it: impl IntoIterator<Item = f64>) -> f64 {
    // A NaN anywhere poisons the maximum so it cannot hide behind a pass.
    it.into_iter().fold(0.0, |m: f64, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) })
}

fn ball_point(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    let r = rng.gen_range(0.0..1.0f64).cbrt();
    let th = rng.gen_range(0.0..PI);
    let ph = rng.gen_range(0.0..2.0 * PI);
    Vector3::new(r * th.sin() * ph.cos(), r * th.sin() * ph.sin(), r * th.cos())
}

fn real_pure(rng: &mut ChaCha8Rng) -> BlochState {
    let t = rng.gen_range(0.0..2.0 * PI);
    BlochState::new(t.sin(), 0.0, t.cos())
}

fn bloch_checks(s: &mut Suite, rng: &mut ChaCha8Rng) {
    let mut neg = 0.0f64;
    let mut fi_excess = 0.0f64;
    for _ in 0..10_000 {
        let r = ball_point(rng);
        if 1.0 - r.norm_squared() <= 1e-9 {
            continue;
        }
        let dr = Vector3::from_fn(|_, _| rng.gen_range(-5.0..5.0));
        let q = qfi_bloch(&BlochState::new(r.x, r.y, r.z).with_derivative(dr)).unwrap_or(f64::NAN);
        neg = max_of([neg, -q]);
        if 1.0 - r.norm_squared() > 1e-6 {
            let fi = fi_population(r.z, dr.z).unwrap_or(f64::NAN);
            fi_excess = max_of([fi_excess, (fi - q) / (1.0 + q)]);
        }
    }
    s.record("bloch.qfi_nonnegative", neg, 0.0);
    s.record("bloch.population_fi_below_qfi", fi_excess, 1e-12);

    let mut residual = 0.0f64;
    let mut sld_qfi = 0.0f64;
    for _ in 0..500 {
        let r = ball_point(rng);
        if 1.0 - r.norm() <= 1e-3 {
            continue;
        }
        let d = Vector3::from_fn(|_, _| rng.gen_range(-2.0..2.0));
        let rho = DensityMatrix2::from_bloch(&r);
        let drho = DensityMatrix2::from_bloch_with_trace(0.0, &d);
        let res = match sld(&rho, &drho) {
            Ok(l) => {
                let m = (l.m * rho.m + rho.m * l.m) * C64::new(0.5, 0.0) - drho.m;
                m.iter().map(|c| c.norm()).fold(0.0, f64::max)
            }
            Err(_) => f64::NAN,
        };
        let q = qfi_bloch(&BlochState::new(r.x, r.y, r.z).with_derivative(d)).unwrap_or(f64::NAN);
        let via_sld = qfi_sld(&rho, &drho).unwrap_or(f64::NAN);
        residual = max_of([residual, res]);
        sld_qfi = max_of([sld_qfi, (via_sld - q).abs() / (1.0 + q)]);
    }
    s.record("bloch.sld_lyapunov_residual", residual, 1e-10);
    s.record("bloch.sld_qfi_matches_bloch_form", sld_qfi, 1e-8);

    let mut fd_err = 0.0f64;
    for _ in 0..20 {
        let (a, b, c, w) = (rng.gen_range(0.2..2.0), rng.gen_range(0.0..PI), rng.gen_range(0.1..0.6), rng.gen_range(0.3..1.5));
        let theta = rng.gen_range(-1.0..1.0);
        let fam = move |t: f64| {
            let len = 0.5 + c * (w * t).sin() * 0.5;
            Vector3::new(len * (a * t + b).sin() * 0.8, len * 0.6, len * (a * t + b).cos() * 0.8)
        };
        let h = 1e-6;
        let dr = (fam(theta + h) - fam(theta - h)) / (2.0 * h);
        let r = fam(theta);
        let q = qfi_bloch(&BlochState::new(r.x, r.y, r.z).with_derivative(dr)).unwrap_or(f64::NAN);
        let fd = qfi_finite_difference(|t| Ok(DensityMatrix2::from_bloch(&fam(t))), theta, 1e-2).unwrap_or(f64::NAN);
        fd_err = max_of([fd_err, (q - fd).abs() / (1.0 + q)]);
    }
    s.record("bloch.bures_finite_difference", fd_err, 1e-5);
}

fn fock_checks(s: &mut Suite, rng: &mut ChaCha8Rng) {
    let mut alphas: Vec<f64> = vec![0.0, 1e-3, 0.5, 38.0, 100.0];
    alphas.extend((0..40).map(|_| rng.gen_range(0.0..60.0)));
    let norm = max_of(alphas.iter().map(|&a| match coherent_vector(a, choose_cutoff(a, DEFAULT_TAIL_TOL)) {
        Ok(v) => (v.norm_squared() + v.tail_mass - 1.0).abs(),
        Err(_) => f64::NAN,
    }));
    s.record("fock.norm_plus_tail", norm, 1e-12);

    let moments = max_of((0..30).map(|_| {
        let a: f64 = rng.gen_range(0.1..30.0);
        let n = choose_cutoff(a, 1e-16);
        let a2 = a * a;
        let m = |f: fn(usize) -> f64| poisson_expect(a, f, n).unwrap_or(f64::NAN);
        max_of([
            (m(|_| 1.0) - 1.0).abs(),
            (m(|k| k as f64) / a2 - 1.0).abs(),
            (m(|k| (k * k) as f64) / (a2 * a2 + a2) - 1.0).abs(),
        ])
    }));
    s.record("fock.poisson_moments", moments, 1e-10);

    let ortho = max_of([0.1, 1.0, 5.0, 20.0].iter().map(|&a| {
        let n = choose_cutoff(a, DEFAULT_TAIL_TOL);
        match (coherent_vector(a, n), d_alpha_ket(a, n)) {
            (Ok(c), Ok(d)) => max_of([(d.norm_squared() - 1.0).abs(), c.dot(&d).abs()]),
            _ => f64::NAN,
        }
    }));
    s.record("fock.derivative_ket_orthonormal", ortho, 1e-10);
}

fn jc_checks(s: &mut Suite, rng: &mut ChaCha8Rng) {
    let grid: Vec<(f64, f64)> = (0..40)
        .flat_map(|i| (0..40).map(move |j| (10.0 * i as f64 / 39.0, 50.0 * j as f64 / 39.0)))
        .collect();
    let per_point: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&(a, t)| {
            let trace = gram_matrix(a, t, default_cutoff(a)).trace_residual();
            let bound = max_of([BlochState::ground(), BlochState::excited()]
                .iter()
                .map(|i| qfi_jc(a, t, i).unwrap_or(f64::NAN) - 4.0));
            (trace, bound)
        })
        .collect();
    s.record("jc.trace_preservation", max_of(per_point.iter().map(|p| p.0)), 1e-10);
    s.record("jc.qfi_global_bound", max_of(per_point.iter().map(|p| p.1.max(0.0))), 1e-8);

    let eig = max_of((0..200).map(|_| {
        let (a, t) = (rng.gen_range(0.0..10.0), rng.gen_range(0.0..60.0));
        let g = gram_matrix(a, t, default_cutoff(a));
        let (lo, hi) = apply_channel(&g, &DensityMatrix2::from_bloch(&ball_point(rng))).eigenvalues();
        max_of([-lo, hi - 1.0, 0.0])
    }));
    s.record("jc.channel_output_eigenvalues", eig, 1e-10);

    let instances: Vec<(f64, f64, BlochState)> =
        (0..100).map(|_| (rng.gen_range(0.0..6.0), rng.gen_range(0.0..30.0), real_pure(rng))).collect();
    let results: Vec<(f64, f64)> = instances
        .par_iter()
        .map(|&(a, t, init)| {
            let field = coherent_vector(a, choose_cutoff(a, 1e-18));
            let oracle = field.and_then(|f| joint_evolve(t, &init, &f)).map(|js| reduced_state(&js));
            let ours = apply_channel(&gram_matrix(a, t, default_cutoff(a)), &init.density());
            let trace_err = oracle.map_or(f64::NAN, |o| ours.max_abs_diff(&o));
            // Keep the finite-difference step clear of alpha = 0.
            let a = a.max(0.05);
            let n = default_cutoff(a + 1e-3);
            let h = 1e-5 * a.max(1.0);
            let fd_err = match gram_with_derivative(a, t, n) {
                Ok(g) => {
                    let dg = g.dg.expect("derivative requested");
                    let fd = (gram_matrix(a + h, t, n).g - gram_matrix(a - h, t, n).g) / (2.0 * h);
                    (dg - fd).abs().max() / (1.0 + dg.abs().max())
                }
                Err(_) => f64::NAN,
            };
            (trace_err, fd_err)
        })
        .collect();
    s.record("oracle.partial_trace_equals_gram_channel", max_of(results.iter().map(|r| r.0)), 1e-10);
    s.record("jc.gram_derivative_finite_difference", max_of(results.iter().map(|r| r.1)), 1e-6);
}

fn oracle_checks(s: &mut Suite, rng: &mut ChaCha8Rng) {
    let norm = max_of((0..40).map(|_| {
        let (a, t, init) = (rng.gen_range(0.0..6.0), rng.gen_range(0.0..50.0), real_pure(rng));
        match coherent_vector(a, default_cutoff(a)) {
            Ok(f) => joint_evolve(t, &init, &f)
                .map_or(f64::NAN, |js| ((js.norm_squared() - f.norm_squared()).abs() - f.tail_mass).max(0.0)),
            Err(_) => f64::NAN,
        }
    }));
    s.record("oracle.norm_conservation", norm, 1e-10);

    let instances: Vec<(f64, f64, BlochState)> =
        (0..24).map(|_| (rng.gen_range(0.0..4.0), rng.gen_range(0.0..20.0), real_pure(rng))).collect();
    let routes = max_of(instances.par_iter().map(|&(a, t, init)| {
        let f = match coherent_vector(a, choose_cutoff(a, 1e-16)) {
            Ok(f) => f,
            Err(_) => return f64::NAN,
        };
        match (joint_evolve(t, &init, &f), joint_evolve_expm(t, &init, &f)) {
            (Ok(x), Ok(y)) => x.max_abs_diff(&y),
            _ => f64::NAN,
        }
    }).collect::<Vec<_>>());
    s.record("oracle.evolution_routes_agree", routes, 1e-8);
}

fn limits_checks(s: &mut Suite) {
    // Halving alpha must cut the series error by at least 8x, with 20% slack.
    let err = |a: f64, t: f64| (vacuum_series(t).at(a) - gram_matrix(a, t, default_cutoff(a)).g).abs().max();
    let shortfall = max_of([0.7, 1.5, 2.0, 3.0].iter().flat_map(|&t| {
        let e = [err(0.02, t), err(0.04, t), err(0.08, t)];
        [6.4 - e[1] / e[0], 6.4 - e[2] / e[1]]
    }).map(|v| v.max(0.0)));
    s.record("limits.series_third_order_shortfall", shortfall, 0.0);

    let cov = max_of([(20.0, 0.7), (100.0, 1.0), (50.0, 2.3)].iter().map(|&(a, t)| {
        let c = covariant_channel(a, t);
        match build_asymptotic_channel(a, t, Some(0)) {
            Ok(ch) => {
                let fast_only = jcqfi::asymptotic::AsymptoticChannel { slow_terms: vec![], ..ch }.affine();
                let (Some(dc), Some(df)) = (c.da, fast_only.da) else { return f64::NAN };
                // Real states live in the x-z plane, where both maps act.
                let xz = [(0, 0), (0, 2), (2, 0), (2, 2)];
                max_of(xz.iter().flat_map(|&ij| [(c.a[ij] - fast_only.a[ij]).abs(), (dc[ij] - df[ij]).abs()]))
            }
            Err(_) => f64::NAN,
        }
    }));
    s.record("limits.covariant_equals_short_time_channel", cov, 1e-12);
}

fn asymptotic_checks(s: &mut Suite) {
    let mut worst_c = 0.0f64;
    for &a in &[20.0, 50.0, 100.0] {
        let taus = [0.5, 1.0, 2.0, PI * a, 2.0 * PI * a, 2.0 * PI * a - PI, 2.0 * PI * a + PI];
        let ch = JcChannel::with_default_cutoff(a);
        for &t in &taus {
            for init in [BlochState::ground(), BlochState::excited()] {
                let err = match (ch.evolve(t, &init), asymptotic_state(a, t, &init, None)) {
                    (Ok(x), Ok(y)) => max_of([(x.x() - y.x()).abs(), (x.z() - y.z()).abs()]),
                    _ => f64::NAN,
                };
                worst_c = max_of([worst_c, err * a]);
            }
        }
    }
    s.record("asymptotic.exact_agreement_c_over_alpha", worst_c, 5.0);

    let short = max_of((0..=1000).map(|i| qfi_short_time(10.0 * i as f64 / 1000.0) - 4.0 / E));
    s.record("asymptotic.short_time_bound", short.max(0.0), 1e-12);

    let opt = max_of((1..=6).map(|nu| match optimal_revival_qfi(nu) {
        Ok(o) => {
            let centre = 2.0 * PI * 80.0 * nu as f64;
            (qfi_revival(80.0, centre + o.tau_offset, nu) - o.qfi).abs()
        }
        Err(_) => f64::NAN,
    }));
    s.record("asymptotic.revival_optimum_consistency", opt, 1e-10);

    let mut amp = 0.0f64;
    for &a in &[10.0, 20.0, 50.0, 100.0, 200.0] {
        for k in 0..50 {
            let t = 5e4 * k as f64 / 49.0;
            let Ok(ch) = build_asymptotic_channel(a, t, None) else {
                amp = f64::NAN;
                continue;
            };
            for q in ch.fast_terms.iter().map(|t| t.q).chain(ch.slow_terms.iter().map(|t| t.p)) {
                amp = max_of([amp, -q, q - 1.0]);
            }
            let aff = ch.affine();
            for axis in 0..6 {
                let mut r = Vector3::zeros();
                r[axis / 2] = if axis % 2 == 0 { 1.0 } else { -1.0 };
                amp = max_of([amp, (aff.a * r + aff.b).norm() - 1.0]);
            }
        }
    }
    s.record("asymptotic.amplitudes_and_ball", amp.max(0.0), 1e-6);
}

fn collision_checks(s: &mut Suite, rng: &mut ChaCha8Rng) {
    let init = BlochState::new(0.3, -0.1, 0.5);
    let ident = max_of([0usize, 1, 7, 100].iter().map(|&n| match compose_n(&AffineChannel::identity(), &init, n) {
        Ok(st) => max_of([(st.r - init.r).norm(), st.dr.map_or(f64::NAN, |d| d.norm())]),
        Err(_) => f64::NAN,
    }));
    s.record("collision.identity_composition", ident, 0.0);

    let bound = max_of((0..40).map(|_| {
        let (a, t, n) = (rng.gen_range(0.5..20.0), rng.gen_range(0.05..2.0), rng.gen_range(1usize..12));
        composed_qfi(a, t, n, &BlochState::ground()).map_or(f64::NAN, |q| (q - 4.0 * n as f64).max(0.0))
    }));
    s.record("collision.qfi_below_4n", bound, 1e-6);

    let argmax = max_of([1usize, 2, 4, 9, 16].iter().map(|&n| (optimal_sequence_numeric(n).x - 1.0 / (n as f64).sqrt()).abs()));
    s.record("collision.closed_form_argmax", argmax, 1e-6);

    let cont = continuous_limit_check(1.0, 1.0, 2.0, &[0.02, 0.01, 0.005, 0.0025], &BlochState::ground());
    let modes = infinite_modes_limit(5.0, 1.0, &[0.1, 0.05, 0.025, 0.0125]);
    for (name, report) in [("collision.continuous_limit_ratio", cont), ("collision.infinite_modes_ratio", modes)] {
        let dev = report.map_or(f64::NAN, |r| max_of(r.ratios.iter().map(|x| (x - 2.0).abs())));
        s.record(name, dev, 0.3);
    }
}

fn lindblad_checks(s: &mut Suite, rng: &mut ChaCha8Rng) {
    let mut phys = 0.0f64;
    let mut sens = 0.0f64;
    for _ in 0..60 {
        let (e, t) = (rng.gen_range(0.0..5.0), rng.gen_range(0.0..20.0));
        let r = ball_point(rng);
        let init = BlochState::new(r.x, r.y, r.z);
        let h = 1e-5;
        match (evolve_master(e, t, &init), evolve_master(e + h, t, &init), evolve_master(e - h, t, &init)) {
            (Ok(st), Ok(p), Ok(m)) => {
                phys = max_of([phys, st.r.norm() - 1.0]);
                let fd = (p.r - m.r) / (2.0 * h);
                sens = max_of([sens, st.dr.map_or(f64::NAN, |d| (fd - d).norm())]);
            }
            _ => {
                phys = f64::NAN;
            }
        }
    }
    s.record("lindblad.physicality", phys.max(0.0), 1e-10);
    s.record("lindblad.sensitivity_finite_difference", sens, 1e-6);

    let steady = max_of([0.0, 0.3, 1.0, 3.0].iter().map(|&e| {
        evolve_master(e, 60.0, &BlochState::excited()).map_or(f64::NAN, |st| (st.r - steady_state(e).r).norm())
    }));
    s.record("lindblad.steady_state_limit", steady, 1e-8);

    let rate = max_of([0.0, 0.2, 0.5, 1.0, 3.0].iter().flat_map(|&e| {
        [BlochState::ground(), BlochState::excited()].map(|i| (qfi_rate(e, &i).value - 4.0).max(0.0))
    }));
    s.record("lindblad.rate_below_four", rate, 1e-6);

    let mut closed = 0.0f64;
    for _ in 0..50 {
        let r = rng.gen_range(0.0..1.0f64).sqrt();
        let phi = rng.gen_range(0.0..2.0 * PI);
        let (x0, z0) = (r * phi.cos(), r * phi.sin());
        let init = BlochState::new(x0, 0.0, z0);
        for k in 1..=20 {
            let t = k as f64;
            let q = qfi_lindblad(0.0, t, &init).unwrap_or(f64::NAN);
            closed = max_of([closed, (q - closed_form_zero_field(t, x0, z0)).abs()]);
        }
    }
    s.record("lindblad.zero_field_closed_form", closed, 1e-8);
}

fn cli_checks(s: &mut Suite) {
    let cfg = SweepConfig {
        mode: Mode::Scan,
        alpha_range: Some(Range { min: 0.0, max: 3.0, count: 4 }),
        tau_range: Some(Range { min: 0.0, max: 5.0, count: 5 }),
        s_range: None,
        eps_bar_range: None,
        initials: vec![Initial::Ground, Initial::Excited],
        output_path: None,
        format: Format::Csv,
        tail_tol: DEFAULT_TAIL_TOL,
        seed: 0,
        quiet: true,
    };
    let a = run_scan(&cfg).map(|t| t.render(Format::Csv));
    let b = run_scan(&cfg).map(|t| t.render(Format::Csv));
    let same = matches!((&a, &b), (Ok(x), Ok(y)) if x == y && x.starts_with(crate::output::SCHEMA_LINE));
    s.record("cli.deterministic_output", if same { 0.0 } else { 1.0 }, 0.0);
}

/// Runs the full suite. Random instances are drawn from `seed`.
pub fn run_verify(seed: u64, tol_scale: f64) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = Suite { scale: tol_scale, checks: Vec::new() };
    bloch_checks(&mut s, &mut rng);
    fock_checks(&mut s, &mut rng);
    jc_checks(&mut s, &mut rng);
    oracle_checks(&mut s, &mut rng);
    limits_checks(&mut s);
    asymptotic_checks(&mut s);
    collision_checks(&mut s, &mut rng);
    lindblad_checks(&mut s, &mut rng);
    cli_checks(&mut s);
    let failed = s.checks.iter().filter(|c| !c.pass).count();
    Report { seed, tol_scale, passed: s.checks.len() - failed, failed, checks: s.checks }
}
