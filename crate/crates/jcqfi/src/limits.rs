//! Small-amplitude expansion of the channel and the covariant quadrature coupling.

use nalgebra::{Matrix3, Matrix4, Vector3};

use crate::bloch::BlochState;
use crate::jc_channel::{affine_parts, gram_to_affine, AffineChannel, GramMatrix};
use crate::numeric;

/// Amplitude above which the second-order expansion is flagged as unreliable.
pub const VACUUM_VALID_ALPHA: f64 = 0.2;

/// Coefficients of `G = g0 + alpha g1 + alpha^2 g2 + O(alpha^3)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VacuumSeries {
    pub g0: Matrix4<f64>,
    pub g1: Matrix4<f64>,
    pub g2: Matrix4<f64>,
}

impl VacuumSeries {
    pub fn at(&self, alpha: f64) -> Matrix4<f64> {
        self.g0 + self.g1 * alpha + self.g2 * (alpha * alpha)
    }

    pub fn derivative_at(&self, alpha: f64) -> Matrix4<f64> {
        self.g1 + self.g2 * (2.0 * alpha)
    }
}

pub fn vacuum_series(tau: f64) -> VacuumSeries {
    let (s, c) = tau.sin_cos();
    let (s2, c2) = (std::f64::consts::SQRT_2 * tau).sin_cos();
    let sin2t = (2.0 * tau).sin();
    let sym = |m: [[f64; 4]; 4]| Matrix4::from_fn(|i, j| m[i][j]);
    let g0 = sym([[1.0, c, 0.0, 0.0], [c, c * c, 0.0, 0.0], [0.0, 0.0, s * s, 0.0], [0.0, 0.0, 0.0, 0.0]]);
    let g1 = sym([
        [0.0, 0.0, -0.5 * sin2t, s],
        [0.0, 0.0, -s * c2, 0.5 * sin2t],
        [-0.5 * sin2t, -s * c2, 0.0, 0.0],
        [s, 0.5 * sin2t, 0.0, 0.0],
    ]);
    let k = -s * s2 / std::f64::consts::SQRT_2;
    let g2 = sym([
        [c * c - 1.0, c * (c2 - 1.0), 0.0, 0.0],
        [c * (c2 - 1.0), c2 * c2 - c * c, 0.0, 0.0],
        [0.0, 0.0, s2 * s2 - s * s, k],
        [0.0, 0.0, k, s * s],
    ]);
    VacuumSeries { g0, g1, g2 }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VacuumState {
    /// State with exact first and second alpha-derivatives of the expansion.
    pub state: BlochState,
    /// False when `alpha` exceeds [`VACUUM_VALID_ALPHA`].
    pub valid: bool,
}

/// Second-order vacuum expansion of the evolved state. Exact at `alpha = 0`.
pub fn vacuum_state(tau: f64, alpha: f64, initial: &BlochState) -> VacuumState {
    let series = vacuum_series(tau);
    let gram = GramMatrix {
        g: series.at(alpha),
        dg: Some(series.derivative_at(alpha)),
        alpha,
        tau,
        n_max: 2,
    };
    let ch = gram_to_affine(&gram);
    let r0 = BlochState::new(initial.x(), initial.y(), initial.z());
    let mut state = ch.apply(&r0);
    // The expansion is quadratic, so the second derivative is 2 g2 acting linearly.
    let (a2, b2) = affine_parts(&(series.g2 * 2.0), 0.0);
    state.ddr = Some(a2 * r0.r + b2);
    VacuumState { state, valid: alpha <= VACUUM_VALID_ALPHA }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisInitial {
    Ground,
    Excited,
}

/// Closed-form small-amplitude QFI for ground or excited inputs.
pub fn vacuum_qfi(tau: f64, alpha: f64, initial: AxisInitial) -> f64 {
    let (s, _) = tau.sin_cos();
    match initial {
        AxisInitial::Ground => 4.0 * s * s,
        AxisInitial::Excited => {
            let c2 = (std::f64::consts::SQRT_2 * tau).cos();
            let cos2t = (2.0 * tau).cos();
            let cos22 = (2.0 * std::f64::consts::SQRT_2 * tau).cos();
            let a2 = alpha * alpha;
            let lead = 4.0 * s * s * c2 * c2;
            let num = (2.0 * alpha * cos2t - 2.0 * alpha * cos22).powi(2) + lead
                - lead * ((a2 + 1.0) * cos2t - a2 * cos22).powi(2);
            let den = 1.0 - ((a2 - 1.0) * cos2t - a2 * cos22).powi(2) - 4.0 * a2 * s * s * c2 * c2;
            if den.abs() <= 1e-15 {
                lead
            } else {
                num / den
            }
        }
    }
}

/// Channel of the coupling `sigma_y (a + a^dagger) / 2`: a Gaussian average of
/// rotations about `y` by `2 alpha tau`, contracted by `exp(-tau^2/2)`.
pub fn covariant_channel(alpha: f64, tau: f64) -> AffineChannel {
    let q = (-0.5 * tau * tau).exp();
    let (s, c) = (2.0 * alpha * tau).sin_cos();
    let a = Matrix3::new(q * c, 0.0, q * s, 0.0, 1.0, 0.0, -q * s, 0.0, q * c);
    let k = 2.0 * tau * q;
    let da = Matrix3::new(-k * s, 0.0, k * c, 0.0, 0.0, 0.0, -k * c, 0.0, -k * s);
    AffineChannel { a, b: Vector3::zeros(), da: Some(da), db: Some(Vector3::zeros()) }
}

/// Same channel by Gauss-Hermite quadrature over the field quadrature.
pub fn covariant_channel_quadrature(alpha: f64, tau: f64, order: usize) -> Matrix3<f64> {
    let (nodes, weights) = numeric::gauss_hermite(order);
    let mut a = Matrix3::zeros();
    let norm = std::f64::consts::PI.sqrt();
    for (u, w) in nodes.iter().zip(&weights) {
        let x = u + std::f64::consts::SQRT_2 * alpha;
        let phi = 2.0 * tau * x / std::f64::consts::SQRT_2;
        let (s, c) = phi.sin_cos();
        a += Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c) * (w / norm);
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::qfi_bloch;
    use crate::jc_channel::{default_cutoff, gram_matrix, qfi_jc};
    use approx::assert_relative_eq;

    #[test]
    fn series_at_zero_time() {
        let v = vacuum_series(0.0);
        let mut id = Matrix4::zeros();
        id[(0, 0)] = 1.0;
        id[(1, 1)] = 1.0;
        id[(0, 1)] = 1.0;
        id[(1, 0)] = 1.0;
        assert!((v.g0 - id).abs().max() < 1e-15);
        assert!(v.g1.abs().max() < 1e-15 && v.g2.abs().max() < 1e-15);
        let v = vacuum_series(std::f64::consts::PI);
        assert!((v.g0[(1, 1)] - 1.0).abs() < 1e-15 && v.g0[(2, 2)].abs() < 1e-15);
    }

    #[test]
    fn series_matches_exact_gram() {
        let (a, t) = (0.05, 2.0);
        let exact = gram_matrix(a, t, default_cutoff(a)).g;
        // The first neglected order is alpha^3 = 1.25e-4 here.
        assert!((vacuum_series(t).at(a) - exact).abs().max() < 2.0 * a * a * a);
    }

    #[test]
    fn series_error_is_third_order() {
        let t = 2.0;
        let err = |a: f64| (vacuum_series(t).at(a) - gram_matrix(a, t, default_cutoff(a)).g).abs().max();
        let (e1, e2, e3) = (err(0.08), err(0.04), err(0.02));
        assert!(e1 / e2 >= 8.0 * 0.8 && e2 / e3 >= 8.0 * 0.8, "{e1} {e2} {e3}");
    }

    #[test]
    fn series_respects_trace_preservation() {
        for &t in &[0.4, 1.9, 7.3] {
            let v = vacuum_series(t);
            for (g, one) in [(v.g0, 1.0), (v.g1, 0.0), (v.g2, 0.0)] {
                assert!((g[(0, 0)] + g[(3, 3)] - one).abs() < 1e-15);
                assert!((g[(1, 1)] + g[(2, 2)] - one).abs() < 1e-15);
                assert!((g[(0, 2)] + g[(3, 1)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn closed_state_formulas() {
        let (a, t, x0, z0) = (0.07, 1.3f64, 0.4, -0.5);
        let (s, c) = t.sin_cos();
        let (s2, c2) = (std::f64::consts::SQRT_2 * t).sin_cos();
        let x = x0 * c * (a * a * c2 - a * a + 1.0)
            + 0.5 * a * s * (-std::f64::consts::SQRT_2 * a * x0 * s2 + 2.0 * (z0 - 1.0) * c2 + 2.0 * z0 + 2.0);
        let z = 0.5
            * (-2.0 * a * x0 * (2.0 * t).sin() + a * a * (z0 - 1.0) * (2.0 * std::f64::consts::SQRT_2 * t).cos()
                + (2.0 * t).cos() * (2.0 * a * a + z0 - 1.0)
                - (a * a - 1.0) * (z0 + 1.0));
        let st = vacuum_state(t, a, &BlochState::new(x0, 0.0, z0)).state;
        assert_relative_eq!(st.x(), x, epsilon = 1e-14);
        assert_relative_eq!(st.z(), z, epsilon = 1e-14);
    }

    #[test]
    fn vacuum_state_examples() {
        let g = vacuum_state(1.1, 0.0, &BlochState::ground());
        assert!((g.state.r - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-15 && g.valid);
        let t = 0.8f64;
        let e = vacuum_state(t, 0.0, &BlochState::excited()).state;
        assert_relative_eq!(e.z(), -(2.0 * t).cos(), epsilon = 1e-15);
        assert!(!vacuum_state(t, 0.3, &BlochState::excited()).valid);
        let approx_state = vacuum_state(2.0, 0.05, &BlochState::ground()).state;
        let exact = crate::jc_channel::evolve_with_derivative(0.05, 2.0, &BlochState::ground(), default_cutoff(0.05)).unwrap();
        // Two Gram entries of size alpha^3 feed each Bloch component.
        assert!((approx_state.r - exact.r).norm() < 3e-4);
    }

    #[test]
    fn vacuum_qfi_examples() {
        assert_relative_eq!(vacuum_qfi(std::f64::consts::FRAC_PI_2, 0.0, AxisInitial::Ground), 4.0);
        for &t in &[0.3f64, 1.0, 2.2] {
            let want = 4.0 * t.sin().powi(2) * (std::f64::consts::SQRT_2 * t).cos().powi(2);
            assert_relative_eq!(vacuum_qfi(t, 1e-9, AxisInitial::Excited), want, epsilon = 1e-9);
        }
        // The derivative of the missing alpha^3 term leaves an alpha^2 error in the QFI.
        for &a in &[0.0125, 0.025, 0.05, 0.1] {
            let exact = qfi_jc(a, 1.2, &BlochState::excited()).unwrap();
            let err = (vacuum_qfi(1.2, a, AxisInitial::Excited) - exact).abs();
            assert!(err < 0.7 * a * a, "alpha={a} err={err}");
        }
    }

    #[test]
    fn vacuum_state_qfi_at_zero_alpha() {
        for &t in &[0.2f64, 1.0, 2.9] {
            let g = vacuum_state(t, 0.0, &BlochState::ground()).state;
            assert_relative_eq!(qfi_bloch(&g).unwrap(), 4.0 * t.sin().powi(2), epsilon = 1e-13);
            let e = vacuum_state(t, 0.0, &BlochState::excited()).state;
            let want = 4.0 * t.sin().powi(2) * (std::f64::consts::SQRT_2 * t).cos().powi(2);
            assert_relative_eq!(qfi_bloch(&e).unwrap(), want, epsilon = 1e-12);
        }
    }

    #[test]
    fn covariant_examples() {
        let id = covariant_channel(3.0, 0.0);
        assert!((id.a - Matrix3::identity()).abs().max() < 1e-15);
        let s = covariant_channel(0.7, 1.0).apply(&BlochState::ground());
        assert_relative_eq!(qfi_bloch(&s).unwrap(), 4.0 / std::f64::consts::E, epsilon = 1e-14);
        let quad = covariant_channel_quadrature(1.5, 0.8, 64);
        assert!((quad - covariant_channel(1.5, 0.8).a).abs().max() < 1e-10);
    }

    #[test]
    fn excited_qfi_near_pi_does_not_vanish_with_alpha() {
        // The excited state returns close to pure at tau = pi, where the
        // radial term of the QFI stays finite as alpha -> 0.
        let t = std::f64::consts::PI;
        let n = crate::fock::choose_cutoff(0.5, 1e-18);
        let family = |a: f64| {
            let f = crate::fock::coherent_vector(a, n)?;
            Ok(crate::oracle::reduced_state(&crate::oracle::joint_evolve(t, &BlochState::excited(), &f)?))
        };
        let oracle = crate::oracle::qfi_finite_difference(family, 0.01, 1e-3).unwrap();
        let exact = qfi_jc(0.01, t, &BlochState::excited()).unwrap();
        assert!((exact - oracle).abs() < 1e-6, "{exact} {oracle}");
        for a in [0.02, 0.005, 0.0025] {
            assert!((qfi_jc(a, t, &BlochState::excited()).unwrap() - 3.716).abs() < 2e-3);
        }
    }
}
