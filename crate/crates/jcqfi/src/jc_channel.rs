//! Exact reduced channel of the resonant Jaynes-Cummings interaction with a
//! real coherent mode.
//!
//! The channel is `rho -> sum_ij G_ij L_i rho L_j^T` with
//! `L = {|g><g|, |e><e|, sigma_-, sigma_+}` and `G_ij = E[f_i(n) f_j(n)]` over
//! the photon-number distribution, where
//! `f = (cos(t sqrt n), cos(t sqrt(n+1)), -(sqrt n / a) sin(t sqrt n), (a / sqrt(n+1)) sin(t sqrt(n+1)))`.

use nalgebra::{Matrix2, Matrix3, Matrix4, Vector3};
use num_complex::Complex64 as C64;

use crate::bloch::{self, BlochState, DensityMatrix2};
use crate::error::{Error, Result};
use crate::fock::{self, PoissonWindow, DEFAULT_TAIL_TOL};
use crate::limits;
use crate::numeric::NeumaierSum;

#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub g: Matrix4<f64>,
    /// `dG/d alpha`, absent at `alpha = 0`.
    pub dg: Option<Matrix4<f64>>,
    pub alpha: f64,
    pub tau: f64,
    pub n_max: usize,
}

impl GramMatrix {
    /// Largest violation of the three trace-preservation identities.
    pub fn trace_residual(&self) -> f64 {
        trace_residual(&self.g, 1.0)
    }

    pub fn derivative_trace_residual(&self) -> Option<f64> {
        self.dg.as_ref().map(|d| trace_residual(d, 0.0))
    }
}

fn trace_residual(g: &Matrix4<f64>, one: f64) -> f64 {
    let a = (g[(0, 0)] + g[(3, 3)] - one).abs();
    let b = (g[(1, 1)] + g[(2, 2)] - one).abs();
    let c = (g[(0, 2)] + g[(3, 1)]).abs();
    a.max(b).max(c)
}

/// Affine action `r -> a r + b` on the Bloch vector, with optional
/// parameter derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineChannel {
    pub a: Matrix3<f64>,
    pub b: Vector3<f64>,
    pub da: Option<Matrix3<f64>>,
    pub db: Option<Vector3<f64>>,
}

impl AffineChannel {
    pub fn identity() -> Self {
        Self { a: Matrix3::identity(), b: Vector3::zeros(), da: Some(Matrix3::zeros()), db: Some(Vector3::zeros()) }
    }

    /// Applies the map and propagates the first derivative by the chain rule.
    /// A missing input derivative counts as zero.
    pub fn apply(&self, s: &BlochState) -> BlochState {
        let r = self.a * s.r + self.b;
        let dr = match (self.da, self.db) {
            (Some(da), Some(db)) => Some(da * s.r + self.a * s.dr.unwrap_or_else(Vector3::zeros) + db),
            _ => None,
        };
        BlochState { r, dr, ddr: None }
    }

    /// Largest Bloch-vector norm over images of a sample of pure states.
    pub fn max_image_norm(&self, samples: usize) -> f64 {
        let mut worst: f64 = 0.0;
        let n = samples.max(4);
        for i in 0..n {
            let th = std::f64::consts::PI * (i as f64 + 0.5) / n as f64;
            for j in 0..2 * n {
                let ph = std::f64::consts::PI * j as f64 / n as f64;
                let r = Vector3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos());
                worst = worst.max((self.a * r + self.b).norm());
            }
        }
        for r in axis_states() {
            worst = worst.max((self.a * r + self.b).norm());
        }
        worst
    }
}

pub(crate) fn axis_states() -> [Vector3<f64>; 6] {
    [
        Vector3::new(1.0, 0.0, 0.0),
        Vector3::new(-1.0, 0.0, 0.0),
        Vector3::new(0.0, 1.0, 0.0),
        Vector3::new(0.0, -1.0, 0.0),
        Vector3::new(0.0, 0.0, 1.0),
        Vector3::new(0.0, 0.0, -1.0),
    ]
}

/// Cutoff used when callers do not supply one.
pub fn default_cutoff(alpha: f64) -> usize {
    fock::choose_cutoff(alpha, DEFAULT_TAIL_TOL)
}

/// Which Gram entries a pass needs.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Entries {
    All,
    /// `G00, G03, G11, G12`: enough for ground and excited inputs.
    Axis,
}

const AXIS: [(usize, usize); 4] = [(0, 0), (0, 3), (1, 1), (1, 2)];
const ALL: [(usize, usize); 10] = [(0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3)];

/// One pass over the Poisson window accumulating `G` and, if `alpha > 0`,
/// `W_ij = E[(2n - 2 alpha^2)/alpha f_i f_j]`.
fn accumulate(win: &PoissonWindow, tau: f64, entries: Entries) -> (Matrix4<f64>, Option<Matrix4<f64>>) {
    let alpha = win.alpha;
    if alpha == 0.0 {
        // f_2 carries sqrt(P(n)) / alpha, whose limit lives on n = 1 only.
        return (limits::vacuum_series(tau).g0, None);
    }
    let pairs: &[(usize, usize)] = match entries {
        Entries::All => &ALL,
        Entries::Axis => &AXIS,
    };
    let mut gs = [NeumaierSum::new(); 10];
    let mut ws = [NeumaierSum::new(); 10];
    let with_w = alpha > 0.0;
    let inv_a = if with_w { 1.0 / alpha } else { 0.0 };
    let two_a2 = 2.0 * alpha * alpha;

    let mut sq = (win.n_lo as f64).sqrt();
    let (mut s0, mut c0) = (tau * sq).sin_cos();
    for (n, p) in win.iter() {
        let sq1 = ((n + 1) as f64).sqrt();
        let (s1, c1) = (tau * sq1).sin_cos();
        if p != 0.0 {
            let f = [c0, c1, -sq * inv_a * s0, alpha / sq1 * s1];
            let pw = p * (2.0 * n as f64 - two_a2) * inv_a;
            for (k, &(i, j)) in pairs.iter().enumerate() {
                let ff = f[i] * f[j];
                gs[k].add(p * ff);
                if with_w {
                    ws[k].add(pw * ff);
                }
            }
        }
        sq = sq1;
        s0 = s1;
        c0 = c1;
    }
    let mut g = Matrix4::zeros();
    let mut w = Matrix4::zeros();
    for (k, &(i, j)) in pairs.iter().enumerate() {
        g[(i, j)] = gs[k].value();
        g[(j, i)] = g[(i, j)];
        w[(i, j)] = ws[k].value();
        w[(j, i)] = w[(i, j)];
    }
    (g, with_w.then_some(w))
}

/// `dG = W + (c_i + c_j) G` with `c = (0, 0, -1/alpha, 1/alpha)`, the
/// explicit alpha-dependence of `f_2` and `f_3`.
fn derivative_from(g: &Matrix4<f64>, w: &Matrix4<f64>, alpha: f64) -> Matrix4<f64> {
    let c = [0.0, 0.0, -1.0 / alpha, 1.0 / alpha];
    Matrix4::from_fn(|i, j| w[(i, j)] + (c[i] + c[j]) * g[(i, j)])
}

/// Channel of one `(alpha, cutoff)` pair, reusable across interaction times.
#[derive(Debug, Clone)]
pub struct JcChannel {
    window: PoissonWindow,
}

impl JcChannel {
    pub fn new(alpha: f64, n_max: usize) -> Self {
        Self { window: PoissonWindow::with_cutoff(alpha, n_max, DEFAULT_TAIL_TOL) }
    }

    pub fn with_default_cutoff(alpha: f64) -> Self {
        Self::new(alpha, default_cutoff(alpha))
    }

    pub fn alpha(&self) -> f64 {
        self.window.alpha
    }

    pub fn n_max(&self) -> usize {
        self.window.n_hi
    }

    pub fn window(&self) -> &PoissonWindow {
        &self.window
    }

    pub fn gram(&self, tau: f64) -> GramMatrix {
        let (g, w) = accumulate(&self.window, tau, Entries::All);
        let dg = w.map(|w| derivative_from(&g, &w, self.alpha()));
        GramMatrix { g, dg, alpha: self.alpha(), tau, n_max: self.n_max() }
    }

    /// Evolved Bloch vector and its alpha-derivative.
    pub fn evolve(&self, tau: f64, initial: &BlochState) -> Result<BlochState> {
        if self.alpha() == 0.0 {
            return Err(Error::AlphaZero);
        }
        let r0 = initial.r;
        if r0.x == 0.0 && r0.y == 0.0 && r0.z.abs() == 1.0 {
            let (g, w) = accumulate(&self.window, tau, Entries::Axis);
            let dg = derivative_from(&g, &w.expect("alpha > 0"), self.alpha());
            return Ok(axis_state(&g, &dg, r0.z > 0.0));
        }
        let gram = self.gram(tau);
        Ok(gram_to_affine(&gram).apply(&BlochState::new(r0.x, r0.y, r0.z)))
    }

    /// Evolved state with a central finite-difference second derivative.
    pub fn evolve_with_second(&self, tau: f64, initial: &BlochState) -> Result<BlochState> {
        let mut s = self.evolve(tau, initial)?;
        s.ddr = Some(second_derivative(self.alpha(), tau, initial, self.n_max())?);
        Ok(s)
    }

    pub fn qfi(&self, tau: f64, initial: &BlochState) -> Result<f64> {
        let s = self.evolve(tau, initial)?;
        match bloch::qfi_bloch(&s) {
            Err(Error::MissingSecondDerivative) => {
                let mut s = s;
                s.ddr = Some(second_derivative(self.alpha(), tau, initial, self.n_max())?);
                bloch::qfi_bloch(&s)
            }
            other => other,
        }
    }
}

fn axis_state(g: &Matrix4<f64>, dg: &Matrix4<f64>, ground: bool) -> BlochState {
    if ground {
        BlochState::new(2.0 * g[(0, 3)], 0.0, 2.0 * g[(0, 0)] - 1.0)
            .with_derivative(Vector3::new(2.0 * dg[(0, 3)], 0.0, 2.0 * dg[(0, 0)]))
    } else {
        BlochState::new(2.0 * g[(1, 2)], 0.0, 1.0 - 2.0 * g[(1, 1)])
            .with_derivative(Vector3::new(2.0 * dg[(1, 2)], 0.0, -2.0 * dg[(1, 1)]))
    }
}

fn second_derivative(alpha: f64, tau: f64, initial: &BlochState, n_max: usize) -> Result<Vector3<f64>> {
    let h = 1e-4 * alpha.abs().max(1.0);
    let d = |a: f64| -> Result<Vector3<f64>> {
        let ch = JcChannel::new(a, n_max.max(default_cutoff(a)));
        Ok(ch.evolve(tau, initial)?.dr.expect("derivative attached"))
    };
    if alpha > h {
        Ok((d(alpha + h)? - d(alpha - h)?) / (2.0 * h))
    } else {
        Ok((4.0 * d(alpha + h)? - 3.0 * d(alpha)? - d(alpha + 2.0 * h)?) / (2.0 * h))
    }
}

pub fn gram_matrix(alpha: f64, tau: f64, n_max: usize) -> GramMatrix {
    let ch = JcChannel::new(alpha, n_max);
    let (g, _) = accumulate(&ch.window, tau, Entries::All);
    GramMatrix { g, dg: None, alpha, tau, n_max }
}

pub fn gram_derivative(alpha: f64, tau: f64, n_max: usize) -> Result<Matrix4<f64>> {
    if alpha == 0.0 {
        return Err(Error::AlphaZero);
    }
    Ok(JcChannel::new(alpha, n_max).gram(tau).dg.expect("alpha > 0"))
}

/// `G` and `dG/d alpha` from a single pass.
pub fn gram_with_derivative(alpha: f64, tau: f64, n_max: usize) -> Result<GramMatrix> {
    if alpha == 0.0 {
        return Err(Error::AlphaZero);
    }
    Ok(JcChannel::new(alpha, n_max).gram(tau))
}

fn kraus() -> [Matrix2<C64>; 4] {
    let o = C64::new(1.0, 0.0);
    let z = C64::new(0.0, 0.0);
    [Matrix2::new(o, z, z, z), Matrix2::new(z, z, z, o), Matrix2::new(z, o, z, z), Matrix2::new(z, z, o, z)]
}

/// `sum_ij G_ij L_i rho L_j^dagger`.
pub fn apply_channel(g: &GramMatrix, rho0: &DensityMatrix2) -> DensityMatrix2 {
    let l = kraus();
    let mut out = Matrix2::<C64>::zeros();
    for i in 0..4 {
        for j in 0..4 {
            let gij = g.g[(i, j)];
            if gij != 0.0 {
                out += (l[i] * rho0.m * l[j].adjoint()) * C64::new(gij, 0.0);
            }
        }
    }
    DensityMatrix2::new(out)
}

/// Linear rearrangement of Gram entries into `(a, b)`; `one` is the trace of
/// the identity part (1 for a channel, 0 for its derivatives).
pub(crate) fn affine_parts(g: &Matrix4<f64>, one: f64) -> (Matrix3<f64>, Vector3<f64>) {
    let a = Matrix3::new(
        g[(0, 1)] + g[(2, 3)], 0.0, g[(0, 3)] - g[(1, 2)],
        0.0, g[(0, 1)] - g[(2, 3)], 0.0,
        2.0 * g[(0, 2)], 0.0, g[(0, 0)] + g[(1, 1)] - one,
    );
    let b = Vector3::new(g[(0, 3)] + g[(1, 2)], 0.0, g[(0, 0)] - g[(1, 1)]);
    (a, b)
}

/// Bloch-affine form of the channel (and of its derivative when present).
pub fn gram_to_affine(g: &GramMatrix) -> AffineChannel {
    let (a, b) = affine_parts(&g.g, 1.0);
    let (da, db) = match &g.dg {
        Some(dg) => {
            let (da, db) = affine_parts(dg, 0.0);
            (Some(da), Some(db))
        }
        None => (None, None),
    };
    AffineChannel { a, b, da, db }
}

/// State and alpha-derivative after interaction time `tau`.
pub fn evolve_with_derivative(alpha: f64, tau: f64, initial: &BlochState, n_max: usize) -> Result<BlochState> {
    JcChannel::new(alpha, n_max).evolve(tau, initial)
}

/// QFI of the atom about `alpha`. At the vacuum the derivatives come from
/// the exact low-order expansion of the channel.
pub fn qfi_jc(alpha: f64, tau: f64, initial: &BlochState) -> Result<f64> {
    if alpha == 0.0 {
        let s = limits::vacuum_state(tau, 0.0, initial).state;
        return bloch::qfi_bloch(&s);
    }
    JcChannel::with_default_cutoff(alpha).qfi(tau, initial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_at_zero_time() {
        let g = gram_matrix(1.7, 0.0, default_cutoff(1.7));
        let mut want = Matrix4::zeros();
        want[(0, 0)] = 1.0;
        want[(1, 1)] = 1.0;
        want[(0, 1)] = 1.0;
        want[(1, 0)] = 1.0;
        assert!((g.g - want).abs().max() < 1e-14);
        let d = gram_derivative(1.0, 0.0, default_cutoff(1.0)).unwrap();
        assert!(d.abs().max() < 1e-12);
    }

    #[test]
    fn vacuum_gram() {
        let t = 0.9f64;
        let g = gram_matrix(0.0, t, 32).g;
        let mut want = Matrix4::zeros();
        want[(0, 0)] = 1.0;
        want[(1, 1)] = t.cos().powi(2);
        want[(2, 2)] = t.sin().powi(2);
        want[(0, 1)] = t.cos();
        want[(1, 0)] = t.cos();
        assert!((g - want).abs().max() < 1e-15);
    }

    #[test]
    fn derivative_needs_alpha() {
        assert_eq!(gram_derivative(0.0, 1.0, 32), Err(Error::AlphaZero));
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let (a, t, h) = (2.0, 3.0, 1e-5);
        let n = default_cutoff(a + h);
        let d = gram_derivative(a, t, n).unwrap();
        let fd = (gram_matrix(a + h, t, n).g - gram_matrix(a - h, t, n).g) / (2.0 * h);
        assert!((d - fd).abs().max() < 1e-6);
        assert!((d[(0, 0)] + d[(3, 3)]).abs() < 1e-10);
    }

    #[test]
    fn affine_matches_kraus_form() {
        let g = gram_with_derivative(1.3, 4.1, default_cutoff(1.3)).unwrap();
        let aff = gram_to_affine(&g);
        for r in axis_states() {
            let rho = apply_channel(&g, &DensityMatrix2::from_bloch(&r));
            assert!((rho.bloch() - (aff.a * r + aff.b)).norm() < 1e-12);
            assert!((rho.trace() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ground_and_excited_shortcuts() {
        let g = gram_matrix(2.0, 3.0, default_cutoff(2.0)).g;
        let ground = apply_channel(&GramMatrix { g, dg: None, alpha: 2.0, tau: 3.0, n_max: 0 }, &BlochState::ground().density());
        let r = ground.bloch();
        assert_relative_eq!(r.x, 2.0 * g[(0, 3)], epsilon = 1e-14);
        assert_relative_eq!(r.z, 2.0 * g[(0, 0)] - 1.0, epsilon = 1e-14);
        let ch = JcChannel::with_default_cutoff(2.0);
        for init in [BlochState::ground(), BlochState::excited()] {
            let fast = ch.evolve(3.0, &init).unwrap();
            let full = gram_to_affine(&ch.gram(3.0)).apply(&init);
            assert!((fast.r - full.r).norm() < 1e-13);
            assert!((fast.dr.unwrap() - full.dr.unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn state_derivative_matches_finite_difference() {
        let (a, t, h) = (2.0, 3.0, 1e-5);
        let n = default_cutoff(a + h);
        let s = evolve_with_derivative(a, t, &BlochState::ground(), n).unwrap();
        let p = evolve_with_derivative(a + h, t, &BlochState::ground(), n).unwrap();
        let m = evolve_with_derivative(a - h, t, &BlochState::ground(), n).unwrap();
        assert!(((p.r - m.r) / (2.0 * h) - s.dr.unwrap()).norm() < 1e-6);
    }

    #[test]
    fn ground_zero_time() {
        let s = evolve_with_derivative(3.0, 0.0, &BlochState::ground(), default_cutoff(3.0)).unwrap();
        assert!((s.r - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-14);
        assert!(s.dr.unwrap().norm() < 1e-12);
    }

    #[test]
    fn short_time_rotation_at_large_alpha() {
        let s = evolve_with_derivative(100.0, 1.0, &BlochState::ground(), default_cutoff(100.0)).unwrap();
        let e = (-0.5f64).exp();
        assert!((s.x() - e * 200f64.sin()).abs() < 2e-2);
        assert!((s.z() - e * 200f64.cos()).abs() < 2e-2);
    }

    #[test]
    fn qfi_examples() {
        let q = qfi_jc(0.01, std::f64::consts::FRAC_PI_2, &BlochState::ground()).unwrap();
        assert!((q - 4.0).abs() < 0.04, "{q}");
        let q = qfi_jc(100.0, 1.0, &BlochState::ground()).unwrap();
        assert!((q / (4.0 / std::f64::consts::E) - 1.0).abs() < 0.02, "{q}");
    }

    #[test]
    fn qfi_at_vacuum_is_rabi_like() {
        for &t in &[0.3, 1.0, 2.5] {
            let q = qfi_jc(0.0, t, &BlochState::ground()).unwrap();
            assert_relative_eq!(q, 4.0 * f64::sin(t).powi(2), epsilon = 1e-12);
        }
    }
}
