//! Sequential interaction with a stream of identically prepared modes, and the
//! two continuum limits of that stream.

use std::f64::consts::{E, PI};

use nalgebra::{Matrix2, Vector3};

use crate::bloch::{qfi_bloch, BlochState, DensityMatrix2};
use crate::error::{Error, Result};
use crate::fock::{choose_cutoff, coherent_vector, d_alpha_ket, FockVector};
use crate::jc_channel::{default_cutoff, gram_matrix, gram_to_affine, gram_with_derivative, AffineChannel};
use crate::lindblad;
use crate::numeric::{bracketed_max, lambert_w0, Maximum};
use crate::oracle::{fidelity2, qfi_from_fidelity};

/// Repeated application of one affine step, tracking the parameter derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct ComposedEvolution {
    pub channel: AffineChannel,
    pub steps: usize,
    pub state: BlochState,
}

impl ComposedEvolution {
    pub fn new(channel: AffineChannel, initial: &BlochState) -> Self {
        let state = BlochState::new(initial.x(), initial.y(), initial.z())
            .with_derivative(initial.dr.unwrap_or_else(Vector3::zeros));
        Self { channel, steps: 0, state }
    }

    /// `r <- A r + b`, `r' <- A' r + A r' + b'`.
    pub fn step(&mut self) -> Result<()> {
        self.state = self.channel.apply(&self.state);
        self.steps += 1;
        let n = self.state.r.norm();
        if n > 1.0 + 1e-10 {
            return Err(Error::Invalid(format!("Bloch vector norm {n} after step {}", self.steps)));
        }
        Ok(())
    }
}

pub fn compose_n(channel: &AffineChannel, initial: &BlochState, n: usize) -> Result<BlochState> {
    let mut ev = ComposedEvolution::new(*channel, initial);
    for _ in 0..n {
        ev.step()?;
    }
    Ok(ev.state)
}

/// QFI after `n` exact single-mode steps of duration `tau` at amplitude `alpha`.
pub fn composed_qfi(alpha: f64, tau: f64, n: usize, initial: &BlochState) -> Result<f64> {
    // With no interaction time the channel is the identity for every alpha.
    if n == 0 || tau == 0.0 {
        return Ok(0.0);
    }
    let ch = gram_to_affine(&gram_with_derivative(alpha, tau, default_cutoff(alpha))?);
    qfi_bloch(&compose_n(&ch, initial, n)?)
}

/// `4 N^2 tau^2 exp(-N tau^2)`, the short-time form for `N` modes.
pub fn qfi_n_closed(tau: f64, n: usize) -> f64 {
    let n = n as f64;
    4.0 * n * n * tau * tau * (-n * tau * tau).exp()
}

/// `(1/sqrt N, 4N/e)`.
pub fn optimal_sequence(n: usize) -> (f64, f64) {
    let nf = n as f64;
    (1.0 / nf.sqrt(), 4.0 * nf / E)
}

/// Numerical maximum of [`qfi_n_closed`] over `tau` in `(0, 2]`.
pub fn optimal_sequence_numeric(n: usize) -> Maximum {
    bracketed_max(|t| qfi_n_closed(t, n), 0.0, 2.0, 400, 1e-10)
}

/// `8 N^2 R^2 / ((pi nu)^N exp(2 N R^2) - 1)`.
pub fn revival_composition_at(nu: usize, n: usize, r: f64) -> f64 {
    let nf = n as f64;
    8.0 * nf * nf * r * r / ((PI * nu as f64).powi(n as i32) * (2.0 * nf * r * r).exp() - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RevivalComposition {
    /// `-4 N W0(-1/(e (pi nu)^N))`.
    pub bound: f64,
    pub numeric_max: f64,
    pub r_at_max: f64,
}

pub fn revival_composition_qfi(nu: usize, n: usize) -> Result<RevivalComposition> {
    if nu == 0 || n == 0 {
        return Err(Error::Invalid("revival composition needs nu >= 1 and N >= 1".into()));
    }
    let c = (PI * nu as f64).powi(n as i32);
    let bound = -4.0 * n as f64 * lambert_w0(-1.0 / (E * c))?;
    let m = bracketed_max(|r| revival_composition_at(nu, n, r), 0.0, 4.0, 800, 1e-12);
    Ok(RevivalComposition { bound, numeric_max: m.value, r_at_max: m.x })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergencePoint {
    pub dt: f64,
    pub steps: usize,
    pub value: f64,
    pub reference: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub points: Vec<ConvergencePoint>,
    /// `error(dt_k) / error(dt_{k+1})` for consecutive steps.
    pub ratios: Vec<f64>,
}

impl ConvergenceReport {
    fn from_points(points: Vec<ConvergencePoint>) -> Self {
        let ratios = points.windows(2).map(|w| w[0].error / w[1].error).collect();
        Self { points, ratios }
    }

    /// True when every ratio lies in `[lo, hi]`.
    pub fn ratios_within(&self, lo: f64, hi: f64) -> bool {
        !self.ratios.is_empty() && self.ratios.iter().all(|r| (lo..=hi).contains(r))
    }
}

fn steps_for(t_total: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !(t_total >= 0.0) {
        return Err(Error::Invalid(format!("need dt > 0 and t >= 0, got dt={dt}, t={t_total}")));
    }
    Ok((t_total / dt).round() as usize)
}

fn check_decreasing(dt_list: &[f64]) -> Result<()> {
    if dt_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Invalid("dt list must be strictly decreasing".into()));
    }
    Ok(())
}

/// Ground-state QFI after `t / dt` modes, each interacting for `tau = dt`,
/// compared against `4 t^2`.
pub fn infinite_modes_limit(alpha: f64, t_total: f64, dt_list: &[f64]) -> Result<ConvergenceReport> {
    check_decreasing(dt_list)?;
    let reference = 4.0 * t_total * t_total;
    let mut points = Vec::with_capacity(dt_list.len());
    for &dt in dt_list {
        let steps = steps_for(t_total, dt)?;
        let value = composed_qfi(alpha, dt, steps, &BlochState::ground())?;
        points.push(ConvergencePoint { dt, steps, value, reference, error: (value - reference).abs() });
    }
    Ok(ConvergenceReport::from_points(points))
}

/// Final Bloch vector after `t / dt` modes with `tau = sqrt(kappa dt)` and
/// `alpha = epsilon sqrt(dt)`, compared against the master equation at
/// `e = epsilon / sqrt(kappa)`, `s = kappa t`. The reported value is the
/// distance between the two Bloch vectors.
pub fn continuous_limit_check(
    kappa: f64,
    epsilon: f64,
    t_total: f64,
    dt_list: &[f64],
    initial: &BlochState,
) -> Result<ConvergenceReport> {
    check_decreasing(dt_list)?;
    if !(kappa > 0.0) || !(epsilon >= 0.0) {
        return Err(Error::Invalid(format!("need kappa > 0 and epsilon >= 0, got {kappa}, {epsilon}")));
    }
    let target = lindblad::evolve_master(epsilon / kappa.sqrt(), kappa * t_total, initial)?.r;
    let mut points = Vec::with_capacity(dt_list.len());
    for &dt in dt_list {
        let steps = steps_for(t_total, dt)?;
        let alpha = epsilon * dt.sqrt();
        let ch = gram_to_affine(&gram_matrix(alpha, (kappa * dt).sqrt(), default_cutoff(alpha)));
        let mut r = initial.r;
        for _ in 0..steps {
            r = ch.a * r + ch.b;
        }
        let error = (r - target).norm();
        points.push(ConvergencePoint { dt, steps, value: error, reference: 0.0, error });
    }
    Ok(ConvergenceReport::from_points(points))
}

/// Probe state after `n` modes in `|theta>` interacting through the
/// step-dependent unitaries tuned at `alpha`. Step `j` (from 1) swaps the
/// span of `|e, alpha>` and `|g, alpha'>` onto itself so that the component
/// `sqrt(j - 1) |e, alpha> + |g, alpha'>` of the incoming state lands on
/// `|e, alpha>`; the first step is the plain SWAP.
fn encoded_probe(alpha_ket: &FockVector, dot_ket: &FockVector, theta: f64, n: usize) -> Result<Matrix2<f64>> {
    // |-t> has amplitudes (-1)^n <n|t>, which keeps the vacuum differentiable.
    let mut field = coherent_vector(theta.abs(), alpha_ket.n_max)?;
    if theta < 0.0 {
        field.amplitudes.iter_mut().skip(1).step_by(2).for_each(|c| *c = -*c);
    }
    let a = &alpha_ket.amplitudes;
    let ad = &dot_ket.amplitudes;
    let f = &field.amplitudes;
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>();
    let fa = dot(f, a);
    let fad = dot(f, ad);
    let mut rho = Matrix2::new(1.0, 0.0, 0.0, 0.0);
    for j in 1..=n {
        let k = (j - 1) as f64;
        let norm = (k + 1.0).sqrt();
        // Images of |g> (x) f and |e> (x) f as (mode part on g, mode part on e).
        let image = |on_e: bool| -> (Vec<f64>, Vec<f64>) {
            let (p1, p2) = if on_e { (0.0, fa) } else { (fad, 0.0) };
            let psi = (k.sqrt() * p2 + p1) / norm;
            let perp = (p2 - k.sqrt() * p1) / norm;
            let base_g = if on_e { 0.0 } else { 1.0 };
            let base_e = 1.0 - base_g;
            let vg = (0..f.len()).map(|i| base_g * f[i] + (perp - p1) * ad[i]).collect();
            let ve = (0..f.len()).map(|i| base_e * f[i] + (psi - p2) * a[i]).collect();
            (vg, ve)
        };
        let w = [image(false), image(true)];
        let mut next = Matrix2::zeros();
        for ia in 0..2 {
            for ib in 0..2 {
                let c = rho[(ia, ib)];
                if c == 0.0 {
                    continue;
                }
                let (ag, ae) = &w[ia];
                let (bg, be) = &w[ib];
                next[(0, 0)] += c * dot(ag, bg);
                next[(0, 1)] += c * dot(ag, be);
                next[(1, 0)] += c * dot(ae, bg);
                next[(1, 1)] += c * dot(ae, be);
            }
        }
        rho = next;
    }
    Ok(rho)
}

/// Finite-difference Bures QFI of the probe after `n` optimally tuned steps.
pub fn optimal_encoding_check(alpha: f64, n: usize) -> Result<f64> {
    let n_max = choose_cutoff(alpha + 0.5, 1e-18).max(16);
    let a = coherent_vector(alpha, n_max)?;
    let ad = d_alpha_ket(alpha, n_max)?;
    let state = |theta: f64| -> Result<DensityMatrix2> {
        let m = encoded_probe(&a, &ad, theta, n)?;
        Ok(DensityMatrix2::from_real(m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]))
    };
    qfi_from_fidelity(|p, q| Ok(fidelity2(&state(p)?, &state(q)?)), alpha, 0.02)
}
