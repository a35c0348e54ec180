//! Large-amplitude form of the channel: collapse, fast revivals near
//! `tau = 2 pi alpha nu`, the slow coherence phase, and late revivals near
//! `tau = 8 pi nu alpha^3`, with the closed-form QFI optima of each regime.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{Matrix3, Vector3};

use crate::bloch::{self, BlochState};
use crate::error::{Error, Result};
use crate::jc_channel::AffineChannel;
use crate::numeric::lambert_w0;

pub const MIN_ALPHA: f64 = 10.0;
pub const WARN_ALPHA: f64 = 20.0;
pub const PRUNE: f64 = 1e-14;

/// Fast-phase term `R^nu_{Q, Phi}` and its alpha-derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FastTerm {
    pub nu: usize,
    pub q: f64,
    pub phi: f64,
    pub dq: f64,
    pub dphi: f64,
}

/// Slow-phase term `D^nu_{P, Omega}` and its alpha-derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlowTerm {
    pub nu: usize,
    pub p: f64,
    pub omega: f64,
    pub dp: f64,
    pub domega: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticChannel {
    pub alpha: f64,
    pub tau: f64,
    pub fast_terms: Vec<FastTerm>,
    pub slow_terms: Vec<SlowTerm>,
    pub nu_max_fast: usize,
    pub nu_max_slow: usize,
    /// Set for `10 <= alpha < 20`, where the leading order is rough.
    pub low_alpha_warning: bool,
}

fn sign(nu: usize) -> f64 {
    if nu % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn fast_term(alpha: f64, tau: f64, nu: usize) -> FastTerm {
    if nu == 0 {
        return FastTerm { nu, q: (-0.5 * tau * tau).exp(), phi: 2.0 * alpha * tau, dq: 0.0, dphi: 2.0 * tau };
    }
    let pn = PI * nu as f64;
    let r = revival_r(alpha, tau, nu);
    let q = (-r * r).exp() / pn.sqrt();
    FastTerm { nu, q, phi: tau * tau / (2.0 * pn) - 0.25 * PI, dq: 2.0 * SQRT_2 * r * q, dphi: 0.0 }
}

pub fn slow_term(alpha: f64, tau: f64, nu: usize) -> SlowTerm {
    if nu == 0 {
        let a4 = alpha.powi(4);
        let p = (-tau * tau / (32.0 * a4)).exp();
        return SlowTerm {
            nu,
            p,
            omega: tau / (2.0 * alpha),
            dp: p * tau * tau / (8.0 * a4 * alpha),
            domega: -tau / (2.0 * alpha * alpha),
        };
    }
    let pn = PI * nu as f64;
    let f = late_revival_f(alpha, tau, nu);
    let p = (-f * f).exp() / (3.0 * pn).sqrt();
    SlowTerm {
        nu,
        p,
        omega: 1.5 * pn.cbrt() * tau.powf(2.0 / 3.0) + 0.25 * PI,
        dp: 2.0 * SQRT_2 * f * p,
        domega: 0.0,
    }
}

/// `R_nu = (tau - 2 pi alpha nu) / (sqrt 2 pi nu)`.
pub fn revival_r(alpha: f64, tau: f64, nu: usize) -> f64 {
    let pn = PI * nu as f64;
    (tau - 2.0 * alpha * pn) / (SQRT_2 * pn)
}

/// `F_nu = (tau^(1/3) - 2 (pi nu)^(1/3) alpha) / (sqrt 2 (pi nu)^(1/3))`.
pub fn late_revival_f(alpha: f64, tau: f64, nu: usize) -> f64 {
    let c = (PI * nu as f64).cbrt();
    (tau.cbrt() - 2.0 * c * alpha) / (SQRT_2 * c)
}

fn terms(alpha: f64, tau: f64, nu_max: Option<usize>) -> AsymptoticChannel {
    let nu_max_fast = nu_max.unwrap_or_else(|| (tau / (PI * alpha)).ceil() as usize + 3);
    let nu_max_slow = nu_max.unwrap_or_else(|| (tau / (4.0 * PI * alpha.powi(3))).ceil() as usize + 3);
    let fast_terms = (0..=nu_max_fast).map(|nu| fast_term(alpha, tau, nu)).filter(|t| t.q >= PRUNE).collect();
    let slow_terms = (0..=nu_max_slow).map(|nu| slow_term(alpha, tau, nu)).filter(|t| t.p >= PRUNE).collect();
    AsymptoticChannel {
        alpha,
        tau,
        fast_terms,
        slow_terms,
        nu_max_fast,
        nu_max_slow,
        low_alpha_warning: alpha < WARN_ALPHA,
    }
}

/// Collects every term up to `nu_max` (or the default per-family range) with
/// amplitude at least [`PRUNE`].
pub fn build_asymptotic_channel(alpha: f64, tau: f64, nu_max: Option<usize>) -> Result<AsymptoticChannel> {
    if !(alpha >= MIN_ALPHA) {
        return Err(Error::AlphaTooSmall { alpha, min: MIN_ALPHA });
    }
    Ok(terms(alpha, tau, nu_max))
}

impl AsymptoticChannel {
    /// Bloch-affine form with alpha-derivatives.
    pub fn affine(&self) -> AffineChannel {
        let mut a = Matrix3::zeros();
        let mut da = Matrix3::zeros();
        let mut b = Vector3::zeros();
        let mut db = Vector3::zeros();
        for t in &self.fast_terms {
            let sg = sign(t.nu);
            let (s, c) = t.phi.sin_cos();
            let dc = t.dq * c - t.q * s * t.dphi;
            let ds = t.dq * s + t.q * c * t.dphi;
            a[(0, 0)] += sg * t.q * c;
            a[(0, 2)] += sg * t.q * s;
            a[(2, 0)] -= t.q * s;
            a[(2, 2)] += t.q * c;
            da[(0, 0)] += sg * dc;
            da[(0, 2)] += sg * ds;
            da[(2, 0)] -= ds;
            da[(2, 2)] += dc;
        }
        for t in &self.slow_terms {
            let sg = sign(t.nu);
            let (s, c) = t.omega.sin_cos();
            b[0] += sg * t.p * s;
            a[(1, 1)] += sg * t.p * c;
            db[0] += sg * (t.dp * s + t.p * c * t.domega);
            da[(1, 1)] += sg * (t.dp * c - t.p * s * t.domega);
        }
        AffineChannel { a, b, da: Some(da), db: Some(db) }
    }
}

/// Asymptotic state and alpha-derivative for a real initial state.
pub fn asymptotic_state(alpha: f64, tau: f64, initial: &BlochState, nu_max: Option<usize>) -> Result<BlochState> {
    let ch = build_asymptotic_channel(alpha, tau, nu_max)?;
    Ok(ch.affine().apply(&BlochState::new(initial.x(), initial.y(), initial.z())))
}

/// `4 tau^2 exp(-tau^2)`.
pub fn qfi_short_time(tau: f64) -> f64 {
    4.0 * tau * tau * (-tau * tau).exp()
}

/// Phase-optimised QFI near the `nu`-th fast revival.
pub fn qfi_revival(alpha: f64, tau: f64, nu: usize) -> f64 {
    let r = revival_r(alpha, tau, nu);
    8.0 * r * r / (PI * nu as f64 * (2.0 * r * r).exp() - 1.0)
}

/// Envelope of the QFI on the `tau ~ alpha^2` scale.
pub fn qfi_alphasq(alpha: f64, tau: f64) -> f64 {
    let a4 = alpha.powi(4);
    tau * tau / (4.0 * a4) * (-tau * tau / (16.0 * a4)).exp()
}

/// Phase-optimised QFI near the `nu`-th late revival.
pub fn qfi_late_revival(alpha: f64, tau: f64, nu: usize) -> f64 {
    let f = late_revival_f(alpha, tau, nu);
    8.0 * f * f / (3.0 * PI * nu as f64 * (2.0 * f * f).exp() - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RevivalOptimum {
    pub qfi: f64,
    /// Distance of the two optimal times from the revival centre `2 pi alpha nu`.
    pub tau_offset: f64,
}

/// `-4 W0(-1/(e pi nu))` at `tau = 2 pi alpha nu +- pi nu sqrt(1 + W0)`.
pub fn optimal_revival_qfi(nu: usize) -> Result<RevivalOptimum> {
    let pn = PI * nu as f64;
    let w = lambert_w0(-1.0 / (std::f64::consts::E * pn))?;
    Ok(RevivalOptimum { qfi: -4.0 * w, tau_offset: pn * (1.0 + w).sqrt() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LateRevivalOptimum {
    pub qfi: f64,
    pub tau_minus: f64,
    pub tau_plus: f64,
}

/// Quoted late-revival optimum `-8 W0(-1/(3 e pi nu))` at
/// `tau = pi nu (2 alpha +- 2 sqrt(1 + W0))^3`.
///
/// This is twice the maximum of [`qfi_late_revival`], which is
/// `-4 W0(-1/(3 e pi nu))` at `tau = pi nu (2 alpha +- sqrt(1 + W0))^3`; see
/// [`late_revival_formula_max`].
pub fn optimal_late_revival(alpha: f64, nu: usize) -> Result<LateRevivalOptimum> {
    let pn = PI * nu as f64;
    let w = lambert_w0(-1.0 / (3.0 * std::f64::consts::E * pn))?;
    let d = 2.0 * (1.0 + w).sqrt();
    Ok(LateRevivalOptimum {
        qfi: -8.0 * w,
        tau_minus: pn * (2.0 * alpha - d).powi(3),
        tau_plus: pn * (2.0 * alpha + d).powi(3),
    })
}

/// Exact maximiser of [`qfi_late_revival`] over time.
pub fn late_revival_formula_max(alpha: f64, nu: usize) -> Result<LateRevivalOptimum> {
    let pn = PI * nu as f64;
    let w = lambert_w0(-1.0 / (3.0 * std::f64::consts::E * pn))?;
    let d = (1.0 + w).sqrt();
    Ok(LateRevivalOptimum {
        qfi: -4.0 * w,
        tau_minus: pn * (2.0 * alpha - d).powi(3),
        tau_plus: pn * (2.0 * alpha + d).powi(3),
    })
}

/// Population-measurement Fisher information of the ground-state input,
/// from the fast term of the nearest revival `nu = round(tau / (2 pi alpha))`.
/// In the collapse regime this is
/// `4 tau^2 sin^2(2 alpha tau) / (exp(tau^2) - cos^2(2 alpha tau))`.
pub fn fi_population_asymptotic(alpha: f64, tau: f64) -> Result<f64> {
    let nu = (tau / (2.0 * PI * alpha)).round() as usize;
    let t = fast_term(alpha, tau, nu);
    let (s, c) = t.phi.sin_cos();
    bloch::fi_population(t.q * c, t.dq * c - t.q * s * t.dphi)
}
