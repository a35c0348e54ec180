//! Coherent states on a truncated Fock space and Poisson expectations.

use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;

pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

const MIN_CUTOFF: usize = 32;
const FIRST_C: u32 = 12;
const LOG_SPACE_ALPHA: f64 = 25.0;
const MAX_ALPHA: f64 = 600.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    /// Amplitudes on `|0>, ..., |n_max>`.
    pub amplitudes: Vec<f64>,
    pub alpha: f64,
    pub n_max: usize,
    /// Bound on the probability mass beyond `n_max`.
    pub tail_mass: f64,
}

impl FockVector {
    pub fn norm_squared(&self) -> f64 {
        let mut acc = NeumaierSum::new();
        for c in &self.amplitudes {
            acc.add(c * c);
        }
        acc.value()
    }

    pub fn dot(&self, other: &FockVector) -> f64 {
        let mut acc = NeumaierSum::new();
        for (a, b) in self.amplitudes.iter().zip(&other.amplitudes) {
            acc.add(a * b);
        }
        acc.value()
    }
}

/// `ln n!`, exact summation for small `n` and a Stirling series beyond.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 32 {
        return (2..=n).map(|k| (k as f64).ln()).sum();
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

pub fn ln_poisson(n: u64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    2.0 * n as f64 * alpha.ln() - alpha * alpha - ln_factorial(n)
}

/// Bound on `sum_{n > n_max} P(n|alpha)` from the geometric majorant of the
/// ratio `P(n+1)/P(n) = alpha^2/(n+1)`.
pub fn upper_tail_bound(alpha: f64, n_max: usize) -> f64 {
    let a2 = alpha * alpha;
    let next = (n_max + 1) as f64;
    if next + 1.0 <= a2 {
        return 1.0;
    }
    let ratio = a2 / (next + 1.0);
    (ln_poisson(n_max as u64 + 1, alpha).exp() / (1.0 - ratio)).min(1.0)
}

/// Bound on `sum_{n < n_min} P(n|alpha)`.
pub fn lower_tail_bound(alpha: f64, n_min: usize) -> f64 {
    if n_min == 0 {
        return 0.0;
    }
    let a2 = alpha * alpha;
    let prev = (n_min - 1) as f64;
    if prev >= a2 {
        return 1.0;
    }
    (ln_poisson(n_min as u64 - 1, alpha).exp() / (1.0 - prev / a2)).min(1.0)
}

/// Smallest cutoff `ceil(alpha^2 + c alpha + 25)` (integer `c` scanned upward)
/// whose certified upper tail is below `tail_tol`; never below 32.
pub fn choose_cutoff(alpha: f64, tail_tol: f64) -> usize {
    let mut c = FIRST_C;
    loop {
        let n = (alpha * alpha + c as f64 * alpha + 25.0).ceil() as usize;
        let n = n.max(MIN_CUTOFF);
        if upper_tail_bound(alpha, n) < tail_tol {
            return n;
        }
        c += 1;
    }
}

/// Mirror of [`choose_cutoff`] for the lower end of the distribution.
pub fn choose_lower_cutoff(alpha: f64, tail_tol: f64) -> usize {
    let mut c = FIRST_C;
    loop {
        let m = alpha * alpha - c as f64 * alpha - 25.0;
        if m <= 0.0 {
            return 0;
        }
        let m = m.floor() as usize;
        if lower_tail_bound(alpha, m) < tail_tol {
            return m;
        }
        c += 1;
    }
}

/// Coherent state `|alpha>` truncated at `n_max`.
pub fn coherent_vector(alpha: f64, n_max: usize) -> Result<FockVector> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::OutOfDomain { what: "coherent_vector", value: alpha });
    }
    if alpha > MAX_ALPHA {
        return Err(Error::Underflow { alpha });
    }
    let mut amplitudes = vec![0.0; n_max + 1];
    if alpha <= LOG_SPACE_ALPHA {
        let mut c = (-0.5 * alpha * alpha).exp();
        for (n, a) in amplitudes.iter_mut().enumerate() {
            *a = c;
            c *= alpha / ((n + 1) as f64).sqrt();
        }
    } else if upper_tail_bound(alpha, n_max) < 1e-15 {
        // The absolute log-amplitude carries an error of order alpha^2 * eps,
        // so build shape by ratios from the mode and fix the scale by the norm.
        let m = ((alpha * alpha).floor() as usize).min(n_max);
        amplitudes[m] = 1.0;
        for n in m..n_max {
            amplitudes[n + 1] = amplitudes[n] * alpha / ((n + 1) as f64).sqrt();
        }
        for n in (0..m).rev() {
            amplitudes[n] = amplitudes[n + 1] * ((n + 1) as f64).sqrt() / alpha;
        }
        let mut norm = NeumaierSum::new();
        for c in &amplitudes {
            norm.add(c * c);
        }
        let scale = 1.0 / norm.value().sqrt();
        amplitudes.iter_mut().for_each(|c| *c *= scale);
    } else {
        let la = alpha.ln();
        let mut log_c = NeumaierSum::new();
        log_c.add(-0.5 * alpha * alpha);
        for (n, a) in amplitudes.iter_mut().enumerate() {
            if n > 0 {
                log_c.add(la);
                log_c.add(-0.5 * (n as f64).ln());
            }
            *a = log_c.value().exp();
        }
    }
    let out = FockVector { amplitudes, alpha, n_max, tail_mass: upper_tail_bound(alpha, n_max) };
    if alpha > 0.0 && out.amplitudes.iter().all(|&c| c == 0.0) {
        return Err(Error::Underflow { alpha });
    }
    Ok(out)
}

/// Normalised `d|alpha>/d alpha`, orthogonal to `|alpha>`; `|1>` at the vacuum.
pub fn d_alpha_ket(alpha: f64, n_max: usize) -> Result<FockVector> {
    if alpha == 0.0 {
        let mut amplitudes = vec![0.0; n_max + 1];
        if n_max >= 1 {
            amplitudes[1] = 1.0;
        }
        return Ok(FockVector { amplitudes, alpha, n_max, tail_mass: 0.0 });
    }
    let coh = coherent_vector(alpha, n_max)?;
    let a2 = alpha * alpha;
    let amplitudes = coh.amplitudes.iter().enumerate().map(|(n, c)| c * (n as f64 - a2) / alpha).collect();
    let mut out = FockVector { amplitudes, alpha, n_max, tail_mass: 0.0 };
    out.tail_mass = (1.0 - out.norm_squared()).max(0.0);
    Ok(out)
}

/// `sum_{n <= n_max} P(n|alpha) f(n)` with compensated accumulation.
pub fn poisson_expect<F: Fn(usize) -> f64>(alpha: f64, f: F, n_max: usize) -> Result<f64> {
    let coh = coherent_vector(alpha, n_max)?;
    let mut acc = NeumaierSum::new();
    for (n, c) in coh.amplitudes.iter().enumerate() {
        let p = c * c;
        if p != 0.0 {
            acc.add(p * f(n));
        }
    }
    Ok(acc.value())
}

/// Poisson weights restricted to the window `[n_lo, n_hi]` carrying all but
/// `tail_mass` of the distribution. Weights are built outward from the mode
/// by the exact ratio recurrence and normalised to unit sum, which avoids the
/// `exp(-alpha^2)` underflow entirely.
#[derive(Debug, Clone)]
pub struct PoissonWindow {
    pub alpha: f64,
    pub n_lo: usize,
    pub n_hi: usize,
    pub weights: Vec<f64>,
    pub tail_mass: f64,
}

impl PoissonWindow {
    pub fn new(alpha: f64, tail_tol: f64) -> Self {
        let n_hi = choose_cutoff(alpha, 0.5 * tail_tol);
        Self::with_cutoff(alpha, n_hi, tail_tol)
    }

    pub fn with_cutoff(alpha: f64, n_hi: usize, tail_tol: f64) -> Self {
        let n_lo = choose_lower_cutoff(alpha, 0.5 * tail_tol).min(n_hi);
        let a2 = alpha * alpha;
        let len = n_hi - n_lo + 1;
        let mut weights = vec![0.0; len];
        if alpha == 0.0 {
            weights[0] = 1.0;
        } else {
            let mode = (a2.floor() as usize).clamp(n_lo, n_hi);
            let m = mode - n_lo;
            weights[m] = 1.0;
            for i in m + 1..len {
                weights[i] = weights[i - 1] * a2 / (n_lo + i) as f64;
            }
            for i in (0..m).rev() {
                weights[i] = weights[i + 1] * (n_lo + i + 1) as f64 / a2;
            }
            let mut s = NeumaierSum::new();
            for w in &weights {
                s.add(*w);
            }
            let inv = 1.0 / s.value();
            for w in &mut weights {
                *w *= inv;
            }
        }
        let tail_mass = upper_tail_bound(alpha, n_hi) + lower_tail_bound(alpha, n_lo);
        Self { alpha, n_lo, n_hi, weights, tail_mass }
    }

    /// Iterate `(n, P(n))` over the window.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.weights.iter().enumerate().map(move |(i, &w)| (self.n_lo + i, w))
    }

    pub fn expect<F: Fn(usize) -> f64>(&self, f: F) -> f64 {
        let mut acc = NeumaierSum::new();
        for (n, w) in self.iter() {
            acc.add(w * f(n));
        }
        acc.value()
    }
}
