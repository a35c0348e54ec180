//! Small numerical kernels shared by the physics modules.

use crate::error::{Error, Result};

/// Neumaier (improved Kahan) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub const fn new() -> Self {
        Self { sum: 0.0, comp: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut acc = NeumaierSum::new();
    for v in it {
        acc.add(v);
    }
    acc.value()
}

/// Principal branch of the Lambert W function, `w e^w = x`, `w >= -1`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    let branch = -1.0 / std::f64::consts::E;
    if x.is_nan() || x < branch {
        return Err(Error::OutOfDomain { what: "lambert_w0", value: x });
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == branch {
        return Ok(-1.0);
    }
    // Seed: branch-point series near -1/e, logarithmic for large x, x otherwise.
    let mut w = if x < -0.3 {
        let p = (2.0 * (std::f64::consts::E * x + 1.0)).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < 3.0 {
        (1.0 + x).ln() * 0.8
    } else {
        let l = x.ln();
        l - l.ln()
    };
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        w -= step;
        if step.abs() <= 1e-15 * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w.max(-1.0))
}

/// Result of a one-dimensional maximisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
}

/// Golden-section search for a maximum of a unimodal `f` on `[a, b]`.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Maximum {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let value = f(x);
    let best = [(x, value), (c, fc), (d, fd)]
        .into_iter()
        .fold((x, value), |acc, p| if p.1 > acc.1 { p } else { acc });
    Maximum { x: best.0, value: best.1 }
}

/// Coarse uniform scan of `[a, b]` with `n` intervals followed by golden-section
/// refinement around the best grid point.
pub fn bracketed_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize, tol: f64) -> Maximum {
    let n = n.max(2);
    let h = (b - a) / n as f64;
    let mut best = (0usize, f64::NEG_INFINITY);
    for i in 0..=n {
        let v = f(a + h * i as f64);
        if v > best.1 {
            best = (i, v);
        }
    }
    let lo = a + h * best.0.saturating_sub(1) as f64;
    let hi = (a + h * (best.0 + 1) as f64).min(b);
    let refined = golden_max(&mut f, lo, hi, tol);
    if refined.value >= best.1 {
        refined
    } else {
        Maximum { x: a + h * best.0 as f64, value: best.1 }
    }
}

/// Gauss-Hermite nodes and weights for `int exp(-u^2) f(u) du`, by the
/// Golub-Welsch eigenvalue method.
pub fn gauss_hermite(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order.max(1);
    let mut jac = nalgebra::DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        let b = (i as f64 / 2.0).sqrt();
        jac[(i, i - 1)] = b;
        jac[(i - 1, i)] = b;
    }
    let eig = nalgebra::SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], std::f64::consts::PI.sqrt() * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}
