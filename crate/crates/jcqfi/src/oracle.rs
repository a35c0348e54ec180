//! Brute-force reference: joint atom-field evolution on a truncated Fock
//! space, partial trace, and finite-difference Bures QFI.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::bloch::{BlochState, DensityMatrix2};
use crate::error::{Error, Result};
use crate::fock::FockVector;
use crate::numeric::NeumaierSum;

/// Amplitudes on `|g, n>` and `|e, n>`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub cg: Vec<f64>,
    pub ce: Vec<f64>,
}

impl JointState {
    pub fn product(atom0: &BlochState, field0: &FockVector) -> Result<Self> {
        let r = atom0.r;
        if r.y.abs() > 1e-12 || (r.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::Invalid("joint evolution needs a pure real atomic state".into()));
        }
        // x = sin(theta), z = cos(theta) for cos(theta/2)|g> + sin(theta/2)|e>.
        let theta = r.x.atan2(r.z);
        let (ae, ag) = (0.5 * theta).sin_cos();
        Ok(Self {
            cg: field0.amplitudes.iter().map(|c| ag * c).collect(),
            ce: field0.amplitudes.iter().map(|c| ae * c).collect(),
        })
    }

    pub fn norm_squared(&self) -> f64 {
        let mut acc = NeumaierSum::new();
        for v in self.cg.iter().chain(&self.ce) {
            acc.add(v * v);
        }
        acc.value()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.cg
            .iter()
            .zip(&other.cg)
            .chain(self.ce.iter().zip(&other.ce))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn padded(&self, len: usize) -> Self {
        let mut out = self.clone();
        out.cg.resize(len, 0.0);
        out.ce.resize(len, 0.0);
        out
    }

    fn truncated(&self, len: usize) -> Self {
        Self { cg: self.cg[..len].to_vec(), ce: self.ce[..len].to_vec() }
    }
}

/// Closed-form 2x2 blocks of `exp(tau (sigma_+ a - sigma_- a^dagger))` on
/// the pairs `(|e, n>, |g, n+1>)`. The top excited level has no partner in the
/// truncated space and only picks up the cosine.
fn block_evolve(tau: f64, s: &JointState) -> JointState {
    let len = s.cg.len();
    let mut out = s.clone();
    for n in 0..len {
        let (sn, cn) = (tau * ((n + 1) as f64).sqrt()).sin_cos();
        if n + 1 < len {
            out.ce[n] = cn * s.ce[n] + sn * s.cg[n + 1];
            out.cg[n + 1] = -sn * s.ce[n] + cn * s.cg[n + 1];
        } else {
            out.ce[n] = cn * s.ce[n];
        }
    }
    out
}

pub fn joint_evolve(tau: f64, atom0: &BlochState, field0: &FockVector) -> Result<JointState> {
    Ok(block_evolve(tau, &JointState::product(atom0, field0)?))
}

/// Dense `exp(tau K)` of the truncated real antisymmetric generator, through the
/// eigendecomposition of the Hermitian matrix `i K`.
fn dense_evolve(tau: f64, s: &JointState) -> JointState {
    let len = s.cg.len();
    let dim = 2 * len;
    let e = |n: usize| len + n;
    let mut h = DMatrix::<C64>::zeros(dim, dim);
    for n in 0..len.saturating_sub(1) {
        // K |g, n+1> = sqrt(n+1) |e, n>,  K |e, n> = -sqrt(n+1) |g, n+1>.
        let k = ((n + 1) as f64).sqrt();
        h[(e(n), n + 1)] = C64::new(0.0, k);
        h[(n + 1, e(n))] = C64::new(0.0, -k);
    }
    let eig = nalgebra::SymmetricEigen::new(h);
    let v = &eig.eigenvectors;
    let psi = DVector::<C64>::from_iterator(dim, s.cg.iter().chain(&s.ce).map(|&x| C64::new(x, 0.0)));
    let mut coeff = v.adjoint() * psi;
    for (k, c) in coeff.iter_mut().enumerate() {
        *c *= C64::from_polar(1.0, -tau * eig.eigenvalues[k]);
    }
    let out = v * coeff;
    JointState { cg: (0..len).map(|n| out[n].re).collect(), ce: (0..len).map(|n| out[e(n)].re).collect() }
}

/// Same evolution by dense matrix exponential. The two routes differ only at
/// the truncation boundary; when they disagree by more than 1e-8 both are
/// recomputed on a doubled, zero-padded space.
pub fn joint_evolve_expm(tau: f64, atom0: &BlochState, field0: &FockVector) -> Result<JointState> {
    let s = JointState::product(atom0, field0)?;
    let dense = dense_evolve(tau, &s);
    let diff = dense.max_abs_diff(&block_evolve(tau, &s));
    if diff <= 1e-8 {
        return Ok(dense);
    }
    let len = s.cg.len();
    let big = s.padded(2 * len);
    let dense2 = dense_evolve(tau, &big);
    let diff2 = dense2.max_abs_diff(&block_evolve(tau, &big));
    if diff2 > 1e-6 {
        return Err(Error::CutoffTooSmall { n_max: len - 1, diff: diff2 });
    }
    Ok(dense2.truncated(len))
}

pub fn reduced_state(js: &JointState) -> DensityMatrix2 {
    let mut gg = NeumaierSum::new();
    let mut ee = NeumaierSum::new();
    let mut ge = NeumaierSum::new();
    for (g, e) in js.cg.iter().zip(&js.ce) {
        gg.add(g * g);
        ee.add(e * e);
        ge.add(g * e);
    }
    DensityMatrix2::from_real(gg.value(), ge.value(), ee.value())
}

/// Uhlmann fidelity `||sqrt(rho) sqrt(sigma)||_1` of two qubit states.
pub fn fidelity2(rho: &DensityMatrix2, sigma: &DensityMatrix2) -> f64 {
    let overlap = (rho.m * sigma.m).trace().re;
    let dets = rho.determinant().max(0.0) * sigma.determinant().max(0.0);
    (overlap + 2.0 * dets.sqrt()).max(0.0).sqrt()
}

/// Fidelity of two real pure field states.
pub fn pure_fidelity(a: &FockVector, b: &FockVector) -> f64 {
    a.dot(b).abs()
}

/// Bures QFI `8 (1 - F(theta - h/2, theta + h/2)) / h^2` from an arbitrary
/// fidelity, with Richardson extrapolation over step halving until successive
/// estimates change by less than 1e-5.
pub fn qfi_from_fidelity<F>(mut fidelity: F, theta: f64, h0: f64) -> Result<f64>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    let mut raw = |h: f64| -> Result<f64> {
        let f = fidelity(theta - 0.5 * h, theta + 0.5 * h)?;
        Ok(8.0 * (1.0 - f) / (h * h))
    };
    let mut h = h0;
    let mut prev_raw = raw(h)?;
    let mut prev_ext: Option<f64> = None;
    let mut change = f64::INFINITY;
    while h >= 1e-6 {
        h *= 0.5;
        let cur = raw(h)?;
        // Symmetric differences have an O(h^2) leading error.
        let ext = (4.0 * cur - prev_raw) / 3.0;
        if let Some(p) = prev_ext {
            change = (ext - p).abs();
            if change < 1e-5 {
                return Ok(ext);
            }
        }
        prev_ext = Some(ext);
        prev_raw = cur;
    }
    Err(Error::NoConvergence { change })
}

/// Finite-difference QFI of a qubit family `theta -> rho_theta`.
pub fn qfi_finite_difference<F>(mut family: F, theta: f64, h: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<DensityMatrix2>,
{
    qfi_from_fidelity(|a, b| Ok(fidelity2(&family(a)?, &family(b)?)), theta, h)
}
