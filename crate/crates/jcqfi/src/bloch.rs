//! Qubit states in Bloch form and the two-level Fisher-information evaluators.
//!
//! Basis ordering is `(|g>, |e>)`, so the ground state sits at `z = +1` and
//! `rho_ge = (x - i y) / 2`.

use nalgebra::{Matrix2, Vector3};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Purity gap below which a state is treated as pure.
pub const PURE_ETA: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochState {
    pub r: Vector3<f64>,
    /// First derivative with respect to the estimated parameter.
    pub dr: Option<Vector3<f64>>,
    /// Second derivative with respect to the estimated parameter.
    pub ddr: Option<Vector3<f64>>,
}

impl BlochState {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { r: Vector3::new(x, y, z), dr: None, ddr: None }
    }

    pub fn ground() -> Self {
        Self::new(0.0, 0.0, 1.0)
    }

    pub fn excited() -> Self {
        Self::new(0.0, 0.0, -1.0)
    }

    pub fn with_derivative(mut self, dr: Vector3<f64>) -> Self {
        self.dr = Some(dr);
        self
    }

    pub fn with_second_derivative(mut self, ddr: Vector3<f64>) -> Self {
        self.ddr = Some(ddr);
        self
    }

    pub fn x(&self) -> f64 {
        self.r.x
    }
    pub fn y(&self) -> f64 {
        self.r.y
    }
    pub fn z(&self) -> f64 {
        self.r.z
    }

    pub fn is_physical(&self) -> bool {
        let finite = |v: &Vector3<f64>| v.iter().all(|c| c.is_finite());
        finite(&self.r)
            && self.r.norm_squared() <= 1.0 + 1e-12
            && self.dr.as_ref().map_or(true, finite)
            && self.ddr.as_ref().map_or(true, finite)
    }

    pub fn density(&self) -> DensityMatrix2 {
        DensityMatrix2::from_bloch(&self.r)
    }
}

/// A 2x2 Hermitian matrix. Used both for states and for their derivatives,
/// so unit trace is not enforced at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix2 {
    pub m: Matrix2<C64>,
}

impl DensityMatrix2 {
    pub fn new(m: Matrix2<C64>) -> Self {
        Self { m }
    }

    /// `(trace * 1 + r . sigma) / 2`
    pub fn from_bloch_with_trace(trace: f64, r: &Vector3<f64>) -> Self {
        let h = |v: f64| C64::new(0.5 * v, 0.0);
        let off = C64::new(0.5 * r.x, -0.5 * r.y);
        Self { m: Matrix2::new(h(trace + r.z), off, off.conj(), h(trace - r.z)) }
    }

    pub fn from_bloch(r: &Vector3<f64>) -> Self {
        Self::from_bloch_with_trace(1.0, r)
    }

    pub fn from_real(gg: f64, ge: f64, ee: f64) -> Self {
        let c = |v: f64| C64::new(v, 0.0);
        Self { m: Matrix2::new(c(gg), c(ge), c(ge), c(ee)) }
    }

    pub fn trace(&self) -> f64 {
        (self.m[(0, 0)] + self.m[(1, 1)]).re
    }

    pub fn bloch(&self) -> Vector3<f64> {
        let ge = self.m[(0, 1)];
        Vector3::new(2.0 * ge.re, -2.0 * ge.im, (self.m[(0, 0)] - self.m[(1, 1)]).re)
    }

    pub fn hermiticity_error(&self) -> f64 {
        (self.m - self.m.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eigenvalues(&self) -> (f64, f64) {
        let t = self.trace();
        let r = self.bloch().norm();
        (0.5 * (t - r), 0.5 * (t + r))
    }

    pub fn determinant(&self) -> f64 {
        (self.m[(0, 0)] * self.m[(1, 1)] - self.m[(0, 1)] * self.m[(1, 0)]).re
    }

    /// Hermitian, unit trace and positive semidefinite within `tol`.
    pub fn is_state(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol && (self.trace() - 1.0).abs() <= tol && self.eigenvalues().0 >= -tol
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.m - other.m).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Two-level QFI from the Bloch vector and its first derivative, switching to
/// the second-derivative formula when the state is pure.
pub fn qfi_bloch(state: &BlochState) -> Result<f64> {
    let dr = state.dr.ok_or(Error::MissingDerivative)?;
    let r = &state.r;
    let r2 = r.norm_squared();
    let gap = 1.0 - r2;
    if gap > PURE_ETA {
        // Equivalent to (|dr|^2 - |dr x r|^2) / (1 - |r|^2) without the cancellation.
        let dot = dr.dot(r);
        return Ok(dr.norm_squared() + dot * dot / gap);
    }
    let radial = if r2 > 0.0 { dr.dot(r).abs() / r2.sqrt() } else { 0.0 };
    if radial > PURE_ETA.sqrt() {
        return Err(Error::NearPureUnbounded { gap, radial });
    }
    qfi_pure_limit(state)
}

/// Pure-state QFI: the norm of the component of the second derivative along `r`.
pub fn qfi_pure_limit(state: &BlochState) -> Result<f64> {
    let ddr = state.ddr.ok_or(Error::MissingSecondDerivative)?;
    let n = state.r.norm();
    if n == 0.0 {
        return Ok(0.0);
    }
    Ok(ddr.dot(&state.r).abs() / n)
}

/// Symmetric logarithmic derivative `L` with `(L rho + rho L) / 2 = drho`.
pub fn sld(rho: &DensityMatrix2, drho: &DensityMatrix2) -> Result<DensityMatrix2> {
    let (min_eig, _) = rho.eigenvalues();
    if min_eig <= 1e-12 {
        return Err(Error::RankDeficient { min_eig });
    }
    // Write L = a 1 + l . sigma and match coefficients of the anticommutator.
    let t = rho.trace();
    let r = rho.bloch() / t;
    let dt = drho.trace();
    let d = drho.bloch();
    let a = (dt / t - d.dot(&r) / t) / (1.0 - r.norm_squared());
    let l = d / t - r * a;
    Ok(DensityMatrix2::from_bloch_with_trace(2.0 * a, &(2.0 * l)))
}

/// `Tr(L^2 rho)` for the SLD of `(rho, drho)`.
pub fn qfi_sld(rho: &DensityMatrix2, drho: &DensityMatrix2) -> Result<f64> {
    let l = sld(rho, drho)?;
    Ok((l.m * l.m * rho.m).trace().re)
}

/// Classical Fisher information of a population (sigma_z) measurement.
pub fn fi_population(z: f64, dz: f64) -> Result<f64> {
    if dz == 0.0 {
        return Ok(0.0);
    }
    let gap = 1.0 - z * z;
    if gap <= 1e-12 {
        if dz * dz > 1e-12 {
            return Err(Error::DegenerateDistribution { z, dz });
        }
        return Ok(if gap > 0.0 { dz * dz / gap } else { 0.0 });
    }
    Ok(dz * dz / gap)
}

pub fn purity(state: &BlochState) -> f64 {
    state.r.norm_squared()
}
