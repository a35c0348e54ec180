//! Driven-dissipative qubit of the continuous-field limit,
//! `d rho/ds = -i e [sigma_y, rho] + L_{sigma_-}[rho]` with `e = epsilon/sqrt(kappa)`
//! and `s = kappa t`.
//!
//! In Bloch form `r' = A r + b` with
//! `A = [[-1/2, 0, 2e], [0, -1/2, 0], [-2e, 0, -1]]` and `b = (0, 0, 1)`.
//! The state and its first two `e`-derivatives are propagated together as one
//! constant-coefficient linear system and solved with a single matrix
//! exponential, so the drift never needs to be diagonalisable.

use nalgebra::{SMatrix, SVector, Vector3};

use crate::bloch::{qfi_bloch, BlochState};
use crate::error::{Error, Result};
use crate::numeric::{bracketed_max, golden_max, Maximum};

/// Upper end of the optimisation bracket in `s`.
pub const S_MAX: f64 = 60.0;
const SCAN_POINTS: usize = 1200;
const S_TOL: f64 = 1e-8;

type Aug = SMatrix<f64, 10, 10>;

fn drift(eps_bar: f64) -> nalgebra::Matrix3<f64> {
    nalgebra::Matrix3::new(-0.5, 0.0, 2.0 * eps_bar, 0.0, -0.5, 0.0, -2.0 * eps_bar, 0.0, -1.0)
}

fn generator(eps_bar: f64) -> Aug {
    // Blocks: [r, r', r'', 1] with r'' driven by 2 dA r'.
    let a = drift(eps_bar);
    let da = nalgebra::Matrix3::new(0.0, 0.0, 2.0, 0.0, 0.0, 0.0, -2.0, 0.0, 0.0);
    let mut m = Aug::zeros();
    for k in 0..3 {
        m.fixed_view_mut::<3, 3>(3 * k, 3 * k).copy_from(&a);
    }
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&da);
    m.fixed_view_mut::<3, 3>(6, 3).copy_from(&(da * 2.0));
    m[(2, 9)] = 1.0;
    m
}

/// State at time `s` with first and second derivatives in `eps_bar`.
pub fn evolve_master(eps_bar: f64, s: f64, initial: &BlochState) -> Result<BlochState> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::OutOfDomain { what: "evolve_master time", value: s });
    }
    let mut v = SVector::<f64, 10>::zeros();
    v.fixed_rows_mut::<3>(0).copy_from(&initial.r);
    v[9] = 1.0;
    let out = (generator(eps_bar) * s).exp() * v;
    Ok(BlochState::new(out[0], out[1], out[2])
        .with_derivative(out.fixed_rows::<3>(3).into_owned())
        .with_second_derivative(out.fixed_rows::<3>(6).into_owned()))
}

/// States on a grid of times for a fixed `eps_bar`.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladTrajectory {
    pub eps_bar: f64,
    pub s_grid: Vec<f64>,
    pub states: Vec<BlochState>,
}

impl LindbladTrajectory {
    pub fn new(eps_bar: f64, s_grid: &[f64], initial: &BlochState) -> Result<Self> {
        if s_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("time grid must be strictly increasing".into()));
        }
        let states = s_grid.iter().map(|&s| evolve_master(eps_bar, s, initial)).collect::<Result<_>>()?;
        Ok(Self { eps_bar, s_grid: s_grid.to_vec(), states })
    }
}

pub fn qfi_lindblad(eps_bar: f64, s: f64, initial: &BlochState) -> Result<f64> {
    qfi_bloch(&evolve_master(eps_bar, s, initial)?)
}

/// Fixed point `(4e, 0, 1) / (1 + 8 e^2)` with its `e`-derivative.
pub fn steady_state(eps_bar: f64) -> BlochState {
    let d = 1.0 + 8.0 * eps_bar * eps_bar;
    let dd = 16.0 * eps_bar;
    BlochState::new(4.0 * eps_bar / d, 0.0, 1.0 / d)
        .with_derivative(Vector3::new(4.0 / d - 4.0 * eps_bar * dd / (d * d), 0.0, -dd / (d * d)))
}

/// `(4 / (1 + 8 e^2))^2`.
pub fn steady_qfi(eps_bar: f64) -> f64 {
    (4.0 / (1.0 + 8.0 * eps_bar * eps_bar)).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeOptimum {
    pub s: f64,
    pub value: f64,
    /// False when the objective is still rising at [`S_MAX`].
    pub interior: bool,
}

fn optimise<F: Fn(f64) -> f64>(f: F) -> TimeOptimum {
    let h = S_MAX / SCAN_POINTS as f64;
    let mut best = (1usize, f64::NEG_INFINITY);
    for i in 1..=SCAN_POINTS {
        let v = f(h * i as f64);
        if v > best.1 {
            best = (i, v);
        }
    }
    if best.0 == SCAN_POINTS {
        return TimeOptimum { s: S_MAX, value: best.1, interior: false };
    }
    let lo = (h * (best.0 - 1) as f64).max(1e-9);
    let Maximum { x, value } = golden_max(&f, lo, h * (best.0 + 1) as f64, S_TOL);
    TimeOptimum { s: x, value, interior: true }
}

fn qfi_or_nan(eps_bar: f64, s: f64, initial: &BlochState) -> f64 {
    qfi_lindblad(eps_bar, s, initial).unwrap_or(f64::NAN)
}

/// `sup_s QFI` on `(0, S_MAX]`.
pub fn max_qfi(eps_bar: f64, initial: &BlochState) -> TimeOptimum {
    optimise(|s| qfi_or_nan(eps_bar, s, initial))
}

/// `sup_s QFI / s` on `(0, S_MAX]`.
pub fn qfi_rate(eps_bar: f64, initial: &BlochState) -> TimeOptimum {
    optimise(|s| qfi_or_nan(eps_bar, s, initial) / s)
}

/// Dense uniform scan of `QFI(s)` used to cross-check [`max_qfi`].
pub fn scan_max_qfi(eps_bar: f64, initial: &BlochState, points: usize) -> Maximum {
    bracketed_max(|s| qfi_or_nan(eps_bar, s, initial), 1e-6, S_MAX, points, S_TOL)
}

/// Reference closed form for the zero-field QFI of a real initial state
/// `(x0, 0, z0)`. Like [`closed_form_ground`], it equals [`qfi_lindblad`]
/// evaluated at `s / 2`.
pub fn closed_form_zero_field(s: f64, x0: f64, z0: f64) -> f64 {
    let e = |k: f64| (k * s).exp();
    let inner = e(0.25) * (x0 * x0 + z0 - 1.0) + e(0.5) * (z0 - 1.0) + e(0.75) + (z0 - 1.0).powi(2);
    let num = -16.0 * e(-1.0) * (e(0.25) - 1.0).powi(2)
        * (-(inner * inner) + e(1.0) * x0 * x0 + e(1.0) * (e(0.25) + z0 - 1.0).powi(2));
    let den = e(0.5) * (x0 * x0 + 2.0 * z0 - 2.0) + (z0 - 1.0).powi(2);
    num / den
}

/// Reference zero-field QFI of the ground input, `16 e^{-s/2} (e^{s/4} - 1)^2`.
pub fn closed_form_ground(s: f64) -> f64 {
    16.0 * (-s / 2.0).exp() * ((s / 4.0).exp() - 1.0).powi(2)
}

/// Reference zero-field QFI of the excited input,
/// `16 e^{-s} (e^{s/2} - 3 e^{s/4} + 2)^2`.
pub fn closed_form_excited(s: f64) -> f64 {
    16.0 * (-s).exp() * ((s / 2.0).exp() - 3.0 * (s / 4.0).exp() + 2.0).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RescaledQuantity {
    MaxQfi,
    Rate,
    SteadyQfi,
}

/// How a QFI in `e` converts to a QFI in the physical amplitude `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RescaleConvention {
    /// `QFI_epsilon = QFI_e / sqrt(kappa)`, the convention behind the quoted
    /// steady-state bound `16 kappa^{3/2} / (8 epsilon^2 + kappa)^2`.
    #[default]
    InverseSqrtKappa,
    /// `QFI_epsilon = (de/depsilon)^2 QFI_e = QFI_e / kappa`.
    InverseKappa,
}

/// Physical-unit value of `quantity` at coupling `kappa` and amplitude
/// `epsilon`, for the ground input. Time converts as `t = s / kappa`.
pub fn physical_rescale(
    kappa: f64,
    epsilon: f64,
    quantity: RescaledQuantity,
    convention: RescaleConvention,
) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::OutOfDomain { what: "physical_rescale kappa", value: kappa });
    }
    let eps_bar = epsilon / kappa.sqrt();
    let factor = match convention {
        RescaleConvention::InverseSqrtKappa => 1.0 / kappa.sqrt(),
        RescaleConvention::InverseKappa => 1.0 / kappa,
    };
    let ground = BlochState::ground();
    Ok(match quantity {
        RescaledQuantity::MaxQfi => factor * max_qfi(eps_bar, &ground).value,
        RescaledQuantity::Rate => factor * kappa * qfi_rate(eps_bar, &ground).value,
        RescaledQuantity::SteadyQfi => factor * steady_qfi(eps_bar),
    })
}

/// Coupling `kappa = 24 epsilon^2` maximising the rescaled steady-state QFI,
/// and the maximum `(3/2)^{3/2} / epsilon`.
pub fn optimal_steady_kappa(epsilon: f64) -> (f64, f64) {
    (24.0 * epsilon * epsilon, 1.5f64.powf(1.5) / epsilon)
}
