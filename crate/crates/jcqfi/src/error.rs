use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("state is pure to within {gap:e} but the radial derivative {radial:e} does not vanish")]
    NearPureUnbounded { gap: f64, radial: f64 },
    #[error("first derivative of the Bloch vector is required")]
    MissingDerivative,
    #[error("second derivative of the Bloch vector is required in the pure-state limit")]
    MissingSecondDerivative,
    #[error("density matrix is rank deficient (min eigenvalue {min_eig:e})")]
    RankDeficient { min_eig: f64 },
    #[error("population distribution is degenerate (z = {z}, dz = {dz})")]
    DegenerateDistribution { z: f64, dz: f64 },
    #[error("coherent amplitudes underflow at alpha = {alpha}")]
    Underflow { alpha: f64 },
    #[error("alpha-derivative of the channel is undefined at alpha = 0")]
    AlphaZero,
    #[error("Fock cutoff {n_max} too small: block and dense evolutions differ by {diff:e}")]
    CutoffTooSmall { n_max: usize, diff: f64 },
    #[error("finite-difference refinement did not converge (last change {change:e})")]
    NoConvergence { change: f64 },
    #[error("asymptotic formulas need alpha >= {min}, got {alpha}")]
    AlphaTooSmall { alpha: f64, min: f64 },
    #[error("{what}: argument {value} outside the domain")]
    OutOfDomain { what: &'static str, value: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
