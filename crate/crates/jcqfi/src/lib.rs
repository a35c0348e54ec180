//! Quantum Fisher information of a two-level atom used as a probe of the
//! amplitude of a coherent field, through the resonant Jaynes-Cummings
//! interaction, sequences of such interactions, and their continuum limit.

// Negated comparisons such as `!(x > 0.0)` deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotic;
pub mod bloch;
pub mod collision;
pub mod error;
pub mod fock;
pub mod jc_channel;
pub mod limits;
pub mod lindblad;
pub mod numeric;
pub mod oracle;

pub use error::{Error, Result};
