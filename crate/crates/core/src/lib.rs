//! Entropy generation for open thermodynamic systems, computed three ways:
//!
//! * [`exergy`]: the engineering balance, lost work and the global Lagrangian
//!   `L = −T_ref ΔS_irr` and Hamiltonian `H = T_ref ΔS_irr`;
//! * [`thermo`]: Onsager-expansion densities (entropy rate, dissipative potential,
//!   Lagrangian and Hamiltonian densities) and compartment mass balances;
//! * [`phase`]: phase-space statistics, with entropy production as the ensemble
//!   average of phase-space contraction.
//!
//! [`variational`] searches families of stationary states for maximal entropy
//! generation and checks the least-action inequality. [`config`], [`run`] and
//! [`verify`] drive everything from a plain-text configuration file.

pub mod config;
pub mod error;
pub mod exergy;
mod numeric;
pub mod phase;
pub mod report;
pub mod run;
pub mod thermo;
pub mod variational;
pub mod verify;

pub use error::{Error, Result};
pub use numeric::{compensated_sum, relative_error, trapezoid};

/// How ensemble reductions and multi-start searches are scheduled.
///
/// `Sequential` is bitwise reproducible; `Parallel` reductions may differ in the
/// last bits because rayon reassociates sums.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Execution {
    #[default]
    Sequential,
    Parallel,
}
