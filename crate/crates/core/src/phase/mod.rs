//! Phase-space dynamics: laws and trajectories, finite ensembles standing in for
//! the stationary statistics, Birkhoff averages, entropy production from
//! phase-space contraction and the correlation estimator for Onsager coefficients.

mod law;
mod measure;
mod onsager;
mod production;

pub(crate) use law::ScalarRule;
pub use law::{catalog, evolve, DynamicalLaw, LawKind, PhasePoint, Trajectory, GOLDEN_SHIFT};
pub use measure::{
    birkhoff_residual, ensemble_average, ensemble_average_with, is_cycle, is_measure_preserving,
    measure_additivity_check, time_average, AdditivityReport, EnsembleMeasure, MeasurePreservation,
    Observable, Region,
};
pub use onsager::{onsager_coefficient, onsager_estimate, OnsagerEstimate, OrnsteinUhlenbeck};
pub use production::{
    contraction_rate_map, divergence, entropy_generation_statistical, entropy_production,
    entropy_production_with, fd_divergence, jacobian_det, ContractionRate, FD_STEP,
};
