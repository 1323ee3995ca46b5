//! Entropy production from phase-space contraction.

use nalgebra::DMatrix;

use super::law::{DynamicalLaw, LawKind};
use super::measure::EnsembleMeasure;
use crate::error::{Error, Result};
use crate::thermo::PhysicalConstants;
use crate::Execution;

/// Central-difference step used when no analytic rule is registered.
pub const FD_STEP: f64 = 1e-5;

/// `∇·E(σ)` of a flow: the analytic rule when registered, central differences otherwise.
pub fn divergence(law: &DynamicalLaw, point: &[f64]) -> Result<f64> {
    if law.kind() != LawKind::Flow {
        return Err(Error::UnsupportedLaw(
            "divergence is defined for flows; use the contraction rate for maps",
        ));
    }
    let value = match law.analytic_divergence() {
        Some(rule) => rule(point),
        None => fd_divergence(law, point, FD_STEP)?,
    };
    if !value.is_finite() {
        return Err(Error::NonFinite("divergence".into()));
    }
    Ok(value)
}

/// `Σ_k (E_k(σ + h e_k) − E_k(σ − h e_k)) / 2h`.
pub fn fd_divergence(law: &DynamicalLaw, point: &[f64], h: f64) -> Result<f64> {
    check_dim(law, point)?;
    let mut probe = point.to_vec();
    let mut total = 0.0;
    for k in 0..point.len() {
        probe[k] = point[k] + h;
        let plus = law.apply(&probe)[k];
        probe[k] = point[k] - h;
        let minus = law.apply(&probe)[k];
        probe[k] = point[k];
        total += (plus - minus) / (2.0 * h);
    }
    if !total.is_finite() {
        return Err(Error::NonFinite(format!("field near {point:?}")));
    }
    Ok(total)
}

/// `det ∂S(σ)` of a map: analytic rule or a central-difference Jacobian.
pub fn jacobian_det(law: &DynamicalLaw, point: &[f64]) -> Result<f64> {
    if law.kind() != LawKind::Map {
        return Err(Error::UnsupportedLaw(
            "Jacobian determinants are taken for maps",
        ));
    }
    if let Some(rule) = law.analytic_jacobian_det() {
        return Ok(rule(point));
    }
    check_dim(law, point)?;
    let d = point.len();
    let h = FD_STEP;
    let mut jac = DMatrix::<f64>::zeros(d, d);
    let mut probe = point.to_vec();
    for k in 0..d {
        probe[k] = point[k] + h;
        let plus = law.apply(&probe);
        probe[k] = point[k] - h;
        let minus = law.apply(&probe);
        probe[k] = point[k];
        for i in 0..d {
            jac[(i, k)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    Ok(jac.determinant())
}

fn check_dim(law: &DynamicalLaw, point: &[f64]) -> Result<()> {
    if point.len() != law.dim() {
        return Err(Error::DimensionMismatch {
            what: "point vs law",
            expected: law.dim(),
            found: point.len(),
        });
    }
    Ok(())
}

/// `σ_entr = −k_B ∫ μ(dσ) ∇·E(σ)` for a flow.
pub fn entropy_production(
    law: &DynamicalLaw,
    measure: &EnsembleMeasure,
    constants: &PhysicalConstants,
) -> Result<f64> {
    entropy_production_with(law, measure, constants, Execution::Sequential)
}

pub fn entropy_production_with(
    law: &DynamicalLaw,
    measure: &EnsembleMeasure,
    constants: &PhysicalConstants,
    exec: Execution,
) -> Result<f64> {
    if law.kind() != LawKind::Flow {
        return Err(Error::UnsupportedLaw(
            "entropy production needs a flow; use the contraction rate for maps",
        ));
    }
    check_dim(law, measure.samples()[0].coords())?;
    let mean_div = measure.expectation(|x| divergence(law, x).unwrap_or(f64::NAN), exec);
    if !mean_div.is_finite() {
        return Err(Error::NonFinite("mean divergence".into()));
    }
    Ok(-constants.k_b() * mean_div)
}

/// Per-step phase-volume contraction of a map.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionRate {
    /// `−k_B ⟨ln |det ∂S|⟩` over the accepted samples.
    pub value: f64,
    /// Samples with a singular Jacobian, left out of the average.
    pub rejected: Vec<usize>,
    /// Set when the map expands phase volume on average (negative rate).
    pub expanding: bool,
}

/// `−k_B ∫ μ(dσ) ln |det ∂S(σ)|`, the discrete-time analogue of `σ_entr`.
pub fn contraction_rate_map(
    law: &DynamicalLaw,
    measure: &EnsembleMeasure,
    constants: &PhysicalConstants,
) -> Result<ContractionRate> {
    if law.kind() != LawKind::Map {
        return Err(Error::UnsupportedLaw(
            "contraction rate is defined for maps",
        ));
    }
    let mut rejected = Vec::new();
    let mut weight = 0.0;
    let mut total = 0.0;
    for (i, (p, &w)) in measure.samples().iter().zip(measure.weights()).enumerate() {
        let det = jacobian_det(law, p)?;
        if det == 0.0 || !det.is_finite() {
            rejected.push(i);
            continue;
        }
        weight += w;
        total += w * det.abs().ln();
    }
    if weight <= 0.0 {
        return Err(Error::Numerical(
            "every sample has a singular Jacobian".into(),
        ));
    }
    let value = -constants.k_b() * total / weight;
    Ok(ContractionRate {
        value,
        rejected,
        expanding: value < 0.0,
    })
}

/// `ΔS_irr = σ_entr / ṁ`.
pub fn entropy_generation_statistical(
    law: &DynamicalLaw,
    measure: &EnsembleMeasure,
    constants: &PhysicalConstants,
    m_dot: f64,
) -> Result<f64> {
    if !(m_dot > 0.0 && m_dot.is_finite()) {
        return Err(Error::invalid("m_dot", "mass flow must be positive"));
    }
    Ok(entropy_production(law, measure, constants)? / m_dot)
}
