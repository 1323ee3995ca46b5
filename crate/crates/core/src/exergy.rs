//! Engineering entropy-generation balance for an open system and the global
//! Lagrangian and Hamiltonian derived from it.
//!
//! Sign convention: `lost_work = +T_ref ΔS_irr`, `L = −T_ref ΔS_irr` and
//! `H = +T_ref ΔS_irr`, so `H = −L = lost_work` for every balance.

use crate::error::{Error, Result};

/// The terms of a steady-flow entropy-generation balance.
///
/// Energies in J, temperatures in K, entropy change in J/K. The `delta_*`
/// terms enter the balance with a positive sign for enthalpy and a negative one
/// for entropy, so a stream whose entropy rises by `s` has `delta_s = −s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessBalance {
    /// Heat taken from the source.
    pub q_r: f64,
    /// Source temperature.
    pub t_r: f64,
    /// Ambient temperature.
    pub t_a: f64,
    pub delta_h: f64,
    pub delta_s: f64,
    pub delta_ek: f64,
    pub delta_eg: f64,
    /// Work done by the system.
    pub w: f64,
    /// Temperature of the lower reservoir.
    pub t_ref: f64,
    /// Mass flow in kg/s; only needed to compare with phase-space estimates.
    pub m_dot: Option<f64>,
}

impl ProcessBalance {
    /// A balance with no heat, work or state change between the given temperatures.
    pub fn at_temperatures(t_r: f64, t_a: f64, t_ref: f64) -> Self {
        Self {
            q_r: 0.0,
            t_r,
            t_a,
            delta_h: 0.0,
            delta_s: 0.0,
            delta_ek: 0.0,
            delta_eg: 0.0,
            w: 0.0,
            t_ref,
            m_dot: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, t) in [("t_r", self.t_r), ("t_a", self.t_a), ("t_ref", self.t_ref)] {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::invalid(
                    name,
                    format!("temperature must be positive, got {t}"),
                ));
            }
        }
        for (name, e) in [
            ("q_r", self.q_r),
            ("delta_h", self.delta_h),
            ("delta_s", self.delta_s),
            ("delta_ek", self.delta_ek),
            ("delta_eg", self.delta_eg),
            ("w", self.w),
        ] {
            if !e.is_finite() {
                return Err(Error::NonFinite(name.into()));
            }
        }
        if let Some(m) = self.m_dot {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::invalid("m_dot", "mass flow must be positive"));
            }
        }
        Ok(())
    }
}

/// `ΔS_irr = (Q_r/T_a)(1 − T_a/T_r) + ΔH/T_a − ΔS + (ΔE_k + ΔE_g − W)/T_a`, in J/K.
///
/// Not clamped: an inconsistent balance can give a negative value (see
/// [`ExergyReport::violates_second_law`]).
pub fn entropy_generation(balance: &ProcessBalance) -> Result<f64> {
    Ok(destroyed_exergy(balance)? / balance.t_a)
}

/// `T_a ΔS_irr`, the balance bracket in energy units. Dividing this once keeps
/// round numbers round when `T_ref = T_a`.
fn destroyed_exergy(balance: &ProcessBalance) -> Result<f64> {
    balance.validate()?;
    let b = balance;
    Ok(
        b.q_r * (1.0 - b.t_a / b.t_r) + b.delta_h - b.t_a * b.delta_s + b.delta_ek + b.delta_eg
            - b.w,
    )
}

/// Work lost to irreversibility, `T_ref ΔS_irr`.
pub fn lost_work(balance: &ProcessBalance) -> Result<f64> {
    Ok(destroyed_exergy(balance)? * (balance.t_ref / balance.t_a))
}

/// `L = −T_ref ΔS_irr`.
pub fn thermodynamic_lagrangian(balance: &ProcessBalance) -> Result<f64> {
    Ok(-lost_work(balance)?)
}

/// `H = T_ref ΔS_irr`.
pub fn thermodynamic_hamiltonian(balance: &ProcessBalance) -> Result<f64> {
    lost_work(balance)
}

/// All balance-derived quantities at once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExergyReport {
    pub entropy_generation: f64,
    pub lost_work: f64,
    pub lagrangian: f64,
    pub hamiltonian: f64,
    /// Set when ΔS_irr < 0, which the balance formula alone does not forbid.
    pub violates_second_law: bool,
}

pub fn analyze(balance: &ProcessBalance) -> Result<ExergyReport> {
    let s_irr = entropy_generation(balance)?;
    let lost = lost_work(balance)?;
    Ok(ExergyReport {
        entropy_generation: s_irr,
        lost_work: lost,
        lagrangian: -lost,
        hamiltonian: lost,
        violates_second_law: s_irr < 0.0,
    })
}
