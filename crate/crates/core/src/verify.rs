//! Built-in invariant suite behind the `verify` mode.
//!
//! Every check draws from its own seeded generator, so a suite run is a pure
//! function of its settings and seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::exergy::{self, ProcessBalance};
use crate::numeric::relative_error;
use crate::phase::{self, catalog, EnsembleMeasure, Observable, OrnsteinUhlenbeck, PhasePoint};
use crate::thermo::{self, CompartmentSystem, GeneralizedState, OnsagerTensors, PhysicalConstants};
use crate::variational::{self, OptimizerConfig, StateFamily};
use crate::Execution;

/// Sizes of the randomized and simulated checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifySettings {
    /// Random Onsager systems and balances.
    pub instances: usize,
    /// Birkhoff horizon.
    pub horizon: usize,
    /// Grid cells in the Birkhoff ensemble; also caps the other ensembles.
    pub samples: usize,
    /// Trajectories in the Onsager estimator ensemble.
    pub members: usize,
    /// Euler steps in the mass-conservation run.
    pub steps: usize,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            instances: 1000,
            horizon: 1_000_000,
            samples: 100_000,
            members: 10_000,
            steps: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value < threshold`.
    fn below(name: &'static str, value: f64, threshold: f64) -> Self {
        Self {
            name,
            value,
            threshold,
            passed: value < threshold,
        }
    }

    /// Passes when `value <= threshold`.
    fn at_most(name: &'static str, value: f64, threshold: f64) -> Self {
        Self {
            name,
            value,
            threshold,
            passed: value <= threshold,
        }
    }

    fn holds(name: &'static str, ok: bool) -> Self {
        Self {
            name,
            value: if ok { 1.0 } else { 0.0 },
            threshold: 1.0,
            passed: ok,
        }
    }
}

/// A random Onsager system with `N ≤ 5` and entries uniform in `[−10, 10]`.
pub fn random_system(rng: &mut impl Rng) -> Result<(GeneralizedState, OnsagerTensors)> {
    let n = rng.random_range(1..=5);
    let mut draw =
        |len: usize| -> Vec<f64> { (0..len).map(|_| rng.random_range(-10.0..=10.0)).collect() };
    let xi = draw(n);
    let l2 = draw(n * n);
    let l3 = draw(n * n * n);
    Ok((
        GeneralizedState::new(xi, 0.0)?,
        OnsagerTensors::from_flat(n, l2, l3)?,
    ))
}

/// A random balance with temperatures in `[200, 800]` K and energies in `[−10⁴, 10⁴]`.
pub fn random_balance(rng: &mut impl Rng) -> ProcessBalance {
    let mut e = || rng.random_range(-1e4..=1e4);
    let (q_r, delta_h, delta_s, delta_ek, delta_eg, w) = (e(), e(), e() / 300.0, e(), e(), e());
    ProcessBalance {
        q_r,
        t_r: rng.random_range(200.0..=800.0),
        t_a: rng.random_range(200.0..=800.0),
        delta_h,
        delta_s,
        delta_ek,
        delta_eg,
        w,
        t_ref: rng.random_range(200.0..=800.0),
        m_dot: None,
    }
}

/// Sum of the absolute values of every term in the quadratic and cubic forms.
fn term_magnitude(state: &GeneralizedState, tensors: &OnsagerTensors) -> f64 {
    let xi = state.xi();
    let n = xi.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            total += (tensors.l2(i, j) * xi[i] * xi[j]).abs();
            for k in 0..n {
                total += (tensors.l3(i, j, k) * xi[i] * xi[j] * xi[k]).abs();
            }
        }
    }
    total
}

fn sub_seed(seed: u64, stream: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream)
}

pub fn run_suite(settings: &VerifySettings, seed: u64, execution: Execution) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let unit = PhysicalConstants::unit(300.0)?;

    // densities and global duality
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 1));
    let (mut duality_density, mut decomposition, mut duality_global) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..settings.instances {
        let (state, tensors) = random_system(&mut rng)?;
        let scale = term_magnitude(&state, &tensors);
        let rho_l = thermo::lagrangian_density(&state, &tensors)?;
        let rho_h = thermo::hamiltonian_density(&state, &tensors)?;
        let split = thermo::entropy_rate_density(&state, &tensors)?
            - thermo::dissipative_potential(&state, &tensors)?;
        duality_density = duality_density.max(relative_error(rho_h, -rho_l, scale));
        decomposition = decomposition.max(relative_error(rho_l, split, scale));

        let balance = random_balance(&mut rng);
        let s_irr = exergy::entropy_generation(&balance)?;
        let h = exergy::thermodynamic_hamiltonian(&balance)?;
        let l = exergy::thermodynamic_lagrangian(&balance)?;
        let expected = balance.t_ref * s_irr;
        duality_global = duality_global
            .max(relative_error(h, -l, 0.0))
            .max(relative_error(h, expected, 0.0));
    }
    checks.push(Check::below(
        "density_duality_max_rel_err",
        duality_density,
        1e-12,
    ));
    checks.push(Check::below(
        "global_duality_max_rel_err",
        duality_global,
        1e-12,
    ));
    checks.push(Check::below(
        "density_decomposition_max_rel_err",
        decomposition,
        1e-12,
    ));

    // exergy oracle
    let heat = ProcessBalance {
        q_r: 1000.0,
        ..ProcessBalance::at_temperatures(500.0, 300.0, 300.0)
    };
    let oracle_s = (1000.0 / 300.0) * (1.0 - 300.0 / 500.0);
    checks.push(Check::below(
        "exergy_oracle_delta_s_irr_err",
        (exergy::entropy_generation(&heat)? - oracle_s).abs(),
        1e-9,
    ));
    checks.push(Check::below(
        "exergy_oracle_w_lost_err",
        (exergy::lost_work(&heat)? - 400.0).abs(),
        1e-9,
    ));

    // equilibrium null
    let plane = EnsembleMeasure::uniform_box(
        &[-1.0, -1.0],
        &[1.0, 1.0],
        settings.samples.min(10_000),
        sub_seed(seed, 2),
    )?;
    let rotation = catalog::planar_rotation(1.0, 0.01)?;
    checks.push(Check::below(
        "divergence_free_production_analytic",
        phase::entropy_production_with(&rotation, &plane, &unit, execution)?.abs(),
        1e-10,
    ));
    checks.push(Check::below(
        "divergence_free_production_fd",
        phase::entropy_production_with(&rotation.numeric_only(), &plane, &unit, execution)?.abs(),
        1e-6,
    ));
    let torus = EnsembleMeasure::uniform_box(
        &[0.0, 0.0],
        &[std::f64::consts::TAU, std::f64::consts::TAU],
        settings.samples.min(10_000),
        sub_seed(seed, 3),
    )?;
    checks.push(Check::below(
        "standard_map_contraction",
        phase::contraction_rate_map(&catalog::standard_map(0.97), &torus, &unit)?
            .value
            .abs(),
        1e-8,
    ));

    // linear contraction
    let line = EnsembleMeasure::uniform_box(
        &[-3.0],
        &[3.0],
        settings.samples.min(10_000),
        sub_seed(seed, 4),
    )?;
    let relax = catalog::linear_flow(0.5, 1, 0.1)?;
    checks.push(Check::at_most(
        "linear_contraction_analytic_err",
        (phase::entropy_production_with(&relax, &line, &unit, execution)? - 0.5).abs(),
        0.0,
    ));
    checks.push(Check::below(
        "linear_contraction_fd_err",
        (phase::entropy_production_with(&relax.numeric_only(), &line, &unit, execution)? - 0.5)
            .abs(),
        1e-6,
    ));

    // Birkhoff average of the golden rotation
    let golden = catalog::golden_rotation();
    let uniform = EnsembleMeasure::uniform_grid(&[0.0], &[1.0], settings.samples)?;
    let start = PhasePoint::scalar(0.0)?;
    let residual = phase::birkhoff_residual(
        &golden,
        &start,
        &uniform,
        &Observable::coordinate(0),
        settings.horizon,
    )?;
    checks.push(Check::below("birkhoff_residual", residual, 1e-3));

    // Onsager estimator on exponentially correlated channels
    let ou = OrnsteinUhlenbeck {
        channels: 2,
        gamma: 2.0,
        variance: 1.0,
        dt: 0.1,
    };
    let ensemble = ou.ensemble(settings.members, 100, sub_seed(seed, 6))?;
    let diag = phase::onsager_coefficient(&ensemble, 0, 0, 40)?;
    checks.push(Check::below(
        "onsager_diagonal_rel_err",
        (diag.value - 0.5).abs() / 0.5,
        0.05,
    ));
    let cross = phase::onsager_coefficient(&ensemble, 0, 1, 40)?;
    let z = cross.value.abs() / cross.standard_error.unwrap_or(f64::INFINITY);
    checks.push(Check::below("onsager_cross_z", z, 3.0));

    // maximum entropy generation
    let family = StateFamily::new(vec![(-5.0, 5.0)], |t| 2.0 - (t[0] - 1.0).powi(2))?;
    let optimum = variational::maximize_entropy_generation(
        &family,
        &OptimizerConfig {
            seed,
            execution,
            ..OptimizerConfig::default()
        },
    )?;
    checks.push(Check::below(
        "max_entropy_theta_err",
        (optimum.theta[0] - 1.0).abs(),
        1e-6,
    ));
    let stationarity = variational::stationarity_check(&family, &optimum.theta, 1e-4)?;
    checks.push(Check::at_most(
        "stationarity_max_violation",
        stationarity.max_violation,
        1e-8,
    ));
    let least = variational::least_action_check(&family, &optimum.theta, 300.0, 1.0, 0.01)?;
    checks.push(Check::holds("least_action_minimal", least.minimal));

    // mass conservation under balanced exchange
    let flows = vec![
        vec![0.0, 0.02, -0.01],
        vec![-0.02, 0.0, 0.015],
        vec![0.01, -0.015, 0.0],
    ];
    let mut system = CompartmentSystem::new(vec![1.0, 2.0, 0.5], vec![1.0, 0.5, 2.0])?;
    let initial = thermo::total_mass(&system);
    let mut drift = 0.0f64;
    for _ in 0..settings.steps {
        system = thermo::step_compartments(&system.with_exchange(&flows)?, 1e-3)?;
        drift = drift.max((thermo::total_mass(&system) - initial).abs() / initial);
    }
    checks.push(Check::below("mass_conservation_rel_drift", drift, 1e-12));

    Ok(checks)
}

/// CSV with header `check,value,threshold,passed`.
pub fn checks_csv(checks: &[Check]) -> String {
    use crate::report::format_value;
    let mut out = String::from("check,value,threshold,passed\n");
    for c in checks {
        out.push_str(&format!(
            "{},{},{},{}\n",
            c.name,
            format_value(c.value),
            format_value(c.threshold),
            u8::from(c.passed)
        ));
    }
    out
}
