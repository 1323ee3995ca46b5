//! Property tests for the invariants of each module.

use proptest::prelude::*;

use irrigen::exergy::{self, ProcessBalance};
use irrigen::phase::{self, catalog, EnsembleMeasure, Observable, OrnsteinUhlenbeck, PhasePoint};
use irrigen::thermo::{self, GeneralizedState, OnsagerTensors, PhysicalConstants};
use irrigen::variational::{self, OptimizerConfig, StateFamily};
use irrigen::Execution;

fn entry() -> impl Strategy<Value = f64> {
    -10.0..=10.0f64
}

/// `(ξ, flat L_ij, flat L_ijk)` with no symmetry imposed.
fn raw_system() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1usize..=5).prop_flat_map(|n| {
        (
            prop::collection::vec(entry(), n),
            prop::collection::vec(entry(), n * n),
            prop::collection::vec(entry(), n * n * n),
        )
    })
}

/// Direct sums over the raw, unsymmetrized entries: `(Q, C, Σ|terms|)`.
fn raw_forms(xi: &[f64], l2: &[f64], l3: &[f64]) -> (f64, f64, f64) {
    let n = xi.len();
    let (mut q, mut c, mut mag) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let t = l2[i * n + j] * xi[i] * xi[j];
            q += t;
            mag += t.abs();
            for k in 0..n {
                let t = l3[(i * n + j) * n + k] * xi[i] * xi[j] * xi[k];
                c += t;
                mag += t.abs();
            }
        }
    }
    (q, c, mag)
}

fn close(a: f64, b: f64, rel: f64, scale: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(scale)
}

fn build(xi: &[f64], l2: &[f64], l3: &[f64]) -> (GeneralizedState, OnsagerTensors) {
    (
        GeneralizedState::new(xi.to_vec(), 0.0).unwrap(),
        OnsagerTensors::from_flat(xi.len(), l2.to_vec(), l3.to_vec()).unwrap(),
    )
}

fn balance() -> impl Strategy<Value = ProcessBalance> {
    let energy = || -1e4..=1e4f64;
    let temp = || 200.0..=800.0f64;
    (
        (energy(), temp(), temp(), energy(), -50.0..=50.0f64),
        (energy(), energy(), energy(), temp()),
    )
        .prop_map(
            |((q_r, t_r, t_a, delta_h, delta_s), (delta_ek, delta_eg, w, t_ref))| ProcessBalance {
                q_r,
                t_r,
                t_a,
                delta_h,
                delta_s,
                delta_ek,
                delta_eg,
                w,
                t_ref,
                m_dot: None,
            },
        )
}

/// Sum of the magnitudes of every term of ΔS_irr.
fn balance_scale(b: &ProcessBalance) -> f64 {
    (b.q_r / b.t_a).abs()
        + (b.q_r / b.t_r).abs()
        + (b.delta_h / b.t_a).abs()
        + b.delta_s.abs()
        + ((b.delta_ek.abs() + b.delta_eg.abs() + b.w.abs()) / b.t_a)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn lagrangian_is_rate_minus_potential((xi, l2, l3) in raw_system()) {
        let (state, tensors) = build(&xi, &l2, &l3);
        let (_, _, mag) = raw_forms(&xi, &l2, &l3);
        let rate = thermo::entropy_rate_density(&state, &tensors).unwrap();
        let psi = thermo::dissipative_potential(&state, &tensors).unwrap();
        let rho_l = thermo::lagrangian_density(&state, &tensors).unwrap();
        prop_assert!(close(rho_l, rate - psi, 1e-12, mag));
    }

    #[test]
    fn hamiltonian_is_bitwise_negated_lagrangian((xi, l2, l3) in raw_system()) {
        let (state, tensors) = build(&xi, &l2, &l3);
        let rho_l = thermo::lagrangian_density(&state, &tensors).unwrap();
        let rho_h = thermo::hamiltonian_density(&state, &tensors).unwrap();
        prop_assert_eq!(rho_h.to_bits(), (-rho_l).to_bits());
    }

    #[test]
    fn momenta_vanish((xi, l2, l3) in raw_system()) {
        let (state, tensors) = build(&xi, &l2, &l3);
        let zeta = thermo::conjugate_momenta(&state, &tensors).unwrap();
        prop_assert_eq!(zeta.len(), xi.len());
        prop_assert!(zeta.iter().all(|&z| z == 0.0));
    }

    #[test]
    fn symmetrization_leaves_densities_unchanged((xi, l2, l3) in raw_system()) {
        let (state, tensors) = build(&xi, &l2, &l3);
        let (q, c, mag) = raw_forms(&xi, &l2, &l3);
        let rate = thermo::entropy_rate_density(&state, &tensors).unwrap();
        let psi = thermo::dissipative_potential(&state, &tensors).unwrap();
        prop_assert!(close(rate, q + c / 2.0, 1e-12, mag));
        prop_assert!(close(psi, q / 2.0 + c / 6.0, 1e-12, mag));
    }

    #[test]
    fn quadratic_densities_scale_as_c_squared(
        (xi, l2, _) in raw_system(),
        c in prop_oneof![-5.0..-0.1f64, 0.1..5.0f64],
    ) {
        let n = xi.len();
        let (state, tensors) = build(&xi, &l2, &vec![0.0; n * n * n]);
        let scaled = state.scaled(c).unwrap();
        let (_, _, mag) = raw_forms(&xi, &l2, &vec![0.0; n * n * n]);
        let c2 = c * c;
        type Density = fn(&GeneralizedState, &OnsagerTensors) -> irrigen::Result<f64>;
        let densities: [Density; 3] = [
            thermo::entropy_rate_density,
            thermo::dissipative_potential,
            thermo::lagrangian_density,
        ];
        for f in densities {
            let base = f(&state, &tensors).unwrap();
            let after = f(&scaled, &tensors).unwrap();
            prop_assert!(close(after, c2 * base, 1e-12, c2 * mag));
        }
    }

    #[test]
    fn potential_equals_lagrangian_without_cubic_terms((xi, l2, _) in raw_system()) {
        let n = xi.len();
        let (state, tensors) = build(&xi, &l2, &vec![0.0; n * n * n]);
        let report = thermo::consistency_report(&state, &tensors, None, None).unwrap();
        prop_assert_eq!(report.potential_minus_lagrangian, 0.0);
    }

    #[test]
    fn global_duality(b in balance()) {
        let h = exergy::thermodynamic_hamiltonian(&b).unwrap();
        let l = exergy::thermodynamic_lagrangian(&b).unwrap();
        let w = exergy::lost_work(&b).unwrap();
        prop_assert_eq!(h, -l);
        prop_assert_eq!(h, w);
        let s = exergy::entropy_generation(&b).unwrap();
        prop_assert!(close(w, b.t_ref * s, 1e-12, b.t_ref * balance_scale(&b)));
    }

    #[test]
    fn entropy_generation_is_affine_in_each_term(
        b in balance(),
        field in 0usize..6,
        x in -1e4..=1e4f64,
        y in -1e4..=1e4f64,
    ) {
        let with = |v: f64| {
            let mut c = b;
            match field {
                0 => c.q_r = v,
                1 => c.delta_h = v,
                2 => c.delta_s = v / 100.0,
                3 => c.delta_ek = v,
                4 => c.delta_eg = v,
                _ => c.w = v,
            }
            c
        };
        let f = |v: f64| exergy::entropy_generation(&with(v)).unwrap();
        let scale = balance_scale(&with(x)) + balance_scale(&with(y)) + balance_scale(&with(x + y));
        prop_assert!(close(f(x + y), f(x) + f(y) - f(0.0), 1e-12, scale));
    }

    #[test]
    fn entropy_generation_is_homogeneous_in_extensive_terms(
        b in balance(),
        c in prop_oneof![-100.0..-0.01f64, 0.01..100.0f64],
    ) {
        let scaled = ProcessBalance {
            q_r: c * b.q_r,
            delta_h: c * b.delta_h,
            delta_s: c * b.delta_s,
            delta_ek: c * b.delta_ek,
            delta_eg: c * b.delta_eg,
            w: c * b.w,
            ..b
        };
        let base = exergy::entropy_generation(&b).unwrap();
        let after = exergy::entropy_generation(&scaled).unwrap();
        prop_assert!(close(after, c * base, 1e-12, c.abs() * balance_scale(&b)));
    }
}

#[test]
fn heat_flow_down_a_gradient_is_irreversible() {
    let heats = [-1e4, -1000.0, -1.0, -1e-3, 0.0, 1e-3, 1.0, 1000.0, 1e4];
    let temps = [200.0, 273.15, 300.0, 450.0, 500.0, 800.0];
    for &q_r in &heats {
        for &t_r in &temps {
            for &t_a in &temps {
                let b = ProcessBalance {
                    q_r,
                    ..ProcessBalance::at_temperatures(t_r, t_a, t_a)
                };
                let s = exergy::entropy_generation(&b).unwrap();
                assert_eq!(
                    s >= 0.0,
                    q_r * (t_r - t_a) >= 0.0,
                    "Q_r={q_r} T_r={t_r} T_a={t_a} ΔS_irr={s}"
                );
            }
        }
    }
}

fn ensemble(dim: usize) -> impl Strategy<Value = EnsembleMeasure> {
    prop::collection::vec(
        (prop::collection::vec(-3.0..3.0f64, dim), 0.01..1.0f64),
        1..60,
    )
    .prop_map(|rows| {
        let (points, raw): (Vec<_>, Vec<_>) = rows
            .into_iter()
            .map(|(x, w)| (PhasePoint::new(x).unwrap(), w))
            .unzip();
        EnsembleMeasure::normalized(points, raw).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evolve_is_deterministic(kick in 0.0..3.0f64, p in 0.0..6.0f64, q in 0.0..6.0f64, steps in 1usize..500) {
        let law = catalog::standard_map(kick);
        let start = PhasePoint::new(vec![p, q]).unwrap();
        let a = phase::evolve(&law, &start, steps).unwrap();
        let b = phase::evolve(&law, &start, steps).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.points().iter().zip(b.points()) {
            prop_assert!(x.iter().zip(y.iter()).all(|(u, v)| u.to_bits() == v.to_bits()));
        }
    }

    #[test]
    fn divergence_free_fields_produce_no_entropy(omega in -5.0..5.0f64, m in ensemble(2)) {
        let unit = PhysicalConstants::unit(300.0).unwrap();
        for law in [catalog::planar_rotation(omega, 0.01).unwrap(), catalog::harmonic_oscillator(0.01).unwrap()] {
            prop_assert!(phase::entropy_production(&law, &m, &unit).unwrap().abs() < 1e-10);
            prop_assert!(phase::entropy_production(&law.numeric_only(), &m, &unit).unwrap().abs() < 1e-6);
        }
    }

    #[test]
    fn linear_flow_production_is_kb_lambda(lambda in -3.0..3.0f64, k_b in 1e-3..10.0f64, m in ensemble(1)) {
        let constants = PhysicalConstants::new(k_b, 300.0).unwrap();
        let law = catalog::linear_flow(lambda, 1, 0.1).unwrap();
        let sigma = phase::entropy_production(&law, &m, &constants).unwrap();
        prop_assert_eq!(sigma, -k_b * -lambda);
    }

    #[test]
    fn area_preserving_maps_do_not_contract(kick in 0.0..5.0f64, m in ensemble(2)) {
        let unit = PhysicalConstants::unit(300.0).unwrap();
        prop_assert!(phase::contraction_rate_map(&catalog::standard_map(kick), &m, &unit).unwrap().value.abs() < 1e-8);
        prop_assert!(
            phase::contraction_rate_map(&catalog::standard_map_unwrapped(kick), &m, &unit).unwrap().value.abs() < 1e-8
        );
    }

    #[test]
    fn time_average_shift_consistency(shift in 0.01..0.99f64, start in 0.0..1.0f64, horizon in 1usize..2000) {
        let law = catalog::rotation(shift);
        let sigma = PhasePoint::scalar(start).unwrap();
        let next = PhasePoint::new(law.step(&sigma)).unwrap();
        let phi = Observable::new(|x: &[f64]| (std::f64::consts::TAU * x[0]).sin());
        let stepped = {
            let law = law.clone();
            Observable::new(move |x: &[f64]| (std::f64::consts::TAU * law.step(x)[0]).sin())
        };
        let composed = phase::time_average(&law, &sigma, &stepped, horizon).unwrap();
        let shifted = phase::time_average(&law, &next, &phi, horizon).unwrap();
        prop_assert_eq!(composed, shifted);
        let plain = phase::time_average(&law, &sigma, &phi, horizon).unwrap();
        prop_assert!((plain - shifted).abs() <= 2.0 / horizon as f64 + 1e-12);
    }

    #[test]
    fn ensemble_average_is_linear(m in ensemble(2), a in -10.0..10.0f64, b in -10.0..10.0f64) {
        let f = Observable::coordinate(0);
        let g = Observable::new(|x: &[f64]| x[1] * x[1]);
        let combined = Observable::new(move |x: &[f64]| a * x[0] + b * x[1] * x[1]);
        let lhs = phase::ensemble_average(&m, &combined);
        let rhs = a * phase::ensemble_average(&m, &f) + b * phase::ensemble_average(&m, &g);
        prop_assert!(close(lhs, rhs, 1e-12, 9.0 * (a.abs() + b.abs())));
    }

    #[test]
    fn ensemble_average_ignores_sample_order(m in ensemble(2), rotate in 0usize..60) {
        let n = m.len();
        let k = rotate % n;
        let order: Vec<usize> = (0..n).map(|i| (i + k) % n).rev().collect();
        let points = order.iter().map(|&i| m.samples()[i].clone()).collect();
        let weights = order.iter().map(|&i| m.weights()[i]).collect();
        let permuted = EnsembleMeasure::normalized(points, weights).unwrap();
        let g = Observable::new(|x: &[f64]| x[0] * x[1] + 1.0);
        let a = phase::ensemble_average_with(&m, &g, Execution::Sequential);
        let b = phase::ensemble_average_with(&permuted, &g, Execution::Sequential);
        prop_assert!(close(a, b, 1e-12, 10.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn onsager_estimate_is_symmetric(seed in any::<u64>(), max_lag in 1usize..20) {
        let ou = OrnsteinUhlenbeck { channels: 2, gamma: 1.5, variance: 2.0, dt: 0.05 };
        let ensemble = ou.ensemble(20, 50, seed).unwrap();
        let ij = phase::onsager_coefficient(&ensemble, 0, 1, max_lag).unwrap();
        let ji = phase::onsager_coefficient(&ensemble, 1, 0, max_lag).unwrap();
        let scale = phase::onsager_coefficient(&ensemble, 0, 0, max_lag).unwrap().value.abs();
        prop_assert!(close(ij.value, ji.value, 1e-12, scale));
    }
}

fn quadratic_family(center: Vec<f64>, curvature: f64, lo: f64, hi: f64) -> StateFamily {
    let bounds = vec![(lo, hi); center.len()];
    StateFamily::new(bounds, move |t| {
        3.0 - curvature
            * t.iter()
                .zip(&center)
                .map(|(a, c)| (a - c) * (a - c))
                .sum::<f64>()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn converged_optimum_is_stationary(
        center in prop::collection::vec(-3.0..3.0f64, 1..4),
        curvature in 0.1..10.0f64,
        seed in any::<u64>(),
    ) {
        let family = quadratic_family(center, curvature, -5.0, 5.0);
        let config = OptimizerConfig { seed, ..OptimizerConfig::default() };
        let opt = variational::maximize_entropy_generation(&family, &config).unwrap();
        prop_assume!(opt.converged);
        let h = config.fd_step;
        let report = variational::stationarity_check(&family, &opt.theta, h).unwrap();
        // Curvature bound κ: the largest possible rise is κ h² beyond a small gradient term.
        prop_assert!(report.max_violation <= curvature * h * h, "{report:?}");
    }

    #[test]
    fn optimizer_commutes_with_translation(
        center in -2.0..2.0f64,
        shift in -10.0..10.0f64,
        seed in any::<u64>(),
    ) {
        // A kinked peak pins the maximizer to within the simplex diameter.
        let family = |offset: f64| {
            StateFamily::new(vec![(-5.0 + offset, 5.0 + offset)], move |t| 1.0 - (t[0] - center - offset).abs()).unwrap()
        };
        let config = OptimizerConfig { seed, ..OptimizerConfig::default() };
        let base = variational::maximize_entropy_generation(&family(0.0), &config).unwrap();
        let moved = variational::maximize_entropy_generation(&family(shift), &config).unwrap();
        prop_assert!(base.converged && moved.converged);
        prop_assert!((base.theta[0] - center).abs() <= config.tol_param);
        prop_assert!((moved.theta[0] - (center + shift)).abs() <= config.tol_param);
    }

    #[test]
    fn action_minimum_sits_at_entropy_maximum(
        center in prop::collection::vec(-3.0..3.0f64, 1..3),
        t_ref in 100.0..1000.0f64,
    ) {
        let family = quadratic_family(center, 1.0, -5.0, 5.0);
        let opt = variational::maximize_entropy_generation(&family, &OptimizerConfig::default()).unwrap();
        let least = variational::least_action_check(&family, &opt.theta, t_ref, 2.0, 0.05).unwrap();
        prop_assert!(least.minimal);
        for (theta, action) in &least.probes {
            let lower_entropy = family.evaluate(theta) <= opt.value;
            let higher_action = *action >= least.action_at_optimum;
            prop_assert_eq!(lower_entropy, higher_action);
        }
    }

    #[test]
    fn evaluations_stay_within_budget(
        dim in 1usize..5,
        max_iters in 3usize..200,
        starts in 1usize..6,
    ) {
        let family = quadratic_family(vec![0.5; dim], 1.0, -5.0, 5.0);
        let config = OptimizerConfig { max_iters, starts, ..OptimizerConfig::default() };
        let opt = variational::maximize_entropy_generation(&family, &config).unwrap();
        prop_assert!(opt.trace.len() <= max_iters * (dim + 2));
    }
}

#[test]
fn parallel_search_matches_sequential() {
    let family = quadratic_family(vec![1.0, -2.0, 0.5], 2.0, -5.0, 5.0);
    let seq =
        variational::maximize_entropy_generation(&family, &OptimizerConfig::default()).unwrap();
    let par = variational::maximize_entropy_generation(
        &family,
        &OptimizerConfig {
            execution: Execution::Parallel,
            ..OptimizerConfig::default()
        },
    )
    .unwrap();
    assert_eq!(seq, par);
}
