//! Maximum entropy generation over a family of stationary states, with the
//! stationarity and least-action checks at the optimum.
//!
//! Run with `cargo run --example max_entropy_generation`.

use irrigen::exergy::ProcessBalance;
use irrigen::variational::{self, OptimizerConfig, StateFamily};

fn main() -> irrigen::Result<()> {
    let family = StateFamily::new(vec![(-5.0, 5.0)], |t| 2.0 - (t[0] - 1.0).powi(2))?;
    let config = OptimizerConfig::default();
    let optimum = variational::maximize_entropy_generation(&family, &config)?;
    println!(
        "θ* = {:.9}, ΔS_irr(θ*) = {:.12}, converged {}",
        optimum.theta[0], optimum.value, optimum.converged
    );
    println!("{} evaluations", optimum.trace.len());

    let stationarity = variational::stationarity_check(&family, &optimum.theta, config.fd_step)?;
    println!(
        "largest rise near θ*: {:.3e}, |∇| ≈ {:.3e}",
        stationarity.max_violation, stationarity.gradient_norm
    );

    let least = variational::least_action_check(&family, &optimum.theta, 300.0, 1.0, 0.01)?;
    println!(
        "A(θ*) = {:.6}, minimal over {} probes: {}",
        least.action_at_optimum,
        least.probes.len(),
        least.minimal
    );

    // A family built from process balances: split of heat between two reservoirs.
    let split = StateFamily::from_balances(vec![(0.0, 1.0)], |t| ProcessBalance {
        q_r: 1000.0 * t[0] * (1.0 - t[0]),
        ..ProcessBalance::at_temperatures(600.0, 300.0, 300.0)
    })?;
    let best = variational::maximize_entropy_generation(&split, &config)?;
    println!(
        "\nbalance family: θ* = {:.6}, ΔS_irr = {:.6} J/K",
        best.theta[0], best.value
    );

    let mut csv = Vec::new();
    best.write_trace_csv(&mut csv)?;
    println!(
        "trace CSV: {} rows",
        String::from_utf8_lossy(&csv).lines().count() - 1
    );
    Ok(())
}
