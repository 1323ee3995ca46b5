//! Onsager coefficients from time correlations of a synthetic stationary ensemble.
//!
//! Run with `cargo run --release --example onsager_estimator`.

use irrigen::phase::{self, OrnsteinUhlenbeck};

fn main() -> irrigen::Result<()> {
    // Correlation e^{−2|t|} on each channel, so L_ii = 1/2 and L_01 = 0.
    let ou = OrnsteinUhlenbeck {
        channels: 2,
        gamma: 2.0,
        variance: 1.0,
        dt: 0.1,
    };
    for members in [100, 1_000, 10_000] {
        let ensemble = ou.ensemble(members, 100, 1)?;
        let diag = phase::onsager_coefficient(&ensemble, 0, 0, 40)?;
        let cross = phase::onsager_coefficient(&ensemble, 0, 1, 40)?;
        println!(
            "{members:>6} trajectories: L_00 = {:.5} ± {:.5}   L_01 = {:+.5} ± {:.5}",
            diag.value,
            diag.standard_error.unwrap_or(f64::NAN),
            cross.value,
            cross.standard_error.unwrap_or(f64::NAN),
        );
    }

    let ensemble = ou.ensemble(2_000, 100, 2)?;
    let est = phase::onsager_coefficient(&ensemble, 0, 0, 40)?;
    println!("\nlag  C(τ)      e^(−2τΔt)");
    for lag in [0, 2, 5, 10, 20] {
        let c = est.correlation_at(lag).unwrap_or(f64::NAN);
        println!(
            "{lag:>3}  {c:>8.5}  {:>8.5}",
            (-2.0 * 0.1 * lag as f64).exp()
        );
    }
    println!("mean drift (σ units): {:.4}", est.mean_drift);
    Ok(())
}
