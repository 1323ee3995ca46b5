//! Entropy production as phase-space contraction, for flows and maps.
//!
//! Run with `cargo run --example entropy_production`.

use std::f64::consts::TAU;

use irrigen::phase::{self, catalog, EnsembleMeasure};
use irrigen::thermo::PhysicalConstants;

fn main() -> irrigen::Result<()> {
    let unit = PhysicalConstants::unit(300.0)?;
    let cloud = EnsembleMeasure::uniform_box(&[-1.0, -1.0], &[1.0, 1.0], 20_000, 7)?;
    let line = EnsembleMeasure::uniform_box(&[-2.0], &[2.0], 20_000, 8)?;

    println!("flows (σ = −k_B ⟨∇·E⟩)");
    let flows = [
        (
            "planar rotation",
            catalog::planar_rotation(2.0, 0.01)?,
            &cloud,
        ),
        (
            "harmonic oscillator",
            catalog::harmonic_oscillator(0.01)?,
            &cloud,
        ),
        (
            "relaxation ẋ = −0.5x",
            catalog::linear_flow(0.5, 1, 0.01)?,
            &line,
        ),
        ("relaxation ẋ = −x³", catalog::cubic_flow(0.01)?, &line),
    ];
    for (name, law, measure) in flows {
        let analytic = phase::entropy_production(&law, measure, &unit)?;
        let numeric = phase::entropy_production(&law.numeric_only(), measure, &unit)?;
        println!("  {name:<22} analytic {analytic:>12.9}  finite difference {numeric:>12.9}");
    }

    println!("\nmaps (−k_B ⟨ln |det ∂S|⟩ per step)");
    let torus = EnsembleMeasure::uniform_box(&[0.0, 0.0], &[TAU, TAU], 20_000, 9)?;
    let unit_interval = EnsembleMeasure::uniform_box(&[0.0], &[1.0], 20_000, 10)?;
    let maps = [
        ("standard map K = 0.97", catalog::standard_map(0.97), &torus),
        ("scaling x ← 0.5x", catalog::scaling(0.5), &unit_interval),
        ("logistic r = 4", catalog::logistic(4.0), &unit_interval),
    ];
    for (name, law, measure) in maps {
        let rate = phase::contraction_rate_map(&law, measure, &unit)?;
        let note = if rate.expanding { " (expanding)" } else { "" };
        println!("  {name:<22} {:>12.9}{note}", rate.value);
    }

    // Per unit mass flow, with SI units.
    let si = PhysicalConstants::si(300.0)?;
    let relax = catalog::linear_flow(0.5, 1, 0.01)?;
    let s = phase::entropy_generation_statistical(&relax, &line, &si, 2.0)?;
    println!("\nσ / ṁ for the relaxation at ṁ = 2: {s:.6e} J/(K·kg)");
    Ok(())
}
