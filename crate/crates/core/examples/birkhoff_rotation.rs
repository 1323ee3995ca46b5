//! Time averages against ensemble averages on the circle.
//!
//! Run with `cargo run --release --example birkhoff_rotation`.

use irrigen::phase::{self, catalog, EnsembleMeasure, Observable, PhasePoint};

fn main() -> irrigen::Result<()> {
    let golden = catalog::golden_rotation();
    let lebesgue = EnsembleMeasure::uniform_grid(&[0.0], &[1.0], 100_000)?;
    let start = PhasePoint::scalar(0.0)?;
    let observables = [
        ("x", Observable::coordinate(0)),
        ("x²", Observable::new(|x: &[f64]| x[0] * x[0])),
        (
            "cos 2πx",
            Observable::new(|x: &[f64]| (std::f64::consts::TAU * x[0]).cos()),
        ),
    ];

    println!("golden rotation, uniform measure");
    for (name, f) in &observables {
        for horizon in [1_000, 100_000, 1_000_000] {
            let r = phase::birkhoff_residual(&golden, &start, &lebesgue, f, horizon)?;
            println!("  {name:<8} T = {horizon:>9}  |time − ensemble| = {r:.3e}");
        }
    }

    // A rational shift is not ergodic: orbits are cycles and averages depend on the start.
    let quarter = catalog::rotation(0.25);
    let orbit = phase::evolve(&quarter, &PhasePoint::scalar(0.1)?, 4)?;
    println!(
        "\nrotation by 1/4 returns after 4 steps: {}",
        phase::is_cycle(&orbit, 1e-12)?
    );
    let x = Observable::coordinate(0);
    for s in [0.0, 0.1, 0.2] {
        let avg = phase::time_average(&quarter, &PhasePoint::scalar(s)?, &x, 100_000)?;
        println!("  start {s}: time average {avg:.6}");
    }

    let preserved = phase::is_measure_preserving(&golden, &lebesgue, 50, 1e-3)?;
    println!(
        "\nLebesgue measure invariant under the golden rotation: {}",
        preserved.preserved
    );
    Ok(())
}
