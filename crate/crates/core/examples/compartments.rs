//! Continuity equations for a three-compartment system exchanging mass.
//!
//! Run with `cargo run --example compartments`.

use irrigen::thermo::{self, CompartmentSystem, DensityGrid};

fn main() -> irrigen::Result<()> {
    // Antisymmetric exchange flows in kg/s: what leaves one compartment enters another.
    let flows = vec![
        vec![0.0, 0.05, -0.02],
        vec![-0.05, 0.0, 0.01],
        vec![0.02, -0.01, 0.0],
    ];
    let mut system = CompartmentSystem::new(vec![1.0, 0.8, 1.4], vec![2.0, 1.0, 0.5])?;
    system.check_total_volume(3.5)?;
    let initial = thermo::total_mass(&system);
    println!("step  masses                         total");
    for step in 0..=2000 {
        if step % 500 == 0 {
            let m = system.masses();
            println!(
                "{step:>4}  {:>8.5} {:>8.5} {:>8.5}   {:.15}",
                m[0],
                m[1],
                m[2],
                thermo::total_mass(&system)
            );
        }
        // Divergences follow the current masses, so the exchange stays balanced.
        system = thermo::step_compartments(&system.with_exchange(&flows)?, 0.01)?;
    }
    println!(
        "relative drift {:.3e}",
        (thermo::total_mass(&system) - initial).abs() / initial
    );

    // Integrating a density over time, temperature and volume.
    let grid = DensityGrid::uniform((0.0, 1.0), (300.0, 400.0), (1.0, 2.0), 11)?;
    let values = grid.sample(|t, temp, v| t * (temp - 300.0) / v);
    println!(
        "∫∫∫ t (T − 300) / V = {:.6}",
        thermo::integrate_density(&grid, &values)?
    );
    Ok(())
}
