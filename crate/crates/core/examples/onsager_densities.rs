//! Densities of the Onsager expansion for a two-coordinate system.
//!
//! Run with `cargo run --example onsager_densities`.

use irrigen::thermo::{self, GeneralizedState, OnsagerTensors};

fn main() -> irrigen::Result<()> {
    let state = GeneralizedState::new(vec![0.4, -1.2], 0.0)?;

    // Unsymmetric input is symmetrized on construction.
    let l2 = vec![vec![2.0, 0.3], vec![0.1, 1.5]];
    let mut l3 = vec![vec![vec![0.0; 2]; 2]; 2];
    l3[0][0][1] = 0.6;
    l3[1][1][1] = -0.2;
    let tensors = OnsagerTensors::new(&l2, &l3)?;

    let rate = thermo::entropy_rate_density(&state, &tensors)?;
    let psi = thermo::dissipative_potential(&state, &tensors)?;
    let rho_l = thermo::lagrangian_density(&state, &tensors)?;
    let rho_h = thermo::hamiltonian_density(&state, &tensors)?;
    println!("entropy rate density   {rate:.12}");
    println!("dissipative potential  {psi:.12}");
    println!("Lagrangian density     {rho_l:.12}");
    println!("Hamiltonian density    {rho_h:.12}");
    println!(
        "conjugate momenta      {:?}",
        thermo::conjugate_momenta(&state, &tensors)?
    );

    let report = thermo::consistency_report(&state, &tensors, Some(3.0), Some(1.0))?;
    println!("\nresiduals");
    println!("  ρ_L − (rate − ψ)   {:.3e}", report.decomposition);
    println!(
        "  ρ_S − ρ_π − 2ψ     {:.6}",
        report.lavenda.unwrap_or(f64::NAN)
    );
    println!(
        "  ψ − ρ_L            {:.6}",
        report.potential_minus_lagrangian
    );
    println!("  ψ − cubic/6        {:.6}", report.cubic_only);
    Ok(())
}
