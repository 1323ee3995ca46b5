//! Entropy generation and lost work for a steady open process.
//!
//! Run with `cargo run --example exergy_balance`.

use irrigen::exergy::{self, ProcessBalance};

fn main() -> irrigen::Result<()> {
    // Heat from a 500 K reservoir into 300 K surroundings, nothing else.
    let heat = ProcessBalance {
        q_r: 1000.0,
        ..ProcessBalance::at_temperatures(500.0, 300.0, 300.0)
    };
    print_balance("heat transfer", &heat)?;

    // Throttling valve: enthalpy unchanged, stream entropy up by 12 J/K.
    let valve = ProcessBalance {
        delta_s: -12.0,
        m_dot: Some(2.5),
        ..ProcessBalance::at_temperatures(298.15, 298.15, 298.15)
    };
    print_balance("throttling valve", &valve)?;

    // The balance formula alone allows a negative result; it is flagged, not clamped.
    let impossible = ProcessBalance {
        q_r: -1000.0,
        ..ProcessBalance::at_temperatures(500.0, 300.0, 300.0)
    };
    print_balance("heat flowing uphill", &impossible)?;
    Ok(())
}

fn print_balance(name: &str, balance: &ProcessBalance) -> irrigen::Result<()> {
    let r = exergy::analyze(balance)?;
    println!("{name}");
    println!("  ΔS_irr = {:.6} J/K", r.entropy_generation);
    println!("  W_lost = {:.3} J", r.lost_work);
    println!("  L = {:.3} J, H = {:.3} J", r.lagrangian, r.hamiltonian);
    if let Some(m_dot) = balance.m_dot {
        println!(
            "  per unit mass flow: {:.6} J/(K·kg/s)",
            r.entropy_generation / m_dot
        );
    }
    if r.violates_second_law {
        println!("  second law violated: check the balance inputs");
    }
    Ok(())
}
