//! Solve the double-well eigenproblem for the reference device and print the
//! level structure, parities and the derived microwave frequencies.
//!
//! Run with: cargo run --release --example spectrum

use squid_tip::model::{beta_l, nondimensionalize, Constants, SquidParams};
use squid_tip::spectral::{
    classify_parity, discretize, eigensolve, levels_below_barrier, GridSpec,
};

fn main() -> squid_tip::Result<()> {
    let consts = Constants::default();
    let params = SquidParams::reference(&consts);
    let scaled = nondimensionalize(&params, &consts)?;
    println!("beta_L          = {:.6}", beta_l(&params, &consts));
    println!("energy unit     = {:.4e} J", scaled.energy_unit);
    println!("time unit       = {:.4e} s", scaled.time_unit);

    let grid = GridSpec::default();
    let es = classify_parity(eigensolve(&discretize(&scaled, 0.0, &grid)?, 6)?)?;

    println!("\nlevel  E (scaled)        E/h (GHz)   parity");
    let parities = es.parities()?;
    for k in 0..es.n_states() {
        println!(
            "{k:>5}  {:.12}  {:>9.4}   {:?}",
            es.energies[k],
            es.energy_over_h_hz(k) * 1e-9,
            parities[k]
        );
    }

    let below = levels_below_barrier(&es, &scaled, 0.0)?;
    println!("\nlevels below barrier      = {below}");
    println!("qubit splitting f21       = {:.3} MHz", es.transition_hz(0, 1) * 1e-6);
    println!("tipping transition f31    = {:.3} GHz", es.transition_hz(0, 2) * 1e-9);
    println!("free beat period h/(E2-E1) = {:.3} ns", 1e9 / es.transition_hz(0, 1));
    Ok(())
}
