//! Cross-check the fast piecewise-eigenbasis propagator against a direct
//! Crank-Nicolson integration of the grid wavefunction.
//!
//! Run with: cargo run --release --example cross_validate

use squid_tip::cli::{build_context, RunConfig};
use squid_tip::evolve::{
    direct_integrate, fidelity_on_grid, run_pulse_train, PulseTrain, StateVector,
};

fn main() -> squid_tip::Result<()> {
    let cfg = RunConfig::default();
    let ctx = build_context(&cfg)?;
    let train = PulseTrain::new(cfg.td_ps * 1e-12, cfg.ts_ps * 1e-12, 10, cfg.eps)?;
    let initial = StateVector::superposition(ctx.basis0.clone(), 1.0)?;
    let sample_dt = 1e-12;

    let fast = run_pulse_train(&initial, &train, &ctx.basis1, sample_dt, 0.0)?;
    let dt = cfg.td_ps * 1e-12 / 40.0;
    let direct = direct_integrate(&initial, &train, dt, sample_dt, 0.0)?;

    let dx = ctx.basis0.grid.spacing();
    let fid = fidelity_on_grid(&fast.final_state.on_grid(), &direct.final_psi, dx);

    let mut max_diff = 0.0f64;
    for (a, b) in fast
        .trajectory
        .occupations
        .iter()
        .zip(&direct.trajectory.occupations)
    {
        for (x, y) in a.iter().zip(b) {
            max_diff = max_diff.max((x - y).abs());
        }
    }

    println!("pulses                      = {}", train.n_pulses);
    println!("direct integrator step      = {:.2} fs", dt * 1e15);
    println!("final-state fidelity        = {:.8}", fid);
    println!("max occupation discrepancy  = {:.2e}", max_diff);
    println!(
        "final p_right: fast = {:.6}, direct = {:.6}",
        fast.trajectory.p_right.last().unwrap(),
        direct.trajectory.p_right.last().unwrap()
    );
    Ok(())
}
