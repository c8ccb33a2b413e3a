//! Prepare the right-well state and let it tunnel freely: the probability
//! beats between the wells at the ground-doublet splitting.
//!
//! Run with: cargo run --release --example free_oscillation

use squid_tip::cli::{build_context, RunConfig};
use squid_tip::evolve::{measure_period, run_free, StateVector};

fn main() -> squid_tip::Result<()> {
    let ctx = build_context(&RunConfig::default())?;
    let beat = 1.0 / ctx.basis0.transition_hz(0, 1);
    println!("expected beat period h/(E2-E1) = {:.4} ns", beat * 1e9);

    // |right> = (|0> + |1>)/sqrt(2); evolve for 2.5 beats.
    let initial = StateVector::superposition(ctx.basis0.clone(), 1.0)?;
    let res = run_free(&initial, 2.5 * beat, 10e-12)?;
    let traj = &res.trajectory;

    println!("measured beat period           = {:.4} ns", measure_period(traj)? * 1e9);
    for frac in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let idx = ((frac * beat / 10e-12) as usize).min(traj.len() - 1);
        println!(
            "t = {:>6.2} ns   p_left = {:.4}   p_right = {:.4}",
            traj.times[idx] * 1e9,
            traj.p_left[idx],
            traj.p_right[idx]
        );
    }
    println!("final norm = {:.12}", res.final_state.norm_sq());
    Ok(())
}
