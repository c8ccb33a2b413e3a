//! Design pulse schedules that rotate the qubit by pi (population flip) and
//! pi/2 (balanced superposition), then execute them and check the outcome.
//!
//! Run with: cargo run --release --example design_tip

use std::f64::consts::PI;

use squid_tip::analytic::design_schedule;
use squid_tip::cli::{build_context, RunConfig};
use squid_tip::evolve::StateVector;

fn main() -> squid_tip::Result<()> {
    let cfg = RunConfig::default();
    let ctx = build_context(&cfg)?;
    let t_d = cfg.td_ps * 1e-12;
    let initial = StateVector::superposition(ctx.basis0.clone(), 1.0)?;

    for (label, target) in [("pi tip", PI), ("pi/2 tip", 0.5 * PI)] {
        let sched = design_schedule(&initial, &ctx.basis1, t_d, target, 100, 1e-12)?;
        let res = sched.execute(&initial, &ctx.basis1, 1e-12)?;
        let traj = &res.trajectory;
        println!("{label}:");
        println!("  pulses            = {}", sched.train.n_pulses);
        println!("  spacing t_s       = {:.4} ps", sched.train.t_s * 1e12);
        println!("  free hold         = {:.2} ps", sched.hold * 1e12);
        println!("  total tip time    = {:.3} ns", sched.total_time() * 1e9);
        println!("  theta at stop     = {:.4} rad (target {:.4})", sched.theta_at_stop, target);
        println!("  leakage at stop   = {:.4}", sched.leak_at_stop);
        println!(
            "  p_right: {:.4} -> {:.4}   p_left: -> {:.4}",
            traj.p_right[0],
            traj.p_right.last().unwrap(),
            traj.p_left.last().unwrap()
        );
        println!();
    }
    Ok(())
}
