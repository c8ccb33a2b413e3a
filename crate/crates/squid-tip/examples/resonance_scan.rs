//! Sweep the free spacing between pulses and watch the upper-doublet
//! excitation peak at the corrected resonance condition.
//!
//! Run with: cargo run --release --example resonance_scan

use squid_tip::analytic::{resonance_scan, resonance_spacing};
use squid_tip::cli::{build_context, RunConfig};
use squid_tip::evolve::StateVector;

fn main() -> squid_tip::Result<()> {
    let cfg = RunConfig::default();
    let ctx = build_context(&cfg)?;
    let t_d = cfg.td_ps * 1e-12;
    let predicted = resonance_spacing(&ctx.basis0, &ctx.basis1, (0, 2), 1, t_d)?;
    println!("predicted even-pair resonance t_s = {:.4} ps", predicted * 1e12);

    let initial = StateVector::superposition(ctx.basis0.clone(), 1.0)?;
    let points = resonance_scan(
        &initial,
        &ctx.basis1,
        t_d,
        predicted - 1.0e-12,
        predicted + 1.0e-12,
        0.1e-12,
        40,
        1e-12,
    )?;

    println!("\nt_s (ps)   peak occ 2   peak occ 3   final p_right");
    let mut best = &points[0];
    for p in &points {
        println!(
            "{:>8.3}   {:>10.4}   {:>10.4}   {:>13.4}",
            p.t_s * 1e12,
            p.peak_upper_even,
            p.peak_upper_odd,
            p.final_p_right
        );
        if p.peak_upper_even > best.peak_upper_even {
            best = p;
        }
    }
    println!(
        "\nscan peak at t_s = {:.3} ps ({:+.3} ps from prediction)",
        best.t_s * 1e12,
        (best.t_s - predicted) * 1e12
    );
    Ok(())
}
