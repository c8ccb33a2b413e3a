//! End-to-end tests of the command entry points and the binary: summary
//! contents, bytewise determinism, sweep independence, and exit codes.

use std::fs;
use std::path::PathBuf;
use std::process::Command;

use squid_tip::analytic::perturbation_matrix;
use squid_tip::cli::{build_context, cmd_evolve, cmd_spectrum, cmd_sweep, parse_config, RunConfig};

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("squid-tip-test-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn get(summary: &str, key: &str) -> f64 {
    for line in summary.lines() {
        if let Some((k, v)) = line.split_once(" = ") {
            if k == key {
                return v.parse().unwrap_or(f64::NAN);
            }
        }
    }
    panic!("summary has no key `{key}`:\n{summary}");
}

#[test]
fn spectrum_summary_matches_reference_device() {
    let dir = workdir("spectrum");
    let cfg = RunConfig::default();
    let summary = cmd_spectrum(&cfg, &dir).unwrap();
    assert!(summary.contains("levels_below_barrier = 4"));
    let ts13 = get(&summary, "t_s_resonant_13_ps");
    assert!((ts13 - 25.9).abs() / 25.9 < 0.10, "t_s_resonant_13_ps = {ts13}");
    let ts24 = get(&summary, "t_s_resonant_24_ps");
    assert!((ts24 - 23.9).abs() / 23.9 < 0.10, "t_s_resonant_24_ps = {ts24}");
    // Suppressing the critical current shifts every level with the sign of
    // the corresponding diagonal perturbation entry.
    let ctx = build_context(&cfg).unwrap();
    let pm = perturbation_matrix(&ctx.basis0, cfg.eps, 4).unwrap();
    for k in 0..4 {
        let shift = get(&summary, &format!("shift_e_{:02}_scaled", k + 1));
        assert!(
            shift * pm.entry(k, k) > 0.0,
            "level {k}: shift {shift:e} inconsistent with H'_kk = {:e}",
            pm.entry(k, k)
        );
    }
    assert!(dir.join("spectrum.csv").is_file());
    assert!(dir.join("spectrum_suppressed.csv").is_file());
    assert!(dir.join("wavefunctions.csv").is_file());
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn free_evolution_period_self_consistent() {
    let dir = workdir("free");
    let cfg = parse_config("n_pulses = 0\nsample_dt_ps = 10\n").unwrap();
    let summary = cmd_evolve(&cfg, false, &dir).unwrap();
    let measured = get(&summary, "measured_period_ns");
    let unperturbed = get(&summary, "unperturbed_period_ns");
    assert!(
        (measured - unperturbed).abs() / unperturbed < 0.01,
        "measured {measured} ns vs h/(E2-E1) {unperturbed} ns"
    );
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn evolve_runs_are_bytewise_deterministic() {
    let (d1, d2) = (workdir("det1"), workdir("det2"));
    let cfg = parse_config("n_pulses = 30\n").unwrap();
    let s1 = cmd_evolve(&cfg, false, &d1).unwrap();
    let s2 = cmd_evolve(&cfg, false, &d2).unwrap();
    assert_eq!(s1, s2);
    let t1 = fs::read(d1.join("trajectory.csv")).unwrap();
    let t2 = fs::read(d2.join("trajectory.csv")).unwrap();
    assert_eq!(t1, t2, "trajectory CSVs differ between identical runs");
    let _ = fs::remove_dir_all(&d1);
    let _ = fs::remove_dir_all(&d2);
}

#[test]
fn oracle_fidelity_reported() {
    let dir = workdir("oracle");
    let cfg = parse_config("n_pulses = 5\n").unwrap();
    let summary = cmd_evolve(&cfg, true, &dir).unwrap();
    let fid = get(&summary, "oracle_fidelity");
    assert!(fid >= 0.999, "oracle fidelity {fid}");
    assert!(get(&summary, "oracle_max_occ_diff") <= 1e-3);
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn sweep_is_order_independent_and_deterministic() {
    let cfgs = workdir("sweep-cfgs");
    // Write the configs in non-sorted order; the sweep must sort by name.
    fs::write(cfgs.join("c_slow.cfg"), "ts_ps = 26.1\nn_pulses = 15\n").unwrap();
    fs::write(cfgs.join("a_fast.cfg"), "ts_ps = 25.7\nn_pulses = 15\n").unwrap();
    fs::write(cfgs.join("b_ref.cfg"), "n_pulses = 15\n").unwrap();
    let (o1, o2) = (workdir("sweep-out1"), workdir("sweep-out2"));
    let s1 = cmd_sweep(&cfgs, false, &o1).unwrap();
    let s2 = cmd_sweep(&cfgs, false, &o2).unwrap();
    assert_eq!(s1, s2, "sweep summaries differ between runs");
    assert_eq!(s1.matches("command = evolve").count(), 3);
    // Names appear in sorted order regardless of execution interleaving.
    let (pa, pb, pc) = (
        s1.find("a_fast").unwrap(),
        s1.find("b_ref").unwrap(),
        s1.find("c_slow").unwrap(),
    );
    assert!(pa < pb && pb < pc);
    for stem in ["a_fast", "b_ref", "c_slow"] {
        assert!(o1.join(stem).join("trajectory.csv").is_file());
        assert_eq!(
            fs::read(o1.join(stem).join("trajectory.csv")).unwrap(),
            fs::read(o2.join(stem).join("trajectory.csv")).unwrap()
        );
    }
    for d in [cfgs, o1, o2] {
        let _ = fs::remove_dir_all(&d);
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_squid-tip"))
}

#[test]
fn binary_exit_codes_and_diagnostics() {
    let dir = workdir("bin");
    let bad = dir.join("bad.cfg");
    fs::write(&bad, "L_pH = -1e-12\n").unwrap();
    let out = bin().args(["spectrum", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "config error must exit 2");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("kind=config"), "diagnostic line missing: {stderr}");
    assert!(stderr.contains("L_pH"));

    // Missing config file: io problem, exit 3.
    let out = bin()
        .args(["spectrum", "--config"])
        .arg(dir.join("absent.cfg"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));

    // Unreachable design target: numerical-family error, exit 3.
    let cfg = dir.join("tiny.cfg");
    fs::write(&cfg, "n_pulses = 3\n").unwrap();
    let out = bin()
        .args(["design", "--theta-pi", "40", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("d"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kind=design"));

    // A valid run exits 0 and prints the summary on stdout.
    let ok_cfg = dir.join("ok.cfg");
    fs::write(&ok_cfg, "").unwrap();
    let out = bin()
        .args(["spectrum", "--config"])
        .arg(&ok_cfg)
        .arg("--out")
        .arg(dir.join("s"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("beta_l = 1.1789514531561429e0"));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn out_dir_key_is_respected() {
    let dir = workdir("outdir");
    let cfg_path = dir.join("cfg");
    fs::write(&cfg_path, format!("out_dir = {}\nn_pulses = 2\n", dir.join("from-key").display()))
        .unwrap();
    let out = bin().args(["evolve", "--config"]).arg(&cfg_path).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("from-key").join("trajectory.csv").is_file());
    let _ = fs::remove_dir_all(&dir);
}
