//! Thin binary wrapper around the `cli` module.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use squid_tip::cli::{
    cmd_design, cmd_evolve, cmd_scan, cmd_spectrum, cmd_sweep, default_scan_range,
    parse_config, build_context, RunConfig,
};
use squid_tip::error::Result;

#[derive(Parser)]
#[command(name = "squid-tip", about = "rf-SQUID tipping-pulse simulator", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Parser)]
struct Common {
    /// Path to a key = value config file (`sweep`: a directory of them).
    #[arg(long)]
    config: PathBuf,
    /// Cross-validate with the direct grid integrator where applicable.
    #[arg(long)]
    oracle: bool,
    /// Output directory; overrides the config's `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues, wavefunctions and derived device quantities.
    Spectrum {
        #[command(flatten)]
        common: Common,
    },
    /// Propagate the configured pulse train (or a free run).
    Evolve {
        #[command(flatten)]
        common: Common,
    },
    /// Sweep the pulse spacing around the analytic resonance.
    Scan {
        #[command(flatten)]
        common: Common,
        /// Scan window lower edge in ps (default: resonance - 10%).
        #[arg(long)]
        ts_min_ps: Option<f64>,
        /// Scan window upper edge in ps (default: resonance + 10%).
        #[arg(long)]
        ts_max_ps: Option<f64>,
        /// Scan step in ps.
        #[arg(long, default_value_t = 0.1)]
        ts_step_ps: f64,
    },
    /// Design and validate a tipping schedule.
    Design {
        #[command(flatten)]
        common: Common,
        /// Target rotation in units of pi radians.
        #[arg(long, default_value_t = 1.0)]
        theta_pi: f64,
    },
    /// Run `evolve` for every config file in a directory.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> Result<(RunConfig, PathBuf)> {
    let cfg = parse_config(&std::fs::read_to_string(&common.config)?)?;
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
    Ok((cfg, out))
}

fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Spectrum { common } => {
            let (cfg, out) = load(&common)?;
            cmd_spectrum(&cfg, &out)
        }
        Command::Evolve { common } => {
            let (cfg, out) = load(&common)?;
            cmd_evolve(&cfg, common.oracle, &out)
        }
        Command::Scan { common, ts_min_ps, ts_max_ps, ts_step_ps } => {
            let (cfg, out) = load(&common)?;
            let (mut lo, mut hi, step) = match (ts_min_ps, ts_max_ps) {
                (Some(lo), Some(hi)) => (lo * 1e-12, hi * 1e-12, ts_step_ps * 1e-12),
                _ => {
                    let ctx = build_context(&cfg)?;
                    let (lo, hi, _) = default_scan_range(&ctx, cfg.td_ps * 1e-12)?;
                    (lo, hi, ts_step_ps * 1e-12)
                }
            };
            if let Some(v) = ts_min_ps {
                lo = v * 1e-12;
            }
            if let Some(v) = ts_max_ps {
                hi = v * 1e-12;
            }
            cmd_scan(&cfg, lo, hi, step, &out)
        }
        Command::Design { common, theta_pi } => {
            let (cfg, out) = load(&common)?;
            cmd_design(&cfg, theta_pi * std::f64::consts::PI, &out)
        }
        Command::Sweep { common } => {
            let out = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
            cmd_sweep(&common.config, common.oracle, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("squid-tip: error kind={} code={} msg={e}", e.kind(), e.exit_code());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
