//! Command line front end: flat key-value configs, subcommand entry points,
//! deterministic CSV and `key = value` summary outputs.
//!
//! Config units follow the paper conventions (pH, fF, uA, ps) so a device
//! description can be transcribed verbatim. Every command writes its CSV
//! artifacts into an output directory and returns the summary text; float
//! output always uses 17-significant-digit scientific notation so repeated
//! runs are bytewise identical.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::analytic::{design_schedule, resonance_scan, resonance_spacing, write_scan_csv};
use crate::error::{Result, SquidError};
use crate::evolve::{
    direct_integrate, fidelity_on_grid, measure_period, run_free, run_pulse_train, PulseTrain,
    StateVector, TrainResult,
};
use crate::model::{nondimensionalize, Constants, ScaledParams, SquidParams};
use crate::spectral::{
    classify_parity, discretize, eigensolve, levels_below_barrier, write_spectrum_csv,
    write_wavefunctions_csv, EigenSystem, GridSpec,
};

/// Initial state selector: a single eigenstate or the equal superposition of
/// the ground doublet with either relative sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialState {
    /// `(|1> + |2>)/sqrt(2)`: right-well localized under the sign convention.
    Plus,
    /// `(|1> - |2>)/sqrt(2)`: left-well localized.
    Minus,
    /// Eigenstate `k` (0-based).
    Eigenstate(usize),
}

impl FromStr for InitialState {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "plus" => Ok(InitialState::Plus),
            "minus" => Ok(InitialState::Minus),
            _ => match s.strip_prefix("eigenstate:") {
                Some(k) => k
                    .parse::<usize>()
                    .map(InitialState::Eigenstate)
                    .map_err(|_| format!("bad eigenstate index `{k}`")),
                None => Err(format!("`{s}` is not plus, minus or eigenstate:<k>")),
            },
        }
    }
}

impl fmt::Display for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialState::Plus => write!(f, "plus"),
            InitialState::Minus => write!(f, "minus"),
            InitialState::Eigenstate(k) => write!(f, "eigenstate:{k}"),
        }
    }
}

/// One complete run description. Defaults reproduce the reference device and
/// pulse train (L = 97 pH, C = 50 fF, Ic = 4 uA, phi_x = phi0/2, eps = 0.01,
/// t_d = 3 ps, t_s = 25.9 ps).
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub l_ph: f64,
    pub c_ff: f64,
    pub ic_ua: f64,
    pub phix_phi0: f64,
    pub eps: f64,
    pub td_ps: f64,
    pub ts_ps: f64,
    pub n_pulses: usize,
    pub n_states: usize,
    pub grid_min_phi0: f64,
    pub grid_max_phi0: f64,
    pub grid_points: usize,
    pub sample_dt_ps: f64,
    pub initial: InitialState,
    pub pulse_first: bool,
    pub out_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        let grid = GridSpec::default();
        RunConfig {
            l_ph: 97.0,
            c_ff: 50.0,
            ic_ua: 4.0,
            phix_phi0: 0.5,
            eps: 0.01,
            td_ps: 3.0,
            ts_ps: 25.9,
            n_pulses: 300,
            n_states: 10,
            grid_min_phi0: grid.phi_min,
            grid_max_phi0: grid.phi_max,
            grid_points: grid.n_points,
            sample_dt_ps: 1.0,
            initial: InitialState::Plus,
            pulse_first: false,
            out_dir: ".".into(),
        }
    }
}

const PS: f64 = 1e-12;

impl RunConfig {
    pub fn squid_params(&self, consts: &Constants) -> SquidParams {
        SquidParams {
            l: self.l_ph * 1e-12,
            c: self.c_ff * 1e-15,
            ic: self.ic_ua * 1e-6,
            phi_x: self.phix_phi0 * consts.phi0,
        }
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid_min_phi0, self.grid_max_phi0, self.grid_points)
    }

    pub fn pulse_train(&self) -> Result<PulseTrain> {
        let mut train =
            PulseTrain::new(self.td_ps * PS, self.ts_ps * PS, self.n_pulses, self.eps)?;
        train.pulse_first = self.pulse_first;
        Ok(train)
    }

    /// Cross-field validation; field-level domain checks happen at parse time.
    pub fn validate(&self) -> Result<()> {
        let consts = Constants::default();
        let params = self.squid_params(&consts);
        params.validate(&consts).map_err(|e| SquidError::Config {
            line: 0,
            key: "L_pH/C_fF/Ic_uA".into(),
            msg: e.to_string(),
        })?;
        self.grid_spec().map_err(|e| SquidError::Config {
            line: 0,
            key: "grid_min_phi0/grid_max_phi0/grid_points".into(),
            msg: e.to_string(),
        })?;
        if self.n_states == 0 || self.n_states > 16 {
            return Err(SquidError::Config {
                line: 0,
                key: "n_states".into(),
                msg: format!("{} outside 1..=16", self.n_states),
            });
        }
        if let InitialState::Eigenstate(k) = self.initial {
            if k >= self.n_states {
                return Err(SquidError::Config {
                    line: 0,
                    key: "initial".into(),
                    msg: format!("eigenstate {k} outside the {}-state truncation", self.n_states),
                });
            }
        }
        if !(self.eps > 0.0 && self.eps < 0.5) {
            return Err(SquidError::Config {
                line: 0,
                key: "eps".into(),
                msg: format!("{} outside (0, 0.5)", self.eps),
            });
        }
        Ok(())
    }
}

fn bad_value(line: usize, key: &str, msg: impl Into<String>) -> SquidError {
    SquidError::Config { line, key: key.into(), msg: msg.into() }
}

fn parse_pos_f64(line: usize, key: &str, val: &str) -> Result<f64> {
    let x: f64 =
        val.parse().map_err(|_| bad_value(line, key, format!("`{val}` is not a number")))?;
    if !x.is_finite() || x <= 0.0 {
        return Err(bad_value(line, key, format!("{x} is not positive and finite")));
    }
    Ok(x)
}

fn parse_f64(line: usize, key: &str, val: &str) -> Result<f64> {
    let x: f64 =
        val.parse().map_err(|_| bad_value(line, key, format!("`{val}` is not a number")))?;
    if !x.is_finite() {
        return Err(bad_value(line, key, format!("{x} is not finite")));
    }
    Ok(x)
}

fn parse_usize(line: usize, key: &str, val: &str) -> Result<usize> {
    val.parse().map_err(|_| bad_value(line, key, format!("`{val}` is not a non-negative integer")))
}

fn parse_bool(line: usize, key: &str, val: &str) -> Result<bool> {
    match val {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(bad_value(line, key, format!("`{val}` is not true/false"))),
    }
}

/// Parse a line-oriented `key = value` config with `#` comments. Unknown keys
/// are rejected; omitted keys take the reference-device defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(bad_value(line_no, line, "expected `key = value`"));
        };
        let key = k.trim();
        let val = v.trim();
        match key {
            "L_pH" => cfg.l_ph = parse_pos_f64(line_no, key, val)?,
            "C_fF" => cfg.c_ff = parse_pos_f64(line_no, key, val)?,
            "Ic_uA" => cfg.ic_ua = parse_pos_f64(line_no, key, val)?,
            "phix_phi0" => cfg.phix_phi0 = parse_pos_f64(line_no, key, val)?,
            "eps" => cfg.eps = parse_pos_f64(line_no, key, val)?,
            "td_ps" => cfg.td_ps = parse_pos_f64(line_no, key, val)?,
            "ts_ps" => {
                cfg.ts_ps = parse_f64(line_no, key, val)?;
                if cfg.ts_ps < 0.0 {
                    return Err(bad_value(line_no, key, "spacing must be >= 0"));
                }
            }
            "n_pulses" => cfg.n_pulses = parse_usize(line_no, key, val)?,
            "n_states" => cfg.n_states = parse_usize(line_no, key, val)?,
            "grid_min_phi0" => cfg.grid_min_phi0 = parse_f64(line_no, key, val)?,
            "grid_max_phi0" => cfg.grid_max_phi0 = parse_f64(line_no, key, val)?,
            "grid_points" => cfg.grid_points = parse_usize(line_no, key, val)?,
            "sample_dt_ps" => cfg.sample_dt_ps = parse_pos_f64(line_no, key, val)?,
            "initial" => {
                cfg.initial =
                    val.parse().map_err(|e: String| bad_value(line_no, key, e))?
            }
            "pulse_first" => cfg.pulse_first = parse_bool(line_no, key, val)?,
            "out_dir" => cfg.out_dir = val.to_string(),
            _ => return Err(bad_value(line_no, key, "unknown key")),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Render a config back to text; `parse_config(serialize_config(c)) == c`.
pub fn serialize_config(cfg: &RunConfig) -> String {
    let mut s = String::new();
    let mut f = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
    f("L_pH", format!("{:.16e}", cfg.l_ph));
    f("C_fF", format!("{:.16e}", cfg.c_ff));
    f("Ic_uA", format!("{:.16e}", cfg.ic_ua));
    f("phix_phi0", format!("{:.16e}", cfg.phix_phi0));
    f("eps", format!("{:.16e}", cfg.eps));
    f("td_ps", format!("{:.16e}", cfg.td_ps));
    f("ts_ps", format!("{:.16e}", cfg.ts_ps));
    f("n_pulses", cfg.n_pulses.to_string());
    f("n_states", cfg.n_states.to_string());
    f("grid_min_phi0", format!("{:.16e}", cfg.grid_min_phi0));
    f("grid_max_phi0", format!("{:.16e}", cfg.grid_max_phi0));
    f("grid_points", cfg.grid_points.to_string());
    f("sample_dt_ps", format!("{:.16e}", cfg.sample_dt_ps));
    f("initial", cfg.initial.to_string());
    f("pulse_first", cfg.pulse_first.to_string());
    f("out_dir", cfg.out_dir.clone());
    s
}

/// Everything the commands need: scaled parameters plus the unperturbed and
/// suppressed eigensystems.
pub struct RunContext {
    pub scaled: ScaledParams,
    pub basis0: Arc<EigenSystem>,
    pub basis1: Arc<EigenSystem>,
}

/// Solve both eigenproblems for a config.
pub fn build_context(cfg: &RunConfig) -> Result<RunContext> {
    let consts = Constants::default();
    let scaled = nondimensionalize(&cfg.squid_params(&consts), &consts)?;
    let grid = cfg.grid_spec()?;
    let basis0 =
        classify_parity(eigensolve(&discretize(&scaled, 0.0, &grid)?, cfg.n_states)?)?;
    let basis1 =
        classify_parity(eigensolve(&discretize(&scaled, cfg.eps, &grid)?, cfg.n_states)?)?;
    Ok(RunContext { scaled, basis0: Arc::new(basis0), basis1: Arc::new(basis1) })
}

/// Build the configured initial state in the unperturbed basis.
pub fn initial_state(cfg: &RunConfig, basis0: &Arc<EigenSystem>) -> Result<StateVector> {
    match cfg.initial {
        InitialState::Plus => StateVector::superposition(basis0.clone(), 1.0),
        InitialState::Minus => StateVector::superposition(basis0.clone(), -1.0),
        InitialState::Eigenstate(k) => StateVector::eigenstate(basis0.clone(), k),
    }
}

struct Summary(String);

impl Summary {
    fn new(command: &str) -> Self {
        Summary(format!("command = {command}\n"))
    }
    fn float(&mut self, key: &str, v: f64) {
        self.0.push_str(&format!("{key} = {v:.16e}\n"));
    }
    fn int(&mut self, key: &str, v: usize) {
        self.0.push_str(&format!("{key} = {v}\n"));
    }
    fn text(&mut self, key: &str, v: &str) {
        self.0.push_str(&format!("{key} = {v}\n"));
    }
    fn finish(self) -> String {
        self.0
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut f = fs::File::create(dir.join(name))?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

fn write_csv<F>(dir: &Path, name: &str, emit: F) -> Result<()>
where
    F: FnOnce(&mut Vec<u8>) -> Result<()>,
{
    fs::create_dir_all(dir)?;
    let mut buf = Vec::new();
    emit(&mut buf)?;
    fs::write(dir.join(name), buf)?;
    Ok(())
}

/// Scaled energy -> frequency in Hz.
fn scaled_to_hz(scaled: &ScaledParams, e: f64) -> f64 {
    e / (2.0 * std::f64::consts::PI * scaled.time_unit)
}

/// `spectrum` command: eigensystems at eps = 0 and eps = cfg.eps, spectrum
/// and wavefunction CSVs, and a summary of the derived device quantities.
pub fn cmd_spectrum(cfg: &RunConfig, out: &Path) -> Result<String> {
    let ctx = build_context(cfg)?;
    let (b0, b1) = (&ctx.basis0, &ctx.basis1);
    write_csv(out, "spectrum.csv", |w| write_spectrum_csv(b0, w))?;
    write_csv(out, "spectrum_suppressed.csv", |w| write_spectrum_csv(b1, w))?;
    write_csv(out, "wavefunctions.csv", |w| write_wavefunctions_csv(b0, w))?;

    let below = levels_below_barrier(b0, &ctx.scaled, 0.0)?;
    // Barrier height above the well bottom, from a dense potential scan.
    let grid = &b0.grid;
    let v_top = ctx.scaled.potential(0.0, ctx.scaled.f_x);
    let v_min = (0..grid.n_points)
        .map(|i| ctx.scaled.potential(0.0, grid.point(i)))
        .fold(f64::INFINITY, f64::min);
    let t_d = cfg.td_ps * PS;

    let mut s = Summary::new("spectrum");
    s.float("beta_l", ctx.scaled.beta_l);
    s.int("levels_below_barrier", below);
    s.float("barrier_height_ghz", scaled_to_hz(&ctx.scaled, v_top - v_min) / 1e9);
    s.float("f_21_mhz", b0.transition_hz(0, 1) / 1e6);
    s.float("f_31_ghz", b0.transition_hz(0, 2) / 1e9);
    s.float("free_beat_period_ns", 1e9 / b0.transition_hz(0, 1));
    s.float("t_s_resonant_13_ps", resonance_spacing(b0, b1, (0, 2), 1, t_d)? / PS);
    s.float("t_s_resonant_24_ps", resonance_spacing(b0, b1, (1, 3), 1, t_d)? / PS);
    for k in 0..b0.n_states().min(4) {
        s.float(
            &format!("shift_e_{:02}_scaled", k + 1),
            b1.energies[k] - b0.energies[k],
        );
    }
    let text = s.finish();
    write_file(out, "spectrum_summary.txt", &text)?;
    Ok(text)
}

fn evolve_run(cfg: &RunConfig, ctx: &RunContext) -> Result<TrainResult> {
    let st = initial_state(cfg, &ctx.basis0)?;
    let sample_dt = cfg.sample_dt_ps * PS;
    if cfg.n_pulses == 0 {
        // Free run over a few beats so the period estimator has enough
        // oscillations to average.
        let beat = 1.0 / ctx.basis0.transition_hz(0, 1);
        run_free(&st, 2.6 * beat, sample_dt)
    } else {
        run_pulse_train(&st, &cfg.pulse_train()?, &ctx.basis1, sample_dt, 0.0)
    }
}

/// `evolve` command: propagate the configured train (or a free run when
/// `n_pulses = 0`), write the trajectory CSV, and summarize the measured
/// period, final occupations and norm loss. With `oracle` set, the same
/// schedule is integrated directly on the grid and the agreement reported.
pub fn cmd_evolve(cfg: &RunConfig, oracle: bool, out: &Path) -> Result<String> {
    let ctx = build_context(cfg)?;
    let res = evolve_run(cfg, &ctx)?;
    let traj = &res.trajectory;
    write_csv(out, "trajectory.csv", |w| traj.write_csv(w))?;

    let unperturbed = 1.0 / ctx.basis0.transition_hz(0, 1);
    let mut s = Summary::new("evolve");
    s.int("n_pulses", cfg.n_pulses);
    s.float("total_time_ns", traj.times.last().copied().unwrap_or(0.0) * 1e9);
    s.float("unperturbed_period_ns", unperturbed * 1e9);
    match measure_period(traj) {
        Ok(p) => {
            s.float("measured_period_ns", p * 1e9);
            s.float("speedup", unperturbed / p);
        }
        Err(e) => s.text("measured_period_ns", &format!("unavailable ({})", e.kind())),
    }
    s.float("norm_loss", 1.0 - traj.norm.last().copied().unwrap_or(1.0));
    s.float("final_p_left", *traj.p_left.last().unwrap());
    s.float("final_p_right", *traj.p_right.last().unwrap());
    let occ = traj.occupations.last().unwrap();
    for (k, o) in occ.iter().enumerate() {
        s.float(&format!("final_occ_{:02}", k + 1), *o);
    }

    if oracle {
        let st = initial_state(cfg, &ctx.basis0)?;
        let train = if cfg.n_pulses == 0 {
            let mut t = cfg.pulse_train()?;
            t.n_pulses = 0;
            t
        } else {
            cfg.pulse_train()?
        };
        let tail = if cfg.n_pulses == 0 {
            traj.times.last().copied().unwrap_or(0.0)
        } else {
            0.0
        };
        let dt = train.t_d / 40.0;
        let direct = direct_integrate(&st, &train, dt, cfg.sample_dt_ps * PS, tail)?;
        let fid = fidelity_on_grid(
            &res.final_state.on_grid(),
            &direct.final_psi,
            ctx.basis0.grid.spacing(),
        );
        let n_cmp = traj.len().min(direct.trajectory.len());
        let mut max_diff = 0.0f64;
        for i in 0..n_cmp {
            for k in 0..cfg.n_states {
                max_diff = max_diff
                    .max((traj.occupations[i][k] - direct.trajectory.occupations[i][k]).abs());
            }
        }
        s.float("oracle_fidelity", fid);
        s.float("oracle_max_occ_diff", max_diff);
    }
    let text = s.finish();
    write_file(out, "evolve_summary.txt", &text)?;
    Ok(text)
}

/// Default scan window: +-10% around the corrected even-pair resonance, in
/// 0.1 ps steps.
pub fn default_scan_range(ctx: &RunContext, t_d: f64) -> Result<(f64, f64, f64)> {
    let center = resonance_spacing(&ctx.basis0, &ctx.basis1, (0, 2), 1, t_d)?;
    Ok((0.9 * center, 1.1 * center, 0.1 * PS))
}

/// `scan` command: sweep the pulse spacing and locate the transfer peak.
pub fn cmd_scan(
    cfg: &RunConfig,
    t_s_min: f64,
    t_s_max: f64,
    t_s_step: f64,
    out: &Path,
) -> Result<String> {
    let ctx = build_context(cfg)?;
    let st = initial_state(cfg, &ctx.basis0)?;
    let t_d = cfg.td_ps * PS;
    let n_pulses = cfg.n_pulses.max(1);
    let points = resonance_scan(
        &st,
        &ctx.basis1,
        t_d,
        t_s_min,
        t_s_max,
        t_s_step,
        n_pulses,
        cfg.sample_dt_ps * PS,
    )?;
    write_csv(out, "scan.csv", |w| write_scan_csv(&points, w))?;

    let peak = points
        .iter()
        .max_by(|a, b| a.peak_upper_even.total_cmp(&b.peak_upper_even))
        .expect("scan produced no points");
    let predicted = resonance_spacing(&ctx.basis0, &ctx.basis1, (0, 2), 1, t_d)?;
    let mut s = Summary::new("scan");
    s.int("n_points", points.len());
    s.int("n_pulses", n_pulses);
    s.float("step_ps", t_s_step / PS);
    s.float("predicted_t_s_ps", predicted / PS);
    s.float("peak_t_s_ps", peak.t_s / PS);
    s.float("peak_occ_03", peak.peak_upper_even);
    s.float("peak_occ_04", peak.peak_upper_odd);
    let text = s.finish();
    write_file(out, "scan_summary.txt", &text)?;
    Ok(text)
}

/// `design` command: build a schedule for `target_theta` radians, validate it
/// by simulation, and write the validating trajectory.
pub fn cmd_design(cfg: &RunConfig, target_theta: f64, out: &Path) -> Result<String> {
    let ctx = build_context(cfg)?;
    let st = initial_state(cfg, &ctx.basis0)?;
    let sample_dt = cfg.sample_dt_ps * PS;
    let max_pulses = cfg.n_pulses.max(1);
    let sched = design_schedule(&st, &ctx.basis1, cfg.td_ps * PS, target_theta, max_pulses, sample_dt)?;
    let res = sched.execute(&st, &ctx.basis1, sample_dt)?;
    let traj = &res.trajectory;
    write_csv(out, "design_trajectory.csv", |w| traj.write_csv(w))?;

    let mut s = Summary::new("design");
    s.float("target_theta_rad", target_theta);
    s.float("t_d_ps", sched.train.t_d / PS);
    s.float("t_s_ps", sched.train.t_s / PS);
    s.int("n_pulses", sched.train.n_pulses);
    s.float("hold_ps", sched.hold / PS);
    s.float("tip_time_ns", sched.total_time() * 1e9);
    s.float("theta_at_stop_rad", sched.theta_at_stop);
    s.float("predicted_theta_rad", sched.predicted_theta);
    s.float("leak_at_stop", sched.leak_at_stop);
    s.float("initial_p_right", traj.p_right[0]);
    s.float("final_p_left", *traj.p_left.last().unwrap());
    s.float("final_p_right", *traj.p_right.last().unwrap());
    let text = s.finish();
    write_file(out, "design_summary.txt", &text)?;
    Ok(text)
}

/// `sweep` command: run `evolve` for every config file in a directory
/// (sorted by file name, executed concurrently), each into its own
/// subdirectory of `out`. Returns the concatenated summaries in name order.
pub fn cmd_sweep(config_dir: &Path, oracle: bool, out: &Path) -> Result<String> {
    let mut files: Vec<PathBuf> = fs::read_dir(config_dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(SquidError::Config {
            line: 0,
            key: config_dir.display().to_string(),
            msg: "sweep directory contains no config files".into(),
        });
    }
    let summaries: Vec<Result<String>> = files
        .par_iter()
        .map(|path| {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "config".into());
            let cfg = parse_config(&fs::read_to_string(path)?)?;
            let sub = out.join(&stem);
            let summary = cmd_evolve(&cfg, oracle, &sub)?;
            Ok(format!("config = {}\n{summary}", path.display()))
        })
        .collect();
    let mut combined = String::new();
    for s in summaries {
        combined.push_str(&s?);
        combined.push('\n');
    }
    write_file(out, "sweep_summary.txt", &combined)?;
    Ok(combined)
}
