//! Closed-form estimates and schedule design.
//!
//! The pulse perturbation is the extra Josephson term switched on while the
//! critical current is suppressed. This module builds its matrix elements in
//! the unperturbed eigenbasis, solves the two-level Rabi problem they induce,
//! derives the resonant pulse spacing, scans spacings numerically, and designs
//! complete tipping schedules (pulse count plus trailing free hold) that
//! rotate the qubit azimuthal phase by a requested angle.

use num_complex::Complex64;
use rayon::prelude::*;
use std::io::Write;
use std::sync::Arc;

use crate::error::{Result, SquidError};
use crate::evolve::{
    grids_match, run_pulse_train, PulseEvent, PulseTrain, StateVector, TrainResult,
};
use crate::spectral::EigenSystem;

/// Relative leakage out of the ground doublet below which a sample is an
/// acceptable stopping point for the schedule designer.
pub const LEAK_MAX: f64 = 0.02;

/// Matrix of the pulse perturbation `eps * beta_L * cos(2 pi x)` in the
/// unperturbed eigenbasis. Entries are stored in scaled energy units; use
/// [`PerturbationMatrix::entry_joule`] for SI values.
#[derive(Debug, Clone)]
pub struct PerturbationMatrix {
    entries: Vec<f64>,
    n: usize,
    /// Suppression fraction the matrix was built for.
    pub eps: f64,
    energy_unit: f64,
}

/// Build the perturbation matrix for the lowest `n` levels of `basis`, which
/// must be the unperturbed (`eps = 0`) eigensystem.
pub fn perturbation_matrix(basis: &EigenSystem, eps: f64, n: usize) -> Result<PerturbationMatrix> {
    if basis.eps != 0.0 {
        return Err(SquidError::Basis(
            "perturbation matrix is defined in the eps = 0 basis".into(),
        ));
    }
    if n == 0 || n > basis.n_states() {
        return Err(SquidError::ParamDomain(format!(
            "requested {n} levels from a {}-state basis",
            basis.n_states()
        )));
    }
    if !eps.is_finite() || eps < 0.0 || eps >= 0.5 {
        return Err(SquidError::ParamDomain(format!("eps = {eps} must lie in [0, 0.5)")));
    }
    let grid = &basis.grid;
    let dx = grid.spacing();
    let amp = eps * basis.scaled.beta_l;
    // Trapezoidal quadrature; the endpoint half-weights are cosmetic because
    // Dirichlet eigenstates vanish there.
    let npts = grid.n_points;
    let cosine: Vec<f64> = (0..npts)
        .map(|i| (2.0 * std::f64::consts::PI * grid.point(i)).cos())
        .collect();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let mut s = 0.0;
            for k in 0..npts {
                let w = if k == 0 || k == npts - 1 { 0.5 } else { 1.0 };
                s += w * basis.states[i][k] * basis.states[j][k] * cosine[k];
            }
            let v = amp * s * dx;
            entries[i * n + j] = v;
            entries[j * n + i] = v;
        }
    }
    Ok(PerturbationMatrix { entries, n, eps, energy_unit: basis.scaled.energy_unit })
}

impl PerturbationMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Entry `<i| H' |j>` in scaled energy units (0-based level indices).
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.n && j < self.n, "perturbation matrix index out of range");
        self.entries[i * self.n + j]
    }

    /// Entry `<i| H' |j>` in joules.
    pub fn entry_joule(&self, i: usize, j: usize) -> f64 {
        self.entry(i, j) * self.energy_unit
    }

    /// Rabi detuning parameter for the level pair `(a, b)`, `a < b`, in
    /// scaled units: `H'_bb - H'_aa + (E_b - E_a)`.
    pub fn lambda(&self, basis: &EigenSystem, pair: (usize, usize)) -> Result<f64> {
        let (a, b) = check_pair(pair, self.n)?;
        Ok(self.entry(b, b) - self.entry(a, a) + basis.energies[b] - basis.energies[a])
    }
}

fn check_pair(pair: (usize, usize), n: usize) -> Result<(usize, usize)> {
    let (a, b) = pair;
    if a >= b || b >= n {
        return Err(SquidError::ParamDomain(format!(
            "level pair ({a}, {b}) must satisfy a < b < {n}"
        )));
    }
    Ok((a, b))
}

/// Exact solution of the two-level problem formed by one coupled pair under
/// the pulse perturbation, in the interaction picture dressed with the
/// perturbed diagonal energies `E_k + H'_kk`.
///
/// With `lambda = H'_bb - H'_aa + (E_b - E_a)` and
/// `nu = sqrt(lambda^2 + 4 |H'_ab|^2) / (2 hbar)`:
///
/// ```text
/// b_upper(t) = A e^{ i lambda t / (2 hbar)} sin(nu t),  A = H'_ba b_a(0) / (i hbar nu)
/// b_lower(t) =   e^{-i lambda t / (2 hbar)} [cos(nu t) + i lambda/(2 hbar nu) sin(nu t)] b_a(0)
/// ```
#[derive(Debug, Clone)]
pub struct RabiSolution {
    /// Detuning parameter, joules.
    pub lambda: f64,
    /// Generalized Rabi angular frequency, rad/s.
    pub nu: f64,
    /// Amplitude prefactor of the upper level.
    pub amp: Complex64,
    /// Coupling `H'_ab`, joules.
    pub coupling: f64,
    /// Initial lower-level amplitude.
    pub b_lower0: Complex64,
    hbar: f64,
}

/// Solve the pair `(a, b)` (0-based, `a < b`) starting from lower-level
/// amplitude `b_lower0` and an empty upper level.
pub fn rabi_solution(
    basis: &EigenSystem,
    pm: &PerturbationMatrix,
    pair: (usize, usize),
    b_lower0: Complex64,
) -> Result<RabiSolution> {
    let (a, b) = check_pair(pair, pm.n())?;
    let e0 = basis.scaled.energy_unit;
    let hbar = basis.scaled.energy_unit * basis.scaled.time_unit;
    let lambda = pm.lambda(basis, (a, b))? * e0;
    let coupling = pm.entry_joule(a, b);
    let nu = (lambda * lambda + 4.0 * coupling * coupling).sqrt() / (2.0 * hbar);
    if nu == 0.0 {
        return Err(SquidError::Numerical(
            "degenerate uncoupled pair: Rabi frequency vanishes".into(),
        ));
    }
    let amp = coupling * b_lower0 / (Complex64::i() * hbar * nu);
    Ok(RabiSolution { lambda, nu, amp, coupling, b_lower0, hbar })
}

impl RabiSolution {
    /// Upper-level amplitude after `t` seconds of continuous suppression.
    pub fn b_upper(&self, t: f64) -> Complex64 {
        self.amp
            * Complex64::from_polar(1.0, self.lambda * t / (2.0 * self.hbar))
            * (self.nu * t).sin()
    }

    /// Lower-level amplitude after `t` seconds of continuous suppression.
    pub fn b_lower(&self, t: f64) -> Complex64 {
        let (s, c) = (self.nu * t).sin_cos();
        let tilt = self.lambda / (2.0 * self.hbar * self.nu);
        Complex64::from_polar(1.0, -self.lambda * t / (2.0 * self.hbar))
            * (Complex64::new(c, 0.0) + Complex64::i() * tilt * s)
            * self.b_lower0
    }

    /// Duration of one full population cycle (upper occupation returns to
    /// zero), seconds.
    pub fn period(&self) -> f64 {
        std::f64::consts::PI / self.nu
    }
}

/// The bare resonance period `m h / (E_b - E_a)` for the pair `(a, b)`,
/// seconds. This is the pulse-to-pulse repeat time at which successive kicks
/// add in phase when the pulse itself is instantaneous.
pub fn resonance_period(basis: &EigenSystem, pair: (usize, usize), m: usize) -> Result<f64> {
    let (a, b) = check_pair(pair, basis.n_states())?;
    if m == 0 {
        return Err(SquidError::ParamDomain("harmonic m must be >= 1".into()));
    }
    let de = basis.energies[b] - basis.energies[a];
    if de <= 0.0 {
        return Err(SquidError::Numerical("non-positive level splitting".into()));
    }
    Ok(m as f64 * 2.0 * std::f64::consts::PI * basis.scaled.time_unit / de)
}

/// Resonant free spacing between pulses of duration `t_d`, seconds:
///
/// ```text
/// t_s = (m h - (E'_b - E'_a) t_d) / (E_b - E_a)
/// ```
///
/// The pair phase advances at the unperturbed splitting during the free
/// interval but at the suppressed-basis splitting `E'_b - E'_a` (from
/// `basis1`) during the pulse, so the finite pulse duration shortens the
/// spacing below the bare period `m h / (E_b - E_a)`.
pub fn resonance_spacing(
    basis0: &EigenSystem,
    basis1: &EigenSystem,
    pair: (usize, usize),
    m: usize,
    t_d: f64,
) -> Result<f64> {
    let (a, b) = check_pair(pair, basis0.n_states().min(basis1.n_states()))?;
    if !(t_d >= 0.0) {
        return Err(SquidError::ParamDomain(format!("t_d = {t_d} must be >= 0")));
    }
    if basis1.eps <= 0.0 {
        return Err(SquidError::Basis("basis1 must be a suppressed (eps > 0) basis".into()));
    }
    if !grids_match(basis0, basis1) || basis0.eps != 0.0 {
        return Err(SquidError::Basis(
            "resonance spacing needs matching eps = 0 and eps > 0 bases".into(),
        ));
    }
    let period = resonance_period(basis0, (a, b), m)?;
    let de = basis0.energies[b] - basis0.energies[a];
    let de_p = basis1.energies[b] - basis1.energies[a];
    let t_s = period - t_d * de_p / de;
    if t_s <= 0.0 {
        return Err(SquidError::ParamDomain(format!(
            "pulse duration {t_d:e} s exceeds the m = {m} resonance period {period:e} s"
        )));
    }
    Ok(t_s)
}

/// One sampled spacing of a resonance scan.
#[derive(Debug, Clone, Copy)]
pub struct ScanPoint {
    /// Free spacing, seconds.
    pub t_s: f64,
    /// Peak occupation of level 2, the upper partner of the even pair (0, 2).
    pub peak_upper_even: f64,
    /// Peak occupation of level 3, the upper partner of the odd pair (1, 3).
    pub peak_upper_odd: f64,
    /// Right-well probability after the last pulse.
    pub final_p_right: f64,
}

/// Sweep the free spacing over `[t_s_min, t_s_max]` in steps of `t_s_step`
/// and record, for each spacing, the peak upper-doublet occupations and the
/// final right-well probability of an `n_pulses` train. Spacings run in
/// parallel; the output order is deterministic (ascending `t_s`).
#[allow(clippy::too_many_arguments)]
pub fn resonance_scan(
    initial: &StateVector,
    basis1: &Arc<EigenSystem>,
    t_d: f64,
    t_s_min: f64,
    t_s_max: f64,
    t_s_step: f64,
    n_pulses: usize,
    sample_dt: f64,
) -> Result<Vec<ScanPoint>> {
    if !(t_s_step > 0.0) || !(t_s_min >= 0.0) || t_s_max < t_s_min {
        return Err(SquidError::ParamDomain(format!(
            "bad scan range [{t_s_min:e}, {t_s_max:e}] step {t_s_step:e}"
        )));
    }
    if n_pulses == 0 {
        return Err(SquidError::ParamDomain("scan needs at least one pulse".into()));
    }
    if initial.basis.n_states() < 4 {
        return Err(SquidError::Basis("scan needs at least 4 levels".into()));
    }
    let n_steps = ((t_s_max - t_s_min) / t_s_step + 1e-9).floor() as usize + 1;
    (0..n_steps)
        .into_par_iter()
        .map(|k| {
            let t_s = t_s_min + k as f64 * t_s_step;
            let train = PulseTrain::new(t_d, t_s, n_pulses, basis1.eps)?;
            let res = run_pulse_train(initial, &train, basis1, sample_dt, 0.0)?;
            let traj = &res.trajectory;
            Ok(ScanPoint {
                t_s,
                peak_upper_even: traj.peak_occupation(2),
                peak_upper_odd: traj.peak_occupation(3),
                final_p_right: *traj.p_right.last().unwrap(),
            })
        })
        .collect()
}

/// `t_s_ps, peak_occ_03, peak_occ_04, final_p_right` CSV (levels labelled
/// 1-based as in the trajectory CSV).
pub fn write_scan_csv<W: Write>(points: &[ScanPoint], w: &mut W) -> Result<()> {
    writeln!(w, "t_s_ps,peak_occ_03,peak_occ_04,final_p_right")?;
    for p in points {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            p.t_s * 1e12,
            p.peak_upper_even,
            p.peak_upper_odd,
            p.final_p_right
        )?;
    }
    Ok(())
}

/// Estimated azimuthal phase advance when the qubit doublet spends
/// `t_excited` seconds excited and `t_ground` seconds in the ground doublet:
/// `theta = (omega_4 - omega_3) t_excited / 2 + (omega_2 - omega_1) t_ground / 2`
/// (levels labelled 1-based, i.e. the splittings of the upper and ground
/// doublets). Radians.
pub fn phase_advance(basis: &EigenSystem, t_excited: f64, t_ground: f64) -> Result<f64> {
    if basis.n_states() < 4 {
        return Err(SquidError::Basis("phase advance needs at least 4 levels".into()));
    }
    if !(t_excited >= 0.0) || !(t_ground >= 0.0) {
        return Err(SquidError::ParamDomain("negative doublet dwell time".into()));
    }
    let tu = basis.scaled.time_unit;
    let w43 = (basis.energies[3] - basis.energies[2]) / tu;
    let w21 = (basis.energies[1] - basis.energies[0]) / tu;
    Ok(0.5 * w43 * t_excited + 0.5 * w21 * t_ground)
}

/// A designed tipping schedule: a resonant pulse train truncated at a
/// low-leakage stopping point, plus a trailing free hold that finishes the
/// rotation at the slow ground-doublet precession rate.
#[derive(Debug, Clone)]
pub struct Schedule {
    /// The pulse train to run (its `n_pulses` is the designed count).
    pub train: PulseTrain,
    /// Free evolution after the final pulse, seconds.
    pub hold: f64,
    /// Requested azimuthal rotation, radians.
    pub target_theta: f64,
    /// Unwrapped phase already accumulated when pulsing stops.
    pub theta_at_stop: f64,
    /// Occupancy-weighted Eq.-10-style estimate of `theta_at_stop`.
    pub predicted_theta: f64,
    /// Time of the chosen stopping sample within the trial run, seconds.
    pub stop_time: f64,
    /// Ground-doublet leakage at the stopping sample.
    pub leak_at_stop: f64,
}

impl Schedule {
    /// Total wall time of the schedule, seconds.
    pub fn total_time(&self) -> f64 {
        self.train.total_time(0.0) + self.hold
    }

    /// Run the designed schedule from `initial`.
    pub fn execute(
        &self,
        initial: &StateVector,
        basis1: &Arc<EigenSystem>,
        sample_dt: f64,
    ) -> Result<TrainResult> {
        run_pulse_train(initial, &self.train, basis1, sample_dt, self.hold)
    }
}

/// Unwrap the azimuthal phase `arg(a_0 conj(a_1))` along a sampled series,
/// relative to the first sample.
fn unwrap_theta(ground_amps: &[(Complex64, Complex64)]) -> Vec<f64> {
    let mut out = Vec::with_capacity(ground_amps.len());
    let mut prev_arg = 0.0f64;
    let mut theta = 0.0f64;
    for (i, (a0, a1)) in ground_amps.iter().enumerate() {
        let arg = (a0 * a1.conj()).arg();
        if i == 0 {
            prev_arg = arg;
        } else {
            let mut d = arg - prev_arg;
            while d > std::f64::consts::PI {
                d -= 2.0 * std::f64::consts::PI;
            }
            while d <= -std::f64::consts::PI {
                d += 2.0 * std::f64::consts::PI;
            }
            theta += d;
            prev_arg = arg;
        }
        out.push(theta);
    }
    out
}

/// Design a tipping schedule that advances the qubit azimuthal phase by
/// `target_theta` radians (`pi` flips the well populations, `pi/2` balances
/// them).
///
/// A trial train of `max_pulses` pulses at the corrected even-pair resonance
/// spacing is simulated; among the inter-pulse samples whose leakage out of
/// the ground doublet is below [`LEAK_MAX`], the designer picks the largest
/// unwrapped phase not exceeding the target and schedules a trailing free
/// hold for the remainder. Targets beyond one extra free-precession turn past
/// what the trial run reaches are rejected with
/// [`SquidError::Design`] carrying the reachable maximum.
pub fn design_schedule(
    initial: &StateVector,
    basis1: &Arc<EigenSystem>,
    t_d: f64,
    target_theta: f64,
    max_pulses: usize,
    sample_dt: f64,
) -> Result<Schedule> {
    if !(target_theta > 0.0) || !target_theta.is_finite() {
        return Err(SquidError::ParamDomain(format!(
            "target theta = {target_theta} must be positive and finite"
        )));
    }
    if max_pulses == 0 {
        return Err(SquidError::ParamDomain("max_pulses must be >= 1".into()));
    }
    let basis0 = &initial.basis;
    if basis0.n_states() < 4 {
        return Err(SquidError::Basis("schedule design needs at least 4 levels".into()));
    }
    let t_s = resonance_spacing(basis0, basis1, (0, 2), 1, t_d)?;
    let train = PulseTrain::new(t_d, t_s, max_pulses, basis1.eps)?;
    let trial = run_pulse_train(initial, &train, basis1, sample_dt, 0.0)?;
    let traj = &trial.trajectory;
    let theta = unwrap_theta(&traj.ground_amps);

    let tu = basis0.scaled.time_unit;
    let w10 = (basis0.energies[1] - basis0.energies[0]) / tu;
    if w10 <= 0.0 {
        return Err(SquidError::Numerical("non-positive qubit splitting".into()));
    }

    let max_reachable = theta.last().copied().unwrap_or(0.0) + 2.0 * std::f64::consts::PI;
    if target_theta > max_reachable {
        return Err(SquidError::Design {
            reason: format!(
                "target {target_theta:.3} rad needs more than {max_pulses} pulses \
                 plus one free-precession turn"
            ),
            max_theta: max_reachable,
        });
    }

    let mut best: Option<usize> = None;
    for i in 0..traj.len() {
        let leak = 1.0 - traj.occupations[i][0] - traj.occupations[i][1];
        let ok = i == 0 || (!traj.in_pulse[i] && leak < LEAK_MAX);
        if ok && theta[i] <= target_theta + 1e-9 {
            if best.is_none_or(|j| theta[i] > theta[j]) {
                best = Some(i);
            }
        }
    }
    let i = best.expect("sample 0 always qualifies");
    let t_stop = traj.times[i];
    let leak_at_stop = 1.0 - traj.occupations[i][0] - traj.occupations[i][1];

    // Pulses completed before the stopping sample.
    let n_used = traj
        .events
        .iter()
        .filter(|e| matches!(e, PulseEvent::End(t) if *t <= t_stop + 1e-9 * sample_dt))
        .count();
    let pulsed_span = n_used as f64 * (t_d + t_s);
    let hold = (t_stop - pulsed_span) + (target_theta - theta[i]) / w10;

    // Occupancy-weighted dwell times for the closed-form phase estimate.
    let t_excited: f64 = traj
        .occupations
        .iter()
        .take(i + 1)
        .map(|o| o[2] + o[3])
        .sum::<f64>()
        * sample_dt;
    let predicted_theta = phase_advance(basis0, t_excited, (t_stop - t_excited).max(0.0))?;

    let mut designed = train;
    designed.n_pulses = n_used;
    Ok(Schedule {
        train: designed,
        hold,
        target_theta,
        theta_at_stop: theta[i],
        predicted_theta,
        stop_time: t_stop,
        leak_at_stop,
    })
}
