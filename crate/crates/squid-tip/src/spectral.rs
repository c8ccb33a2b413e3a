//! Finite-difference discretization of the SQUID Hamiltonian on a flux grid
//! and the low-lying eigensystem with parity labels.

use crate::error::{Result, SquidError};
use crate::model::ScaledParams;
use crate::tridiag;
use std::io::Write;

/// Uniform flux grid, in units of phi0, with hard-wall boundaries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub phi_min: f64,
    pub phi_max: f64,
    pub n_points: usize,
}

impl GridSpec {
    pub const DEFAULT_MIN: f64 = -0.1;
    pub const DEFAULT_MAX: f64 = 1.1;
    pub const DEFAULT_POINTS: usize = 16384;

    pub fn new(phi_min: f64, phi_max: f64, n_points: usize) -> Result<Self> {
        let g = GridSpec { phi_min, phi_max, n_points };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points < 257 {
            return Err(SquidError::Discretization(format!(
                "n_points = {} < 257",
                self.n_points
            )));
        }
        if !(self.phi_min < 0.5 && 0.5 < self.phi_max) {
            return Err(SquidError::Discretization(format!(
                "grid [{}, {}] must straddle phi = phi0/2",
                self.phi_min, self.phi_max
            )));
        }
        Ok(())
    }

    /// Grid spacing in units of phi0.
    pub fn spacing(&self) -> f64 {
        (self.phi_max - self.phi_min) / (self.n_points as f64 - 1.0)
    }

    pub fn point(&self, i: usize) -> f64 {
        self.phi_min + i as f64 * self.spacing()
    }

    /// Index of the grid point nearest `x` (units of phi0).
    pub fn nearest(&self, x: f64) -> usize {
        let i = ((x - self.phi_min) / self.spacing()).round() as isize;
        i.clamp(0, self.n_points as isize - 1) as usize
    }

    /// True when the grid is mirror-symmetric about phi = phi0/2, so that the
    /// reflection of point `i` is exactly point `n-1-i`.
    pub fn symmetric_about_half(&self) -> bool {
        (self.phi_min + self.phi_max - 1.0).abs() < 1e-12
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            phi_min: Self::DEFAULT_MIN,
            phi_max: Self::DEFAULT_MAX,
            n_points: Self::DEFAULT_POINTS,
        }
    }
}

/// Real symmetric tridiagonal discretization of a 1D Hamiltonian.
#[derive(Debug, Clone)]
pub struct TridiagonalOperator {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
    pub grid: GridSpec,
    pub eps: f64,
    pub scaled: ScaledParams,
}

/// Second-order central-difference Hamiltonian for the scaled SQUID potential
/// with the critical current suppressed by `eps`. Dirichlet boundaries.
pub fn discretize(scaled: &ScaledParams, eps: f64, grid: &GridSpec) -> Result<TridiagonalOperator> {
    if !(0.0..0.5).contains(&eps) {
        return Err(SquidError::ParamDomain(format!("eps = {eps} outside [0, 0.5)")));
    }
    let op = discretize_fn(grid, scaled.kinetic, *scaled, eps, |x| scaled.potential(eps, x))?;
    // Both wells must sit strictly inside the box, away from the walls.
    let lowest = op
        .diag
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let margin = grid.n_points / 64;
    if lowest < margin || lowest + margin >= grid.n_points {
        return Err(SquidError::Discretization(
            "potential minimum too close to the grid boundary".into(),
        ));
    }
    Ok(op)
}

/// Discretize an arbitrary potential on the grid; used directly by the
/// analytic-oracle tests (harmonic potential, etc.).
pub fn discretize_fn<F: Fn(f64) -> f64>(
    grid: &GridSpec,
    kinetic: f64,
    scaled: ScaledParams,
    eps: f64,
    potential: F,
) -> Result<TridiagonalOperator> {
    grid.validate()?;
    let n = grid.n_points;
    let dx = grid.spacing();
    let k = kinetic / (dx * dx);
    let diag: Vec<f64> = (0..n).map(|i| 2.0 * k + potential(grid.point(i))).collect();
    let off = vec![-k; n - 1];
    Ok(TridiagonalOperator { diag, off, grid: *grid, eps, scaled })
}

/// Parity of an eigenfunction about phi = phi0/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl std::fmt::Display for Parity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Parity::Even => write!(f, "even"),
            Parity::Odd => write!(f, "odd"),
        }
    }
}

/// Low-lying eigenpairs of one potential: ascending scaled energies,
/// grid-sampled real wavefunctions normalized so that `sum psi^2 dx = 1`,
/// and (once classified) per-state parities.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    /// Eigenenergies in scaled units, strictly ascending.
    pub energies: Vec<f64>,
    /// `states[k][i]` = value of eigenfunction k at grid point i.
    pub states: Vec<Vec<f64>>,
    /// Parity labels, present after `classify_parity`.
    pub parities: Option<Vec<Parity>>,
    /// Suppression fraction this system belongs to.
    pub eps: f64,
    pub grid: GridSpec,
    pub scaled: ScaledParams,
}

impl EigenSystem {
    pub fn n_states(&self) -> usize {
        self.energies.len()
    }

    /// Eigenenergy in joule.
    pub fn energy_joule(&self, k: usize) -> f64 {
        self.energies[k] * self.scaled.energy_unit
    }

    /// Eigenenergy expressed as a frequency E/h in Hz.
    pub fn energy_over_h_hz(&self, k: usize) -> f64 {
        let h = 2.0 * std::f64::consts::PI; // scaled hbar = 1
        self.energies[k] / h / self.scaled.time_unit
    }

    /// Transition frequency (E_b - E_a)/h in Hz for 0-based level indices.
    pub fn transition_hz(&self, a: usize, b: usize) -> f64 {
        self.energy_over_h_hz(b) - self.energy_over_h_hz(a)
    }

    /// Grid inner product of two states.
    pub fn inner(&self, a: usize, b: usize) -> f64 {
        let dx = self.grid.spacing();
        self.states[a]
            .iter()
            .zip(&self.states[b])
            .map(|(x, y)| x * y)
            .sum::<f64>()
            * dx
    }

    pub fn parities(&self) -> Result<&[Parity]> {
        self.parities
            .as_deref()
            .ok_or_else(|| SquidError::Parity("parities not classified yet".into()))
    }
}

/// Lowest `n_states` eigenpairs of the discretized Hamiltonian.
///
/// Eigenvectors are L2-normalized on the grid with a deterministic sign
/// convention: psi is scaled so its value at the grid point nearest
/// phi = phi0/2 + 0.05 phi0 is non-negative (falling back to the first point
/// where |psi| exceeds 1e-6 of its max when that value is negligible).
pub fn eigensolve(op: &TridiagonalOperator, n_states: usize) -> Result<EigenSystem> {
    if n_states == 0 || n_states > 16 {
        return Err(SquidError::ParamDomain(format!(
            "n_states = {n_states} outside 1..=16"
        )));
    }
    let (values, mut vectors) = tridiag::lowest_eigenpairs(&op.diag, &op.off, n_states)?;
    for w in values.windows(2) {
        if !(w[1] > w[0]) {
            return Err(SquidError::Numerical(format!(
                "degenerate or disordered eigenvalues: {} vs {}",
                w[0], w[1]
            )));
        }
    }
    let dx = op.grid.spacing();
    let anchor = op.grid.nearest(0.55);
    for v in vectors.iter_mut() {
        let nrm = (v.iter().map(|x| x * x).sum::<f64>() * dx).sqrt();
        let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mut s = v[anchor];
        if s.abs() < 1e-12 * max {
            s = *v
                .iter()
                .find(|x| x.abs() > 1e-6 * max)
                .expect("eigenvector has no significant entry");
        }
        let sign = if s < 0.0 { -1.0 } else { 1.0 };
        v.iter_mut().for_each(|x| *x *= sign / nrm);
    }
    Ok(EigenSystem {
        energies: values,
        states: vectors,
        parities: None,
        eps: op.eps,
        grid: op.grid,
        scaled: op.scaled,
    })
}

/// Assign even/odd labels about phi = phi0/2 and purify the states.
///
/// In a mirror-symmetric 1D potential the eigenstates strictly alternate
/// parity with increasing energy (node counting), so level `k` is even for
/// even `k` and odd otherwise. The solver's raw vectors can be arbitrary
/// mixtures inside a doublet that is degenerate to round-off; each state is
/// therefore projected onto its forced parity. The assignment is verified
/// through a rotation-invariant check on every doublet subspace: the two
/// members must carry exactly one unit of even content between them.
pub fn classify_parity(mut es: EigenSystem) -> Result<EigenSystem> {
    if (es.scaled.f_x - 0.5).abs() > 1e-12 {
        return Err(SquidError::Parity(format!(
            "bias f_x = {} is not phi0/2; parity undefined",
            es.scaled.f_x
        )));
    }
    if !es.grid.symmetric_about_half() {
        return Err(SquidError::Parity(
            "grid is not mirror-symmetric about phi0/2".into(),
        ));
    }
    let n = es.grid.n_points;
    let dx = es.grid.spacing();
    // Fraction of each state's norm in its even component.
    let even_fraction: Vec<f64> = es
        .states
        .iter()
        .map(|psi| {
            let mut even = 0.0;
            let mut nrm = 0.0;
            for i in 0..n {
                let e = 0.5 * (psi[i] + psi[n - 1 - i]);
                even += e * e;
                nrm += psi[i] * psi[i];
            }
            even / nrm
        })
        .collect();
    let n_states = es.n_states();
    for k in (0..n_states).step_by(2) {
        if k + 1 < n_states {
            let total_even = even_fraction[k] + even_fraction[k + 1];
            if (total_even - 1.0).abs() >= 1e-6 {
                return Err(SquidError::Parity(format!(
                    "doublet ({k}, {}) carries even content {total_even:.8}; \
                     parity structure inconsistent",
                    k + 1
                )));
            }
        } else if 1.0 - even_fraction[k] >= 1e-6 {
            return Err(SquidError::Parity(format!(
                "state {k} has odd contamination {:.3e}; parity ambiguous",
                1.0 - even_fraction[k]
            )));
        }
    }
    let mut parities = Vec::with_capacity(n_states);
    let anchor = es.grid.nearest(0.55);
    for (k, psi) in es.states.iter_mut().enumerate() {
        let parity = if k % 2 == 0 { Parity::Even } else { Parity::Odd };
        let sign = match parity {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        };
        for i in 0..n / 2 {
            let s = 0.5 * (psi[i] + sign * psi[n - 1 - i]);
            psi[i] = s;
            psi[n - 1 - i] = sign * s;
        }
        if n % 2 == 1 && parity == Parity::Odd {
            psi[n / 2] = 0.0;
        }
        let nrm = (psi.iter().map(|x| x * x).sum::<f64>() * dx).sqrt();
        if !(nrm > 0.0) {
            return Err(SquidError::Parity(format!(
                "state {k} vanishes under parity projection"
            )));
        }
        // Re-apply the solver's sign convention; the projection of a heavily
        // mixed doublet member can come out with either overall sign.
        let max = psi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mut s = psi[anchor];
        if s.abs() < 1e-12 * max {
            s = *psi
                .iter()
                .find(|x| x.abs() > 1e-6 * max)
                .expect("eigenvector has no significant entry");
        }
        let flip = if s < 0.0 { -1.0 } else { 1.0 };
        psi.iter_mut().for_each(|x| *x *= flip / nrm);
        parities.push(parity);
    }
    es.parities = Some(parities);
    Ok(es)
}

/// Number of eigenenergies strictly below the central barrier top U(phi0/2).
/// Errors when the potential has no local maximum at the bias point.
pub fn levels_below_barrier(es: &EigenSystem, scaled: &ScaledParams, eps: f64) -> Result<usize> {
    // A barrier exists at x = f_x iff the curvature there is negative.
    if scaled.potential_dd(eps, scaled.f_x) >= 0.0 {
        return Err(SquidError::ParamDomain(
            "potential has no barrier maximum at the bias point".into(),
        ));
    }
    let barrier = scaled.potential(eps, scaled.f_x);
    Ok(es.energies.iter().filter(|&&e| e < barrier).count())
}

/// Spectrum CSV: `index,energy_joule,energy_over_h_hz,parity`.
pub fn write_spectrum_csv<W: Write>(es: &EigenSystem, w: &mut W) -> Result<()> {
    writeln!(w, "index,energy_joule,energy_over_h_hz,parity")?;
    for k in 0..es.n_states() {
        let parity = match &es.parities {
            Some(p) => p[k].to_string(),
            None => "unknown".to_string(),
        };
        writeln!(
            w,
            "{},{:.16e},{:.16e},{}",
            k + 1,
            es.energy_joule(k),
            es.energy_over_h_hz(k),
            parity
        )?;
    }
    Ok(())
}

/// Wavefunction matrix CSV: one row per grid point, first column the flux in
/// units of phi0, then one column per state.
pub fn write_wavefunctions_csv<W: Write>(es: &EigenSystem, w: &mut W) -> Result<()> {
    let mut header = String::from("phi_phi0");
    for k in 0..es.n_states() {
        header.push_str(&format!(",psi_{:02}", k + 1));
    }
    writeln!(w, "{header}")?;
    for i in 0..es.grid.n_points {
        let mut line = format!("{:.16e}", es.grid.point(i));
        for psi in &es.states {
            line.push_str(&format!(",{:.16e}", psi[i]));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}
