//! Device parameters, physical constants, and the rf-SQUID double-well potential.
//!
//! The SQUID is treated as a quantum particle of mass `C` moving in the flux
//! coordinate `phi` with potential
//!
//! ```text
//! U(phi) = (phi - phi_x)^2 / 2L - (1 - eps) Ic phi0/(2 pi) cos(2 pi phi/phi0)
//! ```
//!
//! where `eps` is the fractional suppression of the junction critical current
//! applied while an SFQ pulse is coupled to the junction.
//!
//! All heavy numerics run in a dimensionless system: flux in units of `phi0`,
//! energy in units of `phi0^2/(4 pi^2 L)`, time in units of `hbar/energy_unit`.

use crate::error::{Result, SquidError};
use std::f64::consts::PI;

/// Fundamental constants used throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    /// Reduced Planck constant, J s.
    pub hbar: f64,
    /// Planck constant, J s. Always exactly `2 pi hbar`.
    pub h: f64,
    /// Magnetic flux quantum h/2e, Wb.
    pub phi0: f64,
}

impl Default for Constants {
    fn default() -> Self {
        let hbar = 1.054572e-34;
        Constants {
            hbar,
            h: 2.0 * PI * hbar,
            phi0: 2.067834e-15,
        }
    }
}

/// Physical rf-SQUID device parameters, SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquidParams {
    /// Loop inductance, H.
    pub l: f64,
    /// Junction capacitance, F.
    pub c: f64,
    /// Unperturbed junction critical current, A.
    pub ic: f64,
    /// External flux bias, Wb.
    pub phi_x: f64,
}

impl SquidParams {
    pub fn new(l: f64, c: f64, ic: f64, phi_x: f64) -> Self {
        SquidParams { l, c, ic, phi_x }
    }

    /// Parameters of the device in the reference simulation:
    /// L = 97 pH, C = 50 fF, Ic = 4 uA, biased at half a flux quantum.
    pub fn reference(consts: &Constants) -> Self {
        SquidParams {
            l: 97e-12,
            c: 50e-15,
            ic: 4e-6,
            phi_x: consts.phi0 / 2.0,
        }
    }

    /// Check positivity and the double-well condition `beta_L > 1`.
    pub fn validate(&self, consts: &Constants) -> Result<()> {
        for (name, v) in [("L", self.l), ("C", self.c), ("Ic", self.ic)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SquidError::ParamDomain(format!(
                    "{name} must be strictly positive and finite, got {v:e}"
                )));
            }
        }
        if !self.phi_x.is_finite() {
            return Err(SquidError::ParamDomain("phi_x must be finite".into()));
        }
        let b = beta_l(self, consts);
        if b <= 1.0 {
            return Err(SquidError::ParamDomain(format!(
                "beta_L = {b:.6} <= 1: potential has no double well"
            )));
        }
        Ok(())
    }
}

/// Dimensionless screening parameter `2 pi L Ic / phi0`.
pub fn beta_l(params: &SquidParams, consts: &Constants) -> f64 {
    2.0 * PI * params.l * params.ic / consts.phi0
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..0.5).contains(&eps) {
        return Err(SquidError::ParamDomain(format!(
            "suppression fraction eps must lie in [0, 0.5), got {eps}"
        )));
    }
    Ok(())
}

/// Double-well potential energy in joule at flux `phi` (Wb) with the critical
/// current suppressed by the fraction `eps`.
pub fn potential(params: &SquidParams, consts: &Constants, eps: f64, phi: f64) -> Result<f64> {
    params.validate(consts)?;
    check_eps(eps)?;
    let d = phi - params.phi_x;
    let josephson = (1.0 - eps) * params.ic * consts.phi0 / (2.0 * PI);
    Ok(d * d / (2.0 * params.l) - josephson * (2.0 * PI * phi / consts.phi0).cos())
}

/// Dimensionless form of the problem plus the units needed to restore SI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledParams {
    /// Coefficient of `-d^2/dx^2` in the scaled Hamiltonian,
    /// `hbar^2 / (2 C phi0^2 E0)`.
    pub kinetic: f64,
    /// Screening parameter `2 pi L Ic / phi0`; also the scaled amplitude of the
    /// cosine term.
    pub beta_l: f64,
    /// Flux bias in units of phi0.
    pub f_x: f64,
    /// Energy unit `phi0^2 / (4 pi^2 L)`, J.
    pub energy_unit: f64,
    /// Time unit `hbar / energy_unit`, s.
    pub time_unit: f64,
}

impl ScaledParams {
    /// Scaled potential at flux `x` (units of phi0):
    /// `2 pi^2 (x - f_x)^2 - (1 - eps) beta_L cos(2 pi x)`.
    pub fn potential(&self, eps: f64, x: f64) -> f64 {
        let d = x - self.f_x;
        2.0 * PI * PI * d * d - (1.0 - eps) * self.beta_l * (2.0 * PI * x).cos()
    }

    /// Second derivative of the scaled potential with respect to `x`.
    pub fn potential_dd(&self, eps: f64, x: f64) -> f64 {
        4.0 * PI * PI * (1.0 + (1.0 - eps) * self.beta_l * (2.0 * PI * x).cos())
    }

    /// Reconstruct the SI device parameters.
    pub fn to_squid_params(&self, consts: &Constants) -> SquidParams {
        let l = consts.phi0 * consts.phi0 / (4.0 * PI * PI * self.energy_unit);
        let ic = self.beta_l * consts.phi0 / (2.0 * PI * l);
        let c = consts.hbar * consts.hbar
            / (2.0 * self.kinetic * consts.phi0 * consts.phi0 * self.energy_unit);
        SquidParams {
            l,
            c,
            ic,
            phi_x: self.f_x * consts.phi0,
        }
    }
}

/// Cast the SI parameters into the dimensionless system.
pub fn nondimensionalize(params: &SquidParams, consts: &Constants) -> Result<ScaledParams> {
    params.validate(consts)?;
    let energy_unit = consts.phi0 * consts.phi0 / (4.0 * PI * PI * params.l);
    let kinetic =
        consts.hbar * consts.hbar / (2.0 * params.c * consts.phi0 * consts.phi0 * energy_unit);
    Ok(ScaledParams {
        kinetic,
        beta_l: beta_l(params, consts),
        f_x: params.phi_x / consts.phi0,
        energy_unit,
        time_unit: consts.hbar / energy_unit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const PHI0: f64 = 2.067834e-15;

    fn consts() -> Constants {
        Constants::default()
    }

    #[test]
    fn planck_constants_consistent() {
        let c = consts();
        assert_eq!(c.h, 2.0 * PI * c.hbar);
        assert!(c.phi0 > 0.0);
    }

    #[test]
    fn potential_at_barrier_top() {
        // At phi = phi0/2 the quadratic term vanishes and cos(pi) = -1, so the
        // value is exactly +Ic phi0 / 2 pi.
        let c = consts();
        let p = SquidParams::reference(&c);
        let u = potential(&p, &c, 0.0, c.phi0 / 2.0).unwrap();
        let expected = p.ic * c.phi0 / (2.0 * PI);
        assert!((u - expected).abs() <= 1e-12 * expected.abs());
    }

    #[test]
    fn potential_symmetric_about_half_flux() {
        let c = consts();
        let p = SquidParams::reference(&c);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let delta: f64 = rng.gen_range(-0.6e-15..0.6e-15);
            let eps = rng.gen_range(0.0..0.49);
            let up = potential(&p, &c, eps, c.phi0 / 2.0 + delta).unwrap();
            let um = potential(&p, &c, eps, c.phi0 / 2.0 - delta).unwrap();
            assert!(
                (up - um).abs() <= 1e-12 * up.abs().max(um.abs()).max(1e-30),
                "asymmetry at delta={delta:e} eps={eps}"
            );
        }
    }

    /// Brute-force oracle: locate a local minimum of the potential by dense
    /// scan followed by golden-section refinement.
    fn golden_min(
        p: &SquidParams,
        c: &Constants,
        eps: f64,
        mut a: f64,
        mut b: f64,
    ) -> (f64, f64) {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let f = |x: f64| potential(p, c, eps, x).unwrap();
        while (b - a).abs() > 1e-10 * PHI0 {
            let x1 = b - g * (b - a);
            let x2 = a + g * (b - a);
            if f(x1) < f(x2) {
                b = x2;
            } else {
                a = x1;
            }
        }
        let x = 0.5 * (a + b);
        (x, f(x))
    }

    #[test]
    fn minima_and_barrier_height_match_scan_oracle() {
        let c = consts();
        let p = SquidParams::reference(&c);
        // Dense scan to bracket the two minima.
        let n = 20_000;
        let mut us = Vec::with_capacity(n);
        for i in 0..n {
            let x = (-0.1 + 1.2 * i as f64 / (n - 1) as f64) * c.phi0;
            us.push((x, potential(&p, &c, 0.0, x).unwrap()));
        }
        let mut minima = Vec::new();
        for i in 1..n - 1 {
            if us[i].1 < us[i - 1].1 && us[i].1 < us[i + 1].1 {
                minima.push(i);
            }
        }
        assert_eq!(minima.len(), 2, "expected exactly two local minima");
        let (x_l, u_l) = golden_min(&p, &c, 0.0, us[minima[0] - 1].0, us[minima[0] + 1].0);
        let (x_r, u_r) = golden_min(&p, &c, 0.0, us[minima[1] - 1].0, us[minima[1] + 1].0);
        assert!(x_l < c.phi0 / 2.0 && c.phi0 / 2.0 < x_r);
        // Symmetric bias: minima mirror each other.
        assert!((x_l + x_r - c.phi0).abs() < 1e-6 * c.phi0);
        assert!((u_l - u_r).abs() < 1e-9 * u_l.abs());
        let barrier = potential(&p, &c, 0.0, c.phi0 / 2.0).unwrap() - u_r;
        assert!(barrier > 0.0, "double well must have positive barrier");
        // Barrier height shrinks strictly with eps.
        let mut prev = barrier;
        for eps in [0.005, 0.01, 0.02, 0.1] {
            let (_, u_min) = golden_min(&p, &c, eps, x_r - 0.05 * c.phi0, x_r + 0.05 * c.phi0);
            let bh = potential(&p, &c, eps, c.phi0 / 2.0).unwrap() - u_min;
            assert!(bh < prev, "barrier not monotone at eps={eps}");
            prev = bh;
        }
    }

    #[test]
    fn double_well_has_two_minima_one_maximum() {
        let c = consts();
        let p = SquidParams::reference(&c);
        for eps in [0.0, 0.01, 0.02] {
            let n = 40_000;
            let mut n_min = 0;
            let mut n_max = 0;
            let f = |i: usize| {
                let x = (i as f64 / (n - 1) as f64) * c.phi0;
                potential(&p, &c, eps, x).unwrap()
            };
            // Track the last nonzero slope sign: the symmetric straddle of an
            // extremum can give an exactly zero finite difference.
            let mut prev_sign = (f(1) - f(0)).signum();
            for i in 1..n - 1 {
                let d = f(i + 1) - f(i);
                if d == 0.0 {
                    continue;
                }
                if prev_sign < 0.0 && d > 0.0 {
                    n_min += 1;
                }
                if prev_sign > 0.0 && d < 0.0 {
                    n_max += 1;
                }
                prev_sign = d.signum();
            }
            assert_eq!((n_min, n_max), (2, 1), "eps = {eps}");
        }
    }

    #[test]
    fn beta_l_reference_value() {
        // Direct arithmetic oracle: 2 pi * 97e-12 * 4e-6 / 2.067834e-15.
        let c = consts();
        let p = SquidParams::reference(&c);
        let oracle = 2.0 * PI * 97e-12 * 4e-6 / PHI0;
        let b = beta_l(&p, &c);
        assert!((b - oracle).abs() < 1e-14 * oracle);
        assert!((b - 1.179).abs() / 1.179 < 0.01, "beta_L = {b}");
    }

    #[test]
    fn beta_l_scaling() {
        let c = consts();
        let mut p = SquidParams::reference(&c);
        let b1 = beta_l(&p, &c);
        p.ic *= 2.0;
        assert!((beta_l(&p, &c) - 2.0 * b1).abs() < 1e-12 * b1);
        p.ic = 0.0;
        p.l = 0.0;
        assert_eq!(beta_l(&p, &c), 0.0);
    }

    #[test]
    fn nondimensionalize_round_trips() {
        let c = consts();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let p = SquidParams {
                l: rng.gen_range(50e-12..400e-12),
                c: rng.gen_range(10e-15..200e-15),
                ic: rng.gen_range(3e-6..20e-6),
                phi_x: rng.gen_range(0.3..0.7) * c.phi0,
            };
            if p.validate(&c).is_err() {
                continue;
            }
            let s = nondimensionalize(&p, &c).unwrap();
            let back = s.to_squid_params(&c);
            for (a, b) in [(p.l, back.l), (p.c, back.c), (p.ic, back.ic), (p.phi_x, back.phi_x)] {
                assert!((a - b).abs() <= 1e-12 * a.abs());
            }
        }
    }

    #[test]
    fn scaled_reference_values() {
        let c = consts();
        let p = SquidParams::reference(&c);
        let s = nondimensionalize(&p, &c).unwrap();
        assert!((s.beta_l - 1.179).abs() / 1.179 < 0.01);
        assert!((s.f_x - 0.5).abs() < 1e-15);
        // Scaled potential agrees with the SI potential after unit conversion.
        for (eps, x) in [(0.0, 0.37), (0.01, 0.55), (0.2, 0.81)] {
            let si = potential(&p, &c, eps, x * c.phi0).unwrap();
            let scaled = s.potential(eps, x) * s.energy_unit;
            assert!((si - scaled).abs() < 1e-12 * si.abs());
        }
    }

    #[test]
    fn invalid_params_rejected() {
        let c = consts();
        let mut p = SquidParams::reference(&c);
        p.l = -1e-12;
        assert!(p.validate(&c).is_err());
        assert!(potential(&p, &c, 0.0, 0.0).is_err());
        let p2 = SquidParams::reference(&c);
        assert!(potential(&p2, &c, 0.7, 0.0).is_err());
        // beta_L <= 1 is not a double well.
        let weak = SquidParams { ic: 0.1e-6, ..p2 };
        assert!(weak.validate(&c).is_err());
    }
}
