//! Method-of-lines integrator in physical variables `(t, r)`.
//!
//! Fourth-order central differences on a uniform radial grid, even
//! reflection at `r = 0` (where `Δu = 3u_rr`), RK4 in time. The active grid
//! shrinks with the inward characteristic from the initial data radius, so
//! every updated node stays inside the domain of dependence of the data;
//! derivatives at the last active nodes use cubic extrapolation.

use serde::{Deserialize, Serialize};

use super::EvolveError;
use crate::expr::{PerturbationExpr, Point};
use crate::profile::RadialData;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalOptions {
    /// Radial spacing.
    pub h: f64,
    /// `dt / h`.
    pub cfl: f64,
}

impl Default for PhysicalOptions {
    fn default() -> Self {
        Self { h: 1e-3, cfl: 0.5 }
    }
}

/// Solution at a fixed time on the uniform nodes `r_j = j h` that remain in
/// the domain of dependence.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformSection {
    pub t: f64,
    pub h: f64,
    pub u: Vec<C64>,
    pub ut: Vec<C64>,
}

impl UniformSection {
    pub fn max_radius(&self) -> f64 {
        (self.u.len() - 1) as f64 * self.h
    }

    /// Four-point Lagrange interpolation of `(u, ∂_t u)` at `r`.
    pub fn interpolate(&self, r: f64) -> Option<(C64, C64)> {
        let n = self.u.len();
        if n < 4 || r < 0.0 || r > self.max_radius() {
            return None;
        }
        let x = r / self.h;
        let j0 = (x.floor() as usize).saturating_sub(1).min(n - 4);
        let mut out = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for i in 0..4 {
            let mut l = 1.0;
            for m in 0..4 {
                if m != i {
                    l *= (x - (j0 + m) as f64) / (i as f64 - m as f64);
                }
            }
            out.0 += l * self.u[j0 + i];
            out.1 += l * self.ut[j0 + i];
        }
        Some(out)
    }
}

struct Solver<'a> {
    p: f64,
    perturbation: &'a PerturbationExpr,
    h: f64,
}

impl Solver<'_> {
    fn at(u: &[C64], j: isize, last: usize) -> C64 {
        let last = last as isize;
        if j < 0 {
            u[(-j) as usize]
        } else if j <= last {
            u[j as usize]
        } else {
            let l = last as usize;
            let e1 = 4.0 * u[l] - 6.0 * u[l - 1] + 4.0 * u[l - 2] - u[l - 3];
            if j == last + 1 {
                e1
            } else {
                4.0 * e1 - 6.0 * u[l] + 4.0 * u[l - 1] - u[l - 2]
            }
        }
    }

    fn rhs(&self, t: f64, u: &[C64], ut: &[C64], last: usize, du: &mut [C64], dut: &mut [C64]) -> Result<(), EvolveError> {
        let h = self.h;
        for j in 0..=last {
            let ji = j as isize;
            let um2 = Self::at(u, ji - 2, last);
            let um1 = Self::at(u, ji - 1, last);
            let up1 = Self::at(u, ji + 1, last);
            let up2 = Self::at(u, ji + 2, last);
            let urr = (-up2 + 16.0 * up1 - 30.0 * u[j] + 16.0 * um1 - um2) / (12.0 * h * h);
            let ur = (-up2 + 8.0 * up1 - 8.0 * um1 + um2) / (12.0 * h);
            let r = j as f64 * h;
            let lap = if j == 0 { 3.0 * urr } else { urr + 2.0 / r * ur };
            let f = if self.perturbation.is_zero() {
                C64::new(0.0, 0.0)
            } else {
                self.perturbation
                    .evaluate(&Point::new(t, r, u[j], ut[j], if j == 0 { C64::new(0.0, 0.0) } else { ur }))
                    .map_err(|source| EvolveError::Perturbation { tau: t, rho: r, source })?
            };
            du[j] = ut[j];
            dut[j] = lap - f + u[j] * u[j].norm_sqr().powf(0.5 * (self.p - 1.0));
        }
        Ok(())
    }
}

/// Integrates from `t0` (data `data`) to `t_end`.
pub fn physical_evolve(
    data: &dyn RadialData,
    p: f64,
    perturbation: &PerturbationExpr,
    t0: f64,
    t_end: f64,
    opts: &PhysicalOptions,
) -> Result<UniformSection, EvolveError> {
    if !(opts.h > 0.0 && opts.cfl > 0.0 && opts.cfl <= 1.0) {
        return Err(EvolveError::InvalidParameter(format!(
            "need h > 0 and 0 < cfl <= 1, got h = {}, cfl = {}",
            opts.h, opts.cfl
        )));
    }
    if !(t_end >= t0) {
        return Err(EvolveError::InvalidParameter("t_end precedes t0".into()));
    }
    let radius = data.radius();
    let h = opts.h;
    let active = |t: f64| ((radius - (t - t0)) / h + 1e-9).floor();
    if active(t_end) < 8.0 {
        return Err(EvolveError::InvalidParameter(format!(
            "data radius {radius} leaves fewer than 8 nodes in the domain of dependence at t = {t_end}"
        )));
    }
    let n = active(t0) as usize + 1;
    let mut u = Vec::with_capacity(n);
    let mut ut = Vec::with_capacity(n);
    for j in 0..n {
        let (f, g) = data.value(j as f64 * h);
        u.push(f);
        ut.push(g);
    }
    let solver = Solver { p, perturbation, h };
    let steps = ((t_end - t0) / (opts.cfl * h)).ceil() as usize;
    let dt = if steps == 0 { 0.0 } else { (t_end - t0) / steps as f64 };
    let zero = C64::new(0.0, 0.0);
    let mut k = [vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]];
    let mut su = u.clone();
    let mut sut = ut.clone();
    for i in 0..steps {
        let t = t0 + i as f64 * dt;
        let last = active(t + dt) as usize;
        let [k1u, k1v, k2u, k2v, k3u, k3v, k4u, k4v] = &mut k;
        solver.rhs(t, &u, &ut, last, k1u, k1v)?;
        for j in 0..=last {
            su[j] = u[j] + 0.5 * dt * k1u[j];
            sut[j] = ut[j] + 0.5 * dt * k1v[j];
        }
        solver.rhs(t + 0.5 * dt, &su, &sut, last, k2u, k2v)?;
        for j in 0..=last {
            su[j] = u[j] + 0.5 * dt * k2u[j];
            sut[j] = ut[j] + 0.5 * dt * k2v[j];
        }
        solver.rhs(t + 0.5 * dt, &su, &sut, last, k3u, k3v)?;
        for j in 0..=last {
            su[j] = u[j] + dt * k3u[j];
            sut[j] = ut[j] + dt * k3v[j];
        }
        solver.rhs(t + dt, &su, &sut, last, k4u, k4v)?;
        for j in 0..=last {
            u[j] += dt / 6.0 * (k1u[j] + 2.0 * k2u[j] + 2.0 * k3u[j] + k4u[j]);
            ut[j] += dt / 6.0 * (k1v[j] + 2.0 * k2v[j] + 2.0 * k3v[j] + k4v[j]);
        }
        if !u[..=last].iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(EvolveError::Unstable {
                tau: t + dt,
                detail: "non-finite value in physical solution".into(),
            });
        }
    }
    let last = active(t_end) as usize;
    u.truncate(last + 1);
    ut.truncate(last + 1);
    Ok(UniformSection { t: t_end, h, u, ut })
}
