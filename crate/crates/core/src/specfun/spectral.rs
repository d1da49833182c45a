use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gamma::{gamma_complex, rgamma};
use super::hyp::{hyp2f1, HypergeometricParams};
use super::{near_nonpositive_integer, SpecialError};
use crate::profile::{c_p, scaling_exponent};
use crate::C64;

/// Which decoupled component of the linearized operator is analysed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Potential {
    /// Phase direction, `μ = c_p`.
    Nu,
    /// Amplitude direction, `μ = p·c_p`.
    Phi,
}

impl Potential {
    pub fn mu(self, p: f64) -> f64 {
        match self {
            Potential::Nu => c_p(p),
            Potential::Phi => p * c_p(p),
        }
    }
}

/// `(a, b; ½)` for the given `(p, μ, λ)`, with `Re a ≤ Re b`.
pub fn reduce_to_hypergeometric(p: f64, mu: f64, lambda: C64) -> HypergeometricParams {
    let ls = lambda + scaling_exponent(p);
    let sum = ls - 0.5;
    let prod = 0.25 * (ls * (ls - 1.0) - mu);
    let disc = (sum * sum - 4.0 * prod).sqrt();
    let (mut a, mut b) = (0.5 * (sum - disc), 0.5 * (sum + disc));
    if a.re > b.re || (a.re == b.re && a.im > b.im) {
        std::mem::swap(&mut a, &mut b);
    }
    HypergeometricParams::new(a, b, C64::new(0.5, 0.0))
}

fn c1_regular(p: f64, mu: f64, lambda: C64) -> Result<C64, SpecialError> {
    let h = reduce_to_hypergeometric(p, mu, lambda);
    let (a, b, c) = (h.a, h.b, h.c);
    let num = gamma_complex(a + b + 1.0 - c)? * gamma_complex(1.0 - c)?;
    Ok(num * rgamma(a + 1.0 - c) * rgamma(b + 1.0 - c))
}

/// `Γ(a+b+½)Γ(½) / (Γ(a+½)Γ(b+½))`, evaluated with reciprocal Γ so that it is
/// an analytic function of `λ` away from the numerator poles.
///
/// Where a numerator pole coincides with a denominator pole the removable
/// singularity is resolved by the symmetric limit `½(c₁(λ+iδ) + c₁(λ−iδ))`;
/// an uncompensated numerator pole is an error.
pub fn connection_c1(p: f64, mu: f64, lambda: C64) -> Result<C64, SpecialError> {
    let h = reduce_to_hypergeometric(p, mu, lambda);
    let num_arg = h.a + h.b + 1.0 - h.c;
    if !near_nonpositive_integer(num_arg, 0.0) {
        return c1_regular(p, mu, lambda);
    }
    let tol = 1e-12;
    if near_nonpositive_integer(h.a + 1.0 - h.c, tol) || near_nonpositive_integer(h.b + 1.0 - h.c, tol) {
        let delta = C64::new(0.0, 1e-6);
        let up = c1_regular(p, mu, lambda + delta)?;
        let down = c1_regular(p, mu, lambda - delta)?;
        return Ok(0.5 * (up + down));
    }
    Err(SpecialError::NumeratorPole(lambda))
}

/// Axis-aligned rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Self {
        Self {
            re_min,
            re_max,
            im_min,
            im_max,
        }
    }

    fn contains(&self, z: C64, tol: f64) -> bool {
        z.re >= self.re_min - tol && z.re <= self.re_max + tol && z.im >= self.im_min - tol && z.im <= self.im_max + tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootResidual {
    /// `|c₁(λ)|` at the refined root.
    pub c1_abs: f64,
    /// Max residual of the hypergeometric equation for the mode `f₁`.
    pub ode_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    pub p: f64,
    pub mu: f64,
    pub eigenvalues: Vec<C64>,
    pub region: Rect,
    pub grid_step: f64,
    pub residuals: Vec<RootResidual>,
}

const ROOT_TOL: f64 = 1e-8;
const NEWTON_STEP: f64 = 1e-7;
const EDGE_SAMPLES: usize = 8;

fn c1_or_inf(p: f64, mu: f64, lambda: C64) -> C64 {
    connection_c1(p, mu, lambda).unwrap_or(C64::new(f64::INFINITY, 0.0))
}

fn winding(p: f64, mu: f64, corners: [C64; 4]) -> Option<i64> {
    let mut total = 0.0;
    let mut prev = c1_or_inf(p, mu, corners[0]);
    for e in 0..4 {
        let (z0, z1) = (corners[e], corners[(e + 1) % 4]);
        for k in 1..=EDGE_SAMPLES {
            let z = z0 + (z1 - z0) * (k as f64 / EDGE_SAMPLES as f64);
            let v = c1_or_inf(p, mu, z);
            if !(v.norm().is_finite()) || v.norm() == 0.0 || !prev.norm().is_finite() || prev.norm() == 0.0 {
                return None;
            }
            total += (v / prev).arg();
            prev = v;
        }
    }
    Some((total / (2.0 * PI)).round() as i64)
}

fn newton(p: f64, mu: f64, mut z: C64) -> Option<C64> {
    for _ in 0..60 {
        let f = connection_c1(p, mu, z).ok()?;
        if f.norm() == 0.0 {
            return Some(z);
        }
        let d = (connection_c1(p, mu, z + NEWTON_STEP).ok()? - connection_c1(p, mu, z - NEWTON_STEP).ok()?)
            / (2.0 * NEWTON_STEP);
        if d.norm() == 0.0 || !d.norm().is_finite() {
            return None;
        }
        let dz = f / d;
        z -= dz;
        if !z.norm().is_finite() {
            return None;
        }
        if dz.norm() <= 1e-15 * (1.0 + z.norm()) {
            break;
        }
    }
    Some(z)
}

/// Locates zeros of `c₁` in `region` by phase winding on a grid of cells of
/// side `grid_step`, refines them with Newton's method and reports residuals.
///
/// The region must lie in `Re λ ≥ −2/(p−1)`; the boundary line itself is
/// excluded from the search.
pub fn eigenvalue_scan(p: f64, mu: f64, region: Rect, grid_step: f64) -> Result<SpectralResult, SpecialError> {
    let s = scaling_exponent(p);
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(SpecialError::InvalidArgument(format!("grid_step = {grid_step} must be positive")));
    }
    if !(p > 1.0) {
        return Err(SpecialError::InvalidArgument(format!("p = {p} must exceed 1")));
    }
    if region.re_min < -s - 1e-12 || region.re_max <= region.re_min || region.im_max < region.im_min {
        return Err(SpecialError::InvalidArgument(format!(
            "region must be a nonempty rectangle inside Re lambda > {}",
            -s
        )));
    }
    let re_lo = region.re_min.max(-s + 1e-6);
    let nx = ((region.re_max - re_lo) / grid_step).ceil().max(1.0) as usize;
    let ny = ((region.im_max - region.im_min) / grid_step).ceil().max(1.0) as usize;
    let hx = (region.re_max - re_lo) / nx as f64;
    let hy = if region.im_max > region.im_min {
        (region.im_max - region.im_min) / ny as f64
    } else {
        grid_step
    };
    let im_lo = if region.im_max > region.im_min {
        region.im_min
    } else {
        region.im_min - 0.5 * grid_step
    };

    let seeds: Vec<C64> = (0..nx * ny)
        .into_par_iter()
        .flat_map_iter(|cell| {
            let (i, j) = (cell % nx, cell / nx);
            let z0 = C64::new(re_lo + i as f64 * hx, im_lo + j as f64 * hy);
            let corners = [z0, z0 + hx, z0 + C64::new(hx, hy), z0 + C64::new(0.0, hy)];
            let centre = z0 + C64::new(0.5 * hx, 0.5 * hy);
            let mut out = Vec::new();
            match winding(p, mu, corners) {
                Some(0) => {}
                _ => out.push(centre),
            }
            out
        })
        .collect();

    let mut roots: Vec<C64> = Vec::new();
    for seed in seeds {
        if let Some(z) = newton(p, mu, seed) {
            let val = connection_c1(p, mu, z).map(|v| v.norm()).unwrap_or(f64::INFINITY);
            let inside = region.contains(z, 1e-9) && z.re > -s;
            if inside && val <= ROOT_TOL && !roots.iter().any(|r| (r - z).norm() < 1e-6) {
                roots.push(z);
            }
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let residuals = roots
        .iter()
        .map(|&z| RootResidual {
            c1_abs: connection_c1(p, mu, z).map(|v| v.norm()).unwrap_or(f64::INFINITY),
            ode_residual: verify_mode_ode(p, mu, z, ModeSolution::F1).unwrap_or(f64::INFINITY),
        })
        .collect();
    Ok(SpectralResult {
        p,
        mu,
        eigenvalues: roots,
        region,
        grid_step,
        residuals,
    })
}

/// Fundamental solutions of the hypergeometric equation: `g₁, g₂` around
/// `z = 0`, `f₁, f₂` around `z = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeSolution {
    F1,
    F2,
    G1,
    G2,
}

impl ModeSolution {
    pub fn name(self) -> &'static str {
        match self {
            ModeSolution::F1 => "f1",
            ModeSolution::F2 => "f2",
            ModeSolution::G1 => "g1",
            ModeSolution::G2 => "g2",
        }
    }
}

fn check_param(id: ModeSolution, c: C64) -> Result<(), SpecialError> {
    if near_nonpositive_integer(c, 1e-12) {
        return Err(SpecialError::UndefinedSolution(
            id.name(),
            format!("series parameter {c} is a non-positive integer"),
        ));
    }
    Ok(())
}

fn solution(h: &HypergeometricParams, id: ModeSolution, z: f64) -> Result<C64, SpecialError> {
    let (a, b, c) = (h.a, h.b, h.c);
    let zc = C64::new(z, 0.0);
    let w = C64::new(1.0 - z, 0.0);
    match id {
        ModeSolution::G1 => hyp2f1(h, zc),
        ModeSolution::G2 => Ok(zc.powc(1.0 - c) * hyp2f1(&HypergeometricParams::new(a - c + 1.0, b - c + 1.0, 2.0 - c), zc)?),
        ModeSolution::F1 => hyp2f1(&HypergeometricParams::new(a, b, a + b + 1.0 - c), w),
        ModeSolution::F2 => {
            let d = c - a - b;
            Ok(w.powc(d) * hyp2f1(&HypergeometricParams::new(c - a, c - b, d + 1.0), w)?)
        }
    }
}

/// Richardson-extrapolated central differences with base step `h`.
fn derivatives(f: &dyn Fn(f64) -> Result<C64, SpecialError>, x: f64, h: f64) -> Result<(C64, C64, C64), SpecialError> {
    let f0 = f(x)?;
    let d = |h: f64| -> Result<(C64, C64), SpecialError> {
        let (fp, fm) = (f(x + h)?, f(x - h)?);
        Ok(((fp - fm) / (2.0 * h), (fp - 2.0 * f0 + fm) / (h * h)))
    };
    let (d1a, d2a) = d(h)?;
    let (d1b, d2b) = d(0.5 * h)?;
    Ok((f0, (4.0 * d1b - d1a) / 3.0, (4.0 * d2b - d2a) / 3.0))
}

/// Max absolute residual of `z(1−z)w'' + (c − (a+b+1)z)w' − ab·w` for the
/// chosen solution on `z ∈ [0.05, 0.95]`.
pub fn verify_mode_ode(p: f64, mu: f64, lambda: C64, id: ModeSolution) -> Result<f64, SpecialError> {
    let h = reduce_to_hypergeometric(p, mu, lambda);
    let (a, b, c) = (h.a, h.b, h.c);
    let d = c - a - b;
    match id {
        ModeSolution::G1 => check_param(id, c)?,
        ModeSolution::G2 => check_param(id, 2.0 - c)?,
        ModeSolution::F1 => check_param(id, a + b + 1.0 - c)?,
        ModeSolution::F2 => {
            if d.norm() < 1e-12 {
                return Err(SpecialError::UndefinedSolution(
                    id.name(),
                    "c − a − b = 0: the second solution at z = 1 is logarithmic".into(),
                ));
            }
            check_param(id, d + 1.0)?
        }
    }
    let f = |z: f64| solution(&h, id, z);
    let mut worst: f64 = 0.0;
    for k in 0..=18 {
        let z = 0.05 + 0.05 * k as f64;
        let (w0, w1, w2) = derivatives(&f, z, 1e-4)?;
        let res = z * (1.0 - z) * w2 + (c - (a + b + 1.0) * z) * w1 - a * b * w0;
        worst = worst.max(res.norm());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WronskianFit {
    pub fitted_exponent: f64,
    pub fitted_constant: f64,
    pub max_relative_deviation: f64,
}

/// Wronskian of the fundamental system `f₁ = ρ`, `f₂` of
/// `−(1−ρ²)r'' + 2sρr' − 2sr = 0`, fitted as `C(1−ρ²)^e` on `ρ ∈ [0.05, 0.95]`.
///
/// For `s = 1` (`p = 3`) the hypergeometric expression for `f₂` collapses to
/// `ρ`, so the Legendre function `Q₁(ρ) = (ρ/2)log((1+ρ)/(1−ρ)) − 1` is used.
pub fn wronskian_check(p: f64, n_points: usize) -> Result<WronskianFit, SpecialError> {
    if !(p > 1.0) {
        return Err(SpecialError::InvalidArgument(format!("p = {p} must exceed 1")));
    }
    if n_points < 3 {
        return Err(SpecialError::InvalidArgument("need at least 3 points".into()));
    }
    let s = scaling_exponent(p);
    let c2 = C64::new(2.0 - s, 0.0);
    if (s - 1.0).abs() > 1e-12 && near_nonpositive_integer(c2, 1e-12) {
        return Err(SpecialError::UndefinedSolution("f2", format!("2 − 2/(p−1) = {} is a non-positive integer", c2.re)));
    }
    let params = HypergeometricParams::real(1.0, 0.5 - s, 2.0 - s);
    let f2 = |rho: f64| -> Result<C64, SpecialError> {
        if (s - 1.0).abs() <= 1e-12 {
            return Ok(C64::new(0.5 * rho * ((1.0 + rho) / (1.0 - rho)).ln() - 1.0, 0.0));
        }
        let x = 1.0 - rho * rho;
        Ok(x.powf(1.0 - s) * hyp2f1(&params, C64::new(x, 0.0))?)
    };
    let mut xs = Vec::with_capacity(n_points);
    let mut ws = Vec::with_capacity(n_points);
    for k in 0..n_points {
        let rho = 0.05 + 0.9 * k as f64 / (n_points - 1) as f64;
        let (v, dv, _) = derivatives(&f2, rho, 1e-4)?;
        let wr = rho * dv.re - v.re;
        xs.push((1.0 - rho * rho).ln());
        ws.push(wr);
    }
    let sign = ws[0].signum();
    let ys: Vec<f64> = ws.iter().map(|w| w.abs().ln()).collect();
    let n = n_points as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let constant = sign * (my - slope * mx).exp();
    let scaled: Vec<f64> = ws.iter().zip(&xs).map(|(w, x)| w * (s * x).exp()).collect();
    let mean = scaled.iter().sum::<f64>() / n;
    let dev = scaled.iter().map(|v| ((v - mean) / mean).abs()).fold(0.0, f64::max);
    Ok(WronskianFit {
        fitted_exponent: slope,
        fitted_constant: constant,
        max_relative_deviation: dev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn reduction_examples() {
        let h = reduce_to_hypergeometric(3.0, 2.0, c(0.0));
        assert!((h.a - c(-0.5)).norm() < 1e-15 && (h.b - c(1.0)).norm() < 1e-15);
        assert_eq!(h.c, c(0.5));
        let h = reduce_to_hypergeometric(3.0, 2.0, c(1.0));
        assert!((h.a - c(0.0)).norm() < 1e-15 && (h.b - c(1.5)).norm() < 1e-15);
    }

    #[test]
    fn reduction_root_product() {
        let mut rng = crate::rng::stream(11, 0);
        for _ in 0..20 {
            let p = rng.random_range(3.0..9.0);
            let lambda = C64::new(rng.random_range(-0.5..3.0), rng.random_range(-2.0..2.0));
            let h = reduce_to_hypergeometric(p, c_p(p), lambda);
            let want = 0.25 * (lambda - 1.0) * (lambda + 4.0 / (p - 1.0));
            assert!((h.a * h.b - want).norm() < 1e-12 * (1.0 + want.norm()));
            let s = scaling_exponent(p);
            assert!((h.a + h.b - (lambda + s - 0.5)).norm() < 1e-12);
            // for μ = c_p the roots are ½(λ−1) and ½(λ + 2s)
            let (x, y) = (0.5 * (lambda - 1.0), 0.5 * (lambda + 2.0 * s));
            assert!(((h.a - x).norm() < 1e-12 && (h.b - y).norm() < 1e-12) || ((h.a - y).norm() < 1e-12 && (h.b - x).norm() < 1e-12));
        }
    }

    #[test]
    fn c1_examples() {
        assert_eq!(connection_c1(3.0, 2.0, c(0.0)).unwrap(), c(0.0));
        // away from p = 3, λ = −2 is an honest zero
        assert_eq!(connection_c1(5.0, c_p(5.0), c(-2.0)).unwrap(), c(0.0));
        // at p = 3 the pole of Γ(a+1−c) at −1 is cancelled by Γ(a+b+1−c) = Γ(λ+1):
        // Γ(λ+1)/Γ(λ/2) → ½
        let v = connection_c1(3.0, 2.0, c(-2.0)).unwrap();
        assert!((v - c(0.5)).norm() < 1e-10, "{v}");
        // a+½ = ½, b+½ = 2: Γ(2)Γ(½)/(Γ(½)Γ(2)) = 1
        let v = connection_c1(3.0, 2.0, c(1.0)).unwrap();
        assert!((v - c(1.0)).norm() < 1e-13);
    }

    #[test]
    fn c1_numerator_pole() {
        // a+b+½ = λ + s: λ = −s is a numerator pole
        assert!(matches!(connection_c1(3.0, 2.0, c(-1.0)), Err(SpecialError::NumeratorPole(_))));
    }

    #[test]
    fn c1_vanishes_on_denominator_poles() {
        let mut rng = crate::rng::stream(12, 0);
        for _ in 0..50 {
            let p = rng.random_range(3.0..9.0);
            let k = rng.random_range(0..6) as f64;
            // λ = −2k puts a + ½ = −k
            let v = connection_c1(p, c_p(p), c(-2.0 * k)).unwrap();
            assert!(v.norm() <= 1e-12, "p = {p}, k = {k}: {v}");
        }
    }

    #[test]
    fn scan_nu_equation_p3() {
        let res = eigenvalue_scan(3.0, c_p(3.0), Rect::new(-1.0, 3.0, -2.0, 2.0), 0.1).unwrap();
        assert_eq!(res.eigenvalues.len(), 1, "{:?}", res.eigenvalues);
        assert!(res.eigenvalues[0].norm() < 1e-10);
        assert!(res.residuals[0].c1_abs <= 1e-8);
        assert!(res.residuals[0].ode_residual <= 1e-6);
    }

    #[test]
    fn scan_phi_equation_p3() {
        let res = eigenvalue_scan(3.0, 3.0 * c_p(3.0), Rect::new(-1.0, 3.0, -2.0, 2.0), 0.1).unwrap();
        assert_eq!(res.eigenvalues.len(), 1, "{:?}", res.eigenvalues);
        assert!((res.eigenvalues[0] - c(1.0)).norm() < 1e-10);
    }

    #[test]
    fn scan_p7() {
        let res = eigenvalue_scan(7.0, c_p(7.0), Rect::new(-1.0 / 3.0, 3.0, -2.0, 2.0), 0.1).unwrap();
        assert_eq!(res.eigenvalues.len(), 1);
        assert!(res.eigenvalues[0].norm() < 1e-10);
    }

    #[test]
    fn scan_is_step_independent() {
        let a = eigenvalue_scan(5.0, 5.0 * c_p(5.0), Rect::new(-0.5, 3.0, -1.5, 1.5), 0.2).unwrap();
        let b = eigenvalue_scan(5.0, 5.0 * c_p(5.0), Rect::new(-0.5, 3.0, -1.5, 1.5), 0.1).unwrap();
        assert_eq!(a.eigenvalues.len(), b.eigenvalues.len());
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - y).norm() <= 1e-8);
        }
    }

    #[test]
    fn scan_rejects_bad_input() {
        assert!(eigenvalue_scan(3.0, 2.0, Rect::new(-1.5, 3.0, -1.0, 1.0), 0.1).is_err());
        assert!(eigenvalue_scan(3.0, 2.0, Rect::new(-1.0, 3.0, -1.0, 1.0), 0.0).is_err());
    }

    #[test]
    fn mode_ode_residuals() {
        assert!(verify_mode_ode(3.0, c_p(3.0), c(0.0), ModeSolution::G1).unwrap() <= 1e-6);
        assert!(verify_mode_ode(5.0, c_p(5.0), c(0.0), ModeSolution::F1).unwrap() <= 1e-6);
        for id in [ModeSolution::F1, ModeSolution::F2, ModeSolution::G1, ModeSolution::G2] {
            let r = verify_mode_ode(7.0, c_p(7.0), C64::new(0.4, 0.3), id).unwrap();
            assert!(r <= 1e-6, "{id:?}: {r}");
        }
    }

    #[test]
    fn logarithmic_case_is_rejected() {
        // c − a − b = 1 − λ − s vanishes at λ = 1 − s
        let p = 5.0;
        let lambda = c(1.0 - scaling_exponent(p));
        assert!(matches!(
            verify_mode_ode(p, c_p(p), lambda, ModeSolution::F2),
            Err(SpecialError::UndefinedSolution("f2", _))
        ));
        assert!(verify_mode_ode(p, c_p(p), lambda, ModeSolution::F1).is_ok());
    }

    #[test]
    fn zero_mode_is_constant_after_unwinding() {
        // at λ = 0, μ = c_p: f₁(z) = √z, so v(ρ) = ρ and u₃ = v/ρ is constant
        for p in [3.0, 5.0, 7.0] {
            let h = reduce_to_hypergeometric(p, c_p(p), c(0.0));
            for rho in [0.1, 0.4, 0.8] {
                let v = solution(&h, ModeSolution::F1, rho * rho).unwrap();
                assert!((v / rho - c(1.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn wronskian_exponents() {
        let w3 = wronskian_check(3.0, 40).unwrap();
        assert!((w3.fitted_exponent + 1.0).abs() < 1e-6, "{w3:?}");
        let w5 = wronskian_check(5.0, 40).unwrap();
        assert!((w5.fitted_exponent + 0.5).abs() < 1e-6, "{w5:?}");
        let w7 = wronskian_check(7.0, 40).unwrap();
        assert!(w7.max_relative_deviation <= 1e-8, "{w7:?}");
        assert!((w7.fitted_exponent + 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn wronskian_closed_forms() {
        // p = 3: W(ρ, Q₁) = (1−ρ²)^{−1}; p = 5: f₂ = √(1−ρ²), W = −(1−ρ²)^{−1/2}
        let w3 = wronskian_check(3.0, 20).unwrap();
        assert!((w3.fitted_constant - 1.0).abs() < 1e-7);
        let w5 = wronskian_check(5.0, 20).unwrap();
        assert!((w5.fitted_constant + 1.0).abs() < 1e-7);
    }
}
