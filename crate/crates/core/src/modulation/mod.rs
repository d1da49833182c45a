//! Modulation analysis of similarity-coordinate states: the phase `θ`, the
//! coefficients along the neutral mode `r_θ` and the unstable mode `g_θ`,
//! the weighted norms controlled by the stability theorem, exponential-rate
//! fits and shooting on the blowup time `T`.
//!
//! Projections use the pairing `⟨f, g⟩ = Σ_c ∫_0^1 ρ² f_c g_c dρ` and solve
//! the 2×2 Gram system, so they are exact on `span{r_θ, g_θ}` (an oblique
//! projection onto the spectral ranges rather than the Riesz projections
//! themselves).

mod shoot;

pub use shoot::{shoot_t, HorizonEval, ShootError, ShootOptions, ShootProblem, ShootResult};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evolve::{FieldState, Observer, RadialGrid, SimilaritySystem};
use crate::profile::{
    from_similarity, mode_g, mode_r, psi_theta, scaling_exponent, BlowupProfile, LightconeSection, ModeVector,
    ProfileError, SimilarityFrame,
};
use crate::C64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModulationError {
    #[error("phase is undefined: ball averages of the state vanish")]
    UndefinedPhase,
    #[error("series value {value} at tau = {tau} is not positive")]
    NonPositive { tau: f64, value: f64 },
    #[error("fit window ({0}, {1}) contains {2} points, need at least 5")]
    TooFewPoints(f64, f64, usize),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

/// Coefficients of `state − Ψ_θ` along `r_θ`, `g_θ` and the size of what remains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeProjection {
    pub coeff_r: f64,
    pub coeff_g: f64,
    pub remainder_norm: f64,
}

fn pair_const(grid: &RadialGrid, state: &FieldState, mode: &ModeVector) -> f64 {
    (0..4).map(|c| mode.0[c] * grid.integrate_r2(&state.comps[c])).sum()
}

/// Discrete `(H² × H¹)²` norm with weight `ρ²`: all derivatives up to order two
/// of `φ₁, ν₁` and up to order one of `φ₂, ν₂`.
pub fn energy_norm(grid: &RadialGrid, state: &FieldState) -> f64 {
    let n = grid.len();
    let mut d = vec![0.0; n];
    let mut total = 0.0;
    let sq = |v: &[f64]| grid.integrate_r2(&v.iter().map(|x| x * x).collect::<Vec<_>>());
    for b in 0..2 {
        let f = &state.comps[2 * b];
        let g = &state.comps[2 * b + 1];
        total += sq(f) + sq(g);
        grid.diff_even(f, &mut d);
        total += sq(&d);
        grid.diff2_even(f, &mut d);
        total += sq(&d);
        grid.diff_even(g, &mut d);
        total += sq(&d);
    }
    total.sqrt()
}

/// Projection of a perturbation `δ` of `Ψ_θ` onto `span{r_θ, g_θ}`.
pub fn project_perturbation(delta: &FieldState, grid: &RadialGrid, p: f64, theta: f64) -> ModeProjection {
    let (r, g) = (mode_r(p, theta), mode_g(p, theta));
    let third = 1.0 / 3.0;
    let (rr, gg, rg) = (third * r.dot(&r), third * g.dot(&g), third * r.dot(&g));
    let (br, bg) = (pair_const(grid, delta, &r), pair_const(grid, delta, &g));
    let det = rr * gg - rg * rg;
    let coeff_r = (br * gg - bg * rg) / det;
    let coeff_g = (bg * rr - br * rg) / det;
    let mut rest = delta.clone();
    for c in 0..4 {
        let shift = coeff_r * r.0[c] + coeff_g * g.0[c];
        rest.comps[c].iter_mut().for_each(|v| *v -= shift);
    }
    ModeProjection {
        coeff_r,
        coeff_g,
        remainder_norm: energy_norm(grid, &rest),
    }
}

/// Projection of `state − Ψ_θ` onto `span{r_θ, g_θ}`.
pub fn project_modes(state: &FieldState, grid: &RadialGrid, p: f64, theta: f64) -> ModeProjection {
    let psi = psi_theta(p, theta);
    let mut delta = state.clone();
    for c in 0..4 {
        delta.comps[c].iter_mut().for_each(|v| *v -= psi.0[c]);
    }
    project_perturbation(&delta, grid, p, theta)
}

/// `atan2(⟨ν₁⟩, ⟨φ₁⟩)` of the `ρ²`-weighted ball averages, in `(−π, π]`.
pub fn extract_theta(state: &FieldState, grid: &RadialGrid) -> Result<f64, ModulationError> {
    let x = 3.0 * grid.integrate_r2(&state.comps[0]);
    let y = 3.0 * grid.integrate_r2(&state.comps[2]);
    if x.hypot(y) < 1e-300 {
        return Err(ModulationError::UndefinedPhase);
    }
    let theta = y.atan2(x);
    Ok(if theta <= -PI { PI } else { theta })
}

/// The three quantities bounded by the stability theorem, for a section at
/// time `t` and the profile `u^T_θ`:
///
/// ```text
/// n2 = (T−t)^{1/2+s}  ‖(u, ∂_t u)‖_{Ḣ²×Ḣ¹}
/// n1 = (T−t)^{−1/2+s} ‖(u − u^T_θ, ∂_t u − ∂_t u^T_θ)‖_{Ḣ¹×L²}
/// n0 = (T−t)^{−3/2+s} ‖u − u^T_θ‖_{L²}
/// ```
///
/// with radial norms `‖f‖² = ∫_0^{T−t} r²|f|² dr` (no `4π`), `Ḣ¹` and `Ḣ²`
/// using only `∂_r` and `∂²_r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Norms {
    pub n2: f64,
    pub n1: f64,
    pub n0: f64,
}

pub fn theorem1_norms(section: &LightconeSection, profile: &BlowupProfile) -> Result<Theorem1Norms, ModulationError> {
    let uth = profile.value(section.t, 0.0)?;
    let uth_t = profile.time_derivative(section.t, 0.0)?;
    let rem = profile.blowup_time - section.t;
    let radius = section.radius;
    let grid = &section.grid;
    let n = grid.len();
    let s = scaling_exponent(profile.p);

    let split = |v: &[C64]| -> (Vec<f64>, Vec<f64>) { (v.iter().map(|z| z.re).collect(), v.iter().map(|z| z.im).collect()) };
    let (ure, uim) = split(&section.u);
    let (vre, vim) = split(&section.ut);
    let mut buf = vec![0.0; n];
    // ∫_0^R r² |f|² dr for a grid function sampled on r = Rρ
    let l2 = |f: &[f64]| radius.powi(3) * grid.integrate_r2(&f.iter().map(|x| x * x).collect::<Vec<_>>());

    let mut top = 0.0;
    let mut first = 0.0;
    for (f, g) in [(&ure, &vre), (&uim, &vim)] {
        grid.diff2_even(f, &mut buf);
        top += l2(&buf) / radius.powi(4);
        grid.diff_even(g, &mut buf);
        top += l2(&buf) / radius.powi(2);
        grid.diff_even(f, &mut buf);
        first += l2(&buf) / radius.powi(2);
    }
    let du: Vec<C64> = section.u.iter().map(|z| z - uth).collect();
    let dv: Vec<C64> = section.ut.iter().map(|z| z - uth_t).collect();
    let (dure, duim) = split(&du);
    let (dvre, dvim) = split(&dv);
    let zero = l2(&dure) + l2(&duim);
    first += l2(&dvre) + l2(&dvim);
    Ok(Theorem1Norms {
        n2: rem.powf(0.5 + s) * top.sqrt(),
        n1: rem.powf(-0.5 + s) * first.sqrt(),
        n0: rem.powf(-1.5 + s) * zero.sqrt(),
    })
}

/// Least-squares fit `log y ≈ intercept − ω τ` over a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub omega: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
}

impl DecayFit {
    pub fn predict(&self, tau: f64) -> f64 {
        (self.intercept - self.omega * tau).exp()
    }
}

pub fn fit_decay(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit, ModulationError> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, _)| *t >= window.0 - 1e-12 && *t <= window.1 + 1e-12)
        .copied()
        .collect();
    if pts.len() < 5 {
        return Err(ModulationError::TooFewPoints(window.0, window.1, pts.len()));
    }
    if let Some(&(tau, value)) = pts.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(ModulationError::NonPositive { tau, value });
    }
    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if syy <= 1e-30 * n * (1.0 + my * my) {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(DecayFit {
        omega: -slope,
        intercept,
        r_squared,
        window,
    })
}

/// `q̃ = 2 + s − max{2q/(p−1), 1 + 2s}`, the decay rate of the perturbation
/// term in similarity variables for `q`-growth perturbations.
pub fn q_tilde(p: f64, q: f64) -> f64 {
    let s = scaling_exponent(p);
    2.0 + s - (2.0 * q / (p - 1.0)).max(1.0 + 2.0 * s)
}

/// One observer sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub tau: f64,
    pub theta_est: f64,
    pub coeff_r: f64,
    pub coeff_g: f64,
    pub remainder_norm: f64,
    /// `sup |Φ − Ψ_{θ_ref}|` over nodes and components.
    pub deviation: f64,
    /// `(∫ρ²|W|²)^{1/2}`.
    pub w_norm: f64,
    pub n2: f64,
    pub n1: f64,
    pub n0: f64,
}

/// Observer recording [`TrajectorySample`]s.
///
/// Projections use the phase extracted at each sample unless a fixed phase
/// is given. The stability-theorem norms need the limiting phase, so they are
/// filled in by [`Diagnostics::finish`].
#[derive(Debug, Clone)]
pub struct Diagnostics {
    p: f64,
    frame: SimilarityFrame,
    fixed_theta: Option<f64>,
    reference_theta: Option<f64>,
    samples: Vec<TrajectorySample>,
    states: Vec<FieldState>,
}

impl Diagnostics {
    pub fn new(p: f64, frame: SimilarityFrame) -> Self {
        Self {
            p,
            frame,
            fixed_theta: None,
            reference_theta: None,
            samples: Vec::new(),
            states: Vec::new(),
        }
    }

    /// Project about `Ψ_θ` with this fixed `θ` instead of the extracted phase.
    pub fn with_fixed_theta(mut self, theta: f64) -> Self {
        self.fixed_theta = Some(theta);
        self.reference_theta = Some(theta);
        self
    }

    /// Measure `deviation` from `Ψ_θ` (default: phase of the first sample).
    pub fn with_reference_theta(mut self, theta: f64) -> Self {
        self.reference_theta = Some(theta);
        self
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    /// Fills the norm columns against `u^T_{theta_inf}` (default: the phase
    /// at the last sample) and returns the samples.
    pub fn finish(mut self, grid: &RadialGrid, theta_inf: Option<f64>) -> Result<Vec<TrajectorySample>, ModulationError> {
        let theta = theta_inf.unwrap_or_else(|| self.samples.last().map(|s| s.theta_est).unwrap_or(0.0));
        let profile = BlowupProfile::new(self.frame.blowup_time, theta, self.p);
        for (sample, state) in self.samples.iter_mut().zip(&self.states) {
            let section = from_similarity(&self.frame, self.p, state, grid)?;
            let norms = theorem1_norms(&section, &profile)?;
            sample.n2 = norms.n2;
            sample.n1 = norms.n1;
            sample.n0 = norms.n0;
        }
        Ok(self.samples)
    }
}

impl Observer for Diagnostics {
    fn observe(&mut self, system: &SimilaritySystem, state: &FieldState) {
        let grid = system.grid();
        let theta_est = extract_theta(state, grid).unwrap_or(f64::NAN);
        let theta = self.fixed_theta.unwrap_or(theta_est);
        let reference = *self.reference_theta.get_or_insert(theta_est);
        let proj = project_modes(state, grid, self.p, theta);
        let w_norm = system
            .w_term(state)
            .map(|w| grid.integrate_r2(&w.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>()).sqrt())
            .unwrap_or(f64::NAN);
        self.samples.push(TrajectorySample {
            tau: state.tau,
            theta_est,
            coeff_r: proj.coeff_r,
            coeff_g: proj.coeff_g,
            remainder_norm: proj.remainder_norm,
            deviation: state.sup_deviation(&psi_theta(self.p, reference)),
            w_norm,
            n2: f64::NAN,
            n1: f64::NAN,
            n0: f64::NAN,
        });
        self.states.push(state.clone());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::kappa;

    fn constant(n: usize, m: &ModeVector) -> FieldState {
        FieldState::constant(0.0, n, m)
    }

    #[test]
    fn exact_profile_projects_to_zero() {
        let grid = RadialGrid::new(16);
        let st = constant(16, &psi_theta(5.0, 0.3));
        let pr = project_modes(&st, &grid, 5.0, 0.3);
        assert!(pr.coeff_r.abs() < 1e-15 && pr.coeff_g.abs() < 1e-15 && pr.remainder_norm < 1e-14);
    }

    #[test]
    fn gram_projection_is_exact_on_span() {
        let grid = RadialGrid::new(16);
        for (a, b) in [(0.0, 0.01), (0.3, -0.2), (-1e-3, 4.0)] {
            let theta = 0.7;
            let m = psi_theta(3.0, theta).0;
            let (r, g) = (mode_r(3.0, theta).0, mode_g(3.0, theta).0);
            let v = ModeVector(std::array::from_fn(|c| m[c] + a * r[c] + b * g[c]));
            let pr = project_modes(&constant(16, &v), &grid, 3.0, theta);
            assert!((pr.coeff_r - a).abs() < 1e-12 && (pr.coeff_g - b).abs() < 1e-12);
            assert!(pr.remainder_norm < 1e-12);
        }
    }

    #[test]
    fn bump_leaves_a_remainder() {
        let grid = RadialGrid::new(24);
        let mut st = constant(24, &psi_theta(3.0, 0.0));
        let eps = 1e-3;
        for (k, r) in grid.nodes().iter().enumerate() {
            st.comps[0][k] += eps * (-(r * r) / 0.04).exp();
        }
        let pr = project_modes(&st, &grid, 3.0, 0.0);
        assert!(pr.remainder_norm > 0.0);
        assert!(pr.coeff_g.abs() < 10.0 * eps && pr.coeff_r.abs() < 10.0 * eps);
    }

    #[test]
    fn theta_examples() {
        let grid = RadialGrid::new(16);
        let t = extract_theta(&constant(16, &psi_theta(3.0, 0.3)), &grid).unwrap();
        assert!((t - 0.3).abs() < 1e-12);
        let t = extract_theta(&constant(16, &psi_theta(3.0, PI)), &grid).unwrap();
        assert_eq!(t, PI);
        assert!(matches!(
            extract_theta(&FieldState::zeros(0.0, 16), &grid),
            Err(ModulationError::UndefinedPhase)
        ));
    }

    #[test]
    fn theta_is_rotation_equivariant() {
        let grid = RadialGrid::new(16);
        let mut st = constant(16, &psi_theta(7.0, 0.2));
        for (k, r) in grid.nodes().iter().enumerate() {
            st.comps[0][k] += 0.1 * r * r;
            st.comps[2][k] -= 0.05 * r.powi(4);
        }
        let base = extract_theta(&st, &grid).unwrap();
        for alpha in [0.5, 2.0, -2.9] {
            let mut rot = st.clone();
            for k in 0..16 {
                let m = ModeVector([st.comps[0][k], st.comps[1][k], st.comps[2][k], st.comps[3][k]]).rotate(alpha);
                for c in 0..4 {
                    rot.comps[c][k] = m.0[c];
                }
            }
            let got = extract_theta(&rot, &grid).unwrap();
            let diff = (got - base - alpha).rem_euclid(2.0 * PI);
            assert!(diff.min(2.0 * PI - diff) < 1e-12);
        }
    }

    fn section(grid: &RadialGrid, t: f64, u: impl Fn(f64) -> C64, ut: impl Fn(f64) -> C64) -> LightconeSection {
        let radius = 1.0 - t;
        LightconeSection {
            t,
            radius,
            grid: grid.clone(),
            u: grid.nodes().iter().map(|r| u(r * radius)).collect(),
            ut: grid.nodes().iter().map(|r| ut(r * radius)).collect(),
        }
    }

    #[test]
    fn norms_of_profile_vanish() {
        let grid = RadialGrid::new(16);
        let prof = BlowupProfile::new(1.0, 0.4, 3.0);
        let sec = section(&grid, 0.75, |_| prof.value(0.75, 0.0).unwrap(), |_| prof.time_derivative(0.75, 0.0).unwrap());
        let n = theorem1_norms(&sec, &prof).unwrap();
        assert!(n.n0 < 1e-14 && n.n1 < 1e-14 && n.n2 < 1e-12);
    }

    #[test]
    fn constant_offset_norm() {
        let grid = RadialGrid::new(16);
        let prof = BlowupProfile::new(1.0, 0.0, 3.0);
        let c = C64::new(0.1, 0.0);
        let sec = section(&grid, 0.75, |_| prof.value(0.75, 0.0).unwrap() + c, |_| prof.time_derivative(0.75, 0.0).unwrap());
        let n = theorem1_norms(&sec, &prof).unwrap();
        let want = 0.1 / 3f64.sqrt() * 0.25;
        assert!((n.n0 - want).abs() < 1e-14);
        assert!((n.n0 - 0.014_43).abs() < 1e-5);
    }

    #[test]
    fn zero_section_gives_profile_norm() {
        let grid = RadialGrid::new(16);
        for p in [3.0, 7.0] {
            let prof = BlowupProfile::new(1.0, 0.0, p);
            let sec = section(&grid, 0.6, |_| C64::new(0.0, 0.0), |_| C64::new(0.0, 0.0));
            let n = theorem1_norms(&sec, &prof).unwrap();
            assert!((n.n0 - kappa(p) / 3f64.sqrt()).abs() < 1e-13);
        }
    }

    #[test]
    fn norms_reject_time_after_blowup() {
        let grid = RadialGrid::new(16);
        let prof = BlowupProfile::new(1.0, 0.0, 3.0);
        let sec = section(&grid, 1.0, |_| C64::new(0.0, 0.0), |_| C64::new(0.0, 0.0));
        assert!(theorem1_norms(&sec, &prof).is_err());
    }

    #[test]
    fn second_derivative_norm_of_quadratic() {
        // u = r² on the section: Ḣ² part is ∫ r²·4 dr = 4R³/3
        let grid = RadialGrid::new(16);
        let prof = BlowupProfile::new(1.0, 0.0, 3.0);
        let sec = section(&grid, 0.5, |r| C64::new(r * r, 0.0), |_| C64::new(0.0, 0.0));
        let n = theorem1_norms(&sec, &prof).unwrap();
        let want = 0.5f64.powf(1.5) * (4.0 * 0.125 / 3.0f64).sqrt();
        assert!((n.n2 - want).abs() < 1e-12);
    }

    #[test]
    fn fit_examples() {
        let s: Vec<(f64, f64)> = (0..=10).map(|k| (k as f64, 5.0 * (-0.3 * k as f64).exp())).collect();
        let f = fit_decay(&s, (0.0, 10.0)).unwrap();
        assert!((f.omega - 0.3).abs() < 1e-12 && (f.r_squared - 1.0).abs() < 1e-12);
        assert!((f.intercept - 5f64.ln()).abs() < 1e-12);
        let c: Vec<(f64, f64)> = (0..=10).map(|k| (k as f64, 2.0)).collect();
        let f = fit_decay(&c, (0.0, 10.0)).unwrap();
        assert_eq!(f.omega, 0.0);
        assert_eq!(f.r_squared, 1.0);
    }

    #[test]
    fn fit_errors() {
        let s: Vec<(f64, f64)> = (0..=10).map(|k| (k as f64, 1.0)).collect();
        assert!(matches!(fit_decay(&s, (0.0, 3.0)), Err(ModulationError::TooFewPoints(..))));
        let mut z = s.clone();
        z[4].1 = 0.0;
        assert!(matches!(fit_decay(&z, (0.0, 10.0)), Err(ModulationError::NonPositive { .. })));
    }

    #[test]
    fn fit_is_scale_invariant() {
        let s: Vec<(f64, f64)> = (0..40).map(|k| {
            let t = 0.1 * k as f64;
            (t, (-0.7 * t).exp() * (1.0 + 0.1 * (3.0 * t).sin()))
        }).collect();
        let a = fit_decay(&s, (0.0, 4.0)).unwrap();
        let scaled: Vec<(f64, f64)> = s.iter().map(|(t, v)| (*t, 17.0 * v)).collect();
        let b = fit_decay(&scaled, (0.0, 4.0)).unwrap();
        assert!((a.omega - b.omega).abs() < 1e-12);
        assert!((b.intercept - a.intercept - 17f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn q_tilde_values() {
        assert!((q_tilde(7.0, 1.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!(q_tilde(7.0, 6.0) > 0.0);
        assert!(q_tilde(5.0, 4.999) > 0.0);
    }
}
