//! Closed-form objects: the ODE blowup family, its similarity-coordinate
//! image, the neutral and unstable modes, and the maps between physical
//! data and similarity-coordinate states.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evolve::{FieldState, RadialGrid};
use crate::C64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("time t = {t} is not before the blowup time T = {blowup}")]
    NotBeforeBlowup { t: f64, blowup: f64 },
    #[error("initial time T0 = {t0} must precede the blowup time T = {blowup}")]
    BadFrame { t0: f64, blowup: f64 },
    #[error("data radius {radius} does not cover the lightcone section of radius {needed}")]
    RadiusTooSmall { radius: f64, needed: f64 },
    #[error("grid mismatch: expected {expected} nodes, got {got}")]
    GridMismatch { expected: usize, got: usize },
}

/// `2/(p−1)`, the self-similar scaling exponent of the field.
pub fn scaling_exponent(p: f64) -> f64 {
    2.0 / (p - 1.0)
}

/// `κ_p = (2(p+1)/(p−1)²)^{1/(p−1)}`, amplitude of `u^T(t) = κ_p (T−t)^{−2/(p−1)}`.
pub fn kappa(p: f64) -> f64 {
    c_p(p).powf(1.0 / (p - 1.0))
}

/// `c_p = κ_p^{p−1} = 2(p+1)/(p−1)²`.
pub fn c_p(p: f64) -> f64 {
    2.0 * (p + 1.0) / ((p - 1.0) * (p - 1.0))
}

/// Member `u^T_θ = e^{iθ} κ_p (T−t)^{−2/(p−1)}` of the blowup family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupProfile {
    #[serde(rename = "T")]
    pub blowup_time: f64,
    pub theta: f64,
    pub p: f64,
}

impl BlowupProfile {
    pub fn new(blowup_time: f64, theta: f64, p: f64) -> Self {
        Self { blowup_time, theta, p }
    }

    /// Value of the profile at `(t, r)`; spatially constant.
    pub fn value(&self, t: f64, _r: f64) -> Result<C64, ProfileError> {
        let remaining = self.remaining(t)?;
        Ok(C64::from_polar(kappa(self.p) * remaining.powf(-scaling_exponent(self.p)), self.theta))
    }

    /// `∂_t u^T_θ` at `(t, r)`.
    pub fn time_derivative(&self, t: f64, _r: f64) -> Result<C64, ProfileError> {
        let s = scaling_exponent(self.p);
        let remaining = self.remaining(t)?;
        Ok(C64::from_polar(s * kappa(self.p) * remaining.powf(-s - 1.0), self.theta))
    }

    fn remaining(&self, t: f64) -> Result<f64, ProfileError> {
        if t < self.blowup_time {
            Ok(self.blowup_time - t)
        } else {
            Err(ProfileError::NotBeforeBlowup {
                t,
                blowup: self.blowup_time,
            })
        }
    }
}

/// `e^{iθ} κ_p (T−t)^{−2/(p−1)}`.
pub fn ode_profile(profile: &BlowupProfile, t: f64, r: f64) -> Result<C64, ProfileError> {
    profile.value(t, r)
}

/// Similarity coordinates `τ = −log(T−t) + log(T−T0)`, `ρ = r/(T−t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityFrame {
    #[serde(rename = "T")]
    pub blowup_time: f64,
    #[serde(rename = "T0")]
    pub initial_time: f64,
}

impl SimilarityFrame {
    pub fn new(blowup_time: f64, initial_time: f64) -> Result<Self, ProfileError> {
        if !(initial_time < blowup_time) {
            return Err(ProfileError::BadFrame {
                t0: initial_time,
                blowup: blowup_time,
            });
        }
        Ok(Self {
            blowup_time,
            initial_time,
        })
    }

    /// `T − T0`, the radius of the lightcone section at `τ = 0`.
    pub fn span(&self) -> f64 {
        self.blowup_time - self.initial_time
    }

    /// `T − t` at similarity time `τ`.
    pub fn remaining(&self, tau: f64) -> f64 {
        self.span() * (-tau).exp()
    }

    pub fn time(&self, tau: f64) -> f64 {
        self.blowup_time - self.remaining(tau)
    }

    pub fn tau(&self, t: f64) -> f64 {
        (self.span() / (self.blowup_time - t)).ln()
    }
}

/// A 4-vector of ρ-independent components `(φ₁, φ₂, ν₁, ν₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeVector(pub [f64; 4]);

impl ModeVector {
    pub fn dot(&self, other: &ModeVector) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Rotation by `alpha` acting on the (real, imaginary) block pairs.
    pub fn rotate(&self, alpha: f64) -> ModeVector {
        let (s, c) = alpha.sin_cos();
        let [a1, a2, b1, b2] = self.0;
        ModeVector([c * a1 - s * b1, c * a2 - s * b2, s * a1 + c * b1, s * a2 + c * b2])
    }
}

/// `Ψ_θ`, the image of `u^T_θ` in similarity coordinates.
pub fn psi_theta(p: f64, theta: f64) -> ModeVector {
    let k = kappa(p);
    let s = scaling_exponent(p);
    let (sin, cos) = theta.sin_cos();
    ModeVector([k * cos, s * k * cos, k * sin, s * k * sin])
}

/// Eigenvalue-0 mode `r_θ` (generated by the phase symmetry).
pub fn mode_r(p: f64, theta: f64) -> ModeVector {
    let k = kappa(p);
    let s = scaling_exponent(p);
    let (sin, cos) = theta.sin_cos();
    ModeVector([-k * sin, -k * sin * s, k * cos, k * cos * s])
}

/// Eigenvalue-1 mode `g_θ` (generated by varying the blowup time).
pub fn mode_g(p: f64, theta: f64) -> ModeVector {
    let ratio = (p + 1.0) / (p - 1.0);
    let (sin, cos) = theta.sin_cos();
    ModeVector([cos, cos * ratio, sin, sin * ratio])
}

/// Radial initial data `(f, g) = (u, ∂_t u)` at the initial time.
pub trait RadialData: Sync {
    /// Largest radius on which the data is defined.
    fn radius(&self) -> f64;
    fn value(&self, r: f64) -> (C64, C64);
}

/// Radial data given by a closure.
pub struct FnData<F> {
    radius: f64,
    f: F,
}

impl<F: Fn(f64) -> (C64, C64) + Sync> FnData<F> {
    pub fn new(radius: f64, f: F) -> Self {
        Self { radius, f }
    }
}

impl<F: Fn(f64) -> (C64, C64) + Sync> RadialData for FnData<F> {
    fn radius(&self) -> f64 {
        self.radius
    }

    fn value(&self, r: f64) -> (C64, C64) {
        (self.f)(r)
    }
}

/// Radial data tabulated on increasing radii, cubic (Catmull–Rom) interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedData {
    pub r: Vec<f64>,
    pub f: Vec<C64>,
    pub g: Vec<C64>,
}

impl TabulatedData {
    fn interp(&self, vals: &[C64], r: f64) -> C64 {
        let n = self.r.len();
        if n == 1 {
            return vals[0];
        }
        let r = r.clamp(self.r[0], self.r[n - 1]);
        let k = match self.r.partition_point(|&x| x <= r) {
            0 => 0,
            i => (i - 1).min(n - 2),
        };
        let h = self.r[k + 1] - self.r[k];
        let x = (r - self.r[k]) / h;
        let slope = |i: usize| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(n - 1);
            (vals[hi] - vals[lo]) / (self.r[hi] - self.r[lo]) * h
        };
        let (y0, y1, m0, m1) = (vals[k], vals[k + 1], slope(k), slope(k + 1));
        let x2 = x * x;
        let x3 = x2 * x;
        y0 * (2.0 * x3 - 3.0 * x2 + 1.0) + m0 * (x3 - 2.0 * x2 + x) + y1 * (-2.0 * x3 + 3.0 * x2) + m1 * (x3 - x2)
    }
}

impl RadialData for TabulatedData {
    fn radius(&self) -> f64 {
        self.r.last().copied().unwrap_or(0.0)
    }

    fn value(&self, r: f64) -> (C64, C64) {
        (self.interp(&self.f, r), self.interp(&self.g, r))
    }
}

/// Data of `u^{T1}_θ` at time `t0`: the exact profile blowing up at `T1`.
pub fn profile_data(p: f64, blowup_time: f64, theta: f64, t0: f64, radius: f64) -> FnData<impl Fn(f64) -> (C64, C64) + Sync> {
    let prof = BlowupProfile::new(blowup_time, theta, p);
    let u = prof.value(t0, 0.0).unwrap_or(C64::new(f64::NAN, f64::NAN));
    let ut = prof.time_derivative(t0, 0.0).unwrap_or(C64::new(f64::NAN, f64::NAN));
    FnData::new(radius, move |_r| (u, ut))
}

/// Maps data `(f, g)` at `t = T0` to the similarity state at `τ = 0`:
/// `φ₁ + iν₁ = (T−T0)^{2/(p−1)} f((T−T0)ρ)`, `φ₂ + iν₂ = (T−T0)^{(p+1)/(p−1)} g((T−T0)ρ)`.
pub fn to_similarity(
    frame: &SimilarityFrame,
    p: f64,
    data: &dyn RadialData,
    grid: &RadialGrid,
) -> Result<FieldState, ProfileError> {
    let span = frame.span();
    if data.radius() < span * (1.0 - 1e-12) {
        return Err(ProfileError::RadiusTooSmall {
            radius: data.radius(),
            needed: span,
        });
    }
    let s = scaling_exponent(p);
    let su = span.powf(s);
    let sv = span.powf(s + 1.0);
    let mut state = FieldState::zeros(0.0, grid.len());
    for (k, &rho) in grid.nodes().iter().enumerate() {
        let (f, g) = data.value((span * rho).min(data.radius()));
        let (a, b) = (su * f, sv * g);
        state.comps[0][k] = a.re;
        state.comps[1][k] = b.re;
        state.comps[2][k] = a.im;
        state.comps[3][k] = b.im;
    }
    Ok(state)
}

/// `(u, ∂_t u)` on the lightcone section `r = (T−t)ρ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LightconeSection {
    pub t: f64,
    /// `T − t`.
    pub radius: f64,
    pub grid: RadialGrid,
    pub u: Vec<C64>,
    pub ut: Vec<C64>,
}

impl LightconeSection {
    pub fn radii(&self) -> Vec<f64> {
        self.grid.nodes().iter().map(|rho| rho * self.radius).collect()
    }
}

/// Inverse of [`to_similarity`] at the state's own time:
/// `u = (T−t)^{−2/(p−1)}(φ₁ + iν₁)`, `∂_t u = (T−t)^{−(p+1)/(p−1)}(φ₂ + iν₂)`.
pub fn from_similarity(
    frame: &SimilarityFrame,
    p: f64,
    state: &FieldState,
    grid: &RadialGrid,
) -> Result<LightconeSection, ProfileError> {
    if state.len() != grid.len() {
        return Err(ProfileError::GridMismatch {
            expected: grid.len(),
            got: state.len(),
        });
    }
    let s = scaling_exponent(p);
    let remaining = frame.remaining(state.tau);
    let su = remaining.powf(-s);
    let sv = remaining.powf(-s - 1.0);
    let [phi1, phi2, nu1, nu2] = &state.comps;
    Ok(LightconeSection {
        t: frame.time(state.tau),
        radius: remaining,
        grid: grid.clone(),
        u: phi1.iter().zip(nu1).map(|(a, b)| su * C64::new(*a, *b)).collect(),
        ut: phi2.iter().zip(nu2).map(|(a, b)| sv * C64::new(*a, *b)).collect(),
    })
}

/// `U(T, v) = J(v)^T + Ψ₀^T − Ψ₀`: the perturbation `v = (f̃, g̃)` of the
/// reference data `u^1_0[T0]`, scaled into the frame of blowup time `T`,
/// plus the shift of the reference profile itself.
pub fn scale_data(
    v: &dyn RadialData,
    frame: &SimilarityFrame,
    p: f64,
    grid: &RadialGrid,
) -> Result<FieldState, ProfileError> {
    let mut state = to_similarity(frame, p, v, grid)?;
    let s = scaling_exponent(p);
    let k = kappa(p);
    let x = frame.span() / (1.0 - frame.initial_time);
    let shift1 = k * x.powf(s) - k;
    let shift2 = s * k * x.powf(s + 1.0) - s * k;
    for val in state.comps[0].iter_mut() {
        *val += shift1;
    }
    for val in state.comps[1].iter_mut() {
        *val += shift2;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kappa_closed_forms() {
        assert_abs_diff_eq!(kappa(3.0), 2f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(kappa(5.0), 0.75f64.powf(0.25), epsilon = 1e-14);
        assert_abs_diff_eq!(kappa(7.0), (4.0f64 / 9.0).powf(1.0 / 6.0), epsilon = 1e-14);
        assert_abs_diff_eq!(kappa(5.0), 0.930_604_859, epsilon = 1e-9);
        assert_abs_diff_eq!(kappa(7.0), 0.873_580_465, epsilon = 1e-9);
    }

    #[test]
    fn c_p_matches_kappa_power_and_s_identity() {
        for (p, want) in [(3.0, 2.0), (5.0, 0.75), (7.0, 4.0 / 9.0)] {
            assert_abs_diff_eq!(c_p(p), want, epsilon = 1e-15);
            assert_abs_diff_eq!(kappa(p).powf(p - 1.0), want, epsilon = 1e-13);
            let s = scaling_exponent(p);
            assert_abs_diff_eq!(c_p(p) - s * (s + 1.0), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn psi_theta_values() {
        let r2 = 2f64.sqrt();
        let v = psi_theta(3.0, 0.0).0;
        for (a, b) in v.iter().zip([r2, r2, 0.0, 0.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        let v = psi_theta(3.0, std::f64::consts::FRAC_PI_2).0;
        for (a, b) in v.iter().zip([0.0, 0.0, r2, r2]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        let k5 = 0.75f64.powf(0.25);
        let v = psi_theta(5.0, 0.0).0;
        for (a, b) in v.iter().zip([k5, 0.5 * k5, 0.0, 0.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn psi_theta_is_block_rotation() {
        for theta in [0.3, -1.2, 2.9] {
            let a = psi_theta(5.0, theta).0;
            let b = psi_theta(5.0, 0.0).rotate(theta).0;
            for i in 0..4 {
                assert_abs_diff_eq!(a[i], b[i], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn modes_at_zero_phase() {
        let r = mode_r(3.0, 0.0).0;
        let r2 = 2f64.sqrt();
        for (a, b) in r.iter().zip([0.0, 0.0, r2, r2]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        assert_eq!(mode_g(3.0, 0.0).0, [1.0, 2.0, 0.0, 0.0]);
    }

    #[test]
    fn modes_are_independent() {
        let (r, g) = (mode_r(5.0, 0.3), mode_g(5.0, 0.3));
        let gram = r.dot(&r) * g.dot(&g) - r.dot(&g).powi(2);
        assert!(gram > 0.1);
        // ρ-independent r_θ satisfies u4 = (2/(p−1)) u3 + ρ u3' with u3' = 0
        let s = scaling_exponent(5.0);
        assert_abs_diff_eq!(r.0[3], s * r.0[2], epsilon = 1e-15);
    }

    #[test]
    fn ode_profile_values() {
        let prof = BlowupProfile::new(1.0, 0.0, 3.0);
        assert_abs_diff_eq!(ode_profile(&prof, 0.0, 0.3).unwrap().re, 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(ode_profile(&prof, 0.75, 0.0).unwrap().re, 4.0 * 2f64.sqrt(), epsilon = 1e-14);
        assert!(ode_profile(&prof, 1.0, 0.0).is_err());
    }

    #[test]
    fn ode_profile_solves_the_unperturbed_ode() {
        // u'' = |u|^{p−1} u for spatially constant u; check with central differences
        for p in [3.0, 5.0, 7.0] {
            let prof = BlowupProfile::new(1.0, 0.4, p);
            let (t, h) = (0.3, 1e-4);
            let u = |t| ode_profile(&prof, t, 0.0).unwrap();
            let utt = (u(t + h) - 2.0 * u(t) + u(t - h)) / (h * h);
            let rhs = u(t) * u(t).norm().powf(p - 1.0);
            assert!((utt - rhs).norm() < 1e-6 * rhs.norm(), "p = {p}");
        }
    }

    #[test]
    fn profile_l2_norm_identity() {
        let grid = RadialGrid::new(32);
        for p in [3.0, 5.0, 7.0] {
            let prof = BlowupProfile::new(1.0, 0.7, p);
            for t in [0.2, 0.6, 0.9] {
                let radius = 1.0 - t;
                let u = prof.value(t, 0.0).unwrap().norm();
                let vals: Vec<f64> = grid.nodes().iter().map(|_| u * u).collect();
                let l2 = (radius.powi(3) * grid.integrate_r2(&vals)).sqrt();
                let exact = kappa(p) / 3f64.sqrt() * radius.powf(1.5 - scaling_exponent(p));
                assert!((l2 - exact).abs() <= 1e-10 * exact);
            }
        }
    }

    #[test]
    fn constant_data_to_similarity() {
        let grid = RadialGrid::new(16);
        let frame = SimilarityFrame::new(1.0, 0.5).unwrap();
        let data = FnData::new(1.0, |_| (C64::new(1.0, 0.0), C64::new(0.0, 0.0)));
        let st = to_similarity(&frame, 3.0, &data, &grid).unwrap();
        assert!(st.comps[0].iter().all(|x| (x - 0.5).abs() < 1e-15));
        assert!(st.comps[1..].iter().flatten().all(|x| *x == 0.0));
    }

    #[test]
    fn exact_profile_data_maps_to_psi() {
        let grid = RadialGrid::new(16);
        let frame = SimilarityFrame::new(1.0, 0.5).unwrap();
        let data = profile_data(5.0, 1.0, 0.0, 0.5, 1.0);
        let st = to_similarity(&frame, 5.0, &data, &grid).unwrap();
        let psi = psi_theta(5.0, 0.0).0;
        for (comp, target) in st.comps.iter().zip(psi) {
            assert!(comp.iter().all(|x| (x - target).abs() < 1e-14));
        }
    }

    #[test]
    fn small_radius_is_rejected() {
        let grid = RadialGrid::new(16);
        let frame = SimilarityFrame::new(1.0, 0.5).unwrap();
        let data = FnData::new(0.3, |_| (C64::new(1.0, 0.0), C64::new(0.0, 0.0)));
        assert!(matches!(
            to_similarity(&frame, 3.0, &data, &grid),
            Err(ProfileError::RadiusTooSmall { .. })
        ));
        assert!(scale_data(&data, &frame, 3.0, &grid).is_err());
    }

    #[test]
    fn similarity_round_trip() {
        let grid = RadialGrid::new(24);
        let frame = SimilarityFrame::new(1.1, 0.4).unwrap();
        let p = 5.0;
        let data = FnData::new(1.0, |r: f64| {
            (
                C64::new(1.0 + (-r * r).exp(), 0.3 * (2.0 * r * r).cos()),
                C64::new(r * r - 0.5, 0.25 * (-3.0 * r * r).exp()),
            )
        });
        let st = to_similarity(&frame, p, &data, &grid).unwrap();
        let sec = from_similarity(&frame, p, &st, &grid).unwrap();
        assert_abs_diff_eq!(sec.t, 0.4, epsilon = 1e-15);
        for (k, r) in sec.radii().iter().enumerate() {
            let (f, g) = data.value(*r);
            assert!((sec.u[k] - f).norm() <= 1e-13 * f.norm());
            assert!((sec.ut[k] - g).norm() <= 1e-13 * g.norm().max(1e-3));
        }
        let tab = TabulatedData {
            r: sec.radii(),
            f: sec.u.clone(),
            g: sec.ut.clone(),
        };
        let back = to_similarity(&frame, p, &tab, &grid).unwrap();
        for c in 0..4 {
            for k in 0..grid.len() {
                let (a, b) = (back.comps[c][k], st.comps[c][k]);
                assert!((a - b).abs() <= 1e-13 * b.abs().max(1e-3));
            }
        }
    }

    #[test]
    fn scale_data_shift_and_linearity() {
        let grid = RadialGrid::new(16);
        let p = 3.0;
        let zero = FnData::new(1.0, |_| (C64::new(0.0, 0.0), C64::new(0.0, 0.0)));
        let at_one = scale_data(&zero, &SimilarityFrame::new(1.0, 0.5).unwrap(), p, &grid).unwrap();
        assert!(at_one.comps.iter().flatten().all(|x| x.abs() < 1e-15));

        let frame = SimilarityFrame::new(1.05, 0.5).unwrap();
        let shifted = scale_data(&zero, &frame, p, &grid).unwrap();
        let k = kappa(p);
        let x: f64 = 0.55 / 0.5;
        assert_abs_diff_eq!(shifted.comps[0][3], k * x - k, epsilon = 1e-14);
        assert_abs_diff_eq!(shifted.comps[1][3], k * x * x - k, epsilon = 1e-14);

        let v = FnData::new(1.0, |r: f64| (C64::new((-r).exp(), r), C64::new(0.2, -r * r)));
        let alpha = 0.37;
        let av = FnData::new(1.0, |r: f64| {
            let (f, g) = v.value(r);
            (alpha * f, alpha * g)
        });
        let sv = scale_data(&v, &frame, p, &grid).unwrap();
        let sav = scale_data(&av, &frame, p, &grid).unwrap();
        for c in 0..4 {
            for kk in 0..grid.len() {
                let lhs = sav.comps[c][kk] - shifted.comps[c][kk];
                let rhs = alpha * (sv.comps[c][kk] - shifted.comps[c][kk]);
                assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-14);
            }
        }
    }
}
