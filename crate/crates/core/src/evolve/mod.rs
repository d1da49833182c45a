//! Time integration.
//!
//! The similarity-coordinate solver evolves `Φ = (φ₁, φ₂, ν₁, ν₂)` on a
//! [`RadialGrid`] with classical RK4:
//!
//! ```text
//! ∂_τ φ₁ = φ₂ − ρ φ₁' − s φ₁
//! ∂_τ φ₂ = φ₁'' + (2/ρ) φ₁' − ρ φ₂' − ((p+1)/(p−1)) φ₂ + φ₁ |ψ|^{p−1} − Re W
//! ```
//!
//! and likewise for `(ν₁, ν₂)` with `Im W`, where `s = 2/(p−1)`,
//! `ψ = φ₁ + iν₁` and `W = (T−t)^{2+s} F(t, r, u, v, w)` evaluated at the
//! physical quantities reconstructed from `Φ`: `u = (T−t)^{−s}ψ₁`,
//! `v = ∂_t u = (T−t)^{−1−s}ψ₂`, `w = ∂_r u = (T−t)^{−1−s}∂_ρψ₁`. At `ρ = 0` the singular term
//! `(2/ρ)f'` is replaced by its limit `2f''`. The domain is the closed
//! backward lightcone, whose boundary `ρ = 1` is characteristic, so no
//! boundary condition is imposed.
//!
//! [`physical`] holds an independent finite-difference integrator in the
//! original `(t, r)` variables used for cross-checks.

mod grid;
pub mod physical;
pub mod snapshot;

pub use grid::RadialGrid;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{ExprError, PerturbationExpr, Point};
use crate::profile::{c_p, scaling_exponent, ModeVector, ProfileError, SimilarityFrame};
use crate::C64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvolveError {
    #[error("perturbation could not be evaluated at tau = {tau}, rho = {rho}: {source}")]
    Perturbation {
        tau: f64,
        rho: f64,
        #[source]
        source: ExprError,
    },
    #[error("numerical instability at tau = {tau}: {detail}")]
    Unstable { tau: f64, detail: String },
    #[error("state has {got} nodes, grid has {expected}")]
    GridMismatch { expected: usize, got: usize },
    #[error("invalid evolution parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

/// Similarity-coordinate state `(φ₁, φ₂, ν₁, ν₂)` at time `τ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub tau: f64,
    pub comps: [Vec<f64>; 4],
}

impl FieldState {
    pub fn zeros(tau: f64, n: usize) -> Self {
        Self {
            tau,
            comps: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        }
    }

    /// The ρ-independent state with components `mode`.
    pub fn constant(tau: f64, n: usize, mode: &ModeVector) -> Self {
        let mut st = Self::zeros(tau, n);
        for c in 0..4 {
            st.comps[c].iter_mut().for_each(|v| *v = mode.0[c]);
        }
        st
    }

    pub fn len(&self) -> usize {
        self.comps[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn psi(&self, k: usize) -> C64 {
        C64::new(self.comps[0][k], self.comps[2][k])
    }

    pub fn sup_norm(&self) -> f64 {
        self.comps.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().flatten().all(|v| v.is_finite())
    }

    /// Largest pointwise deviation from the ρ-independent vector `mode`.
    pub fn sup_deviation(&self, mode: &ModeVector) -> f64 {
        (0..4)
            .flat_map(|c| self.comps[c].iter().map(move |v| (v - mode.0[c]).abs()))
            .fold(0.0, f64::max)
    }

    fn axpy_from(&mut self, base: &FieldState, a: f64, dir: &[Vec<f64>; 4]) {
        for ((out, base), dir) in self.comps.iter_mut().zip(&base.comps).zip(dir) {
            for ((o, b), d) in out.iter_mut().zip(base).zip(dir) {
                *o = b + a * d;
            }
        }
    }
}

/// The equation being integrated.
#[derive(Debug, Clone, PartialEq)]
pub struct EquationSpec {
    pub p: f64,
    pub frame: SimilarityFrame,
    pub perturbation: PerturbationExpr,
    /// When `Some(θ)`, evolve the linearization about `Ψ_θ` instead; the
    /// state then holds the perturbation and the perturbation term `F` must
    /// be zero.
    pub linearized_about: Option<f64>,
}

impl EquationSpec {
    pub fn new(p: f64, frame: SimilarityFrame, perturbation: PerturbationExpr) -> Self {
        Self {
            p,
            frame,
            perturbation,
            linearized_about: None,
        }
    }

    pub fn linearized(p: f64, frame: SimilarityFrame, theta: f64) -> Self {
        Self {
            p,
            frame,
            perturbation: PerturbationExpr::zero(),
            linearized_about: Some(theta),
        }
    }
}

/// Step size, end time and observer cadence for [`SimilaritySystem::evolve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub tau_max: f64,
    /// `None` selects `2.5/n²`.
    pub dtau: Option<f64>,
    /// Spacing in `τ` between observer calls.
    pub sample_every: f64,
    /// Stop early, returning the current state, once the sup norm exceeds
    /// this value.
    pub escape_radius: Option<f64>,
}

impl EvolveOptions {
    pub fn new(tau_max: f64) -> Self {
        Self {
            tau_max,
            dtau: None,
            sample_every: 0.05,
            escape_radius: None,
        }
    }
}

pub fn default_dtau(n: usize) -> f64 {
    2.5 / (n * n) as f64
}

/// Receives the state at the sample times of an evolution.
pub trait Observer {
    fn observe(&mut self, system: &SimilaritySystem, state: &FieldState);
}

impl<F: FnMut(&SimilaritySystem, &FieldState)> Observer for F {
    fn observe(&mut self, system: &SimilaritySystem, state: &FieldState) {
        self(system, state)
    }
}

/// Observer that records nothing.
pub struct Silent;

impl Observer for Silent {
    fn observe(&mut self, _: &SimilaritySystem, _: &FieldState) {}
}

/// Growth factor of the sup norm within a single step treated as blowup of
/// the discretization.
const MAX_STEP_GROWTH: f64 = 1e10;

/// Discretized first-order system on a fixed grid.
#[derive(Debug, Clone)]
pub struct SimilaritySystem {
    spec: EquationSpec,
    grid: RadialGrid,
}

impl SimilaritySystem {
    pub fn new(spec: EquationSpec, grid: RadialGrid) -> Result<Self, EvolveError> {
        if !(spec.p >= 3.0 && spec.p.is_finite()) {
            return Err(EvolveError::InvalidParameter(format!("p = {} must be >= 3", spec.p)));
        }
        if spec.linearized_about.is_some() && !spec.perturbation.is_zero() {
            return Err(EvolveError::InvalidParameter(
                "linearized evolution requires a zero perturbation".into(),
            ));
        }
        Ok(Self { spec, grid })
    }

    pub fn spec(&self) -> &EquationSpec {
        &self.spec
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    fn check(&self, state: &FieldState) -> Result<(), EvolveError> {
        if state.len() != self.grid.len() {
            return Err(EvolveError::GridMismatch {
                expected: self.grid.len(),
                got: state.len(),
            });
        }
        Ok(())
    }

    /// `W = (T−t)^{2+s} F(t, r, u, v, w)` at every node.
    pub fn w_term(&self, state: &FieldState) -> Result<Vec<C64>, EvolveError> {
        self.check(state)?;
        let n = self.grid.len();
        let mut d_phi = vec![0.0; n];
        let mut d_nu = vec![0.0; n];
        self.grid.diff_even(&state.comps[0], &mut d_phi);
        self.grid.diff_even(&state.comps[2], &mut d_nu);
        let mut w = vec![C64::new(0.0, 0.0); n];
        self.fill_w(state, &d_phi, &d_nu, &mut w)?;
        Ok(w)
    }

    fn fill_w(&self, state: &FieldState, d_phi: &[f64], d_nu: &[f64], out: &mut [C64]) -> Result<(), EvolveError> {
        if self.spec.perturbation.is_zero() {
            out.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            return Ok(());
        }
        let s = scaling_exponent(self.spec.p);
        let rem = self.spec.frame.remaining(state.tau);
        let t = self.spec.frame.time(state.tau);
        let su = rem.powf(-s);
        let sv = rem.powf(-s - 1.0);
        let sw = rem.powf(2.0 + s);
        let [phi1, phi2, nu1, nu2] = &state.comps;
        for (k, &rho) in self.grid.nodes().iter().enumerate() {
            let psi1 = C64::new(phi1[k], nu1[k]);
            let psi2 = C64::new(phi2[k], nu2[k]);
            let pt = Point::new(
                t,
                rem * rho,
                su * psi1,
                sv * psi2,
                sv * C64::new(d_phi[k], d_nu[k]),
            );
            let f = self
                .spec
                .perturbation
                .evaluate(&pt)
                .map_err(|source| EvolveError::Perturbation {
                    tau: state.tau,
                    rho,
                    source,
                })?;
            out[k] = sw * f;
        }
        Ok(())
    }

    /// Right-hand side `∂_τ Φ`.
    pub fn rhs(&self, state: &FieldState, out: &mut [Vec<f64>; 4]) -> Result<(), EvolveError> {
        self.check(state)?;
        let n = self.grid.len();
        let p = self.spec.p;
        let s = scaling_exponent(p);
        let ratio = (p + 1.0) / (p - 1.0);
        let rho = self.grid.nodes();
        let mut d1 = [vec![0.0; n], vec![0.0; n]];
        let mut d2 = [vec![0.0; n], vec![0.0; n]];
        let mut dv = [vec![0.0; n], vec![0.0; n]];
        for b in 0..2 {
            self.grid.diff_even(&state.comps[2 * b], &mut d1[b]);
            self.grid.diff2_even(&state.comps[2 * b], &mut d2[b]);
            self.grid.diff_even(&state.comps[2 * b + 1], &mut dv[b]);
        }
        let mut w = vec![C64::new(0.0, 0.0); n];
        self.fill_w(state, &d1[0], &d1[1], &mut w)?;

        let source: Vec<C64> = match self.spec.linearized_about {
            None => (0..n)
                .map(|k| {
                    let psi = state.psi(k);
                    psi * psi.norm_sqr().powf(0.5 * (p - 1.0)) - w[k]
                })
                .collect(),
            Some(theta) => {
                let e = C64::from_polar(1.0, theta);
                let cp = c_p(p);
                (0..n)
                    .map(|k| {
                        let dpsi = state.psi(k);
                        cp * (dpsi + (p - 1.0) * (e.conj() * dpsi).re * e)
                    })
                    .collect()
            }
        };

        for b in 0..2 {
            let a1 = &state.comps[2 * b];
            let a2 = &state.comps[2 * b + 1];
            for k in 0..n {
                let lap = if k == 0 {
                    3.0 * d2[b][k]
                } else {
                    d2[b][k] + 2.0 / rho[k] * d1[b][k]
                };
                let src = if b == 0 { source[k].re } else { source[k].im };
                out[2 * b][k] = a2[k] - rho[k] * d1[b][k] - s * a1[k];
                out[2 * b + 1][k] = lap - rho[k] * dv[b][k] - ratio * a2[k] + src;
            }
        }
        Ok(())
    }

    /// One classical RK4 step of size `dtau`.
    pub fn step(&self, state: &mut FieldState, dtau: f64) -> Result<(), EvolveError> {
        let n = self.grid.len();
        let zero = || [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let (mut k1, mut k2, mut k3, mut k4) = (zero(), zero(), zero(), zero());
        let mut tmp = state.clone();
        let before = state.sup_norm();

        self.rhs(state, &mut k1)?;
        tmp.tau = state.tau + 0.5 * dtau;
        tmp.axpy_from(state, 0.5 * dtau, &k1);
        self.rhs(&tmp, &mut k2)?;
        tmp.axpy_from(state, 0.5 * dtau, &k2);
        self.rhs(&tmp, &mut k3)?;
        tmp.tau = state.tau + dtau;
        tmp.axpy_from(state, dtau, &k3);
        self.rhs(&tmp, &mut k4)?;

        for c in 0..4 {
            for k in 0..n {
                state.comps[c][k] += dtau / 6.0 * (k1[c][k] + 2.0 * k2[c][k] + 2.0 * k3[c][k] + k4[c][k]);
            }
        }
        state.tau += dtau;

        if !state.is_finite() {
            return Err(EvolveError::Unstable {
                tau: state.tau,
                detail: "non-finite value in state".into(),
            });
        }
        let after = state.sup_norm();
        if before > 0.0 && after > MAX_STEP_GROWTH * before {
            return Err(EvolveError::Unstable {
                tau: state.tau,
                detail: format!("sup norm grew from {before:e} to {after:e} in one step"),
            });
        }
        Ok(())
    }

    /// Integrates from `initial.tau` to `opts.tau_max`, calling `observer` at
    /// the start, every `opts.sample_every` and at the end (which is earlier
    /// than `tau_max` if the state leaves `opts.escape_radius`).
    pub fn evolve(
        &self,
        initial: FieldState,
        opts: &EvolveOptions,
        observer: &mut dyn Observer,
    ) -> Result<FieldState, EvolveError> {
        self.check(&initial)?;
        let span = opts.tau_max - initial.tau;
        if !(span >= 0.0 && span.is_finite()) {
            return Err(EvolveError::InvalidParameter(format!(
                "tau_max = {} precedes the initial time {}",
                opts.tau_max, initial.tau
            )));
        }
        let dtau = opts.dtau.unwrap_or_else(|| default_dtau(self.grid.len()));
        if !(dtau > 0.0 && dtau.is_finite()) {
            return Err(EvolveError::InvalidParameter(format!("dtau = {dtau} must be positive")));
        }
        if !(opts.sample_every > 0.0) {
            return Err(EvolveError::InvalidParameter("sample_every must be positive".into()));
        }
        let steps = (span / dtau).ceil() as usize;
        let dt = if steps == 0 { 0.0 } else { span / steps as f64 };
        let every = if steps == 0 {
            1
        } else {
            ((opts.sample_every / dt).round() as usize).max(1)
        };
        let tau0 = initial.tau;
        let mut state = initial;
        observer.observe(self, &state);
        for i in 1..=steps {
            self.step(&mut state, dt)?;
            state.tau = if i == steps { opts.tau_max } else { tau0 + i as f64 * dt };
            let escaped = opts.escape_radius.is_some_and(|r| state.sup_norm() > r);
            if i % every == 0 || i == steps || escaped {
                observer.observe(self, &state);
            }
            if escaped {
                break;
            }
        }
        Ok(state)
    }
}
