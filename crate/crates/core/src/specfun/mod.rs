//! Special functions and the hypergeometric eigenvalue problem of the
//! linearization about the blowup profile.
//!
//! After separating variables, a mode `u(ρ) = v(ρ)/ρ` with eigenvalue `λ`
//! of a decoupled component with potential coefficient `μ` satisfies
//!
//! ```text
//! −(1−ρ²)v'' + 2(λ+s)ρv' + ((λ+s)(λ+s−1) − μ)v = 0,   s = 2/(p−1),
//! ```
//!
//! which `z = ρ²` turns into the hypergeometric equation with `c = ½`. A
//! regular solution must be a multiple of the solution `f₁` analytic at
//! `z = 1` and vanish at `z = 0`, so eigenvalues are the zeros of the
//! connection coefficient `c₁(λ) = Γ(a+b+1−c)Γ(1−c) / (Γ(a+1−c)Γ(b+1−c))`.
//! `μ = c_p` is the phase (imaginary) component, `μ = p·c_p` the real one.

mod gamma;
mod hyp;
mod spectral;

pub use gamma::{gamma_complex, ln_gamma_complex, rgamma};
pub use hyp::{hyp2f1, HypergeometricParams};
pub use spectral::{
    connection_c1, eigenvalue_scan, reduce_to_hypergeometric, verify_mode_ode, wronskian_check, ModeSolution,
    Potential, Rect, RootResidual, SpectralResult, WronskianFit,
};

use thiserror::Error;

use crate::C64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecialError {
    #[error("gamma function pole at z = {0}")]
    Pole(C64),
    #[error("hypergeometric parameter c = {0} is a non-positive integer")]
    InvalidC(C64),
    #[error("hypergeometric series did not converge within {0} terms")]
    NonConvergence(usize),
    #[error("argument z = {0} is outside the supported domain")]
    Domain(C64),
    #[error("numerator pole in the connection coefficient at lambda = {0}")]
    NumeratorPole(C64),
    #[error("solution {0} is not defined for these parameters: {1}")]
    UndefinedSolution(&'static str, String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// `true` if `z` is within `tol` of a non-positive integer.
pub(crate) fn near_nonpositive_integer(z: C64, tol: f64) -> bool {
    z.im.abs() <= tol && z.re <= tol && (z.re - z.re.round()).abs() <= tol
}
