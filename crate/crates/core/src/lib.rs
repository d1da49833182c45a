//! Numerical laboratory for stable ODE-type blowup of perturbed radial
//! semilinear wave equations
//!
//! ```text
//! (∂²_t − ∂²_r − (2/r)∂_r) u + F(t, r, u, ∂_t u, ∂_r u) = |u|^{p−1} u
//! ```
//!
//! posed in the backward lightcone of the blowup point. The crate is split
//! into:
//!
//! * [`expr`]: the perturbation DSL (parse, evaluate, A/B/C split, sampled
//!   growth/Lipschitz checks),
//! * [`profile`]: closed-form blowup family, modes and coordinate maps,
//! * [`specfun`]: complex Γ, ₂F₁ and the hypergeometric eigenvalue problem,
//! * [`evolve`]: pseudospectral similarity-coordinate evolution and a
//!   finite-difference physical-coordinate integrator,
//! * [`modulation`]: phase extraction, unstable-mode projections, shooting on
//!   the blowup time and decay-rate fits,
//! * [`cli`]: configuration, experiment drivers and persistence behind the
//!   `blowup` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod evolve;
pub mod expr;
pub mod modulation;
pub mod profile;
pub mod rng;
pub mod specfun;

pub use num_complex::Complex64 as C64;
