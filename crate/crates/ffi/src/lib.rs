//! C ABI over `blowup-core`.
//!
//! Every function returns a [`BlowupStatus`] (or a plain value for total
//! functions). On failure the message is available from
//! [`blowup_last_error_message`] on the same thread. Handles are opaque and
//! must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use blowup_core::evolve::{default_dtau, EquationSpec, EvolveError, EvolveOptions, FieldState, RadialGrid, SimilaritySystem, Silent};
use blowup_core::expr::{ExprError, PerturbationExpr, Point};
use blowup_core::modulation::{extract_theta, project_modes};
use blowup_core::profile::{c_p, kappa, psi_theta, SimilarityFrame};
use blowup_core::specfun::{eigenvalue_scan, gamma_complex, hyp2f1, HypergeometricParams, Rect, SpecialError};
use blowup_core::C64;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlowupStatus {
    Ok = 0,
    InvalidArgument = 1,
    Parse = 2,
    Singular = 3,
    Numerical = 4,
    Instability = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

type FfiResult = Result<(), (BlowupStatus, String)>;

fn guard(f: impl FnOnce() -> FfiResult) -> BlowupStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            BlowupStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside blowup library");
            BlowupStatus::Panic
        }
    }
}

fn invalid(msg: impl Into<String>) -> (BlowupStatus, String) {
    (BlowupStatus::InvalidArgument, msg.into())
}

fn special(e: SpecialError) -> (BlowupStatus, String) {
    let status = match e {
        SpecialError::Pole(_) | SpecialError::InvalidC(_) | SpecialError::NumeratorPole(_) => BlowupStatus::Singular,
        SpecialError::InvalidArgument(_) | SpecialError::Domain(_) | SpecialError::UndefinedSolution(..) => {
            BlowupStatus::InvalidArgument
        }
        SpecialError::NonConvergence(_) => BlowupStatus::Numerical,
    };
    (status, e.to_string())
}

fn expr_err(e: ExprError) -> (BlowupStatus, String) {
    let status = match e {
        ExprError::Syntax { .. } | ExprError::UnknownIdent { .. } | ExprError::UnknownPreset(_) => BlowupStatus::Parse,
        ExprError::Singular(_) => BlowupStatus::Singular,
        ExprError::NonlinearInDerivatives(_) | ExprError::InvalidParameters(_) => BlowupStatus::InvalidArgument,
    };
    (status, e.to_string())
}

fn evolve_err(e: EvolveError) -> (BlowupStatus, String) {
    let status = match e {
        EvolveError::Unstable { .. } => BlowupStatus::Instability,
        EvolveError::Perturbation { .. } => BlowupStatus::Numerical,
        _ => BlowupStatus::InvalidArgument,
    };
    (status, e.to_string())
}

fn out_ref<'a, T>(ptr: *mut T, name: &str) -> Result<&'a mut T, (BlowupStatus, String)> {
    // SAFETY: callers pass either null or a valid, writable pointer.
    unsafe { ptr.as_mut() }.ok_or_else(|| invalid(format!("`{name}` is null")))
}

unsafe fn c_str<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, (BlowupStatus, String)> {
    if ptr.is_null() {
        return Err(invalid(format!("`{name}` is null")));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| invalid(format!("`{name}` is not UTF-8")))
}

fn write_complex(z: C64, re: *mut f64, im: *mut f64) -> FfiResult {
    *out_ref(re, "out_re")? = z.re;
    *out_ref(im, "out_im")? = z.im;
    Ok(())
}

/// Message of the last failed call on this thread (empty after success).
/// Valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn blowup_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// `κ_p = (2(p+1)/(p−1)²)^{1/(p−1)}`; NaN for `p ≤ 1`.
#[no_mangle]
pub extern "C" fn blowup_kappa(p: f64) -> f64 {
    if p > 1.0 {
        kappa(p)
    } else {
        f64::NAN
    }
}

/// `c_p = 2(p+1)/(p−1)²`; NaN for `p ≤ 1`.
#[no_mangle]
pub extern "C" fn blowup_c_p(p: f64) -> f64 {
    if p > 1.0 {
        c_p(p)
    } else {
        f64::NAN
    }
}

/// Complex gamma function.
///
/// # Safety
/// `out_re` and `out_im` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn blowup_gamma(re: f64, im: f64, out_re: *mut f64, out_im: *mut f64) -> BlowupStatus {
    guard(|| write_complex(gamma_complex(C64::new(re, im)).map_err(special)?, out_re, out_im))
}

/// Gauss hypergeometric function `₂F₁(a, b; c; z)`.
///
/// # Safety
/// `out_re` and `out_im` must be valid for writes.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn blowup_hyp2f1(
    a_re: f64,
    a_im: f64,
    b_re: f64,
    b_im: f64,
    c_re: f64,
    c_im: f64,
    z_re: f64,
    z_im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> BlowupStatus {
    guard(|| {
        let params = HypergeometricParams::new(C64::new(a_re, a_im), C64::new(b_re, b_im), C64::new(c_re, c_im));
        write_complex(hyp2f1(&params, C64::new(z_re, z_im)).map_err(special)?, out_re, out_im)
    })
}

/// Parsed perturbation `F(t, r, u, v, w)`.
pub struct BlowupExpr {
    inner: PerturbationExpr,
}

/// Parses an expression or preset name into `*out`.
///
/// # Safety
/// `source` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn blowup_expr_parse(source: *const c_char, out: *mut *mut BlowupExpr) -> BlowupStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = std::ptr::null_mut();
        let text = c_str(source, "source")?;
        let inner = PerturbationExpr::from_preset_or_source(text).map_err(expr_err)?;
        *out = Box::into_raw(Box::new(BlowupExpr { inner }));
        Ok(())
    })
}

/// Evaluates `F` at `(t, r, u, v, w)`; complex arguments are `[re, im]` pairs.
///
/// # Safety
/// `expr` must come from [`blowup_expr_parse`]; `u`, `v`, `w` must point to
/// two readable doubles each and `out` to two writable doubles.
#[no_mangle]
pub unsafe extern "C" fn blowup_expr_eval(
    expr: *const BlowupExpr,
    t: f64,
    r: f64,
    u: *const f64,
    v: *const f64,
    w: *const f64,
    out: *mut f64,
) -> BlowupStatus {
    guard(|| {
        let expr = expr.as_ref().ok_or_else(|| invalid("`expr` is null"))?;
        let pair = |ptr: *const f64, name: &str| {
            if ptr.is_null() {
                Err(invalid(format!("`{name}` is null")))
            } else {
                Ok(C64::new(*ptr, *ptr.add(1)))
            }
        };
        if out.is_null() {
            return Err(invalid("`out` is null"));
        }
        let val = expr.inner.evaluate(&Point::new(t, r, pair(u, "u")?, pair(v, "v")?, pair(w, "w")?)).map_err(expr_err)?;
        *out = val.re;
        *out.add(1) = val.im;
        Ok(())
    })
}

/// Releases an expression handle; null is ignored.
///
/// # Safety
/// `expr` must come from [`blowup_expr_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn blowup_expr_free(expr: *mut BlowupExpr) {
    if !expr.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(expr))));
    }
}

/// Zeros of the connection coefficient in the given rectangle, written as
/// `[re0, im0, re1, im1, ...]`. `*count` receives the number of eigenvalues;
/// when it exceeds `capacity` nothing is written and `BufferTooSmall` is returned.
///
/// # Safety
/// `out` must be valid for `2·capacity` writes (may be null if `capacity` is 0);
/// `count` must be valid for writes.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn blowup_spectrum_scan(
    p: f64,
    mu: f64,
    re_min: f64,
    re_max: f64,
    im_min: f64,
    im_max: f64,
    grid_step: f64,
    out: *mut f64,
    capacity: usize,
    count: *mut usize,
) -> BlowupStatus {
    guard(|| {
        let count = out_ref(count, "count")?;
        let res = eigenvalue_scan(p, mu, Rect::new(re_min, re_max, im_min, im_max), grid_step).map_err(special)?;
        *count = res.eigenvalues.len();
        if res.eigenvalues.len() > capacity {
            return Err((BlowupStatus::BufferTooSmall, format!("need room for {} eigenvalues", res.eigenvalues.len())));
        }
        if !res.eigenvalues.is_empty() && out.is_null() {
            return Err(invalid("`out` is null"));
        }
        for (k, z) in res.eigenvalues.iter().enumerate() {
            *out.add(2 * k) = z.re;
            *out.add(2 * k + 1) = z.im;
        }
        Ok(())
    })
}

/// Similarity-coordinate evolution for one equation and grid.
pub struct BlowupSim {
    system: SimilaritySystem,
    state: FieldState,
}

/// Creates a simulation of `u_tt − Δu + F = |u|^{p−1}u` in the lightcone of
/// `(T, T0)` on `grid_n` nodes, starting from the profile `Ψ_0` at `τ = 0`.
/// `perturbation` is an expression or preset name; null means `F = 0`.
///
/// # Safety
/// `perturbation` must be null or NUL-terminated; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn blowup_sim_new(
    p: f64,
    blowup_time: f64,
    initial_time: f64,
    perturbation: *const c_char,
    grid_n: usize,
    out: *mut *mut BlowupSim,
) -> BlowupStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = std::ptr::null_mut();
        if grid_n < 4 {
            return Err(invalid(format!("grid_n = {grid_n} is too small")));
        }
        let pert = if perturbation.is_null() {
            PerturbationExpr::zero()
        } else {
            PerturbationExpr::from_preset_or_source(c_str(perturbation, "perturbation")?).map_err(expr_err)?
        };
        let frame = SimilarityFrame::new(blowup_time, initial_time).map_err(|e| invalid(e.to_string()))?;
        let system = SimilaritySystem::new(EquationSpec::new(p, frame, pert), RadialGrid::new(grid_n)).map_err(evolve_err)?;
        let state = FieldState::constant(0.0, grid_n, &psi_theta(p, 0.0));
        *out = Box::into_raw(Box::new(BlowupSim { system, state }));
        Ok(())
    })
}

unsafe fn sim_ref<'a>(sim: *const BlowupSim) -> Result<&'a BlowupSim, (BlowupStatus, String)> {
    sim.as_ref().ok_or_else(|| invalid("`sim` is null"))
}

unsafe fn sim_mut<'a>(sim: *mut BlowupSim) -> Result<&'a mut BlowupSim, (BlowupStatus, String)> {
    sim.as_mut().ok_or_else(|| invalid("`sim` is null"))
}

/// Number of radial nodes; 0 for a null handle.
///
/// # Safety
/// `sim` must be null or come from [`blowup_sim_new`].
#[no_mangle]
pub unsafe extern "C" fn blowup_sim_len(sim: *const BlowupSim) -> usize {
    sim.as_ref().map_or(0, |s| s.state.len())
}

/// Current similarity time; NaN for a null handle.
///
/// # Safety
/// `sim` must be null or come from [`blowup_sim_new`].
#[no_mangle]
pub unsafe extern "C" fn blowup_sim_tau(sim: *const BlowupSim) -> f64 {
    sim.as_ref().map_or(f64::NAN, |s| s.state.tau)
}

/// Copies the `len` radial nodes into `out`.
///
/// # Safety
/// `sim` must come from [`blowup_sim_new`]; `out` must be valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn blowup_sim_nodes(sim: *const BlowupSim, out: *mut f64, capacity: usize) -> BlowupStatus {
    guard(|| {
        let sim = sim_ref(sim)?;
        copy_out(sim.system.grid().nodes(), out, capacity)
    })
}

unsafe fn copy_out(src: &[f64], out: *mut f64, capacity: usize) -> FfiResult {
    if src.len() > capacity {
        return Err((BlowupStatus::BufferTooSmall, format!("need {} doubles, have {capacity}", src.len())));
    }
    if out.is_null() {
        return Err(invalid("`out` is null"));
    }
    std::ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

/// Replaces the state. `comps` holds `4·len` doubles, component-major:
/// `φ₁, φ₂, ν₁, ν₂` (real and imaginary parts of `ψ` and `∂_τψ`-type fields).
///
/// # Safety
/// `sim` must come from [`blowup_sim_new`]; `comps` must be valid for `n` reads.
#[no_mangle]
pub unsafe extern "C" fn blowup_sim_set_state(sim: *mut BlowupSim, tau: f64, comps: *const f64, n: usize) -> BlowupStatus {
    guard(|| {
        let sim = sim_mut(sim)?;
        let len = sim.state.len();
        if n != 4 * len {
            return Err(invalid(format!("expected {} values, got {n}", 4 * len)));
        }
        if comps.is_null() {
            return Err(invalid("`comps` is null"));
        }
        if !tau.is_finite() {
            return Err(invalid("`tau` must be finite"));
        }
        let src = std::slice::from_raw_parts(comps, n);
        if src.iter().any(|x| !x.is_finite()) {
            return Err(invalid("state contains non-finite values"));
        }
        sim.state.tau = tau;
        for (c, chunk) in sim.state.comps.iter_mut().zip(src.chunks_exact(len)) {
            c.copy_from_slice(chunk);
        }
        Ok(())
    })
}

/// Copies the state (same layout as [`blowup_sim_set_state`]) into `out`.
///
/// # Safety
/// `sim` must come from [`blowup_sim_new`]; `out` must be valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn blowup_sim_state(sim: *const BlowupSim, out: *mut f64, capacity: usize) -> BlowupStatus {
    guard(|| {
        let sim = sim_ref(sim)?;
        let flat: Vec<f64> = sim.state.comps.iter().flatten().copied().collect();
        copy_out(&flat, out, capacity)
    })
}

/// Integrates to `tau_target` with step `dtau` (`dtau ≤ 0` selects the default).
///
/// # Safety
/// `sim` must come from [`blowup_sim_new`].
#[no_mangle]
pub unsafe extern "C" fn blowup_sim_advance(sim: *mut BlowupSim, tau_target: f64, dtau: f64) -> BlowupStatus {
    guard(|| {
        let sim = sim_mut(sim)?;
        if !(tau_target.is_finite() && tau_target >= sim.state.tau) {
            return Err(invalid(format!("tau_target = {tau_target} precedes tau = {}", sim.state.tau)));
        }
        let mut opts = EvolveOptions::new(tau_target);
        opts.dtau = Some(if dtau > 0.0 { dtau } else { default_dtau(sim.state.len()) });
        opts.sample_every = f64::INFINITY;
        let next = sim.system.evolve(sim.state.clone(), &opts, &mut Silent).map_err(evolve_err)?;
        sim.state = next;
        Ok(())
    })
}

/// Phase of the state and its coefficients along `r_θ`, `g_θ` relative to `Ψ_θ`.
///
/// # Safety
/// `sim` must come from [`blowup_sim_new`]; the outputs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn blowup_sim_project(
    sim: *const BlowupSim,
    theta: *mut f64,
    coeff_r: *mut f64,
    coeff_g: *mut f64,
    remainder_norm: *mut f64,
) -> BlowupStatus {
    guard(|| {
        let sim = sim_ref(sim)?;
        let grid = sim.system.grid();
        let th = extract_theta(&sim.state, grid).map_err(|e| (BlowupStatus::Numerical, e.to_string()))?;
        let proj = project_modes(&sim.state, grid, sim.system.spec().p, th);
        *out_ref(theta, "theta")? = th;
        *out_ref(coeff_r, "coeff_r")? = proj.coeff_r;
        *out_ref(coeff_g, "coeff_g")? = proj.coeff_g;
        *out_ref(remainder_norm, "remainder_norm")? = proj.remainder_norm;
        Ok(())
    })
}

/// Releases a simulation handle; null is ignored.
///
/// # Safety
/// `sim` must come from [`blowup_sim_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn blowup_sim_free(sim: *mut BlowupSim) {
    if !sim.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(sim))));
    }
}
