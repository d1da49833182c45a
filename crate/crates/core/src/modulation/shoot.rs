use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{extract_theta, project_modes};
use crate::evolve::{EquationSpec, EvolveError, EvolveOptions, RadialGrid, Silent, SimilaritySystem};
use crate::expr::PerturbationExpr;
use crate::profile::{kappa, to_similarity, ProfileError, RadialData, SimilarityFrame};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShootError {
    #[error("invalid bracket ({lo}, {hi}): {reason}")]
    InvalidBracket { lo: f64, hi: f64, reason: String },
    #[error("no sign change of the unstable coefficient across ({lo}, {hi}): {coeff_lo:e} and {coeff_hi:e}")]
    NoSignChange { lo: f64, hi: f64, coeff_lo: f64, coeff_hi: f64 },
    #[error("evolution failed for T = {blowup_time}: {source}")]
    Evolve {
        blowup_time: f64,
        #[source]
        source: EvolveError,
    },
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

/// Initial data and equation for shooting.
pub struct ShootProblem<'a> {
    pub p: f64,
    pub perturbation: &'a PerturbationExpr,
    pub t0: f64,
    pub data: &'a dyn RadialData,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootOptions {
    /// Similarity time at which the unstable coefficient is read off.
    pub tau_horizon: f64,
    /// Bisection stops once the bracket is this narrow.
    pub tol: f64,
    /// Bound on `|coeff_g|` at the horizon for a converged result.
    pub coeff_tol: f64,
    pub max_iter: usize,
    pub grid_n: usize,
    pub dtau: Option<f64>,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            tau_horizon: 6.0,
            tol: 1e-8,
            coeff_tol: 1e-6,
            max_iter: 60,
            grid_n: 64,
            dtau: None,
        }
    }
}

/// Result of one evolution to the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonEval {
    #[serde(rename = "T")]
    pub blowup_time: f64,
    pub coeff_g: f64,
    pub theta: f64,
    /// `τ` at which the state left the escape radius, if it did.
    pub escaped_at: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootResult {
    #[serde(rename = "T_star")]
    pub t_star: f64,
    pub theta_inf: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
    pub converged: bool,
    pub final_coeff_g: f64,
    pub history: Vec<HorizonEval>,
}

fn evaluate(problem: &ShootProblem<'_>, blowup_time: f64, opts: &ShootOptions) -> Result<HorizonEval, ShootError> {
    let wrap = |source| ShootError::Evolve { blowup_time, source };
    let frame = SimilarityFrame::new(blowup_time, problem.t0)?;
    let grid = RadialGrid::new(opts.grid_n);
    let initial = to_similarity(&frame, problem.p, problem.data, &grid)?;
    let spec = EquationSpec::new(problem.p, frame, problem.perturbation.clone());
    let system = SimilaritySystem::new(spec, grid).map_err(wrap)?;
    let mut evo = EvolveOptions::new(opts.tau_horizon);
    evo.dtau = opts.dtau;
    evo.sample_every = opts.tau_horizon.max(1e-3);
    evo.escape_radius = Some(50.0 * (1.0 + kappa(problem.p)));
    let fin = system.evolve(initial, &evo, &mut Silent).map_err(wrap)?;
    let theta = extract_theta(&fin, system.grid()).unwrap_or(0.0);
    let proj = project_modes(&fin, system.grid(), problem.p, theta);
    Ok(HorizonEval {
        blowup_time,
        coeff_g: proj.coeff_g,
        theta,
        escaped_at: (fin.tau < opts.tau_horizon).then_some(fin.tau),
    })
}

/// Bisection on the sign of the `g_θ` coefficient at the horizon, finished
/// by one secant step inside the final bracket.
pub fn shoot_t(problem: &ShootProblem<'_>, bracket: (f64, f64), opts: &ShootOptions) -> Result<ShootResult, ShootError> {
    let (mut lo, mut hi) = bracket;
    let bad = |reason: &str| ShootError::InvalidBracket {
        lo,
        hi,
        reason: reason.to_string(),
    };
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(bad("need T_lo < T_hi"));
    }
    if !(problem.t0 < lo) {
        return Err(bad("T0 must precede the bracket"));
    }
    if problem.data.radius() < hi - problem.t0 {
        return Err(bad("data radius does not cover the largest lightcone"));
    }
    if !(opts.tol > 0.0 && opts.tau_horizon > 0.0 && opts.grid_n >= 3) {
        return Err(bad("need tol > 0, tau_horizon > 0 and grid_n >= 3"));
    }

    let (a, b) = rayon::join(|| evaluate(problem, lo, opts), || evaluate(problem, hi, opts));
    let (mut e_lo, mut e_hi) = (a?, b?);
    let mut history = vec![e_lo, e_hi];
    if e_lo.coeff_g.signum() == e_hi.coeff_g.signum() || e_lo.coeff_g == 0.0 || e_hi.coeff_g == 0.0 {
        if e_lo.coeff_g == 0.0 || e_hi.coeff_g == 0.0 {
            let hit = if e_lo.coeff_g == 0.0 { e_lo } else { e_hi };
            return Ok(ShootResult {
                t_star: hit.blowup_time,
                theta_inf: hit.theta,
                iterations: 0,
                bracket: (lo, hi),
                converged: true,
                final_coeff_g: 0.0,
                history,
            });
        }
        return Err(ShootError::NoSignChange {
            lo,
            hi,
            coeff_lo: e_lo.coeff_g,
            coeff_hi: e_hi.coeff_g,
        });
    }

    let lo_sign = e_lo.coeff_g.signum();
    let mut iterations = 0;
    while hi - lo > opts.tol && iterations < opts.max_iter {
        let mid = 0.5 * (lo + hi);
        let e = evaluate(problem, mid, opts)?;
        history.push(e);
        iterations += 1;
        if e.coeff_g == 0.0 {
            lo = mid;
            hi = mid;
            e_lo = e;
            e_hi = e;
            break;
        }
        if e.coeff_g.signum() == lo_sign {
            lo = mid;
            e_lo = e;
        } else {
            hi = mid;
            e_hi = e;
        }
    }

    let linear = e_lo.escaped_at.is_none() && e_hi.escaped_at.is_none() && e_hi.coeff_g != e_lo.coeff_g;
    let t_final = if hi == lo {
        lo
    } else if linear {
        let t = lo - e_lo.coeff_g * (hi - lo) / (e_hi.coeff_g - e_lo.coeff_g);
        t.clamp(lo, hi)
    } else {
        0.5 * (lo + hi)
    };
    let fin = if t_final == e_lo.blowup_time {
        e_lo
    } else {
        let e = evaluate(problem, t_final, opts)?;
        history.push(e);
        e
    };
    Ok(ShootResult {
        t_star: t_final,
        theta_inf: fin.theta,
        iterations,
        bracket: (lo, hi),
        converged: hi - lo <= opts.tol && fin.coeff_g.abs() <= opts.coeff_tol,
        final_coeff_g: fin.coeff_g,
        history,
    })
}
