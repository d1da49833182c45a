//! Simulation, shooting and sweep pipelines with persistence.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{InitialData, RunConfig};
use super::CliError;
use crate::evolve::{EquationSpec, EvolveError, EvolveOptions, RadialGrid, SimilaritySystem};
use crate::expr::PerturbationExpr;
use crate::modulation::{fit_decay, shoot_t, DecayFit, Diagnostics, ShootError, ShootOptions, ShootProblem, ShootResult, TrajectorySample};
use crate::profile::{kappa, profile_data, to_similarity, RadialData, SimilarityFrame, TabulatedData};
use crate::rng;
use crate::C64;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const RECORD_FILE: &str = "record.json";
pub const TRAJECTORY_FILE: &str = "trajectory.jsonl";

/// Series of a trajectory that can be exported and fitted.
pub const SERIES: [&str; 9] = ["theta_est", "coeff_r", "coeff_g", "remainder_norm", "deviation", "w_norm", "n0", "n1", "n2"];
/// Series whose decay rate is fitted into a record.
pub const FITTED_SERIES: [&str; 5] = ["n0", "n1", "n2", "remainder_norm", "w_norm"];

pub fn series_value(s: &TrajectorySample, name: &str) -> Option<f64> {
    Some(match name {
        "theta_est" => s.theta_est,
        "coeff_r" => s.coeff_r,
        "coeff_g" => s.coeff_g,
        "remainder_norm" => s.remainder_norm,
        "deviation" => s.deviation,
        "w_norm" => s.w_norm,
        "n0" => s.n0,
        "n1" => s.n1,
        "n2" => s.n2,
        _ => return None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    /// Shooting ran out of iterations or missed the coefficient tolerance.
    NotConverged,
    /// The unstable coefficient has the same sign at both bracket ends.
    NoSignChange,
    /// The state left the escape radius before the final time.
    Escaped,
    /// Non-finite values or runaway growth.
    Instability,
}

impl RunStatus {
    pub fn is_ok(self) -> bool {
        self == RunStatus::Ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub samples: usize,
    pub final_tau: f64,
    /// Trajectory file name, relative to the record.
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub config_hash: String,
    pub status: RunStatus,
    /// Human-readable cause when `status` is not `ok`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    /// Blowup time of the similarity frame used for the diagnostics run.
    #[serde(rename = "T_used", default, skip_serializing_if = "Option::is_none")]
    pub blowup_time_used: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shoot: Option<ShootResult>,
    /// Decay fits per series; `null` where the fit was impossible.
    pub fits: BTreeMap<String, Option<DecayFit>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<TrajectorySummary>,
    /// `max_τ sup |Φ − Ψ_θ|` over the recorded samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stationarity_deviation: Option<f64>,
    /// Excluded from reproducibility comparisons.
    pub wall_time_s: f64,
}

impl RunRecord {
    fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            version: ARTIFACT_VERSION.to_string(),
            command: command.to_string(),
            config: config.clone(),
            config_hash: config.hash(),
            status: RunStatus::Ok,
            message: None,
            blowup_time_used: None,
            shoot: None,
            fits: BTreeMap::new(),
            trajectory: None,
            stationarity_deviation: None,
            wall_time_s: 0.0,
        }
    }

    /// JSON with `wall_time_s` zeroed, for byte comparisons between runs.
    pub fn reproducible_json(&self) -> String {
        let mut copy = self.clone();
        copy.wall_time_s = 0.0;
        serde_json::to_string_pretty(&copy).expect("record serializes")
    }
}

/// Initial data of a configuration.
pub fn build_data(cfg: &RunConfig) -> Result<Box<dyn RadialData>, CliError> {
    let radius = cfg.t_bracket.1 - cfg.t0;
    let (p, t0) = (cfg.p, cfg.t0);
    Ok(match &cfg.initial_data {
        InitialData::ExactProfile { base_t, theta } => Box::new(profile_data(p, *base_t, *theta, t0, radius)),
        InitialData::ShiftedProfile { blowup_time, theta } => Box::new(profile_data(p, *blowup_time, *theta, t0, radius)),
        InitialData::ProfilePlusBump { amplitude, width, base_t, theta, random_phase } => {
            let phase = if *random_phase {
                2.0 * std::f64::consts::PI * rng::stream(cfg.seed, rng::streams::BUMP_PHASE).random::<f64>()
            } else {
                0.0
            };
            let base = profile_data(p, *base_t, *theta, t0, radius);
            let bump = C64::from_polar(*amplitude, phase);
            let w2 = width * width;
            Box::new(crate::profile::FnData::new(radius, move |r: f64| {
                let (u, ut) = base.value(r);
                (u + bump * (-(r * r) / w2).exp(), ut)
            }))
        }
        InitialData::File { path } => {
            let table = read_table(path)?;
            if table.radius() < radius {
                return Err(CliError::validation(
                    "initial_data.path",
                    format!("table covers r <= {} but the lightcone needs r <= {radius}", table.radius()),
                ));
            }
            Box::new(table)
        }
    })
}

fn read_table(path: &Path) -> Result<TabulatedData, CliError> {
    let field = "initial_data.path";
    let file = File::open(path).map_err(|e| CliError::validation(field, format!("cannot open {}: {e}", path.display())))?;
    let mut table = TabulatedData { r: vec![], f: vec![], g: vec![] };
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::validation(field, e.to_string()))?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let cols: Result<Vec<f64>, _> = body.split_whitespace().map(str::parse).collect();
        let cols = match cols {
            Ok(c) if c.len() == 5 && c.iter().all(|x| x.is_finite()) => c,
            _ => return Err(CliError::validation(field, format!("line {}: expected 5 finite numbers", lineno + 1))),
        };
        if table.r.last().is_some_and(|&last| cols[0] <= last) {
            return Err(CliError::validation(field, format!("line {}: radii must increase", lineno + 1)));
        }
        table.r.push(cols[0]);
        table.f.push(C64::new(cols[1], cols[2]));
        table.g.push(C64::new(cols[3], cols[4]));
    }
    if table.r.len() < 2 || table.r[0] != 0.0 {
        return Err(CliError::validation(field, "need at least two rows starting at r = 0"));
    }
    Ok(table)
}

fn perturbation(cfg: &RunConfig) -> Result<PerturbationExpr, CliError> {
    PerturbationExpr::from_preset_or_source(&cfg.perturbation).map_err(|e| CliError::validation("perturbation", e.to_string()))
}

fn escape_radius(p: f64) -> f64 {
    50.0 * (1.0 + kappa(p))
}

struct Trajectory {
    samples: Vec<TrajectorySample>,
    final_tau: f64,
    failure: Option<(RunStatus, String)>,
}

/// Evolves the configured data in the frame of `blowup_time` to `tau_max`.
fn diagnose(cfg: &RunConfig, data: &dyn RadialData, blowup_time: f64, theta_inf: Option<f64>) -> Result<Trajectory, CliError> {
    let pert = perturbation(cfg)?;
    let frame = SimilarityFrame::new(blowup_time, cfg.t0).map_err(|e| CliError::validation("T0", e.to_string()))?;
    let grid = RadialGrid::new(cfg.grid_n);
    let initial = to_similarity(&frame, cfg.p, data, &grid).map_err(|e| CliError::validation("initial_data", e.to_string()))?;
    let system = SimilaritySystem::new(EquationSpec::new(cfg.p, frame, pert), grid.clone())
        .map_err(|e| CliError::validation("config", e.to_string()))?;
    let mut opts = EvolveOptions::new(cfg.tau_max);
    opts.dtau = cfg.dtau;
    opts.sample_every = cfg.sample_every;
    opts.escape_radius = Some(escape_radius(cfg.p));
    let mut diag = Diagnostics::new(cfg.p, frame);
    if let Some(theta) = cfg.initial_data.theta() {
        diag = diag.with_reference_theta(theta);
    }
    let (final_tau, mut failure) = match system.evolve(initial, &opts, &mut diag) {
        Ok(state) if state.tau < cfg.tau_max => {
            (state.tau, Some((RunStatus::Escaped, format!("left the escape radius at tau = {}", state.tau))))
        }
        Ok(state) => (state.tau, None),
        Err(e @ EvolveError::Unstable { .. }) => {
            (diag.samples().last().map_or(0.0, |s| s.tau), Some((RunStatus::Instability, e.to_string())))
        }
        Err(e @ EvolveError::Perturbation { .. }) => {
            (diag.samples().last().map_or(0.0, |s| s.tau), Some((RunStatus::Instability, e.to_string())))
        }
        Err(e) => return Err(CliError::internal(e.to_string())),
    };
    let samples = match diag.finish(&grid, theta_inf) {
        Ok(s) => s,
        Err(e) => {
            failure.get_or_insert((RunStatus::Instability, e.to_string()));
            Vec::new()
        }
    };
    Ok(Trajectory { samples, final_tau, failure })
}

fn fits(cfg: &RunConfig, samples: &[TrajectorySample], final_tau: f64) -> BTreeMap<String, Option<DecayFit>> {
    let window = (cfg.fit_window.0, cfg.fit_window.1.min(final_tau));
    FITTED_SERIES
        .iter()
        .map(|&name| {
            let series: Vec<(f64, f64)> =
                samples.iter().map(|s| (s.tau, series_value(s, name).expect("known series"))).collect();
            (name.to_string(), fit_decay(&series, window).ok())
        })
        .collect()
}

fn fill_trajectory(record: &mut RunRecord, cfg: &RunConfig, traj: Trajectory) -> Vec<TrajectorySample> {
    record.fits = fits(cfg, &traj.samples, traj.final_tau);
    record.stationarity_deviation = traj.samples.iter().map(|s| s.deviation).reduce(f64::max);
    record.trajectory = Some(TrajectorySummary {
        samples: traj.samples.len(),
        final_tau: traj.final_tau,
        file: TRAJECTORY_FILE.to_string(),
    });
    if let Some((status, msg)) = traj.failure {
        record.status = status;
        record.message = Some(msg);
    }
    traj.samples
}

/// Output of one pipeline: the record and the sampled trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub record: RunRecord,
    pub samples: Vec<TrajectorySample>,
}

fn finish(mut record: RunRecord, samples: Vec<TrajectorySample>, start: Instant) -> RunOutput {
    record.wall_time_s = start.elapsed().as_secs_f64();
    RunOutput { record, samples }
}

/// Evolution with the blowup time fixed at the bracket midpoint.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let start = Instant::now();
    cfg.validate()?;
    let data = build_data(cfg)?;
    let blowup_time = 0.5 * (cfg.t_bracket.0 + cfg.t_bracket.1);
    let mut record = RunRecord::new("simulate", cfg);
    record.blowup_time_used = Some(blowup_time);
    let traj = diagnose(cfg, data.as_ref(), blowup_time, None)?;
    let samples = fill_trajectory(&mut record, cfg, traj);
    Ok(finish(record, samples, start))
}

/// Shooting for the blowup time, then a diagnostics run at the result.
pub fn cmd_shoot(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let start = Instant::now();
    cfg.validate()?;
    let data = build_data(cfg)?;
    let pert = perturbation(cfg)?;
    let mut record = RunRecord::new("shoot", cfg);
    let mut samples = Vec::new();
    let problem = ShootProblem { p: cfg.p, perturbation: &pert, t0: cfg.t0, data: data.as_ref() };
    let opts = ShootOptions {
        tau_horizon: cfg.tau_horizon,
        tol: cfg.shoot_tol,
        grid_n: cfg.grid_n,
        dtau: cfg.dtau,
        ..ShootOptions::default()
    };
    match shoot_t(&problem, cfg.t_bracket, &opts) {
        Ok(res) => {
            if !res.converged {
                record.status = RunStatus::NotConverged;
                record.message = Some(format!(
                    "bracket width {:e}, |coeff_g| = {:e} after {} iterations",
                    res.bracket.1 - res.bracket.0,
                    res.final_coeff_g.abs(),
                    res.iterations
                ));
            }
            record.blowup_time_used = Some(res.t_star);
            let traj = diagnose(cfg, data.as_ref(), res.t_star, Some(res.theta_inf))?;
            let prior = record.status;
            samples = fill_trajectory(&mut record, cfg, traj);
            if !prior.is_ok() {
                record.status = prior;
            }
            record.shoot = Some(res);
        }
        Err(e @ ShootError::NoSignChange { .. }) => {
            record.status = RunStatus::NoSignChange;
            record.message = Some(e.to_string());
        }
        Err(e @ ShootError::Evolve { .. }) => {
            record.status = RunStatus::Instability;
            record.message = Some(e.to_string());
        }
        Err(e @ ShootError::InvalidBracket { .. }) => return Err(CliError::validation("T_bracket", e.to_string())),
        Err(e @ ShootError::Profile(_)) => return Err(CliError::validation("T0", e.to_string())),
    }
    Ok(finish(record, samples, start))
}

/// Writes `record.json` and `trajectory.jsonl` into `dir`.
pub fn persist(out: &RunOutput, dir: &Path) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::internal(format!("cannot create {}: {e}", dir.display())))?;
    let io = |e: std::io::Error| CliError::internal(e.to_string());
    if out.record.trajectory.is_some() {
        let mut w = BufWriter::new(File::create(dir.join(TRAJECTORY_FILE)).map_err(io)?);
        for s in &out.samples {
            serde_json::to_writer(&mut w, s).map_err(|e| CliError::internal(e.to_string()))?;
            w.write_all(b"\n").map_err(io)?;
        }
        w.flush().map_err(io)?;
    }
    let path = dir.join(RECORD_FILE);
    let text = serde_json::to_string_pretty(&out.record).map_err(|e| CliError::internal(e.to_string()))?;
    fs::write(&path, text + "\n").map_err(io)?;
    Ok(path)
}

pub fn load_record(path: &Path) -> Result<RunRecord, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::validation("record", format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::validation("record", e.to_string()))
}

pub fn load_trajectory(path: &Path) -> Result<Vec<TrajectorySample>, CliError> {
    let file =
        File::open(path).map_err(|e| CliError::validation("record", format!("cannot open {}: {e}", path.display())))?;
    BufReader::new(file)
        .lines()
        .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .map(|l| {
            let l = l.map_err(|e| CliError::internal(e.to_string()))?;
            serde_json::from_str(&l).map_err(|e| CliError::validation("record", e.to_string()))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    Simulate,
    Shoot,
}

/// Independent runs over `values` of `axis`; run `i` uses seed `seed + i`.
/// Records come back in the order of `values`.
pub fn cmd_sweep(template: &RunConfig, axis: &str, values: &[String], mode: SweepMode) -> Result<Vec<RunOutput>, CliError> {
    if values.is_empty() {
        return Err(CliError::validation("values", "sweep needs at least one value"));
    }
    let configs = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut cfg = template.clone();
            cfg.seed = template.seed.wrapping_add(i as u64);
            cfg.set_axis(axis, v)?;
            cfg.output_dir = Some(template.output_dir().join(format!("run-{i:03}")));
            cfg.validate()?;
            Ok(cfg)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    configs
        .par_iter()
        .map(|cfg| match mode {
            SweepMode::Simulate => cmd_simulate(cfg),
            SweepMode::Shoot => cmd_shoot(cfg),
        })
        .collect()
}
