//! Command-line front end: configuration, experiment execution, persistence
//! and plot-data export.
//!
//! Exit codes: 0 success, 1 validation error, 2 scientific failure
//! (no sign change, instability, failed check), 3 internal error. Every
//! failure also writes one JSON object to standard error.

pub mod config;
pub mod run;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use config::{InitialData, Overrides, RunConfig, OUTPUT_DIR_ENV, SWEEP_AXES};
pub use run::{
    build_data, cmd_shoot, cmd_simulate, cmd_sweep, load_record, load_trajectory, persist, RunOutput, RunRecord, RunStatus,
    SweepMode, TrajectorySummary, FITTED_SERIES, RECORD_FILE, SERIES, TRAJECTORY_FILE,
};

use crate::expr::{decompose_abc, validate_assumption, AssumptionReport, PerturbationExpr, SampleBox};
use crate::profile::scaling_exponent;
use crate::specfun::{eigenvalue_scan, Potential, Rect, SpecialError, SpectralResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Validation,
    Scientific,
    Internal,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Validation => 1,
            ErrorKind::Scientific => 2,
            ErrorKind::Internal => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, thiserror::Error)]
#[error("{kind:?} error{}: {message}", field.as_ref().map(|f| format!(" in `{f}`")).unwrap_or_default())]
pub struct CliError {
    pub kind: ErrorKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    pub message: String,
}

impl CliError {
    pub fn validation(field: &str, message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Validation, field: Some(field.to_string()), message: message.into() }
    }

    pub fn scientific(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Scientific, field: None, message: message.into() }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Internal, field: None, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }

    /// `{"error": {...}, "exit_code": n}` on one line.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self, "exit_code": self.exit_code() }).to_string()
    }
}

#[derive(Debug, Parser)]
#[command(name = "blowup", version, about = "Stable ODE blowup in perturbed radial wave equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve with the blowup time fixed at the bracket midpoint.
    Simulate(RunArgs),
    /// Shoot for the blowup time, then record diagnostics at the result.
    Shoot(RunArgs),
    /// Eigenvalues of a decoupled linearized component.
    Spectrum(SpectrumArgs),
    /// Sample the growth and Lipschitz assumptions on a perturbation.
    Validate(ValidateArgs),
    /// Independent runs over the values of one configuration field.
    Sweep(SweepArgs),
    /// Export one trajectory series of a record as CSV.
    PlotData(PlotArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Preset name or expression.
    #[arg(long)]
    pub perturbation: Option<String>,
    #[arg(long = "T0")]
    pub t0: Option<f64>,
    /// Bracket `lo,hi` for the blowup time.
    #[arg(long = "T-bracket", value_parser = parse_pair)]
    pub t_bracket: Option<(f64, f64)>,
    #[arg(long)]
    pub grid_n: Option<usize>,
    #[arg(long)]
    pub dtau: Option<f64>,
    #[arg(long)]
    pub tau_max: Option<f64>,
    #[arg(long)]
    pub tau_horizon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (default: `$BLOWUP_OUTPUT_DIR`, else `blowup-out`).
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            p: self.p,
            perturbation: self.perturbation.clone(),
            t0: self.t0,
            t_bracket: self.t_bracket,
            grid_n: self.grid_n,
            dtau: self.dtau,
            tau_max: self.tau_max,
            tau_horizon: self.tau_horizon,
            seed: self.seed,
            output_dir: self.output_dir.clone(),
        }
    }

    /// File values, then flags, then the environment default for the output directory.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        cfg.apply(&self.overrides());
        cfg.resolve_output_dir();
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PotentialArg {
    /// `μ = c_p`.
    Nu,
    /// `μ = p·c_p`.
    Phi,
    /// Explicit `--mu`.
    Mu,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long, value_enum, default_value = "nu")]
    pub potential: PotentialArg,
    /// Potential constant, required with `--potential mu`.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Default: `−2/(p−1) + 0.05`.
    #[arg(long, allow_hyphen_values = true)]
    pub re_min: Option<f64>,
    #[arg(long, default_value_t = 3.0)]
    pub re_max: f64,
    /// The region is `|Im λ| ≤ im_max`.
    #[arg(long, default_value_t = 2.0)]
    pub im_max: f64,
    #[arg(long, default_value_t = 0.1)]
    pub grid_step: f64,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Preset name or expression.
    #[arg(long = "expr")]
    pub expression: String,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub q: f64,
    #[arg(long = "M")]
    pub m: f64,
    /// Half-width of the time interval around 1.
    #[arg(long, default_value_t = SampleBox::default().t0)]
    pub box_t: f64,
    #[arg(long, default_value_t = SampleBox::default().r0)]
    pub box_r: f64,
    #[arg(long, default_value_t = SampleBox::default().u_radius)]
    pub box_u: f64,
    #[arg(long, default_value_t = SampleBox::default().v_radius)]
    pub box_v: f64,
    #[arg(long, default_value_t = SampleBox::default().w_radius)]
    pub box_w: f64,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepModeArg {
    Simulate,
    Shoot,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Field to vary: p, T0, grid_n, amplitude, width, seed, tau_horizon, perturbation.
    #[arg(long)]
    pub axis: String,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub values: Vec<String>,
    #[arg(long, value_enum, default_value = "shoot")]
    pub mode: SweepModeArg,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Path to a `record.json`.
    pub record: PathBuf,
    /// Trajectory series name.
    pub series: String,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [a, b] => Ok((
            a.trim().parse().map_err(|_| format!("`{a}` is not a number"))?,
            b.trim().parse().map_err(|_| format!("`{b}` is not a number"))?,
        )),
        _ => Err(format!("expected `lo,hi`, got `{s}`")),
    }
}

/// What a command produced: text for stdout and an optional failure.
struct Outcome {
    stdout: String,
    failure: Option<CliError>,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self { stdout, failure: None }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::internal(e.to_string()))
}

fn record_failure(record: &RunRecord) -> Option<CliError> {
    (!record.status.is_ok()).then(|| {
        CliError::scientific(format!(
            "{}: {}",
            serde_json::to_value(record.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            record.message.clone().unwrap_or_default()
        ))
    })
}

fn run_pipeline(args: &RunArgs, shoot: bool) -> Result<Outcome, CliError> {
    let cfg = args.resolve()?;
    let out = if shoot { cmd_shoot(&cfg)? } else { cmd_simulate(&cfg)? };
    persist(&out, &cfg.output_dir())?;
    Ok(Outcome { stdout: to_json(&out.record)?, failure: record_failure(&out.record) })
}

/// Scan for the spectrum command.
pub fn cmd_spectrum(args: &SpectrumArgs) -> Result<SpectralResult, CliError> {
    if !(args.p.is_finite() && args.p > 1.0) {
        return Err(CliError::validation("p", format!("need p > 1, got {}", args.p)));
    }
    let mu = match (args.potential, args.mu) {
        (PotentialArg::Nu, _) => Potential::Nu.mu(args.p),
        (PotentialArg::Phi, _) => Potential::Phi.mu(args.p),
        (PotentialArg::Mu, Some(mu)) if mu.is_finite() => mu,
        (PotentialArg::Mu, _) => return Err(CliError::validation("mu", "`--potential mu` needs a finite `--mu`")),
    };
    let s = scaling_exponent(args.p);
    let re_min = args.re_min.unwrap_or(-s + 0.05);
    if re_min < -s {
        return Err(CliError::validation("re_min", format!("region must lie in Re lambda >= {}, got {re_min}", -s)));
    }
    let region = Rect::new(re_min, args.re_max, -args.im_max, args.im_max);
    eigenvalue_scan(args.p, mu, region, args.grid_step).map_err(|e| match e {
        SpecialError::InvalidArgument(msg) => CliError::validation("region", msg),
        other => CliError::scientific(other.to_string()),
    })
}

/// Report for the validate command.
pub fn cmd_validate(args: &ValidateArgs) -> Result<AssumptionReport, CliError> {
    let expr = PerturbationExpr::from_preset_or_source(&args.expression)
        .map_err(|e| CliError::validation("expr", e.to_string()))?;
    decompose_abc(&expr).map_err(|e| CliError::validation("expr", e.to_string()))?;
    let region = SampleBox {
        t0: args.box_t,
        r0: args.box_r,
        u_radius: args.box_u,
        v_radius: args.box_v,
        w_radius: args.box_w,
    };
    if !(args.p.is_finite() && args.p >= 3.0) {
        return Err(CliError::validation("p", format!("need p >= 3, got {}", args.p)));
    }
    if !(args.q >= 1.0 && args.q < args.p) {
        return Err(CliError::validation("q", format!("need 1 <= q < p, got q = {}, p = {}", args.q, args.p)));
    }
    if !(args.m.is_finite() && args.m > 0.0) {
        return Err(CliError::validation("M", format!("must be positive, got {}", args.m)));
    }
    validate_assumption(&expr, args.p, args.q, args.m, &region, args.samples, args.seed)
        .map_err(|e| CliError::validation("box", e.to_string()))
}

/// CSV `tau,value[,fitted]` for one series of a stored record.
pub fn cmd_plotdata(record_path: &std::path::Path, series: &str) -> Result<String, CliError> {
    if !SERIES.contains(&series) {
        return Err(CliError::validation(
            "series",
            format!("unknown series `{series}` (available: {})", SERIES.join(", ")),
        ));
    }
    let record = load_record(record_path)?;
    let summary = record
        .trajectory
        .as_ref()
        .ok_or_else(|| CliError::validation("record", "record has no trajectory"))?;
    let dir = record_path.parent().unwrap_or(std::path::Path::new("."));
    let samples = load_trajectory(&dir.join(&summary.file))?;
    let fit = record.fits.get(series).cloned().flatten();
    let mut out = String::from(if fit.is_some() { "tau,value,fitted\n" } else { "tau,value\n" });
    for s in &samples {
        let v = run::series_value(s, series).expect("known series");
        match &fit {
            Some(f) => out.push_str(&format!("{},{},{}\n", s.tau, v, f.predict(s.tau))),
            None => out.push_str(&format!("{},{}\n", s.tau, v)),
        }
    }
    Ok(out)
}

fn sweep(args: &SweepArgs) -> Result<Outcome, CliError> {
    let cfg = args.run.resolve()?;
    let mode = match args.mode {
        SweepModeArg::Simulate => SweepMode::Simulate,
        SweepModeArg::Shoot => SweepMode::Shoot,
    };
    let outs = cmd_sweep(&cfg, &args.axis, &args.values, mode)?;
    for out in &outs {
        persist(out, &out.record.config.output_dir())?;
    }
    let records: Vec<&RunRecord> = outs.iter().map(|o| &o.record).collect();
    let text = to_json(&records)?;
    std::fs::create_dir_all(cfg.output_dir()).map_err(|e| CliError::internal(e.to_string()))?;
    std::fs::write(cfg.output_dir().join("sweep.json"), format!("{text}\n")).map_err(|e| CliError::internal(e.to_string()))?;
    let failed = records.iter().filter(|r| !r.status.is_ok()).count();
    let failure = (failed > 0).then(|| CliError::scientific(format!("{failed} of {} runs failed", records.len())));
    Ok(Outcome { stdout: text, failure })
}

fn dispatch(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Simulate(a) => run_pipeline(a, false),
        Command::Shoot(a) => run_pipeline(a, true),
        Command::Spectrum(a) => Ok(Outcome::ok(to_json(&cmd_spectrum(a)?)?)),
        Command::Validate(a) => {
            let report = cmd_validate(a)?;
            let failure = (!report.passes()).then(|| {
                CliError::scientific(format!("{} assumption violations on {} samples", report.violation_count, report.samples_checked))
            });
            Ok(Outcome { stdout: to_json(&report)?, failure })
        }
        Command::Sweep(a) => sweep(a),
        Command::PlotData(a) => Ok(Outcome::ok(cmd_plotdata(&a.record, &a.series)?)),
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            let _ = write!(stdout, "{e}");
            return 0;
        }
        Err(e) => {
            let err = CliError { kind: ErrorKind::Validation, field: Some("arguments".into()), message: e.to_string() };
            let _ = writeln!(stderr, "{}", err.to_json());
            return err.exit_code();
        }
    };
    let result = std::panic::catch_unwind(|| dispatch(&cli))
        .unwrap_or_else(|_| Err(CliError::internal("unexpected panic")));
    match result {
        Ok(outcome) => {
            if !outcome.stdout.is_empty() {
                let _ = write!(stdout, "{}", outcome.stdout);
                if !outcome.stdout.ends_with('\n') {
                    let _ = writeln!(stdout);
                }
            }
            match outcome.failure {
                Some(err) => {
                    let _ = writeln!(stderr, "{}", err.to_json());
                    err.exit_code()
                }
                None => 0,
            }
        }
        Err(err) => {
            let _ = writeln!(stderr, "{}", err.to_json());
            err.exit_code()
        }
    }
}
