//! Run configuration: TOML schema, validation, overrides and hashing.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CliError;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "BLOWUP_OUTPUT_DIR";
const FALLBACK_OUTPUT_DIR: &str = "blowup-out";

/// Initial data at `t = T0`.
///
/// Profile-based kinds are built from `u^{base_T}_θ`, with `θ = theta` (default 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// `u^{base_T}_0` itself.
    ExactProfile {
        #[serde(default = "one", rename = "base_T")]
        base_t: f64,
        #[serde(default)]
        theta: f64,
    },
    /// `u^{T}_θ`, a profile blowing up at a different time.
    ShiftedProfile {
        #[serde(rename = "T")]
        blowup_time: f64,
        #[serde(default)]
        theta: f64,
    },
    /// `u^{base_T}_θ + amplitude·e^{iφ}·exp(−r²/width²)` in position, `∂_t u^{base_T}_θ` in velocity.
    /// `φ = 0` unless `random_phase`, in which case it is drawn from the run seed.
    ProfilePlusBump {
        amplitude: f64,
        width: f64,
        #[serde(default = "one", rename = "base_T")]
        base_t: f64,
        #[serde(default)]
        theta: f64,
        #[serde(default)]
        random_phase: bool,
    },
    /// Whitespace-separated table with columns `r Re(u) Im(u) Re(u_t) Im(u_t)`;
    /// `#` starts a comment.
    File { path: PathBuf },
}

fn one() -> f64 {
    1.0
}

impl InitialData {
    /// Phase of the underlying profile, if the data is profile-based.
    pub fn theta(&self) -> Option<f64> {
        match self {
            InitialData::ExactProfile { theta, .. }
            | InitialData::ShiftedProfile { theta, .. }
            | InitialData::ProfilePlusBump { theta, .. } => Some(*theta),
            InitialData::File { .. } => None,
        }
    }
}

/// Complete description of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub p: f64,
    /// Preset name or expression source.
    pub perturbation: String,
    #[serde(rename = "T0")]
    pub t0: f64,
    #[serde(rename = "T_bracket")]
    pub t_bracket: (f64, f64),
    pub grid_n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dtau: Option<f64>,
    pub tau_max: f64,
    pub tau_horizon: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub sample_every: f64,
    pub shoot_tol: f64,
    /// Window on which the decay rates are fitted (clipped to the run).
    pub fit_window: (f64, f64),
    pub initial_data: InitialData,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            p: 7.0,
            perturbation: "zero".into(),
            t0: 0.5,
            t_bracket: (0.9, 1.1),
            grid_n: 64,
            dtau: None,
            tau_max: 6.0,
            tau_horizon: 6.0,
            seed: 0,
            output_dir: None,
            sample_every: 0.05,
            shoot_tol: 1e-8,
            fit_window: (2.0, 6.0),
            initial_data: InitialData::ExactProfile { base_t: 1.0, theta: 0.0 },
        }
    }
}

/// File form: every field optional, missing ones take defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialConfig {
    p: Option<f64>,
    perturbation: Option<String>,
    #[serde(rename = "T0")]
    t0: Option<f64>,
    #[serde(rename = "T_bracket")]
    t_bracket: Option<(f64, f64)>,
    grid_n: Option<usize>,
    dtau: Option<f64>,
    tau_max: Option<f64>,
    tau_horizon: Option<f64>,
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    sample_every: Option<f64>,
    shoot_tol: Option<f64>,
    fit_window: Option<(f64, f64)>,
    initial_data: Option<InitialData>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub p: Option<f64>,
    pub perturbation: Option<String>,
    pub t0: Option<f64>,
    pub t_bracket: Option<(f64, f64)>,
    pub grid_n: Option<usize>,
    pub dtau: Option<f64>,
    pub tau_max: Option<f64>,
    pub tau_horizon: Option<f64>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    /// Parses TOML text; relative `file` paths resolve against `base_dir`.
    pub fn from_toml(text: &str, base_dir: Option<&Path>) -> Result<Self, CliError> {
        let part: PartialConfig = toml::from_str(text).map_err(|e| CliError::validation("config", e.message()))?;
        let d = Self::default();
        let mut cfg = Self {
            p: part.p.unwrap_or(d.p),
            perturbation: part.perturbation.unwrap_or(d.perturbation),
            t0: part.t0.unwrap_or(d.t0),
            t_bracket: part.t_bracket.unwrap_or(d.t_bracket),
            grid_n: part.grid_n.unwrap_or(d.grid_n),
            dtau: part.dtau,
            tau_max: part.tau_max.unwrap_or(d.tau_max),
            tau_horizon: part.tau_horizon.unwrap_or(d.tau_horizon),
            seed: part.seed.unwrap_or(d.seed),
            output_dir: part.output_dir,
            sample_every: part.sample_every.unwrap_or(d.sample_every),
            shoot_tol: part.shoot_tol.unwrap_or(d.shoot_tol),
            fit_window: part.fit_window.unwrap_or(d.fit_window),
            initial_data: part.initial_data.unwrap_or(d.initial_data),
        };
        if let (InitialData::File { path }, Some(base)) = (&mut cfg.initial_data, base_dir) {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text, path.parent())
    }

    pub fn apply(&mut self, o: &Overrides) {
        macro_rules! set {
            ($($f:ident),*) => {$(if let Some(v) = &o.$f { self.$f = v.clone(); })*};
        }
        set!(p, perturbation, t0, t_bracket, grid_n, tau_max, tau_horizon, seed);
        if o.dtau.is_some() {
            self.dtau = o.dtau;
        }
        if o.output_dir.is_some() {
            self.output_dir = o.output_dir.clone();
        }
    }

    /// Fills `output_dir` from the environment (or a fixed fallback) when unset.
    pub fn resolve_output_dir(&mut self) {
        if self.output_dir.is_none() {
            let dir = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from);
            self.output_dir = Some(dir.unwrap_or_else(|| PathBuf::from(FALLBACK_OUTPUT_DIR)));
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from(FALLBACK_OUTPUT_DIR))
    }

    /// Checks every invariant; the error names the offending field.
    pub fn validate(&self) -> Result<(), CliError> {
        let finite = |name: &str, x: f64| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(CliError::validation(name, format!("must be finite, got {x}")))
            }
        };
        finite("p", self.p)?;
        finite("T0", self.t0)?;
        finite("T_bracket", self.t_bracket.0)?;
        finite("T_bracket", self.t_bracket.1)?;
        finite("tau_max", self.tau_max)?;
        finite("tau_horizon", self.tau_horizon)?;
        finite("sample_every", self.sample_every)?;
        finite("shoot_tol", self.shoot_tol)?;
        finite("fit_window", self.fit_window.0)?;
        finite("fit_window", self.fit_window.1)?;
        if self.p < 3.0 {
            return Err(CliError::validation("p", format!("need p >= 3, got {}", self.p)));
        }
        let (lo, hi) = self.t_bracket;
        if !(lo < hi) {
            return Err(CliError::validation("T_bracket", format!("need lo < hi, got ({lo}, {hi})")));
        }
        if !(self.t0 < lo) {
            return Err(CliError::validation("T0", format!("must precede the bracket ({lo}, {hi}), got {}", self.t0)));
        }
        if self.grid_n < 16 {
            return Err(CliError::validation("grid_n", format!("need grid_n >= 16, got {}", self.grid_n)));
        }
        if let Some(dt) = self.dtau {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(CliError::validation("dtau", format!("must be positive and finite, got {dt}")));
            }
        }
        if !(self.tau_max > 0.0) {
            return Err(CliError::validation("tau_max", "must be positive"));
        }
        if !(self.tau_horizon > 0.0) {
            return Err(CliError::validation("tau_horizon", "must be positive"));
        }
        if !(self.sample_every > 0.0) {
            return Err(CliError::validation("sample_every", "must be positive"));
        }
        if !(self.shoot_tol > 0.0) {
            return Err(CliError::validation("shoot_tol", "must be positive"));
        }
        if !(self.fit_window.0 < self.fit_window.1) {
            return Err(CliError::validation("fit_window", "need start < end"));
        }
        if let Some(theta) = self.initial_data.theta() {
            finite("initial_data.theta", theta)?;
        }
        match &self.initial_data {
            InitialData::ExactProfile { base_t, .. } => finite("initial_data.base_T", *base_t)?,
            InitialData::ShiftedProfile { blowup_time, .. } => {
                finite("initial_data.T", *blowup_time)?;
                if !(*blowup_time > self.t0) {
                    return Err(CliError::validation("initial_data.T", "must exceed T0"));
                }
            }
            InitialData::ProfilePlusBump { amplitude, width, base_t, .. } => {
                finite("initial_data.amplitude", *amplitude)?;
                finite("initial_data.base_T", *base_t)?;
                if !(width.is_finite() && *width > 0.0) {
                    return Err(CliError::validation("initial_data.width", format!("must be positive, got {width}")));
                }
            }
            InitialData::File { .. } => {}
        }
        if let InitialData::ExactProfile { base_t, .. } | InitialData::ProfilePlusBump { base_t, .. } = &self.initial_data {
            if !(*base_t > self.t0) {
                return Err(CliError::validation("initial_data.base_T", "must exceed T0"));
            }
        }
        crate::expr::PerturbationExpr::from_preset_or_source(&self.perturbation)
            .map_err(|e| CliError::validation("perturbation", e.to_string()))?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form (keys sorted, shortest floats).
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let canonical = serde_json::to_string(&value).expect("value serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    /// Sets one sweepable field from its textual value.
    pub fn set_axis(&mut self, axis: &str, value: &str) -> Result<(), CliError> {
        let num = || {
            value
                .trim()
                .parse::<f64>()
                .map_err(|_| CliError::validation(axis, format!("`{value}` is not a number")))
        };
        match axis {
            "p" => self.p = num()?,
            "T0" => self.t0 = num()?,
            "tau_horizon" => self.tau_horizon = num()?,
            "grid_n" => {
                self.grid_n = value
                    .trim()
                    .parse()
                    .map_err(|_| CliError::validation(axis, format!("`{value}` is not a count")))?
            }
            "seed" => {
                self.seed = value
                    .trim()
                    .parse()
                    .map_err(|_| CliError::validation(axis, format!("`{value}` is not an integer")))?
            }
            "perturbation" => self.perturbation = value.trim().to_string(),
            "amplitude" | "width" => match &mut self.initial_data {
                InitialData::ProfilePlusBump { amplitude, width, .. } => {
                    *if axis == "amplitude" { amplitude } else { width } = num()?;
                }
                _ => return Err(CliError::validation(axis, "needs initial_data kind = \"profile_plus_bump\"")),
            },
            _ => {
                return Err(CliError::validation(
                    "axis",
                    format!("unknown axis `{axis}` (available: {})", SWEEP_AXES.join(", ")),
                ))
            }
        }
        Ok(())
    }
}

pub const SWEEP_AXES: [&str; 8] = ["p", "T0", "grid_n", "amplitude", "width", "seed", "tau_horizon", "perturbation"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn parses_full_file() {
        let cfg = RunConfig::from_toml(
            r#"
            p = 7
            perturbation = "mass"
            T0 = 0.5
            T_bracket = [0.9, 1.1]
            grid_n = 48
            tau_max = 5.0
            tau_horizon = 5.0
            seed = 3
            sample_every = 0.1
            shoot_tol = 1e-7
            fit_window = [2.0, 5.0]
            [initial_data]
            kind = "profile_plus_bump"
            amplitude = 0.01
            width = 0.2
            "#,
            None,
        )
        .unwrap();
        assert_eq!(cfg.grid_n, 48);
        assert_eq!(
            cfg.initial_data,
            InitialData::ProfilePlusBump { amplitude: 0.01, width: 0.2, base_t: 1.0, theta: 0.0, random_phase: false }
        );
        cfg.validate().unwrap();
    }

    #[test]
    fn bad_p_names_field() {
        let cfg = RunConfig::from_toml("p = 2", None).unwrap();
        let err = cfg.validate().unwrap_err();
        assert_eq!(err.field.as_deref(), Some("p"));
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(RunConfig::from_toml("q = 2", None).is_err());
    }

    #[test]
    fn hash_ignores_field_order() {
        let a = RunConfig::from_toml("p = 5\nseed = 2\nT0 = 0.4", None).unwrap();
        let b = RunConfig::from_toml("T0 = 0.4\nseed = 2\np = 5", None).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = RunConfig::from_toml("T0 = 0.4\nseed = 3\np = 5", None).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn overrides_win() {
        let mut cfg = RunConfig::from_toml("p = 5\ngrid_n = 32", None).unwrap();
        cfg.apply(&Overrides { grid_n: Some(40), ..Default::default() });
        assert_eq!((cfg.p, cfg.grid_n), (5.0, 40));
    }

    #[test]
    fn bracket_must_follow_t0() {
        let cfg = RunConfig::from_toml("T0 = 0.95", None).unwrap();
        assert_eq!(cfg.validate().unwrap_err().field.as_deref(), Some("T0"));
    }
}
