//! Run configuration.
//!
//! A run is described by one JSON document. Frequencies are entered as ν in
//! MHz and converted to ω = 2πν rad/µs on use. Unknown keys anywhere in the
//! document are rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::RunError;
use crate::mhz_to_angular;
use crate::model::{DriveChoice, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Figure2,
    Figure3,
    Sweep,
    Validate,
    Spectrum,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::Figure2,
        Experiment::Figure3,
        Experiment::Sweep,
        Experiment::Validate,
        Experiment::Spectrum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Figure2 => "figure2",
            Experiment::Figure3 => "figure3",
            Experiment::Sweep => "sweep",
            Experiment::Validate => "validate",
            Experiment::Spectrum => "spectrum",
        }
    }

    /// Default simulated span in µs.
    pub fn default_t_end(self) -> f64 {
        match self {
            Experiment::Figure2 | Experiment::Validate | Experiment::Spectrum => 0.5,
            Experiment::Figure3 | Experiment::Sweep => 1.0,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = RunError;

    fn from_str(s: &str) -> Result<Self, RunError> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| RunError::Config(format!("unknown experiment '{s}'")))
    }
}

/// `"matched"` or `{"explicit_mhz": ν_d}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DriveConfig {
    #[default]
    Matched,
    ExplicitMhz(f64),
}

/// [`SystemParams`] in MHz. Defaults are the figure-2 values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsConfig {
    pub omega_t_mhz: f64,
    pub omega_bar_mhz: f64,
    pub drive: DriveConfig,
    pub g_mhz: f64,
    pub lambda_d_mhz: f64,
    pub gamma_mhz: f64,
    pub gamma_s_mhz: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        Self {
            omega_t_mhz: 412.5,
            omega_bar_mhz: 0.0,
            drive: DriveConfig::Matched,
            g_mhz: 75.0,
            lambda_d_mhz: 40.0,
            gamma_mhz: 12.5,
            gamma_s_mhz: 0.0,
        }
    }
}

impl ParamsConfig {
    pub fn to_params(&self) -> Result<SystemParams, RunError> {
        let drive = match self.drive {
            DriveConfig::Matched => DriveChoice::Matched,
            DriveConfig::ExplicitMhz(nu) => DriveChoice::Explicit(mhz_to_angular(nu)),
        };
        SystemParams::from_mhz(
            self.omega_t_mhz,
            self.omega_bar_mhz,
            drive,
            self.g_mhz,
            self.lambda_d_mhz,
            self.gamma_mhz,
            self.gamma_s_mhz,
        )
        .map_err(|e| RunError::Config(format!("params: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub t_start_us: f64,
    /// Falls back to the experiment's default span.
    pub t_end_us: Option<f64>,
    /// Number of recorded intervals; the CSV has `records + 1` rows per curve.
    pub records: usize,
    /// Fixed RK4 step count, a multiple of `records`. When absent the step
    /// count is `step_refinement` times the stability minimum.
    pub n_steps: Option<usize>,
    pub step_refinement: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            t_start_us: 0.0,
            t_end_us: None,
            records: 500,
            n_steps: None,
            step_refinement: 6,
        }
    }
}

/// Convergence checks run alongside every figure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksConfig {
    pub cutoff: bool,
    pub timestep: bool,
    /// Allowed change on doubling the cutoff, relative to each curve's maximum.
    pub cutoff_tolerance: f64,
    /// Allowed change on halving dt, relative to each curve's maximum.
    pub timestep_tolerance: f64,
}

impl Default for ChecksConfig {
    fn default() -> Self {
        Self {
            cutoff: true,
            timestep: true,
            cutoff_tolerance: 1e-3,
            timestep_tolerance: 1e-6,
        }
    }
}

/// Settings of the many-spin comparison in `validate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub n_spins: usize,
    pub truncation_k: f64,
    pub gamma_t_max: f64,
    pub records: usize,
    pub tolerance: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            n_spins: 2000,
            truncation_k: crate::oracle::DEFAULT_TRUNCATION_K,
            gamma_t_max: 3.0,
            records: 600,
            tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub experiment: Option<Experiment>,
    pub params: ParamsConfig,
    pub fock_cutoff: usize,
    pub grid: GridConfig,
    /// γ/2π values in MHz for figure3 and sweep.
    pub gamma_sweep_mhz: Vec<f64>,
    pub seeds: Vec<u64>,
    pub output_path: Option<PathBuf>,
    pub checks: ChecksConfig,
    pub oracle: OracleConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            params: ParamsConfig::default(),
            fock_cutoff: 8,
            grid: GridConfig::default(),
            gamma_sweep_mhz: vec![5.0, 10.0, 12.5, 25.0, 50.0],
            seeds: vec![0, 1, 2],
            output_path: None,
            checks: ChecksConfig::default(),
            oracle: OracleConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_value(value: Value) -> Result<Self, RunError> {
        let cfg: RunConfig =
            serde_json::from_value(value).map_err(|e| RunError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(text: &str, overrides: &[String]) -> Result<Self, RunError> {
        let mut value: Value =
            serde_json::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        Self::from_value(value)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text, overrides)
    }

    /// Defaults plus overrides, without a config file.
    pub fn from_overrides(overrides: &[String]) -> Result<Self, RunError> {
        Self::from_json_str("{}", overrides)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: String| Err(RunError::Config(m));
        self.params.to_params()?;
        if self.fock_cutoff < 2 {
            return bad(format!("fock_cutoff must be >= 2, got {}", self.fock_cutoff));
        }
        let g = &self.grid;
        if !g.t_start_us.is_finite() || g.t_end_us.is_some_and(|t| !(t > g.t_start_us)) {
            return bad("grid: t_end_us must exceed t_start_us".into());
        }
        if g.records == 0 || g.step_refinement == 0 {
            return bad("grid: records and step_refinement must be positive".into());
        }
        if let Some(n) = g.n_steps {
            if n == 0 || n % g.records != 0 {
                return bad(format!(
                    "grid: n_steps ({n}) must be a positive multiple of records ({})",
                    g.records
                ));
            }
        }
        if self.gamma_sweep_mhz.is_empty() {
            return bad("gamma_sweep_mhz must not be empty".into());
        }
        if self.gamma_sweep_mhz.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return bad("gamma_sweep_mhz entries must be positive".into());
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        let c = &self.checks;
        if !(c.cutoff_tolerance > 0.0 && c.timestep_tolerance > 0.0) {
            return bad("check tolerances must be positive".into());
        }
        let o = &self.oracle;
        if o.n_spins == 0 || o.records == 0 || !(o.gamma_t_max > 0.0) || !(o.tolerance > 0.0) {
            return bad("oracle settings must be positive".into());
        }
        Ok(())
    }

    pub fn t_end(&self, experiment: Experiment) -> f64 {
        self.grid
            .t_end_us
            .unwrap_or_else(|| experiment.default_t_end())
    }
}

/// Applies `a.b.c=value` to a JSON document. The value is parsed as JSON when
/// possible and taken as a string otherwise.
pub fn apply_override(doc: &mut Value, arg: &str) -> Result<(), RunError> {
    let (path, raw) = arg
        .split_once('=')
        .ok_or_else(|| RunError::Config(format!("override '{arg}' is not key=value")))?;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(RunError::Config(format!("override '{arg}' has an empty key")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));

    let mut node = doc;
    for key in &keys[..keys.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| RunError::Config(format!("override '{arg}': '{key}' is not inside an object")))?;
        node = obj
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    node.as_object_mut()
        .ok_or_else(|| RunError::Config(format!("override '{arg}' does not address an object")))?
        .insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = RunConfig::from_json_str("{}", &[]).unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for doc in [
            r#"{"fock_cuttoff": 4}"#,
            r#"{"params": {"gamma": 12.5}}"#,
            r#"{"grid": {"dt": 0.1}}"#,
        ] {
            assert!(matches!(RunConfig::from_json_str(doc, &[]), Err(RunError::Config(_))));
        }
    }

    #[test]
    fn overrides_follow_dot_paths() {
        let cfg = RunConfig::from_json_str(
            r#"{"params": {"gamma_mhz": 5}}"#,
            &[
                "params.gamma_mhz=10".into(),
                "experiment=sweep".into(),
                "params.drive={\"explicit_mhz\": 3.5}".into(),
                "gamma_sweep_mhz=[1, 2]".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.params.gamma_mhz, 10.0);
        assert_eq!(cfg.experiment, Some(Experiment::Sweep));
        assert_eq!(cfg.params.drive, DriveConfig::ExplicitMhz(3.5));
        assert_eq!(cfg.gamma_sweep_mhz, vec![1.0, 2.0]);
        assert!(RunConfig::from_overrides(&["params.nope=1".into()]).is_err());
        assert!(RunConfig::from_overrides(&["fock_cutoff".into()]).is_err());
        assert!(RunConfig::from_overrides(&["fock_cutoff.x=1".into()]).is_err());
    }

    #[test]
    fn physical_ranges_are_enforced() {
        for o in [
            "params.gamma_mhz=-1",
            "params.g_mhz=0",
            "fock_cutoff=1",
            "gamma_sweep_mhz=[]",
            "grid.records=0",
            "grid.n_steps=1001",
            "grid.t_end_us=0",
        ] {
            assert!(RunConfig::from_overrides(&[o.into()]).is_err(), "{o}");
        }
    }

    #[test]
    fn params_convert_to_angular_units() {
        let p = ParamsConfig::default().to_params().unwrap();
        assert!((p.g_collective - mhz_to_angular(75.0)).abs() < 1e-12);
        assert!((p.delta() - mhz_to_angular(412.5)).abs() < 1e-9);
        assert!((p.omega_d - p.g_collective.powi(2) / p.delta()).abs() < 1e-9);
    }
}
