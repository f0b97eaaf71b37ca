//! Run configuration: one JSON document plus dot-path overrides.

use std::path::{Path, PathBuf};

use delta_piston::{IntegratorConfigF64, SetupF64};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    #[default]
    Closed,
    Ode,
    Particles,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParticleConfig {
    pub n_per_side: usize,
    /// Gas extent on each side; derived from the velocity spread when absent.
    pub half_width: Option<f64>,
    /// Particle counts for an optional convergence study.
    pub convergence: Vec<usize>,
}

impl Default for ParticleConfig {
    fn default() -> Self {
        Self { n_per_side: 10_000, half_width: None, convergence: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub order: usize,
    pub bumps: usize,
    /// Residual bound relative to the data scale `(1 + rho_max + m0) (1 + |u|_max)^2`.
    pub residual_tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { order: 32, bumps: 20, residual_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub setup: SetupF64,
    #[serde(default)]
    pub backend: BackendChoice,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub integrator: IntegratorConfigF64,
    #[serde(default)]
    pub particles: ParticleConfig,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub format: Format,
    /// Largest allowed `max_abs_diff` in `compare.csv`.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

fn default_t_end() -> f64 {
    10.0
}

fn default_grid() -> usize {
    201
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_tolerance() -> f64 {
    1e-2
}

impl RunConfig {
    /// Reads `path` (or starts from `{}`), applies overrides, validates.
    pub fn load(path: Option<&Path>, overrides: &[(String, Value)]) -> Result<Self, CliError> {
        let mut doc = match path {
            Some(p) => {
                let text =
                    std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => Value::Object(Map::new()),
        };
        for (key, value) in overrides {
            set_path(&mut doc, key, value.clone())?;
        }
        let mut config: RunConfig = serde_json::from_value(doc).map_err(|e| CliError::Config(e.to_string()))?;
        config.integrator.t_end = config.t_end;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.setup.validate()?;
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(CliError::Config(format!("t_end must be positive and finite ({})", self.t_end)));
        }
        if self.grid < 2 {
            return Err(CliError::Config(format!("grid must be at least 2 ({})", self.grid)));
        }
        if !(self.tolerance > 0.0) {
            return Err(CliError::Config(format!("tolerance must be positive ({})", self.tolerance)));
        }
        if self.particles.n_per_side == 0 {
            return Err(CliError::Config("particles.n_per_side must be at least 1".into()));
        }
        if self.verify.order == 0 || self.verify.bumps == 0 {
            return Err(CliError::Config("verify.order and verify.bumps must be positive".into()));
        }
        self.integrator.validate()?;
        Ok(())
    }
}

/// Parses `a.b.c=value`; the value is read as JSON when possible, else as a string.
pub fn parse_override(text: &str) -> Result<(String, Value), CliError> {
    let (key, raw) =
        text.split_once('=').ok_or_else(|| CliError::Config(format!("override `{text}` is not of the form path=value")))?;
    if key.is_empty() {
        return Err(CliError::Config(format!("override `{text}` has an empty path")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

pub fn set_path(doc: &mut Value, path: &str, value: Value) -> Result<(), CliError> {
    let mut node = doc;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let map = node
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("cannot set `{path}`: `{}` is not an object", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}

/// Copy of `setup` with the named field replaced.
pub fn with_parameter(setup: &SetupF64, name: &str, value: f64) -> Result<SetupF64, CliError> {
    let mut s = *setup;
    let slot = match name {
        "rho_left" => &mut s.rho_left,
        "u_left" => &mut s.u_left,
        "rho_right" => &mut s.rho_right,
        "u_right" => &mut s.u_right,
        "m0" => &mut s.m0,
        "u0" => &mut s.u0,
        "l" => &mut s.l,
        other => return Err(CliError::Config(format!("unknown sweep parameter `{other}`"))),
    };
    *slot = value;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn overrides_create_nested_paths() {
        let mut doc = json!({"setup": {"m0": 1.0}});
        set_path(&mut doc, "setup.m0", json!(2.5)).unwrap();
        set_path(&mut doc, "particles.n_per_side", json!(10)).unwrap();
        assert_eq!(doc, json!({"setup": {"m0": 2.5}, "particles": {"n_per_side": 10}}));
        assert!(set_path(&mut doc, "setup.m0.x", json!(1)).is_err());
    }

    #[test]
    fn override_values_fall_back_to_strings() {
        assert_eq!(parse_override("backend=ode").unwrap(), ("backend".into(), json!("ode")));
        assert_eq!(parse_override("t_end=2.5").unwrap(), ("t_end".into(), json!(2.5)));
        assert!(parse_override("nothing").is_err());
    }

    #[test]
    fn sweep_parameter_names() {
        let s = SetupF64::new(1.0, 1.0, 1.0, -1.0, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(with_parameter(&s, "l", 0.5).unwrap().l, 0.5);
        assert!(with_parameter(&s, "mass", 0.5).is_err());
    }
}
