//! TOML run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::controller::{ControllerConfig, Tolerances};
use crate::problems::ProblemParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemParams,
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Either a total `ε_T` (split equally), one local value for all three
/// indicator families, or the three local values separately. `initial` is
/// always `ε₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    pub initial: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upsilon: Option<f64>,
}

impl ToleranceConfig {
    pub fn local(initial: f64, local: f64) -> Self {
        ToleranceConfig {
            initial,
            total: None,
            local: Some(local),
            eta: None,
            theta: None,
            upsilon: None,
        }
    }

    pub fn resolve(&self, final_time: f64) -> Result<Tolerances, CliError> {
        let t = match (self.total, self.local, self.eta, self.theta, self.upsilon) {
            (Some(total), None, None, None, None) => Tolerances::split_equal(total, self.initial, final_time),
            (None, Some(l), None, None, None) => Tolerances::from_local(self.initial, l, l, l, final_time),
            (None, None, Some(e), Some(th), Some(u)) => Tolerances::from_local(self.initial, e, th, u, final_time),
            _ => {
                return Err(CliError::Config(
                    "tolerances: give exactly one of `total`, `local`, or all of `eta`, `theta`, `upsilon`".into(),
                ))
            }
        };
        t.map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshConfig {
    /// Elements of the uniform starting mesh, before the initial datum is resolved.
    pub elements: usize,
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig { elements: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Times at which snapshots are written (first accepted `t_n` at or past each).
    pub snapshots: Vec<f64>,
    /// Runs never draw random numbers; kept explicit so configs say so.
    pub deterministic: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: PathBuf::from("out"),
            snapshots: Vec::new(),
            deterministic: true,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serializes")
    }

    fn check(&self) -> Result<(), CliError> {
        if !self.output.deterministic {
            return Err(CliError::Config("output.deterministic cannot be switched off".into()));
        }
        if self.mesh.elements < 2 {
            return Err(CliError::Config("mesh.elements must be at least 2".into()));
        }
        if self.output.snapshots.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(CliError::Config("snapshot times must be finite and nonnegative".into()));
        }
        self.controller
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))
    }
}
