use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coil_model::CoilAssembly;
use crate::hardware::{BackendModel, DriverLimits};

use super::session::{Registry, SessionConfig, SessionError, SimSettings, DEFAULT_TICK_RATE};

pub const DEFAULT_PORT: u16 = 7878;

/// Service config file:
///
/// ```toml
/// bind = "127.0.0.1"
/// port = 7878
/// tick_rate = 100.0
/// assembly = "helmholtz"          # active at start-up
/// assembly_files = ["rig.toml"]   # extra assemblies, relative to this file
///
/// [limits]
/// per_channel_max = 3.0
/// total_max = 3.0
///
/// [backend]
/// model = "first_order"           # or "instantaneous"
/// tau = 0.01
///
/// [sim]                           # omit to run without a simulated robot
/// mode = "surface_rolling"
/// [sim.env]
/// seed = 1
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServiceConfig {
    pub bind: String,
    pub port: u16,
    pub tick_rate: f64,
    pub assembly: String,
    pub assembly_files: Vec<PathBuf>,
    pub limits: DriverLimits,
    pub backend: BackendModel,
    pub sim: Option<SimSettings>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        let s = SessionConfig::default();
        ServiceConfig {
            bind: "127.0.0.1".into(),
            port: DEFAULT_PORT,
            tick_rate: DEFAULT_TICK_RATE,
            assembly: s.assembly,
            assembly_files: Vec::new(),
            limits: s.limits,
            backend: s.backend,
            sim: None,
        }
    }
}

impl ServiceConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, SessionError> {
        toml::from_str(text).map_err(|e| SessionError::Config(e.to_string()))
    }

    pub fn session_config(&self) -> SessionConfig {
        SessionConfig {
            tick_rate: self.tick_rate,
            assembly: self.assembly.clone(),
            limits: self.limits,
            backend: self.backend,
            sim: self.sim,
        }
    }

    /// Built-in assemblies plus `assembly_files`, resolved against `base`.
    pub fn registry(&self, base: &Path) -> Result<Registry, SessionError> {
        let mut r = Registry::builtin()?;
        for file in &self.assembly_files {
            let path = base.join(file);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| SessionError::Config(format!("{}: {e}", path.display())))?;
            r.insert(CoilAssembly::from_toml_str(&text)?)?;
        }
        Ok(r)
    }
}
