//! Scenario files: the versioned TOML schema tying together a topology
//! shape, a hardware catalog, a request mix, and a run plan.

use crate::topology::{
    build_topology, DeviceKind, DeviceSpec, HardwareCatalog, LinkSpec, TopologyError,
    TopologyShape,
};
use crate::workload::{benchmark_workload, RngId, WorkloadEntry, WorkloadError};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario version {0} is not supported (this build reads version {SCENARIO_VERSION})")]
    BadVersion(u32),
    #[error("run plan: {0}")]
    BadPlan(&'static str),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error("reading {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("writing {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("parsing scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("serializing scenario: {0}")]
    Serialize(#[from] toml::ser::Error),
}

/// Request schedule and reconfiguration knobs of one run.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunPlan {
    /// Requests placed before the first wave.
    pub initial: usize,
    /// Requests per subsequent wave; a reconfiguration follows each wave.
    pub wave: usize,
    /// Total requests generated; `total - initial` must divide into waves.
    pub total: usize,
    /// Reconfiguration target count n; 0 disables reconfiguration.
    pub targets: usize,
    /// Minimum objective improvement an applied plan must deliver.
    pub epsilon: f64,
    pub rng: RngId,
    pub seed: u64,
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub version: u32,
    pub topology: TopologyShape,
    pub hardware: HardwareCatalog,
    pub apps: Vec<WorkloadEntry>,
    pub run: RunPlan,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.version != SCENARIO_VERSION {
            return Err(ScenarioError::BadVersion(self.version));
        }
        // also validates the catalog specs
        build_topology(&self.topology, &self.hardware)?;
        if self.apps.is_empty() {
            return Err(ScenarioError::BadPlan("no app profiles"));
        }
        for entry in &self.apps {
            entry.profile.validate()?;
            for option in &entry.options {
                option.validate()?;
            }
        }
        let run = &self.run;
        if run.total == 0 {
            return Err(ScenarioError::BadPlan("total must be positive"));
        }
        if run.initial > run.total {
            return Err(ScenarioError::BadPlan("initial exceeds total"));
        }
        let tail = run.total - run.initial;
        if tail > 0 {
            if run.wave == 0 {
                return Err(ScenarioError::BadPlan("wave must be positive when total > initial"));
            }
            if tail % run.wave != 0 {
                return Err(ScenarioError::BadPlan("total - initial must be a whole number of waves"));
            }
        }
        if !(run.epsilon >= 0.0 && run.epsilon.is_finite()) {
            return Err(ScenarioError::BadPlan("epsilon must be non-negative and finite"));
        }
        Ok(())
    }

    pub fn waves(&self) -> usize {
        let tail = self.run.total - self.run.initial;
        if tail == 0 {
            0
        } else {
            tail / self.run.wave
        }
    }

    pub fn to_toml(&self) -> Result<String, ScenarioError> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let config: ScenarioConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ScenarioError::Read { path: path.display().to_string(), source })?;
    ScenarioConfig::from_toml(&text)
}

pub fn save_scenario(config: &ScenarioConfig, path: &Path) -> Result<(), ScenarioError> {
    let text = config.to_toml()?;
    std::fs::write(path, text)
        .map_err(|source| ScenarioError::Write { path: path.display().to_string(), source })
}

/// The benchmark tree: 5 clouds, 4 carrier edges each, 3 user edges per
/// carrier, 5 input nodes per user edge.
pub fn benchmark_shape() -> TopologyShape {
    TopologyShape { clouds: 5, carriers: 20, users: 60, inputs: 300 }
}

/// Per-tier device and uplink price list. Costs are yen per month for the
/// full capacity; apps pay pro rata.
pub fn benchmark_hardware() -> HardwareCatalog {
    let spec = |kind, count, capacity, month_cost| DeviceSpec { kind, count, capacity, month_cost };
    HardwareCatalog {
        cloud_devices: vec![
            spec(DeviceKind::Cpu, 8, 100.0, 50_000.0),
            spec(DeviceKind::Gpu, 4, 16.0, 100_000.0),
            spec(DeviceKind::Fpga, 2, 100.0, 120_000.0),
        ],
        carrier_devices: vec![
            spec(DeviceKind::Cpu, 4, 100.0, 62_500.0),
            spec(DeviceKind::Gpu, 2, 8.0, 62_500.0),
            spec(DeviceKind::Fpga, 1, 100.0, 150_000.0),
        ],
        user_devices: vec![
            spec(DeviceKind::Cpu, 2, 100.0, 75_000.0),
            spec(DeviceKind::Gpu, 1, 4.0, 37_500.0),
        ],
        user_uplink: LinkSpec { bandwidth_mbps: 10.0, month_cost: 3_000.0 },
        carrier_uplink: LinkSpec { bandwidth_mbps: 100.0, month_cost: 8_000.0 },
    }
}

/// The full benchmark scenario: 400 initial placements, one wave of 100,
/// then one reconfiguration round over the most recent 100 apps.
pub fn baseline_scenario() -> ScenarioConfig {
    ScenarioConfig {
        version: SCENARIO_VERSION,
        topology: benchmark_shape(),
        hardware: benchmark_hardware(),
        apps: benchmark_workload(),
        run: RunPlan {
            initial: 400,
            wave: 100,
            total: 500,
            targets: 100,
            epsilon: 0.01,
            rng: RngId::ChaCha8,
            seed: 7,
        },
    }
}
