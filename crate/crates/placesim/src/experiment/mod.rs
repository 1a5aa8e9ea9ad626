//! Scenario definition, simulation driver, trace recording, and metric
//! aggregation.

pub mod metrics;
pub mod scenario;
pub mod sim;
pub mod trace;

pub use metrics::{metrics_csv, metrics_json, summarize, MetricsError, MetricsRow};
pub use scenario::{
    baseline_scenario, benchmark_hardware, benchmark_shape, load_scenario, save_scenario,
    RunPlan, ScenarioConfig, ScenarioError,
};
pub use sim::{replay, run_simulation, SimError, SimFailure, SIM_SOLVE_BUDGET};
pub use trace::{MoveRecord, ReconfigEvent, RunSummary, SimulationTrace, TraceEvent};
