//! Run traces: the ordered event log of one simulation and its exports.
//!
//! Events carry enough to rebuild the final state without re-running the
//! solver (see `sim::replay`). Exports are deterministic: floats print in
//! shortest round-trip form, headline ratios get a display-rounded twin
//! column, and nothing derived from wall time is written.

use super::scenario::ScenarioConfig;
use crate::placement::RejectReason;
use crate::topology::{DeviceId, SiteId};
use crate::workload::RequestId;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// One accepted move of an applied plan. Path and outcome are not stored:
/// both are pure functions of `(request input, device site)`.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct MoveRecord {
    pub request: RequestId,
    pub device: DeviceId,
    /// The move's term in the planned objective.
    pub term: f64,
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct ReconfigEvent {
    /// 1-based wave number the round followed.
    pub wave: usize,
    /// Actual target count (may be below the configured n early on).
    pub targets: usize,
    pub s_before: f64,
    pub s_after: f64,
    pub applied: bool,
    pub moved: usize,
    pub mean_moved_term: Option<f64>,
    /// False when the solve budget ran out and the plan is only a best
    /// incumbent.
    pub certified: bool,
    pub nodes: u64,
    pub lp_solves: u64,
    /// Empty unless `applied`.
    pub moves: Vec<MoveRecord>,
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum TraceEvent {
    Placed {
        request: RequestId,
        profile: String,
        input: SiteId,
        site: SiteId,
        device: DeviceId,
        response_time: f64,
        price: f64,
    },
    Rejected {
        request: RequestId,
        profile: String,
        input: SiteId,
        reason: RejectReason,
    },
    Reconfig(ReconfigEvent),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub struct RunSummary {
    pub placed: usize,
    pub rejected: usize,
    pub reconfig_rounds: usize,
    pub applied_rounds: usize,
    pub moved_total: usize,
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct SimulationTrace {
    /// The effective configuration the run actually used.
    pub config: ScenarioConfig,
    pub events: Vec<TraceEvent>,
    /// State digest at the end of the run; replay must reproduce it.
    pub final_digest: u64,
    pub summary: RunSummary,
}

impl SimulationTrace {
    pub fn reconfig_events(&self) -> impl Iterator<Item = &ReconfigEvent> {
        self.events.iter().filter_map(|e| match e {
            TraceEvent::Reconfig(r) => Some(r),
            _ => None,
        })
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// One CSV row per reconfiguration round.
    pub fn wave_report_csv(&self) -> String {
        let mut out = String::from(WAVE_REPORT_HEADER);
        out.push('\n');
        for event in self.reconfig_events() {
            let fraction = if event.targets == 0 {
                0.0
            } else {
                event.moved as f64 / event.targets as f64
            };
            let improvement = event.s_before - event.s_after;
            write!(
                out,
                "{},{},{},{},{},{:.4},{},{},{},{:.4},",
                event.wave,
                event.targets,
                event.s_before,
                event.s_after,
                improvement,
                improvement,
                event.applied,
                event.moved,
                fraction,
                fraction,
            )
            .unwrap();
            match event.mean_moved_term {
                Some(term) => write!(out, "{term},{term:.4},").unwrap(),
                None => out.push_str(",,"),
            }
            writeln!(out, "{},{},{}", event.certified, event.nodes, event.lp_solves).unwrap();
        }
        out
    }
}

pub const WAVE_REPORT_HEADER: &str = "wave,targets,s_before,s_after,improvement,improvement_rounded,applied,moved,moved_fraction,moved_fraction_rounded,mean_moved_term,mean_moved_term_rounded,certified,nodes,lp_solves";
