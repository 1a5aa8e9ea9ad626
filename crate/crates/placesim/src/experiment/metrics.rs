//! Aggregation across runs: group traces by target count n and average the
//! per-round reconfiguration results.

use super::trace::SimulationTrace;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no traces to summarize")]
    Empty,
}

/// One aggregated line per target count n.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct MetricsRow {
    pub targets: usize,
    /// Traces aggregated into this row.
    pub runs: usize,
    /// Reconfiguration rounds across those traces.
    pub rounds: usize,
    /// Mean moved apps per round.
    pub mean_moved: f64,
    /// Mean of per-round moved/targets.
    pub mean_moved_fraction: f64,
    /// Mean satisfaction term over every moved app in the group; `None`
    /// when nothing moved.
    pub mean_moved_term: Option<f64>,
    /// Rounds whose solve was certified optimal.
    pub certified_fraction: f64,
    pub mean_nodes: f64,
    pub mean_lp_solves: f64,
}

pub fn summarize(traces: &[SimulationTrace]) -> Result<Vec<MetricsRow>, MetricsError> {
    if traces.is_empty() {
        return Err(MetricsError::Empty);
    }

    let mut groups: BTreeMap<usize, Vec<&SimulationTrace>> = BTreeMap::new();
    for trace in traces {
        groups.entry(trace.config.run.targets).or_default().push(trace);
    }

    let mut rows = Vec::with_capacity(groups.len());
    for (targets, group) in groups {
        let mut rounds = 0usize;
        let mut moved_sum = 0usize;
        let mut fraction_sum = 0.0f64;
        let mut term_weighted_sum = 0.0f64;
        let mut certified = 0usize;
        let mut nodes_sum = 0u64;
        let mut lp_sum = 0u64;

        for trace in &group {
            for event in trace.reconfig_events() {
                rounds += 1;
                moved_sum += event.moved;
                if event.targets > 0 {
                    fraction_sum += event.moved as f64 / event.targets as f64;
                }
                if let Some(term) = event.mean_moved_term {
                    term_weighted_sum += term * event.moved as f64;
                }
                certified += usize::from(event.certified);
                nodes_sum += event.nodes;
                lp_sum += event.lp_solves;
            }
        }

        let per_round = |sum: f64| if rounds == 0 { 0.0 } else { sum / rounds as f64 };
        rows.push(MetricsRow {
            targets,
            runs: group.len(),
            rounds,
            mean_moved: per_round(moved_sum as f64),
            mean_moved_fraction: per_round(fraction_sum),
            mean_moved_term: (moved_sum > 0)
                .then(|| term_weighted_sum / moved_sum as f64),
            certified_fraction: per_round(certified as f64),
            mean_nodes: per_round(nodes_sum as f64),
            mean_lp_solves: per_round(lp_sum as f64),
        });
    }
    Ok(rows)
}

pub const METRICS_HEADER: &str = "targets,runs,rounds,mean_moved,mean_moved_fraction,mean_moved_fraction_rounded,mean_moved_term,mean_moved_term_rounded,certified_fraction,mean_nodes,mean_lp_solves";

pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for row in rows {
        write!(
            out,
            "{},{},{},{},{},{:.4},",
            row.targets,
            row.runs,
            row.rounds,
            row.mean_moved,
            row.mean_moved_fraction,
            row.mean_moved_fraction,
        )
        .unwrap();
        match row.mean_moved_term {
            Some(term) => write!(out, "{term},{term:.4},").unwrap(),
            None => out.push_str(",,"),
        }
        writeln!(out, "{},{},{}", row.certified_fraction, row.mean_nodes, row.mean_lp_solves)
            .unwrap();
    }
    out
}

pub fn metrics_json(rows: &[MetricsRow]) -> serde_json::Result<String> {
    let mut text = serde_json::to_string_pretty(rows)?;
    text.push('\n');
    Ok(text)
}
