//! The phased simulation: place an initial batch, then alternate placement
//! waves with reconfiguration rounds, recording every step.

use super::scenario::{ScenarioConfig, ScenarioError};
use super::trace::{MoveRecord, ReconfigEvent, RunSummary, SimulationTrace, TraceEvent};
use crate::evaluator::outcome;
use crate::placement::{AuditError, PlaceError, PlaceOutcome, Reassignment, SystemState};
use crate::reconfig::{apply_if_beneficial, select_targets, trial_reconfigure, ReconfigError};
use crate::solver::SolveBudget;
use crate::topology::{build_topology, TopologyError};
use crate::workload::{generate_requests, AppProfile, PlacementRequest, WorkloadError};
use thiserror::Error;

/// Node budget per reconfiguration solve. Deliberately node-based, not
/// wall-based: traces must not depend on machine speed.
pub const SIM_SOLVE_BUDGET: SolveBudget = SolveBudget { max_nodes: 10_000_000, max_wall: None };

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Place(#[from] PlaceError),
    #[error(transparent)]
    Reconfig(#[from] ReconfigError),
    #[error("post-wave audit failed: {0}")]
    Audit(#[from] AuditError),
    #[error("replay diverged at event {event}: {detail}")]
    Divergence { event: usize, detail: String },
}

/// A failed run, with everything recorded up to the failure.
#[derive(Debug, Error)]
#[error("{error}")]
pub struct SimFailure {
    pub error: SimError,
    pub partial: Vec<TraceEvent>,
}

pub fn run_simulation(config: &ScenarioConfig) -> Result<SimulationTrace, SimFailure> {
    let mut events = Vec::new();
    match run_inner(config, &mut events) {
        Ok(trace) => Ok(trace),
        Err(error) => Err(SimFailure { error, partial: events }),
    }
}

fn place_one(
    state: &mut SystemState,
    request: &PlacementRequest,
    events: &mut Vec<TraceEvent>,
) -> Result<(), SimError> {
    let profile = state.catalog()[request.profile_index].name.clone();
    match state.place(request)? {
        PlaceOutcome::Placed(p) => events.push(TraceEvent::Placed {
            request: request.id,
            profile,
            input: request.input,
            site: p.site,
            device: p.device,
            response_time: p.outcome.response_time,
            price: p.outcome.price,
        }),
        PlaceOutcome::Rejected(reason) => events.push(TraceEvent::Rejected {
            request: request.id,
            profile,
            input: request.input,
            reason,
        }),
    }
    Ok(())
}

fn run_inner(
    config: &ScenarioConfig,
    events: &mut Vec<TraceEvent>,
) -> Result<SimulationTrace, SimError> {
    config.validate()?;
    let topology = build_topology(&config.topology, &config.hardware)?;
    let inputs: Vec<_> = topology.input_nodes().collect();
    let requests = generate_requests(
        &config.apps,
        &inputs,
        config.run.total,
        config.run.rng,
        config.run.seed,
    )?;
    let profiles: Vec<AppProfile> = config.apps.iter().map(|e| e.profile.clone()).collect();
    let mut state = SystemState::new(topology, profiles)?;

    for request in &requests[..config.run.initial] {
        place_one(&mut state, request, events)?;
    }
    state.audit()?;

    let mut summary = RunSummary::default();
    for (index, chunk) in requests[config.run.initial..].chunks(config.run.wave).enumerate() {
        let wave = index + 1;
        for request in chunk {
            place_one(&mut state, request, events)?;
        }

        if config.run.targets > 0 {
            let targets = select_targets(&state, config.run.targets);
            if !targets.is_empty() {
                let plan = trial_reconfigure(&state, &targets, &SIM_SOLVE_BUDGET)?;
                let report = apply_if_beneficial(&mut state, &plan, config.run.epsilon)?;

                let moves = if report.applied {
                    plan.entries
                        .iter()
                        .filter_map(|e| {
                            e.reassignment.as_ref().map(|m| MoveRecord {
                                request: m.request,
                                device: m.device,
                                term: e.term,
                            })
                        })
                        .collect()
                } else {
                    Vec::new()
                };
                summary.reconfig_rounds += 1;
                if report.applied {
                    summary.applied_rounds += 1;
                    summary.moved_total += report.moved;
                }
                events.push(TraceEvent::Reconfig(ReconfigEvent {
                    wave,
                    targets: targets.len(),
                    s_before: report.s_before,
                    s_after: report.s_after,
                    applied: report.applied,
                    moved: report.moved,
                    mean_moved_term: report.mean_moved_term,
                    certified: plan.certified,
                    nodes: plan.stats.nodes,
                    lp_solves: plan.stats.lp_solves,
                    moves,
                }));
            }
        }
        state.audit()?;
    }

    summary.placed = state.placements().len();
    summary.rejected = events
        .iter()
        .filter(|e| matches!(e, TraceEvent::Rejected { .. }))
        .count();

    Ok(SimulationTrace {
        config: config.clone(),
        events: std::mem::take(events),
        final_digest: state.digest(),
        summary,
    })
}

/// Rebuilds the final state from the trace alone: placements are re-decided
/// and checked against the recorded events, reconfigurations are applied
/// mechanically from the move records (no solver involved). Returns the
/// reconstructed digest, which must equal `final_digest`.
pub fn replay(trace: &SimulationTrace) -> Result<u64, SimError> {
    let config = &trace.config;
    config.validate()?;
    let topology = build_topology(&config.topology, &config.hardware)?;
    let inputs: Vec<_> = topology.input_nodes().collect();
    let requests = generate_requests(
        &config.apps,
        &inputs,
        config.run.total,
        config.run.rng,
        config.run.seed,
    )?;
    let profiles: Vec<AppProfile> = config.apps.iter().map(|e| e.profile.clone()).collect();
    let mut state = SystemState::new(topology, profiles)?;

    let diverged = |event: usize, detail: String| SimError::Divergence { event, detail };

    for (i, event) in trace.events.iter().enumerate() {
        match event {
            TraceEvent::Placed { request, site, device, response_time, price, .. } => {
                let req = requests
                    .get(*request as usize)
                    .ok_or_else(|| diverged(i, format!("unknown request {request}")))?;
                match state.place(req)? {
                    PlaceOutcome::Placed(p)
                        if p.site == *site
                            && p.device == *device
                            && p.outcome.response_time == *response_time
                            && p.outcome.price == *price => {}
                    other => {
                        return Err(diverged(
                            i,
                            format!("request {request} re-placed as {other:?}"),
                        ))
                    }
                }
            }
            TraceEvent::Rejected { request, reason, .. } => {
                let req = requests
                    .get(*request as usize)
                    .ok_or_else(|| diverged(i, format!("unknown request {request}")))?;
                match state.place(req)? {
                    PlaceOutcome::Rejected(r) if r == *reason => {}
                    other => {
                        return Err(diverged(
                            i,
                            format!("request {request} re-placed as {other:?}"),
                        ))
                    }
                }
            }
            TraceEvent::Reconfig(round) => {
                if !round.applied {
                    continue;
                }
                let mut moves = Vec::with_capacity(round.moves.len());
                for record in &round.moves {
                    let placement = state
                        .placement(record.request)
                        .ok_or_else(|| diverged(i, format!("move of unplaced {}", record.request)))?;
                    let profile = state.profile_of(placement);
                    let site = state.topology().device(record.device).site;
                    let path = state.topology().path_links(placement.input, site)?;
                    let after = outcome(profile, placement.input, site, state.topology())
                        .map_err(ReconfigError::Eval)?;
                    moves.push(Reassignment {
                        request: record.request,
                        device: record.device,
                        path,
                        outcome: after,
                    });
                }
                state.apply_reassignments(&moves)?;
            }
        }
    }

    state.audit()?;
    let digest = state.digest();
    if digest != trace.final_digest {
        return Err(diverged(
            trace.events.len(),
            format!("final digest {digest:#018x} != recorded {:#018x}", trace.final_digest),
        ));
    }
    Ok(digest)
}
