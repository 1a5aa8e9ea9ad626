//! Periodic reconfiguration: pick targets, build an assignment model from
//! the live state, solve it exactly, and apply the plan when it pays off.
//!
//! A trial never mutates the state. The model's baseline is the targets'
//! current outcomes, so every "stay" candidate costs exactly 2 and the
//! pre-move objective is exactly `2 * targets`. Applying a plan re-bases
//! those outcomes, which is what keeps accepted moves from oscillating back
//! in the next wave.

use crate::evaluator::{outcome, satisfaction_term, EvalError, Outcome, UsageLedger};
use crate::placement::{PlaceError, Placement, Reassignment, SystemState};
use crate::solver::{
    solve_exact, AppEntry, AssignmentModel, CandidateEntry, ResourceRow, SolveBudget, SolveStats,
    SolverError,
};
use crate::topology::{DeviceId, DeviceKind, LinkId, SiteId, Topology};
use crate::workload::RequestId;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ReconfigError {
    #[error("request {0} is not placed")]
    UnknownRequest(RequestId),
    #[error("plan was made for state version {planned} but the state is at {actual}")]
    StalePlan { planned: u64, actual: u64 },
    #[error("epsilon must be non-negative and finite, got {0}")]
    BadEpsilon(f64),
    #[error("request {0}: no device in the planned group takes the app")]
    PackingFailed(RequestId),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Topology(#[from] crate::topology::TopologyError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Place(#[from] PlaceError),
}

/// The `n` most recently arrived placed requests, ids ascending.
pub fn select_targets(state: &SystemState, n: usize) -> Vec<RequestId> {
    let placed = state.placements().len();
    let take = n.min(placed);
    let mut targets: Vec<RequestId> =
        state.placements().keys().rev().take(take).copied().collect();
    targets.reverse();
    targets
}

/// What one solved candidate means back in the real system. `devices` is a
/// single device, or every same-spec device at the site when the model
/// pooled them; a move's concrete device is then picked at plan extraction.
#[derive(Clone, PartialEq, Debug)]
struct Binding {
    site: SiteId,
    devices: Vec<DeviceId>,
    path: Vec<LinkId>,
    outcome: Outcome,
    is_current: bool,
}

pub struct ModelBindings {
    requests: Vec<RequestId>,
    candidates: Vec<Vec<Binding>>,
}

/// One target's planned destination; `reassignment` is set iff it moves.
#[derive(Clone, PartialEq, Debug)]
pub struct PlanEntry {
    pub request: RequestId,
    /// This target's term in the planned objective (2 = stays put).
    pub term: f64,
    pub reassignment: Option<Reassignment>,
}

#[derive(Clone, PartialEq, Debug)]
pub struct ReconfigPlan {
    version: u64,
    pub targets: Vec<RequestId>,
    pub s_before: f64,
    pub s_after: f64,
    pub entries: Vec<PlanEntry>,
    /// False when the solve budget ran out; the plan is then the best
    /// incumbent, not a proven optimum.
    pub certified: bool,
    pub stats: SolveStats,
}

impl ReconfigPlan {
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn moved_count(&self) -> usize {
        self.entries.iter().filter(|e| e.reassignment.is_some()).count()
    }

    pub fn improvement(&self) -> f64 {
        self.s_before - self.s_after
    }
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct ReconfigReport {
    pub applied: bool,
    pub moved: usize,
    /// Mean term over moved targets; `None` when nothing moves.
    pub mean_moved_term: Option<f64>,
    pub s_before: f64,
    pub s_after: f64,
}

/// Cost lattice for candidate terms. Snapping to a shared power-of-two grid
/// distorts each term by at most 2^-17, orders of magnitude below any real
/// difference between sites, and makes objective sums exact in f64, which
/// the solver needs to close equal-objective plateaus instead of
/// enumerating them.
const COST_GRID: f64 = (1u64 << 16) as f64;

fn snap_cost(cost: f64) -> f64 {
    (cost * COST_GRID).round() / COST_GRID
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum RowKey {
    Device(u32),
    Group(u32, DeviceKind),
    Link(u32),
}

struct Rows<'a> {
    topology: &'a Topology,
    residual: &'a UsageLedger,
    index: BTreeMap<RowKey, usize>,
    rows: Vec<ResourceRow>,
}

impl<'a> Rows<'a> {
    fn new(topology: &'a Topology, residual: &'a UsageLedger) -> Self {
        Rows { topology, residual, index: BTreeMap::new(), rows: Vec::new() }
    }

    fn device_row(&mut self, id: DeviceId) -> usize {
        if let Some(&i) = self.index.get(&RowKey::Device(id.0)) {
            return i;
        }
        let device = self.topology.device(id);
        let i = self.rows.len();
        self.rows.push(ResourceRow {
            name: format!("device:{}", self.topology.device_name(id)),
            capacity: device.capacity - self.residual.device_used(id),
        });
        self.index.insert(RowKey::Device(id.0), i);
        i
    }

    /// Pooled row over every device of `kind` at `site`: capacity counts
    /// whole apps of `demand` the devices' residuals still take, summed per
    /// device with the ledger's own arithmetic. Only sound while every
    /// modeled app using the group needs this same demand; the caller
    /// checks that before pooling.
    fn group_row(
        &mut self,
        site: SiteId,
        kind: DeviceKind,
        demand: f64,
        slot_cap: usize,
    ) -> usize {
        if let Some(&i) = self.index.get(&RowKey::Group(site.0, kind)) {
            return i;
        }
        let mut slots = 0usize;
        for device in self.topology.devices_at(site) {
            if device.kind != kind {
                continue;
            }
            let mut used = self.residual.device_used(device.id);
            while slots < slot_cap && used + demand <= device.capacity {
                used += demand;
                slots += 1;
            }
        }
        let i = self.rows.len();
        self.rows.push(ResourceRow {
            name: format!("device:{}/{}", self.topology.site_name(site), kind.label()),
            capacity: slots as f64 * demand,
        });
        self.index.insert(RowKey::Group(site.0, kind), i);
        i
    }

    fn link_row(&mut self, id: LinkId) -> usize {
        if let Some(&i) = self.index.get(&RowKey::Link(id.0)) {
            return i;
        }
        let link = self.topology.link(id);
        let i = self.rows.len();
        self.rows.push(ResourceRow {
            name: format!("link:{}", self.topology.link_name(id)),
            capacity: link.bandwidth_mbps - self.residual.link_used(id),
        });
        self.index.insert(RowKey::Link(id.0), i);
        i
    }

    fn uses(
        &mut self,
        device_use: (usize, f64),
        path: &[LinkId],
        bandwidth: f64,
    ) -> Vec<(usize, f64)> {
        let mut uses = vec![device_use];
        for &link in path {
            uses.push((self.link_row(link), bandwidth));
        }
        uses.sort_by_key(|&(row, _)| row);
        uses
    }
}

/// One admitted site of one target: outcome, snapped term, and tree path.
struct SiteChoice {
    site: SiteId,
    outcome: Outcome,
    cost: f64,
    path: Vec<LinkId>,
}

/// Builds the assignment model for `targets` against the current state.
///
/// Capacities are residuals after notionally releasing every target, so a
/// plan is feasible in the model iff it commits cleanly on the real ledger.
/// Candidates are the sites on the target's chain whose outcome meets the
/// request's original bounds; the current placement is always among them.
/// Same-spec devices at a site become one pooled whole-app-slot row when
/// every admitted target there needs the same demand, and fall back to one
/// row per device otherwise.
pub fn build_model(
    state: &SystemState,
    targets: &[RequestId],
) -> Result<(AssignmentModel, ModelBindings), ReconfigError> {
    let topology = state.topology();

    let mut residual = state.ledger().clone();
    let mut placed: Vec<&Placement> = Vec::with_capacity(targets.len());
    for &id in targets {
        let p = state.placement(id).ok_or(ReconfigError::UnknownRequest(id))?;
        let profile = state.profile_of(p);
        residual.release(p.device, &p.path, profile.demand, profile.bandwidth_mbps);
        placed.push(p);
    }

    // Pass 1: admitted sites per target, and the demand mix per (site,
    // kind) those admissions would put on the devices there.
    let mut group_demands: BTreeMap<(u32, DeviceKind), BTreeSet<u64>> = BTreeMap::new();
    let mut choices_per_app: Vec<Vec<SiteChoice>> = Vec::with_capacity(placed.len());
    for p in &placed {
        let profile = state.profile_of(p);
        let mut choices = Vec::new();
        for site in topology.ancestor_sites(p.input)? {
            let site_outcome = match outcome(profile, p.input, site, topology) {
                Ok(o) => o,
                Err(EvalError::DeviceKindAbsent { .. }) => continue,
                Err(e) => return Err(e.into()),
            };
            if !p.menu.admits(site_outcome.response_time, site_outcome.price) {
                continue;
            }
            let cost = snap_cost(satisfaction_term(&p.outcome, &site_outcome)?);
            let path = topology.path_links(p.input, site)?;
            group_demands
                .entry((site.0, profile.required_kind))
                .or_default()
                .insert(profile.demand.to_bits());
            choices.push(SiteChoice { site, outcome: site_outcome, cost, path });
        }
        choices_per_app.push(choices);
    }

    // Pass 2: materialize rows and candidates.
    let slot_cap = targets.len();
    let mut rows = Rows::new(topology, &residual);
    let mut apps = Vec::with_capacity(placed.len());
    let mut bindings = Vec::with_capacity(placed.len());

    for (p, choices) in placed.iter().zip(&choices_per_app) {
        let profile = state.profile_of(p);
        let kind = profile.required_kind;
        let mut candidates = Vec::new();
        let mut binds = Vec::new();

        for choice in choices {
            let pooled = group_demands[&(choice.site.0, kind)].len() == 1;
            if pooled {
                let is_current = p.site == choice.site;
                debug_assert!(!is_current || choice.cost == 2.0);
                let row = rows.group_row(choice.site, kind, profile.demand, slot_cap);
                let devices: Vec<DeviceId> = topology
                    .devices_at(choice.site)
                    .iter()
                    .filter(|d| d.kind == kind)
                    .map(|d| d.id)
                    .collect();
                candidates.push(CandidateEntry {
                    label: format!("{}/{}", topology.site_name(choice.site), kind.label()),
                    cost: choice.cost,
                    is_current,
                    uses: rows.uses((row, profile.demand), &choice.path, profile.bandwidth_mbps),
                });
                binds.push(Binding {
                    site: choice.site,
                    devices,
                    path: choice.path.clone(),
                    outcome: choice.outcome,
                    is_current,
                });
            } else {
                for device in topology.devices_at(choice.site) {
                    if device.kind != kind {
                        continue;
                    }
                    let is_current = device.id == p.device;
                    debug_assert!(!is_current || choice.cost == 2.0);
                    let row = rows.device_row(device.id);
                    candidates.push(CandidateEntry {
                        label: topology.device_name(device.id),
                        cost: choice.cost,
                        is_current,
                        uses: rows.uses((row, profile.demand), &choice.path, profile.bandwidth_mbps),
                    });
                    binds.push(Binding {
                        site: choice.site,
                        devices: vec![device.id],
                        path: choice.path.clone(),
                        outcome: choice.outcome,
                        is_current,
                    });
                }
            }
        }

        apps.push(AppEntry { label: format!("req-{}", p.request), candidates });
        bindings.push(binds);
    }

    let model = AssignmentModel { apps, resources: rows.rows };
    let requests = targets.to_vec();
    Ok((model, ModelBindings { requests, candidates: bindings }))
}

/// Solves the reconfiguration model without touching the state.
pub fn trial_reconfigure(
    state: &SystemState,
    targets: &[RequestId],
    budget: &SolveBudget,
) -> Result<ReconfigPlan, ReconfigError> {
    let (model, bindings) = build_model(state, targets)?;
    let solved = solve_exact(&model, budget)?;

    // Pooled choices name a device group, not a device. Re-derive concrete
    // devices against the real ledger: release every target, give stayers
    // their old device back, then first-fit each mover into its group. The
    // model counted whole-app slots with the same arithmetic, so a slot the
    // solver used is a slot this pass finds.
    let topology = state.topology();
    let mut ledger = state.ledger().clone();
    for &id in targets {
        let p = state.placement(id).ok_or(ReconfigError::UnknownRequest(id))?;
        let profile = state.profile_of(p);
        ledger.release(p.device, &p.path, profile.demand, profile.bandwidth_mbps);
    }
    for (k, &request) in bindings.requests.iter().enumerate() {
        let chosen = &bindings.candidates[k][solved.choice[k]];
        if chosen.is_current {
            let p = state.placement(request).ok_or(ReconfigError::UnknownRequest(request))?;
            let profile = state.profile_of(p);
            ledger
                .commit(topology, p.device, &p.path, profile.demand, profile.bandwidth_mbps)
                .map_err(|_| ReconfigError::PackingFailed(request))?;
        }
    }

    let mut entries = Vec::with_capacity(targets.len());
    for (k, &request) in bindings.requests.iter().enumerate() {
        let chosen = &bindings.candidates[k][solved.choice[k]];
        let reassignment = if chosen.is_current {
            None
        } else {
            let p = state.placement(request).ok_or(ReconfigError::UnknownRequest(request))?;
            let profile = state.profile_of(p);
            let device = chosen
                .devices
                .iter()
                .copied()
                .find(|&d| {
                    ledger.fits(topology, d, &chosen.path, profile.demand, profile.bandwidth_mbps)
                })
                .ok_or(ReconfigError::PackingFailed(request))?;
            ledger
                .commit(topology, device, &chosen.path, profile.demand, profile.bandwidth_mbps)
                .map_err(|_| ReconfigError::PackingFailed(request))?;
            Some(Reassignment {
                request,
                device,
                path: chosen.path.clone(),
                outcome: chosen.outcome,
            })
        };
        entries.push(PlanEntry {
            request,
            term: model.apps[k].candidates[solved.choice[k]].cost,
            reassignment,
        });
    }

    // Exact: every stay term is exactly 2, and small integer sums are exact.
    let s_before = 2.0 * targets.len() as f64;
    Ok(ReconfigPlan {
        version: state.version(),
        targets: targets.to_vec(),
        s_before,
        s_after: solved.objective,
        entries,
        certified: solved.certified,
        stats: solved.stats,
    })
}

/// Applies the plan iff it improves the objective by at least `epsilon` and
/// the state has not changed since the trial. Returns what happened either
/// way; the state is untouched when `applied` is false.
pub fn apply_if_beneficial(
    state: &mut SystemState,
    plan: &ReconfigPlan,
    epsilon: f64,
) -> Result<ReconfigReport, ReconfigError> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(ReconfigError::BadEpsilon(epsilon));
    }
    if plan.version != state.version() {
        return Err(ReconfigError::StalePlan { planned: plan.version, actual: state.version() });
    }

    let moves: Vec<Reassignment> =
        plan.entries.iter().filter_map(|e| e.reassignment.clone()).collect();
    let applied = plan.improvement() >= epsilon && !moves.is_empty();
    if applied {
        state.apply_reassignments(&moves)?;
    }

    let moved_terms: Vec<f64> = plan
        .entries
        .iter()
        .filter(|e| e.reassignment.is_some())
        .map(|e| e.term)
        .collect();
    let mean_moved_term = if moved_terms.is_empty() {
        None
    } else {
        Some(moved_terms.iter().sum::<f64>() / moved_terms.len() as f64)
    };

    Ok(ReconfigReport {
        applied,
        moved: if applied { moves.len() } else { 0 },
        mean_moved_term,
        s_before: plan.s_before,
        s_after: plan.s_after,
    })
}
