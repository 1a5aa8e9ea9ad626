//! Sequential first-come placement and the running system state.
//!
//! Each request is served in arrival order: enumerate the feasible
//! candidates on its input's ancestor chain, pick the one minimizing the
//! menu's objective, and commit it. Capacity freed later by reconfiguration
//! is never awaited here; a request that fits nowhere is recorded as
//! rejected and the state is left untouched.

use crate::evaluator::{outcome, CapacityError, EvalError, Outcome, UsageLedger};
use crate::topology::{DeviceId, LinkId, SiteId, Topology};
use crate::workload::{AppProfile, ConstraintMenu, PlacementRequest, RequestId, WorkloadError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PlaceError {
    #[error("request {0} is already placed")]
    DuplicateRequest(RequestId),
    #[error("request {request} names profile index {index}, catalog has {len}")]
    UnknownProfile { request: RequestId, index: usize, len: usize },
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Capacity(#[from] CapacityError),
    #[error("reassignment names unplaced request {0}")]
    UnknownRequest(RequestId),
    #[error("state audit failed after mutation: {0}")]
    AuditAfterMutation(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum AuditError {
    #[error("request {request}: stored device {device} does not match site/kind")]
    DeviceMismatch { request: RequestId, device: DeviceId },
    #[error("request {request}: stored path differs from the tree path")]
    PathMismatch { request: RequestId },
    #[error("request {request}: stored outcome differs from re-evaluation")]
    OutcomeDrift { request: RequestId },
    #[error("request {request}: outcome violates its menu bounds")]
    BoundViolated { request: RequestId },
    #[error("request {request}: {0}", request = .1)]
    Capacity(CapacityError, RequestId),
    #[error("ledger does not equal the sum of stored placements")]
    LedgerDrift,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A committed assignment: the device (and implied site/path) serving one
/// request, with the outcome it was admitted under and the menu it must
/// keep satisfying.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct Placement {
    pub request: RequestId,
    pub profile_index: usize,
    pub input: SiteId,
    pub site: SiteId,
    pub device: DeviceId,
    pub path: Vec<LinkId>,
    pub outcome: Outcome,
    pub menu: ConstraintMenu,
}

/// One feasible option for a request: a site with a free device of the
/// required kind, reachable within every menu bound.
#[derive(Clone, PartialEq, Debug)]
pub struct Candidate {
    pub site: SiteId,
    pub device: DeviceId,
    pub path: Vec<LinkId>,
    pub outcome: Outcome,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    /// No site on the chain can meet the menu even on an empty system.
    BoundsInfeasible,
    /// Bounds could be met somewhere, but every such site is out of capacity.
    CapacityExhausted,
}

#[derive(Clone, PartialEq, Debug)]
pub enum PlaceOutcome {
    Placed(Placement),
    Rejected(RejectReason),
}

/// A single app's move, as produced by an accepted reconfiguration plan.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct Reassignment {
    pub request: RequestId,
    pub device: DeviceId,
    pub path: Vec<LinkId>,
    pub outcome: Outcome,
}

/// The live system: immutable topology and catalog, plus the mutable ledger
/// and placement book. `version` bumps on every mutation so stale
/// reconfiguration plans can be detected.
#[derive(Clone, PartialEq, Debug)]
pub struct SystemState {
    topology: Topology,
    catalog: Vec<AppProfile>,
    ledger: UsageLedger,
    placements: BTreeMap<RequestId, Placement>,
    version: u64,
}

impl SystemState {
    pub fn new(topology: Topology, catalog: Vec<AppProfile>) -> Result<Self, PlaceError> {
        for profile in &catalog {
            profile.validate()?;
        }
        let ledger = UsageLedger::new(&topology);
        Ok(Self { topology, catalog, ledger, placements: BTreeMap::new(), version: 0 })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn catalog(&self) -> &[AppProfile] {
        &self.catalog
    }

    pub fn ledger(&self) -> &UsageLedger {
        &self.ledger
    }

    pub fn placements(&self) -> &BTreeMap<RequestId, Placement> {
        &self.placements
    }

    pub fn placement(&self, id: RequestId) -> Option<&Placement> {
        self.placements.get(&id)
    }

    pub fn profile_of(&self, placement: &Placement) -> &AppProfile {
        &self.catalog[placement.profile_index]
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    /// Feasible candidates for `request`, one per chain site: the lowest-id
    /// free device of the required kind, provided the path links have
    /// headroom and the outcome meets every menu bound.
    pub fn candidate_sites(
        &self,
        request: &PlacementRequest,
    ) -> Result<Vec<Candidate>, PlaceError> {
        Ok(self.survey(request)?.0)
    }

    /// Serves one request. On success the placement is committed and the
    /// version bumps; a rejection leaves the state untouched.
    pub fn place(&mut self, request: &PlacementRequest) -> Result<PlaceOutcome, PlaceError> {
        if self.placements.contains_key(&request.id) {
            return Err(PlaceError::DuplicateRequest(request.id));
        }
        let (candidates, bounds_feasible) = self.survey(request)?;
        let Some(best) = pick_best(&candidates, &request.menu) else {
            return Ok(PlaceOutcome::Rejected(if bounds_feasible {
                RejectReason::CapacityExhausted
            } else {
                RejectReason::BoundsInfeasible
            }));
        };

        let profile = &self.catalog[request.profile_index];
        self.ledger.commit(
            &self.topology,
            best.device,
            &best.path,
            profile.demand,
            profile.bandwidth_mbps,
        )?;
        let placement = Placement {
            request: request.id,
            profile_index: request.profile_index,
            input: request.input,
            site: best.site,
            device: best.device,
            path: best.path.clone(),
            outcome: best.outcome,
            menu: request.menu,
        };
        self.placements.insert(request.id, placement.clone());
        self.version += 1;
        Ok(PlaceOutcome::Placed(placement))
    }

    /// Applies a batch of moves atomically: all old usage is released, then
    /// every new placement committed, then the whole state re-audited. Any
    /// failure restores the state exactly as it was.
    pub fn apply_reassignments(&mut self, moves: &[Reassignment]) -> Result<(), PlaceError> {
        let backup_ledger = self.ledger.clone();
        let backup_placements = self.placements.clone();

        let result = self.try_apply(moves);
        if result.is_err() {
            self.ledger = backup_ledger;
            self.placements = backup_placements;
        }
        result
    }

    fn try_apply(&mut self, moves: &[Reassignment]) -> Result<(), PlaceError> {
        for m in moves {
            let placed =
                self.placements.get(&m.request).ok_or(PlaceError::UnknownRequest(m.request))?;
            let profile = &self.catalog[placed.profile_index];
            let (demand, bandwidth) = (profile.demand, profile.bandwidth_mbps);
            let (device, path) = (placed.device, placed.path.clone());
            self.ledger.release(device, &path, demand, bandwidth);
        }
        for m in moves {
            let placed = self.placements.get_mut(&m.request).expect("checked above");
            let profile = &self.catalog[placed.profile_index];
            self.ledger.commit(
                &self.topology,
                m.device,
                &m.path,
                profile.demand,
                profile.bandwidth_mbps,
            )?;
            placed.site = self.topology.device(m.device).site;
            placed.device = m.device;
            placed.path = m.path.clone();
            placed.outcome = m.outcome;
        }
        self.version += 1;
        self.audit().map_err(|e| PlaceError::AuditAfterMutation(e.to_string()))
    }

    /// Full consistency check: every stored placement re-evaluates to its
    /// stored outcome, meets its menu, and the ledger equals the exact sum
    /// of all placements without exceeding any capacity.
    pub fn audit(&self) -> Result<(), AuditError> {
        let mut rebuilt = UsageLedger::new(&self.topology);
        for (&id, placement) in &self.placements {
            let profile = &self.catalog[placement.profile_index];
            let device = self.topology.device(placement.device);
            if device.site != placement.site || device.kind != profile.required_kind {
                return Err(AuditError::DeviceMismatch { request: id, device: placement.device });
            }
            let path = self
                .topology
                .path_links(placement.input, placement.site)
                .map_err(EvalError::from)?;
            if path != placement.path {
                return Err(AuditError::PathMismatch { request: id });
            }
            let fresh = outcome(profile, placement.input, placement.site, &self.topology)?;
            if fresh != placement.outcome {
                return Err(AuditError::OutcomeDrift { request: id });
            }
            if !placement.menu.admits(fresh.response_time, fresh.price) {
                return Err(AuditError::BoundViolated { request: id });
            }
            rebuilt
                .commit(&self.topology, placement.device, &path, profile.demand, profile.bandwidth_mbps)
                .map_err(|e| AuditError::Capacity(e, id))?;
        }
        if rebuilt != self.ledger {
            return Err(AuditError::LedgerDrift);
        }
        Ok(())
    }

    /// Order-insensitive fingerprint of everything mutable: placements,
    /// ledger, and version. Used to prove trials leave the state untouched.
    pub fn digest(&self) -> u64 {
        let mut h = Fnv::new();
        h.u64(self.version);
        h.u64(self.placements.len() as u64);
        for (&id, p) in &self.placements {
            h.u64(id);
            h.u64(p.profile_index as u64);
            h.u64(u64::from(p.input.0));
            h.u64(u64::from(p.site.0));
            h.u64(u64::from(p.device.0));
            h.u64(p.path.len() as u64);
            for link in &p.path {
                h.u64(u64::from(link.0));
            }
            h.f64(p.outcome.response_time);
            h.f64(p.outcome.price);
            h.f64(p.menu.time_limit().unwrap_or(-1.0));
            h.f64(p.menu.price_limit().unwrap_or(-1.0));
            h.u64(p.menu.objective() as u64);
        }
        for device in self.topology.devices() {
            h.f64(self.ledger.device_used(device.id));
        }
        for link in self.topology.links() {
            h.f64(self.ledger.link_used(link.id));
        }
        h.finish()
    }

    fn survey(&self, request: &PlacementRequest) -> Result<(Vec<Candidate>, bool), PlaceError> {
        let profile = self.catalog.get(request.profile_index).ok_or(PlaceError::UnknownProfile {
            request: request.id,
            index: request.profile_index,
            len: self.catalog.len(),
        })?;
        let chain = self.topology.ancestor_sites(request.input).map_err(EvalError::from)?;

        let mut candidates = Vec::new();
        let mut bounds_feasible = false;
        for site in chain {
            let site_outcome = match outcome(profile, request.input, site, &self.topology) {
                Ok(o) => o,
                Err(EvalError::DeviceKindAbsent { .. }) => continue,
                Err(e) => return Err(e.into()),
            };
            if !request.menu.admits(site_outcome.response_time, site_outcome.price) {
                continue;
            }
            bounds_feasible = true;
            let path = self.topology.path_links(request.input, site).map_err(EvalError::from)?;
            let device = self
                .topology
                .devices_at(site)
                .iter()
                .filter(|d| d.kind == profile.required_kind)
                .find(|d| {
                    self.ledger.fits(&self.topology, d.id, &path, profile.demand, profile.bandwidth_mbps)
                });
            if let Some(device) = device {
                candidates.push(Candidate { site, device: device.id, path, outcome: site_outcome });
            }
        }
        Ok((candidates, bounds_feasible))
    }
}

/// Objective value first, then the other metric, fewer hops, smaller site,
/// smaller device. Total and deterministic.
fn pick_best<'a>(candidates: &'a [Candidate], menu: &ConstraintMenu) -> Option<&'a Candidate> {
    use crate::workload::Objective;
    let key = |c: &Candidate| {
        let (primary, secondary) = match menu.objective() {
            Objective::MinimizePrice => (c.outcome.price, c.outcome.response_time),
            Objective::MinimizeResponseTime => (c.outcome.response_time, c.outcome.price),
        };
        (primary, secondary, c.path.len(), c.site.0, c.device.0)
    };
    candidates.iter().min_by(|a, b| {
        key(a).partial_cmp(&key(b)).expect("outcome metrics are finite")
    })
}

/// FNV-1a, enough to fingerprint states for purity and replay checks.
struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    fn u64(&mut self, v: u64) {
        for byte in v.to_le_bytes() {
            self.0 ^= u64::from(byte);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }

    fn finish(&self) -> u64 {
        self.0
    }
}
