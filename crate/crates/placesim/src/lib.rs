//! Simulator for application placement on a three-tier user-edge / carrier-edge /
//! cloud topology, with periodic exact reconfiguration of running deployments.
//!
//! The crate is organised bottom-up:
//!
//! * [`topology`] - sites, devices, links and the tree wiring between them
//! * [`workload`] - application profiles, constraint menus, request generation
//! * [`evaluator`] - response time, price and the per-move satisfaction term
//! * [`placement`] - capacity ledger and greedy first-fit initial placement
//! * [`solver`] - exact assignment solver (branch and bound over an LP
//!   relaxation) plus a brute-force reference implementation
//! * [`reconfig`] - builds reconfiguration models from a running system and
//!   applies solved plans
//! * [`experiment`] - scenario files, end-to-end simulation runs, traces,
//!   summary statistics and deterministic export

pub mod evaluator;
pub mod experiment;
pub mod placement;
pub mod reconfig;
pub mod solver;
pub mod topology;
pub mod workload;

pub use evaluator::{price, response_time, satisfaction_term, Outcome};
pub use placement::{Placement, SystemState};
pub use topology::{DeviceId, DeviceKind, LinkId, SiteId, SiteKind, Topology};
pub use workload::{AppProfile, ConstraintMenu, Objective, PlacementRequest, RequestId};
