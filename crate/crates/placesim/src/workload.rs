//! Application catalog, per-user constraint menus, and seeded request
//! generation.
//!
//! A request fixes an app profile, an origin input node, and a menu with a
//! response-time bound, a price bound, or both. The metric the user did not
//! bound is the one the placement minimizes; when both bounds are set the
//! objective is drawn at generation time.

use crate::topology::{DeviceKind, SiteId};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Dense arrival index; doubles as the placement order.
pub type RequestId = u64;

#[derive(Debug, Error, PartialEq)]
pub enum WorkloadError {
    #[error("profile {0}: {1}")]
    BadProfile(String, &'static str),
    #[error("unknown profile {0}")]
    UnknownProfile(String),
    #[error("menu option {0}: {1}")]
    BadOption(String, &'static str),
    #[error("constraint menu needs at least one bound")]
    NoBounds,
    #[error("constraint menu bounds must be positive and finite")]
    BadBound,
    #[error("objective is forced to {forced:?} when only one bound is set")]
    ObjectiveMismatch { forced: Objective },
    #[error("objective must be given when both bounds are set")]
    ObjectiveRequired,
    #[error("request count must be positive")]
    EmptyRequestCount,
    #[error("no input nodes to draw from")]
    NoInputs,
    #[error("workload has no profiles with a positive share")]
    NoShares,
    #[error("quota {share}:{total} does not divide {n} requests evenly for profile {profile}")]
    IndivisibleQuota { profile: String, share: u32, total: u32, n: usize },
    #[error("unknown rng id {0:?} (expected \"chacha8\")")]
    UnknownRng(String),
}

/// Resource demand and timing shape of one application.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct AppProfile {
    pub name: String,
    /// Device kind the app must run on.
    pub required_kind: DeviceKind,
    /// Consumed device capacity, in the device kind's unit.
    pub demand: f64,
    /// Bandwidth the app occupies on every path link (Mbps).
    pub bandwidth_mbps: f64,
    /// Data transferred per interaction (MB, decimal: 1 MB = 8 Mbit).
    pub data_size_mb: f64,
    /// Processing seconds per device kind the app has been ported to.
    pub processing_time: BTreeMap<DeviceKind, f64>,
}

impl AppProfile {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        let bad = |reason| Err(WorkloadError::BadProfile(self.name.clone(), reason));
        if !(self.demand > 0.0 && self.demand.is_finite()) {
            return bad("demand must be positive and finite");
        }
        if !(self.bandwidth_mbps > 0.0 && self.bandwidth_mbps.is_finite()) {
            return bad("bandwidth must be positive and finite");
        }
        if !(self.data_size_mb >= 0.0 && self.data_size_mb.is_finite()) {
            return bad("data size must be non-negative and finite");
        }
        if self.processing_time.values().any(|t| !(*t > 0.0 && t.is_finite())) {
            return bad("processing times must be positive and finite");
        }
        if !self.processing_time.contains_key(&self.required_kind) {
            return bad("no processing time for the required device kind");
        }
        Ok(())
    }

    pub fn data_size_mbit(&self) -> f64 {
        self.data_size_mb * 8.0
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    MinimizePrice,
    MinimizeResponseTime,
}

#[derive(Serialize, Deserialize)]
struct RawMenu {
    time_limit: Option<f64>,
    price_limit: Option<f64>,
    objective: Objective,
}

/// A user's accepted bounds plus the metric to minimize.
///
/// Fields are private so every value system-wide went through [`ConstraintMenu::new`].
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawMenu", into = "RawMenu")]
pub struct ConstraintMenu {
    time_limit: Option<f64>,
    price_limit: Option<f64>,
    objective: Objective,
}

impl ConstraintMenu {
    /// `objective` may be omitted when a single bound forces it.
    pub fn new(
        time_limit: Option<f64>,
        price_limit: Option<f64>,
        objective: Option<Objective>,
    ) -> Result<Self, WorkloadError> {
        for bound in [time_limit, price_limit].into_iter().flatten() {
            if !(bound > 0.0 && bound.is_finite()) {
                return Err(WorkloadError::BadBound);
            }
        }
        let objective = match (time_limit, price_limit) {
            (None, None) => return Err(WorkloadError::NoBounds),
            (Some(_), None) => force_objective(Objective::MinimizePrice, objective)?,
            (None, Some(_)) => force_objective(Objective::MinimizeResponseTime, objective)?,
            (Some(_), Some(_)) => objective.ok_or(WorkloadError::ObjectiveRequired)?,
        };
        Ok(Self { time_limit, price_limit, objective })
    }

    pub fn time_limit(&self) -> Option<f64> {
        self.time_limit
    }

    pub fn price_limit(&self) -> Option<f64> {
        self.price_limit
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    /// True when the outcome meets every bound that is set (exact comparison).
    pub fn admits(&self, response_time: f64, price: f64) -> bool {
        self.time_limit.is_none_or(|t| response_time <= t)
            && self.price_limit.is_none_or(|p| price <= p)
    }
}

fn force_objective(
    forced: Objective,
    given: Option<Objective>,
) -> Result<Objective, WorkloadError> {
    match given {
        None => Ok(forced),
        Some(o) if o == forced => Ok(forced),
        Some(_) => Err(WorkloadError::ObjectiveMismatch { forced }),
    }
}

impl TryFrom<RawMenu> for ConstraintMenu {
    type Error = WorkloadError;

    fn try_from(raw: RawMenu) -> Result<Self, WorkloadError> {
        ConstraintMenu::new(raw.time_limit, raw.price_limit, Some(raw.objective))
    }
}

impl From<ConstraintMenu> for RawMenu {
    fn from(menu: ConstraintMenu) -> RawMenu {
        RawMenu {
            time_limit: menu.time_limit,
            price_limit: menu.price_limit,
            objective: menu.objective,
        }
    }
}

/// One entry of a profile's menu list, drawn with probability
/// `weight / total weight`.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct MenuOption {
    pub label: String,
    #[serde(default = "default_weight")]
    pub weight: u32,
    pub time_limit: Option<f64>,
    pub price_limit: Option<f64>,
}

fn default_weight() -> u32 {
    1
}

impl MenuOption {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        let bad = |reason| Err(WorkloadError::BadOption(self.label.clone(), reason));
        if self.weight == 0 {
            return bad("weight must be positive");
        }
        if self.time_limit.is_none() && self.price_limit.is_none() {
            return bad("at least one bound is required");
        }
        ConstraintMenu::new(self.time_limit, self.price_limit, both_bounds_placeholder(self))
            .map_err(|_| WorkloadError::BadOption(self.label.clone(), "bounds must be positive and finite"))?;
        Ok(())
    }

    /// Turns the option into a concrete menu, drawing the objective when both
    /// bounds are set. Exactly one RNG draw happens in that case, none otherwise.
    pub fn realize(&self, rng: &mut impl Rng) -> Result<ConstraintMenu, WorkloadError> {
        let objective = match (self.time_limit, self.price_limit) {
            (Some(_), Some(_)) => Some(if rng.random_range(0..2u8) == 0 {
                Objective::MinimizePrice
            } else {
                Objective::MinimizeResponseTime
            }),
            _ => None,
        };
        ConstraintMenu::new(self.time_limit, self.price_limit, objective)
    }
}

fn both_bounds_placeholder(option: &MenuOption) -> Option<Objective> {
    match (option.time_limit, option.price_limit) {
        (Some(_), Some(_)) => Some(Objective::MinimizePrice),
        _ => None,
    }
}

#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct PlacementRequest {
    pub id: RequestId,
    pub input: SiteId,
    /// Index into the run's app catalog.
    pub profile_index: usize,
    pub menu: ConstraintMenu,
}

/// Seedable generator identifier, pinned by name in scenario files so traces
/// stay reproducible across builds and platforms.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum RngId {
    #[serde(rename = "chacha8")]
    ChaCha8,
}

impl RngId {
    pub fn build(self, seed: u64) -> ChaCha8Rng {
        match self {
            RngId::ChaCha8 => ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl fmt::Display for RngId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RngId::ChaCha8 => f.write_str("chacha8"),
        }
    }
}

impl FromStr for RngId {
    type Err = WorkloadError;

    fn from_str(s: &str) -> Result<Self, WorkloadError> {
        match s {
            "chacha8" => Ok(RngId::ChaCha8),
            other => Err(WorkloadError::UnknownRng(other.to_string())),
        }
    }
}

/// One catalog entry of a request mix: the profile, its menu, and its share
/// of the quota (e.g. shares 3 and 1 give a 3:1 mix).
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct WorkloadEntry {
    pub profile: AppProfile,
    pub options: Vec<MenuOption>,
    pub share: u32,
}

/// Generates `n` requests with exact per-profile quotas (shuffled), uniform
/// input nodes, and menus drawn from each profile's weighted option list.
///
/// Draw order is fixed: one shuffle of the quota sequence, then per request
/// one input draw, one option draw, and one objective draw only when the
/// option has both bounds. Same `(rng_id, seed)` gives an identical list.
pub fn generate_requests(
    workload: &[WorkloadEntry],
    inputs: &[SiteId],
    n: usize,
    rng_id: RngId,
    seed: u64,
) -> Result<Vec<PlacementRequest>, WorkloadError> {
    if n == 0 {
        return Err(WorkloadError::EmptyRequestCount);
    }
    if inputs.is_empty() {
        return Err(WorkloadError::NoInputs);
    }
    for entry in workload {
        entry.profile.validate()?;
        if entry.options.is_empty() && entry.share > 0 {
            return Err(WorkloadError::BadProfile(
                entry.profile.name.clone(),
                "profile has a share but no menu options",
            ));
        }
        for option in &entry.options {
            option.validate()?;
        }
    }
    let total_share: u32 = workload.iter().map(|e| e.share).sum();
    if total_share == 0 {
        return Err(WorkloadError::NoShares);
    }

    let mut order = Vec::with_capacity(n);
    for (index, entry) in workload.iter().enumerate() {
        let numerator = n * entry.share as usize;
        if numerator % total_share as usize != 0 {
            return Err(WorkloadError::IndivisibleQuota {
                profile: entry.profile.name.clone(),
                share: entry.share,
                total: total_share,
                n,
            });
        }
        order.extend(std::iter::repeat_n(index, numerator / total_share as usize));
    }
    debug_assert_eq!(order.len(), n);

    let mut rng = rng_id.build(seed);
    order.shuffle(&mut rng);

    let mut requests = Vec::with_capacity(n);
    for (id, &profile_index) in order.iter().enumerate() {
        let input = inputs[rng.random_range(0..inputs.len())];
        let option = draw_option(&workload[profile_index].options, &mut rng);
        let menu = option.realize(&mut rng)?;
        requests.push(PlacementRequest { id: id as RequestId, input, profile_index, menu });
    }
    Ok(requests)
}

fn draw_option<'a>(options: &'a [MenuOption], rng: &mut impl Rng) -> &'a MenuOption {
    let total: u64 = options.iter().map(|o| o.weight as u64).sum();
    let mut ticket = rng.random_range(0..total);
    for option in options {
        if ticket < option.weight as u64 {
            return option;
        }
        ticket -= option.weight as u64;
    }
    unreachable!("ticket is below the total weight")
}

/// The two built-in benchmark apps: a GPU-ported FFT kernel and an
/// FPGA-ported MRI reconstruction kernel.
pub fn benchmark_catalog() -> Vec<AppProfile> {
    vec![
        AppProfile {
            name: "NAS.FT".to_string(),
            required_kind: DeviceKind::Gpu,
            demand: 1.0,
            bandwidth_mbps: 2.0,
            data_size_mb: 0.2,
            processing_time: BTreeMap::from([(DeviceKind::Gpu, 5.8)]),
        },
        AppProfile {
            name: "MRI-Q".to_string(),
            required_kind: DeviceKind::Fpga,
            demand: 10.0,
            bandwidth_mbps: 1.0,
            data_size_mb: 0.15,
            processing_time: BTreeMap::from([(DeviceKind::Fpga, 2.0)]),
        },
    ]
}

/// Menu lists for the built-in profiles. Single letters carry one bound
/// (lowercase price, uppercase time); pairs carry both.
pub fn constraint_options(profile_name: &str) -> Result<Vec<MenuOption>, WorkloadError> {
    let combo = |label: &str, time: Option<f64>, price: Option<f64>| MenuOption {
        label: label.to_string(),
        weight: 1,
        time_limit: time,
        price_limit: price,
    };
    match profile_name {
        "NAS.FT" => Ok(vec![
            combo("a", None, Some(7_500.0)),
            combo("b", None, Some(8_500.0)),
            combo("c", None, Some(10_000.0)),
            combo("A", Some(6.0), None),
            combo("B", Some(7.0), None),
            combo("C", Some(10.0), None),
            combo("aC", Some(10.0), Some(7_500.0)),
            combo("bB", Some(7.0), Some(8_500.0)),
            combo("bC", Some(10.0), Some(8_500.0)),
            combo("cA", Some(6.0), Some(10_000.0)),
            combo("cB", Some(7.0), Some(10_000.0)),
            combo("cC", Some(10.0), Some(10_000.0)),
        ]),
        "MRI-Q" => Ok(vec![
            combo("x", None, Some(12_500.0)),
            combo("y", None, Some(20_000.0)),
            combo("X", Some(4.0), None),
            combo("Y", Some(8.0), None),
            combo("xY", Some(8.0), Some(12_500.0)),
            combo("yX", Some(4.0), Some(20_000.0)),
            combo("yY", Some(8.0), Some(20_000.0)),
        ]),
        other => Err(WorkloadError::UnknownProfile(other.to_string())),
    }
}

/// Built-in catalog zipped with its menus at the 3:1 request mix.
pub fn benchmark_workload() -> Vec<WorkloadEntry> {
    benchmark_catalog()
        .into_iter()
        .zip([3u32, 1])
        .map(|(profile, share)| {
            let options = constraint_options(&profile.name).expect("built-in profiles have menus");
            WorkloadEntry { profile, options, share }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(n: u32) -> Vec<SiteId> {
        (0..n).map(SiteId).collect()
    }

    #[test]
    fn catalog_values() {
        let catalog = benchmark_catalog();
        assert_eq!(catalog[0].name, "NAS.FT");
        assert_eq!(catalog[0].required_kind, DeviceKind::Gpu);
        assert_eq!(catalog[0].processing_time[&DeviceKind::Gpu], 5.8);
        assert_eq!(catalog[0].data_size_mbit(), 1.6);
        assert_eq!(catalog[1].name, "MRI-Q");
        assert_eq!(catalog[1].demand, 10.0);
        assert_eq!(catalog[1].processing_time[&DeviceKind::Fpga], 2.0);
        for profile in &catalog {
            profile.validate().unwrap();
        }
    }

    #[test]
    fn option_lists_match_menu_grid() {
        let nas = constraint_options("NAS.FT").unwrap();
        assert_eq!(nas.len(), 12);
        let mri = constraint_options("MRI-Q").unwrap();
        assert_eq!(mri.len(), 7);
        for option in nas.iter().chain(&mri) {
            option.validate().unwrap();
        }

        let bb = nas.iter().find(|o| o.label == "bB").unwrap();
        assert_eq!((bb.price_limit, bb.time_limit), (Some(8_500.0), Some(7.0)));
        let x_only = mri.iter().find(|o| o.label == "X").unwrap();
        assert_eq!((x_only.price_limit, x_only.time_limit), (None, Some(4.0)));

        assert_eq!(
            constraint_options("unknown"),
            Err(WorkloadError::UnknownProfile("unknown".to_string()))
        );
    }

    #[test]
    fn single_bound_forces_objective() {
        let price_only = ConstraintMenu::new(None, Some(7_500.0), None).unwrap();
        assert_eq!(price_only.objective(), Objective::MinimizeResponseTime);
        let time_only = ConstraintMenu::new(Some(6.0), None, None).unwrap();
        assert_eq!(time_only.objective(), Objective::MinimizePrice);

        assert_eq!(
            ConstraintMenu::new(None, Some(7_500.0), Some(Objective::MinimizePrice)),
            Err(WorkloadError::ObjectiveMismatch { forced: Objective::MinimizeResponseTime })
        );
        assert_eq!(ConstraintMenu::new(None, None, None), Err(WorkloadError::NoBounds));
        assert_eq!(
            ConstraintMenu::new(Some(6.0), Some(7_500.0), None),
            Err(WorkloadError::ObjectiveRequired)
        );
    }

    #[test]
    fn menu_admits_is_exact_on_the_boundary() {
        let menu =
            ConstraintMenu::new(Some(7.0), Some(8_500.0), Some(Objective::MinimizePrice)).unwrap();
        assert!(menu.admits(7.0, 8_500.0));
        assert!(!menu.admits(7.0 + 1e-9, 8_500.0));
        assert!(!menu.admits(7.0, 8_500.5));
    }

    #[test]
    fn menu_serde_round_trip_rejects_tampered_objective() {
        let menu = ConstraintMenu::new(Some(6.0), None, None).unwrap();
        let json = serde_json::to_string(&menu).unwrap();
        assert_eq!(serde_json::from_str::<ConstraintMenu>(&json).unwrap(), menu);

        let tampered = r#"{"time_limit":6.0,"price_limit":null,"objective":"minimize-response-time"}"#;
        assert!(serde_json::from_str::<ConstraintMenu>(tampered).is_err());
    }

    #[test]
    fn quota_is_exact_for_every_seed() {
        let workload = benchmark_workload();
        for seed in 0..5 {
            let requests = generate_requests(&workload, &inputs(300), 400, RngId::ChaCha8, seed).unwrap();
            assert_eq!(requests.len(), 400);
            let nas = requests.iter().filter(|r| r.profile_index == 0).count();
            assert_eq!(nas, 300);
            assert!(requests.iter().enumerate().all(|(i, r)| r.id == i as u64));
        }
    }

    #[test]
    fn indivisible_quota_is_rejected() {
        let workload = benchmark_workload();
        let err = generate_requests(&workload, &inputs(300), 5, RngId::ChaCha8, 1).unwrap_err();
        assert!(matches!(err, WorkloadError::IndivisibleQuota { n: 5, .. }));
    }

    #[test]
    fn same_seed_same_stream() {
        let workload = benchmark_workload();
        let a = generate_requests(&workload, &inputs(300), 40, RngId::ChaCha8, 7).unwrap();
        let b = generate_requests(&workload, &inputs(300), 40, RngId::ChaCha8, 7).unwrap();
        assert_eq!(a, b);
        let c = generate_requests(&workload, &inputs(300), 40, RngId::ChaCha8, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn option_frequencies_are_near_uniform() {
        let workload = benchmark_workload();
        let requests =
            generate_requests(&workload, &inputs(300), 16_000, RngId::ChaCha8, 42).unwrap();
        let nas_options = constraint_options("NAS.FT").unwrap();
        let mut counts = vec![0usize; nas_options.len()];
        for request in requests.iter().filter(|r| r.profile_index == 0) {
            let slot = nas_options
                .iter()
                .position(|o| {
                    o.time_limit == request.menu.time_limit()
                        && o.price_limit == request.menu.price_limit()
                })
                .expect("every menu comes from an option");
            counts[slot] += 1;
        }
        let total: usize = counts.iter().sum();
        assert_eq!(total, 12_000);
        for count in counts {
            let freq = count as f64 / total as f64;
            assert!((freq - 1.0 / 12.0).abs() < 0.01, "option frequency {freq} drifted");
        }
    }

    #[test]
    fn both_bound_options_draw_either_objective() {
        let workload = benchmark_workload();
        let requests =
            generate_requests(&workload, &inputs(300), 4_000, RngId::ChaCha8, 3).unwrap();
        let both: Vec<_> = requests
            .iter()
            .filter(|r| r.menu.time_limit().is_some() && r.menu.price_limit().is_some())
            .collect();
        assert!(both.iter().any(|r| r.menu.objective() == Objective::MinimizePrice));
        assert!(both.iter().any(|r| r.menu.objective() == Objective::MinimizeResponseTime));
    }

    #[test]
    fn rng_id_round_trips_by_name() {
        assert_eq!("chacha8".parse::<RngId>().unwrap(), RngId::ChaCha8);
        assert_eq!(RngId::ChaCha8.to_string(), "chacha8");
        assert!("mt19937".parse::<RngId>().is_err());
        assert_eq!(serde_json::to_string(&RngId::ChaCha8).unwrap(), "\"chacha8\"");
    }
}
