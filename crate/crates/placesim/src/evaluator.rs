//! Pure metric evaluation and the capacity ledger.
//!
//! Response time is the device processing time plus one transfer term per
//! path link, `data_Mbit / app_bandwidth_Mbps`; the app's own bandwidth is
//! what it occupies, so link capacity never enters the time. Price charges
//! each resource pro rata: `month_cost * used / capacity`, computed as
//! multiply-then-divide so the built-in tariffs come out as exact decimals.

use crate::topology::{DeviceId, DeviceKind, LinkId, SiteId, Topology, TopologyError};
use crate::workload::AppProfile;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("site {site} has no {kind} device")]
    DeviceKindAbsent { site: String, kind: DeviceKind },
    #[error("profile {0} has no processing time for its required device kind")]
    MissingProcessingTime(String),
    #[error("baseline outcome must be positive in both metrics")]
    NonPositiveBaseline,
}

#[derive(Debug, Error, PartialEq)]
pub enum CapacityError {
    #[error("device {name} over capacity: {used} + {requested} > {capacity}")]
    Device { name: String, used: f64, requested: f64, capacity: f64 },
    #[error("link {name} over capacity: {used} + {requested} > {capacity}")]
    Link { name: String, used: f64, requested: f64, capacity: f64 },
}

/// The two metrics a placement is judged by.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct Outcome {
    /// Seconds per interaction.
    pub response_time: f64,
    /// Yen per month.
    pub price: f64,
}

/// Processing time at `site` plus one transfer term per link on the path
/// from the input node's user edge up to `site`.
pub fn response_time(
    profile: &AppProfile,
    input: SiteId,
    site: SiteId,
    topology: &Topology,
) -> Result<f64, EvalError> {
    let processing = *profile
        .processing_time
        .get(&profile.required_kind)
        .ok_or_else(|| EvalError::MissingProcessingTime(profile.name.clone()))?;
    require_kind(profile, site, topology)?;
    let path = topology.path_links(input, site)?;
    let hop = profile.data_size_mbit() / profile.bandwidth_mbps;
    Ok(path.iter().fold(processing, |acc, _| acc + hop))
}

/// Pro-rata device rent plus pro-rata rent of every path link.
pub fn price(
    profile: &AppProfile,
    site: SiteId,
    path: &[LinkId],
    topology: &Topology,
) -> Result<f64, EvalError> {
    let device = require_kind(profile, site, topology)?;
    let mut total = device.month_cost * profile.demand / device.capacity;
    for &link_id in path {
        let link = topology.link(link_id);
        total += link.month_cost * profile.bandwidth_mbps / link.bandwidth_mbps;
    }
    Ok(total)
}

/// Both metrics for placing `profile` (requested at `input`) on `site`.
pub fn outcome(
    profile: &AppProfile,
    input: SiteId,
    site: SiteId,
    topology: &Topology,
) -> Result<Outcome, EvalError> {
    let response_time = response_time(profile, input, site, topology)?;
    let path = topology.path_links(input, site)?;
    let price = price(profile, site, &path, topology)?;
    Ok(Outcome { response_time, price })
}

/// Per-app summand of the reconfiguration objective:
/// `R_after/R_before + P_after/P_before`. An unchanged outcome gives exactly 2.
pub fn satisfaction_term(before: &Outcome, after: &Outcome) -> Result<f64, EvalError> {
    if !(before.response_time > 0.0 && before.price > 0.0) {
        return Err(EvalError::NonPositiveBaseline);
    }
    Ok(after.response_time / before.response_time + after.price / before.price)
}

/// First device of the profile's required kind at `site`; which one is
/// irrelevant for pricing since same-kind devices at a site share one spec.
fn require_kind<'t>(
    profile: &AppProfile,
    site: SiteId,
    topology: &'t Topology,
) -> Result<&'t crate::topology::Device, EvalError> {
    topology
        .devices_at(site)
        .iter()
        .find(|d| d.kind == profile.required_kind)
        .ok_or_else(|| EvalError::DeviceKindAbsent {
            site: topology.site_name(site),
            kind: profile.required_kind,
        })
}

/// Running account of committed device demand and link bandwidth.
///
/// `commit` enforces the capacity bounds (inclusive: filling a resource to
/// exactly its capacity is legal) and names the saturated resource on
/// rejection. `release` of a previously committed placement restores the
/// ledger exactly as long as quantities are exactly representable, which all
/// built-in tariffs are.
#[derive(Clone, PartialEq, Debug)]
pub struct UsageLedger {
    device_used: Vec<f64>,
    link_used: Vec<f64>,
}

impl UsageLedger {
    pub fn new(topology: &Topology) -> Self {
        Self {
            device_used: vec![0.0; topology.devices().len()],
            link_used: vec![0.0; topology.links().len()],
        }
    }

    pub fn device_used(&self, device: DeviceId) -> f64 {
        self.device_used[device.0 as usize]
    }

    pub fn link_used(&self, link: LinkId) -> f64 {
        self.link_used[link.0 as usize]
    }

    /// Checks headroom on the device and every path link without mutating.
    pub fn check(
        &self,
        topology: &Topology,
        device: DeviceId,
        path: &[LinkId],
        demand: f64,
        bandwidth_mbps: f64,
    ) -> Result<(), CapacityError> {
        let dev = topology.device(device);
        let used = self.device_used[device.0 as usize];
        if used + demand > dev.capacity {
            return Err(CapacityError::Device {
                name: topology.device_name(device),
                used,
                requested: demand,
                capacity: dev.capacity,
            });
        }
        for &link_id in path {
            let link = topology.link(link_id);
            let used = self.link_used[link_id.0 as usize];
            if used + bandwidth_mbps > link.bandwidth_mbps {
                return Err(CapacityError::Link {
                    name: topology.link_name(link_id),
                    used,
                    requested: bandwidth_mbps,
                    capacity: link.bandwidth_mbps,
                });
            }
        }
        Ok(())
    }

    pub fn fits(
        &self,
        topology: &Topology,
        device: DeviceId,
        path: &[LinkId],
        demand: f64,
        bandwidth_mbps: f64,
    ) -> bool {
        self.check(topology, device, path, demand, bandwidth_mbps).is_ok()
    }

    pub fn commit(
        &mut self,
        topology: &Topology,
        device: DeviceId,
        path: &[LinkId],
        demand: f64,
        bandwidth_mbps: f64,
    ) -> Result<(), CapacityError> {
        self.check(topology, device, path, demand, bandwidth_mbps)?;
        self.device_used[device.0 as usize] += demand;
        for &link_id in path {
            self.link_used[link_id.0 as usize] += bandwidth_mbps;
        }
        Ok(())
    }

    /// Inverse of a successful `commit` with the same arguments.
    pub fn release(&mut self, device: DeviceId, path: &[LinkId], demand: f64, bandwidth_mbps: f64) {
        self.device_used[device.0 as usize] -= demand;
        debug_assert!(self.device_used[device.0 as usize] >= 0.0);
        for &link_id in path {
            self.link_used[link_id.0 as usize] -= bandwidth_mbps;
            debug_assert!(self.link_used[link_id.0 as usize] >= 0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::scenario::{benchmark_hardware, benchmark_shape};
    use crate::topology::build_topology;
    use crate::workload::benchmark_catalog;

    const TOL: f64 = 1e-6;

    struct Bench {
        topology: Topology,
        nas: AppProfile,
        mri: AppProfile,
        input: SiteId,
        chain: [SiteId; 3],
    }

    fn bench() -> Bench {
        let topology = build_topology(&benchmark_shape(), &benchmark_hardware()).unwrap();
        let catalog = benchmark_catalog();
        let input = topology.input_nodes().next().unwrap();
        let chain = topology.ancestor_sites(input).unwrap();
        Bench { topology, nas: catalog[0].clone(), mri: catalog[1].clone(), input, chain }
    }

    #[test]
    fn nas_ft_response_times_across_tiers() {
        let b = bench();
        let [user, carrier, cloud] = b.chain;
        let rt = |site| response_time(&b.nas, b.input, site, &b.topology).unwrap();
        assert!((rt(user) - 5.8).abs() < TOL);
        assert!((rt(carrier) - 6.6).abs() < TOL);
        assert!((rt(cloud) - 7.4).abs() < TOL);
    }

    #[test]
    fn nas_ft_prices_across_tiers() {
        let b = bench();
        let [user, carrier, cloud] = b.chain;
        let p = |site| {
            let path = b.topology.path_links(b.input, site).unwrap();
            price(&b.nas, site, &path, &b.topology).unwrap()
        };
        assert!((p(user) - 9_375.0).abs() < TOL);
        assert!((p(carrier) - 8_412.5).abs() < TOL);
        assert!((p(cloud) - 7_010.0).abs() < TOL);
    }

    #[test]
    fn mri_q_metrics_across_tiers() {
        let b = bench();
        let [user, carrier, cloud] = b.chain;
        let o = |site| outcome(&b.mri, b.input, site, &b.topology).unwrap();

        // No FPGA at the user edge.
        assert_eq!(
            response_time(&b.mri, b.input, user, &b.topology),
            Err(EvalError::DeviceKindAbsent { site: "user-0".to_string(), kind: DeviceKind::Fpga })
        );

        let carrier_o = o(carrier);
        assert!((carrier_o.response_time - 3.2).abs() < TOL);
        assert!((carrier_o.price - 15_300.0).abs() < TOL);

        let cloud_o = o(cloud);
        assert!((cloud_o.response_time - 4.4).abs() < TOL);
        assert!((cloud_o.price - 12_380.0).abs() < TOL);
    }

    #[test]
    fn response_time_is_linear_in_hops() {
        let b = bench();
        let [user, carrier, cloud] = b.chain;
        for profile in [&b.nas, &b.mri] {
            if profile.required_kind == DeviceKind::Fpga {
                // user edge has no FPGA; check the carrier/cloud step only
                let hop = profile.data_size_mbit() / profile.bandwidth_mbps;
                let rt_carrier = response_time(profile, b.input, carrier, &b.topology).unwrap();
                let rt_cloud = response_time(profile, b.input, cloud, &b.topology).unwrap();
                assert!((rt_cloud - rt_carrier - hop).abs() < 1e-12);
            } else {
                let hop = profile.data_size_mbit() / profile.bandwidth_mbps;
                let base = response_time(profile, b.input, user, &b.topology).unwrap();
                for (h, site) in [(1, carrier), (2, cloud)] {
                    let rt = response_time(profile, b.input, site, &b.topology).unwrap();
                    assert!((rt - base - h as f64 * hop).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn satisfaction_term_examples() {
        let same = Outcome { response_time: 6.6, price: 8_412.5 };
        assert_eq!(satisfaction_term(&same, &same).unwrap(), 2.0);

        let after = Outcome { response_time: 7.4, price: 7_010.0 };
        let term = satisfaction_term(&same, &after).unwrap();
        assert!((term - 1.9545).abs() < 0.001);

        let halved = Outcome { response_time: 6.6, price: 8_412.5 / 2.0 };
        assert!((satisfaction_term(&same, &halved).unwrap() - 1.5).abs() < TOL);

        let broken = Outcome { response_time: 0.0, price: 1.0 };
        assert_eq!(satisfaction_term(&broken, &same), Err(EvalError::NonPositiveBaseline));
    }

    #[test]
    fn ledger_boundary_commit_and_overflow() {
        let b = bench();
        let [user, carrier, _] = b.chain;
        let mut ledger = UsageLedger::new(&b.topology);
        let path = b.topology.path_links(b.input, carrier).unwrap();
        let uplink = b.topology.site(user).uplink.unwrap();
        let gpu = b.topology.devices_at(carrier).iter().find(|d| d.kind == DeviceKind::Gpu).unwrap();

        // 10 Mbps uplink: five 2 Mbps commits land exactly on capacity.
        for _ in 0..5 {
            ledger.commit(&b.topology, gpu.id, &path, b.nas.demand, b.nas.bandwidth_mbps).unwrap();
        }
        assert_eq!(ledger.link_used(uplink), 10.0);

        let err = ledger
            .commit(&b.topology, gpu.id, &path, b.nas.demand, b.nas.bandwidth_mbps)
            .unwrap_err();
        match err {
            CapacityError::Link { used, capacity, .. } => {
                assert_eq!(used, 10.0);
                assert_eq!(capacity, 10.0);
            }
            other => panic!("expected a link rejection, got {other}"),
        }
    }

    #[test]
    fn commit_release_round_trip_restores_exactly() {
        let b = bench();
        let [_, carrier, cloud] = b.chain;
        let mut ledger = UsageLedger::new(&b.topology);
        let carrier_path = b.topology.path_links(b.input, carrier).unwrap();
        let cloud_path = b.topology.path_links(b.input, cloud).unwrap();
        let gpu = b.topology.devices_at(cloud).iter().find(|d| d.kind == DeviceKind::Gpu).unwrap();
        let fpga =
            b.topology.devices_at(carrier).iter().find(|d| d.kind == DeviceKind::Fpga).unwrap();

        ledger.commit(&b.topology, fpga.id, &carrier_path, b.mri.demand, b.mri.bandwidth_mbps).unwrap();
        let snapshot = ledger.clone();

        ledger.commit(&b.topology, gpu.id, &cloud_path, b.nas.demand, b.nas.bandwidth_mbps).unwrap();
        ledger.release(gpu.id, &cloud_path, b.nas.demand, b.nas.bandwidth_mbps);
        assert_eq!(ledger, snapshot);
    }

    #[test]
    fn device_saturation_names_the_device() {
        let b = bench();
        let [user, ..] = b.chain;
        let mut ledger = UsageLedger::new(&b.topology);
        let gpu = b.topology.devices_at(user).iter().find(|d| d.kind == DeviceKind::Gpu).unwrap();

        // 4 GB user-edge GPU: four 1 GB commits fill it.
        for _ in 0..4 {
            ledger.commit(&b.topology, gpu.id, &[], b.nas.demand, b.nas.bandwidth_mbps).unwrap();
        }
        let err = ledger.commit(&b.topology, gpu.id, &[], b.nas.demand, b.nas.bandwidth_mbps);
        assert_eq!(
            err,
            Err(CapacityError::Device {
                name: "user-0/gpu0".to_string(),
                used: 4.0,
                requested: 1.0,
                capacity: 4.0,
            })
        );
    }
}
