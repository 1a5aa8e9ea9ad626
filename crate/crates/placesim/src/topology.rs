//! Three-tier tree of compute sites: clouds at the roots, carrier edges below
//! them, user edges below those, and input nodes (request origins) as leaves.
//!
//! Input nodes attach to their user edge without a link: that hop has no cost,
//! no capacity, and no transfer time. Only user-edge->carrier and
//! carrier->cloud links exist in the model.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::Range;
use thiserror::Error;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SiteId(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DeviceId(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinkId(pub u32);

impl fmt::Display for SiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for DeviceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SiteKind {
    Cloud,
    CarrierEdge,
    UserEdge,
    InputNode,
}

impl SiteKind {
    pub fn label(self) -> &'static str {
        match self {
            SiteKind::Cloud => "cloud",
            SiteKind::CarrierEdge => "carrier",
            SiteKind::UserEdge => "user",
            SiteKind::InputNode => "input",
        }
    }
}

impl fmt::Display for SiteKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeviceKind {
    Cpu,
    Gpu,
    Fpga,
}

impl DeviceKind {
    pub fn label(self) -> &'static str {
        match self {
            DeviceKind::Cpu => "cpu",
            DeviceKind::Gpu => "gpu",
            DeviceKind::Fpga => "fpga",
        }
    }

    /// Unit the capacity and per-app demand are measured in.
    pub fn unit(self) -> &'static str {
        match self {
            DeviceKind::Cpu => "units",
            DeviceKind::Gpu => "GB",
            DeviceKind::Fpga => "%",
        }
    }
}

impl fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One device class at one tier: `count` identical instances per site.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct DeviceSpec {
    pub kind: DeviceKind,
    pub count: u32,
    /// Capacity in the kind's unit (GB for GPU, % for FPGA, abstract for CPU).
    pub capacity: f64,
    /// Monthly price (yen) for the whole device.
    pub month_cost: f64,
}

#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct LinkSpec {
    pub bandwidth_mbps: f64,
    pub month_cost: f64,
}

/// Per-tier hardware: device lists plus the uplink spec of each lower tier.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct HardwareCatalog {
    pub cloud_devices: Vec<DeviceSpec>,
    pub carrier_devices: Vec<DeviceSpec>,
    pub user_devices: Vec<DeviceSpec>,
    /// user edge -> carrier edge.
    pub user_uplink: LinkSpec,
    /// carrier edge -> cloud.
    pub carrier_uplink: LinkSpec,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct TopologyShape {
    pub clouds: u32,
    pub carriers: u32,
    pub users: u32,
    pub inputs: u32,
}

#[derive(Clone, PartialEq, Debug)]
pub struct Site {
    pub id: SiteId,
    pub kind: SiteKind,
    /// Index within its own layer (0-based).
    pub layer_index: u32,
    pub parent: Option<SiteId>,
    /// Link to the parent; `None` for clouds and for input nodes.
    pub uplink: Option<LinkId>,
    devices: Range<u32>,
}

#[derive(Clone, PartialEq, Debug)]
pub struct Device {
    pub id: DeviceId,
    pub site: SiteId,
    pub kind: DeviceKind,
    pub capacity: f64,
    pub month_cost: f64,
}

#[derive(Clone, PartialEq, Debug)]
pub struct Link {
    pub id: LinkId,
    pub child: SiteId,
    pub parent: SiteId,
    pub bandwidth_mbps: f64,
    pub month_cost: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("{layer} layer has no sites")]
    EmptyLayer { layer: &'static str },
    #[error("{layer} count {count} does not divide evenly over {parent_layer} count {parent_count}")]
    UnevenFanout {
        layer: &'static str,
        count: u32,
        parent_layer: &'static str,
        parent_count: u32,
    },
    #[error("duplicate {kind} device spec for {tier} sites")]
    DuplicateDeviceSpec { tier: &'static str, kind: DeviceKind },
    #[error("bad {kind} device spec for {tier} sites: {reason}")]
    BadDeviceSpec {
        tier: &'static str,
        kind: DeviceKind,
        reason: &'static str,
    },
    #[error("bad {which} link spec: {reason}")]
    BadLinkSpec {
        which: &'static str,
        reason: &'static str,
    },
    #[error("unknown site id {0}")]
    UnknownSite(SiteId),
    #[error("site {0} is not an input node")]
    NotAnInput(SiteId),
    #[error("site {site} is not on the ancestor chain of input {input}")]
    NotAnAncestor { input: SiteId, site: SiteId },
}

/// Immutable after construction; free to share across threads.
#[derive(Clone, PartialEq, Debug)]
pub struct Topology {
    shape: TopologyShape,
    sites: Vec<Site>,
    devices: Vec<Device>,
    links: Vec<Link>,
}

pub fn build_topology(
    shape: &TopologyShape,
    catalog: &HardwareCatalog,
) -> Result<Topology, TopologyError> {
    check_shape(shape)?;
    check_catalog(catalog)?;

    let TopologyShape { clouds, carriers, users, inputs } = *shape;
    let cloud_base = 0u32;
    let carrier_base = clouds;
    let user_base = clouds + carriers;
    let input_base = clouds + carriers + users;
    let total = input_base + inputs;

    let mut sites = Vec::with_capacity(total as usize);
    let mut devices = Vec::new();
    let mut links = Vec::new();

    let push_site = |sites: &mut Vec<Site>,
                         devices: &mut Vec<Device>,
                         kind: SiteKind,
                         layer_index: u32,
                         parent: Option<SiteId>,
                         uplink: Option<LinkId>,
                         specs: &[DeviceSpec]| {
        let id = SiteId(sites.len() as u32);
        let first = devices.len() as u32;
        for spec in specs {
            for _ in 0..spec.count {
                devices.push(Device {
                    id: DeviceId(devices.len() as u32),
                    site: id,
                    kind: spec.kind,
                    capacity: spec.capacity,
                    month_cost: spec.month_cost,
                });
            }
        }
        sites.push(Site {
            id,
            kind,
            layer_index,
            parent,
            uplink,
            devices: first..devices.len() as u32,
        });
    };

    for i in 0..clouds {
        push_site(&mut sites, &mut devices, SiteKind::Cloud, i, None, None, &catalog.cloud_devices);
    }
    for i in 0..carriers {
        let parent = SiteId(cloud_base + i / (carriers / clouds));
        let uplink = LinkId(users + i);
        push_site(
            &mut sites,
            &mut devices,
            SiteKind::CarrierEdge,
            i,
            Some(parent),
            Some(uplink),
            &catalog.carrier_devices,
        );
    }
    for i in 0..users {
        let parent = SiteId(carrier_base + i / (users / carriers));
        let uplink = LinkId(i);
        push_site(
            &mut sites,
            &mut devices,
            SiteKind::UserEdge,
            i,
            Some(parent),
            Some(uplink),
            &catalog.user_devices,
        );
    }
    for i in 0..inputs {
        let parent = SiteId(user_base + i / (inputs / users));
        push_site(&mut sites, &mut devices, SiteKind::InputNode, i, Some(parent), None, &[]);
    }

    // User uplinks occupy link ids 0..users, carrier uplinks follow.
    for i in 0..users {
        let child = SiteId(user_base + i);
        links.push(Link {
            id: LinkId(i),
            child,
            parent: sites[child.0 as usize].parent.unwrap(),
            bandwidth_mbps: catalog.user_uplink.bandwidth_mbps,
            month_cost: catalog.user_uplink.month_cost,
        });
    }
    for i in 0..carriers {
        let child = SiteId(carrier_base + i);
        links.push(Link {
            id: LinkId(users + i),
            child,
            parent: sites[child.0 as usize].parent.unwrap(),
            bandwidth_mbps: catalog.carrier_uplink.bandwidth_mbps,
            month_cost: catalog.carrier_uplink.month_cost,
        });
    }

    Ok(Topology { shape: *shape, sites, devices, links })
}

fn check_shape(shape: &TopologyShape) -> Result<(), TopologyError> {
    let layers = [
        ("cloud", shape.clouds),
        ("carrier-edge", shape.carriers),
        ("user-edge", shape.users),
        ("input", shape.inputs),
    ];
    for (layer, count) in layers {
        if count == 0 {
            return Err(TopologyError::EmptyLayer { layer });
        }
    }
    let fan = [
        ("carrier-edge", shape.carriers, "cloud", shape.clouds),
        ("user-edge", shape.users, "carrier-edge", shape.carriers),
        ("input", shape.inputs, "user-edge", shape.users),
    ];
    for (layer, count, parent_layer, parent_count) in fan {
        if count % parent_count != 0 {
            return Err(TopologyError::UnevenFanout { layer, count, parent_layer, parent_count });
        }
    }
    Ok(())
}

fn check_catalog(catalog: &HardwareCatalog) -> Result<(), TopologyError> {
    let tiers = [
        ("cloud", &catalog.cloud_devices),
        ("carrier-edge", &catalog.carrier_devices),
        ("user-edge", &catalog.user_devices),
    ];
    for (tier, specs) in tiers {
        for (i, spec) in specs.iter().enumerate() {
            if specs[..i].iter().any(|s| s.kind == spec.kind) {
                return Err(TopologyError::DuplicateDeviceSpec { tier, kind: spec.kind });
            }
            if !(spec.capacity > 0.0 && spec.capacity.is_finite()) {
                return Err(TopologyError::BadDeviceSpec {
                    tier,
                    kind: spec.kind,
                    reason: "capacity must be positive and finite",
                });
            }
            if !(spec.month_cost > 0.0 && spec.month_cost.is_finite()) {
                return Err(TopologyError::BadDeviceSpec {
                    tier,
                    kind: spec.kind,
                    reason: "month_cost must be positive and finite",
                });
            }
        }
    }
    for (which, link) in [("user-uplink", &catalog.user_uplink), ("carrier-uplink", &catalog.carrier_uplink)] {
        if !(link.bandwidth_mbps > 0.0 && link.bandwidth_mbps.is_finite()) {
            return Err(TopologyError::BadLinkSpec { which, reason: "bandwidth must be positive and finite" });
        }
        if !(link.month_cost >= 0.0 && link.month_cost.is_finite()) {
            return Err(TopologyError::BadLinkSpec { which, reason: "month_cost must be non-negative and finite" });
        }
    }
    Ok(())
}

impl Topology {
    pub fn shape(&self) -> &TopologyShape {
        &self.shape
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn devices(&self) -> &[Device] {
        &self.devices
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn site(&self, id: SiteId) -> &Site {
        &self.sites[id.0 as usize]
    }

    pub fn device(&self, id: DeviceId) -> &Device {
        &self.devices[id.0 as usize]
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.0 as usize]
    }

    fn get_site(&self, id: SiteId) -> Result<&Site, TopologyError> {
        self.sites.get(id.0 as usize).ok_or(TopologyError::UnknownSite(id))
    }

    pub fn input_nodes(&self) -> impl Iterator<Item = SiteId> + '_ {
        let base = self.shape.clouds + self.shape.carriers + self.shape.users;
        (base..base + self.shape.inputs).map(SiteId)
    }

    pub fn devices_at(&self, site: SiteId) -> &[Device] {
        let r = &self.sites[site.0 as usize].devices;
        &self.devices[r.start as usize..r.end as usize]
    }

    /// Walks the parent map from an input node to the root.
    /// Returns `[user edge, carrier edge, cloud]`.
    pub fn ancestor_sites(&self, input: SiteId) -> Result<[SiteId; 3], TopologyError> {
        let site = self.get_site(input)?;
        if site.kind != SiteKind::InputNode {
            return Err(TopologyError::NotAnInput(input));
        }
        let user = site.parent.expect("input nodes always have a parent");
        let carrier = self.site(user).parent.expect("user edges always have a parent");
        let cloud = self.site(carrier).parent.expect("carrier edges always have a parent");
        Ok([user, carrier, cloud])
    }

    /// Links crossed when traffic flows from `input` up to `site`:
    /// none for the user edge, one for the carrier, two for the cloud.
    pub fn path_links(&self, input: SiteId, site: SiteId) -> Result<Vec<LinkId>, TopologyError> {
        let chain = self.ancestor_sites(input)?;
        self.get_site(site)?;
        let hops = chain
            .iter()
            .position(|&s| s == site)
            .ok_or(TopologyError::NotAnAncestor { input, site })?;
        Ok(chain[..hops]
            .iter()
            .map(|&s| self.site(s).uplink.expect("non-root chain sites have uplinks"))
            .collect())
    }

    /// Human-readable site name, e.g. "carrier-3".
    pub fn site_name(&self, id: SiteId) -> String {
        let s = self.site(id);
        format!("{}-{}", s.kind.label(), s.layer_index)
    }

    /// Human-readable device name, e.g. "carrier-3/gpu0".
    pub fn device_name(&self, id: DeviceId) -> String {
        let d = self.device(id);
        let ordinal = self
            .devices_at(d.site)
            .iter()
            .filter(|o| o.kind == d.kind)
            .position(|o| o.id == id)
            .expect("device belongs to its own site");
        format!("{}/{}{}", self.site_name(d.site), d.kind.label(), ordinal)
    }

    /// Human-readable link name, e.g. "user-17~carrier-5".
    pub fn link_name(&self, id: LinkId) -> String {
        let l = self.link(id);
        format!("{}~{}", self.site_name(l.child), self.site_name(l.parent))
    }
}
