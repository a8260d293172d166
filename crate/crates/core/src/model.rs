//! Immutable network model: terminals, PI-hubs, timetabled vehicles and shipments.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::units::{Minutes, Volume};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    OriginTerminal,
    DestinationTerminal,
    PiHub,
}

/// A node of the network. Distribution centres are not nodes: the origin side
/// is folded into shipment arrival times and the destination side into
/// `onward_time`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    /// Handling time per module at a PI-hub.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub processing_time: Option<Minutes>,
    /// Travel time from a destination terminal to the destination distribution centre.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub onward_time: Option<Minutes>,
}

impl Node {
    pub fn origin(id: impl Into<String>) -> Node {
        Node { id: id.into(), kind: NodeKind::OriginTerminal, processing_time: None, onward_time: None }
    }

    pub fn destination(id: impl Into<String>, onward_time: Minutes) -> Node {
        Node {
            id: id.into(),
            kind: NodeKind::DestinationTerminal,
            processing_time: None,
            onward_time: Some(onward_time),
        }
    }

    pub fn hub(id: impl Into<String>, processing_time: Minutes) -> Node {
        Node { id: id.into(), kind: NodeKind::PiHub, processing_time: Some(processing_time), onward_time: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Train,
    Truck,
    DirectTruck,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Train => "train",
            Mode::Truck => "truck",
            Mode::DirectTruck => "direct-truck",
        }
    }
}

/// One timetabled, capacitated vehicle run on a link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleService {
    pub id: String,
    pub from: String,
    pub to: String,
    pub mode: Mode,
    pub departure_time: Minutes,
    pub travel_time: Minutes,
    pub capacity: Volume,
    /// Currency per km per m³.
    pub unit_cost: f64,
    /// Link length in km.
    pub distance: f64,
}

/// A PI-container split into modules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shipment {
    pub id: String,
    #[serde(default = "default_priority")]
    pub priority: f64,
    pub module_count: u32,
    pub module_volumes: Vec<Volume>,
    /// Per-origin arrival time of every module, indexed by module.
    pub origin_arrivals: BTreeMap<String, Vec<Minutes>>,
    pub allowed_destinations: BTreeSet<String>,
}

fn default_priority() -> f64 {
    1.0
}

impl Shipment {
    pub fn total_volume(&self) -> Volume {
        self.module_volumes.iter().copied().fold(Volume(0), |a, b| a + b)
    }

    /// Priority in thousandths, the integer weight used by the delivery-time objective.
    pub fn weight_milli(&self) -> i64 {
        (self.priority * 1000.0).round() as i64
    }
}

/// Dense index of a node inside a [`Network`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeIdx(pub u32);

/// Dense index of a service inside a [`Network`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ServiceIdx(pub u32);

/// Structural invariant codes reported by [`validate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationCode {
    DuplicateNodeId,
    DuplicateServiceId,
    DuplicateShipmentId,
    ProcessingTimeMismatch,
    NegativeProcessingTime,
    OnwardTimeMismatch,
    NegativeOnwardTime,
    UnknownServiceEndpoint,
    NegativeDepartureTime,
    NonPositiveTravelTime,
    NonPositiveCapacity,
    NegativeUnitCost,
    NonPositiveDistance,
    DirectTruckEndpoints,
    HubLegEndpoints,
    ZeroModules,
    VolumeCountMismatch,
    NonPositiveModuleVolume,
    NoOrigins,
    NoDestinations,
    UnknownOrigin,
    UnknownDestination,
    ArrivalCountMismatch,
    NegativeArrivalTime,
    InvalidPriority,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{:?}] {}", self.code, self.message)
    }
}

/// The network plus its shipments. Immutable once built; lookups are indexed.
#[derive(Debug, Clone)]
pub struct Network {
    nodes: Vec<Node>,
    services: Vec<VehicleService>,
    shipments: Vec<Shipment>,
    node_index: HashMap<String, NodeIdx>,
    service_index: HashMap<String, ServiceIdx>,
    // Position of each node / service in id order; used for deterministic sorting.
    node_rank: Vec<u32>,
    service_rank: Vec<u32>,
    service_ends: Vec<Option<(NodeIdx, NodeIdx)>>,
    outgoing: Vec<Vec<ServiceIdx>>,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.services == other.services && self.shipments == other.shipments
    }
}

impl Network {
    /// Builds the lookup tables. Does not validate; see [`validate`].
    pub fn new(nodes: Vec<Node>, services: Vec<VehicleService>, shipments: Vec<Shipment>) -> Network {
        let mut node_index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            node_index.entry(n.id.clone()).or_insert(NodeIdx(i as u32));
        }
        let mut service_index = HashMap::with_capacity(services.len());
        for (i, s) in services.iter().enumerate() {
            service_index.entry(s.id.clone()).or_insert(ServiceIdx(i as u32));
        }
        let node_rank = ranks(nodes.iter().map(|n| n.id.as_str()));
        let service_rank = ranks(services.iter().map(|s| s.id.as_str()));
        let mut outgoing = vec![Vec::new(); nodes.len()];
        let mut service_ends = Vec::with_capacity(services.len());
        for (i, s) in services.iter().enumerate() {
            let ends = match (node_index.get(&s.from), node_index.get(&s.to)) {
                (Some(&f), Some(&t)) => {
                    outgoing[f.0 as usize].push(ServiceIdx(i as u32));
                    Some((f, t))
                }
                _ => None,
            };
            service_ends.push(ends);
        }
        Network {
            nodes,
            services,
            shipments,
            node_index,
            service_index,
            node_rank,
            service_rank,
            service_ends,
            outgoing,
        }
    }

    /// Same nodes and services, different shipments.
    pub fn with_shipments(&self, shipments: Vec<Shipment>) -> Network {
        Network { shipments, ..self.clone() }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn services(&self) -> &[VehicleService] {
        &self.services
    }

    pub fn shipments(&self) -> &[Shipment] {
        &self.shipments
    }

    pub fn node(&self, idx: NodeIdx) -> &Node {
        &self.nodes[idx.0 as usize]
    }

    pub fn service(&self, idx: ServiceIdx) -> &VehicleService {
        &self.services[idx.0 as usize]
    }

    pub fn node_idx(&self, id: &str) -> Option<NodeIdx> {
        self.node_index.get(id).copied()
    }

    pub fn service_idx(&self, id: &str) -> Option<ServiceIdx> {
        self.service_index.get(id).copied()
    }

    pub fn shipment(&self, id: &str) -> Option<&Shipment> {
        self.shipments.iter().find(|s| s.id == id)
    }

    pub fn node_rank(&self, idx: NodeIdx) -> u32 {
        self.node_rank[idx.0 as usize]
    }

    pub fn service_rank(&self, idx: ServiceIdx) -> u32 {
        self.service_rank[idx.0 as usize]
    }

    /// Resolved endpoints of a service, `None` if either end is unknown.
    pub fn service_ends(&self, idx: ServiceIdx) -> Option<(NodeIdx, NodeIdx)> {
        self.service_ends[idx.0 as usize]
    }

    pub fn outgoing(&self, node: NodeIdx) -> &[ServiceIdx] {
        &self.outgoing[node.0 as usize]
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> impl Iterator<Item = &Node> + '_ {
        self.nodes.iter().filter(move |n| n.kind == kind)
    }

    /// PI-hub ids in id order.
    pub fn hub_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.nodes_of_kind(NodeKind::PiHub).map(|n| n.id.clone()).collect();
        ids.sort();
        ids
    }

    pub fn module_total(&self) -> usize {
        self.shipments.iter().map(|s| s.module_count as usize).sum()
    }
}

fn ranks<'a>(ids: impl Iterator<Item = &'a str>) -> Vec<u32> {
    let ids: Vec<&str> = ids.collect();
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| ids[a].cmp(ids[b]).then(a.cmp(&b)));
    let mut rank = vec![0u32; ids.len()];
    for (r, i) in order.into_iter().enumerate() {
        rank[i] = r as u32;
    }
    rank
}

/// Checks every structural invariant of the model. An empty list means valid.
pub fn validate(network: &Network) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |code: ViolationCode, message: String| out.push(Violation { code, message });

    let mut seen = BTreeSet::new();
    for n in network.nodes() {
        if !seen.insert(n.id.as_str()) {
            push(ViolationCode::DuplicateNodeId, format!("node id `{}` is not unique", n.id));
        }
        let is_hub = n.kind == NodeKind::PiHub;
        match n.processing_time {
            Some(t) if !is_hub => push(
                ViolationCode::ProcessingTimeMismatch,
                format!("node `{}`: processing_time {} set on a terminal", n.id, t),
            ),
            None if is_hub => {
                push(ViolationCode::ProcessingTimeMismatch, format!("PI-hub `{}` has no processing_time", n.id))
            }
            Some(t) if t < Minutes::ZERO => {
                push(ViolationCode::NegativeProcessingTime, format!("PI-hub `{}` has negative processing_time", n.id))
            }
            _ => {}
        }
        let is_dest = n.kind == NodeKind::DestinationTerminal;
        match n.onward_time {
            Some(_) if !is_dest => push(
                ViolationCode::OnwardTimeMismatch,
                format!("node `{}`: onward_time only applies to destination terminals", n.id),
            ),
            None if is_dest => {
                push(ViolationCode::OnwardTimeMismatch, format!("destination terminal `{}` has no onward_time", n.id))
            }
            Some(t) if t < Minutes::ZERO => push(
                ViolationCode::NegativeOnwardTime,
                format!("destination terminal `{}` has negative onward_time", n.id),
            ),
            _ => {}
        }
    }

    let kind_of = |id: &str| network.node_idx(id).map(|i| network.node(i).kind);

    let mut seen = BTreeSet::new();
    for s in network.services() {
        if !seen.insert(s.id.as_str()) {
            push(ViolationCode::DuplicateServiceId, format!("service id `{}` is not unique", s.id));
        }
        if s.departure_time < Minutes::ZERO {
            push(ViolationCode::NegativeDepartureTime, format!("service `{}`: departure_time < 0", s.id));
        }
        if s.travel_time <= Minutes::ZERO {
            push(ViolationCode::NonPositiveTravelTime, format!("service `{}`: travel_time must be > 0", s.id));
        }
        if s.capacity <= Volume(0) {
            push(ViolationCode::NonPositiveCapacity, format!("service `{}`: capacity must be > 0", s.id));
        }
        if !(s.unit_cost >= 0.0 && s.unit_cost.is_finite()) {
            push(ViolationCode::NegativeUnitCost, format!("service `{}`: unit_cost must be >= 0", s.id));
        }
        if !(s.distance > 0.0 && s.distance.is_finite()) {
            push(ViolationCode::NonPositiveDistance, format!("service `{}`: distance must be > 0", s.id));
        }
        let (from, to) = match (kind_of(&s.from), kind_of(&s.to)) {
            (Some(f), Some(t)) => (f, t),
            (f, t) => {
                for (end, k) in [(&s.from, f), (&s.to, t)] {
                    if k.is_none() {
                        push(
                            ViolationCode::UnknownServiceEndpoint,
                            format!("service `{}` refers to unknown node `{}`", s.id, end),
                        );
                    }
                }
                continue;
            }
        };
        match s.mode {
            Mode::DirectTruck => {
                if from != NodeKind::OriginTerminal || to != NodeKind::DestinationTerminal {
                    push(
                        ViolationCode::DirectTruckEndpoints,
                        format!("direct truck `{}` must run from an origin to a destination terminal", s.id),
                    );
                }
            }
            Mode::Train | Mode::Truck => {
                let ok = matches!(
                    (from, to),
                    (NodeKind::OriginTerminal, NodeKind::PiHub) | (NodeKind::PiHub, NodeKind::DestinationTerminal)
                );
                if !ok {
                    push(
                        ViolationCode::HubLegEndpoints,
                        format!(
                            "service `{}`: service must touch exactly one PI-hub (terminal to hub or hub to terminal)",
                            s.id
                        ),
                    );
                }
            }
        }
    }

    let mut seen = BTreeSet::new();
    for sh in network.shipments() {
        if !seen.insert(sh.id.as_str()) {
            push(ViolationCode::DuplicateShipmentId, format!("shipment id `{}` is not unique", sh.id));
        }
        if !(sh.priority >= 0.0 && sh.priority.is_finite()) {
            push(ViolationCode::InvalidPriority, format!("shipment `{}`: priority must be >= 0", sh.id));
        }
        if sh.module_count == 0 {
            push(ViolationCode::ZeroModules, format!("shipment `{}` has no modules", sh.id));
        }
        if sh.module_volumes.len() != sh.module_count as usize {
            push(
                ViolationCode::VolumeCountMismatch,
                format!(
                    "shipment `{}`: volume list length mismatch ({} volumes for {} modules)",
                    sh.id,
                    sh.module_volumes.len(),
                    sh.module_count
                ),
            );
        }
        if sh.module_volumes.iter().any(|v| *v <= Volume(0)) {
            push(ViolationCode::NonPositiveModuleVolume, format!("shipment `{}`: module volumes must be > 0", sh.id));
        }
        if sh.origin_arrivals.is_empty() {
            push(ViolationCode::NoOrigins, format!("shipment `{}` has no origin terminal", sh.id));
        }
        if sh.allowed_destinations.is_empty() {
            push(ViolationCode::NoDestinations, format!("shipment `{}` has no destination terminal", sh.id));
        }
        for (origin, times) in &sh.origin_arrivals {
            if kind_of(origin) != Some(NodeKind::OriginTerminal) {
                push(
                    ViolationCode::UnknownOrigin,
                    format!("shipment `{}`: `{}` is not an origin terminal", sh.id, origin),
                );
            }
            if times.len() != sh.module_count as usize {
                push(
                    ViolationCode::ArrivalCountMismatch,
                    format!(
                        "shipment `{}`: {} arrival times at `{}` for {} modules",
                        sh.id,
                        times.len(),
                        origin,
                        sh.module_count
                    ),
                );
            }
            if times.iter().any(|t| *t < Minutes::ZERO) {
                push(ViolationCode::NegativeArrivalTime, format!("shipment `{}`: arrival time < 0", sh.id));
            }
        }
        for dest in &sh.allowed_destinations {
            if kind_of(dest) != Some(NodeKind::DestinationTerminal) {
                push(
                    ViolationCode::UnknownDestination,
                    format!("shipment `{}`: `{}` is not a destination terminal", sh.id, dest),
                );
            }
        }
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Network {
        let nodes = vec![Node::origin("o"), Node::hub("p", Minutes(60)), Node::destination("d", Minutes(120))];
        let svc = |id: &str, from: &str, to: &str, mode| VehicleService {
            id: id.into(),
            from: from.into(),
            to: to.into(),
            mode,
            departure_time: Minutes(540),
            travel_time: Minutes(300),
            capacity: Volume::from_m3(10.0),
            unit_cost: 1.0,
            distance: 100.0,
        };
        let services = vec![
            svc("r1", "o", "p", Mode::Train),
            svc("c1", "p", "d", Mode::Truck),
            svc("t1", "o", "d", Mode::DirectTruck),
        ];
        let shipments = vec![Shipment {
            id: "s1".into(),
            priority: 1.0,
            module_count: 2,
            module_volumes: vec![Volume::from_m3(1.0), Volume::from_m3(2.0)],
            origin_arrivals: [("o".to_string(), vec![Minutes(480), Minutes(480)])].into(),
            allowed_destinations: ["d".to_string()].into(),
        }];
        Network::new(nodes, services, shipments)
    }

    fn codes(net: &Network) -> Vec<ViolationCode> {
        validate(net).into_iter().map(|v| v.code).collect()
    }

    #[test]
    fn valid_network_has_no_violations() {
        assert!(validate(&tiny()).is_empty());
    }

    #[test]
    fn hub_to_hub_truck_is_rejected() {
        let net = tiny();
        let mut nodes = net.nodes().to_vec();
        nodes.push(Node::hub("q", Minutes(60)));
        let mut services = net.services().to_vec();
        let mut bad = services[1].clone();
        bad.id = "c2".into();
        bad.from = "p".into();
        bad.to = "q".into();
        services.push(bad);
        let net = Network::new(nodes, services, net.shipments().to_vec());
        let v = validate(&net);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].code, ViolationCode::HubLegEndpoints);
        assert!(v[0].message.contains("service must touch exactly one PI-hub"));
    }

    #[test]
    fn volume_length_mismatch_is_reported() {
        let net = tiny();
        let mut sh = net.shipments().to_vec();
        sh[0].module_volumes.pop();
        let v = validate(&net.with_shipments(sh));
        assert!(
            v.iter()
                .any(|v| v.code == ViolationCode::VolumeCountMismatch
                    && v.message.contains("volume list length mismatch"))
        );
    }

    #[test]
    fn terminal_with_processing_time_is_rejected() {
        let net = tiny();
        let mut nodes = net.nodes().to_vec();
        nodes[0].processing_time = Some(Minutes(5));
        let net = Network::new(nodes, net.services().to_vec(), net.shipments().to_vec());
        assert_eq!(codes(&net), vec![ViolationCode::ProcessingTimeMismatch]);
    }

    #[test]
    fn direct_truck_into_hub_is_rejected() {
        let net = tiny();
        let mut services = net.services().to_vec();
        services[2].to = "p".into();
        let net = Network::new(net.nodes().to_vec(), services, net.shipments().to_vec());
        assert_eq!(codes(&net), vec![ViolationCode::DirectTruckEndpoints]);
    }

    #[test]
    fn dangling_references_are_reported() {
        let net = tiny();
        let mut services = net.services().to_vec();
        services[0].to = "nowhere".into();
        let mut sh = net.shipments().to_vec();
        sh[0].allowed_destinations.insert("p".into());
        let net = Network::new(net.nodes().to_vec(), services, sh);
        let c = codes(&net);
        assert!(c.contains(&ViolationCode::UnknownServiceEndpoint));
        assert!(c.contains(&ViolationCode::UnknownDestination));
    }

    #[test]
    fn bad_service_numbers_are_each_reported() {
        let net = tiny();
        let mut services = net.services().to_vec();
        services[0].travel_time = Minutes(0);
        services[0].capacity = Volume(0);
        services[0].distance = 0.0;
        services[0].unit_cost = -1.0;
        let net = Network::new(net.nodes().to_vec(), services, net.shipments().to_vec());
        let c = codes(&net);
        for code in [
            ViolationCode::NonPositiveTravelTime,
            ViolationCode::NonPositiveCapacity,
            ViolationCode::NonPositiveDistance,
            ViolationCode::NegativeUnitCost,
        ] {
            assert!(c.contains(&code), "{code:?} missing");
        }
    }

    #[test]
    fn validate_is_pure() {
        let net = tiny();
        let mut sh = net.shipments().to_vec();
        sh[0].module_count = 0;
        let net = net.with_shipments(sh);
        assert_eq!(validate(&net), validate(&net));
    }

    #[test]
    fn ranks_follow_id_order() {
        let net = tiny();
        // ids: c1 < r1 < t1
        assert_eq!(net.service_rank(ServiceIdx(1)), 0);
        assert_eq!(net.service_rank(ServiceIdx(0)), 1);
        assert_eq!(net.service_rank(ServiceIdx(2)), 2);
    }
}
