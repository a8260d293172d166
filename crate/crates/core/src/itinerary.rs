//! Time-feasible routes for a single module.
//!
//! A module either rides one direct truck from an origin terminal to a
//! destination terminal, or rides a train/truck into exactly one PI-hub and a
//! second train/truck out of it. The departure and hub-dwell inequalities of
//! the routing model become filters here; every enumerated route is feasible
//! with respect to time, and capacity is left to the optimizer.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::model::{Mode, Network, NodeIdx, NodeKind, ServiceIdx, Shipment};
use crate::units::{Cost, Minutes, Volume};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ItineraryError {
    #[error("`{0}` is not a PI-hub of the network")]
    UnknownHub(String),
    #[error("module index {index} out of range for shipment `{shipment}` with {count} modules")]
    ModuleOutOfRange { shipment: String, index: u32, count: u32 },
    #[error("delivery gap of an empty module list")]
    Empty,
}

/// Processing time per PI-hub, overriding the node defaults where set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HubTimes(BTreeMap<String, Minutes>);

impl HubTimes {
    pub fn new() -> HubTimes {
        HubTimes::default()
    }

    /// Every hub at its nominal processing time.
    pub fn nominal(network: &Network) -> HubTimes {
        HubTimes(
            network
                .nodes_of_kind(NodeKind::PiHub)
                .map(|n| (n.id.clone(), n.processing_time.unwrap_or_default()))
                .collect(),
        )
    }

    pub fn set(&mut self, hub: impl Into<String>, time: Minutes) -> &mut Self {
        self.0.insert(hub.into(), time);
        self
    }

    pub fn get(&self, hub: &str) -> Option<Minutes> {
        self.0.get(hub).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Minutes)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Dense per-node processing times; non-hub entries are zero.
    pub fn resolve(&self, network: &Network) -> Result<Vec<Minutes>, ItineraryError> {
        let mut dense: Vec<Minutes> = network.nodes().iter().map(|n| n.processing_time.unwrap_or_default()).collect();
        for (id, t) in &self.0 {
            match network.node_idx(id) {
                Some(i) if network.node(i).kind == NodeKind::PiHub => dense[i.0 as usize] = *t,
                _ => return Err(ItineraryError::UnknownHub(id.clone())),
            }
        }
        Ok(dense)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ItineraryKind {
    Direct,
    ViaHub,
}

/// A complete, time-feasible route of one module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Itinerary {
    pub kind: ItineraryKind,
    pub origin: NodeIdx,
    pub destination: NodeIdx,
    pub hub: Option<NodeIdx>,
    pub leg1: ServiceIdx,
    pub leg2: Option<ServiceIdx>,
    /// Arrival at the destination terminal.
    pub delivery_time: Minutes,
    pub volume: Volume,
    /// Sum over legs of unit cost × volume × distance.
    pub cost: Cost,
}

impl Itinerary {
    pub fn uses_direct_truck(&self) -> bool {
        self.kind == ItineraryKind::Direct
    }

    pub fn legs(&self) -> impl Iterator<Item = ServiceIdx> {
        std::iter::once(self.leg1).chain(self.leg2)
    }

    /// Deterministic ordering key: origin id, hub id (direct first), destination id, leg ids.
    pub fn order_key(&self, network: &Network) -> (u32, Option<u32>, u32, u32, Option<u32>) {
        (
            network.node_rank(self.origin),
            self.hub.map(|h| network.node_rank(h)),
            network.node_rank(self.destination),
            network.service_rank(self.leg1),
            self.leg2.map(|l| network.service_rank(l)),
        )
    }
}

/// Route shape shared by all modules with the same arrival times; volume-free.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Route {
    pub kind: ItineraryKind,
    pub origin: NodeIdx,
    pub destination: NodeIdx,
    pub hub: Option<NodeIdx>,
    pub leg1: ServiceIdx,
    pub leg2: Option<ServiceIdx>,
    pub delivery_time: Minutes,
}

impl Route {
    pub fn with_volume(&self, network: &Network, volume: Volume) -> Itinerary {
        let leg_cost = |l: ServiceIdx| {
            let s = network.service(l);
            Cost::of_leg(s.unit_cost, volume, s.distance)
        };
        let cost = leg_cost(self.leg1) + self.leg2.map(leg_cost).unwrap_or_default();
        Itinerary {
            kind: self.kind,
            origin: self.origin,
            destination: self.destination,
            hub: self.hub,
            leg1: self.leg1,
            leg2: self.leg2,
            delivery_time: self.delivery_time,
            volume,
            cost,
        }
    }
}

/// Enumerator bound to one network and one set of hub processing times.
pub struct ItineraryEnumerator<'a> {
    network: &'a Network,
    hub_time: Vec<Minutes>,
}

impl<'a> ItineraryEnumerator<'a> {
    pub fn new(network: &'a Network, hub_times: &HubTimes) -> Result<Self, ItineraryError> {
        Ok(ItineraryEnumerator { network, hub_time: hub_times.resolve(network)? })
    }

    pub fn network(&self) -> &'a Network {
        self.network
    }

    /// All feasible itineraries of one module, in deterministic order.
    pub fn itineraries(&self, shipment: &Shipment, module_index: u32) -> Result<Vec<Itinerary>, ItineraryError> {
        let routes = self.routes(shipment, module_index)?;
        let volume = shipment.module_volumes[module_index as usize];
        Ok(routes.iter().map(|r| r.with_volume(self.network, volume)).collect())
    }

    pub(crate) fn routes(&self, shipment: &Shipment, module_index: u32) -> Result<Vec<Route>, ItineraryError> {
        if module_index >= shipment.module_count || module_index as usize >= shipment.module_volumes.len() {
            return Err(ItineraryError::ModuleOutOfRange {
                shipment: shipment.id.clone(),
                index: module_index,
                count: shipment.module_count,
            });
        }
        let arrivals: Vec<(NodeIdx, Minutes)> = shipment
            .origin_arrivals
            .iter()
            .filter_map(|(o, times)| {
                let idx = self.network.node_idx(o)?;
                Some((idx, *times.get(module_index as usize)?))
            })
            .collect();
        Ok(self.routes_from(&arrivals, shipment))
    }

    pub(crate) fn routes_from(&self, arrivals: &[(NodeIdx, Minutes)], shipment: &Shipment) -> Vec<Route> {
        let net = self.network;
        let allowed = |d: NodeIdx| {
            let n = net.node(d);
            n.kind == NodeKind::DestinationTerminal && shipment.allowed_destinations.contains(&n.id)
        };
        let mut out = Vec::new();
        for &(origin, ready) in arrivals {
            if net.node(origin).kind != NodeKind::OriginTerminal {
                continue;
            }
            for &l1 in net.outgoing(origin) {
                let s1 = net.service(l1);
                if s1.departure_time < ready {
                    continue;
                }
                let Some((_, to)) = net.service_ends(l1) else { continue };
                let arrive = s1.departure_time + s1.travel_time;
                match s1.mode {
                    Mode::DirectTruck => {
                        if allowed(to) {
                            out.push(Route {
                                kind: ItineraryKind::Direct,
                                origin,
                                destination: to,
                                hub: None,
                                leg1: l1,
                                leg2: None,
                                delivery_time: arrive,
                            });
                        }
                    }
                    Mode::Train | Mode::Truck => {
                        if net.node(to).kind != NodeKind::PiHub {
                            continue;
                        }
                        let hub = to;
                        let leave_after = arrive + self.hub_time[hub.0 as usize];
                        for &l2 in net.outgoing(hub) {
                            let s2 = net.service(l2);
                            if s2.mode == Mode::DirectTruck || s2.departure_time < leave_after {
                                continue;
                            }
                            let Some((_, dest)) = net.service_ends(l2) else { continue };
                            if !allowed(dest) {
                                continue;
                            }
                            out.push(Route {
                                kind: ItineraryKind::ViaHub,
                                origin,
                                destination: dest,
                                hub: Some(hub),
                                leg1: l1,
                                leg2: Some(l2),
                                delivery_time: s2.departure_time + s2.travel_time,
                            });
                        }
                    }
                }
            }
        }
        out.sort_by_key(|r| {
            (
                net.node_rank(r.origin),
                r.hub.map(|h| net.node_rank(h)),
                net.node_rank(r.destination),
                net.service_rank(r.leg1),
                r.leg2.map(|l| net.service_rank(l)),
            )
        });
        out
    }
}

/// Every time-feasible itinerary of module `module_index` of `shipment`.
pub fn enumerate_itineraries(
    network: &Network,
    shipment: &Shipment,
    module_index: u32,
    hub_times: &HubTimes,
) -> Result<Vec<Itinerary>, ItineraryError> {
    ItineraryEnumerator::new(network, hub_times)?.itineraries(shipment, module_index)
}

/// First and last delivery time among the chosen itineraries of one shipment.
pub fn delivery_gap_bounds(chosen: &[Itinerary]) -> Result<(Minutes, Minutes), ItineraryError> {
    let first = chosen.iter().map(|i| i.delivery_time).min().ok_or(ItineraryError::Empty)?;
    let last = chosen.iter().map(|i| i.delivery_time).max().ok_or(ItineraryError::Empty)?;
    Ok((first, last))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Node, VehicleService};

    fn h(x: i64) -> Minutes {
        Minutes(x * 60)
    }

    fn svc(id: &str, from: &str, to: &str, mode: Mode, dp: i64, t: i64) -> VehicleService {
        VehicleService {
            id: id.into(),
            from: from.into(),
            to: to.into(),
            mode,
            departure_time: h(dp),
            travel_time: h(t),
            capacity: Volume::from_m3(10.0),
            unit_cost: 1.0,
            distance: 100.0,
        }
    }

    fn shipment(arrival: i64) -> Shipment {
        Shipment {
            id: "s".into(),
            priority: 1.0,
            module_count: 1,
            module_volumes: vec![Volume::from_m3(1.0)],
            origin_arrivals: [("o".to_string(), vec![h(arrival)])].into(),
            allowed_destinations: ["d".to_string()].into(),
        }
    }

    fn one_hub(with_direct: bool) -> Network {
        let nodes = vec![Node::origin("o"), Node::hub("p", h(1)), Node::destination("d", h(2))];
        let mut services = vec![svc("r1", "o", "p", Mode::Train, 9, 5), svc("c1", "p", "d", Mode::Truck, 16, 4)];
        if with_direct {
            services.push(svc("t1", "o", "d", Mode::DirectTruck, 12, 9));
        }
        Network::new(nodes, services, vec![])
    }

    #[test]
    fn single_via_hub_route() {
        let net = one_hub(false);
        let its = enumerate_itineraries(&net, &shipment(8), 0, &HubTimes::new()).unwrap();
        assert_eq!(its.len(), 1);
        let it = its[0];
        assert_eq!(it.kind, ItineraryKind::ViaHub);
        assert_eq!(it.hub, net.node_idx("p"));
        assert_eq!(it.delivery_time, h(20));
        // two legs at 1.0 × 1 m³ × 100 km
        assert_eq!(it.cost.currency(), 200.0);
    }

    #[test]
    fn missed_departure_leaves_nothing() {
        let net = one_hub(false);
        assert!(enumerate_itineraries(&net, &shipment(10), 0, &HubTimes::new()).unwrap().is_empty());
    }

    #[test]
    fn direct_and_via_hub() {
        let net = one_hub(true);
        let its = enumerate_itineraries(&net, &shipment(8), 0, &HubTimes::new()).unwrap();
        assert_eq!(its.len(), 2);
        // direct routes sort ahead of hub routes from the same origin
        assert_eq!(its[0].kind, ItineraryKind::Direct);
        assert_eq!(its[0].delivery_time, h(21));
        assert!(its[0].uses_direct_truck());
        assert_eq!(its[1].delivery_time, h(20));
    }

    #[test]
    fn departure_equal_to_ready_time_is_allowed() {
        let net = one_hub(false);
        // arrival 9 == dp 9; hub ready 14 + 2 == 16 == dp of leg 2
        let mut times = HubTimes::new();
        times.set("p", h(2));
        assert_eq!(enumerate_itineraries(&net, &shipment(9), 0, &times).unwrap().len(), 1);
        times.set("p", Minutes(121));
        assert!(enumerate_itineraries(&net, &shipment(9), 0, &times).unwrap().is_empty());
    }

    #[test]
    fn unknown_hub_and_bad_index_are_errors() {
        let net = one_hub(false);
        let mut times = HubTimes::new();
        times.set("o", h(1));
        assert_eq!(enumerate_itineraries(&net, &shipment(8), 0, &times), Err(ItineraryError::UnknownHub("o".into())));
        assert!(matches!(
            enumerate_itineraries(&net, &shipment(8), 1, &HubTimes::new()),
            Err(ItineraryError::ModuleOutOfRange { .. })
        ));
    }

    #[test]
    fn gap_bounds() {
        let net = one_hub(true);
        let its = enumerate_itineraries(&net, &shipment(8), 0, &HubTimes::new()).unwrap();
        let with_time = |t: i64| Itinerary { delivery_time: h(t), ..its[0] };
        assert_eq!(delivery_gap_bounds(&[with_time(20), with_time(20), with_time(20)]), Ok((h(20), h(20))));
        assert_eq!(delivery_gap_bounds(&[with_time(21)]), Ok((h(21), h(21))));
        assert_eq!(delivery_gap_bounds(&[with_time(15), with_time(22), with_time(18)]), Ok((h(15), h(22))));
        assert_eq!(delivery_gap_bounds(&[]), Err(ItineraryError::Empty));
    }
}
