//! Feasibility audit of an assignment, re-derived from the raw service table.
//!
//! This module deliberately works on ids and the plain `VehicleService`
//! records: it shares nothing with the itinerary enumerator or the solvers.

use std::collections::{BTreeMap, HashMap};

use crate::itinerary::{HubTimes, ItineraryKind};
use crate::kpi::ModuleChoice;
use crate::model::{Mode, Network, NodeKind, VehicleService};
use crate::units::{Cost, Minutes, Volume};

/// Every violated routing constraint, as human-readable lines. Empty means the
/// assignment is feasible.
pub fn audit_assignment(
    network: &Network,
    choices: &[ModuleChoice],
    hub_times: &HubTimes,
    per_module_destinations: bool,
) -> Vec<String> {
    let mut out = Vec::new();
    let services: HashMap<&str, &VehicleService> = network.services().iter().map(|s| (s.id.as_str(), s)).collect();
    let kind: HashMap<&str, NodeKind> = network.nodes().iter().map(|n| (n.id.as_str(), n.kind)).collect();
    let dwell = |hub: &str| -> Minutes {
        hub_times.get(hub).unwrap_or_else(|| {
            network.nodes().iter().find(|n| n.id == hub).and_then(|n| n.processing_time).unwrap_or_default()
        })
    };

    let mut seen: BTreeMap<(usize, u32), usize> = BTreeMap::new();
    for c in choices {
        *seen.entry((c.shipment, c.module)).or_default() += 1;
    }
    for (si, sh) in network.shipments().iter().enumerate() {
        for m in 0..sh.module_count {
            match seen.get(&(si, m)).copied().unwrap_or(0) {
                1 => {}
                n => out.push(format!("shipment {} module {m}: {n} itineraries instead of one", sh.id)),
            }
        }
    }

    let mut load: BTreeMap<&str, Volume> = BTreeMap::new();
    let mut shipment_dest: BTreeMap<usize, String> = BTreeMap::new();
    for c in choices {
        let Some(sh) = network.shipments().get(c.shipment) else {
            out.push(format!("choice for unknown shipment #{}", c.shipment));
            continue;
        };
        let tag = format!("shipment {} module {}", sh.id, c.module);
        let it = &c.itinerary;
        let volume = sh.module_volumes.get(c.module as usize).copied().unwrap_or_default();
        if it.volume != volume {
            out.push(format!("{tag}: itinerary volume {} != module volume {}", it.volume, volume));
        }
        let leg1_id = network.service(it.leg1).id.as_str();
        let Some(leg1) = services.get(leg1_id).copied() else {
            out.push(format!("{tag}: unknown service {leg1_id}"));
            continue;
        };
        let origin = leg1.from.as_str();
        let Some(arrival) = sh.origin_arrivals.get(origin).and_then(|t| t.get(c.module as usize)) else {
            out.push(format!("{tag}: leaves from {origin}, which is not one of its origins"));
            continue;
        };
        if leg1.departure_time < *arrival {
            out.push(format!("{tag}: departs {origin} at {} before arriving at {}", leg1.departure_time, arrival));
        }

        let mut legs = vec![leg1];
        let (dest, delivery) = match it.kind {
            ItineraryKind::Direct => {
                if leg1.mode != Mode::DirectTruck {
                    out.push(format!("{tag}: direct itinerary on a {} service", leg1.mode.as_str()));
                }
                if it.leg2.is_some() || it.hub.is_some() {
                    out.push(format!("{tag}: direct itinerary with a hub leg"));
                }
                (leg1.to.as_str(), leg1.departure_time + leg1.travel_time)
            }
            ItineraryKind::ViaHub => {
                let hub = leg1.to.as_str();
                if leg1.mode == Mode::DirectTruck || kind.get(hub) != Some(&NodeKind::PiHub) {
                    out.push(format!("{tag}: first leg {} does not end at a PI-hub", leg1.id));
                }
                let Some(leg2) =
                    it.leg2.map(|l| network.service(l).id.as_str()).and_then(|id| services.get(id).copied())
                else {
                    out.push(format!("{tag}: hub itinerary without a second leg"));
                    continue;
                };
                if leg2.from != hub || leg2.mode == Mode::DirectTruck {
                    out.push(format!("{tag}: second leg {} does not leave hub {hub}", leg2.id));
                }
                if it.hub.map(|h| network.node(h).id.as_str()) != Some(hub) {
                    out.push(format!("{tag}: recorded hub differs from the leg hub {hub}"));
                }
                let at_hub = leg1.departure_time + leg1.travel_time;
                if leg2.departure_time < at_hub + dwell(hub) {
                    out.push(format!(
                        "{tag}: leaves {hub} at {} but is ready only at {}",
                        leg2.departure_time,
                        at_hub + dwell(hub)
                    ));
                }
                legs.push(leg2);
                (leg2.to.as_str(), leg2.departure_time + leg2.travel_time)
            }
        };
        if kind.get(dest) != Some(&NodeKind::DestinationTerminal) || !sh.allowed_destinations.contains(dest) {
            out.push(format!("{tag}: ends at {dest}, which is not an allowed destination"));
        }
        if network.node(it.destination).id != dest {
            out.push(format!("{tag}: recorded destination differs from the last leg"));
        }
        if it.delivery_time != delivery {
            out.push(format!("{tag}: delivery time {} != {}", it.delivery_time, delivery));
        }
        let cost = legs.iter().fold(Cost(0), |acc, s| acc + Cost::of_leg(s.unit_cost, volume, s.distance));
        if it.cost != cost {
            out.push(format!("{tag}: cost {:?} != {:?}", it.cost, cost));
        }
        for s in &legs {
            let e = load.entry(s.id.as_str()).or_default();
            *e = *e + volume;
        }
        if !per_module_destinations {
            let first = shipment_dest.entry(c.shipment).or_insert_with(|| dest.to_string());
            if first != dest {
                out.push(format!("shipment {}: modules end at both {first} and {dest}", sh.id));
            }
        }
    }

    for (id, v) in load {
        let cap = services[id].capacity;
        if v > cap {
            out.push(format!("service {id}: load {v} m³ exceeds capacity {cap} m³"));
        }
    }
    out
}
