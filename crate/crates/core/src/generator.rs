//! Seeded generator of small random networks, sized for cross-checking the
//! branch and bound against exhaustive enumeration.

use std::collections::{BTreeMap, BTreeSet};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Mode, Network, Node, Shipment, VehicleService};
use crate::units::{Minutes, Volume};

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceShape {
    pub max_shipments: usize,
    pub max_modules: u32,
    pub max_hubs: usize,
    pub max_origins: usize,
    pub max_destinations: usize,
    pub max_services_per_link: usize,
    /// Probability that a given terminal–hub or origin–destination link exists.
    pub link_density: f64,
}

impl Default for InstanceShape {
    fn default() -> Self {
        InstanceShape {
            max_shipments: 4,
            max_modules: 3,
            max_hubs: 3,
            max_origins: 2,
            max_destinations: 2,
            max_services_per_link: 3,
            link_density: 0.6,
        }
    }
}

fn half_hours(rng: &mut ChaCha8Rng, lo_h: i64, hi_h: i64) -> Minutes {
    Minutes(rng.random_range(lo_h * 2..=hi_h * 2) * 30)
}

/// A valid random network. The same seed always yields the same network.
pub fn random_network(shape: &InstanceShape, seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_orig = rng.random_range(1..=shape.max_origins.max(1));
    let n_hub = rng.random_range(1..=shape.max_hubs.max(1));
    let n_dest = rng.random_range(1..=shape.max_destinations.max(1));

    let mut nodes = Vec::new();
    let origins: Vec<String> = (1..=n_orig).map(|i| format!("o{i}")).collect();
    let hubs: Vec<String> = (1..=n_hub).map(|i| format!("p{i}")).collect();
    let dests: Vec<String> = (1..=n_dest).map(|i| format!("d{i}")).collect();
    for o in &origins {
        nodes.push(Node::origin(o.clone()));
    }
    for p in &hubs {
        nodes.push(Node::hub(p.clone(), Minutes(rng.random_range(0..=6) * 20)));
    }
    for d in &dests {
        nodes.push(Node::destination(d.clone(), Minutes(rng.random_range(0..=10) * 30)));
    }

    let mut services = Vec::new();
    let mut add_link = |rng: &mut ChaCha8Rng, from: &str, to: &str, direct: bool, first_leg: bool| {
        if !rng.random_bool(shape.link_density) {
            return;
        }
        let count = rng.random_range(1..=shape.max_services_per_link.max(1));
        let distance = rng.random_range(50..=800) as f64;
        for _ in 0..count {
            let mode = if direct {
                Mode::DirectTruck
            } else if rng.random_bool(0.5) {
                Mode::Train
            } else {
                Mode::Truck
            };
            let departure_time = if first_leg || direct { half_hours(rng, 4, 16) } else { half_hours(rng, 8, 30) };
            services.push(VehicleService {
                id: format!("{}-{from}-{to}-{}", mode.as_str(), services.len()),
                from: from.to_string(),
                to: to.to_string(),
                mode,
                departure_time,
                travel_time: half_hours(rng, 1, 10),
                capacity: Volume::from_m3(rng.random_range(4..=20) as f64 * 0.5),
                unit_cost: rng.random_range(1..=40) as f64 * 0.01,
                distance,
            });
        }
    };
    for o in &origins {
        for p in &hubs {
            add_link(&mut rng, o, p, false, true);
        }
        for d in &dests {
            add_link(&mut rng, o, d, true, true);
        }
    }
    for p in &hubs {
        for d in &dests {
            add_link(&mut rng, p, d, false, false);
        }
    }

    let n_ship = rng.random_range(1..=shape.max_shipments.max(1));
    let shipments = (1..=n_ship)
        .map(|i| {
            let modules = rng.random_range(1..=shape.max_modules.max(1));
            let origin = origins[rng.random_range(0..origins.len())].clone();
            let arrival = half_hours(&mut rng, 2, 12);
            let mut allowed: BTreeSet<String> = dests.iter().filter(|_| rng.random_bool(0.6)).cloned().collect();
            if allowed.is_empty() {
                allowed.insert(dests[rng.random_range(0..dests.len())].clone());
            }
            Shipment {
                id: format!("s{i}"),
                priority: [0.5, 1.0, 2.0][rng.random_range(0..3)],
                module_count: modules,
                module_volumes: (0..modules).map(|_| Volume::from_m3(rng.random_range(2..=10) as f64 * 0.5)).collect(),
                origin_arrivals: BTreeMap::from([(origin, vec![arrival; modules as usize])]),
                allowed_destinations: allowed,
            }
        })
        .collect();
    Network::new(nodes, services, shipments)
}
