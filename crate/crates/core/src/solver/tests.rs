use super::*;
use crate::audit::audit_assignment;
use crate::generator::{random_network, InstanceShape};
use crate::model::{Mode, Node, Shipment, VehicleService};

fn h(x: i64) -> Minutes {
    Minutes(x * 60)
}

fn svc(id: &str, from: &str, to: &str, mode: Mode, dp: i64, t: i64, cap: f64) -> VehicleService {
    VehicleService {
        id: id.into(),
        from: from.into(),
        to: to.into(),
        mode,
        departure_time: h(dp),
        travel_time: h(t),
        capacity: Volume::from_m3(cap),
        unit_cost: 0.1,
        distance: 100.0,
    }
}

fn shipment(id: &str, volumes: &[f64], arrival: i64) -> Shipment {
    Shipment {
        id: id.into(),
        priority: 1.0,
        module_count: volumes.len() as u32,
        module_volumes: volumes.iter().map(|v| Volume::from_m3(*v)).collect(),
        origin_arrivals: [("o".to_string(), vec![h(arrival); volumes.len()])].into(),
        allowed_destinations: ["d".to_string()].into(),
    }
}

fn split_instance() -> Network {
    let nodes = vec![Node::origin("o"), Node::hub("p", h(1)), Node::destination("d", h(0))];
    let services = vec![
        svc("truck1", "o", "p", Mode::Truck, 8, 3, 8.0),
        svc("train1", "o", "p", Mode::Train, 9, 3, 8.0),
        svc("out", "p", "d", Mode::Train, 16, 4, 20.0),
    ];
    Network::new(nodes, services, vec![shipment("s", &[5.0, 5.0], 6)])
}

#[test]
fn modules_are_split_over_both_first_legs() {
    let net = split_instance();
    for objective in Objective::ALL {
        let sol = solve_exact(&net, objective, &HubTimes::new(), &SolverOptions::default()).unwrap();
        assert!(sol.is_optimal());
        let firsts: Vec<&str> = sol.choices.iter().map(|c| net.service(c.itinerary.leg1).id.as_str()).collect();
        assert_eq!(firsts.len(), 2);
        assert_ne!(firsts[0], firsts[1], "{objective}: both modules on {}", firsts[0]);
        assert_eq!(sol.load_of(&net, "out"), Some(Volume::from_m3(10.0)));
        let oracle = solve_exhaustive(&net, objective, &HubTimes::new(), &SolverOptions::default()).unwrap();
        assert_eq!(oracle.objective_value, sol.objective_value);
    }
}

#[test]
fn module_without_itinerary_is_infeasible() {
    let net = split_instance();
    // arrives after every departure
    let net = net.with_shipments(vec![shipment("s", &[1.0], 12)]);
    let sol = solve_exact(&net, Objective::J2, &HubTimes::new(), &SolverOptions::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
    assert!(sol.choices.is_empty());
}

#[test]
fn pigeonhole_capacity_is_infeasible() {
    let net = split_instance();
    // 3 × 6 m³ through a 20 m³ mandatory second leg
    let net = net.with_shipments(vec![shipment("s", &[6.0, 6.0, 6.0], 6)]);
    let opts = SolverOptions::default();
    assert_eq!(solve_exact(&net, Objective::J1, &HubTimes::new(), &opts).unwrap().status, SolveStatus::Infeasible);
    assert_eq!(solve_exhaustive(&net, Objective::J1, &HubTimes::new(), &opts).unwrap().status, SolveStatus::Infeasible);
}

#[test]
fn singleton_search_space() {
    let nodes = vec![Node::origin("o"), Node::hub("p", h(1)), Node::destination("d", h(0))];
    let services = vec![svc("a", "o", "p", Mode::Train, 9, 5, 10.0), svc("b", "p", "d", Mode::Truck, 16, 4, 10.0)];
    let net = Network::new(nodes, services, vec![shipment("s", &[2.0, 3.0], 8)]);
    let sol = solve_exhaustive(&net, Objective::J3, &HubTimes::new(), &SolverOptions::default()).unwrap();
    assert!(sol.is_optimal());
    assert_eq!(sol.ordinals, vec![0, 0]);
    assert_eq!(sol.kpis.values()[1], 20.0);
}

#[test]
fn ceiling_is_enforced() {
    let net = split_instance();
    let opts = SolverOptions { exhaustive_ceiling: 3, ..SolverOptions::default() };
    assert_eq!(
        solve_exhaustive(&net, Objective::J1, &HubTimes::new(), &opts).unwrap_err(),
        SolveError::CeilingExceeded { size: 4, ceiling: 3 }
    );
}

#[test]
fn unknown_hub_time_is_an_error() {
    let net = split_instance();
    let mut times = HubTimes::new();
    times.set("nowhere", h(1));
    assert!(matches!(
        solve_exact(&net, Objective::J1, &times, &SolverOptions::default()),
        Err(SolveError::Itinerary(ItineraryError::UnknownHub(_)))
    ));
}

#[test]
fn empty_network_is_trivially_optimal() {
    let net = split_instance().with_shipments(vec![]);
    let sol = solve_exact(&net, Objective::J2, &HubTimes::new(), &SolverOptions::default()).unwrap();
    assert!(sol.is_optimal());
    assert_eq!(sol.objective_value, 0);
}

fn small_shape() -> InstanceShape {
    InstanceShape { max_shipments: 3, max_modules: 3, ..InstanceShape::default() }
}

#[test]
fn exact_matches_exhaustive_on_random_instances() {
    let opts = SolverOptions { exhaustive_ceiling: 200_000, ..SolverOptions::default() };
    let mut checked = 0;
    for seed in 0..200u64 {
        let net = random_network(&small_shape(), seed);
        let times = HubTimes::nominal(&net);
        for objective in Objective::ALL {
            let oracle = match solve_exhaustive(&net, objective, &times, &opts) {
                Ok(o) => o,
                Err(SolveError::CeilingExceeded { .. }) => continue,
                Err(e) => panic!("{e}"),
            };
            let exact = solve_exact(&net, objective, &times, &opts).unwrap();
            assert_eq!(exact.status, oracle.status, "seed {seed} {objective}");
            assert_eq!(exact.objective_value, oracle.objective_value, "seed {seed} {objective}");
            assert_eq!(exact.ordinals, oracle.ordinals, "seed {seed} {objective}: tie-break differs");
            if exact.is_optimal() {
                assert_eq!(exact.kpis.exact(objective), exact.objective_value);
                let issues = audit_assignment(&net, &exact.choices, &times, false);
                assert!(issues.is_empty(), "seed {seed}: {issues:?}");
            }
            checked += 1;
        }
    }
    assert!(checked > 400, "only {checked} instances fit the ceiling");
}

#[test]
fn per_module_destinations_never_worse() {
    let opts = SolverOptions { exhaustive_ceiling: 200_000, ..SolverOptions::default() };
    let free = SolverOptions { per_module_destinations: true, ..opts.clone() };
    for seed in 0..60u64 {
        let net = random_network(&small_shape(), seed);
        let times = HubTimes::nominal(&net);
        for objective in Objective::ALL {
            let joined = solve_exact(&net, objective, &times, &opts).unwrap();
            let split = solve_exact(&net, objective, &times, &free).unwrap();
            if joined.is_optimal() {
                assert!(split.is_optimal());
                assert!(split.objective_value <= joined.objective_value, "seed {seed} {objective}");
            }
            if let Ok(oracle) = solve_exhaustive(&net, objective, &times, &free) {
                assert_eq!(oracle.objective_value, split.objective_value, "seed {seed} {objective}");
                if split.is_optimal() {
                    assert!(audit_assignment(&net, &split.choices, &times, true).is_empty());
                }
            }
        }
    }
}
