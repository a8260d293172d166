//! The routing problem as a mixed-integer program in LP file format.
//!
//! Binary `x` is a truck, `y` a train and `z` a direct truck, named `x_s_i_j_k_l` with `s` the shipment, `i` the
//! module, `j` and `k` the two end nodes and `l` the vehicle, all as zero-based
//! indices into the network (the header comment maps them back to ids).
//! Times are in minutes and volumes in m³, so the J2 optimum equals the
//! solver's exact value divided by 1000 and J4 is in minutes.

use std::fmt::Write;

use crate::itinerary::{HubTimes, ItineraryError};
use crate::kpi::Objective;
use crate::model::{Mode, Network, NodeIdx, NodeKind, ServiceIdx};
use crate::solver::SolverOptions;

/// Big-M of the timing constraints: twice the latest departure plus the
/// longest travel time.
pub fn big_m(network: &Network) -> i64 {
    let dp = network.services().iter().map(|s| s.departure_time.0).max().unwrap_or(0);
    let t = network.services().iter().map(|s| s.travel_time.0).max().unwrap_or(0);
    2 * (dp + t)
}

struct Var {
    name: String,
    service: ServiceIdx,
    from: NodeIdx,
    to: NodeIdx,
}

/// Binaries of one module grouped by role.
#[derive(Default)]
struct ModuleVars {
    first: Vec<(Var, i64)>, // with the module's ready time at the origin
    second: Vec<Var>,
    direct: Vec<(Var, i64)>,
}

struct Row {
    name: String,
    terms: Vec<(f64, String)>,
    sense: &'static str,
    rhs: f64,
}

impl Row {
    fn new(name: String, sense: &'static str, rhs: f64) -> Row {
        Row { name, terms: Vec::new(), sense, rhs }
    }

    fn add(&mut self, coef: f64, var: &str) {
        if coef != 0.0 {
            self.terms.push((coef, var.to_string()));
        }
    }
}

fn write_terms(out: &mut String, terms: &[(f64, String)]) {
    for (n, (c, v)) in terms.iter().enumerate() {
        if n > 0 && n % 8 == 0 {
            out.push_str("\n   ");
        }
        let sign = if *c < 0.0 { '-' } else { '+' };
        let a = c.abs();
        if a == 1.0 {
            let _ = write!(out, " {sign} {v}");
        } else {
            let _ = write!(out, " {sign} {a} {v}");
        }
    }
}

fn mode_letter(mode: Mode) -> char {
    match mode {
        Mode::Truck => 'x',
        Mode::Train => 'y',
        Mode::DirectTruck => 'z',
    }
}

/// Writes the model. Fails only on hub times naming unknown hubs.
pub fn export_lp(
    network: &Network,
    objective: Objective,
    hub_times: &HubTimes,
    options: &SolverOptions,
) -> Result<String, ItineraryError> {
    let tau = hub_times.resolve(network)?;
    let m = big_m(network) as f64;
    let mut rows: Vec<Row> = Vec::new();
    let mut binaries: Vec<String> = Vec::new();
    let mut continuous: Vec<String> = Vec::new();
    let mut obj: Vec<(f64, String)> = Vec::new();
    let mut capacity: Vec<Vec<(f64, String)>> = vec![Vec::new(); network.services().len()];

    for (s, ship) in network.shipments().iter().enumerate() {
        let allowed: Vec<NodeIdx> = network
            .nodes()
            .iter()
            .enumerate()
            .filter(|(_, n)| n.kind == NodeKind::DestinationTerminal && ship.allowed_destinations.contains(&n.id))
            .map(|(k, _)| NodeIdx(k as u32))
            .collect();
        let weight = ship.weight_milli() as f64 / 1000.0;
        for &k in &allowed {
            let dt = format!("DT_{s}_{k}", k = k.0);
            rows.push(Row {
                name: format!("onward_{s}_{}", k.0),
                terms: vec![(1.0, format!("DT_{s}")), (-1.0, dt.clone())],
                sense: ">=",
                rhs: network.node(k).onward_time.unwrap_or_default().0 as f64,
            });
            if objective == Objective::J2 {
                obj.push((weight, dt.clone()));
            }
            continuous.push(dt);
        }
        continuous.push(format!("DT_{s}"));
        let common = !options.per_module_destinations && allowed.len() > 1;
        if common {
            let mut one = Row::new(format!("dest_{s}"), "=", 1.0);
            for &k in &allowed {
                let w = format!("w_{s}_{}", k.0);
                one.add(1.0, &w);
                binaries.push(w);
            }
            rows.push(one);
        }
        let (alpha, omega) = (format!("alpha_{s}"), format!("omega_{s}"));
        if objective == Objective::J4 {
            obj.push((1.0, omega.clone()));
            obj.push((-1.0, alpha.clone()));
        }
        continuous.push(alpha.clone());
        continuous.push(omega.clone());

        for i in 0..ship.module_count {
            let volume = ship.module_volumes.get(i as usize).copied().unwrap_or_default();
            let mut vars = ModuleVars::default();
            let mut hubs: Vec<NodeIdx> = Vec::new();
            for (origin, times) in &ship.origin_arrivals {
                let (Some(o), Some(&ready)) = (network.node_idx(origin), times.get(i as usize)) else { continue };
                if network.node(o).kind != NodeKind::OriginTerminal {
                    continue;
                }
                for &l in network.outgoing(o) {
                    let Some((_, to)) = network.service_ends(l) else { continue };
                    let svc = network.service(l);
                    let var = Var {
                        name: format!("{}_{s}_{i}_{}_{}_{}", mode_letter(svc.mode), o.0, to.0, l.0),
                        service: l,
                        from: o,
                        to,
                    };
                    match (svc.mode, network.node(to).kind) {
                        (Mode::DirectTruck, NodeKind::DestinationTerminal) if allowed.contains(&to) => {
                            vars.direct.push((var, ready.0))
                        }
                        (Mode::Train | Mode::Truck, NodeKind::PiHub) => {
                            if !hubs.contains(&to) {
                                hubs.push(to);
                            }
                            vars.first.push((var, ready.0));
                        }
                        _ => {}
                    }
                }
            }
            hubs.sort();
            for &p in &hubs {
                for &l in network.outgoing(p) {
                    let Some((_, to)) = network.service_ends(l) else { continue };
                    let svc = network.service(l);
                    if svc.mode != Mode::DirectTruck && allowed.contains(&to) {
                        vars.second.push(Var {
                            name: format!("{}_{s}_{i}_{}_{}_{}", mode_letter(svc.mode), p.0, to.0, l.0),
                            service: l,
                            from: p,
                            to,
                        });
                    }
                }
            }

            let tag = format!("{s}_{i}");
            let rho = |n: NodeIdx| format!("rho_{s}_{i}_{}", n.0);
            let phi = |n: NodeIdx| format!("phi_{s}_{i}_{}", n.0);
            let mut starts = Row::new(format!("start_{tag}"), "=", 1.0);
            let mut ends = Row::new(format!("end_{tag}"), "=", 1.0);
            let mut first_of = Row::new(format!("first_{tag}"), "<=", 0.0);
            let mut last_of = Row::new(format!("last_{tag}"), ">=", 0.0);
            first_of.add(1.0, &alpha);
            last_of.add(1.0, &omega);

            for (v, ready) in vars.first.iter().chain(&vars.direct) {
                let svc = network.service(v.service);
                let dp = svc.departure_time.0 as f64;
                // ready <= dp v + M (1 - v)
                let mut r = Row::new(format!("depart_{tag}_{}", v.service.0), "<=", m - *ready as f64);
                r.add(m - dp, &v.name);
                rows.push(r);
                starts.add(1.0, &v.name);
            }
            for (v, _) in &vars.first {
                let svc = network.service(v.service);
                let mut r = Row::new(
                    format!("reach_hub_{tag}_{}", v.service.0),
                    ">=",
                    (svc.departure_time + svc.travel_time).0 as f64 - m,
                );
                r.add(1.0, &rho(v.to));
                r.add(-m, &v.name);
                rows.push(r);
            }
            for v in &vars.second {
                let svc = network.service(v.service);
                let arrive = (svc.departure_time + svc.travel_time).0 as f64;
                let mut r = Row::new(
                    format!("leave_hub_{tag}_{}", v.service.0),
                    "<=",
                    svc.departure_time.0 as f64 + m - tau[v.from.0 as usize].0 as f64,
                );
                r.add(1.0, &rho(v.from));
                r.add(m, &v.name);
                rows.push(r);
                let mut r = Row::new(format!("reach_{tag}_{}", v.service.0), ">=", arrive - m);
                r.add(1.0, &rho(v.to));
                r.add(-m, &v.name);
                rows.push(r);
                ends.add(1.0, &v.name);
                first_of.add(-arrive, &v.name);
                last_of.add(-arrive, &v.name);
            }
            for (v, _) in &vars.direct {
                let svc = network.service(v.service);
                let arrive = (svc.departure_time + svc.travel_time).0 as f64;
                let mut r = Row::new(format!("reach_direct_{tag}_{}", v.service.0), ">=", arrive - m);
                r.add(1.0, &phi(v.to));
                r.add(-m, &v.name);
                rows.push(r);
                ends.add(1.0, &v.name);
                first_of.add(-arrive, &v.name);
                last_of.add(-arrive, &v.name);
            }
            for &p in &hubs {
                let mut r = Row::new(format!("through_{tag}_{}", p.0), "=", 0.0);
                for (v, _) in vars.first.iter().filter(|(v, _)| v.to == p) {
                    r.add(1.0, &v.name);
                }
                for v in vars.second.iter().filter(|v| v.from == p) {
                    r.add(-1.0, &v.name);
                }
                rows.push(r);
                continuous.push(rho(p));
            }
            for &k in &allowed {
                for (row, var) in [("latest_direct", phi(k)), ("latest", rho(k))] {
                    let mut r = Row::new(format!("{row}_{tag}_{}", k.0), ">=", 0.0);
                    r.add(1.0, &format!("DT_{s}_{}", k.0));
                    r.add(-1.0, &var);
                    rows.push(r);
                    continuous.push(var);
                }
                if common {
                    let mut r = Row::new(format!("same_{tag}_{}", k.0), "<=", 0.0);
                    for v in vars.second.iter().filter(|v| v.to == k) {
                        r.add(1.0, &v.name);
                    }
                    for (v, _) in vars.direct.iter().filter(|(v, _)| v.to == k) {
                        r.add(1.0, &v.name);
                    }
                    r.add(-1.0, &format!("w_{s}_{}", k.0));
                    rows.push(r);
                }
            }
            rows.push(starts);
            rows.push(ends);
            rows.push(first_of);
            rows.push(last_of);

            let all = vars.first.iter().map(|(v, _)| v).chain(&vars.second).chain(vars.direct.iter().map(|(v, _)| v));
            for v in all {
                let svc = network.service(v.service);
                capacity[v.service.0 as usize].push((volume.m3(), v.name.clone()));
                match objective {
                    Objective::J1 if svc.mode == Mode::DirectTruck => obj.push((1.0, v.name.clone())),
                    Objective::J3 => obj.push((svc.unit_cost * volume.m3() * svc.distance, v.name.clone())),
                    _ => {}
                }
                binaries.push(v.name.clone());
            }
        }
    }
    for (l, terms) in capacity.into_iter().enumerate() {
        if !terms.is_empty() {
            rows.push(Row { name: format!("cap_{l}"), terms, sense: "<=", rhs: network.services()[l].capacity.m3() });
        }
    }

    let mut out = String::new();
    let _ = writeln!(out, "\\ objective {objective}; times in minutes, volumes in m3, M = {m}");
    for (s, ship) in network.shipments().iter().enumerate() {
        let _ = writeln!(out, "\\ shipment {s} = {}", ship.id);
    }
    for (n, node) in network.nodes().iter().enumerate() {
        let _ = writeln!(out, "\\ node {n} = {}", node.id);
    }
    for (l, svc) in network.services().iter().enumerate() {
        let _ = writeln!(out, "\\ vehicle {l} = {}", svc.id);
    }
    out.push_str("Minimize\n obj:");
    obj.retain(|(c, _)| *c != 0.0);
    write_terms(&mut out, &obj);
    out.push_str("\nSubject To\n");
    for r in &rows {
        let _ = write!(out, " {}:", r.name);
        if r.terms.is_empty() {
            // a constant row still needs a variable
            out.push_str(" 0 zero");
        }
        write_terms(&mut out, &r.terms);
        let _ = writeln!(out, " {} {}", r.sense, r.rhs);
    }
    out.push_str("Bounds\n");
    if rows.iter().any(|r| r.terms.is_empty()) {
        out.push_str(" zero = 0\n");
    }
    continuous.sort();
    continuous.dedup();
    for v in &continuous {
        let _ = writeln!(out, " {v} >= 0");
    }
    out.push_str("Binary\n");
    for chunk in binaries.chunks(8) {
        let _ = writeln!(out, " {}", chunk.join(" "));
    }
    out.push_str("End\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Node, Shipment, VehicleService};
    use crate::units::{Minutes, Volume};

    fn h(x: i64) -> Minutes {
        Minutes(x * 60)
    }

    fn tiny() -> Network {
        let svc = |id: &str, from: &str, to: &str, mode, dp, t| VehicleService {
            id: id.into(),
            from: from.into(),
            to: to.into(),
            mode,
            departure_time: h(dp),
            travel_time: h(t),
            capacity: Volume::from_m3(10.0),
            unit_cost: 1.0,
            distance: 100.0,
        };
        Network::new(
            vec![Node::origin("o"), Node::hub("p", h(1)), Node::destination("d", h(2))],
            vec![
                svc("tr", "o", "p", Mode::Train, 9, 5),
                svc("tk", "p", "d", Mode::Truck, 16, 4),
                svc("dt", "o", "d", Mode::DirectTruck, 6, 10),
            ],
            vec![Shipment {
                id: "s".into(),
                priority: 1.0,
                module_count: 1,
                module_volumes: vec![Volume::from_m3(2.0)],
                origin_arrivals: [("o".to_string(), vec![h(5)])].into(),
                allowed_destinations: ["d".to_string()].into(),
            }],
        )
    }

    #[test]
    fn direct_usage_objective_has_only_z_terms() {
        let net = tiny();
        let lp = export_lp(&net, Objective::J1, &HubTimes::nominal(&net), &SolverOptions::default()).unwrap();
        let obj = lp.lines().find(|l| l.starts_with(" obj:")).unwrap();
        assert_eq!(obj, " obj: + z_0_0_0_2_2");
        for section in ["Minimize", "Subject To", "Bounds", "Binary", "End"] {
            assert!(lp.lines().any(|l| l == section), "{section}");
        }
    }

    #[test]
    fn empty_network_has_empty_objective() {
        let net = tiny().with_shipments(Vec::new());
        let lp = export_lp(&net, Objective::J2, &HubTimes::nominal(&net), &SolverOptions::default()).unwrap();
        assert!(lp.contains("Minimize\n obj:\nSubject To\n"));
    }

    #[test]
    fn big_m_doubles_latest_departure_plus_longest_trip() {
        assert_eq!(big_m(&tiny()), 2 * (16 * 60 + 10 * 60));
    }
}
