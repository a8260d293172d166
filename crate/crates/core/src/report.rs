//! Tables and figure data written by the command-line tool.
//!
//! Numbers are written in the shortest decimal form that reads back to the
//! same `f64`, so every CSV parses back losslessly.

use std::fmt::Write;

use serde::Serialize;

use crate::gsa::SensitivityResult;
use crate::itinerary::ItineraryKind;
use crate::kpi::ModuleChoice;
use crate::model::{Mode, Network};
use crate::solver::AssignmentSolution;
use crate::uncertainty::{SampleOutcome, SampleStatus, VariabilityReport};

pub const KPI_NAMES: [&str; 4] = ["KPI1", "KPI2", "KPI3", "KPI4"];
pub const KPI_UNITS: [&str; 4] = ["modules", "hours", "currency", "hours"];

/// Share of modules per mode, in percent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModalSplit {
    pub modules: usize,
    pub via_hub: usize,
    /// Leaving the origin terminal: direct truck, truck to a hub, train to a hub.
    pub origin: [f64; 3],
    /// Through the hubs, over the two legs of every via-hub module: truck in,
    /// train in, truck out, train out. `None` when no module uses a hub.
    pub hub: Option<[f64; 4]>,
}

impl ModalSplit {
    pub const ORIGIN_LABELS: [&'static str; 3] = ["DirectTruck", "TruckToHub", "TrainToHub"];
    pub const HUB_LABELS: [&'static str; 4] = ["TruckToHub", "TrainToHub", "TruckFromHub", "TrainFromHub"];
}

pub fn modal_split(network: &Network, choices: &[ModuleChoice]) -> ModalSplit {
    let mut origin = [0usize; 3];
    let mut hub = [0usize; 4];
    for c in choices {
        let it = &c.itinerary;
        match it.kind {
            ItineraryKind::Direct => origin[0] += 1,
            ItineraryKind::ViaHub => {
                let first = network.service(it.leg1).mode;
                origin[if first == Mode::Train { 2 } else { 1 }] += 1;
                hub[if first == Mode::Train { 1 } else { 0 }] += 1;
                if let Some(l2) = it.leg2 {
                    hub[if network.service(l2).mode == Mode::Train { 3 } else { 2 }] += 1;
                }
            }
        }
    }
    let modules = choices.len();
    let via_hub = origin[1] + origin[2];
    let pct = |x: usize, of: usize| if of == 0 { 0.0 } else { 100.0 * x as f64 / of as f64 };
    ModalSplit {
        modules,
        via_hub,
        origin: origin.map(|x| pct(x, modules)),
        hub: (via_hub > 0).then(|| hub.map(|x| pct(x, 2 * via_hub))),
    }
}

/// One row per module: route, vehicles and delivery time.
pub fn routing_csv(network: &Network, solution: &AssignmentSolution) -> String {
    let mut out = String::from(
        "shipment,module,kind,origin,hub,destination,leg1,leg2,volume_m3,delivery_time,delivery_hours,cost\n",
    );
    for c in &solution.choices {
        let it = &c.itinerary;
        let node = |i| network.node(i).id.as_str();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            network.shipments()[c.shipment].id,
            c.module,
            match it.kind {
                ItineraryKind::Direct => "direct",
                ItineraryKind::ViaHub => "via-hub",
            },
            node(it.origin),
            it.hub.map(node).unwrap_or(""),
            node(it.destination),
            network.service(it.leg1).id,
            it.leg2.map(|l| network.service(l).id.as_str()).unwrap_or(""),
            it.volume.m3(),
            it.delivery_time,
            it.delivery_time.hours(),
            it.cost.currency(),
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoutingRow {
    pub shipment: String,
    pub module: u32,
    pub kind: &'static str,
    pub origin: String,
    pub hub: Option<String>,
    pub destination: String,
    pub leg1: String,
    pub leg2: Option<String>,
    pub volume_m3: f64,
    pub delivery_hours: f64,
    pub cost: f64,
}

pub fn routing_rows(network: &Network, solution: &AssignmentSolution) -> Vec<RoutingRow> {
    solution
        .choices
        .iter()
        .map(|c| {
            let it = &c.itinerary;
            let node = |i| network.node(i).id.clone();
            RoutingRow {
                shipment: network.shipments()[c.shipment].id.clone(),
                module: c.module,
                kind: if it.kind == ItineraryKind::Direct { "direct" } else { "via-hub" },
                origin: node(it.origin),
                hub: it.hub.map(node),
                destination: node(it.destination),
                leg1: network.service(it.leg1).id.clone(),
                leg2: it.leg2.map(|l| network.service(l).id.clone()),
                volume_m3: it.volume.m3(),
                delivery_hours: it.delivery_time.hours(),
                cost: it.cost.currency(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KpiSummary {
    pub objective: String,
    pub status: String,
    pub objective_value: f64,
    pub kpi1: f64,
    pub kpi2: f64,
    pub kpi3: f64,
    pub kpi4: f64,
    pub explored: u64,
}

pub fn kpi_summary(solution: &AssignmentSolution) -> KpiSummary {
    let [kpi1, kpi2, kpi3, kpi4] = solution.kpis.values();
    KpiSummary {
        objective: solution.objective.to_string(),
        status: status_label(solution),
        objective_value: solution.objective_f64(),
        kpi1,
        kpi2,
        kpi3,
        kpi4,
        explored: solution.explored,
    }
}

fn status_label(solution: &AssignmentSolution) -> String {
    serde_json::to_value(solution.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

pub fn kpi_summary_csv(solution: &AssignmentSolution) -> String {
    let s = kpi_summary(solution);
    let mut out = String::from("key,value,unit\n");
    let _ = writeln!(out, "objective,{},", s.objective);
    let _ = writeln!(out, "status,{},", s.status);
    let _ = writeln!(out, "objective_value,{},{}", s.objective_value, KPI_UNITS[solution.objective.index()]);
    for (k, v) in [s.kpi1, s.kpi2, s.kpi3, s.kpi4].iter().enumerate() {
        let _ = writeln!(out, "{},{v},{}", KPI_NAMES[k].to_lowercase(), KPI_UNITS[k]);
    }
    let _ = writeln!(out, "explored,{},nodes", s.explored);
    out
}

pub fn modal_split_csv(split: &ModalSplit) -> String {
    let mut out = String::from("leg,category,percent\n");
    for (label, v) in ModalSplit::ORIGIN_LABELS.iter().zip(split.origin) {
        let _ = writeln!(out, "origin,{label},{v}");
    }
    if let Some(hub) = split.hub {
        for (label, v) in ModalSplit::HUB_LABELS.iter().zip(hub) {
            let _ = writeln!(out, "hub,{label},{v}");
        }
    }
    out
}

/// `sample_index,kpi1,kpi2,kpi3,kpi4,status`; KPI cells are empty for
/// infeasible samples.
pub fn kpi_matrix_csv(rows: &[SampleOutcome]) -> String {
    let mut out = String::from("sample_index,kpi1,kpi2,kpi3,kpi4,status\n");
    for r in rows {
        let cells = match r.kpis {
            Some(k) => k.map(|v| v.to_string()).join(","),
            None => ",,,".to_string(),
        };
        let status = match r.status {
            SampleStatus::Optimal => "optimal",
            SampleStatus::Infeasible => "infeasible",
            SampleStatus::Limit => "limit",
        };
        let _ = writeln!(out, "{},{cells},{status}", r.sample_index);
    }
    out
}

pub fn variability_csv(report: &VariabilityReport) -> String {
    let mut out = String::from("config,kpi,mean,variance,relative_std,samples,infeasible,unproven\n");
    for (k, s) in report.kpis.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            report.configuration,
            KPI_NAMES[k],
            s.mean,
            s.variance,
            s.relative_std.map(|v| v.to_string()).unwrap_or_default(),
            report.sample_count,
            report.infeasible_count,
            report.unproven_count,
        );
    }
    out
}

/// `input,kpi,index,n,config` for the full sample.
pub fn indices_csv(result: &SensitivityResult) -> String {
    let mut out = String::from("input,kpi,index,n,config\n");
    for (i, input) in result.inputs.iter().enumerate() {
        for (k, est) in result.kpis.iter().enumerate() {
            let _ = writeln!(
                out,
                "{input},{},{},{},{}",
                KPI_NAMES[k], est.indices[i], result.sample_count, result.configuration
            );
        }
    }
    out
}

/// Same columns as [`indices_csv`], one block per convergence checkpoint.
pub fn trace_csv(result: &SensitivityResult) -> String {
    let mut out = String::from("input,kpi,index,n,config\n");
    for point in &result.trace {
        for (i, input) in result.inputs.iter().enumerate() {
            for (k, col) in point.indices.iter().enumerate() {
                let _ = writeln!(out, "{input},{},{},{},{}", KPI_NAMES[k], col[i], point.n, result.configuration);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadarKpi {
    pub kpi: &'static str,
    /// Indices clipped to `[0, 1]`, in the order of `axes`.
    pub values: Vec<f64>,
    pub raw: Vec<f64>,
    pub variance: f64,
    pub zero_variance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Radar {
    pub config: String,
    pub n: usize,
    pub harmonics: usize,
    pub axes: Vec<String>,
    pub kpis: Vec<RadarKpi>,
}

pub fn radar(result: &SensitivityResult) -> Radar {
    Radar {
        config: result.configuration.clone(),
        n: result.sample_count,
        harmonics: result.harmonics,
        axes: result.inputs.clone(),
        kpis: result
            .kpis
            .iter()
            .enumerate()
            .map(|(k, est)| RadarKpi {
                kpi: KPI_NAMES[k],
                values: est.clipped(),
                raw: est.indices.clone(),
                variance: est.variance,
                zero_variance: est.zero_variance,
            })
            .collect(),
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{random_network, InstanceShape};
    use crate::itinerary::{enumerate_itineraries, HubTimes, Itinerary};
    use crate::kpi::Objective;
    use crate::model::{Node, Shipment, VehicleService};
    use crate::solver::{solve_exact, SolverOptions};
    use crate::units::{Minutes, Volume};

    #[test]
    fn split_percentages_add_up() {
        for seed in 0..20 {
            let net = random_network(&InstanceShape::default(), seed);
            let sol = solve_exact(&net, Objective::J3, &HubTimes::nominal(&net), &SolverOptions::default()).unwrap();
            if sol.choices.is_empty() {
                continue;
            }
            let split = modal_split(&net, &sol.choices);
            assert!((split.origin.iter().sum::<f64>() - 100.0).abs() < 1e-9);
            if let Some(h) = split.hub {
                assert!((h.iter().sum::<f64>() - 100.0).abs() < 1e-9);
                assert!((h[0] + h[1] - 50.0).abs() < 1e-9);
            }
        }
    }

    fn three_routes() -> (Network, Vec<Itinerary>) {
        let h = |x: i64| Minutes(x * 60);
        let svc = |id: &str, from: &str, to: &str, mode, dp| VehicleService {
            id: id.into(),
            from: from.into(),
            to: to.into(),
            mode,
            departure_time: h(dp),
            travel_time: h(2),
            capacity: Volume::from_m3(100.0),
            unit_cost: 0.1,
            distance: 100.0,
        };
        let nodes = vec![Node::origin("o"), Node::hub("p", h(1)), Node::destination("d", h(0))];
        let services = vec![
            svc("direct", "o", "d", Mode::DirectTruck, 8),
            svc("train", "o", "p", Mode::Train, 8),
            svc("truck", "p", "d", Mode::Truck, 12),
        ];
        let ship = Shipment {
            id: "s".into(),
            priority: 1.0,
            module_count: 1,
            module_volumes: vec![Volume::from_m3(1.0)],
            origin_arrivals: [("o".to_string(), vec![h(6)])].into(),
            allowed_destinations: ["d".to_string()].into(),
        };
        let net = Network::new(nodes, services, vec![ship.clone()]);
        let its = enumerate_itineraries(&net, &ship, 0, &HubTimes::nominal(&net)).unwrap();
        (net, its)
    }

    fn choices(its: &[Itinerary]) -> Vec<ModuleChoice> {
        its.iter().enumerate().map(|(i, it)| ModuleChoice { shipment: 0, module: i as u32, itinerary: *it }).collect()
    }

    #[test]
    fn all_direct_leaves_hub_split_empty() {
        let (net, its) = three_routes();
        let direct = *its.iter().find(|i| i.kind == ItineraryKind::Direct).unwrap();
        let split = modal_split(&net, &choices(&[direct, direct, direct]));
        assert_eq!(split.origin, [100.0, 0.0, 0.0]);
        assert_eq!(split.hub, None);
    }

    #[test]
    fn two_via_train_two_direct() {
        let (net, its) = three_routes();
        let direct = *its.iter().find(|i| i.kind == ItineraryKind::Direct).unwrap();
        let via = *its.iter().find(|i| i.kind == ItineraryKind::ViaHub).unwrap();
        let split = modal_split(&net, &choices(&[via, direct, via, direct]));
        assert_eq!(split.origin, [50.0, 0.0, 50.0]);
        assert_eq!(split.hub, Some([0.0, 50.0, 50.0, 0.0]));
        assert_eq!((split.modules, split.via_hub), (4, 2));
    }

    #[test]
    fn csv_cells_read_back_exactly() {
        let rows = [
            SampleOutcome {
                sample_index: 0,
                status: SampleStatus::Optimal,
                kpis: Some([3.0, 724.4166666666666, 0.1, 1.0 / 3.0]),
            },
            SampleOutcome { sample_index: 1, status: SampleStatus::Infeasible, kpis: None },
        ];
        let csv = kpi_matrix_csv(&rows);
        let line = csv.lines().nth(1).unwrap();
        let back: Vec<f64> = line.split(',').skip(1).take(4).map(|c| c.parse().unwrap()).collect();
        assert_eq!(back, rows[0].kpis.unwrap().to_vec());
        assert_eq!(csv.lines().nth(2), Some("1,,,,,infeasible"));
    }
}
