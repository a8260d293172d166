//! Capacitated module-to-itinerary assignment.
//!
//! Each module picks exactly one time-feasible itinerary; the loads placed on
//! every vehicle must stay within its capacity. [`solve_exact`] is a depth-first
//! branch and bound, [`solve_exhaustive`] enumerates every capacity-feasible
//! assignment and serves as its oracle. Both return the optimum whose vector of
//! candidate ordinals is lexicographically smallest, so they agree on the
//! solution itself and not only on its value.

mod bnb;
mod exhaustive;
mod flow;
mod lagrange;

use std::sync::Arc;

use serde::Serialize;

use crate::itinerary::{HubTimes, Itinerary, ItineraryEnumerator, ItineraryError, Route};
use crate::kpi::{compute_kpis, objective_to_f64, KpiReport, Kpis, ModuleChoice, Objective};
use crate::model::{Network, NodeIdx, ServiceIdx};
use crate::units::{Minutes, Volume};

pub use bnb::solve_exact;
pub use exhaustive::solve_exhaustive;

pub const DEFAULT_EXHAUSTIVE_CEILING: u128 = 10_000_000;
pub const DEFAULT_NODE_LIMIT: u64 = 500_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverOptions {
    /// Allow the modules of one shipment to end at different destination
    /// terminals. Off by default: a shipment is reassembled at one terminal.
    pub per_module_destinations: bool,
    /// Upper limit on the search-space size accepted by [`solve_exhaustive`].
    pub exhaustive_ceiling: u128,
    /// Search nodes [`solve_exact`] may expand before it stops and reports the
    /// best assignment found so far. `None` searches to proven optimality.
    pub node_limit: Option<u64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            per_module_destinations: false,
            exhaustive_ceiling: DEFAULT_EXHAUSTIVE_CEILING,
            node_limit: Some(DEFAULT_NODE_LIMIT),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    Itinerary(#[from] ItineraryError),
    #[error("search space of {size} assignments exceeds the exhaustive ceiling of {ceiling}")]
    CeilingExceeded { size: u128, ceiling: u128 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    /// The node limit was reached. `choices` holds the best assignment found,
    /// or is empty if none was found; optimality is not proven.
    NodeLimit,
}

#[derive(Debug, Clone)]
pub struct AssignmentSolution {
    pub status: SolveStatus,
    pub objective: Objective,
    /// One choice per module, ordered by shipment then module index.
    pub choices: Vec<ModuleChoice>,
    /// Volume loaded on each service, indexed by `ServiceIdx`.
    pub service_loads: Vec<Volume>,
    pub kpis: Kpis,
    /// Exact value of the selected objective in its integer unit.
    pub objective_value: i64,
    /// Position of each chosen itinerary in its module's candidate list.
    pub ordinals: Vec<u32>,
    pub report: Option<KpiReport>,
    /// Search nodes (branch and bound) or leaves (exhaustive) visited.
    pub explored: u64,
}

impl AssignmentSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Objective value in reported units (count, hours, currency, hours).
    pub fn objective_f64(&self) -> f64 {
        objective_to_f64(self.objective, self.objective_value)
    }

    pub fn load_of(&self, network: &Network, service_id: &str) -> Option<Volume> {
        network.service_idx(service_id).map(|i| self.service_loads[i.0 as usize])
    }

    fn stopped(network: &Network, prepared: &Prepared, picks: Option<&[usize]>, explored: u64) -> AssignmentSolution {
        let mut sol = match picks {
            Some(picks) => prepared.solution(network, picks, explored),
            None => AssignmentSolution::infeasible(network, prepared.objective, explored),
        };
        sol.status = SolveStatus::NodeLimit;
        sol
    }

    fn infeasible(network: &Network, objective: Objective, explored: u64) -> AssignmentSolution {
        AssignmentSolution {
            status: SolveStatus::Infeasible,
            objective,
            choices: Vec::new(),
            service_loads: vec![Volume(0); network.services().len()],
            kpis: Kpis::default(),
            objective_value: 0,
            ordinals: Vec::new(),
            report: None,
            explored,
        }
    }
}

/// One candidate itinerary of one module together with its sort key.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Candidate {
    pub itinerary: Itinerary,
    pub ordinal: u32,
    pub legs: [Option<ServiceIdx>; 2],
}

/// Modules sharing shipment, volume and candidate list.
#[derive(Debug)]
pub(crate) struct ModuleClass {
    pub shipment: usize,
    pub volume: Volume,
    routes: Arc<Vec<Route>>,
    pub candidates: Arc<Vec<Candidate>>,
}

/// Search input shared by both solvers.
#[derive(Debug)]
pub(crate) struct Prepared {
    pub objective: Objective,
    pub per_module_destinations: bool,
    /// (shipment, module index, class) in search order.
    pub modules: Vec<(usize, u32, usize)>,
    pub classes: Vec<ModuleClass>,
    pub capacity: Vec<i64>,
    /// Priority weight per shipment (thousandths).
    pub weights: Vec<i64>,
    pub shipment_count: usize,
}

/// Sort key of a single itinerary under an objective: its own contribution.
pub(crate) fn contribution(objective: Objective, it: &Itinerary) -> i64 {
    match objective {
        Objective::J1 => it.uses_direct_truck() as i64,
        Objective::J2 | Objective::J4 => it.delivery_time.0,
        Objective::J3 => it.cost.0,
    }
}

impl Prepared {
    /// Enumerates and sorts candidates. Candidates that can never fit (module
    /// volume above a leg's capacity) are dropped; the relative order of the
    /// rest, and therefore the lexicographic tie-break, is unaffected.
    pub fn new(
        network: &Network,
        objective: Objective,
        hub_times: &HubTimes,
        options: &SolverOptions,
    ) -> Result<Prepared, SolveError> {
        let enumerator = ItineraryEnumerator::new(network, hub_times)?;
        let capacity: Vec<i64> = network.services().iter().map(|s| s.capacity.0).collect();
        let mut classes: Vec<ModuleClass> = Vec::new();
        let mut modules = Vec::with_capacity(network.module_total());
        for (si, shipment) in network.shipments().iter().enumerate() {
            // Modules with equal arrival times share their route set.
            let mut route_cache: Vec<(Vec<Minutes>, Arc<Vec<Route>>)> = Vec::new();
            let first_class = classes.len();
            for m in 0..shipment.module_count {
                let signature: Vec<Minutes> =
                    shipment.origin_arrivals.values().map(|t| t.get(m as usize).copied().unwrap_or_default()).collect();
                let routes = match route_cache.iter().find(|(sig, _)| *sig == signature) {
                    Some((_, r)) => Arc::clone(r),
                    None => {
                        let r = Arc::new(enumerator.routes(shipment, m)?);
                        route_cache.push((signature, Arc::clone(&r)));
                        r
                    }
                };
                let volume = shipment.module_volumes[m as usize];
                let existing =
                    classes[first_class..].iter().position(|c| c.volume == volume && Arc::ptr_eq(&c.routes, &routes));
                let class = match existing {
                    Some(k) => first_class + k,
                    None => {
                        let mut cands: Vec<(i64, _, Itinerary)> = routes
                            .iter()
                            .map(|r| {
                                let it = r.with_volume(network, volume);
                                (contribution(objective, &it), it.order_key(network), it)
                            })
                            .collect();
                        cands.sort_by_key(|c| (c.0, c.1));
                        let candidates = cands
                            .into_iter()
                            .enumerate()
                            .map(|(ord, (_, _, it))| Candidate {
                                itinerary: it,
                                ordinal: ord as u32,
                                legs: [Some(it.leg1), it.leg2],
                            })
                            .filter(|c| c.legs.iter().flatten().all(|l| capacity[l.0 as usize] >= volume.0))
                            .collect();
                        classes.push(ModuleClass { shipment: si, volume, routes, candidates: Arc::new(candidates) });
                        classes.len() - 1
                    }
                };
                modules.push((si, m, class));
            }
        }
        Ok(Prepared {
            objective,
            per_module_destinations: options.per_module_destinations,
            modules,
            classes,
            capacity,
            weights: network.shipments().iter().map(|s| s.weight_milli()).collect(),
            shipment_count: network.shipments().len(),
        })
    }

    /// Number of assignments ignoring capacity, saturating.
    pub fn search_space(&self) -> u128 {
        self.modules
            .iter()
            .map(|&(_, _, c)| self.classes[c].candidates.len() as u128)
            .fold(1u128, |a, b| a.saturating_mul(b))
    }

    pub fn any_module_without_candidates(&self) -> bool {
        self.modules.iter().any(|&(_, _, c)| self.classes[c].candidates.is_empty())
    }

    /// Assembles the public solution from chosen candidate positions (indices
    /// into each module's class list).
    pub fn solution(&self, network: &Network, picks: &[usize], explored: u64) -> AssignmentSolution {
        let mut loads = vec![Volume(0); network.services().len()];
        let mut choices = Vec::with_capacity(picks.len());
        let mut ordinals = Vec::with_capacity(picks.len());
        for (&(si, m, class), &p) in self.modules.iter().zip(picks) {
            let cand = &self.classes[class].candidates[p];
            for l in cand.legs.iter().flatten() {
                loads[l.0 as usize] = loads[l.0 as usize] + cand.itinerary.volume;
            }
            choices.push(ModuleChoice { shipment: si, module: m, itinerary: cand.itinerary });
            ordinals.push(cand.ordinal);
        }
        let report = compute_kpis(network, &choices).expect("solver assigns every module exactly once");
        AssignmentSolution {
            status: SolveStatus::Optimal,
            objective: self.objective,
            kpis: report.kpis,
            objective_value: report.kpis.exact(self.objective),
            choices,
            service_loads: loads,
            ordinals,
            report: Some(report),
            explored,
        }
    }
}

/// Destination of a candidate; used for the one-terminal-per-shipment rule.
pub(crate) fn destination(c: &Candidate) -> NodeIdx {
    c.itinerary.destination
}

#[cfg(test)]
mod tests;
