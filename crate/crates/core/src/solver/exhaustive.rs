//! Full enumeration of capacity-feasible assignments, used as the oracle for
//! the branch and bound. Leaves are scored with [`compute_kpis`] rather than
//! the incremental bookkeeping of the search.

use crate::itinerary::HubTimes;
use crate::kpi::{compute_kpis, ModuleChoice, Objective};
use crate::model::{Network, NodeIdx};

use super::{destination, AssignmentSolution, Prepared, SolveError, SolverOptions};

/// Optimum by enumeration. Fails when the product of per-module candidate
/// counts exceeds `options.exhaustive_ceiling`.
pub fn solve_exhaustive(
    network: &Network,
    objective: Objective,
    hub_times: &HubTimes,
    options: &SolverOptions,
) -> Result<AssignmentSolution, SolveError> {
    let prepared = Prepared::new(network, objective, hub_times, options)?;
    let size = prepared.search_space();
    if size > options.exhaustive_ceiling {
        return Err(SolveError::CeilingExceeded { size, ceiling: options.exhaustive_ceiling });
    }
    if prepared.any_module_without_candidates() {
        return Ok(AssignmentSolution::infeasible(network, objective, 0));
    }
    let mut walk = Walk {
        network,
        p: &prepared,
        remaining: prepared.capacity.clone(),
        dest: vec![None; prepared.shipment_count],
        picks: Vec::new(),
        choices: Vec::new(),
        best: None,
        leaves: 0,
    };
    walk.visit(0);
    Ok(match walk.best {
        Some((_, picks)) => prepared.solution(network, &picks, walk.leaves),
        None => AssignmentSolution::infeasible(network, objective, walk.leaves),
    })
}

struct Walk<'a> {
    network: &'a Network,
    p: &'a Prepared,
    remaining: Vec<i64>,
    dest: Vec<Option<NodeIdx>>,
    picks: Vec<usize>,
    choices: Vec<ModuleChoice>,
    best: Option<(i64, Vec<usize>)>,
    leaves: u64,
}

impl Walk<'_> {
    fn visit(&mut self, depth: usize) {
        if depth == self.p.modules.len() {
            self.leaves += 1;
            let report = compute_kpis(self.network, &self.choices).expect("complete assignment");
            let value = report.kpis.exact(self.p.objective);
            if self.best.as_ref().is_none_or(|(b, _)| value < *b) {
                self.best = Some((value, self.picks.clone()));
            }
            return;
        }
        let (s, m, class) = self.p.modules[depth];
        let cl = &self.p.classes[class];
        for (pos, c) in cl.candidates.iter().enumerate() {
            let v = c.itinerary.volume.0;
            if c.legs.iter().flatten().any(|l| self.remaining[l.0 as usize] < v) {
                continue;
            }
            let fixed_here = if self.p.per_module_destinations {
                false
            } else {
                match self.dest[s] {
                    Some(d) if d != destination(c) => continue,
                    Some(_) => false,
                    None => {
                        self.dest[s] = Some(destination(c));
                        true
                    }
                }
            };
            for l in c.legs.iter().flatten() {
                self.remaining[l.0 as usize] -= v;
            }
            self.picks.push(pos);
            self.choices.push(ModuleChoice { shipment: s, module: m, itinerary: c.itinerary });

            self.visit(depth + 1);

            self.choices.pop();
            self.picks.pop();
            for l in c.legs.iter().flatten() {
                self.remaining[l.0 as usize] += v;
            }
            if fixed_here {
                self.dest[s] = None;
            }
        }
    }
}
