//! Depth-first branch and bound over modules.
//!
//! Modules are fixed in (shipment, module) order and each module's candidates
//! are tried in ascending order of their own objective contribution. A node
//! is pruned when its lower bound reaches the incumbent, so the first optimum
//! found in this order (the lexicographically smallest) is kept.
//!
//! The bound of a shipment's unassigned modules only looks at candidates that
//! still fit the remaining capacities:
//! * J1, J3: sum over unassigned modules of their cheapest fitting candidate.
//! * J2: current per-terminal maxima raised to the delivery threshold of the
//!   unassigned modules (see [`Search::threshold`]).
//! * J4: the current gap, widened by that threshold and by the latest possible
//!   delivery of any unassigned module.
//!
//! Modules of one class are interchangeable, so only non-decreasing
//! candidate positions are tried within a class. Sorting the positions of any
//! assignment this way keeps it feasible and keeps its KPIs, and never makes
//! it lexicographically larger, so the tie-break is unaffected.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};

use crate::itinerary::HubTimes;
use crate::kpi::Objective;
use crate::model::{Network, NodeIdx};
use crate::units::Minutes;

use super::flow::FlowGroup;
use super::lagrange::{self, integer_bound, relax_latest_delivery, Prices, ShipmentView};
use super::{destination, AssignmentSolution, Candidate, Prepared, SolveError, SolverOptions};

const DIVE_BUDGET: u64 = 200_000;
const SUBGRADIENT_ITERATIONS: usize = 200;
const MEMO_LIMIT: usize = 1 << 20;

/// What is known about the best completion from a shipment boundary.
struct MemoEntry {
    /// Lower bound on the completion's objective; exact when `completion` is set.
    lower: i64,
    /// Candidate positions of the lexicographically first optimal completion.
    completion: Option<Vec<usize>>,
}

/// Globally optimal assignment for one objective.
pub fn solve_exact(
    network: &Network,
    objective: Objective,
    hub_times: &HubTimes,
    options: &SolverOptions,
) -> Result<AssignmentSolution, SolveError> {
    let prepared = Prepared::new(network, objective, hub_times, options)?;
    if prepared.any_module_without_candidates() {
        return Ok(AssignmentSolution::infeasible(network, objective, 0));
    }
    let mut search = Search::new(&prepared);
    search.limit = options.node_limit;
    if lagrange::supported(&prepared) {
        let mut budget = DIVE_BUDGET;
        let dive = search.dive(0, &mut budget);
        let upper = dive.as_ref().map(|picks| prepared.solution(network, picks, 0).objective_value);
        if let Some(u) = upper {
            // any optimum is at most u, so u + 1 is a strict cutoff
            search.best = u + 1;
        }
        search.fallback = dive;
        let upper = upper.map_or_else(
            || {
                search.root_relaxation(&Prices::new(&prepared, vec![0.0; prepared.capacity.len()]), None).abs() * 2.0
                    + 1.0
            },
            |u| u as f64,
        );
        let prices = lagrange::tune(&prepared, upper, SUBGRADIENT_ITERATIONS, &|pr, am| search.root_relaxation(pr, am));
        let mut budget = DIVE_BUDGET;
        if let Some(picks) = search.priced_dive(0, &mut budget, &prices) {
            let v = prepared.solution(network, &picks, 0).objective_value;
            if v < search.best - 1 || search.fallback.is_none() {
                search.best = v + 1;
                search.fallback = Some(picks);
            }
        }
        search.prices = Some(prices);
    }
    search.descend(0);
    if search.stopped {
        let picks = search.best_picks.or(search.fallback);
        return Ok(AssignmentSolution::stopped(network, &prepared, picks.as_deref(), search.explored));
    }
    Ok(match search.best_picks {
        Some(picks) => prepared.solution(network, &picks, search.explored),
        None => AssignmentSolution::infeasible(network, objective, search.explored),
    })
}

#[derive(Debug, Clone)]
struct ShipmentState {
    /// Fixed destination under the one-terminal rule, with the number of modules holding it.
    dest: Option<(NodeIdx, u32)>,
    terminal_max: Vec<(NodeIdx, Minutes)>,
    first: Minutes,
    last: Minutes,
}

impl ShipmentState {
    fn empty() -> ShipmentState {
        ShipmentState { dest: None, terminal_max: Vec::new(), first: Minutes(i64::MAX), last: Minutes(i64::MIN) }
    }

    fn record(&mut self, c: &Candidate, fix_dest: bool) {
        let t = c.itinerary.delivery_time;
        let k = destination(c);
        match self.terminal_max.iter_mut().find(|(d, _)| *d == k) {
            Some((_, m)) => *m = (*m).max(t),
            None => self.terminal_max.push((k, t)),
        }
        self.first = self.first.min(t);
        self.last = self.last.max(t);
        if fix_dest {
            self.dest = Some(match self.dest {
                Some((d, n)) => (d, n + 1),
                None => (k, 1),
            });
        }
    }

    fn gap(&self) -> i64 {
        if self.first.0 > self.last.0 {
            0
        } else {
            (self.last - self.first).0
        }
    }
}

/// Best values still reachable by one class of modules under current capacities.
#[derive(Debug, Clone, Default)]
struct Reach {
    min_key: i64,
    earliest: i64,
    latest: i64,
    earliest_per_terminal: Vec<(NodeIdx, i64)>,
}

/// Bounds of one shipment, recomputed when its own modules change and at
/// shipment boundaries. Capacities only shrink further down the tree, so a
/// value computed at an ancestor still bounds the node.
#[derive(Debug, Clone, Copy)]
struct ShipInfo {
    threshold: Threshold,
    /// Lagrangian value of the shipment (J1, J3, J2 with prices).
    relax: f64,
    /// J4: lower bound on the shipment's final gap.
    gap: i64,
}

/// Outcome of [`Search::threshold`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Threshold {
    NoneOpen,
    Infeasible,
    At(i64),
}

struct Scratch {
    first: Vec<u32>,
    last: Vec<u32>,
    stamp: u32,
    cursor: Vec<usize>,
}

struct Search<'a> {
    p: &'a Prepared,
    /// Per depth: at a shipment's first module, the services usable from there on.
    relevant: Vec<Option<std::rc::Rc<Vec<u32>>>>,
    memo: HashMap<(usize, Vec<(u32, i64)>), MemoEntry>,
    groups: Vec<Vec<FlowGroup>>,
    /// Shipments with a candidate on each service.
    users: Vec<Vec<usize>>,
    infos: Vec<Vec<ShipInfo>>,
    /// A feasible assignment to report if the node limit stops the search first.
    fallback: Option<Vec<usize>>,
    limit: Option<u64>,
    stopped: bool,
    prices: Option<Prices>,
    fixed_price: f64,
    terminals_of_ship: Vec<Vec<NodeIdx>>,
    scratch: RefCell<Scratch>,
    floor: Vec<usize>,
    remaining: Vec<i64>,
    unassigned: Vec<u32>,
    ships: Vec<ShipmentState>,
    classes_of_ship: Vec<Vec<usize>>,
    terminals_of_class: Vec<usize>,
    linear: i64,
    picks: Vec<usize>,
    best: i64,
    best_picks: Option<Vec<usize>>,
    explored: u64,
}

impl<'a> Search<'a> {
    fn new(p: &'a Prepared) -> Search<'a> {
        let mut unassigned = vec![0u32; p.classes.len()];
        for &(_, _, c) in &p.modules {
            unassigned[c] += 1;
        }
        let mut classes_of_ship = vec![Vec::new(); p.shipment_count];
        for (i, c) in p.classes.iter().enumerate() {
            classes_of_ship[c.shipment].push(i);
        }
        let terminals_of_class = p
            .classes
            .iter()
            .map(|c| {
                let mut d: Vec<NodeIdx> = c.candidates.iter().map(destination).collect();
                d.sort();
                d.dedup();
                d.len()
            })
            .collect();
        let terminals_of_ship = classes_of_ship
            .iter()
            .map(|cs| {
                let mut d: Vec<NodeIdx> =
                    cs.iter().flat_map(|&c: &usize| p.classes[c].candidates.iter().map(destination)).collect();
                d.sort();
                d.dedup();
                d
            })
            .collect();
        let mut relevant = vec![None; p.modules.len()];
        let mut acc: BTreeSet<u32> = BTreeSet::new();
        for d in (0..p.modules.len()).rev() {
            let (_, m, class) = p.modules[d];
            for c in p.classes[class].candidates.iter() {
                acc.extend(c.legs.iter().flatten().map(|l| l.0));
            }
            if m == 0 && d > 0 {
                relevant[d] = Some(std::rc::Rc::new(acc.iter().copied().collect()));
            }
        }
        Search {
            p,
            relevant,
            memo: HashMap::new(),
            groups: FlowGroup::build(p),
            users: {
                let mut users = vec![Vec::new(); p.capacity.len()];
                for cl in &p.classes {
                    for c in cl.candidates.iter() {
                        for l in c.legs.iter().flatten() {
                            let u: &mut Vec<usize> = &mut users[l.0 as usize];
                            if u.last() != Some(&cl.shipment) && !u.contains(&cl.shipment) {
                                u.push(cl.shipment);
                            }
                        }
                    }
                }
                users
            },
            infos: Vec::new(),
            fallback: None,
            limit: None,
            stopped: false,
            prices: None,
            fixed_price: 0.0,
            terminals_of_ship,
            scratch: RefCell::new(Scratch {
                first: vec![0; p.capacity.len()],
                last: vec![0; p.capacity.len()],
                stamp: 0,
                cursor: Vec::new(),
            }),
            floor: vec![0; p.classes.len()],
            remaining: p.capacity.clone(),
            unassigned,
            ships: vec![ShipmentState::empty(); p.shipment_count],
            classes_of_ship,
            terminals_of_class,
            linear: 0,
            picks: Vec::with_capacity(p.modules.len()),
            best: i64::MAX,
            best_picks: None,
            explored: 0,
        }
    }

    fn fits(&self, c: &Candidate, ship: &ShipmentState) -> bool {
        if let (false, Some((d, _))) = (self.p.per_module_destinations, ship.dest) {
            if destination(c) != d {
                return false;
            }
        }
        let v = c.itinerary.volume.0;
        c.legs.iter().flatten().all(|l| self.remaining[l.0 as usize] >= v)
    }

    /// Relaxed optimum of the whole problem before any assignment.
    fn root_relaxation(&self, prices: &Prices, mut loads: Option<&mut [i64]>) -> f64 {
        let mut total = -prices.cap_term;
        for s in 0..self.p.shipment_count {
            total += self.ship_info(s, Some(prices), loads.as_deref_mut()).relax;
        }
        total
    }

    /// Lagrangian bound of the current node.
    fn relaxation_bound(&self, prices: &Prices, infos: &[ShipInfo]) -> i64 {
        let relaxed: f64 = infos.iter().map(|i| i.relax).sum();
        let total = self.linear as f64 + self.fixed_price - prices.cap_term + relaxed;
        if total == f64::INFINITY {
            return i64::MAX;
        }
        let scale = (self.linear as f64).abs() + self.fixed_price + prices.cap_term + relaxed.abs();
        integer_bound(total, scale)
    }

    /// Terminals a shipment may still end at: `None` stands for any.
    fn terminal_choices(&self, s: usize) -> Vec<Option<NodeIdx>> {
        match (self.ships[s].dest, self.p.per_module_destinations) {
            (Some((d, _)), false) => vec![Some(d)],
            (_, true) => vec![None],
            (None, false) => self.terminals_of_ship[s].iter().map(|&k| Some(k)).collect(),
        }
    }

    /// Latest of the groups' earliest completions, counting only deliveries
    /// at or after `from`.
    fn completion(&self, s: usize, k: Option<NodeIdx>, from: i64) -> Option<i64> {
        let mut t = i64::MIN;
        for g in &self.groups[s] {
            let units = g.units(&self.unassigned);
            if units > 0 {
                t = t.max(g.earliest_completion(&self.remaining, units, k, from)?);
            }
        }
        Some(t)
    }

    fn ship_info(&self, s: usize, prices: Option<&Prices>, loads: Option<&mut [i64]>) -> ShipInfo {
        let ship = &self.ships[s];
        let weight = self.p.weights[s];
        let open = self.groups[s].iter().any(|g| g.units(&self.unassigned) > 0);
        if !open {
            let closed = match self.p.objective {
                Objective::J2 => (weight * ship.terminal_max.iter().map(|(_, t)| t.0).max().unwrap_or(0)) as f64,
                _ => 0.0,
            };
            return ShipInfo { threshold: Threshold::NoneOpen, relax: closed, gap: ship.gap() };
        }
        let choices = self.terminal_choices(s);
        let mut info = ShipInfo { threshold: Threshold::NoneOpen, relax: 0.0, gap: 0 };
        match self.p.objective {
            Objective::J1 | Objective::J3 => {
                let Some(prices) = prices else { return info };
                let mut best = (f64::INFINITY, None);
                for &k in &choices {
                    let v: f64 = self.groups[s]
                        .iter()
                        .map(|g| g.min_cost(&self.remaining, g.units(&self.unassigned), k, Some(&prices.lambda), None))
                        .sum();
                    if v < best.0 {
                        best = (v, Some(k));
                    }
                }
                info.relax = best.0;
                if let (Some(loads), Some(k)) = (loads, best.1) {
                    for g in &self.groups[s] {
                        g.min_cost(
                            &self.remaining,
                            g.units(&self.unassigned),
                            k,
                            Some(&prices.lambda),
                            Some(&mut *loads),
                        );
                    }
                }
            }
            Objective::J2 | Objective::J4 => {
                let flow = choices.iter().filter_map(|&k| self.completion(s, k, i64::MIN)).min();
                let pooled = self.shipment_threshold(s, ship, &self.unassigned);
                info.threshold = match (flow, pooled) {
                    (None, _) | (_, Threshold::Infeasible) => Threshold::Infeasible,
                    (Some(t), Threshold::At(u)) => Threshold::At(t.max(u)),
                    (Some(t), _) => Threshold::At(t),
                };
                let Threshold::At(t_min) = info.threshold else {
                    info.relax = f64::INFINITY;
                    info.gap = i64::MAX;
                    return info;
                };
                if self.p.objective == Objective::J4 {
                    info.gap = self.window_gap(s, &choices);
                } else if let Some(prices) = prices {
                    let open: Vec<(usize, u32)> = self.classes_of_ship[s]
                        .iter()
                        .filter(|&&c| self.unassigned[c] > 0)
                        .map(|&c| (c, self.unassigned[c]))
                        .collect();
                    let view = ShipmentView {
                        open: &open,
                        fixed_dest: ship.dest.map(|(d, _)| d),
                        fixed_max: ship.terminal_max.iter().map(|(_, t)| t.0).max().unwrap_or(0),
                        weight,
                        terminals: &self.terminals_of_ship[s],
                        t_min,
                    };
                    info.relax = relax_latest_delivery(self.p, prices, &view, &|c| self.fits(c, ship), loads);
                }
            }
        }
        info
    }

    /// Smallest window `[a, b]` that holds the shipment's assigned deliveries
    /// and admits a flow of all its open modules delivered inside it.
    fn window_gap(&self, s: usize, choices: &[Option<NodeIdx>]) -> i64 {
        let ship = &self.ships[s];
        let mut best = i64::MAX;
        for &k in choices {
            let mut starts: Vec<i64> =
                self.groups[s].iter().filter(|g| g.units(&self.unassigned) > 0).flat_map(|g| g.deliveries(k)).collect();
            starts.sort_unstable();
            starts.dedup();
            for a in starts {
                let a = a.min(ship.first.0);
                let Some(t) = self.completion(s, k, a) else { break };
                let gap = t.max(ship.last.0) - a;
                best = best.min(gap);
                if a == ship.first.0 || best <= ship.gap() {
                    break;
                }
            }
        }
        best
    }

    fn assign(
        &mut self,
        class: usize,
        pos: usize,
        c: &Candidate,
        trial: ShipmentState,
        key: i64,
    ) -> (ShipmentState, usize) {
        let s = self.p.classes[class].shipment;
        let saved = std::mem::replace(&mut self.ships[s], trial);
        for l in c.legs.iter().flatten() {
            self.remaining[l.0 as usize] -= c.itinerary.volume.0;
        }
        self.unassigned[class] -= 1;
        self.linear += key;
        if let Some(pr) = &self.prices {
            self.fixed_price += pr.cand_cost[class][pos];
        }
        self.picks.push(pos);
        let floor = std::mem::replace(&mut self.floor[class], pos);
        (saved, floor)
    }

    fn unassign(&mut self, class: usize, pos: usize, c: &Candidate, key: i64, saved: (ShipmentState, usize)) {
        let s = self.p.classes[class].shipment;
        self.floor[class] = saved.1;
        self.picks.pop();
        if let Some(pr) = &self.prices {
            self.fixed_price -= pr.cand_cost[class][pos];
        }
        self.linear -= key;
        self.unassigned[class] += 1;
        for l in c.legs.iter().flatten() {
            self.remaining[l.0 as usize] += c.itinerary.volume.0;
        }
        self.ships[s] = saved.0;
    }

    /// First capacity-feasible assignment in search order, if found within the budget.
    fn dive(&mut self, depth: usize, budget: &mut u64) -> Option<Vec<usize>> {
        if depth == self.p.modules.len() {
            return Some(self.picks.clone());
        }
        if *budget == 0 {
            return None;
        }
        *budget -= 1;
        let (s, _, class) = self.p.modules[depth];
        let cands = std::sync::Arc::clone(&self.p.classes[class].candidates);
        for (pos, c) in cands.iter().enumerate().skip(self.floor[class]) {
            if !self.fits(c, &self.ships[s]) {
                continue;
            }
            let mut trial = self.ships[s].clone();
            trial.record(c, !self.p.per_module_destinations);
            let saved = self.assign(class, pos, c, trial, 0);
            let found = self.dive(depth + 1, budget);
            self.unassign(class, pos, c, 0, saved);
            if found.is_some() {
                return found;
            }
        }
        None
    }

    /// Like [`Search::dive`], but tries candidates by contribution plus
    /// capacity price, so the result tends to be close to the optimum.
    fn priced_dive(&mut self, depth: usize, budget: &mut u64, prices: &Prices) -> Option<Vec<usize>> {
        if depth == self.p.modules.len() {
            return Some(self.picks.clone());
        }
        if *budget == 0 {
            return None;
        }
        *budget -= 1;
        let (s, _, class) = self.p.modules[depth];
        let cands = std::sync::Arc::clone(&self.p.classes[class].candidates);
        let mut order: Vec<(f64, usize)> = cands
            .iter()
            .enumerate()
            .filter(|(_, c)| self.fits(c, &self.ships[s]))
            .map(|(pos, c)| {
                (super::contribution(self.p.objective, &c.itinerary) as f64 + prices.cand_cost[class][pos], pos)
            })
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (_, pos) in order {
            let c = &cands[pos];
            let mut trial = self.ships[s].clone();
            trial.record(c, !self.p.per_module_destinations);
            let saved = self.assign(class, pos, c, trial, 0);
            let found = self.priced_dive(depth + 1, budget, prices);
            self.unassign(class, pos, c, 0, saved);
            if found.is_some() {
                return found;
            }
        }
        None
    }

    fn reach(&self, class: usize) -> Option<Reach> {
        let cl = &self.p.classes[class];
        let ship = &self.ships[cl.shipment];
        let cands = &cl.candidates[..];
        match self.p.objective {
            Objective::J1 | Objective::J3 => {
                let c = cands.iter().find(|c| self.fits(c, ship))?;
                Some(Reach { min_key: super::contribution(self.p.objective, &c.itinerary), ..Reach::default() })
            }
            Objective::J2 => {
                // candidates are sorted by delivery time
                let want = self.terminals_of_class[class];
                let mut per = Vec::with_capacity(want);
                for c in cands {
                    let k = destination(c);
                    if per.iter().any(|(d, _)| *d == k) || !self.fits(c, ship) {
                        continue;
                    }
                    per.push((k, c.itinerary.delivery_time.0));
                    if per.len() == want {
                        break;
                    }
                }
                if per.is_empty() {
                    return None;
                }
                Some(Reach { earliest_per_terminal: per, ..Reach::default() })
            }
            Objective::J4 => {
                let first = cands.iter().find(|c| self.fits(c, ship))?;
                let last = cands.iter().rev().find(|c| self.fits(c, ship))?;
                Some(Reach {
                    earliest: first.itinerary.delivery_time.0,
                    latest: last.itinerary.delivery_time.0,
                    ..Reach::default()
                })
            }
        }
    }

    /// Smallest delivery time `T` such that the shipment's unassigned modules
    /// could all arrive by `T` if volume were divisible: every open class has
    /// a fitting candidate by `T`, and the first-leg services and the
    /// last-leg services of fitting candidates by `T` each have enough spare
    /// capacity for the remaining volume. Some unassigned module therefore
    /// arrives no earlier than `T`. Candidates must be sorted by delivery time.
    fn threshold(&self, s: usize, ship: &ShipmentState, unassigned: &[u32], only: Option<NodeIdx>) -> Threshold {
        let open: Vec<usize> = self.classes_of_ship[s].iter().copied().filter(|&c| unassigned[c] > 0).collect();
        if open.is_empty() {
            return Threshold::NoneOpen;
        }
        let need: i64 = open.iter().map(|&c| unassigned[c] as i64 * self.p.classes[c].volume.0).sum();
        let mut guard = self.scratch.borrow_mut();
        let sc = &mut *guard;
        sc.stamp = sc.stamp.wrapping_add(1);
        if sc.stamp == 0 {
            sc.first.iter_mut().for_each(|x| *x = 0);
            sc.last.iter_mut().for_each(|x| *x = 0);
            sc.stamp = 1;
        }
        let stamp = sc.stamp;
        sc.cursor.clear();
        sc.cursor.resize(open.len(), 0);
        let mut covered = vec![false; open.len()];
        let mut n_covered = 0;
        let (mut sum_first, mut sum_last) = (0i64, 0i64);
        loop {
            // next candidate in delivery order across open classes
            let mut next: Option<(i64, usize)> = None;
            for (i, &c) in open.iter().enumerate() {
                let cands = &self.p.classes[c].candidates;
                while let Some(cand) = cands.get(sc.cursor[i]) {
                    if only.is_none_or(|k| destination(cand) == k) && self.fits(cand, ship) {
                        break;
                    }
                    sc.cursor[i] += 1;
                }
                if let Some(cand) = cands.get(sc.cursor[i]) {
                    let t = cand.itinerary.delivery_time.0;
                    if next.is_none_or(|(bt, _)| t < bt) {
                        next = Some((t, i));
                    }
                }
            }
            let Some((t, i)) = next else { return Threshold::Infeasible };
            let cand = &self.p.classes[open[i]].candidates[sc.cursor[i]];
            sc.cursor[i] += 1;
            if !covered[i] {
                covered[i] = true;
                n_covered += 1;
            }
            let first = cand.legs[0].expect("every itinerary has a first leg").0 as usize;
            let last = cand.legs[1].map_or(first, |l| l.0 as usize);
            if sc.first[first] != stamp {
                sc.first[first] = stamp;
                sum_first += self.remaining[first];
            }
            if sc.last[last] != stamp {
                sc.last[last] = stamp;
                sum_last += self.remaining[last];
            }
            if n_covered == open.len() && sum_first >= need && sum_last >= need {
                return Threshold::At(t);
            }
        }
    }

    /// Threshold under the one-terminal rule: the fixed terminal, or the best
    /// terminal while none is fixed.
    fn shipment_threshold(&self, s: usize, ship: &ShipmentState, unassigned: &[u32]) -> Threshold {
        if self.p.per_module_destinations || ship.dest.is_some() {
            return self.threshold(s, ship, unassigned, None);
        }
        let mut terminals: Vec<NodeIdx> = self.classes_of_ship[s]
            .iter()
            .filter(|&&c| unassigned[c] > 0)
            .flat_map(|&c| self.p.classes[c].candidates.iter().map(destination))
            .collect();
        terminals.sort();
        terminals.dedup();
        let mut best = Threshold::Infeasible;
        for k in terminals {
            match self.threshold(s, ship, unassigned, Some(k)) {
                Threshold::At(t) => {
                    if !matches!(best, Threshold::At(b) if b <= t) {
                        best = Threshold::At(t);
                    }
                }
                Threshold::NoneOpen => return Threshold::NoneOpen,
                _ => {}
            }
        }
        best
    }

    /// Lower bound on a shipment's (non-linear) contribution, or on its
    /// remaining linear contribution for J1/J3.
    fn shipment_bound(
        &self,
        s: usize,
        ship: &ShipmentState,
        unassigned: &[u32],
        reach: &[Option<Reach>],
        threshold: Threshold,
    ) -> i64 {
        let open = self.classes_of_ship[s].iter().filter(|&&c| unassigned[c] > 0);
        let t = match threshold {
            Threshold::At(t) => Some(t),
            _ => None,
        };
        match self.p.objective {
            Objective::J1 | Objective::J3 => {
                open.map(|&c| unassigned[c] as i64 * reach[c].as_ref().map_or(0, |r| r.min_key)).sum()
            }
            Objective::J2 => {
                let base: i64 = ship.terminal_max.iter().map(|(_, t)| t.0).sum();
                let mut worst = 0i64;
                for &c in open {
                    let Some(r) = &reach[c] else { continue };
                    let inc = r
                        .earliest_per_terminal
                        .iter()
                        .map(|&(k, t)| match ship.terminal_max.iter().find(|(d, _)| *d == k) {
                            Some((_, m)) => (t - m.0).max(0),
                            None => t,
                        })
                        .min()
                        .unwrap_or(0);
                    worst = worst.max(inc);
                }
                if let Some(t) = t {
                    let pooled = ship.terminal_max.iter().map(|(_, m)| (t - m.0).max(0)).min().unwrap_or(t);
                    worst = worst.max(pooled);
                }
                self.p.weights[s] * (base + worst)
            }
            Objective::J4 => {
                let mut hi = ship.last.0;
                let mut lo = ship.first.0;
                let mut open_classes = 0u32;
                for &c in open {
                    let Some(r) = &reach[c] else { continue };
                    hi = hi.max(r.earliest);
                    lo = lo.min(r.latest);
                    open_classes += unassigned[c];
                }
                if open_classes == 0 {
                    return ship.gap();
                }
                if let Some(t) = t {
                    hi = hi.max(t);
                }
                ship.gap().max(hi - lo)
            }
        }
    }

    /// Objective of the shipments completed before `s`.
    fn done_value(&self, s: usize) -> i64 {
        self.linear
            + self.ships[..s]
                .iter()
                .enumerate()
                .map(|(i, ship)| match self.p.objective {
                    Objective::J1 | Objective::J3 => 0,
                    Objective::J2 => self.p.weights[i] * ship.terminal_max.iter().map(|(_, t)| t.0).sum::<i64>(),
                    Objective::J4 => ship.gap(),
                })
                .sum::<i64>()
    }

    fn descend(&mut self, depth: usize) {
        let Some(relevant) = self.relevant.get(depth).and_then(|r| r.clone()) else {
            return self.expand(depth);
        };
        // At a shipment boundary the best completion depends only on the
        // capacity already used on services the remaining modules can take.
        let key: Vec<(u32, i64)> = relevant
            .iter()
            .filter_map(|&l| {
                let used = self.p.capacity[l as usize] - self.remaining[l as usize];
                (used > 0).then_some((l, used))
            })
            .collect();
        let key = (depth, key);
        let done = self.done_value(self.p.modules[depth].0);
        if let Some(entry) = self.memo.get(&key) {
            self.explored += 1;
            if done.saturating_add(entry.lower) >= self.best {
                return;
            }
            if let Some(rest) = &entry.completion {
                let mut picks = self.picks.clone();
                picks.extend_from_slice(rest);
                self.best = done + entry.lower;
                self.best_picks = Some(picks);
                return;
            }
        }
        let before = self.best;
        self.expand(depth);
        let entry = if self.best < before {
            let picks = self.best_picks.as_ref().expect("an improvement records its picks");
            MemoEntry { lower: self.best - done, completion: Some(picks[depth..].to_vec()) }
        } else {
            MemoEntry { lower: before.saturating_sub(done), completion: None }
        };
        if self.memo.len() < MEMO_LIMIT {
            self.memo.insert(key, entry);
        }
    }

    fn expand(&mut self, depth: usize) {
        if self.stopped || self.limit.is_some_and(|l| self.explored >= l) {
            self.stopped = true;
            return;
        }
        self.explored += 1;
        if depth == self.p.modules.len() {
            let value = self.linear
                + (0..self.p.shipment_count)
                    .map(|s| self.shipment_bound(s, &self.ships[s], &self.unassigned, &[], Threshold::NoneOpen))
                    .sum::<i64>();
            if value < self.best {
                self.best = value;
                self.best_picks = Some(self.picks.clone());
            }
            return;
        }

        let mut reach: Vec<Option<Reach>> = vec![None; self.p.classes.len()];
        for (c, r) in reach.iter_mut().enumerate() {
            if self.unassigned[c] > 0 {
                *r = self.reach(c);
                if r.is_none() {
                    return;
                }
            }
        }
        let pooled = matches!(self.p.objective, Objective::J2 | Objective::J4);
        let (s, _, class) = self.p.modules[depth];
        let prices = self.prices.as_ref();
        let infos = match self.infos.last() {
            Some(parent) => {
                // the last pick only changed its own shipment and the
                // shipments sharing one of its vehicles
                let mut infos = parent.clone();
                let (prev, _, prev_class) = self.p.modules[depth - 1];
                let picked = &self.p.classes[prev_class].candidates[*self.picks.last().expect("depth > 0")];
                let mut stale = vec![prev, s];
                for l in picked.legs.iter().flatten() {
                    stale.extend(self.users[l.0 as usize].iter().copied().filter(|&u| u > prev));
                }
                stale.sort_unstable();
                stale.dedup();
                for i in stale {
                    infos[i] = self.ship_info(i, prices, None);
                }
                infos
            }
            None => (0..self.p.shipment_count).map(|i| self.ship_info(i, prices, None)).collect(),
        };
        if infos.iter().any(|i| i.threshold == Threshold::Infeasible || i.relax == f64::INFINITY) {
            return;
        }
        let thresholds: Vec<Threshold> = infos.iter().map(|i| i.threshold).collect();
        let per_ship: Vec<i64> = (0..self.p.shipment_count)
            .map(|i| {
                let b = self.shipment_bound(i, &self.ships[i], &self.unassigned, &reach, thresholds[i]);
                if self.p.objective == Objective::J4 {
                    b.max(infos[i].gap)
                } else {
                    b
                }
            })
            .collect();
        let total: i64 = self.linear + per_ship.iter().sum::<i64>();
        if total >= self.best {
            return;
        }
        if let Some(pr) = &self.prices {
            if self.relaxation_bound(pr, &infos) >= self.best {
                return;
            }
        }

        let cands = std::sync::Arc::clone(&self.p.classes[class].candidates);
        let linear_objective = !pooled;
        let fix_dest = !self.p.per_module_destinations;
        let mut unassigned_after = self.unassigned.clone();
        unassigned_after[class] -= 1;
        let floor = self.floor[class];

        for (pos, c) in cands.iter().enumerate().skip(floor) {
            if !self.fits(c, &self.ships[s]) {
                continue;
            }
            let mut trial = self.ships[s].clone();
            trial.record(c, fix_dest);
            let key = if linear_objective { super::contribution(self.p.objective, &c.itinerary) } else { 0 };
            // the parent's threshold still bounds max(this delivery, the rest)
            let quick =
                total - per_ship[s] + key + self.shipment_bound(s, &trial, &unassigned_after, &reach, thresholds[s]);
            if quick >= self.best {
                if linear_objective {
                    break;
                }
                continue;
            }

            let saved = self.assign(class, pos, c, trial, key);
            self.infos.push(infos.clone());
            self.descend(depth + 1);
            self.infos.pop();
            self.unassign(class, pos, c, key, saved);
        }
    }
}
