//! Per-shipment flow relaxations.
//!
//! The modules of a shipment that share their route set form a group. A group
//! is relaxed to a flow of whole modules from the origin through first-leg
//! vehicles, optionally a hub and a last-leg vehicle, to a destination
//! terminal. Every module is treated as having the group's smallest volume,
//! so a vehicle with `r` litres left carries at most `⌊r / v⌋` of them. Any
//! capacity-feasible assignment of the group maps to an integral flow of the
//! same objective, which makes the flow optimum a lower bound that also sees
//! the group's own modules competing for one vehicle.

use std::collections::HashMap;

use crate::model::{NodeIdx, ServiceIdx};

use super::{contribution, destination, Prepared};

const INF: i64 = i64::MAX / 4;

#[derive(Debug)]
struct PathArc {
    first: usize,
    second: Option<usize>,
    key: i64,
    legs: [Option<ServiceIdx>; 2],
}

/// Modules of one shipment sharing their route set.
#[derive(Debug)]
pub(crate) struct FlowGroup {
    pub classes: Vec<usize>,
    volume: i64,
    firsts: Vec<ServiceIdx>,
    seconds: Vec<ServiceIdx>,
    paths: Vec<PathArc>,
    /// Per last-leg vehicle (first legs of direct paths, then seconds): the
    /// destination and the delivery time, in delivery order.
    exits: Vec<Exit>,
}

#[derive(Debug, Clone, Copy)]
struct Exit {
    /// Node index of the vehicle's outgoing side.
    node: usize,
    dest: NodeIdx,
    delivery: i64,
}

impl FlowGroup {
    /// Groups the classes of every shipment.
    pub fn build(p: &Prepared) -> Vec<Vec<FlowGroup>> {
        let mut out: Vec<Vec<FlowGroup>> = (0..p.shipment_count).map(|_| Vec::new()).collect();
        let mut seen: Vec<(usize, usize)> = Vec::new();
        for (i, cl) in p.classes.iter().enumerate() {
            let s = cl.shipment;
            let found = seen
                .iter()
                .position(|&(ship, first)| ship == s && std::sync::Arc::ptr_eq(&p.classes[first].routes, &cl.routes));
            match found {
                Some(k) => {
                    let g = out[s].iter_mut().find(|g| g.classes[0] == seen[k].1).expect("group exists");
                    g.classes.push(i);
                }
                None => {
                    seen.push((s, i));
                    out[s].push(FlowGroup {
                        classes: vec![i],
                        volume: 0,
                        firsts: Vec::new(),
                        seconds: Vec::new(),
                        paths: Vec::new(),
                        exits: Vec::new(),
                    });
                }
            }
        }
        for groups in &mut out {
            for g in groups.iter_mut() {
                g.fill(p);
            }
        }
        out
    }

    fn fill(&mut self, p: &Prepared) {
        self.volume = self.classes.iter().map(|&c| p.classes[c].volume.0).min().unwrap_or(0);
        let mut by_legs: HashMap<[Option<ServiceIdx>; 2], usize> = HashMap::new();
        let mut first_idx: HashMap<ServiceIdx, usize> = HashMap::new();
        let mut second_idx: HashMap<ServiceIdx, usize> = HashMap::new();
        // (last leg is a second leg, local index) -> (destination, delivery)
        let mut exit_of: HashMap<(bool, usize), (NodeIdx, i64)> = HashMap::new();
        for &c in &self.classes {
            for cand in p.classes[c].candidates.iter() {
                let key = contribution(p.objective, &cand.itinerary);
                if let Some(&k) = by_legs.get(&cand.legs) {
                    let path = &mut self.paths[k];
                    path.key = path.key.min(key);
                    continue;
                }
                let leg1 = cand.legs[0].expect("every itinerary has a first leg");
                let nf = first_idx.len();
                let first = *first_idx.entry(leg1).or_insert_with(|| {
                    self.firsts.push(leg1);
                    nf
                });
                let second = cand.legs[1].map(|l| {
                    let ns = second_idx.len();
                    *second_idx.entry(l).or_insert_with(|| {
                        self.seconds.push(l);
                        ns
                    })
                });
                by_legs.insert(cand.legs, self.paths.len());
                self.paths.push(PathArc { first, second, key, legs: cand.legs });
                let exit = match second {
                    Some(b) => (true, b),
                    None => (false, first),
                };
                let delivery = cand.itinerary.delivery_time.0;
                let e = exit_of.entry(exit).or_insert((destination(cand), delivery));
                e.1 = e.1.min(delivery);
            }
        }
        let mut exits: Vec<Exit> = exit_of
            .into_iter()
            .map(|((second, i), (dest, delivery))| {
                let node = if second { self.second_in(i) + 1 } else { self.first_in(i) + 1 };
                Exit { node, dest, delivery }
            })
            .collect();
        exits.sort_by_key(|e| (e.delivery, e.node));
        self.exits = exits;
    }

    fn first_in(&self, a: usize) -> usize {
        2 + 2 * a
    }

    fn second_in(&self, b: usize) -> usize {
        2 + 2 * self.firsts.len() + 2 * b
    }

    fn node_count(&self) -> usize {
        2 + 2 * (self.firsts.len() + self.seconds.len())
    }

    /// Open modules of the group.
    pub fn units(&self, unassigned: &[u32]) -> i64 {
        self.classes.iter().map(|&c| unassigned[c] as i64).sum()
    }

    /// Network without exits, with path costs from `price`.
    fn network(&self, remaining: &[i64], price: &dyn Fn(&PathArc) -> f64) -> Graph {
        let mut g = Graph::new(self.node_count());
        let v = self.volume.max(1);
        for (a, l) in self.firsts.iter().enumerate() {
            g.add(SOURCE, self.first_in(a), INF, 0.0);
            g.add(self.first_in(a), self.first_in(a) + 1, remaining[l.0 as usize] / v, 0.0);
        }
        for (b, l) in self.seconds.iter().enumerate() {
            g.add(self.second_in(b), self.second_in(b) + 1, remaining[l.0 as usize] / v, 0.0);
        }
        for path in &self.paths {
            if let Some(b) = path.second {
                g.add(self.first_in(path.first) + 1, self.second_in(b), INF, price(path));
            }
        }
        g
    }

    /// Cheapest flow of `units` modules under `cost per module = key + price`,
    /// exits restricted to `terminal` when given. Adds the modules' load per
    /// service to `loads` when requested.
    pub fn min_cost(
        &self,
        remaining: &[i64],
        units: i64,
        terminal: Option<NodeIdx>,
        prices: Option<&[f64]>,
        loads: Option<&mut [i64]>,
    ) -> f64 {
        if units == 0 {
            return 0.0;
        }
        let v = self.volume.max(1) as f64;
        let price = |path: &PathArc| -> f64 {
            let lam = prices.map_or(0.0, |pr| path.legs.iter().flatten().map(|l| pr[l.0 as usize]).sum::<f64>() * v);
            path.key as f64 + lam
        };
        let mut g = self.network(remaining, &price);
        let seconds_from = self.second_in(0);
        for e in &self.exits {
            if terminal.is_some_and(|k| e.dest != k) {
                continue;
            }
            if e.node >= seconds_from {
                g.add(e.node, SINK, INF, 0.0);
            }
        }
        for path in &self.paths {
            if path.second.is_none() {
                let e =
                    self.exits.iter().find(|e| e.node == self.first_in(path.first) + 1).expect("exit of a direct path");
                if terminal.is_none_or(|k| e.dest == k) {
                    g.add(e.node, SINK, INF, price(path));
                }
            }
        }
        let Some(cost) = g.min_cost_flow(units) else { return f64::INFINITY };
        if let Some(loads) = loads {
            let v = self.volume;
            for (a, l) in self.firsts.iter().enumerate() {
                loads[l.0 as usize] += g.flow_on(self.first_in(a), self.first_in(a) + 1) * v;
            }
            for (b, l) in self.seconds.iter().enumerate() {
                loads[l.0 as usize] += g.flow_on(self.second_in(b), self.second_in(b) + 1) * v;
            }
        }
        cost
    }

    /// Earliest time by which `units` modules can all be delivered, using only
    /// exits delivering at or after `from`. `None` when they cannot.
    pub fn earliest_completion(
        &self,
        remaining: &[i64],
        units: i64,
        terminal: Option<NodeIdx>,
        from: i64,
    ) -> Option<i64> {
        if units == 0 {
            return Some(i64::MIN);
        }
        let mut g = self.network(remaining, &|_| 0.0);
        // direct paths reach their exit through the first-leg vehicle
        let mut flow = 0;
        let mut i = 0;
        while i < self.exits.len() {
            let t = self.exits[i].delivery;
            while i < self.exits.len() && self.exits[i].delivery == t {
                let e = self.exits[i];
                if e.delivery >= from && terminal.is_none_or(|k| e.dest == k) {
                    g.add(e.node, SINK, INF, 0.0);
                }
                i += 1;
            }
            flow += g.augment_all(units - flow);
            if flow >= units {
                return Some(t);
            }
        }
        None
    }

    /// Delivery times of the group's exits, ascending with repeats removed.
    pub fn deliveries(&self, terminal: Option<NodeIdx>) -> impl Iterator<Item = i64> + '_ {
        let mut last = None;
        self.exits.iter().filter(move |e| terminal.is_none_or(|k| e.dest == k)).filter_map(move |e| {
            if last == Some(e.delivery) {
                None
            } else {
                last = Some(e.delivery);
                Some(e.delivery)
            }
        })
    }
}

const SOURCE: usize = 0;
const SINK: usize = 1;

/// Residual graph with parallel arrays.
struct Graph {
    head: Vec<usize>,
    next: Vec<usize>,
    to: Vec<usize>,
    cap: Vec<i64>,
    cost: Vec<f64>,
}

const NONE: usize = usize::MAX;

impl Graph {
    fn new(n: usize) -> Graph {
        Graph { head: vec![NONE; n], next: Vec::new(), to: Vec::new(), cap: Vec::new(), cost: Vec::new() }
    }

    fn add(&mut self, u: usize, v: usize, cap: i64, cost: f64) {
        for (a, b, c, w) in [(u, v, cap, cost), (v, u, 0, -cost)] {
            self.to.push(b);
            self.cap.push(c);
            self.cost.push(w);
            self.next.push(self.head[a]);
            self.head[a] = self.to.len() - 1;
        }
    }

    fn flow_on(&self, u: usize, v: usize) -> i64 {
        let mut e = self.head[v];
        while e != NONE {
            if self.to[e] == u && e % 2 == 1 {
                return self.cap[e];
            }
            e = self.next[e];
        }
        0
    }

    /// Successive shortest paths (Bellman-Ford queue); `None` when fewer than
    /// `units` can be sent.
    fn min_cost_flow(&mut self, units: i64) -> Option<f64> {
        let n = self.head.len();
        let mut total = 0.0;
        let mut sent = 0;
        let mut dist = vec![f64::INFINITY; n];
        let mut via = vec![NONE; n];
        let mut queued = vec![false; n];
        let mut queue = std::collections::VecDeque::new();
        while sent < units {
            dist.iter_mut().for_each(|d| *d = f64::INFINITY);
            via.iter_mut().for_each(|x| *x = NONE);
            dist[SOURCE] = 0.0;
            queue.push_back(SOURCE);
            queued[SOURCE] = true;
            while let Some(u) = queue.pop_front() {
                queued[u] = false;
                let mut e = self.head[u];
                while e != NONE {
                    let w = self.to[e];
                    if self.cap[e] > 0 {
                        let d = dist[u] + self.cost[e];
                        // the slack only guards against zero-cost cycles
                        // turning slightly negative in floating point
                        if d < dist[w] - 1e-13 * (1.0 + d.abs()) {
                            dist[w] = d;
                            via[w] = e;
                            if !queued[w] {
                                queued[w] = true;
                                queue.push_back(w);
                            }
                        }
                    }
                    e = self.next[e];
                }
            }
            if dist[SINK] == f64::INFINITY {
                return None;
            }
            let mut push = units - sent;
            let mut v = SINK;
            while v != SOURCE {
                let e = via[v];
                push = push.min(self.cap[e]);
                v = self.to[e ^ 1];
            }
            let mut v = SINK;
            while v != SOURCE {
                let e = via[v];
                self.cap[e] -= push;
                self.cap[e ^ 1] += push;
                v = self.to[e ^ 1];
            }
            sent += push;
            total += push as f64 * dist[SINK];
        }
        Some(total)
    }

    /// Augments along breadth-first paths until `limit` units are sent or no
    /// path remains; returns the units sent.
    fn augment_all(&mut self, limit: i64) -> i64 {
        let n = self.head.len();
        let mut sent = 0;
        let mut via = vec![NONE; n];
        let mut queue = std::collections::VecDeque::new();
        while sent < limit {
            via.iter_mut().for_each(|x| *x = NONE);
            via[SOURCE] = NONE - 1;
            queue.clear();
            queue.push_back(SOURCE);
            while let Some(u) = queue.pop_front() {
                if u == SINK {
                    break;
                }
                let mut e = self.head[u];
                while e != NONE {
                    let w = self.to[e];
                    if self.cap[e] > 0 && via[w] == NONE {
                        via[w] = e;
                        queue.push_back(w);
                    }
                    e = self.next[e];
                }
            }
            if via[SINK] == NONE {
                break;
            }
            let mut push = limit - sent;
            let mut v = SINK;
            while v != SOURCE {
                let e = via[v];
                push = push.min(self.cap[e]);
                v = self.to[e ^ 1];
            }
            let mut v = SINK;
            while v != SOURCE {
                let e = via[v];
                self.cap[e] -= push;
                self.cap[e ^ 1] += push;
                v = self.to[e ^ 1];
            }
            sent += push;
        }
        sent
    }
}
