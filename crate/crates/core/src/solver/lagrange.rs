//! Lagrangian relaxation of the vehicle capacities.
//!
//! For multipliers `λ ≥ 0`, `objective + Σ λ_l (load_l − capacity_l)` never
//! exceeds the objective of a capacity-feasible assignment, and without the
//! capacity constraints it separates into one small problem per shipment.
//! Multipliers are tuned once at the root by subgradient ascent; any fixed
//! multipliers give a valid bound at every node of the search.

use crate::kpi::Objective;
use crate::model::NodeIdx;

use super::{destination, Candidate, Prepared};

pub(crate) struct Prices {
    pub lambda: Vec<f64>,
    /// `Σ λ_l · capacity_l`.
    pub cap_term: f64,
    /// `λ` cost of each candidate, per class.
    pub cand_cost: Vec<Vec<f64>>,
}

impl Prices {
    pub fn new(p: &Prepared, lambda: Vec<f64>) -> Prices {
        let cap_term = lambda.iter().zip(&p.capacity).map(|(l, c)| l * *c as f64).sum();
        let cand_cost = p
            .classes
            .iter()
            .map(|cl| {
                cl.candidates
                    .iter()
                    .map(|c| c.legs.iter().flatten().map(|l| lambda[l.0 as usize]).sum::<f64>() * cl.volume.0 as f64)
                    .collect()
            })
            .collect();
        Prices { lambda, cap_term, cand_cost }
    }
}

/// Whether the relaxation applies to this objective and destination rule.
pub(crate) fn supported(p: &Prepared) -> bool {
    match p.objective {
        Objective::J1 | Objective::J3 => true,
        Objective::J2 => !p.per_module_destinations,
        Objective::J4 => false,
    }
}

/// State of one shipment seen by the latest-delivery relaxation.
pub(crate) struct ShipmentView<'a> {
    /// (class, unassigned modules of that class)
    pub open: &'a [(usize, u32)],
    pub fixed_dest: Option<NodeIdx>,
    /// Latest delivery among the assigned modules (0 if none).
    pub fixed_max: i64,
    pub weight: i64,
    /// Destination terminals reachable by the shipment.
    pub terminals: &'a [NodeIdx],
    /// No assignment delivers all open modules before this time.
    pub t_min: i64,
}

/// J2 relaxed optimum of one shipment: its weighted latest delivery plus the
/// prices of its open modules. `f64::INFINITY` when some module has no
/// fitting candidate. Adds the relaxed loads to `loads` when requested.
pub(crate) fn relax_latest_delivery(
    p: &Prepared,
    prices: &Prices,
    view: &ShipmentView,
    fits: &dyn Fn(&Candidate) -> bool,
    loads: Option<&mut [i64]>,
) -> f64 {
    if view.open.is_empty() {
        return (view.weight * view.fixed_max) as f64;
    }
    let choices: Vec<Option<NodeIdx>> = match (view.fixed_dest, p.per_module_destinations) {
        (Some(k), _) => vec![Some(k)],
        (None, true) => vec![None],
        (None, false) => view.terminals.iter().map(|&k| Some(k)).collect(),
    };
    let mut best = f64::INFINITY;
    let mut best_at: Option<(Option<NodeIdx>, i64)> = None;
    for k in choices {
        let keep = |c: &Candidate| k.is_none_or(|k| destination(c) == k) && fits(c);
        let (v, t) = latest_delivery_relaxation(p, prices, view, &keep);
        if v < best {
            best = v;
            best_at = Some((k, t));
        }
    }
    if let (Some(loads), Some((k, t))) = (loads, best_at) {
        for &(class, count) in view.open {
            let cl = &p.classes[class];
            let pick = cl
                .candidates
                .iter()
                .zip(&prices.cand_cost[class])
                .filter(|(c, _)| k.is_none_or(|k| destination(c) == k) && fits(c))
                .filter(|(c, _)| c.itinerary.delivery_time.0 <= t)
                .min_by(|a, b| a.1.total_cmp(b.1));
            if let Some((c, _)) = pick {
                for l in c.legs.iter().flatten() {
                    loads[l.0 as usize] += count as i64 * cl.volume.0;
                }
            }
        }
    }
    best
}

/// `min over T of weight·max(T, fixed_max) + Σ count · (cheapest price of a
/// kept candidate delivering by T)`, with the minimizing `T`.
fn latest_delivery_relaxation(
    p: &Prepared,
    prices: &Prices,
    view: &ShipmentView,
    keep: &dyn Fn(&Candidate) -> bool,
) -> (f64, i64) {
    let n = view.open.len();
    let mut cursor = vec![0usize; n];
    let mut cheapest = vec![f64::INFINITY; n];
    let mut covered = 0;
    let mut best = (f64::INFINITY, 0);
    loop {
        let mut next: Option<(i64, usize)> = None;
        for (i, &(class, _)) in view.open.iter().enumerate() {
            let cands = &p.classes[class].candidates;
            while cursor[i] < cands.len() && !keep(&cands[cursor[i]]) {
                cursor[i] += 1;
            }
            if let Some(c) = cands.get(cursor[i]) {
                let t = c.itinerary.delivery_time.0;
                if next.is_none_or(|(bt, _)| t < bt) {
                    next = Some((t, i));
                }
            }
        }
        let Some((t, i)) = next else { return best };
        let (class, _) = view.open[i];
        let price = prices.cand_cost[class][cursor[i]];
        cursor[i] += 1;
        if cheapest[i] == f64::INFINITY {
            covered += 1;
        }
        if price < cheapest[i] {
            cheapest[i] = price;
        }
        if covered == n && t >= view.t_min {
            let s: f64 = view.open.iter().zip(&cheapest).map(|(&(_, count), m)| count as f64 * m).sum();
            let v = (view.weight * t.max(view.fixed_max)) as f64 + s;
            if v < best.0 {
                best = (v, t);
            }
        }
    }
}

/// Smallest integer the true value can take given a real lower bound `lb`
/// summed from terms of total magnitude `scale`, allowing for rounding.
pub(crate) fn integer_bound(lb: f64, scale: f64) -> i64 {
    if lb == f64::INFINITY {
        return i64::MAX;
    }
    (lb - 1e-9 * scale.max(1.0)).ceil() as i64
}

/// Subgradient ascent on the root relaxation. `upper` is the value of any
/// feasible assignment (or an estimate above the optimum).
pub(crate) fn tune(
    p: &Prepared,
    upper: f64,
    iterations: usize,
    root: &dyn Fn(&Prices, Option<&mut [i64]>) -> f64,
) -> Prices {
    let mut lambda = vec![0.0; p.capacity.len()];
    let mut best = (f64::NEG_INFINITY, lambda.clone());
    let mut alpha = 1.0;
    let mut stall = 0;
    for _ in 0..iterations {
        let prices = Prices::new(p, lambda.clone());
        let mut load = vec![0i64; p.capacity.len()];
        let value = root(&prices, Some(&mut load));
        if !value.is_finite() {
            break;
        }
        if value > best.0 + 1e-9 * value.abs().max(1.0) {
            best = (value, lambda.clone());
            stall = 0;
        } else {
            stall += 1;
            if stall >= 10 {
                alpha *= 0.5;
                stall = 0;
            }
        }
        let mut g: Vec<f64> = load.iter().zip(&p.capacity).map(|(l, c)| (l - c) as f64).collect();
        for (gi, li) in g.iter_mut().zip(&lambda) {
            if *li <= 0.0 && *gi < 0.0 {
                *gi = 0.0;
            }
        }
        let norm2: f64 = g.iter().map(|x| x * x).sum();
        if norm2 == 0.0 || alpha < 1e-3 {
            break;
        }
        let gap = (upper - value).max(1e-6 * upper.abs().max(1.0));
        let step = alpha * gap / norm2;
        for (li, gi) in lambda.iter_mut().zip(&g) {
            *li = (*li + step * gi).max(0.0);
        }
    }
    Prices::new(p, best.1)
}
