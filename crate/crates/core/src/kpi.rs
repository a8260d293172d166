//! The four key performance indicators of an assignment.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::itinerary::Itinerary;
use crate::model::{Network, NodeIdx};
use crate::units::{Cost, Minutes};

/// The single KPI minimized by one optimization run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Objective {
    /// Number of modules carried by direct trucks.
    J1,
    /// Priority-weighted delivery time at the destination terminals.
    J2,
    /// Transport cost.
    J3,
    /// First-to-last module delivery gap.
    J4,
}

impl Objective {
    pub const ALL: [Objective; 4] = [Objective::J1, Objective::J2, Objective::J3, Objective::J4];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        ["J1", "J2", "J3", "J4"][self.index()]
    }

    /// Configuration label (C1..C4) of the experiment minimizing this KPI.
    pub fn configuration(self) -> &'static str {
        ["C1", "C2", "C3", "C4"][self.index()]
    }

    pub fn from_configuration(label: &str) -> Option<Objective> {
        match label.trim().to_ascii_uppercase().as_str() {
            "C1" => Some(Objective::J1),
            "C2" => Some(Objective::J2),
            "C3" => Some(Objective::J3),
            "C4" => Some(Objective::J4),
            _ => None,
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "J1" => Ok(Objective::J1),
            "J2" => Ok(Objective::J2),
            "J3" => Ok(Objective::J3),
            "J4" => Ok(Objective::J4),
            other => Objective::from_configuration(other).ok_or_else(|| format!("unknown objective `{s}`")),
        }
    }
}

/// One module's chosen itinerary. `shipment` indexes `Network::shipments()`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModuleChoice {
    pub shipment: usize,
    pub module: u32,
    pub itinerary: Itinerary,
}

/// KPI values in exact integer units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Kpis {
    /// J1: modules on direct trucks.
    pub direct_modules: i64,
    /// J2 in thousandths-of-priority × minutes.
    pub weighted_delivery: i64,
    /// J3.
    pub cost: Cost,
    /// J4.
    pub gap: Minutes,
}

impl Kpis {
    /// Exact value of one KPI in its integer unit.
    pub fn exact(&self, objective: Objective) -> i64 {
        match objective {
            Objective::J1 => self.direct_modules,
            Objective::J2 => self.weighted_delivery,
            Objective::J3 => self.cost.0,
            Objective::J4 => self.gap.0,
        }
    }

    /// (J1 count, J2 hours, J3 currency, J4 hours).
    pub fn values(&self) -> [f64; 4] {
        [self.direct_modules as f64, self.weighted_delivery as f64 / 60_000.0, self.cost.currency(), self.gap.hours()]
    }
}

/// Converts an exact objective value to the reported unit.
pub fn objective_to_f64(objective: Objective, exact: i64) -> f64 {
    match objective {
        Objective::J1 => exact as f64,
        Objective::J2 => exact as f64 / 60_000.0,
        Objective::J3 => exact as f64 / 1e6,
        Objective::J4 => exact as f64 / 60.0,
    }
}

/// Per-shipment delivery figures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShipmentDelivery {
    /// Latest module arrival per destination terminal used.
    pub per_terminal: BTreeMap<NodeIdx, Minutes>,
    /// Completion at the destination distribution centre (latest terminal time plus onward leg).
    pub completion: Minutes,
    pub first: Minutes,
    pub last: Minutes,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KpiReport {
    pub kpis: Kpis,
    pub shipments: Vec<ShipmentDelivery>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KpiError {
    #[error("module {module} of shipment `{shipment}` has no itinerary")]
    Missing { shipment: String, module: u32 },
    #[error("module {module} of shipment `{shipment}` is assigned more than once")]
    Duplicate { shipment: String, module: u32 },
    #[error("choice refers to shipment #{0}, which does not exist")]
    UnknownShipment(usize),
    #[error("choice refers to module {module} of shipment `{shipment}`, which does not exist")]
    UnknownModule { shipment: String, module: u32 },
}

/// Computes J1..J4 from a complete set of module choices.
pub fn compute_kpis(network: &Network, choices: &[ModuleChoice]) -> Result<KpiReport, KpiError> {
    let shipments = network.shipments();
    let mut per: Vec<Vec<Option<&Itinerary>>> = shipments.iter().map(|s| vec![None; s.module_count as usize]).collect();
    for c in choices {
        let slots = per.get_mut(c.shipment).ok_or(KpiError::UnknownShipment(c.shipment))?;
        let id = || shipments[c.shipment].id.clone();
        let slot = slots
            .get_mut(c.module as usize)
            .ok_or_else(|| KpiError::UnknownModule { shipment: id(), module: c.module })?;
        if slot.is_some() {
            return Err(KpiError::Duplicate { shipment: id(), module: c.module });
        }
        *slot = Some(&c.itinerary);
    }

    let mut kpis = Kpis::default();
    let mut deliveries = Vec::with_capacity(shipments.len());
    for (si, (shipment, slots)) in shipments.iter().zip(&per).enumerate() {
        let mut per_terminal: BTreeMap<NodeIdx, Minutes> = BTreeMap::new();
        let mut first = Minutes(i64::MAX);
        let mut last = Minutes(i64::MIN);
        for (m, slot) in slots.iter().enumerate() {
            let it = slot.ok_or_else(|| KpiError::Missing { shipment: shipments[si].id.clone(), module: m as u32 })?;
            if it.uses_direct_truck() {
                kpis.direct_modules += 1;
            }
            kpis.cost = kpis.cost + it.cost;
            let t = per_terminal.entry(it.destination).or_insert(it.delivery_time);
            *t = (*t).max(it.delivery_time);
            first = first.min(it.delivery_time);
            last = last.max(it.delivery_time);
        }
        if slots.is_empty() {
            first = Minutes::ZERO;
            last = Minutes::ZERO;
        }
        let w = shipment.weight_milli();
        let mut completion = Minutes::ZERO;
        for (&k, &t) in &per_terminal {
            kpis.weighted_delivery += w * t.0;
            completion = completion.max(t + network.node(k).onward_time.unwrap_or_default());
        }
        kpis.gap = kpis.gap + (last - first);
        deliveries.push(ShipmentDelivery { per_terminal, completion, first, last });
    }
    Ok(KpiReport { kpis, shipments: deliveries })
}
