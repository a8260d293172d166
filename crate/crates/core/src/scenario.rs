//! Scenario documents (TOML).
//!
//! A document has five sections: `nodes`, `services`, `shipments`,
//! `distances` and `experiment`. Times are `"HH:MM"` strings or decimal hours,
//! volumes are m³, distances km and unit costs currency per km per m³. A
//! service without an explicit `distance` takes it from the `distances` table.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::kpi::Objective;
use crate::model::{validate, Mode, Network, Node, Shipment, VehicleService, Violation};
use crate::uncertainty::{InputDistributionSet, SamplingMode};
use crate::units::{Minutes, Volume};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed scenario: {0}")]
    Parse(String),
    #[error("scenario violates {} model invariant(s)", .0.len())]
    Invalid(Vec<Violation>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(format!("unknown format `{s}` (csv or json)")),
        }
    }
}

/// Experiment settings carried by a scenario; CLI flags override them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// C1..C4, minimizing J1..J4 respectively.
    pub configuration: String,
    pub samples: usize,
    pub seed: u64,
    pub harmonics: usize,
    pub mode: SamplingMode,
    pub distributions: InputDistributionSet,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_directory: Option<String>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            configuration: "C2".into(),
            samples: 1000,
            seed: 1,
            harmonics: 6,
            mode: SamplingMode::AllVary,
            distributions: InputDistributionSet::default(),
            output_directory: None,
            format: OutputFormat::Csv,
        }
    }
}

impl ExperimentConfig {
    pub fn objective(&self) -> Option<Objective> {
        Objective::from_configuration(&self.configuration)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistanceEntry {
    from: String,
    to: String,
    km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ServiceEntry {
    id: String,
    from: String,
    to: String,
    mode: Mode,
    departure_time: Minutes,
    travel_time: Minutes,
    capacity: Volume,
    unit_cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Arrivals {
    Shared(Minutes),
    PerModule(Vec<Minutes>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShipmentEntry {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    priority: Option<f64>,
    module_count: u32,
    module_volumes: Vec<Volume>,
    origin_arrivals: BTreeMap<String, Arrivals>,
    allowed_destinations: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    #[serde(default)]
    experiment: ExperimentConfig,
    nodes: Vec<Node>,
    #[serde(default)]
    distances: Vec<DistanceEntry>,
    services: Vec<ServiceEntry>,
    #[serde(default)]
    shipments: Vec<ShipmentEntry>,
}

/// A loaded, validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub network: Network,
    pub experiment: ExperimentConfig,
}

/// Parses and validates a scenario document.
pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let doc: Document = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    let distance: HashMap<(&str, &str), f64> = doc
        .distances
        .iter()
        .flat_map(|d| [((d.from.as_str(), d.to.as_str()), d.km), ((d.to.as_str(), d.from.as_str()), d.km)])
        .collect();
    let mut services = Vec::with_capacity(doc.services.len());
    for s in &doc.services {
        let km = match s.distance {
            Some(km) => km,
            None => *distance.get(&(s.from.as_str(), s.to.as_str())).ok_or_else(|| {
                ScenarioError::Parse(format!("service `{}`: no distance and no {}–{} entry", s.id, s.from, s.to))
            })?,
        };
        services.push(VehicleService {
            id: s.id.clone(),
            from: s.from.clone(),
            to: s.to.clone(),
            mode: s.mode,
            departure_time: s.departure_time,
            travel_time: s.travel_time,
            capacity: s.capacity,
            unit_cost: s.unit_cost,
            distance: km,
        });
    }
    let shipments = doc
        .shipments
        .iter()
        .map(|s| Shipment {
            id: s.id.clone(),
            priority: s.priority.unwrap_or(1.0),
            module_count: s.module_count,
            module_volumes: s.module_volumes.clone(),
            origin_arrivals: s
                .origin_arrivals
                .iter()
                .map(|(o, a)| {
                    let times = match a {
                        Arrivals::Shared(t) => vec![*t; s.module_count as usize],
                        Arrivals::PerModule(v) => v.clone(),
                    };
                    (o.clone(), times)
                })
                .collect(),
            allowed_destinations: s.allowed_destinations.clone(),
        })
        .collect();
    let network = Network::new(doc.nodes, services, shipments);
    let violations = validate(&network);
    if !violations.is_empty() {
        return Err(ScenarioError::Invalid(violations));
    }
    let experiment = doc.experiment;
    if experiment.objective().is_none() {
        return Err(ScenarioError::Parse(format!("unknown configuration `{}`", experiment.configuration)));
    }
    experiment.distributions.check().map_err(|e| ScenarioError::Parse(e.to_string()))?;
    Ok(Scenario { network, experiment })
}

pub fn load_scenario_file(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
    load_scenario(&text)
}

/// Serializes a scenario with every service distance written out explicitly.
pub fn to_toml(scenario: &Scenario) -> String {
    let net = &scenario.network;
    let doc = Document {
        experiment: scenario.experiment.clone(),
        nodes: net.nodes().to_vec(),
        distances: Vec::new(),
        services: net
            .services()
            .iter()
            .map(|s| ServiceEntry {
                id: s.id.clone(),
                from: s.from.clone(),
                to: s.to.clone(),
                mode: s.mode,
                departure_time: s.departure_time,
                travel_time: s.travel_time,
                capacity: s.capacity,
                unit_cost: s.unit_cost,
                distance: Some(s.distance),
            })
            .collect(),
        shipments: net
            .shipments()
            .iter()
            .map(|s| ShipmentEntry {
                id: s.id.clone(),
                priority: Some(s.priority),
                module_count: s.module_count,
                module_volumes: s.module_volumes.clone(),
                origin_arrivals: s
                    .origin_arrivals
                    .iter()
                    .map(|(o, t)| {
                        let a = match t.first() {
                            Some(first) if t.iter().all(|x| x == first) && !t.is_empty() => Arrivals::Shared(*first),
                            _ => Arrivals::PerModule(t.clone()),
                        };
                        (o.clone(), a)
                    })
                    .collect(),
                allowed_destinations: s.allowed_destinations.clone(),
            })
            .collect(),
    };
    toml::to_string(&doc).expect("scenario documents always serialize")
}
