//! Exact routing of Physical Internet modules through PI-hubs, and the
//! robustness analysis of the optimized network.
//!
//! The crate is organised bottom-up:
//! * [`model`]: nodes, timetabled vehicles, shipments and their validation;
//! * [`scenario`]: the TOML scenario document;
//! * [`itinerary`]: time-feasible routes of one module;
//! * [`kpi`] and [`solver`]: the four KPIs and the exact capacitated assignment;
//! * [`lp`]: the mixed-integer model written as an LP file;
//! * [`uncertainty`] and [`gsa`]: Monte Carlo variability and first-order
//!   Sobol indices by RBD-FAST.

pub mod audit;
pub mod generator;
pub mod gsa;
pub mod itinerary;
pub mod kpi;
pub mod lp;
pub mod model;
pub mod report;
pub mod rng;
pub mod scenario;
pub mod solver;
pub mod uncertainty;
pub mod units;

pub use itinerary::{delivery_gap_bounds, enumerate_itineraries, HubTimes, Itinerary, ItineraryKind};
pub use kpi::{compute_kpis, Kpis, ModuleChoice, Objective};
pub use model::{validate, Mode, Network, Node, NodeKind, Shipment, VehicleService, Violation};
pub use solver::{solve_exact, solve_exhaustive, AssignmentSolution, SolveStatus, SolverOptions};
pub use units::{Cost, Minutes, Volume};
