use std::collections::BTreeMap;

use rand::RngExt;
use serde::Serialize;

use super::{check_design, first_order, FirstOrder, GsaError, RbdDesign};
use crate::kpi::Objective;
use crate::model::{Network, NodeKind};
use crate::rng::{derive_seed, stream};
use crate::solver::SolverOptions;
use crate::uncertainty::{
    check_infeasible_share, derive_volumes, evaluate_sample, parallel_map, InputDistributionSet, SampleOutcome,
    SampleStatus, ScenarioSample, UncertaintyError,
};

#[derive(Debug, Clone, PartialEq)]
pub struct GsaOptions {
    pub samples: usize,
    pub seed: u64,
    pub harmonics: usize,
    /// One factor drives every module count; otherwise one factor per shipment.
    pub grouped_counts: bool,
    pub jobs: Option<usize>,
    pub solver: SolverOptions,
}

impl Default for GsaOptions {
    fn default() -> Self {
        GsaOptions {
            samples: 1000,
            seed: 2024,
            harmonics: 6,
            grouped_counts: true,
            jobs: None,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracePoint {
    pub n: usize,
    /// Per KPI, per input.
    pub indices: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityResult {
    pub configuration: String,
    /// Hub time factors in network order, then the module-count factor(s).
    pub inputs: Vec<String>,
    pub sample_count: usize,
    /// Optimizer runs performed; equal to `sample_count`.
    pub evaluations: usize,
    pub infeasible_count: usize,
    pub unproven_count: usize,
    pub harmonics: usize,
    /// One entry per KPI.
    pub kpis: Vec<FirstOrder>,
    pub trace: Vec<TracePoint>,
}

impl SensitivityResult {
    /// Index of `input` for KPI `kpi` (0-based), if that input exists.
    pub fn index(&self, input: &str, kpi: usize) -> Option<f64> {
        let i = self.inputs.iter().position(|x| x == input)?;
        Some(self.kpis[kpi].indices[i])
    }
}

/// Prefix sizes at which the convergence trace is recorded: 100, 200, 500,
/// 1000, 2000, 5000, ... below `n`, then `n` itself.
pub fn checkpoints(n: usize, harmonics: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut decade = 100;
    'outer: loop {
        for step in [1, 2, 5] {
            let c = step * decade;
            if c >= n {
                break 'outer;
            }
            if c >= super::min_samples(harmonics) {
                out.push(c);
            }
        }
        decade *= 10;
    }
    out.push(n);
    out
}

/// Sensitivity of the four KPIs to hub processing times and module counts
/// for the configuration minimizing `objective`.
pub fn pi_sensitivity_run(
    network: &Network,
    objective: Objective,
    dists: &InputDistributionSet,
    options: &GsaOptions,
) -> Result<SensitivityResult, PiGsaError> {
    let n = options.samples;
    check_design(n, options.harmonics)?;
    dists.check()?;
    let hubs: Vec<String> = network.nodes_of_kind(NodeKind::PiHub).map(|p| p.id.clone()).collect();
    let ships = network.shipments();
    let mut inputs: Vec<String> = hubs.iter().map(|h| format!("tau:{h}")).collect();
    if options.grouped_counts {
        inputs.push("n_s".to_string());
    } else {
        inputs.extend(ships.iter().map(|s| format!("n_s:{}", s.id)));
    }
    let design = RbdDesign::new(inputs.len(), n, options.seed);
    let volume_seed = derive_seed(options.seed, 1);

    let sample = |j: usize| {
        let hub_times: BTreeMap<String, f64> = hubs
            .iter()
            .enumerate()
            .map(|(i, h)| (h.clone(), dists.hub_time_for(h).quantile(design.unit(i, j))))
            .collect();
        let mut rng = stream(volume_seed, j as u64);
        let mut module_counts = BTreeMap::new();
        let mut derived_volumes = BTreeMap::new();
        for (k, s) in ships.iter().enumerate() {
            let factor = if options.grouped_counts { hubs.len() } else { hubs.len() + k };
            let count = dists.module_count_for(&s.id).quantile(design.unit(factor, j));
            derived_volumes
                .insert(s.id.clone(), derive_volumes(s, count, dists.volume_rule, &mut || rng.random::<f64>()));
            module_counts.insert(s.id.clone(), count);
        }
        ScenarioSample { hub_times, module_counts, derived_volumes, sample_index: j as u64, seed: options.seed }
    };
    let rows: Vec<SampleOutcome> =
        parallel_map(options.jobs, n, |j| evaluate_sample(network, objective, &sample(j), &options.solver))?
            .map_err(UncertaintyError::from)?;
    check_infeasible_share(&rows)?;

    let valid: Vec<(usize, [f64; 4])> =
        rows.iter().filter_map(|r| r.kpis.map(|k| (r.sample_index as usize, k))).collect();
    let estimate = |limit: usize| -> Result<Vec<FirstOrder>, GsaError> {
        (0..4)
            .map(|k| {
                let col: Vec<(usize, f64)> =
                    valid.iter().filter(|(j, _)| *j < limit).map(|(j, v)| (*j, v[k])).collect();
                first_order(&design, &col, options.harmonics)
            })
            .collect()
    };
    let kpis = estimate(n)?;
    let mut trace = Vec::new();
    for c in checkpoints(n, options.harmonics) {
        // an early prefix may hold too few feasible samples
        if let Ok(est) = estimate(c) {
            trace.push(TracePoint { n: c, indices: est.into_iter().map(|f| f.indices).collect() });
        }
    }
    Ok(SensitivityResult {
        configuration: objective.configuration().to_string(),
        inputs,
        sample_count: n,
        evaluations: rows.len(),
        infeasible_count: rows.len() - valid.len(),
        unproven_count: rows.iter().filter(|r| r.status == SampleStatus::Limit && r.kpis.is_some()).count(),
        harmonics: options.harmonics,
        kpis,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PiGsaError {
    #[error(transparent)]
    Gsa(#[from] GsaError),
    #[error(transparent)]
    Uncertainty(#[from] UncertaintyError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{random_network, InstanceShape};

    #[test]
    fn checkpoint_ladder() {
        assert_eq!(checkpoints(1000, 6), vec![100, 200, 500, 1000]);
        assert_eq!(checkpoints(4000, 6), vec![100, 200, 500, 1000, 2000, 4000]);
        assert_eq!(checkpoints(60, 6), vec![60]);
    }

    #[test]
    fn one_run_per_sample_and_stable_across_jobs() {
        let net = random_network(&InstanceShape::default(), 11);
        let opts = GsaOptions { samples: 60, seed: 3, ..GsaOptions::default() };
        let dists = InputDistributionSet::default();
        let a = pi_sensitivity_run(&net, Objective::J2, &dists, &GsaOptions { jobs: Some(1), ..opts.clone() });
        let b = pi_sensitivity_run(&net, Objective::J2, &dists, &GsaOptions { jobs: Some(3), ..opts });
        match (a, b) {
            (Ok(a), Ok(b)) => {
                assert_eq!(a.evaluations, 60);
                assert_eq!(a, b);
                assert_eq!(a.inputs.last().map(String::as_str), Some("n_s"));
            }
            (Err(a), Err(b)) => assert_eq!(a, b),
            (a, b) => panic!("{a:?} vs {b:?}"),
        }
    }
}
