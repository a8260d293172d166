//! Monte Carlo propagation of hub processing times and module counts
//! through the optimizer.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::itinerary::HubTimes;
use crate::kpi::Objective;
use crate::model::{Network, NodeKind, Shipment};
use crate::rng::stream;
use crate::solver::{solve_exact, SolveError, SolveStatus, SolverOptions};
use crate::units::{Minutes, Volume};

/// Largest share of infeasible samples a statistic may silently drop.
pub const MAX_INFEASIBLE_SHARE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum UncertaintyError {
    #[error("invalid distribution: {0}")]
    Distribution(String),
    #[error("unknown PI-hub `{0}`")]
    UnknownHub(String),
    #[error("at least {need} samples are required, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("all {0} samples are infeasible")]
    AllInfeasible(usize),
    #[error("{infeasible} of {total} samples are infeasible (more than 5%)")]
    TooManyInfeasible { infeasible: usize, total: usize },
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

/// Continuous uniform on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Uniform {
    pub lo: f64,
    pub hi: f64,
}

impl Uniform {
    pub fn quantile(&self, u: f64) -> f64 {
        self.lo + u * (self.hi - self.lo)
    }

    fn check(&self, what: &str) -> Result<(), UncertaintyError> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo > 0.0 && self.lo <= self.hi) {
            return Err(UncertaintyError::Distribution(format!(
                "{what}: need 0 < lo <= hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

/// Discrete uniform on `{lo, ..., hi}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteUniform {
    pub lo: u32,
    pub hi: u32,
}

impl DiscreteUniform {
    pub fn quantile(&self, u: f64) -> u32 {
        let width = (self.hi - self.lo + 1) as f64;
        self.lo + ((u * width).floor() as u32).min(self.hi - self.lo)
    }

    fn check(&self, what: &str) -> Result<(), UncertaintyError> {
        if self.lo == 0 || self.lo > self.hi {
            return Err(UncertaintyError::Distribution(format!(
                "{what}: need 1 <= lo <= hi, got {{{}..{}}}",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

/// How module volumes follow a sampled module count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VolumeRule {
    /// The shipment's total volume split evenly, leftover litres on the first modules.
    #[default]
    EqualSplit,
    /// Each module volume drawn independently from a uniform in m³.
    IidVolumes { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputDistributionSet {
    /// Hub processing time in hours.
    pub hub_time: Uniform,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub hub_time_overrides: BTreeMap<String, Uniform>,
    pub module_count: DiscreteUniform,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub module_count_overrides: BTreeMap<String, DiscreteUniform>,
    pub volume_rule: VolumeRule,
}

impl Default for InputDistributionSet {
    fn default() -> Self {
        InputDistributionSet {
            hub_time: Uniform { lo: 1.0, hi: 3.0 },
            hub_time_overrides: BTreeMap::new(),
            module_count: DiscreteUniform { lo: 1, hi: 10 },
            module_count_overrides: BTreeMap::new(),
            volume_rule: VolumeRule::EqualSplit,
        }
    }
}

impl InputDistributionSet {
    pub fn hub_time_for(&self, hub: &str) -> Uniform {
        self.hub_time_overrides.get(hub).copied().unwrap_or(self.hub_time)
    }

    pub fn module_count_for(&self, shipment: &str) -> DiscreteUniform {
        self.module_count_overrides.get(shipment).copied().unwrap_or(self.module_count)
    }

    pub fn check(&self) -> Result<(), UncertaintyError> {
        self.hub_time.check("hub_time")?;
        for (k, d) in &self.hub_time_overrides {
            d.check(k)?;
        }
        self.module_count.check("module_count")?;
        for (k, d) in &self.module_count_overrides {
            d.check(k)?;
        }
        if let VolumeRule::IidVolumes { lo, hi } = self.volume_rule {
            Uniform { lo, hi }.check("volume_rule")?;
        }
        Ok(())
    }
}

/// Which inputs vary in a Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SamplingMode {
    #[default]
    AllVary,
    OnlyModuleCounts,
    OnlyOneHub(String),
}

impl fmt::Display for SamplingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamplingMode::AllVary => f.write_str("all"),
            SamplingMode::OnlyModuleCounts => f.write_str("modules-only"),
            SamplingMode::OnlyOneHub(h) => write!(f, "one-hub:{h}"),
        }
    }
}

impl FromStr for SamplingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(SamplingMode::AllVary),
            "modules-only" => Ok(SamplingMode::OnlyModuleCounts),
            _ => match s.strip_prefix("one-hub:") {
                Some(h) if !h.is_empty() => Ok(SamplingMode::OnlyOneHub(h.to_string())),
                _ => Err(format!("unknown mode `{s}` (expected all, modules-only or one-hub:<id>)")),
            },
        }
    }
}

impl TryFrom<String> for SamplingMode {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<SamplingMode> for String {
    fn from(m: SamplingMode) -> String {
        m.to_string()
    }
}

/// One draw of the uncertain inputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSample {
    /// Processing time per PI-hub, hours.
    pub hub_times: BTreeMap<String, f64>,
    pub module_counts: BTreeMap<String, u32>,
    pub derived_volumes: BTreeMap<String, Vec<Volume>>,
    pub sample_index: u64,
    pub seed: u64,
}

/// Module volumes for `count` modules of `shipment`.
pub fn derive_volumes(
    shipment: &Shipment,
    count: u32,
    rule: VolumeRule,
    draws: &mut impl FnMut() -> f64,
) -> Vec<Volume> {
    match rule {
        VolumeRule::EqualSplit => {
            let total = shipment.total_volume().0;
            let n = count as i64;
            let (base, rest) = (total / n, total % n);
            (0..n).map(|i| Volume(base + i64::from(i < rest))).collect()
        }
        VolumeRule::IidVolumes { lo, hi } => {
            let d = Uniform { lo, hi };
            (0..count).map(|_| Volume::from_m3(d.quantile(draws())).max(Volume(1))).collect()
        }
    }
}

fn nominal_hours(network: &Network) -> BTreeMap<String, f64> {
    network
        .nodes_of_kind(NodeKind::PiHub)
        .map(|n| (n.id.clone(), n.processing_time.unwrap_or_default().hours()))
        .collect()
}

/// Draws `n` input samples. Sample `j` depends only on `(seed, j)`.
pub fn sample_inputs(
    network: &Network,
    dists: &InputDistributionSet,
    n: usize,
    seed: u64,
    mode: &SamplingMode,
) -> Result<Vec<ScenarioSample>, UncertaintyError> {
    if n == 0 {
        return Err(UncertaintyError::TooFewSamples { need: 1, got: 0 });
    }
    dists.check()?;
    if let SamplingMode::OnlyOneHub(h) = mode {
        if network.nodes_of_kind(NodeKind::PiHub).all(|p| &p.id != h) {
            return Err(UncertaintyError::UnknownHub(h.clone()));
        }
    }
    let nominal = nominal_hours(network);
    Ok((0..n as u64)
        .map(|j| {
            let mut rng = stream(seed, j);
            let mut hub_times = BTreeMap::new();
            for p in network.nodes_of_kind(NodeKind::PiHub) {
                let drawn = dists.hub_time_for(&p.id).quantile(rng.random::<f64>());
                let varies = match mode {
                    SamplingMode::AllVary => true,
                    SamplingMode::OnlyModuleCounts => false,
                    SamplingMode::OnlyOneHub(h) => h == &p.id,
                };
                hub_times.insert(p.id.clone(), if varies { drawn } else { nominal[&p.id] });
            }
            let counts_vary = matches!(mode, SamplingMode::AllVary | SamplingMode::OnlyModuleCounts);
            let mut module_counts = BTreeMap::new();
            let mut derived_volumes = BTreeMap::new();
            for s in network.shipments() {
                let drawn = dists.module_count_for(&s.id).quantile(rng.random::<f64>());
                let (count, volumes) = if counts_vary {
                    (drawn, derive_volumes(s, drawn, dists.volume_rule, &mut || rng.random::<f64>()))
                } else {
                    (s.module_count, s.module_volumes.clone())
                };
                module_counts.insert(s.id.clone(), count);
                derived_volumes.insert(s.id.clone(), volumes);
            }
            ScenarioSample { hub_times, module_counts, derived_volumes, sample_index: j, seed }
        })
        .collect())
}

/// The network and hub times a sample stands for.
pub fn instantiate(network: &Network, sample: &ScenarioSample) -> (Network, HubTimes) {
    let shipments = network
        .shipments()
        .iter()
        .map(|s| {
            let count = sample.module_counts.get(&s.id).copied().unwrap_or(s.module_count);
            let volumes = sample.derived_volumes.get(&s.id).cloned().unwrap_or_else(|| s.module_volumes.clone());
            Shipment {
                module_count: count,
                module_volumes: volumes,
                origin_arrivals: s
                    .origin_arrivals
                    .iter()
                    .map(|(o, t)| (o.clone(), vec![t.first().copied().unwrap_or_default(); count as usize]))
                    .collect(),
                ..s.clone()
            }
        })
        .collect();
    let mut times = HubTimes::new();
    for (hub, h) in &sample.hub_times {
        times.set(hub.clone(), Minutes::from_hours_ceil(*h));
    }
    (network.with_shipments(shipments), times)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleStatus {
    Optimal,
    Infeasible,
    /// Node limit reached; KPIs, when present, are those of the best
    /// assignment found.
    Limit,
}

/// KPI row of one sample: (J1 count, J2 hours, J3 currency, J4 hours).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleOutcome {
    pub sample_index: u64,
    pub status: SampleStatus,
    pub kpis: Option<[f64; 4]>,
}

/// Solves one instantiated sample.
pub fn evaluate_sample(
    network: &Network,
    objective: Objective,
    sample: &ScenarioSample,
    options: &SolverOptions,
) -> Result<SampleOutcome, SolveError> {
    let (net, times) = instantiate(network, sample);
    let sol = solve_exact(&net, objective, &times, options)?;
    Ok(match sol.status {
        SolveStatus::Optimal => SampleOutcome {
            sample_index: sample.sample_index,
            status: SampleStatus::Optimal,
            kpis: Some(sol.kpis.values()),
        },
        SolveStatus::Infeasible => {
            SampleOutcome { sample_index: sample.sample_index, status: SampleStatus::Infeasible, kpis: None }
        }
        SolveStatus::NodeLimit => SampleOutcome {
            sample_index: sample.sample_index,
            status: SampleStatus::Limit,
            kpis: (!sol.choices.is_empty()).then(|| sol.kpis.values()),
        },
    })
}

/// Maps `f` over `0..n` on at most `jobs` threads; results stay in index order.
pub(crate) fn parallel_map<T: Send, E: Send>(
    jobs: Option<usize>,
    n: usize,
    f: impl Fn(usize) -> Result<T, E> + Sync + Send,
) -> Result<Result<Vec<T>, E>, UncertaintyError> {
    use rayon::prelude::*;
    let run = || (0..n).into_par_iter().map(&f).collect::<Result<Vec<T>, E>>();
    match jobs {
        None => Ok(run()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| UncertaintyError::Pool(e.to_string()))?;
            Ok(pool.install(run))
        }
    }
}

/// Solves every sample; rows come back in `sample_index` order.
pub fn run_monte_carlo(
    network: &Network,
    objective: Objective,
    samples: &[ScenarioSample],
    options: &SolverOptions,
    jobs: Option<usize>,
) -> Result<Vec<SampleOutcome>, UncertaintyError> {
    let mut rows = parallel_map(jobs, samples.len(), |i| evaluate_sample(network, objective, &samples[i], options))??;
    rows.sort_by_key(|r| r.sample_index);
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KpiStatistics {
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Standard deviation over mean; `None` when the mean is zero.
    pub relative_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariabilityReport {
    pub configuration: String,
    /// Feasible samples the statistics are computed over.
    pub sample_count: usize,
    pub infeasible_count: usize,
    /// Feasible samples whose solve stopped at the node limit.
    pub unproven_count: usize,
    pub kpis: [KpiStatistics; 4],
}

/// Mean, unbiased variance and relative standard deviation of one column.
pub fn column_statistics(values: &[f64]) -> KpiStatistics {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    let relative_std = (mean != 0.0).then(|| variance.sqrt() / mean.abs());
    KpiStatistics { mean, variance, relative_std }
}

/// Fails when more than 5% of the rows are infeasible.
pub fn check_infeasible_share(rows: &[SampleOutcome]) -> Result<(), UncertaintyError> {
    let infeasible = rows.iter().filter(|r| r.kpis.is_none()).count();
    if infeasible == rows.len() && !rows.is_empty() {
        return Err(UncertaintyError::AllInfeasible(infeasible));
    }
    if infeasible as f64 > MAX_INFEASIBLE_SHARE * rows.len() as f64 {
        return Err(UncertaintyError::TooManyInfeasible { infeasible, total: rows.len() });
    }
    Ok(())
}

/// Variability of the four KPIs over the feasible rows.
pub fn variability_report(objective: Objective, rows: &[SampleOutcome]) -> Result<VariabilityReport, UncertaintyError> {
    check_infeasible_share(rows)?;
    let mut sorted: Vec<&SampleOutcome> = rows.iter().collect();
    sorted.sort_by_key(|r| r.sample_index);
    let valid: Vec<[f64; 4]> = sorted.iter().filter_map(|r| r.kpis).collect();
    if valid.len() < 2 {
        return Err(UncertaintyError::TooFewSamples { need: 2, got: valid.len() });
    }
    let kpis = std::array::from_fn(|k| column_statistics(&valid.iter().map(|row| row[k]).collect::<Vec<_>>()));
    Ok(VariabilityReport {
        configuration: objective.configuration().to_string(),
        sample_count: valid.len(),
        infeasible_count: rows.len() - valid.len(),
        unproven_count: rows.iter().filter(|r| r.status == SampleStatus::Limit && r.kpis.is_some()).count(),
        kpis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{random_network, InstanceShape};

    fn row(i: u64, k: [f64; 4]) -> SampleOutcome {
        SampleOutcome { sample_index: i, status: SampleStatus::Optimal, kpis: Some(k) }
    }

    #[test]
    fn two_point_column() {
        let s = column_statistics(&[10.0, 14.0]);
        assert_eq!(s.mean, 12.0);
        assert_eq!(s.variance, 8.0);
        assert!((s.relative_std.unwrap() - 8f64.sqrt() / 12.0).abs() < 1e-15);
        assert!((s.relative_std.unwrap() - 0.2357).abs() < 1e-4);
    }

    #[test]
    fn constant_and_zero_mean_columns() {
        let s = column_statistics(&[3.0; 5]);
        assert_eq!((s.variance, s.relative_std), (0.0, Some(0.0)));
        assert_eq!(column_statistics(&[-1.0, 1.0]).relative_std, None);
    }

    #[test]
    fn report_ignores_row_order_and_counts_infeasible() {
        let mut rows: Vec<SampleOutcome> = (0..40).map(|i| row(i, [i as f64, 1.0, 0.1 * i as f64, 0.0])).collect();
        rows.push(SampleOutcome { sample_index: 40, status: SampleStatus::Infeasible, kpis: None });
        let a = variability_report(Objective::J2, &rows).unwrap();
        rows.reverse();
        rows.swap(3, 17);
        assert_eq!(variability_report(Objective::J2, &rows).unwrap(), a);
        assert_eq!((a.sample_count, a.infeasible_count), (40, 1));
        assert_eq!(a.configuration, "C2");
    }

    #[test]
    fn report_preconditions() {
        assert_eq!(
            variability_report(Objective::J1, &[row(0, [1.0; 4])]),
            Err(UncertaintyError::TooFewSamples { need: 2, got: 1 })
        );
        let bad = [SampleOutcome { sample_index: 0, status: SampleStatus::Infeasible, kpis: None }];
        assert_eq!(variability_report(Objective::J1, &bad), Err(UncertaintyError::AllInfeasible(1)));
        let mut rows: Vec<SampleOutcome> = (0..10).map(|i| row(i, [1.0; 4])).collect();
        rows[0] = SampleOutcome { sample_index: 0, status: SampleStatus::Infeasible, kpis: None };
        assert!(matches!(variability_report(Objective::J1, &rows), Err(UncertaintyError::TooManyInfeasible { .. })));
    }

    #[test]
    fn equal_split_spreads_remainder() {
        let s = Shipment {
            id: "s".into(),
            priority: 1.0,
            module_count: 1,
            module_volumes: vec![Volume(10_001)],
            origin_arrivals: BTreeMap::new(),
            allowed_destinations: Default::default(),
        };
        let v = derive_volumes(&s, 3, VolumeRule::EqualSplit, &mut || 0.5);
        assert_eq!(v, vec![Volume(3334), Volume(3334), Volume(3333)]);
        let v = derive_volumes(&s, 2, VolumeRule::IidVolumes { lo: 1.0, hi: 3.0 }, &mut || 0.25);
        assert_eq!(v, vec![Volume(1500); 2]);
    }

    #[test]
    fn discrete_quantile_covers_support_evenly() {
        let d = DiscreteUniform { lo: 1, hi: 10 };
        assert_eq!(d.quantile(0.0), 1);
        assert_eq!(d.quantile(0.0999), 1);
        assert_eq!(d.quantile(0.1), 2);
        assert_eq!(d.quantile(1.0), 10);
    }

    #[test]
    fn samples_respect_supports_and_modes() {
        let net = random_network(&InstanceShape::default(), 3);
        let dists = InputDistributionSet::default();
        let all = sample_inputs(&net, &dists, 300, 11, &SamplingMode::AllVary).unwrap();
        for s in &all {
            assert!(s.hub_times.values().all(|h| (1.0..=3.0).contains(h)));
            for (id, &n) in &s.module_counts {
                assert!((1..=10).contains(&n));
                assert_eq!(s.derived_volumes[id].len(), n as usize);
                let total: i64 = s.derived_volumes[id].iter().map(|v| v.0).sum();
                assert_eq!(total, net.shipment(id).unwrap().total_volume().0);
            }
        }
        let hub = net.hub_ids()[0].clone();
        let one = sample_inputs(&net, &dists, 50, 11, &SamplingMode::OnlyOneHub(hub.clone())).unwrap();
        let nominal = nominal_hours(&net);
        for s in &one {
            for (h, t) in &s.hub_times {
                if h != &hub {
                    assert_eq!(*t, nominal[h]);
                }
            }
            for sh in net.shipments() {
                assert_eq!(s.module_counts[&sh.id], sh.module_count);
            }
        }
        assert_eq!(
            sample_inputs(&net, &dists, 5, 1, &SamplingMode::OnlyOneHub("atlantis".into())),
            Err(UncertaintyError::UnknownHub("atlantis".into()))
        );
    }

    #[test]
    fn samples_are_keyed_by_index() {
        let net = random_network(&InstanceShape::default(), 5);
        let dists = InputDistributionSet::default();
        let short = sample_inputs(&net, &dists, 20, 4, &SamplingMode::AllVary).unwrap();
        let long = sample_inputs(&net, &dists, 40, 4, &SamplingMode::AllVary).unwrap();
        assert_eq!(short[..], long[..20]);
        assert_ne!(short, sample_inputs(&net, &dists, 20, 5, &SamplingMode::AllVary).unwrap());
    }

    #[test]
    fn point_distributions_reproduce_the_deterministic_solve() {
        let net = random_network(&InstanceShape::default(), 8);
        let dists = InputDistributionSet {
            hub_time: Uniform { lo: 2.0, hi: 2.0 },
            module_count: DiscreteUniform { lo: 2, hi: 2 },
            ..Default::default()
        };
        let samples = sample_inputs(&net, &dists, 6, 1, &SamplingMode::AllVary).unwrap();
        assert!(samples
            .windows(2)
            .all(|w| w[0].hub_times == w[1].hub_times && w[0].derived_volumes == w[1].derived_volumes));
        let rows = run_monte_carlo(&net, Objective::J2, &samples, &SolverOptions::default(), Some(2)).unwrap();
        let direct = evaluate_sample(&net, Objective::J2, &samples[0], &SolverOptions::default()).unwrap();
        assert!(rows.iter().all(|r| r.kpis == direct.kpis));
        assert_eq!(rows.iter().map(|r| r.sample_index).collect::<Vec<_>>(), (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn mode_strings_round_trip() {
        for m in [SamplingMode::AllVary, SamplingMode::OnlyModuleCounts, SamplingMode::OnlyOneHub("milan".into())] {
            assert_eq!(m.to_string().parse::<SamplingMode>().unwrap(), m);
        }
        assert!("one-hub:".parse::<SamplingMode>().is_err());
    }
}
