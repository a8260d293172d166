//! `pinet`: solve, analyse and export Physical Internet routing scenarios.
//!
//! Exit codes: 0 success, 1 input or usage error, 2 infeasible model,
//! 3 internal invariant violation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pinet_core::audit::audit_assignment;
use pinet_core::gsa::{pi_sensitivity_run, GsaOptions};
use pinet_core::lp::export_lp;
use pinet_core::report;
use pinet_core::rng::derive_seed;
use pinet_core::scenario::{load_scenario_file, OutputFormat, Scenario, ScenarioError};
use pinet_core::uncertainty::{run_monte_carlo, sample_inputs, variability_report, SamplingMode};
use pinet_core::{solve_exact, HubTimes, Objective, SolveStatus, SolverOptions};

#[derive(Parser)]
#[command(name = "pinet", version, about = "Exact module routing and robustness analysis for PI networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal routing for one objective: routing table, KPI summary, modal split.
    Solve(SolveArgs),
    /// Monte Carlo variability of the four KPIs.
    Variability(ExperimentArgs),
    /// First-order sensitivity indices (RBD-FAST).
    Gsa(GsaArgs),
    /// Writes the mixed-integer model in LP format.
    ExportLp(SolveArgs),
    /// Checks a scenario and lists every violated invariant.
    Validate(ScenarioArg),
}

#[derive(Args)]
struct ScenarioArg {
    #[arg(long)]
    scenario: PathBuf,
}

#[derive(Args)]
struct SolverArgs {
    /// Let the modules of one shipment end at different destination terminals.
    #[arg(long)]
    per_module_destinations: bool,
    /// Search nodes per solve before reporting the best assignment found (0: no limit).
    #[arg(long)]
    node_limit: Option<u64>,
}

impl SolverArgs {
    fn options(&self) -> SolverOptions {
        let mut o = SolverOptions { per_module_destinations: self.per_module_destinations, ..SolverOptions::default() };
        if let Some(n) = self.node_limit {
            o.node_limit = (n > 0).then_some(n);
        }
        o
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    scenario: ScenarioArg,
    /// J1..J4
    #[arg(long, conflicts_with = "config")]
    objective: Option<Objective>,
    /// C1..C4, the configuration minimizing J1..J4
    #[arg(long)]
    config: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<OutputFormat>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    scenario: ScenarioArg,
    /// C1..C4
    #[arg(long, conflicts_with = "objective")]
    config: Option<String>,
    /// J1..J4, same as the matching configuration
    #[arg(long)]
    objective: Option<Objective>,
    /// Run C1..C4 in turn, each with a seed derived from `--seed`.
    #[arg(long, conflicts_with_all = ["config", "objective"])]
    all_configs: bool,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// all, modules-only or one-hub:<id>
    #[arg(long)]
    mode: Option<SamplingMode>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<OutputFormat>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct GsaArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    #[arg(long)]
    harmonics: Option<usize>,
    /// One module-count factor per shipment instead of a single grouped one.
    #[arg(long)]
    ungrouped: bool,
}

/// A failure and the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Failure {
        Failure { code: 1, message: message.into() }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Failure {
        let mut message = e.to_string();
        if let ScenarioError::Invalid(violations) = &e {
            for v in violations {
                message.push_str(&format!("\n  {v}"));
            }
        }
        Failure::input(message)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Variability(a) => cmd_variability(a),
        Command::Gsa(a) => cmd_gsa(a),
        Command::ExportLp(a) => cmd_export_lp(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load(arg: &ScenarioArg) -> Result<Scenario, Failure> {
    Ok(load_scenario_file(&arg.scenario)?)
}

fn parse_config(label: &str) -> Result<Objective, Failure> {
    Objective::from_configuration(label).ok_or_else(|| Failure::input(format!("unknown configuration `{label}`")))
}

fn objective_of(sc: &Scenario, objective: Option<Objective>, config: Option<&str>) -> Result<Objective, Failure> {
    match (objective, config) {
        (Some(o), _) => Ok(o),
        (None, Some(c)) => parse_config(c),
        (None, None) => parse_config(&sc.experiment.configuration),
    }
}

fn out_dir(sc: &Scenario, out: &Option<PathBuf>) -> PathBuf {
    out.clone().or_else(|| sc.experiment.output_directory.as_ref().map(PathBuf::from)).unwrap_or_else(|| "out".into())
}

fn write(dir: &Path, name: &str, content: &str) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::input(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
}

fn cmd_solve(a: &SolveArgs) -> Result<(), Failure> {
    let sc = load(&a.scenario)?;
    let objective = objective_of(&sc, a.objective, a.config.as_deref())?;
    let options = a.solver.options();
    let hub_times = HubTimes::nominal(&sc.network);
    let sol = solve_exact(&sc.network, objective, &hub_times, &options)
        .map_err(|e| Failure { code: 3, message: e.to_string() })?;
    if sol.choices.is_empty() && sc.network.module_total() > 0 {
        let why = if sol.status == SolveStatus::NodeLimit { "node limit reached before any" } else { "no" };
        return Err(Failure { code: 2, message: format!("{why} feasible assignment for {objective}") });
    }
    let problems = audit_assignment(&sc.network, &sol.choices, &hub_times, options.per_module_destinations);
    if !problems.is_empty() {
        return Err(Failure { code: 3, message: format!("solution fails the audit:\n  {}", problems.join("\n  ")) });
    }
    if sol.status == SolveStatus::NodeLimit {
        eprintln!("warning: node limit reached; the reported assignment is not proven optimal");
    }
    let dir = out_dir(&sc, &a.out);
    let split = report::modal_split(&sc.network, &sol.choices);
    match a.format.unwrap_or(sc.experiment.format) {
        OutputFormat::Csv => {
            write(&dir, "routing.csv", &report::routing_csv(&sc.network, &sol))?;
            write(&dir, "kpis.csv", &report::kpi_summary_csv(&sol))?;
            write(&dir, "modal_split.csv", &report::modal_split_csv(&split))?;
        }
        OutputFormat::Json => {
            write(&dir, "routing.json", &report::to_json(&report::routing_rows(&sc.network, &sol)))?;
            write(&dir, "kpis.json", &report::to_json(&report::kpi_summary(&sol)))?;
            write(&dir, "modal_split.json", &report::to_json(&split))?;
        }
    }
    let s = report::kpi_summary(&sol);
    println!(
        "{objective} {}: KPI1 {} KPI2 {} KPI3 {} KPI4 {} -> {}",
        s.status,
        s.kpi1,
        s.kpi2,
        s.kpi3,
        s.kpi4,
        dir.display()
    );
    Ok(())
}

/// The configurations to run and the seed of each.
fn runs(sc: &Scenario, a: &ExperimentArgs) -> Result<Vec<(Objective, u64)>, Failure> {
    let seed = a.seed.unwrap_or(sc.experiment.seed);
    if a.all_configs {
        return Ok(Objective::ALL.iter().map(|&o| (o, derive_seed(seed, o.index() as u64 + 1))).collect());
    }
    Ok(vec![(objective_of(sc, a.objective, a.config.as_deref())?, seed)])
}

fn cmd_variability(a: &ExperimentArgs) -> Result<(), Failure> {
    let sc = load(&a.scenario)?;
    let samples = a.samples.unwrap_or(sc.experiment.samples);
    if samples < 2 {
        return Err(Failure::input(format!("at least 2 samples are needed to estimate a variance, got {samples}")));
    }
    let mode = a.mode.clone().unwrap_or_else(|| sc.experiment.mode.clone());
    let dir = out_dir(&sc, &a.out);
    let format = a.format.unwrap_or(sc.experiment.format);
    for (objective, seed) in runs(&sc, a)? {
        let inputs = sample_inputs(&sc.network, &sc.experiment.distributions, samples, seed, &mode)
            .map_err(|e| Failure::input(e.to_string()))?;
        let rows = run_monte_carlo(&sc.network, objective, &inputs, &a.solver.options(), a.jobs)
            .map_err(|e| Failure { code: 3, message: e.to_string() })?;
        let c = objective.configuration();
        match format {
            OutputFormat::Csv => write(&dir, &format!("kpi_matrix_{c}.csv"), &report::kpi_matrix_csv(&rows))?,
            OutputFormat::Json => write(&dir, &format!("kpi_matrix_{c}.json"), &report::to_json(&rows))?,
        }
        let rep = variability_report(objective, &rows).map_err(|e| Failure { code: 2, message: e.to_string() })?;
        match format {
            OutputFormat::Csv => write(&dir, &format!("variability_{c}.csv"), &report::variability_csv(&rep))?,
            OutputFormat::Json => write(&dir, &format!("variability_{c}.json"), &report::to_json(&rep))?,
        }
        let rel = rep.kpis.map(|k| k.relative_std.map_or("n/a".to_string(), |v| format!("{v:.4}")));
        println!(
            "{c} mode {mode}: relative std {} ({} samples, {} infeasible)",
            rel.join(" "),
            rep.sample_count,
            rep.infeasible_count
        );
    }
    Ok(())
}

fn cmd_gsa(a: &GsaArgs) -> Result<(), Failure> {
    let e = &a.experiment;
    let sc = load(&e.scenario)?;
    let harmonics = a.harmonics.unwrap_or(sc.experiment.harmonics);
    if harmonics == 0 {
        return Err(Failure::input("--harmonics must be at least 1"));
    }
    let dir = out_dir(&sc, &e.out);
    for (objective, seed) in runs(&sc, e)? {
        let options = GsaOptions {
            samples: e.samples.unwrap_or(sc.experiment.samples),
            seed,
            harmonics,
            grouped_counts: !a.ungrouped,
            jobs: e.jobs,
            solver: e.solver.options(),
        };
        let result = pi_sensitivity_run(&sc.network, objective, &sc.experiment.distributions, &options)
            .map_err(|err| Failure::input(err.to_string()))?;
        let c = objective.configuration();
        match e.format.unwrap_or(sc.experiment.format) {
            OutputFormat::Csv => {
                write(&dir, &format!("indices_{c}.csv"), &report::indices_csv(&result))?;
                write(&dir, &format!("trace_{c}.csv"), &report::trace_csv(&result))?;
            }
            OutputFormat::Json => {
                write(&dir, &format!("indices_{c}.json"), &report::to_json(&result))?;
            }
        }
        write(&dir, &format!("radar_{c}.json"), &report::to_json(&report::radar(&result)))?;
        println!("{c}: {} samples, {} infeasible -> {}", result.sample_count, result.infeasible_count, dir.display());
    }
    Ok(())
}

fn cmd_export_lp(a: &SolveArgs) -> Result<(), Failure> {
    let sc = load(&a.scenario)?;
    let objective = objective_of(&sc, a.objective, a.config.as_deref())?;
    let lp = export_lp(&sc.network, objective, &HubTimes::nominal(&sc.network), &a.solver.options())
        .map_err(|e| Failure::input(e.to_string()))?;
    match &a.out {
        Some(dir) => write(dir, &format!("model_{objective}.lp"), &lp),
        None => {
            print!("{lp}");
            Ok(())
        }
    }
}

fn cmd_validate(a: &ScenarioArg) -> Result<(), Failure> {
    let sc = load(a)?;
    println!(
        "{}: valid ({} nodes, {} services, {} shipments, {} modules)",
        a.scenario.display(),
        sc.network.nodes().len(),
        sc.network.services().len(),
        sc.network.shipments().len(),
        sc.network.module_total()
    );
    Ok(())
}
