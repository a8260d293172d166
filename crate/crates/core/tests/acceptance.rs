//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Runs the full bundled-scenario experiments, so it takes minutes on a
//! single core.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use pinet_core::audit::audit_assignment;
use pinet_core::generator::{random_network, InstanceShape};
use pinet_core::gsa::functions::{additive, ishigami, product};
use pinet_core::gsa::{pi_sensitivity_run, rbd_fast_indices, sobol_double_loop_oracle, Factor, GsaOptions};
use pinet_core::lp::export_lp;
use pinet_core::report::modal_split;
use pinet_core::scenario::{load_scenario_file, Scenario};
use pinet_core::solver::SolveError;
use pinet_core::uncertainty::{run_monte_carlo, sample_inputs, variability_report, SamplingMode};
use pinet_core::{solve_exact, solve_exhaustive, HubTimes, Objective, SolveStatus, SolverOptions};

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Verdict::*;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn bundled() -> Scenario {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/bundled.toml");
    load_scenario_file(path).expect("bundled scenario loads")
}

/// Criteria 1 and 2 share the random suite.
fn random_suite() -> (Verdict, Verdict) {
    let start = Instant::now();
    let opts = SolverOptions { exhaustive_ceiling: 2_000_000, ..SolverOptions::default() };
    let (mut instances, mut mismatches, mut violations, mut audited) = (0, Vec::new(), 0usize, 0usize);
    let mut seed = 0u64;
    while instances < 120 && seed < 5000 {
        let net = random_network(&InstanceShape::default(), seed);
        let times = HubTimes::nominal(&net);
        seed += 1;
        let mut pairs = Vec::new();
        for obj in Objective::ALL {
            match solve_exhaustive(&net, obj, &times, &opts) {
                Ok(oracle) => pairs.push((obj, oracle, solve_exact(&net, obj, &times, &opts).unwrap())),
                Err(SolveError::CeilingExceeded { .. }) => break,
                Err(e) => panic!("seed {}: {e}", seed - 1),
            }
        }
        if pairs.len() < 4 {
            continue;
        }
        instances += 1;
        for (obj, oracle, exact) in pairs {
            if exact.status != oracle.status || exact.objective_value != oracle.objective_value {
                mismatches.push(format!("seed {} {obj}", seed - 1));
            }
            if exact.status == SolveStatus::Optimal {
                audited += 1;
                violations += audit_assignment(&net, &exact.choices, &times, false).len();
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let c1 = check(
        instances >= 100 && mismatches.is_empty() && secs < 60.0,
        format!("{instances} instances x 4 objectives, {} mismatches {:?}, {secs:.1} s", mismatches.len(), mismatches),
    );
    let c2 = check(violations == 0 && audited > 0, format!("{audited} solutions audited, {violations} violations"));
    (c1, c2)
}

fn python_with_highs() -> Option<&'static str> {
    let ok = Command::new("python3").args(["-c", "import highspy"]).output().ok()?.status.success();
    ok.then_some("python3")
}

const HIGHS_SCRIPT: &str = r#"
import sys, highspy
h = highspy.Highs()
h.setOptionValue("output_flag", False)
h.setOptionValue("mip_rel_gap", 0.0)
h.setOptionValue("time_limit", 120.0)
h.readModel(sys.argv[1])
h.run()
print(h.modelStatusToString(h.getModelStatus()), h.getInfo().objective_function_value)
"#;

fn lp_cross_check() -> Verdict {
    let Some(python) = python_with_highs() else {
        return Skip("no external MILP solver (python3 with highspy) found".into());
    };
    let dir = std::env::temp_dir().join(format!("pinet-lp-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let script = dir.join("solve.py");
    std::fs::write(&script, HIGHS_SCRIPT).unwrap();
    let mut lines = Vec::new();
    let mut bad = Vec::new();
    let mut seed = 100u64;
    while lines.len() < 10 {
        let net = random_network(&InstanceShape::default(), seed);
        seed += 1;
        if net.module_total() < 3 {
            continue;
        }
        let obj = Objective::ALL[lines.len() % 4];
        let times = HubTimes::nominal(&net);
        let ours = solve_exact(&net, obj, &times, &SolverOptions::default()).unwrap();
        let file: PathBuf = dir.join(format!("m{seed}.lp"));
        std::fs::write(&file, export_lp(&net, obj, &times, &SolverOptions::default()).unwrap()).unwrap();
        let out = Command::new(python).arg(&script).arg(&file).output().unwrap();
        let text = String::from_utf8_lossy(&out.stdout).to_string();
        let mut parts = text.split_whitespace();
        let status = parts.next().unwrap_or("").to_string();
        let value: f64 = parts.last().and_then(|v| v.parse().ok()).unwrap_or(f64::NAN);
        // the LP measures time in minutes, the solver reports hours
        let theirs = match obj {
            Objective::J2 | Objective::J4 => value / 60.0,
            _ => value,
        };
        let agrees = match ours.status {
            SolveStatus::Infeasible => status == "Infeasible",
            _ => {
                status == "Optimal"
                    && (theirs - ours.objective_f64()).abs() <= 1e-6 * ours.objective_f64().abs().max(1.0)
            }
        };
        if !agrees {
            bad.push(format!(
                "seed {} {obj}: ours {:?} {} vs {status} {theirs}",
                seed - 1,
                ours.status,
                ours.objective_f64()
            ));
        }
        lines.push(());
    }
    let _ = std::fs::remove_dir_all(&dir);
    check(bad.is_empty(), format!("10 instances solved by HiGHS, {} disagreements {:?}", bad.len(), bad))
}

fn ishigami_analytic(a: f64, b: f64) -> [f64; 3] {
    let v1 = 0.5 * (1.0 + b * PI.powi(4) / 5.0).powi(2);
    let v2 = a * a / 8.0;
    let v13 = b * b * PI.powi(8) * (1.0 / 18.0 - 1.0 / 50.0);
    let total = v1 + v2 + v13;
    [v1 / total, v2 / total, 0.0]
}

fn ishigami_factors() -> Vec<Factor> {
    vec![Factor::uniform(-PI, PI); 3]
}

fn ishigami_accuracy() -> Verdict {
    let start = Instant::now();
    let analytic = ishigami_analytic(7.0, 0.1);
    let model = |x: &[f64]| vec![ishigami(x, 7.0, 0.1)];
    let mut mean = [0.0; 3];
    for seed in 0..20 {
        let est = rbd_fast_indices(&model, &ishigami_factors(), 1, 1000, seed, 6).unwrap();
        for (m, s) in mean.iter_mut().zip(&est[0].indices) {
            *m += s / 20.0;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let worst = mean.iter().zip(analytic).map(|(m, a)| (m - a).abs()).fold(0.0, f64::max);
    check(
        worst <= 0.05 && secs < 10.0,
        format!("mean S = {mean:.3?} vs analytic {analytic:.3?}, max error {worst:.3}, {secs:.2} s"),
    )
}

type Case = (&'static str, Box<dyn Fn(&[f64]) -> f64>, Vec<Factor>);

fn oracle_agreement() -> Verdict {
    let cases: Vec<Case> = vec![
        ("ishigami", Box::new(|x: &[f64]| ishigami(x, 7.0, 0.1)), ishigami_factors()),
        (
            "additive",
            Box::new(additive),
            vec![Factor::uniform(0.0, 1.0), Factor::uniform(0.0, 2.0), Factor::uniform(0.0, 3.0)],
        ),
        (
            "product",
            Box::new(product),
            vec![Factor::uniform(0.5, 1.5), Factor::uniform(0.0, 2.0), Factor::uniform(1.0, 4.0)],
        ),
    ];
    let mut worst = 0.0f64;
    let mut details = Vec::new();
    for (name, f, factors) in &cases {
        let oracle = sobol_double_loop_oracle(f.as_ref(), factors, 500, 500, 17).unwrap();
        let rbd = rbd_fast_indices(&|x: &[f64]| vec![f(x)], factors, 1, 2000, 17, 6).unwrap();
        let diff = oracle.iter().zip(&rbd[0].indices).map(|(o, r)| (o - r).abs()).fold(0.0, f64::max);
        worst = worst.max(diff);
        details.push(format!("{name} {diff:.3}"));
    }
    check(worst <= 0.05, format!("max |rbd - oracle| per function: {}", details.join(", ")))
}

fn gsa_c2(sc: &Scenario, n: usize) -> pinet_core::gsa::SensitivityResult {
    let opts = GsaOptions { samples: n, seed: sc.experiment.seed, ..GsaOptions::default() };
    pi_sensitivity_run(&sc.network, Objective::J2, &sc.experiment.distributions, &opts).unwrap()
}

fn relative_std(sc: &Scenario, mode: &SamplingMode, n: usize) -> [f64; 4] {
    let inputs = sample_inputs(&sc.network, &sc.experiment.distributions, n, sc.experiment.seed, mode).unwrap();
    let rows = run_monte_carlo(&sc.network, Objective::J2, &inputs, &SolverOptions::default(), None).unwrap();
    let report = variability_report(Objective::J2, &rows).unwrap();
    report.kpis.map(|k| k.relative_std.unwrap_or(0.0))
}

fn pinet(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_pinet")).args(args).output().is_ok_and(|o| o.status.success())
}

fn read_dir(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .map(|d| {
            d.filter_map(Result::ok)
                .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap_or_default()))
                .collect()
        })
        .unwrap_or_default();
    out.sort();
    out
}

fn determinism() -> Verdict {
    let dir = std::env::temp_dir().join(format!("pinet-det-{}", std::process::id()));
    let scenario = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/bundled.toml");
    let s = scenario.to_str().unwrap();
    let run = |tag: &str, jobs: &str| {
        let out = dir.join(tag);
        let o = out.to_str().unwrap();
        let ok = pinet(&["solve", "--scenario", s, "--objective", "J2", "--out", o])
            && pinet(&[
                "variability",
                "--scenario",
                s,
                "--config",
                "C2",
                "--samples",
                "40",
                "--jobs",
                jobs,
                "--out",
                o,
            ])
            && pinet(&["gsa", "--scenario", s, "--config", "C2", "--samples", "60", "--jobs", jobs, "--out", o]);
        (ok, read_dir(&out))
    };
    let (ok1, a) = run("a", "1");
    let (ok2, b) = run("b", "1");
    let (ok3, c) = run("c", "4");
    let _ = std::fs::remove_dir_all(&dir);
    check(
        ok1 && ok2 && ok3 && !a.is_empty() && a == b && a == c,
        format!("{} files identical across repeated runs and --jobs 1/4", a.len()),
    )
}

fn main() -> ExitCode {
    let mut verdicts: Vec<(u32, &str, Verdict)> = Vec::new();
    let (c1, c2) = random_suite();
    verdicts.push((1, "solver exactness", c1));
    verdicts.push((2, "constraint fidelity", c2));
    verdicts.push((3, "LP cross-check", lp_cross_check()));
    verdicts.push((4, "Ishigami accuracy", ishigami_accuracy()));
    verdicts.push((5, "oracle agreement", oracle_agreement()));

    let sc = bundled();
    let start = Instant::now();
    let g1000 = gsa_c2(&sc, 1000);
    let gsa_secs = start.elapsed().as_secs_f64();
    let g4000 = gsa_c2(&sc, 4000);
    let drift = g1000
        .kpis
        .iter()
        .zip(&g4000.kpis)
        .flat_map(|(a, b)| a.indices.iter().zip(&b.indices).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    verdicts.push((6, "GSA convergence", check(drift <= 0.05, format!("max |S(1000) - S(4000)| = {drift:.4}"))));

    let finding_a: Vec<String> = [0usize, 2]
        .iter()
        .map(|&k| {
            let ns = g1000.index("n_s", k).unwrap();
            let tau = g1000
                .inputs
                .iter()
                .filter(|i| i.starts_with("tau:"))
                .map(|i| g1000.index(i, k).unwrap())
                .fold(f64::MIN, f64::max);
            format!("KPI{}: n_s {ns:.3} vs max tau {tau:.3}", k + 1)
        })
        .collect();
    let a_holds = [0usize, 2].iter().all(|&k| {
        let ns = g1000.index("n_s", k).unwrap();
        g1000.inputs.iter().filter(|i| i.starts_with("tau:")).all(|i| g1000.index(i, k).unwrap() < ns)
    });
    verdicts.push((7, "module counts dominate", check(a_holds, finding_a.join("; "))));

    let all = relative_std(&sc, &SamplingMode::AllVary, 1000);
    let b_holds = [0usize, 2, 3].iter().all(|&j| all[1] < all[j]);
    verdicts.push((8, "KPI2 least variable", check(b_holds, format!("relative std {all:.4?}"))));

    let modules = relative_std(&sc, &SamplingMode::OnlyModuleCounts, 1000);
    let mut worst_hub = [0.0f64; 4];
    for hub in sc.network.nodes_of_kind(pinet_core::NodeKind::PiHub) {
        let r = relative_std(&sc, &SamplingMode::OnlyOneHub(hub.id.clone()), 200);
        for k in 0..4 {
            worst_hub[k] = worst_hub[k].max(r[k]);
        }
    }
    let c_holds = [0usize, 2, 3].iter().all(|&k| modules[k] >= worst_hub[k]);
    verdicts.push((
        9,
        "module counts drive variability",
        check(c_holds, format!("modules-only {modules:.4?} vs max single hub {worst_hub:.4?}")),
    ));

    verdicts.push((10, "determinism", determinism()));

    let times = HubTimes::nominal(&sc.network);
    let mut slowest = 0.0f64;
    let mut proven = true;
    for obj in Objective::ALL {
        let t = Instant::now();
        let sol = solve_exact(&sc.network, obj, &times, &SolverOptions::default()).unwrap();
        slowest = slowest.max(t.elapsed().as_secs_f64());
        proven &= sol.status == SolveStatus::Optimal;
    }
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    verdicts.push((
        11,
        "desk-scale budget",
        check(
            slowest < 10.0 && proven && gsa_secs < 1800.0,
            format!("slowest nominal solve {slowest:.2} s (all proven optimal); C2 GSA N=1000 {gsa_secs:.1} s on {threads} thread(s)"),
        ),
    ));

    let mut failed = 0;
    for (n, name, v) in &verdicts {
        let (tag, detail) = match v {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Skip(d) => ("SKIP", d),
        };
        println!("criterion {n:>2} {tag} {name}: {detail}");
    }

    // not a numbered criterion; reported for comparison with the published split
    let j3 = solve_exact(&sc.network, Objective::J3, &times, &SolverOptions::default()).unwrap();
    if let Some(hub) = modal_split(&sc.network, &j3.choices).hub {
        println!(
            "note: J3 train share at hub arrival {:.1}% (published range 31-39%), at hub departure {:.1}%",
            hub[1], hub[3]
        );
    }

    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
