use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pinet_core::generator::{random_network, InstanceShape};
use pinet_core::scenario::{to_toml, ExperimentConfig, Scenario};
use pinet_core::{solve_exact, HubTimes, Objective, SolverOptions};

fn pinet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pinet")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write_scenario(dir: &Path, seed: u64) -> PathBuf {
    let network = random_network(&InstanceShape::default(), seed);
    let experiment = ExperimentConfig { samples: 40, seed: 9, ..ExperimentConfig::default() };
    let path = dir.join(format!("s{seed}.toml"));
    std::fs::write(&path, to_toml(&Scenario { network, experiment })).unwrap();
    path
}

/// First generated instance whose nominal J2 solve is feasible
/// (or infeasible) as requested.
fn find_seed(feasible: bool) -> u64 {
    (0..1000)
        .find(|&seed| {
            let net = random_network(&InstanceShape::default(), seed);
            let sol = solve_exact(&net, Objective::J2, &HubTimes::nominal(&net), &SolverOptions::default()).unwrap();
            net.module_total() > 2 && sol.choices.is_empty() != feasible
        })
        .expect("generator yields both kinds")
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&pinet(&["--help"])), 0);
    assert_eq!(code(&pinet(&["--version"])), 0);
    assert_eq!(code(&pinet(&["frobnicate"])), 1);
    assert_eq!(code(&pinet(&["solve"])), 1);
    assert_eq!(code(&pinet(&["solve", "--scenario", "/nonexistent.toml"])), 1);
}

#[test]
fn validate_lists_violations() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_scenario(dir.path(), 1);
    assert_eq!(code(&pinet(&["validate", "--scenario", good.to_str().unwrap()])), 0);

    let text = std::fs::read_to_string(&good).unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, text.replacen("capacity = ", "capacity = -", 1)).unwrap();
    let out = pinet(&["validate", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("capacity"));
}

#[test]
fn solve_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(dir.path(), find_seed(true));
    let out = dir.path().join("out");
    let r = pinet(&["solve", "--scenario", sc.to_str().unwrap(), "--objective", "J3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let names: Vec<String> = files(&out).into_iter().map(|f| f.0).collect();
    assert_eq!(names, ["kpis.csv", "modal_split.csv", "routing.csv"]);
    let kpis = std::fs::read_to_string(out.join("kpis.csv")).unwrap();
    assert!(kpis.starts_with("key,value,unit\nobjective,J3,\nstatus,optimal,"));

    let json = dir.path().join("json");
    let r = pinet(&[
        "solve",
        "--scenario",
        sc.to_str().unwrap(),
        "--config",
        "C3",
        "--format",
        "json",
        "--out",
        json.to_str().unwrap(),
    ]);
    assert_eq!(code(&r), 0);
    let parsed: serde_json::Value = serde_json::from_slice(&std::fs::read(json.join("kpis.json")).unwrap()).unwrap();
    assert_eq!(parsed["objective"], "J3");
}

#[test]
fn infeasible_scenario_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(dir.path(), find_seed(false));
    let r = pinet(&[
        "solve",
        "--scenario",
        sc.to_str().unwrap(),
        "--objective",
        "J2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&r), 2);
}

#[test]
fn experiment_argument_checks() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(dir.path(), find_seed(true));
    let s = sc.to_str().unwrap();
    assert_eq!(code(&pinet(&["variability", "--scenario", s, "--samples", "1"])), 1);
    assert_eq!(code(&pinet(&["gsa", "--scenario", s, "--harmonics", "0"])), 1);
    assert_eq!(code(&pinet(&["gsa", "--scenario", s, "--samples", "10"])), 1);
    assert_eq!(code(&pinet(&["variability", "--scenario", s, "--mode", "sideways"])), 1);
    assert_eq!(code(&pinet(&["variability", "--scenario", s, "--config", "C7"])), 1);
}

#[test]
fn outputs_do_not_depend_on_jobs() {
    let dir = tempfile::tempdir().unwrap();
    // an instance whose samples stay feasible for every configuration
    let sc = (0..200)
        .map(|seed| write_scenario(dir.path(), seed))
        .find(|p| {
            let p = p.to_str().unwrap();
            let probe = dir.path().join("probe");
            code(&pinet(&["variability", "--scenario", p, "--all-configs", "--out", probe.to_str().unwrap()])) == 0
        })
        .unwrap();
    let s = sc.to_str().unwrap();
    let run = |jobs: &str| {
        let out = dir.path().join(format!("jobs{jobs}"));
        let o = out.to_str().unwrap();
        for cmd in ["variability", "gsa"] {
            let r = pinet(&[cmd, "--scenario", s, "--all-configs", "--samples", "40", "--jobs", jobs, "--out", o]);
            assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
        }
        files(&out)
    };
    let one = run("1");
    assert_eq!(one.len(), 4 * 5);
    assert!(one.iter().any(|(n, _)| n == "radar_C4.json"));
    assert_eq!(one, run("3"));
    assert_eq!(one, run("1"));
}

#[test]
fn lp_export_to_file_and_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(dir.path(), find_seed(true));
    let s = sc.to_str().unwrap();
    let stdout = pinet(&["export-lp", "--scenario", s, "--objective", "J4"]);
    assert_eq!(code(&stdout), 0);
    let r = pinet(&["export-lp", "--scenario", s, "--objective", "J4", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&r), 0);
    assert_eq!(std::fs::read(dir.path().join("model_J4.lp")).unwrap(), stdout.stdout);
}
