use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_synergy"));
    c.env_remove("SYNERGY_RULES");
    c
}

fn asset(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn rules_check_reports_counts() {
    let o = run(&["rules", "check", asset("rules/default.rules").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("5 types, 10 rules"), "{}", stdout(&o));
}

#[test]
fn rules_env_var_overrides_default() {
    let o = bin()
        .env("SYNERGY_RULES", asset("rules/table1.rules"))
        .args(["closure", "G(r1)", "G(r2)"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "G(r1)\nG(r2)\nR(r1,r2)\nR(r2,r1)\n");
    let o = run(&["closure", "G(r1)", "G(r2)"]);
    assert!(stdout(&o).contains("C2(r1,r2)"));
}

#[test]
fn compatible_scenario_exits_zero() {
    let o = run(&["compat", "check", asset("scenarios/fig1.json").to_str().unwrap(), "--oracle", "theorem1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("compatible\n"));
    assert!(stdout(&o).contains("oracle theorem1: agrees"));
}

#[test]
fn conflict_prints_witness_triple() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("g.dot");
    let o = run(&[
        "compat",
        "check",
        asset("scenarios/conflict.json").to_str().unwrap(),
        "--oracle",
        "numeric",
        "--graph-dot",
        dot.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("witness: R(r1,r2)"), "{out}");
    assert!(out.contains("{G(r1), G(r2)}") && out.contains("{R(r1,r2)}"), "{out}");
    assert!(std::fs::read_to_string(dot).unwrap().starts_with("digraph"));

    let o = run(&["compat", "check", asset("scenarios/conflict.json").to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["compatible"], false);
    assert_eq!(v["witness"]["instance"], "R(r1,r2)");
}

#[test]
fn usage_and_io_errors_exit_two() {
    assert_eq!(run(&["compat", "check"]).status.code(), Some(2));
    assert_eq!(run(&["compat", "check", "missing.json"]).status.code(), Some(2));
    let fig1 = asset("scenarios/fig1.json");
    assert_eq!(run(&["compat", "check", fig1.to_str().unwrap(), "--frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["experiment", "run", "--mode", "fig9", "--seed", "1", "--out", "x.csv"]).status.code(), Some(2));
    assert_eq!(run(&["closure", "Q(a)"]).status.code(), Some(2));
}

#[test]
fn experiment_run_is_reproducible_and_summarizes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (out, jobs) in [(&a, "1"), (&b, "3")] {
        let o = run(&[
            "experiment", "run", "--mode", "fig3_low", "--seed", "5", "--iters", "6", "--jobs", jobs, "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("iter,seed,vehicles,n_centroid,n_monitor,baseline_assigned,synergy_assigned\n"));
    assert_eq!(text.lines().count(), 7);
    let o = run(&["experiment", "summarize", a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("baseline") && stdout(&o).contains("synergy"));
}

#[test]
fn simulate_writes_deterministic_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let fig1 = asset("scenarios/fig1.json");
    let outs: Vec<String> = (0..2)
        .map(|k| {
            let out = dir.path().join(format!("t{k}.csv"));
            let o = run(&["simulate", fig1.to_str().unwrap(), "--ticks", "20", "--seed", "4", "--out", out.to_str().unwrap()]);
            assert_eq!(o.status.code(), Some(0));
            std::fs::read_to_string(out).unwrap()
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
    assert!(outs[0].starts_with("tick,referent,x,y\n"));
    assert_eq!(outs[0].lines().count(), 1 + 20 * 5);

    let out = dir.path().join("c.csv");
    let o = run(&["simulate", asset("scenarios/conflict.json").to_str().unwrap(), "--ticks", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("witness: R(r1,r2)"));
}
