use std::path::Path;
use std::process::{Command, Output};

use senergy_core::{AveragingParams, Configuration, StepAction, StepGraph, Trace, TraceKind};

fn senergy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_senergy"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Two agents at 0 and 1 with rho = 1/2 must meet at 1/2.
fn forced_pair(after: [f64; 2]) -> Trace {
    let params = AveragingParams::new(0.5, 1e-9).unwrap();
    let mut t = Trace::new(params, 2, TraceKind::Averaging);
    t.push(
        StepAction::Graph(StepGraph::new(2, [(0, 1)]).unwrap()),
        Configuration::from_positions(&[0.0, 1.0]).unwrap(),
        Configuration::from_positions(&after).unwrap(),
    );
    t
}

fn save(trace: &Trace, path: &Path) {
    std::fs::write(path, trace.to_jsonl_bytes().unwrap()).unwrap();
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().to_string()).collect()
}

#[test]
fn certify_forced_pair() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pair.jsonl");
    save(&forced_pair([0.5, 0.5]), &path);
    let ledger = dir.path().join("ledger.csv");
    let o = senergy(&["certify", path.to_str().unwrap(), "--s", "1", "--ledger-csv", ledger.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(column(&out, "spent"), ["1.0"]);
    assert_eq!(column(&out, "injected"), ["4.0"]);
    let flows = std::fs::read_to_string(ledger).unwrap();
    assert_eq!(column(&flows, "d"), ["4.0"]);
}

#[test]
fn verify_names_step_and_agent_of_a_nudged_trace() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.jsonl");
    save(&forced_pair([0.5, 0.5]), &good);
    assert!(senergy(&["verify", good.to_str().unwrap()]).status.success());

    let bad = dir.path().join("bad.jsonl");
    save(&forced_pair([0.5, 0.6]), &bad);
    let o = senergy(&["verify", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("step 0"), "{msg}");
    assert!(msg.contains("agent 1"), "{msg}");

    let o = senergy(&["certify", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn lowerbound_row_is_ordered() {
    let eps = 0.2f64.powi(6).to_string();
    let o = senergy(&["lowerbound", "--n", "3", "--rho", "0.2", "--eps", &eps]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(column(&out, "recurrence"), ["225"]);
    assert_eq!(column(&out, "measured"), ["225"]);
    let upper: f64 = column(&out, "upper")[0].parse().unwrap();
    assert!(225.0 <= upper);
    assert_eq!(column(&out, "ordered"), ["true"]);
}

#[test]
fn simulate_is_deterministic_and_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        "n = 5\nrho = 0.25\npolicy = \"uniform-random\"\ntrials = 3\nsteps_cap = 500\ns = [0.5, 1.0]\neps = [0.001]\n",
    )
    .unwrap();
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = senergy(&["simulate", "--config", config.to_str().unwrap(), "--seed", "11", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push(out);
    }
    for k in 0..3 {
        let name = format!("trace-{k}.jsonl");
        let a = std::fs::read(outputs[0].join(&name)).unwrap();
        let b = std::fs::read(outputs[1].join(&name)).unwrap();
        assert_eq!(a, b);
        let v = senergy(&["verify", outputs[0].join(&name).to_str().unwrap()]);
        assert!(v.status.success(), "{}", stderr(&v));
    }
    assert_eq!(
        std::fs::read(outputs[0].join("report.csv")).unwrap(),
        std::fs::read(outputs[1].join("report.csv")).unwrap()
    );
}

#[test]
fn reduce_writes_a_valid_twist_trace() {
    let dir = tempfile::tempdir().unwrap();
    let o = senergy(&["simulate", "--n", "4", "--seed", "2", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let src = dir.path().join("trace-0.jsonl");
    let o = senergy(&["reduce", src.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = senergy(&["verify", dir.path().join("twist.jsonl").to_str().unwrap()]);
    assert!(v.status.success(), "{}", stderr(&v));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(senergy(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(senergy(&["simulate", "--seed", "x"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "unknown_key = 1\n").unwrap();
    assert_eq!(senergy(&["bounds", "--config", config.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(senergy(&["verify", "/nonexistent/trace.jsonl"]).status.code(), Some(1));
}

#[test]
fn applications_run() {
    let o = senergy(&["opinion", "--n", "4", "--trials", "2", "--format", "jsonl"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).lines().all(|l| l.starts_with('{')));
    let o = senergy(&["kuramoto", "--n", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = senergy(&["bounds", "--n", "4", "--rho", "0.25", "--s", "0.5"]);
    assert!(stdout(&o).contains("4,0.25,energy,0.5,8192.0"));
}
