//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p senergy-core --test acceptance`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::thread;
use std::time::Instant;

use senergy_core::apps::kuramoto::{kuramoto_step, simulate_kuramoto, KuramotoSimConfig, KuramotoState};
use senergy_core::apps::opinion::{opinion_volume_report, simulate_opinion, OpinionSimConfig, SqueezePolicy};
use senergy_core::digraph::hovering_failures;
use senergy_core::ledger::ineq_sx_slack;
use senergy_core::*;

type Outcome = Result<String, String>;

const S_VALUES: [f64; 3] = [0.25, 0.5, 1.0];
const RHOS: [f64; 3] = [0.1, 0.25, 0.5];
const SEEDS: u64 = 5;
const STEPS_CAP: usize = 10_000;
const EDGE_PROBABILITIES: [f64; SEEDS as usize] = [0.1, 0.2, 0.35, 0.5, 0.8];

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn three_pieces() -> Outcome {
    let x = Configuration::from_positions(&[0.0, 0.2, 0.1, 0.3, 0.7, 0.9, 0.5]).unwrap();
    let g = StepGraph::new(7, [(0, 1), (2, 3), (4, 5)]).unwrap();
    let u = interval_union(&g, &x);
    let want = [Interval::new(0.0, 0.3), Interval::new(0.5, 0.5), Interval::new(0.7, 0.9)];
    ensure(u == want, || format!("union {u:?}"))?;
    let e1 = step_energy(&u, 1.0).unwrap();
    ensure((e1 - 0.5).abs() <= 1e-15, || format!("energy at s=1 is {e1}"))?;
    for s in [0.25, 0.5, 0.75] {
        let e = step_energy(&u, s).unwrap();
        let oracle = 0.3f64.powf(s) + (0.9f64 - 0.7).powf(s);
        ensure((e - oracle).abs() <= 1e-15, || format!("energy at s={s} is {e}, expected {oracle}"))?;
    }
    Ok("3 intervals, energy 0.5 at s=1".into())
}

/// The 525-trial grid shared by criteria 2 to 4.
fn trial_grid() -> Vec<SimConfig> {
    let mut out = Vec::new();
    for n in 2..=8 {
        for rho in RHOS {
            for policy in PolicyKind::ALL {
                for seed in 0..SEEDS {
                    let mut cfg = SimConfig::new(n, rho, policy, seed * 1000 + n as u64);
                    cfg.steps_cap = STEPS_CAP;
                    cfg.edge_probability = EDGE_PROBABILITIES[seed as usize];
                    out.push(cfg);
                }
            }
        }
    }
    out
}

struct TrialSet {
    trials: Vec<(SimConfig, Trace, Trace)>,
}

fn run_trials() -> TrialSet {
    let grid = trial_grid();
    let trials = thread::scope(|sc| {
        let handles: Vec<_> = grid
            .chunks(grid.len().div_ceil(8))
            .map(|chunk| {
                sc.spawn(move || {
                    chunk
                        .iter()
                        .map(|cfg| {
                            let t = simulate(cfg).expect("simulation");
                            let twist = reduce_trace(&t).expect("reduction");
                            (cfg.clone(), t, twist)
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
    });
    TrialSet { trials }
}

fn energy_bound(set: &TrialSet) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut steps = 0;
    for (cfg, t, _) in &set.trials {
        steps += t.len();
        let report = accumulate(t, &S_VALUES).map_err(|e| format!("n={} rho={}: {e}", cfg.n, cfg.rho))?;
        for (k, &s) in S_VALUES.iter().enumerate() {
            let bound = bound_energy(cfg.n, cfg.rho, s).unwrap();
            let e = report.totals[k];
            ensure(e <= bound, || {
                format!("n={} rho={} {:?} seed={} s={s}: energy {e} > bound {bound}", cfg.n, cfg.rho, cfg.policy, cfg.seed)
            })?;
            worst = worst.max(e / bound);
        }
    }
    Ok(format!(
        "{} trials, {} steps, largest energy/bound ratio {worst:.3e}",
        set.trials.len(),
        steps
    ))
}

fn ledger_certificate(set: &TrialSet) -> Outcome {
    let mut cleared = 0;
    let mut worst_residual: f64 = 0.0;
    for (cfg, _, twist) in &set.trials {
        for s in S_VALUES {
            let c = certify_trace(twist, s).map_err(|e| {
                format!("n={} rho={} {:?} seed={} s={s}: {e}", cfg.n, cfg.rho, cfg.policy, cfg.seed)
            })?;
            ensure(c.max_conservation_residual <= 1e-9, || {
                format!("n={} rho={} s={s}: conservation residual {:e}", cfg.n, cfg.rho, c.max_conservation_residual)
            })?;
            ensure(c.spent <= c.injected, || format!("spent {} > injected {}", c.spent, c.injected))?;
            cleared += c.steps_cleared;
            worst_residual = worst_residual.max(c.max_conservation_residual);
        }
    }
    Ok(format!(
        "{cleared} clearing passes, no negative leftover or unpaid step, max conservation residual {worst_residual:.1e}"
    ))
}

fn reduction_exact(set: &TrialSet) -> Outcome {
    let mut substeps = 0;
    let mut worst: f64 = 0.0;
    for (cfg, t, twist) in &set.trials {
        let mut sub = twist.records.iter().peekable();
        for rec in &t.records {
            let StepAction::Graph(g) = &rec.action else { unreachable!() };
            let pieces = interval_union(g, &rec.before);
            let mut sums = [0.0; 3];
            while let Some(w) = sub.next_if(|w| w.t == rec.t) {
                let StepAction::Window(step) = &w.action else { unreachable!() };
                let (x, y) = (w.before.positions(), w.after.positions());
                let report = validate_twist_step(x, step, y, t.params.tolerance).unwrap();
                ensure(report.is_ok(), || {
                    format!("n={} rho={} step {}: substep fails twist validation {:?}", cfg.n, cfg.rho, rec.t, report.violations)
                })?;
                for (k, &s) in S_VALUES.iter().enumerate() {
                    sums[k] += twist_step_energy(x, step, s).unwrap();
                }
                substeps += 1;
            }
            for (k, &s) in S_VALUES.iter().enumerate() {
                let direct = step_energy(&pieces, s).unwrap();
                let err = (sums[k] - direct).abs();
                ensure(err <= 1e-12 * direct, || {
                    format!("n={} rho={} step {} s={s}: substeps {} vs step {}", cfg.n, cfg.rho, rec.t, sums[k], direct)
                })?;
                if direct > 0.0 {
                    worst = worst.max(err / direct);
                }
            }
        }
        ensure(sub.next().is_none(), || "substeps left over".into())?;
    }
    Ok(format!("{substeps} substeps, max relative energy error {worst:.1e}"))
}

fn inequality_grid() -> Outcome {
    let mut min_slack = f64::INFINITY;
    for i in 0..1000 {
        let s = i as f64 / 999.0;
        for j in 0..1000 {
            let x = j as f64 / 999.0;
            let slack = ineq_sx_slack(s, x);
            ensure(slack >= -1e-15, || format!("s={s} x={x}: slack {slack:e}"))?;
            min_slack = min_slack.min(slack);
        }
    }
    Ok(format!("10^6 points, min slack {min_slack:.1e}"))
}

fn sandwich_check() -> Outcome {
    let mut notes = Vec::new();
    for n in [2usize, 3, 4] {
        for rho in [0.1f64, 0.2, 1.0 / 3.0] {
            let eps = rho.powi(2 * n as i32);
            let (row, trace) = sandwich(n, rho, eps).map_err(|e| e.to_string())?;
            ensure(row.is_ordered(), || format!("out of order: {}", row.to_csv()))?;
            let mut strict = trace.clone();
            strict.params.tolerance = 0.0;
            ensure(strict.first_violation().unwrap().is_none(), || {
                format!("construction n={n} rho={rho} has an invalid step")
            })?;
            // steps shorter than eps must be collapses onto a single point
            for r in &trace.records {
                let StepAction::Graph(g) = &r.action else { unreachable!() };
                let longest = g
                    .edges()
                    .map(|(i, j)| (r.before.position_of(i) - r.before.position_of(j)).abs())
                    .fold(0.0, f64::max);
                if longest < eps {
                    let mut ends = g.edges().flat_map(|(i, j)| [i, j]).map(|i| r.after.position_of(i));
                    let first = ends.next().unwrap();
                    ensure(ends.all(|p| p == first), || {
                        format!("n={n} rho={rho} step {}: short step is not a collapse", r.t)
                    })?;
                }
            }
        }
    }
    for rho in [0.1f64, 0.2, 1.0 / 3.0] {
        for k in [4, 8, 16] {
            let eps: f64 = rho.powi(k);
            let t = lb_trajectory(2, rho, eps).map_err(|e| e.to_string())?;
            let measured = comm_count(&t, eps).unwrap();
            let scale = (1.0 / rho) * (1.0f64 / eps).ln();
            let ratio = measured as f64 / scale;
            ensure((0.1..=10.0).contains(&ratio), || {
                format!("n=2 rho={rho} eps=rho^{k}: count {measured} vs {scale:.1}")
            })?;
            if t.stop == StopReason::Resolution {
                let ideal = lb_recurrence_b(2, eps, rho).unwrap();
                notes.push(format!("rho={rho:.3} eps=rho^{k} hit f64 resolution at {measured}/{ideal} steps"));
            }
        }
    }
    let mut msg = "9 cells ordered lower <= measured <= upper, n=2 ratios within [0.1, 10]".to_string();
    if !notes.is_empty() {
        msg.push_str(&format!(" ({})", notes.join("; ")));
    }
    Ok(msg)
}

fn cut_balanced() -> Outcome {
    let mut hover_failures = 0usize;
    let mut tied_cuts = 0usize;
    let mut windows = 0usize;
    let mut count = 0;
    for k in 0..300u64 {
        let kind = if k < 200 { StochasticKind::TypeSymmetric } else { StochasticKind::CutBalanced };
        let cfg = StochasticSimConfig {
            n: 2 + (k % 5) as usize,
            kind,
            floor: [0.1, 0.25, 0.5][(k / 5 % 3) as usize],
            edge_probability: 0.5,
            steps_cap: 5000,
            diameter_cutoff: 1e-12,
            seed: 7000 + k,
        };
        let t = simulate_stochastic(&cfg).map_err(|e| e.to_string())?;
        let label = format!("{kind:?} n={} floor={} seed={}", cfg.n, cfg.floor, cfg.seed);
        ensure(t.first_violation().unwrap().is_none(), || format!("{label}: step constraint check failed"))?;
        for r in &t.records {
            let StepAction::Directed { graph, matrix } = &r.action else { unreachable!() };
            ensure(is_cut_balanced(graph), || format!("{label}: step {} not cut-balanced", r.t))?;
            if kind == StochasticKind::TypeSymmetric {
                let m = matrix.as_ref().unwrap();
                ensure(is_type_symmetric(m), || format!("{label}: step {} not type-symmetric", r.t))?;
            }
            for piece in interval_union(graph, &r.before).iter().filter(|p| !p.is_degenerate()) {
                let xs = r.before.positions();
                let u = xs.partition_point(|&p| p < piece.lo);
                let v = xs.partition_point(|&p| p <= piece.hi) - 1;
                windows += 1;
                for cut in hovering_failures(graph, &r.before, u, v) {
                    if xs[cut] > xs[cut - 1] {
                        hover_failures += 1;
                    } else {
                        tied_cuts += 1;
                    }
                }
            }
        }
        let report = accumulate(&t, &S_VALUES).unwrap();
        for (i, &s) in S_VALUES.iter().enumerate() {
            let bound = bound_energy(cfg.n, t.params.rho, s).unwrap();
            ensure(report.totals[i] <= bound, || format!("{label}: energy {} > {bound} at s={s}", report.totals[i]))?;
        }
        certify_trace(&t, 0.5).map_err(|e| format!("{label}: {e}"))?;
        if kind == StochasticKind::TypeSymmetric {
            count += 1;
        }
    }
    Ok(format!(
        "{count} type-symmetric + 100 directed-cycle trajectories valid, certified and within bound; \
         {windows} windows, {hover_failures} unhovered cuts with a positive gap, {tied_cuts} between tied agents"
    ))
}

fn opinion() -> Outcome {
    let mut steps = 0;
    for k in 0..100usize {
        let d = [1, 2, 3][k % 3];
        let n = [3, 4, 5][k / 3 % 3];
        let alpha = [0.25, 0.5, 1.0][k / 9 % 3];
        let policy = SqueezePolicy::ALL[k / 27 % 3];
        let cfg = OpinionSimConfig::new(n, d, alpha, policy, 500 + k as u64);
        let tr = simulate_opinion(&cfg).map_err(|e| e.to_string())?;
        let label = format!("d={d} n={n} alpha={alpha} {policy:?}");
        steps += tr.records.len();
        if let Some((t, axis, report)) = tr.first_axis_violation(1e-12).unwrap() {
            return Err(format!("{label}: step {t} axis {axis}: {report}"));
        }
        for s in [1.0 / (2.0 * d as f64), 1.0 / d as f64] {
            let r = opinion_volume_report(&tr, s, 1e-6).unwrap();
            ensure(r.volume_energy <= r.bound, || format!("{label} s={s}: {} > {}", r.volume_energy, r.bound))?;
            ensure(r.volume_energy <= r.holder_rhs * (1.0 + 1e-12), || {
                format!("{label} s={s}: Hölder fails, {} > {}", r.volume_energy, r.holder_rhs)
            })?;
        }
    }
    Ok(format!("100 trials, {steps} squeezes, volume energy within bound and Hölder"))
}

fn kuramoto() -> Outcome {
    let st = KuramotoState::new(vec![0.0, PI / 3.0], 1.0, 0.5, 0.1).unwrap();
    let out = kuramoto_step(&st, &StepGraph::new(2, [(0, 1)]).unwrap()).unwrap();
    let oracle = 0.25 * (PI / 3.0).sin();
    ensure((out.state.thetas[0] - oracle).abs() <= 1e-9, || format!("theta_1' = {}", out.state.thetas[0]))?;
    ensure((out.state.thetas[0] - 0.21651).abs() <= 1e-5, || format!("theta_1' = {}", out.state.thetas[0]))?;
    let mut flagged = 0;
    let mut min_rho = f64::INFINITY;
    for k in 0..100u64 {
        let n = 2 + (k % 5) as usize;
        let dt = 0.2 + 0.8 * ((k / 5) % 5) as f64 / 4.0;
        let alpha = 0.1 + 0.2 * (k / 25) as f64;
        let tr = simulate_kuramoto(&KuramotoSimConfig::new(n, 1.0, dt, alpha, 900 + k)).map_err(|e| e.to_string())?;
        flagged += tr.flagged_steps().len();
        min_rho = tr.records.iter().filter_map(|r| r.rho_eff).fold(min_rho, f64::min);
    }
    Ok(format!(
        "theta_1' = {:.5}; 100 random runs, {flagged} half-circle violations, min measured rho_eff {min_rho:.3}",
        out.state.thetas[0]
    ))
}

fn determinism() -> Outcome {
    for policy in PolicyKind::ALL {
        let mut cfg = SimConfig::new(6, 0.25, policy, 20260101);
        cfg.steps_cap = 500;
        let a = simulate(&cfg).unwrap().to_jsonl_bytes().unwrap();
        let b = simulate(&cfg).unwrap().to_jsonl_bytes().unwrap();
        ensure(a == b, || format!("{policy:?}: traces differ"))?;
        let back = Trace::read_jsonl(&a[..]).unwrap().to_jsonl_bytes().unwrap();
        ensure(a == back, || format!("{policy:?}: re-encoding differs"))?;
    }
    let cfg = StochasticSimConfig {
        n: 5,
        kind: StochasticKind::CutBalanced,
        floor: 0.25,
        edge_probability: 0.5,
        steps_cap: 500,
        diameter_cutoff: 1e-12,
        seed: 11,
    };
    let a = simulate_stochastic(&cfg).unwrap().to_jsonl_bytes().unwrap();
    let b = simulate_stochastic(&cfg).unwrap().to_jsonl_bytes().unwrap();
    ensure(a == b, || "stochastic traces differ".into())?;
    Ok("identical bytes for all policies and the stochastic runner".into())
}

fn main() -> ExitCode {
    let start = Instant::now();
    let set = run_trials();
    let setup = start.elapsed();
    let checks: Vec<(&str, Box<dyn Fn() -> Outcome + Sync + '_>)> = vec![
        ("three-piece union and energy", Box::new(three_pieces)),
        ("energy within the closed-form bound", Box::new(|| energy_bound(&set))),
        ("ledger certificate", Box::new(|| ledger_certificate(&set))),
        ("reduction exactness", Box::new(|| reduction_exact(&set))),
        ("1 - (1-x)^s >= sx grid", Box::new(inequality_grid)),
        ("lower/upper sandwich", Box::new(sandwich_check)),
        ("cut-balanced stochastic steps", Box::new(cut_balanced)),
        ("opinion box squeeze", Box::new(opinion)),
        ("Kuramoto oscillators", Box::new(kuramoto)),
        ("determinism", Box::new(determinism)),
    ];
    let results: Vec<(Outcome, f64)> = thread::scope(|sc| {
        let handles: Vec<_> = checks
            .iter()
            .map(|(_, f)| {
                sc.spawn(move || {
                    let t = Instant::now();
                    let r = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f))
                        .unwrap_or_else(|_| Err("panicked".into()));
                    (r, t.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    println!("acceptance ({} trajectories generated in {:.1}s)", set.trials.len(), setup.as_secs_f64());
    let mut failed = 0;
    for (k, ((name, _), (res, secs))) in checks.iter().zip(&results).enumerate() {
        match res {
            Ok(detail) => println!("criterion {:>2} PASS  {name} [{secs:.1}s]: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} [{secs:.1}s]: {detail}", k + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", checks.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
