use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::thread;

use anyhow::{Context, Result};
use serde_json::{json, Value};

use senergy_core::apps::kuramoto::{kuramoto_sync_report, simulate_kuramoto, KuramotoSimConfig};
use senergy_core::apps::opinion::{opinion_volume_report, simulate_opinion, OpinionSimConfig};
use senergy_core::trace::RecordViolation;
use senergy_core::{
    accumulate, bound_comm, bound_energy, bound_injection, certify_trace_with, comm_count, lb_closedform_b,
    lb_recurrence_a, lb_recurrence_b, reduce_trace, sandwich, simulate as run_averaging, simulate_stochastic,
    SimConfig, StepAction, StochasticSimConfig, Trace,
};

use crate::config::Config;
use crate::table::{Format, Table};

/// A trace or certificate failed; maps to exit status 2.
#[derive(Debug)]
pub struct Violation(pub String);

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Violation {}

fn violation(msg: String) -> anyhow::Error {
    anyhow::Error::new(Violation(msg))
}

/// Runs `f` for every trial index on a fixed pool; results come back in index order.
fn run_trials<T, F>(count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let workers = thread::available_parallelism().map_or(1, |p| p.get()).min(count).max(1);
    let f = &f;
    thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || (w..count).step_by(workers).map(|k| (k, f(k))).collect::<Vec<_>>())
            })
            .collect();
        let mut all: Vec<(usize, Result<T>)> = handles
            .into_iter()
            .flat_map(|h| h.join().expect("trial thread panicked"))
            .collect();
        all.sort_by_key(|(k, _)| *k);
        all.into_iter().map(|(_, r)| r).collect()
    })
}

fn out_path(out: &Path, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    Ok(out.join(name))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

/// Print `table` and, with an output directory, also save it as `name.<ext>`.
fn emit(table: &Table, name: &str, out: Option<&Path>, format: Format) -> Result<()> {
    table.write(format, io::stdout().lock())?;
    if let Some(dir) = out {
        let mut w = create(&out_path(dir, &format!("{name}.{}", format.extension()))?)?;
        table.write(format, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn read_trace(path: &Path) -> Result<Trace> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Trace::read_jsonl(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn require_valid(trace: &Trace) -> Result<()> {
    match trace.first_violation()? {
        None => Ok(()),
        Some(RecordViolation::Averaging { t, report }) => Err(violation(format!("step {t}: {report}"))),
        Some(RecordViolation::Twist { t, report }) => {
            Err(violation(format!("step {t}: {:?}", report.violations)))
        }
        Some(RecordViolation::Chain { t }) => Err(violation(format!(
            "step {t}: starting configuration differs from the previous step's result"
        ))),
    }
}

fn stop_name(trace: &Trace) -> Value {
    serde_json::to_value(trace.stop).unwrap_or(Value::Null)
}

pub fn simulate(cfg: &Config, out: Option<&Path>, format: Format) -> Result<()> {
    let eps = cfg.eps_or_default();
    let traces = run_trials(cfg.trials, |k| {
        let seed = cfg.seed.wrapping_add(k as u64);
        let trace = match cfg.dynamics.stochastic() {
            None => {
                let mut sim = SimConfig::new(cfg.n, cfg.rho, cfg.policy, seed);
                sim.tolerance = cfg.tolerance;
                sim.edge_probability = cfg.edge_probability;
                sim.steps_cap = cfg.steps_cap;
                sim.diameter_cutoff = cfg.diameter_cutoff;
                run_averaging(&sim)?
            }
            Some(kind) => simulate_stochastic(&StochasticSimConfig {
                n: cfg.n,
                kind,
                floor: cfg.floor,
                edge_probability: cfg.edge_probability,
                steps_cap: cfg.steps_cap,
                diameter_cutoff: cfg.diameter_cutoff,
                seed,
            })?,
        };
        Ok((seed, trace))
    })?;

    let mut table = Table::new(&["trial", "seed", "steps", "stop", "kind", "param", "value", "bound"]);
    for (k, (seed, trace)) in traces.iter().enumerate() {
        if let Some(dir) = out {
            let mut w = create(&out_path(dir, &format!("trace-{k}.jsonl"))?)?;
            trace.write_jsonl(&mut w)?;
            w.flush()?;
        }
        let rho = trace.params.rho;
        let report = accumulate(trace, &cfg.s)?;
        let head = [json!(k), json!(seed), json!(trace.len()), stop_name(trace)];
        for (&s, &total) in report.s_values.iter().zip(&report.totals) {
            let mut row = head.to_vec();
            row.extend([json!("energy"), json!(s), json!(total), json!(bound_energy(cfg.n, rho, s)?)]);
            table.push(row);
        }
        for &e in &eps {
            let mut row = head.to_vec();
            let bound = bound_comm(cfg.n, rho, e)?.bound;
            row.extend([json!("comm"), json!(e), json!(comm_count(trace, e)?), json!(bound)]);
            table.push(row);
        }
    }
    emit(&table, "report", out, format)
}

pub fn verify(path: &Path) -> Result<()> {
    let trace = read_trace(path)?;
    require_valid(&trace)?;
    println!("ok: {} steps valid", trace.len());
    Ok(())
}

pub fn reduce(path: &Path, out: Option<&Path>) -> Result<()> {
    let trace = read_trace(path)?;
    require_valid(&trace)?;
    let twist = reduce_trace(&trace)?;
    match out {
        Some(dir) => {
            let mut w = create(&out_path(dir, "twist.jsonl")?)?;
            twist.write_jsonl(&mut w)?;
            w.flush()?;
            println!("{} steps reduced to {} twist substeps", trace.len(), twist.len());
        }
        None => twist.write_jsonl(io::stdout().lock())?,
    }
    Ok(())
}

pub fn certify(
    path: &Path,
    s_values: &[f64],
    ledger_csv: Option<&Path>,
    out: Option<&Path>,
    format: Format,
) -> Result<()> {
    let trace = read_trace(path)?;
    require_valid(&trace)?;
    let n = trace.n;
    let rho = trace.params.rho;
    let mut summary_table = Table::new(&[
        "s",
        "a",
        "injected",
        "spent",
        "accounts_total",
        "slack_discarded",
        "steps_cleared",
        "max_conservation_residual",
        "min_account_slack",
        "injection_bound",
    ]);
    let mut flows = Table::new(&["s", "step", "u", "v", "i", "j", "b", "c", "d", "b_next"]);
    for &s in s_values {
        let mut cleared = 0usize;
        let result = certify_trace_with(&trace, s, |t, record| {
            cleared += 1;
            if ledger_csv.is_some() {
                for p in &record.pairs {
                    flows.push(vec![
                        json!(s),
                        json!(t),
                        json!(record.step.u),
                        json!(record.step.v),
                        json!(p.i),
                        json!(p.j),
                        json!(p.b),
                        json!(p.c),
                        json!(p.d),
                        json!(p.b_next),
                    ]);
                }
            }
        });
        let summary = match result {
            Ok(summary) => summary,
            Err(e) => {
                let twist = reduce_trace(&trace)?;
                let location = match twist.records.get(cleared) {
                    Some(rec) => match &rec.action {
                        StepAction::Window(w) => format!("step {} (window {}..={})", rec.t, w.u, w.v),
                        _ => format!("step {}", rec.t),
                    },
                    None => "end of trace".to_string(),
                };
                return Err(violation(format!("certificate failed at s = {s}, {location}: {e}")));
            }
        };
        let bound = if n >= 2 { bound_injection(n, s, rho)?.sum } else { 0.0 };
        summary_table.push(vec![
            json!(s),
            json!(summary.a),
            json!(summary.injected),
            json!(summary.spent),
            json!(summary.accounts_total),
            json!(summary.slack_discarded),
            json!(summary.steps_cleared),
            json!(summary.max_conservation_residual),
            json!(summary.min_account_slack),
            json!(bound),
        ]);
        if summary.spent > summary.injected * (1.0 + 1e-12) {
            return Err(violation(format!(
                "spent {} exceeds injected {} at s = {s}",
                summary.spent, summary.injected
            )));
        }
    }
    if let Some(p) = ledger_csv {
        let mut w = create(p)?;
        flows.write(Format::Csv, &mut w)?;
        w.flush()?;
    }
    emit(&summary_table, "certificate", out, format)
}

pub fn bounds(cfg: &Config, out: Option<&Path>, format: Format) -> Result<()> {
    let (n, rho) = (cfg.n, cfg.rho);
    let mut table = Table::new(&["n", "rho", "kind", "param", "value"]);
    let mut row = |kind: &str, param: f64, value: Value| {
        table.push(vec![json!(n), json!(rho), json!(kind), json!(param), value]);
    };
    for &s in &cfg.s {
        row("energy", s, json!(bound_energy(n, rho, s)?));
        if n >= 2 {
            if let Ok(inj) = bound_injection(n, s, rho) {
                row("injection", s, json!(inj.sum));
            }
            if let Ok(lower) = lb_recurrence_a(n, s, rho) {
                row("energy_lower", s, json!(lower));
            }
        }
    }
    for &e in &cfg.eps_or_default() {
        let comm = bound_comm(n, rho, e)?;
        row("comm", e, json!(comm.bound));
        row("comm_asymptotic_large_eps", e, json!(comm.asymptotic_large_eps));
        row("comm_asymptotic_small_eps", e, json!(comm.asymptotic_small_eps));
        if let Ok(lower) = lb_recurrence_b(n, e, rho) {
            row("comm_lower", e, json!(lower));
        }
    }
    emit(&table, "bounds", out, format)
}

pub fn lowerbound(cfg: &Config, out: Option<&Path>, format: Format) -> Result<()> {
    let (n, rho) = (cfg.n, cfg.rho);
    let eps = cfg.eps.clone().unwrap_or_else(|| vec![rho.powi(2 * n as i32)]);
    let rows = run_trials(eps.len(), |k| sandwich(n, rho, eps[k]).map_err(Into::into))?;
    let mut table = Table::new(&[
        "n",
        "rho",
        "eps",
        "recurrence",
        "measured",
        "upper",
        "fitted_ratio",
        "closed_form",
        "ordered",
    ]);
    let mut disordered = Vec::new();
    for (k, (row, trace)) in rows.iter().enumerate() {
        if let Some(dir) = out {
            let mut w = create(&out_path(dir, &format!("lowerbound-{k}.jsonl"))?)?;
            trace.write_jsonl(&mut w)?;
            w.flush()?;
        }
        let closed = lb_closedform_b(n, row.eps, rho).ok().map(|c| c.product);
        table.push(vec![
            json!(row.n),
            json!(row.rho),
            json!(row.eps),
            json!(row.recurrence),
            json!(row.measured),
            json!(row.upper),
            json!(row.fitted_ratio),
            json!(closed),
            json!(row.is_ordered()),
        ]);
        if !row.is_ordered() {
            disordered.push(row.eps);
        }
    }
    emit(&table, "lowerbound", out, format)?;
    if !disordered.is_empty() {
        return Err(violation(format!("lower <= measured <= upper fails at eps = {disordered:?}")));
    }
    Ok(())
}

pub fn opinion(cfg: &Config, out: Option<&Path>, format: Format) -> Result<()> {
    let eps = cfg.eps_or_default();
    let s_max = 1.0 / cfg.d.max(1) as f64;
    let mut s_values: Vec<f64> = cfg.s.iter().copied().filter(|&s| s <= s_max).collect();
    if s_values.is_empty() {
        s_values.push(s_max);
    }
    let traces = run_trials(cfg.trials, |k| {
        let seed = cfg.seed.wrapping_add(k as u64);
        let mut sim = OpinionSimConfig::new(cfg.n, cfg.d, cfg.alpha, cfg.squeeze, seed);
        sim.steps_cap = cfg.steps_cap;
        sim.spread_cutoff = cfg.diameter_cutoff;
        Ok((seed, simulate_opinion(&sim)?))
    })?;
    let mut table = Table::new(&[
        "trial",
        "seed",
        "steps",
        "s",
        "eps",
        "volume_energy",
        "bound",
        "holder_rhs",
        "count",
        "count_bound",
    ]);
    for (k, (seed, trace)) in traces.iter().enumerate() {
        if let Some(dir) = out {
            let mut w = create(&out_path(dir, &format!("opinion-{k}.jsonl"))?)?;
            trace.write_jsonl(&mut w)?;
            w.flush()?;
        }
        if let Some((t, axis, report)) = trace.first_axis_violation(cfg.tolerance)? {
            return Err(violation(format!("trial {k} step {t} axis {axis}: {report}")));
        }
        for &s in &s_values {
            for &e in &eps {
                let r = opinion_volume_report(trace, s, e)?;
                table.push(vec![
                    json!(k),
                    json!(seed),
                    json!(trace.records.len()),
                    json!(s),
                    json!(e),
                    json!(r.volume_energy),
                    json!(r.bound),
                    json!(r.holder_rhs),
                    json!(r.count),
                    json!(r.count_bound),
                ]);
            }
        }
    }
    emit(&table, "opinion", out, format)
}

pub fn kuramoto(cfg: &Config, out: Option<&Path>, format: Format) -> Result<()> {
    let eps = cfg.eps_or_default();
    let traces = run_trials(cfg.trials, |k| {
        let seed = cfg.seed.wrapping_add(k as u64);
        let mut sim = KuramotoSimConfig::new(cfg.n, cfg.coupling, cfg.dt, cfg.alpha_margin, seed);
        sim.edge_probability = cfg.edge_probability;
        sim.steps_cap = cfg.steps_cap;
        sim.sync_cutoff = cfg.diameter_cutoff;
        Ok((seed, simulate_kuramoto(&sim)?))
    })?;
    let mut table = Table::new(&[
        "trial",
        "seed",
        "steps",
        "eps",
        "count",
        "rho_eff",
        "reference",
        "in_regime",
        "flagged_steps",
    ]);
    for (k, (seed, trace)) in traces.iter().enumerate() {
        if let Some(dir) = out {
            let mut w = create(&out_path(dir, &format!("kuramoto-{k}.jsonl"))?)?;
            trace.write_jsonl(&mut w)?;
            w.flush()?;
        }
        let flagged = trace.flagged_steps();
        if let Some(t) = flagged.first() {
            eprintln!(
                "warning: trial {k} left the half-circle at step {t} ({} steps flagged)",
                flagged.len()
            );
        }
        for &e in &eps {
            let r = kuramoto_sync_report(trace, e)?;
            table.push(vec![
                json!(k),
                json!(seed),
                json!(trace.records.len()),
                json!(e),
                json!(r.count),
                json!(r.rho_eff),
                json!(r.reference),
                json!(r.in_regime),
                json!(r.flagged_steps.len()),
            ]);
        }
    }
    emit(&table, "kuramoto", out, format)
}
