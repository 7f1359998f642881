//! Factor an averaging step into twist substeps of equal total energy.
//!
//! One substep is produced per nondegenerate interval of the step's
//! interval union, left to right. The substep for interval `I` moves the
//! agents lying in `I` (a contiguous rank range) to the sorted values of
//! their targets and holds everyone else fixed.

use crate::averaging::{validate_averaging_step, AveragingParams};
use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::geometry::interval_union;
use crate::graph::Adjacency;
use crate::trace::{StepAction, Trace, TraceKind};
use crate::twist::{twist_interval, TwistStep};

/// One twist window with rank-ordered positions before and after.
#[derive(Debug, Clone, PartialEq)]
pub struct Substep {
    pub step: TwistStep,
    pub before: Vec<f64>,
    pub after: Vec<f64>,
}

pub fn reduce_step<G: Adjacency + ?Sized>(
    x: &Configuration,
    g: &G,
    y: &Configuration,
    p: &AveragingParams,
) -> Result<Vec<Substep>> {
    let report = validate_averaging_step(x, g, y, p)?;
    if !report.is_ok() {
        return Err(Error::InvalidStep(report));
    }
    let xs = x.positions();
    let mut current = xs.to_vec();
    let mut substeps = Vec::new();
    for iv in interval_union(g, x).into_iter().filter(|iv| !iv.is_degenerate()) {
        let u = xs.partition_point(|&p| p < iv.lo);
        let v = xs.partition_point(|&p| p <= iv.hi) - 1;
        // targets of the agents inside the window, ties broken by id
        let mut targets: Vec<(f64, usize)> = (u..=v)
            .map(|rank| {
                let id = x.label(rank);
                (y.position_of(id), id)
            })
            .collect();
        targets.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut next = current.clone();
        for (slot, (value, _)) in next[u..=v].iter_mut().zip(&targets) {
            *slot = *value;
        }
        substeps.push(Substep {
            step: TwistStep::new(u, v, p.rho)?,
            before: std::mem::replace(&mut current, next.clone()),
            after: next,
        });
    }
    // agents outside every window are held exactly; y may differ from x by the tolerance
    let drift = current
        .iter()
        .zip(y.positions())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if drift > p.tolerance {
        return Err(Error::Trace(format!(
            "reduction ends {drift:e} away from the target configuration"
        )));
    }
    Ok(substeps)
}

/// Replace every step of an averaging (or asymmetric) trace by its twist substeps.
pub fn reduce_trace(trace: &Trace) -> Result<Trace> {
    if trace.kind == TraceKind::Twist {
        return Ok(trace.clone());
    }
    let mut out = Trace::new(trace.params, trace.n, TraceKind::Twist);
    out.stop = trace.stop;
    for rec in &trace.records {
        let substeps = match &rec.action {
            StepAction::Graph(g) => reduce_step(&rec.before, g, &rec.after, &trace.params)?,
            StepAction::Directed { graph, .. } => {
                reduce_step(&rec.before, graph, &rec.after, &trace.params)?
            }
            StepAction::Window(_) => unreachable!("twist records only appear in twist traces"),
        };
        for sub in substeps {
            out.push(
                StepAction::Window(sub.step),
                Configuration::from_sorted(sub.before)?,
                Configuration::from_sorted(sub.after)?,
            );
            if let Some(last) = out.records.last_mut() {
                last.t = rec.t;
            }
        }
    }
    Ok(out)
}

/// Per-agent slack of the twist containment for one substep.
#[derive(Debug, Clone, PartialEq)]
pub struct TaucondReport {
    /// `x_v - ρ(x_v - x_{max(i-1,u)}) - y_i` for each rank in the window.
    pub upper_slack: Vec<f64>,
    /// `y_i - x_u - ρ(x_{min(i+1,v)} - x_u)` for each rank in the window.
    pub lower_slack: Vec<f64>,
}

impl TaucondReport {
    pub fn min_slack(&self) -> f64 {
        self.upper_slack
            .iter()
            .chain(&self.lower_slack)
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.min_slack() >= -tol
    }
}

pub fn verify_taucond(x: &[f64], step: &TwistStep, y: &[f64]) -> Result<TaucondReport> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            found: y.len(),
        });
    }
    let mut upper_slack = Vec::new();
    let mut lower_slack = Vec::new();
    for i in step.u..=step.v {
        let tau = twist_interval(x, step, i)?;
        upper_slack.push(tau.hi - y[i]);
        lower_slack.push(y[i] - tau.lo);
    }
    Ok(TaucondReport {
        upper_slack,
        lower_slack,
    })
}
