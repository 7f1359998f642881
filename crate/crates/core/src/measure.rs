//! s-energy accumulation, communication counts, and the closed-form bounds.

use crate::error::{check_rho, check_s, Error, Result};
use crate::geometry::{interval_union, pow_s, Interval};
use crate::trace::{RecordViolation, StepAction, StopReason, Trace, TraceRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub s_values: Vec<f64>,
    /// Total per entry of `s_values`.
    pub totals: Vec<f64>,
    /// `partial_sums[k][t]` is the energy for `s_values[k]` through record `t`.
    pub partial_sums: Vec<Vec<f64>>,
    /// `(ε, count)` pairs, filled by [`EnergyReport::with_comm_counts`].
    pub comm_counts: Vec<(f64, u64)>,
    /// Number of records measured when the horizon was cut short.
    pub truncated_at: Option<u64>,
    pub diameter_final: f64,
}

/// Lengths of the union pieces a record contributes, and its longest link.
fn record_footprint(rec: &TraceRecord) -> (Vec<f64>, f64) {
    let x = &rec.before;
    let links = |pieces: Vec<Interval>, links: Vec<(usize, usize)>| {
        let longest = links
            .iter()
            .map(|&(i, j)| (x.position_of(i) - x.position_of(j)).abs())
            .fold(0.0, f64::max);
        (pieces.iter().map(Interval::len).collect(), longest)
    };
    match &rec.action {
        StepAction::Graph(g) => links(interval_union(g, x), crate::graph::Adjacency::links(g)),
        StepAction::Directed { graph, .. } => {
            links(interval_union(graph, x), crate::graph::Adjacency::links(graph))
        }
        StepAction::Window(step) => {
            let len = x.position(step.v) - x.position(step.u);
            (vec![len], len)
        }
    }
}

fn refuse_invalid(trace: &Trace) -> Result<()> {
    match trace.first_violation()? {
        None => Ok(()),
        Some(RecordViolation::Averaging { t, report }) => Err(Error::Trace(format!(
            "step {t} violates the averaging constraint: {report}"
        ))),
        Some(RecordViolation::Twist { t, report }) => Err(Error::Trace(format!(
            "step {t} violates the twist constraint: {:?}",
            report.violations
        ))),
        Some(RecordViolation::Chain { t }) => Err(Error::Trace(format!(
            "step {t} does not start where the previous step ended"
        ))),
    }
}

/// Per-s energy of a valid trace.
pub fn accumulate(trace: &Trace, s_values: &[f64]) -> Result<EnergyReport> {
    for &s in s_values {
        check_s(s)?;
    }
    refuse_invalid(trace)?;
    let mut totals = vec![0.0; s_values.len()];
    let mut partial_sums = vec![Vec::with_capacity(trace.len()); s_values.len()];
    for rec in &trace.records {
        let (pieces, _) = record_footprint(rec);
        for (k, &s) in s_values.iter().enumerate() {
            totals[k] += pieces.iter().map(|&l| pow_s(l, s)).sum::<f64>();
            partial_sums[k].push(totals[k]);
        }
    }
    let truncated_at = match trace.stop {
        StopReason::Complete => None,
        StopReason::Converged | StopReason::StepCap | StopReason::Resolution => Some(trace.len() as u64),
    };
    let diameter_final = trace.last_configuration().map_or(0.0, |c| c.diameter());
    Ok(EnergyReport {
        s_values: s_values.to_vec(),
        totals,
        partial_sums,
        comm_counts: Vec::new(),
        truncated_at,
        diameter_final,
    })
}

impl EnergyReport {
    pub fn with_comm_counts(mut self, trace: &Trace, eps_values: &[f64]) -> Result<Self> {
        self.comm_counts = eps_values
            .iter()
            .map(|&e| comm_count(trace, e).map(|c| (e, c)))
            .collect::<Result<_>>()?;
        Ok(self)
    }

    pub fn total(&self, s: f64) -> Option<f64> {
        self.s_values.iter().position(|&v| v == s).map(|k| self.totals[k])
    }
}

/// Records with some link of embedded length at least `eps`.
pub fn comm_count(trace: &Trace, eps: f64) -> Result<u64> {
    if !(eps > 0.0) {
        return Err(Error::Parameter {
            name: "eps",
            value: eps,
            expected: "(0, inf)",
        });
    }
    Ok(trace
        .records
        .iter()
        .filter(|r| record_footprint(r).1 >= eps)
        .count() as u64)
}

/// `min{(3/ρs)^(n-1), 2(2/ρs)^(n-1)}`, with `2/ρs` in place of the second term for `n = 2`.
pub fn bound_energy(n: usize, rho: f64, s: f64) -> Result<f64> {
    check_rho(rho)?;
    check_s(s)?;
    if n < 2 {
        return Ok(0.0);
    }
    let a = 2.0 / (rho * s);
    let loose = (3.0 / (rho * s)).powi(n as i32 - 1);
    let tight = if n > 2 { 2.0 * a.powi(n as i32 - 1) } else { a };
    Ok(loose.min(tight))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommBound {
    pub eps: f64,
    /// `1/log2(1/ε)` clamped to `(0, 1]`.
    pub s_log: f64,
    /// `n/log2(1/ε)` clamped to `(0, 1]`.
    pub s_n: f64,
    pub at_s_log: f64,
    pub at_s_n: f64,
    pub bound: f64,
    /// `((1/ρ) log2(1/ε))^(n-1)`, the shape for `2^-n ≤ ε ≤ 1/2`.
    pub asymptotic_large_eps: f64,
    /// `((1/ρn) log2(1/ε))^(n-1)`, the shape for `ε < 2^-n`.
    pub asymptotic_small_eps: f64,
}

/// Upper bound on the number of steps with a link of length at least `eps`.
pub fn bound_comm(n: usize, rho: f64, eps: f64) -> Result<CommBound> {
    check_rho(rho)?;
    bound_comm_with(n, rho, eps, |s| bound_energy(n, rho, s))
}

/// As [`bound_comm`] with a caller-supplied energy bound `s ↦ E(s)`.
pub fn bound_comm_with<F>(n: usize, rho: f64, eps: f64, energy: F) -> Result<CommBound>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(eps > 0.0) {
        return Err(Error::Parameter {
            name: "eps",
            value: eps,
            expected: "(0, inf)",
        });
    }
    let log_inv = (1.0 / eps).log2();
    let clamp = |s: f64| if s.is_finite() && s > 0.0 { s.min(1.0) } else { 1.0 };
    let s_log = clamp(1.0 / log_inv);
    let s_n = clamp(n as f64 / log_inv);
    let asymptotic = |scale: f64| {
        if n < 2 {
            0.0
        } else {
            (scale * log_inv.max(0.0)).powi(n as i32 - 1)
        }
    };
    let (at_s_log, at_s_n) = if eps > 1.0 {
        (0.0, 0.0)
    } else {
        (eps.powf(-s_log) * energy(s_log)?, eps.powf(-s_n) * energy(s_n)?)
    };
    Ok(CommBound {
        eps,
        s_log,
        s_n,
        at_s_log,
        at_s_n,
        bound: at_s_log.min(at_s_n),
        asymptotic_large_eps: asymptotic(1.0 / rho),
        asymptotic_small_eps: asymptotic(1.0 / (rho * n as f64)),
    })
}
