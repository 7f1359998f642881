//! Adversarial trajectories and lower-bound recurrences for the
//! communication count and the s-energy.

use std::collections::HashMap;

use crate::averaging::{allowed_interval, AveragingParams};
use crate::configuration::Configuration;
use crate::error::{check_rho, check_s, Error, Result};
use crate::graph::StepGraph;
use crate::measure::{bound_comm, comm_count};
use crate::trace::{StepAction, StopReason, Trace, TraceKind};

/// Default recursion depth for [`lb_recurrence_b`].
pub const RECURRENCE_DEPTH_CAP: usize = 4096;

fn check_adversary_rho(rho: f64) -> Result<()> {
    check_rho(rho)?;
    if rho > 1.0 / 3.0 {
        return Err(Error::Parameter {
            name: "rho",
            value: rho,
            expected: "(0, 1/3]",
        });
    }
    Ok(())
}

struct Builder {
    trace: Trace,
    by_id: Vec<f64>,
    current: Configuration,
    rho: f64,
    eps: f64,
    /// Set once a squeeze no longer changes any position.
    stalled: bool,
}

impl Builder {
    fn emit(&mut self, g: StepGraph, next: Vec<f64>) -> Result<()> {
        let t = self.trace.len() as u64;
        let after = Configuration::from_positions(&next)?.with_time(t + 1);
        let before = std::mem::replace(&mut self.current, after.clone());
        self.trace.push(StepAction::Graph(g), before, after);
        self.by_id = next;
        Ok(())
    }

    /// Agents `0..m-1` sit together at `a`, agent `m-1` at `b`; squeeze until
    /// the active interval is shorter than ε.
    fn play(&mut self, m: usize, mut a: f64, mut b: f64) -> Result<()> {
        while !self.stalled && b - a >= self.eps {
            let g = StepGraph::new(self.by_id.len(), [(m - 2, m - 1)])?;
            let (lo, _) = allowed_interval(&g, &self.current, self.current.rank_of(m - 2), self.rho);
            let (_, hi) = allowed_interval(&g, &self.current, self.current.rank_of(m - 1), self.rho);
            if lo == a && hi == b {
                self.stalled = true;
                break;
            }
            let mut next = self.by_id.clone();
            next[m - 2] = lo;
            next[m - 1] = hi;
            self.emit(g, next)?;
            if m > 2 {
                self.play(m - 1, a, lo)?;
                if self.stalled {
                    break;
                }
                self.collapse(m - 1)?;
            }
            a = self.by_id[0];
            b = hi;
        }
        Ok(())
    }

    /// Move agents `0..m` onto their mean in one complete-graph step.
    fn collapse(&mut self, m: usize) -> Result<()> {
        let group = &self.by_id[..m];
        if group.iter().all(|&p| p == group[0]) {
            return Ok(());
        }
        let mean = group.iter().sum::<f64>() / m as f64;
        let ids: Vec<usize> = (0..m).collect();
        let g = StepGraph::complete_on(self.by_id.len(), &ids)?;
        let mut next = self.by_id.clone();
        for id in 0..m {
            let (lo, hi) = allowed_interval(&g, &self.current, self.current.rank_of(id), self.rho);
            next[id] = mean.clamp(lo, hi);
        }
        self.emit(g, next)
    }
}

/// The recursive squeeze: agents start at 0 except the last at 1, and the
/// edge between the top two agents fires whenever the active interval is at
/// least ε long.
///
/// When ε is below what `f64` can resolve around the active interval the
/// squeeze eventually stops moving anyone. The construction then ends early
/// and the trace stops with [`StopReason::Resolution`] instead of
/// [`StopReason::Complete`]; its count is a lower bound on the ideal one.
pub fn lb_trajectory(n: usize, rho: f64, eps: f64) -> Result<Trace> {
    check_adversary_rho(rho)?;
    if n < 2 {
        return Err(Error::Range {
            index: n,
            what: "construction needs at least two agents",
        });
    }
    if !(eps > 0.0) {
        return Err(Error::Parameter {
            name: "eps",
            value: eps,
            expected: "(0, inf)",
        });
    }
    let mut by_id = vec![0.0; n];
    by_id[n - 1] = 1.0;
    let mut trace = Trace::new(AveragingParams::with_rho(rho)?, n, TraceKind::Averaging);
    trace.stop = StopReason::Complete;
    let mut b = Builder {
        trace,
        current: Configuration::from_positions(&by_id)?,
        by_id,
        rho,
        eps,
        stalled: false,
    };
    b.play(n, 0.0, 1.0)?;
    if b.stalled {
        b.trace.stop = StopReason::Resolution;
    }
    Ok(b.trace)
}

/// Exact evaluation of `C(n, ε) = 1 + C(n-1, ε/ρ) + C(n, ε/(1 - ρn/(n-1)))`
/// with `C = 0` when `n = 1` or `ε > 1`.
pub fn lb_recurrence_b(n: usize, eps: f64, rho: f64) -> Result<u64> {
    lb_recurrence_b_capped(n, eps, rho, RECURRENCE_DEPTH_CAP)
}

pub fn lb_recurrence_b_capped(n: usize, eps: f64, rho: f64, depth_cap: usize) -> Result<u64> {
    check_adversary_rho(rho)?;
    if !(eps > 0.0) {
        return Err(Error::Parameter {
            name: "eps",
            value: eps,
            expected: "(0, inf)",
        });
    }
    let mut memo = HashMap::new();
    recurrence_b(n, eps, rho, 0, depth_cap, &mut memo)
}

fn recurrence_b(
    n: usize,
    eps: f64,
    rho: f64,
    depth: usize,
    cap: usize,
    memo: &mut HashMap<(usize, u64), u64>,
) -> Result<u64> {
    if n <= 1 || eps > 1.0 {
        return Ok(0);
    }
    if depth >= cap {
        return Err(Error::DepthExceeded(cap));
    }
    if let Some(&c) = memo.get(&(n, eps.to_bits())) {
        return Ok(c);
    }
    let shrink = 1.0 - rho * n as f64 / (n - 1) as f64;
    let inner = recurrence_b(n - 1, eps / rho, rho, depth + 1, cap, memo)?;
    let outer = recurrence_b(n, eps / shrink, rho, depth + 1, cap, memo)?;
    let c = 1 + inner + outer;
    memo.insert((n, eps.to_bits()), c);
    Ok(c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormB {
    /// `⌈((log ε)/n - log ρ) / (2 log(1-2ρ))⌉`.
    pub k: u64,
    /// `ρ(1-2ρ)^(k-1)`.
    pub side_lhs: f64,
    /// `ε^(1/n)`.
    pub side_rhs: f64,
    /// `L(n, ε) = k (1 + L(n-1, ε^(1-1/n)))`, `L(1, ·) = 0`.
    pub product: f64,
    /// `((1/ρn) ln(1/ε))^(n-1)`.
    pub asymptotic: f64,
}

impl ClosedFormB {
    pub fn side_condition_holds(&self) -> bool {
        self.side_lhs >= self.side_rhs
    }
}

fn closedform_k(n: usize, eps: f64, rho: f64) -> u64 {
    let num = eps.ln() / n as f64 - rho.ln();
    (num / (2.0 * (1.0 - 2.0 * rho).ln())).ceil().max(1.0) as u64
}

/// Expanded form of the recurrence, valid for `ε ≤ ρ^(2n)` and `ρ ≤ 1/3`.
pub fn lb_closedform_b(n: usize, eps: f64, rho: f64) -> Result<ClosedFormB> {
    check_adversary_rho(rho)?;
    if n < 2 {
        return Err(Error::OutOfRegime(format!("n = {n} has no communication")));
    }
    if !(eps > 0.0) || eps > rho.powi(2 * n as i32) {
        return Err(Error::OutOfRegime(format!(
            "eps = {eps:e} must lie in (0, rho^(2n)] = (0, {:e}]",
            rho.powi(2 * n as i32)
        )));
    }
    let k = closedform_k(n, eps, rho);
    let mut product = 0.0;
    let mut e = eps;
    let mut factors = Vec::with_capacity(n - 1);
    for m in (2..=n).rev() {
        factors.push(closedform_k(m, e, rho) as f64);
        e = e.powf(1.0 - 1.0 / m as f64);
    }
    for f in factors.iter().rev() {
        product = f * (1.0 + product);
    }
    Ok(ClosedFormB {
        k,
        side_lhs: rho * (1.0 - 2.0 * rho).powi(k as i32 - 1),
        side_rhs: eps.powf(1.0 / n as f64),
        product,
        asymptotic: ((1.0 / eps).ln() / (rho * n as f64)).powi(n as i32 - 1),
    })
}

/// Solve `E_n = (ρ^s E_(n-1) + 1) / (1 - (1-2ρ)^s)` from `E_1 = 0`.
pub fn lb_recurrence_a(n: usize, s: f64, rho: f64) -> Result<f64> {
    check_adversary_rho(rho)?;
    check_s(s)?;
    if n < 2 {
        return Err(Error::Range {
            index: n,
            what: "energy recurrence starts at two agents",
        });
    }
    let denom = 1.0 - (1.0 - 2.0 * rho).powf(s);
    if !(denom > 0.0) {
        return Err(Error::OutOfRegime(format!(
            "1 - (1-2rho)^s = {denom:e} is not positive"
        )));
    }
    let grow = rho.powf(s);
    Ok((2..=n).fold(0.0, |e, _| (grow * e + 1.0) / denom))
}

/// One line of the lower-bound comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichRow {
    pub n: usize,
    pub rho: f64,
    pub eps: f64,
    pub recurrence: u64,
    pub measured: u64,
    pub upper: f64,
    /// `measured / ((1/ρn) ln(1/ε))^(n-1)`.
    pub fitted_ratio: f64,
}

impl SandwichRow {
    pub const CSV_HEADER: &'static str = "n,rho,eps,recurrence,measured,upper,fitted_ratio";

    pub fn is_ordered(&self) -> bool {
        self.recurrence <= self.measured && self.measured as f64 <= self.upper
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{:e},{},{},{:e},{}",
            self.n, self.rho, self.eps, self.recurrence, self.measured, self.upper, self.fitted_ratio
        )
    }
}

/// Run the construction and place its count between the two bounds.
pub fn sandwich(n: usize, rho: f64, eps: f64) -> Result<(SandwichRow, Trace)> {
    let trace = lb_trajectory(n, rho, eps)?;
    let measured = comm_count(&trace, eps)?;
    let recurrence = lb_recurrence_b(n, eps, rho)?;
    let upper = bound_comm(n, rho, eps)?.bound;
    let scale = ((1.0 / eps).ln() / (rho * n as f64)).powi(n as i32 - 1);
    let row = SandwichRow {
        n,
        rho,
        eps,
        recurrence,
        measured,
        upper,
        fitted_ratio: measured as f64 / scale,
    };
    Ok((row, trace))
}
