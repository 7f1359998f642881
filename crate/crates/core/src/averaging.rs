//! Single steps of a symmetric averaging system.
//!
//! Agent `i` may move anywhere in `[x_l + δ, x_r - δ]`, where `l`, `r` are
//! its leftmost and rightmost neighbours (itself included) and
//! `δ = ρ (x_r - x_l)`.

use std::fmt;

use rand::Rng;

use crate::configuration::Configuration;
use crate::error::{check_range, check_rho, Error, Result};
use crate::exact::representable_band;
use crate::graph::Adjacency;
use crate::matrix::{Matrix, ROW_SUM_TOLERANCE};

/// Absolute tolerance used when validating steps on the unit interval.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragingParams {
    pub rho: f64,
    pub tolerance: f64,
}

impl AveragingParams {
    pub fn new(rho: f64, tolerance: f64) -> Result<Self> {
        check_rho(rho)?;
        check_range("tolerance", tolerance, tolerance >= 0.0, "[0, inf)")?;
        Ok(AveragingParams { rho, tolerance })
    }

    pub fn with_rho(rho: f64) -> Result<Self> {
        Self::new(rho, DEFAULT_TOLERANCE)
    }
}

/// The doubles that satisfy the constraint for the agent at `rank` in exact
/// arithmetic; `None` if there are none.
pub fn representable_interval<G: Adjacency + ?Sized>(
    g: &G,
    x: &Configuration,
    rank: usize,
    rho: f64,
) -> Option<(f64, f64)> {
    let (l, r) = neighbor_extremes(g, x, rank);
    let (lo, hi) = allowed_interval(g, x, rank, rho);
    representable_band(x.position(l), x.position(r), rho, lo, hi)
}

/// Leftmost and rightmost neighbour ranks of the agent at `rank`, itself included.
pub fn neighbor_extremes<G: Adjacency + ?Sized>(
    g: &G,
    x: &Configuration,
    rank: usize,
) -> (usize, usize) {
    let id = x.label(rank);
    g.neighbors(id)
        .iter()
        .map(|&j| x.rank_of(j))
        .fold((rank, rank), |(l, r), k| (l.min(k), r.max(k)))
}

/// The interval the averaging constraint allows for the agent at `rank`.
pub fn allowed_interval<G: Adjacency + ?Sized>(
    g: &G,
    x: &Configuration,
    rank: usize,
    rho: f64,
) -> (f64, f64) {
    let (l, r) = neighbor_extremes(g, x, rank);
    let (xl, xr) = (x.position(l), x.position(r));
    let delta = rho * (xr - xl);
    (xl + delta, xr - delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Moved too close to (or past) its leftmost neighbour.
    Left,
    /// Moved too close to (or past) its rightmost neighbour.
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub agent: usize,
    pub rank: usize,
    pub side: Side,
    pub bound: f64,
    pub value: f64,
    /// Signed distance inside the bound; negative for a violation.
    pub slack: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    pub violations: Vec<Violation>,
}

impl StepReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for StepReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                write!(f, "; ")?;
            }
            write!(
                f,
                "agent {} (rank {}) {:?} bound {} value {} slack {:e}",
                v.agent, v.rank, v.side, v.bound, v.value, v.slack
            )?;
        }
        Ok(())
    }
}

/// Check every agent's move from `x` to `y` against the averaging constraint.
///
/// `y` is matched to `x` by agent id. Structural mismatches are errors;
/// constraint violations are listed in the report.
pub fn validate_averaging_step<G: Adjacency + ?Sized>(
    x: &Configuration,
    g: &G,
    y: &Configuration,
    p: &AveragingParams,
) -> Result<StepReport> {
    let n = x.n();
    for found in [y.n(), g.agent_count()] {
        if found != n {
            return Err(Error::Dimension { expected: n, found });
        }
    }
    let mut report = StepReport::default();
    for rank in 0..n {
        let id = x.label(rank);
        let (lo, hi) = allowed_interval(g, x, rank, p.rho);
        let value = y.position_of(id);
        let below = value - (lo - p.tolerance);
        if below < 0.0 {
            report.violations.push(Violation {
                agent: id,
                rank,
                side: Side::Left,
                bound: lo,
                value,
                slack: value - lo,
            });
        }
        let above = (hi + p.tolerance) - value;
        if above < 0.0 {
            report.violations.push(Violation {
                agent: id,
                rank,
                side: Side::Right,
                bound: hi,
                value,
                slack: hi - value,
            });
        }
    }
    Ok(report)
}

/// How to resolve the freedom the constraint leaves each agent.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    /// `(x_l + x_r) / 2`.
    Midpoint,
    /// `x_l + δ`.
    Leftmost,
    /// `x_r - δ`.
    Rightmost,
    /// Independent uniform draw in the allowed interval.
    UniformRandom,
    /// `y = P x` for a row-stochastic `P` indexed by agent id.
    Matrix(Matrix),
}


/// Check that `p` is a valid averaging matrix for graph `g` and floor `rho`.
pub fn check_matrix_policy<G: Adjacency + ?Sized>(m: &Matrix, g: &G, rho: f64) -> Result<()> {
    let n = g.agent_count();
    if m.n() != n {
        return Err(Error::Dimension {
            expected: n,
            found: m.n(),
        });
    }
    for i in 0..n {
        let row = m.row(i);
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(Error::Policy(format!("row {i} sums to {sum}")));
        }
        if row[i] <= 0.0 {
            return Err(Error::Policy(format!("diagonal entry {i} is not positive")));
        }
        let nbrs = g.neighbors(i);
        for (j, &v) in row.iter().enumerate() {
            if v < 0.0 {
                return Err(Error::Policy(format!("entry ({i}, {j}) = {v} is negative")));
            }
            if i != j && (v > 0.0) != nbrs.contains(&j) {
                return Err(Error::Policy(format!(
                    "entry ({i}, {j}) = {v} disagrees with the graph"
                )));
            }
            if v > 0.0 && v < rho - ROW_SUM_TOLERANCE {
                return Err(Error::Policy(format!(
                    "entry ({i}, {j}) = {v} is below rho = {rho}"
                )));
            }
        }
    }
    Ok(())
}

/// Produce the next configuration from `x` under `policy`.
///
/// Every output is clamped into the doubles that satisfy the constraint
/// exactly, so generated steps are valid in real arithmetic. This moves a
/// target by at most a few ulps. It fails when some agent's band holds no
/// double at all.
pub fn apply_policy<G: Adjacency + ?Sized, R: Rng + ?Sized>(
    x: &Configuration,
    g: &G,
    p: &AveragingParams,
    policy: &Policy,
    rng: &mut R,
) -> Result<Configuration> {
    let n = x.n();
    if g.agent_count() != n {
        return Err(Error::Dimension {
            expected: n,
            found: g.agent_count(),
        });
    }
    let product = match policy {
        Policy::Matrix(m) => {
            check_matrix_policy(m, g, p.rho)?;
            Some(m.mul_vec(&x.by_id()))
        }
        _ => None,
    };
    let mut next = vec![0.0; n];
    for rank in 0..n {
        let id = x.label(rank);
        let (lo, hi) = representable_interval(g, x, rank, p.rho).ok_or_else(|| {
            Error::Policy(format!(
                "agent {id}: no double satisfies the averaging constraint; its neighbourhood is below f64 resolution"
            ))
        })?;
        let (l, r) = neighbor_extremes(g, x, rank);
        let target = match policy {
            Policy::Midpoint => 0.5 * (x.position(l) + x.position(r)),
            Policy::Leftmost => lo,
            Policy::Rightmost => hi,
            Policy::UniformRandom => {
                if hi > lo {
                    rng.random_range(lo..=hi)
                } else {
                    lo
                }
            }
            Policy::Matrix(_) => product.as_ref().map_or(lo, |v| v[id]),
        };
        next[id] = target.clamp(lo, hi);
    }
    Configuration::from_positions(&next).map(|c| c.with_time(x.time() + 1))
}
