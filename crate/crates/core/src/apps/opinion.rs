//! Box-squeeze opinion dynamics in `[0,1]^d`.
//!
//! A step picks a subset of agents and moves each of them anywhere inside
//! `(1-α)B + αc`, where `B` is the bounding box of the subset and `c` its
//! center. Along every axis this is an averaging step with `ρ = α/2` on the
//! complete graph of the subset.

use std::io::Write;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::averaging::{validate_averaging_step, AveragingParams, StepReport};
use crate::configuration::Configuration;
use crate::error::{check_range, check_s, Error, Result};
use crate::exact::{above_lower, below_upper, representable_band};
use crate::graph::StepGraph;
use crate::simulate::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionState {
    /// `points[i][j]` is coordinate `j` of agent `i`.
    pub points: Vec<Vec<f64>>,
    pub alpha: f64,
    pub d: usize,
}

impl OpinionState {
    pub fn new(points: Vec<Vec<f64>>, alpha: f64) -> Result<Self> {
        check_range("alpha", alpha, alpha > 0.0 && alpha <= 1.0, "(0, 1]")?;
        let d = points.first().map_or(0, Vec::len);
        for p in &points {
            if p.len() != d {
                return Err(Error::Dimension {
                    expected: d,
                    found: p.len(),
                });
            }
            for &c in p {
                check_range("coordinate", c, (0.0..=1.0).contains(&c), "[0, 1]")?;
            }
        }
        Ok(OpinionState { points, alpha, d })
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn axis(&self, j: usize) -> Vec<f64> {
        self.points.iter().map(|p| p[j]).collect()
    }

    /// Largest axis spread over all agents.
    pub fn spread(&self) -> f64 {
        (0..self.d)
            .map(|j| {
                let a = self.axis(j);
                let lo = a.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                hi - lo
            })
            .fold(0.0, f64::max)
    }
}

/// Bounding box of `subset`, one `(lo, hi)` per axis.
pub fn bounding_box(state: &OpinionState, subset: &[usize]) -> Vec<(f64, f64)> {
    (0..state.d)
        .map(|j| {
            subset.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                (lo.min(state.points[i][j]), hi.max(state.points[i][j]))
            })
        })
        .collect()
}

/// `(1-α)B + αc` for the bounding box `B` of `subset`.
pub fn shrunken_box(state: &OpinionState, subset: &[usize]) -> Vec<(f64, f64)> {
    bounding_box(state, subset)
        .into_iter()
        .map(|(lo, hi)| {
            let m = 0.5 * state.alpha * (hi - lo);
            (lo + m, hi - m)
        })
        .collect()
}

/// The doubles of [`shrunken_box`] that satisfy the squeeze exactly, per axis.
///
/// `None` when some axis has no such double, which happens once the box is a
/// few ulps wide.
pub fn representable_box(state: &OpinionState, subset: &[usize]) -> Option<Vec<(f64, f64)>> {
    if subset.is_empty() {
        return Some(shrunken_box(state, subset));
    }
    let rho = 0.5 * state.alpha;
    bounding_box(state, subset)
        .into_iter()
        .zip(shrunken_box(state, subset))
        .map(|((lo, hi), (slo, shi))| representable_band(lo, hi, rho, slo, shi))
        .collect()
}

/// Whether some pair of agents can still be squeezed to a different point.
pub fn movable_pair_exists(state: &OpinionState) -> bool {
    let n = state.n();
    (0..n).any(|a| {
        (a + 1..n).any(|b| {
            state.points[a] != state.points[b] && representable_box(state, &[a, b]).is_some()
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpinionViolation {
    pub agent: usize,
    pub axis: usize,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

fn check_subset(state: &OpinionState, subset: &[usize]) -> Result<()> {
    if subset.is_empty() {
        return Err(Error::Policy("empty subset".into()));
    }
    for (k, &i) in subset.iter().enumerate() {
        if i >= state.n() {
            return Err(Error::Range {
                index: i,
                what: "opinion agent",
            });
        }
        if subset[..k].contains(&i) {
            return Err(Error::Policy(format!("agent {i} chosen twice")));
        }
    }
    Ok(())
}

/// Targets outside the shrunken box, beyond `tol`.
pub fn opinion_violations(
    state: &OpinionState,
    subset: &[usize],
    targets: &[Vec<f64>],
    tol: f64,
) -> Result<Vec<OpinionViolation>> {
    check_subset(state, subset)?;
    if targets.len() != subset.len() {
        return Err(Error::Dimension {
            expected: subset.len(),
            found: targets.len(),
        });
    }
    let bx = shrunken_box(state, subset);
    let outer = bounding_box(state, subset);
    let rho = 0.5 * state.alpha;
    let mut out = Vec::new();
    for (&agent, t) in subset.iter().zip(targets) {
        if t.len() != state.d {
            return Err(Error::Dimension {
                expected: state.d,
                found: t.len(),
            });
        }
        for (axis, (&value, &(lo, hi))) in t.iter().zip(&bx).enumerate() {
            let (xl, xr) = outer[axis];
            let exact = above_lower(value, xl, xr, rho) && below_upper(value, xl, xr, rho);
            if !exact && (value < lo - tol || value > hi + tol) {
                out.push(OpinionViolation {
                    agent,
                    axis,
                    value,
                    lo,
                    hi,
                });
            }
        }
    }
    Ok(out)
}

/// Move the chosen agents to `targets`.
pub fn opinion_step(state: &OpinionState, subset: &[usize], targets: &[Vec<f64>]) -> Result<OpinionState> {
    let bad = opinion_violations(state, subset, targets, 0.0)?;
    if let Some(v) = bad.first() {
        return Err(Error::Policy(format!(
            "agent {} axis {}: target {} outside [{}, {}] ({} violations)",
            v.agent,
            v.axis,
            v.value,
            v.lo,
            v.hi,
            bad.len()
        )));
    }
    let mut next = state.clone();
    for (&i, t) in subset.iter().zip(targets) {
        next.points[i] = t.clone();
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SqueezePolicy {
    /// Everyone goes to the box center.
    CenterCollapse,
    /// Independent uniform points of the shrunken box.
    UniformRandom,
    /// Each agent goes to the shrunken-box corner nearest to it.
    AdversarialCorner,
}

impl SqueezePolicy {
    pub const ALL: [SqueezePolicy; 3] = [
        SqueezePolicy::CenterCollapse,
        SqueezePolicy::UniformRandom,
        SqueezePolicy::AdversarialCorner,
    ];

    /// Fails when the box has no exactly valid double on some axis.
    pub fn targets<R: Rng + ?Sized>(
        self,
        state: &OpinionState,
        subset: &[usize],
        rng: &mut R,
    ) -> Result<Vec<Vec<f64>>> {
        let bx = representable_box(state, subset)
            .ok_or_else(|| Error::Policy("squeeze box is below f64 resolution".into()))?;
        Ok(subset
            .iter()
            .map(|&i| {
                bx.iter()
                    .enumerate()
                    .map(|(j, &(lo, hi))| match self {
                        SqueezePolicy::CenterCollapse => (0.5 * (lo + hi)).clamp(lo, hi),
                        SqueezePolicy::UniformRandom => {
                            if lo < hi {
                                rng.random_range(lo..=hi)
                            } else {
                                lo
                            }
                        }
                        SqueezePolicy::AdversarialCorner => {
                            if state.points[i][j] <= 0.5 * (lo + hi) {
                                lo
                            } else {
                                hi
                            }
                        }
                    })
                    .collect()
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionRecord {
    pub t: u64,
    pub subset: Vec<usize>,
    pub before: Vec<Vec<f64>>,
    pub after: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionTrace {
    pub n: usize,
    pub d: usize,
    pub alpha: f64,
    pub records: Vec<OpinionRecord>,
}

impl OpinionTrace {
    /// Per-axis bounding-box lengths `ℓ_t(j)` of each step's subset.
    pub fn axis_lengths(&self) -> Vec<Vec<f64>> {
        self.records
            .iter()
            .map(|r| {
                (0..self.d)
                    .map(|j| {
                        let (lo, hi) = r.subset.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                            (lo.min(r.before[i][j]), hi.max(r.before[i][j]))
                        });
                        hi - lo
                    })
                    .collect()
            })
            .collect()
    }

    /// Check every step as a one-dimensional averaging step per axis with `ρ = α/2`.
    ///
    /// Returns the first failing `(t, axis, report)`.
    pub fn first_axis_violation(&self, tolerance: f64) -> Result<Option<(u64, usize, StepReport)>> {
        let params = AveragingParams::new(self.alpha / 2.0, tolerance)?;
        for r in &self.records {
            let g = StepGraph::complete_on(self.n, &r.subset)?;
            for j in 0..self.d {
                let x = Configuration::from_positions(&r.before.iter().map(|p| p[j]).collect::<Vec<_>>())?;
                let y = Configuration::from_positions(&r.after.iter().map(|p| p[j]).collect::<Vec<_>>())?;
                let report = validate_averaging_step(&x, &g, &y, &params)?;
                if !report.is_ok() {
                    return Ok(Some((r.t, j, report)));
                }
            }
        }
        Ok(None)
    }

    /// Header line with `n`, `d`, `alpha`, then one record per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let header = serde_json::json!({
            "format": "senergy-opinion",
            "version": 1,
            "n": self.n,
            "d": self.d,
            "alpha": self.alpha,
        });
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionSimConfig {
    pub n: usize,
    pub d: usize,
    pub alpha: f64,
    pub policy: SqueezePolicy,
    pub steps_cap: usize,
    /// Stop once every axis spread is below this.
    pub spread_cutoff: f64,
    pub seed: u64,
}

impl OpinionSimConfig {
    pub fn new(n: usize, d: usize, alpha: f64, policy: SqueezePolicy, seed: u64) -> Self {
        OpinionSimConfig {
            n,
            d,
            alpha,
            policy,
            steps_cap: 2000,
            spread_cutoff: 1e-12,
            seed,
        }
    }
}

/// Random subsets of size at least two, squeezed by `cfg.policy`.
pub fn simulate_opinion(cfg: &OpinionSimConfig) -> Result<OpinionTrace> {
    if cfg.n < 2 || cfg.d == 0 {
        return Err(Error::Policy("opinion dynamics needs n >= 2 and d >= 1".into()));
    }
    let mut rng = rng_from_seed(cfg.seed);
    let points = (0..cfg.n)
        .map(|_| (0..cfg.d).map(|_| rng.random::<f64>()).collect())
        .collect();
    let mut state = OpinionState::new(points, cfg.alpha)?;
    let mut trace = OpinionTrace {
        n: cfg.n,
        d: cfg.d,
        alpha: cfg.alpha,
        records: Vec::new(),
    };
    for _ in 0..cfg.steps_cap {
        if state.spread() < cfg.spread_cutoff {
            break;
        }
        let size = rng.random_range(2..=cfg.n);
        let mut subset = sample(&mut rng, cfg.n, size).into_vec();
        subset.sort_unstable();
        let Ok(targets) = cfg.policy.targets(&state, &subset, &mut rng) else {
            if movable_pair_exists(&state) {
                continue;
            }
            break;
        };
        let next = opinion_step(&state, &subset, &targets)?;
        trace.records.push(OpinionRecord {
            t: trace.records.len() as u64,
            subset,
            before: state.points,
            after: next.points.clone(),
        });
        state = next;
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionVolumeReport {
    pub s: f64,
    pub eps: f64,
    /// `Σ_t V_t^s`.
    pub volume_energy: f64,
    /// `(6/(dαs))^(n-1)`.
    pub bound: f64,
    /// `Π_j (Σ_t ℓ_t(j)^(ds))^(1/d)`.
    pub holder_rhs: f64,
    /// Steps whose box volume is at least ε.
    pub count: u64,
    /// `ε^-s' (6/(dαs'))^(n-1)` at `s' = min(n/log2(1/ε), 1/d)`.
    pub count_bound: f64,
}

pub fn opinion_volume_report(trace: &OpinionTrace, s: f64, eps: f64) -> Result<OpinionVolumeReport> {
    check_s(s)?;
    let d = trace.d as f64;
    if s > 1.0 / d {
        return Err(Error::Parameter {
            name: "s",
            value: s,
            expected: "(0, 1/d]",
        });
    }
    check_range("eps", eps, eps > 0.0, "(0, inf)")?;
    let lengths = trace.axis_lengths();
    let volumes: Vec<f64> = lengths.iter().map(|l| l.iter().product()).collect();
    let volume_energy = volumes.iter().map(|&v| crate::geometry::pow_s(v, s)).sum();
    let holder_rhs = (0..trace.d)
        .map(|j| {
            lengths
                .iter()
                .map(|l| crate::geometry::pow_s(l[j], d * s))
                .sum::<f64>()
                .powf(1.0 / d)
        })
        .product();
    let bound_at = |s: f64| (6.0 / (d * trace.alpha * s)).powi(trace.n as i32 - 1);
    let log_inv = (1.0 / eps).log2();
    let s_count = if log_inv > 0.0 {
        (trace.n as f64 / log_inv).min(1.0 / d)
    } else {
        1.0 / d
    };
    Ok(OpinionVolumeReport {
        s,
        eps,
        volume_energy,
        bound: bound_at(s),
        holder_rhs,
        count: volumes.iter().filter(|&&v| v >= eps).count() as u64,
        count_bound: eps.powf(-s_count) * bound_at(s_count),
    })
}
