//! Seeded random trajectories of averaging systems.
//!
//! All randomness comes from a single `u64` seed fed to `ChaCha8Rng`, so a
//! configuration and seed always reproduce the same trace.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::averaging::{apply_policy, representable_interval, AveragingParams, Policy};
use crate::configuration::Configuration;
use crate::digraph::{asym_step, random_cut_balanced_step, random_type_symmetric_step};
use crate::error::{Error, Result};
use crate::graph::StepGraph;
use crate::matrix::Matrix;
use crate::trace::{StepAction, StopReason, Trace, TraceKind};

pub const DEFAULT_DIAMETER_CUTOFF: f64 = 1e-12;
pub const DEFAULT_STEPS_CAP: usize = 1_000_000;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdős–Rényi graph; when `max_degree` is set, edges that would exceed it are skipped.
pub fn random_graph<R: Rng + ?Sized>(
    n: usize,
    edge_probability: f64,
    max_degree: Option<usize>,
    rng: &mut R,
) -> StepGraph {
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((i, j));
        }
    }
    // shuffle so a degree cap does not favour low ids
    pairs.shuffle(rng);
    let mut degree = vec![0usize; n];
    let cap = max_degree.unwrap_or(usize::MAX);
    let mut edges = Vec::new();
    for (i, j) in pairs {
        if rng.random::<f64>() < edge_probability && degree[i] < cap && degree[j] < cap {
            degree[i] += 1;
            degree[j] += 1;
            edges.push((i, j));
        }
    }
    StepGraph::new(n, edges).expect("generated pairs are in range")
}

/// Row-stochastic matrix consistent with `g` whose positive entries are all at least `rho`.
pub fn random_averaging_matrix<R: Rng + ?Sized>(g: &StepGraph, rho: f64, rng: &mut R) -> Result<Matrix> {
    use crate::graph::Adjacency;
    let n = g.n();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        let nbrs = g.neighbors(i);
        let spare = 1.0 - rho * (nbrs.len() + 1) as f64;
        if spare < -1e-12 {
            return Err(Error::Policy(format!(
                "agent {i} has degree {}, too high for rho = {rho}",
                nbrs.len()
            )));
        }
        let raw: Vec<f64> = (0..=nbrs.len()).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = raw.iter().sum();
        let mut off = 0.0;
        for (&j, w) in nbrs.iter().zip(&raw) {
            let v = rho + spare.max(0.0) * w / total;
            data[i * n + j] = v;
            off += v;
        }
        data[i * n + i] = 1.0 - off;
    }
    Matrix::from_row_major(n, data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Midpoint,
    Leftmost,
    Rightmost,
    UniformRandom,
    /// A fresh random averaging matrix each step.
    RandomMatrix,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::Midpoint,
        PolicyKind::Leftmost,
        PolicyKind::Rightmost,
        PolicyKind::UniformRandom,
        PolicyKind::RandomMatrix,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub rho: f64,
    pub tolerance: f64,
    pub policy: PolicyKind,
    pub edge_probability: f64,
    pub steps_cap: usize,
    pub diameter_cutoff: f64,
    pub seed: u64,
    /// Starting positions by id; drawn uniformly from `[0, 1]` when absent.
    pub initial: Option<Vec<f64>>,
}

impl SimConfig {
    pub fn new(n: usize, rho: f64, policy: PolicyKind, seed: u64) -> Self {
        SimConfig {
            n,
            rho,
            tolerance: crate::averaging::DEFAULT_TOLERANCE,
            policy,
            edge_probability: 0.5,
            steps_cap: DEFAULT_STEPS_CAP,
            diameter_cutoff: DEFAULT_DIAMETER_CUTOFF,
            seed,
            initial: None,
        }
    }
}

fn initial_configuration<R: Rng + ?Sized>(n: usize, initial: Option<&[f64]>, rng: &mut R) -> Result<Configuration> {
    match initial {
        Some(p) if p.len() != n => Err(Error::Dimension {
            expected: n,
            found: p.len(),
        }),
        Some(p) => Configuration::from_positions(p),
        None => {
            let p: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            Configuration::from_positions(&p)
        }
    }
}

/// Remove every edge at an agent whose allowed band contains no double.
///
/// Such agents appear once a cluster shrinks to a few ulps; isolating them
/// keeps every generated step exactly valid.
pub fn drop_unresolvable_edges(mut g: StepGraph, x: &Configuration, rho: f64) -> StepGraph {
    loop {
        let stuck: Vec<usize> = (0..x.n())
            .filter(|&rank| representable_interval(&g, x, rank, rho).is_none())
            .map(|rank| x.label(rank))
            .collect();
        if stuck.is_empty() {
            return g;
        }
        let kept: Vec<(usize, usize)> = g
            .edges()
            .filter(|(i, j)| !stuck.contains(i) && !stuck.contains(j))
            .collect();
        g = StepGraph::new(x.n(), kept).expect("subset of valid edges");
    }
}

/// Whether some pair of distinct positions still has a double strictly
/// inside its allowed band. Every agent's band is the band of one such pair,
/// so without one no step can move anything.
pub fn resolvable_pair_exists(x: &Configuration, rho: f64) -> bool {
    let p = x.positions();
    (0..p.len()).any(|a| {
        (a + 1..p.len()).any(|b| {
            let (xl, xr) = (p[a], p[b]);
            let delta = rho * (xr - xl);
            xl != xr && crate::exact::representable_band(xl, xr, rho, xl + delta, xr - delta).is_some()
        })
    })
}

/// Run the averaging system until the diameter drops below the cutoff or the step cap is hit.
pub fn simulate(cfg: &SimConfig) -> Result<Trace> {
    let params = AveragingParams::new(cfg.rho, cfg.tolerance)?;
    let mut rng = rng_from_seed(cfg.seed);
    let mut x = initial_configuration(cfg.n, cfg.initial.as_deref(), &mut rng)?;
    let mut trace = Trace::new(params, cfg.n, TraceKind::Averaging);
    // the matrix policy needs rows with at most 1/rho entries
    let max_degree = match cfg.policy {
        PolicyKind::RandomMatrix => Some(((1.0 / cfg.rho) + 1e-9).floor() as usize - 1),
        _ => None,
    };
    trace.stop = StopReason::StepCap;
    for _ in 0..cfg.steps_cap {
        if x.diameter() < cfg.diameter_cutoff {
            trace.stop = StopReason::Converged;
            break;
        }
        let raw = random_graph(cfg.n, cfg.edge_probability, max_degree, &mut rng);
        let raw_edges = raw.edge_count();
        let g = drop_unresolvable_edges(raw, &x, cfg.rho);
        if g.edge_count() < raw_edges && !resolvable_pair_exists(&x, cfg.rho) {
            trace.stop = StopReason::Resolution;
            break;
        }
        let policy = match cfg.policy {
            PolicyKind::Midpoint => Policy::Midpoint,
            PolicyKind::Leftmost => Policy::Leftmost,
            PolicyKind::Rightmost => Policy::Rightmost,
            PolicyKind::UniformRandom => Policy::UniformRandom,
            PolicyKind::RandomMatrix => Policy::Matrix(random_averaging_matrix(&g, cfg.rho, &mut rng)?),
        };
        let y = apply_policy(&x, &g, &params, &policy, &mut rng)?;
        trace.push(StepAction::Graph(g), x, y.clone());
        x = y;
    }
    if trace.stop == StopReason::StepCap && x.diameter() < cfg.diameter_cutoff {
        trace.stop = StopReason::Converged;
    }
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StochasticKind {
    /// Type-symmetric matrices on random undirected supports.
    TypeSymmetric,
    /// Directed cycles on random groups: cut-balanced, usually not type-symmetric.
    CutBalanced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticSimConfig {
    pub n: usize,
    pub kind: StochasticKind,
    /// Lower bound on every positive matrix entry.
    pub floor: f64,
    pub edge_probability: f64,
    pub steps_cap: usize,
    pub diameter_cutoff: f64,
    pub seed: u64,
}

/// Run `x ← P_t x` with random matrices. The trace's `rho` is the smallest
/// positive entry seen (capped at 1/2). A run ends with
/// [`StopReason::Resolution`] once some product can no longer be rounded to a
/// valid position.
pub fn simulate_stochastic(cfg: &StochasticSimConfig) -> Result<Trace> {
    let mut rng = rng_from_seed(cfg.seed);
    let mut x = initial_configuration(cfg.n, None, &mut rng)?;
    let mut rho = 0.5f64;
    let mut steps = Vec::new();
    let mut stop = StopReason::StepCap;
    for _ in 0..cfg.steps_cap {
        if x.diameter() < cfg.diameter_cutoff {
            stop = StopReason::Converged;
            break;
        }
        let step = match cfg.kind {
            StochasticKind::TypeSymmetric => {
                random_type_symmetric_step(cfg.n, cfg.edge_probability, cfg.floor, &mut rng)?
            }
            StochasticKind::CutBalanced => random_cut_balanced_step(cfg.n, cfg.floor, &mut rng)?,
        };
        if let Some(m) = step.matrix().min_positive() {
            rho = rho.min(m);
        }
        let out = match asym_step(&x, &step) {
            Ok(out) => out,
            Err(Error::Policy(_)) => {
                stop = StopReason::Resolution;
                break;
            }
            Err(e) => return Err(e),
        };
        steps.push((step, x, out.y.clone()));
        x = out.y;
    }
    if stop == StopReason::StepCap && x.diameter() < cfg.diameter_cutoff {
        stop = StopReason::Converged;
    }
    let params = AveragingParams::new(rho, crate::averaging::DEFAULT_TOLERANCE)?;
    let mut trace = Trace::new(params, cfg.n, TraceKind::Asymmetric);
    trace.stop = stop;
    for (step, before, after) in steps {
        trace.push(
            StepAction::Directed {
                graph: step.support().clone(),
                matrix: Some(step.matrix().clone()),
            },
            before,
            after,
        );
    }
    Ok(trace)
}
