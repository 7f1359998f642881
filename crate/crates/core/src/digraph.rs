//! Directed steps: cut-balanced digraphs and stochastic-matrix updates.
//!
//! A digraph is cut-balanced when each weakly connected component is also
//! strongly connected. Arc `i -> j` means agent `i` reads the position of
//! agent `j`, matching row `i` / column `j` of the update matrix.

use std::collections::BTreeSet;

use petgraph::algo::tarjan_scc;
use petgraph::graphmap::DiGraphMap;
use petgraph::unionfind::UnionFind;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::averaging::representable_interval;
use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::graph::{Adjacency, StepGraph};
use crate::matrix::{Matrix, ROW_SUM_TOLERANCE};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiGraph {
    n: usize,
    arcs: BTreeSet<(usize, usize)>,
    out: Vec<Vec<usize>>,
}

impl DiGraph {
    pub fn new<I>(n: usize, arcs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut set = BTreeSet::new();
        for (i, j) in arcs {
            for k in [i, j] {
                if k >= n {
                    return Err(Error::Range {
                        index: k,
                        what: "arc endpoint",
                    });
                }
            }
            if i != j {
                set.insert((i, j));
            }
        }
        let mut out = vec![Vec::new(); n];
        for &(i, j) in &set {
            out[i].push(j);
        }
        Ok(DiGraph { n, arcs: set, out })
    }

    pub fn from_undirected(g: &StepGraph) -> Self {
        let arcs = g.edges().flat_map(|(i, j)| [(i, j), (j, i)]);
        DiGraph::new(g.n(), arcs).expect("edges of a valid graph are in range")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.arcs.iter().copied()
    }

    pub fn has_arc(&self, i: usize, j: usize) -> bool {
        i == j || self.arcs.contains(&(i, j))
    }

    fn to_petgraph(&self) -> DiGraphMap<usize, ()> {
        let mut g = DiGraphMap::with_capacity(self.n, self.arcs.len());
        for v in 0..self.n {
            g.add_node(v);
        }
        for &(i, j) in &self.arcs {
            g.add_edge(i, j, ());
        }
        g
    }

    /// Weakly connected component id of every vertex.
    pub fn weak_components(&self) -> Vec<usize> {
        let mut uf = UnionFind::new(self.n);
        for &(i, j) in &self.arcs {
            uf.union(i, j);
        }
        relabel(uf.into_labeling())
    }

    /// Strongly connected component id of every vertex.
    pub fn strong_components(&self) -> Vec<usize> {
        let mut comp = vec![0; self.n];
        for (c, members) in tarjan_scc(&self.to_petgraph()).into_iter().enumerate() {
            for v in members {
                comp[v] = c;
            }
        }
        relabel(comp)
    }
}

/// Renumber component ids in order of first appearance.
fn relabel(ids: Vec<usize>) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    ids.into_iter()
        .map(|c| {
            let next = map.len();
            *map.entry(c).or_insert(next)
        })
        .collect()
}

impl Adjacency for DiGraph {
    fn agent_count(&self) -> usize {
        self.n
    }

    fn neighbors(&self, id: usize) -> &[usize] {
        &self.out[id]
    }

    fn links(&self) -> Vec<(usize, usize)> {
        self.arcs.iter().copied().collect()
    }
}

/// Every weakly connected component is strongly connected.
pub fn is_cut_balanced(g: &DiGraph) -> bool {
    // strong components refine weak ones, so equal partitions have equal labels
    g.weak_components() == g.strong_components()
}

/// `P_ij > 0` exactly when `P_ji > 0`.
pub fn is_type_symmetric(p: &Matrix) -> bool {
    let n = p.n();
    (0..n).all(|i| (0..i).all(|j| (p.get(i, j) > 0.0) == (p.get(j, i) > 0.0)))
}

/// Internal cuts `i` in `(u, v]` (ranks) lacking an arc across them in
/// either direction. Empty means every cut is hovered over from both sides.
pub fn hovering_failures(g: &DiGraph, x: &Configuration, u: usize, v: usize) -> Vec<usize> {
    let mut failures = Vec::new();
    for cut in u + 1..=v {
        let mut rightward = false;
        let mut leftward = false;
        for (a, b) in g.arcs() {
            let (ra, rb) = (x.rank_of(a), x.rank_of(b));
            rightward |= ra < cut && cut <= rb;
            leftward |= rb < cut && cut <= ra;
        }
        if !(rightward && leftward) {
            failures.push(cut);
        }
    }
    failures
}

/// Arcs `(a, b)` and `(b', a')` with `a, a' < i <= b, b'` exist for every
/// rank `i` in `u+1..=v`.
pub fn hovering_check(g: &DiGraph, x: &Configuration, u: usize, v: usize) -> bool {
    hovering_failures(g, x, u, v).is_empty()
}

/// A row-stochastic update with positive diagonal and entries bounded below.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticStep {
    matrix: Matrix,
    rho_floor: f64,
    support: DiGraph,
}

impl StochasticStep {
    /// `rho_floor` defaults to the smallest positive entry, capped at 1/2.
    pub fn new(matrix: Matrix, rho_floor: Option<f64>) -> Result<Self> {
        if !matrix.is_row_stochastic() {
            return Err(Error::Policy("matrix is not row-stochastic".into()));
        }
        let n = matrix.n();
        if let Some(i) = (0..n).find(|&i| matrix.get(i, i) <= 0.0) {
            return Err(Error::Policy(format!("diagonal entry {i} is not positive")));
        }
        let min_positive = matrix.min_positive().unwrap_or(0.5);
        let rho_floor = rho_floor.unwrap_or(min_positive.min(0.5));
        crate::error::check_rho(rho_floor)?;
        if min_positive < rho_floor - ROW_SUM_TOLERANCE {
            return Err(Error::Policy(format!(
                "entry {min_positive} is below the floor {rho_floor}"
            )));
        }
        let support = DiGraph::new(n, matrix.support_arcs())?;
        Ok(StochasticStep {
            matrix,
            rho_floor,
            support,
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn rho_floor(&self) -> f64 {
        self.rho_floor
    }

    pub fn support(&self) -> &DiGraph {
        &self.support
    }
}

#[derive(Debug, Clone)]
pub struct AsymOutcome {
    pub y: Configuration,
    /// False when the support is not cut-balanced; the energy bounds do not cover such steps.
    pub cut_balanced: bool,
    /// Allowed interval of each agent, by rank of `x`, at `rho_floor`.
    pub allowed: Vec<(f64, f64)>,
}

/// `y = P x`, re-sorted.
pub fn asym_step(x: &Configuration, step: &StochasticStep) -> Result<AsymOutcome> {
    let n = x.n();
    if step.matrix.n() != n {
        return Err(Error::Dimension {
            expected: n,
            found: step.matrix.n(),
        });
    }
    let raw = step.matrix.mul_vec(&x.by_id());
    let mut next = vec![0.0; n];
    let mut allowed = Vec::with_capacity(n);
    for rank in 0..n {
        let id = x.label(rank);
        // the product lies in the band; clamping only strips rounding
        let (lo, hi) = representable_interval(&step.support, x, rank, step.rho_floor).ok_or_else(|| {
            Error::Policy(format!(
                "agent {id}: no double satisfies the averaging constraint; its neighbourhood is below f64 resolution"
            ))
        })?;
        next[id] = raw[id].clamp(lo, hi);
        allowed.push((lo, hi));
    }
    Ok(AsymOutcome {
        y: Configuration::from_positions(&next)?.with_time(x.time() + 1),
        cut_balanced: is_cut_balanced(&step.support),
        allowed,
    })
}

/// Random row weights on `support` (which includes the diagonal), each at least `floor`.
fn random_rows<R: Rng + ?Sized>(
    n: usize,
    support: &[Vec<usize>],
    floor: f64,
    rng: &mut R,
) -> Result<Matrix> {
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        let cols = &support[i];
        let spare = 1.0 - floor * cols.len() as f64;
        if spare < -ROW_SUM_TOLERANCE {
            return Err(Error::Policy(format!(
                "row {i} has {} entries, too many for floor {floor}",
                cols.len()
            )));
        }
        let raw: Vec<f64> = cols.iter().map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = raw.iter().sum();
        let mut off_diagonal = 0.0;
        for (&j, w) in cols.iter().zip(&raw) {
            if j != i {
                let v = floor + spare.max(0.0) * w / total;
                data[i * n + j] = v;
                off_diagonal += v;
            }
        }
        data[i * n + i] = 1.0 - off_diagonal;
    }
    Matrix::from_row_major(n, data)
}

/// Random type-symmetric step: a random undirected graph with degree at most
/// `1/floor - 1` and random rows whose entries are at least `floor`.
pub fn random_type_symmetric_step<R: Rng + ?Sized>(
    n: usize,
    edge_probability: f64,
    floor: f64,
    rng: &mut R,
) -> Result<StochasticStep> {
    crate::error::check_rho(floor)?;
    let max_degree = ((1.0 / floor) + 1e-9).floor() as usize - 1;
    let g = crate::simulate::random_graph(n, edge_probability, Some(max_degree), rng);
    let support: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut cols = vec![i];
            cols.extend_from_slice(g.neighbors(i));
            cols
        })
        .collect();
    let m = random_rows(n, &support, floor, rng)?;
    StochasticStep::new(m, Some(floor))
}

/// Random cut-balanced step that is generally not type-symmetric: agents are
/// split into groups and each group of two or more is wired as a directed cycle
/// in random order.
pub fn random_cut_balanced_step<R: Rng + ?Sized>(
    n: usize,
    floor: f64,
    rng: &mut R,
) -> Result<StochasticStep> {
    crate::error::check_rho(floor)?;
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(rng);
    let mut support: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut start = 0;
    while start < n {
        let len = rng.random_range(1..=n - start);
        let group = &ids[start..start + len];
        if len >= 2 {
            for k in 0..len {
                support[group[k]].push(group[(k + 1) % len]);
            }
        }
        start += len;
    }
    let m = random_rows(n, &support, floor, rng)?;
    StochasticStep::new(m, Some(floor))
}
