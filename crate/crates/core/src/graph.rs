//! Communication graphs for a single time step.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Anything that can tell which agents a given agent listens to.
///
/// Self-loops are implicit: `neighbors` never lists the agent itself, but
/// every consumer treats an agent as adjacent to itself.
pub trait Adjacency {
    fn agent_count(&self) -> usize;

    /// Agents (by id) whose positions `id` may average with, excluding `id`.
    fn neighbors(&self, id: usize) -> &[usize];

    /// Every non-loop edge or arc as an id pair, each listed once.
    fn links(&self) -> Vec<(usize, usize)>;
}

/// Undirected graph over agent ids `0..n` with implicit self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

impl StepGraph {
    /// Self-loops only.
    pub fn empty(n: usize) -> Self {
        StepGraph {
            n,
            edges: BTreeSet::new(),
            adj: vec![Vec::new(); n],
        }
    }

    /// Build from unordered id pairs. Pairs `(i, i)` are accepted and ignored.
    pub fn new<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            for k in [i, j] {
                if k >= n {
                    return Err(Error::Range {
                        index: k,
                        what: "edge endpoint",
                    });
                }
            }
            if i != j {
                set.insert((i.min(j), i.max(j)));
            }
        }
        let mut adj = vec![Vec::new(); n];
        for &(i, j) in &set {
            adj[i].push(j);
            adj[j].push(i);
        }
        Ok(StepGraph { n, edges: set, adj })
    }

    /// Complete graph on `subset`, self-loops everywhere else.
    pub fn complete_on(n: usize, subset: &[usize]) -> Result<Self> {
        let mut edges = Vec::new();
        for (k, &i) in subset.iter().enumerate() {
            for &j in &subset[k + 1..] {
                edges.push((i, j));
            }
        }
        if let Some(&bad) = subset.iter().find(|&&i| i >= n) {
            return Err(Error::Range {
                index: bad,
                what: "subset member",
            });
        }
        Self::new(n, edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as `(i, j)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i == j || self.edges.contains(&(i.min(j), i.max(j)))
    }
}

impl Adjacency for StepGraph {
    fn agent_count(&self) -> usize {
        self.n
    }

    fn neighbors(&self, id: usize) -> &[usize] {
        &self.adj[id]
    }

    fn links(&self) -> Vec<(usize, usize)> {
        self.edges.iter().copied().collect()
    }
}
