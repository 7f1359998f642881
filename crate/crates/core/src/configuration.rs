//! Agent positions on the unit interval, kept in rank order.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Positions of `n` agents at one time step.
///
/// Positions are stored by *rank*: rank 0 is the leftmost agent. Ties are
/// broken by the original agent id, so the rank order is a total order and
/// `labels[rank]` recovers the id.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    positions: Vec<f64>,
    labels: Vec<usize>,
    ranks: Vec<usize>,
    time: u64,
}

impl Configuration {
    /// Build from positions indexed by agent id.
    pub fn from_positions(by_id: &[f64]) -> Result<Self> {
        for &p in by_id {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Parameter {
                    name: "position",
                    value: p,
                    expected: "[0, 1]",
                });
            }
        }
        let mut labels: Vec<usize> = (0..by_id.len()).collect();
        labels.sort_by(|&a, &b| match by_id[a].total_cmp(&by_id[b]) {
            Ordering::Equal => a.cmp(&b),
            o => o,
        });
        let mut ranks = vec![0; by_id.len()];
        for (rank, &id) in labels.iter().enumerate() {
            ranks[id] = rank;
        }
        let positions = labels.iter().map(|&id| by_id[id]).collect();
        Ok(Configuration {
            positions,
            labels,
            ranks,
            time: 0,
        })
    }

    /// Build from positions that are already in rank order; labels are the identity.
    pub fn from_sorted(positions: Vec<f64>) -> Result<Self> {
        if positions.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Trace("positions are not sorted".into()));
        }
        Self::from_positions(&positions)
    }

    pub fn with_time(mut self, time: u64) -> Self {
        self.time = time;
        self
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    /// Positions in rank order (nondecreasing).
    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn position(&self, rank: usize) -> f64 {
        self.positions[rank]
    }

    pub fn position_of(&self, id: usize) -> f64 {
        self.positions[self.ranks[id]]
    }

    pub fn label(&self, rank: usize) -> usize {
        self.labels[rank]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn rank_of(&self, id: usize) -> usize {
        self.ranks[id]
    }

    /// Positions indexed by agent id.
    pub fn by_id(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for (rank, &id) in self.labels.iter().enumerate() {
            out[id] = self.positions[rank];
        }
        out
    }

    pub fn diameter(&self) -> f64 {
        match (self.positions.first(), self.positions.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// True when both configurations place every agent id at the same position.
    pub fn same_placement(&self, other: &Configuration) -> bool {
        self.n() == other.n() && (0..self.n()).all(|id| self.position_of(id) == other.position_of(id))
    }
}
