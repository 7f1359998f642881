//! Interval-union geometry of embedded graphs and the per-step energy.

use crate::configuration::Configuration;
use crate::error::{check_s, Result};
use crate::graph::Adjacency;

/// Closed interval `[lo, hi]` on the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "interval [{lo}, {hi}] is reversed");
        Interval { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_degenerate(&self) -> bool {
        self.hi <= self.lo
    }

    pub fn contains(&self, p: f64) -> bool {
        self.lo <= p && p <= self.hi
    }
}

/// `len^s` with the convention `0^s = 0`.
pub fn pow_s(len: f64, s: f64) -> f64 {
    if len > 0.0 {
        len.powf(s)
    } else {
        0.0
    }
}

/// Maximal connected pieces of the union of all embedded edges.
///
/// Each edge `(i, j)` embeds as `[min(x_i, x_j), max(x_i, x_j)]`, each
/// self-loop as the point `x_i`. The output is sorted and pairwise disjoint;
/// touching pieces are merged since the intervals are closed.
pub fn interval_union<G: Adjacency + ?Sized>(g: &G, x: &Configuration) -> Vec<Interval> {
    let mut pieces: Vec<Interval> = g
        .links()
        .into_iter()
        .map(|(i, j)| {
            let (a, b) = (x.position_of(i), x.position_of(j));
            Interval::new(a.min(b), a.max(b))
        })
        .chain(x.positions().iter().map(|&p| Interval::new(p, p)))
        .collect();
    pieces.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));

    let mut out: Vec<Interval> = Vec::new();
    for piece in pieces {
        match out.last_mut() {
            Some(cur) if piece.lo <= cur.hi => cur.hi = cur.hi.max(piece.hi),
            _ => out.push(piece),
        }
    }
    out
}

/// `Σ_k (b_k - a_k)^s` over the given intervals.
pub fn step_energy(intervals: &[Interval], s: f64) -> Result<f64> {
    check_s(s)?;
    Ok(intervals.iter().map(|iv| pow_s(iv.len(), s)).sum())
}
