//! Twist systems: order-preserving dynamics over a rank window `[u, v]`.
//!
//! Positions here are plain rank-ordered slices; a twist step never
//! reorders agents, so labels carry no information.

use rand::Rng;

use crate::error::{check_rho, check_s, Error, Result};
use crate::geometry::pow_s;

/// A window `u < v` (ranks, 0-based) and the averaging parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistStep {
    pub u: usize,
    pub v: usize,
    pub rho: f64,
}

impl TwistStep {
    pub fn new(u: usize, v: usize, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        if u >= v {
            return Err(Error::Range {
                index: u,
                what: "twist window start must be below its end",
            });
        }
        Ok(TwistStep { u, v, rho })
    }

    pub fn contains(&self, rank: usize) -> bool {
        self.u <= rank && rank <= self.v
    }

    fn check_fits(&self, n: usize) -> Result<()> {
        if self.v >= n {
            return Err(Error::Range {
                index: self.v,
                what: "twist window end",
            });
        }
        Ok(())
    }
}

/// Allowed interval `τ_i` for the agent at rank `agent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistInterval {
    pub agent: usize,
    pub lo: f64,
    pub hi: f64,
}

pub fn twist_interval(x: &[f64], step: &TwistStep, i: usize) -> Result<TwistInterval> {
    step.check_fits(x.len())?;
    if !step.contains(i) {
        return Err(Error::Range {
            index: i,
            what: "rank outside the twist window",
        });
    }
    let (xu, xv) = (x[step.u], x[step.v]);
    let right_nbr = x[(i + 1).min(step.v)];
    let left_nbr = x[i.saturating_sub(1).max(step.u)];
    Ok(TwistInterval {
        agent: i,
        lo: xu + step.rho * (right_nbr - xu),
        hi: xv - step.rho * (xv - left_nbr),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum TwistViolation {
    /// `y[rank] > y[rank + 1]`.
    Order { rank: usize },
    /// Inside the window but outside its twist.
    OutsideTwist {
        rank: usize,
        lo: f64,
        hi: f64,
        value: f64,
    },
    /// Outside the window but moved.
    Moved { rank: usize, from: f64, to: f64 },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TwistReport {
    pub violations: Vec<TwistViolation>,
}

impl TwistReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_twist_step(x: &[f64], step: &TwistStep, y: &[f64], tol: f64) -> Result<TwistReport> {
    if y.len() != x.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            found: y.len(),
        });
    }
    step.check_fits(x.len())?;
    let mut report = TwistReport::default();
    for rank in 0..y.len().saturating_sub(1) {
        if y[rank] > y[rank + 1] {
            report.violations.push(TwistViolation::Order { rank });
        }
    }
    for rank in 0..x.len() {
        if step.contains(rank) {
            let tau = twist_interval(x, step, rank)?;
            if y[rank] < tau.lo - tol || y[rank] > tau.hi + tol {
                report.violations.push(TwistViolation::OutsideTwist {
                    rank,
                    lo: tau.lo,
                    hi: tau.hi,
                    value: y[rank],
                });
            }
        } else if y[rank] != x[rank] {
            report.violations.push(TwistViolation::Moved {
                rank,
                from: x[rank],
                to: y[rank],
            });
        }
    }
    Ok(report)
}

/// `(x_v - x_u)^s`.
pub fn twist_step_energy(x: &[f64], step: &TwistStep, s: f64) -> Result<f64> {
    check_s(s)?;
    step.check_fits(x.len())?;
    Ok(pow_s(x[step.v] - x[step.u], s))
}

/// Every agent in the window moves to the left end of its twist.
pub fn leftmost_twist_step(x: &[f64], step: &TwistStep) -> Result<Vec<f64>> {
    let mut y = x.to_vec();
    for i in step.u..=step.v {
        y[i] = twist_interval(x, step, i)?.lo;
    }
    Ok(y)
}

/// Independent uniform draws in each twist, then sorted.
///
/// Twist endpoints are nondecreasing in the rank, so sorting the draws keeps
/// the `k`-th value inside `τ_k`.
pub fn uniform_twist_step<R: Rng + ?Sized>(x: &[f64], step: &TwistStep, rng: &mut R) -> Result<Vec<f64>> {
    let mut y = x.to_vec();
    for i in step.u..=step.v {
        let tau = twist_interval(x, step, i)?;
        y[i] = if tau.hi > tau.lo {
            rng.random_range(tau.lo..=tau.hi)
        } else {
            tau.lo
        };
    }
    y[step.u..=step.v].sort_by(f64::total_cmp);
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    const X: [f64; 3] = [0.0, 0.5, 1.0];

    #[test]
    fn twist_examples() {
        let step = TwistStep::new(0, 2, 0.25).unwrap();
        let t2 = twist_interval(&X, &step, 1).unwrap();
        assert_eq!((t2.lo, t2.hi), (0.25, 0.75));
        let t1 = twist_interval(&X, &step, 0).unwrap();
        assert_eq!((t1.lo, t1.hi), (0.125, 0.75));
        let t3 = twist_interval(&X, &step, 2).unwrap();
        assert_eq!((t3.lo, t3.hi), (0.25, 0.875));

        let pair = TwistStep::new(0, 1, 0.5).unwrap();
        for i in 0..2 {
            let t = twist_interval(&[0.0, 1.0], &pair, i).unwrap();
            assert_eq!((t.lo, t.hi), (0.5, 0.5));
        }
    }

    #[test]
    fn rank_outside_window_is_rejected() {
        let step = TwistStep::new(1, 2, 0.25).unwrap();
        assert!(matches!(twist_interval(&X, &step, 0), Err(Error::Range { .. })));
        assert!(TwistStep::new(2, 2, 0.25).is_err());
        assert!(TwistStep::new(0, 1, 0.6).is_err());
    }

    #[test]
    fn validation_examples() {
        let step = TwistStep::new(0, 2, 0.25).unwrap();
        let left = leftmost_twist_step(&X, &step).unwrap();
        assert!(validate_twist_step(&X, &step, &left, 0.0).unwrap().is_ok());
        assert!(validate_twist_step(&X, &step, &[0.2, 0.5, 0.7], 0.0).unwrap().is_ok());

        let r = validate_twist_step(&X, &step, &[0.3, 0.26, 0.7], 0.0).unwrap();
        assert!(r.violations.contains(&TwistViolation::Order { rank: 0 }));

        let narrow = TwistStep::new(0, 1, 0.25).unwrap();
        let r = validate_twist_step(&X, &narrow, &[0.2, 0.3, 0.9], 0.0).unwrap();
        assert!(matches!(r.violations[..], [TwistViolation::Moved { rank: 2, .. }]));
    }

    #[test]
    fn energy_examples() {
        let step = TwistStep::new(0, 1, 0.25).unwrap();
        assert_eq!(twist_step_energy(&[0.0, 1.0], &step, 0.3).unwrap(), 1.0);
        assert!((twist_step_energy(&[0.3, 0.8], &step, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(twist_step_energy(&[0.4, 0.4], &step, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn coincident_window_degenerates() {
        let step = TwistStep::new(0, 2, 0.5).unwrap();
        let x = [0.3, 0.3, 0.3];
        for i in 0..3 {
            let t = twist_interval(&x, &step, i).unwrap();
            assert_eq!((t.lo, t.hi), (0.3, 0.3));
        }
        assert!(validate_twist_step(&x, &step, &x, 0.0).unwrap().is_ok());
    }
}
