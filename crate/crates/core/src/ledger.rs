//! Pairwise credit accounts certifying the s-energy bound step by step.
//!
//! Every pair of ranks `i < j` holds `B_ij = (x_j - x_i)^s A^(j-i)` credits
//! with `A = 2/(ρs)`. A twist step re-prices each account at the new
//! positions. Pairs are processed in descending `j - i`; each receives half
//! of the leftovers of `(i-1, j)` and `(i, j+1)`, and its own leftover
//! `D_ij` must never go negative. The leftover of `(u, u+1)` pays the
//! step's energy `(x_v - x_u)^s`. The total ever spent is therefore bounded
//! by the money present at the start.

use crate::error::{check_rho, check_s, Error, Result};
use crate::geometry::pow_s;
use crate::reduction::reduce_trace;
use crate::trace::{StepAction, Trace};
use crate::twist::{validate_twist_step, TwistStep};

/// Relative tolerance applied to account-scale quantities.
pub const LEDGER_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Ledger {
    n: usize,
    s: f64,
    rho: f64,
    a: f64,
    /// Row-major `n × n`; only `i < j` is used.
    accounts: Vec<f64>,
    positions: Vec<f64>,
    spent: f64,
    injected: f64,
    slack_discarded: f64,
}

/// Flows for one pair during a clearing pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairFlow {
    pub i: usize,
    pub j: usize,
    /// Balance before the step.
    pub b: f64,
    /// Credits received from `(i-1, j)` and `(i, j+1)`.
    pub c: f64,
    /// Leftover after re-pricing.
    pub d: f64,
    /// Balance after the step.
    pub b_next: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClearingRecord {
    pub step: TwistStep,
    pub a: f64,
    /// In descending order of `j - i`, then ascending `i`.
    pub pairs: Vec<PairFlow>,
    /// `D(u, u+1)`.
    pub payment_available: f64,
    /// `(x_v - x_u)^s`.
    pub energy_due: f64,
}

impl ClearingRecord {
    pub fn pair(&self, i: usize, j: usize) -> Option<&PairFlow> {
        self.pairs.iter().find(|p| p.i == i && p.j == j)
    }
}

impl Ledger {
    pub fn init(x: &[f64], s: f64, rho: f64) -> Result<Ledger> {
        check_s(s)?;
        check_rho(rho)?;
        let n = x.len();
        let a = 2.0 / (rho * s);
        let accounts = price_accounts(x, s, a);
        let injected = accounts.iter().sum();
        Ok(Ledger {
            n,
            s,
            rho,
            a,
            accounts,
            positions: x.to_vec(),
            spent: 0.0,
            injected,
            slack_discarded: 0.0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `A = 2/(ρs)`.
    pub fn base(&self) -> f64 {
        self.a
    }

    pub fn account(&self, i: usize, j: usize) -> f64 {
        self.accounts[i * self.n + j]
    }

    pub fn accounts_total(&self) -> f64 {
        self.accounts.iter().sum()
    }

    pub fn spent(&self) -> f64 {
        self.spent
    }

    pub fn injected(&self) -> f64 {
        self.injected
    }

    pub fn slack_discarded(&self) -> f64 {
        self.slack_discarded
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// `injected - spent - Σ B - discarded`; zero up to rounding.
    pub fn conservation_residual(&self) -> f64 {
        self.injected - self.spent - self.accounts_total() - self.slack_discarded
    }

    fn pair_tolerance(&self, gap: usize) -> f64 {
        LEDGER_TOLERANCE * self.a.powi(gap as i32)
    }

    /// Execute the clearing rules for the twist step `x → y` over window `step`.
    ///
    /// The ledger is left untouched when an error is returned.
    pub fn clear(&mut self, x: &[f64], y: &[f64], step: &TwistStep) -> Result<ClearingRecord> {
        let n = self.n;
        for len in [x.len(), y.len()] {
            if len != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: len,
                });
            }
        }
        if step.v >= n {
            return Err(Error::Range {
                index: step.v,
                what: "twist window end",
            });
        }
        // the stored balances must agree with a fresh pricing of x
        let fresh = price_accounts(x, self.s, self.a);
        for i in 0..n {
            for j in i + 1..n {
                let k = i * n + j;
                if (fresh[k] - self.accounts[k]).abs() > self.pair_tolerance(j - i) {
                    return Err(Error::Trace(format!(
                        "ledger out of sync at pair ({i}, {j}): stored {} vs {}",
                        self.accounts[k], fresh[k]
                    )));
                }
            }
        }

        let next = price_accounts(y, self.s, self.a);
        let mut leftover = vec![0.0; n * n];
        let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
        for gap in (1..n).rev() {
            for i in 0..n - gap {
                let j = i + gap;
                let from_left = if i > 0 { leftover[(i - 1) * n + j] } else { 0.0 };
                let from_right = if j + 1 < n { leftover[i * n + j + 1] } else { 0.0 };
                let c = 0.5 * (from_left + from_right);
                let b = self.accounts[i * n + j];
                let b_next = next[i * n + j];
                let d = b + c - b_next;
                let tolerance = self.pair_tolerance(gap);
                if d < -tolerance {
                    return Err(Error::CertificateViolation {
                        i,
                        j,
                        donation: d,
                        tolerance,
                    });
                }
                leftover[i * n + j] = d;
                pairs.push(PairFlow { i, j, b, c, d, b_next });
            }
        }

        let energy_due = pow_s(x[step.v] - x[step.u], self.s);
        let payment_available = leftover[step.u * n + step.u + 1];
        if payment_available < energy_due - LEDGER_TOLERANCE * self.a {
            return Err(Error::PaymentFailure {
                available: payment_available,
                due: energy_due,
            });
        }

        // only adjacent pairs have no one to donate to
        let released: f64 = (0..n - 1).map(|i| leftover[i * n + i + 1]).sum();
        self.spent += energy_due;
        self.slack_discarded += released - energy_due;
        self.accounts = next;
        self.positions = y.to_vec();
        Ok(ClearingRecord {
            step: *step,
            a: self.a,
            pairs,
            payment_available,
            energy_due,
        })
    }
}

fn price_accounts(x: &[f64], s: f64, a: f64) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            out[i * n + j] = pow_s(x[j] - x[i], s) * a.powi((j - i) as i32);
        }
    }
    out
}

/// Check `B_ij + C_ij ≥ (x_{v(j)} - x_{u(i)})^s A^(j-i)` for every pair,
/// where `u(k) = u, v(k) = v` inside the window and `u(k) = v(k) = k` outside.
///
/// Returns the smallest slack.
pub fn check_bc_lowerbound(record: &ClearingRecord, x: &[f64], s: f64) -> Result<f64> {
    let step = &record.step;
    let lo_index = |k: usize| if step.contains(k) { step.u } else { k };
    let hi_index = |k: usize| if step.contains(k) { step.v } else { k };
    let mut min_slack = f64::INFINITY;
    for p in &record.pairs {
        let scale = record.a.powi((p.j - p.i) as i32);
        let need = pow_s(x[hi_index(p.j)] - x[lo_index(p.i)], s) * scale;
        let slack = p.b + p.c - need;
        let tolerance = LEDGER_TOLERANCE * scale;
        if slack < -tolerance {
            return Err(Error::AccountBound {
                i: p.i,
                j: p.j,
                shortfall: -slack,
                tolerance,
            });
        }
        min_slack = min_slack.min(slack);
    }
    Ok(min_slack)
}

/// `1 - (1-x)^s ≥ s x`, up to 1e-15.
pub fn ineq_sx(s: f64, x: f64) -> bool {
    ineq_sx_slack(s, x) >= -1e-15
}

pub fn ineq_sx_slack(s: f64, x: f64) -> f64 {
    1.0 - (1.0 - x).powf(s) - s * x
}

/// The initial injection bound and its two closed-form majorants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InjectionBound {
    pub a: f64,
    /// `Σ_{i<j} A^(j-i) = Σ_k (n-k) A^k`.
    pub sum: f64,
    /// `(A/(A-1))² A^(n-1)`.
    pub ratio_majorant: f64,
    /// `2 (2/ρs)^(n-1)`.
    pub simple_majorant: f64,
}

pub fn bound_injection(n: usize, s: f64, rho: f64) -> Result<InjectionBound> {
    check_s(s)?;
    check_rho(rho)?;
    if n < 2 {
        return Err(Error::Range {
            index: n,
            what: "injection bound needs at least two agents",
        });
    }
    let a = 2.0 / (rho * s);
    if a <= 1.0 {
        return Err(Error::Parameter {
            name: "A",
            value: a,
            expected: "(1, inf)",
        });
    }
    let sum = (1..n).map(|k| (n - k) as f64 * a.powi(k as i32)).sum();
    let top = a.powi(n as i32 - 1);
    Ok(InjectionBound {
        a,
        sum,
        ratio_majorant: (a / (a - 1.0)).powi(2) * top,
        simple_majorant: 2.0 * top,
    })
}

/// Outcome of running the ledger over a whole trace.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateSummary {
    pub s: f64,
    pub rho: f64,
    pub a: f64,
    pub injected: f64,
    pub spent: f64,
    pub accounts_total: f64,
    pub slack_discarded: f64,
    pub steps_cleared: usize,
    /// Largest `|conservation residual| / injected` seen after any step.
    pub max_conservation_residual: f64,
    /// Smallest slack of the account lower bound over all steps.
    pub min_account_slack: f64,
}

/// Reduce `trace` to twist steps if needed, then clear every step.
///
/// `on_record` sees the original step index and each clearing record.
pub fn certify_trace_with<F>(trace: &Trace, s: f64, mut on_record: F) -> Result<CertificateSummary>
where
    F: FnMut(u64, &ClearingRecord),
{
    let twist = reduce_trace(trace)?;
    let start = match twist.records.first() {
        Some(r) => r.before.positions().to_vec(),
        None => match trace.records.first() {
            Some(r) => r.before.positions().to_vec(),
            None => vec![0.0; trace.n],
        },
    };
    let mut ledger = Ledger::init(&start, s, trace.params.rho)?;
    let mut max_residual = 0.0f64;
    let mut min_slack = f64::INFINITY;
    let scale = ledger.injected().max(f64::MIN_POSITIVE);
    for (k, rec) in twist.records.iter().enumerate() {
        let StepAction::Window(step) = &rec.action else {
            unreachable!("reduce_trace yields twist records only");
        };
        let (x, y) = (rec.before.positions(), rec.after.positions());
        let report = validate_twist_step(x, step, y, trace.params.tolerance)?;
        if !report.is_ok() {
            return Err(Error::Trace(format!(
                "twist substep {k} violates its constraints: {:?}",
                report.violations
            )));
        }
        let record = ledger.clear(x, y, step)?;
        min_slack = min_slack.min(check_bc_lowerbound(&record, x, s)?);
        max_residual = max_residual.max(ledger.conservation_residual().abs() / scale);
        on_record(rec.t, &record);
    }
    Ok(CertificateSummary {
        s,
        rho: trace.params.rho,
        a: ledger.base(),
        injected: ledger.injected(),
        spent: ledger.spent(),
        accounts_total: ledger.accounts_total(),
        slack_discarded: ledger.slack_discarded(),
        steps_cleared: twist.records.len(),
        max_conservation_residual: max_residual,
        min_account_slack: min_slack,
    })
}

pub fn certify_trace(trace: &Trace, s: f64) -> Result<CertificateSummary> {
    certify_trace_with(trace, s, |_, _| {})
}
