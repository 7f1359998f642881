//! Exact sign tests for the averaging band, used to keep generated steps
//! valid in real arithmetic and not just up to rounding.

use std::cmp::Ordering;

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Sign of the exact real sum of `terms`.
pub fn sum_sign(terms: &[f64]) -> Ordering {
    // nonoverlapping expansion in increasing magnitude
    let mut expansion: Vec<f64> = Vec::with_capacity(terms.len());
    for &t in terms {
        let mut q = t;
        let mut next = Vec::with_capacity(expansion.len() + 1);
        for &c in &expansion {
            let (s, e) = two_sum(q, c);
            if e != 0.0 {
                next.push(e);
            }
            q = s;
        }
        if q != 0.0 {
            next.push(q);
        }
        expansion = next;
    }
    expansion.last().map_or(Ordering::Equal, |v| v.partial_cmp(&0.0).unwrap())
}

/// `-ρ(x_r - x_l)` as four floats summing to it exactly.
fn neg_margin(xl: f64, xr: f64, rho: f64) -> [f64; 4] {
    let (d, dl) = two_sum(xr, -xl);
    let (p1, e1) = two_prod(rho, d);
    let (p2, e2) = two_prod(rho, dl);
    [-p1, -e1, -p2, -e2]
}

/// `y ≥ x_l + ρ(x_r - x_l)` exactly.
pub fn above_lower(y: f64, xl: f64, xr: f64, rho: f64) -> bool {
    let m = neg_margin(xl, xr, rho);
    sum_sign(&[y, -xl, m[0], m[1], m[2], m[3]]) != Ordering::Less
}

/// `y ≤ x_r - ρ(x_r - x_l)` exactly.
pub fn below_upper(y: f64, xl: f64, xr: f64, rho: f64) -> bool {
    let m = neg_margin(xl, xr, rho);
    sum_sign(&[xr, -y, m[0], m[1], m[2], m[3]]) != Ordering::Less
}

/// The doubles in `[x_l + ρΔ, x_r - ρΔ]`, starting from rounded guesses.
///
/// `None` when no double lies in the band.
pub fn representable_band(xl: f64, xr: f64, rho: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    if xl == xr {
        return Some((xl, xl));
    }
    let mut lo = lo;
    while !above_lower(lo, xl, xr, rho) {
        lo = lo.next_up();
    }
    let mut hi = hi;
    while !below_upper(hi, xl, xr, rho) {
        hi = hi.next_down();
    }
    (lo <= hi).then_some((lo, hi))
}
