//! Bracketed scalar root finding: bisection for guaranteed progress, secant
//! (regula falsi with the Illinois modification) for speed.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub(crate) struct RootTol {
    /// Stop once the bracket is narrower than this.
    pub x_tol: f64,
    /// Stop once |f| falls below this.
    pub f_tol: f64,
    pub max_iter: usize,
}

impl Default for RootTol {
    fn default() -> Self {
        Self {
            x_tol: 1e-14,
            f_tol: 1e-15,
            max_iter: 400,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Root {
    /// Endpoint of the final bracket on the nonnegative side of `f`.
    pub upper: f64,
}

/// Finds a sign change of `f` in `[a, b]` where `f(a) < 0 <= f(b)` (the
/// bracket may be given in either order). Non-finite values are allowed and
/// are handled by bisection.
pub(crate) fn solve_bracketed<F>(mut f: F, a: f64, b: f64, tol: RootTol) -> Result<Root>
where
    F: FnMut(f64) -> Result<f64>,
{
    let fa = f(a)?;
    let fb = f(b)?;
    let (mut neg, mut f_neg, mut pos, mut f_pos) = if fa < 0.0 && fb >= 0.0 {
        (a, fa, b, fb)
    } else if fb < 0.0 && fa >= 0.0 {
        (b, fb, a, fa)
    } else {
        return Err(Error::NotFound(format!(
            "no sign change on [{a}, {b}] (f = {fa}, {fb})"
        )));
    };
    if f_pos == 0.0 {
        return Ok(Root { upper: pos });
    }

    let mut side = 0i8;
    let mut halving_due = false;
    for _ in 0..tol.max_iter {
        let width = (pos - neg).abs();
        if width <= tol.x_tol || f_pos.abs() <= tol.f_tol {
            break;
        }
        let mid = 0.5 * (neg + pos);
        if mid == neg || mid == pos {
            break;
        }
        let mut x = mid;
        if !halving_due && f_neg.is_finite() && f_pos.is_finite() && f_pos != f_neg {
            let cand = pos - f_pos * (pos - neg) / (f_pos - f_neg);
            let (lo, hi) = if neg < pos { (neg, pos) } else { (pos, neg) };
            if cand > lo && cand < hi {
                x = cand;
            }
        }
        let fx = f(x)?;
        let before = width;
        if fx < 0.0 {
            neg = x;
            f_neg = fx;
            if side == -1 {
                f_pos *= 0.5;
            }
            side = -1;
        } else {
            pos = x;
            f_pos = fx;
            if side == 1 {
                f_neg *= 0.5;
            }
            side = 1;
            if fx == 0.0 {
                break;
            }
        }
        // Alternate with plain bisection whenever the secant fails to halve the bracket.
        halving_due = (pos - neg).abs() > 0.5 * before;
    }
    Ok(Root { upper: pos })
}

/// Expands `hi` geometrically from `start` until `f(hi) >= 0`.
pub(crate) fn expand_upward<F>(mut f: F, start: f64, factor: f64, limit: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut x = start;
    while x <= limit {
        if f(x)? >= 0.0 {
            return Ok(x);
        }
        x *= factor;
    }
    Err(Error::NotFound(format!(
        "no admissible bracket below {limit}"
    )))
}

/// Bisects a monotone predicate: `pred(lo)` false, `pred(hi)` true.
/// Returns the final `(lo, hi)` with width at most `tol`.
pub(crate) fn bisect_predicate<F>(mut pred: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<bool>,
{
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}
