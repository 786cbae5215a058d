//! One-dimensional convex minimization on `[0, ∞)` or `[0, upper]`.

use crate::error::{Error, Result};
use crate::objective::Quadratic1d;

/// Brackets larger than this are treated as divergence along the line.
pub const OVERFLOW_BOUND: f64 = 1e100;
/// Evaluation budget of the derivative-free search.
pub const MAX_EVALS: usize = 200;
/// Relative width at which golden-section search stops.
pub const REL_TOL: f64 = 1e-10;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimizer of a convex quadratic over `[0, upper]` (`upper = None` means unbounded).
pub fn argmin_quadratic(q: Quadratic1d, upper: Option<f64>) -> Result<f64> {
    let s = if q.a > 0.0 {
        (-q.b / (2.0 * q.a)).max(0.0)
    } else if q.b >= 0.0 {
        0.0
    } else {
        match upper {
            Some(u) => u,
            None => {
                return Err(Error::LineSearchDivergence {
                    bound: OVERFLOW_BOUND,
                })
            }
        }
    };
    if !s.is_finite() || (upper.is_none() && s > OVERFLOW_BOUND) {
        return Err(Error::LineSearchDivergence {
            bound: OVERFLOW_BOUND,
        });
    }
    Ok(match upper {
        Some(u) => s.min(u),
        None => s,
    })
}

/// Derivative-free minimization of a convex `phi` over `[0, upper]`.
///
/// Without an upper bound the bracket is expanded by doubling from `[0, 1]`.
/// The returned point is the best one evaluated, so `phi(s) ≤ phi(0)` always.
pub fn golden_section<F: FnMut(f64) -> f64>(mut phi: F, upper: Option<f64>) -> Result<f64> {
    let mut evals = 0usize;
    let mut eval = |s: f64, evals: &mut usize| {
        *evals += 1;
        let v = phi(s);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let f0 = eval(0.0, &mut evals);
    let mut best = (0.0, f0);
    let (mut lo, mut hi) = match upper {
        Some(u) => {
            let fu = eval(u, &mut evals);
            if fu < best.1 {
                best = (u, fu);
            }
            (0.0, u)
        }
        None => {
            let (mut before, mut prev, mut f_prev) = (0.0, 0.0, f0);
            let mut cur = 1.0;
            let mut f_cur = eval(cur, &mut evals);
            while f_cur < f_prev {
                before = prev;
                prev = cur;
                f_prev = f_cur;
                cur *= 2.0;
                if cur > OVERFLOW_BOUND {
                    return Err(Error::LineSearchDivergence {
                        bound: OVERFLOW_BOUND,
                    });
                }
                f_cur = eval(cur, &mut evals);
            }
            if f_prev < best.1 {
                best = (prev, f_prev);
            }
            (before, cur)
        }
    };

    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = eval(x1, &mut evals);
    let mut f2 = eval(x2, &mut evals);
    while evals < MAX_EVALS && (hi - lo) > REL_TOL * (1.0 + 0.5 * (lo + hi)) {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = eval(x1, &mut evals);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = eval(x2, &mut evals);
        }
    }
    for (s, f) in [(x1, f1), (x2, f2)] {
        if f < best.1 {
            best = (s, f);
        }
    }
    Ok(best.0)
}
