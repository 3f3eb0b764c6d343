//! Monotone root finding: bisection with Newton acceleration.

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 200;

/// Solves `g(t) = 0` for a non-decreasing `g` on `[lo, hi]` with
/// `g(lo) ≤ 0 ≤ g(hi)`. `g_and_dg` returns the value and derivative.
///
/// Newton steps are taken when they land strictly inside the current
/// bracket, otherwise the bracket is halved. Stops when the bracket width
/// or the Newton step drops below `tol`.
pub fn solve_increasing(
    g_and_dg: impl Fn(f64) -> (f64, f64),
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<f64> {
    let (g_lo, _) = g_and_dg(lo);
    let (g_hi, _) = g_and_dg(hi);
    if g_lo > 0.0 || g_hi < 0.0 {
        return Err(Error::Numeric(format!(
            "root not bracketed: g({lo}) = {g_lo}, g({hi}) = {g_hi}"
        )));
    }
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }

    let mut t = 0.5 * (lo + hi);
    for _ in 0..MAX_ITERATIONS {
        let (g, dg) = g_and_dg(t);
        if g == 0.0 {
            return Ok(t);
        }
        if g < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        if hi - lo <= tol {
            return Ok(0.5 * (lo + hi));
        }

        let newton = t - g / dg;
        if dg > 0.0 && newton > lo && newton < hi {
            if (newton - t).abs() <= tol {
                return Ok(newton);
            }
            t = newton;
        } else {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return Ok(mid);
            }
            t = mid;
        }
    }
    Err(Error::Numeric(format!(
        "no convergence after {MAX_ITERATIONS} iterations, bracket [{lo}, {hi}]"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_root() {
        let r = solve_increasing(|t| (t * t * t - 2.0, 3.0 * t * t), 0.0, 2.0, 1e-15).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn flat_derivative_falls_back_to_bisection() {
        // g' = 0 on a stretch; Newton would divide by zero there
        let g = |t: f64| {
            if t < 0.5 {
                (-1.0, 0.0)
            } else {
                (t - 0.75, 1.0)
            }
        };
        let r = solve_increasing(g, 0.0, 1.0, 1e-14).unwrap();
        assert!((r - 0.75).abs() < 1e-13);
    }

    #[test]
    fn unbracketed_is_an_error() {
        assert!(solve_increasing(|t| (t + 1.0, 1.0), 0.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn endpoint_roots() {
        assert_eq!(solve_increasing(|t| (t, 1.0), 0.0, 1.0, 1e-12).unwrap(), 0.0);
        assert_eq!(solve_increasing(|t| (t - 1.0, 1.0), 0.0, 1.0, 1e-12).unwrap(), 1.0);
    }
}
