//! Tail series `Σ_{j ≥ first} f(j)` with rigorous integral brackets.

use crate::error::{Error, Result};
use crate::quadrature::integrate_to_infinity;

/// Summation stops once the bracket width falls below this fraction of the sum.
pub const SERIES_RTOL: f64 = 1e-10;
/// Hard cap on explicitly summed terms.
pub const SERIES_MAX_TERMS: usize = 10_000_000;

/// Result of a tail summation.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct SeriesSum {
    /// Upper bound on the series: partial sum plus the integral remainder.
    pub value: f64,
    /// Integral remainder included in `value`.
    pub remainder: f64,
    /// Width of the bracket `[lower, value]` around the true sum.
    pub bracket: f64,
    /// Last explicitly summed index.
    pub last_index: usize,
    pub terms: usize,
    /// The term cap was reached before the bracket closed.
    pub capped: bool,
}

/// Sums `f(j)` for `j ≥ first`, where `f` is eventually positive, decreasing
/// and convex on `[explicit_until, ∞)`.
///
/// With the partial sum through `J`, the remaining tail lies between
/// `∫_J^∞ f − f(J)/2` (trapezoid) and `∫_{J+1/2}^∞ f` (midpoint); the upper
/// end is returned. `check` sees every explicitly summed index.
pub fn tail_sum(
    first: usize,
    explicit_until: usize,
    f: &dyn Fn(f64) -> f64,
    check: &mut dyn FnMut(usize, f64) -> Result<()>,
) -> Result<SeriesSum> {
    let first = first.max(1);
    let mut partial = 0.0;
    let mut comp = 0.0; // Kahan compensation
    let mut j = first;
    let mut target = explicit_until.max(first + 63);
    loop {
        while j <= target {
            let t = f(j as f64);
            if !t.is_finite() || t < 0.0 {
                return Err(Error::NumericalBreakdown(format!(
                    "series term {t} at j = {j}"
                )));
            }
            check(j, t)?;
            let y = t - comp;
            let s = partial + y;
            comp = (s - partial) - y;
            partial = s;
            j += 1;
        }
        let last = j - 1;
        let terms = last + 1 - first;
        let fl = f(last as f64);
        let upper = integrate_to_infinity(f, last as f64 + 0.5, 1e-13)?;
        let lower = if fl == 0.0 {
            upper
        } else {
            (integrate_to_infinity(f, last as f64, 1e-13)? - 0.5 * fl).max(0.0)
        };
        let value = partial + upper;
        let bracket = (upper - lower).max(0.0);
        let capped = terms >= SERIES_MAX_TERMS;
        if bracket <= SERIES_RTOL * value || value == 0.0 || capped {
            return Ok(SeriesSum {
                value,
                remainder: upper,
                bracket,
                last_index: last,
                terms,
                capped,
            });
        }
        target = (last + last.max(64)).min(first + SERIES_MAX_TERMS - 1);
    }
}
