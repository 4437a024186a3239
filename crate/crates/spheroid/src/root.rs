//! Bisection root finding on monotone scalar maps.
//!
//! Every root problem in this crate comes with a sign structure and strict
//! monotonicity, so bisection converges unconditionally; no derivative-based
//! iteration is used anywhere.

use crate::error::{Result, SolverError};

/// Stopping rule for [`bisect`].
#[derive(Debug, Clone, Copy)]
pub struct StopRule {
    /// Stop when the bracket width drops below `xtol * max(1, |x|)`.
    pub xtol: f64,
    /// Also stop when `|f(mid)|` drops below this (set 0.0 to disable).
    pub ftol: f64,
    pub max_iter: usize,
}

/// Bisection on `[lo, hi]`; requires `f(lo)` and `f(hi)` of opposite sign
/// (zero endpoints are returned directly). Returns `(x, f(x))`.
pub fn bisect<F: FnMut(f64) -> f64>(
    f: &mut F,
    mut lo: f64,
    mut hi: f64,
    rule: StopRule,
) -> Result<(f64, f64)> {
    let mut flo = f(lo);
    if flo == 0.0 {
        return Ok((lo, 0.0));
    }
    let fhi = f(hi);
    if fhi == 0.0 {
        return Ok((hi, 0.0));
    }
    if flo.signum() == fhi.signum() {
        return Err(SolverError::BracketFailure(format!(
            "f({lo}) = {flo} and f({hi}) = {fhi} have the same sign"
        )));
    }
    let mut mid = 0.5 * (lo + hi);
    let mut fmid = f(mid);
    for _ in 0..rule.max_iter {
        if fmid == 0.0
            || (rule.ftol > 0.0 && fmid.abs() <= rule.ftol)
            || (hi - lo).abs() <= rule.xtol * mid.abs().max(1.0)
        {
            return Ok((mid, fmid));
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
        mid = 0.5 * (lo + hi);
        fmid = f(mid);
    }
    Ok((mid, fmid))
}

/// Grow `hi` geometrically from `start` until `f` changes sign against
/// `f(start)`, capped at `cap`. Returns the bracket `(lo, hi)`.
pub fn grow_bracket_up<F: FnMut(f64) -> f64>(
    f: &mut F,
    start: f64,
    factor: f64,
    cap: f64,
    what: &str,
) -> Result<(f64, f64)> {
    debug_assert!(factor > 1.0);
    let f0 = f(start);
    if f0 == 0.0 {
        return Ok((start, start));
    }
    let mut lo = start;
    let mut hi = if start > 0.0 { start * factor } else { factor };
    while hi <= cap {
        let fhi = f(hi);
        if fhi == 0.0 || fhi.signum() != f0.signum() {
            return Ok((lo, hi));
        }
        lo = hi;
        hi *= factor;
    }
    Err(SolverError::BracketFailure(format!(
        "{what}: no sign change up to the cap {cap}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const RULE: StopRule = StopRule {
        xtol: 1e-14,
        ftol: 0.0,
        max_iter: 200,
    };

    #[test]
    fn finds_transcendental_root() {
        // sinh(R)/R = 2
        let (x, _) = bisect(&mut |r: f64| r.sinh() / r - 2.0, 0.1, 10.0, RULE).unwrap();
        assert_relative_eq!(x.sinh() / x, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_unsigned_bracket() {
        let err = bisect(&mut |x: f64| x * x + 1.0, -1.0, 1.0, RULE);
        assert!(matches!(err, Err(SolverError::BracketFailure(_))));
    }

    #[test]
    fn bracket_growth_finds_sign_change() {
        let (lo, hi) = grow_bracket_up(&mut |x: f64| x - 40.0, 1.0, 2.0, 1e3, "test").unwrap();
        assert!(lo < 40.0 && hi >= 40.0);
    }

    #[test]
    fn bracket_growth_respects_cap() {
        let err = grow_bracket_up(&mut |_x: f64| -1.0, 1.0, 2.0, 64.0, "test");
        assert!(matches!(err, Err(SolverError::BracketFailure(_))));
    }
}
