//! Scalar root finding and one-dimensional optimization shared by the
//! canonical-pair, threshold and best-response computations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Convergence controls for the implicit-equation solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Absolute tolerance on `|f(x)|`.
    pub residual: f64,
    /// Absolute tolerance on the root location.
    pub root: f64,
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: 1e-12,
            root: 1e-10,
            max_iter: 200,
        }
    }
}

/// Bisection safeguarded Newton iteration on a sign-changing bracket.
///
/// `f` and `df` must be continuous on `[lo, hi]` with `f(lo)` and `f(hi)` of
/// opposite sign (or one of them zero). A Newton step is taken whenever it
/// lands strictly inside the current bracket; otherwise the bracket is
/// bisected. The bracket is shrunk after every evaluation, so convergence
/// never depends on the starting point.
pub fn newton_bisect<F, D>(f: F, df: D, lo: f64, hi: f64, tol: &Tolerances) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !fa.is_finite() || !fb.is_finite() || fa.signum() == fb.signum() {
        return Err(Error::Solver(format!(
            "no sign change on [{a}, {b}]: f = ({fa}, {fb})"
        )));
    }
    // orient so that f(a) < 0 < f(b) in the bookkeeping below
    let increasing = fa < 0.0;

    let mut x = 0.5 * (a + b);
    for _ in 0..tol.max_iter {
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx < 0.0) == increasing {
            a = x;
        } else {
            b = x;
        }

        let slope = df(x);
        let newton = x - fx / slope;
        let next = if slope != 0.0 && newton.is_finite() && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        let step = (next - x).abs();
        x = next;
        if step <= tol.root * 1e-3 || (fx.abs() <= tol.residual && step <= tol.root) {
            return Ok(x);
        }
        if b - a <= f64::EPSILON * x.abs().max(1e-300) * 4.0 {
            return Ok(x);
        }
    }
    if b - a <= tol.root {
        Ok(0.5 * (a + b))
    } else {
        Err(Error::Solver(format!(
            "no convergence after {} iterations, bracket [{a}, {b}]",
            tol.max_iter
        )))
    }
}

/// Plain bisection; used where no derivative is at hand.
pub fn bisect<F>(f: F, lo: f64, hi: f64, tol: &Tolerances) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Solver(format!(
            "no sign change on [{a}, {b}]: f = ({fa}, {fb})"
        )));
    }
    let increasing = fa < 0.0;
    // run past the nominal tolerance; the extra halvings are cheap
    for _ in 0..tol.max_iter.max(200) {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == increasing {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= tol.root * 1e-3 {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
///
/// Returns `(x_max, f_max)`. Endpoints are compared at the end, so a
/// monotone `f` reports the correct boundary maximizer.
pub fn golden_max<F>(f: F, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let (lo, hi) = (a, b);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..400 {
        if (b - a).abs() <= xtol {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        }
    }
    let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Golden-section search for the minimum of a unimodal `f` on `[a, b]`.
pub fn golden_min<F>(f: F, a: f64, b: f64, xtol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let (x, fx) = golden_max(|x| -f(x), a, b, xtol);
    (x, -fx)
}
