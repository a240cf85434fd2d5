//! Scalar minimization and root bracketing.

use crate::error::{Error, Result};

/// Golden-section search for the minimizer of a unimodal `f` on [a, b].
/// Returns (x, f(x)) for the best point evaluated.
pub fn golden_min(mut f: impl FnMut(f64) -> Result<f64>, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    for x in [a, b] {
        let fx = f(x)?;
        if fx < best.1 {
            best = (x, fx);
        }
    }
    Ok(best)
}

/// Root of an increasing `f` on [lo, hi] with f(lo) < 0 <= f(hi), using
/// Newton steps safeguarded by bisection. `f` returns (value, derivative).
/// Stops when the bracket is narrower than `xtol` or |f| <= `ftol`.
pub fn increasing_root(
    mut f: impl FnMut(f64) -> Result<(f64, f64)>,
    mut lo: f64,
    mut hi: f64,
    xtol: f64,
    ftol: f64,
) -> Result<f64> {
    let (flo, _) = f(lo)?;
    let (fhi, dhi) = f(hi)?;
    if !(flo < 0.0 && fhi >= 0.0) {
        return Err(Error::NoRoot(format!("no sign change on [{lo}, {hi}]: f = {flo}, {fhi}")));
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    let (mut x, mut fx, mut dx) = (hi, fhi, dhi);
    for _ in 0..200 {
        if fx.abs() <= ftol || hi - lo <= xtol {
            break;
        }
        let newton = x - fx / dx;
        x = if dx > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        let (v, d) = f(x)?;
        (fx, dx) = (v, d);
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
    }
    Ok(x)
}
