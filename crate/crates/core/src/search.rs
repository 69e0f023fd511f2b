//! One-dimensional numerical helpers: log-spaced grids, golden-section minimization and
//! bisection.

use crate::error::{invalid, Result};

/// `count` log-spaced points from `lo` to `hi`, endpoints exact.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi.is_finite() && lo.is_finite()) {
        return Err(invalid(format!(
            "log grid bounds must be positive and finite, got [{lo}, {hi}]"
        )));
    }
    match count {
        0 => Err(invalid("grid needs at least one point")),
        1 if lo == hi => Ok(vec![lo]),
        1 => Err(invalid("a single-point grid needs lo == hi")),
        _ if lo >= hi => Err(invalid(format!("grid bounds must be increasing, got [{lo}, {hi}]"))),
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let step = (b - a) / (count - 1) as f64;
            let mut out: Vec<f64> = (0..count).map(|i| (a + step * i as f64).exp()).collect();
            out[0] = lo;
            out[count - 1] = hi;
            Ok(out)
        }
    }
}

pub fn check_increasing(values: &[f64], min_len: usize, what: &str) -> Result<()> {
    if values.len() < min_len {
        return Err(invalid(format!(
            "{what} needs at least {min_len} points, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(invalid(format!("{what} must contain positive finite values")));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid(format!("{what} must be strictly increasing")));
    }
    Ok(())
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimizes a unimodal `f` on `[lo, hi]` until the bracket is narrower than `tol`.
/// Returns `(x, f(x))` for the best point seen.
pub fn golden_section<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

/// Bisection on `[lo, hi]` where `f(lo)` and `f(hi)` have opposite signs.
/// Stops when the bracket width is below `tol` and returns whichever endpoint has the
/// smaller `|f|`.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, mut f_lo: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut f_hi = f(hi)?;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    Ok(if f_lo.abs() <= f_hi.abs() { lo } else { hi })
}
