//! One-dimensional bracketing searches.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizer of a unimodal `f` on `[lo, hi]` by golden-section search,
/// stopping once the bracket is narrower than `tol`. Any totally ordered
/// objective works, including extended-precision values.
pub fn golden_section_max<T: PartialOrd + Copy>(f: impl Fn(f64) -> T, lo: f64, hi: f64, tol: f64) -> (f64, T) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Root of a decreasing function on `[lo, hi]` with `f(lo) > 0 ≥ f(hi)`
/// (or `f(lo) ≥ 0 > f(hi)`), by bisection to interval width `tol`.
pub fn bisect_decreasing(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64, max_iter: usize) -> Result<f64> {
    let (f_lo, f_hi) = (f(lo), f(hi));
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::NoBracket { lo, hi, f_lo, f_hi });
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..max_iter {
        let mid = 0.5 * (a + b);
        if b - a <= tol {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Err(Error::IterationCap(max_iter))
}
