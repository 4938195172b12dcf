//! Scalar root finding: bracket expansion and Brent's method.

use crate::error::{HoroError, Result};

/// Finds a root of `f` in `[a, b]`, where `f(a)` and `f(b)` differ in sign.
/// Terminates when the bracket is narrower than `xtol` (absolute) plus
/// `4·eps·|x|`, or when an exact zero is hit.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> Result<f64> {
    let fa = f(a);
    let fb = f(b);
    brent_with_values(&mut f, a, fa, b, fb, xtol, max_iter)
}

pub(crate) fn brent_with_values<F: FnMut(f64) -> f64>(
    f: &mut F,
    mut a: f64,
    mut fa: f64,
    mut b: f64,
    mut fb: f64,
    xtol: f64,
    max_iter: usize,
) -> Result<f64> {
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(HoroError::BracketFailure(format!("f({a}) = {fa}, f({b}) = {fb} do not bracket a root")));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(HoroError::BracketFailure(format!("non-finite function value at {b}")));
        }
    }
    Err(HoroError::BracketFailure(format!("no convergence within {max_iter} iterations")))
}

/// Root of an increasing function of a positive variable. Brackets by
/// doubling/halving from `start` inside `[min, max]`, then refines with
/// Brent in `ln x` until the relative bracket width is below `rel_tol`.
pub fn solve_increasing<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    start: f64,
    min: f64,
    max: f64,
    rel_tol: f64,
) -> Result<f64> {
    if !(min > 0.0 && max > min) {
        return Err(HoroError::InvalidInput(format!("search range [{min}, {max}] must be positive")));
    }
    let mut x = start.clamp(min, max);
    let mut fx = f(x)?;
    let (lo, flo, hi, fhi);
    if fx < 0.0 {
        loop {
            if x >= max {
                return Err(HoroError::BracketFailure(format!("function still negative at upper limit {max}")));
            }
            let prev = (x, fx);
            x = (x * 2.0).min(max);
            fx = f(x)?;
            if fx >= 0.0 {
                (lo, flo, hi, fhi) = (prev.0, prev.1, x, fx);
                break;
            }
        }
    } else {
        loop {
            if x <= min {
                return Err(HoroError::BracketFailure(format!("function still nonnegative at lower limit {min}")));
            }
            let prev = (x, fx);
            x = (x * 0.5).max(min);
            fx = f(x)?;
            if fx < 0.0 {
                (lo, flo, hi, fhi) = (x, fx, prev.0, prev.1);
                break;
            }
        }
    }
    let mut err = None;
    let mut g = |y: f64| match f(y.exp()) {
        Ok(v) => v,
        Err(e) => {
            err.get_or_insert(e);
            f64::NAN
        }
    };
    let root = brent_with_values(&mut g, lo.ln(), flo, hi.ln(), fhi, rel_tol, 200);
    if let Some(e) = err {
        return Err(e);
    }
    root.map(f64::exp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cube_root() {
        let r = brent(|x| x * x * x - 2.0, 0.0, 2.0, 1e-15, 100).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn brent_rejects_non_bracket() {
        assert!(matches!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 100), Err(HoroError::BracketFailure(_))));
    }

    #[test]
    fn increasing_search_expands_both_ways() {
        let r = solve_increasing(|x| Ok(x.ln() - 5.0), 1.0, 1e-6, 1e6, 1e-12).unwrap();
        assert!((r - 5f64.exp()).abs() < 1e-9);
        let r = solve_increasing(|x| Ok(x - 1e-3), 1.0, 1e-6, 1e6, 1e-15).unwrap();
        assert!((r - 1e-3).abs() < 1e-14);
        assert!(solve_increasing(|x| Ok(x - 1e7), 1.0, 1e-6, 1e6, 1e-12).is_err());
    }
}
