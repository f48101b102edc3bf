//! Scalar root bracketing, bisection and golden-section search.

use crate::{Error, Result};

/// Bisection on a bracket `[a, b]` whose endpoint values have opposite signs
/// (or one is exactly zero). Stops when the bracket is narrower than `xtol`.
pub fn bisect<F>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut fa = f(a)?;
    if fa == 0.0 {
        return Ok(a);
    }
    let fb = f(b)?;
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NotFound(format!("no sign change on [{a}, {b}]")));
    }
    for _ in 0..200 {
        if (b - a).abs() <= xtol {
            break;
        }
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Indices `i` such that `values[i]` and `values[i + 1]` bracket a root.
/// An exact zero is reported once, as the bracket starting at it.
pub fn sign_changes(values: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    for i in 0..values.len().saturating_sub(1) {
        let (u, v) = (values[i], values[i + 1]);
        if u == 0.0 || (u.signum() != v.signum() && v != 0.0) {
            out.push(i);
        }
    }
    out
}

/// Maximises a unimodal function on `[a, b]`; returns `(x, f(x))`.
pub fn golden_section_max<F>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..300 {
        if (b - a).abs() <= xtol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}
