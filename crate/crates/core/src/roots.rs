//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Bisection on `[a, b]`, where `f(a)` and `f(b)` must differ in sign.
///
/// Stops once the bracket is narrower than `xtol` (absolute) or an exact zero
/// is hit. Bisection is used throughout because the brackets come from
/// monotone pieces and reproducibility matters more than speed.
pub fn bisect<F>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(Error::NotBracketed { a, b });
    }
    for _ in 0..400 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= xtol || m == a || m == b {
            return Ok(m);
        }
        let fm = f(m);
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

/// Bisection in `ln x` for brackets spanning several decades of positive `x`.
pub fn bisect_log<F>(mut f: F, a: f64, b: f64, rtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    debug_assert!(a > 0.0 && b > 0.0);
    let r = bisect(|u| f(u.exp()), a.ln(), b.ln(), rtol)?;
    Ok(r.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn rejects_unbracketed() {
        assert!(matches!(
            bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12),
            Err(Error::NotBracketed { .. })
        ));
    }

    #[test]
    fn log_bisection_small_root() {
        let r = bisect_log(|x| x - 1e-9, 1e-12, 1.0, 1e-14).unwrap();
        assert!((r / 1e-9 - 1.0).abs() < 1e-12);
    }
}
