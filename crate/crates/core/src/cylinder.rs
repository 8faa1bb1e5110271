//! Closed-form pieces of the reduced return map.
//!
//! The map acts on the cylinder `(y, s)`:
//!
//! ```text
//! G(y, s) = ( y^(d^2) + gamma y^(d^2 - d) (1 + k sin s),  s - ln(y) / K )
//! ```
//!
//! and its fixed points after the phase shift `ln(tau) / K` sit at `y = tau`
//! with `g(tau, s) = 0`, where
//!
//! ```text
//! g(tau, s) = tau^(d^2) + gamma tau^(d^2 - d) (1 + k sin s) - tau.
//! ```
//!
//! Dividing by `tau^(d^2 - d)` turns `g = 0` into the level-set problem
//! `gamma (1 + k sin s) = F_d(tau)` with `F_d(tau) = tau^p(d) - tau^d` and
//! `p(d) = -d^2 + d + 1`, which drives everything in [`crate::diagram`].

use std::f64::consts::{FRAC_PI_2, PI};

use crate::config::TAU_FLOOR;
use crate::error::{domain, Error, Result};
use crate::linalg::Mat2;
use crate::params::{wrap_angle, CylinderPoint, MapParams, GOLDEN};

/// `-d^2 + d + 1`; positive below the golden number, negative above.
pub fn p_delta(delta: f64) -> f64 {
    -delta * delta + delta + 1.0
}

/// `x^q` as `exp(q ln x)`, valid for negative exponents.
#[inline]
pub(crate) fn powr(x: f64, q: f64) -> f64 {
    (q * x.ln()).exp()
}

fn check_unit_interval(what: &'static str, tau: f64) -> Result<()> {
    if !(tau.is_finite() && (TAU_FLOOR..=1.0).contains(&tau)) {
        return Err(domain(what, format!("tau={tau} outside [{TAU_FLOOR:e}, 1]")));
    }
    Ok(())
}

fn check_positive(what: &'static str, y: f64) -> Result<()> {
    if !(y.is_finite() && y >= TAU_FLOOR) {
        return Err(domain(what, format!("y={y} must be >= {TAU_FLOOR:e}")));
    }
    Ok(())
}

fn check_delta(what: &'static str, delta: f64) -> Result<()> {
    if !(delta.is_finite() && delta > 1.0) {
        return Err(domain(what, format!("delta={delta} must exceed 1")));
    }
    Ok(())
}

fn check_weak(what: &'static str, delta: f64) -> Result<()> {
    if !(delta > 1.0 && delta < GOLDEN) {
        return Err(domain(what, format!("delta={delta} outside (1, golden)")));
    }
    Ok(())
}

/// Right-hand side of the level-set form, `tau^p(d) - tau^d`.
pub fn f_delta(delta: f64, tau: f64) -> Result<f64> {
    check_delta("F_delta", delta)?;
    check_unit_interval("F_delta", tau)?;
    Ok(powr(tau, p_delta(delta)) - powr(tau, delta))
}

/// Derivative of [`f_delta`] in `tau`.
pub fn f_delta_prime(delta: f64, tau: f64) -> Result<f64> {
    check_delta("F_delta'", delta)?;
    check_unit_interval("F_delta'", tau)?;
    let p = p_delta(delta);
    Ok(p * powr(tau, p - 1.0) - delta * powr(tau, delta - 1.0))
}

/// Location of the interior maximum of `F_d`, `(p/d)^(1/(d^2-1))`, for `1 < d < golden`.
pub fn tau_max(delta: f64) -> Result<f64> {
    check_weak("tau_m", delta)?;
    let ratio = p_delta(delta) / delta;
    Ok(powr(ratio, 1.0 / (delta * delta - 1.0)))
}

/// Maximum value of `F_d` on `(0, 1]` for `1 < d < golden`.
pub fn max_value(delta: f64) -> Result<f64> {
    check_weak("M_F", delta)?;
    let p = p_delta(delta);
    let ratio = p / delta;
    let e = delta * delta - 1.0;
    Ok(powr(ratio, p / e) - powr(ratio, delta / e))
}

/// `(y^p(d) - d^2 y^d) / (d^2 - d)`; sign of `h` decides `lambda_2 < 1` at folds.
pub fn h_delta(delta: f64, y: f64) -> Result<f64> {
    check_delta("h_delta", delta)?;
    check_unit_interval("h_delta", y)?;
    let d2 = delta * delta;
    Ok((powr(y, p_delta(delta)) - d2 * powr(y, delta)) / (d2 - delta))
}

/// Value and first partials of `g` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub d_ds: f64,
    pub d_dtau: f64,
}

/// `g(tau, s)` together with its partial derivatives.
pub fn eval_g(mp: &MapParams, tau: f64, s: f64) -> Result<Jet2> {
    check_unit_interval("g", tau)?;
    let d = mp.delta;
    let d2 = d * d;
    let (sin, cos) = s.sin_cos();
    let forcing = 1.0 + mp.shape * sin;
    let t_d2 = powr(tau, d2);
    let t_lift = powr(tau, d2 - d);
    let value = t_d2 + mp.gamma * t_lift * forcing - tau;
    let d_ds = mp.gamma * mp.shape * t_lift * cos;
    let d_dtau = d2 * powr(tau, d2 - 1.0) + mp.gamma * (d2 - d) * powr(tau, d2 - d - 1.0) * forcing
        - 1.0;
    Ok(Jet2 {
        value,
        d_ds,
        d_dtau,
    })
}

/// Residual of the level-set form: `gamma (1 + k sin s) - F_d(tau)`.
pub fn level_residual(mp: &MapParams, tau: f64, s: f64) -> Result<f64> {
    Ok(mp.gamma * (1.0 + mp.shape * s.sin()) - f_delta(mp.delta, tau)?)
}

/// One application of the return map `G`.
pub fn eval_map(mp: &MapParams, pt: CylinderPoint) -> Result<CylinderPoint> {
    check_positive("G", pt.y)?;
    let d = mp.delta;
    let d2 = d * d;
    let y = pt.y;
    let img = powr(y, d2) + mp.gamma * powr(y, d2 - d) * (1.0 + mp.shape * pt.s.sin());
    if !(img > 0.0) || !img.is_finite() {
        return Err(Error::NonpositiveImage {
            y: img,
            from_y: pt.y,
            from_s: pt.s,
        });
    }
    Ok(CylinderPoint {
        y: img,
        s: wrap_angle(pt.s - y.ln() / mp.time_scale),
    })
}

/// The phase-shifted map `G_tau = G + (0, ln(tau) / K)`.
pub fn eval_shifted_map(mp: &MapParams, tau: f64, pt: CylinderPoint) -> Result<CylinderPoint> {
    check_unit_interval("G_tau", tau)?;
    let img = eval_map(mp, pt)?;
    Ok(CylinderPoint {
        y: img.y,
        s: wrap_angle(img.s + tau.ln() / mp.time_scale),
    })
}

/// Derivative of `G` (and of every `G_tau`) at `pt`.
pub fn jacobian(mp: &MapParams, pt: CylinderPoint) -> Result<Mat2> {
    check_positive("DG", pt.y)?;
    let d = mp.delta;
    let d2 = d * d;
    let y = pt.y;
    let (sin, cos) = pt.s.sin_cos();
    let a11 = d2 * powr(y, d2 - 1.0)
        + mp.gamma * (d2 - d) * powr(y, -p_delta(d)) * (1.0 + mp.shape * sin);
    let a12 = mp.gamma * mp.shape * powr(y, d2 - d) * cos;
    let a21 = -1.0 / (mp.time_scale * y);
    Ok(Mat2::new(a11, a12, a21, 1.0))
}

/// Which extreme of `sin s` a fold sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FoldSide {
    /// `sin s = +1`, `s = pi/2`
    Upper,
    /// `sin s = -1`, `s = 3 pi/2`
    Lower,
}

impl FoldSide {
    pub fn sign(self) -> f64 {
        match self {
            FoldSide::Upper => 1.0,
            FoldSide::Lower => -1.0,
        }
    }

    pub fn angle(self) -> f64 {
        match self {
            FoldSide::Upper => FRAC_PI_2,
            FoldSide::Lower => PI + FRAC_PI_2,
        }
    }

    pub fn from_sign(eps: i32) -> Option<Self> {
        match eps {
            1 => Some(FoldSide::Upper),
            -1 => Some(FoldSide::Lower),
            _ => None,
        }
    }
}

/// Non-unit eigenvalue of the (lower triangular) derivative at a fold.
pub fn lambda2_at_fold(mp: &MapParams, y_star: f64, side: FoldSide) -> Result<f64> {
    check_unit_interval("lambda_2", y_star)?;
    let d = mp.delta;
    let d2 = d * d;
    Ok(d2 * powr(y_star, d2 - 1.0)
        + mp.gamma * (d2 - d) * powr(y_star, -p_delta(d)) * (1.0 + side.sign() * mp.shape))
}

/// Value of the `(1,1)` derivative entry at any point of the zero set of `g`.
///
/// Substituting `gamma (1 + k sin s) = F_d(tau)` collapses it to
/// `d tau^(d^2-1) + d^2 - d`, independent of `s` and `gamma`.
pub fn diagonal_on_diagram(delta: f64, tau: f64) -> Result<f64> {
    check_delta("diagonal", delta)?;
    check_unit_interval("diagonal", tau)?;
    Ok(delta * powr(tau, delta * delta - 1.0) + delta * delta - delta)
}

/// The function whose zeros mark `det DG = 1` at `(tau, s)`.
pub fn det_condition(mp: &MapParams, tau: f64, s: f64) -> Result<f64> {
    check_unit_interval("f", tau)?;
    let d = mp.delta;
    let d2 = d * d;
    let (sin, cos) = s.sin_cos();
    Ok(mp.gamma * mp.shape * (cos / mp.time_scale + (d2 - d) * sin) - powr(tau, p_delta(d))
        + d2 * powr(tau, d)
        + mp.gamma * (d2 - d))
}

/// Partial of [`det_condition`] in `gamma` with `s` held fixed.
pub fn det_condition_dgamma(mp: &MapParams, s: f64) -> f64 {
    let d = mp.delta;
    let (sin, cos) = s.sin_cos();
    mp.shape * (cos / mp.time_scale + (d * d - d) * sin) + (d * d - d)
}

/// Partial of [`det_condition`] in `s`.
pub fn det_condition_ds(mp: &MapParams, s: f64) -> f64 {
    let d = mp.delta;
    let (sin, cos) = s.sin_cos();
    mp.gamma * mp.shape * (-sin / mp.time_scale + (d * d - d) * cos)
}

/// Trace of the derivative predicted on `det = 1`: `2 - (gamma k / K) tau^(-p) cos s`.
pub fn trace_on_unit_det(mp: &MapParams, tau: f64, s: f64) -> Result<f64> {
    check_unit_interval("trace", tau)?;
    Ok(2.0 - mp.gamma * mp.shape / mp.time_scale * powr(tau, -p_delta(mp.delta)) * s.cos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn mp(delta: f64, gamma: f64, shape: f64, time_scale: f64) -> MapParams {
        MapParams::new(delta, gamma, shape, time_scale).unwrap()
    }

    #[test]
    fn p_delta_values() {
        assert!(p_delta(GOLDEN).abs() < 1e-15);
        assert_eq!(p_delta(2.0), -1.0);
        assert_eq!(p_delta(1.0), 1.0);
    }

    #[test]
    fn f_delta_values() {
        for d in [1.1, 1.5, GOLDEN, 2.0, 3.0] {
            assert_eq!(f_delta(d, 1.0).unwrap(), 0.0);
        }
        assert!((f_delta(2.0, 0.5).unwrap() - 1.75).abs() < 1e-14);
        assert!((f_delta(GOLDEN, 1e-8).unwrap() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn f_delta_domain() {
        assert!(f_delta(1.5, 0.0).is_err());
        assert!(f_delta(1.5, 1.0 + 1e-12).is_err());
        assert!(f_delta(1.5, -0.2).is_err());
        assert!(f_delta(1.5, 1e-13).is_err());
        assert!(f_delta(1.0, 0.5).is_err());
    }

    #[test]
    fn tau_max_and_max_value() {
        // (1/6)^0.8 and F there
        let tm = tau_max(1.5).unwrap();
        assert!((tm - (1.0f64 / 6.0).powf(0.8)).abs() < 1e-14);
        assert!((tm - 0.23849).abs() < 1e-5);
        assert!((max_value(1.5).unwrap() - 0.58236).abs() < 1e-5);
        for d in [1.2, 1.4, 1.6] {
            let m = max_value(d).unwrap();
            let f = f_delta(d, tau_max(d).unwrap()).unwrap();
            assert!((m - f).abs() < 1e-12);
        }
        assert!(tau_max(GOLDEN).is_err());
        assert!(max_value(1.7).is_err());
    }

    #[test]
    fn tau_max_is_stationary() {
        let tm = tau_max(1.5).unwrap();
        let h = 1e-6;
        let fd = (f_delta(1.5, tm + h).unwrap() - f_delta(1.5, tm - h).unwrap()) / (2.0 * h);
        assert!(fd.abs() < 1e-8);
        assert!(f_delta_prime(1.5, tm).unwrap().abs() < 1e-12);
    }

    #[test]
    fn h_delta_anchors() {
        assert!((h_delta(2.0, 1.0).unwrap() + 1.5).abs() < 1e-15);
        let z = 2f64.powf(-2.0 / 3.0);
        assert!(h_delta(2.0, z).unwrap().abs() < 1e-14);
        assert!(h_delta(1.5, 0.1).unwrap() > 0.0);
        assert!(h_delta(1.5, 0.0).is_err());
    }

    #[test]
    fn g_closed_cases() {
        let p = mp(2.0, 0.3, 0.7, 1.0);
        for s in [0.0, 1.0, 4.0] {
            let j = eval_g(&p, 1.0, s).unwrap();
            assert!((j.value - 0.3 * (1.0 + 0.7 * f64::sin(s))).abs() < 1e-15);
        }
        let p0 = mp(2.0, 0.0, 0.7, 1.0);
        for t in [0.1, 0.5, 0.9] {
            let j = eval_g(&p0, t, 2.0).unwrap();
            assert!((j.value - (t.powi(4) - t)).abs() < 1e-15);
            assert!(j.value < 0.0);
        }
        assert_eq!(eval_g(&p0, 1.0, 0.3).unwrap().value, 0.0);
    }

    #[test]
    fn g_matches_level_form() {
        let p = mp(1.7, 0.4, 0.6, 0.8);
        for &(t, s) in &[(0.2, 0.3), (0.7, 2.5), (0.95, 5.0)] {
            let g = eval_g(&p, t, s).unwrap().value;
            let lift = t.powf(1.7 * 1.7 - 1.7);
            let r = level_residual(&p, t, s).unwrap();
            assert!((g - lift * r).abs() < 1e-14);
        }
    }

    #[test]
    fn map_unforced() {
        let p = mp(2.0, 0.0, 0.5, 0.5625);
        for s in [0.0, 1.0, 6.0] {
            let img = eval_map(&p, CylinderPoint::new(1.0, s).unwrap()).unwrap();
            assert_eq!(img.y, 1.0);
            assert!((img.s - wrap_angle(s)).abs() < 1e-15);
        }
        let img = eval_map(&p, CylinderPoint::new(0.5, 1.0).unwrap()).unwrap();
        assert!((img.y - 0.0625).abs() < 1e-15);
        assert!((img.s - wrap_angle(1.0 + 2f64.ln() / 0.5625)).abs() < 1e-13);
    }

    #[test]
    fn map_rejects_nonpositive_image() {
        // 1 + k sin s < 0 for k > 1 and s near 3 pi / 2
        let p = mp(2.0, 1.0, 3.0, 1.0);
        let pt = CylinderPoint::new(0.5, 1.5 * PI).unwrap();
        assert!(matches!(eval_map(&p, pt), Err(Error::NonpositiveImage { .. })));
    }

    #[test]
    fn shifted_map_at_unit_tau() {
        let p = mp(1.8, 0.2, 0.4, 0.7);
        let pt = CylinderPoint::new(0.6, 2.0).unwrap();
        assert_eq!(eval_shifted_map(&p, 1.0, pt).unwrap(), eval_map(&p, pt).unwrap());
    }

    #[test]
    fn fold_jacobian_is_lower_triangular() {
        let p = mp(1.5, 0.3, 0.5, 0.64);
        for side in [FoldSide::Upper, FoldSide::Lower] {
            let j = jacobian(&p, CylinderPoint::new(0.3, side.angle()).unwrap()).unwrap();
            assert!(j.get(0, 1).abs() < 1e-16);
            let l2 = lambda2_at_fold(&p, 0.3, side).unwrap();
            assert!((j.get(0, 0) - l2).abs() < 1e-14);
        }
    }

    #[test]
    fn dgamma_at_fold_exact() {
        let p = mp(1.5, 0.3, 0.5, 0.64);
        for side in [FoldSide::Upper, FoldSide::Lower] {
            let v = det_condition_dgamma(&p, side.angle());
            let want = (1.0 + side.sign() * 0.5) * (2.25 - 1.5);
            assert!((v - want).abs() <= 4.0 * f64::EPSILON);
        }
        let _ = TAU;
    }
}
