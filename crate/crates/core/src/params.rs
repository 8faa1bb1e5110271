//! Parameter records for the forced vector field and for the reduced map.

use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// The golden number, root of `-d^2 + d + 1`.
pub const GOLDEN: f64 = 1.618_033_988_749_895;

/// Coefficients of the forced vector field on R^3.
///
/// `alpha` and `beta` shape the unforced heteroclinic network, `gamma` is the
/// forcing amplitude and `omega` sets the forcing `sin(2 omega t)`, whose
/// period is `pi / omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub omega: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, omega: f64) -> Result<Self> {
        let mp = Self {
            alpha,
            beta,
            gamma,
            omega,
        };
        mp.validate()?;
        Ok(mp)
    }

    pub fn validate(&self) -> Result<()> {
        let Self {
            alpha,
            beta,
            gamma,
            omega,
        } = *self;
        if !(alpha.is_finite() && beta.is_finite() && gamma.is_finite() && omega.is_finite()) {
            return Err(Error::InvalidParams("non-finite model parameter".into()));
        }
        if !(beta < 0.0 && 0.0 < alpha && beta.abs() < alpha) {
            return Err(Error::InvalidParams(format!(
                "need beta < 0 < alpha and |beta| < alpha, got alpha={alpha}, beta={beta}"
            )));
        }
        if gamma < 0.0 {
            return Err(Error::InvalidParams(format!("gamma must be >= 0, got {gamma}")));
        }
        if omega <= 0.0 {
            return Err(Error::InvalidParams(format!("omega must be > 0, got {omega}")));
        }
        Ok(())
    }

    /// Whether the return-map reduction is valid: `(alpha - beta)^2 < 4 alpha`
    /// and `beta != alpha - 2`.
    pub fn reduction_valid(&self) -> bool {
        (self.alpha - self.beta).powi(2) < 4.0 * self.alpha && self.beta != self.alpha - 2.0
    }

    /// Saddle value `(alpha - beta) / (alpha + beta)`.
    pub fn delta(&self) -> f64 {
        (self.alpha - self.beta) / (self.alpha + self.beta)
    }

    /// Transit-time scale `(alpha + beta)^2 / (2 alpha)`.
    pub fn time_scale(&self) -> f64 {
        (self.alpha + self.beta).powi(2) / (2.0 * self.alpha)
    }

    /// Forcing period `pi / omega`.
    pub fn forcing_period(&self) -> f64 {
        std::f64::consts::PI / self.omega
    }

    /// Reduced-map parameters for a chosen forcing-shape constant.
    pub fn map_params(&self, shape: f64) -> Result<MapParams> {
        MapParams::new(self.delta(), self.gamma, shape, self.time_scale())
    }
}

/// Parameters of the cylinder map and of the circle-map family.
///
/// `shape` is the forcing-shape constant (`1 + shape * sin s`), never derived
/// from the vector field. `time_scale` converts `-ln y` into forcing phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapParams {
    pub delta: f64,
    pub gamma: f64,
    pub shape: f64,
    pub time_scale: f64,
}

impl MapParams {
    pub fn new(delta: f64, gamma: f64, shape: f64, time_scale: f64) -> Result<Self> {
        if !(delta.is_finite() && gamma.is_finite() && shape.is_finite() && time_scale.is_finite())
        {
            return Err(Error::InvalidParams("non-finite map parameter".into()));
        }
        if delta <= 1.0 {
            return Err(Error::InvalidParams(format!("delta must be > 1, got {delta}")));
        }
        if gamma < 0.0 {
            return Err(Error::InvalidParams(format!("gamma must be >= 0, got {gamma}")));
        }
        if shape < 0.0 {
            return Err(Error::InvalidParams(format!("k must be >= 0, got {shape}")));
        }
        if time_scale <= 0.0 {
            return Err(Error::InvalidParams(format!("K must be > 0, got {time_scale}")));
        }
        Ok(Self {
            delta,
            gamma,
            shape,
            time_scale,
        })
    }

    pub fn with_gamma(self, gamma: f64) -> Result<Self> {
        Self::new(self.delta, gamma, self.shape, self.time_scale)
    }
}

/// Reduce an angle into `[0, 2 pi)`.
pub fn wrap_angle(s: f64) -> f64 {
    let r = s.rem_euclid(TAU);
    // rem_euclid can return TAU itself for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Shortest signed angular distance from `a` to `b`, in `(-pi, pi]`.
pub fn circular_diff(a: f64, b: f64) -> f64 {
    let d = (b - a).rem_euclid(TAU);
    if d > std::f64::consts::PI {
        d - TAU
    } else {
        d
    }
}

/// A point of the cylinder `{(y, s) : y > 0, s mod 2 pi}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderPoint {
    pub y: f64,
    pub s: f64,
}

impl CylinderPoint {
    pub fn new(y: f64, s: f64) -> Result<Self> {
        if !(y > 0.0 && y.is_finite() && s.is_finite()) {
            return Err(Error::InvalidParams(format!("cylinder point needs y > 0, got y={y}, s={s}")));
        }
        Ok(Self { y, s: wrap_angle(s) })
    }

    /// Distance using the circular metric in `s`.
    pub fn distance(&self, other: &Self) -> f64 {
        let ds = circular_diff(self.s, other.s);
        (self.y - other.y).hypot(ds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_constant() {
        assert_eq!(GOLDEN, (1.0 + 5f64.sqrt()) / 2.0);
    }

    #[test]
    fn model_derived_values() {
        let m = ModelParams::new(2.0, -0.4, 0.0, 1.0).unwrap();
        assert!((m.delta() - 1.5).abs() < 1e-15);
        assert!((m.time_scale() - 0.64).abs() < 1e-15);
        assert!(m.reduction_valid());
        let m = ModelParams::new(2.0, -0.5, 0.0, 1.0).unwrap();
        assert!((m.delta() - 5.0 / 3.0).abs() < 1e-15);
        assert!((m.time_scale() - 0.5625).abs() < 1e-15);
    }

    #[test]
    fn model_rejects_bad_signs() {
        assert!(ModelParams::new(2.0, 0.4, 0.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, -1.5, 0.0, 1.0).is_err());
        assert!(ModelParams::new(2.0, -0.4, -0.1, 1.0).is_err());
        assert!(ModelParams::new(2.0, -0.4, 0.1, 0.0).is_err());
        // beta = alpha - 2 breaks the reduction but not the vector field
        assert!(!ModelParams::new(1.5, -0.5, 0.0, 1.0).unwrap().reduction_valid());
    }

    #[test]
    fn map_params_validation() {
        assert!(MapParams::new(1.0, 0.1, 0.5, 1.0).is_err());
        assert!(MapParams::new(1.5, -0.1, 0.5, 1.0).is_err());
        assert!(MapParams::new(1.5, 0.1, -0.5, 1.0).is_err());
        assert!(MapParams::new(1.5, 0.1, 0.5, 0.0).is_err());
        assert!(MapParams::new(1.5, 0.0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn angles_wrap() {
        assert_eq!(wrap_angle(-1e-300), 0.0);
        assert!((wrap_angle(-0.5) - (TAU - 0.5)).abs() < 1e-15);
        assert!((wrap_angle(7.0) - (7.0 - TAU)).abs() < 1e-15);
        assert!((circular_diff(0.1, TAU - 0.1) + 0.2).abs() < 1e-12);
        let p = CylinderPoint::new(0.5, -0.25).unwrap();
        assert!(p.s >= 0.0 && p.s < TAU);
        assert!(CylinderPoint::new(0.0, 1.0).is_err());
    }
}
