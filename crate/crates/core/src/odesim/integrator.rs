//! Dormand-Prince 5(4) with the standard 4th-order continuous extension.

use crate::error::{domain, Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

pub type Vec3 = [f64; 3];

/// Step-size control settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl StepControl {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            h_init: 1e-3,
            h_max: 0.5,
            max_steps: 10_000_000,
        }
    }
}

/// Interpolation data for one accepted step.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    r: [Vec3; 5],
}

impl DenseStep {
    pub fn eval(&self, t: f64) -> Vec3 {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            let r = &self.r;
            *o = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        out
    }
}

fn axpy(y: &Vec3, h: f64, terms: &[(f64, &Vec3)]) -> Vec3 {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..3 {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrate `dy/dt = f(t, y)` from `t0` to `t1 > t0`, calling `on_step` for
/// every accepted step. Returns the state at `t1`.
pub fn dopri5<F, S>(mut f: F, t0: f64, y0: Vec3, t1: f64, ctl: &StepControl, mut on_step: S) -> Result<Vec3>
where
    F: FnMut(f64, &Vec3) -> Vec3,
    S: FnMut(&DenseStep),
{
    if !(t1 >= t0) {
        return Err(domain("integrate", format!("t_end={t1} precedes t0={t0}")));
    }
    if !(1e-14..=1e-3).contains(&ctl.rtol) {
        return Err(domain("integrate", format!("tolerance {} outside [1e-14, 1e-3]", ctl.rtol)));
    }
    let mut t = t0;
    let mut y = y0;
    let mut h = ctl.h_init.min(t1 - t0).max(0.0);
    let mut k1 = f(t, &y);
    let mut steps = 0;
    while t < t1 {
        if steps >= ctl.max_steps {
            return Err(Error::StepUnderflow { t });
        }
        steps += 1;
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y1 = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(t + h, &y1);
        let mut err = 0.0;
        for i in 0..3 {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = ctl.atol + ctl.rtol * y[i].abs().max(y1[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / 3.0).sqrt();
        if !err.is_finite() || y1.iter().any(|v| !v.is_finite()) {
            h *= 0.2;
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepUnderflow { t });
            }
            continue;
        }
        let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 10.0);
        if err <= 1.0 {
            let ydiff = [y1[0] - y[0], y1[1] - y[1], y1[2] - y[2]];
            let mut bspl = [0.0; 3];
            let mut r4 = [0.0; 3];
            let mut r5 = [0.0; 3];
            for i in 0..3 {
                bspl[i] = h * k1[i] - ydiff[i];
                r4[i] = ydiff[i] - h * k7[i] - bspl[i];
                r5[i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            on_step(&DenseStep {
                t0: t,
                h,
                r: [y, ydiff, bspl, r4, r5],
            });
            t = if last { t1 } else { t + h };
            y = y1;
            k1 = k7;
            h = (h * fac).min(ctl.h_max);
        } else {
            h *= fac.min(1.0);
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepUnderflow { t });
            }
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let y = dopri5(|_, y| [-y[0], -2.0 * y[1], 0.0], 0.0, [1.0, 1.0, 3.0], 5.0, &StepControl::with_tol(1e-12), |_| {}).unwrap();
        assert!((y[0] - (-5f64).exp()).abs() < 1e-11);
        assert!((y[1] - (-10f64).exp()).abs() < 1e-11);
        assert_eq!(y[2], 3.0);
    }

    #[test]
    fn dense_output_on_rotation() {
        let mut worst: f64 = 0.0;
        dopri5(|_, y| [-y[1], y[0], 0.0], 0.0, [1.0, 0.0, 0.0], 10.0, &StepControl::with_tol(1e-10), |st| {
            for j in 0..=4 {
                let t = st.t0 + st.h * j as f64 / 4.0;
                let v = st.eval(t);
                worst = worst.max((v[0] - t.cos()).abs()).max((v[1] - t.sin()).abs());
            }
        })
        .unwrap();
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn blow_up_underflows() {
        let r = dopri5(|_, y| [y[0] * y[0], 0.0, 0.0], 0.0, [1.0, 0.0, 0.0], 2.0, &StepControl::with_tol(1e-8), |_| {});
        assert!(matches!(r, Err(Error::StepUnderflow { t }) if t < 1.0 + 1e-6));
    }
}
