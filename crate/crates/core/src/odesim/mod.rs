//! Direct simulation of the forced vector field on R^3.
//!
//! The forcing `gamma (1 - x) sin(2 omega t)` has period `pi / omega`, and
//! the stroboscopic map samples the flow at multiples of that period
//! starting from `t = 0`.

pub mod integrator;
mod strobe;

use std::io::{self, Write};

use crate::diagram::fmt_f64;
use crate::error::{domain, Result};
use crate::params::ModelParams;

pub use integrator::{dopri5, DenseStep, StepControl, Vec3};
pub use strobe::{
    find_locked_orbit, omega_scan, stroboscopic_map, write_orbit_csv, write_scan_csv, LockedOrbitOptions, ScanEntry,
    StroboOrbit,
};

/// A point of phase space at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub t: f64,
}

impl State3 {
    pub fn new(x: f64, y: f64, z: f64, t: f64) -> Self {
        Self { x, y, z, t }
    }

    pub fn vec(&self) -> Vec3 {
        [self.x, self.y, self.z]
    }

    pub fn from_vec(v: Vec3, t: f64) -> Self {
        Self::new(v[0], v[1], v[2], t)
    }

    pub fn radius(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// The scan seed `(e, e, sqrt(1 - 2 e^2))` on the unit sphere.
    pub fn sphere_seed(eps: f64) -> Self {
        Self::new(eps, eps, (1.0 - 2.0 * eps * eps).sqrt(), 0.0)
    }
}

/// Right-hand side of the forced system at `(x, y, z)` and time `t`.
pub fn vector_field_at(mp: &ModelParams, t: f64, v: &Vec3) -> Vec3 {
    let [x, y, z] = *v;
    let r2 = x * x + y * y + z * z;
    let (a, b) = (mp.alpha, mp.beta);
    [
        x * (1.0 - r2) - a * x * z + b * x * z * z + mp.gamma * (1.0 - x) * (2.0 * mp.omega * t).sin(),
        y * (1.0 - r2) + a * y * z + b * y * z * z,
        z * (1.0 - r2) - a * (y * y - x * x) - b * z * (x * x + y * y),
    ]
}

pub fn vector_field(mp: &ModelParams, st: &State3) -> Vec3 {
    vector_field_at(mp, st.t, &st.vec())
}

/// Central finite-difference Jacobian of the vector field in `(x, y, z)`.
pub fn jacobian_fd(mp: &ModelParams, st: &State3, step: f64) -> [[f64; 3]; 3] {
    let mut j = [[0.0; 3]; 3];
    let v = st.vec();
    for c in 0..3 {
        let mut p = v;
        let mut m = v;
        p[c] += step;
        m[c] -= step;
        let fp = vector_field_at(mp, st.t, &p);
        let fm = vector_field_at(mp, st.t, &m);
        for r in 0..3 {
            j[r][c] = (fp[r] - fm[r]) / (2.0 * step);
        }
    }
    j
}

/// Trajectory samples at caller-chosen times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<State3>,
    /// Number of accepted integrator steps.
    pub steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> Option<&State3> {
        self.samples.last()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,x,y,z")?;
        for s in &self.samples {
            writeln!(out, "{},{},{},{}", fmt_f64(s.t), fmt_f64(s.x), fmt_f64(s.y), fmt_f64(s.z))?;
        }
        Ok(())
    }
}

/// Integrate from `st0` to `t_end`, sampling the dense output at
/// `n_samples + 1` evenly spaced times (including both ends).
pub fn integrate(mp: &ModelParams, st0: &State3, t_end: f64, tol: f64, n_samples: usize) -> Result<Trajectory> {
    if !(1e-12..=1e-6).contains(&tol) {
        return Err(domain("integrate", format!("tol={tol} outside [1e-12, 1e-6]")));
    }
    let times: Vec<f64> = (0..=n_samples.max(1))
        .map(|i| st0.t + (t_end - st0.t) * i as f64 / n_samples.max(1) as f64)
        .collect();
    integrate_at(mp, st0, &times, tol)
}

/// Integrate from `st0` and sample the dense output at the sorted `times`.
pub fn integrate_at(mp: &ModelParams, st0: &State3, times: &[f64], tol: f64) -> Result<Trajectory> {
    if !times.windows(2).all(|w| w[0] <= w[1]) || times.first().is_some_and(|&t| t < st0.t) {
        return Err(domain("integrate", "sample times must be sorted and not precede t0"));
    }
    let Some(&t_end) = times.last() else {
        return Ok(Trajectory {
            samples: Vec::new(),
            steps: 0,
        });
    };
    let mut samples = Vec::with_capacity(times.len());
    let mut next = 0;
    while next < times.len() && times[next] == st0.t {
        samples.push(State3 { t: st0.t, ..*st0 });
        next += 1;
    }
    let mut steps = 0;
    let end = dopri5(
        |t, v| vector_field_at(mp, t, v),
        st0.t,
        st0.vec(),
        t_end,
        &StepControl::with_tol(tol),
        |st| {
            steps += 1;
            while next < times.len() && times[next] <= st.t0 + st.h {
                samples.push(State3::from_vec(st.eval(times[next]), times[next]));
                next += 1;
            }
        },
    )?;
    while next < times.len() {
        samples.push(State3::from_vec(end, times[next]));
        next += 1;
    }
    Ok(Trajectory { samples, steps })
}

/// State at `t_end` without storing samples.
pub fn flow_to(mp: &ModelParams, st0: &State3, t_end: f64, tol: f64) -> Result<State3> {
    let v = dopri5(
        |t, v| vector_field_at(mp, t, v),
        st0.t,
        st0.vec(),
        t_end,
        &StepControl::with_tol(tol),
        |_| {},
    )?;
    Ok(State3::from_vec(v, t_end))
}
