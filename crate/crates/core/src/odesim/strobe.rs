//! Stroboscopic map and Newton search for frequency-locked orbits.

use std::io::{self, Write};

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;

use super::{flow_to, integrate_at, State3};
use crate::diagram::fmt_f64;
use crate::error::{domain, Error, Result};
use crate::params::ModelParams;

/// Flow `st0` forward by exactly `n` forcing periods `n pi / omega`.
pub fn stroboscopic_map(mp: &ModelParams, st0: &State3, n: u32, tol: f64) -> Result<State3> {
    if n == 0 {
        return Err(domain("stroboscopic_map", "n must be >= 1"));
    }
    flow_to(mp, st0, st0.t + n as f64 * mp.forcing_period(), tol)
}

/// Settings for [`find_locked_orbit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LockedOrbitOptions {
    /// Integrator tolerance.
    pub tol: f64,
    pub fd_step: f64,
    pub residual_tol: f64,
    pub max_newton: usize,
    /// Applications of the n-step map before Newton starts.
    pub relax: usize,
}

impl Default for LockedOrbitOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            fd_step: 1e-7,
            residual_tol: 1e-8,
            max_newton: 30,
            relax: 0,
        }
    }
}

/// A fixed point of the n-step stroboscopic map.
#[derive(Debug, Clone, PartialEq)]
pub struct StroboOrbit {
    /// States at `t0 + j pi / omega`, `j = 0..=n`.
    pub samples: Vec<State3>,
    pub n: u32,
    /// The two multipliers of largest modulus: the ones acting along the
    /// sphere, transversal to the strongly contracting radial direction.
    pub multipliers: [Complex64; 2],
    /// All three multipliers, by decreasing modulus.
    pub spectrum: [Complex64; 3],
    pub residual: f64,
    pub newton_steps: usize,
}

impl StroboOrbit {
    pub fn start(&self) -> &State3 {
        &self.samples[0]
    }

    pub fn is_attracting(&self) -> bool {
        self.spectrum.iter().all(|m| m.norm() < 1.0)
    }

    pub fn period(&self, mp: &ModelParams) -> f64 {
        self.n as f64 * mp.forcing_period()
    }
}

fn check_near_sphere(v: &Vector3<f64>, t: f64) -> Result<()> {
    let r = v.norm();
    if !((r - 1.0).abs() < 0.5) || !r.is_finite() {
        return Err(Error::Diverged(format!("|r - 1| = {} at t = {t}", (r - 1.0).abs())));
    }
    Ok(())
}

fn monodromy(mp: &ModelParams, x: &Vector3<f64>, t0: f64, n: u32, opts: &LockedOrbitOptions) -> Result<Matrix3<f64>> {
    let mut m = Matrix3::zeros();
    for c in 0..3 {
        let mut p = *x;
        let mut q = *x;
        p[c] += opts.fd_step;
        q[c] -= opts.fd_step;
        let fp = stroboscopic_map(mp, &State3::new(p[0], p[1], p[2], t0), n, opts.tol)?;
        let fq = stroboscopic_map(mp, &State3::new(q[0], q[1], q[2], t0), n, opts.tol)?;
        let col = (Vector3::new(fp.x, fp.y, fp.z) - Vector3::new(fq.x, fq.y, fq.z)) / (2.0 * opts.fd_step);
        m.set_column(c, &col);
    }
    Ok(m)
}

/// Newton iteration on `P^n(X) - X` from `seed`, where `P` is the
/// stroboscopic map started at `seed.t`.
pub fn find_locked_orbit(mp: &ModelParams, seed: &State3, n: u32, opts: &LockedOrbitOptions) -> Result<StroboOrbit> {
    if n == 0 {
        return Err(domain("find_locked_orbit", "n must be >= 1"));
    }
    let t0 = seed.t;
    let image = |x: &Vector3<f64>| -> Result<Vector3<f64>> {
        let s = stroboscopic_map(mp, &State3::new(x[0], x[1], x[2], t0), n, opts.tol)?;
        Ok(Vector3::new(s.x, s.y, s.z))
    };
    let mut x = Vector3::new(seed.x, seed.y, seed.z);
    check_near_sphere(&x, t0)?;
    for _ in 0..opts.relax {
        let next = image(&x)?;
        check_near_sphere(&next, t0)?;
        let moved = (next - x).norm();
        x = next;
        if moved < opts.residual_tol {
            break;
        }
    }
    let mut r = image(&x)? - x;
    let mut steps = 0;
    while r.norm() >= opts.residual_tol {
        if steps >= opts.max_newton {
            return Err(Error::NoConvergence {
                what: "locked-orbit Newton",
                iterations: steps,
                residual: r.norm(),
            });
        }
        steps += 1;
        let j = monodromy(mp, &x, t0, n, opts)? - Matrix3::identity();
        let Some(dx) = j.lu().solve(&(-r)) else {
            return Err(Error::NoConvergence {
                what: "locked-orbit Newton (singular Jacobian)",
                iterations: steps,
                residual: r.norm(),
            });
        };
        let mut lambda = 1.0;
        loop {
            let cand = x + dx * lambda;
            check_near_sphere(&cand, t0)?;
            let rc = image(&cand)? - cand;
            if rc.norm() < r.norm() || lambda < 1e-3 {
                x = cand;
                r = rc;
                break;
            }
            lambda *= 0.5;
        }
    }
    let dp = monodromy(mp, &x, t0, n, opts)?;
    let mut spec: Vec<Complex64> = dp
        .complex_eigenvalues()
        .iter()
        .map(|c| Complex64::new(c.re, c.im))
        .collect();
    spec.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(b.im.total_cmp(&a.im)));
    let times: Vec<f64> = (0..=n).map(|j| t0 + j as f64 * mp.forcing_period()).collect();
    let samples = integrate_at(mp, &State3::new(x[0], x[1], x[2], t0), &times, opts.tol.max(1e-12))?.samples;
    Ok(StroboOrbit {
        samples,
        n,
        multipliers: [spec[0], spec[1]],
        spectrum: [spec[0], spec[1], spec[2]],
        residual: r.norm(),
        newton_steps: steps,
    })
}

/// Outcome of the locked-orbit search at one forcing frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanEntry {
    pub omega: f64,
    pub result: Result<StroboOrbit>,
}

/// Run [`find_locked_orbit`] from the same seed at every `omega`, in parallel.
pub fn omega_scan(
    base: &ModelParams,
    omegas: &[f64],
    seed: &State3,
    n: u32,
    opts: &LockedOrbitOptions,
) -> Result<Vec<ScanEntry>> {
    let params: Vec<ModelParams> = omegas
        .iter()
        .map(|&omega| {
            let mp = ModelParams { omega, ..*base };
            mp.validate().map(|_| mp)
        })
        .collect::<Result<_>>()?;
    Ok(params
        .par_iter()
        .map(|mp| ScanEntry {
            omega: mp.omega,
            result: find_locked_orbit(mp, seed, n, opts),
        })
        .collect())
}

/// `omega,status,residual,max_modulus,attracting,x,y,z`; failed searches
/// carry the error kind as status and empty numeric fields.
pub fn write_scan_csv<W: Write>(entries: &[ScanEntry], mut out: W) -> io::Result<()> {
    writeln!(out, "omega,status,residual,max_modulus,attracting,x,y,z")?;
    for e in entries {
        match &e.result {
            Ok(o) => {
                let st = o.start();
                writeln!(
                    out,
                    "{},converged,{},{},{},{},{},{}",
                    fmt_f64(e.omega),
                    fmt_f64(o.residual),
                    fmt_f64(o.spectrum[0].norm()),
                    o.is_attracting(),
                    fmt_f64(st.x),
                    fmt_f64(st.y),
                    fmt_f64(st.z)
                )?;
            }
            Err(err) => {
                let status = match err {
                    Error::Diverged(_) => "diverged",
                    Error::NoConvergence { .. } => "no_convergence",
                    _ => "error",
                };
                writeln!(out, "{},{status},,,,,,", fmt_f64(e.omega))?;
            }
        }
    }
    Ok(())
}

/// `index,t,x,y,z,multiplier_re,multiplier_im`; multiplier columns carry
/// the spectrum on the first three rows and are empty afterwards.
pub fn write_orbit_csv<W: Write>(orbit: &StroboOrbit, mut out: W) -> io::Result<()> {
    writeln!(out, "index,t,x,y,z,multiplier_re,multiplier_im")?;
    let rows = orbit.samples.len().max(3);
    for i in 0..rows {
        let state = orbit.samples.get(i).map_or_else(
            || ",,,".to_string(),
            |s| format!("{},{},{},{}", fmt_f64(s.t), fmt_f64(s.x), fmt_f64(s.y), fmt_f64(s.z)),
        );
        let mult = orbit
            .spectrum
            .get(i)
            .map_or_else(|| ",".to_string(), |m| format!("{},{}", fmt_f64(m.re), fmt_f64(m.im)));
        writeln!(out, "{i},{state},{mult}")?;
    }
    Ok(())
}
