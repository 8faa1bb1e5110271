//! Fixed points of the shifted map `G_tau` along the diagram: their linear
//! type, fold-branch stability, Bogdanov-Takens and Hopf points, and traces
//! of saddle invariant manifolds.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;
use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::Tolerances;
use crate::cylinder::{
    det_condition, det_condition_ds, det_condition_dgamma, eval_g, eval_shifted_map, f_delta, jacobian,
    lambda2_at_fold, max_value, tau_max, FoldSide,
};
use crate::diagram::{find_folds, fmt_f64, Criticality, FoldPoint};
use crate::error::{domain, Error, Result};
use crate::linalg::Mat2;
use crate::params::{circular_diff, wrap_angle, CylinderPoint, MapParams, GOLDEN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FixedClass {
    Attracting,
    Saddle,
    Repelling,
    Nonhyperbolic,
}

impl FixedClass {
    pub fn as_str(self) -> &'static str {
        match self {
            FixedClass::Attracting => "attracting",
            FixedClass::Saddle => "saddle",
            FixedClass::Repelling => "repelling",
            FixedClass::Nonhyperbolic => "nonhyperbolic",
        }
    }

    fn from_moduli(m: [f64; 2], eps: f64) -> Self {
        let inside = |x: f64| x < 1.0 - eps;
        let outside = |x: f64| x > 1.0 + eps;
        match (m[0], m[1]) {
            (a, b) if inside(a) && inside(b) => FixedClass::Attracting,
            (a, b) if outside(a) && outside(b) => FixedClass::Repelling,
            (a, b) if (inside(a) && outside(b)) || (outside(a) && inside(b)) => FixedClass::Saddle,
            _ => FixedClass::Nonhyperbolic,
        }
    }
}

impl fmt::Display for FixedClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A fixed point `(tau, s)` of `G_tau` with its linearisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointInfo {
    pub tau: f64,
    pub s: f64,
    pub eigenvalues: [Complex64; 2],
    pub class: FixedClass,
    pub det: f64,
    pub trace: f64,
    /// `|g(tau, s)|`, equal to the displacement `|G_tau(tau, s) - (tau, s)|`.
    pub residual: f64,
    pub jacobian: Mat2,
}

impl FixedPointInfo {
    pub fn point(&self) -> CylinderPoint {
        CylinderPoint {
            y: self.tau,
            s: self.s,
        }
    }
}

/// Linear type of the fixed point of `G_tau` sitting at `(tau, s)`.
pub fn classify_fixed_point(mp: &MapParams, tau: f64, s: f64, tol: &Tolerances) -> Result<FixedPointInfo> {
    let s = wrap_angle(s);
    let residual = eval_g(mp, tau, s)?.value.abs();
    if !(residual < tol.residual) {
        return Err(Error::NotAFixedPoint { tau, s, residual });
    }
    let j = jacobian(mp, CylinderPoint { y: tau, s })?;
    let eigenvalues = j.eigenvalues();
    let class = FixedClass::from_moduli([eigenvalues[0].norm(), eigenvalues[1].norm()], tol.eigen);
    Ok(FixedPointInfo {
        tau,
        s,
        eigenvalues,
        class,
        det: j.det(),
        trace: j.trace(),
        residual,
        jacobian: j,
    })
}

/// Classes of the two fixed-point branches leaving a fold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldBranchStability {
    pub branch_larger_s: FixedClass,
    pub branch_smaller_s: FixedClass,
    /// The `tau` where both branches were sampled.
    pub tau: f64,
    pub s_larger: f64,
    pub s_smaller: f64,
}

/// Sample both branches emerging from `fold` at `tau = tau_fold (1 +- window)`.
///
/// The window is relative to the fold's `tau`, so the same window works for
/// folds at `tau ~ 1` and at `tau ~ 1e-6`.
pub fn fold_branch_stability(
    mp: &MapParams,
    fold: &FoldPoint,
    window: f64,
    tol: &Tolerances,
) -> Result<FoldBranchStability> {
    if !(window > 0.0 && window < 1.0) {
        return Err(Error::WindowTooLarge {
            window,
            detail: "relative window must lie in (0, 1)".into(),
        });
    }
    let dir = match fold.criticality {
        Criticality::Supercritical => 1.0,
        Criticality::Subcritical => -1.0,
        Criticality::Degenerate => {
            return Err(domain("fold_branch_stability", "degenerate fold has no emerging branches"))
        }
    };
    let tau = fold.tau * (1.0 + dir * window);
    if tau > 1.0 {
        return Err(Error::WindowTooLarge {
            window,
            detail: format!("displaced tau={tau} leaves (0, 1]"),
        });
    }
    let folds = find_folds(mp, tol)?;
    let (lo, hi) = if tau < fold.tau { (tau, fold.tau) } else { (fold.tau, tau) };
    if folds
        .iter()
        .any(|f| f.tau != fold.tau && f.tau >= lo && f.tau <= hi)
    {
        return Err(Error::WindowTooLarge {
            window,
            detail: "another fold lies inside the window".into(),
        });
    }
    let u = (f_delta(mp.delta, tau)? / mp.gamma - 1.0) / mp.shape;
    if !(u.abs() <= 1.0) {
        return Err(Error::WindowTooLarge {
            window,
            detail: format!("no solutions at tau={tau}"),
        });
    }
    let a = u.asin();
    let mut pair = [wrap_angle(a), wrap_angle(std::f64::consts::PI - a)];
    let s_star = fold.s_star();
    pair.sort_by(|x, y| circular_diff(s_star, *x).total_cmp(&circular_diff(s_star, *y)));
    let [s_smaller, s_larger] = pair;
    let small = classify_fixed_point(mp, tau, s_smaller, tol)?;
    let large = classify_fixed_point(mp, tau, s_larger, tol)?;
    Ok(FoldBranchStability {
        branch_larger_s: large.class,
        branch_smaller_s: small.class,
        tau,
        s_larger,
        s_smaller,
    })
}

/// Every fixed point of `G_tau` with `y = tau`, classified, by increasing `s`.
pub fn fixed_points_at(mp: &MapParams, tau: f64, tol: &Tolerances) -> Result<Vec<FixedPointInfo>> {
    if mp.gamma == 0.0 || mp.shape == 0.0 {
        return Err(domain(
            "fixed_points_at",
            "fixed points form whole circles when gamma = 0 or k = 0",
        ));
    }
    let u = (f_delta(mp.delta, tau)? / mp.gamma - 1.0) / mp.shape;
    if !(u.abs() <= 1.0) {
        return Ok(Vec::new());
    }
    let a = u.asin();
    let mut ss = vec![wrap_angle(a), wrap_angle(std::f64::consts::PI - a)];
    ss.sort_by(f64::total_cmp);
    ss.dedup();
    ss.iter().map(|&s| classify_fixed_point(mp, tau, s, tol)).collect()
}

/// Distance in which `y` is measured relative to `scale` and `s` circularly.
pub fn scaled_distance(a: CylinderPoint, b: CylinderPoint, scale: f64) -> f64 {
    ((a.y - b.y) / scale).abs().max(circular_diff(a.s, b.s).abs())
}

/// Preimage of `target` under `G_tau` by Newton's method from `guess`.
pub fn inverse_shifted_map(
    mp: &MapParams,
    tau: f64,
    target: CylinderPoint,
    guess: CylinderPoint,
) -> Result<CylinderPoint> {
    let residual = |q: CylinderPoint| -> Result<[f64; 2]> {
        let img = eval_shifted_map(mp, tau, q)?;
        Ok([(img.y - target.y) / target.y, circular_diff(target.s, img.s)])
    };
    let norm = |r: [f64; 2]| r[0].abs().max(r[1].abs());
    let mut q = guess;
    let mut r = residual(q)?;
    for _ in 0..50 {
        if norm(r) < 1e-12 {
            return Ok(q);
        }
        let j = jacobian(mp, q)?;
        let scaled = Mat2::new(j.get(0, 0) / target.y, j.get(0, 1) / target.y, j.get(1, 0), j.get(1, 1));
        let Some(step) = scaled.solve([-r[0], -r[1]]) else {
            break;
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-6 {
            let y = q.y + lambda * step[0];
            if y > 0.0 {
                let cand = CylinderPoint {
                    y,
                    s: wrap_angle(q.s + lambda * step[1]),
                };
                if let Ok(rc) = residual(cand) {
                    if norm(rc) < norm(r) {
                        q = cand;
                        r = rc;
                        accepted = true;
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if norm(r) < 1e-12 {
        Ok(q)
    } else {
        Err(Error::NoConvergence {
            what: "inverse map",
            iterations: 50,
            residual: norm(r),
        })
    }
}

/// What happens to small perturbations of a fixed point under iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitVerdict {
    /// Forward orbits return to the point.
    ForwardConverges,
    /// Backward orbits return to the point.
    BackwardConverges,
    /// Neither direction returns: a saddle.
    Neither,
}

impl OrbitVerdict {
    pub fn consistent_with(self, class: FixedClass) -> bool {
        matches!(
            (self, class),
            (OrbitVerdict::ForwardConverges, FixedClass::Attracting)
                | (OrbitVerdict::BackwardConverges, FixedClass::Repelling)
                | (OrbitVerdict::Neither, FixedClass::Saddle)
        )
    }
}

/// Settings of the orbit-based stability check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitCheck {
    pub perturbation: f64,
    pub iterations: usize,
    pub target: f64,
}

impl Default for OrbitCheck {
    fn default() -> Self {
        Self {
            perturbation: 1e-4,
            iterations: 200,
            target: 1e-6,
        }
    }
}

// Several directions, so a perturbation lying on a stable eigenvector of a
// saddle cannot fake convergence.
const PERTURBATION_DIRECTIONS: [(f64, f64); 4] = [(1.0, 1.0), (1.0, -1.0), (1.0, 0.0), (0.0, 1.0)];

fn returns(
    fp: &FixedPointInfo,
    check: &OrbitCheck,
    mut step: impl FnMut(CylinderPoint) -> Result<CylinderPoint>,
) -> bool {
    PERTURBATION_DIRECTIONS
        .iter()
        .all(|&dir| returns_along(fp, check, dir, &mut step))
}

fn returns_along(
    fp: &FixedPointInfo,
    check: &OrbitCheck,
    (dy, ds): (f64, f64),
    step: &mut impl FnMut(CylinderPoint) -> Result<CylinderPoint>,
) -> bool {
    let p = fp.point();
    let mut q = CylinderPoint {
        y: p.y * (1.0 + dy * check.perturbation),
        s: wrap_angle(p.s + ds * check.perturbation),
    };
    for _ in 0..check.iterations {
        match step(q) {
            Ok(n) if n.y > 0.0 && n.y <= 1.0 => q = n,
            _ => return false,
        }
        let d = scaled_distance(q, p, p.y);
        if d < check.target {
            return true;
        }
        if d > 0.5 {
            return false;
        }
    }
    false
}

/// Decide stability from orbits instead of eigenvalues.
pub fn orbit_verdict(mp: &MapParams, fp: &FixedPointInfo, check: &OrbitCheck) -> OrbitVerdict {
    let tau = fp.tau;
    if returns(fp, check, |q| eval_shifted_map(mp, tau, q)) {
        return OrbitVerdict::ForwardConverges;
    }
    if returns(fp, check, |q| inverse_shifted_map(mp, tau, q, q)) {
        return OrbitVerdict::BackwardConverges;
    }
    OrbitVerdict::Neither
}

/// A Bogdanov-Takens point of the family `G_tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BTPoint {
    pub tau: f64,
    pub s_star: f64,
    pub side: FoldSide,
    pub gamma: f64,
    pub delta: f64,
    pub shape: f64,
    /// `|lambda_2 - 1|`
    pub residual: f64,
}

impl BTPoint {
    pub fn eps(&self) -> i32 {
        match self.side {
            FoldSide::Upper => 1,
            FoldSide::Lower => -1,
        }
    }

    /// Derivative of `G_tau` at the point for a given `K`.
    pub fn jacobian(&self, time_scale: f64) -> Result<Mat2> {
        let mp = MapParams::new(self.delta, self.gamma, self.shape, time_scale)?;
        jacobian(
            &mp,
            CylinderPoint {
                y: self.tau,
                s: self.s_star,
            },
        )
    }
}

/// Bogdanov-Takens points for `1 < delta < golden`, `k > 0`.
pub fn find_bt_points(delta: f64, shape: f64) -> Result<Vec<BTPoint>> {
    if !(delta > 1.0 && delta < GOLDEN) {
        return Err(domain("find_bt_points", format!("delta={delta} outside (1, golden)")));
    }
    if !(shape > 0.0) || !shape.is_finite() {
        return Err(domain("find_bt_points", format!("k={shape} must be > 0")));
    }
    let tm = tau_max(delta)?;
    let m = max_value(delta)?;
    let mut sides = vec![FoldSide::Upper];
    if shape < 1.0 {
        sides.push(FoldSide::Lower);
    }
    let mut out = Vec::new();
    for side in sides {
        let gamma = m / (1.0 + side.sign() * shape);
        let mp = MapParams::new(delta, gamma, shape, 1.0)?;
        let l2 = lambda2_at_fold(&mp, tm, side)?;
        let residual = (l2 - 1.0).abs();
        if !(residual < 1e-10) {
            return Err(Error::NoConvergence {
                what: "Bogdanov-Takens certification",
                iterations: 0,
                residual,
            });
        }
        out.push(BTPoint {
            tau: tm,
            s_star: side.angle(),
            side,
            gamma,
            delta,
            shape,
            residual,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HopfSide {
    Super,
    Sub,
    Undetermined,
}

impl HopfSide {
    pub fn as_str(self) -> &'static str {
        match self {
            HopfSide::Super => "super",
            HopfSide::Sub => "sub",
            HopfSide::Undetermined => "undetermined",
        }
    }
}

/// A point of the Neimark-Sacker locus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopfPoint {
    pub tau: f64,
    pub s: f64,
    pub gamma: f64,
    pub delta: f64,
    pub shape: f64,
    pub side_of_fold: FoldSide,
    /// Argument of the eigenvalue in the upper half plane.
    pub theta: f64,
    pub det: f64,
    pub trace: f64,
    pub side: HopfSide,
}

/// Outcome of the Hopf solve at one `tau` for one fold side.
#[derive(Debug, Clone, PartialEq)]
pub struct HopfEntry {
    pub tau: f64,
    pub side_of_fold: FoldSide,
    pub result: Result<HopfPoint>,
}

/// Options for [`solve_hopf_locus`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopfOptions {
    /// Run the long-iteration criticality estimate.
    pub estimate_side: bool,
    /// Iterates per side of the locus for that estimate.
    pub side_iterations: usize,
    /// Offset in `gamma` on either side of the locus, as a fraction of the
    /// gap between the locus and the fold at the same `tau`.
    pub side_offset: f64,
}

impl Default for HopfOptions {
    fn default() -> Self {
        Self {
            estimate_side: true,
            side_iterations: 100_000,
            side_offset: 0.3,
        }
    }
}

fn solve_hopf_at(delta: f64, shape: f64, time_scale: f64, tau: f64, side: FoldSide) -> Result<(f64, f64)> {
    let base = MapParams::new(delta, 0.0, shape, time_scale)?;
    let level = f_delta(delta, tau)?;
    let lam = crate::cylinder::diagonal_on_diagram(delta, tau)?;
    if !(lam < 1.0) {
        return Err(domain(
            "solve_hopf_locus",
            format!("tau={tau} is not below tau_m: the diagonal entry {lam} is >= 1"),
        ));
    }
    let eps = side.sign();
    let mut gamma = level / (1.0 + eps * shape);
    let p = crate::cylinder::p_delta(delta);
    let c = ((1.0 - lam) * time_scale * tau.powf(p) / (gamma * shape)).min(0.99);
    // cos s > 0 side of the fold
    let mut s = side.angle() - eps * c.asin();
    let residual = |s: f64, gamma: f64| -> Result<[f64; 2]> {
        let mp = MapParams { gamma, ..base };
        let r1 = gamma * (1.0 + shape * s.sin()) - level;
        let r2 = det_condition(&mp, tau, s)?;
        Ok([r1, r2])
    };
    let norm = |r: [f64; 2]| r[0].abs().max(r[1].abs());
    let mut r = residual(s, gamma)?;
    let mut iterations = 0;
    while iterations < 100 && norm(r) > 1e-15 {
        iterations += 1;
        let mp = MapParams { gamma, ..base };
        let j = Mat2::new(
            gamma * shape * s.cos(),
            1.0 + shape * s.sin(),
            det_condition_ds(&mp, s),
            det_condition_dgamma(&mp, s),
        );
        let Some(step) = j.solve([-r[0], -r[1]]) else {
            break;
        };
        let mut lambda = 1.0;
        let mut moved = false;
        while lambda > 1e-8 {
            let (s1, g1) = (s + lambda * step[0], gamma + lambda * step[1]);
            if g1 > 0.0 {
                let r1 = residual(s1, g1)?;
                if norm(r1) < norm(r) {
                    s = s1;
                    gamma = g1;
                    r = r1;
                    moved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !moved {
            break;
        }
    }
    if norm(r) > 1e-12 {
        return Err(Error::NoConvergence {
            what: "Hopf system",
            iterations,
            residual: norm(r),
        });
    }
    Ok((wrap_angle(s), gamma))
}

/// Solve `g = 0`, `det DG = 1` for `(s, gamma)` at each `tau` of the grid.
///
/// `K` enters through `det DG`, so it is an argument here even though the
/// diagram itself does not depend on it.
pub fn solve_hopf_locus(
    delta: f64,
    shape: f64,
    time_scale: f64,
    tau_grid: &[f64],
    opts: &HopfOptions,
    tol: &Tolerances,
) -> Result<Vec<HopfEntry>> {
    let bts = find_bt_points(delta, shape)?;
    if !(time_scale > 0.0) {
        return Err(domain("solve_hopf_locus", format!("K={time_scale} must be > 0")));
    }
    let jobs: Vec<(f64, FoldSide)> = tau_grid
        .iter()
        .flat_map(|&t| bts.iter().map(move |b| (t, b.side)))
        .collect();
    Ok(jobs
        .par_iter()
        .map(|&(tau, side_of_fold)| HopfEntry {
            tau,
            side_of_fold,
            result: hopf_point(delta, shape, time_scale, tau, side_of_fold, opts, tol),
        })
        .collect())
}

fn hopf_point(
    delta: f64,
    shape: f64,
    time_scale: f64,
    tau: f64,
    side_of_fold: FoldSide,
    opts: &HopfOptions,
    tol: &Tolerances,
) -> Result<HopfPoint> {
    let (s, gamma) = solve_hopf_at(delta, shape, time_scale, tau, side_of_fold)?;
    let mp = MapParams::new(delta, gamma, shape, time_scale)?;
    let g = eval_g(&mp, tau, s)?.value;
    if !(g.abs() < 1e-10) {
        return Err(Error::NoConvergence {
            what: "Hopf diagram residual",
            iterations: 0,
            residual: g.abs(),
        });
    }
    let j = jacobian(&mp, CylinderPoint { y: tau, s })?;
    let (det, trace) = (j.det(), j.trace());
    if !((det - 1.0).abs() < 1e-8) {
        return Err(Error::NoConvergence {
            what: "Hopf determinant",
            iterations: 0,
            residual: (det - 1.0).abs(),
        });
    }
    if !(trace.abs() < 2.0 - 1e-9) || s.cos() <= 0.0 {
        return Err(domain(
            "solve_hopf_locus",
            format!("solution at tau={tau} has trace {trace}: it is the Bogdanov-Takens boundary or off the cos s > 0 branch"),
        ));
    }
    let theta = (trace / 2.0).acos();
    let side = if opts.estimate_side {
        estimate_hopf_side(&mp, tau, s, side_of_fold, opts, tol)
    } else {
        HopfSide::Undetermined
    };
    Ok(HopfPoint {
        tau,
        s,
        gamma,
        delta,
        shape,
        side_of_fold,
        theta,
        det,
        trace,
        side,
    })
}

/// Fixed point of `G_tau` on the same branch as `s_near` for another gamma.
fn branch_point(mp: &MapParams, tau: f64, s_near: f64) -> Option<f64> {
    let u = (f_delta(mp.delta, tau).ok()? / mp.gamma - 1.0) / mp.shape;
    if !(u.abs() <= 1.0) {
        return None;
    }
    let a = u.asin();
    [wrap_angle(a), wrap_angle(std::f64::consts::PI - a)]
        .into_iter()
        .min_by(|x, y| circular_diff(s_near, *x).abs().total_cmp(&circular_diff(s_near, *y).abs()))
}

/// Whether a long orbit settles on a closed invariant curve around `p`:
/// it must stay away from `p`, stay bounded and keep turning around it.
fn settles_on_circle(
    p: CylinderPoint,
    iterations: usize,
    mut step: impl FnMut(CylinderPoint) -> Result<CylinderPoint>,
) -> bool {
    let mut q = CylinderPoint {
        y: p.y * (1.0 + 1e-3),
        s: p.s,
    };
    let tail = iterations / 10;
    let mut rmin = f64::INFINITY;
    let mut turned = 0.0;
    let mut prev_angle: Option<f64> = None;
    for i in 0..iterations {
        q = match step(q) {
            Ok(n) if n.y > 0.0 && n.y <= 1.0 => n,
            _ => return false,
        };
        let r = scaled_distance(q, p, p.y);
        if r > 0.5 {
            return false;
        }
        if i >= iterations - tail {
            rmin = rmin.min(r);
            let angle = circular_diff(p.s, q.s).atan2((q.y - p.y) / p.y);
            if let Some(a) = prev_angle {
                turned += circular_diff(a, angle);
            }
            prev_angle = Some(angle);
        }
    }
    rmin > 1e-7 && turned.abs() > TAU
}

fn estimate_hopf_side(
    mp: &MapParams,
    tau: f64,
    s: f64,
    side_of_fold: FoldSide,
    opts: &HopfOptions,
    tol: &Tolerances,
) -> HopfSide {
    let Ok(level) = f_delta(mp.delta, tau) else {
        return HopfSide::Undetermined;
    };
    let gap = (level / (1.0 + side_of_fold.sign() * mp.shape) - mp.gamma).abs();
    for dg in [-opts.side_offset * gap, opts.side_offset * gap] {
        let Ok(m) = mp.with_gamma(mp.gamma + dg) else {
            continue;
        };
        let Some(sp) = branch_point(&m, tau, s) else {
            continue;
        };
        let Ok(fp) = classify_fixed_point(&m, tau, sp, tol) else {
            continue;
        };
        let p = fp.point();
        match fp.class {
            FixedClass::Repelling => {
                if settles_on_circle(p, opts.side_iterations, |q| eval_shifted_map(&m, tau, q)) {
                    return HopfSide::Super;
                }
            }
            FixedClass::Attracting => {
                if settles_on_circle(p, opts.side_iterations, |q| inverse_shifted_map(&m, tau, q, q)) {
                    return HopfSide::Sub;
                }
            }
            _ => {}
        }
    }
    HopfSide::Undetermined
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ManifoldBranch {
    UnstablePlus,
    UnstableMinus,
    StablePlus,
    StableMinus,
}

impl ManifoldBranch {
    pub fn as_str(self) -> &'static str {
        match self {
            ManifoldBranch::UnstablePlus => "unstable+",
            ManifoldBranch::UnstableMinus => "unstable-",
            ManifoldBranch::StablePlus => "stable+",
            ManifoldBranch::StableMinus => "stable-",
        }
    }

    pub fn is_stable(self) -> bool {
        matches!(self, ManifoldBranch::StablePlus | ManifoldBranch::StableMinus)
    }
}

/// Why a manifold branch stopped before the requested number of steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceStop {
    Completed,
    LeftDomain,
    InverseFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldTrace {
    pub saddle: FixedPointInfo,
    pub branch: ManifoldBranch,
    /// `(y, s)` starting at the saddle itself.
    pub points: Vec<(f64, f64)>,
    /// Signed distance of closest approach to the opposite manifold, in the
    /// scaled metric `(y / tau, s)`.
    pub min_crossing_gap: f64,
    /// Sign changes of that signed distance along the trace.
    pub crossings: usize,
    pub stop: TraceStop,
}

/// Settings for [`trace_invariant_manifolds`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldOptions {
    pub seed_distance: f64,
    /// Points per fundamental domain.
    pub per_domain: usize,
    pub y_min: f64,
    /// Scaled radius around the saddle ignored by the crossing indicator,
    /// where the two manifolds meet trivially.
    pub exclusion: f64,
}

impl Default for ManifoldOptions {
    fn default() -> Self {
        Self {
            seed_distance: 1e-6,
            per_domain: 40,
            y_min: 1e-9,
            exclusion: 1e-2,
        }
    }
}

/// Stable and unstable manifolds of a saddle of `G_tau`, each half separately.
pub fn trace_invariant_manifolds(
    mp: &MapParams,
    tau: f64,
    saddle: &FixedPointInfo,
    steps: usize,
    opts: &ManifoldOptions,
) -> Result<Vec<ManifoldTrace>> {
    if saddle.class != FixedClass::Saddle {
        return Err(Error::NotASaddle(format!(
            "point (tau={}, s={}) is {}",
            saddle.tau, saddle.s, saddle.class
        )));
    }
    let ev = saddle.eigenvalues;
    let (ls, lu) = (ev[0].re, ev[1].re);
    let vs = saddle.jacobian.eigenvector(ls);
    let vu = saddle.jacobian.eigenvector(lu);
    let p = saddle.point();

    let mut traces: Vec<ManifoldTrace> = [
        (ManifoldBranch::UnstablePlus, vu, 1.0, lu),
        (ManifoldBranch::UnstableMinus, vu, -1.0, lu),
        (ManifoldBranch::StablePlus, vs, 1.0, 1.0 / ls),
        (ManifoldBranch::StableMinus, vs, -1.0, 1.0 / ls),
    ]
    .into_par_iter()
    .map(|(branch, v, sign, growth)| {
        let step = |q: CylinderPoint| -> Result<CylinderPoint> {
            if branch.is_stable() {
                inverse_shifted_map(mp, tau, q, q)
            } else {
                eval_shifted_map(mp, tau, q)
            }
        };
        // orientation-reversing directions use the second iterate
        let twice = growth < 0.0;
        let factor = if twice { growth * growth } else { growth };
        let d0 = opts.seed_distance;
        let seeds: Vec<CylinderPoint> = (0..opts.per_domain)
            .map(|i| {
                let d = d0 * factor.powf(i as f64 / opts.per_domain as f64);
                CylinderPoint {
                    y: p.y + sign * d * v[0],
                    s: wrap_angle(p.s + sign * d * v[1]),
                }
            })
            .collect();
        let mut points = vec![(p.y, p.s)];
        points.extend(seeds.iter().map(|q| (q.y, q.s)));
        let mut layer = seeds;
        let mut stop = TraceStop::Completed;
        'outer: for _ in 0..steps {
            let mut next = Vec::with_capacity(layer.len());
            for &q in &layer {
                let img = step(q).and_then(|a| if twice { step(a) } else { Ok(a) });
                match img {
                    Ok(n) if n.y > opts.y_min && n.y <= 1.0 => next.push(n),
                    Ok(_) => {
                        stop = TraceStop::LeftDomain;
                        points.extend(next.iter().map(|q| (q.y, q.s)));
                        break 'outer;
                    }
                    Err(_) => {
                        stop = if branch.is_stable() {
                            TraceStop::InverseFailed
                        } else {
                            TraceStop::LeftDomain
                        };
                        points.extend(next.iter().map(|q| (q.y, q.s)));
                        break 'outer;
                    }
                }
            }
            points.extend(next.iter().map(|q| (q.y, q.s)));
            layer = next;
        }
        ManifoldTrace {
            saddle: *saddle,
            branch,
            points,
            min_crossing_gap: f64::INFINITY,
            crossings: 0,
            stop,
        }
    })
    .collect();

    // each manifold as one curve through the saddle: reversed minus half, then plus half
    let joined = |plus: ManifoldBranch, minus: ManifoldBranch| -> Vec<(f64, f64)> {
        let get = |b| &traces.iter().find(|t| t.branch == b).unwrap().points;
        let mut c: Vec<(f64, f64)> = get(minus).iter().rev().copied().collect();
        c.extend(get(plus).iter().skip(1).copied());
        c
    };
    let stable = joined(ManifoldBranch::StablePlus, ManifoldBranch::StableMinus);
    let unstable = joined(ManifoldBranch::UnstablePlus, ManifoldBranch::UnstableMinus);
    let far = |&(y, s): &(f64, f64)| scaled_distance(CylinderPoint { y, s }, p, p.y) > opts.exclusion;
    let stable_far: Vec<(f64, f64)> = stable.iter().copied().filter(far).collect();
    let unstable_far: Vec<(f64, f64)> = unstable.iter().copied().filter(far).collect();
    for t in &mut traces {
        let other = if t.branch.is_stable() { &unstable_far } else { &stable_far };
        let own: Vec<(f64, f64)> = t.points.iter().copied().filter(far).collect();
        let (gap, crossings) = crossing_indicator(&own, other, p.y);
        t.min_crossing_gap = gap;
        t.crossings = crossings;
    }
    Ok(traces)
}

/// Signed distance from each vertex of `points` to the polyline `other`, in
/// `(y / scale, s)` coordinates. Returns the value closest to zero and the
/// number of sign changes between consecutive vertices whose nearest point
/// lies inside a segment.
fn crossing_indicator(points: &[(f64, f64)], other: &[(f64, f64)], scale: f64) -> (f64, usize) {
    let mut best = f64::INFINITY;
    let mut crossings = 0;
    let mut prev: Option<f64> = None;
    for &(y, s) in points {
        // (distance, signed distance, projection inside the segment)
        let mut nearest: Option<(f64, f64, bool)> = None;
        for w in other.windows(2) {
            let (a, b) = (w[0], w[1]);
            let ds = circular_diff(a.1, b.1);
            if ds.abs() > FRAC_PI_2 {
                continue;
            }
            let dx = (b.0 - a.0) / scale;
            let px = (y - a.0) / scale;
            let ps = circular_diff(a.1, s);
            let len2 = dx * dx + ds * ds;
            if len2 == 0.0 {
                continue;
            }
            let t = (px * dx + ps * ds) / len2;
            let tc = t.clamp(0.0, 1.0);
            let dist = (px - tc * dx).hypot(ps - tc * ds);
            let side = (dx * ps - ds * px).signum();
            if nearest.map_or(true, |(d, _, _)| dist < d) {
                nearest = Some((dist, side * dist, (0.0..=1.0).contains(&t)));
            }
        }
        match nearest {
            Some((_, signed, inside)) => {
                if signed.abs() < best.abs() {
                    best = signed;
                }
                if inside {
                    if let Some(pv) = prev {
                        if pv.signum() != signed.signum() {
                            crossings += 1;
                        }
                    }
                    prev = Some(signed);
                } else {
                    prev = None;
                }
            }
            None => prev = None,
        }
    }
    (best, crossings)
}

pub fn write_bt_csv<W: Write>(points: &[BTPoint], mut out: W) -> io::Result<()> {
    writeln!(out, "delta,k,eps,gamma,tau,s,residual")?;
    for b in points {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_f64(b.delta),
            fmt_f64(b.shape),
            b.eps(),
            fmt_f64(b.gamma),
            fmt_f64(b.tau),
            fmt_f64(b.s_star),
            fmt_f64(b.residual)
        )?;
    }
    Ok(())
}

/// Failed entries keep their row, with the computed columns left empty.
pub fn write_hopf_csv<W: Write>(delta: f64, shape: f64, entries: &[HopfEntry], mut out: W) -> io::Result<()> {
    writeln!(out, "delta,k,eps,gamma,tau,s,theta,side,status")?;
    for e in entries {
        let eps = if e.side_of_fold == FoldSide::Upper { 1 } else { -1 };
        match &e.result {
            Ok(h) => writeln!(
                out,
                "{},{},{eps},{},{},{},{},{},converged",
                fmt_f64(h.delta),
                fmt_f64(h.shape),
                fmt_f64(h.gamma),
                fmt_f64(h.tau),
                fmt_f64(h.s),
                fmt_f64(h.theta),
                h.side.as_str()
            )?,
            Err(_) => writeln!(
                out,
                "{},{},{eps},,{},,,,failed",
                fmt_f64(delta),
                fmt_f64(shape),
                fmt_f64(e.tau)
            )?,
        }
    }
    Ok(())
}

pub fn write_manifold_csv<W: Write>(traces: &[ManifoldTrace], mut out: W) -> io::Result<()> {
    writeln!(out, "branch,index,y,s")?;
    for t in traces {
        for (i, &(y, s)) in t.points.iter().enumerate() {
            writeln!(out, "{},{i},{},{}", t.branch.as_str(), fmt_f64(y), fmt_f64(s))?;
        }
    }
    Ok(())
}

/// Evenly spaced `tau` values below `tau_m` for a Hopf sweep.
pub fn hopf_tau_grid(delta: f64, n: usize, span: f64) -> Result<Vec<f64>> {
    let tm = tau_max(delta)?;
    Ok((1..=n).map(|i| tm * (1.0 - span * i as f64 / n as f64)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::find_folds;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn mp(delta: f64, gamma: f64, shape: f64, time_scale: f64) -> MapParams {
        MapParams::new(delta, gamma, shape, time_scale).unwrap()
    }

    #[test]
    fn rejects_points_off_the_diagram() {
        let r = classify_fixed_point(&mp(2.0, 0.5, 0.5, 0.5625), 0.5, 0.0, &tol());
        assert!(matches!(r, Err(Error::NotAFixedPoint { .. })));
    }

    #[test]
    fn class_rule() {
        let e = 1e-10;
        assert_eq!(FixedClass::from_moduli([0.5, 0.9], e), FixedClass::Attracting);
        assert_eq!(FixedClass::from_moduli([0.5, 1.5], e), FixedClass::Saddle);
        assert_eq!(FixedClass::from_moduli([1.1, 1.5], e), FixedClass::Repelling);
        assert_eq!(FixedClass::from_moduli([1.0, 1.5], e), FixedClass::Nonhyperbolic);
    }

    #[test]
    fn bt_points_for_small_shape() {
        let bts = find_bt_points(1.5, 0.5).unwrap();
        assert_eq!(bts.len(), 2);
        assert!((bts[0].tau - 0.23849).abs() < 1e-5);
        assert!((bts[0].gamma - 0.38824).abs() < 1e-5);
        assert!((bts[1].gamma - 1.16472).abs() < 1e-5);
        for b in &bts {
            let j = b.jacobian(0.5625).unwrap();
            assert!(j.is_lower_triangular() || j.get(0, 1).abs() < 1e-15);
            assert!((j.get(0, 0) - 1.0).abs() < 1e-10);
            assert_ne!(j.get(1, 0), 0.0);
        }
        assert_eq!(find_bt_points(1.5, 2.0).unwrap().len(), 1);
        assert!(find_bt_points(1.7, 0.5).is_err());
        assert!(find_bt_points(1.5, 0.0).is_err());
    }

    #[test]
    fn inverse_map_round_trip() {
        let m = mp(1.5, 0.2, 0.5, 0.64);
        let q = CylinderPoint { y: 0.3, s: 1.0 };
        let p = eval_shifted_map(&m, 0.25, q).unwrap();
        let back = inverse_shifted_map(&m, 0.25, p, CylinderPoint { y: 0.31, s: 1.02 }).unwrap();
        assert!((back.y - q.y).abs() < 1e-11 && circular_diff(back.s, q.s).abs() < 1e-11);
    }

    #[test]
    fn fold_window_rejections() {
        let m = mp(2.0, 0.5, 0.5, 0.5625);
        let folds = find_folds(&m, &tol()).unwrap();
        assert!(matches!(
            fold_branch_stability(&m, &folds[0], 0.5, &tol()),
            Err(Error::WindowTooLarge { .. })
        ));
        assert!(fold_branch_stability(&m, &folds[0], 1e-3, &tol()).is_ok());
    }

    #[test]
    fn hopf_locus_near_bt() {
        let tm = tau_max(1.5).unwrap();
        let grid = [tm * 0.99, tm * 0.95];
        let opts = HopfOptions {
            estimate_side: false,
            ..Default::default()
        };
        let entries = solve_hopf_locus(1.5, 0.5, 0.64, &grid, &opts, &tol()).unwrap();
        assert_eq!(entries.len(), 4);
        for e in &entries {
            let h = e.result.as_ref().unwrap();
            assert!((h.det - 1.0).abs() < 1e-8);
            assert!(h.trace < 2.0 && h.s.cos() > 0.0);
            let m = mp(1.5, h.gamma, 0.5, 0.64);
            let fp = classify_fixed_point(&m, h.tau, h.s, &tol()).unwrap();
            assert!((fp.eigenvalues[0].norm() - 1.0).abs() < 1e-7);
            assert!(fp.eigenvalues[0].im != 0.0);
        }
        // at tau_m the locus meets the BT point and is excluded
        let at = solve_hopf_locus(1.5, 0.5, 0.64, &[tm], &opts, &tol()).unwrap();
        assert!(at.iter().all(|e| e.result.is_err()));
    }
}
