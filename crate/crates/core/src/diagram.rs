//! Zero sets of the circle-map family on the cylinder.
//!
//! Everything here works on the level-set form `gamma (1 + k sin s) = F_d(tau)`:
//! for fixed `tau` the solutions in `s` are where the horizontal line at
//! height `F_d(tau)` cuts the graph of `s -> gamma (1 + k sin s)`. Folds sit
//! where that line touches the extremes `gamma (1 +- k)`, so they are known
//! exactly in `s` (`pi/2` or `3 pi/2`) and only their `tau` needs solving.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::io::{self, Write};

use crate::config::{Tolerances, TAU_FLOOR};
use crate::cylinder::{eval_g, f_delta, f_delta_prime, max_value, tau_max, FoldSide};
use crate::error::{domain, Error, Result};
use crate::params::{circular_diff, wrap_angle, MapParams, GOLDEN};
use crate::roots::{bisect, bisect_log};

/// Direction in which a fold opens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Criticality {
    /// Two local solutions for `tau` above the fold, none below.
    Supercritical,
    /// Two local solutions for `tau` below the fold, none above.
    Subcritical,
    /// Both neighbouring solutions vanish: the fold sits at the maximum of `F_d`.
    Degenerate,
}

impl Criticality {
    pub fn as_str(self) -> &'static str {
        match self {
            Criticality::Supercritical => "supercritical",
            Criticality::Subcritical => "subcritical",
            Criticality::Degenerate => "degenerate",
        }
    }
}

impl fmt::Display for Criticality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A saddle-node point of the diagram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldPoint {
    pub tau: f64,
    pub side: FoldSide,
    pub criticality: Criticality,
    /// `gamma (1 + eps k)`, the level `F_d` attains at `tau`.
    pub level: f64,
}

impl FoldPoint {
    pub fn s_star(&self) -> f64 {
        self.side.angle()
    }

    pub fn eps(&self) -> i32 {
        match self.side {
            FoldSide::Upper => 1,
            FoldSide::Lower => -1,
        }
    }
}

/// Persistent regions and transition sets of the `(delta, gamma, k)` space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    // k > 1
    A,
    B,
    C,
    // 0 < k < 1
    W,
    X,
    Y,
    Z,
    // k = 1
    UnitA,
    UnitB,
    UnitC,
    // k = 0
    NoZeros,
    TwoCircles,
    OneCircle,
    /// gamma = 0: the single circle tau = 1.
    Unforced,
    BoundaryAB,
    BoundaryWX,
    BoundaryXY,
    BoundaryUnitAB,
    /// k = 0 and gamma = M_F: the two circles merge.
    BoundaryTangent,
    BoundaryDeltaPhi,
}

impl Region {
    pub fn tag(self) -> &'static str {
        match self {
            Region::A => "A",
            Region::B => "B",
            Region::C => "C",
            Region::W => "W",
            Region::X => "X",
            Region::Y => "Y",
            Region::Z => "Z",
            Region::UnitA => "a",
            Region::UnitB => "b",
            Region::UnitC => "c",
            Region::NoZeros => "K0_NoZeros",
            Region::TwoCircles => "K0_TwoCircles",
            Region::OneCircle => "K0_OneCircle",
            Region::Unforced => "Unforced",
            Region::BoundaryAB => "Boundary_AB",
            Region::BoundaryWX => "Boundary_WX",
            Region::BoundaryXY => "Boundary_XY",
            Region::BoundaryUnitAB => "Boundary_ab",
            Region::BoundaryTangent => "Boundary_K0Tangent",
            Region::BoundaryDeltaPhi => "Boundary_DeltaPhi",
        }
    }

    pub fn is_boundary(self) -> bool {
        matches!(
            self,
            Region::BoundaryAB
                | Region::BoundaryWX
                | Region::BoundaryXY
                | Region::BoundaryUnitAB
                | Region::BoundaryTangent
                | Region::BoundaryDeltaPhi
        )
    }

    /// Shape of the traced diagram in an open region.
    ///
    /// Curves that close only through the excluded boundary `tau = 0` are
    /// counted as open, and folds at `tau = 0` are not counted.
    pub fn expected_topology(self) -> Option<Topology> {
        let t = |open, closed_contractible, closed_around, folds| Topology {
            open,
            closed_contractible,
            closed_around,
            folds,
        };
        Some(match self {
            Region::A => t(2, 0, 0, 0),
            Region::B => t(2, 0, 0, 2),
            Region::C => t(1, 0, 0, 1),
            Region::W => t(0, 0, 0, 0),
            Region::X => t(0, 1, 0, 2),
            Region::Y => t(0, 0, 2, 4),
            Region::Z => t(0, 0, 1, 2),
            Region::UnitA => t(1, 0, 0, 1),
            Region::UnitB => t(1, 0, 1, 3),
            Region::UnitC => t(0, 0, 1, 2),
            Region::NoZeros => t(0, 0, 0, 0),
            Region::TwoCircles => t(0, 0, 2, 0),
            Region::OneCircle | Region::Unforced => t(0, 0, 1, 0),
            _ => return None,
        })
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Curve and fold counts of a diagram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Topology {
    pub open: usize,
    /// Closed curves with winding 0.
    pub closed_contractible: usize,
    /// Closed curves with winding 1.
    pub closed_around: usize,
    pub folds: usize,
}

impl Topology {
    pub fn curves(&self) -> usize {
        self.open + self.closed_contractible + self.closed_around
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionLabel {
    pub region: Region,
    pub delta: f64,
    pub gamma: f64,
    pub shape: f64,
}

/// Region thresholds in `gamma` for a weakly attracting cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// `M_F / (1 + k)`
    pub gamma_plus: f64,
    /// `M_F / (1 - k)`, only for `k < 1`.
    pub gamma_minus: Option<f64>,
    pub golden: f64,
}

pub fn transition_thresholds(delta: f64, shape: f64) -> Result<Thresholds> {
    if !(delta > 1.0 && delta < GOLDEN) {
        return Err(domain(
            "transition_thresholds",
            format!("delta={delta} must lie in (1, golden); only the delta = golden wall remains"),
        ));
    }
    if !(shape >= 0.0) {
        return Err(domain("transition_thresholds", format!("k={shape} must be >= 0")));
    }
    let m = max_value(delta)?;
    Ok(Thresholds {
        gamma_plus: m / (1.0 + shape),
        gamma_minus: (shape < 1.0).then(|| m / (1.0 - shape)),
        golden: GOLDEN,
    })
}

fn near(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(f64::MIN_POSITIVE)
}

/// Assign the region of `(delta, gamma, k)` from the threshold inequalities.
pub fn classify_region(delta: f64, gamma: f64, shape: f64, tol: &Tolerances) -> Result<RegionLabel> {
    if !(delta > 1.0) || !delta.is_finite() {
        return Err(domain("classify_region", format!("delta={delta} must exceed 1")));
    }
    if !(gamma >= 0.0) || !(shape >= 0.0) || !gamma.is_finite() || !shape.is_finite() {
        return Err(domain(
            "classify_region",
            format!("gamma={gamma} and k={shape} must be finite and >= 0"),
        ));
    }
    let label = |region| RegionLabel {
        region,
        delta,
        gamma,
        shape,
    };
    if gamma == 0.0 {
        return Ok(label(Region::Unforced));
    }
    if (delta - GOLDEN).abs() < tol.boundary {
        return Ok(label(Region::BoundaryDeltaPhi));
    }
    let weak = delta < GOLDEN;
    let m = if weak { max_value(delta)? } else { f64::NAN };
    let region = if shape == 0.0 {
        if !weak {
            Region::OneCircle
        } else if near(gamma, m, tol.boundary) {
            Region::BoundaryTangent
        } else if gamma < m {
            Region::TwoCircles
        } else {
            Region::NoZeros
        }
    } else if shape == 1.0 {
        let gp = m / 2.0;
        if !weak {
            Region::UnitC
        } else if near(gamma, gp, tol.boundary) {
            Region::BoundaryUnitAB
        } else if gamma > gp {
            Region::UnitA
        } else {
            Region::UnitB
        }
    } else if shape > 1.0 {
        let gp = m / (1.0 + shape);
        if !weak {
            Region::C
        } else if near(gamma, gp, tol.boundary) {
            Region::BoundaryAB
        } else if gamma > gp {
            Region::A
        } else {
            Region::B
        }
    } else {
        let gp = m / (1.0 + shape);
        let gm = m / (1.0 - shape);
        if !weak {
            Region::Z
        } else if near(gamma, gm, tol.boundary) {
            Region::BoundaryWX
        } else if near(gamma, gp, tol.boundary) {
            Region::BoundaryXY
        } else if gamma > gm {
            Region::W
        } else if gamma > gp {
            Region::X
        } else {
            Region::Y
        }
    };
    Ok(label(region))
}

/// All `tau` in `[floor, 1]` where `F_d(tau) = level`, ascending.
pub(crate) fn solve_level(delta: f64, level: f64, floor: f64, tol: &Tolerances) -> Result<Vec<f64>> {
    let f = |t: f64| f_delta(delta, t).expect("tau inside checked bracket") - level;
    let mut roots = Vec::new();
    if level < 0.0 {
        return Ok(roots);
    }
    if level == 0.0 {
        roots.push(1.0);
        return Ok(roots);
    }
    if delta < GOLDEN {
        let tm = tau_max(delta)?;
        let m = max_value(delta)?;
        if near(level, m, tol.boundary) {
            roots.push(tm);
            return Ok(roots);
        }
        if level > m {
            return Ok(roots);
        }
        if floor < tm && f(floor) < 0.0 {
            roots.push(bisect_log(f, floor, tm, tol.root * 1e-3)?);
        }
        roots.push(bisect(f, tm, 1.0, tol.root)?);
    } else if f(floor) > 0.0 {
        // monotone decreasing on the whole interval
        let r = if f(1e-2_f64.max(floor)) > 0.0 {
            bisect(f, 1e-2_f64.max(floor), 1.0, tol.root)?
        } else {
            bisect_log(f, floor, 1e-2, tol.root * 1e-3)?
        };
        roots.push(r);
    }
    Ok(roots)
}

fn criticality_for(delta: f64, tau: f64, side: FoldSide) -> Result<Criticality> {
    let slope = f_delta_prime(delta, tau)?;
    if slope == 0.0 {
        return Ok(Criticality::Degenerate);
    }
    let rising = slope > 0.0;
    Ok(match (side, rising) {
        (FoldSide::Upper, true) | (FoldSide::Lower, false) => Criticality::Subcritical,
        _ => Criticality::Supercritical,
    })
}

/// Fold points of the diagram with `tau >= floor`, sorted by `tau`.
pub fn find_folds_above(mp: &MapParams, floor: f64, tol: &Tolerances) -> Result<Vec<FoldPoint>> {
    let mut folds = Vec::new();
    if mp.gamma == 0.0 || mp.shape == 0.0 {
        return Ok(folds);
    }
    let floor = floor.max(TAU_FLOOR);
    let mut levels = vec![(FoldSide::Upper, mp.gamma * (1.0 + mp.shape))];
    if mp.shape <= 1.0 {
        levels.push((FoldSide::Lower, mp.gamma * (1.0 - mp.shape)));
    }
    for (side, level) in levels {
        let roots = solve_level(mp.delta, level, floor, tol)?;
        let degenerate = roots.len() == 1 && mp.delta < GOLDEN && near(level, max_value(mp.delta)?, tol.boundary);
        for tau in roots {
            let criticality = if degenerate {
                Criticality::Degenerate
            } else {
                criticality_for(mp.delta, tau, side)?
            };
            folds.push(FoldPoint {
                tau,
                side,
                criticality,
                level,
            });
        }
    }
    folds.sort_by(|a, b| a.tau.total_cmp(&b.tau));
    Ok(folds)
}

/// Fold points of the diagram on `(0, 1]` (down to the evaluation floor).
pub fn find_folds(mp: &MapParams, tol: &Tolerances) -> Result<Vec<FoldPoint>> {
    find_folds_above(mp, TAU_FLOOR, tol)
}

/// One connected piece of the traced zero set.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagramCurve {
    /// Ordered `(tau, s)` points; closed curves do not repeat the first point.
    pub points: Vec<(f64, f64)>,
    pub closed: bool,
    pub winding: i32,
    /// Indices into [`Diagram::folds`].
    pub folds: Vec<usize>,
    pub touches_tau0: bool,
    pub touches_tau1: bool,
}

impl DiagramCurve {
    fn compute_winding(points: &[(f64, f64)], closed: bool) -> i32 {
        let mut total = 0.0;
        for w in points.windows(2) {
            total += circular_diff(w[0].1, w[1].1);
        }
        if closed && points.len() > 1 {
            total += circular_diff(points[points.len() - 1].1, points[0].1);
        }
        (total / TAU).round().abs() as i32
    }

    pub fn tau_range(&self) -> (f64, f64) {
        self.points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagram {
    pub params: MapParams,
    pub label: RegionLabel,
    pub curves: Vec<DiagramCurve>,
    pub folds: Vec<FoldPoint>,
    /// Smallest `tau` of the grid; curves touching it are reported down to here.
    pub tau_min: f64,
}

impl Diagram {
    pub fn topology(&self) -> Topology {
        let mut t = Topology {
            folds: self.folds.len(),
            ..Default::default()
        };
        for c in &self.curves {
            match (c.closed, c.winding) {
                (false, _) => t.open += 1,
                (true, 0) => t.closed_contractible += 1,
                (true, _) => t.closed_around += 1,
            }
        }
        t
    }

    /// Write one row per traced point: `curve_id,tau,s,is_fold,criticality`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "curve_id,tau,s,is_fold,criticality")?;
        for (id, c) in self.curves.iter().enumerate() {
            for &(tau, s) in &c.points {
                let fold = c
                    .folds
                    .iter()
                    .map(|&i| &self.folds[i])
                    .find(|f| f.tau == tau && f.s_star() == s);
                let (is_fold, crit) = match fold {
                    Some(f) => (1, f.criticality.as_str()),
                    None => (0, "none"),
                };
                writeln!(out, "{id},{},{},{is_fold},{crit}", fmt_f64(tau), fmt_f64(s))?;
            }
        }
        Ok(())
    }
}

/// Fixed 17-significant-digit float formatting used by every CSV writer.
pub fn fmt_f64(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Grid and sampling settings for [`trace_diagram`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    pub n_tau: usize,
    pub tau_min: f64,
    /// Samples per circle when the diagram consists of `tau = const` circles.
    pub n_circle: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            n_tau: 4096,
            tau_min: 1e-9,
            n_circle: 256,
        }
    }
}

impl TraceOptions {
    pub fn with_n_tau(n_tau: usize) -> Self {
        Self {
            n_tau,
            ..Self::default()
        }
    }

    /// Log-spaced grid from `tau_min` to exactly 1.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.n_tau;
        let l0 = self.tau_min.ln();
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    1.0
                } else {
                    (l0 * (1.0 - i as f64 / (n - 1) as f64)).exp()
                }
            })
            .collect()
    }
}

/// One Newton step on `g(tau, .)` unless it would cross to the other branch.
fn polish(mp: &MapParams, tau: f64, s: f64) -> f64 {
    let Ok(j) = eval_g(mp, tau, s) else {
        return s;
    };
    if j.d_ds.abs() < 1e-8 * mp.gamma.max(1e-300) {
        return s;
    }
    let s1 = s - j.value / j.d_ds;
    if s1.cos().signum() != s.cos().signum() {
        return s;
    }
    match eval_g(mp, tau, s1) {
        Ok(j1) if j1.value.abs() <= j.value.abs() => wrap_angle(s1),
        _ => s,
    }
}

/// Solutions in `s` at a fixed `tau`: the `cos s >= 0` branch then the other.
fn slice(mp: &MapParams, tau: f64) -> Option<(f64, f64)> {
    let u = (f_delta(mp.delta, tau).ok()? / mp.gamma - 1.0) / mp.shape;
    if !(u.abs() <= 1.0) {
        return None;
    }
    let a = u.asin();
    let right = polish(mp, tau, wrap_angle(a));
    let left = polish(mp, tau, wrap_angle(PI - a));
    Some((right, left))
}

fn circle(tau: f64, n: usize) -> DiagramCurve {
    let points = (0..n).map(|j| (tau, TAU * j as f64 / n as f64)).collect();
    DiagramCurve {
        points,
        closed: true,
        winding: 1,
        folds: Vec::new(),
        touches_tau0: false,
        touches_tau1: tau == 1.0,
    }
}

/// Trace the zero set of `g` on the cylinder.
pub fn trace_diagram(mp: &MapParams, opts: &TraceOptions, tol: &Tolerances) -> Result<Diagram> {
    if opts.n_tau < 100 {
        return Err(Error::DegenerateGrid {
            n: opts.n_tau,
            detail: "at least 100 tau samples are required".into(),
        });
    }
    if !(opts.tau_min >= TAU_FLOOR && opts.tau_min < 1.0) {
        return Err(domain("trace_diagram", format!("tau_min={} outside [1e-12, 1)", opts.tau_min)));
    }
    let label = classify_region(mp.delta, mp.gamma, mp.shape, tol)?;
    let mut diagram = Diagram {
        params: *mp,
        label,
        curves: Vec::new(),
        folds: Vec::new(),
        tau_min: opts.tau_min,
    };

    if mp.gamma == 0.0 {
        diagram.curves.push(circle(1.0, opts.n_circle));
        return Ok(diagram);
    }
    if mp.shape == 0.0 {
        for tau in solve_level(mp.delta, mp.gamma, opts.tau_min, tol)? {
            diagram.curves.push(circle(tau, opts.n_circle));
        }
        return Ok(diagram);
    }

    let folds = find_folds_above(mp, opts.tau_min, tol)?;
    let grid = opts.grid();
    let n = grid.len();
    let slices: Vec<Option<(f64, f64)>> = grid.iter().map(|&t| slice(mp, t)).collect();

    // maximal runs of consecutive grid points carrying solutions
    let mut runs = Vec::new();
    let mut i = 0;
    while i < n {
        if slices[i].is_some() {
            let start = i;
            while i + 1 < n && slices[i + 1].is_some() {
                i += 1;
            }
            runs.push((start, i));
        }
        i += 1;
    }

    let mut used = vec![false; folds.len()];
    let mut fold_between = |lo: f64, hi: f64| -> Option<usize> {
        let slack = 1e-9;
        let idx = folds
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .find(|(_, f)| f.tau >= lo * (1.0 - slack) && f.tau <= hi * (1.0 + slack))
            .map(|(j, _)| j)?;
        used[idx] = true;
        Some(idx)
    };

    for &(i0, i1) in &runs {
        let lower = if i0 == 0 {
            None
        } else {
            Some(fold_between(grid[i0 - 1], grid[i0]).ok_or_else(|| Error::DegenerateGrid {
                n,
                detail: format!("no fold found below tau={}", grid[i0]),
            })?)
        };
        let upper = if i1 + 1 == n {
            // a fold exactly at tau = 1 happens for k = 1
            fold_between(1.0, 1.0)
        } else {
            Some(fold_between(grid[i1], grid[i1 + 1]).ok_or_else(|| Error::DegenerateGrid {
                n,
                detail: format!("no fold found above tau={}", grid[i1]),
            })?)
        };
        let skip: Vec<f64> = [lower, upper]
            .iter()
            .flatten()
            .map(|&j| folds[j].tau)
            .collect();
        let idx: Vec<usize> = (i0..=i1).filter(|&i| !skip.contains(&grid[i])).collect();
        let right: Vec<(f64, f64)> = idx.iter().map(|&i| (grid[i], slices[i].unwrap().0)).collect();
        let left: Vec<(f64, f64)> = idx.iter().map(|&i| (grid[i], slices[i].unwrap().1)).collect();
        let fold_pt = |j: usize| (folds[j].tau, folds[j].s_star());
        let touches_tau0 = i0 == 0;
        let touches_tau1 = i1 + 1 == n;

        let mut push = |points: Vec<(f64, f64)>, closed: bool, fidx: Vec<usize>, t0: bool, t1: bool| {
            let winding = DiagramCurve::compute_winding(&points, closed);
            diagram.curves.push(DiagramCurve {
                points,
                closed,
                winding,
                folds: fidx,
                touches_tau0: t0,
                touches_tau1: t1,
            });
        };

        match (lower, upper) {
            (Some(lo), Some(hi)) => {
                let mut pts = vec![fold_pt(lo)];
                pts.extend(right.iter().copied());
                pts.push(fold_pt(hi));
                pts.extend(left.iter().rev().copied());
                push(pts, true, vec![lo, hi], touches_tau0, touches_tau1);
            }
            (Some(lo), None) => {
                let mut pts: Vec<_> = right.iter().rev().copied().collect();
                pts.push(fold_pt(lo));
                pts.extend(left.iter().copied());
                push(pts, false, vec![lo], touches_tau0, touches_tau1);
            }
            (None, Some(hi)) => {
                let mut pts = right.clone();
                pts.push(fold_pt(hi));
                pts.extend(left.iter().rev().copied());
                push(pts, false, vec![hi], touches_tau0, touches_tau1);
            }
            (None, None) => {
                push(right, false, Vec::new(), touches_tau0, touches_tau1);
                push(left, false, Vec::new(), touches_tau0, touches_tau1);
            }
        }
    }

    if let Some(j) = used.iter().position(|u| !u) {
        return Err(Error::DegenerateGrid {
            n,
            detail: format!(
                "fold at tau={} (s={}) falls between grid points",
                folds[j].tau,
                folds[j].s_star()
            ),
        });
    }
    diagram.folds = folds;

    // fold indices were assigned while `used` was filled; keep them sorted per curve
    for c in &mut diagram.curves {
        c.folds.sort_unstable();
    }

    if let Some(expected) = label.region.expected_topology() {
        let got = diagram.topology();
        if got != expected {
            return Err(Error::DegenerateGrid {
                n,
                detail: format!(
                    "traced topology {got:?} disagrees with region {} ({expected:?})",
                    label.region
                ),
            });
        }
    }
    Ok(diagram)
}

/// Number of solutions of `g(tau, .) = 0` on a circle, counted by sign changes.
pub fn count_solutions_on_slice(mp: &MapParams, tau: f64, n_s: usize) -> usize {
    let vals: Vec<f64> = (0..n_s)
        .map(|j| {
            let s = TAU * j as f64 / n_s as f64;
            eval_g(mp, tau, s).map(|g| g.value).unwrap_or(f64::NAN)
        })
        .collect();
    (0..n_s)
        .filter(|&j| {
            let a = vals[j];
            let b = vals[(j + 1) % n_s];
            (a < 0.0) != (b < 0.0)
        })
        .count()
}

/// One cell of a region atlas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtlasCell {
    pub delta: f64,
    pub gamma: f64,
    pub region: Region,
}

/// Region of every `(delta, gamma)` pair of the grid at fixed `k`, row-major
/// in `delta`.
pub fn region_atlas(shape: f64, deltas: &[f64], gammas: &[f64], tol: &Tolerances) -> Result<Vec<AtlasCell>> {
    use rayon::prelude::*;
    let cells: Vec<(f64, f64)> = deltas
        .iter()
        .flat_map(|&d| gammas.iter().map(move |&g| (d, g)))
        .collect();
    cells
        .par_iter()
        .map(|&(delta, gamma)| {
            classify_region(delta, gamma, shape, tol).map(|l| AtlasCell {
                delta,
                gamma,
                region: l.region,
            })
        })
        .collect()
}

/// `delta,gamma,k,region`
pub fn write_atlas_csv<W: Write>(cells: &[AtlasCell], shape: f64, mut out: W) -> io::Result<()> {
    writeln!(out, "delta,gamma,k,region")?;
    for c in cells {
        writeln!(out, "{},{},{},{}", fmt_f64(c.delta), fmt_f64(c.gamma), fmt_f64(shape), c.region.tag())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn mp(delta: f64, gamma: f64, shape: f64) -> MapParams {
        MapParams::new(delta, gamma, shape, 0.5625).unwrap()
    }

    #[test]
    fn region_examples() {
        let t = tol();
        assert_eq!(classify_region(1.5, 0.2, 0.5, &t).unwrap().region, Region::Y);
        assert_eq!(classify_region(2.0, 0.5, 0.5, &t).unwrap().region, Region::Z);
        assert_eq!(classify_region(1.5, 1.5, 0.5, &t).unwrap().region, Region::W);
        assert_eq!(classify_region(1.5, 0.6, 0.5, &t).unwrap().region, Region::X);
        assert_eq!(classify_region(1.5, 0.6, 2.0, &t).unwrap().region, Region::A);
        assert_eq!(classify_region(1.5, 0.1, 2.0, &t).unwrap().region, Region::B);
        assert_eq!(classify_region(2.0, 0.1, 2.0, &t).unwrap().region, Region::C);
        assert!(classify_region(1.0, 0.1, 2.0, &t).is_err());
    }

    #[test]
    fn region_boundaries() {
        let t = tol();
        let th = transition_thresholds(1.5, 0.5).unwrap();
        assert_eq!(
            classify_region(1.5, th.gamma_plus, 0.5, &t).unwrap().region,
            Region::BoundaryXY
        );
        assert_eq!(
            classify_region(1.5, th.gamma_minus.unwrap(), 0.5, &t).unwrap().region,
            Region::BoundaryWX
        );
        assert_eq!(
            classify_region(GOLDEN, 0.3, 0.5, &t).unwrap().region,
            Region::BoundaryDeltaPhi
        );
        // just outside the boundary band the open region comes back
        let g = th.gamma_plus * (1.0 + 1e-6);
        assert_eq!(classify_region(1.5, g, 0.5, &t).unwrap().region, Region::X);
    }

    #[test]
    fn k_zero_and_unit_regions() {
        let t = tol();
        let m = max_value(1.5).unwrap();
        assert_eq!(classify_region(1.5, 0.5 * m, 0.0, &t).unwrap().region, Region::TwoCircles);
        assert_eq!(classify_region(1.5, 1.5 * m, 0.0, &t).unwrap().region, Region::NoZeros);
        assert_eq!(classify_region(2.0, 0.3, 0.0, &t).unwrap().region, Region::OneCircle);
        assert_eq!(classify_region(1.5, m, 0.0, &t).unwrap().region, Region::BoundaryTangent);
        assert_eq!(classify_region(1.5, m, 1.0, &t).unwrap().region, Region::UnitA);
        assert_eq!(classify_region(1.5, 0.1, 1.0, &t).unwrap().region, Region::UnitB);
        assert_eq!(classify_region(2.0, 0.1, 1.0, &t).unwrap().region, Region::UnitC);
        assert_eq!(classify_region(2.0, 0.0, 1.0, &t).unwrap().region, Region::Unforced);
    }

    #[test]
    fn thresholds() {
        let th = transition_thresholds(1.5, 0.5).unwrap();
        assert!((th.gamma_plus - 0.38824).abs() < 1e-5);
        assert!((th.gamma_minus.unwrap() - 1.16472).abs() < 1e-5);
        let th = transition_thresholds(1.5, 2.0).unwrap();
        assert!((th.gamma_plus - 0.19412).abs() < 1e-5);
        assert!(th.gamma_minus.is_none());
        let th = transition_thresholds(GOLDEN - 1e-7, 2.0).unwrap();
        assert!((th.gamma_plus - 1.0 / 3.0).abs() < 1e-3);
        assert!(transition_thresholds(GOLDEN, 2.0).is_err());
        assert!(transition_thresholds(2.0, 0.5).is_err());
    }

    #[test]
    fn folds_region_z() {
        let folds = find_folds(&mp(2.0, 0.5, 0.5), &tol()).unwrap();
        assert_eq!(folds.len(), 2);
        assert_eq!(folds[0].side, FoldSide::Upper);
        assert_eq!(folds[0].criticality, Criticality::Supercritical);
        assert!((folds[0].tau - 0.7566).abs() < 1e-3);
        assert_eq!(folds[1].side, FoldSide::Lower);
        assert_eq!(folds[1].criticality, Criticality::Subcritical);
        assert!((folds[1].tau - 0.9166).abs() < 1e-3);
    }

    #[test]
    fn folds_region_y_and_a() {
        let folds = find_folds(&mp(1.5, 0.2, 0.5), &tol()).unwrap();
        assert_eq!(folds.len(), 4);
        assert_eq!(folds.iter().filter(|f| f.side == FoldSide::Upper).count(), 2);
        assert!(find_folds(&mp(1.5, 0.6, 2.0), &tol()).unwrap().is_empty());
        assert!(find_folds(&mp(1.5, 1.5, 0.5), &tol()).unwrap().is_empty());
    }

    #[test]
    fn fold_levels_are_attained() {
        for p in [mp(2.0, 0.5, 0.5), mp(1.5, 0.2, 0.5), mp(1.5, 0.1, 2.0), mp(1.3, 0.3, 0.3)] {
            for f in find_folds(&p, &tol()).unwrap() {
                let v = f_delta(p.delta, f.tau).unwrap();
                assert!((v - f.level).abs() < 1e-10, "{v} vs {}", f.level);
                assert!(eval_g(&p, f.tau, f.s_star()).unwrap().value.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn unit_shape_has_fold_at_one() {
        let folds = find_folds(&mp(2.0, 0.1, 1.0), &tol()).unwrap();
        assert_eq!(folds.len(), 2);
        assert_eq!(folds[1].tau, 1.0);
        assert_eq!(folds[1].side, FoldSide::Lower);
        assert_eq!(folds[1].criticality, Criticality::Subcritical);
    }

    #[test]
    fn trace_rejects_tiny_grid() {
        let r = trace_diagram(&mp(2.0, 0.5, 0.5), &TraceOptions::with_n_tau(50), &tol());
        assert!(matches!(r, Err(Error::DegenerateGrid { .. })));
    }

    #[test]
    fn trace_region_z() {
        let d = trace_diagram(&mp(2.0, 0.5, 0.5), &TraceOptions::default(), &tol()).unwrap();
        assert_eq!(d.curves.len(), 1);
        let c = &d.curves[0];
        assert!(c.closed);
        assert_eq!(c.winding, 1);
        assert_eq!(c.folds.len(), 2);
        for &(t, s) in &c.points {
            assert!(eval_g(&d.params, t, s).unwrap().value.abs() < 1e-10);
        }
    }

    #[test]
    fn trace_unforced_and_k_zero() {
        let d = trace_diagram(&mp(2.0, 0.0, 0.5), &TraceOptions::default(), &tol()).unwrap();
        assert_eq!(d.curves.len(), 1);
        assert!(d.curves[0].points.iter().all(|p| p.0 == 1.0));
        let m = max_value(1.5).unwrap();
        let d = trace_diagram(&mp(1.5, 0.5 * m, 0.0), &TraceOptions::default(), &tol()).unwrap();
        assert_eq!(d.topology(), Region::TwoCircles.expected_topology().unwrap());
        for c in &d.curves {
            let t = c.points[0].0;
            assert!((f_delta(1.5, t).unwrap() - 0.5 * m).abs() < 1e-10);
        }
    }

    #[test]
    fn csv_layout() {
        let d = trace_diagram(&mp(2.0, 0.5, 0.5), &TraceOptions::with_n_tau(200), &tol()).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("curve_id,tau,s,is_fold,criticality\n"));
        assert!(text.ends_with('\n'));
        assert_eq!(text.lines().filter(|l| l.contains(",1,")).count(), 2);
        assert!(text.contains("supercritical") && text.contains("subcritical"));
    }

    #[test]
    fn atlas_is_row_major_and_labels_cells() {
        let tol = Tolerances::default();
        let cells = region_atlas(0.5, &[1.5, 2.0], &[0.2, 3.0], &tol).unwrap();
        let tags: Vec<&str> = cells.iter().map(|c| c.region.tag()).collect();
        assert_eq!(tags, ["Y", "W", "Z", "Z"]);
        let mut buf = Vec::new();
        write_atlas_csv(&cells, 0.5, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 5);
    }
}
