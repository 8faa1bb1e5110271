//! Frequency locking read off the diagram.
//!
//! A fixed point of `G_tau` with `tau < 1` is a 1:1 locked solution for the
//! forcing frequency `omega = -K pi / ln tau`, and a 1:n one for `n` times
//! that frequency. The `tau`-extent of each diagram curve therefore maps to
//! an interval of locking frequencies.

use std::fmt;
use std::io::{self, Write};

use crate::config::Tolerances;
use crate::diagram::{fmt_f64, trace_diagram, transition_thresholds, Diagram, Region, TraceOptions};
use crate::error::{domain, Result};
use crate::params::{MapParams, GOLDEN};
use crate::stability::{find_bt_points, fold_branch_stability, solve_hopf_locus, BTPoint, FixedClass, HopfOptions};

/// Forcing frequency at which a fixed point at `tau` is a 1:n locked solution.
pub fn tau_to_omega(time_scale: f64, tau: f64, n: u32) -> Result<f64> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(domain("tau_to_omega", format!("tau={tau} must lie in (0, 1)")));
    }
    if !(time_scale > 0.0) || n == 0 {
        return Err(domain("tau_to_omega", format!("need K > 0 and n >= 1, got K={time_scale}, n={n}")));
    }
    Ok(-(n as f64) * time_scale * std::f64::consts::PI / tau.ln())
}

/// Inverse of [`tau_to_omega`].
pub fn omega_to_tau(time_scale: f64, omega: f64, n: u32) -> Result<f64> {
    if !(omega > 0.0 && omega.is_finite()) || !(time_scale > 0.0) || n == 0 {
        return Err(domain("omega_to_tau", format!("omega={omega}, K={time_scale}, n={n}")));
    }
    Ok((-(n as f64) * time_scale * std::f64::consts::PI / omega).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WindowSource {
    /// Curve bounded by folds on both ends, or by a fold and `tau = 1`.
    FoldInterval,
    /// Curve spanning all of `(0, 1)`.
    FullAxis,
    /// A `tau = const` circle (`k = 0`): a single frequency.
    IsolatedCircle,
}

impl WindowSource {
    pub fn as_str(self) -> &'static str {
        match self {
            WindowSource::FoldInterval => "fold_interval",
            WindowSource::FullAxis => "full_axis",
            WindowSource::IsolatedCircle => "isolated_circle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StabilityNote {
    OneAttractingNearFold,
    Unknown,
}

impl StabilityNote {
    pub fn as_str(self) -> &'static str {
        match self {
            StabilityNote::OneAttractingNearFold => "one_attracting_near_fold",
            StabilityNote::Unknown => "unknown",
        }
    }
}

/// Frequencies with 1:n locked solutions. `omega_hi` may be `+inf`, and
/// `omega_lo` is 0 for curves reaching down to `tau -> 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaWindow {
    pub n: u32,
    pub omega_lo: f64,
    pub omega_hi: f64,
    pub source: WindowSource,
    pub stability_note: StabilityNote,
}

impl OmegaWindow {
    pub fn contains(&self, omega: f64) -> bool {
        omega >= self.omega_lo && omega <= self.omega_hi
    }
}

fn omega_or_limit(time_scale: f64, tau: f64, n: u32) -> Result<f64> {
    if tau <= 0.0 {
        Ok(0.0)
    } else if tau >= 1.0 {
        Ok(f64::INFINITY)
    } else {
        tau_to_omega(time_scale, tau, n)
    }
}

/// Locking windows from an already traced diagram.
pub fn windows_from_diagram(diagram: &Diagram, n_max: u32, tol: &Tolerances) -> Result<Vec<OmegaWindow>> {
    let mp = &diagram.params;
    let mut base: Vec<(f64, f64, WindowSource, StabilityNote)> = Vec::new();
    if mp.gamma == 0.0 {
        return Ok(Vec::new());
    }
    for c in &diagram.curves {
        let fold_taus: Vec<f64> = c.folds.iter().map(|&i| diagram.folds[i].tau).collect();
        let (lo, hi, source) = if c.folds.is_empty() && c.closed {
            let t = c.points[0].0;
            (t, t, WindowSource::IsolatedCircle)
        } else {
            let lo = if c.touches_tau0 {
                0.0
            } else {
                fold_taus.iter().copied().fold(f64::INFINITY, f64::min)
            };
            let hi = if c.touches_tau1 && !c.closed {
                1.0
            } else {
                fold_taus.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            };
            let source = if lo == 0.0 && hi == 1.0 {
                WindowSource::FullAxis
            } else {
                WindowSource::FoldInterval
            };
            (lo, hi, source)
        };
        let mut note = StabilityNote::Unknown;
        for &i in &c.folds {
            if let Ok(st) = fold_branch_stability(mp, &diagram.folds[i], 1e-3, tol) {
                let attracting = [st.branch_larger_s, st.branch_smaller_s]
                    .iter()
                    .filter(|&&c| c == FixedClass::Attracting)
                    .count();
                if attracting == 1 {
                    note = StabilityNote::OneAttractingNearFold;
                }
            }
        }
        // curves with identical extents (the two open curves of a full-axis
        // region) give one window
        if let Some(existing) = base.iter_mut().find(|b| b.0 == lo && b.1 == hi) {
            if note == StabilityNote::OneAttractingNearFold {
                existing.3 = note;
            }
            continue;
        }
        base.push((lo, hi, source, note));
    }
    base.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::with_capacity(base.len() * n_max as usize);
    for n in 1..=n_max {
        for &(lo, hi, source, stability_note) in &base {
            out.push(OmegaWindow {
                n,
                omega_lo: omega_or_limit(mp.time_scale, lo, n)?,
                omega_hi: omega_or_limit(mp.time_scale, hi, n)?,
                source,
                stability_note,
            });
        }
    }
    Ok(out)
}

/// Trace the diagram of `mp` and convert it into locking windows for `n = 1..=n_max`.
pub fn lock_windows(mp: &MapParams, n_max: u32, opts: &TraceOptions, tol: &Tolerances) -> Result<Vec<OmegaWindow>> {
    if n_max == 0 {
        return Err(domain("lock_windows", "n_max must be >= 1"));
    }
    let diagram = trace_diagram(mp, opts, tol)?;
    windows_from_diagram(&diagram, n_max, tol)
}

pub fn write_windows_csv<W: Write>(windows: &[OmegaWindow], mut out: W) -> io::Result<()> {
    writeln!(out, "n,omega_lo,omega_hi,source,stability_note")?;
    for w in windows {
        writeln!(
            out,
            "{},{},{},{},{}",
            w.n,
            fmt_f64(w.omega_lo),
            fmt_f64(w.omega_hi),
            w.source.as_str(),
            w.stability_note.as_str()
        )?;
    }
    Ok(())
}

/// A range of `gamma` where an invariant torus may be expected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusCandidate {
    pub threshold: f64,
    /// Region on whose side of the threshold the candidate lies.
    pub region: Region,
    /// `gamma` range covered by the computed Hopf locus, if any was found.
    pub hopf_gamma: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorusChaosReport {
    pub delta: f64,
    pub shape: f64,
    pub time_scale: f64,
    pub gamma_plus: f64,
    pub gamma_minus: Option<f64>,
    pub bt_points: Vec<BTPoint>,
    pub torus_candidates: Vec<TorusCandidate>,
}

/// Where the invariant torus and the horseshoe strip are expected for `(delta, k)`.
pub fn torus_and_chaos_report(delta: f64, shape: f64, time_scale: f64, tol: &Tolerances) -> Result<TorusChaosReport> {
    if !(delta > 1.0 && delta < GOLDEN) {
        return Err(domain("torus_and_chaos_report", format!("delta={delta} outside (1, golden)")));
    }
    let th = transition_thresholds(delta, shape)?;
    let bt_points = find_bt_points(delta, shape)?;
    let tm = bt_points[0].tau;
    let grid: Vec<f64> = (1..=40).map(|i| tm * (1.0 - 0.005 * i as f64)).collect();
    let hopf = solve_hopf_locus(
        delta,
        shape,
        time_scale,
        &grid,
        &HopfOptions {
            estimate_side: false,
            ..Default::default()
        },
        tol,
    )?;
    let hopf_range = |side| {
        let gammas: Vec<f64> = hopf
            .iter()
            .filter(|e| e.side_of_fold == side)
            .filter_map(|e| e.result.as_ref().ok().map(|h| h.gamma))
            .collect();
        (!gammas.is_empty()).then(|| {
            (
                gammas.iter().copied().fold(f64::INFINITY, f64::min),
                gammas.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            )
        })
    };
    use crate::cylinder::FoldSide;
    let mut torus_candidates = Vec::new();
    if shape > 1.0 {
        torus_candidates.push(TorusCandidate {
            threshold: th.gamma_plus,
            region: Region::B,
            hopf_gamma: hopf_range(FoldSide::Upper),
        });
    } else if shape < 1.0 {
        let gm = th.gamma_minus.expect("k < 1");
        torus_candidates.push(TorusCandidate {
            threshold: th.gamma_plus,
            region: Region::Y,
            hopf_gamma: hopf_range(FoldSide::Upper),
        });
        torus_candidates.push(TorusCandidate {
            threshold: th.gamma_plus,
            region: Region::X,
            hopf_gamma: None,
        });
        torus_candidates.push(TorusCandidate {
            threshold: gm,
            region: Region::X,
            hopf_gamma: hopf_range(FoldSide::Lower),
        });
    } else {
        torus_candidates.push(TorusCandidate {
            threshold: th.gamma_plus,
            region: Region::UnitB,
            hopf_gamma: hopf_range(FoldSide::Upper),
        });
    }
    Ok(TorusChaosReport {
        delta,
        shape,
        time_scale,
        gamma_plus: th.gamma_plus,
        gamma_minus: th.gamma_minus,
        bt_points,
        torus_candidates,
    })
}

impl fmt::Display for TorusChaosReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "delta = {}, k = {}, K = {}", self.delta, self.shape, self.time_scale)?;
        writeln!(f, "gamma_plus = {:.10}", self.gamma_plus)?;
        if let Some(gm) = self.gamma_minus {
            writeln!(f, "gamma_minus = {gm:.10}")?;
        }
        for b in &self.bt_points {
            writeln!(
                f,
                "Bogdanov-Takens point: eps = {:+}, tau = {:.10}, s = {:.10}, gamma = {:.10}",
                b.eps(),
                b.tau,
                b.s_star,
                b.gamma
            )?;
        }
        for c in &self.torus_candidates {
            write!(
                f,
                "invariant torus candidate near gamma = {:.10} on the {} side",
                c.threshold, c.region
            )?;
            match c.hopf_gamma {
                Some((lo, hi)) => writeln!(f, " (Hopf locus found for gamma in [{lo:.10}, {hi:.10}])")?,
                None => writeln!(f, " (no Hopf point resolved by the solver)")?,
            }
        }
        writeln!(
            f,
            "horseshoe strip: between the homoclinic tangency surfaces emanating from each Bogdanov-Takens point; locate numerically with the manifold crossing indicator"
        )
    }
}
