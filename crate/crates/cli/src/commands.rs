//! Dispatch of each command to the analysis library.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

use hetlock::cylinder::FoldSide;
use hetlock::diagram::{
    classify_region, find_folds, fmt_f64, region_atlas, trace_diagram, transition_thresholds, write_atlas_csv,
    TraceOptions,
};
use hetlock::locking::{lock_windows, torus_and_chaos_report, write_windows_csv};
use hetlock::odesim::{
    find_locked_orbit, integrate, omega_scan, write_orbit_csv, write_scan_csv, LockedOrbitOptions, State3,
};
use hetlock::stability::{
    find_bt_points, fixed_points_at, fold_branch_stability, hopf_tau_grid, orbit_verdict, solve_hopf_locus,
    trace_invariant_manifolds, write_bt_csv, write_hopf_csv, write_manifold_csv, FixedClass, HopfOptions,
    ManifoldOptions, OrbitCheck, OrbitVerdict,
};
use hetlock::{Error as CoreError, MapParams, ModelParams, Tolerances, GOLDEN};

use crate::config::{Command, DeltaArgs, GridArgs, MapArgs, OdeArgs, OutArgs, RunConfig, UsageError};
use crate::svg;

/// How a successful run went: exit status 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Complete,
    /// Results were written but some entries failed.
    Degraded,
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Parameter errors from the library are usage errors at this level.
fn as_usage(e: CoreError) -> anyhow::Error {
    match e {
        CoreError::InvalidParams(_) | CoreError::Domain { .. } => usage(e.to_string()),
        other => other.into(),
    }
}

fn resolve(out_dir: Option<&Path>, path: &Path) -> PathBuf {
    match out_dir {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

struct Sink<'a> {
    out_dir: Option<&'a Path>,
}

impl Sink<'_> {
    fn path(&self, path: &Path) -> Result<PathBuf> {
        let p = resolve(self.out_dir, path);
        if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        Ok(p)
    }

    /// Write `bytes` to the `--out` file, or to standard output.
    fn emit(&self, out: &OutArgs, bytes: &[u8]) -> Result<()> {
        match &out.out {
            Some(path) => {
                let p = self.path(path)?;
                fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))
            }
            None => match io::stdout().write_all(bytes) {
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
                r => r.context("writing standard output"),
            },
        }
    }

    fn svg(&self, path: &Option<PathBuf>, content: impl FnOnce() -> String) -> Result<()> {
        if let Some(path) = path {
            svg::write_svg(&self.path(path)?, &content())?;
        }
        Ok(())
    }
}

fn csv(write: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn map_params(map: &MapArgs, need_time_scale: bool) -> Result<MapParams> {
    let delta = map.source.delta()?;
    let time_scale = if need_time_scale {
        map.source.time_scale()?
    } else {
        map.source.time_scale().unwrap_or(1.0)
    };
    MapParams::new(delta, map.gamma, map.k, time_scale).map_err(as_usage)
}

fn model_params(ode: &OdeArgs, omega: f64) -> Result<ModelParams> {
    ModelParams::new(ode.alpha, ode.beta, ode.gamma, omega).map_err(as_usage)
}

fn trace_options(grid: &GridArgs) -> Result<TraceOptions> {
    if grid.n_tau < 2 || grid.n_circle < 3 {
        return Err(usage("--n-tau must be >= 2 and --n-circle >= 3"));
    }
    Ok(TraceOptions {
        n_tau: grid.n_tau,
        tau_min: grid.tau_min,
        n_circle: grid.n_circle,
    })
}

fn delta_only(source: &DeltaArgs) -> Result<(f64, Option<f64>)> {
    Ok((source.delta()?, source.time_scale().ok()))
}

fn side_str(side: FoldSide) -> &'static str {
    match side {
        FoldSide::Upper => "upper",
        FoldSide::Lower => "lower",
    }
}

fn verdict_str(v: OrbitVerdict) -> &'static str {
    match v {
        OrbitVerdict::ForwardConverges => "forward",
        OrbitVerdict::BackwardConverges => "backward",
        OrbitVerdict::Neither => "neither",
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Execute the configured command.
pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    let tol = Tolerances::default();
    let sink = Sink {
        out_dir: cfg.out_dir.as_deref(),
    };
    match &cfg.command {
        Command::Classify { map, out } => {
            let delta = map.source.delta()?;
            let label = classify_region(delta, map.gamma, map.k, &tol).map_err(as_usage)?;
            let (gp, gm) = match transition_thresholds(delta, map.k) {
                Ok(th) => (fmt_f64(th.gamma_plus), th.gamma_minus.map(fmt_f64).unwrap_or_default()),
                Err(_) => (String::new(), String::new()),
            };
            let body = format!(
                "delta,gamma,k,region,gamma_plus,gamma_minus\n{},{},{},{},{gp},{gm}\n",
                fmt_f64(delta),
                fmt_f64(map.gamma),
                fmt_f64(map.k),
                label.region.tag()
            );
            sink.emit(out, body.as_bytes())?;
        }
        Command::Trace { map, grid, out, svg: svg_path } => {
            let mp = map_params(map, false)?;
            let d = trace_diagram(&mp, &trace_options(grid)?, &tol).map_err(|e| match e {
                CoreError::DegenerateGrid { .. } => anyhow!("{e}; try a larger --n-tau"),
                other => as_usage(other),
            })?;
            sink.emit(out, &csv(|b| d.write_csv(b))?)?;
            sink.svg(svg_path, || svg::diagram_svg(&d))?;
        }
        Command::Folds { map, out } => {
            let mp = map_params(map, false)?;
            let folds = find_folds(&mp, &tol).map_err(as_usage)?;
            let mut body = String::from("tau,s,side,criticality,level\n");
            for f in &folds {
                body.push_str(&format!(
                    "{},{},{},{},{}\n",
                    fmt_f64(f.tau),
                    fmt_f64(f.s_star()),
                    side_str(f.side),
                    f.criticality.as_str(),
                    fmt_f64(f.level)
                ));
            }
            sink.emit(out, body.as_bytes())?;
        }
        Command::Stability {
            map,
            window,
            tau,
            orbit_iterations,
            out,
        } => {
            let mp = map_params(map, true)?;
            let check = OrbitCheck {
                iterations: *orbit_iterations,
                ..OrbitCheck::default()
            };
            let mut degraded = false;
            let body = if let Some(tau) = tau {
                let mut body = String::from("tau,s,class,mu1_re,mu1_im,mu2_re,mu2_im,det,trace,orbit\n");
                for fp in fixed_points_at(&mp, *tau, &tol).map_err(as_usage)? {
                    let [a, b] = fp.eigenvalues;
                    body.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{},{}\n",
                        fmt_f64(fp.tau),
                        fmt_f64(fp.s),
                        fp.class,
                        fmt_f64(a.re),
                        fmt_f64(a.im),
                        fmt_f64(b.re),
                        fmt_f64(b.im),
                        fmt_f64(fp.det),
                        fmt_f64(fp.trace),
                        verdict_str(orbit_verdict(&mp, &fp, &check))
                    ));
                }
                body
            } else {
                let mut body = String::from(
                    "fold_tau,fold_s,criticality,window,tau,s_larger,class_larger,orbit_larger,s_smaller,class_smaller,orbit_smaller\n",
                );
                for f in find_folds(&mp, &tol).map_err(as_usage)? {
                    let st = match fold_branch_stability(&mp, &f, *window, &tol) {
                        Ok(st) => st,
                        Err(e) => {
                            eprintln!("fold at tau={}: {e}", f.tau);
                            degraded = true;
                            continue;
                        }
                    };
                    let verdict = |s: f64| -> Result<&'static str> {
                        let fp = hetlock::stability::classify_fixed_point(&mp, st.tau, s, &tol)?;
                        Ok(verdict_str(orbit_verdict(&mp, &fp, &check)))
                    };
                    body.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{},{},{}\n",
                        fmt_f64(f.tau),
                        fmt_f64(f.s_star()),
                        f.criticality.as_str(),
                        fmt_f64(*window),
                        fmt_f64(st.tau),
                        fmt_f64(st.s_larger),
                        st.branch_larger_s,
                        verdict(st.s_larger)?,
                        fmt_f64(st.s_smaller),
                        st.branch_smaller_s,
                        verdict(st.s_smaller)?
                    ));
                }
                body
            };
            sink.emit(out, body.as_bytes())?;
            if degraded {
                return Ok(Outcome::Degraded);
            }
        }
        Command::Hopf {
            source,
            k,
            n_tau,
            span,
            no_side,
            side_iterations,
            out,
        } => {
            let delta = source.delta()?;
            let time_scale = source.time_scale()?;
            if !(delta < GOLDEN) {
                return Err(usage(format!("the Hopf locus needs delta < golden, got {delta}")));
            }
            let grid = hopf_tau_grid(delta, *n_tau, *span).map_err(as_usage)?;
            let opts = HopfOptions {
                estimate_side: !no_side,
                side_iterations: *side_iterations,
                ..HopfOptions::default()
            };
            let entries = solve_hopf_locus(delta, *k, time_scale, &grid, &opts, &tol).map_err(as_usage)?;
            sink.emit(out, &csv(|b| write_hopf_csv(delta, *k, &entries, b))?)?;
            let failed = entries.iter().filter(|e| e.result.is_err()).count();
            if failed > 0 {
                eprintln!("{failed} of {} Hopf entries did not converge", entries.len());
                return Ok(Outcome::Degraded);
            }
        }
        Command::Bt { source, k, out } => {
            let (delta, _) = delta_only(source)?;
            let bts = find_bt_points(delta, *k).map_err(as_usage)?;
            sink.emit(out, &csv(|b| write_bt_csv(&bts, b))?)?;
        }
        Command::Manifolds {
            map,
            tau,
            s,
            steps,
            out,
            svg: svg_path,
        } => {
            let mp = map_params(map, true)?;
            let saddles: Vec<_> = fixed_points_at(&mp, *tau, &tol)
                .map_err(as_usage)?
                .into_iter()
                .filter(|fp| fp.class == FixedClass::Saddle)
                .collect();
            let saddle = match s {
                Some(s0) => saddles.iter().min_by(|a, b| {
                    let d = |x: f64| hetlock::params::circular_diff(*s0, x).abs();
                    d(a.s).total_cmp(&d(b.s))
                }),
                None => saddles.first(),
            }
            .ok_or_else(|| anyhow!("no saddle fixed point of G_tau at tau={tau}"))?;
            let traces = trace_invariant_manifolds(&mp, *tau, saddle, *steps, &ManifoldOptions::default())?;
            for t in &traces {
                eprintln!(
                    "{}: {} points, min crossing gap {:e}, {} crossings, {:?}",
                    t.branch.as_str(),
                    t.points.len(),
                    t.min_crossing_gap,
                    t.crossings,
                    t.stop
                );
            }
            sink.emit(out, &csv(|b| write_manifold_csv(&traces, b))?)?;
            sink.svg(svg_path, || svg::manifolds_svg(&traces, *tau))?;
        }
        Command::Lock { map, n_max, grid, out } => {
            if *n_max == 0 {
                return Err(usage("--n-max must be >= 1"));
            }
            let mp = map_params(map, true)?;
            let windows = lock_windows(&mp, *n_max, &trace_options(grid)?, &tol).map_err(as_usage)?;
            sink.emit(out, &csv(|b| write_windows_csv(&windows, b))?)?;
        }
        Command::Report { source, k, out } => {
            let delta = source.delta()?;
            let time_scale = source.time_scale()?;
            let report = torus_and_chaos_report(delta, *k, time_scale, &tol).map_err(as_usage)?;
            sink.emit(out, format!("{report}").as_bytes())?;
        }
        Command::Simulate {
            ode,
            omega,
            x0,
            y0,
            z0,
            t_end,
            tol: itol,
            samples,
            out,
        } => {
            let mp = model_params(ode, *omega)?;
            if !(1e-12..=1e-6).contains(itol) {
                return Err(usage(format!("--tol must lie in [1e-12, 1e-6], got {itol}")));
            }
            let seed = State3::sphere_seed(0.05);
            let st = State3::new(x0.unwrap_or(seed.x), y0.unwrap_or(seed.y), z0.unwrap_or(seed.z), 0.0);
            let tr = integrate(&mp, &st, *t_end, *itol, (*samples).max(1))?;
            sink.emit(out, &csv(|b| tr.write_csv(b))?)?;
        }
        Command::LockedOrbit {
            ode,
            omega,
            omega_min,
            omega_max,
            omega_steps,
            n,
            relax,
            seed_eps,
            tol: itol,
            out,
        } => {
            if *n == 0 {
                return Err(usage("--n must be >= 1"));
            }
            if !(*seed_eps < std::f64::consts::FRAC_1_SQRT_2) {
                return Err(usage("--seed-eps must be below 1/sqrt(2)"));
            }
            let opts = LockedOrbitOptions {
                tol: *itol,
                relax: *relax,
                ..LockedOrbitOptions::default()
            };
            let seed = State3::sphere_seed(*seed_eps);
            match (omega, omega_min, omega_max) {
                (Some(w), None, None) => {
                    let mp = model_params(ode, *w)?;
                    let orbit = find_locked_orbit(&mp, &seed, *n, &opts)?;
                    sink.emit(out, &csv(|b| write_orbit_csv(&orbit, b))?)?;
                }
                (None, Some(lo), Some(hi)) => {
                    if !(lo <= hi) || *omega_steps == 0 {
                        return Err(usage("need --omega-min <= --omega-max and --omega-steps >= 1"));
                    }
                    let base = model_params(ode, *lo)?;
                    let omegas: Vec<f64> = if *omega_steps == 1 {
                        vec![*lo]
                    } else {
                        let r = (hi / lo).powf(1.0 / (*omega_steps - 1) as f64);
                        (0..*omega_steps).map(|i| lo * r.powi(i as i32)).collect()
                    };
                    let entries = omega_scan(&base, &omegas, &seed, *n, &opts).map_err(as_usage)?;
                    sink.emit(out, &csv(|b| write_scan_csv(&entries, b))?)?;
                    if entries.iter().all(|e| e.result.is_err()) {
                        eprintln!("no locked orbit converged in the scan");
                        return Ok(Outcome::Degraded);
                    }
                }
                _ => bail!(UsageError("give --omega, or --omega-min and --omega-max".into())),
            }
        }
        Command::Sweep {
            k,
            delta_min,
            delta_max,
            n_delta,
            gamma_min,
            gamma_max,
            n_gamma,
            out,
            svg: svg_path,
        } => {
            if !(delta_min <= delta_max && gamma_min <= gamma_max) || *n_delta == 0 || *n_gamma == 0 {
                return Err(usage("need min <= max and at least one grid point on each axis"));
            }
            let deltas = linspace(*delta_min, *delta_max, *n_delta);
            let gammas = linspace(*gamma_min, *gamma_max, *n_gamma);
            let cells = region_atlas(*k, &deltas, &gammas, &tol).map_err(as_usage)?;
            sink.emit(out, &csv(|b| write_atlas_csv(&cells, *k, b))?)?;
            sink.svg(svg_path, || svg::atlas_svg(&cells, *k, &deltas, &gammas))?;
        }
    }
    Ok(Outcome::Complete)
}
