//! Command-line and config-file parsing.
//!
//! A config file holds flat `key = value` lines with `#` comments. Each entry
//! becomes the flag `--key value` placed ahead of the command-line flags of
//! the chosen command, so flags given on the command line win and unknown
//! keys are rejected exactly like unknown flags.

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use hetlock::ModelParams;

/// A usage problem: bad flag, bad value, or conflicting sources. Exit status 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

fn parse_delta(s: &str) -> Result<f64, String> {
    let d: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if !(d > 1.0) || !d.is_finite() {
        return Err(format!("delta must be > 1, got {d}"));
    }
    Ok(d)
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if !(x > 0.0) || !x.is_finite() {
        return Err(format!("must be > 0, got {x}"));
    }
    Ok(x)
}

fn parse_nonneg(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if !(x >= 0.0) || !x.is_finite() {
        return Err(format!("must be >= 0, got {x}"));
    }
    Ok(x)
}

fn parse_unit(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if !(x > 0.0 && x <= 1.0) {
        return Err(format!("must lie in (0, 1], got {x}"));
    }
    Ok(x)
}

#[derive(Parser, Debug, Clone, PartialEq)]
#[command(name = "hetlock", version, about = "Bifurcations and frequency locking of a periodically forced heteroclinic cycle")]
#[command(args_override_self = true)]
pub struct RunConfig {
    /// Flat `key = value` file; command-line flags override its entries.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Directory that relative output paths are resolved against.
    #[arg(long, global = true, env = "HETLOCK_OUT_DIR", value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

/// Where `delta` (and possibly `K`) come from: directly, or from `alpha, beta`.
#[derive(Args, Debug, Clone, PartialEq)]
pub struct DeltaArgs {
    #[arg(long, value_parser = parse_delta, conflicts_with_all = ["alpha", "beta"])]
    pub delta: Option<f64>,
    #[arg(long, requires = "beta")]
    pub alpha: Option<f64>,
    #[arg(long, requires = "alpha", allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Time scale K; derived from alpha and beta when those are given.
    #[arg(long = "K", value_parser = parse_positive, conflicts_with_all = ["alpha", "beta"])]
    pub time_scale: Option<f64>,
}

impl DeltaArgs {
    pub fn delta(&self) -> Result<f64, UsageError> {
        match (self.delta, self.alpha, self.beta) {
            (Some(d), None, None) => Ok(d),
            (None, Some(a), Some(b)) => {
                let mp = ModelParams::new(a, b, 0.0, 1.0).map_err(|e| usage(e.to_string()))?;
                let d = mp.delta();
                if !(d > 1.0) {
                    return Err(usage(format!("alpha={a}, beta={b} give delta={d}; delta > 1 required")));
                }
                Ok(d)
            }
            _ => Err(usage("give either --delta or both --alpha and --beta")),
        }
    }

    pub fn time_scale(&self) -> Result<f64, UsageError> {
        match (self.time_scale, self.alpha, self.beta) {
            (Some(k), _, _) => Ok(k),
            (None, Some(a), Some(b)) => {
                let mp = ModelParams::new(a, b, 0.0, 1.0).map_err(|e| usage(e.to_string()))?;
                Ok(mp.time_scale())
            }
            _ => Err(usage("this command needs --K (or --alpha and --beta)")),
        }
    }
}

/// Parameters of the circle-map family.
#[derive(Args, Debug, Clone, PartialEq)]
pub struct MapArgs {
    #[command(flatten)]
    pub source: DeltaArgs,
    #[arg(long, value_parser = parse_nonneg)]
    pub gamma: f64,
    #[arg(long, value_parser = parse_nonneg)]
    pub k: f64,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct GridArgs {
    /// Points of the log-spaced tau grid.
    #[arg(long, default_value_t = 4096)]
    pub n_tau: usize,
    #[arg(long, default_value_t = 1e-9, value_parser = parse_unit)]
    pub tau_min: f64,
    /// Samples per circle for k = 0 diagrams.
    #[arg(long, default_value_t = 256)]
    pub n_circle: usize,
}

/// Parameters of the forced vector field.
#[derive(Args, Debug, Clone, PartialEq)]
pub struct OdeArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: f64,
    #[arg(long, value_parser = parse_nonneg)]
    pub gamma: f64,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct OutArgs {
    /// CSV output path; standard output when absent.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, PartialEq)]
pub enum Command {
    /// Region of (delta, gamma, k) and the transition thresholds.
    Classify {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Trace the zero set of g on the cylinder.
    Trace {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, value_name = "FILE")]
        svg: Option<PathBuf>,
    },
    /// Fold points of the diagram.
    Folds {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Stability of the branches leaving each fold, or of the fixed points at one tau.
    Stability {
        #[command(flatten)]
        map: MapArgs,
        /// Relative distance from the fold where branches are sampled.
        #[arg(long, default_value_t = 1e-3, value_parser = parse_unit)]
        window: f64,
        /// Classify the fixed points at this tau instead of the fold branches.
        #[arg(long, value_parser = parse_unit)]
        tau: Option<f64>,
        #[arg(long, default_value_t = 2000)]
        orbit_iterations: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Neimark-Sacker locus below tau_m.
    Hopf {
        #[command(flatten)]
        source: DeltaArgs,
        #[arg(long, value_parser = parse_positive)]
        k: f64,
        #[arg(long, default_value_t = 20)]
        n_tau: usize,
        /// Fraction of tau_m covered below tau_m.
        #[arg(long, default_value_t = 0.1, value_parser = parse_unit)]
        span: f64,
        /// Skip the long-iteration criticality estimate.
        #[arg(long)]
        no_side: bool,
        #[arg(long, default_value_t = 100_000)]
        side_iterations: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Bogdanov-Takens points.
    Bt {
        #[command(flatten)]
        source: DeltaArgs,
        #[arg(long, value_parser = parse_positive)]
        k: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Stable and unstable manifolds of a saddle of G_tau.
    Manifolds {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, value_parser = parse_unit)]
        tau: f64,
        /// Pick the saddle nearest this s; the first saddle by default.
        #[arg(long)]
        s: Option<f64>,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, value_name = "FILE")]
        svg: Option<PathBuf>,
    },
    /// Frequency-locking windows in omega.
    Lock {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 3)]
        n_max: u32,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Where invariant tori and horseshoes are expected.
    Report {
        #[command(flatten)]
        source: DeltaArgs,
        #[arg(long, value_parser = parse_positive)]
        k: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Integrate the forced vector field.
    Simulate {
        #[command(flatten)]
        ode: OdeArgs,
        #[arg(long, value_parser = parse_positive)]
        omega: f64,
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        y0: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        z0: Option<f64>,
        #[arg(long, default_value_t = 100.0, value_parser = parse_positive)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-10, value_parser = parse_positive)]
        tol: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Newton search for 1:n locked orbits, at one omega or over a geometric scan.
    LockedOrbit {
        #[command(flatten)]
        ode: OdeArgs,
        #[arg(long, value_parser = parse_positive, conflicts_with_all = ["omega_min", "omega_max"])]
        omega: Option<f64>,
        #[arg(long, value_parser = parse_positive, requires = "omega_max")]
        omega_min: Option<f64>,
        #[arg(long, value_parser = parse_positive, requires = "omega_min")]
        omega_max: Option<f64>,
        #[arg(long, default_value_t = 40)]
        omega_steps: usize,
        #[arg(long, default_value_t = 1)]
        n: u32,
        /// Periods of relaxation before Newton starts.
        #[arg(long, default_value_t = 300)]
        relax: usize,
        /// Seed (e, e, sqrt(1 - 2 e^2)) on the sphere.
        #[arg(long, default_value_t = 0.05, value_parser = parse_positive)]
        seed_eps: f64,
        #[arg(long, default_value_t = 1e-12, value_parser = parse_positive)]
        tol: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Region atlas over a (delta, gamma) grid at fixed k.
    Sweep {
        #[arg(long, value_parser = parse_nonneg)]
        k: f64,
        #[arg(long, default_value_t = 1.05, value_parser = parse_delta)]
        delta_min: f64,
        #[arg(long, default_value_t = 2.5, value_parser = parse_delta)]
        delta_max: f64,
        #[arg(long, default_value_t = 60)]
        n_delta: usize,
        #[arg(long, default_value_t = 0.01, value_parser = parse_positive)]
        gamma_min: f64,
        #[arg(long, default_value_t = 2.0, value_parser = parse_positive)]
        gamma_max: f64,
        #[arg(long, default_value_t = 60)]
        n_gamma: usize,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, value_name = "FILE")]
        svg: Option<PathBuf>,
    },
}

const GLOBAL_VALUED: [&str; 2] = ["--config", "--out-dir"];

/// Turn config-file text into `--key value` tokens.
pub fn file_tokens(text: &str) -> Result<Vec<String>, UsageError> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(usage(format!("config line {}: expected `key = value`, got `{line}`", no + 1)));
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || key.starts_with('-') || key == "config" {
            return Err(usage(format!("config line {}: invalid key `{key}`", no + 1)));
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            "true" => out.push(flag),
            "false" => {}
            _ => {
                out.push(flag);
                out.push(value.to_string());
            }
        }
    }
    Ok(out)
}

/// Position of the command name in `argv`, skipping global options.
fn command_position(argv: &[String]) -> Option<usize> {
    let mut i = 1;
    while i < argv.len() {
        let a = &argv[i];
        if GLOBAL_VALUED.contains(&a.as_str()) {
            i += 2;
        } else if a.starts_with('-') {
            i += 1;
        } else {
            return Some(i);
        }
    }
    None
}

/// Path given by `--config` on the command line, if any.
pub fn config_path(argv: &[String]) -> Option<PathBuf> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Build the run configuration from `argv` (program name first) and the text
/// of the config file, if one was given.
pub fn parse_config(argv: &[String], file_text: Option<&str>) -> Result<RunConfig, clap::Error> {
    let mut args: Vec<String> = argv.to_vec();
    if let Some(text) = file_text {
        let tokens = file_tokens(text).map_err(|e| clap::Error::raw(clap::error::ErrorKind::InvalidValue, format!("{e}\n")))?;
        let at = command_position(&args).map_or(args.len(), |i| i + 1);
        args.splice(at..at, tokens);
    }
    RunConfig::try_parse_from(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<String> {
        std::iter::once("hetlock").chain(s.split_whitespace()).map(String::from).collect()
    }

    #[test]
    fn comments_and_blank_lines() {
        let t = file_tokens("# header\n\ndelta = 2   # inline\nno_side = true\nquiet = false\n").unwrap();
        assert_eq!(t, ["--delta", "2", "--no-side"]);
        assert!(file_tokens("delta 2").is_err());
    }

    #[test]
    fn file_entries_go_after_the_command() {
        let cfg = parse_config(&argv("--out-dir o trace --gamma 0.5"), Some("delta = 2\nk = 0.5\ngamma = 0.1\n")).unwrap();
        let Command::Trace { map, .. } = cfg.command else {
            panic!("{cfg:?}")
        };
        assert_eq!((map.source.delta, map.gamma, map.k), (Some(2.0), 0.5, 0.5));
    }
}
