//! Phase locking of a periodically forced heteroclinic network.
//!
//! The crate works on two levels. The reduced model is a map on the cylinder
//! `(y, s)` built around the circle-map family
//! `g(tau, s) = tau^(d^2) + gamma tau^(d^2 - d) (1 + k sin s) - tau`, whose zero
//! set (the bifurcation diagram) holds the fixed points of the shifted map.
//! The full model is the forced vector field on R^3, simulated directly.

pub mod config;
pub mod cylinder;
pub mod diagram;
pub mod error;
pub mod linalg;
pub mod locking;
pub mod odesim;
pub mod params;
pub mod roots;
pub mod stability;

pub use config::Tolerances;
pub use error::{Error, Result};
pub use params::{CylinderPoint, MapParams, ModelParams, GOLDEN};
