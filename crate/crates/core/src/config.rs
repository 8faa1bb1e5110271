/// Numerical tolerances shared by every analysis routine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Absolute tolerance for bracketed root solves in tau.
    pub root: f64,
    /// Distance from the unit circle below which an eigenvalue is treated as neutral.
    pub eigen: f64,
    /// Step for central finite differences.
    pub fd_step: f64,
    /// Residual |g| below which a point is accepted as lying on the diagram.
    pub residual: f64,
    /// Relative width around a region threshold that yields a boundary label.
    pub boundary: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            root: 1e-12,
            eigen: 1e-10,
            fd_step: 1e-6,
            residual: 1e-8,
            boundary: 1e-9,
        }
    }
}

/// Smallest tau accepted by the power evaluations.
pub const TAU_FLOOR: f64 = 1e-12;
