//! Closed-form 2x2 linear algebra.

use num_complex::Complex64;

/// A 2x2 real matrix stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self([[a, b], [c, d]])
    }

    pub fn identity() -> Self {
        Self::new(1.0, 0.0, 0.0, 1.0)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn mul_vec(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    /// Solve `self * x = rhs`; `None` when the matrix is numerically singular.
    pub fn solve(&self, rhs: [f64; 2]) -> Option<[f64; 2]> {
        let det = self.det();
        let scale = self
            .0
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        if det.abs() <= 1e-14 * scale * scale {
            return None;
        }
        let [[a, b], [c, d]] = self.0;
        Some([(d * rhs[0] - b * rhs[1]) / det, (a * rhs[1] - c * rhs[0]) / det])
    }

    /// Eigenvalues from the characteristic polynomial `x^2 - tr x + det`.
    ///
    /// Real pairs come back ordered by ascending modulus; complex pairs with
    /// the positive imaginary part first.
    pub fn eigenvalues(&self) -> [Complex64; 2] {
        let tr = self.trace();
        let det = self.det();
        let disc = tr * tr / 4.0 - det;
        let half = tr / 2.0;
        if disc >= 0.0 {
            let r = disc.sqrt();
            // avoid cancellation in the smaller root
            let big = if half >= 0.0 { half + r } else { half - r };
            let small = if big != 0.0 { det / big } else { half - r };
            let (a, b) = if small.abs() <= big.abs() {
                (small, big)
            } else {
                (big, small)
            };
            [Complex64::new(a, 0.0), Complex64::new(b, 0.0)]
        } else {
            let im = (-disc).sqrt();
            [Complex64::new(half, im), Complex64::new(half, -im)]
        }
    }

    /// Unit eigenvector for a real eigenvalue.
    pub fn eigenvector(&self, lambda: f64) -> [f64; 2] {
        let [[a, b], [c, d]] = self.0;
        // pick the better-conditioned row of (A - lambda I)
        let r1 = [a - lambda, b];
        let r2 = [c, d - lambda];
        let n1 = r1[0].hypot(r1[1]);
        let n2 = r2[0].hypot(r2[1]);
        let v = if n1 >= n2 {
            if n1 == 0.0 {
                [1.0, 0.0]
            } else {
                [-r1[1], r1[0]]
            }
        } else {
            [-r2[1], r2[0]]
        };
        let n = v[0].hypot(v[1]);
        [v[0] / n, v[1] / n]
    }

    pub fn is_lower_triangular(&self) -> bool {
        self.0[0][1] == 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_eigen_pair() {
        let m = Mat2::new(2.0, 1.0, 1.0, 2.0);
        let ev = m.eigenvalues();
        assert!((ev[0].re - 1.0).abs() < 1e-14 && ev[0].im == 0.0);
        assert!((ev[1].re - 3.0).abs() < 1e-14);
        let v = m.eigenvector(3.0);
        let mv = m.mul_vec(v);
        assert!((mv[0] - 3.0 * v[0]).abs() < 1e-13 && (mv[1] - 3.0 * v[1]).abs() < 1e-13);
    }

    #[test]
    fn complex_eigen_pair() {
        let th: f64 = 0.3;
        let m = Mat2::new(th.cos(), -th.sin(), th.sin(), th.cos());
        let ev = m.eigenvalues();
        assert!((ev[0].norm() - 1.0).abs() < 1e-14);
        assert!((ev[0].arg() - th).abs() < 1e-14);
        assert_eq!(ev[0], ev[1].conj());
    }

    #[test]
    fn lower_triangular_eigenvalues_are_diagonal() {
        let m = Mat2::new(0.75, 0.0, -4.0, 1.0);
        let ev = m.eigenvalues();
        assert!((ev[0].re - 0.75).abs() < 1e-15);
        assert!((ev[1].re - 1.0).abs() < 1e-15);
        let v = m.eigenvector(0.75);
        let mv = m.mul_vec(v);
        assert!((mv[0] - 0.75 * v[0]).abs() < 1e-14 && (mv[1] - 0.75 * v[1]).abs() < 1e-14);
    }

    #[test]
    fn solve_and_singular() {
        let m = Mat2::new(3.0, 1.0, 2.0, 4.0);
        let x = m.solve([5.0, 10.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14);
        assert!(Mat2::new(1.0, 2.0, 2.0, 4.0).solve([1.0, 1.0]).is_none());
    }
}
