#![allow(dead_code)]

use std::f64::consts::TAU;

/// `g` written out directly from its definition, independent of the library.
pub fn g_raw(delta: f64, gamma: f64, k: f64, tau: f64, s: f64) -> f64 {
    tau.powf(delta * delta) + gamma * tau.powf(delta * delta - delta) * (1.0 + k * s.sin()) - tau
}

/// Zero count of `g(tau, .)` on a uniform circle of `n_s` samples.
pub fn zeros_on_row(delta: f64, gamma: f64, k: f64, tau: f64, n_s: usize) -> usize {
    let vals: Vec<f64> = (0..n_s)
        .map(|j| g_raw(delta, gamma, k, tau, TAU * (j as f64 + 0.5) / n_s as f64))
        .collect();
    (0..n_s)
        .filter(|&j| (vals[j] < 0.0) != (vals[(j + 1) % n_s] < 0.0))
        .count()
}

/// Brute-force fold brackets: consecutive rows of a log-spaced tau grid whose
/// zero counts differ. Returns `(tau_lo, tau_hi)` per change of count.
pub fn brute_force_fold_brackets(
    delta: f64,
    gamma: f64,
    k: f64,
    tau_min: f64,
    n_tau: usize,
    n_s: usize,
) -> Vec<(f64, f64)> {
    let taus: Vec<f64> = (0..n_tau)
        .map(|i| (tau_min.ln() * (1.0 - i as f64 / (n_tau - 1) as f64)).exp())
        .collect();
    let counts: Vec<usize> = taus
        .iter()
        .map(|&t| zeros_on_row(delta, gamma, k, t, n_s))
        .collect();
    let mut out = Vec::new();
    for i in 0..n_tau - 1 {
        let diff = counts[i].abs_diff(counts[i + 1]);
        // each fold adds or removes a pair of zeros
        for _ in 0..diff / 2 {
            out.push((taus[i], taus[i + 1]));
        }
    }
    out
}

/// Real root of a monotone function on `[a, b]` by plain bisection.
pub fn oracle_bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (f(m) < 0.0) == (fa < 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
