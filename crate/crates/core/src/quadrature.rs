//! Uniform momentum grids and deterministic reductions.
//!
//! Every k-integral in the crate runs on the shifted grid
//! `k_m = -π + (m + 1/2)·2π/N`. It never hits `k = 0` or `k = π`, it is
//! symmetric under `k → -k` with index `m ↔ N-1-m`, and for `N = L` it is
//! exactly the antiperiodic momentum set of an `L`-site (or `L`-cell) ring.
//! The periodic trapezoidal rule on it is the plain mean.

use faer::c64;
use std::f64::consts::PI;

use crate::linalg::cis;

pub fn shifted_grid(n: usize) -> Vec<f64> {
    let h = 2.0 * PI / n as f64;
    (0..n).map(|m| -PI + (m as f64 + 0.5) * h).collect()
}

/// Index of `-k_m` on the shifted grid.
#[inline]
pub fn mirror(m: usize, n: usize) -> usize {
    n - 1 - m
}

const PAIRWISE_BASE: usize = 32;

/// Pairwise (cascade) summation; the result is independent of thread count.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_BASE {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn pairwise_sum_c(xs: &[c64]) -> c64 {
    if xs.len() <= PAIRWISE_BASE {
        return xs.iter().copied().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum_c(&xs[..mid]) + pairwise_sum_c(&xs[mid..])
}

/// Periodic trapezoidal rule over `[-π, π]`, normalized by `2π`.
pub fn periodic_mean(values: &[f64]) -> f64 {
    pairwise_sum(values) / values.len() as f64
}

/// Table of `e^{-i k_m r}` on the shifted grid, exact up to one rounding.
pub struct PhaseTable {
    n: usize,
    roots: Vec<c64>,
}

impl PhaseTable {
    pub fn new(n: usize) -> Self {
        let roots = (0..2 * n).map(|j| cis(-PI * j as f64 / n as f64)).collect();
        Self { n, roots }
    }

    /// `e^{-i k_m r}` with `k_m = -π + (2m+1)π/n`.
    #[inline]
    pub fn phase(&self, m: usize, r: i64) -> c64 {
        let two_n = 2 * self.n as i64;
        let j = ((2 * m as i64 + 1) * r).rem_euclid(two_n) as usize;
        let sign = if r.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        self.roots[j] * sign
    }
}
