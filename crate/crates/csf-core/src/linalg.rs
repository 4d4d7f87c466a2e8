//! Banded solvers used by the implicit steppers.

use std::ops::{Add, Mul, Sub};

/// Right-hand side entries: scalars or points.
pub trait Rhs: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}
impl<T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>> Rhs for T {}

/// Solves a tridiagonal system in place (Thomas algorithm). `lower[0]` and
/// `upper[n-1]` are ignored. Requires a diagonally dominant matrix.
pub fn solve_tridiagonal<T: Rhs>(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [T]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut inv = 1.0 / diag[0];
    rhs[0] = rhs[0] * inv;
    for i in 1..n {
        c[i - 1] = upper[i - 1] * inv;
        inv = 1.0 / (diag[i] - lower[i] * c[i - 1]);
        rhs[i] = (rhs[i] - rhs[i - 1] * lower[i]) * inv;
    }
    for i in (0..n - 1).rev() {
        rhs[i] = rhs[i] - rhs[i + 1] * c[i];
    }
}

/// Solves a cyclic tridiagonal system where `lower[0]` couples row 0 to the
/// last unknown and `upper[n-1]` couples the last row to unknown 0
/// (Sherman–Morrison).
pub fn solve_cyclic_tridiagonal<T: Rhs>(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [T]) {
    let n = diag.len();
    let alpha = upper[n - 1];
    let beta = lower[0];
    let gamma = -diag[0];
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= alpha * beta / gamma;
    solve_tridiagonal(lower, &d, upper, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    solve_tridiagonal(lower, &d, upper, &mut u);
    let fact = (rhs[0] + rhs[n - 1] * (beta / gamma)) * (1.0 / (1.0 + u[0] + beta * u[n - 1] / gamma));
    for i in 0..n {
        rhs[i] = rhs[i] - fact * u[i];
    }
}
