//! Deterministic summation.
//!
//! Integrands are evaluated (possibly in parallel) into a vector in node order,
//! then combined by a fixed pairwise tree. The result does not depend on the
//! number of worker threads.

use rayon::prelude::*;

use crate::linalg::C64;

const LEAF: usize = 8;

pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= LEAF {
        return xs.iter().fold(0.0, |a, b| a + b);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn pairwise_sum_c(xs: &[C64]) -> C64 {
    if xs.len() <= LEAF {
        return xs.iter().fold(C64::new(0.0, 0.0), |a, b| a + b);
    }
    let mid = xs.len() / 2;
    pairwise_sum_c(&xs[..mid]) + pairwise_sum_c(&xs[mid..])
}

/// Σ_i f(i) for i in 0..n, evaluated in parallel and reduced pairwise.
pub fn par_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let vals: Vec<f64> = (0..n).into_par_iter().map(f).collect();
    pairwise_sum(&vals)
}

pub fn par_sum_c<F>(n: usize, f: F) -> C64
where
    F: Fn(usize) -> C64 + Sync + Send,
{
    let vals: Vec<C64> = (0..n).into_par_iter().map(f).collect();
    pairwise_sum_c(&vals)
}
