//! Deterministic reductions and small combinatorial helpers.
//!
//! Parallel sums are split into fixed-size blocks whose partial sums are
//! combined by a pairwise tree, so the result does not depend on the number
//! of worker threads.

use nalgebra::Vector3;
use num_complex::Complex64;
use rayon::prelude::*;

const LEAF: usize = 32;
const BLOCK: usize = 2048;

/// Pairwise (tree) sum of a slice.
pub fn tree_sum(values: &[Complex64]) -> Complex64 {
    if values.len() <= LEAF {
        return values.iter().fold(Complex64::new(0.0, 0.0), |acc, v| acc + v);
    }
    let mid = values.len() / 2;
    tree_sum(&values[..mid]) + tree_sum(&values[mid..])
}

/// Real-valued counterpart of [`tree_sum`].
pub fn tree_sum_real(values: &[f64]) -> f64 {
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    tree_sum_real(&values[..mid]) + tree_sum_real(&values[mid..])
}

/// Sums `term(i)` for `i in 0..len`, in parallel, with a reduction order that
/// depends only on `len`.
pub fn par_sum<F>(len: usize, term: F) -> Complex64
where
    F: Fn(usize) -> Complex64 + Sync,
{
    if len <= BLOCK {
        let v: Vec<Complex64> = (0..len).map(&term).collect();
        return tree_sum(&v);
    }
    let blocks = len.div_ceil(BLOCK);
    let partial: Vec<Complex64> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * BLOCK;
            let hi = (lo + BLOCK).min(len);
            let v: Vec<Complex64> = (lo..hi).map(&term).collect();
            tree_sum(&v)
        })
        .collect();
    tree_sum(&partial)
}

/// `Σ_μ exp(i q·r_μ)`, the structure factor of a set of positions.
pub fn phase_sum(positions: &[Vector3<f64>], q: &Vector3<f64>) -> Complex64 {
    par_sum(positions.len(), |i| Complex64::cis(q.dot(&positions[i])))
}

/// Binomial coefficient, `None` on overflow of `u64`.
pub fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
        if acc > u128::from(u64::MAX) {
            return None;
        }
    }
    Some(acc as u64)
}

/// Full width at half maximum of a sampled peak, by linear interpolation of
/// the half-maximum crossings on either side of the largest sample. `None`
/// if the curve does not fall below half maximum on both sides.
pub fn half_max_width(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 3 {
        return None;
    }
    let peak = (0..y.len()).max_by(|&a, &b| y[a].total_cmp(&y[b]))?;
    let half = 0.5 * y[peak];
    if !(half > 0.0) {
        return None;
    }
    let crossing = |i: usize, j: usize| x[i] + (half - y[i]) * (x[j] - x[i]) / (y[j] - y[i]);
    let left = (1..=peak).rev().find(|&i| y[i - 1] < half).map(|i| crossing(i - 1, i))?;
    let right = (peak..y.len() - 1).find(|&i| y[i + 1] < half).map(|i| crossing(i, i + 1))?;
    Some(right - left)
}
