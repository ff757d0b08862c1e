//! Goodness-of-fit helpers for sampled outcomes.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Minimum expected count per pooled cell.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    /// Cells left after merging adjacent bins with small expected counts.
    pub cells: usize,
}

/// Pearson chi-square test of `observed` counts against `probabilities`.
///
/// Adjacent bins are merged left to right until each cell expects at least
/// [`MIN_EXPECTED`] counts; a short trailing cell is folded into its
/// neighbour. Probabilities are renormalized over the bins given.
pub fn chi_square_test(observed: &[u64], probabilities: &[f64]) -> ChiSquareTest {
    assert_eq!(observed.len(), probabilities.len());
    let total: u64 = observed.iter().sum();
    let mass: f64 = probabilities.iter().sum();
    let n = total as f64;

    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probabilities) {
        obs += o as f64;
        exp += n * p / mass;
        if exp >= MIN_EXPECTED {
            cells.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    if exp > 0.0 || obs > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += obs;
                last.1 += exp;
            }
            None => cells.push((obs, exp)),
        }
    }

    let statistic: f64 = cells
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = cells.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
        1.0 - dist.cdf(statistic)
    };
    ChiSquareTest {
        statistic,
        degrees_of_freedom: dof,
        p_value,
        cells: cells.len(),
    }
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub fn frequencies(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return vec![0.0; counts.len()];
    }
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

/// Standard deviation of a sample frequency with success probability `p`.
pub fn binomial_sigma(shots: u64, p: f64) -> f64 {
    (p * (1.0 - p) / shots as f64).sqrt()
}
