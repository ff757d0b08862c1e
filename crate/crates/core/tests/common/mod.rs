#![allow(dead_code)]

use nalgebra::DMatrix;
use qv_shadow::rng::ShotStream;
use qv_shadow::C64;
use rand::Rng;

pub fn random_amplitudes(rng: &mut ShotStream, len: usize) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..len)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        if v.iter().map(|a| a.norm_sqr()).sum::<f64>() > 1e-6 {
            return v;
        }
    }
}

/// Haar-like unitary from the QR factor of a random complex matrix.
pub fn random_unitary(rng: &mut ShotStream, dim: usize) -> DMatrix<C64> {
    let entries = random_amplitudes(rng, dim * dim);
    DMatrix::from_vec(dim, dim, entries).qr().q()
}

pub fn max_abs_diff(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Dense single-mode lowering matrix `⟨n−1|b|n⟩ = √n` for cutoff `nmax`.
pub fn single_mode_lowering(nmax: usize) -> DMatrix<C64> {
    let d = nmax + 1;
    let mut m = DMatrix::zeros(d, d);
    for n in 1..d {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    m
}

/// Probability that a normal variable with mean `mu` and spread `sigma`
/// falls in `[a, b)`.
pub fn normal_interval(mu: f64, sigma: f64, a: f64, b: f64) -> f64 {
    let cdf = |x: f64| 0.5 * (1.0 + statrs::function::erf::erf((x - mu) / (sigma * std::f64::consts::SQRT_2)));
    cdf(b) - cdf(a)
}

/// `σ(t) = σ₀ √(1 + (t / 2mσ₀²)²)`
pub fn free_width(sigma0: f64, mass: f64, t: f64) -> f64 {
    sigma0 * (1.0 + (t / (2.0 * mass * sigma0 * sigma0)).powi(2)).sqrt()
}
