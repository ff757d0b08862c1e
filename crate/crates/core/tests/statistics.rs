mod common;

use common::*;
use qv_shadow::measurement::{born_probabilities, projective_measure, Outcome, QubitBasis};
use qv_shadow::protocols::{entangled_readout_demo, product_state_demo, run_entanglement_swap};
use qv_shadow::register::{BellKind, DualRegister};
use qv_shadow::rng::ShotStream;
use qv_shadow::stats::{binomial_sigma, chi_square_test};
use qv_shadow::wave::{
    collapse_detect, double_slit_accumulate, exact_slit_intensity, zone_coefficients, SlitGeometry, SlitMode,
    WaveGrid, ZonePartition,
};
use qv_shadow::C64;

const SHOTS: u64 = 10_000;

#[test]
fn born_frequencies_fit() {
    let state = DualRegister::from_amplitudes(&[C64::new(0.6, 0.0), C64::new(0.0, 0.8)], 1).unwrap();
    let basis = QubitBasis::from_bloch(1.1, 0.4);
    let (p0, p1) = born_probabilities(&state, 0, &basis).unwrap();
    let mut counts = [0u64; 2];
    for shot in 0..SHOTS {
        let r = projective_measure(&state, 0, &basis, &mut ShotStream::for_shot(5, shot)).unwrap();
        match r.outcome {
            Outcome::Qubit(b) => counts[b as usize] += 1,
            Outcome::Bell(_) => unreachable!(),
        }
    }
    assert!(chi_square_test(&counts, &[p0, p1]).p_value > 1e-3);
}

#[test]
fn zone_weights_match_the_normal_cdf() {
    let (mu, sigma) = (0.3, 1.0);
    let g = WaveGrid::gaussian(-6.0, 6.0, 1200, 1.0, mu, sigma, 0.0).unwrap();
    let p = ZonePartition::equal(&g, 4).unwrap();
    let c = zone_coefficients(&g, &p).unwrap();
    // Each grid point stands for the cell centred on it.
    let half = g.dx() / 2.0;
    let edges: Vec<f64> = p.boundaries().iter().map(|&b| g.x_min() + b as f64 * g.dx() - half).collect();
    let total = normal_interval(mu, sigma, edges[0], edges[4]);
    for k in 0..4 {
        let expect = normal_interval(mu, sigma, edges[k], edges[k + 1]) / total;
        assert!((c[k].norm_sqr() - expect).abs() < 1e-5, "zone {k}: {} vs {expect}", c[k].norm_sqr());
    }
}

#[test]
fn collapse_frequencies_fit() {
    let g = WaveGrid::gaussian(-4.0, 4.0, 1024, 1.0, 0.3, 1.0, 0.0).unwrap();
    let p = ZonePartition::equal(&g, 4).unwrap();
    let probs: Vec<f64> = zone_coefficients(&g, &p).unwrap().iter().map(|c| c.norm_sqr()).collect();
    let mut counts = vec![0u64; 4];
    for shot in 0..SHOTS {
        let (zone, _) = collapse_detect(&g, &p, &mut ShotStream::for_shot(11, shot)).unwrap();
        counts[zone] += 1;
    }
    assert!(chi_square_test(&counts, &probs).p_value > 1e-3);
}

#[test]
fn two_zone_symmetric_split() {
    let dx = 20.0 / 256.0;
    let g = WaveGrid::gaussian(-10.0, 10.0, 256, 1.0, -0.5 * dx, 1.0, 0.0).unwrap();
    let p = ZonePartition::equal(&g, 2).unwrap();
    let mut up = 0u64;
    for shot in 0..SHOTS {
        if collapse_detect(&g, &p, &mut ShotStream::for_shot(3, shot)).unwrap().0 == 0 {
            up += 1;
        }
    }
    let f = up as f64 / SHOTS as f64;
    assert!((f - 0.5).abs() < 3.0 * binomial_sigma(SHOTS, 0.5));
}

#[test]
fn swap_outcomes_are_uniform() {
    let mut counts = std::collections::BTreeMap::new();
    for shot in 0..SHOTS {
        let r = run_entanglement_swap(&mut ShotStream::for_shot(21, shot)).unwrap();
        *counts.entry(r.outcome).or_insert(0u64) += 1;
    }
    let sigma = binomial_sigma(SHOTS, 0.25);
    for k in BellKind::ALL {
        let f = counts[&k] as f64 / SHOTS as f64;
        assert!((f - 0.25).abs() < 3.0 * sigma, "{k}: {f}");
    }
}

#[test]
fn readout_and_product_statistics() {
    let (_, readout) = entangled_readout_demo(SHOTS, 4).unwrap();
    assert_eq!(readout.correlation, 1.0);
    let f = readout.local_counts[0] as f64 / SHOTS as f64;
    assert!((f - 0.5).abs() < 3.0 * binomial_sigma(SHOTS, 0.5));
    let (_, product) = product_state_demo(SHOTS, 4).unwrap();
    assert!(product.tvd_z < 0.04 && product.tvd_x < 0.04);
    assert_eq!(product.x_marginal_measured, [1.0, 0.0]);
}

#[test]
fn double_slit_statistics() {
    let geometry = SlitGeometry::default();
    let h = double_slit_accumulate(&geometry, SlitMode::Double, SHOTS, 64, 9).unwrap();
    assert!(h.chi_square.p_value > 1e-3);
    assert!((h.visibility - h.analytic_visibility).abs() <= 0.02 * h.analytic_visibility);
    // The propagated intensity and the closed form agree bin by bin.
    for (s, a) in h.simulated_probabilities.iter().zip(&h.analytic_probabilities) {
        assert!((s - a).abs() < 2e-3, "{s} vs {a}");
    }
    let single = double_slit_accumulate(&geometry, SlitMode::Single, SHOTS, 64, 9).unwrap();
    assert!(single.visibility.abs() < 0.05);
    assert!(single.chi_square.p_value > 1e-3);
}

#[test]
fn narrow_slits_approach_the_far_field_pattern() {
    let g = SlitGeometry { width: 0.01, ..SlitGeometry::default() };
    let p = g.fringe_period();
    let centre = exact_slit_intensity(&g, SlitMode::Double, 1.0, 0.0);
    let trough = exact_slit_intensity(&g, SlitMode::Double, 1.0, p / 2.0);
    assert!(trough / centre < 1e-2);
    for x in [0.1 * p, 0.3 * p, 0.45 * p] {
        let ratio = exact_slit_intensity(&g, SlitMode::Double, 1.0, x) / centre;
        let ideal = (std::f64::consts::PI * x / p).cos().powi(2);
        assert!((ratio - ideal).abs() < 2e-2, "{x}: {ratio} vs {ideal}");
    }
}
