//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use common::*;
use qv_shadow::fock::{
    algebra_report, ladder_factors, position_create, DispersionParams, DualFockState, Kinematics, ModeGrid,
};
use qv_shadow::measurement::{bell_measure, projective_measure, QubitBasis};
use qv_shadow::protocols::{
    derive_correction_table, derive_decomposition, entangled_readout_demo, product_state_demo, run_entanglement_swap,
    swap_branch, teleport_branch, ReferenceIdentity,
};
use qv_shadow::register::{BellKind, DualRegister};
use qv_shadow::rng::ShotStream;
use qv_shadow::stats::{binomial_sigma, chi_square_test};
use qv_shadow::wave::{
    collapse_detect, double_slit_accumulate, evolve, zone_coefficients, Potential, SlitGeometry, SlitMode, WaveGrid,
    ZonePartition,
};
use qv_shadow::C64;
use rand::Rng;

const SHOTS: u64 = 10_000;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn within_budget(elapsed: Duration, seconds: u64) -> bool {
    elapsed <= Duration::from_secs(seconds)
}

fn ac1_mirror_invariant() -> Outcome {
    let start = Instant::now();
    let mut rng = ShotStream::new(101);
    let (mut ops, mut fock_dev, mut reg_dev, mut wave_dev) = (0usize, 0.0f64, 0.0f64, 0.0f64);

    for _ in 0..450 {
        let modes = rng.random_range(1..=3);
        let grid = ModeGrid::bosonic(modes, rng.random_range(1..=3)).unwrap();
        let x = rng.random_range(-2.0..2.0);
        let mut state =
            position_create(&grid, x, 0.0, &DispersionParams::default(), Kinematics::NonRelativistic).unwrap();
        ops += 1;
        fock_dev = fock_dev.max(state.mirror_deviation());
        for _ in 0..20 {
            let mode = rng.random_range(0..modes);
            state = if rng.random_bool(0.5) {
                state.apply_b_dagger(mode).unwrap()
            } else {
                state.apply_b(mode).unwrap()
            };
            ops += 1;
            fock_dev = fock_dev.max(state.mirror_deviation());
            if state.is_zero() {
                state = DualFockState::basis_state(&grid, vec![0; modes]).unwrap();
            }
        }
    }

    for _ in 0..500 {
        let n = rng.random_range(2..=4);
        let mut state = DualRegister::from_amplitudes(&random_amplitudes(&mut rng, 1 << n), n).unwrap();
        for _ in 0..3 {
            let q = rng.random_range(0..n);
            state = state.apply_gate(q, &random_unitary(&mut rng, 2)).unwrap();
            ops += 1;
            reg_dev = reg_dev.max(state.mirror_deviation());
        }
        let a = rng.random_range(0..n);
        let b = (a + 1) % n;
        let record = if rng.random_bool(0.5) {
            bell_measure(&state, (a, b), &mut rng).unwrap()
        } else {
            let basis = QubitBasis::from_bloch(rng.random_range(0.0..3.14), rng.random_range(0.0..6.28));
            projective_measure(&state, a, &basis, &mut rng).unwrap()
        };
        ops += 1;
        reg_dev = reg_dev.max(record.post_state.mirror_deviation());
        for remote in [&record.remote_state_via_shadow, &record.remote_state_direct].into_iter().flatten() {
            reg_dev = reg_dev.max(remote.mirror_deviation());
        }
    }

    let grid = WaveGrid::gaussian(-20.0, 20.0, 512, 1.0, 0.0, 1.0, 1.0).unwrap();
    let v = Potential::from_fn(&grid, |x| 0.05 * x * x).unwrap();
    let mut g = grid.clone();
    for _ in 0..20 {
        g = evolve(&g, &v, 0.01, 50).unwrap();
        ops += 50;
        wave_dev = wave_dev.max(g.mirror_deviation());
    }
    let partition = ZonePartition::equal(&grid, 8).unwrap();
    for _ in 0..200 {
        let (_, c) = collapse_detect(&g, &partition, &mut rng).unwrap();
        ops += 1;
        wave_dev = wave_dev.max(c.mirror_deviation());
    }
    let h = double_slit_accumulate(&SlitGeometry::default(), SlitMode::Double, 1000, 64, 5).unwrap();
    ops += 1;
    wave_dev = wave_dev.max(h.max_mirror_deviation);

    let elapsed = start.elapsed();
    let passed = ops >= 10_000 && fock_dev <= 1e-12 && reg_dev <= 1e-12 && wave_dev <= 1e-10 && within_budget(elapsed, 30);
    outcome(
        passed,
        format!(
            "{ops} operations; max deviation fock {fock_dev:.1e}, register {reg_dev:.1e} (tol 1e-12), wave {wave_dev:.1e} (tol 1e-10); {:.2}s (budget 30s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn ac2_operator_algebra() -> Outcome {
    let start = Instant::now();
    let mut boson = 0.0f64;
    for modes in 1..=4 {
        boson = boson.max(algebra_report(&ModeGrid::bosonic(modes, 4).unwrap()).unwrap().max_residual);
    }
    let fermion = algebra_report(&ModeGrid::fermionic(4).unwrap()).unwrap().max_residual;
    let elapsed = start.elapsed();
    outcome(
        boson <= 1e-12 && fermion <= 1e-12 && within_budget(elapsed, 10),
        format!(
            "boson commutators (1-4 modes, N_max 4, guarded sector) {boson:.1e}; fermion anticommutators (4 modes) {fermion:.1e}; {:.2}s (budget 10s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn ac3_ladder_factor() -> Outcome {
    let oracle = single_mode_lowering(4).adjoint();
    let mut worst = 0.0f64;
    for modes in 1..=4 {
        let grid = ModeGrid::bosonic(modes, 4).unwrap();
        for mode in 0..modes {
            for (n, f) in ladder_factors(&grid, mode).unwrap().into_iter().enumerate() {
                worst = worst.max((f - oracle[(n + 1, n)].re).abs());
            }
        }
    }
    outcome(worst <= 1e-12, format!("max |<n+1|b+|n> - sqrt(n+1)| = {worst:.1e} for n = 0..3 (tol 1e-12)"))
}

fn ac4_teleportation() -> Outcome {
    let start = Instant::now();
    let mut rng = ShotStream::new(404);
    let tables: Vec<_> = BellKind::ALL.iter().map(|&r| derive_correction_table(r).unwrap()).collect();
    let mut worst = 0.0f64;
    let mut runs = 0;
    for _ in 0..100 {
        let v = random_amplitudes(&mut rng, 2);
        for table in &tables {
            for outcome in BellKind::ALL {
                let run = teleport_branch(v[0], v[1], table, outcome).unwrap();
                worst = worst.max(1.0 - run.fidelity).max(run.max_mirror_deviation);
                runs += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-10 && within_budget(elapsed, 10),
        format!(
            "{runs} runs; max (1 - corrected fidelity) {worst:.1e} (tol 1e-10); {:.2}s (budget 10s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn ac5_decomposition() -> Outcome {
    let mut rng = ShotStream::new(505);
    let mut phi_residual = 0.0f64;
    let mut psi_flagged = true;
    let mut reassembly = 0.0f64;
    for _ in 0..100 {
        let v = random_amplitudes(&mut rng, 2);
        let identity = ReferenceIdentity::Teleportation { alpha: v[0], beta: v[1] };
        let report = derive_decomposition(&identity.state().unwrap(), &identity).unwrap();
        reassembly = reassembly.max(report.reassembly_residual);
        for b in &report.branches {
            match b.outcome {
                BellKind::PhiPlus | BellKind::PhiMinus => phi_residual = phi_residual.max(b.residual),
                BellKind::PsiPlus | BellKind::PsiMinus => psi_flagged &= !b.matches,
            }
        }
    }
    let swap = || derive_decomposition(&ReferenceIdentity::Swap.state().unwrap(), &ReferenceIdentity::Swap).unwrap();
    let (first, second) = (swap(), swap());
    let deterministic = first == second;
    outcome(
        phi_residual < 1e-12 && psi_flagged && reassembly < 1e-12 && first.reassembly_residual < 1e-12 && deterministic,
        format!(
            "teleportation phi branches residual {phi_residual:.1e}; psi branches flagged: {psi_flagged}; \
             reassembly {reassembly:.1e}; swap reassembly {:.1e}, verdict {:?} (deterministic: {deterministic})",
            first.reassembly_residual, first.verdict
        ),
    )
}

fn ac6_swap() -> Outcome {
    let mut worst = 0.0f64;
    for k in BellKind::ALL {
        let run = swap_branch(k).unwrap();
        worst = worst.max(1.0 - run.fidelity);
    }
    let mut counts = std::collections::BTreeMap::new();
    for shot in 0..SHOTS {
        let r = run_entanglement_swap(&mut ShotStream::for_shot(606, shot)).unwrap();
        *counts.entry(r.outcome).or_insert(0u64) += 1;
    }
    let sigma = binomial_sigma(SHOTS, 0.25);
    let z = BellKind::ALL
        .iter()
        .map(|k| (counts[k] as f64 / SHOTS as f64 - 0.25).abs() / sigma)
        .fold(0.0, f64::max);
    outcome(
        worst <= 1e-10 && z <= 3.0,
        format!("max (1 - remote fidelity) {worst:.1e} (tol 1e-10); max frequency deviation {z:.2} sigma over {SHOTS} shots (tol 3)"),
    )
}

fn ac7_readout() -> Outcome {
    let (_, readout) = entangled_readout_demo(SHOTS, 707).unwrap();
    let (_, product) = product_state_demo(SHOTS, 707).unwrap();
    let threshold = 4.0 / (SHOTS as f64).sqrt();
    outcome(
        readout.correlation == 1.0 && product.tvd_z < threshold && product.tvd_x < threshold,
        format!(
            "phi+ z correlation {} (exact 1); product TVD z {:.4}, x {:.4} (tol {threshold})",
            readout.correlation, product.tvd_z, product.tvd_x
        ),
    )
}

fn ac8_evolution() -> Outcome {
    let start = Instant::now();
    const POINTS: usize = 1024;
    // Free packet over the time in which its width doubles.
    let (sigma0, mass) = (1.0, 1.0);
    let t_double = 2.0 * mass * sigma0 * sigma0 * 3f64.sqrt();
    let steps = 700;
    let free = WaveGrid::gaussian(-25.0, 25.0, POINTS, mass, 0.0, sigma0, 0.0).unwrap();
    let spread = evolve(&free, &Potential::zero(POINTS), t_double / steps as f64, steps).unwrap();
    let width_err = (spread.width() / free_width(sigma0, mass, spread.t()) - 1.0).abs();

    let ground =
        WaveGrid::from_fn(-10.0, 10.0, POINTS, 1.0, |x| C64::new((-x * x / 2.0).exp(), 0.0)).unwrap();
    let v = Potential::harmonic(&ground, 1.0).unwrap();
    let evolved = evolve(&ground, &v, 0.01, 1000).unwrap();
    let modulus = evolved
        .primary()
        .iter()
        .zip(ground.primary())
        .map(|(a, b)| (a.norm() - b.norm()).abs())
        .fold(0.0, f64::max);
    let norm = (spread.norm_sq() - 1.0).abs().max((evolved.norm_sq() - 1.0).abs());
    let elapsed = start.elapsed();
    outcome(
        width_err <= 0.01 && modulus < 1e-6 && norm < 1e-8 && within_budget(elapsed, 30),
        format!(
            "free width relative error {width_err:.2e} at t = {:.3} (tol 1e-2); harmonic modulus drift {modulus:.1e} over 1000 steps (tol 1e-6); norm drift {norm:.1e} (tol 1e-8); {POINTS} points, {:.2}s (budget 30s)",
            spread.t(),
            elapsed.as_secs_f64()
        ),
    )
}

fn ac9_collapse() -> Outcome {
    let g = WaveGrid::gaussian(-4.0, 4.0, 1024, 1.0, 0.3, 1.0, 0.0).unwrap();
    let p = ZonePartition::equal(&g, 4).unwrap();
    let probs: Vec<f64> = zone_coefficients(&g, &p).unwrap().iter().map(|c| c.norm_sqr()).collect();
    let mut counts = vec![0u64; 4];
    let mut confined = true;
    for shot in 0..SHOTS {
        let (zone, c) = collapse_detect(&g, &p, &mut ShotStream::for_shot(909, shot)).unwrap();
        counts[zone] += 1;
        let range = p.zone_range(zone);
        confined &= c
            .primary()
            .iter()
            .zip(c.shadow())
            .enumerate()
            .all(|(i, (a, b))| range.contains(&i) || (a.norm() == 0.0 && b.norm() == 0.0));
    }
    let fit = chi_square_test(&counts, &probs);
    outcome(
        fit.p_value > 1e-3 && confined,
        format!("4-zone chi-square p = {:.4} over {SHOTS} shots (tol > 0.001); support confined exactly: {confined}", fit.p_value),
    )
}

fn ac10_double_slit() -> Outcome {
    let geometry = SlitGeometry::default();
    let double = double_slit_accumulate(&geometry, SlitMode::Double, SHOTS, 64, 1010).unwrap();
    let single = double_slit_accumulate(&geometry, SlitMode::Single, SHOTS, 64, 1010).unwrap();
    let rel = (double.visibility - double.analytic_visibility).abs() / double.analytic_visibility;
    outcome(
        double.chi_square.p_value > 1e-3 && rel <= 0.02 && single.visibility.abs() < 0.05,
        format!(
            "chi-square p = {:.4} (64 bins, {SHOTS} shots, tol > 0.001); visibility {:.4} vs analytic {:.4}, relative {rel:.4} (tol 0.02); single slit visibility {:.4} (tol 0.05)",
            double.chi_square.p_value, double.visibility, double.analytic_visibility, single.visibility
        ),
    )
}

fn ac11_cli_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_qv-shadow");
    let configs: [&[&str]; 11] = [
        &["teleport", "--seed", "7"],
        &["swap", "--seed", "7"],
        &["bell"],
        &["readout", "--seed", "3"],
        &["product", "--seed", "3"],
        &["algebra", "--modes", "3", "--nmax", "4"],
        &["evolve"],
        &["collapse", "--seed", "9"],
        &["doubleslit", "--seed", "9"],
        &["erratum"],
        &["collapse", "--seed", "9", "--format", "csv"],
    ];
    let mut identical = 0;
    let mut failures = Vec::new();
    for args in configs {
        let a = Command::new(bin).args(args).output().expect("binary runs");
        let b = Command::new(bin).args(args).output().expect("binary runs");
        if a.stdout == b.stdout && !a.stdout.is_empty() && a.status.success() && b.status.success() {
            identical += 1;
        } else {
            failures.push(args.join(" "));
        }
    }
    outcome(
        failures.is_empty(),
        format!("{identical}/{} configurations byte-identical across two runs{}", configs.len(), if failures.is_empty() { String::new() } else { format!("; differing: {failures:?}") }),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("AC1 mirror invariant", ac1_mirror_invariant),
        ("AC2 operator algebra", ac2_operator_algebra),
        ("AC3 ladder factor", ac3_ladder_factor),
        ("AC4 teleportation", ac4_teleportation),
        ("AC5 decomposition oracle", ac5_decomposition),
        ("AC6 entanglement swap", ac6_swap),
        ("AC7 entangled vs product readout", ac7_readout),
        ("AC8 Schrodinger evolution", ac8_evolution),
        ("AC9 collapse statistics", ac9_collapse),
        ("AC10 double slit", ac10_double_slit),
        ("AC11 CLI determinism", ac11_cli_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let result = check();
        println!("{} {name}: {}", if result.passed { "PASS" } else { "FAIL" }, result.detail);
        if !result.passed {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
