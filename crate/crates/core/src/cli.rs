//! Command-line front end.
//!
//! Every subcommand produces one document with the keys `config`, `results`,
//! `invariants` and `errata`. The exit status is 0 when every invariant
//! holds, 1 when one fails and 2 for usage errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::erratum::{erratum_report, Finding};
use crate::error::Error;
use crate::fock::{algebra_report, ladder_factors, ModeGrid};
use crate::measurement::{bell_measure, bell_probabilities, Outcome};
use crate::protocols::{
    derive_correction_table, entangled_readout_demo, product_state_demo, run_entanglement_swap_with_map,
    run_teleportation_with_table, swap_outcome_map, Correction,
};
use crate::register::{BellKind, DualRegister};
use crate::report::{csv_float, to_json};
use crate::rng::ShotStream;
use crate::stats::{binomial_sigma, chi_square_test, frequencies};
use crate::wave::{
    self, collapse_detect, collapse_onto, double_slit_accumulate, zone_expansion, Potential, Propagator, SlitGeometry,
    SlitMode, WaveGrid, ZonePartition,
};

/// Significance level for the goodness-of-fit invariants.
pub const P_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Parser, Serialize)]
#[command(name = "qv-shadow", version, about = "Dual-register quantum state simulations with deterministic output")]
pub struct RunConfig {
    #[command(subcommand)]
    #[serde(flatten)]
    pub command: Command,
    /// Seed for all sampling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Number of sampled shots.
    #[arg(long, global = true, default_value_t = 10_000)]
    pub shots: u64,
    #[arg(long = "format", global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub output_format: OutputFormat,
    /// Write the document here instead of stdout.
    #[arg(long = "output", global = true)]
    #[serde(skip)]
    pub output_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "lowercase")]
pub enum Command {
    /// Teleport a qubit through a Bell pair.
    Teleport(TeleportArgs),
    /// Swap entanglement onto the outer pair of two Bell pairs.
    Swap,
    /// Prepare a Bell pair and measure it in the Bell basis.
    Bell(BellArgs),
    /// Read out both halves of φ⁺ in the z basis.
    Readout,
    /// Compare remote marginals of a product state with and without a local readout.
    Product,
    /// Check ladder-operator (anti)commutators on a truncated Fock space.
    Algebra(AlgebraArgs),
    /// Evolve a Gaussian packet under the Schrödinger equation.
    Evolve(EvolveArgs),
    /// Sample zone detections of a Gaussian packet.
    Collapse(CollapseArgs),
    /// Accumulate single detections behind a double slit.
    Doubleslit(SlitArgs),
    /// Compare reference identities against the computed oracles.
    Erratum,
}

fn parse_complex(s: &str) -> Result<C64, String> {
    s.parse::<C64>().map_err(|e| format!("'{s}' is not a complex number ({e})"))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TeleportArgs {
    /// Amplitude of |↑⟩, e.g. 0.6 or 0.6+0.1i.
    #[arg(long, default_value = "0.6", value_parser = parse_complex, allow_hyphen_values = true)]
    #[serde(serialize_with = "crate::report::complex")]
    pub alpha: C64,
    /// Amplitude of |↓⟩, e.g. 0.8i.
    #[arg(long, default_value = "0.8i", value_parser = parse_complex, allow_hyphen_values = true)]
    #[serde(serialize_with = "crate::report::complex")]
    pub beta: C64,
    /// Shared Bell pair: psi-plus, psi-minus, phi-plus or phi-minus.
    #[arg(long, default_value = "phi-minus")]
    pub resource: BellKind,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BellArgs {
    #[arg(long, default_value = "phi-plus")]
    pub kind: BellKind,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AlgebraArgs {
    #[arg(long, default_value_t = 3)]
    pub modes: usize,
    /// Occupation cutoff (ignored for fermions).
    #[arg(long, default_value_t = 4)]
    pub nmax: u8,
    #[arg(long)]
    pub fermion: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialKind {
    Free,
    Harmonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryArg {
    Periodic,
    HardWall,
}

impl From<BoundaryArg> for wave::Boundary {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Periodic => wave::Boundary::Periodic,
            BoundaryArg::HardWall => wave::Boundary::HardWall,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvolveArgs {
    #[arg(long, default_value_t = 1024)]
    pub points: usize,
    #[arg(long, default_value_t = -40.0, allow_hyphen_values = true)]
    pub x_min: f64,
    #[arg(long, default_value_t = 40.0, allow_hyphen_values = true)]
    pub x_max: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mass: f64,
    /// Packet centre.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub x0: f64,
    /// Standard deviation of |ψ|².
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Central wave number.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub k0: f64,
    #[arg(long, default_value_t = 0.01, allow_hyphen_values = true)]
    pub dt: f64,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = PotentialKind::Free)]
    pub potential: PotentialKind,
    /// Angular frequency of the harmonic potential.
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long, value_enum, default_value_t = BoundaryArg::Periodic)]
    pub boundary: BoundaryArg,
    /// Steps between trajectory samples.
    #[arg(long, default_value_t = 100)]
    pub record_every: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CollapseArgs {
    #[arg(long, default_value_t = 4)]
    pub zones: usize,
    #[arg(long, default_value_t = 1024)]
    pub points: usize,
    #[arg(long, default_value_t = -4.0, allow_hyphen_values = true)]
    pub x_min: f64,
    #[arg(long, default_value_t = 4.0, allow_hyphen_values = true)]
    pub x_max: f64,
    #[arg(long, default_value_t = 0.3, allow_hyphen_values = true)]
    pub x0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SlitArgs {
    #[arg(long, default_value_t = 1.0)]
    pub separation: f64,
    /// Slit width (standard deviation of each slit's |ψ|²).
    #[arg(long, default_value_t = 0.05)]
    pub width: f64,
    /// Distance from the slits to the screen.
    #[arg(long, default_value_t = 20.0)]
    pub distance: f64,
    #[arg(long, default_value_t = 1.0)]
    pub wavelength: f64,
    #[arg(long, default_value_t = 64)]
    pub bins: usize,
    /// Close one slit.
    #[arg(long)]
    pub single: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("invalid value for --{flag}: {message}")]
    InvalidParameter { flag: &'static str, message: String },
    #[error("internal error: {0}")]
    Internal(String),
    #[error("cannot write output: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::InvalidParameter { .. } | CliError::Io(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

fn invalid(flag: &'static str) -> impl Fn(Error) -> CliError {
    move |e| CliError::InvalidParameter {
        flag,
        message: e.to_string(),
    }
}

fn require(ok: bool, flag: &'static str, message: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::InvalidParameter {
            flag,
            message: message.to_string(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Check {
    pub passed: bool,
    pub residual: f64,
}

impl Check {
    /// `residual ≤ tolerance`
    pub fn within(residual: f64, tolerance: f64) -> Self {
        Self {
            passed: residual <= tolerance,
            residual,
        }
    }

    /// Goodness of fit: passes when the p-value exceeds the threshold.
    pub fn p_value(p: f64) -> Self {
        Self {
            passed: p > P_THRESHOLD,
            residual: p,
        }
    }
}

type Invariants = BTreeMap<&'static str, Check>;

struct Section {
    results: Value,
    invariants: Invariants,
    errata: Vec<Finding>,
    /// Rows for CSV output, one object per shot or bin.
    rows: Vec<Value>,
}

#[derive(Serialize)]
struct Document<'a> {
    config: &'a RunConfig,
    results: &'a Value,
    invariants: &'a Invariants,
    errata: &'a [Finding],
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub exit_code: i32,
    pub document: String,
    pub invariants: BTreeMap<&'static str, Check>,
}

fn to_value<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("result types serialize to JSON")
}

fn findings(ids: &[&str]) -> Result<Vec<Finding>, CliError> {
    Ok(erratum_report()?
        .findings
        .into_iter()
        .filter(|f| ids.contains(&f.id))
        .collect())
}

fn max_z_score(counts: &BTreeMap<BellKind, u64>, shots: u64, p: f64) -> f64 {
    let sigma = binomial_sigma(shots, p);
    BellKind::ALL
        .iter()
        .map(|k| ((counts.get(k).copied().unwrap_or(0) as f64 / shots as f64) - p).abs() / sigma)
        .fold(0.0, f64::max)
}

fn bell_counts(outcomes: impl Iterator<Item = BellKind>) -> BTreeMap<BellKind, u64> {
    let mut counts: BTreeMap<BellKind, u64> = BellKind::ALL.iter().map(|&k| (k, 0)).collect();
    for k in outcomes {
        *counts.get_mut(&k).unwrap() += 1;
    }
    counts
}

fn uniform_bell_fit(counts: &BTreeMap<BellKind, u64>) -> crate::stats::ChiSquareTest {
    let observed: Vec<u64> = BellKind::ALL.iter().map(|k| counts[k]).collect();
    chi_square_test(&observed, &[0.25; 4])
}

#[derive(Serialize)]
struct TeleportShot {
    shot: u64,
    outcome: BellKind,
    probability: f64,
    correction: Correction,
    fidelity: f64,
    remote_agreement: f64,
}

fn teleport(args: &TeleportArgs, shots: u64, seed: u64) -> Result<Section, CliError> {
    let input = DualRegister::qubit(args.alpha, args.beta).map_err(invalid("alpha"))?;
    let table = derive_correction_table(args.resource)?;
    let runs = (0..shots)
        .into_par_iter()
        .map(|shot| {
            let mut rng = ShotStream::for_shot(seed, shot);
            run_teleportation_with_table(args.alpha, args.beta, &table, &mut rng).map(|r| (shot, r))
        })
        .collect::<crate::Result<Vec<_>>>()?;
    let rows: Vec<TeleportShot> = runs
        .iter()
        .map(|(shot, r)| TeleportShot {
            shot: *shot,
            outcome: r.outcome,
            probability: r.probability,
            correction: r.correction,
            fidelity: r.fidelity,
            remote_agreement: r.remote_agreement,
        })
        .collect();
    let counts = bell_counts(rows.iter().map(|r| r.outcome));
    let fit = uniform_bell_fit(&counts);
    let min_fidelity = rows.iter().map(|r| r.fidelity).fold(1.0, f64::min);
    let min_agreement = rows.iter().map(|r| r.remote_agreement).fold(1.0, f64::min);
    let mirror = runs.iter().map(|(_, r)| r.max_mirror_deviation).fold(0.0, f64::max);
    let input_amplitudes: Vec<[f64; 2]> = input.primary().iter().map(|a| [a.re, a.im]).collect();
    let mut invariants = Invariants::new();
    invariants.insert("corrected-fidelity", Check::within(1.0 - min_fidelity, 1e-10));
    invariants.insert("shadow-mediation", Check::within(1.0 - min_agreement, 1e-10));
    invariants.insert("mirror", Check::within(mirror, 1e-12));
    invariants.insert("outcome-frequencies", Check::p_value(fit.p_value));
    Ok(Section {
        results: json!({
            "input": input_amplitudes,
            "resource": args.resource,
            "correction_table": to_value(&table),
            "outcome_counts": to_value(&counts),
            "chi_square": to_value(&fit),
            "min_fidelity": min_fidelity,
            "shots": to_value(&rows),
        }),
        rows: rows.iter().map(to_value).collect(),
        invariants,
        errata: findings(&["teleportation-resource", "teleportation-branches"])?,
    })
}

#[derive(Serialize)]
struct SwapShot {
    shot: u64,
    outcome: BellKind,
    probability: f64,
    remote: BellKind,
    fidelity: f64,
    remote_agreement: f64,
}

fn swap(shots: u64, seed: u64) -> Result<Section, CliError> {
    let map = swap_outcome_map()?;
    let runs = (0..shots)
        .into_par_iter()
        .map(|shot| run_entanglement_swap_with_map(&map, &mut ShotStream::for_shot(seed, shot)).map(|r| (shot, r)))
        .collect::<crate::Result<Vec<_>>>()?;
    let rows: Vec<SwapShot> = runs
        .iter()
        .map(|(shot, r)| SwapShot {
            shot: *shot,
            outcome: r.outcome,
            probability: r.probability,
            remote: r.predicted_remote,
            fidelity: r.fidelity,
            remote_agreement: r.remote_agreement,
        })
        .collect();
    let counts = bell_counts(rows.iter().map(|r| r.outcome));
    let fit = uniform_bell_fit(&counts);
    let distinct: std::collections::BTreeSet<_> = map.values().collect();
    let mut invariants = Invariants::new();
    invariants.insert(
        "remote-fidelity",
        Check::within(1.0 - rows.iter().map(|r| r.fidelity).fold(1.0, f64::min), 1e-10),
    );
    invariants.insert(
        "shadow-mediation",
        Check::within(1.0 - rows.iter().map(|r| r.remote_agreement).fold(1.0, f64::min), 1e-10),
    );
    invariants.insert(
        "mirror",
        Check::within(runs.iter().map(|(_, r)| r.max_mirror_deviation).fold(0.0, f64::max), 1e-12),
    );
    invariants.insert("outcome-bijection", Check::within((4 - distinct.len()) as f64, 0.0));
    invariants.insert("outcome-frequencies", Check::p_value(fit.p_value));
    invariants.insert("outcome-frequencies-3-sigma", Check::within(max_z_score(&counts, shots, 0.25), 3.0));
    Ok(Section {
        results: json!({
            "outcome_map": to_value(&map),
            "outcome_counts": to_value(&counts),
            "chi_square": to_value(&fit),
            "shots": to_value(&rows),
        }),
        rows: rows.iter().map(to_value).collect(),
        invariants,
        errata: findings(&["swap-branches"])?,
    })
}

#[derive(Serialize)]
struct BellShot {
    shot: u64,
    outcome: BellKind,
    probability: f64,
}

fn bell(args: &BellArgs, shots: u64, seed: u64) -> Result<Section, CliError> {
    let state = DualRegister::bell_pair(args.kind);
    let probabilities = bell_probabilities(&state, (0, 1))?;
    let mut gram = 0.0f64;
    for a in BellKind::ALL {
        for b in BellKind::ALL {
            let overlap = DualRegister::bell_pair(a).inner(&DualRegister::bell_pair(b))?;
            let expect = if a == b { 1.0 } else { 0.0 };
            gram = gram.max((overlap - expect).norm());
        }
    }
    let records = (0..shots)
        .into_par_iter()
        .map(|shot| bell_measure(&state, (0, 1), &mut ShotStream::for_shot(seed, shot)).map(|r| (shot, r)))
        .collect::<crate::Result<Vec<_>>>()?;
    let rows: Vec<BellShot> = records
        .iter()
        .map(|(shot, r)| BellShot {
            shot: *shot,
            outcome: match r.outcome {
                Outcome::Bell(k) => k,
                Outcome::Qubit(_) => unreachable!("Bell measurement yields a Bell outcome"),
            },
            probability: r.probability,
        })
        .collect();
    let counts = bell_counts(rows.iter().map(|r| r.outcome));
    let mirror = records
        .iter()
        .map(|(_, r)| r.post_state.mirror_deviation())
        .fold(state.mirror_deviation(), f64::max);
    let mut invariants = Invariants::new();
    invariants.insert("norm", Check::within((state.norm() - 1.0).abs(), 1e-12));
    invariants.insert("gram-identity", Check::within(gram, 1e-12));
    invariants.insert(
        "eigen-outcome",
        Check::within((shots - counts[&args.kind]) as f64, 0.0),
    );
    invariants.insert("mirror", Check::within(mirror, 1e-12));
    let amplitudes: Vec<[f64; 2]> = state.primary().iter().map(|a| [a.re, a.im]).collect();
    let probabilities: BTreeMap<BellKind, f64> = probabilities.into_iter().collect();
    Ok(Section {
        results: json!({
            "kind": args.kind,
            "amplitudes": amplitudes,
            "probabilities": to_value(&probabilities),
            "outcome_counts": to_value(&counts),
        }),
        rows: rows.iter().map(to_value).collect(),
        invariants,
        errata: findings(&["bell-pair-prefactor"])?,
    })
}

fn readout(shots: u64, seed: u64) -> Result<Section, CliError> {
    let (rows, summary) = entangled_readout_demo(shots, seed)?;
    let up = summary.local_counts[0] as f64 / shots as f64;
    let mut invariants = Invariants::new();
    invariants.insert("correlation", Check::within((summary.correlation - 1.0).abs(), 0.0));
    invariants.insert("remote-fidelity", Check::within(1.0 - summary.min_remote_fidelity, 1e-10));
    invariants.insert("mirror", Check::within(summary.max_mirror_deviation, 1e-12));
    invariants.insert(
        "local-marginal-3-sigma",
        Check::within((up - 0.5).abs() / binomial_sigma(shots, 0.5), 3.0),
    );
    Ok(Section {
        results: json!({ "summary": to_value(&summary), "shots": to_value(&rows) }),
        rows: rows.iter().map(to_value).collect(),
        invariants,
        errata: Vec::new(),
    })
}

fn product(shots: u64, seed: u64) -> Result<Section, CliError> {
    let (rows, summary) = product_state_demo(shots, seed)?;
    let mut invariants = Invariants::new();
    invariants.insert("tvd-z", Check::within(summary.tvd_z, summary.tvd_threshold));
    invariants.insert("tvd-x", Check::within(summary.tvd_x, summary.tvd_threshold));
    invariants.insert("remote-fidelity", Check::within(1.0 - summary.min_remote_fidelity, 1e-10));
    invariants.insert("mirror", Check::within(summary.max_mirror_deviation, 1e-12));
    Ok(Section {
        results: json!({ "summary": to_value(&summary), "shots": to_value(&rows) }),
        rows: rows.iter().map(to_value).collect(),
        invariants,
        errata: Vec::new(),
    })
}

/// Largest Fock-space dimension the algebra command will build.
pub const MAX_ALGEBRA_DIMENSION: usize = 20_000;

fn algebra(args: &AlgebraArgs) -> Result<Section, CliError> {
    require((1..=6).contains(&args.modes), "modes", "must be between 1 and 6")?;
    let grid = if args.fermion {
        ModeGrid::fermionic(args.modes).map_err(invalid("modes"))?
    } else {
        require((1..=8).contains(&args.nmax), "nmax", "must be between 1 and 8")?;
        ModeGrid::bosonic(args.modes, args.nmax).map_err(invalid("nmax"))?
    };
    require(
        grid.dimension() <= MAX_ALGEBRA_DIMENSION,
        "nmax",
        &format!(
            "Fock dimension {} exceeds {MAX_ALGEBRA_DIMENSION}; lower --modes or --nmax",
            grid.dimension()
        ),
    )?;
    let report = algebra_report(&grid)?;
    let factors = ladder_factors(&grid, 0)?;
    let ladder = factors
        .iter()
        .enumerate()
        .map(|(n, f)| (f - ((n + 1) as f64).sqrt()).abs())
        .fold(0.0, f64::max);
    let mut invariants = Invariants::new();
    invariants.insert("algebra-residual", Check::within(report.max_residual, 1e-12));
    invariants.insert("ladder-factors", Check::within(ladder, 1e-12));
    Ok(Section {
        results: json!({
            "dimension": grid.dimension(),
            "report": to_value(&report),
            "ladder_factors": factors,
        }),
        rows: report.entries.iter().map(to_value).collect(),
        invariants,
        errata: findings(&["ladder-double-factor"])?,
    })
}

#[derive(Serialize)]
struct TrajectorySample {
    step: usize,
    t: f64,
    norm: f64,
    mean: f64,
    width: f64,
    mirror_deviation: f64,
    /// Closed-form free-packet width, when the potential is zero.
    analytic_width: Option<f64>,
}

fn packet(points: usize, x_min: f64, x_max: f64, mass: f64, x0: f64, sigma: f64, k0: f64) -> Result<WaveGrid, CliError> {
    require(sigma.is_finite() && sigma > 0.0, "sigma", "must be positive")?;
    require(x0.is_finite(), "x0", "must be finite")?;
    WaveGrid::gaussian(x_min, x_max, points, mass, x0, sigma, k0).map_err(|e| {
        let flag = match e {
            Error::TooFewPoints(_) => "points",
            Error::InvalidDomain(..) => "x-min",
            Error::InvalidMass => "mass",
            _ => "sigma",
        };
        invalid(flag)(e)
    })
}

fn evolve(args: &EvolveArgs) -> Result<Section, CliError> {
    require(args.k0.is_finite(), "k0", "must be finite")?;
    require(args.record_every >= 1, "record-every", "must be at least 1")?;
    let grid = packet(args.points, args.x_min, args.x_max, args.mass, args.x0, args.sigma, args.k0)?
        .with_boundary(args.boundary.into());
    let potential = match args.potential {
        PotentialKind::Free => Potential::zero(grid.points()),
        PotentialKind::Harmonic => {
            require(args.omega.is_finite(), "omega", "must be finite")?;
            Potential::harmonic(&grid, args.omega)?
        }
    };
    let propagator = Propagator::new(&grid, &potential, args.dt).map_err(invalid("dt"))?;
    let analytic = |t: f64| match args.potential {
        PotentialKind::Free => {
            let s = args.sigma;
            Some(s * (1.0 + (t / (2.0 * args.mass * s * s)).powi(2)).sqrt())
        }
        PotentialKind::Harmonic => None,
    };
    let sample = |step: usize, g: &WaveGrid| TrajectorySample {
        step,
        t: g.t(),
        norm: g.norm_sq(),
        mean: g.mean_position(),
        width: g.width(),
        mirror_deviation: g.mirror_deviation(),
        analytic_width: analytic(g.t()),
    };
    let mut samples = vec![sample(0, &grid)];
    let mut state = grid.clone();
    let mut done = 0;
    while done < args.steps {
        let chunk = args.record_every.min(args.steps - done);
        state = propagator.advance(&state, chunk).map_err(invalid("dt"))?;
        done += chunk;
        samples.push(sample(done, &state));
    }
    let mut invariants = Invariants::new();
    invariants.insert(
        "norm-drift",
        Check::within(samples.iter().map(|s| (s.norm - 1.0).abs()).fold(0.0, f64::max), 1e-8),
    );
    invariants.insert(
        "mirror",
        Check::within(samples.iter().map(|s| s.mirror_deviation).fold(0.0, f64::max), 1e-10),
    );
    let last = samples.last().expect("initial sample");
    if let Some(expect) = last.analytic_width {
        invariants.insert("free-width", Check::within((last.width / expect - 1.0).abs(), 0.01));
    }
    Ok(Section {
        results: json!({
            "dx": grid.dx(),
            "final_time": state.t(),
            "trajectory": to_value(&samples),
        }),
        rows: samples.iter().map(to_value).collect(),
        invariants,
        errata: Vec::new(),
    })
}

#[derive(Serialize)]
struct CollapseShot {
    shot: u64,
    zone: usize,
}

fn collapse(args: &CollapseArgs, shots: u64, seed: u64) -> Result<Section, CliError> {
    let grid = packet(args.points, args.x_min, args.x_max, 1.0, args.x0, args.sigma, 0.0)?;
    let partition = ZonePartition::equal(&grid, args.zones).map_err(invalid("zones"))?;
    let expansion = zone_expansion(&grid, &partition)?;
    let probabilities: Vec<f64> = expansion.coefficients.iter().map(|c| c.norm_sqr()).collect();

    // Every zone's collapsed state, checked once.
    let mut confinement = 0.0f64;
    let mut norm_error = 0.0f64;
    let mut mirror = grid.mirror_deviation();
    let mut idempotence = 0.0f64;
    for zone in 0..partition.zone_count() {
        if probabilities[zone] == 0.0 {
            continue;
        }
        let collapsed = collapse_onto(&grid, &partition, zone)?;
        let range = partition.zone_range(zone);
        for (i, a) in collapsed.primary().iter().enumerate() {
            if !range.contains(&i) {
                confinement = confinement.max(a.norm());
            }
        }
        norm_error = norm_error.max((collapsed.norm_sq() - 1.0).abs());
        mirror = mirror.max(collapsed.mirror_deviation());
        let again = collapse_onto(&collapsed, &partition, zone)?;
        let weights = zone_expansion(&collapsed, &partition)?.coefficients;
        let elsewhere: f64 = weights
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != zone)
            .map(|(_, c)| c.norm_sqr())
            .sum();
        let change = again
            .primary()
            .iter()
            .zip(collapsed.primary())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        idempotence = idempotence.max(change).max(elsewhere);
    }

    let detections = (0..shots)
        .into_par_iter()
        .map(|shot| {
            let (zone, collapsed) = collapse_detect(&grid, &partition, &mut ShotStream::for_shot(seed, shot))?;
            Ok((CollapseShot { shot, zone }, collapsed.mirror_deviation()))
        })
        .collect::<crate::Result<Vec<_>>>()?;
    let mut counts = vec![0u64; partition.zone_count()];
    for (d, m) in &detections {
        counts[d.zone] += 1;
        mirror = mirror.max(*m);
    }
    let fit = chi_square_test(&counts, &probabilities);
    let mut invariants = Invariants::new();
    invariants.insert(
        "coefficient-sum",
        Check::within((probabilities.iter().sum::<f64>() - 1.0).abs(), 1e-10),
    );
    invariants.insert("confinement", Check::within(confinement, 0.0));
    invariants.insert("collapsed-norm", Check::within(norm_error, 1e-12));
    invariants.insert("idempotence", Check::within(idempotence, 1e-12));
    invariants.insert("mirror", Check::within(mirror, 1e-10));
    invariants.insert("zone-frequencies", Check::p_value(fit.p_value));
    let rows: Vec<CollapseShot> = detections.into_iter().map(|(d, _)| d).collect();
    Ok(Section {
        results: json!({
            "boundaries": partition.boundaries(),
            "volumes": partition.volumes(),
            "probabilities": probabilities,
            "counts": counts,
            "frequencies": frequencies(&counts),
            "chi_square": to_value(&fit),
            "shots": to_value(&rows),
        }),
        rows: rows.iter().map(to_value).collect(),
        invariants,
        errata: findings(&["zone-expansion-coefficients"])?,
    })
}

fn doubleslit(args: &SlitArgs, shots: u64, seed: u64) -> Result<Section, CliError> {
    let geometry = SlitGeometry {
        separation: args.separation,
        width: args.width,
        screen_distance: args.distance,
        wavelength: args.wavelength,
    };
    let flag = |e: Error| {
        let flag = match &e {
            Error::DegenerateGeometry(m) if m.contains("bins") => "bins",
            Error::DegenerateGeometry(m) if m.contains("overlap") => "width",
            Error::DegenerateGeometry(m) if m.contains("far") => "distance",
            Error::DegenerateGeometry(m) if m.contains("grid points") => "width",
            _ => "separation",
        };
        invalid(flag)(e)
    };
    geometry.validate().map_err(flag)?;
    let mode = if args.single { SlitMode::Single } else { SlitMode::Double };
    let h = double_slit_accumulate(&geometry, mode, shots, args.bins, seed).map_err(flag)?;
    let mut invariants = Invariants::new();
    invariants.insert("histogram-fit", Check::p_value(h.chi_square.p_value));
    match mode {
        SlitMode::Double => {
            let rel = (h.visibility - h.analytic_visibility).abs() / h.analytic_visibility.abs();
            invariants.insert("visibility", Check::within(rel, 0.02));
        }
        SlitMode::Single => {
            invariants.insert("no-fringes", Check::within(h.visibility.abs(), 0.05));
        }
    }
    invariants.insert("norm-drift", Check::within(h.norm_drift, 1e-8));
    invariants.insert("mirror", Check::within(h.max_mirror_deviation, 1e-10));
    let rows: Vec<Value> = (0..h.screen.bins)
        .map(|b| {
            json!({
                "bin": b,
                "centre": h.screen.centre(b),
                "count": h.counts[b],
                "analytic_probability": h.analytic_probabilities[b],
                "simulated_probability": h.simulated_probabilities[b],
            })
        })
        .collect();
    Ok(Section {
        results: json!({ "fringe_period": geometry.fringe_period(), "histogram": to_value(&h) }),
        rows,
        invariants,
        errata: Vec::new(),
    })
}

fn erratum() -> Result<Section, CliError> {
    let report = erratum_report()?;
    let mut invariants = Invariants::new();
    invariants.insert(
        "teleportation-reassembly",
        Check::within(report.teleportation.reassembly_residual, 1e-12),
    );
    invariants.insert("swap-reassembly", Check::within(report.swap.reassembly_residual, 1e-12));
    invariants.insert(
        "deterministic",
        Check::within(if erratum_report()? == report { 0.0 } else { 1.0 }, 0.0),
    );
    Ok(Section {
        results: to_value(&report),
        rows: report.findings.iter().map(to_value).collect(),
        invariants,
        errata: report.findings,
    })
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) if n.is_f64() => csv_float(n.as_f64().unwrap_or(f64::NAN)),
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn render_csv(rows: &[Value]) -> Result<String, CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = match rows.first() {
        Some(Value::Object(map)) => map.keys().cloned().collect(),
        _ => Vec::new(),
    };
    writer.write_record(&header).map_err(|e| CliError::Internal(e.to_string()))?;
    for row in rows {
        let record: Vec<String> = header.iter().map(|k| csv_cell(&row[k.as_str()])).collect();
        writer.write_record(&record).map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let bytes = writer.into_inner().map_err(|e| CliError::Internal(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV of UTF-8 fields"))
}

/// Execute `config` and render its document without writing it anywhere.
pub fn run(config: &RunConfig) -> Result<RunOutput, CliError> {
    require(config.shots >= 1, "shots", "must be at least 1")?;
    let (shots, seed) = (config.shots, config.seed);
    let section = match &config.command {
        Command::Teleport(a) => teleport(a, shots, seed)?,
        Command::Swap => swap(shots, seed)?,
        Command::Bell(a) => bell(a, shots, seed)?,
        Command::Readout => readout(shots, seed)?,
        Command::Product => product(shots, seed)?,
        Command::Algebra(a) => algebra(a)?,
        Command::Evolve(a) => evolve(a)?,
        Command::Collapse(a) => collapse(a, shots, seed)?,
        Command::Doubleslit(a) => doubleslit(a, shots, seed)?,
        Command::Erratum => erratum()?,
    };
    let exit_code = if section.invariants.values().all(|c| c.passed) { 0 } else { 1 };
    let document = match config.output_format {
        OutputFormat::Json => to_json(&Document {
            config,
            results: &section.results,
            invariants: &section.invariants,
            errata: &section.errata,
        })
        .map_err(|e| CliError::Internal(e.to_string()))?,
        OutputFormat::Csv => render_csv(&section.rows)?,
    };
    Ok(RunOutput {
        exit_code,
        document,
        invariants: section.invariants,
    })
}

/// Parse `args`, run, write the document and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let output = match run(&config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let written = match &config.output_path {
        Some(path) => std::fs::write(path, &output.document),
        None => std::io::stdout().lock().write_all(output.document.as_bytes()),
    };
    if let Err(e) = written {
        let e = CliError::Io(e.to_string());
        eprintln!("error: {e}");
        return e.exit_code();
    }
    for (name, check) in output.invariants.iter().filter(|(_, c)| !c.passed) {
        eprintln!("invariant violated: {name} (residual {:e})", check.residual);
    }
    output.exit_code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(args: &[&str]) -> RunConfig {
        RunConfig::try_parse_from(std::iter::once("qv-shadow").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn parses_complex_amplitudes_and_globals() {
        let c = config(&["teleport", "--alpha", "0.6", "--beta", "0.8i", "--shots", "100", "--seed", "7"]);
        assert_eq!(c.shots, 100);
        assert_eq!(c.seed, 7);
        match c.command {
            Command::Teleport(a) => {
                assert_eq!(a.beta, C64::new(0.0, 0.8));
                assert_eq!(a.resource, BellKind::PhiMinus);
            }
            _ => panic!("wrong subcommand"),
        }
        let c = config(&["teleport", "--alpha", "-0.6+0.1i"]);
        assert!(matches!(c.command, Command::Teleport(a) if a.alpha == C64::new(-0.6, 0.1)));
    }

    #[test]
    fn config_echo_has_subcommand_tag() {
        let v = to_value(&config(&["algebra", "--modes", "2"]));
        assert_eq!(v["subcommand"], "algebra");
        assert_eq!(v["modes"], 2);
        assert!(v.get("output_path").is_none());
    }

    #[test]
    fn invalid_flags_name_the_flag() {
        let err = run(&config(&["algebra", "--modes", "9"])).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("--modes"));
        let err = run(&config(&["evolve", "--dt", "0"])).unwrap_err();
        assert!(err.to_string().contains("--dt"), "{err}");
        let err = run(&config(&["readout", "--shots", "0"])).unwrap_err();
        assert!(err.to_string().contains("--shots"));
        let err = run(&config(&["doubleslit", "--width", "0.4"])).unwrap_err();
        assert!(err.to_string().contains("--width"), "{err}");
        let err = run(&config(&["teleport", "--alpha", "0", "--beta", "0"])).unwrap_err();
        assert!(err.to_string().contains("--alpha"));
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(main_with_args(["qv-shadow", "nonsense"]), 2);
        assert_eq!(main_with_args(["qv-shadow", "teleport", "--beta", "x"]), 2);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let out = run(&config(&["readout", "--shots", "5", "--format", "csv"])).unwrap();
        let lines: Vec<&str> = out.document.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[0], "local,remote,remote_fidelity,shot");
    }
}
