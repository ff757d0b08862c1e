//! One-dimensional wave functions with a shadow copy.
//!
//! `ψ` and `ψ̄` obey the same Schrödinger equation, so every propagator is
//! applied to both vectors. Time stepping uses the Cayley form
//! `(1 + iHΔt/2) ψ' = (1 − iHΔt/2) ψ`, which is unitary for Hermitian `H` and
//! unconditionally stable. The kinetic term uses the fourth-order five-point
//! Laplacian.

use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{sample_index, ShotStream};
use crate::stats::{chi_square_test, ChiSquareTest};

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Periodic,
    HardWall,
}

/// `ψ(x, t) | ψ̄(x, t)` sampled at `x_i = x_min + i·dx`, `dx = (x_max − x_min)/points`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveGrid {
    x_min: f64,
    x_max: f64,
    points: usize,
    psi_primary: Vec<C64>,
    psi_shadow: Vec<C64>,
    t: f64,
    mass: f64,
    boundary: Boundary,
}

fn check_geometry(x_min: f64, x_max: f64, points: usize, mass: f64) -> Result<()> {
    if points < 16 {
        return Err(Error::TooFewPoints(points));
    }
    if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
        return Err(Error::InvalidDomain(x_min, x_max));
    }
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::InvalidMass);
    }
    Ok(())
}

impl WaveGrid {
    /// Normalized grid function; the shadow is a copy.
    pub fn from_amplitudes(x_min: f64, x_max: f64, mass: f64, amplitudes: Vec<C64>) -> Result<Self> {
        let points = amplitudes.len();
        check_geometry(x_min, x_max, points, mass)?;
        let dx = (x_max - x_min) / points as f64;
        let norm = (amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * dx).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        let psi: Vec<C64> = amplitudes.iter().map(|a| a / norm).collect();
        Ok(Self {
            x_min,
            x_max,
            points,
            psi_shadow: psi.clone(),
            psi_primary: psi,
            t: 0.0,
            mass,
            boundary: Boundary::Periodic,
        })
    }

    pub fn from_fn(x_min: f64, x_max: f64, points: usize, mass: f64, f: impl Fn(f64) -> C64) -> Result<Self> {
        check_geometry(x_min, x_max, points, mass)?;
        let dx = (x_max - x_min) / points as f64;
        let amps = (0..points).map(|i| f(x_min + i as f64 * dx)).collect();
        Self::from_amplitudes(x_min, x_max, mass, amps)
    }

    /// `ψ ∝ exp(−(x−x₀)²/(4σ²) + i k₀ x)`; `σ` is the standard deviation of `|ψ|²`.
    pub fn gaussian(x_min: f64, x_max: f64, points: usize, mass: f64, x0: f64, sigma: f64, k0: f64) -> Result<Self> {
        Self::from_fn(x_min, x_max, points, mass, |x| {
            let d = x - x0;
            C64::from_polar((-d * d / (4.0 * sigma * sigma)).exp(), k0 * x)
        })
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.points as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.x(i)).collect()
    }

    pub fn primary(&self) -> &[C64] {
        &self.psi_primary
    }

    pub fn shadow(&self) -> &[C64] {
        &self.psi_shadow
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn density(&self) -> Vec<f64> {
        self.psi_primary.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `Σ |ψ_i|² dx`
    pub fn norm_sq(&self) -> f64 {
        self.density().iter().sum::<f64>() * self.dx()
    }

    pub fn mean_position(&self) -> f64 {
        let dx = self.dx();
        self.density()
            .iter()
            .enumerate()
            .map(|(i, p)| p * self.x(i) * dx)
            .sum::<f64>()
            / self.norm_sq()
    }

    /// Standard deviation of `|ψ|²`.
    pub fn width(&self) -> f64 {
        let mean = self.mean_position();
        let dx = self.dx();
        let var = self
            .density()
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let d = self.x(i) - mean;
                p * d * d * dx
            })
            .sum::<f64>()
            / self.norm_sq();
        var.sqrt()
    }

    pub fn mirror_deviation(&self) -> f64 {
        self.psi_primary
            .iter()
            .zip(&self.psi_shadow)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn same_geometry(&self, other_points: usize, other_dx: f64, mass: f64, boundary: Boundary) -> bool {
        self.points == other_points
            && (self.dx() - other_dx).abs() <= 1e-12 * other_dx.abs()
            && self.mass == mass
            && self.boundary == boundary
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    values: Vec<f64>,
}

impl Potential {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinitePotential(i));
        }
        Ok(Self { values })
    }

    pub fn zero(points: usize) -> Self {
        Self {
            values: vec![0.0; points],
        }
    }

    pub fn from_fn(grid: &WaveGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid.positions().into_iter().map(f).collect())
    }

    /// `½ m ω² x²`
    pub fn harmonic(grid: &WaveGrid, omega: f64) -> Result<Self> {
        let m = grid.mass();
        Self::from_fn(grid, |x| 0.5 * m * omega * omega * x * x)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Factorized Cayley step for a fixed grid geometry, potential and time step.
#[derive(Debug, Clone)]
pub struct Propagator {
    points: usize,
    dx: f64,
    mass: f64,
    boundary: Boundary,
    dt: f64,
    /// `H` diagonal.
    diag: Vec<f64>,
    /// Off-diagonal couplings at distance 1 and 2.
    near: f64,
    far: f64,
    /// Banded LU of `1 + iHΔt/2` without wrap-around entries; row `i` holds
    /// columns `i-2..=i+2`.
    lu: Vec<[C64; 5]>,
    /// Woodbury data for periodic corners.
    corner: Option<CornerCorrection>,
}

#[derive(Debug, Clone)]
struct CornerCorrection {
    columns: [usize; 4],
    /// `A_band⁻¹ U`, one vector per corner column.
    solved: Vec<[C64; 4]>,
    capacitance_inv: Matrix4<C64>,
}

fn band_lu(a: &mut [[C64; 5]]) {
    let n = a.len();
    for k in 0..n {
        let pivot = a[k][2];
        for i in (k + 1)..(k + 3).min(n) {
            let l = a[i][k + 2 - i] / pivot;
            a[i][k + 2 - i] = l;
            for j in (k + 1)..(k + 3).min(n) {
                let akj = a[k][j + 2 - k];
                a[i][j + 2 - i] -= l * akj;
            }
        }
    }
}

fn band_solve(lu: &[[C64; 5]], rhs: &mut [C64]) {
    let n = lu.len();
    for i in 0..n {
        let mut s = rhs[i];
        for j in i.saturating_sub(2)..i {
            s -= lu[i][j + 2 - i] * rhs[j];
        }
        rhs[i] = s;
    }
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for j in (i + 1)..(i + 3).min(n) {
            s -= lu[i][j + 2 - i] * rhs[j];
        }
        rhs[i] = s / lu[i][2];
    }
}

impl Propagator {
    pub fn new(grid: &WaveGrid, potential: &Potential, dt: f64) -> Result<Self> {
        let n = grid.points();
        if potential.values().len() != n {
            return Err(Error::PotentialLength {
                got: potential.values().len(),
                expected: n,
            });
        }
        if !dt.is_finite() || dt == 0.0 {
            return Err(Error::UnstableTimeStep(dt));
        }
        let dx = grid.dx();
        let kinetic = 1.0 / (24.0 * grid.mass() * dx * dx);
        let diag: Vec<f64> = potential.values().iter().map(|v| 30.0 * kinetic + v).collect();
        let near = -16.0 * kinetic;
        let far = kinetic;
        let h = C64::new(0.0, dt / 2.0);
        let one = C64::new(1.0, 0.0);

        let mut lu = vec![[ZERO; 5]; n];
        for (i, row) in lu.iter_mut().enumerate() {
            for (slot, offset) in row.iter_mut().zip(-2i64..=2) {
                let j = i as i64 + offset;
                if j < 0 || j >= n as i64 {
                    continue;
                }
                *slot = match offset.abs() {
                    0 => one + h * diag[i],
                    1 => h * near,
                    _ => h * far,
                };
            }
        }
        band_lu(&mut lu);

        let corner = match grid.boundary() {
            Boundary::HardWall => None,
            Boundary::Periodic => {
                // Wrapped couplings: (0,n-2),(0,n-1),(1,n-1) and their transposes.
                let columns = [0, 1, n - 2, n - 1];
                let coupling = |i: usize, j: usize| -> C64 {
                    let d = (i as i64 - j as i64).unsigned_abs() as usize;
                    let wrapped = n - d;
                    if d <= 2 {
                        ZERO
                    } else if wrapped == 1 {
                        h * near
                    } else if wrapped == 2 {
                        h * far
                    } else {
                        ZERO
                    }
                };
                let mut solved = vec![[ZERO; 4]; n];
                for (c, &col) in columns.iter().enumerate() {
                    let mut u: Vec<C64> = (0..n).map(|i| coupling(i, col)).collect();
                    band_solve(&lu, &mut u);
                    for i in 0..n {
                        solved[i][c] = u[i];
                    }
                }
                let mut cap = Matrix4::<C64>::identity();
                for (r, &row) in columns.iter().enumerate() {
                    for c in 0..4 {
                        cap[(r, c)] += solved[row][c];
                    }
                }
                let capacitance_inv = cap.try_inverse().ok_or(Error::UnstableTimeStep(dt))?;
                Some(CornerCorrection {
                    columns,
                    solved,
                    capacitance_inv,
                })
            }
        };

        Ok(Self {
            points: n,
            dx,
            mass: grid.mass(),
            boundary: grid.boundary(),
            dt,
            diag,
            near,
            far,
            lu,
            corner,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn neighbour(&self, v: &[C64], i: usize, offset: i64) -> C64 {
        let n = self.points as i64;
        let j = i as i64 + offset;
        match self.boundary {
            Boundary::Periodic => v[j.rem_euclid(n) as usize],
            Boundary::HardWall if j < 0 || j >= n => ZERO,
            Boundary::HardWall => v[j as usize],
        }
    }

    /// `H v`
    pub fn hamiltonian_apply(&self, v: &[C64]) -> Vec<C64> {
        (0..self.points)
            .map(|i| {
                v[i] * self.diag[i]
                    + (self.neighbour(v, i, -1) + self.neighbour(v, i, 1)) * self.near
                    + (self.neighbour(v, i, -2) + self.neighbour(v, i, 2)) * self.far
            })
            .collect()
    }

    /// One Cayley step in place. Linear in `v`; norm need not be one.
    pub fn step(&self, v: &mut [C64]) {
        let hv = self.hamiltonian_apply(v);
        let h = C64::new(0.0, self.dt / 2.0);
        for (x, hx) in v.iter_mut().zip(&hv) {
            *x -= h * hx;
        }
        band_solve(&self.lu, v);
        if let Some(corner) = &self.corner {
            let picked = Vector4::from_fn(|r, _| v[corner.columns[r]]);
            let y = corner.capacitance_inv * picked;
            for (x, z) in v.iter_mut().zip(&corner.solved) {
                *x -= z[0] * y[0] + z[1] * y[1] + z[2] * y[2] + z[3] * y[3];
            }
        }
    }

    /// Advance both registers of `grid` by `steps` Cayley steps.
    pub fn advance(&self, grid: &WaveGrid, steps: usize) -> Result<WaveGrid> {
        if !grid.same_geometry(self.points, self.dx, self.mass, self.boundary) {
            return Err(Error::MisalignedPartition(
                "propagator was built for a different grid".into(),
            ));
        }
        let mut primary = grid.psi_primary.clone();
        let mut shadow = grid.psi_shadow.clone();
        for step in 0..steps {
            self.step(&mut primary);
            self.step(&mut shadow);
            if let Some(index) = primary.iter().chain(&shadow).position(|a| !(a.re.is_finite() && a.im.is_finite())) {
                return Err(Error::NonFiniteAmplitude {
                    step,
                    index: index % self.points,
                });
            }
        }
        Ok(WaveGrid {
            psi_primary: primary,
            psi_shadow: shadow,
            t: grid.t + steps as f64 * self.dt,
            ..grid.clone()
        })
    }
}

/// Advance `grid` by `steps · dt` under `H = −∂²/2m + V`. Negative `dt`
/// runs the exact inverse map.
pub fn evolve(grid: &WaveGrid, potential: &Potential, dt: f64, steps: usize) -> Result<WaveGrid> {
    if steps == 0 {
        // Still validate the inputs.
        Propagator::new(grid, potential, dt)?;
        return Ok(grid.clone());
    }
    Propagator::new(grid, potential, dt)?.advance(grid, steps)
}

/// Exact free evolution by `t` in momentum space (periodic grids).
pub fn propagate_free(grid: &WaveGrid, t: f64) -> Result<WaveGrid> {
    if grid.boundary() != Boundary::Periodic {
        return Err(Error::MisalignedPartition(
            "spectral propagation needs a periodic grid".into(),
        ));
    }
    let n = grid.points();
    let dx = grid.dx();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let phases: Vec<C64> = (0..n)
        .map(|j| {
            let j = if j < n.div_ceil(2) { j as f64 } else { j as f64 - n as f64 };
            let k = 2.0 * PI * j / (n as f64 * dx);
            C64::from_polar(1.0 / n as f64, -k * k * t / (2.0 * grid.mass()))
        })
        .collect();
    let run = |v: &[C64]| {
        let mut buf = v.to_vec();
        forward.process(&mut buf);
        for (b, p) in buf.iter_mut().zip(&phases) {
            *b *= p;
        }
        inverse.process(&mut buf);
        buf
    };
    Ok(WaveGrid {
        psi_primary: run(&grid.psi_primary),
        psi_shadow: run(&grid.psi_shadow),
        t: grid.t + t,
        ..grid.clone()
    })
}

/// Contiguous grid-aligned zones `[b_k, b_{k+1})` covering the whole grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZonePartition {
    x_min: f64,
    x_max: f64,
    points: usize,
    boundaries: Vec<usize>,
}

impl ZonePartition {
    /// Zones split at the interior grid indices `cuts`.
    pub fn from_cuts(grid: &WaveGrid, cuts: &[usize]) -> Result<Self> {
        let n = grid.points();
        let mut boundaries = Vec::with_capacity(cuts.len() + 2);
        boundaries.push(0);
        for &c in cuts {
            if c == 0 || c >= n || c <= *boundaries.last().unwrap() {
                return Err(Error::MisalignedPartition(format!(
                    "cut {c} is not strictly increasing inside (0, {n})"
                )));
            }
            boundaries.push(c);
        }
        boundaries.push(n);
        if boundaries.len() < 3 {
            return Err(Error::MisalignedPartition("at least two zones are required".into()));
        }
        Ok(Self {
            x_min: grid.x_min(),
            x_max: grid.x_max(),
            points: n,
            boundaries,
        })
    }

    /// `zones` zones of (nearly) equal width.
    pub fn equal(grid: &WaveGrid, zones: usize) -> Result<Self> {
        if zones < 2 || zones > grid.points() {
            return Err(Error::MisalignedPartition(format!(
                "cannot split {} points into {zones} zones",
                grid.points()
            )));
        }
        let cuts: Vec<usize> = (1..zones).map(|k| k * grid.points() / zones).collect();
        Self::from_cuts(grid, &cuts)
    }

    /// Zones split at positions that must coincide with grid points.
    pub fn from_positions(grid: &WaveGrid, cuts: &[f64]) -> Result<Self> {
        let dx = grid.dx();
        let indices = cuts
            .iter()
            .map(|&x| {
                let f = (x - grid.x_min()) / dx;
                let i = f.round();
                if (f - i).abs() > 1e-9 || i < 0.0 {
                    Err(Error::MisalignedPartition(format!("cut at x = {x} is not a grid point")))
                } else {
                    Ok(i as usize)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_cuts(grid, &indices)
    }

    pub fn zone_count(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn zone_range(&self, zone: usize) -> std::ops::Range<usize> {
        self.boundaries[zone]..self.boundaries[zone + 1]
    }

    /// `dV_i`
    pub fn volumes(&self) -> Vec<f64> {
        let dx = (self.x_max - self.x_min) / self.points as f64;
        self.boundaries.windows(2).map(|w| (w[1] - w[0]) as f64 * dx).collect()
    }

    fn check(&self, grid: &WaveGrid) -> Result<()> {
        if self.points != grid.points() || self.x_min != grid.x_min() || self.x_max != grid.x_max() {
            Err(Error::MisalignedPartition(format!(
                "partition built for {} points on [{}, {}], grid has {} points on [{}, {}]",
                self.points,
                self.x_min,
                self.x_max,
                grid.points(),
                grid.x_min(),
                grid.x_max()
            )))
        } else {
            Ok(())
        }
    }
}

/// `ψ = Σ_i c_i φ^i` with each `φ^i` confined to zone `i` and normalized there.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneExpansion {
    pub coefficients: Vec<C64>,
    /// Full-length profiles, zero outside their zone. A zone without weight
    /// has an all-zero profile.
    pub profiles: Vec<Vec<C64>>,
}

fn zone_profiles(psi: &[C64], partition: &ZonePartition, dx: f64) -> (Vec<C64>, Vec<Vec<C64>>) {
    let mut coefficients = Vec::with_capacity(partition.zone_count());
    let mut profiles = Vec::with_capacity(partition.zone_count());
    for zone in 0..partition.zone_count() {
        let range = partition.zone_range(zone);
        let weight = psi[range.clone()].iter().map(|a| a.norm_sqr()).sum::<f64>() * dx;
        let c = weight.sqrt();
        let mut profile = vec![ZERO; psi.len()];
        if c > 0.0 {
            for i in range {
                profile[i] = psi[i] / c;
            }
        }
        coefficients.push(C64::new(c, 0.0));
        profiles.push(profile);
    }
    (coefficients, profiles)
}

pub fn zone_expansion(grid: &WaveGrid, partition: &ZonePartition) -> Result<ZoneExpansion> {
    partition.check(grid)?;
    let (coefficients, profiles) = zone_profiles(grid.primary(), partition, grid.dx());
    Ok(ZoneExpansion { coefficients, profiles })
}

/// `c_i = (Σ_{x ∈ zone i} |ψ(x)|² dx)^{1/2}`
pub fn zone_coefficients(grid: &WaveGrid, partition: &ZonePartition) -> Result<Vec<C64>> {
    zone_expansion(grid, partition).map(|e| e.coefficients)
}

/// Sample a detection zone with probability `|c_i|²` and collapse both
/// registers onto that zone's profile.
pub fn collapse_detect(grid: &WaveGrid, partition: &ZonePartition, rng: &mut ShotStream) -> Result<(usize, WaveGrid)> {
    let coefficients = zone_coefficients(grid, partition)?;
    let weights: Vec<f64> = coefficients.iter().map(|c| c.norm_sqr()).collect();
    let zone = sample_index(&weights, rng.uniform()).ok_or(Error::VanishingWeight)?;
    Ok((zone, collapse_onto(grid, partition, zone)?))
}

/// Collapse both registers onto zone `zone`.
pub fn collapse_onto(grid: &WaveGrid, partition: &ZonePartition, zone: usize) -> Result<WaveGrid> {
    partition.check(grid)?;
    let dx = grid.dx();
    let (c_primary, mut primary) = zone_profiles(grid.primary(), partition, dx);
    let (c_shadow, mut shadow) = zone_profiles(grid.shadow(), partition, dx);
    if c_primary[zone].re == 0.0 || c_shadow[zone].re == 0.0 {
        return Err(Error::VanishingWeight);
    }
    Ok(WaveGrid {
        psi_primary: primary.swap_remove(zone),
        psi_shadow: shadow.swap_remove(zone),
        ..grid.clone()
    })
}

/// Two Gaussian slits of width `width` (standard deviation of `|ψ|²`) at
/// `±separation/2`, seen on a screen `screen_distance` away by a packet of
/// wavelength `wavelength` along the beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlitGeometry {
    pub separation: f64,
    pub width: f64,
    pub screen_distance: f64,
    pub wavelength: f64,
}

impl Default for SlitGeometry {
    fn default() -> Self {
        Self {
            separation: 1.0,
            width: 0.05,
            screen_distance: 20.0,
            wavelength: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SlitMode {
    Double,
    Single,
}

/// Largest grid the double-slit accumulator will allocate.
pub const MAX_SLIT_GRID: usize = 1 << 21;

impl SlitGeometry {
    pub fn validate(&self) -> Result<()> {
        let all_positive = [self.separation, self.width, self.screen_distance, self.wavelength]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if !all_positive {
            return Err(Error::DegenerateGeometry(
                "separation, width, distance and wavelength must be positive".into(),
            ));
        }
        if self.width * 4.0 > self.separation {
            return Err(Error::DegenerateGeometry(
                "slits overlap: width must be below a quarter of the separation".into(),
            ));
        }
        if self.screen_distance < 10.0 * self.separation {
            return Err(Error::DegenerateGeometry(
                "screen must be far from the slits (distance ≥ 10 × separation)".into(),
            ));
        }
        Ok(())
    }

    /// Far-field fringe spacing `λL/d`.
    pub fn fringe_period(&self) -> f64 {
        self.wavelength * self.screen_distance / self.separation
    }

    /// Time of flight to the screen for beam momentum `2π/λ`.
    pub fn flight_time(&self, mass: f64) -> f64 {
        self.screen_distance * mass * self.wavelength / (2.0 * PI)
    }

    /// Screen-plane width `σ(T)` of one slit's spot.
    pub fn spot_width(&self, mass: f64) -> f64 {
        let tau = self.flight_time(mass) / (2.0 * mass * self.width * self.width);
        self.width * (1.0 + tau * tau).sqrt()
    }

    fn slit_centres(&self, mode: SlitMode) -> Vec<f64> {
        match mode {
            SlitMode::Double => vec![-self.separation / 2.0, self.separation / 2.0],
            SlitMode::Single => vec![self.separation / 2.0],
        }
    }
}

/// Exact free-evolution intensity at the screen for Gaussian slits,
/// up to normalization.
pub fn exact_slit_intensity(geometry: &SlitGeometry, mode: SlitMode, mass: f64, x: f64) -> f64 {
    let w2 = geometry.width * geometry.width;
    let spread = C64::new(1.0, geometry.flight_time(mass) / (2.0 * mass * w2));
    let prefactor = spread.sqrt().inv();
    geometry
        .slit_centres(mode)
        .iter()
        .map(|&a| prefactor * (-(x - a) * (x - a) / (4.0 * w2 * spread)).exp())
        .sum::<C64>()
        .norm_sqr()
}

/// Far-field (Fraunhofer) intensity `exp(−2w²k²)·cos²(πdx/λL)` with
/// `k = 2πx/λL`; the cosine factor is absent for a single slit.
pub fn far_field_intensity(geometry: &SlitGeometry, mode: SlitMode, x: f64) -> f64 {
    let scale = geometry.wavelength * geometry.screen_distance;
    let k = 2.0 * PI * x / scale;
    let envelope = (-2.0 * geometry.width * geometry.width * k * k).exp();
    match mode {
        SlitMode::Double => envelope * (PI * geometry.separation * x / scale).cos().powi(2),
        SlitMode::Single => envelope,
    }
}

/// Screen bins: width `P/16`, bin `bins/2` centred on `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScreenBins {
    pub bins: usize,
    pub bin_width: f64,
    pub left: f64,
}

pub const BINS_PER_PERIOD: usize = 16;

impl ScreenBins {
    pub fn new(geometry: &SlitGeometry, bins: usize) -> Result<Self> {
        if bins < BINS_PER_PERIOD + 2 {
            return Err(Error::DegenerateGeometry(format!(
                "at least {} bins are needed to resolve a fringe minimum",
                BINS_PER_PERIOD + 2
            )));
        }
        let bin_width = geometry.fringe_period() / BINS_PER_PERIOD as f64;
        Ok(Self {
            bins,
            bin_width,
            left: -((bins / 2) as f64 + 0.5) * bin_width,
        })
    }

    pub fn right(&self) -> f64 {
        self.left + self.bins as f64 * self.bin_width
    }

    pub fn centre(&self, bin: usize) -> f64 {
        self.left + (bin as f64 + 0.5) * self.bin_width
    }

    pub fn bin_of(&self, x: f64) -> Option<usize> {
        let f = (x - self.left) / self.bin_width;
        if f < 0.0 || f >= self.bins as f64 {
            None
        } else {
            Some(f as usize)
        }
    }
}

/// Fringe contrast `(Ī_max − Ī_min)/(Ī_max + Ī_min)`, where `Ī_max` averages
/// the bins whose centre lies within an eighth of a period of a far-field
/// maximum (`x = jP`) and `Ī_min` those near a minimum (`x = (j+½)P`).
pub fn fringe_visibility(screen: &ScreenBins, intensity: &[f64]) -> f64 {
    let per = BINS_PER_PERIOD as i64;
    let centre = (screen.bins / 2) as i64;
    let (mut hi, mut hi_n, mut lo, mut lo_n) = (0.0, 0usize, 0.0, 0usize);
    for (bin, &value) in intensity.iter().enumerate() {
        let phase = (bin as i64 - centre).rem_euclid(per);
        let from_max = phase.min(per - phase);
        let from_min = (phase - per / 2).abs();
        if 8 * from_max < per {
            hi += value;
            hi_n += 1;
        } else if 8 * from_min < per {
            lo += value;
            lo_n += 1;
        }
    }
    let (hi, lo) = (hi / hi_n.max(1) as f64, lo / lo_n.max(1) as f64);
    if hi + lo > 0.0 {
        (hi - lo) / (hi + lo)
    } else {
        0.0
    }
}

/// Probability of each screen bin under the exact intensity, normalized over
/// the screen (composite Simpson rule, 32 panels per bin).
pub fn analytic_bin_probabilities(geometry: &SlitGeometry, mode: SlitMode, mass: f64, screen: &ScreenBins) -> Vec<f64> {
    const PANELS: usize = 32;
    let raw: Vec<f64> = (0..screen.bins)
        .map(|b| {
            let a = screen.left + b as f64 * screen.bin_width;
            let h = screen.bin_width / PANELS as f64;
            let f = |x: f64| exact_slit_intensity(geometry, mode, mass, x);
            let mut s = f(a) + f(a + screen.bin_width);
            for k in 1..PANELS {
                s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|r| r / total).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FringeHistogram {
    pub mode: SlitMode,
    pub geometry: SlitGeometry,
    pub screen: ScreenBins,
    pub grid_points: usize,
    pub shots: u64,
    pub counts: Vec<u64>,
    /// Screen-bin probabilities from the propagated `|ψ|²`.
    pub simulated_probabilities: Vec<f64>,
    pub analytic_probabilities: Vec<f64>,
    pub visibility: f64,
    pub analytic_visibility: f64,
    pub chi_square: ChiSquareTest,
    pub norm_drift: f64,
    pub max_mirror_deviation: f64,
}

/// Grid for the slit problem: spacing `w/6`, wide enough that the spread
/// packet stays clear of the periodic boundary.
fn slit_grid(geometry: &SlitGeometry, mode: SlitMode, mass: f64, screen: &ScreenBins) -> Result<WaveGrid> {
    let dx = geometry.width / 6.0;
    let spot = geometry.spot_width(mass);
    let half = (geometry.separation / 2.0 + 8.0 * spot).max(screen.right().max(-screen.left) + 4.0 * spot);
    let points = ((2.0 * half / dx).ceil() as usize).next_power_of_two();
    if points > MAX_SLIT_GRID {
        return Err(Error::DegenerateGeometry(format!(
            "geometry needs {points} grid points (limit {MAX_SLIT_GRID})"
        )));
    }
    let half = points as f64 * dx / 2.0;
    let centres = geometry.slit_centres(mode);
    let w2 = geometry.width * geometry.width;
    WaveGrid::from_fn(-half, half, points, mass, |x| {
        let s: f64 = centres.iter().map(|a| (-(x - a) * (x - a) / (4.0 * w2)).exp()).sum();
        C64::new(s, 0.0)
    })
}

/// Propagate the slit superposition to the screen and accumulate `shots`
/// single detections, each drawn from `|ψ|²` with its own stream.
pub fn double_slit_accumulate(
    geometry: &SlitGeometry,
    mode: SlitMode,
    shots: u64,
    bins: usize,
    seed: u64,
) -> Result<FringeHistogram> {
    const MASS: f64 = 1.0;
    geometry.validate()?;
    if shots == 0 {
        return Err(Error::ZeroCount("shots"));
    }
    let screen = ScreenBins::new(geometry, bins)?;
    let initial = slit_grid(geometry, mode, MASS, &screen)?;
    let screen_state = propagate_free(&initial, geometry.flight_time(MASS))?;

    let density = screen_state.density();
    let on_screen: Vec<(usize, usize)> = (0..screen_state.points())
        .filter_map(|i| screen.bin_of(screen_state.x(i)).map(|b| (i, b)))
        .collect();
    let weights: Vec<f64> = on_screen.iter().map(|&(i, _)| density[i]).collect();
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in &weights {
        acc += w;
        cumulative.push(acc);
    }
    if !(acc > 0.0) {
        return Err(Error::VanishingWeight);
    }
    let mut simulated = vec![0.0; bins];
    for (&(_, b), w) in on_screen.iter().zip(&weights) {
        simulated[b] += w / acc;
    }

    let detections: Vec<usize> = (0..shots)
        .into_par_iter()
        .map(|shot| {
            let u = ShotStream::for_shot(seed, shot).uniform() * acc;
            let k = cumulative.partition_point(|&c| c <= u).min(on_screen.len() - 1);
            on_screen[k].1
        })
        .collect();
    let mut counts = vec![0u64; bins];
    for b in detections {
        counts[b] += 1;
    }

    let analytic = analytic_bin_probabilities(geometry, mode, MASS, &screen);
    let observed: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    Ok(FringeHistogram {
        mode,
        geometry: *geometry,
        screen,
        grid_points: screen_state.points(),
        shots,
        visibility: fringe_visibility(&screen, &observed),
        analytic_visibility: fringe_visibility(&screen, &analytic),
        chi_square: chi_square_test(&counts, &analytic),
        norm_drift: (screen_state.norm_sq() - 1.0).abs(),
        max_mirror_deviation: screen_state.mirror_deviation(),
        counts,
        simulated_probabilities: simulated,
        analytic_probabilities: analytic,
    })
}
