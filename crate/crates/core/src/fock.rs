//! Truncated Fock space over a finite momentum grid.
//!
//! Every state carries two amplitude maps: the particle register and its
//! shadow in the vacuum. The combined ladder operators `b = a·ā` act on both
//! maps at once, and every scalar factor is applied a single time to the
//! shared physical amplitude, so a normalized state stays normalized under
//! unitary bookkeeping and the two maps stay identical.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Occupation numbers, one entry per mode, mode 0 first.
pub type Occupation = Vec<u8>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Boson,
    Fermion,
}

impl Statistics {
    fn name(self) -> &'static str {
        match self {
            Statistics::Boson => "boson",
            Statistics::Fermion => "fermion",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeGrid {
    momenta: Vec<f64>,
    max_occupation: u8,
    statistics: Statistics,
}

impl ModeGrid {
    pub fn new(momenta: Vec<f64>, max_occupation: u8, statistics: Statistics) -> Result<Self> {
        if momenta.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if let Some(i) = momenta.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFiniteMomentum(i));
        }
        if let Some(i) = momenta.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::UnorderedMomenta(i + 1));
        }
        if max_occupation == 0 {
            return Err(Error::ZeroTruncation);
        }
        if statistics == Statistics::Fermion && max_occupation != 1 {
            return Err(Error::FermionTruncation(max_occupation));
        }
        Ok(Self {
            momenta,
            max_occupation,
            statistics,
        })
    }

    /// Evenly spaced momenta centred on zero: `p_j = (j - (M-1)/2) * spacing`.
    pub fn symmetric(
        mode_count: usize,
        spacing: f64,
        max_occupation: u8,
        statistics: Statistics,
    ) -> Result<Self> {
        let centre = (mode_count as f64 - 1.0) / 2.0;
        let momenta = (0..mode_count)
            .map(|j| (j as f64 - centre) * spacing)
            .collect();
        Self::new(momenta, max_occupation, statistics)
    }

    pub fn bosonic(mode_count: usize, max_occupation: u8) -> Result<Self> {
        Self::symmetric(mode_count, 1.0, max_occupation, Statistics::Boson)
    }

    pub fn fermionic(mode_count: usize) -> Result<Self> {
        Self::symmetric(mode_count, 1.0, 1, Statistics::Fermion)
    }

    pub fn mode_count(&self) -> usize {
        self.momenta.len()
    }

    pub fn momenta(&self) -> &[f64] {
        &self.momenta
    }

    pub fn max_occupation(&self) -> u8 {
        self.max_occupation
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    /// Dimension of the truncated space, `(N_max + 1)^M`.
    pub fn dimension(&self) -> usize {
        (self.max_occupation as usize + 1).pow(self.mode_count() as u32)
    }

    /// All occupation tuples in lexicographic order (mode 0 most significant).
    pub fn basis(&self) -> Vec<Occupation> {
        (0..self.dimension()).map(|i| self.occupation_at(i)).collect()
    }

    pub fn index_of(&self, occupation: &[u8]) -> usize {
        let base = self.max_occupation as usize + 1;
        occupation
            .iter()
            .fold(0, |acc, &n| acc * base + n as usize)
    }

    pub fn occupation_at(&self, mut index: usize) -> Occupation {
        let base = self.max_occupation as usize + 1;
        let mut occ = vec![0u8; self.mode_count()];
        for slot in occ.iter_mut().rev() {
            *slot = (index % base) as u8;
            index /= base;
        }
        occ
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.mode_count() {
            Err(Error::ModeOutOfRange {
                mode,
                count: self.mode_count(),
            })
        } else {
            Ok(())
        }
    }

    fn check_occupation(&self, occupation: &[u8]) -> Result<()> {
        if occupation.len() != self.mode_count() {
            return Err(Error::LengthMismatch {
                got: occupation.len(),
                expected: self.mode_count(),
            });
        }
        match occupation.iter().find(|&&n| n > self.max_occupation) {
            Some(&n) => Err(Error::OccupationOutOfRange {
                occupation: n,
                max: self.max_occupation,
            }),
            None => Ok(()),
        }
    }
}

/// The vacuum background `◯`. It is cloned into every state derived from it
/// and outlives any amount of annihilation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VacuumHandle {
    grid: ModeGrid,
    /// Opaque labels for additional quantum numbers of other fields.
    field_labels: Vec<String>,
}

impl VacuumHandle {
    pub fn new(grid: ModeGrid) -> Self {
        Self {
            grid,
            field_labels: Vec::new(),
        }
    }

    pub fn with_field_labels(grid: ModeGrid, labels: Vec<String>) -> Self {
        Self {
            grid,
            field_labels: labels,
        }
    }

    pub fn grid(&self) -> &ModeGrid {
        &self.grid
    }

    pub fn field_labels(&self) -> &[String] {
        &self.field_labels
    }

    pub fn state(&self) -> DualFockState {
        let mut primary = BTreeMap::new();
        primary.insert(vec![0u8; self.grid.mode_count()], C64::new(1.0, 0.0));
        DualFockState {
            vacuum: self.clone(),
            shadow: primary.clone(),
            primary,
            is_zero: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionParams {
    mass: f64,
    c: f64,
}

impl DispersionParams {
    pub fn new(mass: f64, c: f64) -> Result<Self> {
        if mass > 0.0 && c > 0.0 && mass.is_finite() && c.is_finite() {
            Ok(Self { mass, c })
        } else {
            Err(Error::InvalidDispersion)
        }
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `E_p = sqrt(p²c² + m²c⁴)`
    pub fn relativistic_energy(&self, p: f64) -> f64 {
        let c2 = self.c * self.c;
        (p * p * c2 + self.mass * self.mass * c2 * c2).sqrt()
    }

    pub fn kinetic_energy(&self, p: f64) -> f64 {
        p * p / (2.0 * self.mass)
    }
}

impl Default for DispersionParams {
    fn default() -> Self {
        Self { mass: 1.0, c: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kinematics {
    NonRelativistic,
    Relativistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ladder {
    Raise,
    Lower,
}

/// Image of one basis tuple under a single ladder operator, with its scalar
/// factor. `None` means the contribution vanishes (annihilated, Pauli-blocked
/// or pushed past the truncation).
fn ladder_image(grid: &ModeGrid, occ: &[u8], mode: usize, ladder: Ladder) -> Option<(Occupation, f64)> {
    let n = occ[mode];
    let (new_n, magnitude) = match ladder {
        Ladder::Raise if n >= grid.max_occupation => return None,
        Ladder::Raise => (n + 1, ((n as f64) + 1.0).sqrt()),
        Ladder::Lower if n == 0 => return None,
        Ladder::Lower => (n - 1, (n as f64).sqrt()),
    };
    let sign = match grid.statistics {
        Statistics::Boson => 1.0,
        // Jordan-Wigner string over lower-indexed modes.
        Statistics::Fermion => {
            let parity: u32 = occ[..mode].iter().map(|&k| k as u32).sum();
            if parity % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        }
    };
    let mut image = occ.to_vec();
    image[mode] = new_n;
    Some((image, sign * magnitude))
}

fn ladder_map(
    grid: &ModeGrid,
    amplitudes: &BTreeMap<Occupation, C64>,
    mode: usize,
    ladder: Ladder,
) -> BTreeMap<Occupation, C64> {
    amplitudes
        .iter()
        .filter_map(|(occ, &amp)| {
            ladder_image(grid, occ, mode, ladder).map(|(image, factor)| (image, amp * factor))
        })
        .collect()
}

/// A Fock-space state `Σ c_n |n⟩◯|n̄⟩` with explicit particle and shadow maps.
#[derive(Debug, Clone, PartialEq)]
pub struct DualFockState {
    vacuum: VacuumHandle,
    primary: BTreeMap<Occupation, C64>,
    shadow: BTreeMap<Occupation, C64>,
    is_zero: bool,
}

/// The vacuum state of `grid`.
pub fn vacuum(grid: &ModeGrid) -> DualFockState {
    VacuumHandle::new(grid.clone()).state()
}

impl DualFockState {
    /// Normalized superposition with the same coefficients mirrored on the
    /// shadow. Repeated tuples are summed.
    pub fn from_amplitudes<I>(grid: &ModeGrid, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Occupation, C64)>,
    {
        let mut primary: BTreeMap<Occupation, C64> = BTreeMap::new();
        for (occ, amp) in entries {
            grid.check_occupation(&occ)?;
            *primary.entry(occ).or_insert(C64::new(0.0, 0.0)) += amp;
        }
        let state = Self {
            vacuum: VacuumHandle::new(grid.clone()),
            shadow: primary.clone(),
            primary,
            is_zero: false,
        };
        state.normalized()
    }

    pub fn basis_state(grid: &ModeGrid, occupation: Occupation) -> Result<Self> {
        Self::from_amplitudes(grid, [(occupation, C64::new(1.0, 0.0))])
    }

    pub fn grid(&self) -> &ModeGrid {
        &self.vacuum.grid
    }

    pub fn vacuum(&self) -> &VacuumHandle {
        &self.vacuum
    }

    pub fn primary(&self) -> &BTreeMap<Occupation, C64> {
        &self.primary
    }

    pub fn shadow(&self) -> &BTreeMap<Occupation, C64> {
        &self.shadow
    }

    /// True for the zero vector `0·◯`, which is distinct from the vacuum state.
    pub fn is_zero(&self) -> bool {
        self.is_zero
    }

    pub fn amplitude(&self, occupation: &[u8]) -> C64 {
        self.primary
            .get(occupation)
            .copied()
            .unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn shadow_amplitude(&self, occupation: &[u8]) -> C64 {
        self.shadow
            .get(occupation)
            .copied()
            .unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn norm(&self) -> f64 {
        self.primary.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm();
        if self.is_zero || !(norm > 0.0) {
            return Err(Error::ZeroVector);
        }
        let scale = |m: &BTreeMap<Occupation, C64>| m.iter().map(|(k, v)| (k.clone(), v / norm)).collect();
        Ok(Self {
            vacuum: self.vacuum.clone(),
            primary: scale(&self.primary),
            shadow: scale(&self.shadow),
            is_zero: false,
        })
    }

    /// `⟨self|other⟩` over the particle register.
    pub fn inner(&self, other: &Self) -> C64 {
        self.primary
            .iter()
            .filter_map(|(k, a)| other.primary.get(k).map(|b| a.conj() * b))
            .sum()
    }

    /// Largest entry-wise gap between particle and shadow amplitudes.
    /// Infinite if the key sets differ.
    pub fn mirror_deviation(&self) -> f64 {
        if self.primary.len() != self.shadow.len() {
            return f64::INFINITY;
        }
        self.primary
            .iter()
            .map(|(k, a)| match self.shadow.get(k) {
                Some(b) => (a - b).norm(),
                None => f64::INFINITY,
            })
            .fold(0.0, f64::max)
    }

    /// Dense amplitude vector in the grid's lexicographic basis.
    pub fn to_dense(&self) -> Vec<C64> {
        let grid = self.grid();
        let mut out = vec![C64::new(0.0, 0.0); grid.dimension()];
        for (occ, amp) in &self.primary {
            out[grid.index_of(occ)] = *amp;
        }
        out
    }

    fn apply_ladder(&self, mode: usize, ladder: Ladder) -> Result<Self> {
        let grid = self.grid();
        grid.check_mode(mode)?;
        if self.is_zero {
            return Ok(self.clone());
        }
        let primary = ladder_map(grid, &self.primary, mode, ladder);
        let shadow = ladder_map(grid, &self.shadow, mode, ladder);
        let is_zero = primary.is_empty();
        Ok(Self {
            vacuum: self.vacuum.clone(),
            primary,
            shadow,
            is_zero,
        })
    }

    /// `b_mode†`, unnormalized. Contributions beyond the truncation are dropped.
    pub fn apply_b_dagger(&self, mode: usize) -> Result<Self> {
        self.apply_ladder(mode, Ladder::Raise)
    }

    /// `b_mode`, unnormalized. The vacuum handle survives even when every
    /// contribution is annihilated.
    pub fn apply_b(&self, mode: usize) -> Result<Self> {
        self.apply_ladder(mode, Ladder::Lower)
    }
}

/// Amplitude weight of momentum `p` in a position eigenstate at `(x, t)`.
pub fn position_weight(p: f64, x: f64, t: f64, params: &DispersionParams, kinematics: Kinematics) -> C64 {
    match kinematics {
        Kinematics::NonRelativistic => C64::from_polar(1.0, p * x - params.kinetic_energy(p) * t),
        Kinematics::Relativistic => {
            let energy = params.relativistic_energy(p);
            C64::from_polar(1.0 / (2.0 * energy).sqrt(), p * x - energy * t)
        }
    }
}

/// Single-particle state localized at `x` at time `t`, normalized over the grid.
pub fn position_create(
    grid: &ModeGrid,
    x: f64,
    t: f64,
    params: &DispersionParams,
    kinematics: Kinematics,
) -> Result<DualFockState> {
    if grid.statistics() != Statistics::Boson {
        return Err(Error::WrongStatistics { expected: "boson" });
    }
    if grid.mode_count() == 0 {
        return Err(Error::EmptyGrid);
    }
    let modes = grid.mode_count();
    let entries = grid.momenta().iter().enumerate().map(|(j, &p)| {
        let mut occ = vec![0u8; modes];
        occ[j] = 1;
        (occ, position_weight(p, x, t, params, kinematics))
    });
    DualFockState::from_amplitudes(grid, entries)
}

/// Column-sparse complex matrix over a grid basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    columns: Vec<Vec<(usize, C64)>>,
}

impl SparseOperator {
    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            columns: (0..dim).map(|j| vec![(j, C64::new(1.0, 0.0))]).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Matrix element `⟨row|A|col⟩`.
    pub fn element(&self, row: usize, col: usize) -> C64 {
        self.columns[col]
            .iter()
            .filter(|(r, _)| *r == row)
            .map(|(_, v)| *v)
            .sum()
    }

    fn apply_vec(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim];
        for (col, &x) in v.iter().enumerate() {
            if x == C64::new(0.0, 0.0) {
                continue;
            }
            for &(row, a) in &self.columns[col] {
                out[row] += a * x;
            }
        }
        out
    }

    fn apply_adjoint_vec(&self, v: &[C64]) -> Vec<C64> {
        self.columns
            .iter()
            .map(|col| col.iter().map(|&(row, a)| a.conj() * v[row]).sum())
            .collect()
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let columns = rhs
            .columns
            .iter()
            .map(|col| {
                let mut acc = vec![C64::new(0.0, 0.0); self.dim];
                let mut touched = Vec::new();
                for &(k, b) in col {
                    for &(row, a) in &self.columns[k] {
                        if acc[row] == C64::new(0.0, 0.0) {
                            touched.push(row);
                        }
                        acc[row] += a * b;
                    }
                }
                touched.sort_unstable();
                touched.dedup();
                touched.into_iter().map(|r| (r, acc[r])).collect()
            })
            .collect();
        Self {
            dim: self.dim,
            columns,
        }
    }

    /// `self + scale * rhs`
    pub fn add_scaled(&self, rhs: &Self, scale: f64) -> Self {
        let columns = self
            .columns
            .iter()
            .zip(&rhs.columns)
            .map(|(a, b)| {
                let mut merged: BTreeMap<usize, C64> = BTreeMap::new();
                for &(r, v) in a {
                    *merged.entry(r).or_default() += v;
                }
                for &(r, v) in b {
                    *merged.entry(r).or_default() += v * scale;
                }
                merged.into_iter().collect()
            })
            .collect();
        Self {
            dim: self.dim,
            columns,
        }
    }

    /// Spectral norm of the operator restricted to the given input columns,
    /// by power iteration on `A†A`.
    pub fn operator_norm_on(&self, domain: &[usize]) -> f64 {
        let frobenius: f64 = domain
            .iter()
            .flat_map(|&c| self.columns[c].iter())
            .map(|(_, v)| v.norm_sqr())
            .sum::<f64>()
            .sqrt();
        if frobenius == 0.0 || domain.is_empty() {
            return 0.0;
        }
        let embed = |w: &[C64]| {
            let mut full = vec![C64::new(0.0, 0.0); self.dim];
            for (&c, &x) in domain.iter().zip(w) {
                full[c] = x;
            }
            full
        };
        // Deterministic generic start vector.
        let mut w: Vec<C64> = (0..domain.len())
            .map(|k| C64::new(1.0 + 0.37 * ((k * 7919) % 101) as f64 / 101.0, 0.1 * (k % 13) as f64))
            .collect();
        let mut estimate = 0.0;
        for _ in 0..300 {
            let n = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if n == 0.0 {
                return 0.0;
            }
            w.iter_mut().for_each(|x| *x /= n);
            let image = self.apply_vec(&embed(&w));
            estimate = image.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            let back = self.apply_adjoint_vec(&image);
            w = domain.iter().map(|&c| back[c]).collect();
        }
        estimate.min(frobenius)
    }
}

fn ladder_operator(grid: &ModeGrid, mode: usize, ladder: Ladder) -> Result<SparseOperator> {
    grid.check_mode(mode)?;
    let vacuum = VacuumHandle::new(grid.clone());
    let columns = grid
        .basis()
        .into_iter()
        .map(|occ| {
            let ket = DualFockState {
                vacuum: vacuum.clone(),
                primary: BTreeMap::from([(occ.clone(), C64::new(1.0, 0.0))]),
                shadow: BTreeMap::from([(occ, C64::new(1.0, 0.0))]),
                is_zero: false,
            };
            let image = ket.apply_ladder(mode, ladder)?;
            Ok(image
                .primary
                .iter()
                .map(|(k, v)| (grid.index_of(k), *v))
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SparseOperator {
        dim: grid.dimension(),
        columns,
    })
}

/// Matrix of `b_mode` over the full truncated basis, built by acting on each basis ket.
pub fn lowering_operator(grid: &ModeGrid, mode: usize) -> Result<SparseOperator> {
    ladder_operator(grid, mode, Ladder::Lower)
}

/// Matrix of `b_mode†` over the full truncated basis.
pub fn raising_operator(grid: &ModeGrid, mode: usize) -> Result<SparseOperator> {
    ladder_operator(grid, mode, Ladder::Raise)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorPair {
    /// `(b_i, b_j†)`, expected bracket `δ_ij`.
    LowerRaise,
    /// `(b_i, b_j)`, expected bracket 0.
    LowerLower,
    /// `(b_i†, b_j†)`, expected bracket 0.
    RaiseRaise,
}

impl OperatorPair {
    pub const ALL: [OperatorPair; 3] = [
        OperatorPair::LowerRaise,
        OperatorPair::LowerLower,
        OperatorPair::RaiseRaise,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bracket {
    Commutator,
    Anticommutator,
}

/// Basis indices with every occupation at most `N_max - 1`.
pub fn guarded_sector(grid: &ModeGrid) -> Vec<usize> {
    let limit = grid.max_occupation().saturating_sub(1);
    grid.basis()
        .iter()
        .enumerate()
        .filter(|(_, occ)| occ.iter().all(|&n| n <= limit))
        .map(|(i, _)| i)
        .collect()
}

fn bracket_residual(grid: &ModeGrid, i: usize, j: usize, pair: OperatorPair, bracket: Bracket, domain: &[usize]) -> Result<f64> {
    let (a, b) = match pair {
        OperatorPair::LowerRaise => (lowering_operator(grid, i)?, raising_operator(grid, j)?),
        OperatorPair::LowerLower => (lowering_operator(grid, i)?, lowering_operator(grid, j)?),
        OperatorPair::RaiseRaise => (raising_operator(grid, i)?, raising_operator(grid, j)?),
    };
    let sign = match bracket {
        Bracket::Commutator => -1.0,
        Bracket::Anticommutator => 1.0,
    };
    let mut residual = a.mul(&b).add_scaled(&b.mul(&a), sign);
    if pair == OperatorPair::LowerRaise && i == j {
        residual = residual.add_scaled(&SparseOperator::identity(grid.dimension()), -1.0);
    }
    Ok(residual.operator_norm_on(domain))
}

/// `‖[b_i, b_j†] − δ_ij I‖` on the guarded sector of a bosonic grid.
pub fn commutator_residual(grid: &ModeGrid, i: usize, j: usize) -> Result<f64> {
    commutator_residual_for(grid, i, j, OperatorPair::LowerRaise)
}

pub fn commutator_residual_for(grid: &ModeGrid, i: usize, j: usize, pair: OperatorPair) -> Result<f64> {
    if grid.statistics() != Statistics::Boson {
        return Err(Error::WrongStatistics {
            expected: Statistics::Boson.name(),
        });
    }
    bracket_residual(grid, i, j, pair, Bracket::Commutator, &guarded_sector(grid))
}

/// `‖{b_i, b_j†} − δ_ij I‖` on the full space of a fermionic grid.
pub fn anticommutator_residual(grid: &ModeGrid, i: usize, j: usize) -> Result<f64> {
    anticommutator_residual_for(grid, i, j, OperatorPair::LowerRaise)
}

pub fn anticommutator_residual_for(grid: &ModeGrid, i: usize, j: usize, pair: OperatorPair) -> Result<f64> {
    if grid.statistics() != Statistics::Fermion {
        return Err(Error::WrongStatistics {
            expected: Statistics::Fermion.name(),
        });
    }
    let full: Vec<usize> = (0..grid.dimension()).collect();
    bracket_residual(grid, i, j, pair, Bracket::Anticommutator, &full)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairResidual {
    pub i: usize,
    pub j: usize,
    pub pair: OperatorPair,
    pub residual: f64,
}

/// Residuals of the canonical (anti)commutation relations for every ordered
/// mode pair and operator pairing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgebraReport {
    pub statistics: Statistics,
    pub mode_count: usize,
    pub max_occupation: u8,
    pub entries: Vec<PairResidual>,
    pub max_residual: f64,
}

pub fn algebra_report(grid: &ModeGrid) -> Result<AlgebraReport> {
    let m = grid.mode_count();
    let jobs: Vec<(usize, usize, OperatorPair)> = (0..m)
        .flat_map(|i| (0..m).flat_map(move |j| OperatorPair::ALL.into_iter().map(move |p| (i, j, p))))
        .collect();
    let entries = jobs
        .into_par_iter()
        .map(|(i, j, pair)| {
            let residual = match grid.statistics() {
                Statistics::Boson => commutator_residual_for(grid, i, j, pair)?,
                Statistics::Fermion => anticommutator_residual_for(grid, i, j, pair)?,
            };
            Ok(PairResidual { i, j, pair, residual })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_residual = entries.iter().map(|e| e.residual).fold(0.0, f64::max);
    Ok(AlgebraReport {
        statistics: grid.statistics(),
        mode_count: m,
        max_occupation: grid.max_occupation(),
        entries,
        max_residual,
    })
}

/// `⟨n+1|b†|n⟩` on `mode` for `n = 0..N_max-1`, other modes empty.
pub fn ladder_factors(grid: &ModeGrid, mode: usize) -> Result<Vec<f64>> {
    grid.check_mode(mode)?;
    (0..grid.max_occupation())
        .map(|n| {
            let mut occ = vec![0u8; grid.mode_count()];
            occ[mode] = n;
            let raised = DualFockState::basis_state(grid, occ.clone())?.apply_b_dagger(mode)?;
            occ[mode] = n + 1;
            Ok(raised.amplitude(&occ).re)
        })
        .collect()
}
