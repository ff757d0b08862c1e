//! Projective measurements with simultaneous shadow collapse.
//!
//! A measurement conditions both registers on the outcome and returns a
//! fresh register; the input is never mutated. The state of the unmeasured
//! qubits is read out twice: once by conditioning the shadow register, once by
//! conditioning the particle register. The two must agree.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::register::{l2_norm, qubit_mask, BellKind, DualRegister};
use crate::rng::{sample_index, ShotStream};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Orthonormal single-qubit basis; `vectors[k]` is the ket for outcome `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitBasis {
    vectors: [[C64; 2]; 2],
}

impl QubitBasis {
    pub fn new(first: [C64; 2], second: [C64; 2]) -> Result<Self> {
        let dot = |a: &[C64; 2], b: &[C64; 2]| a[0].conj() * b[0] + a[1].conj() * b[1];
        let deviation = [
            (dot(&first, &first) - 1.0).norm(),
            (dot(&second, &second) - 1.0).norm(),
            dot(&first, &second).norm(),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        if !(deviation <= 1e-10) {
            return Err(Error::NotOrthonormal(deviation));
        }
        Ok(Self {
            vectors: [first, second],
        })
    }

    pub fn z() -> Self {
        let (o, z) = (C64::new(1.0, 0.0), ZERO);
        Self {
            vectors: [[o, z], [z, o]],
        }
    }

    /// `|+⟩, |−⟩`
    pub fn x() -> Self {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self {
            vectors: [[h, h], [h, -h]],
        }
    }

    /// Basis whose first ket has Bloch angles `(theta, phi)`.
    pub fn from_bloch(theta: f64, phi: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        let e = C64::from_polar(1.0, phi);
        Self {
            vectors: [[C64::new(c, 0.0), e * s], [-e.conj() * s, C64::new(c, 0.0)]],
        }
    }

    pub fn vectors(&self) -> &[[C64; 2]; 2] {
        &self.vectors
    }

    pub fn ket(&self, outcome: u8) -> DualRegister {
        let v = self.vectors[outcome as usize & 1];
        DualRegister::from_amplitudes(&v, 1).expect("basis kets are normalized")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum Outcome {
    /// Index into the measured [`QubitBasis`].
    Qubit(u8),
    Bell(BellKind),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub outcome: Outcome,
    pub probability: f64,
    pub post_state: DualRegister,
    /// Unmeasured qubits, read from the shadow register. `None` when every
    /// qubit was measured.
    pub remote_state_via_shadow: Option<DualRegister>,
    pub remote_state_direct: Option<DualRegister>,
}

impl MeasurementRecord {
    /// Fidelity between the shadow-mediated and direct remote states.
    pub fn remote_agreement(&self) -> Option<f64> {
        match (&self.remote_state_via_shadow, &self.remote_state_direct) {
            (Some(a), Some(b)) => a.fidelity(b).ok(),
            _ => None,
        }
    }
}

/// Amplitudes of the unmeasured qubits after projecting `qubits` onto `bra`.
/// Remaining qubits keep their relative order.
fn condition(v: &[C64], n: usize, qubits: &[usize], ket: &[C64]) -> Vec<C64> {
    let k = qubits.len();
    let remaining: Vec<usize> = (0..n).filter(|q| !qubits.contains(q)).collect();
    let rest = remaining.len();
    (0..1usize << rest)
        .map(|r| {
            let base: usize = (0..rest)
                .filter(|&b| r & (1 << (rest - 1 - b)) != 0)
                .map(|b| qubit_mask(n, remaining[b]))
                .sum();
            (0..1usize << k)
                .map(|s| {
                    let off: usize = (0..k)
                        .filter(|&b| s & (1 << (k - 1 - b)) != 0)
                        .map(|b| qubit_mask(n, qubits[b]))
                        .sum();
                    ket[s].conj() * v[base | off]
                })
                .sum()
        })
        .collect()
}

/// Inverse of [`condition`]: place `ket` on `qubits` and `rest` on the others.
fn embed(n: usize, qubits: &[usize], ket: &[C64], rest: &[C64]) -> Vec<C64> {
    let k = qubits.len();
    let remaining: Vec<usize> = (0..n).filter(|q| !qubits.contains(q)).collect();
    let m = remaining.len();
    let mut out = vec![ZERO; 1 << n];
    for (r, &a) in rest.iter().enumerate() {
        let base: usize = (0..m)
            .filter(|&b| r & (1 << (m - 1 - b)) != 0)
            .map(|b| qubit_mask(n, remaining[b]))
            .sum();
        for (s, &b) in ket.iter().enumerate() {
            let off: usize = (0..k)
                .filter(|&bit| s & (1 << (k - 1 - bit)) != 0)
                .map(|bit| qubit_mask(n, qubits[bit]))
                .sum();
            out[base | off] = b * a;
        }
    }
    out
}

fn project(state: &DualRegister, qubits: &[usize], ket: &[C64], outcome: Outcome) -> Result<MeasurementRecord> {
    let n = state.qubit_count();
    let from_primary = condition(state.primary(), n, qubits, ket);
    let from_shadow = condition(state.shadow(), n, qubits, ket);
    let weight = l2_norm(&from_primary);
    let probability = weight * weight;
    if !(weight > 1e-150) {
        return Err(Error::ImpossibleOutcome);
    }
    let shadow_weight = l2_norm(&from_shadow);
    if !(shadow_weight > 1e-150) {
        return Err(Error::ImpossibleOutcome);
    }
    let rest_primary: Vec<C64> = from_primary.iter().map(|a| a / weight).collect();
    let rest_shadow: Vec<C64> = from_shadow.iter().map(|a| a / shadow_weight).collect();
    let post_state = DualRegister::from_parts(
        n,
        embed(n, qubits, ket, &rest_primary),
        embed(n, qubits, ket, &rest_shadow),
    );
    let rest = n - qubits.len();
    let (via_shadow, direct) = if rest == 0 {
        (None, None)
    } else {
        (
            Some(DualRegister::from_amplitudes(&rest_shadow, rest)?),
            Some(DualRegister::from_amplitudes(&rest_primary, rest)?),
        )
    };
    Ok(MeasurementRecord {
        outcome,
        probability: probability.min(1.0),
        post_state,
        remote_state_via_shadow: via_shadow,
        remote_state_direct: direct,
    })
}

fn outcome_weight(state: &DualRegister, qubits: &[usize], ket: &[C64]) -> f64 {
    let v = condition(state.primary(), state.qubit_count(), qubits, ket);
    v.iter().map(|a| a.norm_sqr()).sum()
}

pub fn born_probabilities(state: &DualRegister, qubit: usize, basis: &QubitBasis) -> Result<(f64, f64)> {
    state.check_qubit(qubit)?;
    let p0 = outcome_weight(state, &[qubit], &basis.vectors[0]);
    let p1 = outcome_weight(state, &[qubit], &basis.vectors[1]);
    Ok((p0, p1))
}

/// Condition on a chosen outcome rather than sampling one.
pub fn project_qubit(state: &DualRegister, qubit: usize, basis: &QubitBasis, outcome: u8) -> Result<MeasurementRecord> {
    state.check_qubit(qubit)?;
    let outcome = outcome & 1;
    project(state, &[qubit], &basis.vectors[outcome as usize], Outcome::Qubit(outcome))
}

pub fn projective_measure(
    state: &DualRegister,
    qubit: usize,
    basis: &QubitBasis,
    rng: &mut ShotStream,
) -> Result<MeasurementRecord> {
    let (p0, p1) = born_probabilities(state, qubit, basis)?;
    let outcome = sample_index(&[p0, p1], rng.uniform()).ok_or(Error::ZeroVector)? as u8;
    project_qubit(state, qubit, basis, outcome)
}

fn check_pair(state: &DualRegister, pair: (usize, usize)) -> Result<()> {
    if state.qubit_count() < 2 {
        return Err(Error::TooFewQubits {
            needed: 2,
            count: state.qubit_count(),
        });
    }
    state.check_qubit(pair.0)?;
    state.check_qubit(pair.1)?;
    if pair.0 == pair.1 {
        return Err(Error::DuplicateTargets);
    }
    Ok(())
}

/// Born probabilities of the four Bell outcomes on `pair`, in [`BellKind::ALL`] order.
pub fn bell_probabilities(state: &DualRegister, pair: (usize, usize)) -> Result<[(BellKind, f64); 4]> {
    check_pair(state, pair)?;
    let qubits = [pair.0, pair.1];
    Ok(BellKind::ALL.map(|k| (k, outcome_weight(state, &qubits, &k.amplitudes()))))
}

pub fn project_bell(state: &DualRegister, pair: (usize, usize), kind: BellKind) -> Result<MeasurementRecord> {
    check_pair(state, pair)?;
    project(state, &[pair.0, pair.1], &kind.amplitudes(), Outcome::Bell(kind))
}

pub fn bell_measure(state: &DualRegister, pair: (usize, usize), rng: &mut ShotStream) -> Result<MeasurementRecord> {
    let probs = bell_probabilities(state, pair)?;
    let weights = probs.map(|(_, p)| p);
    let index = sample_index(&weights, rng.uniform()).ok_or(Error::ZeroVector)?;
    project_bell(state, pair, probs[index].0)
}
