//! Multi-qubit registers paired with a shadow amplitude vector.
//!
//! Qubit 0 is the leftmost ket slot, so it maps to the most significant bit
//! of a basis index. Every operation transforms the particle vector and the
//! shadow vector separately with the same map and builds the result in one
//! step, so no observable register ever has the two out of step.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::unitarity_deviation;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BellKind {
    PsiPlus,
    PsiMinus,
    PhiPlus,
    PhiMinus,
}

impl BellKind {
    pub const ALL: [BellKind; 4] = [
        BellKind::PsiMinus,
        BellKind::PsiPlus,
        BellKind::PhiMinus,
        BellKind::PhiPlus,
    ];

    /// Amplitudes over `|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩`.
    pub fn amplitudes(self) -> [C64; 4] {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        match self {
            BellKind::PsiPlus => [ZERO, h, h, ZERO],
            BellKind::PsiMinus => [ZERO, h, -h, ZERO],
            BellKind::PhiPlus => [h, ZERO, ZERO, h],
            BellKind::PhiMinus => [h, ZERO, ZERO, -h],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            BellKind::PsiPlus => "psi-plus",
            BellKind::PsiMinus => "psi-minus",
            BellKind::PhiPlus => "phi-plus",
            BellKind::PhiMinus => "phi-minus",
        }
    }
}

impl fmt::Display for BellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for BellKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "psi-plus" | "psi+" => Ok(BellKind::PsiPlus),
            "psi-minus" | "psi-" => Ok(BellKind::PsiMinus),
            "phi-plus" | "phi+" => Ok(BellKind::PhiPlus),
            "phi-minus" | "phi-" => Ok(BellKind::PhiMinus),
            other => Err(format!(
                "unknown Bell state '{other}' (expected psi-plus, psi-minus, phi-plus or phi-minus)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualRegister {
    qubit_count: usize,
    primary: Vec<C64>,
    shadow: Vec<C64>,
}

pub(crate) fn l2_norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(v: &[C64]) -> Result<Vec<C64>> {
    let n = l2_norm(v);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(v.iter().map(|a| a / n).collect())
}

/// Bit mask of qubit `q` in an `n`-qubit index.
#[inline]
pub(crate) fn qubit_mask(n: usize, q: usize) -> usize {
    1 << (n - 1 - q)
}

impl DualRegister {
    pub fn from_amplitudes(coeffs: &[C64], qubit_count: usize) -> Result<Self> {
        if qubit_count == 0 {
            return Err(Error::TooFewQubits { needed: 1, count: 0 });
        }
        let expected = 1usize << qubit_count;
        if coeffs.len() != expected {
            return Err(Error::LengthMismatch {
                got: coeffs.len(),
                expected,
            });
        }
        let primary = normalize(coeffs)?;
        Ok(Self {
            qubit_count,
            shadow: primary.clone(),
            primary,
        })
    }

    /// Single qubit `α|↑⟩ + β|↓⟩`, normalized.
    pub fn qubit(alpha: C64, beta: C64) -> Result<Self> {
        Self::from_amplitudes(&[alpha, beta], 1)
    }

    /// Computational basis state; `bits[q]` is qubit `q` (0 = ↑, 1 = ↓).
    pub fn basis(bits: &[u8]) -> Result<Self> {
        let n = bits.len();
        let index = bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
        let mut v = vec![ZERO; 1 << n];
        v[index] = C64::new(1.0, 0.0);
        Self::from_amplitudes(&v, n)
    }

    pub fn bell_pair(kind: BellKind) -> Self {
        Self::from_amplitudes(&kind.amplitudes(), 2).expect("Bell amplitudes are normalized")
    }

    /// Assemble from raw particle and shadow vectors without renormalizing.
    pub(crate) fn from_parts(qubit_count: usize, primary: Vec<C64>, shadow: Vec<C64>) -> Self {
        debug_assert_eq!(primary.len(), 1 << qubit_count);
        debug_assert_eq!(shadow.len(), 1 << qubit_count);
        Self {
            qubit_count,
            primary,
            shadow,
        }
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn primary(&self) -> &[C64] {
        &self.primary
    }

    pub fn shadow(&self) -> &[C64] {
        &self.shadow
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.primary)
    }

    pub fn mirror_deviation(&self) -> f64 {
        self.primary
            .iter()
            .zip(&self.shadow)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.qubit_count {
            Err(Error::QubitOutOfRange {
                qubit,
                count: self.qubit_count,
            })
        } else {
            Ok(())
        }
    }

    /// Kronecker product with `self`'s qubits first.
    pub fn tensor(&self, other: &Self) -> Self {
        let kron = |a: &[C64], b: &[C64]| -> Vec<C64> {
            a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
        };
        Self {
            qubit_count: self.qubit_count + other.qubit_count,
            primary: kron(&self.primary, &other.primary),
            shadow: kron(&self.shadow, &other.shadow),
        }
    }

    /// Apply `u` (dimension `2^targets.len()`, first target most significant)
    /// to both registers.
    pub fn apply_unitary(&self, targets: &[usize], u: &DMatrix<C64>) -> Result<Self> {
        for &t in targets {
            self.check_qubit(t)?;
        }
        let mut sorted = targets.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != targets.len() {
            return Err(Error::DuplicateTargets);
        }
        let k = targets.len();
        let dim = 1usize << k;
        if u.nrows() != dim || u.ncols() != dim {
            return Err(Error::MatrixDimension {
                got: u.nrows().max(u.ncols()),
                expected: dim,
            });
        }
        let deviation = unitarity_deviation(u);
        if deviation > 1e-10 {
            return Err(Error::NotUnitary(deviation));
        }
        let n = self.qubit_count;
        let masks: Vec<usize> = targets.iter().map(|&t| qubit_mask(n, t)).collect();
        let target_mask: usize = masks.iter().sum();
        let offsets: Vec<usize> = (0..dim)
            .map(|sub| {
                (0..k)
                    .filter(|&b| sub & (1 << (k - 1 - b)) != 0)
                    .map(|b| masks[b])
                    .sum()
            })
            .collect();
        let transform = |v: &[C64]| -> Vec<C64> {
            let mut out = vec![ZERO; v.len()];
            let mut local = vec![ZERO; dim];
            for base in (0..v.len()).filter(|i| i & target_mask == 0) {
                for (slot, &off) in local.iter_mut().zip(&offsets) {
                    *slot = v[base | off];
                }
                for (r, &off) in offsets.iter().enumerate() {
                    out[base | off] = (0..dim).map(|c| u[(r, c)] * local[c]).sum();
                }
            }
            out
        };
        Ok(Self {
            qubit_count: n,
            primary: transform(&self.primary),
            shadow: transform(&self.shadow),
        })
    }

    pub fn apply_gate(&self, target: usize, u: &DMatrix<C64>) -> Result<Self> {
        self.apply_unitary(&[target], u)
    }

    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.qubit_count != other.qubit_count {
            return Err(Error::SizeMismatch(self.qubit_count, other.qubit_count));
        }
        Ok(self
            .primary
            .iter()
            .zip(&other.primary)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        self.inner(other).map(|z| z.norm_sqr())
    }
}

pub fn fidelity(a: &DualRegister, b: &DualRegister) -> Result<f64> {
    a.fidelity(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates;

    const TOL: f64 = 1e-12;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(a: &[C64], b: &[C64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() < TOL)
    }

    #[test]
    fn from_amplitudes_normalizes_and_mirrors() {
        let up = DualRegister::from_amplitudes(&[c(1.0, 0.0), c(0.0, 0.0)], 1).unwrap();
        assert!(close(up.shadow(), &[c(1.0, 0.0), c(0.0, 0.0)]));
        let plus = DualRegister::from_amplitudes(&[c(1.0, 0.0), c(1.0, 0.0)], 1).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(plus.primary(), &[c(h, 0.0), c(h, 0.0)]));
        assert_eq!(plus.mirror_deviation(), 0.0);
        let s = DualRegister::from_amplitudes(&[c(3.0, 0.0), c(0.0, 4.0)], 1).unwrap();
        assert!(close(s.primary(), &[c(0.6, 0.0), c(0.0, 0.8)]));
    }

    #[test]
    fn from_amplitudes_errors() {
        assert_eq!(
            DualRegister::from_amplitudes(&[c(0.0, 0.0); 2], 1),
            Err(Error::ZeroVector)
        );
        assert_eq!(
            DualRegister::from_amplitudes(&[c(1.0, 0.0); 3], 1),
            Err(Error::LengthMismatch { got: 3, expected: 2 })
        );
    }

    #[test]
    fn bell_pairs() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let phi_plus = DualRegister::bell_pair(BellKind::PhiPlus);
        assert!(close(phi_plus.primary(), &[c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)]));
        let psi_minus = DualRegister::bell_pair(BellKind::PsiMinus);
        assert!(close(psi_minus.primary(), &[c(0.0, 0.0), c(h, 0.0), c(-h, 0.0), c(0.0, 0.0)]));
        for a in BellKind::ALL {
            let ra = DualRegister::bell_pair(a);
            assert!((ra.norm() - 1.0).abs() < TOL);
            for b in BellKind::ALL {
                let g = ra.inner(&DualRegister::bell_pair(b)).unwrap();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((g - c(expect, 0.0)).norm() < TOL);
            }
        }
        assert_eq!(
            fidelity(&DualRegister::bell_pair(BellKind::PhiPlus), &DualRegister::bell_pair(BellKind::PsiPlus)).unwrap(),
            0.0
        );
    }

    #[test]
    fn bell_kind_parses_labels() {
        for k in BellKind::ALL {
            assert_eq!(k.label().parse::<BellKind>().unwrap(), k);
        }
        assert_eq!("PHI+".parse::<BellKind>().unwrap(), BellKind::PhiPlus);
        assert!("chi".parse::<BellKind>().is_err());
    }

    #[test]
    fn tensor_products() {
        let up = DualRegister::basis(&[0]).unwrap();
        let down = DualRegister::basis(&[1]).unwrap();
        let ud = up.tensor(&down);
        assert!(close(ud.primary(), &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]));
        assert_eq!(DualRegister::basis(&[0, 1]).unwrap(), ud);

        // (α|↑⟩+β|↓⟩)(|↑↑⟩−|↓↓⟩)/√2 expanded term by term.
        let (alpha, beta) = (c(0.6, 0.0), c(0.0, 0.8));
        let joint = DualRegister::qubit(alpha, beta)
            .unwrap()
            .tensor(&DualRegister::bell_pair(BellKind::PhiMinus));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let z = c(0.0, 0.0);
        let expect = [alpha * h, z, z, -alpha * h, beta * h, z, z, -beta * h];
        assert!(close(joint.primary(), &expect));
        assert!(close(joint.shadow(), &expect));
        assert!((joint.norm() - 1.0).abs() < TOL);
    }

    #[test]
    fn unitary_application() {
        let up = DualRegister::basis(&[0]).unwrap();
        assert_eq!(up.apply_gate(0, &gates::identity()).unwrap(), up);
        assert_eq!(up.apply_gate(0, &gates::pauli_x()).unwrap(), DualRegister::basis(&[1]).unwrap());

        // X on qubit 2 of |000⟩ gives |001⟩.
        let s = DualRegister::basis(&[0, 0, 0]).unwrap();
        assert_eq!(s.apply_gate(2, &gates::pauli_x()).unwrap(), DualRegister::basis(&[0, 0, 1]).unwrap());

        // Two-target ordering: CNOT with control = first target.
        let z = c(0.0, 0.0);
        let o = c(1.0, 0.0);
        let cnot = DMatrix::from_row_slice(4, 4, &[o, z, z, z, z, o, z, z, z, z, z, o, z, z, o, z]);
        let s = DualRegister::basis(&[0, 1, 1]).unwrap();
        let out = s.apply_unitary(&[2, 0], &cnot).unwrap();
        assert_eq!(out, DualRegister::basis(&[1, 1, 1]).unwrap());
    }

    #[test]
    fn unitary_errors() {
        let s = DualRegister::basis(&[0, 0]).unwrap();
        let not_unitary = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(s.apply_gate(0, &not_unitary), Err(Error::NotUnitary(_))));
        assert_eq!(
            s.apply_gate(2, &gates::pauli_x()),
            Err(Error::QubitOutOfRange { qubit: 2, count: 2 })
        );
        assert_eq!(
            s.apply_unitary(&[1, 1], &DMatrix::identity(4, 4)),
            Err(Error::DuplicateTargets)
        );
        assert!(matches!(
            s.apply_unitary(&[0, 1], &gates::pauli_x()),
            Err(Error::MatrixDimension { .. })
        ));
    }

    #[test]
    fn fidelity_basics() {
        let up = DualRegister::basis(&[0]).unwrap();
        let down = DualRegister::basis(&[1]).unwrap();
        assert!((fidelity(&up, &up).unwrap() - 1.0).abs() < TOL);
        assert_eq!(fidelity(&up, &down).unwrap(), 0.0);
        let phased = DualRegister::qubit(c(0.0, 1.0), c(0.0, 0.0)).unwrap();
        assert!((fidelity(&up, &phased).unwrap() - 1.0).abs() < TOL);
        assert_eq!(
            fidelity(&up, &DualRegister::basis(&[0, 0]).unwrap()),
            Err(Error::SizeMismatch(1, 2))
        );
    }
}
