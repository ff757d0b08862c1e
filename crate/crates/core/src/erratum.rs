//! Comparison of reference identities against the computed oracles.
//!
//! Every finding is recomputed from scratch: the verdicts below are whatever
//! the oracles produce, so the report changes if the reference data do.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::Result;
use crate::fock::{ladder_factors, ModeGrid};
use crate::protocols::{
    derive_correction_table, derive_decomposition, teleport_branch, DecompositionReport, ReferenceIdentity, Verdict,
};
use crate::register::{fidelity, BellKind, DualRegister};
use crate::wave::{zone_expansion, WaveGrid, ZonePartition};

/// Probe input used wherever a generic qubit state is needed.
pub const PROBE: (C64, C64) = (C64::new(0.6, 0.0), C64::new(0.0, 0.8));

const TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub id: &'static str,
    pub discrepancy: bool,
    /// Quantity as the reference writes it.
    pub reference_value: f64,
    /// Same quantity under the implemented reading.
    pub implemented_value: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErratumReport {
    pub findings: Vec<Finding>,
    pub teleportation: DecompositionReport,
    pub swap: DecompositionReport,
}

impl ErratumReport {
    pub fn discrepancies(&self) -> Vec<&'static str> {
        self.findings.iter().filter(|f| f.discrepancy).map(|f| f.id).collect()
    }
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// `√2(|↑↑⟩+|↓↓⟩)` as written versus the unit-norm pair.
fn bell_prefactor() -> Finding {
    let s = std::f64::consts::SQRT_2;
    let written = [C64::new(s, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(s, 0.0)];
    let written_norm = norm(&written);
    let implemented = norm(DualRegister::bell_pair(BellKind::PhiPlus).primary());
    Finding {
        id: "bell-pair-prefactor",
        discrepancy: (written_norm - implemented).abs() > TOLERANCE,
        reference_value: written_norm,
        implemented_value: implemented,
        detail: format!("prefactor sqrt(2) gives norm {written_norm:.6}; 1/sqrt(2) gives {implemented:.6}"),
    }
}

/// The resource named for teleportation versus the state actually expanded.
fn teleportation_resource() -> Result<Finding> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let expanded = DualRegister::from_amplitudes(
        &[C64::new(h, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(-h, 0.0)],
        2,
    )?;
    let declared = BellKind::PsiMinus;
    let overlap = fidelity(&DualRegister::bell_pair(declared), &expanded)?;
    let mut identified = declared;
    let mut best = overlap;
    for kind in BellKind::ALL {
        let f = fidelity(&DualRegister::bell_pair(kind), &expanded)?;
        if f > best {
            best = f;
            identified = kind;
        }
    }
    // Both readings teleport once the table is derived for the resource.
    let mut worst = 1.0f64;
    for resource in [declared, identified] {
        let table = derive_correction_table(resource)?;
        for outcome in BellKind::ALL {
            worst = worst.min(teleport_branch(PROBE.0, PROBE.1, &table, outcome)?.fidelity);
        }
    }
    Ok(Finding {
        id: "teleportation-resource",
        discrepancy: overlap < 1.0 - TOLERANCE,
        reference_value: overlap,
        implemented_value: best,
        detail: format!(
            "declared resource {declared} has fidelity {overlap:.6} with the expanded form, which is {identified}; \
             worst corrected fidelity over both resources {worst:.12}"
        ),
    })
}

fn branch_finding(id: &'static str, report: &DecompositionReport) -> Finding {
    let mismatched = report.mismatched();
    let worst = report.branches.iter().map(|b| b.residual).fold(0.0, f64::max);
    let labels: Vec<&str> = mismatched.iter().map(|k| k.label()).collect();
    Finding {
        id,
        discrepancy: report.verdict == Verdict::Erratum,
        reference_value: report.reference_reassembly_residual,
        implemented_value: report.reassembly_residual,
        detail: if mismatched.is_empty() {
            format!("all branches match (largest residual {worst:.3e})")
        } else {
            format!(
                "branches [{}] differ from the derived expansion (largest residual {worst:.6})",
                labels.join(", ")
            )
        },
    }
}

/// Ladder factor applied to both the particle and shadow kets.
fn ladder_double_factor() -> Result<Finding> {
    let grid = ModeGrid::bosonic(1, 4)?;
    let single = ladder_factors(&grid, 0)?;
    let doubled: Vec<f64> = single.iter().map(|f| f * f).collect();
    // ⟨n|[b, b†]|n⟩ = f(n)² − f(n−1)² on the guarded sector, at n = 1.
    let commutator = |f: &[f64]| f[1] * f[1] - f[0] * f[0];
    let (reference, implemented) = (commutator(&doubled), commutator(&single));
    Ok(Finding {
        id: "ladder-double-factor",
        discrepancy: (reference - implemented).abs() > TOLERANCE,
        reference_value: reference,
        implemented_value: implemented,
        detail: format!(
            "factor applied twice gives <1|[b,b+]|1> = {reference:.6}; applied once gives {implemented:.6}"
        ),
    })
}

/// Zone expansion written without its coefficients.
fn zone_coefficients_gap() -> Result<Finding> {
    const ZONES: usize = 4;
    let grid = WaveGrid::gaussian(-8.0, 8.0, 512, 1.0, 0.3, 1.0, 0.0)?;
    let partition = ZonePartition::equal(&grid, ZONES)?;
    let expansion = zone_expansion(&grid, &partition)?;
    let dx = grid.dx();
    let norm_sq = |combine: &dyn Fn(usize, usize) -> C64| -> f64 {
        (0..grid.points())
            .map(|x| (0..ZONES).map(|i| combine(i, x)).sum::<C64>().norm_sqr())
            .sum::<f64>()
            * dx
    };
    let without = norm_sq(&|i, x| expansion.profiles[i][x]);
    let with = norm_sq(&|i, x| expansion.coefficients[i] * expansion.profiles[i][x]);
    Ok(Finding {
        id: "zone-expansion-coefficients",
        discrepancy: (without - with).abs() > 1e-10,
        reference_value: without,
        implemented_value: with,
        detail: format!(
            "{ZONES} zones: sum of unit profiles has norm^2 {without:.6}; with coefficients {with:.6}"
        ),
    })
}

pub fn erratum_report() -> Result<ErratumReport> {
    let teleportation_identity = ReferenceIdentity::Teleportation {
        alpha: PROBE.0,
        beta: PROBE.1,
    };
    let teleportation = derive_decomposition(&teleportation_identity.state()?, &teleportation_identity)?;
    let swap = derive_decomposition(&ReferenceIdentity::Swap.state()?, &ReferenceIdentity::Swap)?;
    let findings = vec![
        bell_prefactor(),
        teleportation_resource()?,
        branch_finding("teleportation-branches", &teleportation),
        branch_finding("swap-branches", &swap),
        ladder_double_factor()?,
        zone_coefficients_gap()?,
    ];
    Ok(ErratumReport {
        findings,
        teleportation,
        swap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_is_deterministic() {
        assert_eq!(erratum_report().unwrap(), erratum_report().unwrap());
    }

    #[test]
    fn computed_findings() {
        let r = erratum_report().unwrap();
        let get = |id| r.findings.iter().find(|f| f.id == id).unwrap();
        let f = get("bell-pair-prefactor");
        assert!(f.discrepancy && (f.reference_value - 2.0).abs() < 1e-12);
        let f = get("teleportation-resource");
        assert!(f.discrepancy && f.reference_value.abs() < 1e-12 && f.detail.contains("phi-"));
        assert!(get("teleportation-branches").discrepancy);
        assert_eq!(r.teleportation.mismatched(), vec![BellKind::PsiMinus, BellKind::PsiPlus]);
        let f = get("ladder-double-factor");
        assert!((f.reference_value - 3.0).abs() < 1e-12 && (f.implemented_value - 1.0).abs() < 1e-12);
        let f = get("zone-expansion-coefficients");
        assert!((f.reference_value - 4.0).abs() < 1e-10 && (f.implemented_value - 1.0).abs() < 1e-10);
        assert!(r.swap.reassembly_residual < 1e-12);
    }
}
