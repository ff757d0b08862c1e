use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

pub fn identity() -> DMatrix<C64> {
    DMatrix::identity(2, 2)
}

pub fn pauli_x() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

pub fn hadamard() -> DMatrix<C64> {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    DMatrix::from_row_slice(2, 2, &[h, h, h, -h])
}

/// Max-entry deviation of `U†U` from the identity.
pub fn unitarity_deviation(u: &DMatrix<C64>) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let n = u.nrows();
    (u.adjoint() * u - DMatrix::<C64>::identity(n, n))
        .iter()
        .map(|x| x.norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paulis_are_unitary_and_anticommute() {
        for g in [identity(), pauli_x(), pauli_y(), pauli_z(), hadamard()] {
            assert!(unitarity_deviation(&g) < 1e-15);
        }
        let xy = pauli_x() * pauli_y();
        let yx = pauli_y() * pauli_x();
        assert!((xy.clone() + yx).iter().all(|v| v.norm() < 1e-15));
        // XY = iZ
        assert!((xy - pauli_z() * I).iter().all(|v| v.norm() < 1e-15));
    }
}
