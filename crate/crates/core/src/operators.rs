//! Dense operator helpers: Pauli strings, Hermitian exponentials, norms.
//!
//! Everything here is exact linear algebra on `2^n × 2^n` matrices and is meant
//! for registers of at most [`MAX_DENSE_QUBITS`](crate::statevector::MAX_DENSE_QUBITS).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// Tensor product of single-qubit Paulis, identity elsewhere. Qubit 0 is the
/// least-significant index bit.
pub fn pauli_string(n_qubits: usize, factors: &[(usize, Pauli)]) -> DMatrix<C64> {
    let dim = 1usize << n_qubits;
    let flip = factors
        .iter()
        .filter(|(_, p)| *p != Pauli::Z)
        .fold(0usize, |m, (q, _)| m | (1 << q));
    let mut out = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut value = C64::new(1.0, 0.0);
        for &(q, p) in factors {
            let bit = (col >> q) & 1;
            value *= match (p, bit) {
                (Pauli::X, _) => C64::new(1.0, 0.0),
                (Pauli::Y, 0) => C64::new(0.0, 1.0),
                (Pauli::Y, _) => C64::new(0.0, -1.0),
                (Pauli::Z, 0) => C64::new(1.0, 0.0),
                (Pauli::Z, _) => C64::new(-1.0, 0.0),
            };
        }
        out[(col ^ flip, col)] = value;
    }
    out
}

/// `Σ coeff · P` over the given weighted Pauli strings.
pub fn pauli_sum(n_qubits: usize, terms: &[(f64, Vec<(usize, Pauli)>)]) -> DMatrix<C64> {
    let dim = 1usize << n_qubits;
    terms.iter().fold(DMatrix::zeros(dim, dim), |acc, (c, factors)| {
        acc + pauli_string(n_qubits, factors) * C64::new(*c, 0.0)
    })
}

/// `exp(-i H t)` for Hermitian `H`, via eigendecomposition.
pub fn expm_hermitian(h: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    let eig = h.clone().symmetric_eigen();
    let phases = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&lambda| C64::from_polar(1.0, -lambda * t)),
    );
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (mut col, p) in scaled.column_iter_mut().zip(phases.iter()) {
        col *= *p;
    }
    scaled * v.adjoint()
}

pub fn commutator(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a * b - b * a
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// `‖U − e^{iφ}V‖` with φ chosen as the phase of `tr(V†U)`.
///
/// The optimal phase can only do better, so this is an upper bound on the
/// global-phase-insensitive distance.
pub fn phase_aligned_distance(u: &DMatrix<C64>, v: &DMatrix<C64>) -> f64 {
    let overlap: C64 = v.adjoint().component_mul(&u.transpose()).sum();
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { C64::new(1.0, 0.0) };
    spectral_norm(&(u - v * phase))
}

/// True when `u = e^{iφ} v` for some φ, entrywise within `tol`.
pub fn equal_up_to_phase(u: &DMatrix<C64>, v: &DMatrix<C64>, tol: f64) -> bool {
    if u.shape() != v.shape() {
        return false;
    }
    let overlap: C64 = v.adjoint().component_mul(&u.transpose()).sum();
    if overlap.norm() == 0.0 {
        return false;
    }
    let phase = overlap / overlap.norm();
    (u - v * phase).iter().all(|d| d.norm() <= tol)
}
