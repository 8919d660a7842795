use alloc::vec;
use alloc::vec::Vec;


use super::gates::lift;
use super::matrix::{min_hermitian_eigenvalue, qubits_for_dim, CMatrix, C64, ONE, ZERO};
#[allow(unused_imports)] // method resolution falls back to std when it is linked
use num_traits::Float;

use crate::error::{Error, Result};

pub const NORM_TOL: f64 = 1e-10;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const KRAUS_TOL: f64 = 1e-10;
/// Imaginary residue allowed in an expectation value before it is an error.
pub const IMAG_TOL: f64 = 1e-8;

/// Hermitian observable.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable(CMatrix);

impl Observable {
    pub fn new(m: CMatrix) -> Result<Self> {
        if qubits_for_dim(m.rows()).is_none() || !m.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::invalid_input("observable must be a Hermitian 2^n × 2^n matrix"));
        }
        Ok(Observable(m))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    /// Tensor product of single-qubit factors, qubit 0 first.
    pub fn product(factors: &[CMatrix]) -> Result<Self> {
        let mut it = factors.iter();
        let first = it.next().ok_or_else(|| Error::invalid_input("empty observable product"))?;
        Self::new(it.fold(first.clone(), |acc, f| acc.kron(f)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum QuantumState {
    Statevector { n_qubits: usize, amps: Vec<C64> },
    Density { n_qubits: usize, rho: CMatrix },
}

impl QuantumState {
    /// |0…0⟩ as a statevector.
    pub fn zero(n_qubits: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[0] = ONE;
        QuantumState::Statevector { n_qubits, amps }
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let n_qubits = qubits_for_dim(amps.len())
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::invalid_input("statevector length must be 2^n"))?;
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid_input("statevector is not normalized"));
        }
        Ok(QuantumState::Statevector { n_qubits, amps })
    }

    pub fn from_density(rho: CMatrix) -> Result<Self> {
        let n_qubits = qubits_for_dim(rho.rows())
            .filter(|&n| n > 0 && rho.is_square())
            .ok_or_else(|| Error::invalid_input("density matrix must be 2^n × 2^n"))?;
        let s = QuantumState::Density { n_qubits, rho };
        s.check_invariants()?;
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        match self {
            QuantumState::Statevector { n_qubits, .. } | QuantumState::Density { n_qubits, .. } => *n_qubits,
        }
    }

    pub fn is_density(&self) -> bool {
        matches!(self, QuantumState::Density { .. })
    }

    /// ρ = |ψ⟩⟨ψ| for statevectors; densities are returned unchanged.
    pub fn to_density(&self) -> Self {
        match self {
            QuantumState::Statevector { n_qubits, amps } => {
                let ket = CMatrix::column(amps);
                QuantumState::Density { n_qubits: *n_qubits, rho: &ket * &ket.dagger() }
            }
            d => d.clone(),
        }
    }

    pub fn density_matrix(&self) -> Option<&CMatrix> {
        match self {
            QuantumState::Density { rho, .. } => Some(rho),
            _ => None,
        }
    }

    pub fn amplitudes(&self) -> Option<&[C64]> {
        match self {
            QuantumState::Statevector { amps, .. } => Some(amps),
            _ => None,
        }
    }

    pub fn check_invariants(&self) -> Result<()> {
        match self {
            QuantumState::Statevector { amps, .. } => {
                let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
                if (norm - 1.0).abs() > NORM_TOL {
                    return Err(Error::numerical("statevector norm drifted from 1"));
                }
            }
            QuantumState::Density { rho, .. } => {
                if !rho.is_hermitian(HERMITIAN_TOL) {
                    return Err(Error::numerical("density matrix is not Hermitian"));
                }
                let tr = rho.trace();
                if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
                    return Err(Error::numerical("density matrix trace is not 1"));
                }
                if min_hermitian_eigenvalue(rho) < -NORM_TOL {
                    return Err(Error::numerical("density matrix has a negative eigenvalue"));
                }
            }
        }
        Ok(())
    }

    /// ψ ← Gψ or ρ ← GρG†, with G lifted onto `targets`.
    pub fn apply_gate(&self, gate: &CMatrix, targets: &[usize]) -> Result<Self> {
        let n = self.n_qubits();
        let full = lift(gate, targets, n)?;
        Ok(self.apply_full(&full))
    }

    /// Apply an already register-sized matrix.
    pub fn apply_full(&self, full: &CMatrix) -> Self {
        match self {
            QuantumState::Statevector { n_qubits, amps } => {
                QuantumState::Statevector { n_qubits: *n_qubits, amps: full.apply_to(amps) }
            }
            QuantumState::Density { n_qubits, rho } => {
                QuantumState::Density { n_qubits: *n_qubits, rho: &(full * rho) * &full.dagger() }
            }
        }
    }

    /// ρ ← Σ EᵢρEᵢ†.
    pub fn apply_kraus(&self, ops: &[CMatrix], targets: &[usize]) -> Result<Self> {
        let (n_qubits, rho) = match self {
            QuantumState::Density { n_qubits, rho } => (*n_qubits, rho),
            QuantumState::Statevector { .. } => {
                return Err(Error::Mode("Kraus channels require a density-matrix state".into()))
            }
        };
        check_completeness(ops)?;
        let mut out = CMatrix::zeros(rho.rows(), rho.cols());
        for e in ops {
            let full = lift(e, targets, n_qubits)?;
            let term = &(&full * rho) * &full.dagger();
            out.add_scaled(&term, 1.0);
        }
        Ok(QuantumState::Density { n_qubits, rho: out })
    }

    /// ⟨ψ|Ô|ψ⟩ or Tr(ρÔ).
    pub fn expectation(&self, obs: &Observable) -> Result<f64> {
        let o = obs.matrix();
        let value = match self {
            QuantumState::Statevector { amps, .. } => {
                if o.rows() != amps.len() {
                    return Err(Error::invalid_input("observable dimension does not match state"));
                }
                let oa = o.apply_to(amps);
                amps.iter().zip(&oa).map(|(a, b)| a.conj() * b).sum::<C64>()
            }
            QuantumState::Density { rho, .. } => {
                if o.rows() != rho.rows() {
                    return Err(Error::invalid_input("observable dimension does not match state"));
                }
                (rho * o).trace()
            }
        };
        real_part(value)
    }

    /// ⟨bra|ψ⟩ for a statevector.
    pub fn amplitude(&self, bra: &[C64]) -> Result<C64> {
        match self {
            QuantumState::Statevector { amps, .. } if amps.len() == bra.len() => {
                Ok(bra.iter().zip(amps).map(|(b, a)| b.conj() * a).sum())
            }
            QuantumState::Statevector { .. } => Err(Error::invalid_input("bra dimension does not match state")),
            QuantumState::Density { .. } => Err(Error::Mode("amplitudes need a statevector".into())),
        }
    }
}

pub fn real_part(z: C64) -> Result<f64> {
    if z.im.abs() > IMAG_TOL {
        return Err(Error::numerical("expectation value has a non-negligible imaginary part"));
    }
    Ok(z.re)
}

/// Σ E†E = I within `KRAUS_TOL`.
pub fn check_completeness(ops: &[CMatrix]) -> Result<()> {
    let first = ops.first().ok_or_else(|| Error::Channel("empty Kraus set".into()))?;
    let mut sum = CMatrix::zeros(first.cols(), first.cols());
    for e in ops {
        if e.rows() != first.rows() || e.cols() != first.cols() {
            return Err(Error::Channel("Kraus operators have inconsistent shapes".into()));
        }
        sum.add_scaled(&(&e.dagger() * e), 1.0);
    }
    if sum.max_abs_diff(&CMatrix::identity(first.cols())) > KRAUS_TOL {
        return Err(Error::Channel("Kraus operators violate completeness".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::gates::{cz, hadamard, pauli, Axis};
    use core::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn hadamard_on_zero_gives_plus() {
        let s = QuantumState::zero(1).apply_gate(&hadamard(), &[0]).unwrap();
        let a = s.amplitudes().unwrap();
        assert!((a[0].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((a[1].re - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn cz_flips_phase_of_11() {
        let s = QuantumState::from_amplitudes(vec![ZERO, ZERO, ZERO, ONE]).unwrap();
        let s = s.apply_gate(&cz(), &[0, 1]).unwrap();
        assert_eq!(s.amplitudes().unwrap()[3], -ONE);
    }

    #[test]
    fn expectation_values() {
        let z = Observable::new(pauli(Axis::Z)).unwrap();
        assert!((QuantumState::zero(1).expectation(&z).unwrap() - 1.0).abs() < 1e-15);
        let plus = QuantumState::zero(1).apply_gate(&hadamard(), &[0]).unwrap();
        let x = Observable::new(pauli(Axis::X)).unwrap();
        assert!((plus.expectation(&x).unwrap() - 1.0).abs() < 1e-15);
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let bell = QuantumState::from_amplitudes(vec![h, ZERO, ZERO, h]).unwrap();
        let zz = Observable::product(&[pauli(Axis::Z), pauli(Axis::Z)]).unwrap();
        assert!((bell.expectation(&zz).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kraus_requires_density_and_completeness() {
        let bad = vec![CMatrix::identity(2).scale_real(0.5)];
        let rho = QuantumState::zero(1).to_density();
        assert!(matches!(rho.apply_kraus(&bad, &[0]), Err(Error::Channel(_))));
        assert!(matches!(QuantumState::zero(1).apply_kraus(&[CMatrix::identity(2)], &[0]), Err(Error::Mode(_))));
    }

    #[test]
    fn dimension_mismatch_is_invalid_input() {
        let s = QuantumState::zero(2);
        assert!(matches!(s.apply_gate(&cz(), &[0]), Err(Error::InvalidInput(_))));
        let z = Observable::new(pauli(Axis::Z)).unwrap();
        assert!(s.expectation(&z).is_err());
    }

    #[test]
    fn non_hermitian_observable_rejected() {
        let m = CMatrix::from_rows(2, 2, vec![ZERO, ONE, ZERO, ZERO]).unwrap();
        assert!(Observable::new(m).is_err());
    }
}
