//! Gate constructors. Rotations follow R_σ(θ) = exp(−iθσ/2); qubit 0 is the
//! most significant bit of a computational-basis label.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::matrix::{CMatrix, C64, I, ONE, ZERO};
#[allow(unused_imports)] // method resolution falls back to std when it is linked
use num_traits::Float;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    H,
    Cz,
}

pub fn pauli(axis: Axis) -> CMatrix {
    match axis {
        Axis::X => CMatrix::from_rows(2, 2, vec![ZERO, ONE, ONE, ZERO]),
        Axis::Y => CMatrix::from_rows(2, 2, vec![ZERO, -I, I, ZERO]),
        Axis::Z => CMatrix::from_rows(2, 2, vec![ONE, ZERO, ZERO, -ONE]),
    }
    .expect("static shape")
}

pub fn hadamard() -> CMatrix {
    let h = C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
    CMatrix::from_rows(2, 2, vec![h, h, h, -h]).expect("static shape")
}

pub fn cz() -> CMatrix {
    CMatrix::diag(&[ONE, ONE, ONE, -ONE])
}

/// exp(−iθσ/2) = cos(θ/2)·I − i·sin(θ/2)·σ
pub fn rotation(axis: Axis, theta: f64) -> CMatrix {
    let (s, c) = (theta / 2.0).sin_cos();
    combine(axis, C64::new(c, 0.0), C64::new(0.0, -s))
}

/// dR/dθ = −sin(θ/2)/2·I − i·cos(θ/2)/2·σ
pub fn rotation_d1(axis: Axis, theta: f64) -> CMatrix {
    let (s, c) = (theta / 2.0).sin_cos();
    combine(axis, C64::new(-0.5 * s, 0.0), C64::new(0.0, -0.5 * c))
}

/// d²R/dθ² = −R/4
pub fn rotation_d2(axis: Axis, theta: f64) -> CMatrix {
    rotation(axis, theta).scale_real(-0.25)
}

fn combine(axis: Axis, id: C64, sigma: C64) -> CMatrix {
    let mut m = pauli(axis).scale(sigma);
    m[(0, 0)] += id;
    m[(1, 1)] += id;
    m
}

/// Block-diagonal |0⟩⟨0|⊗I + |1⟩⟨1|⊗U, control is the leading (most significant) qubit.
pub fn controlled(u: &CMatrix) -> CMatrix {
    let n = u.rows();
    let mut m = CMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(i, i)] = ONE;
    }
    for r in 0..n {
        for c in 0..n {
            m[(n + r, n + c)] = u[(r, c)];
        }
    }
    m
}

/// |1⟩⟨1|⊗U: the derivative-carrying part of a controlled gate.
pub fn controlled_branch(u: &CMatrix) -> CMatrix {
    let n = u.rows();
    let mut m = CMatrix::zeros(2 * n, 2 * n);
    for r in 0..n {
        for c in 0..n {
            m[(n + r, n + c)] = u[(r, c)];
        }
    }
    m
}

pub fn gate_matrix(kind: GateKind, angle: Option<f64>) -> Result<CMatrix> {
    let rot = |axis| match angle {
        Some(a) if a.is_finite() => Ok(rotation(axis, a)),
        Some(_) => Err(Error::invalid_input("rotation angle must be finite")),
        None => Err(Error::invalid_input("rotation gate requires an angle")),
    };
    match kind {
        GateKind::Rx => rot(Axis::X),
        GateKind::Ry => rot(Axis::Y),
        GateKind::Rz => rot(Axis::Z),
        GateKind::H => Ok(hadamard()),
        GateKind::Cz => Ok(cz()),
    }
}

/// Lift a k-qubit gate acting on `targets` (in the gate's own MSB-first
/// order) to the full n-qubit register.
pub fn lift(gate: &CMatrix, targets: &[usize], n_qubits: usize) -> Result<CMatrix> {
    let k = targets.len();
    if k == 0 || gate.rows() != (1 << k) || !gate.is_square() {
        return Err(Error::invalid_input("gate dimension does not match number of targets"));
    }
    for (i, &t) in targets.iter().enumerate() {
        if t >= n_qubits || targets[..i].contains(&t) {
            return Err(Error::invalid_input("target qubits must be distinct and inside the register"));
        }
    }
    if k == n_qubits && targets.iter().enumerate().all(|(i, &t)| i == t) {
        return Ok(gate.clone());
    }
    let dim = 1usize << n_qubits;
    let masks: Vec<usize> = targets.iter().map(|&t| 1usize << (n_qubits - 1 - t)).collect();
    let target_mask: usize = masks.iter().sum();
    let sub = |i: usize| masks.iter().fold(0usize, |acc, &m| (acc << 1) | usize::from(i & m != 0));
    let mut out = CMatrix::zeros(dim, dim);
    for r in 0..dim {
        let rest = r & !target_mask;
        let sr = sub(r);
        for sc in 0..(1usize << k) {
            let g = gate[(sr, sc)];
            if g == ZERO {
                continue;
            }
            let mut c = rest;
            for (j, &m) in masks.iter().enumerate() {
                if sc & (1 << (k - 1 - j)) != 0 {
                    c |= m;
                }
            }
            out[(r, c)] = g;
        }
    }
    Ok(out)
}
