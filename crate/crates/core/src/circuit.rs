//! Compiled gate sequences shared by the plain simulator and the gradient
//! engine.

use alloc::vec::Vec;

#[allow(unused_imports)] // method resolution falls back to std when it is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::quantum::gates::{controlled, rotation, Axis};
use crate::quantum::matrix::{CMatrix, C64};
use crate::quantum::state::{Observable, QuantumState};

/// Where a rotation angle comes from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AngleSource {
    /// φ = θⱼ
    Param(usize),
    /// φ = θⱼ·x (data re-uploading)
    Embed(usize),
    /// QSP signal operator: φ = −2·acos(x), giving S(x) = [[x, i√(1−x²)], [i√(1−x²), x]].
    Signal,
}

impl AngleSource {
    /// (φ, ∂φ/∂x) before any noise offset.
    pub fn angle(&self, theta: &[f64], x: f64) -> (f64, f64) {
        match *self {
            AngleSource::Param(j) => (theta[j], 0.0),
            AngleSource::Embed(j) => (theta[j] * x, theta[j]),
            AngleSource::Signal => (-2.0 * x.acos(), 2.0 / (1.0 - x * x).sqrt()),
        }
    }

    pub fn param_index(&self) -> Option<usize> {
        match *self {
            AngleSource::Param(j) | AngleSource::Embed(j) => Some(j),
            AngleSource::Signal => None,
        }
    }

    pub fn is_encoding(&self) -> bool {
        !matches!(self, AngleSource::Param(_))
    }
}

#[derive(Clone, Debug)]
pub enum Step {
    Rotation { axis: Axis, target: usize, control: Option<usize>, angle: AngleSource },
    /// Parameter-free gate; `channel_targets` are the qubits a noise channel
    /// acts on after it (the control qubit of a controlled gate is excluded).
    Fixed { gate: CMatrix, targets: Vec<usize>, channel_targets: Vec<usize> },
}

impl Step {
    pub fn channel_targets(&self) -> &[usize] {
        match self {
            Step::Rotation { target, .. } => core::slice::from_ref(target),
            Step::Fixed { channel_targets, .. } => channel_targets,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Readout {
    Expectation(Observable),
    /// Re⟨bra|ψ⟩, the quantity a Hadamard test estimates.
    Amplitude(Vec<C64>),
}

/// Per-evaluation noise.
#[derive(Clone, Copy, Debug)]
pub enum NoiseInjection<'a> {
    None,
    /// Additive offsets on each rotation angle, in step order.
    AngleOffsets(&'a [f64]),
    /// Single-qubit Kraus set applied after every gate on the qubits it touched.
    Channel(&'a [CMatrix]),
}

#[derive(Clone, Debug)]
pub struct Circuit {
    pub n_qubits: usize,
    pub initial: QuantumState,
    pub steps: Vec<Step>,
    pub readout: Readout,
}

impl Circuit {
    pub fn rotation_count(&self) -> usize {
        self.steps.iter().filter(|s| matches!(s, Step::Rotation { .. })).count()
    }

    pub fn encoding_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s, Step::Rotation { angle, .. } if angle.is_encoding()))
            .count()
    }

    /// Run on the state simulator and read out the (pre-affine) value.
    pub fn run(&self, theta: &[f64], x: f64, noise: NoiseInjection<'_>) -> Result<f64> {
        let mut state = match noise {
            NoiseInjection::Channel(_) => self.initial.to_density(),
            _ => self.initial.clone(),
        };
        let mut rot = 0;
        for step in &self.steps {
            match step {
                Step::Rotation { axis, target, control, angle } => {
                    let (mut phi, _) = angle.angle(theta, x);
                    if let NoiseInjection::AngleOffsets(off) = noise {
                        phi += off[rot];
                    }
                    rot += 1;
                    let r = rotation(*axis, phi);
                    state = match control {
                        Some(c) => state.apply_gate(&controlled(&r), &[*c, *target])?,
                        None => state.apply_gate(&r, &[*target])?,
                    };
                }
                Step::Fixed { gate, targets, .. } => state = state.apply_gate(gate, targets)?,
            }
            if let NoiseInjection::Channel(ops) = noise {
                for &q in step.channel_targets() {
                    state = state.apply_kraus(ops, &[q])?;
                }
            }
        }
        match &self.readout {
            Readout::Expectation(obs) => state.expectation(obs),
            Readout::Amplitude(bra) => {
                if state.is_density() {
                    return Err(Error::Mode("amplitude readout needs a pure state".into()));
                }
                Ok(state.amplitude(bra)?.re)
            }
        }
    }

    /// (U, dU/dφ, d²U/dφ²) on the gate's own wires (control first), row-major.
    /// Single-qubit gates use the leading four entries.
    pub(crate) fn rotation_blocks(axis: Axis, controlled: bool, phi: f64) -> [[C64; 16]; 3] {
        let (s, c) = (phi / 2.0).sin_cos();
        let u = rotation_entries(axis, C64::new(c, 0.0), C64::new(0.0, -s));
        let d1 = rotation_entries(axis, C64::new(-0.5 * s, 0.0), C64::new(0.0, -0.5 * c));
        let d2 = u.map(|z| z * -0.25);
        let mut out = [[C64::new(0.0, 0.0); 16]; 3];
        if controlled {
            for (block, m) in out.iter_mut().zip([u, d1, d2]) {
                for r in 0..2 {
                    for col in 0..2 {
                        block[(r + 2) * 4 + col + 2] = m[r * 2 + col];
                    }
                }
            }
            out[0][0] = C64::new(1.0, 0.0);
            out[0][5] = C64::new(1.0, 0.0);
        } else {
            for (block, m) in out.iter_mut().zip([u, d1, d2]) {
                block[..4].copy_from_slice(&m);
            }
        }
        out
    }
}

/// id·I + sigma·σ as a row-major 2×2 block.
fn rotation_entries(axis: Axis, id: C64, sigma: C64) -> [C64; 4] {
    let z = C64::new(0.0, 0.0);
    match axis {
        Axis::X => [id, sigma, sigma, id],
        Axis::Y => [id, sigma * C64::new(0.0, -1.0), sigma * C64::new(0.0, 1.0), id],
        Axis::Z => [id + sigma, z, z, id - sigma],
    }
}
