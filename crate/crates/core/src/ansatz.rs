//! The three circuit families and their parameter layouts.
//!
//! * QNN: two-qubit data re-uploading; each layer applies
//!   `RX(θ₀)·RZ(θ₁x)·RY(θ₂)` to both qubits followed by CZ; readout
//!   `a·⟨Z⊗Z⟩ + b`.
//! * QSP: two single-qubit phase chains `W(θ_{d+1}) ∏ S(x)W(θᵢ)` with
//!   `d = L` (even part) and `d = L − 1` (odd part); readout is the sum of
//!   `Re⟨+|U|+⟩` over both chains. No affine map.
//! * DQC1: clean qubit 0 in |+⟩, qubits 1–2 maximally mixed; every gate is
//!   controlled on the clean qubit; readout `a·⟨σ_X⟩_clean + b`, which
//!   equals `a·Re Tr(U)/4 + b`.
//!
//! Operator products are applied right to left, so `RX(θ₀)RZ(θ₁x)RY(θ₂)`
//! runs RY first.

use alloc::vec;
use alloc::vec::Vec;

use core::f64::consts::PI;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{AngleSource, Circuit, NoiseInjection, Readout, Step};
use crate::error::{Error, Result};
use crate::quantum::gates::{cz, hadamard, pauli, Axis};
use crate::quantum::matrix::{CMatrix, C64, ONE};
use crate::quantum::state::{Observable, QuantumState};
use crate::rng::seeded;

/// QSP inputs are kept this far from ±1, where dφ/dx = 2/√(1−x²) diverges.
pub const QSP_CLAMP: f64 = 1.0 - 1e-6;
/// Round-off slack on the [−1, 1] input domain of QNN and DQC1.
const DOMAIN_SLACK: f64 = 1e-12;

/// Initial range of the embedding scales θⱼ in θⱼ·x.
pub const EMBED_SCALE_INIT: core::ops::Range<f64> = 0.5..2.0 * PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnsatzKind {
    Qnn,
    Qsp,
    Dqc1,
}

impl AnsatzKind {
    pub const ALL: [AnsatzKind; 3] = [AnsatzKind::Qnn, AnsatzKind::Qsp, AnsatzKind::Dqc1];

    pub fn name(self) -> &'static str {
        match self {
            AnsatzKind::Qnn => "qnn",
            AnsatzKind::Qsp => "qsp",
            AnsatzKind::Dqc1 => "dqc1",
        }
    }

    /// Trainable parameters, affine map included.
    pub fn param_count(self, layers: usize) -> usize {
        match self {
            AnsatzKind::Qnn => 6 * layers + 2,
            AnsatzKind::Qsp => 2 * layers + 1,
            AnsatzKind::Dqc1 => 8 * layers + 6,
        }
    }

    pub fn encoding_count(self, layers: usize) -> usize {
        match self {
            AnsatzKind::Qnn | AnsatzKind::Dqc1 => 2 * layers,
            AnsatzKind::Qsp => 2 * layers - 1,
        }
    }

    pub fn has_affine(self) -> bool {
        !matches!(self, AnsatzKind::Qsp)
    }

    fn circuit_theta_len(self, layers: usize) -> usize {
        self.param_count(layers) - if self.has_affine() { 2 } else { 0 }
    }
}

/// Output map `Q = scale·(a·⟨O⟩ + b)`; `a` and `b` are trainable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub a: f64,
    pub b: f64,
}

impl Default for Affine {
    fn default() -> Self {
        Affine { a: 1.0, b: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitModel {
    pub kind: AnsatzKind,
    pub layers: usize,
    /// Circuit parameters (rotation angles and embedding scales).
    pub theta: Vec<f64>,
    pub affine: Option<Affine>,
    /// Fixed, non-trainable factor multiplying the output. Lets targets of
    /// very different magnitude be fitted with O(1) circuit outputs.
    #[serde(default = "unit_scale")]
    pub output_scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

/// Role of one entry of `theta`, used for initialization and noise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamRole {
    Angle,
    EmbeddingScale,
}

impl CircuitModel {
    /// Fresh model with seeded initialization: angles uniform on [−π, π],
    /// embedding scales uniform on [0.5, 2π), affine (1, 0).
    pub fn build(kind: AnsatzKind, layers: usize, seed: u64) -> Result<Self> {
        if layers == 0 {
            return Err(Error::invalid_config("ansatz.layers must be at least 1"));
        }
        let mut rng = seeded(seed, 0x616e_7361_747a);
        let n = kind.circuit_theta_len(layers);
        let roles = param_roles(kind, layers);
        let theta = (0..n)
            .map(|i| match roles[i] {
                ParamRole::Angle => rng.random_range(-PI..PI),
                ParamRole::EmbeddingScale => rng.random_range(EMBED_SCALE_INIT),
            })
            .collect();
        Ok(CircuitModel {
            kind,
            layers,
            theta,
            affine: kind.has_affine().then(Affine::default),
            output_scale: 1.0,
        })
    }

    pub fn with_output_scale(mut self, scale: f64) -> Self {
        self.output_scale = scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::invalid_config("model has zero layers"));
        }
        if self.theta.len() != self.kind.circuit_theta_len(self.layers) {
            return Err(Error::invalid_config("theta length does not match ansatz layout"));
        }
        if self.affine.is_some() != self.kind.has_affine() {
            return Err(Error::invalid_config("affine map presence does not match ansatz kind"));
        }
        let finite = self.params().iter().all(|p| p.is_finite()) && self.output_scale.is_finite();
        if !finite || self.output_scale == 0.0 {
            return Err(Error::invalid_config("model parameters must be finite"));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.theta.len() + if self.affine.is_some() { 2 } else { 0 }
    }

    pub fn encoding_count(&self) -> usize {
        self.compile().encoding_count()
    }

    /// Flattened trainable parameters: `theta` followed by `(a, b)` when present.
    pub fn params(&self) -> Vec<f64> {
        let mut p = self.theta.clone();
        if let Some(af) = self.affine {
            p.extend_from_slice(&[af.a, af.b]);
        }
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let n = self.theta.len();
        self.theta.copy_from_slice(&p[..n]);
        if let Some(af) = self.affine.as_mut() {
            af.a = p[n];
            af.b = p[n + 1];
        }
    }

    pub fn roles(&self) -> Vec<ParamRole> {
        param_roles(self.kind, self.layers)
    }

    /// Reject inputs outside the admissible domain.
    pub fn check_input(&self, x: f64) -> Result<()> {
        let bound = match self.kind {
            AnsatzKind::Qsp => QSP_CLAMP,
            _ => 1.0 + DOMAIN_SLACK,
        };
        if !x.is_finite() || x.abs() > bound {
            return Err(Error::Domain { x, bound });
        }
        Ok(())
    }

    /// Pull an input in [−1, 1] into the admissible domain (QSP stays
    /// `1e-6` away from the endpoints).
    pub fn clamp_input(&self, x: f64) -> f64 {
        let bound = if self.kind == AnsatzKind::Qsp { QSP_CLAMP } else { 1.0 };
        x.clamp(-bound, bound)
    }

    pub fn compile(&self) -> CompiledModel {
        let circuits = match self.kind {
            AnsatzKind::Qnn => vec![qnn_circuit(self.layers)],
            AnsatzKind::Qsp => qsp_circuits(self.layers),
            AnsatzKind::Dqc1 => vec![dqc1_circuit(self.layers)],
        };
        CompiledModel { circuits }
    }

    /// Post-affine model output Q(x; θ).
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        self.evaluate_noisy(&self.compile(), x, NoiseInjection::None)
    }

    pub fn evaluate_noisy(&self, compiled: &CompiledModel, x: f64, noise: NoiseInjection<'_>) -> Result<f64> {
        self.check_input(x)?;
        let raw = compiled.raw_value(&self.theta, x, noise)?;
        Ok(self.apply_affine(raw))
    }

    pub(crate) fn apply_affine(&self, raw: f64) -> f64 {
        let af = self.affine.unwrap_or_default();
        self.output_scale * (af.a * raw + af.b)
    }

    /// dQ/d(raw circuit output).
    pub(crate) fn output_gain(&self) -> f64 {
        self.output_scale * self.affine.map_or(1.0, |af| af.a)
    }

    pub fn rotation_count(&self) -> usize {
        self.compile().rotation_count()
    }
}

/// The circuits of a model. Their pre-affine outputs are summed.
#[derive(Clone, Debug)]
pub struct CompiledModel {
    pub circuits: Vec<Circuit>,
}

impl CompiledModel {
    pub fn rotation_count(&self) -> usize {
        self.circuits.iter().map(Circuit::rotation_count).sum()
    }

    pub fn encoding_count(&self) -> usize {
        self.circuits.iter().map(Circuit::encoding_count).sum()
    }

    /// Split a model-wide noise injection into per-circuit pieces.
    pub fn split_noise<'a>(&self, noise: NoiseInjection<'a>) -> Vec<NoiseInjection<'a>> {
        match noise {
            NoiseInjection::AngleOffsets(off) => {
                let mut start = 0;
                self.circuits
                    .iter()
                    .map(|c| {
                        let n = c.rotation_count();
                        let piece = NoiseInjection::AngleOffsets(&off[start..start + n]);
                        start += n;
                        piece
                    })
                    .collect()
            }
            other => vec![other; self.circuits.len()],
        }
    }

    pub fn raw_value(&self, theta: &[f64], x: f64, noise: NoiseInjection<'_>) -> Result<f64> {
        if let NoiseInjection::AngleOffsets(off) = noise {
            if off.len() != self.rotation_count() {
                return Err(Error::invalid_input("one angle offset per rotation gate required"));
            }
        }
        self.circuits
            .iter()
            .zip(self.split_noise(noise))
            .map(|(c, n)| c.run(theta, x, n))
            .sum()
    }
}

fn param_roles(kind: AnsatzKind, layers: usize) -> Vec<ParamRole> {
    let n = kind.circuit_theta_len(layers);
    (0..n)
        .map(|i| {
            let embed = match kind {
                AnsatzKind::Qnn => i % 3 == 1,
                AnsatzKind::Qsp => false,
                AnsatzKind::Dqc1 => i >= 4 && (i - 4) % 8 >= 6,
            };
            if embed {
                ParamRole::EmbeddingScale
            } else {
                ParamRole::Angle
            }
        })
        .collect()
}

fn rot(axis: Axis, target: usize, angle: AngleSource) -> Step {
    Step::Rotation { axis, target, control: None, angle }
}

fn crot(axis: Axis, target: usize, angle: AngleSource) -> Step {
    Step::Rotation { axis, target, control: Some(0), angle }
}

fn qnn_circuit(layers: usize) -> Circuit {
    let mut steps = Vec::with_capacity(layers * 7);
    for l in 0..layers {
        for q in 0..2 {
            let base = 6 * l + 3 * q;
            steps.push(rot(Axis::Y, q, AngleSource::Param(base + 2)));
            steps.push(rot(Axis::Z, q, AngleSource::Embed(base + 1)));
            steps.push(rot(Axis::X, q, AngleSource::Param(base)));
        }
        steps.push(Step::Fixed { gate: cz(), targets: vec![0, 1], channel_targets: vec![0, 1] });
    }
    let zz = Observable::product(&[pauli(Axis::Z), pauli(Axis::Z)]).expect("Z⊗Z is Hermitian");
    Circuit { n_qubits: 2, initial: QuantumState::zero(2), steps, readout: Readout::Expectation(zz) }
}

fn plus_state() -> Vec<C64> {
    let h = C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
    vec![h, h]
}

fn qsp_chain(signals: usize, first_phase: usize) -> Circuit {
    let mut steps = vec![rot(Axis::Z, 0, AngleSource::Param(first_phase))];
    for i in 1..=signals {
        steps.push(rot(Axis::X, 0, AngleSource::Signal));
        steps.push(rot(Axis::Z, 0, AngleSource::Param(first_phase + i)));
    }
    Circuit {
        n_qubits: 1,
        initial: QuantumState::from_amplitudes(plus_state()).expect("|+> is normalized"),
        steps,
        readout: Readout::Amplitude(plus_state()),
    }
}

fn qsp_circuits(layers: usize) -> Vec<Circuit> {
    vec![qsp_chain(layers, 0), qsp_chain(layers - 1, layers + 1)]
}

fn dqc1_circuit(layers: usize) -> Circuit {
    let mut steps = Vec::with_capacity(4 + layers * 9);
    for r in 0..2 {
        steps.push(crot(Axis::Y, 1 + r, AngleSource::Param(2 * r + 1)));
        steps.push(crot(Axis::X, 1 + r, AngleSource::Param(2 * r)));
    }
    let mut ccz = CMatrix::identity(8);
    ccz[(7, 7)] = -ONE;
    for l in 0..layers {
        let base = 4 + 8 * l;
        for r in 0..2 {
            let b = base + 3 * r;
            steps.push(crot(Axis::Z, 1 + r, AngleSource::Param(b + 2)));
            steps.push(crot(Axis::Y, 1 + r, AngleSource::Param(b + 1)));
            steps.push(crot(Axis::X, 1 + r, AngleSource::Param(b)));
        }
        steps.push(Step::Fixed { gate: ccz.clone(), targets: vec![0, 1, 2], channel_targets: vec![1, 2] });
        for r in 0..2 {
            steps.push(crot(Axis::X, 1 + r, AngleSource::Embed(base + 6 + r)));
        }
    }
    let plus = QuantumState::zero(1).apply_gate(&hadamard(), &[0]).expect("1-qubit gate").to_density();
    let clean = plus.density_matrix().expect("density").clone();
    let rho = clean.kron(&CMatrix::identity(4).scale_real(0.25));
    let obs = Observable::product(&[pauli(Axis::X), CMatrix::identity(2), CMatrix::identity(2)]).expect("Hermitian");
    Circuit {
        n_qubits: 3,
        initial: QuantumState::from_density(rho).expect("valid DQC1 input state"),
        steps,
        readout: Readout::Expectation(obs),
    }
}

/// QNN output `a·⟨Z⊗Z⟩ + b` (times the output scale).
pub fn eval_qnn(model: &CircuitModel, x: f64) -> Result<f64> {
    expect_kind(model, AnsatzKind::Qnn)?;
    model.evaluate(x)
}

/// Sum of the even- and odd-chain amplitudes `Re⟨+|U|+⟩`.
pub fn eval_qsp(model: &CircuitModel, x: f64) -> Result<f64> {
    expect_kind(model, AnsatzKind::Qsp)?;
    model.evaluate(x)
}

/// `a·⟨σ_X⟩_clean + b` for the one-clean-qubit trace estimator.
pub fn eval_dqc1(model: &CircuitModel, x: f64) -> Result<f64> {
    expect_kind(model, AnsatzKind::Dqc1)?;
    model.evaluate(x)
}

fn expect_kind(model: &CircuitModel, kind: AnsatzKind) -> Result<()> {
    if model.kind != kind {
        return Err(Error::invalid_input("model kind does not match evaluator"));
    }
    Ok(())
}
