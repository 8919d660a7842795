//! Gate-angle perturbations, bit-flip and depolarizing channels, and the
//! repeated-run noisy integral.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // method resolution falls back to std when it is linked
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ansatz::{CircuitModel, CompiledModel};
use crate::benchmarks::Integrand;
use crate::circuit::NoiseInjection;
use crate::error::{Error, Result};
use crate::metrics::integral_with;
use crate::quantum::gates::{pauli, Axis};
use crate::quantum::matrix::CMatrix;
use crate::rng::seeded;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    None,
    GateError,
    BitFlip,
    Depolarizing,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::None => "none",
            NoiseKind::GateError => "gate_error",
            NoiseKind::BitFlip => "bit_flip",
            NoiseKind::Depolarizing => "depolarizing",
        }
    }

    /// Channels are exact under density-matrix evaluation; only gate error is sampled.
    pub fn is_stochastic(self) -> bool {
        self == NoiseKind::GateError
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub kind: NoiseKind,
    /// Probability p for channels, angle scale δ for gate error.
    pub strength: f64,
    /// Noise draws averaged per training epoch; defaults to 8 for gate error, 1 otherwise.
    pub realizations: Option<usize>,
    /// Repetitions of the noisy integral evaluation.
    pub runs: usize,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig { kind: NoiseKind::None, strength: 0.0, realizations: None, runs: 1000 }
    }
}

impl NoiseConfig {
    pub fn new(kind: NoiseKind, strength: f64) -> Self {
        NoiseConfig { kind, strength, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.strength) {
            return Err(Error::invalid_config("noise.strength must lie in [0, 1]"));
        }
        if self.realizations == Some(0) || self.runs == 0 {
            return Err(Error::invalid_config("noise.realizations and noise.runs must be at least 1"));
        }
        Ok(())
    }

    /// No noise is applied: kind none or zero strength.
    pub fn is_silent(&self) -> bool {
        self.kind == NoiseKind::None || self.strength == 0.0
    }

    pub fn realizations(&self) -> usize {
        match (self.realizations, self.kind.is_stochastic()) {
            (Some(r), true) => r,
            (None, true) => 8,
            (_, false) => 1,
        }
    }
}

/// θ′ = θ + δ·φ with φ ~ N(0, 1) per entry.
pub fn perturb_angles(theta: &[f64], delta: f64, seed: u64) -> Vec<f64> {
    let mut rng = seeded(seed, 0x6761_7465);
    let offsets = angle_offsets(&mut rng, theta.len(), delta);
    theta.iter().zip(offsets).map(|(t, o)| t + o).collect()
}

/// `n` independent offsets δ·φ.
pub fn angle_offsets<R: Rng>(rng: &mut R, n: usize, delta: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let phi: f64 = rng.sample(StandardNormal);
            delta * phi
        })
        .collect()
}

/// Single-qubit Kraus operators for a channel kind.
pub fn channel_ops(kind: NoiseKind, p: f64) -> Result<Vec<CMatrix>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid_config("channel probability must lie in [0, 1]"));
    }
    match kind {
        NoiseKind::BitFlip => {
            let id = CMatrix::identity(2).scale_real((1.0 - p).sqrt());
            Ok(vec![id, pauli(Axis::X).scale_real(p.sqrt())])
        }
        // Kraus form of ρ ↦ p/2·I + (1 − p)ρ: weights 1 − 3p/4 on I and p/4 per Pauli.
        NoiseKind::Depolarizing => {
            let id = CMatrix::identity(2).scale_real((1.0 - 0.75 * p).sqrt());
            let w = (0.25 * p).sqrt();
            Ok(vec![id, pauli(Axis::X).scale_real(w), pauli(Axis::Y).scale_real(w), pauli(Axis::Z).scale_real(w)])
        }
        NoiseKind::None | NoiseKind::GateError => Err(Error::invalid_config("noise kind has no Kraus representation")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisyIntegral {
    pub mean: f64,
    /// Sample standard deviation over runs; 0 for deterministic channels.
    pub std: f64,
    pub runs: usize,
}

/// ∫ₐᵇ under noise, repeated `runs` times for gate error.
///
/// Each run draws one offset per rotation gate and uses it for both
/// endpoints. Channel noise is deterministic, so it is evaluated once.
pub fn noisy_integral(
    model: &CircuitModel,
    f: &dyn Integrand,
    cfg: &NoiseConfig,
    a: f64,
    b: f64,
    runs: usize,
    seed: u64,
) -> Result<NoisyIntegral> {
    cfg.validate()?;
    if runs == 0 {
        return Err(Error::invalid_config("noise.runs must be at least 1"));
    }
    let compiled = model.compile();
    match cfg.kind {
        NoiseKind::None => {
            let v = integral_with(model, &compiled, f, a, b, NoiseInjection::None)?;
            Ok(NoisyIntegral { mean: v, std: 0.0, runs: 1 })
        }
        NoiseKind::BitFlip | NoiseKind::Depolarizing => {
            let ops = channel_ops(cfg.kind, cfg.strength)?;
            let v = integral_with(model, &compiled, f, a, b, NoiseInjection::Channel(&ops))?;
            Ok(NoisyIntegral { mean: v, std: 0.0, runs: 1 })
        }
        NoiseKind::GateError => {
            let values = gate_error_samples(model, &compiled, f, cfg.strength, a, b, runs, seed)?;
            let (mean, std) = mean_std(&values);
            Ok(NoisyIntegral { mean, std, runs })
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn gate_error_samples(
    model: &CircuitModel,
    compiled: &CompiledModel,
    f: &dyn Integrand,
    delta: f64,
    a: f64,
    b: f64,
    runs: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let n = compiled.rotation_count();
    (0..runs)
        .map(|r| {
            let mut rng = seeded(seed, 0x6e6f_6973_6500_0000 + r as u64);
            let off = angle_offsets(&mut rng, n, delta);
            integral_with(model, compiled, f, a, b, NoiseInjection::AngleOffsets(&off))
        })
        .collect()
}

/// Mean and sample standard deviation (n − 1 denominator; 0 for one value).
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
