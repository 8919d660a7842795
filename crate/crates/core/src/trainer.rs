//! Adam optimization of a circuit model so that its slope matches sampled
//! target values, optionally under injected noise.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // method resolution falls back to std when it is linked
use num_traits::Float;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::ansatz::{CircuitModel, CompiledModel};
use crate::circuit::NoiseInjection;
use crate::error::{Error, Result};
use crate::gradients::backprop;
use crate::losses::LossConfig;
use crate::noise::{angle_offsets, channel_ops, NoiseConfig, NoiseKind};
use crate::rng::seeded;
use crate::samplers::SampleSet;

/// Divergence threshold relative to the first epoch's loss.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

const STREAM_SHUFFLE: u64 = 0x7368_7566;
const STREAM_NOISE: u64 = 0x6e6f_6973;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub epochs: usize,
    /// Mini-batch size; `None` trains on the full sample set each epoch.
    pub batch_size: Option<usize>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { lr: 0.02, beta1: 0.9, beta2: 0.999, eps: 1e-8, epochs: 3000, batch_size: None }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr > 0.0
            && self.lr.is_finite()
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0
            && self.batch_size != Some(0);
        if !ok {
            return Err(Error::invalid_config(
                "optimizer: lr and eps must be positive, betas in [0, 1), batch_size at least 1",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        AdamState { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, cfg: &OptimizerConfig) -> Result<()> {
    if params.len() != grads.len() || state.m.len() != params.len() {
        return Err(Error::invalid_input("parameter, gradient and state lengths differ"));
    }
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient(i));
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingRun {
    /// Parameters with the lowest recorded loss.
    pub model: CircuitModel,
    /// Loss at the start of each epoch, in units of the model's output scale.
    pub history: Vec<f64>,
    pub best_loss: Option<f64>,
    pub best_epoch: Option<usize>,
    /// Set when training stopped early because the loss blew up.
    pub diverged: bool,
}

/// Loss and its parameter gradient over one batch.
///
/// Losses are computed on `q/scale` against `f/scale`, where `scale` is the
/// model's fixed output scale, so that Adam's step size is meaningful for
/// targets of any magnitude.
pub fn batch_loss(
    model: &CircuitModel,
    compiled: &CompiledModel,
    points: &[f64],
    targets: &[f64],
    loss: &LossConfig,
    noise: NoiseInjection<'_>,
) -> Result<(f64, Vec<f64>)> {
    let scale = model.output_scale;
    let mut q = Vec::with_capacity(points.len());
    let mut dq = Vec::with_capacity(points.len());
    for &x in points {
        let bp = backprop(model, compiled, model.clamp_input(x), noise, 0.0, 1.0)?;
        q.push(bp.slope / scale);
        dq.push(bp.grad);
    }
    let f: Vec<f64> = targets.iter().map(|t| t / scale).collect();
    let lv = loss.evaluate(&q, &f)?;
    let mut grad = vec![0.0; model.param_count()];
    for (g_i, row) in lv.gradient.iter().zip(&dq) {
        let w = g_i / scale;
        for (acc, d) in grad.iter_mut().zip(row) {
            *acc += w * d;
        }
    }
    Ok((lv.value, grad))
}

enum EpochNoise {
    Silent,
    Gate { delta: f64, realizations: usize },
    Channel(Vec<crate::quantum::matrix::CMatrix>),
}

/// Full-batch (or mini-batch) Adam training against `samples`.
pub fn train(model: &CircuitModel, samples: &SampleSet, loss: &LossConfig, opt: &OptimizerConfig, seed: u64) -> Result<TrainingRun> {
    run(model, samples, loss, opt, EpochNoise::Silent, seed)
}

/// Training with the evaluation-time noise model in the forward pass; the
/// loss and gradient are averaged over the configured realizations.
pub fn train_noise_aware(
    model: &CircuitModel,
    samples: &SampleSet,
    loss: &LossConfig,
    opt: &OptimizerConfig,
    noise: &NoiseConfig,
    seed: u64,
) -> Result<TrainingRun> {
    noise.validate()?;
    let mode = if noise.is_silent() {
        EpochNoise::Silent
    } else {
        match noise.kind {
            NoiseKind::GateError => EpochNoise::Gate { delta: noise.strength, realizations: noise.realizations() },
            kind => EpochNoise::Channel(channel_ops(kind, noise.strength)?),
        }
    };
    run(model, samples, loss, opt, mode, seed)
}

fn run(
    model: &CircuitModel,
    samples: &SampleSet,
    loss: &LossConfig,
    opt: &OptimizerConfig,
    noise: EpochNoise,
    seed: u64,
) -> Result<TrainingRun> {
    model.validate()?;
    loss.validate()?;
    opt.validate()?;
    if samples.is_empty() || samples.points.len() != samples.targets.len() {
        return Err(Error::invalid_input("training needs a non-empty sample set"));
    }
    let compiled = model.compile();
    let n_rot = compiled.rotation_count();
    let mut current = model.clone();
    let mut params = current.params();
    let mut state = AdamState::new(params.len());
    let mut history = Vec::with_capacity(opt.epochs);
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut shuffle_rng = seeded(seed, STREAM_SHUFFLE);
    let mut noise_rng = seeded(seed, STREAM_NOISE);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut initial_loss = None;
    let mut diverged = false;
    for epoch in 0..opt.epochs {
        let batch: Vec<usize> = match opt.batch_size {
            Some(b) if b < order.len() => {
                order.shuffle(&mut shuffle_rng);
                order[..b].to_vec()
            }
            _ => order.clone(),
        };
        let xs: Vec<f64> = batch.iter().map(|&i| samples.points[i]).collect();
        let fs: Vec<f64> = batch.iter().map(|&i| samples.targets[i]).collect();
        let step = (|| -> Result<(f64, Vec<f64>)> {
            Ok(match &noise {
                EpochNoise::Silent => batch_loss(&current, &compiled, &xs, &fs, loss, NoiseInjection::None)?,
                EpochNoise::Channel(ops) => batch_loss(&current, &compiled, &xs, &fs, loss, NoiseInjection::Channel(ops))?,
                EpochNoise::Gate { delta, realizations } => {
                    let mut value = 0.0;
                    let mut grad = vec![0.0; params.len()];
                    for _ in 0..*realizations {
                        let off = angle_offsets(&mut noise_rng, n_rot, *delta);
                        let (v, g) = batch_loss(&current, &compiled, &xs, &fs, loss, NoiseInjection::AngleOffsets(&off))?;
                        value += v;
                        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
                    }
                    let r = *realizations as f64;
                    grad.iter_mut().for_each(|a| *a /= r);
                    (value / r, grad)
                }
            })
        })();
        // Overflowing parameters show up in the gradient before the loss.
        let (value, grad) = match step {
            Err(Error::NonFiniteGradient(_)) => {
                diverged = true;
                break;
            }
            r => r?,
        };
        let initial = *initial_loss.get_or_insert(value);
        if !value.is_finite() || value > DIVERGENCE_FACTOR * initial.max(f64::MIN_POSITIVE) {
            diverged = true;
            break;
        }
        history.push(value);
        if best.as_ref().is_none_or(|(b, _, _)| value < *b) {
            best = Some((value, epoch, params.clone()));
        }
        adam_step(&mut params, &grad, &mut state, opt)?;
        current.set_params(&params);
    }
    let mut out = model.clone();
    let (best_loss, best_epoch) = match best {
        Some((l, e, p)) => {
            out.set_params(&p);
            (Some(l), Some(e))
        }
        None => (None, None),
    };
    Ok(TrainingRun { model: out, history, best_loss, best_epoch, diverged })
}
