//! Training objectives comparing the model slope `q` with target values `f`.

use alloc::vec::Vec;
use core::f64::consts::LN_2;

#[allow(unused_imports)] // method resolution falls back to std when it is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Mse,
    Chi2,
    LogCosh,
    MseKl,
}

impl LossKind {
    pub const ALL: [LossKind; 4] = [LossKind::Mse, LossKind::Chi2, LossKind::LogCosh, LossKind::MseKl];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Mse => "mse",
            LossKind::Chi2 => "chi2",
            LossKind::LogCosh => "log_cosh",
            LossKind::MseKl => "mse_kl",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    pub kind: LossKind,
    /// Weight of the KL term in `mse_kl`.
    pub lambda: f64,
    /// Regularizer in the χ² denominator.
    pub eps: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig { kind: LossKind::Mse, lambda: 0.1, eps: 1e-8 }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::invalid_config("loss.lambda must be a finite non-negative number"));
        }
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::invalid_config("loss.eps must be positive"));
        }
        Ok(())
    }

    pub fn evaluate(&self, q: &[f64], f: &[f64]) -> Result<LossValue> {
        match self.kind {
            LossKind::Mse => mse(q, f),
            LossKind::Chi2 => chi2(q, f, self.eps),
            LossKind::LogCosh => log_cosh(q, f),
            LossKind::MseKl => mse_kl(q, f, self.lambda),
        }
    }
}

/// Loss value and its gradient with respect to each `qᵢ`.
#[derive(Clone, Debug, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub gradient: Vec<f64>,
}

fn check(q: &[f64], f: &[f64], min_len: usize) -> Result<f64> {
    if q.len() != f.len() {
        return Err(Error::invalid_input("prediction and target lengths differ"));
    }
    if q.len() < min_len {
        return Err(Error::invalid_input("batch too small for this loss"));
    }
    Ok(q.len() as f64)
}

/// (1/N) Σ (qᵢ − fᵢ)²
pub fn mse(q: &[f64], f: &[f64]) -> Result<LossValue> {
    let n = check(q, f, 1)?;
    let value = q.iter().zip(f).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n;
    let gradient = q.iter().zip(f).map(|(a, b)| 2.0 * (a - b) / n).collect();
    Ok(LossValue { value, gradient })
}

/// (1/N) Σ (qᵢ − fᵢ)² / (|fᵢ| + ε)
pub fn chi2(q: &[f64], f: &[f64], eps: f64) -> Result<LossValue> {
    let n = check(q, f, 1)?;
    if !(eps > 0.0) {
        return Err(Error::invalid_input("chi2 regularizer must be positive"));
    }
    let mut value = 0.0;
    let mut gradient = Vec::with_capacity(q.len());
    for (a, b) in q.iter().zip(f) {
        let w = 1.0 / (b.abs() + eps);
        value += (a - b) * (a - b) * w;
        gradient.push(2.0 * (a - b) * w / n);
    }
    Ok(LossValue { value: value / n, gradient })
}

/// log(cosh r) without overflow or cancellation.
pub fn log_cosh_scalar(r: f64) -> f64 {
    let a = r.abs();
    if a < 1.0 {
        // cosh r − 1 = 2 sinh²(r/2); log1p keeps full relative precision near 0.
        let h = (0.5 * a).sinh();
        (2.0 * h * h).ln_1p()
    } else {
        a + (-2.0 * a).exp().ln_1p() - LN_2
    }
}

/// (1/N) Σ log cosh(qᵢ − fᵢ)
pub fn log_cosh(q: &[f64], f: &[f64]) -> Result<LossValue> {
    let n = check(q, f, 1)?;
    let value = q.iter().zip(f).map(|(a, b)| log_cosh_scalar(a - b)).sum::<f64>() / n;
    let gradient = q.iter().zip(f).map(|(a, b)| (a - b).tanh() / n).collect();
    Ok(LossValue { value, gradient })
}

/// Numerically stable softmax over the batch.
pub fn softmax(v: &[f64]) -> Vec<f64> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}

/// log-softmax, used so that KL stays finite for extreme logits.
fn log_softmax(v: &[f64]) -> Vec<f64> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    v.iter().map(|x| x - lse).collect()
}

/// MSE + λ·KL(σ(f) ‖ σ(q)), with σ the softmax over the batch and the KL
/// sum left unnormalized.
pub fn mse_kl(q: &[f64], f: &[f64], lambda: f64) -> Result<LossValue> {
    check(q, f, 2)?;
    let mut out = mse(q, f)?;
    if lambda == 0.0 {
        return Ok(out);
    }
    let log_p = log_softmax(f);
    let log_phat = log_softmax(q);
    let kl: f64 = log_p.iter().zip(&log_phat).map(|(lp, lq)| lp.exp() * (lp - lq)).sum();
    out.value += lambda * kl.max(0.0);
    // ∂KL/∂qᵢ = p̂ᵢ − pᵢ
    for ((g, lp), lq) in out.gradient.iter_mut().zip(&log_p).zip(&log_phat) {
        *g += lambda * (lq.exp() - lp.exp());
    }
    Ok(out)
}
