//! Fit quality (R²), cumulative-integral distance (W1) and endpoint
//! integrals in physical units.

use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)] // method resolution falls back to std when it is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::ansatz::{CircuitModel, CompiledModel};
use crate::benchmarks::Integrand;
use crate::circuit::NoiseInjection;
use crate::error::{Error, Result};
use crate::gradients::value_and_slope;

pub const DEFAULT_GRID: usize = 1000;
pub const DEFAULT_SUBINTERVALS: usize = 30;

/// R² = 1 − Σ(f − q)² / (N·σ²_f)
pub fn r2_score(f: &[f64], q: &[f64]) -> Result<f64> {
    if f.len() != q.len() {
        return Err(Error::invalid_input("r2 inputs differ in length"));
    }
    if f.len() < 2 {
        return Err(Error::UndefinedMetric("r2 needs at least two points".into()));
    }
    let n = f.len() as f64;
    let mean = f.iter().sum::<f64>() / n;
    let var = f.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::UndefinedMetric("r2 target has zero variance".into()));
    }
    let rss: f64 = f.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(1.0 - rss / (n * var))
}

/// `n` equally spaced points covering [−1, 1].
pub fn evaluation_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![0.0],
        _ => (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Model input for a physical endpoint.
fn model_coordinate(model: &CircuitModel, f: &dyn Integrand, s: f64) -> Result<f64> {
    let (lo, hi) = f.domain();
    let slack = 1e-12 * (hi - lo);
    if !s.is_finite() || s < lo - slack || s > hi + slack {
        return Err(Error::Extrapolation(s));
    }
    Ok(model.clamp_input(f.normalize(s)))
}

/// ∫ₐᵇ f ≈ (Q(x(b)) − Q(x(a)))·(s_max − s_min)/2.
pub fn integral(model: &CircuitModel, f: &dyn Integrand, a: f64, b: f64) -> Result<f64> {
    integral_with(model, &model.compile(), f, a, b, NoiseInjection::None)
}

pub fn integral_with(
    model: &CircuitModel,
    compiled: &CompiledModel,
    f: &dyn Integrand,
    a: f64,
    b: f64,
    noise: NoiseInjection<'_>,
) -> Result<f64> {
    let xa = model_coordinate(model, f, a)?;
    let xb = model_coordinate(model, f, b)?;
    if xa == xb {
        return Ok(0.0);
    }
    let qa = model.evaluate_noisy(compiled, xa, noise)?;
    let qb = model.evaluate_noisy(compiled, xb, noise)?;
    Ok((qb - qa) * f.jacobian())
}

/// Cumulative sums divided by their largest magnitude.
///
/// Dividing by the largest magnitude rather than the largest signed value
/// keeps the normalization meaningful for integrands whose running integral
/// is never positive.
pub fn normalized_cumulative(increments: &[f64]) -> Result<Vec<f64>> {
    let mut acc = 0.0;
    let cum: Vec<f64> = increments
        .iter()
        .map(|d| {
            acc += d;
            acc
        })
        .collect();
    let peak = cum.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(peak > 0.0) || !peak.is_finite() {
        return Err(Error::UndefinedMetric("cumulative integral is identically zero".into()));
    }
    Ok(cum.into_iter().map(|v| v / peak).collect())
}

/// Σ |J_true − J_pred|·Δx over normalized cumulative curves.
pub fn w1_from_cumulative(j_true: &[f64], j_pred: &[f64], dx: f64) -> f64 {
    j_true.iter().zip(j_pred).map(|(a, b)| (a - b).abs()).sum::<f64>() * dx
}

/// W1 over `m` equal subintervals of the domain, with Δx measured in
/// normalized coordinates (2/m).
pub fn w1_distance(model: &CircuitModel, f: &dyn Integrand, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::invalid_config("metrics.subintervals must be at least 1"));
    }
    let compiled = model.compile();
    let (lo, hi) = f.domain();
    let edge = |k: usize| if k == m { hi } else { lo + (hi - lo) * k as f64 / m as f64 };
    let mut truth = Vec::with_capacity(m);
    let mut pred = Vec::with_capacity(m);
    for k in 0..m {
        let (a, b) = (edge(k), edge(k + 1));
        truth.push(f.reference_integral(a, b)?);
        pred.push(integral_with(model, &compiled, f, a, b, NoiseInjection::None)?);
    }
    let jt = normalized_cumulative(&truth)?;
    let jp = normalized_cumulative(&pred)?;
    Ok(w1_from_cumulative(&jt, &jp, 2.0 / m as f64))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalResult {
    pub label: String,
    pub a: f64,
    pub b: f64,
    pub predicted: f64,
    pub reference: f64,
    /// |pred − ref|/|ref|; absent when the reference vanishes.
    pub rel_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub r2: f64,
    pub w1: f64,
    pub intervals: Vec<IntervalResult>,
    pub grid_size: usize,
    pub subintervals: usize,
}

/// Predicted and reference integrals over the benchmark's named windows.
pub fn subinterval_report(model: &CircuitModel, f: &dyn Integrand) -> Result<Vec<IntervalResult>> {
    let compiled = model.compile();
    f.named_intervals()
        .into_iter()
        .map(|iv| {
            let predicted = integral_with(model, &compiled, f, iv.a, iv.b, NoiseInjection::None)?;
            let reference = if iv.exact_zero { 0.0 } else { f.reference_integral(iv.a, iv.b)? };
            let rel_error = (!iv.exact_zero && reference != 0.0).then(|| (predicted - reference).abs() / reference.abs());
            Ok(IntervalResult { label: iv.label, a: iv.a, b: iv.b, predicted, reference, rel_error })
        })
        .collect()
}

/// Slopes q and targets f on the evaluation grid.
pub fn grid_predictions(model: &CircuitModel, f: &dyn Integrand, grid_size: usize) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let compiled = model.compile();
    let grid = evaluation_grid(grid_size);
    let mut q = Vec::with_capacity(grid.len());
    let mut t = Vec::with_capacity(grid.len());
    for &x in &grid {
        let xm = model.clamp_input(x);
        q.push(value_and_slope(model, &compiled, xm, NoiseInjection::None)?.1);
        t.push(f.target(x));
    }
    Ok((grid, t, q))
}

pub fn evaluate_model(model: &CircuitModel, f: &dyn Integrand, grid_size: usize, subintervals: usize) -> Result<MetricsReport> {
    let (_, t, q) = grid_predictions(model, f, grid_size)?;
    Ok(MetricsReport {
        r2: r2_score(&t, &q)?,
        w1: w1_distance(model, f, subintervals)?,
        intervals: subinterval_report(model, f)?,
        grid_size,
        subintervals,
    })
}

/// One row of plot data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub x_norm: f64,
    pub s_phys: f64,
    pub f: f64,
    pub q: f64,
    /// |q − f|/|f|, or |q − f| where f = 0.
    pub rel_err: f64,
}

pub fn plot_data(model: &CircuitModel, f: &dyn Integrand, grid_size: usize) -> Result<Vec<PlotRow>> {
    let (grid, t, q) = grid_predictions(model, f, grid_size)?;
    Ok(grid
        .iter()
        .zip(t.iter().zip(&q))
        .map(|(&x, (&fv, &qv))| {
            let diff = (qv - fv).abs();
            let rel_err = if fv != 0.0 { diff / fv.abs() } else { diff };
            PlotRow { x_norm: x, s_phys: f.denormalize(x), f: fv, q: qv, rel_err }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::AnsatzKind;
    use crate::benchmarks::Benchmark;

    #[test]
    fn r2_trivial_cases() {
        let f = [1.0, 2.0, 4.0, -1.0];
        assert_eq!(r2_score(&f, &f).unwrap(), 1.0);
        let mean = f.iter().sum::<f64>() / 4.0;
        assert!(r2_score(&f, &[mean; 4]).unwrap().abs() < 1e-15);
        assert!(matches!(r2_score(&[2.0, 2.0], &[1.0, 2.0]), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn w1_hand_example() {
        let jt = [1.0 / 3.0, 2.0 / 3.0, 1.0];
        let jp = [0.0, 0.5, 1.0];
        assert!((w1_from_cumulative(&jt, &jp, 2.0 / 3.0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn normalization_uses_largest_magnitude() {
        let j = normalized_cumulative(&[-1.0, -1.0, 0.5]).unwrap();
        assert_eq!(j, alloc::vec![-0.5, -1.0, -0.75]);
        assert!(normalized_cumulative(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn integral_is_additive_and_checks_domain() {
        let m = CircuitModel::build(AnsatzKind::Qnn, 2, 4).unwrap();
        let b = Benchmark::Cpf;
        let (x, y, z) = (-1.0, 0.4, 2.5);
        let whole = integral(&m, &b, x, z).unwrap();
        let parts = integral(&m, &b, x, y).unwrap() + integral(&m, &b, y, z).unwrap();
        assert!((whole - parts).abs() < 1e-12);
        assert_eq!(integral(&m, &b, 1.0, 1.0).unwrap(), 0.0);
        assert!(matches!(integral(&m, &b, 0.0, 7.0), Err(Error::Extrapolation(_))));
    }

    #[test]
    fn grid_is_inclusive() {
        let g = evaluation_grid(5);
        assert_eq!(g, alloc::vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }
}
