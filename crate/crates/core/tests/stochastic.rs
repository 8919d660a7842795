//! Statistical checks on samplers, noise and noise-aware training.

use vqint_core::ansatz::{AnsatzKind, CircuitModel};
use vqint_core::benchmarks::{Benchmark, CustomIntegrand, Integrand};
use vqint_core::circuit::NoiseInjection;
use vqint_core::losses::LossConfig;
use vqint_core::noise::{angle_offsets, noisy_integral, mean_std, NoiseConfig, NoiseKind};
use vqint_core::quadrature::integrate;
use vqint_core::rng::seeded;
use vqint_core::samplers::{sample_hmc, sample_importance, sample_uniform, HmcConfig, SampleSet};
use vqint_core::trainer::{batch_loss, train_noise_aware, OptimizerConfig};

fn gaussian(sigma: f64) -> impl Integrand {
    CustomIntegrand::new("gauss", (-1.0, 1.0), move |x: f64| (-x * x / (2.0 * sigma * sigma)).exp()).unwrap()
}

fn hmc_only() -> HmcConfig {
    HmcConfig { uniform_mix: 0.0, ..Default::default() }
}

#[test]
fn hmc_matches_truncated_gaussian_variance() {
    let f = gaussian(0.2);
    let s = sample_hmc(&f, 20_000, 3, &hmc_only()).unwrap();
    let (_, sd) = mean_std(&s.points);
    let z = integrate(|x| f.evaluate(x), -1.0, 1.0, 1e-14).unwrap();
    let var = integrate(|x| x * x * f.evaluate(x), -1.0, 1.0, 1e-14).unwrap() / z;
    assert!((sd * sd - var).abs() / var < 0.10, "{} vs {var}", sd * sd);
}

#[test]
fn hmc_bin_occupancy_follows_the_density() {
    let f = gaussian(0.4);
    let n = 40_000;
    let s = sample_hmc(&f, n, 8, &hmc_only()).unwrap();
    let z = integrate(|x| f.evaluate(x), -1.0, 1.0, 1e-14).unwrap();
    let mut counts = [0usize; 30];
    for &x in &s.points {
        counts[(((x + 1.0) / 2.0 * 30.0) as usize).min(29)] += 1;
    }
    let good = (0..30)
        .filter(|&b| {
            let lo = -1.0 + b as f64 / 15.0;
            let p = integrate(|x| f.evaluate(x), lo, lo + 1.0 / 15.0, 1e-14).unwrap() / z;
            let expect = n as f64 * p;
            let sigma = (n as f64 * p * (1.0 - p)).sqrt();
            (counts[b] as f64 - expect).abs() <= 5.0 * sigma
        })
        .count();
    assert!(good >= 28, "{good} of 30 bins within 5σ");
}

#[test]
fn samplers_are_deterministic() {
    let bw = Benchmark::from_kind(vqint_core::benchmarks::BenchmarkKind::Bw);
    let draw = |seed| -> [SampleSet; 3] {
        [
            sample_uniform(&bw, 100, seed).unwrap(),
            sample_importance(&bw, 1000, 100, seed).unwrap(),
            sample_hmc(&bw, 100, seed, &HmcConfig::default()).unwrap(),
        ]
    };
    assert_eq!(draw(4), draw(4));
    assert_ne!(draw(4)[2], draw(5)[2]);
}

#[test]
fn gate_error_vanishes_linearly_with_delta() {
    let m = CircuitModel::build(AnsatzKind::Qnn, 3, 21).unwrap();
    let compiled = m.compile();
    let clean = m.evaluate(0.4).unwrap();
    let n = compiled.rotation_count();
    let slope = |delta: f64| {
        let mut rng = seeded(9, 0);
        let mean_dev = (0..200)
            .map(|_| {
                let off = angle_offsets(&mut rng, n, delta);
                (m.evaluate_noisy(&compiled, 0.4, NoiseInjection::AngleOffsets(&off)).unwrap() - clean).abs()
            })
            .sum::<f64>()
            / 200.0;
        mean_dev / delta
    };
    let s: Vec<f64> = [1e-4, 1e-3, 1e-2].into_iter().map(slope).collect();
    let (lo, hi) = s.iter().fold((f64::MAX, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(hi / lo < 1.5, "{s:?}");
}

#[test]
fn more_runs_give_a_tighter_mean() {
    let f = Benchmark::Cpf;
    let m = CircuitModel::build(AnsatzKind::Qnn, 2, 5).unwrap();
    let cfg = NoiseConfig::new(NoiseKind::GateError, 0.01);
    let spread = |runs| {
        let means: Vec<f64> = (0..12).map(|s| noisy_integral(&m, &f, &cfg, 0.0, 1.5, runs, 100 + s).unwrap().mean).collect();
        mean_std(&means).1
    };
    assert!(spread(1000) < spread(100));
}

fn constant_samples(c: f64, n: usize) -> (impl Integrand, SampleSet) {
    let f = CustomIntegrand::new("constant", (-1.0, 1.0), move |_| c).unwrap();
    let s = sample_uniform(&f, n, 1).unwrap();
    (f, s)
}

#[test]
fn depolarizing_training_makes_progress_on_a_constant() {
    let (_, samples) = constant_samples(0.4, 40);
    let m = CircuitModel::build(AnsatzKind::Qnn, 2, 2).unwrap();
    let opt = OptimizerConfig { epochs: 50, ..Default::default() };
    let noise = NoiseConfig::new(NoiseKind::Depolarizing, 0.001);
    let run = train_noise_aware(&m, &samples, &LossConfig::default(), &opt, &noise, 3).unwrap();
    let h = &run.history;
    assert_eq!(h.len(), 50);
    assert!(h.iter().all(|v| v.is_finite()));
    let head = h[..10].iter().sum::<f64>() / 10.0;
    let tail = h[40..].iter().sum::<f64>() / 10.0;
    assert!(tail < head, "{head} -> {tail}");
    assert!(run.best_loss.unwrap() < h[0]);
}

#[test]
fn averaging_realizations_reduces_loss_variance() {
    let (_, samples) = constant_samples(0.4, 20);
    let m = CircuitModel::build(AnsatzKind::Qnn, 2, 2).unwrap();
    let compiled = m.compile();
    let n = compiled.rotation_count();
    let loss = LossConfig::default();
    let averaged = |r: usize, seed: u64| {
        let mut rng = seeded(seed, 1);
        (0..r)
            .map(|_| {
                let off = angle_offsets(&mut rng, n, 0.001);
                batch_loss(&m, &compiled, &samples.points, &samples.targets, &loss, NoiseInjection::AngleOffsets(&off)).unwrap().0
            })
            .sum::<f64>()
            / r as f64
    };
    let var = |r| mean_std(&(0..20).map(|s| averaged(r, s)).collect::<Vec<_>>()).1.powi(2);
    assert!(var(8) < var(1));
}

#[test]
fn noise_aware_training_is_reproducible() {
    let (_, samples) = constant_samples(-0.3, 30);
    let m = CircuitModel::build(AnsatzKind::Qnn, 2, 4).unwrap();
    let opt = OptimizerConfig { epochs: 20, ..Default::default() };
    let noise = NoiseConfig::new(NoiseKind::GateError, 0.01);
    let a = train_noise_aware(&m, &samples, &LossConfig::default(), &opt, &noise, 6).unwrap();
    let b = train_noise_aware(&m, &samples, &LossConfig::default(), &opt, &noise, 6).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(a.model, b.model);
}
