//! Training abscissae in normalized coordinates: uniform draws, importance
//! sampling on (f′)², and Hamiltonian Monte Carlo on `U = −log(|f| + ε)`.

use alloc::vec::Vec;

#[allow(unused_imports)] // method resolution falls back to std when it is linked
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::benchmarks::Integrand;
use crate::error::{Error, Result};
use crate::rng::seeded;

/// Finite-difference step in normalized units for f′ and ∇U.
pub const FD_STEP: f64 = 1e-4;

const STREAM_UNIFORM: u64 = 1;
const STREAM_POOL: u64 = 2;
const STREAM_RESAMPLE: u64 = 3;
const STREAM_MIX: u64 = 4;
const STREAM_CHAIN_BASE: u64 = 1 << 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Uniform,
    Is,
    Hmc,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 3] = [SamplerKind::Uniform, SamplerKind::Is, SamplerKind::Hmc];

    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Uniform => "uniform",
            SamplerKind::Is => "is",
            SamplerKind::Hmc => "hmc",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HmcConfig {
    /// Leapfrog steps per proposal.
    pub steps: usize,
    pub step_size: f64,
    pub chains: usize,
    pub burn_in: usize,
    /// Fraction of the final set drawn uniformly instead of by HMC.
    pub uniform_mix: f64,
    /// ε inside `−log(|f| + ε)`.
    pub regularization: f64,
}

impl Default for HmcConfig {
    fn default() -> Self {
        HmcConfig { steps: 20, step_size: 0.1, chains: 8, burn_in: 50, uniform_mix: 0.5, regularization: 1e-8 }
    }
}

impl HmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.chains == 0 {
            return Err(Error::invalid_config("sampler.hmc.steps and sampler.hmc.chains must be at least 1"));
        }
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(Error::invalid_config("sampler.hmc.step_size must be positive"));
        }
        if !(0.0..=1.0).contains(&self.uniform_mix) {
            return Err(Error::invalid_config("sampler.hmc.uniform_mix must lie in [0, 1]"));
        }
        if !(self.regularization > 0.0) {
            return Err(Error::invalid_config("sampler.hmc.regularization must be positive"));
        }
        Ok(())
    }
}

/// Training points and targets `f(s(x))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub points: Vec<f64>,
    pub targets: Vec<f64>,
    pub sampler: SamplerKind,
    pub seed: u64,
}

impl SampleSet {
    fn from_points(f: &dyn Integrand, points: Vec<f64>, sampler: SamplerKind, seed: u64) -> Result<Self> {
        let targets: Vec<f64> = points.iter().map(|&x| f.target(x)).collect();
        if targets.iter().any(|t| !t.is_finite()) {
            return Err(Error::numerical("integrand is not finite at a sampled point"));
        }
        Ok(SampleSet { points, targets, sampler, seed })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn uniform_points<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

/// One uniform draw inside each of `n` equal cells of [−1, 1].
fn stratified_points<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let w = 2.0 / n as f64;
    (0..n).map(|i| -1.0 + w * (i as f64 + rng.random_range(0.0..1.0))).collect()
}

/// How the uniform sampler spreads its points.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UniformLayout {
    /// Jittered grid: every point is marginally uniform, but each of the
    /// `n` equal cells holds exactly one.
    #[default]
    Stratified,
    /// Independent draws.
    Iid,
}

fn require_points(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid_config("sampler.n_train must be at least 1"));
    }
    Ok(())
}

pub fn sample_uniform(f: &dyn Integrand, n: usize, seed: u64) -> Result<SampleSet> {
    sample_uniform_with(f, n, seed, UniformLayout::default())
}

pub fn sample_uniform_with(f: &dyn Integrand, n: usize, seed: u64, layout: UniformLayout) -> Result<SampleSet> {
    require_points(n)?;
    let mut rng = seeded(seed, STREAM_UNIFORM);
    let points = match layout {
        UniformLayout::Stratified => stratified_points(&mut rng, n),
        UniformLayout::Iid => uniform_points(&mut rng, n),
    };
    SampleSet::from_points(f, points, SamplerKind::Uniform, seed)
}

/// Weights ∝ (f′)² on the candidate pool, by central differences.
/// Non-finite derivatives get weight 0.
pub fn importance_weights(f: &dyn Integrand, pool: &[f64]) -> Vec<f64> {
    pool.iter()
        .map(|&x| {
            let d = (f.target(x + FD_STEP) - f.target(x - FD_STEP)) / (2.0 * FD_STEP);
            if d.is_finite() {
                d * d
            } else {
                0.0
            }
        })
        .collect()
}

/// Draw `n` of `pool_size` uniform candidates with probability ∝ (f′)²,
/// with replacement. Falls back to uniform weights when every weight is 0.
pub fn sample_importance(f: &dyn Integrand, pool_size: usize, n: usize, seed: u64) -> Result<SampleSet> {
    require_points(n)?;
    if pool_size < n {
        return Err(Error::invalid_config("importance pool must hold at least n_train candidates"));
    }
    let pool = uniform_points(&mut seeded(seed, STREAM_POOL), pool_size);
    let mut weights = importance_weights(f, &pool);
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        weights.iter_mut().for_each(|w| *w = 1.0);
    }
    let mut cumulative = Vec::with_capacity(pool_size);
    let mut acc = 0.0;
    for w in &weights {
        acc += w;
        cumulative.push(acc);
    }
    let mut rng = seeded(seed, STREAM_RESAMPLE);
    let points = (0..n)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            let i = cumulative.partition_point(|&c| c <= u).min(pool_size - 1);
            pool[i]
        })
        .collect();
    SampleSet::from_points(f, points, SamplerKind::Is, seed)
}

/// Potential `U(x) = −log(|f(s(x))| + ε)`.
fn potential(f: &dyn Integrand, reg: f64, x: f64) -> f64 {
    -(f.target(x).abs() + reg).ln()
}

fn grad_potential(f: &dyn Integrand, reg: f64, x: f64) -> f64 {
    (potential(f, reg, x + FD_STEP) - potential(f, reg, x - FD_STEP)) / (2.0 * FD_STEP)
}

/// Metropolis acceptance probability for an energy change ΔH.
pub fn acceptance_probability(delta_h: f64) -> f64 {
    if delta_h <= 0.0 {
        1.0
    } else {
        (-delta_h).exp()
    }
}

/// Outcome of one HMC chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainRun {
    pub points: Vec<f64>,
    pub accepted: usize,
    pub proposals: usize,
}

/// One chain started at a uniform point; records the current position after
/// each post-burn-in proposal. Trajectories that leave [−1, 1] are rejected.
pub fn hmc_chain(f: &dyn Integrand, cfg: &HmcConfig, n: usize, seed: u64, chain: u64) -> ChainRun {
    let mut rng = seeded(seed, STREAM_CHAIN_BASE + chain);
    let reg = cfg.regularization;
    let eps = cfg.step_size;
    let mut x: f64 = rng.random_range(-1.0..=1.0);
    let mut u = potential(f, reg, x);
    let mut points = Vec::with_capacity(n);
    let mut accepted = 0;
    let total = cfg.burn_in + n;
    for k in 0..total {
        let p0: f64 = rng.sample(StandardNormal);
        let mut xn = x;
        let mut p = p0 - 0.5 * eps * grad_potential(f, reg, xn);
        let mut inside = true;
        for step in 0..cfg.steps {
            xn += eps * p;
            if !(-1.0..=1.0).contains(&xn) {
                inside = false;
                break;
            }
            let g = grad_potential(f, reg, xn);
            p -= if step + 1 == cfg.steps { 0.5 * eps * g } else { eps * g };
        }
        // The uniform draw is consumed unconditionally so streams stay aligned.
        let coin: f64 = rng.random();
        if inside {
            let un = potential(f, reg, xn);
            let dh = (un + 0.5 * p * p) - (u + 0.5 * p0 * p0);
            if dh.is_finite() && coin < acceptance_probability(dh) {
                x = xn;
                u = un;
                if k >= cfg.burn_in {
                    accepted += 1;
                }
            }
        }
        if k >= cfg.burn_in {
            points.push(x);
        }
    }
    ChainRun { points, accepted, proposals: n }
}

/// HMC points from `cfg.chains` independent chains, merged with exactly
/// `round(uniform_mix·n)` uniform points.
pub fn sample_hmc(f: &dyn Integrand, n: usize, seed: u64, cfg: &HmcConfig) -> Result<SampleSet> {
    require_points(n)?;
    cfg.validate()?;
    let n_uniform = uniform_share(n, cfg.uniform_mix);
    let n_hmc = n - n_uniform;
    let mut points = Vec::with_capacity(n);
    let chains = cfg.chains as u64;
    for c in 0..chains {
        let share = n_hmc / cfg.chains + usize::from((c as usize) < n_hmc % cfg.chains);
        if share > 0 {
            points.extend(hmc_chain(f, cfg, share, seed, c).points);
        }
    }
    points.extend(uniform_points(&mut seeded(seed, STREAM_MIX), n_uniform));
    SampleSet::from_points(f, points, SamplerKind::Hmc, seed)
}

/// Number of uniform points in a mixed HMC set.
pub fn uniform_share(n: usize, mix: f64) -> usize {
    ((mix * n as f64).round() as usize).min(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{Benchmark, BreitWigner, CustomIntegrand};

    #[test]
    fn uniform_is_reproducible_and_in_range() {
        let a = sample_uniform(&Benchmark::Cpf, 4, 9).unwrap();
        let b = sample_uniform(&Benchmark::Cpf, 4, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.points.iter().all(|x| (-1.0..=1.0).contains(x)));
        assert!(sample_uniform(&Benchmark::Cpf, 0, 9).is_err());
    }

    #[test]
    fn uniform_mean_within_three_sigma() {
        let n = 100_000;
        for layout in [UniformLayout::Iid, UniformLayout::Stratified] {
            let s = sample_uniform_with(&Benchmark::Step, n, 3, layout).unwrap();
            let mean = s.points.iter().sum::<f64>() / n as f64;
            // U[−1, 1] has variance 1/3.
            assert!(mean.abs() < 3.0 / (3.0 * n as f64).sqrt(), "{layout:?}");
        }
    }

    #[test]
    fn stratified_layout_fills_every_cell_once() {
        let n = 50;
        let s = sample_uniform(&Benchmark::Cpf, n, 12).unwrap();
        let mut cells: Vec<usize> = s.points.iter().map(|x| (((x + 1.0) / 2.0 * n as f64) as usize).min(n - 1)).collect();
        cells.sort_unstable();
        assert_eq!(cells, (0..n).collect::<Vec<_>>());
        assert_ne!(s.points, sample_uniform_with(&Benchmark::Cpf, n, 12, UniformLayout::Iid).unwrap().points);
    }

    #[test]
    fn importance_concentrates_on_bw_peak() {
        let bw = BreitWigner::default();
        let b = Benchmark::Bw(bw);
        let n = 2000;
        let s = sample_importance(&b, 10 * n, n, 17).unwrap();
        let window = |x: &f64| (b.denormalize(*x) - bw.mass).abs() <= 3.0 * bw.width;
        let frac = s.points.iter().filter(|x| window(x)).count() as f64 / n as f64;
        assert!(frac > 6.0 * bw.width / 60.0);
    }

    #[test]
    fn importance_constant_target_falls_back_to_uniform() {
        let c = CustomIntegrand::new("flat", (-1.0, 1.0), |_| 2.0).unwrap();
        let s = sample_importance(&c, 100_000, 10_000, 4).unwrap();
        let mut xs = s.points.clone();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let cdf = (x + 1.0) / 2.0;
                (cdf - i as f64 / n).abs().max((cdf - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.05);
    }

    #[test]
    fn importance_on_step_sits_at_the_jump() {
        let n = 10_000;
        let s = sample_importance(&Benchmark::Step, 10 * n, n, 5).unwrap();
        let near = s.points.iter().filter(|x| x.abs() <= 2.0 * FD_STEP).count();
        assert!(near as f64 >= 0.99 * n as f64);
    }

    #[test]
    fn zero_energy_change_is_always_accepted() {
        assert_eq!(acceptance_probability(0.0), 1.0);
        assert_eq!(acceptance_probability(-3.0), 1.0);
        assert!((acceptance_probability(1.0) - (-1.0f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn hmc_mix_count_and_domain() {
        let cfg = HmcConfig::default();
        let s = sample_hmc(&Benchmark::Cpf, 201, 8, &cfg).unwrap();
        assert_eq!(s.len(), 201);
        assert!(s.points.iter().all(|x| (-1.0..=1.0).contains(x)));
        assert_eq!(uniform_share(201, 0.5), 101);
        assert_eq!(s, sample_hmc(&Benchmark::Cpf, 201, 8, &cfg).unwrap());
    }
}
