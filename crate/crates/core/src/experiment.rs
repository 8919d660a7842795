//! Declarative experiment description and the sample → train → evaluate
//! pipeline. File formats and process plumbing live in the CLI crate.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::ansatz::{AnsatzKind, CircuitModel};
use crate::benchmarks::{Benchmark, BenchmarkKind, BreitWigner, Integrand};
use crate::error::{Error, Result};
use crate::losses::{LossConfig, LossKind};
use crate::metrics::{evaluate_model, grid_predictions, plot_data, MetricsReport, PlotRow, DEFAULT_GRID, DEFAULT_SUBINTERVALS};
use crate::noise::{noisy_integral, NoiseConfig, NoiseKind};
use crate::rng::{derive_seed, tag_of};
use crate::samplers::{sample_hmc, sample_importance, sample_uniform_with, HmcConfig, SampleSet, SamplerKind, UniformLayout};
use crate::trainer::{train_noise_aware, OptimizerConfig, TrainingRun};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnsatzConfig {
    pub kind: AnsatzKind,
    pub layers: usize,
}

impl Default for AnsatzConfig {
    fn default() -> Self {
        AnsatzConfig { kind: AnsatzKind::Qnn, layers: 10 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    pub n_train: usize,
    /// Point layout of the uniform sampler.
    pub layout: UniformLayout,
    /// Importance-sampling candidate pool, as a multiple of `n_train`.
    pub pool_factor: usize,
    pub hmc: HmcConfig,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            kind: SamplerKind::Uniform,
            n_train: 200,
            layout: UniformLayout::default(),
            pool_factor: 10,
            hmc: HmcConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub grid_size: usize,
    pub subintervals: usize,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig { grid_size: DEFAULT_GRID, subintervals: DEFAULT_SUBINTERVALS }
    }
}

/// Axes of a sampling × loss sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub samplers: Vec<SamplerKind>,
    pub losses: Vec<LossKind>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { samplers: SamplerKind::ALL.to_vec(), losses: LossKind::ALL.to_vec() }
    }
}

/// Noise models applied to a trained model's integral.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseEvalConfig {
    pub kinds: Vec<NoiseKind>,
    pub strength: f64,
    pub runs: usize,
    /// Physical endpoints; defaults to the benchmark's widest named interval.
    pub interval: Option<(f64, f64)>,
}

impl Default for NoiseEvalConfig {
    fn default() -> Self {
        NoiseEvalConfig {
            kinds: vec![NoiseKind::GateError, NoiseKind::BitFlip, NoiseKind::Depolarizing],
            strength: 0.001,
            runs: 1000,
            interval: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub benchmark: BenchmarkKind,
    /// Breit–Wigner width Γ in GeV; the fitted default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bw_width: Option<f64>,
    #[serde(default)]
    pub ansatz: AnsatzConfig,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub loss: LossConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    /// Noise injected while training.
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub noise_eval: NoiseEvalConfig,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

fn field(name: &str, e: Error) -> Error {
    match e {
        Error::InvalidConfig(msg) if msg.starts_with(name) => Error::InvalidConfig(msg),
        Error::InvalidConfig(msg) => Error::InvalidConfig(format!("{name}: {msg}")),
        other => other,
    }
}

impl ExperimentConfig {
    pub fn new(benchmark: BenchmarkKind, seed: u64) -> Self {
        ExperimentConfig {
            benchmark,
            bw_width: None,
            ansatz: AnsatzConfig::default(),
            sampler: SamplerConfig::default(),
            loss: LossConfig::default(),
            optimizer: OptimizerConfig::default(),
            noise: NoiseConfig::default(),
            metrics: MetricsConfig::default(),
            sweep: SweepConfig::default(),
            noise_eval: NoiseEvalConfig::default(),
            seed,
            output_dir: None,
        }
    }

    /// Checks every section; messages name the offending key.
    pub fn validate(&self) -> Result<()> {
        if let Some(w) = self.bw_width {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::invalid_config("bw_width must be a positive number of GeV"));
            }
            if self.benchmark != BenchmarkKind::Bw {
                return Err(Error::invalid_config("bw_width only applies to benchmark \"bw\""));
            }
        }
        if self.ansatz.layers == 0 {
            return Err(Error::invalid_config("ansatz.layers must be at least 1"));
        }
        if self.sampler.n_train == 0 {
            return Err(Error::invalid_config("sampler.n_train must be at least 1"));
        }
        if self.sampler.pool_factor == 0 {
            return Err(Error::invalid_config("sampler.pool_factor must be at least 1"));
        }
        self.sampler.hmc.validate().map_err(|e| field("sampler.hmc", e))?;
        self.loss.validate().map_err(|e| field("loss", e))?;
        if self.loss.kind == LossKind::MseKl && self.sampler.n_train < 2 {
            return Err(Error::invalid_config("loss.kind: mse_kl needs sampler.n_train of at least 2"));
        }
        self.optimizer.validate().map_err(|e| field("optimizer", e))?;
        self.noise.validate().map_err(|e| field("noise", e))?;
        if self.metrics.grid_size < 2 || self.metrics.subintervals == 0 {
            return Err(Error::invalid_config("metrics.grid_size must be at least 2 and metrics.subintervals at least 1"));
        }
        if self.sweep.samplers.is_empty() || self.sweep.losses.is_empty() {
            return Err(Error::invalid_config("sweep.samplers and sweep.losses must not be empty"));
        }
        let ne = &self.noise_eval;
        if !(0.0..=1.0).contains(&ne.strength) || ne.runs == 0 {
            return Err(Error::invalid_config("noise_eval.strength must lie in [0, 1] and noise_eval.runs be at least 1"));
        }
        if let Some((a, b)) = ne.interval {
            let (lo, hi) = self.integrand().domain();
            if !(lo <= a && a <= hi && lo <= b && b <= hi) {
                return Err(Error::invalid_config("noise_eval.interval must lie inside the benchmark domain"));
            }
        }
        Ok(())
    }

    pub fn integrand(&self) -> Benchmark {
        match (self.benchmark, self.bw_width) {
            (BenchmarkKind::Bw, Some(width)) => Benchmark::Bw(BreitWigner { width, ..BreitWigner::default() }),
            (kind, _) => Benchmark::from_kind(kind),
        }
    }

    pub fn seeds(&self) -> ExperimentSeeds {
        ExperimentSeeds::from_master(self.seed)
    }

    /// The same experiment with one sweep cell's sampler, loss and seed.
    pub fn for_cell(&self, cell: &SweepCell) -> Self {
        let mut c = self.clone();
        c.sampler.kind = cell.sampler;
        c.loss.kind = cell.loss;
        c.seed = cell.seed;
        c
    }

    /// Endpoints for the noise table.
    pub fn noise_interval(&self) -> Result<(String, f64, f64)> {
        if let Some((a, b)) = self.noise_eval.interval {
            return Ok((format!("[{a}, {b}]"), a, b));
        }
        let f = self.integrand();
        // A zero reference has no relative error to report.
        let iv = f.named_intervals().into_iter().rfind(|iv| !iv.exact_zero);
        let (lo, hi) = f.domain();
        Ok(iv.map(|iv| (iv.label, iv.a, iv.b)).unwrap_or_else(|| (String::from("domain"), lo, hi)))
    }
}

/// Independent child seeds for the stochastic stages of one run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentSeeds {
    pub model: u64,
    pub sampler: u64,
    pub training: u64,
    pub noise: u64,
}

impl ExperimentSeeds {
    pub fn from_master(seed: u64) -> Self {
        ExperimentSeeds {
            model: derive_seed(seed, tag_of("model")),
            sampler: derive_seed(seed, tag_of("sampler")),
            training: derive_seed(seed, tag_of("training")),
            noise: derive_seed(seed, tag_of("noise")),
        }
    }
}

/// Training points for the configured sampler.
pub fn draw_samples(f: &dyn Integrand, cfg: &SamplerConfig, seed: u64) -> Result<SampleSet> {
    match cfg.kind {
        SamplerKind::Uniform => sample_uniform_with(f, cfg.n_train, seed, cfg.layout),
        SamplerKind::Is => sample_importance(f, cfg.pool_factor * cfg.n_train, cfg.n_train, seed),
        SamplerKind::Hmc => sample_hmc(f, cfg.n_train, seed, &cfg.hmc),
    }
}

/// Largest |f| on the evaluation grid; the model's output scale.
pub fn target_scale(f: &dyn Integrand, grid_size: usize) -> Result<f64> {
    let probe = CircuitModel::build(AnsatzKind::Qnn, 1, 0)?;
    let (_, targets, _) = grid_predictions(&probe, f, grid_size)?;
    let peak = targets.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    if !(peak > 0.0) || !peak.is_finite() {
        return Err(Error::numerical("integrand vanishes or is not finite on the grid"));
    }
    Ok(peak)
}

/// Everything one run produces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub samples: SampleSet,
    pub training: TrainingRun,
    pub metrics: MetricsReport,
    pub plot: Vec<PlotRow>,
}

/// Sample, train (noise-aware when `cfg.noise` is active) and evaluate.
///
/// A diverged run still returns its best parameters and their metrics;
/// callers inspect `training.diverged`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let f = cfg.integrand();
    let seeds = cfg.seeds();
    let scale = target_scale(&f, cfg.metrics.grid_size)?;
    let model = CircuitModel::build(cfg.ansatz.kind, cfg.ansatz.layers, seeds.model)?.with_output_scale(scale);
    let samples = draw_samples(&f, &cfg.sampler, seeds.sampler)?;
    let training = train_noise_aware(&model, &samples, &cfg.loss, &cfg.optimizer, &cfg.noise, seeds.training)?;
    let metrics = evaluate_model(&training.model, &f, cfg.metrics.grid_size, cfg.metrics.subintervals)?;
    let plot = plot_data(&training.model, &f, cfg.metrics.grid_size)?;
    Ok(ExperimentOutcome { samples, training, metrics, plot })
}

/// One sampler × loss combination.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepCell {
    pub sampler: SamplerKind,
    pub loss: LossKind,
    pub seed: u64,
}

/// Cells in sampler-major order with seeds hashed from the master seed and
/// the cell's names.
pub fn sweep_cells(cfg: &ExperimentConfig) -> Vec<SweepCell> {
    let mut out = Vec::with_capacity(cfg.sweep.samplers.len() * cfg.sweep.losses.len());
    for &sampler in &cfg.sweep.samplers {
        for &loss in &cfg.sweep.losses {
            let seed = derive_seed(derive_seed(cfg.seed, tag_of(sampler.name())), tag_of(loss.name()));
            out.push(SweepCell { sampler, loss, seed });
        }
    }
    out
}

/// Indices of the `k` smallest finite scores, ties broken by position.
pub fn best_k(scores: &[Option<f64>], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).filter(|&i| scores[i].is_some_and(f64::is_finite)).collect();
    idx.sort_by(|&a, &b| scores[a].unwrap().total_cmp(&scores[b].unwrap()).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// One row of the noise table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseRow {
    pub kind: NoiseKind,
    pub strength: f64,
    pub mean: f64,
    /// Present for stochastic noise only.
    pub std: Option<f64>,
    pub runs: usize,
    pub reference: f64,
    pub rel_error: Option<f64>,
}

/// Integral of a trained model over `[a, b]` under each configured noise kind.
pub fn noise_table(model: &CircuitModel, f: &dyn Integrand, cfg: &NoiseEvalConfig, a: f64, b: f64, seed: u64) -> Result<Vec<NoiseRow>> {
    let exact_zero = f.named_intervals().iter().any(|iv| iv.exact_zero && iv.a == a && iv.b == b);
    let reference = if exact_zero { 0.0 } else { f.reference_integral(a, b)? };
    cfg.kinds
        .iter()
        .map(|&kind| {
            let nc = NoiseConfig { kind, strength: cfg.strength, realizations: None, runs: cfg.runs };
            let r = noisy_integral(model, f, &nc, a, b, cfg.runs, derive_seed(seed, tag_of(kind.name())))?;
            let rel_error = (reference != 0.0).then(|| (r.mean - reference).abs() / reference.abs());
            let std = kind.is_stochastic().then_some(r.std);
            Ok(NoiseRow { kind, strength: cfg.strength, mean: r.mean, std, runs: r.runs, reference, rel_error })
        })
        .collect()
}
