//! The CLI subcommands as library functions.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use vqint_core::ansatz::CircuitModel;
use vqint_core::benchmarks::{Benchmark, BenchmarkKind, Integrand};
use vqint_core::experiment::{best_k, noise_table, run_experiment, sweep_cells, ExperimentConfig, ExperimentSeeds, NoiseRow, SweepCell};
use vqint_core::losses::LossKind;
use vqint_core::metrics::MetricsReport;
use vqint_core::noise::NoiseKind;
use vqint_core::samplers::SamplerKind;

use crate::config::{CliError, FORMAT_VERSION, TOOL_VERSION};
use crate::files::{ensure_dir, num, opt_num, preamble, read_json, write_json, write_table};

pub const RUN_RECORD_FILE: &str = "run_record.json";
pub const MODEL_FILE: &str = "model.json";
pub const SAMPLES_FILE: &str = "samples.csv";
pub const PLOT_FILE: &str = "plot.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const SWEEP_RECORD_FILE: &str = "sweep_record.json";
pub const NOISE_FILE: &str = "noise_table.csv";
pub const NOISE_RECORD_FILE: &str = "noise_record.json";

/// Cells marked in the sweep table.
pub const SWEEP_BEST: usize = 3;

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub epochs_run: usize,
    pub best_loss: Option<f64>,
    pub best_epoch: Option<usize>,
    pub final_loss: Option<f64>,
    pub diverged: bool,
    pub history: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub format_version: u32,
    pub tool_version: String,
    /// Milliseconds since the Unix epoch; the only field that varies between reruns.
    pub timestamp_ms: u64,
    pub config: ExperimentConfig,
    pub seeds: ExperimentSeeds,
    pub training: TrainingSummary,
    pub metrics: MetricsReport,
}

impl RunRecord {
    pub fn without_timestamp(&self) -> Self {
        RunRecord { timestamp_ms: 0, ..self.clone() }
    }
}

/// Trained parameters with the config that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub tool_version: String,
    pub config: ExperimentConfig,
    pub model: CircuitModel,
}

/// Sample, train, evaluate and write `run_record.json`, `model.json`,
/// `samples.csv` and `plot.csv` into `out`.
///
/// A diverged run still writes every file, then reports
/// [`CliError::Diverged`].
pub fn cmd_run(cfg: &ExperimentConfig, out: &Path) -> Result<RunRecord, CliError> {
    cfg.validate().map_err(|e| CliError::from_core("config", e))?;
    ensure_dir(out)?;
    let outcome = run_experiment(cfg).map_err(|e| CliError::from_core("config", e))?;
    let f = cfg.integrand();
    let t = &outcome.training;
    let record = RunRecord {
        format_version: FORMAT_VERSION,
        tool_version: TOOL_VERSION.into(),
        timestamp_ms: now_ms(),
        config: cfg.clone(),
        seeds: cfg.seeds(),
        training: TrainingSummary {
            epochs_run: t.history.len(),
            best_loss: t.best_loss,
            best_epoch: t.best_epoch,
            final_loss: t.history.last().copied(),
            diverged: t.diverged,
            history: t.history.clone(),
        },
        metrics: outcome.metrics.clone(),
    };
    let record_path = out.join(RUN_RECORD_FILE);
    write_json(&record_path, &record)?;
    let model = ModelFile {
        format_version: FORMAT_VERSION,
        tool_version: TOOL_VERSION.into(),
        config: cfg.clone(),
        model: t.model.clone(),
    };
    write_json(&out.join(MODEL_FILE), &model)?;
    let pre = preamble(cfg);
    let header = |cols: &[&str]| cols.iter().map(|c| c.to_string()).collect::<Vec<_>>();
    let samples: Vec<Vec<String>> = outcome
        .samples
        .points
        .iter()
        .zip(&outcome.samples.targets)
        .map(|(&x, &y)| vec![num(x), num(f.denormalize(x)), num(y)])
        .collect();
    write_table(&out.join(SAMPLES_FILE), &pre, &header(&["x_norm", "s_phys", "target"]), &samples)?;
    let plot: Vec<Vec<String>> = outcome.plot.iter().map(|r| vec![num(r.x_norm), num(r.s_phys), num(r.f), num(r.q), num(r.rel_err)]).collect();
    write_table(&out.join(PLOT_FILE), &pre, &header(&["x_norm", "s_phys", "f", "q", "rel_err"]), &plot)?;
    if t.diverged {
        return Err(CliError::Diverged(record_path));
    }
    Ok(record)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sampler: SamplerKind,
    pub loss: LossKind,
    pub seed: u64,
    pub metrics: Option<MetricsReport>,
    pub diverged: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub format_version: u32,
    pub tool_version: String,
    pub timestamp_ms: u64,
    pub config: ExperimentConfig,
    pub rows: Vec<SweepRow>,
    /// Row indices of the best cells by W1, best first.
    pub best: Vec<usize>,
}

impl SweepReport {
    pub fn best_cells(&self) -> Vec<(SamplerKind, LossKind)> {
        self.best.iter().map(|&i| (self.rows[i].sampler, self.rows[i].loss)).collect()
    }
}

fn run_cell(cfg: &ExperimentConfig, cell: &SweepCell) -> SweepRow {
    let mut row = SweepRow { sampler: cell.sampler, loss: cell.loss, seed: cell.seed, metrics: None, diverged: false, error: None };
    match run_experiment(&cfg.for_cell(cell)) {
        Ok(o) => {
            row.diverged = o.training.diverged;
            row.metrics = Some(o.metrics);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Every sampler × loss cell on up to `workers` threads (0 = all cores).
/// Failed cells are recorded in the table and the sweep continues.
pub fn cmd_sweep(cfg: &ExperimentConfig, out: &Path, workers: usize) -> Result<SweepReport, CliError> {
    cmd_sweep_with_progress(cfg, out, workers, &|_, _| {})
}

/// [`cmd_sweep`], calling `progress(cells_done, row)` as each cell finishes.
pub fn cmd_sweep_with_progress(
    cfg: &ExperimentConfig,
    out: &Path,
    workers: usize,
    progress: &(dyn Fn(usize, &SweepRow) + Sync),
) -> Result<SweepReport, CliError> {
    cfg.validate().map_err(|e| CliError::from_core("config", e))?;
    ensure_dir(out)?;
    let cells = sweep_cells(cfg);
    let workers = match workers {
        0 => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        w => w,
    }
    .min(cells.len());
    let next = AtomicUsize::new(0);
    let done = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<SweepRow>>> = cells.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cell) = cells.get(i) else { break };
                let row = run_cell(cfg, cell);
                progress(done.fetch_add(1, Ordering::Relaxed) + 1, &row);
                *slots[i].lock().expect("no panics while holding the lock") = Some(row);
            });
        }
    });
    let rows: Vec<SweepRow> = slots.into_iter().map(|m| m.into_inner().expect("lock not poisoned").expect("every cell ran")).collect();
    let scores: Vec<Option<f64>> = rows.iter().map(|r| r.metrics.as_ref().filter(|_| r.error.is_none()).map(|m| m.w1)).collect();
    let best = best_k(&scores, SWEEP_BEST);
    let report = SweepReport {
        format_version: FORMAT_VERSION,
        tool_version: TOOL_VERSION.into(),
        timestamp_ms: now_ms(),
        config: cfg.clone(),
        rows,
        best,
    };
    write_json(&out.join(SWEEP_RECORD_FILE), &report)?;
    write_sweep_table(&out.join(SWEEP_FILE), &report)?;
    Ok(report)
}

fn interval_labels(f: &dyn Integrand) -> Vec<String> {
    f.named_intervals().into_iter().map(|iv| iv.label).collect()
}

fn write_sweep_table(path: &Path, report: &SweepReport) -> Result<(), CliError> {
    let labels = interval_labels(&report.config.integrand());
    let mut header: Vec<String> = ["best_rank", "sampler", "loss", "seed", "r2", "w1"].iter().map(|s| s.to_string()).collect();
    for l in &labels {
        header.push(format!("{l} integral"));
        header.push(format!("{l} rel_err"));
    }
    header.push("diverged".into());
    header.push("error".into());
    let rows = report
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let rank = report.best.iter().position(|&b| b == i).map(|p| (p + 1).to_string()).unwrap_or_default();
            let mut v = vec![rank, r.sampler.name().into(), r.loss.name().into(), r.seed.to_string()];
            match &r.metrics {
                Some(m) => {
                    v.push(num(m.r2));
                    v.push(num(m.w1));
                    for iv in &m.intervals {
                        v.push(num(iv.predicted));
                        v.push(opt_num(iv.rel_error));
                    }
                }
                None => v.extend(std::iter::repeat_n(String::new(), 2 + 2 * labels.len())),
            }
            v.push(r.diverged.to_string());
            v.push(r.error.clone().unwrap_or_default());
            v
        })
        .collect::<Vec<_>>();
    write_table(path, &preamble(&report.config), &header, &rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    pub format_version: u32,
    pub tool_version: String,
    pub timestamp_ms: u64,
    pub config: ExperimentConfig,
    pub interval: String,
    pub a: f64,
    pub b: f64,
    pub rows: Vec<NoiseRow>,
}

/// Noisy integrals of the model in `model_path` for each configured noise kind.
pub fn cmd_noise_eval(cfg: &ExperimentConfig, model_path: &Path, out: &Path) -> Result<NoiseReport, CliError> {
    cfg.validate().map_err(|e| CliError::from_core("config", e))?;
    let file: ModelFile = read_json(model_path)?;
    let origin = model_path.display().to_string();
    let m = &file.model;
    if m.kind != cfg.ansatz.kind || m.layers != cfg.ansatz.layers {
        return Err(CliError::config(
            origin,
            format!(
                "model is {} with {} layers but ansatz is {} with {} layers",
                m.kind.name(),
                m.layers,
                cfg.ansatz.kind.name(),
                cfg.ansatz.layers
            ),
        ));
    }
    if file.config.benchmark != cfg.benchmark {
        return Err(CliError::config(origin, "model was trained on a different benchmark"));
    }
    m.validate().map_err(|e| CliError::from_core(&origin, e))?;
    ensure_dir(out)?;
    let f = cfg.integrand();
    let (label, a, b) = cfg.noise_interval().map_err(|e| CliError::from_core("noise_eval", e))?;
    let rows = noise_table(m, &f, &cfg.noise_eval, a, b, cfg.seeds().noise).map_err(|e| CliError::from_core("noise_eval", e))?;
    let report = NoiseReport {
        format_version: FORMAT_VERSION,
        tool_version: TOOL_VERSION.into(),
        timestamp_ms: now_ms(),
        config: cfg.clone(),
        interval: label,
        a,
        b,
        rows,
    };
    write_json(&out.join(NOISE_RECORD_FILE), &report)?;
    write_noise_table(&out.join(NOISE_FILE), &report)?;
    Ok(report)
}

/// One wide row in the noise-table layout: sampling, loss, then per noise
/// kind the mean, the spread (gate error only) and the relative error in %.
fn write_noise_table(path: &Path, report: &NoiseReport) -> Result<(), CliError> {
    let cfg = &report.config;
    let reference = report.rows.first().map(|r| r.reference).unwrap_or(0.0);
    let mut comments = preamble(cfg);
    comments.push(format!("interval {} = [{}, {}], reference {}", report.interval, report.a, report.b, num(reference)));
    let mut header: Vec<String> = vec!["sampler".into(), "loss".into()];
    let mut row = vec![cfg.sampler.kind.name().to_string(), cfg.loss.kind.name().to_string()];
    for r in &report.rows {
        let k = r.kind.name();
        header.push(format!("{k}_mean"));
        row.push(num(r.mean));
        if r.kind.is_stochastic() {
            header.push(format!("{k}_std"));
            row.push(opt_num(r.std));
        }
        header.push(format!("{k}_rel_err_pct"));
        row.push(opt_num(r.rel_error.map(|e| 100.0 * e)));
    }
    write_table(path, &comments, &header, &[row])
}

/// Reference integral over one named interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub benchmark: String,
    pub label: String,
    pub a: f64,
    pub b: f64,
    pub reference: f64,
}

pub fn cmd_oracle(kinds: &[BenchmarkKind]) -> Result<Vec<OracleRow>, CliError> {
    let mut out = Vec::new();
    for &k in kinds {
        let f = Benchmark::from_kind(k);
        for iv in f.named_intervals() {
            let reference = if iv.exact_zero { 0.0 } else { f.reference_integral(iv.a, iv.b).map_err(|e| CliError::from_core("oracle", e))? };
            out.push(OracleRow { benchmark: f.name().into(), label: iv.label, a: iv.a, b: iv.b, reference });
        }
    }
    Ok(out)
}

fn display(f: &Benchmark, v: f64) -> String {
    let s = f.display_scale();
    if s == 1.0 {
        format!("{v:.4}")
    } else {
        format!("{:.4}e{}", v * s, -(s.log10().round() as i32))
    }
}

pub fn render_run(record: &RunRecord, out: &Path) -> String {
    let f = record.config.integrand();
    let m = &record.metrics;
    let mut s = format!(
        "{} {} L={} | {} / {} | R² {:.4}  W1 {:.4}\n",
        f.name(),
        record.config.ansatz.kind.name(),
        record.config.ansatz.layers,
        record.config.sampler.kind.name(),
        record.config.loss.kind.name(),
        m.r2,
        m.w1
    );
    for iv in &m.intervals {
        let rel = iv.rel_error.map(|e| format!("({:.2}%)", 100.0 * e)).unwrap_or_else(|| "(ref 0)".into());
        s += &format!("  {:<14} {} {rel}  ref {}\n", iv.label, display(&f, iv.predicted), display(&f, iv.reference));
    }
    s += &format!("  best loss {:?} at epoch {:?}; files in {}\n", record.training.best_loss, record.training.best_epoch, out.display());
    s
}

pub fn render_sweep(report: &SweepReport) -> String {
    let f = report.config.integrand();
    let mut s = String::from("rank  sampler  loss       R²       W1\n");
    for (i, r) in report.rows.iter().enumerate() {
        let rank = report.best.iter().position(|&b| b == i).map(|p| format!("#{}", p + 1)).unwrap_or_default();
        match (&r.metrics, &r.error) {
            (Some(m), None) => {
                s += &format!("{rank:<5} {:<8} {:<9} {:.4}  {:.4}", r.sampler.name(), r.loss.name(), m.r2, m.w1);
                for iv in &m.intervals {
                    s += &format!("  {}", display(&f, iv.predicted));
                }
                s.push('\n');
            }
            (_, e) => s += &format!("{rank:<5} {:<8} {:<9} failed: {}\n", r.sampler.name(), r.loss.name(), e.clone().unwrap_or_default()),
        }
    }
    s
}

pub fn render_noise(report: &NoiseReport) -> String {
    let f = report.config.integrand();
    let reference = report.rows.first().map(|r| r.reference).unwrap_or(0.0);
    let mut s = format!("{} over {}: reference {}\n", f.name(), report.interval, display(&f, reference));
    for r in &report.rows {
        let spread = match r.std {
            Some(sd) if r.kind == NoiseKind::GateError => format!(" (±{})", display(&f, sd)),
            _ => String::new(),
        };
        let rel = r.rel_error.map(|e| format!(" ({:.2}%)", 100.0 * e)).unwrap_or_default();
        s += &format!("  {:<13} {}{spread}{rel}\n", r.kind.name(), display(&f, r.mean));
    }
    s
}

pub fn render_oracle(rows: &[OracleRow]) -> String {
    rows.iter().map(|r| format!("{:<5} {:<14} [{}, {}]  {:.10e}\n", r.benchmark, r.label, r.a, r.b, r.reference)).collect()
}

pub fn run_paths(out: &Path) -> [PathBuf; 4] {
    [RUN_RECORD_FILE, MODEL_FILE, SAMPLES_FILE, PLOT_FILE].map(|f| out.join(f))
}
