use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vqint::commands::{cmd_sweep_with_progress, render_noise, render_oracle, render_run, render_sweep, MODEL_FILE};
use vqint::{cmd_noise_eval, cmd_oracle, cmd_run, load_config, resolve_output_dir, CliError, FORMAT_VERSION, TOOL_VERSION};
use vqint_core::benchmarks::BenchmarkKind;
use vqint_core::experiment::ExperimentConfig;

/// Learn antiderivatives with variational quantum circuits and integrate by differencing.
#[derive(Parser)]
#[command(name = "vqint", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory [default: config output_dir, then $VQINT_OUTPUT_DIR, then ./vqint-out]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace the master seed from the config.
    #[arg(long)]
    seed_override: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Train and evaluate one configuration.
    Run(Common),
    /// Train every sampler × loss cell and rank them by W1.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Integrate a trained model under each noise model.
    NoiseEval {
        #[command(flatten)]
        common: Common,
        /// Model file [default: <out>/model.json]
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Print reference integrals over the named intervals.
    Oracle {
        /// cpf, step or bw [default: all]
        benchmarks: Vec<String>,
    },
    /// Print tool and file-format versions.
    Version,
}

fn prepare(c: &Common) -> Result<(ExperimentConfig, PathBuf), CliError> {
    let mut cfg = load_config(&c.config)?;
    if let Some(s) = c.seed_override {
        cfg.seed = s;
    }
    let out = resolve_output_dir(c.out.as_deref(), &cfg);
    Ok((cfg, out))
}

fn execute(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run(c) => {
            let (cfg, out) = prepare(&c)?;
            let record = cmd_run(&cfg, &out)?;
            print!("{}", render_run(&record, &out));
        }
        Command::Sweep { common, workers } => {
            let (cfg, out) = prepare(&common)?;
            let total = cfg.sweep.samplers.len() * cfg.sweep.losses.len();
            let report = cmd_sweep_with_progress(&cfg, &out, workers, &|done, row| {
                eprintln!("[{done}/{total}] {}/{}", row.sampler.name(), row.loss.name());
            })?;
            print!("{}", render_sweep(&report));
        }
        Command::NoiseEval { common, model } => {
            let (cfg, out) = prepare(&common)?;
            let model = model.unwrap_or_else(|| out.join(MODEL_FILE));
            let report = cmd_noise_eval(&cfg, &model, &out)?;
            print!("{}", render_noise(&report));
        }
        Command::Oracle { benchmarks } => {
            let kinds = if benchmarks.is_empty() {
                vec![BenchmarkKind::Cpf, BenchmarkKind::Step, BenchmarkKind::Bw]
            } else {
                benchmarks
                    .iter()
                    .map(|b| BenchmarkKind::parse(b).ok_or_else(|| CliError::config("arguments", format!("unknown benchmark {b:?}"))))
                    .collect::<Result<_, _>>()?
            };
            print!("{}", render_oracle(&cmd_oracle(&kinds)?));
        }
        Command::Version => println!("vqint {TOOL_VERSION} (file format {FORMAT_VERSION})"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
