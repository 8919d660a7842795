//! File formats, configuration loading and the `run`, `sweep`,
//! `noise-eval` and `oracle` commands built on `vqint-core`.

pub mod commands;
pub mod config;
pub mod files;

pub use commands::{cmd_noise_eval, cmd_oracle, cmd_run, cmd_sweep, cmd_sweep_with_progress, NoiseReport, OracleRow, RunRecord, SweepReport, SweepRow};
pub use config::{load_config, resolve_output_dir, CliError, FORMAT_VERSION, OUTPUT_DIR_ENV, TOOL_VERSION};
