//! Config loading and the error type that maps onto exit codes.

use std::path::{Path, PathBuf};

use vqint_core::experiment::ExperimentConfig;
use vqint_core::Error as CoreError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Version of the on-disk formats written by this crate.
pub const FORMAT_VERSION: u32 = 1;
/// Default output directory when neither `--out` nor `output_dir` is given.
pub const OUTPUT_DIR_ENV: &str = "VQINT_OUTPUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error in {origin}: {msg}")]
    Config { origin: String, msg: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("training diverged; partial record written to {0}")]
    Diverged(PathBuf),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// 0 success, 2 config error, 3 numerical failure, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numerical(_) | CliError::Diverged(_) => 3,
            CliError::Io { .. } => 1,
        }
    }

    pub fn config(origin: impl Into<String>, msg: impl Into<String>) -> Self {
        CliError::Config { origin: origin.into(), msg: msg.into() }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    /// Configuration problems keep exit code 2; everything else from the
    /// numerical core is a numerical failure.
    pub fn from_core(origin: &str, e: CoreError) -> Self {
        match e {
            CoreError::InvalidConfig(msg) => CliError::config(origin, msg),
            CoreError::Extrapolation(s) => CliError::config(origin, format!("endpoint {s} lies outside the benchmark domain")),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

/// Parse and validate a TOML experiment file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(&origin, format!("cannot read file: {e}")))?;
    parse_config(&text, &origin)
}

pub fn parse_config(text: &str, origin: &str) -> Result<ExperimentConfig, CliError> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::config(origin, e.message().to_string()))?;
    cfg.validate().map_err(|e| CliError::from_core(origin, e))?;
    Ok(cfg)
}

/// `--out`, then the config's `output_dir`, then the environment, then `vqint-out`.
pub fn resolve_output_dir(flag: Option<&Path>, cfg: &ExperimentConfig) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = &cfg.output_dir {
        return PathBuf::from(p);
    }
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(p) if !p.is_empty() => PathBuf::from(p),
        _ => PathBuf::from("vqint-out"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use vqint_core::benchmarks::BenchmarkKind;

    #[test]
    fn missing_benchmark_is_named() {
        let e = parse_config("seed = 1\n", "t.toml").unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("benchmark"), "{e}");
    }

    #[test]
    fn sections_parse() {
        let text = r#"
benchmark = "bw"
seed = 9

[ansatz]
kind = "qsp"
layers = 4

[sampler]
kind = "hmc"
n_train = 64
hmc = { steps = 10, chains = 2 }

[loss]
kind = "mse_kl"
lambda = 0.5

[optimizer]
epochs = 20

[noise_eval]
kinds = ["gate_error", "depolarizing"]
interval = [85.0, 95.0]
"#;
        let c = parse_config(text, "t.toml").unwrap();
        assert_eq!(c.benchmark, BenchmarkKind::Bw);
        assert_eq!(c.ansatz.layers, 4);
        assert_eq!(c.sampler.hmc.steps, 10);
        assert_eq!(c.sampler.hmc.step_size, 0.1);
        assert_eq!(c.noise_eval.interval, Some((85.0, 95.0)));
    }

    #[test]
    fn validation_errors_are_config_errors() {
        let e = parse_config("benchmark = \"cpf\"\nseed = 1\n[ansatz]\nlayers = 0\n", "t.toml").unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("ansatz.layers"));
        let e = parse_config("benchmark = \"cpf\"\nseed = 1\n[optimizer]\nlearning_rate = 0.1\n", "t.toml").unwrap_err();
        assert!(e.to_string().contains("learning_rate"), "{e}");
    }
}
