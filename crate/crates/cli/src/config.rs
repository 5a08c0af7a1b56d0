//! Run configuration: defaults, then a flat TOML file, then the output-dir
//! environment variable, then command-line flags.

use std::path::{Path, PathBuf};

use cfqkd_core::protocol::Condition;
use cfqkd_core::{EveStrategy, InterferometerConfig, SessionConfig};
use clap::{Args, ValueEnum};
use serde::Deserialize;

use crate::error::CliError;

pub const OUTPUT_DIR_ENV: &str = "CFQKD_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Kv,
    Csv,
}

/// Keys accepted in a configuration file. All optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub reflectivity: Option<f64>,
    pub phase: Option<f64>,
    pub strategy: Option<String>,
    pub rounds: Option<u64>,
    pub seed: Option<u64>,
    pub estimation_fraction: Option<f64>,
    pub condition: Option<String>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<Format>,
    pub log_rounds: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("bad config {}: {e}", path.display())))
    }
}

/// Flags shared by `run`, `compare` and `sweep`.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Flat key = value configuration file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Beamsplitter reflectivity R in [0, 1].
    #[arg(long, short = 'r', allow_negative_numbers = true)]
    pub reflectivity: Option<f64>,
    /// Round-trip phase of arm b in radians (default π).
    #[arg(long, allow_negative_numbers = true)]
    pub phase: Option<f64>,
    /// none | simple-ir | modified-ir | qci-probe
    #[arg(long, short = 's')]
    pub strategy: Option<String>,
    #[arg(long, short = 'n')]
    pub rounds: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fraction of the sifted key sacrificed for error estimation, in (0, 1].
    #[arg(long, allow_negative_numbers = true)]
    pub estimation_fraction: Option<f64>,
    /// any | equal | unequal polarization pairs.
    #[arg(long)]
    pub condition: Option<String>,
    /// Output directory (overrides $CFQKD_OUTPUT_DIR).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Also write a per-round JSON-lines log to the output directory.
    #[arg(long)]
    pub log_rounds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub reflectivity: f64,
    pub phase: f64,
    pub strategy: EveStrategy,
    pub rounds: u64,
    pub seed: u64,
    pub estimation_fraction: f64,
    pub condition: Condition,
    pub out_dir: Option<PathBuf>,
    pub format: Format,
    pub log_rounds: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            reflectivity: 0.5,
            phase: std::f64::consts::PI,
            strategy: EveStrategy::None,
            rounds: 100_000,
            seed: 0,
            estimation_fraction: 0.1,
            condition: Condition::Any,
            out_dir: None,
            format: Format::Json,
            log_rounds: false,
        }
    }
}

impl RunConfig {
    pub fn resolve(args: &RunArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let env_dir = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from);
        Self::merge(file, env_dir, args)
    }

    pub fn merge(file: FileConfig, env_dir: Option<PathBuf>, args: &RunArgs) -> Result<Self, CliError> {
        let d = Self::default();
        let strategy = match args.strategy.as_deref().or(file.strategy.as_deref()) {
            Some(s) => s.parse()?,
            None => d.strategy,
        };
        let condition = match args.condition.as_deref().or(file.condition.as_deref()) {
            Some(s) => s.parse()?,
            None => d.condition,
        };
        let cfg = Self {
            reflectivity: args.reflectivity.or(file.reflectivity).unwrap_or(d.reflectivity),
            phase: args.phase.or(file.phase).unwrap_or(d.phase),
            strategy,
            rounds: args.rounds.or(file.rounds).unwrap_or(d.rounds),
            seed: args.seed.or(file.seed).unwrap_or(d.seed),
            estimation_fraction: args
                .estimation_fraction
                .or(file.estimation_fraction)
                .unwrap_or(d.estimation_fraction),
            condition,
            out_dir: args.out_dir.clone().or(env_dir).or(file.out_dir),
            format: args.format.or(file.format).unwrap_or(d.format),
            log_rounds: args.log_rounds || file.log_rounds.unwrap_or(false),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.reflectivity.is_finite() && (0.0..=1.0).contains(&self.reflectivity)) {
            return Err(CliError::Config(format!(
                "reflectivity must lie in [0, 1], got {}",
                self.reflectivity
            )));
        }
        if self.rounds == 0 {
            return Err(CliError::Config("rounds must be at least 1".into()));
        }
        if !(self.estimation_fraction > 0.0 && self.estimation_fraction <= 1.0) {
            return Err(CliError::Config(format!(
                "estimation fraction must lie in (0, 1], got {}",
                self.estimation_fraction
            )));
        }
        if !self.phase.is_finite() {
            return Err(CliError::Config(format!("phase must be finite, got {}", self.phase)));
        }
        if self.log_rounds && self.out_dir.is_none() {
            return Err(CliError::Config(format!(
                "--log-rounds needs --out-dir or ${OUTPUT_DIR_ENV}"
            )));
        }
        Ok(())
    }

    pub fn session(&self) -> Result<SessionConfig, CliError> {
        self.session_at(self.reflectivity, self.seed)
    }

    pub fn session_at(&self, reflectivity: f64, seed: u64) -> Result<SessionConfig, CliError> {
        let ic = InterferometerConfig::with_phase(reflectivity, self.phase)?;
        Ok(SessionConfig::new(ic, self.strategy, self.rounds, seed)
            .with_condition(self.condition)
            .with_estimation_fraction(self.estimation_fraction))
    }
}
