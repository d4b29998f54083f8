use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use pceks_core::domain::{Policy, TidStrategy};
use serde::{Deserialize, Serialize};

use crate::RunError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Bounded enumeration of concrete interleavings.
    Explore,
    /// Abstract state-set analysis with weak updates.
    Analyze,
    /// Abstract state-set analysis with thread counting.
    AnalyzeCounted,
    /// Single accumulated abstract state.
    AnalyzeCollapsed,
    /// Check that both state-set analyses simulate the concrete runs.
    SoundnessCheck,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TidKind {
    /// One abstract thread id for every thread.
    Global,
    /// Spawn site and the spawner's last k call sites.
    Site,
    /// Spawn site and a round-robin slot out of --pool-n.
    Pool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Text,
    Json,
}

/// Static analyses for a concurrent higher-order language.
#[derive(Clone, Debug, PartialEq, Eq, Parser)]
#[command(name = "pceks", version)]
pub struct RunConfig {
    #[arg(long, value_enum, default_value = "analyze-counted")]
    pub mode: Mode,
    /// History depth: context sensitivity and address polyvariance.
    #[arg(long, default_value_t = 0)]
    pub k: usize,
    #[arg(long = "tid", value_enum, default_value = "site")]
    pub tid: TidKind,
    #[arg(long, default_value_t = 2)]
    pub pool_n: u32,
    /// Bound on concrete states kept by explore.
    #[arg(long, default_value_t = 10000)]
    pub max_states: usize,
    /// Bound on concrete transition depth.
    #[arg(long, default_value_t = 10000)]
    pub max_depth: usize,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    /// Write the explored concrete state graph in DOT format.
    #[arg(long, value_name = "PATH")]
    pub dot: Option<PathBuf>,
    /// Include wall-clock timings (makes output vary between runs).
    #[arg(long)]
    pub timings: bool,
    pub input: PathBuf,
}

impl RunConfig {
    /// A configuration with the command-line defaults.
    pub fn new(mode: Mode, input: impl Into<PathBuf>) -> RunConfig {
        RunConfig {
            mode,
            k: 0,
            tid: TidKind::Site,
            pool_n: 2,
            max_states: 10000,
            max_depth: 10000,
            format: Format::Text,
            dot: None,
            timings: false,
            input: input.into(),
        }
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.pool_n == 0 {
            return Err(RunError::Config("--pool-n must be at least 1".into()));
        }
        if self.max_states == 0 || self.max_depth == 0 {
            return Err(RunError::Config("--max-states and --max-depth must be at least 1".into()));
        }
        Ok(())
    }

    pub fn policy(&self) -> Result<Policy, RunError> {
        let tids = match self.tid {
            TidKind::Global => TidStrategy::Global,
            TidKind::Site => TidStrategy::SiteHist,
            TidKind::Pool => TidStrategy::SitePool(self.pool_n),
        };
        Policy::new(self.k, tids).map_err(|e| RunError::Config(e.to_string()))
    }
}
