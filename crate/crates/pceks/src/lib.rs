//! File handling, command line and report formats for `pceks-core`.

pub mod config;
pub mod corpus;
pub mod dot;
pub mod report;
pub mod run;

use pceks_core::concrete::InjectError;
use pceks_core::syntax::ParseError;

pub use config::{Format, Mode, RunConfig, TidKind};
pub use report::AnalysisReport;
pub use run::{load, load_source, run, run_loaded, Loaded};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{}: {error}", error.span())]
    Parse { path: String, error: ParseError },
    #[error("{0}")]
    Open(#[from] InjectError),
    #[error("invalid configuration: {0}")]
    Config(String),
}
