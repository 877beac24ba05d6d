//! Batch front end: system files in, JSON reports and CSV scan data out.

pub mod format;
pub mod pipeline;

pub use format::{parse_system, parse_system_str, LoadedSystem, NumericSection, SystemFile};
pub use pipeline::{run, write_sidecars, Command, Outcome, Report, RunOptions, Sidecar};

pub const EXIT_OK: i32 = 0;
pub const EXIT_HYPOTHESIS: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Output(_) => EXIT_NUMERIC,
        }
    }
}
