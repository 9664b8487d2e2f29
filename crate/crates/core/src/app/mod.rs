//! File-level plumbing behind the `renyi` binary: CSV in, JSON/CSV/SVG out.
//!
//! Exit codes: 0 success, 1 internal error, 2 data or usage error.

mod commands;
pub mod fixture;
pub mod svg;
pub mod table;

pub use commands::{
    cmd_power, cmd_rolling, cmd_simulate, cmd_test, rolling, simulate_table, test_series, Decision, OutputFormat,
    RollingConfig, RollingResult, RollingRow, RowStat, TestReport,
};
pub use table::Table;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("data: {0}")]
    Data(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Stat(#[from] crate::Error),
    #[error("internal: {0}")]
    Internal(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Internal(_) => 1,
            _ => 2,
        }
    }

    pub(crate) fn io(e: impl std::fmt::Display) -> Self {
        AppError::Io(e.to_string())
    }
}
