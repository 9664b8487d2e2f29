use thiserror::Error;

/// Errors raised by the statistics, estimators and fitters in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("series too short: need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("non-finite observation at index {index}")]
    NonFinite { index: usize },

    #[error("invalid trimming: {0}")]
    InvalidTrim(String),

    #[error("trimming window is empty: t_T = {lo}, s_T = {hi}, T = {len}")]
    EmptyWindow { lo: usize, hi: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("degenerate variance at t = {t}: sigma = {sigma:e} is at or below the floor {floor:e}")]
    DegenerateVariance { t: usize, sigma: f64, floor: f64 },

    #[error("non-PSD LRV at t = {t}: estimate {estimate:e} is negative; raise the bandwidth or switch kernels")]
    NonPsdLrv { t: usize, estimate: f64 },

    #[error("rank-deficient design: condition estimate {condition:e} exceeds {threshold:e}")]
    RankDeficient { condition: f64, threshold: f64 },

    #[error("moment equation has no root in Θ = [{lo}, {hi}]")]
    NoRoot { lo: f64, hi: f64 },

    #[error("optimizer failed: {0}")]
    Optimizer(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
