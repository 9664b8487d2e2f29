//! Rényi-type change-point tests for a single change in the mean, with the
//! classical CUSUM and Darling–Erdős competitors.
//!
//! The Rényi statistic compares the sample means before and after every
//! candidate break `t` in a trimmed range `t_T ≤ t ≤ T - t_T` and takes the
//! largest absolute difference. With a slowly growing trimming such as
//! `t_T = ⌊ln T⌋`, it keeps power against breaks close to either end of the
//! sample, where CUSUM-based tests lose it.
//!
//! Modules:
//!
//! - [`stats`]: the statistics themselves.
//! - [`limit`]: null limit laws, quantiles, p-values and a path sampler.
//! - [`variance`]: split-sample and kernel long-run variance estimators.
//! - [`procedure`]: statistic + normalization + p-value in one call.
//! - [`regression`]: residual and moment series from OLS, NLS and scalar GMM fits.
//! - [`dgp`]: seeded error processes and mean-change injection.
//! - [`power`]: size, power, and limit-law agreement experiments.
//! - [`app`]: CSV/JSON/SVG plumbing behind the `renyi` binary.
//!
//! See `examples/` for one runnable program per capability.

pub mod app;
pub mod dgp;
pub mod error;
pub mod kv;
pub mod limit;
pub mod power;
pub mod procedure;
pub mod regression;
pub mod rng;
pub mod series;
pub mod stats;
pub mod variance;

pub use error::{Error, Result};
pub use limit::{LimitKind, LimitLaw};
pub use procedure::{run_test, Statistic, TestOutcome};
pub use series::{RealSeries, Trim, TrimRule, TrimSpec};
pub use stats::StatOutcome;
pub use variance::{Bandwidth, Kernel, VarianceConfig, VarianceKind};
