//! Complete tests: statistic + variance normalization + limit-law p-value.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limit::LimitLaw;
use crate::series::{RealSeries, Trim, TrimSpec};
use crate::stats::{cusum_stat, darling_erdos_constants, renyi_self_normalized, standardized_cusum_full};
use crate::variance::{VarianceConfig, VarianceKind, VarianceScan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statistic {
    Renyi,
    Cusum,
    DarlingErdos,
}

impl Statistic {
    pub const ALL: [Statistic; 3] = [Statistic::Renyi, Statistic::Cusum, Statistic::DarlingErdos];

    /// Null limit law of the normalized statistic.
    pub fn limit_law(&self) -> LimitLaw {
        match self {
            Statistic::Renyi => LimitLaw::max_two_sup_wiener(),
            Statistic::Cusum => LimitLaw::sup_brownian_bridge(),
            Statistic::DarlingErdos => LimitLaw::gumbel_de(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Statistic::Renyi => "renyi",
            Statistic::Cusum => "cusum",
            Statistic::DarlingErdos => "darling-erdos",
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "renyi" => Ok(Statistic::Renyi),
            "cusum" => Ok(Statistic::Cusum),
            "de" | "darling-erdos" => Ok(Statistic::DarlingErdos),
            "hidalgo-seo" => Err(Error::Parse(
                "statistic 'hidalgo-seo' is reserved but not implemented".into(),
            )),
            other => Err(Error::Parse(format!("unknown statistic '{other}' (expected renyi|cusum|de)"))),
        }
    }
}

/// Outcome of a complete test on one series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: Statistic,
    /// Statistic before variance normalization. For the Rényi test this is
    /// the mean difference at `argmax`, which is `D_T` when `σ` is known.
    pub raw: f64,
    /// Normalized statistic compared against the limit law.
    pub scaled: f64,
    pub p_value: f64,
    pub argmax: usize,
    pub trim: Option<Trim>,
}

impl TestOutcome {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

fn sigma_at_argmax(x: &RealSeries, argmax: usize, vcfg: &VarianceConfig) -> Result<f64> {
    match vcfg.kind {
        VarianceKind::Known(s2) => vcfg.sigma_from(argmax, s2),
        _ => {
            let t = argmax.clamp(1, x.len() - 1);
            VarianceScan::new(x.as_slice(), vcfg).sigma_at(t)
        }
    }
}

/// Runs one test.
///
/// The Rényi statistic re-estimates `σ̂_{T,t}` at every `t`; CUSUM and
/// Darling–Erdős divide by `σ̂_{T,t̂}` at their own maximizer `t̂`.
pub fn run_test(x: &RealSeries, statistic: Statistic, trim: &TrimSpec, vcfg: &VarianceConfig) -> Result<TestOutcome> {
    vcfg.validate()?;
    let law = statistic.limit_law();
    let outcome = match statistic {
        Statistic::Renyi => {
            let sn = renyi_self_normalized(x, trim, vcfg)?;
            TestOutcome {
                statistic,
                raw: mean_gap(x.as_slice(), sn.argmax),
                scaled: sn.raw,
                p_value: law.p_value(sn.raw),
                argmax: sn.argmax,
                trim: sn.trim,
            }
        }
        Statistic::Cusum => {
            let a = cusum_stat(x);
            let sigma = sigma_at_argmax(x, a.argmax, vcfg)?;
            let scaled = a.raw / sigma;
            TestOutcome { statistic, raw: a.raw, scaled, p_value: law.p_value(scaled), argmax: a.argmax, trim: None }
        }
        Statistic::DarlingErdos => {
            let (an, mn) = darling_erdos_constants(x.len())?;
            let inner = standardized_cusum_full(x);
            let sigma = sigma_at_argmax(x, inner.argmax, vcfg)?;
            let raw = an * inner.raw - mn;
            let scaled = an * inner.raw / sigma - mn;
            TestOutcome { statistic, raw, scaled, p_value: law.p_value(scaled), argmax: inner.argmax, trim: None }
        }
    };
    Ok(outcome)
}

/// `|mean(X_1..X_t) - mean(X_{t+1}..X_T)|`
fn mean_gap(v: &[f64], t: usize) -> f64 {
    let first = v[..t].iter().sum::<f64>() / t as f64;
    let last = v[t..].iter().sum::<f64>() / (v.len() - t) as f64;
    (first - last).abs()
}
