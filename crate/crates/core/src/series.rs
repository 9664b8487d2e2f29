//! Input series and trimming rules.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered, finite sequence of observations `X_1..X_T` with `T >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSeries(Vec<f64>);

impl RealSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::TooShort { needed: 2, got: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self(values))
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.len() as f64
    }

    /// `true` when every observation equals the first one.
    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&v| v == self.0[0])
    }

    /// Prefix sums `S_0 = 0, S_t = X_1 + ... + X_t`, length `T + 1`.
    pub fn prefix_sums(&self) -> Vec<f64> {
        let mut sums = Vec::with_capacity(self.len() + 1);
        let mut acc = 0.0;
        sums.push(acc);
        for &v in &self.0 {
            acc += v;
            sums.push(acc);
        }
        sums
    }
}

impl AsRef<[f64]> for RealSeries {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for RealSeries {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

/// How the trimming parameter `t_T` is derived from the sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrimRule {
    /// `⌊ln T⌋` (natural logarithm).
    Log,
    /// `⌊T^{1/4}⌋`.
    QuarterRoot,
    /// `⌊T^{1/2}⌋`.
    SquareRoot,
    /// `⌊θ T⌋` with `0 < θ < 1/2`.
    Fraction(f64),
    /// A fixed count.
    Explicit(usize),
}

impl TrimRule {
    /// Resolves the rule for a sample of length `len`; never returns less than 1.
    pub fn resolve(&self, len: usize) -> Result<usize> {
        let n = len as f64;
        let k = match *self {
            TrimRule::Log => n.ln().floor() as usize,
            TrimRule::QuarterRoot => n.powf(0.25).floor() as usize,
            TrimRule::SquareRoot => n.sqrt().floor() as usize,
            TrimRule::Fraction(theta) => {
                if !(theta > 0.0 && theta < 0.5) {
                    return Err(Error::InvalidTrim(format!(
                        "fixed fraction must satisfy 0 < θ < 1/2, got {theta}"
                    )));
                }
                (theta * n).floor() as usize
            }
            TrimRule::Explicit(k) => {
                if k == 0 {
                    return Err(Error::InvalidTrim("explicit trimming must be >= 1".into()));
                }
                k
            }
        };
        Ok(k.max(1))
    }
}

impl fmt::Display for TrimRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrimRule::Log => write!(f, "log"),
            TrimRule::QuarterRoot => write!(f, "quarter"),
            TrimRule::SquareRoot => write!(f, "sqrt"),
            TrimRule::Fraction(theta) => write!(f, "frac={theta}"),
            TrimRule::Explicit(k) => write!(f, "k={k}"),
        }
    }
}

impl FromStr for TrimRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "log" => Ok(TrimRule::Log),
            "quarter" | "quarter-root" => Ok(TrimRule::QuarterRoot),
            "sqrt" | "square-root" => Ok(TrimRule::SquareRoot),
            _ => {
                if let Some(v) = s.strip_prefix("frac=") {
                    let theta: f64 = v
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad trimming fraction '{v}'")))?;
                    if !(theta > 0.0 && theta < 0.5) {
                        return Err(Error::InvalidTrim(format!(
                            "fixed fraction must satisfy 0 < θ < 1/2, got {theta}"
                        )));
                    }
                    Ok(TrimRule::Fraction(theta))
                } else if let Some(v) = s.strip_prefix("k=") {
                    let k: usize = v
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad trimming count '{v}'")))?;
                    if k == 0 {
                        return Err(Error::InvalidTrim("explicit trimming must be >= 1".into()));
                    }
                    Ok(TrimRule::Explicit(k))
                } else {
                    Err(Error::Parse(format!(
                        "unknown trimming rule '{s}' (expected log|quarter|sqrt|frac=θ|k=N)"
                    )))
                }
            }
        }
    }
}

/// Trimming specification: a rule for the start of the window and, optionally,
/// a separate rule for the end (asymmetric trimming).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrimSpec {
    pub rule: TrimRule,
    pub end_rule: Option<TrimRule>,
}

impl TrimSpec {
    pub fn symmetric(rule: TrimRule) -> Self {
        Self { rule, end_rule: None }
    }

    pub fn explicit(k: usize) -> Self {
        Self::symmetric(TrimRule::Explicit(k))
    }

    pub fn asymmetric(start: usize, end: usize) -> Self {
        Self { rule: TrimRule::Explicit(start), end_rule: Some(TrimRule::Explicit(end)) }
    }

    /// Resolves `(t_T, s_T)` for a sample of length `len` and checks that the
    /// window `t_T ..= T - s_T` is nonempty.
    pub fn resolve(&self, len: usize) -> Result<Trim> {
        let start = self.rule.resolve(len)?;
        let trim = match self.end_rule {
            None => {
                if start > len / 2 {
                    return Err(Error::EmptyWindow { lo: start, hi: start, len });
                }
                Trim { start, end: start }
            }
            Some(rule) => {
                let end = rule.resolve(len)?;
                if start + end > len {
                    return Err(Error::EmptyWindow { lo: start, hi: end, len });
                }
                Trim { start, end }
            }
        };
        Ok(trim)
    }
}

impl Default for TrimSpec {
    fn default() -> Self {
        Self::symmetric(TrimRule::Log)
    }
}

impl From<TrimRule> for TrimSpec {
    fn from(rule: TrimRule) -> Self {
        Self::symmetric(rule)
    }
}

/// A resolved trimming `(t_T, s_T)`: the scan runs over `t_T <= t <= T - s_T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trim {
    pub start: usize,
    pub end: usize,
}

impl Trim {
    pub fn window(&self, len: usize) -> RangeInclusive<usize> {
        self.start..=len - self.end
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_short_and_non_finite() {
        assert!(matches!(RealSeries::new(vec![1.0]), Err(Error::TooShort { .. })));
        assert_eq!(RealSeries::new(vec![1.0, f64::NAN]), Err(Error::NonFinite { index: 1 }));
    }

    #[test]
    fn log_rule_uses_natural_log() {
        assert_eq!(TrimRule::Log.resolve(250).unwrap(), 5);
        assert_eq!(TrimRule::Log.resolve(100).unwrap(), 4);
        assert_eq!(TrimRule::QuarterRoot.resolve(500).unwrap(), 4);
        assert_eq!(TrimRule::SquareRoot.resolve(1000).unwrap(), 31);
        assert_eq!(TrimRule::Fraction(0.1).resolve(250).unwrap(), 25);
        assert_eq!(TrimRule::Log.resolve(2).unwrap(), 1);
    }

    #[test]
    fn window_bounds() {
        let trim = TrimSpec::explicit(2).resolve(4).unwrap();
        assert_eq!(trim.window(4), 2..=2);
        assert!(TrimSpec::explicit(3).resolve(4).is_err());
        let asym = TrimSpec::asymmetric(1, 2).resolve(4).unwrap();
        assert_eq!(asym.window(4), 1..=2);
        assert!(TrimSpec::asymmetric(3, 2).resolve(4).is_err());
    }

    #[test]
    fn parses_cli_trim_forms() {
        for s in ["log", "quarter", "sqrt", "frac=0.1", "k=7"] {
            let rule: TrimRule = s.parse().unwrap();
            assert_eq!(rule.to_string(), s);
        }
        assert!("frac=0.7".parse::<TrimRule>().is_err());
        assert!("k=0".parse::<TrimRule>().is_err());
        assert!("cube".parse::<TrimRule>().is_err());
    }
}
