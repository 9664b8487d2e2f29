//! CUSUM-family and Rényi-type change-point statistics.
//!
//! All scans work from prefix sums of the series centered at its sample mean,
//! `C_t = Σ_{s≤t} (X_s - X̄)`. The CUSUM `S_t - (t/T) S_T` equals `C_t`, and the
//! difference of the means before and after `t` is
//! `C_t / t - (C_T - C_t) / (T - t)`.
//!
//! Every scan breaks ties toward the smallest `t`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{RealSeries, Trim, TrimSpec};
use crate::variance::{VarianceConfig, VarianceScan};

/// Result of one statistic on one series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatOutcome {
    /// Statistic before any variance scaling.
    pub raw: f64,
    /// Statistic on the scale of its limit law, with `σ = 1` unless a
    /// variance estimate was applied.
    pub scaled: f64,
    /// Index `t` (1-based) attaining the maximum.
    pub argmax: usize,
    /// Trimming used, for the trimmed statistics.
    pub trim: Option<Trim>,
}

/// Prefix sums of the mean-centered series, `C_0 = 0, ..., C_T`.
pub(crate) fn centered_prefix(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let mut out = Vec::with_capacity(x.len() + 1);
    out.push(0.0);
    let mut acc = 0.0;
    for v in x {
        acc += v - mean;
        out.push(acc);
    }
    out
}

/// `mean(X_1..X_t) - mean(X_{t+1}..X_T)` from centered prefix sums.
#[inline]
fn mean_diff(c: &[f64], t: usize) -> f64 {
    let n = c.len() - 1;
    c[t] / t as f64 - (c[n] - c[t]) / (n - t) as f64
}

/// Maximizes `f(t)` over `range`, first maximizer wins.
fn scan_max(range: impl Iterator<Item = usize>, mut f: impl FnMut(usize) -> f64) -> (f64, usize) {
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for t in range {
        let v = f(t);
        if v > best {
            best = v;
            arg = t;
        }
    }
    (best, arg)
}

/// `((t/T)(1 - t/T))^{-τ}`
#[inline]
fn weight(t: usize, n: usize, tau: f64) -> f64 {
    let u = t as f64 / n as f64;
    (u * (1.0 - u)).powf(-tau)
}

/// Maximally selected CUSUM `A_T = T^{-1/2} max_{1≤t≤T} |S_t - (t/T) S_T|`.
pub fn cusum_stat(x: &RealSeries) -> StatOutcome {
    let n = x.len();
    let c = centered_prefix(x.as_slice());
    let (m, argmax) = scan_max(1..=n, |t| c[t].abs());
    let raw = m / (n as f64).sqrt();
    StatOutcome { raw, scaled: raw, argmax, trim: None }
}

/// Weighted CUSUM `A_T(τ)`, maximized over `1 ≤ t < T`, for `0 ≤ τ < 1/2`.
pub fn weighted_cusum_stat(x: &RealSeries, tau: f64) -> Result<StatOutcome> {
    if !(0.0..0.5).contains(&tau) {
        return Err(Error::InvalidParameter(format!(
            "weight exponent must satisfy 0 <= τ < 1/2, got {tau}; use the trimmed or Darling–Erdős forms for τ = 1/2"
        )));
    }
    let n = x.len();
    let c = centered_prefix(x.as_slice());
    let (m, argmax) = scan_max(1..n, |t| weight(t, n, tau) * c[t].abs());
    let raw = m / (n as f64).sqrt();
    Ok(StatOutcome { raw, scaled: raw, argmax, trim: None })
}

/// Standardized CUSUM over the trimmed range `t_T ≤ t ≤ T - t_T`.
pub fn trimmed_std_cusum(x: &RealSeries, trim: &TrimSpec) -> Result<StatOutcome> {
    let n = x.len();
    let tr = trim.resolve(n)?;
    let c = centered_prefix(x.as_slice());
    let (m, argmax) = scan_max(tr.window(n), |t| weight(t, n, 0.5) * c[t].abs());
    let raw = m / (n as f64).sqrt();
    Ok(StatOutcome { raw, scaled: raw, argmax, trim: Some(tr) })
}

fn renyi_window(x: &RealSeries, tr: Trim) -> Result<StatOutcome> {
    let n = x.len();
    if tr.start == 0 || tr.end == 0 || tr.start + tr.end > n {
        return Err(Error::EmptyWindow { lo: tr.start, hi: tr.end, len: n });
    }
    let c = centered_prefix(x.as_slice());
    let (raw, argmax) = scan_max(tr.window(n), |t| mean_diff(&c, t).abs());
    let scaled = (tr.start as f64).sqrt() * raw;
    Ok(StatOutcome { raw, scaled, argmax, trim: Some(tr) })
}

/// Rényi statistic `D_T = max_{t_T ≤ t ≤ T - t_T} |mean(X_1..X_t) - mean(X_{t+1}..X_T)|`.
///
/// `scaled` is `t_T^{1/2} D_T`, the pivotal form when `σ = 1`.
pub fn renyi_stat(x: &RealSeries, trim: &TrimSpec) -> Result<StatOutcome> {
    renyi_window(x, trim.resolve(x.len())?)
}

/// Rényi statistic with asymmetric trimming, maximized over `t_T ≤ t ≤ T - s_T`.
pub fn renyi_stat_asym(x: &RealSeries, start: usize, end: usize) -> Result<StatOutcome> {
    if start == 0 || end == 0 {
        return Err(Error::InvalidTrim("trimming counts must be >= 1".into()));
    }
    renyi_window(x, Trim { start, end })
}

/// Normalizing constants of the Darling–Erdős statistic for sample size `T`:
/// `(a_T, M_T)` with `y = T / (ln T)^{3/2}`, `a_T = (2 ln ln y)^{1/2}` and
/// `M_T = 2 ln ln y - ½ ln ln ln y + ½ ln π`.
///
/// Requires `T ≥ 4` and `y > e`, where `a_T > 0` and every logarithm is
/// real. Together these mean `T ≥ 9`.
pub fn darling_erdos_constants(len: usize) -> Result<(f64, f64)> {
    let n = len as f64;
    let y = if len >= 4 { n / n.ln().powf(1.5) } else { 0.0 };
    if !(y > std::f64::consts::E) {
        return Err(Error::TooShort { needed: min_darling_erdos_len(), got: len });
    }
    let ll = y.ln().ln();
    let a = (2.0 * ll).sqrt();
    let m = 2.0 * ll - 0.5 * ll.ln() + 0.5 * std::f64::consts::PI.ln();
    Ok((a, m))
}

/// Smallest sample size accepted by [`darling_erdos_stat`].
pub fn min_darling_erdos_len() -> usize {
    (4..)
        .find(|&len: &usize| {
            let n = len as f64;
            n / n.ln().powf(1.5) > std::f64::consts::E
        })
        .unwrap_or(usize::MAX)
}

/// Full-range standardized CUSUM `A_T(1/2)` over `1 ≤ t ≤ T - 1`.
pub fn standardized_cusum_full(x: &RealSeries) -> StatOutcome {
    let n = x.len();
    let c = centered_prefix(x.as_slice());
    let (m, argmax) = scan_max(1..n, |t| weight(t, n, 0.5) * c[t].abs());
    let raw = m / (n as f64).sqrt();
    StatOutcome { raw, scaled: raw, argmax, trim: None }
}

/// Darling–Erdős statistic `E_T = a_T A_T(1/2) - M_T` (with `σ = 1`).
pub fn darling_erdos_stat(x: &RealSeries) -> Result<StatOutcome> {
    let (a, m) = darling_erdos_constants(x.len())?;
    let inner = standardized_cusum_full(x);
    let raw = a * inner.raw - m;
    Ok(StatOutcome { raw, scaled: raw, argmax: inner.argmax, trim: None })
}

/// Self-normalized Rényi statistic
/// `Ĝ_T = t_T^{1/2} max_t |mean(X_1..X_t) - mean(X_{t+1}..X_T)| / σ̂_{T,t}`,
/// with `σ̂_{T,t}` re-estimated at every `t` in the window.
///
/// Any `σ̂_{T,t}` at or below the configured floor is an error.
pub fn renyi_self_normalized(x: &RealSeries, trim: &TrimSpec, vcfg: &VarianceConfig) -> Result<StatOutcome> {
    vcfg.validate()?;
    let n = x.len();
    let tr = trim.resolve(n)?;
    let c = centered_prefix(x.as_slice());
    let mut scan = VarianceScan::new(x.as_slice(), vcfg);
    let mut best = f64::NEG_INFINITY;
    let mut argmax = 0;
    for t in tr.window(n) {
        let sigma = scan.sigma_at(t)?;
        let v = mean_diff(&c, t).abs() / sigma;
        if v > best {
            best = v;
            argmax = t;
        }
    }
    let raw = (tr.start as f64).sqrt() * best;
    Ok(StatOutcome { raw, scaled: raw, argmax, trim: Some(tr) })
}
