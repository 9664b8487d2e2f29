//! Change-robust variance estimators.
//!
//! Every estimator here is evaluated at a candidate break `t`: the series is
//! demeaned separately on `1..=t` and `t+1..=T` before any second moment is
//! taken, so a mean shift at `t` does not inflate the estimate.
//!
//! Two routes are provided. The free functions ([`split_variance`],
//! [`kernel_lrv`]) compute a single estimate directly from the demeaned
//! series. [`VarianceScan`] precomputes prefix sums of lagged products once
//! and then answers each `t` in `O(lags)`, which is what the scanning
//! statistics use.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::series::RealSeries;

/// Default lower bound on `σ̂_{T,t}` below which a normalization is refused.
pub const DEFAULT_FLOOR: f64 = 1e-12;

/// Largest `|ρ̂|` accepted by the AR(1) plug-in bandwidth before clamping.
pub const RHO_CLAMP: f64 = 0.999;

/// Bartlett (triangular) kernel `max(0, 1 - |u|)`.
pub fn bartlett(u: f64) -> f64 {
    (1.0 - u.abs()).max(0.0)
}

/// A caller-supplied lag window. `support` is the `c` with `K(u) = 0` for `|u| > c`.
#[derive(Clone)]
pub struct UserKernel {
    name: String,
    support: f64,
    func: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl UserKernel {
    pub fn new(
        name: impl Into<String>,
        support: f64,
        func: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(support > 0.0 && support.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kernel support must be positive and finite, got {support}"
            )));
        }
        let k0 = func(0.0);
        if (k0 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("kernel must satisfy K(0) = 1, got {k0}")));
        }
        Ok(Self { name: name.into(), support, func: Arc::new(func) })
    }
}

/// Same name and support, and the same function object.
impl PartialEq for UserKernel {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.support == other.support && Arc::ptr_eq(&self.func, &other.func)
    }
}

impl fmt::Debug for UserKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UserKernel").field("name", &self.name).field("support", &self.support).finish()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub enum Kernel {
    #[default]
    Bartlett,
    User(UserKernel),
}

impl Kernel {
    pub fn weight(&self, u: f64) -> f64 {
        match self {
            Kernel::Bartlett => bartlett(u),
            Kernel::User(k) => (k.func)(u),
        }
    }

    pub fn support(&self) -> f64 {
        match self {
            Kernel::Bartlett => 1.0,
            Kernel::User(k) => k.support,
        }
    }

    /// Largest lag with a possibly nonzero weight at bandwidth `h`, capped at `len - 1`.
    fn max_lag(&self, h: f64, len: usize) -> usize {
        let c = self.support() * h;
        let mut lag = c.floor() as usize;
        // K(c) = 0 for Bartlett, so an exact hit contributes nothing.
        if matches!(self, Kernel::Bartlett) && lag as f64 == c && lag > 0 {
            lag -= 1;
        }
        lag.min(len.saturating_sub(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Bandwidth {
    /// AR(1) plug-in for the Bartlett kernel, see [`andrews_bandwidth`].
    #[default]
    Andrews,
    Explicit(f64),
}

impl FromStr for Bandwidth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "andrews" => Ok(Bandwidth::Andrews),
            other => {
                let v = other
                    .strip_prefix("h=")
                    .ok_or_else(|| Error::Parse(format!("unknown bandwidth '{other}' (expected andrews|h=H)")))?;
                let h: f64 = v.parse().map_err(|_| Error::Parse(format!("bad bandwidth '{v}'")))?;
                if !(h > 0.0 && h.is_finite()) {
                    return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {h}")));
                }
                Ok(Bandwidth::Explicit(h))
            }
        }
    }
}

impl fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bandwidth::Andrews => write!(f, "andrews"),
            Bandwidth::Explicit(h) => write!(f, "h={h}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarianceKind {
    /// Known long-run variance `σ²`.
    Known(f64),
    /// Pooled split-sample variance, for uncorrelated errors.
    Split,
    /// Kernel long-run variance, for serially correlated errors.
    Kernel,
}

impl FromStr for VarianceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "split" => Ok(VarianceKind::Split),
            "kernel" => Ok(VarianceKind::Kernel),
            other => {
                let v = other.strip_prefix("known=").ok_or_else(|| {
                    Error::Parse(format!("unknown variance '{other}' (expected known=σ²|split|kernel)"))
                })?;
                let s2: f64 = v.parse().map_err(|_| Error::Parse(format!("bad variance '{v}'")))?;
                if !(s2 > 0.0 && s2.is_finite()) {
                    return Err(Error::InvalidParameter(format!("known variance must be positive, got {s2}")));
                }
                Ok(VarianceKind::Known(s2))
            }
        }
    }
}

impl fmt::Display for VarianceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarianceKind::Known(s2) => write!(f, "known={s2}"),
            VarianceKind::Split => write!(f, "split"),
            VarianceKind::Kernel => write!(f, "kernel"),
        }
    }
}

/// Selects and parameterizes the estimator of `σ²_{T,t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceConfig {
    pub kind: VarianceKind,
    pub kernel: Kernel,
    pub bandwidth: Bandwidth,
    pub floor: f64,
}

impl VarianceConfig {
    pub fn known(sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidParameter(format!("known variance must be positive, got {sigma2}")));
        }
        Ok(Self::with_kind(VarianceKind::Known(sigma2)))
    }

    pub fn split() -> Self {
        Self::with_kind(VarianceKind::Split)
    }

    /// Bartlett kernel with the AR(1) plug-in bandwidth.
    pub fn kernel() -> Self {
        Self::with_kind(VarianceKind::Kernel)
    }

    pub fn with_kind(kind: VarianceKind) -> Self {
        Self { kind, kernel: Kernel::Bartlett, bandwidth: Bandwidth::Andrews, floor: DEFAULT_FLOOR }
    }

    pub fn with_bandwidth(mut self, bandwidth: Bandwidth) -> Self {
        self.bandwidth = bandwidth;
        self
    }

    pub fn with_kernel(mut self, kernel: Kernel) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let VarianceKind::Known(s2) = self.kind {
            if !(s2 > 0.0 && s2.is_finite()) {
                return Err(Error::InvalidParameter(format!("known variance must be positive, got {s2}")));
            }
        }
        if let Bandwidth::Explicit(h) = self.bandwidth {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {h}")));
            }
        }
        if !(self.floor > 0.0) {
            return Err(Error::InvalidParameter("variance floor must be positive".into()));
        }
        Ok(())
    }

    /// Applies the floor to a variance estimate and returns `σ̂`.
    pub fn sigma_from(&self, t: usize, variance: f64) -> Result<f64> {
        let sigma = variance.max(0.0).sqrt();
        if sigma <= self.floor {
            return Err(Error::DegenerateVariance { t, sigma, floor: self.floor });
        }
        Ok(sigma)
    }

    /// `σ̂_{T,t}` computed directly (no precomputation).
    pub fn sigma_at(&self, x: &RealSeries, t: usize) -> Result<f64> {
        let v = match self.kind {
            VarianceKind::Known(s2) => s2,
            VarianceKind::Split => split_variance(x, t)?,
            VarianceKind::Kernel => kernel_lrv(x, t, self)?,
        };
        self.sigma_from(t, v)
    }
}

impl Default for VarianceConfig {
    fn default() -> Self {
        Self::kernel()
    }
}

fn check_split_index(len: usize, t: usize) -> Result<()> {
    if t == 0 || t >= len {
        return Err(Error::IndexOutOfRange { index: t, max: len - 1 });
    }
    Ok(())
}

fn segment_means(x: &[f64], t: usize) -> (f64, f64) {
    let first = x[..t].iter().sum::<f64>() / t as f64;
    let last = x[t..].iter().sum::<f64>() / (x.len() - t) as f64;
    (first, last)
}

/// `X_{s,t}`: each side of `t` centered at its own mean.
pub fn demean_split(x: &RealSeries, t: usize) -> Result<RealSeries> {
    let x = x.as_slice();
    check_split_index(x.len(), t)?;
    RealSeries::new(demean_split_slice(x, t))
}

pub(crate) fn demean_split_slice(x: &[f64], t: usize) -> Vec<f64> {
    let (first, last) = segment_means(x, t);
    x.iter().enumerate().map(|(s, &v)| if s < t { v - first } else { v - last }).collect()
}

/// Pooled split-sample variance at `t`, divided by `T`.
pub fn split_variance(x: &RealSeries, t: usize) -> Result<f64> {
    let x = x.as_slice();
    check_split_index(x.len(), t)?;
    let (first, last) = segment_means(x, t);
    let ss: f64 = x[..t].iter().map(|v| (v - first).powi(2)).sum::<f64>()
        + x[t..].iter().map(|v| (v - last).powi(2)).sum::<f64>();
    Ok(ss / x.len() as f64)
}

/// Lag-`ℓ` autocovariance `(1/(T-ℓ)) Σ_{s=1}^{T-ℓ} x_s x_{s+ℓ}` of an already
/// centered series.
pub fn autocov(xd: &RealSeries, lag: usize) -> Result<f64> {
    let x = xd.as_slice();
    if lag >= x.len() {
        return Err(Error::IndexOutOfRange { index: lag, max: x.len() - 1 });
    }
    Ok(autocov_slice(x, lag))
}

pub(crate) fn autocov_slice(x: &[f64], lag: usize) -> f64 {
    let n = x.len() - lag;
    x[..n].iter().zip(&x[lag..]).map(|(a, b)| a * b).sum::<f64>() / n as f64
}

/// Lag-1 least-squares autoregression coefficient of the mean-centered series.
pub(crate) fn ar1_coefficient(x: &[f64]) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for w in x.windows(2) {
        let (prev, cur) = (w[0] - mean, w[1] - mean);
        num += cur * prev;
        den += prev * prev;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Bartlett bandwidth from an AR(1) fit, clamped to `[1, T/2]`.
pub(crate) fn andrews_from_rho(rho: f64, len: usize) -> f64 {
    let mut rho = rho;
    if rho.abs() >= RHO_CLAMP {
        log::warn!("AR(1) coefficient {rho:.4} clamped to ±{RHO_CLAMP} for bandwidth selection");
        rho = rho.signum() * RHO_CLAMP;
    }
    let n = len as f64;
    let alpha = 4.0 * rho * rho / ((1.0 - rho).powi(2) * (1.0 + rho).powi(2));
    let h = 1.1447 * (alpha * n).cbrt();
    h.clamp(1.0, (n / 2.0).max(1.0))
}

/// AR(1) plug-in bandwidth for the Bartlett kernel:
/// `h = 1.1447 (4ρ̂²T / ((1-ρ̂)²(1+ρ̂)²))^{1/3}`, clamped to `[1, T/2]`.
pub fn andrews_bandwidth(x: &RealSeries) -> Result<f64> {
    if x.len() < 4 {
        return Err(Error::TooShort { needed: 4, got: x.len() });
    }
    let x = x.as_slice();
    Ok(andrews_from_rho(ar1_coefficient(x), x.len()))
}

/// Kernel long-run variance at `t`:
/// `γ̂_{0,t} + 2 Σ_ℓ K(ℓ/h) γ̂_{ℓ,t}` over the split-demeaned series.
///
/// With the Andrews rule the bandwidth is fitted to the split-demeaned series.
pub fn kernel_lrv(x: &RealSeries, t: usize, cfg: &VarianceConfig) -> Result<f64> {
    let xs = x.as_slice();
    check_split_index(xs.len(), t)?;
    let xd = demean_split_slice(xs, t);
    let h = match cfg.bandwidth {
        Bandwidth::Explicit(h) => h,
        Bandwidth::Andrews => {
            if xd.len() < 4 {
                return Err(Error::TooShort { needed: 4, got: xd.len() });
            }
            andrews_from_rho(ar1_coefficient(&xd), xd.len())
        }
    };
    let gamma0 = autocov_slice(&xd, 0);
    let mut est = gamma0;
    for lag in 1..=cfg.kernel.max_lag(h, xd.len()) {
        let w = cfg.kernel.weight(lag as f64 / h);
        if w != 0.0 {
            est += 2.0 * w * autocov_slice(&xd, lag);
        }
    }
    finish_lrv(t, est, gamma0)
}

fn finish_lrv(t: usize, est: f64, gamma0: f64) -> Result<f64> {
    // Round-off around an exact zero is not a sign problem.
    if est < -1e-12 * gamma0.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::NonPsdLrv { t, estimate: est });
    }
    Ok(est.max(0.0))
}

/// Per-`t` variance estimates for one series, answered from prefix sums.
///
/// Equal to [`split_variance`] / [`kernel_lrv`] up to floating-point
/// reassociation (agreement to ~1e-10 relative on centered data).
pub struct VarianceScan<'a> {
    cfg: &'a VarianceConfig,
    len: usize,
    /// Data centered at the full-sample mean.
    y: Vec<f64>,
    /// `prefix[k] = y_1 + ... + y_k`.
    prefix: Vec<f64>,
    /// `lagged[ℓ][k] = Σ_{s=1}^{k} y_s y_{s+ℓ}`, built on demand.
    lagged: Vec<Vec<f64>>,
}

impl<'a> VarianceScan<'a> {
    pub fn new(x: &[f64], cfg: &'a VarianceConfig) -> Self {
        let len = x.len();
        let mean = x.iter().sum::<f64>() / len as f64;
        let y: Vec<f64> = x.iter().map(|v| v - mean).collect();
        let mut prefix = Vec::with_capacity(len + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for v in &y {
            acc += v;
            prefix.push(acc);
        }
        let mut scan = Self { cfg, len, y, prefix, lagged: Vec::new() };
        if !matches!(cfg.kind, VarianceKind::Known(_)) {
            scan.ensure_lag(1.min(len - 1));
        }
        scan
    }

    fn ensure_lag(&mut self, lag: usize) {
        while self.lagged.len() <= lag {
            let l = self.lagged.len();
            let n = self.len - l;
            let mut q = Vec::with_capacity(n + 1);
            q.push(0.0);
            let mut acc = 0.0;
            for s in 0..n {
                acc += self.y[s] * self.y[s + l];
                q.push(acc);
            }
            self.lagged.push(q);
        }
    }

    fn psum(&self, lo: usize, hi: usize) -> f64 {
        self.prefix[hi] - self.prefix[lo - 1]
    }

    /// `Σ_{s=lo}^{hi} (y_s - ma)(y_{s+ℓ} - mb)` for 1-based `lo..=hi`.
    fn cross(&self, lag: usize, lo: usize, hi: usize, ma: f64, mb: f64) -> f64 {
        if lo > hi {
            return 0.0;
        }
        let q = &self.lagged[lag];
        let n = (hi - lo + 1) as f64;
        (q[hi] - q[lo - 1]) - mb * self.psum(lo, hi) - ma * self.psum(lo + lag, hi + lag) + ma * mb * n
    }

    /// `Σ_{s=1}^{T-ℓ} X_{s,t} X_{s+ℓ,t}` for the split-demeaned series.
    fn lag_sum(&self, lag: usize, t: usize, a: f64, b: f64) -> f64 {
        let n = self.len;
        let top = n - lag;
        // Both ends at or before t.
        let left = self.cross(lag, 1, t.saturating_sub(lag).min(top), a, a);
        // Straddling the split point.
        let mid = self.cross(lag, (t + 1).saturating_sub(lag).max(1), t.min(top), a, b);
        // Both ends after t.
        let right = self.cross(lag, t + 1, top, b, b);
        left + mid + right
    }

    /// Variance estimate `σ̂²_{T,t}`.
    pub fn variance_at(&mut self, t: usize) -> Result<f64> {
        if let VarianceKind::Known(s2) = self.cfg.kind {
            return Ok(s2);
        }
        check_split_index(self.len, t)?;
        let n = self.len;
        let a = self.prefix[t] / t as f64;
        let b = (self.prefix[n] - self.prefix[t]) / (n - t) as f64;
        let ss0 = self.lag_sum(0, t, a, b).max(0.0);
        match self.cfg.kind {
            VarianceKind::Split => Ok(ss0 / n as f64),
            VarianceKind::Kernel => {
                let gamma0 = ss0 / n as f64;
                let h = match self.cfg.bandwidth {
                    Bandwidth::Explicit(h) => h,
                    Bandwidth::Andrews => {
                        if n < 4 {
                            return Err(Error::TooShort { needed: 4, got: n });
                        }
                        let last = self.y[n - 1] - b;
                        let den = ss0 - last * last;
                        let rho = if den > 0.0 { self.lag_sum(1, t, a, b) / den } else { 0.0 };
                        andrews_from_rho(rho, n)
                    }
                };
                let max_lag = self.cfg.kernel.max_lag(h, n);
                self.ensure_lag(max_lag);
                let mut est = gamma0;
                for lag in 1..=max_lag {
                    let w = self.cfg.kernel.weight(lag as f64 / h);
                    if w != 0.0 {
                        est += 2.0 * w * self.lag_sum(lag, t, a, b) / (n - lag) as f64;
                    }
                }
                finish_lrv(t, est, gamma0)
            }
            VarianceKind::Known(_) => unreachable!(),
        }
    }

    /// `σ̂_{T,t}` with the configured floor applied.
    pub fn sigma_at(&mut self, t: usize) -> Result<f64> {
        let v = self.variance_at(t)?;
        self.cfg.sigma_from(t, v)
    }
}
