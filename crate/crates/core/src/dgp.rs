//! Seeded error processes and mean-change injection.
//!
//! Recursive models are driven by iid standard normal innovations `w_t`.
//! AR/ARMA states start at zero and GARCH starts from its stationary variance
//! `ω/(1-α-β)`; the first `burn_in` values are discarded.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kv::KeyValues;
use crate::rng::substream;
use crate::series::RealSeries;

pub const DEFAULT_BURN_IN: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "model")]
pub enum ErrorModel {
    IidNormal,
    /// ±1 with probability 1/2 each.
    Rademacher,
    /// `e_t = σ_t w_t`, `σ_t² = ω + α e_{t-1}² + β σ_{t-1}²`.
    Garch11 { omega: f64, alpha: f64, beta: f64 },
    /// `e_t = ρ e_{t-1} + w_t`.
    Ar1 { rho: f64 },
    /// `e_t = φ₁e_{t-1} + φ₂e_{t-2} + w_t + ψ₁w_{t-1} + ψ₂w_{t-2}`.
    Arma22 { phi1: f64, phi2: f64, psi1: f64, psi2: f64 },
}

impl ErrorModel {
    /// GARCH(1,1) with `ω = 0.5, α = 0.1, β = 0.7`.
    pub fn garch_default() -> Self {
        ErrorModel::Garch11 { omega: 0.5, alpha: 0.1, beta: 0.7 }
    }

    /// AR(1) with `ρ = 0.5`.
    pub fn ar1_default() -> Self {
        ErrorModel::Ar1 { rho: 0.5 }
    }

    /// ARMA(2,2) with `φ = (0.4, -0.03)`, `ψ = (0.5, -0.6)`.
    pub fn arma22_default() -> Self {
        ErrorModel::Arma22 { phi1: 0.4, phi2: -0.03, psi1: 0.5, psi2: -0.6 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ErrorModel::IidNormal => "iid-normal",
            ErrorModel::Rademacher => "rademacher",
            ErrorModel::Garch11 { .. } => "garch11",
            ErrorModel::Ar1 { .. } => "ar1",
            ErrorModel::Arma22 { .. } => "arma22",
        }
    }

    /// Symmetric about zero (all built-in models are).
    pub fn is_symmetric(&self) -> bool {
        true
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ErrorModel::Garch11 { omega, alpha, beta } => {
                if !(omega > 0.0 && alpha >= 0.0 && beta >= 0.0 && alpha + beta < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "GARCH(1,1) needs ω > 0, α, β >= 0, α + β < 1; got ω={omega}, α={alpha}, β={beta}"
                    )));
                }
            }
            ErrorModel::Ar1 { rho } => {
                if !(rho.abs() < 1.0) {
                    return Err(Error::InvalidParameter(format!("AR(1) needs |ρ| < 1, got {rho}")));
                }
            }
            ErrorModel::Arma22 { phi1, phi2, psi1, psi2 } => {
                let stationary = phi1 + phi2 < 1.0 && phi2 - phi1 < 1.0 && phi2.abs() < 1.0;
                if !stationary || !psi1.is_finite() || !psi2.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "ARMA(2,2) AR part is not stationary: φ₁={phi1}, φ₂={phi2}"
                    )));
                }
            }
            ErrorModel::IidNormal | ErrorModel::Rademacher => {}
        }
        Ok(())
    }

    /// Long-run variance `Σ_h γ(h)` of the stationary process.
    pub fn true_lrv(&self) -> f64 {
        match *self {
            ErrorModel::IidNormal | ErrorModel::Rademacher => 1.0,
            ErrorModel::Garch11 { omega, alpha, beta } => omega / (1.0 - alpha - beta),
            ErrorModel::Ar1 { rho } => 1.0 / (1.0 - rho).powi(2),
            ErrorModel::Arma22 { phi1, phi2, psi1, psi2 } => ((1.0 + psi1 + psi2) / (1.0 - phi1 - phi2)).powi(2),
        }
    }

    /// Marginal variance `γ(0)` of the stationary process.
    pub fn stationary_variance(&self) -> f64 {
        match *self {
            ErrorModel::IidNormal | ErrorModel::Rademacher => 1.0,
            ErrorModel::Garch11 { omega, alpha, beta } => omega / (1.0 - alpha - beta),
            ErrorModel::Ar1 { rho } => 1.0 / (1.0 - rho * rho),
            ErrorModel::Arma22 { phi1, phi2, psi1, psi2 } => {
                // Σ ψ_j² over the MA(∞) weights.
                let (mut p2, mut p1) = (0.0, 0.0);
                let mut total = 0.0;
                for j in 0..10_000 {
                    let theta = match j {
                        0 => 1.0,
                        1 => psi1,
                        2 => psi2,
                        _ => 0.0,
                    };
                    let w = phi1 * p1 + phi2 * p2 + theta;
                    total += w * w;
                    p2 = p1;
                    p1 = w;
                    if j > 10 && w.abs() < 1e-18 {
                        break;
                    }
                }
                total
            }
        }
    }

    /// Runs the recursion on given innovations. Returns the errors and, for
    /// GARCH, the conditional variances.
    pub fn filter(&self, innovations: &[f64]) -> (Vec<f64>, Option<Vec<f64>>) {
        match *self {
            ErrorModel::IidNormal | ErrorModel::Rademacher => (innovations.to_vec(), None),
            ErrorModel::Ar1 { rho } => {
                let mut prev = 0.0;
                let e = innovations
                    .iter()
                    .map(|w| {
                        prev = rho * prev + w;
                        prev
                    })
                    .collect();
                (e, None)
            }
            ErrorModel::Arma22 { phi1, phi2, psi1, psi2 } => {
                let (mut e1, mut e2, mut w1, mut w2) = (0.0, 0.0, 0.0, 0.0);
                let e = innovations
                    .iter()
                    .map(|&w| {
                        let v = phi1 * e1 + phi2 * e2 + w + psi1 * w1 + psi2 * w2;
                        e2 = e1;
                        e1 = v;
                        w2 = w1;
                        w1 = w;
                        v
                    })
                    .collect();
                (e, None)
            }
            ErrorModel::Garch11 { omega, alpha, beta } => {
                let mut s2 = omega / (1.0 - alpha - beta);
                let mut prev_e = 0.0;
                let mut vars = Vec::with_capacity(innovations.len());
                let e = innovations
                    .iter()
                    .map(|w| {
                        s2 = omega + alpha * prev_e * prev_e + beta * s2;
                        vars.push(s2);
                        prev_e = s2.sqrt() * w;
                        prev_e
                    })
                    .collect();
                (e, Some(vars))
            }
        }
    }
}

impl fmt::Display for ErrorModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ErrorModel {
    type Err = Error;

    /// Parses the model name with default parameters.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "iid-normal" | "normal" => Ok(ErrorModel::IidNormal),
            "rademacher" | "bernoulli" => Ok(ErrorModel::Rademacher),
            "garch11" | "garch" => Ok(ErrorModel::garch_default()),
            "ar1" => Ok(ErrorModel::ar1_default()),
            "arma22" => Ok(ErrorModel::arma22_default()),
            other => Err(Error::Parse(format!(
                "unknown error model '{other}' (expected iid-normal|rademacher|garch11|ar1|arma22)"
            ))),
        }
    }
}

/// Where the mean change happens, as a function of `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChangeRule {
    Fixed(usize),
    /// `⌊T^{1/4}⌋`
    QuarterRoot,
    /// `⌊0.05 T⌋`
    FivePercent,
    /// `⌊T^{1/2}⌋`
    SquareRoot,
}

impl ChangeRule {
    pub fn resolve(&self, len: usize) -> usize {
        let n = len as f64;
        match *self {
            ChangeRule::Fixed(k) => k,
            ChangeRule::QuarterRoot => n.powf(0.25).floor() as usize,
            ChangeRule::FivePercent => (0.05 * n).floor() as usize,
            ChangeRule::SquareRoot => n.sqrt().floor() as usize,
        }
    }
}

impl fmt::Display for ChangeRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChangeRule::Fixed(k) => write!(f, "{k}"),
            ChangeRule::QuarterRoot => f.write_str("quarter"),
            ChangeRule::FivePercent => f.write_str("five-percent"),
            ChangeRule::SquareRoot => f.write_str("sqrt"),
        }
    }
}

impl FromStr for ChangeRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "quarter" => Ok(ChangeRule::QuarterRoot),
            "five-percent" => Ok(ChangeRule::FivePercent),
            "sqrt" => Ok(ChangeRule::SquareRoot),
            other => other
                .parse::<usize>()
                .map(ChangeRule::Fixed)
                .map_err(|_| Error::Parse(format!("bad change location '{other}' (expected quarter|five-percent|sqrt|N)"))),
        }
    }
}

/// Full data-generating specification: errors plus a mean `μ` that moves to
/// `μ + Δ` after `t*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub errors: ErrorModel,
    pub mu: f64,
    pub delta: f64,
    pub change_at: ChangeRule,
    pub len: usize,
    pub seed: u64,
    pub burn_in: usize,
}

impl DgpSpec {
    pub fn new(errors: ErrorModel, len: usize, seed: u64) -> Self {
        Self { errors, mu: 0.0, delta: 0.0, change_at: ChangeRule::QuarterRoot, len, seed, burn_in: DEFAULT_BURN_IN }
    }

    pub fn with_change(mut self, delta: f64, change_at: ChangeRule) -> Self {
        self.delta = delta;
        self.change_at = change_at;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.errors.validate()?;
        if self.len < 2 {
            return Err(Error::TooShort { needed: 2, got: self.len });
        }
        if !self.mu.is_finite() || !self.delta.is_finite() {
            return Err(Error::InvalidParameter("μ and Δ must be finite".into()));
        }
        if self.delta != 0.0 {
            let t = self.change_at.resolve(self.len);
            if t == 0 || t >= self.len {
                return Err(Error::IndexOutOfRange { index: t, max: self.len - 1 });
            }
        }
        Ok(())
    }

    pub fn true_lrv(&self) -> f64 {
        self.errors.true_lrv()
    }

    pub fn to_kv(&self) -> String {
        let mut out = format!("errors = {}\n", self.errors.name());
        match self.errors {
            ErrorModel::Garch11 { omega, alpha, beta } => {
                out += &format!("omega = {omega}\nalpha = {alpha}\nbeta = {beta}\n")
            }
            ErrorModel::Ar1 { rho } => out += &format!("rho = {rho}\n"),
            ErrorModel::Arma22 { phi1, phi2, psi1, psi2 } => {
                out += &format!("phi1 = {phi1}\nphi2 = {phi2}\npsi1 = {psi1}\npsi2 = {psi2}\n")
            }
            _ => {}
        }
        out += &format!(
            "mu = {}\ndelta = {}\nchange_at = {}\nlen = {}\nseed = {}\nburn_in = {}\n",
            self.mu, self.delta, self.change_at, self.len, self.seed, self.burn_in
        );
        out
    }

    pub const KEYS: &'static [&'static str] = &[
        "errors", "omega", "alpha", "beta", "rho", "phi1", "phi2", "psi1", "psi2", "mu", "delta", "change_at", "len",
        "seed", "burn_in",
    ];

    pub fn from_kv_text(text: &str) -> Result<Self> {
        let kv = KeyValues::parse(text)?;
        kv.deny_unknown(Self::KEYS)?;
        Self::from_kv(&kv)
    }

    /// Reads the DGP fields from `kv`, ignoring any other keys.
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let errors = Self::errors_from_kv(kv)?;
        let spec = DgpSpec {
            errors,
            mu: kv.get_or("mu", 0.0)?,
            delta: kv.get_or("delta", 0.0)?,
            change_at: kv.get_or("change_at", ChangeRule::QuarterRoot)?,
            len: kv.require("len")?,
            seed: kv.get_or("seed", 0)?,
            burn_in: kv.get_or("burn_in", DEFAULT_BURN_IN)?,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub(crate) fn errors_from_kv(kv: &KeyValues) -> Result<ErrorModel> {
        let base: ErrorModel = kv.get_or("errors", ErrorModel::IidNormal)?;
        let model = match base {
            ErrorModel::Garch11 { omega, alpha, beta } => ErrorModel::Garch11 {
                omega: kv.get_or("omega", omega)?,
                alpha: kv.get_or("alpha", alpha)?,
                beta: kv.get_or("beta", beta)?,
            },
            ErrorModel::Ar1 { rho } => ErrorModel::Ar1 { rho: kv.get_or("rho", rho)? },
            ErrorModel::Arma22 { phi1, phi2, psi1, psi2 } => ErrorModel::Arma22 {
                phi1: kv.get_or("phi1", phi1)?,
                phi2: kv.get_or("phi2", phi2)?,
                psi1: kv.get_or("psi1", psi1)?,
                psi2: kv.get_or("psi2", psi2)?,
            },
            other => other,
        };
        model.validate()?;
        Ok(model)
    }
}

/// Error series of replication 0 of `spec`.
pub fn gen_errors(spec: &DgpSpec) -> Result<RealSeries> {
    gen_errors_rep(spec, 0)
}

/// Error series of replication `rep`, drawn from the `(seed, rep)` substream.
pub fn gen_errors_rep(spec: &DgpSpec, rep: u64) -> Result<RealSeries> {
    spec.validate()?;
    let mut rng = substream(spec.seed, rep);
    let values = match spec.errors {
        ErrorModel::IidNormal => (0..spec.len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect(),
        ErrorModel::Rademacher => (0..spec.len).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect(),
        model => {
            let innovations: Vec<f64> =
                (0..spec.burn_in + spec.len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let (mut e, _) = model.filter(&innovations);
            e.drain(..spec.burn_in);
            e
        }
    };
    RealSeries::new(values)
}

/// `X_t = μ + e_t` for `t ≤ t*`, `X_t = μ + Δ + e_t` afterwards.
pub fn inject_change(e: &RealSeries, mu: f64, delta: f64, change_at: usize) -> Result<RealSeries> {
    let n = e.len();
    if change_at == 0 || change_at >= n {
        return Err(Error::IndexOutOfRange { index: change_at, max: n - 1 });
    }
    let values = e
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, v)| if i < change_at { mu + v } else { mu + delta + v })
        .collect();
    RealSeries::new(values)
}

/// Observed series `X_t` of replication `rep`: errors plus the mean path.
pub fn simulate_rep(spec: &DgpSpec, rep: u64) -> Result<RealSeries> {
    let e = gen_errors_rep(spec, rep)?;
    if spec.delta == 0.0 {
        let v = e.into_vec().into_iter().map(|v| v + spec.mu).collect();
        return RealSeries::new(v);
    }
    inject_change(&e, spec.mu, spec.delta, spec.change_at.resolve(spec.len))
}

pub fn simulate(spec: &DgpSpec) -> Result<RealSeries> {
    simulate_rep(spec, 0)
}
