//! Asymptotic null laws of the change-point statistics, with series CDFs,
//! bisection quantiles and a path-simulation sampler used as an oracle.
//!
//! | law | variable | used by |
//! |-----|----------|---------|
//! | [`LimitKind::MaxTwoSupWiener`] | `max(ξ₁, ξ₂)`, `ξ = sup_{[0,1]} \|W\|` | Rényi statistic |
//! | [`LimitKind::SupBrownianBridge`] | `sup_{[0,1]} \|B\|` | CUSUM |
//! | [`LimitKind::GumbelDe`] | `exp(-2e^{-x})` | Darling–Erdős |
//! | [`LimitKind::SupWiener`] | `sup_{[0,1]} W` | local power of the Rényi statistic |
//!
//! Each theta-type series converges fast on one side of the unit interval and
//! slowly on the other, so both CDFs switch between two exact expansions at a
//! crossover point and truncate once the next term drops below `1e-17`.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use libm::{erf, erfc};

use crate::error::{Error, Result};
use crate::rng::substream;

/// Default cap on series terms.
pub const DEFAULT_TERMS: usize = 100;
/// Default absolute tolerance of [`quantile`].
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
/// Below this point the sup-|W| and sup-|B| CDFs are returned as exactly 0
/// (their true values are below 1e-100).
pub const X_MIN: f64 = 0.05;

const TERM_EPS: f64 = 1e-17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitKind {
    MaxTwoSupWiener,
    SupBrownianBridge,
    GumbelDe,
    SupWiener,
}

impl fmt::Display for LimitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LimitKind::MaxTwoSupWiener => "max-two-sup-wiener",
            LimitKind::SupBrownianBridge => "sup-brownian-bridge",
            LimitKind::GumbelDe => "gumbel-de",
            LimitKind::SupWiener => "sup-wiener",
        };
        f.write_str(s)
    }
}

impl FromStr for LimitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max-two-sup-wiener" => Ok(LimitKind::MaxTwoSupWiener),
            "sup-brownian-bridge" => Ok(LimitKind::SupBrownianBridge),
            "gumbel-de" => Ok(LimitKind::GumbelDe),
            "sup-wiener" => Ok(LimitKind::SupWiener),
            _ => Err(Error::Parse(format!("unknown limit law '{s}'"))),
        }
    }
}

/// A limit law together with its numerical settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitLaw {
    pub kind: LimitKind,
    pub terms: usize,
    pub tolerance: f64,
}

impl LimitLaw {
    pub fn new(kind: LimitKind) -> Self {
        Self { kind, terms: DEFAULT_TERMS, tolerance: DEFAULT_TOLERANCE }
    }

    pub fn with_terms(kind: LimitKind, terms: usize) -> Result<Self> {
        Self { kind, terms, tolerance: DEFAULT_TOLERANCE }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.terms < 5 {
            return Err(Error::InvalidParameter(format!("series truncation must be >= 5, got {}", self.terms)));
        }
        if !(self.tolerance > 0.0 && self.tolerance <= 1e-6) {
            return Err(Error::InvalidParameter(format!(
                "quantile tolerance must lie in (0, 1e-6], got {}",
                self.tolerance
            )));
        }
        Ok(self)
    }

    pub fn max_two_sup_wiener() -> Self {
        Self::new(LimitKind::MaxTwoSupWiener)
    }

    pub fn sup_brownian_bridge() -> Self {
        Self::new(LimitKind::SupBrownianBridge)
    }

    pub fn gumbel_de() -> Self {
        Self::new(LimitKind::GumbelDe)
    }

    pub fn sup_wiener() -> Self {
        Self::new(LimitKind::SupWiener)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self.kind {
            LimitKind::MaxTwoSupWiener => sup_abs_wiener_series(x, self.terms).powi(2),
            LimitKind::SupBrownianBridge => sup_bridge_series(x, self.terms),
            LimitKind::GumbelDe => cdf_gumbel_de(x),
            LimitKind::SupWiener => cdf_sup_wiener(x),
        }
    }

    /// Upper tail `1 - CDF(x)`, computed without cancellation in the far tail.
    pub fn sf(&self, x: f64) -> f64 {
        match self.kind {
            LimitKind::MaxTwoSupWiener => {
                let q = sup_abs_wiener_sf(x, self.terms);
                // 1 - (1-q)^2
                (q * (2.0 - q)).clamp(0.0, 1.0)
            }
            LimitKind::SupBrownianBridge => sup_bridge_sf(x, self.terms),
            LimitKind::GumbelDe => -(-2.0 * (-x).exp()).exp_m1(),
            LimitKind::SupWiener => {
                if x <= 0.0 {
                    1.0
                } else {
                    erfc(x / SQRT_2)
                }
            }
        }
    }

    /// Smallest `x` with `CDF(x) >= p`, to the law's tolerance.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        quantile(self, p)
    }

    pub fn p_value(&self, statistic: f64) -> f64 {
        p_value(self, statistic)
    }
}

/// `P(sup_{0≤u≤1} |W(u)| ≤ x)`.
pub fn cdf_sup_abs_wiener(x: f64) -> f64 {
    sup_abs_wiener_series(x, DEFAULT_TERMS)
}

/// `P(max(ξ₁, ξ₂) ≤ x)` for independent copies of `sup |W|`.
pub fn cdf_max_two_sup_wiener(x: f64) -> f64 {
    cdf_sup_abs_wiener(x).powi(2)
}

/// `P(sup_{0≤u≤1} |B(u)| ≤ x)` (Kolmogorov distribution).
pub fn cdf_sup_brownian_bridge(x: f64) -> f64 {
    sup_bridge_series(x, DEFAULT_TERMS)
}

/// `exp(-2 e^{-x})`.
pub fn cdf_gumbel_de(x: f64) -> f64 {
    (-2.0 * (-x).exp()).exp()
}

/// `P(sup_{0≤u≤1} W(u) ≤ x) = 2Φ(x) - 1` for `x ≥ 0`.
pub fn cdf_sup_wiener(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        erf(x / SQRT_2)
    }
}

fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

/// Crossover between the two expansions of the sup-|W| law.
const WIENER_SWITCH: f64 = 1.2;

/// Small-x expansion:
/// `(4/π) Σ_{k≥0} (-1)^k/(2k+1) · exp(-π²(2k+1)²/(8x²))`.
fn sup_abs_wiener_theta(x: f64, terms: usize) -> f64 {
    let c = PI * PI / (8.0 * x * x);
    let mut sum = 0.0;
    for k in 0..terms {
        let m = (2 * k + 1) as f64;
        let term = (-c * m * m).exp() / m;
        if term < TERM_EPS {
            break;
        }
        sum += if k % 2 == 0 { term } else { -term };
    }
    (4.0 / PI * sum).clamp(0.0, 1.0)
}

/// Large-x expansion of the tail: `4 Σ_{k≥1} (-1)^{k+1} Φ̄((2k-1)x)`.
fn sup_abs_wiener_tail(x: f64, terms: usize) -> f64 {
    let lead = normal_sf(x);
    let mut sum = 0.0;
    for k in 1..=terms {
        let term = normal_sf((2 * k - 1) as f64 * x);
        if term < TERM_EPS * lead {
            break;
        }
        sum += if k % 2 == 1 { term } else { -term };
    }
    (4.0 * sum).clamp(0.0, 1.0)
}

fn sup_abs_wiener_series(x: f64, terms: usize) -> f64 {
    if x < X_MIN {
        0.0
    } else if x < WIENER_SWITCH {
        sup_abs_wiener_theta(x, terms)
    } else {
        1.0 - sup_abs_wiener_tail(x, terms)
    }
}

fn sup_abs_wiener_sf(x: f64, terms: usize) -> f64 {
    if x < X_MIN {
        1.0
    } else if x < WIENER_SWITCH {
        1.0 - sup_abs_wiener_theta(x, terms)
    } else {
        sup_abs_wiener_tail(x, terms)
    }
}

const BRIDGE_SWITCH: f64 = 1.0;

/// Small-x expansion: `(√(2π)/x) Σ_{k≥1} exp(-(2k-1)²π²/(8x²))`.
fn sup_bridge_theta(x: f64, terms: usize) -> f64 {
    let c = PI * PI / (8.0 * x * x);
    let mut sum = 0.0;
    for k in 1..=terms {
        let m = (2 * k - 1) as f64;
        let term = (-c * m * m).exp();
        if term < TERM_EPS {
            break;
        }
        sum += term;
    }
    ((2.0 * PI).sqrt() / x * sum).clamp(0.0, 1.0)
}

/// Tail: `2 Σ_{k≥1} (-1)^{k+1} exp(-2k²x²)`.
fn sup_bridge_tail(x: f64, terms: usize) -> f64 {
    let mut sum: f64 = 0.0;
    for k in 1..=terms {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        if term < TERM_EPS * sum.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        sum += if k % 2 == 1 { term } else { -term };
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn sup_bridge_series(x: f64, terms: usize) -> f64 {
    if x < X_MIN {
        0.0
    } else if x < BRIDGE_SWITCH {
        sup_bridge_theta(x, terms)
    } else {
        1.0 - sup_bridge_tail(x, terms)
    }
}

fn sup_bridge_sf(x: f64, terms: usize) -> f64 {
    if x < X_MIN {
        1.0
    } else if x < BRIDGE_SWITCH {
        1.0 - sup_bridge_theta(x, terms)
    } else {
        sup_bridge_tail(x, terms)
    }
}

/// Smallest `x` with `CDF(x) ≥ p`, by bracketing bisection.
pub fn quantile(law: &LimitLaw, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("probability must lie in (0, 1), got {p}")));
    }
    if law.kind == LimitKind::GumbelDe {
        return Ok(-(-p.ln() / 2.0).ln());
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while law.cdf(hi) < p {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::InvalidParameter(format!("quantile {p} not bracketed")));
        }
    }
    while hi - lo > law.tolerance {
        let mid = 0.5 * (lo + hi);
        if law.cdf(mid) >= p {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `1 - CDF(statistic)`, clamped to `[0, 1]`.
pub fn p_value(law: &LimitLaw, statistic: f64) -> f64 {
    if statistic.is_nan() {
        return f64::NAN;
    }
    law.sf(statistic).clamp(0.0, 1.0)
}

/// Draws approximating a limit law from scaled Gaussian random-walk paths of
/// `steps` increments. Draw `i` uses the substream `(seed, i)`, so the output
/// does not depend on thread scheduling.
///
/// The supremum over a discrete grid is biased low by `O(steps^{-1/2})`.
/// [`mc_sample_limit_refined`] removes that bias.
pub fn mc_sample_limit(law: &LimitLaw, reps: usize, steps: usize, seed: u64) -> Result<Vec<f64>> {
    sample_paths(law, reps, steps, seed, false)
}

/// As [`mc_sample_limit`], but the supremum between consecutive grid points
/// is drawn from the exact conditional law of a Brownian bridge's maximum,
/// so the only remaining error is Monte Carlo noise.
pub fn mc_sample_limit_refined(law: &LimitLaw, reps: usize, steps: usize, seed: u64) -> Result<Vec<f64>> {
    sample_paths(law, reps, steps, seed, true)
}

fn sample_paths(law: &LimitLaw, reps: usize, steps: usize, seed: u64, refine: bool) -> Result<Vec<f64>> {
    if reps == 0 || steps == 0 {
        return Err(Error::InvalidParameter("reps and steps must be >= 1".into()));
    }
    let out = (0..reps as u64)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(steps + 1),
            |path, i| {
                let mut rng = substream(seed, i);
                match law.kind {
                    LimitKind::MaxTwoSupWiener => {
                        let a = path_sup(&mut rng, path, steps, PathKind::AbsWiener, refine);
                        let b = path_sup(&mut rng, path, steps, PathKind::AbsWiener, refine);
                        a.max(b)
                    }
                    LimitKind::SupBrownianBridge => path_sup(&mut rng, path, steps, PathKind::AbsBridge, refine),
                    LimitKind::SupWiener => path_sup(&mut rng, path, steps, PathKind::Wiener, refine),
                    LimitKind::GumbelDe => {
                        // Gumbel variate by inversion; there is no path functional with this exact law.
                        let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                        -(-u.ln() / 2.0).ln()
                    }
                }
            },
        )
        .collect();
    Ok(out)
}

#[derive(Clone, Copy, PartialEq)]
enum PathKind {
    AbsWiener,
    AbsBridge,
    Wiener,
}

/// Builds one path on `0, 1/n, ..., 1` into `path` and returns its supremum functional.
fn path_sup<R: Rng>(rng: &mut R, path: &mut Vec<f64>, steps: usize, kind: PathKind, refine: bool) -> f64 {
    let scale = 1.0 / (steps as f64).sqrt();
    path.clear();
    path.push(0.0);
    let mut acc = 0.0;
    for _ in 0..steps {
        let z: f64 = rng.sample(StandardNormal);
        acc += z * scale;
        path.push(acc);
    }
    if kind == PathKind::AbsBridge {
        let end = acc;
        for (k, v) in path.iter_mut().enumerate() {
            *v -= end * k as f64 / steps as f64;
        }
    }
    let grid_sup = match kind {
        PathKind::Wiener => path.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        _ => path.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
    };
    if !refine {
        return grid_sup;
    }
    // Given the grid, each gap is an independent Brownian bridge with variance
    // dt. Its maximum exceeds max(a, b) by more than 8√dt with probability
    // below e^{-128}, so only gaps near the current supremum are refined.
    let dt = 1.0 / steps as f64;
    let cut = grid_sup - 8.0 * dt.sqrt();
    let mut best = grid_sup;
    for w in path.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.max(b) >= cut {
            best = best.max(bridge_max(rng, a, b, dt));
        }
        if kind != PathKind::Wiener && (-a).max(-b) >= cut {
            best = best.max(bridge_max(rng, -a, -b, dt));
        }
    }
    best
}

/// Maximum of a Brownian bridge from `a` to `b` over a gap of variance `dt`.
fn bridge_max<R: Rng>(rng: &mut R, a: f64, b: f64, dt: f64) -> f64 {
    let u: f64 = 1.0 - rng.random::<f64>();
    0.5 * (a + b + ((b - a).powi(2) - 2.0 * dt * u.ln()).sqrt())
}

/// Two-sided Kolmogorov distance between the empirical CDF of `sample` and `cdf`.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs: Vec<f64> = sample.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sup_abs_wiener_values() {
        assert_abs_diff_eq!(cdf_sup_abs_wiener(100.0), 1.0, epsilon = 1e-12);
        assert_eq!(cdf_sup_abs_wiener(0.0), 0.0);
        assert_eq!(cdf_sup_abs_wiener(-1.0), 0.0);
        // Two leading theta terms: (4/π)(e^{-π²/8} - e^{-9π²/8}/3).
        let two_terms = 4.0 / PI * ((-PI * PI / 8.0).exp() - (-9.0 * PI * PI / 8.0).exp() / 3.0);
        assert_abs_diff_eq!(cdf_sup_abs_wiener(1.0), two_terms, epsilon = 1e-12);
        assert_abs_diff_eq!(cdf_sup_abs_wiener(1.0), 0.3708, epsilon = 5e-5);
        assert_abs_diff_eq!(cdf_max_two_sup_wiener(1.0), 0.1375, epsilon = 5e-5);
        assert_abs_diff_eq!(cdf_max_two_sup_wiener(100.0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn expansions_agree_at_crossover() {
        for x in [0.8, 1.0, 1.2, 1.5, 2.0] {
            let a = sup_abs_wiener_theta(x, 200);
            let b = 1.0 - sup_abs_wiener_tail(x, 200);
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
            let c = sup_bridge_theta(x, 200);
            let d = 1.0 - sup_bridge_tail(x, 200);
            assert_abs_diff_eq!(c, d, epsilon = 1e-14);
        }
    }

    #[test]
    fn sup_bridge_values() {
        assert_abs_diff_eq!(cdf_sup_brownian_bridge(100.0), 1.0, epsilon = 1e-12);
        assert!(cdf_sup_brownian_bridge(0.1) < 1e-8);
        let q = LimitLaw::sup_brownian_bridge().quantile(0.95).unwrap();
        assert_abs_diff_eq!(q, 1.3581, epsilon = 1e-4);
    }

    #[test]
    fn gumbel_values() {
        assert_abs_diff_eq!(cdf_gumbel_de(0.0), (-2.0_f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(cdf_gumbel_de(0.0), 0.13534, epsilon = 1e-5);
        let law = LimitLaw::gumbel_de();
        assert_abs_diff_eq!(law.quantile(0.95).unwrap(), 3.6633, epsilon = 1e-4);
        assert_abs_diff_eq!(law.quantile(0.5).unwrap(), 1.0597, epsilon = 1e-4);
        assert_eq!(cdf_gumbel_de(1e3), 1.0);
        assert!(law.p_value(-0.5) > 0.86);
        assert_abs_diff_eq!(law.p_value(0.0), 1.0 - (-2.0_f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn quantile_round_trip_all_laws() {
        for kind in [LimitKind::MaxTwoSupWiener, LimitKind::SupBrownianBridge, LimitKind::GumbelDe, LimitKind::SupWiener]
        {
            let law = LimitLaw::new(kind);
            for i in 1..100 {
                let p = i as f64 / 100.0;
                let q = law.quantile(p).unwrap();
                assert!((law.cdf(q) - p).abs() <= 10.0 * law.tolerance.max(1e-12) + 1e-9, "{kind} p={p}");
                assert_abs_diff_eq!(law.p_value(q), 1.0 - p, epsilon = 1e-8);
            }
            assert!(law.quantile(0.0).is_err());
            assert!(law.quantile(1.0).is_err());
        }
    }

    #[test]
    fn quantile_inverts_computed_point() {
        let law = LimitLaw::max_two_sup_wiener();
        let x0 = 2.1;
        let q = law.quantile(law.cdf(x0)).unwrap();
        assert_abs_diff_eq!(q, x0, epsilon = 1e-8);
        assert_eq!(law.p_value(0.0), 1.0);
    }

    #[test]
    fn truncation_is_stable() {
        for kind in [LimitKind::MaxTwoSupWiener, LimitKind::SupBrownianBridge] {
            let base = LimitLaw::new(kind);
            let wide = LimitLaw::with_terms(kind, 4 * DEFAULT_TERMS).unwrap();
            let mut x = 0.3;
            while x < 6.0 {
                assert!((base.cdf(x) - wide.cdf(x)).abs() < 1e-10);
                x += 0.05;
            }
        }
        assert!(LimitLaw::with_terms(LimitKind::GumbelDe, 4).is_err());
    }

    #[test]
    fn cdfs_are_monotone() {
        for kind in [LimitKind::MaxTwoSupWiener, LimitKind::SupBrownianBridge, LimitKind::GumbelDe, LimitKind::SupWiener]
        {
            let law = LimitLaw::new(kind);
            let mut prev = law.cdf(-5.0);
            let mut x = -5.0;
            while x < 8.0 {
                x += 0.01;
                let c = law.cdf(x);
                assert!((0.0..=1.0).contains(&c));
                assert!(c + 1e-15 >= prev, "{kind} not monotone at {x}");
                prev = c;
            }
        }
    }

    #[test]
    fn sup_wiener_half_normal() {
        assert_abs_diff_eq!(cdf_sup_wiener(40.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(cdf_sup_wiener(1.0), 2.0 * normal_cdf(1.0) - 1.0, epsilon = 1e-14);
        assert_eq!(cdf_sup_wiener(-1.0), 0.0);
    }

    #[test]
    fn sampler_is_deterministic() {
        let law = LimitLaw::max_two_sup_wiener();
        let a = mc_sample_limit(&law, 50, 200, 7).unwrap();
        let b = mc_sample_limit(&law, 50, 200, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, mc_sample_limit(&law, 50, 200, 8).unwrap());
        assert!(mc_sample_limit(&law, 0, 10, 1).is_err());
    }

    #[test]
    fn one_step_walk_is_half_normal() {
        let law = LimitLaw::new(LimitKind::SupBrownianBridge);
        // A one-step bridge is pinned at both ends.
        assert!(mc_sample_limit(&law, 10, 1, 3).unwrap().iter().all(|&v| v == 0.0));
        let law = LimitLaw::new(LimitKind::MaxTwoSupWiener);
        let draws = mc_sample_limit(&law, 20_000, 1, 3).unwrap();
        // max of two |N(0,1)| has CDF (2Φ(x) - 1)².
        let d = ks_distance(&draws, |x| cdf_sup_wiener(x).powi(2));
        assert!(d < 0.02, "ks = {d}");
    }

    #[test]
    fn refined_sampler_small_scale_agrees() {
        let law = LimitLaw::sup_brownian_bridge();
        let draws = mc_sample_limit_refined(&law, 4000, 200, 11).unwrap();
        let d = ks_distance(&draws, |x| law.cdf(x));
        assert!(d < 0.03, "ks = {d}");
    }

    #[test]
    fn ks_distance_single_point() {
        let d = ks_distance(&[0.0], normal_cdf);
        assert_abs_diff_eq!(d, 0.5, epsilon = 1e-15);
    }
}
