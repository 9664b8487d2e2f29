//! Naive O(T²) recomputation of every statistic, straight from the
//! definitions: each partial sum and mean is rebuilt from scratch per `t`.

#![allow(dead_code)]

pub fn partial_sum(x: &[f64], t: usize) -> f64 {
    x[..t].iter().sum()
}

fn cusum_at(x: &[f64], t: usize) -> f64 {
    let n = x.len() as f64;
    partial_sum(x, t) - (t as f64 / n) * partial_sum(x, x.len())
}

/// `T^{-1/2} max_{1≤t≤T} |S_t - (t/T) S_T|`
pub fn cusum(x: &[f64]) -> f64 {
    let n = x.len();
    (1..=n).map(|t| cusum_at(x, t).abs()).fold(f64::NEG_INFINITY, f64::max) / (n as f64).sqrt()
}

/// `T^{-1/2} max_{1≤t<T} ((t/T)(1-t/T))^{-τ} |S_t - (t/T) S_T|` over `range`.
pub fn weighted(x: &[f64], tau: f64, range: std::ops::RangeInclusive<usize>) -> f64 {
    let n = x.len() as f64;
    range
        .map(|t| {
            let u = t as f64 / n;
            (u * (1.0 - u)).powf(-tau) * cusum_at(x, t).abs()
        })
        .fold(f64::NEG_INFINITY, f64::max)
        / n.sqrt()
}

pub fn weighted_cusum(x: &[f64], tau: f64) -> f64 {
    weighted(x, tau, 1..=x.len() - 1)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `max_{a ≤ t ≤ T-b} |mean(X_1..X_t) - mean(X_{t+1}..X_T)|`
pub fn renyi(x: &[f64], a: usize, b: usize) -> f64 {
    let n = x.len();
    (a..=n - b).map(|t| (mean(&x[..t]) - mean(&x[t..])).abs()).fold(f64::NEG_INFINITY, f64::max)
}

/// `a_T A_T(1/2) - M_T`, with `y = T/(ln T)^{3/2}`.
pub fn darling_erdos(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let y = n / n.ln().powf(1.5);
    let l = y.ln().ln();
    let a = (2.0 * l).sqrt();
    let m = 2.0 * l - 0.5 * l.ln() + 0.5 * std::f64::consts::PI.ln();
    a * weighted(x, 0.5, 1..=x.len() - 1) - m
}

/// Closed-form `P(sup|W| ≤ x)` by direct summation of the theta series with
/// a fixed 400 terms.
pub fn sup_abs_w_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let pi = std::f64::consts::PI;
    let mut s = 0.0;
    for k in 0..400 {
        let m = (2 * k + 1) as f64;
        s += if k % 2 == 0 { 1.0 } else { -1.0 } / m * (-pi * pi * m * m / (8.0 * x * x)).exp();
    }
    4.0 / pi * s
}
