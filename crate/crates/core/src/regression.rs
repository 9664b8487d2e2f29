//! Residual and moment series from fitted models.
//!
//! Under a stable model the residuals `X_t - x_tᵀβ̂` (OLS), `X_t - h(x_t, θ̂)`
//! (NLS) and the moment terms `g(x_t, θ̂)` (scalar GMM) behave like the
//! errors, so the Rényi test applies to them with the same max-two limit.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::procedure::{run_test, Statistic, TestOutcome};
use crate::series::{RealSeries, TrimSpec};
use crate::variance::VarianceConfig;

/// Largest accepted condition number of `ZᵀZ`.
pub const CONDITION_THRESHOLD: f64 = 1e10;

/// Regressor matrix, row `t` is `x_tᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    z: DMatrix<f64>,
}

impl DesignMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let t = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if d == 0 {
            return Err(Error::InvalidParameter("design matrix needs at least one column".into()));
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(Error::InvalidParameter(format!("row {i} has {} entries, expected {d}", r.len())));
        }
        Self::from_matrix(DMatrix::from_fn(t, d, |i, j| rows[i][j]))
    }

    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self> {
        let d = cols.len();
        let t = cols.first().map_or(0, Vec::len);
        if d == 0 {
            return Err(Error::InvalidParameter("design matrix needs at least one column".into()));
        }
        if let Some((j, c)) = cols.iter().enumerate().find(|(_, c)| c.len() != t) {
            return Err(Error::InvalidParameter(format!("column {j} has {} entries, expected {t}", c.len())));
        }
        Self::from_matrix(DMatrix::from_fn(t, d, |i, j| cols[j][i]))
    }

    /// Prepends a column of ones.
    pub fn with_intercept(cols: &[Vec<f64>]) -> Result<Self> {
        let t = cols.first().map_or(0, Vec::len);
        let mut all = Vec::with_capacity(cols.len() + 1);
        all.push(vec![1.0; t]);
        all.extend_from_slice(cols);
        Self::from_columns(&all)
    }

    pub fn intercept_only(len: usize) -> Result<Self> {
        Self::from_columns(&[vec![1.0; len]])
    }

    pub fn from_matrix(z: DMatrix<f64>) -> Result<Self> {
        let (t, d) = z.shape();
        if d == 0 || t <= d {
            return Err(Error::TooShort { needed: d + 1, got: t });
        }
        if let Some(index) = z.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: index % t });
        }
        Ok(Self { z })
    }

    pub fn rows(&self) -> usize {
        self.z.nrows()
    }

    pub fn cols(&self) -> usize {
        self.z.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub fn row(&self, t: usize) -> Vec<f64> {
        self.z.row(t).iter().copied().collect()
    }

    /// Rows `lo..hi`.
    pub fn slice_rows(&self, lo: usize, hi: usize) -> Result<Self> {
        if lo >= hi || hi > self.rows() {
            return Err(Error::IndexOutOfRange { index: hi, max: self.rows() });
        }
        Self::from_matrix(self.z.rows(lo, hi - lo).into_owned())
    }

    /// Column permutation `perm[j]` = source column of new column `j`.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.cols() || perm.iter().any(|&j| j >= self.cols()) {
            return Err(Error::InvalidParameter("not a column permutation".into()));
        }
        Self::from_matrix(DMatrix::from_fn(self.rows(), self.cols(), |i, j| self.z[(i, perm[j])]))
    }

    /// Condition number of `ZᵀZ`, from the singular values of `Z`.
    pub fn condition(&self) -> f64 {
        let sv = self.z.clone().svd(false, false).singular_values;
        let max = sv.max();
        let min = sv.min();
        if min <= 0.0 {
            f64::INFINITY
        } else {
            (max / min).powi(2)
        }
    }

    /// Column means `x̄`.
    pub fn column_means(&self) -> Vec<f64> {
        self.z.column_iter().map(|c| c.mean()).collect()
    }
}

/// Least squares `β̂` through a QR factorization of `Z`.
pub fn ols_fit(z: &DesignMatrix, x: &RealSeries) -> Result<Vec<f64>> {
    if x.len() != z.rows() {
        return Err(Error::InvalidParameter(format!("{} responses for {} design rows", x.len(), z.rows())));
    }
    let condition = z.condition();
    if !(condition <= CONDITION_THRESHOLD) {
        return Err(Error::RankDeficient { condition, threshold: CONDITION_THRESHOLD });
    }
    let qr = z.z.clone().qr();
    let qty = qr.q().transpose() * DVector::from_column_slice(x.as_slice());
    let beta = qr
        .r()
        .solve_upper_triangular(&qty)
        .ok_or(Error::RankDeficient { condition, threshold: CONDITION_THRESHOLD })?;
    Ok(beta.iter().copied().collect())
}

/// `ê_t = X_t - x_tᵀβ̂`.
pub fn ols_residuals(z: &DesignMatrix, x: &RealSeries) -> Result<RealSeries> {
    let beta = ols_fit(z, x)?;
    let fitted = &z.z * DVector::from_vec(beta);
    let e = x.as_slice().iter().zip(fitted.iter()).map(|(a, b)| a - b).collect();
    RealSeries::new(e)
}

pub type ModelFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// Nonlinear least squares: minimize `Σ (y_t - h(x_t, θ))²` over a box.
#[derive(Clone)]
pub struct NlsProblem {
    name: String,
    model: ModelFn,
    bounds: Vec<(f64, f64)>,
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
}

impl fmt::Debug for NlsProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NlsProblem")
            .field("name", &self.name)
            .field("bounds", &self.bounds)
            .field("len", &self.y.len())
            .finish()
    }
}

impl NlsProblem {
    pub fn new(
        name: impl Into<String>,
        model: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
        bounds: Vec<(f64, f64)>,
        x: Vec<Vec<f64>>,
        y: Vec<f64>,
    ) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidParameter("parameter box has no coordinates".into()));
        }
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidParameter(format!("bound {i} = [{lo}, {hi}] is not a finite interval")));
            }
        }
        if x.len() != y.len() {
            return Err(Error::InvalidParameter(format!("{} regressor rows for {} responses", x.len(), y.len())));
        }
        if y.len() < 2 {
            return Err(Error::TooShort { needed: 2, got: y.len() });
        }
        Ok(Self { name: name.into(), model: Arc::new(model), bounds, x, y })
    }

    /// `h(x, θ) = θᵀx`.
    pub fn linear(x: Vec<Vec<f64>>, y: Vec<f64>, bounds: Vec<(f64, f64)>) -> Result<Self> {
        Self::new("linear", |x, th| x.iter().zip(th).map(|(a, b)| a * b).sum(), bounds, x, y)
    }

    /// `h(x, θ) = exp(θ x)` with scalar `x`.
    pub fn exponential(x: &[f64], y: Vec<f64>, bounds: (f64, f64)) -> Result<Self> {
        let rows = x.iter().map(|&v| vec![v]).collect();
        Self::new("exp", |x, th| (th[0] * x[0]).exp(), vec![bounds], rows, y)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    /// `L_T(θ) = Σ (y_t - h(x_t, θ))²`.
    pub fn objective(&self, theta: &[f64]) -> f64 {
        self.x
            .iter()
            .zip(&self.y)
            .map(|(x, y)| {
                let r = y - (self.model)(x, theta);
                r * r
            })
            .sum()
    }

    fn clamp(&self, theta: &mut [f64]) {
        for (v, &(lo, hi)) in theta.iter_mut().zip(&self.bounds) {
            *v = v.clamp(lo, hi);
        }
    }

    /// `5^min(d,3)` interior starting points in lexicographic order; the
    /// coordinates beyond the third start at their midpoint.
    pub fn start_grid(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let gridded = d.min(3);
        let count = 5usize.pow(gridded as u32);
        (0..count)
            .map(|mut k| {
                let mut digits = vec![0usize; gridded];
                for slot in digits.iter_mut().rev() {
                    *slot = k % 5;
                    k /= 5;
                }
                self.bounds
                    .iter()
                    .enumerate()
                    .map(|(j, &(lo, hi))| {
                        let frac = if j < gridded { (digits[j] as f64 + 0.5) / 5.0 } else { 0.5 };
                        lo + frac * (hi - lo)
                    })
                    .collect()
            })
            .collect()
    }
}

/// Nelder–Mead settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_iter: usize,
    /// Stop once the simplex spread in objective is below `f_tol·(1 + |f|)`
    /// and its diameter below `x_tol` times the box width.
    pub f_tol: f64,
    pub x_tol: f64,
    pub restarts: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { max_iter: 4000, f_tol: 1e-15, x_tol: 1e-11, restarts: 3 }
    }
}

struct SimplexRun {
    point: Vec<f64>,
    value: f64,
    converged: bool,
}

fn nelder_mead(p: &NlsProblem, start: &[f64], scale: f64, opts: &SimplexOptions) -> Result<SimplexRun> {
    let d = start.len();
    let eval = |th: &[f64]| -> Result<f64> {
        let v = p.objective(th);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Optimizer(format!("non-finite objective at θ = {th:?}")))
        }
    };
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    simplex.push(start.to_vec());
    for j in 0..d {
        let (lo, hi) = p.bounds[j];
        let mut v = start.to_vec();
        let step = scale * (hi - lo);
        v[j] = if v[j] + step <= hi { v[j] + step } else { v[j] - step };
        p.clamp(&mut v);
        simplex.push(v);
    }
    let mut values = simplex.iter().map(|v| eval(v)).collect::<Result<Vec<f64>>>()?;
    let width: Vec<f64> = p.bounds.iter().map(|(lo, hi)| hi - lo).collect();

    for _ in 0..opts.max_iter {
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let f_spread = values[d] - values[0];
        let diameter = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).zip(&width).map(|((a, b), w)| (a - b).abs() / w))
            .fold(0.0, f64::max);
        if f_spread <= opts.f_tol * (1.0 + values[0].abs()) && diameter <= opts.x_tol {
            return Ok(SimplexRun { point: simplex.swap_remove(0), value: values[0], converged: true });
        }

        let centroid: Vec<f64> =
            (0..d).map(|j| simplex[..d].iter().map(|v| v[j]).sum::<f64>() / d as f64).collect();
        let along = |coef: f64| -> Vec<f64> {
            let mut v: Vec<f64> = centroid.iter().zip(&simplex[d]).map(|(c, w)| c + coef * (c - w)).collect();
            p.clamp(&mut v);
            v
        };

        let reflected = along(1.0);
        let fr = eval(&reflected)?;
        if fr < values[0] {
            let expanded = along(2.0);
            let fe = eval(&expanded)?;
            if fe < fr {
                simplex[d] = expanded;
                values[d] = fe;
            } else {
                simplex[d] = reflected;
                values[d] = fr;
            }
        } else if fr < values[d - 1] {
            simplex[d] = reflected;
            values[d] = fr;
        } else {
            let (contracted, fc) = if fr < values[d] {
                let c = along(0.5);
                let f = eval(&c)?;
                (c, f)
            } else {
                let c = along(-0.5);
                let f = eval(&c)?;
                (c, f)
            };
            if fc < values[d].min(fr) {
                simplex[d] = contracted;
                values[d] = fc;
            } else {
                let best = simplex[0].clone();
                for i in 1..=d {
                    let mut v: Vec<f64> = best.iter().zip(&simplex[i]).map(|(b, x)| b + 0.5 * (x - b)).collect();
                    p.clamp(&mut v);
                    values[i] = eval(&v)?;
                    simplex[i] = v;
                }
            }
        }
    }
    let best = (0..=d).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    Ok(SimplexRun { point: simplex.swap_remove(best), value: values[best], converged: false })
}

/// Restarted simplex search from one start.
fn minimize_from(p: &NlsProblem, start: &[f64], opts: &SimplexOptions) -> Result<SimplexRun> {
    let mut run = nelder_mead(p, start, 0.1, opts)?;
    let mut scale = 0.01;
    for _ in 0..opts.restarts {
        let next = nelder_mead(p, &run.point, scale, opts)?;
        let improved = next.value < run.value;
        if next.value <= run.value {
            run = SimplexRun { converged: next.converged || run.converged, ..next };
        }
        if !improved {
            break;
        }
        scale *= 0.1;
    }
    Ok(run)
}

pub fn nls_fit(p: &NlsProblem) -> Result<Vec<f64>> {
    nls_fit_with(p, &SimplexOptions::default())
}

/// Multi-start bounded Nelder–Mead. The lowest objective wins; ties go to
/// the earliest start in grid order.
pub fn nls_fit_with(p: &NlsProblem, opts: &SimplexOptions) -> Result<Vec<f64>> {
    let runs: Vec<Result<SimplexRun>> = p.start_grid().par_iter().map(|s| minimize_from(p, s, opts)).collect();
    let mut best: Option<SimplexRun> = None;
    let mut first_err = None;
    for run in runs {
        match run {
            Ok(r) if r.converged => {
                if best.as_ref().is_none_or(|b| r.value < b.value) {
                    best = Some(r);
                }
            }
            Ok(_) => {}
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match (best, first_err) {
        (Some(b), _) => Ok(b.point),
        (None, Some(e)) => Err(e),
        (None, None) => Err(Error::Optimizer("no start converged".into())),
    }
}

/// `ẽ_t = y_t - h(x_t, θ̂)`.
pub fn nls_residuals(p: &NlsProblem, theta: &[f64]) -> Result<RealSeries> {
    if theta.len() != p.dim() {
        return Err(Error::InvalidParameter(format!("θ has {} entries, model has {}", theta.len(), p.dim())));
    }
    let e = p.x.iter().zip(&p.y).map(|(x, y)| y - (p.model)(x, theta)).collect();
    RealSeries::new(e)
}

pub type MomentFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

/// Scalar-parameter moment problem `Σ g(x_t, θ) = 0`, `θ ∈ [lo, hi]`.
#[derive(Clone)]
pub struct GmmProblem {
    name: String,
    moment: MomentFn,
    interval: (f64, f64),
    x: Vec<Vec<f64>>,
}

impl fmt::Debug for GmmProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GmmProblem")
            .field("name", &self.name)
            .field("interval", &self.interval)
            .field("len", &self.x.len())
            .finish()
    }
}

/// Grid cells scanned for the first sign change.
pub const GMM_SCAN_CELLS: usize = 1000;

impl GmmProblem {
    pub fn new(
        name: impl Into<String>,
        moment: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
        interval: (f64, f64),
        x: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let (lo, hi) = interval;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParameter(format!("Θ = [{lo}, {hi}] is not a finite interval")));
        }
        if x.len() < 2 {
            return Err(Error::TooShort { needed: 2, got: x.len() });
        }
        Ok(Self { name: name.into(), moment: Arc::new(moment), interval, x })
    }

    fn scalar_rows(x: &[f64]) -> Vec<Vec<f64>> {
        x.iter().map(|&v| vec![v]).collect()
    }

    /// `g(x, θ) = x - θ`.
    pub fn mean(x: &[f64], interval: (f64, f64)) -> Result<Self> {
        Self::new("mean", |x, th| x[0] - th, interval, Self::scalar_rows(x))
    }

    /// `g(x, θ) = x² - θ`.
    pub fn second_moment(x: &[f64], interval: (f64, f64)) -> Result<Self> {
        Self::new("second-moment", |x, th| x[0] * x[0] - th, interval, Self::scalar_rows(x))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    /// `Σ_t g(x_t, θ)`.
    pub fn moment_sum(&self, theta: f64) -> f64 {
        self.x.iter().map(|x| (self.moment)(x, theta)).sum()
    }
}

/// Smallest root of the sample moment equation found by scanning Θ for the
/// first sign change and bisecting to machine precision (width ≤ 1e-10 at
/// the latest).
pub fn gmm_fit(p: &GmmProblem) -> Result<f64> {
    let (lo, hi) = p.interval;
    let f = |th: f64| -> Result<f64> {
        let v = p.moment_sum(th);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Optimizer(format!("non-finite moment sum at θ = {th}")))
        }
    };
    let step = (hi - lo) / GMM_SCAN_CELLS as f64;
    let mut a = lo;
    let mut fa = f(a)?;
    if fa == 0.0 {
        return Ok(a);
    }
    for k in 1..=GMM_SCAN_CELLS {
        let b = if k == GMM_SCAN_CELLS { hi } else { lo + k as f64 * step };
        let fb = f(b)?;
        if fb == 0.0 {
            return Ok(b);
        }
        if fa.signum() != fb.signum() {
            return bisect(&f, a, fa, b);
        }
        a = b;
        fa = fb;
    }
    Err(Error::NoRoot { lo, hi })
}

fn bisect(f: &impl Fn(f64) -> Result<f64>, mut a: f64, mut fa: f64, mut b: f64) -> Result<f64> {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    let fb = f(b)?;
    Ok(if fa.abs() <= fb.abs() { a } else { b })
}

/// `m_t(θ̂) = g(x_t, θ̂)`, `t = 1..T`.
pub fn gmm_moment_series(p: &GmmProblem, theta: f64) -> Result<RealSeries> {
    RealSeries::new(p.x.iter().map(|x| (p.moment)(x, theta)).collect())
}

/// Rényi test on a residual or moment series.
pub fn residual_change_test(residuals: &RealSeries, trim: &TrimSpec, vcfg: &VarianceConfig) -> Result<TestOutcome> {
    run_test(residuals, Statistic::Renyi, trim, vcfg)
}
