//! Size, power and limit-law agreement experiments.
//!
//! Replication `r` of the `k`-th sample size draws its errors from substream
//! `(cell_seed(seed, k), r)`. The same errors are reused for every `Δ` and
//! every statistic in that row of the grid, so rejection curves are built on
//! common random numbers and two runs with one seed agree exactly.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::dgp::{gen_errors_rep, inject_change, ChangeRule, DgpSpec, ErrorModel};
use crate::error::{Error, Result};
use crate::kv::KeyValues;
use crate::limit::{ks_distance, LimitLaw};
use crate::procedure::{run_test, Statistic};
use crate::rng::cell_seed;
use crate::series::{RealSeries, TrimRule, TrimSpec};
use crate::stats::renyi_stat;
use crate::variance::{Bandwidth, Kernel, VarianceConfig, VarianceKind};

pub const DEFAULT_REPS: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentGrid {
    pub statistics: Vec<Statistic>,
    pub deltas: Vec<f64>,
    pub change_at: ChangeRule,
    pub lens: Vec<usize>,
    pub reps: usize,
    pub alpha: f64,
    pub trim: TrimSpec,
    pub vcfg: VarianceConfig,
    pub seed: u64,
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        Self {
            statistics: Statistic::ALL.to_vec(),
            deltas: delta_range(-2.0, 2.0, 0.1),
            change_at: ChangeRule::QuarterRoot,
            lens: vec![500],
            reps: DEFAULT_REPS,
            alpha: 0.05,
            trim: TrimSpec::symmetric(TrimRule::Log),
            vcfg: VarianceConfig::kernel(),
            seed: 1,
        }
    }
}

/// `lo, lo + step, ..., hi`, rounded to 10 decimals.
pub fn delta_range(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as i64;
    (0..=n).map(|k| ((lo + k as f64 * step) * 1e10).round() / 1e10).collect()
}

impl ExperimentGrid {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::InvalidParameter("reps must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.deltas.is_empty() || self.deltas.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidParameter("Δ grid must be non-empty and finite".into()));
        }
        if self.statistics.is_empty() || self.lens.is_empty() {
            return Err(Error::InvalidParameter("grid needs at least one statistic and one T".into()));
        }
        self.vcfg.validate()?;
        for &len in &self.lens {
            let t = self.change_at.resolve(len);
            if self.deltas.iter().any(|&d| d != 0.0) && (t == 0 || t >= len) {
                return Err(Error::IndexOutOfRange { index: t, max: len - 1 });
            }
            self.trim.resolve(len)?;
        }
        Ok(())
    }
}

/// Power-study manifest: a grid plus its error process.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerManifest {
    pub grid: ExperimentGrid,
    pub errors: ErrorModel,
    pub mu: f64,
}

impl PowerManifest {
    pub const KEYS: &'static [&'static str] = &[
        "statistics", "deltas", "change_at", "lens", "reps", "alpha", "trim", "variance", "bandwidth", "kernel", "seed",
        "errors", "omega", "alpha_garch", "beta", "rho", "phi1", "phi2", "psi1", "psi2", "mu",
    ];

    /// Parses `key = value` text. `deltas` takes a comma list or `lo:hi:step`.
    pub fn parse(text: &str) -> Result<Self> {
        let kv = KeyValues::parse(text)?;
        kv.deny_unknown(Self::KEYS)?;
        let defaults = ExperimentGrid::default();
        let deltas = match kv.raw("deltas") {
            None => defaults.deltas,
            Some(raw) if raw.contains(':') => {
                let parts: Vec<f64> = raw
                    .split(':')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::Parse(format!("field 'deltas': {e}")))?;
                match parts[..] {
                    [lo, hi, step] if step > 0.0 && hi >= lo => delta_range(lo, hi, step),
                    _ => return Err(Error::Parse("field 'deltas': expected lo:hi:step with step > 0".into())),
                }
            }
            Some(_) => kv.list("deltas")?.unwrap_or_default(),
        };
        let kind: VarianceKind = kv.get_or("variance", VarianceKind::Kernel)?;
        let mut vcfg = VarianceConfig::with_kind(kind).with_bandwidth(kv.get_or("bandwidth", Bandwidth::Andrews)?);
        if let Some(k) = kv.raw("kernel") {
            if k != "bartlett" {
                return Err(Error::Parse(format!("field 'kernel': unknown kernel '{k}' (expected bartlett)")));
            }
            vcfg = vcfg.with_kernel(Kernel::Bartlett);
        }
        let trim = TrimSpec::symmetric(kv.get_or("trim", TrimRule::Log)?);
        let grid = ExperimentGrid {
            statistics: kv.list("statistics")?.unwrap_or(defaults.statistics),
            deltas,
            change_at: kv.get_or("change_at", defaults.change_at)?,
            lens: kv.list("lens")?.unwrap_or(defaults.lens),
            reps: kv.get_or("reps", defaults.reps)?,
            alpha: kv.get_or("alpha", defaults.alpha)?,
            trim,
            vcfg,
            seed: kv.get_or("seed", defaults.seed)?,
        };
        grid.validate()?;
        // GARCH α is spelled alpha_garch here since `alpha` is the level.
        let mut errors_kv = text
            .lines()
            .filter(|l| {
                let key = l.split('=').next().unwrap_or("").trim();
                matches!(key, "errors" | "omega" | "beta" | "rho" | "phi1" | "phi2" | "psi1" | "psi2")
            })
            .collect::<Vec<_>>()
            .join("\n");
        if let Some(a) = kv.raw("alpha_garch") {
            errors_kv += &format!("\nalpha = {a}");
        }
        let errors = DgpSpec::errors_from_kv(&KeyValues::parse(&errors_kv)?)?;
        Ok(Self { grid, errors, mu: kv.get_or("mu", 0.0)? })
    }
}

/// One grid cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerCell {
    pub statistic: Statistic,
    pub dgp: String,
    pub len: usize,
    pub delta: f64,
    pub change_at: usize,
    pub reps: usize,
    pub rejections: usize,
    pub rate: f64,
    /// Replications where the test errored (counted as non-rejections).
    pub failures: usize,
}

impl PowerCell {
    /// Binomial standard error of `rate`.
    pub fn std_error(&self) -> f64 {
        (self.rate * (1.0 - self.rate) / self.reps as f64).sqrt()
    }
}

/// Rate drop along increasing `|Δ|` larger than three binomial standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityViolation {
    pub statistic: Statistic,
    pub len: usize,
    pub from_delta: f64,
    pub to_delta: f64,
    pub drop: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PowerTable {
    pub cells: Vec<PowerCell>,
    pub violations: Vec<MonotonicityViolation>,
}

impl PowerTable {
    pub fn rate(&self, statistic: Statistic, len: usize, delta: f64) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.statistic == statistic && c.len == len && (c.delta - delta).abs() < 1e-12)
            .map(|c| c.rate)
    }

    /// One row per cell.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for c in &self.cells {
            wr.serialize(c).map_err(|e| Error::Parse(e.to_string()))?;
        }
        wr.flush().map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Plot-ready `(series, Δ, rate)` triples, one series per statistic and T.
    pub fn long_format(&self) -> Vec<(String, f64, f64)> {
        self.cells.iter().map(|c| (format!("{} T={}", c.statistic, c.len), c.delta, c.rate)).collect()
    }

    fn diagnose(&mut self) {
        let mut groups: BTreeMap<(Statistic, usize), Vec<&PowerCell>> = BTreeMap::new();
        for c in &self.cells {
            groups.entry((c.statistic, c.len)).or_default().push(c);
        }
        let mut out = Vec::new();
        for ((statistic, len), cells) in groups {
            for positive in [true, false] {
                let mut side: Vec<&PowerCell> =
                    cells.iter().copied().filter(|c| if positive { c.delta >= 0.0 } else { c.delta <= 0.0 }).collect();
                side.sort_by(|a, b| a.delta.abs().total_cmp(&b.delta.abs()));
                for pair in side.windows(2) {
                    let (a, b) = (pair[0], pair[1]);
                    let se = (a.std_error().powi(2) + b.std_error().powi(2)).sqrt().max(1.0 / a.reps as f64);
                    let drop = a.rate - b.rate;
                    if drop > 3.0 * se {
                        out.push(MonotonicityViolation { statistic, len, from_delta: a.delta, to_delta: b.delta, drop });
                    }
                }
            }
        }
        self.violations = out;
    }
}

/// Scaled statistics drawn under the null for one statistic and `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct StatSample {
    pub statistic: Statistic,
    pub len: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeStudy {
    pub table: PowerTable,
    pub samples: Vec<StatSample>,
}

struct RepOutcome {
    /// `[delta][statistic]` → `Some(scaled, rejected)` or `None` on error.
    results: Vec<Vec<Option<(f64, bool)>>>,
}

fn run_row(grid: &ExperimentGrid, errors: &ErrorModel, mu: f64, len_index: usize) -> Result<Vec<RepOutcome>> {
    let len = grid.lens[len_index];
    let spec = DgpSpec::new(*errors, len, cell_seed(grid.seed, len_index as u64));
    spec.validate()?;
    let t_star = grid.change_at.resolve(len);
    (0..grid.reps as u64)
        .into_par_iter()
        .map(|rep| {
            let e = gen_errors_rep(&spec, rep)?;
            let mut results = Vec::with_capacity(grid.deltas.len());
            for &delta in &grid.deltas {
                let x = if delta == 0.0 {
                    RealSeries::new(e.as_slice().iter().map(|v| v + mu).collect())?
                } else {
                    inject_change(&e, mu, delta, t_star)?
                };
                let row = grid
                    .statistics
                    .iter()
                    .map(|&s| {
                        run_test(&x, s, &grid.trim, &grid.vcfg).ok().map(|o| (o.scaled, o.rejects(grid.alpha)))
                    })
                    .collect();
                results.push(row);
            }
            Ok(RepOutcome { results })
        })
        .collect()
}

fn tabulate(grid: &ExperimentGrid, errors: &ErrorModel, len_index: usize, reps: &[RepOutcome], out: &mut PowerTable) {
    let len = grid.lens[len_index];
    let change_at = grid.change_at.resolve(len);
    for (si, &statistic) in grid.statistics.iter().enumerate() {
        for (di, &delta) in grid.deltas.iter().enumerate() {
            let mut rejections = 0;
            let mut failures = 0;
            for r in reps {
                match r.results[di][si] {
                    Some((_, true)) => rejections += 1,
                    Some((_, false)) => {}
                    None => failures += 1,
                }
            }
            out.cells.push(PowerCell {
                statistic,
                dgp: errors.name().to_string(),
                len,
                delta,
                change_at,
                reps: grid.reps,
                rejections,
                rate: rejections as f64 / grid.reps as f64,
                failures,
            });
        }
    }
}

/// Rejection rates for every (statistic, T, Δ) cell, in grid order
/// (statistic, then T, then Δ).
pub fn power_experiment(grid: &ExperimentGrid, errors: &ErrorModel) -> Result<PowerTable> {
    power_experiment_with_mean(grid, errors, 0.0)
}

pub fn power_experiment_with_mean(grid: &ExperimentGrid, errors: &ErrorModel, mu: f64) -> Result<PowerTable> {
    grid.validate()?;
    let mut per_len = Vec::with_capacity(grid.lens.len());
    for k in 0..grid.lens.len() {
        let reps = run_row(grid, errors, mu, k)?;
        let mut part = PowerTable::default();
        tabulate(grid, errors, k, &reps, &mut part);
        per_len.push(part.cells);
    }
    let mut table = PowerTable::default();
    for (si, _) in grid.statistics.iter().enumerate() {
        for cells in &per_len {
            let n = grid.deltas.len();
            table.cells.extend_from_slice(&cells[si * n..(si + 1) * n]);
        }
    }
    table.diagnose();
    Ok(table)
}

/// Null rejection rates plus the scaled statistics behind them.
pub fn size_experiment(grid: &ExperimentGrid, errors: &ErrorModel) -> Result<SizeStudy> {
    if grid.deltas.iter().any(|&d| d != 0.0) {
        return Err(Error::InvalidParameter("size experiments need the Δ grid {0}".into()));
    }
    grid.validate()?;
    let mut table = PowerTable::default();
    let mut samples = Vec::new();
    let mut per_len = Vec::new();
    for k in 0..grid.lens.len() {
        let reps = run_row(grid, errors, 0.0, k)?;
        let mut part = PowerTable::default();
        tabulate(grid, errors, k, &reps, &mut part);
        for (si, &statistic) in grid.statistics.iter().enumerate() {
            let values = reps.iter().filter_map(|r| r.results[0][si].map(|(v, _)| v)).collect();
            samples.push(StatSample { statistic, len: grid.lens[k], values });
        }
        per_len.push(part.cells);
    }
    for si in 0..grid.statistics.len() {
        for cells in &per_len {
            table.cells.push(cells[si].clone());
        }
    }
    samples.sort_by_key(|s| (grid.statistics.iter().position(|&x| x == s.statistic), s.len));
    Ok(SizeStudy { table, samples })
}

/// Known-σ sample of `t_T^{1/2} D_T / σ` under the null and its Kolmogorov
/// distance to the max-two law. `σ²` is the process's long-run variance.
pub fn density_check(errors: &ErrorModel, len: usize, trim: &TrimSpec, reps: usize, seed: u64) -> Result<(Vec<f64>, f64)> {
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be at least 1".into()));
    }
    let spec = DgpSpec::new(*errors, len, seed);
    spec.validate()?;
    trim.resolve(len)?;
    let sigma = errors.true_lrv().sqrt();
    let sample = (0..reps as u64)
        .into_par_iter()
        .map(|rep| Ok(renyi_stat(&gen_errors_rep(&spec, rep)?, trim)?.scaled / sigma))
        .collect::<Result<Vec<f64>>>()?;
    let law = LimitLaw::max_two_sup_wiener();
    let ks = ks_distance(&sample, |x| law.cdf(x));
    Ok((sample, ks))
}

/// Sample of `t_T^{1/2}(D_T - |Δ|)/σ` with iid standard normal errors and a
/// break of size `Δ` after `t*`, plus its Kolmogorov distance to the law of
/// `sup_{0≤u≤1} W(u)`.
pub fn local_power_check(
    len: usize,
    change_at: usize,
    delta: f64,
    trim_k: usize,
    reps: usize,
    seed: u64,
) -> Result<(Vec<f64>, f64)> {
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be at least 1".into()));
    }
    let spec = DgpSpec::new(ErrorModel::IidNormal, len, seed);
    spec.validate()?;
    let trim = TrimSpec::explicit(trim_k);
    trim.resolve(len)?;
    let root = (trim_k as f64).sqrt();
    let sample = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let x = inject_change(&gen_errors_rep(&spec, rep)?, 0.0, delta, change_at)?;
            Ok(root * (renyi_stat(&x, &trim)?.raw - delta.abs()))
        })
        .collect::<Result<Vec<f64>>>()?;
    let law = LimitLaw::sup_wiener();
    let ks = ks_distance(&sample, |x| law.cdf(x));
    Ok((sample, ks))
}
