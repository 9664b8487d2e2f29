use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use super::svg::LineChart;
use super::table::Table;
use super::AppError;
use crate::dgp::{simulate, DgpSpec};
use crate::power::{power_experiment_with_mean, PowerManifest, PowerTable};
use crate::procedure::{run_test, Statistic};
use crate::regression::{ols_residuals, DesignMatrix};
use crate::series::{RealSeries, Trim, TrimSpec};
use crate::variance::VarianceConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = AppError;

    fn from_str(s: &str) -> Result<Self, AppError> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(AppError::Usage(format!("unknown format '{other}' (expected json|csv)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Decision {
    #[serde(rename = "reject")]
    Reject,
    #[serde(rename = "fail to reject")]
    FailToReject,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Reject => "reject",
            Decision::FailToReject => "fail to reject",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub statistic: Statistic,
    pub len: usize,
    pub trim_start: Option<usize>,
    pub trim_end: Option<usize>,
    pub raw: f64,
    pub scaled: f64,
    pub p_value: f64,
    pub argmax: usize,
    pub alpha: f64,
    pub decision: Decision,
}

impl TestReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let header = "statistic,len,trim_start,trim_end,raw,scaled,p_value,argmax,alpha,decision";
        let opt = |v: Option<usize>| v.map(|k| k.to_string()).unwrap_or_default();
        format!(
            "{header}\n{},{},{},{},{},{},{},{},{},{}\n",
            self.statistic,
            self.len,
            opt(self.trim_start),
            opt(self.trim_end),
            self.raw,
            self.scaled,
            self.p_value,
            self.argmax,
            self.alpha,
            self.decision
        )
    }
}

/// One test on an in-memory series. A constant series reports statistic 0
/// and p-value 1.
pub fn test_series(
    x: &RealSeries,
    statistic: Statistic,
    trim: &TrimSpec,
    vcfg: &VarianceConfig,
    alpha: f64,
) -> Result<TestReport, AppError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(AppError::Usage(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let tr: Trim = trim.resolve(x.len())?;
    if x.len() < 4 * tr.start.max(tr.end) {
        return Err(AppError::Data(format!(
            "series of length {} is shorter than 4·t_T = {}",
            x.len(),
            4 * tr.start.max(tr.end)
        )));
    }
    let trim_fields = |s: Statistic| if s == Statistic::Renyi { (Some(tr.start), Some(tr.end)) } else { (None, None) };
    if x.is_constant() {
        let (trim_start, trim_end) = trim_fields(statistic);
        return Ok(TestReport {
            statistic,
            len: x.len(),
            trim_start,
            trim_end,
            raw: 0.0,
            scaled: 0.0,
            p_value: 1.0,
            argmax: 0,
            alpha,
            decision: Decision::FailToReject,
        });
    }
    let out = run_test(x, statistic, trim, vcfg)?;
    let (trim_start, trim_end) = trim_fields(statistic);
    Ok(TestReport {
        statistic,
        len: x.len(),
        trim_start,
        trim_end,
        raw: out.raw,
        scaled: out.scaled,
        p_value: out.p_value,
        argmax: out.argmax,
        alpha,
        decision: if out.rejects(alpha) { Decision::Reject } else { Decision::FailToReject },
    })
}

/// Reads `column` from a CSV file and tests it.
pub fn cmd_test(
    input: &Path,
    column: &str,
    statistic: Statistic,
    trim: &TrimSpec,
    vcfg: &VarianceConfig,
    alpha: f64,
) -> Result<TestReport, AppError> {
    let table = Table::read_path(input)?;
    let values = table.numeric(column)?;
    let x = RealSeries::new(values).map_err(|e| AppError::Data(format!("column '{column}': {e}")))?;
    test_series(&x, statistic, trim, vcfg, alpha)
}

/// `t,x` table for replication 0 of `spec`, `t = 1..T`.
pub fn simulate_table(spec: &DgpSpec) -> Result<Table, AppError> {
    let x = simulate(spec)?;
    Ok(Table {
        headers: vec!["t".into(), "x".into()],
        rows: x.as_slice().iter().enumerate().map(|(i, v)| vec![(i + 1).to_string(), v.to_string()]).collect(),
    })
}

pub fn cmd_simulate(spec: &DgpSpec, output: &Path) -> Result<(), AppError> {
    let table = simulate_table(spec)?;
    let file = fs::File::create(output).map_err(|e| AppError::Io(format!("cannot write {}: {e}", output.display())))?;
    table.write_csv(file)
}

/// Runs the manifest's grid, writes the tidy CSV and optionally an SVG of
/// rejection rate against `Δ`.
pub fn cmd_power(m: &PowerManifest, output: &Path, svg: Option<&Path>) -> Result<PowerTable, AppError> {
    let table = power_experiment_with_mean(&m.grid, &m.errors, m.mu)?;
    let file = fs::File::create(output).map_err(|e| AppError::Io(format!("cannot write {}: {e}", output.display())))?;
    table.write_csv(file)?;
    if let Some(path) = svg {
        let mut chart = LineChart::from_long(
            &format!("Rejection rate, {} errors", m.errors),
            "Δ",
            "rejection rate",
            &table.long_format(),
        );
        chart.reference = Some((format!("α = {}", m.grid.alpha), m.grid.alpha));
        fs::write(path, chart.render()).map_err(|e| AppError::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(table)
}

/// Expanding-window residual tests: OLS on rows `start..=end` for every
/// `end` in `end_from..=end_to` (0-based row indices).
#[derive(Debug, Clone, PartialEq)]
pub struct RollingConfig {
    pub response: String,
    pub regressors: Vec<String>,
    pub intercept: bool,
    pub start: usize,
    pub end_from: usize,
    pub end_to: usize,
    pub statistics: Vec<Statistic>,
    pub trim: TrimSpec,
    pub vcfg: VarianceConfig,
    pub alpha: f64,
}

impl RollingConfig {
    pub fn new(response: impl Into<String>, regressors: Vec<String>, start: usize, end_from: usize, end_to: usize) -> Self {
        Self {
            response: response.into(),
            regressors,
            intercept: true,
            start,
            end_from,
            end_to,
            statistics: Statistic::ALL.to_vec(),
            trim: TrimSpec::default(),
            vcfg: VarianceConfig::kernel(),
            alpha: 0.05,
        }
    }

    pub fn validate(&self, rows: usize) -> Result<(), AppError> {
        if self.regressors.is_empty() && !self.intercept {
            return Err(AppError::Usage("need at least one regressor or the intercept".into()));
        }
        if self.end_from > self.end_to {
            return Err(AppError::Usage(format!("end range {}..={} is empty", self.end_from, self.end_to)));
        }
        if self.start >= self.end_from {
            return Err(AppError::Usage(format!("start {} must precede every end date", self.start)));
        }
        if self.end_to >= rows {
            return Err(AppError::Usage(format!("end {} is beyond the last row {}", self.end_to, rows.saturating_sub(1))));
        }
        if self.statistics.is_empty() {
            return Err(AppError::Usage("no statistics selected".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(AppError::Usage(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowStat {
    pub statistic: Statistic,
    pub scaled: f64,
    pub p_value: f64,
    pub neg_log10_p: f64,
    pub argmax: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RollingRow {
    pub end_index: usize,
    pub end_label: String,
    pub window_len: usize,
    /// Aligned with the configured statistics; `None` where the test failed.
    pub stats: Vec<Option<RowStat>>,
    /// `None` when every test ran, otherwise the error messages.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RollingResult {
    pub statistics: Vec<Statistic>,
    pub rows: Vec<RollingRow>,
}

impl RollingResult {
    /// First row whose p-value for `statistic` is below `alpha`.
    pub fn first_crossing(&self, statistic: Statistic, alpha: f64) -> Option<usize> {
        let k = self.statistics.iter().position(|&s| s == statistic)?;
        self.rows.iter().find(|r| r.stats[k].as_ref().is_some_and(|s| s.p_value < alpha)).map(|r| r.end_index)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("end_label,end_index,window_len");
        for s in &self.statistics {
            out += &format!(",{s}_stat,{s}_p,{s}_neglog10p,{s}_argmax");
        }
        out += ",error\n";
        for r in &self.rows {
            out += &format!("{},{},{}", csv_field(&r.end_label), r.end_index, r.window_len);
            for s in &r.stats {
                match s {
                    Some(s) => out += &format!(",{},{},{},{}", s.scaled, s.p_value, s.neg_log10_p, s.argmax),
                    None => out += ",,,,",
                }
            }
            out += &format!(",{}\n", csv_field(r.error.as_deref().unwrap_or("")));
        }
        out
    }

    /// `-log10(p)` against the end index, one line per statistic.
    pub fn chart(&self, alpha: f64) -> LineChart {
        let mut chart = LineChart::new("Expanding-window residual tests", "end index", "-log10(p)");
        for (k, s) in self.statistics.iter().enumerate() {
            let pts = self
                .rows
                .iter()
                .filter_map(|r| r.stats[k].as_ref().map(|v| (r.end_index as f64, v.neg_log10_p)))
                .collect();
            chart.add_series(s.to_string(), pts);
        }
        chart.reference = Some((format!("α = {alpha}"), -alpha.log10()));
        chart
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn rolling_row(cfg: &RollingConfig, y: &[f64], cols: &[Vec<f64>], labels: &[String], end: usize) -> RollingRow {
    let lo = cfg.start;
    let window: Vec<Vec<f64>> = cols.iter().map(|c| c[lo..=end].to_vec()).collect();
    let mut row = RollingRow {
        end_index: end,
        end_label: labels[end].clone(),
        window_len: end - lo + 1,
        stats: vec![None; cfg.statistics.len()],
        error: None,
    };
    let design = if cfg.intercept { DesignMatrix::with_intercept(&window) } else { DesignMatrix::from_columns(&window) };
    let residuals = design
        .and_then(|z| RealSeries::from_slice(&y[lo..=end]).and_then(|x| ols_residuals(&z, &x)));
    let residuals = match residuals {
        Ok(e) => e,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    let mut errors = Vec::new();
    for (k, &s) in cfg.statistics.iter().enumerate() {
        match test_series(&residuals, s, &cfg.trim, &cfg.vcfg, cfg.alpha) {
            Ok(r) => {
                let p = r.p_value.max(f64::MIN_POSITIVE);
                row.stats[k] = Some(RowStat {
                    statistic: s,
                    scaled: r.scaled,
                    p_value: p,
                    neg_log10_p: -p.log10(),
                    argmax: r.argmax,
                })
            }
            Err(e) => errors.push(format!("{s}: {e}")),
        }
    }
    if !errors.is_empty() {
        row.error = Some(errors.join("; "));
    }
    row
}

/// Expanding-window pipeline on an in-memory table. Windows are fitted
/// independently; a failing window yields a row with an error marker.
pub fn rolling(cfg: &RollingConfig, table: &Table) -> Result<RollingResult, AppError> {
    cfg.validate(table.len())?;
    let y = table.numeric(&cfg.response)?;
    let cols = cfg.regressors.iter().map(|c| table.numeric(c)).collect::<Result<Vec<_>, _>>()?;
    let labels = table.labels();
    let rows = (cfg.end_from..=cfg.end_to)
        .into_par_iter()
        .map(|end| rolling_row(cfg, &y, &cols, &labels, end))
        .collect();
    Ok(RollingResult { statistics: cfg.statistics.clone(), rows })
}

pub fn cmd_rolling(cfg: &RollingConfig, input: &Path) -> Result<RollingResult, AppError> {
    rolling(cfg, &Table::read_path(input)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::TrimRule;

    #[test]
    fn constant_series_fails_to_reject() {
        let x = RealSeries::new(vec![3.0; 40]).unwrap();
        let r = test_series(&x, Statistic::Renyi, &TrimSpec::default(), &VarianceConfig::split(), 0.05).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.decision, Decision::FailToReject);
        assert!(r.to_json().contains("\"fail to reject\""));
    }

    #[test]
    fn pure_step_report() {
        let mut v = vec![0.0; 50];
        v.extend(vec![2.0; 50]);
        let x = RealSeries::new(v).unwrap();
        let trim = TrimSpec::symmetric(TrimRule::Log);
        let r = test_series(&x, Statistic::Renyi, &trim, &VarianceConfig::known(1.0).unwrap(), 0.05).unwrap();
        assert!((r.scaled - 4.0).abs() < 1e-12);
        assert!(r.p_value < 1e-3);
        assert_eq!(r.decision, Decision::Reject);
        assert_eq!(r.to_csv().lines().count(), 2);
    }

    #[test]
    fn short_series_is_a_data_error() {
        let x = RealSeries::new((0..10).map(|i| i as f64).collect()).unwrap();
        let err = test_series(&x, Statistic::Renyi, &TrimSpec::explicit(3), &VarianceConfig::split(), 0.05).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn rolling_exact_fit_marks_degenerate_rows() {
        let n = 80;
        let f: Vec<f64> = (0..n).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let table = Table {
            headers: vec!["date".into(), "y".into(), "f".into()],
            rows: (0..n).map(|i| vec![i.to_string(), (1.0 + 2.0 * f[i]).to_string(), f[i].to_string()]).collect(),
        };
        let cfg = RollingConfig::new("y", vec!["f".into()], 0, 60, 79);
        let res = rolling(&cfg, &table).unwrap();
        assert_eq!(res.rows.len(), 20);
        for r in &res.rows {
            let err = r.error.as_deref().unwrap();
            assert!(err.contains("degenerate variance"), "{err}");
        }
    }

    #[test]
    fn rolling_singular_window_marker() {
        let n = 40;
        let table = Table {
            headers: vec!["date".into(), "y".into(), "a".into(), "b".into()],
            rows: (0..n)
                .map(|i| {
                    let a = (i % 7) as f64;
                    vec![i.to_string(), ((i * 13) % 5).to_string(), a.to_string(), (2.0 * a).to_string()]
                })
                .collect(),
        };
        let cfg = RollingConfig::new("y", vec!["a".into(), "b".into()], 0, 30, 39);
        let res = rolling(&cfg, &table).unwrap();
        assert!(res.rows.iter().all(|r| r.error.as_deref().unwrap().contains("rank-deficient")));
        assert!(res.to_csv().lines().nth(1).unwrap().contains("rank-deficient"));
    }
}
