use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use renyi_changepoint::app::fixture::{FactorFixture, FACTORS};
use renyi_changepoint::app::{cmd_power, cmd_simulate, cmd_test, AppError, OutputFormat, RollingConfig};
use renyi_changepoint::dgp::{ChangeRule, DgpSpec, ErrorModel, DEFAULT_BURN_IN};
use renyi_changepoint::power::PowerManifest;
use renyi_changepoint::{Bandwidth, Kernel, Statistic, TrimRule, TrimSpec, VarianceConfig, VarianceKind};

#[derive(Parser)]
#[command(name = "renyi", version, about = "Rényi-type change-point tests for a change in the mean")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct TestOpts {
    /// Trimming: log|quarter|sqrt|frac=θ|k=N
    #[arg(long, default_value = "log")]
    trim: TrimRule,
    /// Variance: known=σ²|split|kernel
    #[arg(long, default_value = "kernel")]
    variance: VarianceKind,
    #[arg(long, default_value = "bartlett")]
    kernel: String,
    /// Bandwidth: andrews|h=H
    #[arg(long, default_value = "andrews")]
    bandwidth: Bandwidth,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

impl TestOpts {
    fn vcfg(&self) -> Result<VarianceConfig, AppError> {
        if self.kernel != "bartlett" {
            return Err(AppError::Usage(format!("unknown kernel '{}' (expected bartlett)", self.kernel)));
        }
        Ok(VarianceConfig::with_kind(self.variance).with_kernel(Kernel::Bartlett).with_bandwidth(self.bandwidth))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Test one CSV column for a change in the mean; prints a report.
    Test {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        column: String,
        #[arg(long, default_value = "renyi")]
        stat: Statistic,
        #[command(flatten)]
        opts: TestOpts,
        #[arg(long, default_value = "json")]
        format: OutputFormat,
    },
    /// Write a simulated series as a `t,x` CSV.
    Simulate {
        /// Key-value spec file; the flags below are ignored when given.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value = "iid-normal")]
        errors: ErrorModel,
        #[arg(long, default_value_t = 500)]
        len: usize,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        /// quarter|five-percent|sqrt|N
        #[arg(long, default_value = "quarter")]
        change_at: ChangeRule,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_BURN_IN)]
        burn_in: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run a size/power grid from a manifest and write the tidy CSV.
    Power {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Overrides the manifest's reps.
        #[arg(long)]
        reps: Option<usize>,
        /// Overrides the manifest's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Expanding-window OLS residual tests over a CSV of returns and factors.
    Rolling {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "ret")]
        response: String,
        /// Comma-separated regressor columns.
        #[arg(long, value_delimiter = ',', default_values_t = FACTORS.map(String::from))]
        regressors: Vec<String>,
        #[arg(long)]
        no_intercept: bool,
        /// First row of every window (0-based).
        #[arg(long, default_value_t = 0)]
        start: usize,
        /// First end row (0-based); defaults to the last row.
        #[arg(long)]
        end_from: Option<usize>,
        /// Last end row (0-based); defaults to the last row.
        #[arg(long)]
        end_to: Option<usize>,
        /// Comma-separated statistics.
        #[arg(long, value_delimiter = ',', default_value = "renyi,cusum,de")]
        stat: Vec<Statistic>,
        #[command(flatten)]
        opts: TestOpts,
        #[arg(long, default_value = "csv")]
        format: OutputFormat,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Write the synthetic factor fixture.
    Fixture {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// No break.
        #[arg(long)]
        stable: bool,
        #[arg(long)]
        output: PathBuf,
    },
}

fn write_out(path: Option<&PathBuf>, text: &str) -> Result<(), AppError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| AppError::Io(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Test { input, column, stat, opts, format } => {
            let report =
                cmd_test(&input, &column, stat, &TrimSpec::symmetric(opts.trim), &opts.vcfg()?, opts.alpha)?;
            match format {
                OutputFormat::Json => println!("{}", report.to_json()),
                OutputFormat::Csv => print!("{}", report.to_csv()),
            }
        }
        Command::Simulate { spec, errors, len, mu, delta, change_at, seed, burn_in, output } => {
            let spec = match spec {
                Some(path) => {
                    let text = fs::read_to_string(&path)
                        .map_err(|e| AppError::Data(format!("cannot read {}: {e}", path.display())))?;
                    DgpSpec::from_kv_text(&text)?
                }
                None => DgpSpec { errors, mu, delta, change_at, len, seed, burn_in },
            };
            cmd_simulate(&spec, &output)?;
        }
        Command::Power { manifest, output, svg, reps, seed } => {
            let text = fs::read_to_string(&manifest)
                .map_err(|e| AppError::Data(format!("cannot read {}: {e}", manifest.display())))?;
            let mut m = PowerManifest::parse(&text)?;
            if let Some(r) = reps {
                m.grid.reps = r;
            }
            if let Some(s) = seed {
                m.grid.seed = s;
            }
            let table = cmd_power(&m, &output, svg.as_deref())?;
            for v in &table.violations {
                eprintln!("warning: rate drops by {:.3} from Δ={} to Δ={} ({} T={})", v.drop, v.from_delta, v.to_delta, v.statistic, v.len);
            }
        }
        Command::Rolling {
            input,
            response,
            regressors,
            no_intercept,
            start,
            end_from,
            end_to,
            stat,
            opts,
            format,
            output,
            svg,
        } => {
            let table = renyi_changepoint::app::Table::read_path(&input)?;
            let last = table.len().saturating_sub(1);
            let end_to = end_to.unwrap_or(last);
            let mut cfg = RollingConfig::new(response, regressors, start, end_from.unwrap_or(end_to), end_to);
            cfg.intercept = !no_intercept;
            cfg.statistics = stat;
            cfg.trim = TrimSpec::symmetric(opts.trim);
            cfg.vcfg = opts.vcfg()?;
            cfg.alpha = opts.alpha;
            let res = renyi_changepoint::app::rolling(&cfg, &table)?;
            let text = match format {
                OutputFormat::Csv => res.to_csv(),
                OutputFormat::Json => {
                    let rows: Vec<_> = res
                        .rows
                        .iter()
                        .map(|r| {
                            serde_json::json!({
                                "end_label": r.end_label,
                                "end_index": r.end_index,
                                "window_len": r.window_len,
                                "stats": r.stats,
                                "error": r.error,
                            })
                        })
                        .collect();
                    serde_json::to_string_pretty(&rows).map_err(|e| AppError::Internal(e.to_string()))? + "\n"
                }
            };
            write_out(output.as_ref(), &text)?;
            if let Some(path) = svg {
                write_out(Some(&path), &res.chart(cfg.alpha).render())?;
            }
        }
        Command::Fixture { seed, stable, output } => {
            let fx = if stable { FactorFixture::stable(965, seed) } else { FactorFixture::standard(seed) };
            let file = fs::File::create(&output)
                .map_err(|e| AppError::Io(format!("cannot write {}: {e}", output.display())))?;
            fx.generate()?.write_csv(file)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
