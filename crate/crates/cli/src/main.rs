use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use potrate::distances::MetricSet;
use potrate::excess::Recenter;
use potrate::family::{Family, FamilyRegistry};
use potrate::output::{points_csv, sweep_csv, to_json};
use potrate::quad::QuadOptions;
use potrate::rates::{evaluate_point, sweep, VGrid};
use potrate::verify::{self, mc_check, mc_checks_csv, Suite, VerifyConfig};

const EXIT_VERIFY: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

const CSV_SCHEMA: &str = "\
CSV columns, in this order:
  v, t, s_t, c_t, abs_A, H2, H, TV, KL, D2, D3, [D4 ...], ratio_sup,
  quad_error_<metric> for each requested metric, status
Metrics not requested are left empty. Infinite values are written as `inf`.
status is `ok` or `failed: <reason>` for a grid point whose quadrature failed.";

#[derive(Parser)]
#[command(name = "potrate", version, about = "Generalised Pareto approximation rates for threshold excesses")]
struct Cli {
    /// Worker threads (default: available cores). Output does not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Relative tolerance of the adaptive quadrature.
    #[arg(long, global = true, default_value_t = QuadOptions::default().rel_tol)]
    rel_tol: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print gamma, rho, the right endpoint and |A(v)| at v = 1e2, 1e4, 1e6 as JSON.
    FamilyInfo {
        /// Family spec, e.g. `burr:c=2,k=1`.
        spec: Option<String>,
        #[arg(long = "family", conflicts_with = "spec")]
        family: Option<String>,
    },
    /// Metric panel of one excess model against its limit.
    #[command(after_help = CSV_SCHEMA)]
    Distance {
        #[command(flatten)]
        model: ModelArgs,
        /// Tail level v > 1; the threshold is t = U(v).
        #[arg(long)]
        v: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Metric panels over a grid of tail levels, with log-log slope fits and verdicts.
    #[command(after_help = CSV_SCHEMA)]
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        /// `start:stop:log|lin:count`.
        #[arg(long = "v-grid", default_value = "1e2:1e6:log:9")]
        v_grid: VGrid,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Compare quadrature and Monte Carlo estimates of H2 and TV at one tail level.
    McCheck {
        #[arg(long)]
        family: String,
        #[arg(long)]
        v: f64,
        #[arg(long, default_value = "auto")]
        recenter: Recenter,
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run an acceptance suite and print one line per criterion.
    Verify {
        /// core, rates, mc or all.
        #[arg(default_value = "all")]
        suite: String,
        /// Directory receiving the sweep, Monte Carlo and verdict files.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = VerifyConfig::default().seed)]
        seed: u64,
        #[arg(long, default_value_t = VerifyConfig::default().n)]
        n: usize,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// Family spec: `burr:c=..,k=..`, `revburr:c=..,k=..[,xstar=..]`, `gumbel` or `gp:gamma=..`.
    #[arg(long)]
    family: String,
    #[arg(long, default_value = "auto")]
    recenter: Recenter,
    /// Comma-separated subset of h2, tv, kl and d<p> (p >= 2).
    #[arg(long, default_value = "h2,tv,kl,d2,d3")]
    metrics: MetricSet,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Failure with the process exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<potrate::Error> for Failure {
    fn from(e: potrate::Error) -> Self {
        let code = if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_USAGE };
        Self { code, error: e.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Self { code: EXIT_USAGE, error }
    }
}

fn emit(path: Option<&Path>, content: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, content).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn family_info(spec: &str) -> Result<String, Failure> {
    let family = FamilyRegistry::standard().parse(spec)?;
    let probes: Vec<_> = [1e2, 1e4, 1e6]
        .into_iter()
        .map(|v| -> potrate::Result<_> {
            let a = family.rate(v)?;
            Ok(json!({ "v": v, "A": a, "abs_A": a.abs() }))
        })
        .collect::<potrate::Result<_>>()?;
    let xstar = family.xstar();
    let info = json!({
        "family": family.spec(),
        "gamma": family.gamma(),
        "rho": family.rho(),
        "xstar": if xstar.is_finite() { json!(xstar) } else { json!("inf") },
        "degenerate_rate": family.degenerate_rate(),
        "rate": probes,
    });
    Ok(to_json(&info)?)
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(anyhow::anyhow!("--jobs must be at least 1").into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring worker pool")?;
    }
    if !(cli.rel_tol > 0.0 && cli.rel_tol < 1.0) {
        return Err(anyhow::anyhow!("--rel-tol must lie in (0, 1)").into());
    }
    let opts = QuadOptions::with_rel_tol(cli.rel_tol);

    match cli.command {
        Command::FamilyInfo { spec, family } => {
            let spec = spec
                .or(family)
                .ok_or_else(|| anyhow::anyhow!("a family spec is required"))?;
            emit(None, &family_info(&spec)?)?;
        }
        Command::Distance { model, v, out } => {
            let family = Family::parse(&model.family)?;
            let point = evaluate_point(&family, v, model.recenter, &model.metrics, &opts)?;
            let text = match out.format {
                Format::Csv => points_csv(std::slice::from_ref(&point), &model.metrics.dp_orders())?,
                Format::Json => to_json(&point)?,
            };
            emit(out.out.as_deref(), &text)?;
            if let Some(reason) = point.failure {
                return Err(Failure {
                    code: EXIT_NUMERICAL,
                    error: anyhow::anyhow!(reason),
                });
            }
        }
        Command::Sweep { model, v_grid, out } => {
            let family = Family::parse(&model.family)?;
            let sr = sweep(&family, &v_grid.values(), model.recenter, &model.metrics, &opts)?;
            let text = match out.format {
                Format::Csv => sweep_csv(&sr)?,
                Format::Json => to_json(&sr)?,
            };
            emit(out.out.as_deref(), &text)?;
        }
        Command::McCheck {
            family,
            v,
            recenter,
            n,
            seed,
            out,
        } => {
            let family = Family::parse(&family)?;
            let checks = mc_check(&family, v, recenter, n, seed, &opts)?;
            let text = match out.format {
                Format::Csv => mc_checks_csv(&checks)?,
                Format::Json => to_json(&checks)?,
            };
            emit(out.out.as_deref(), &text)?;
            if checks.iter().any(|c| !c.agree) {
                return Err(Failure {
                    code: EXIT_VERIFY,
                    error: anyhow::anyhow!("quadrature and Monte Carlo disagree"),
                });
            }
        }
        Command::Verify { suite, out, seed, n } => {
            let suite: Suite = suite.parse()?;
            let cfg = VerifyConfig { seed, n, opts };
            let result = verify::run_with(suite, &cfg, |c| println!("{c}"))?;
            if let Some(dir) = out {
                fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                for (name, content) in &result.artifacts {
                    emit(Some(&dir.join(name)), content)?;
                }
            }
            let failed = result.criteria.iter().filter(|c| !c.passed).count();
            println!(
                "{} of {} criteria passed",
                result.criteria.len() - failed,
                result.criteria.len()
            );
            if failed > 0 {
                return Err(Failure {
                    code: EXIT_VERIFY,
                    error: anyhow::anyhow!("{failed} criteria failed"),
                });
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
