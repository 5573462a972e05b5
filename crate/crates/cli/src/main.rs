//! Command-line front end: every subcommand parses its inputs, calls one
//! library entry point and serializes the result. No statistic is computed
//! in this layer.
//!
//! Exit codes: 0 success, 1 change-point test rejected (for scripting),
//! 2 input or validation error, 3 numeric failure.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use hdcov::changepoint::{cusum_test_bridge, cusum_test_known, learning_sample_pipeline};
use hdcov::covariance::{bilinear_form, sample_cov, WeightVector};
use hdcov::io::{read_matrix_path, read_panel_path, write_matrix, write_panel_path};
use hdcov::lrv::{lrv_estimate, Bandwidth, KernelKind, KernelSpec};
use hdcov::model::{simulate_panel, CoefficientModel, InnovationSpec, Panel};
use hdcov::montecarlo::{configure_threads, run_with_samples, write_samples_csv, Scenario};
use hdcov::portfolio::{mean_variance_weights, min_variance_weights};
use hdcov::shrinkage::{leave_one_out_weight, shrink_covariance};
use hdcov::sparse::l1_project;

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(
    name = "hdcov",
    version,
    about = "Covariance inference for high-dimensional linear-process panels",
    propagate_version = true
)]
struct Cli {
    /// Worker threads for Monte Carlo scenarios (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a panel from a model file and write it as headerless CSV.
    Simulate(SimulateArgs),
    /// Sample covariance matrix, or the bilinear form v' Sigma_hat w.
    Cov(CovArgs),
    /// Lag-window long-run variance estimate of the projected product series.
    Lrv(LrvArgs),
    /// CUSUM change-point test for the variance of a projection.
    CpTest(CpTestArgs),
    /// Run a Monte Carlo scenario file and emit its report.
    Mc(McArgs),
    /// Closed-form minimum-variance or mean-variance portfolio weights.
    Portfolio(PortfolioArgs),
    /// Soft-threshold projection of a weight vector onto an l1 ball.
    ProjectL1(ProjectL1Args),
    /// Shrink a covariance matrix toward its grand-mean identity target.
    Shrink(ShrinkArgs),
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    /// Model JSON file (kind, parameters, truncation lag).
    #[arg(long)]
    model: PathBuf,
    /// Number of time points.
    #[arg(long)]
    n: usize,
    /// Seed; all randomness is explicit, there is no wall-clock seeding.
    #[arg(long)]
    seed: u64,
    /// Innovation variance.
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    /// Innovation distribution.
    #[arg(long, value_enum, default_value_t = InnovationArg::Gaussian)]
    innov: InnovationArg,
    /// Degrees of freedom for student-t innovations (must exceed 4).
    #[arg(long)]
    df: Option<f64>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum InnovationArg {
    Gaussian,
    StudentT,
    Uniform,
}

#[derive(Args, Serialize)]
struct CovArgs {
    /// Panel CSV (rows = time points).
    #[arg(long)]
    panel: PathBuf,
    /// One or two weight-vector JSON files (v, optionally w); with weights the output
    /// is the bilinear form, without them the full matrix.
    #[arg(long, num_args = 1..=2)]
    weights: Vec<PathBuf>,
    /// Remove column means first (for real data; the model is mean zero).
    #[arg(long)]
    demean: bool,
}

#[derive(Args, Serialize)]
struct LrvArgs {
    #[arg(long)]
    panel: PathBuf,
    /// One or two weight-vector JSON files (v, optionally w).
    #[arg(long, num_args = 1..=2, required = true)]
    weights: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = KernelArg::Bartlett)]
    kernel: KernelArg,
    /// Bandwidth: "auto" for floor(n^(1/3)) or an explicit integer.
    #[arg(long, default_value = "auto")]
    bandwidth: String,
    /// Clamp a negative estimate to zero (for use as a divisor downstream).
    #[arg(long)]
    clamp: bool,
    #[arg(long)]
    demean: bool,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum KernelArg {
    Bartlett,
    Truncated,
}

#[derive(Clone, Copy, ValueEnum, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
enum ModeArg {
    /// Center at a known projected target (needs --sigma0 and --alpha).
    Known,
    /// Self-centered statistic; no target needed.
    Bridge,
}

#[derive(Args, Serialize)]
struct CpTestArgs {
    #[arg(long)]
    panel: PathBuf,
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Test level in (0, 1).
    #[arg(long, default_value_t = 0.05)]
    level: f64,
    /// One or two weight-vector JSON files (v, optionally w).
    #[arg(long, num_args = 1..=2, required = true)]
    weights: Vec<PathBuf>,
    /// Normalizer alpha (the square root of the long-run variance).
    #[arg(long)]
    alpha: Option<f64>,
    /// Stationary learning panel CSV to estimate alpha from (bridge mode).
    /// The test sample itself is never used for the estimate.
    #[arg(long)]
    learning: Option<PathBuf>,
    /// Projected target v' Sigma0 w for the known-target mode.
    #[arg(long)]
    sigma0: Option<f64>,
    #[arg(long, value_enum, default_value_t = KernelArg::Bartlett)]
    kernel: KernelArg,
    #[arg(long, default_value = "auto")]
    bandwidth: String,
    #[arg(long)]
    demean: bool,
}

#[derive(Args, Serialize)]
struct McArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Write the report JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also dump per-replication samples as CSV.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct PortfolioArgs {
    /// Covariance matrix CSV.
    #[arg(long)]
    sigma: PathBuf,
    /// Mean vector JSON; switches to the mean-variance solution.
    #[arg(long)]
    mu: Option<PathBuf>,
    /// Target mean return (required with --mu).
    #[arg(long)]
    mu0: Option<f64>,
}

#[derive(Args, Serialize)]
struct ProjectL1Args {
    /// Weight-vector JSON.
    #[arg(long)]
    weights: PathBuf,
    /// l1 budget (>= 1) applied to the l2-normalized output.
    #[arg(long)]
    c: f64,
}

#[derive(Args, Serialize)]
struct ShrinkArgs {
    /// Covariance matrix CSV to shrink.
    #[arg(long)]
    sigma: PathBuf,
    /// Shrinkage weight in [0, 1], or "auto" to estimate it from learning
    /// panels (leave-one-out held-out references; needs >= 2 panels).
    #[arg(long)]
    weight: String,
    /// Learning panel CSVs for --weight auto.
    #[arg(long)]
    learning: Vec<PathBuf>,
    /// Write the shrunk matrix as CSV here (otherwise inline in the JSON).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        // best effort; re-initialization in the same process is harmless
        let _ = configure_threads(t);
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(error_code(&err))
        }
    }
}

fn error_code(err: &hdcov::Error) -> u8 {
    use hdcov::Error::*;
    match err {
        NotPositiveDefinite(_)
        | DegenerateConstraints(_)
        | NonPositiveVariance { .. }
        | Numeric(_) => 3,
        _ => 2,
    }
}

fn dispatch(cmd: Command) -> hdcov::Result<ExitCode> {
    match cmd {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Cov(args) => cmd_cov(args),
        Command::Lrv(args) => cmd_lrv(args),
        Command::CpTest(args) => cmd_cp_test(args),
        Command::Mc(args) => cmd_mc(args),
        Command::Portfolio(args) => cmd_portfolio(args),
        Command::ProjectL1(args) => cmd_project_l1(args),
        Command::Shrink(args) => cmd_shrink(args),
    }
}

/// Every run echoes its fully-resolved configuration next to the result.
fn emit(config: impl Serialize, result: impl Serialize) -> hdcov::Result<()> {
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "config": config,
        "result": result,
    });
    let mut stdout = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, &doc)?;
    writeln!(stdout)?;
    Ok(())
}

fn parse_kernel(kind: KernelArg, bandwidth: &str, clamp: bool) -> hdcov::Result<KernelSpec> {
    let bandwidth = if bandwidth == "auto" {
        Bandwidth::Auto
    } else {
        let m: usize = bandwidth.parse().map_err(|_| {
            hdcov::Error::InvalidInput(format!(
                "bandwidth must be \"auto\" or an integer, got {bandwidth:?}"
            ))
        })?;
        Bandwidth::Fixed(m)
    };
    let kind = match kind {
        KernelArg::Bartlett => KernelKind::Bartlett,
        KernelArg::Truncated => KernelKind::Truncated,
    };
    Ok(KernelSpec {
        kind,
        bandwidth,
        clamp_to_zero: clamp,
    })
}

fn load_weight_pair(paths: &[PathBuf]) -> hdcov::Result<(WeightVector, WeightVector)> {
    let v = WeightVector::from_json_str(&std::fs::read_to_string(&paths[0])?)?;
    let w = if paths.len() > 1 {
        WeightVector::from_json_str(&std::fs::read_to_string(&paths[1])?)?
    } else {
        v.clone()
    };
    Ok((v, w))
}

fn load_panel(path: &std::path::Path, demean: bool) -> hdcov::Result<Panel> {
    let panel = read_panel_path(path)?;
    Ok(if demean { panel.demeaned() } else { panel })
}

fn cmd_simulate(args: SimulateArgs) -> hdcov::Result<ExitCode> {
    let model = CoefficientModel::from_json_str(&std::fs::read_to_string(&args.model)?)?;
    let distribution = match args.innov {
        InnovationArg::Gaussian => hdcov::model::InnovationDistribution::Gaussian,
        InnovationArg::StudentT => hdcov::model::InnovationDistribution::StudentT {
            df: args.df.ok_or_else(|| {
                hdcov::Error::InvalidInput("student_t innovations need --df".into())
            })?,
        },
        InnovationArg::Uniform => hdcov::model::InnovationDistribution::Uniform,
    };
    let innov = InnovationSpec::new(distribution, args.sigma2)?;
    let panel = simulate_panel(&model, &innov, args.n, args.seed)?;
    write_panel_path(&args.out, &panel)?;
    emit(
        &args,
        json!({ "rows": panel.len(), "columns": panel.dim(), "out": args.out }),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_cov(args: CovArgs) -> hdcov::Result<ExitCode> {
    let panel = load_panel(&args.panel, args.demean)?;
    if args.weights.is_empty() {
        let sigma = sample_cov(&panel);
        let rows: Vec<Vec<f64>> = sigma.rows().into_iter().map(|r| r.to_vec()).collect();
        emit(&args, json!({ "matrix": rows }))?;
    } else {
        let (v, w) = load_weight_pair(&args.weights)?;
        let q = bilinear_form(&panel, &v, &w)?;
        emit(&args, json!({ "q": q }))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_lrv(args: LrvArgs) -> hdcov::Result<ExitCode> {
    let panel = load_panel(&args.panel, args.demean)?;
    let (v, w) = load_weight_pair(&args.weights)?;
    let kernel = parse_kernel(args.kernel, &args.bandwidth, args.clamp)?;
    let est = lrv_estimate(&panel, &v, &w, &kernel)?;
    emit(
        &args,
        json!({ "alpha2_hat": est, "bandwidth": kernel.bandwidth_for(panel.len()) }),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_cp_test(args: CpTestArgs) -> hdcov::Result<ExitCode> {
    let panel = load_panel(&args.panel, args.demean)?;
    let (v, w) = load_weight_pair(&args.weights)?;
    let kernel = parse_kernel(args.kernel, &args.bandwidth, false)?;
    let report = match args.mode {
        ModeArg::Known => {
            let sigma0 = args.sigma0.ok_or_else(|| {
                hdcov::Error::InvalidInput(
                    "--mode known needs --sigma0 (the projected target)".into(),
                )
            })?;
            let alpha = args.alpha.ok_or_else(|| {
                hdcov::Error::InvalidInput("--mode known needs an explicit --alpha".into())
            })?;
            cusum_test_known(&panel, &v, &w, sigma0, alpha, args.level)?
        }
        ModeArg::Bridge => match (args.alpha, &args.learning) {
            (Some(alpha), None) => cusum_test_bridge(&panel, &v, &w, alpha, args.level)?,
            (None, Some(learning)) => {
                let learning_panel = load_panel(learning, args.demean)?;
                learning_sample_pipeline(&learning_panel, &panel, &v, &w, &kernel, args.level)?
            }
            (Some(_), Some(_)) => {
                return Err(hdcov::Error::InvalidInput(
                    "give either --alpha or --learning, not both".into(),
                ))
            }
            (None, None) => {
                return Err(hdcov::Error::InvalidInput(
                    "--mode bridge needs --alpha or a --learning panel".into(),
                ))
            }
        },
    };
    let reject = report.reject;
    emit(&args, &report)?;
    Ok(if reject {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_mc(args: McArgs) -> hdcov::Result<ExitCode> {
    let scenario = Scenario::from_json_str(&std::fs::read_to_string(&args.scenario)?)?;
    let (report, samples) = run_with_samples(&scenario)?;
    if let Some(dump) = &args.dump {
        write_samples_csv(std::fs::File::create(dump)?, &samples)?;
    }
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "config": &scenario,
        "result": &report,
    });
    match &args.out {
        Some(path) => {
            serde_json::to_writer_pretty(std::fs::File::create(path)?, &doc)?;
            println!("{}", json!({ "pass": report.pass, "out": path }));
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            serde_json::to_writer_pretty(&mut stdout, &doc)?;
            writeln!(stdout)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_portfolio(args: PortfolioArgs) -> hdcov::Result<ExitCode> {
    let sigma = read_matrix_path(&args.sigma)?;
    let solution = match (&args.mu, args.mu0) {
        (None, None) => min_variance_weights(&sigma)?,
        (Some(mu_path), Some(mu0)) => {
            let mu: Vec<f64> = serde_json::from_str(&std::fs::read_to_string(mu_path)?)?;
            mean_variance_weights(&sigma, &mu, mu0)?
        }
        _ => {
            return Err(hdcov::Error::InvalidInput(
                "--mu and --mu0 go together (mean-variance); omit both for minimum variance".into(),
            ))
        }
    };
    emit(&args, &solution)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_project_l1(args: ProjectL1Args) -> hdcov::Result<ExitCode> {
    let w = WeightVector::from_json_str(&std::fs::read_to_string(&args.weights)?)?;
    let projected = l1_project(&w, args.c)?;
    emit(
        &args,
        json!({
            "weights": projected.entries().to_vec(),
            "l1": projected.l1(),
            "l2": projected.l2(),
        }),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_shrink(args: ShrinkArgs) -> hdcov::Result<ExitCode> {
    let sigma = read_matrix_path(&args.sigma)?;
    let weight = if args.weight == "auto" {
        let covs: Vec<_> = args
            .learning
            .iter()
            .map(|p| read_panel_path(p).map(|panel| sample_cov(&panel)))
            .collect::<hdcov::Result<_>>()?;
        leave_one_out_weight(&covs)?
    } else {
        args.weight.parse().map_err(|_| {
            hdcov::Error::InvalidInput(format!(
                "weight must be a number in [0,1] or \"auto\", got {:?}",
                args.weight
            ))
        })?
    };
    let result = shrink_covariance(&sigma, weight)?;
    match &args.out {
        Some(path) => {
            write_matrix(std::fs::File::create(path)?, &result.matrix)?;
            emit(
                &args,
                json!({
                    "weight": result.weight,
                    "grand_mean": result.grand_mean,
                    "matrix_file": path,
                }),
            )?;
        }
        None => {
            let rows: Vec<Vec<f64>> = result
                .matrix
                .rows()
                .into_iter()
                .map(|r| r.to_vec())
                .collect();
            emit(
                &args,
                json!({
                    "weight": result.weight,
                    "grand_mean": result.grand_mean,
                    "matrix": rows,
                }),
            )?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
