//! Experiment CLI: batch studies of summation-order effects on Monte-Carlo
//! statistics, plus a file-summing utility and a report renderer.

mod experiments;
mod report;

use std::io::BufRead;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use repromc_core::engine::PayoffKind;
use repromc_core::moments::MomentAlgorithm;
use repromc_core::sum::SumAlgorithm;
use repromc_core::IeeeFloat;
use thiserror::Error;

use experiments::{McConfig, NormalConfig, OrderingSpec, UniformConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
}

#[derive(Parser)]
#[command(
    name = "repromc",
    version,
    about = "Order-robust streaming statistics and reproducible parallel Monte-Carlo experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch experiment and emit a CSV report.
    #[command(subcommand)]
    Experiment(ExperimentCmd),
    /// Sum a file of floats (one per line) with a chosen kernel.
    Sum(SumArgs),
    /// Render a report CSV as a markdown table.
    Render(RenderArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Base generator seed; run r uses seed + r.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Samples (or paths) per run; defaults depend on the experiment.
    #[arg(long)]
    n: Option<u64>,
    /// Number of independent runs; defaults depend on the experiment.
    #[arg(long)]
    runs: Option<u64>,
    /// Comma list of orderings: raw, sorted, permuted[:seed].
    #[arg(long, default_value = "raw,sorted")]
    orderings: String,
    /// Comma list of algorithms, or "all".
    #[arg(long, default_value = "all")]
    algos: String,
    /// Worker threads (values never depend on this).
    #[arg(long)]
    workers: Option<usize>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct McArgs {
    /// Relative spot bump for the finite-difference Gamma.
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    /// Paths per engine work unit.
    #[arg(long, default_value_t = repromc_core::engine::DEFAULT_BLOCK_SIZE)]
    block_size: u64,
    /// Also write engine audit records (JSON lines) to this path.
    #[arg(long)]
    jsonl: Option<PathBuf>,
    /// Seeded completion orders per (run, algorithm) in the audit records.
    #[arg(long, default_value_t = 20)]
    order_seeds: u64,
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// Large-mean normal samples in binary64 (defaults: n=100000, runs=100).
    Normal {
        #[command(flatten)]
        common: CommonArgs,
        /// Normal mean.
        #[arg(long, default_value_t = 1e5)]
        mu: f64,
        /// Normal standard deviation.
        #[arg(long = "sigma-n", default_value_t = 1.0)]
        sigma: f64,
    },
    /// Long uniform sums in binary32 (defaults: n=50000000, runs=10).
    Uniform32 {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Binary asset-or-nothing option (defaults: n=1000000, runs=10).
    AssetOrNothing {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Binary cash-or-nothing option (defaults: n=10000000, runs=1).
    CashOrNothing {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        mc: McArgs,
        /// Cash paid below the strike.
        #[arg(long, default_value_t = 0.0)]
        rebate: f64,
    },
}

#[derive(Args)]
struct SumArgs {
    /// Summation kernel: naive, kahan, klein, or knuth.
    #[arg(long)]
    algo: SumAlgorithm,
    /// Input file, one float per line.
    #[arg(long)]
    input: PathBuf,
    /// Working precision: binary64 (default) or binary32.
    #[arg(long, default_value = "binary64")]
    precision: String,
}

#[derive(Args)]
struct RenderArgs {
    /// Report CSV produced by `experiment`.
    #[arg(long)]
    input: PathBuf,
    /// Run selector (an index or "avg").
    #[arg(long, default_value = "avg")]
    run: String,
}

fn parse_algos(text: &str) -> Result<Vec<MomentAlgorithm>, CliError> {
    if text.trim() == "all" {
        return Ok(MomentAlgorithm::ALL.to_vec());
    }
    text.split(',')
        .map(|item| item.trim().parse().map_err(CliError::Config))
        .collect()
}

fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|p| p.get())
        .unwrap_or(1)
        .min(8)
}

fn emit_report(mut rows: Vec<report::ReportRow>, out: Option<&PathBuf>) -> Result<(), CliError> {
    report::append_aggregate_rows(&mut rows);
    match out {
        Some(path) => report::write_csv_path(&rows, path),
        None => report::write_csv(&rows, std::io::stdout().lock()),
    }
}

fn write_jsonl(records: &[String], path: &PathBuf) -> Result<(), CliError> {
    let body = records.join("\n") + "\n";
    std::fs::write(path, body)
        .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

fn run_experiment(cmd: ExperimentCmd) -> Result<(), CliError> {
    match cmd {
        ExperimentCmd::Normal { common, mu, sigma } => {
            let cfg = NormalConfig {
                n: common.n.unwrap_or(100_000),
                mu,
                sigma,
                runs: common.runs.unwrap_or(100),
                seed: common.seed,
                orderings: OrderingSpec::parse_list(&common.orderings)?,
                algos: parse_algos(&common.algos)?,
                workers: common.workers.unwrap_or_else(default_workers),
            };
            emit_report(experiments::run_normal(&cfg)?, common.out.as_ref())
        }
        ExperimentCmd::Uniform32 { common } => {
            let cfg = UniformConfig {
                n: common.n.unwrap_or(50_000_000),
                runs: common.runs.unwrap_or(10),
                seed: common.seed,
                orderings: OrderingSpec::parse_list(&common.orderings)?,
                algos: parse_algos(&common.algos)?,
                workers: common.workers.unwrap_or_else(default_workers),
            };
            emit_report(experiments::run_uniform32(&cfg)?, common.out.as_ref())
        }
        ExperimentCmd::AssetOrNothing { common, mc } => {
            run_mc_experiment(PayoffKind::AssetOrNothing, common, mc, 0.0, 1_000_000, 10)
        }
        ExperimentCmd::CashOrNothing { common, mc, rebate } => {
            run_mc_experiment(PayoffKind::CashOrNothing, common, mc, rebate, 10_000_000, 1)
        }
    }
}

fn run_mc_experiment(
    kind: PayoffKind,
    common: CommonArgs,
    mc: McArgs,
    rebate: f64,
    default_n: u64,
    default_runs: u64,
) -> Result<(), CliError> {
    let cfg = McConfig {
        kind,
        paths: common.n.unwrap_or(default_n),
        runs: common.runs.unwrap_or(default_runs),
        seed: common.seed,
        orderings: OrderingSpec::parse_list(&common.orderings)?,
        algos: parse_algos(&common.algos)?,
        workers: common.workers.unwrap_or_else(default_workers),
        block_size: mc.block_size,
        epsilon: mc.epsilon,
        rebate,
        order_seeds: mc.order_seeds,
        jsonl: mc.jsonl.is_some(),
    };
    let (rows, records) = experiments::run_mc(&cfg)?;
    if let Some(path) = &mc.jsonl {
        write_jsonl(&records, path)?;
    }
    emit_report(rows, common.out.as_ref())
}

fn run_sum(args: SumArgs) -> Result<(), CliError> {
    let file = std::fs::File::open(&args.input)
        .map_err(|e| CliError::Io(format!("opening {}: {e}", args.input.display())))?;
    let reader = std::io::BufReader::new(file);
    let mut values64 = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line =
            line.map_err(|e| CliError::Io(format!("reading {}: {e}", args.input.display())))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let x: f64 = trimmed.parse().map_err(|e| {
            CliError::Config(format!(
                "{}:{}: bad float '{trimmed}': {e}",
                args.input.display(),
                lineno + 1
            ))
        })?;
        values64.push(x);
    }
    match args.precision.as_str() {
        "binary64" | "f64" => {
            let total = args.algo.sum(&values64);
            println!("{} {}", report::fmt_binary64(total), total.bits_hex());
        }
        "binary32" | "f32" => {
            let values32: Vec<f32> = values64.iter().map(|&x| x as f32).collect();
            let total = args.algo.sum(&values32);
            println!("{} {}", report::fmt_binary32(total), total.bits_hex());
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown precision '{other}' (expected binary64|binary32)"
            )));
        }
    }
    Ok(())
}

fn run_render(args: RenderArgs) -> Result<(), CliError> {
    let rows = report::read_csv_path(&args.input)?;
    if !rows.iter().any(|r| r.run == args.run) {
        return Err(CliError::Config(format!(
            "run '{}' not present in {}",
            args.run,
            args.input.display()
        )));
    }
    print!("{}", report::render_markdown(&rows, &args.run));
    Ok(())
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Experiment(cmd) => run_experiment(cmd),
        Command::Sum(args) => run_sum(args),
        Command::Render(args) => run_render(args),
    };
    match result {
        Ok(()) => {}
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
    }
}
