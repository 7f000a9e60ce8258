//! Command-line front end: `bound`, `curve`, `simulate`, `invert`, `relevant`.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bounds::{self, GApproxParams, DEFAULT_TRUNC_EPS};
use crate::distributions::{zipf_relevant_approx, BinDistribution, DistributionKind};
use crate::error::{validation, Result};
use crate::export::{self, SimulationMetadata};
use crate::simulator::{
    self, CurveKind, SimulationConfig, Simulator, DEFAULT_M_GRID, DEFAULT_NUM_BINS, DEFAULT_SEED,
};

#[derive(Debug, Parser)]
#[command(
    name = "datareq",
    version,
    about = "Training-data requirements of a mode-based learner"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one accuracy estimate under uniform bins.
    Bound(BoundArgs),
    /// Write closed-form accuracy curves over a grid of training sizes.
    Curve(CurveArgs),
    /// Run the Monte Carlo simulation.
    Simulate(SimulateArgs),
    /// Smallest training size reaching a target expected accuracy.
    Invert(InvertArgs),
    /// Expected number of training instances sharing a test instance's bin.
    Relevant(RelevantArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundMethod {
    Old,
    Exact,
    Glb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long)]
    pub m: u64,
    #[arg(long, default_value_t = DEFAULT_NUM_BINS as u64, value_parser = clap::value_parser!(u64).range(1..))]
    pub bins: u64,
    #[arg(long, default_value_t = 0.9, value_parser = parse_majority_prob)]
    pub p: f64,
    #[arg(long, value_enum, default_value_t = BoundMethod::Exact)]
    pub method: BoundMethod,
}

/// Training sizes: `--grid a,b,c` or `--m-max N [--m-steps K]`.
#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, value_parser = parse_grid, conflicts_with_all = ["m_max", "m_steps"])]
    pub grid: Option<Grid>,
    #[arg(long)]
    pub m_max: Option<u64>,
    #[arg(long, requires = "m_max", value_parser = clap::value_parser!(u64).range(1..))]
    pub m_steps: Option<u64>,
}

impl GridArgs {
    pub fn resolve(&self) -> Vec<u64> {
        if let Some(grid) = &self.grid {
            return grid.0.clone();
        }
        match self.m_max {
            Some(max) => even_grid(max, self.m_steps.unwrap_or(10)),
            None => DEFAULT_M_GRID.to_vec(),
        }
    }
}

/// `steps + 1` evenly spaced sizes from 0 to `max`, duplicates removed.
fn even_grid(max: u64, steps: u64) -> Vec<u64> {
    let mut grid: Vec<u64> = (0..=steps)
        .map(|i| (max as u128 * i as u128 / steps as u128) as u64)
        .collect();
    grid.dedup();
    grid
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid(pub Vec<u64>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Series(pub Vec<CurveKind>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DistArg {
    Uniform,
    Zipf,
    Custom(PathBuf),
}

impl DistArg {
    fn build(&self, bins: Option<usize>) -> Result<BinDistribution> {
        match self {
            DistArg::Uniform => BinDistribution::uniform(bins.unwrap_or(DEFAULT_NUM_BINS)),
            DistArg::Zipf => BinDistribution::zipf(bins.unwrap_or(DEFAULT_NUM_BINS)),
            DistArg::Custom(path) => {
                let dist = BinDistribution::from_file(path)?;
                if let Some(b) = bins {
                    if b != dist.num_bins() {
                        return Err(validation(format!(
                            "--bins {b} does not match the {} weights in {}",
                            dist.num_bins(),
                            path.display()
                        )));
                    }
                }
                Ok(dist)
            }
        }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long, default_value_t = DEFAULT_NUM_BINS as u64, value_parser = clap::value_parser!(u64).range(1..))]
    pub bins: u64,
    #[arg(long, default_value_t = 0.9, value_parser = parse_majority_prob)]
    pub p: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Comma-separated subset of exact, old_bound, g_lower_bound, optimal.
    #[arg(long, value_parser = parse_series, default_value = "exact,old_bound,g_lower_bound,optimal")]
    pub series: Series,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Defaults to 10000, or the number of weights in a custom file.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub bins: Option<u64>,
    #[arg(long, default_value_t = 0.9, value_parser = parse_majority_prob)]
    pub p: f64,
    /// uniform, zipf or custom:<path>
    #[arg(long, default_value = "uniform", value_parser = parse_dist)]
    pub dist: DistArg,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = simulator::DEFAULT_REPETITIONS, value_parser = parse_reps)]
    pub reps: u32,
    #[arg(long, default_value_t = simulator::DEFAULT_TEST_SIZE, value_parser = clap::value_parser!(u32).range(1..))]
    pub test_size: u32,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct InvertArgs {
    #[arg(long, value_parser = parse_unit)]
    pub target: f64,
    #[arg(long, default_value_t = DEFAULT_NUM_BINS as u64, value_parser = clap::value_parser!(u64).range(1..))]
    pub bins: u64,
    #[arg(long, default_value_t = 0.9, value_parser = parse_majority_prob)]
    pub p: f64,
}

#[derive(Debug, Args)]
pub struct RelevantArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub bins: Option<u64>,
    #[arg(long)]
    pub m: u64,
    #[arg(long, default_value = "uniform", value_parser = parse_dist)]
    pub dist: DistArg,
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    s.parse::<f64>()
        .map_err(|_| format!("{s:?} is not a number"))
}

fn parse_majority_prob(s: &str) -> std::result::Result<f64, String> {
    let p = parse_f64(s)?;
    if (0.5..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err("p must be in [0.5, 1]".to_string())
    }
}

fn parse_unit(s: &str) -> std::result::Result<f64, String> {
    let x = parse_f64(s)?;
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err("target must be in [0, 1]".to_string())
    }
}

fn parse_reps(s: &str) -> std::result::Result<u32, String> {
    let n: u32 = s.parse().map_err(|_| format!("{s:?} is not a count"))?;
    if n >= 2 {
        Ok(n)
    } else {
        Err("reps must be at least 2 (the confidence interval needs a variance)".to_string())
    }
}

fn parse_grid(s: &str) -> std::result::Result<Grid, String> {
    let grid = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<u64>()
                .map_err(|_| format!("{t:?} is not a training size"))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err("grid must be strictly increasing".to_string());
    }
    Ok(Grid(grid))
}

fn parse_series(s: &str) -> std::result::Result<Series, String> {
    let kinds = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| CurveKind::parse(t).ok_or_else(|| format!("unknown series {t:?}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if kinds.is_empty() {
        return Err("at least one series must be selected".to_string());
    }
    Ok(Series(kinds))
}

fn parse_dist(s: &str) -> std::result::Result<DistArg, String> {
    match s {
        "uniform" => Ok(DistArg::Uniform),
        "zipf" => Ok(DistArg::Zipf),
        _ => match s.strip_prefix("custom:") {
            Some(path) if !path.is_empty() => Ok(DistArg::Custom(PathBuf::from(path))),
            _ => Err("dist must be uniform, zipf or custom:<path>".to_string()),
        },
    }
}

fn open_output<'a>(
    out: &Option<PathBuf>,
    stdout: &'a mut dyn Write,
) -> Result<Box<dyn Write + 'a>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(stdout),
    })
}

/// Runs a parsed command, writing results to `stdout` (or `--out`).
pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Bound(args) => cmd_bound(args, stdout),
        Command::Curve(args) => cmd_curve(args, stdout),
        Command::Simulate(args) => cmd_simulate(args, stdout),
        Command::Invert(args) => cmd_invert(args, stdout),
        Command::Relevant(args) => cmd_relevant(args, stdout),
    }
}

fn cmd_bound(args: BoundArgs, stdout: &mut dyn Write) -> Result<()> {
    let estimate = match args.method {
        BoundMethod::Old => bounds::old_bound_estimate(args.m, args.bins, args.p)?,
        BoundMethod::Exact => bounds::ea_uniform(args.m, args.bins, args.p, DEFAULT_TRUNC_EPS)?,
        BoundMethod::Glb => {
            bounds::ea_g_lower_bound(args.m, args.bins, args.p, &GApproxParams::default())?
        }
    };
    writeln!(stdout, "{estimate}")?;
    Ok(())
}

fn cmd_curve(args: CurveArgs, stdout: &mut dyn Write) -> Result<()> {
    let grid = args.grid.resolve();
    let series = simulator::theoretical_curves(args.bins, args.p, &grid, &args.series.0)?;
    let mut out = open_output(&args.output.out, stdout)?;
    match args.output.format {
        Format::Csv => export::write_records_csv(&mut out, &export::records_from_series(&series))?,
        Format::Json => export::write_series_json(&mut out, &series)?,
    }
    out.flush()?;
    Ok(())
}

fn cmd_simulate(args: SimulateArgs, stdout: &mut dyn Write) -> Result<()> {
    let distribution = args.dist.build(args.bins.map(|b| b as usize))?;
    let label = distribution.kind().to_string();
    let config = SimulationConfig {
        distribution,
        majority_prob: args.p,
        m_grid: args.grid.resolve(),
        repetitions: args.reps,
        test_size: args.test_size,
        master_seed: args.seed,
    };
    let sim = Simulator::new(config)?;
    let points = sim.run();
    let meta = SimulationMetadata::new(sim.config(), label);
    let mut out = open_output(&args.output.out, stdout)?;
    match args.output.format {
        Format::Csv => export::write_simulation_csv(&mut out, &meta, &points)?,
        Format::Json => export::write_simulation_json(&mut out, &meta, &points)?,
    }
    out.flush()?;
    Ok(())
}

fn cmd_invert(args: InvertArgs, stdout: &mut dyn Write) -> Result<()> {
    let m = bounds::min_training_size(args.target, args.bins, args.p)?;
    writeln!(stdout, "{m}")?;
    Ok(())
}

fn cmd_relevant(args: RelevantArgs, stdout: &mut dyn Write) -> Result<()> {
    let dist = args.dist.build(args.bins.map(|b| b as usize))?;
    let exact = dist.expected_relevant_instances(args.m);
    writeln!(stdout, "exact {exact}")?;
    if dist.kind() == DistributionKind::Zipf {
        let approx = zipf_relevant_approx(args.m, dist.num_bins() as u64)?;
        writeln!(stdout, "approx {approx}")?;
        if exact > 0.0 {
            writeln!(stdout, "relative_gap {}", (approx - exact) / exact)?;
        }
    }
    Ok(())
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {e}");
            1
        }
    }
}
