use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mflab::activation::ActivationKind;
use mflab::error::{Error, Result};
use mflab::harness::commands::{self, CompareOptions, GenDataArgs, Metric, TrainConfig};
use mflab::harness::config::{PdeKindName, PdeRunParams};
use mflab::harness::{emit_report, run_experiment, Budget, ExperimentConfig, ReportEntry};

#[derive(Parser, Debug)]
#[command(name = "mflab", version, about = "Mean-field SGD laboratory")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Master seed (overrides the seed in a config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory, depending on the subcommand.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Wall-clock budget; long runs stop early and write a checkpoint.
    #[arg(long, global = true)]
    budget_seconds: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample the Gaussian-mixture classification data to CSV.
    GenData {
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        off_diag: Option<f64>,
        #[arg(long)]
        informative_dims: Option<usize>,
    },
    /// Train one network by one-pass SGD.
    TrainSgd {
        #[arg(long)]
        config: PathBuf,
    },
    /// Integrate the particle PDE.
    SimulatePde {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        config: PathBuf,
    },
    /// Tabulate the closed-form statics over a radius grid.
    EvalStatics {
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value = "piecewise")]
        activation: String,
        #[arg(long)]
        grid: PathBuf,
        /// Reference radius used for the interaction columns.
        #[arg(long, default_value_t = 1.0)]
        r1: f64,
    },
    /// Run the weight-independence table.
    HoeffdingSuite {
        #[arg(long)]
        config: PathBuf,
    },
    /// Distances between two samples.
    CompareDist {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value = "w2,bl,kl,l1")]
        metrics: String,
        /// Column to read from CSV inputs (defaults to `r`, else the first).
        #[arg(long)]
        column: Option<String>,
        #[arg(long, default_value_t = 50)]
        bins: usize,
    },
    /// Configured experiments.
    Experiment {
        #[command(subcommand)]
        action: ExperimentAction,
    },
    /// Build a markdown report with SVG figures from finished run directories.
    Report {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum ExperimentAction {
    Run { config: PathBuf },
}

fn require_out(out: &Option<PathBuf>) -> Result<&Path> {
    out.as_deref().ok_or_else(|| Error::config("--out is required for this subcommand"))
}

fn configure_threads() -> Result<()> {
    let Ok(text) = std::env::var("MFLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::config(format!("MFLAB_THREADS must be a positive integer, got `{text}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::config(format!("cannot configure thread pool: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    let g = &cli.global;
    let budget = match g.budget_seconds {
        Some(s) if !(s.is_finite() && s >= 0.0) => {
            return Err(Error::config(format!("--budget-seconds must be >= 0, got {s}")));
        }
        Some(s) => Budget::seconds(s),
        None => Budget::unlimited(),
    };
    match cli.command {
        Command::GenData { delta, dim, count, off_diag, informative_dims } => {
            let args = GenDataArgs {
                delta,
                dim,
                count,
                seed: g.seed.unwrap_or(0),
                off_diag,
                informative_dims,
            };
            commands::gen_data(&args, require_out(&g.out)?)
        }
        Command::TrainSgd { config } => {
            let out = require_out(&g.out)?;
            let mut cfg = TrainConfig::from_value(commands::read_config_value(&config)?)?;
            if g.seed.is_some() {
                cfg.seed = g.seed;
            }
            commands::train_sgd(&cfg, 0, out)
        }
        Command::SimulatePde { kind, config } => {
            let out = require_out(&g.out)?;
            let kind = PdeKindName::parse(&kind)?;
            let mut p = PdeRunParams::from_value(commands::read_config_value(&config)?)?;
            if let Some(s) = g.seed {
                p.seed = s;
            }
            let outcome = commands::simulate_pde(kind, &p, out, budget)?;
            if outcome.trajectory.interrupted {
                eprintln!("budget exhausted after {} steps; partial trajectory written", outcome.trajectory.steps_taken);
            }
            Ok(())
        }
        Command::EvalStatics { delta, activation, grid, r1 } => {
            let out = require_out(&g.out)?;
            let act = ActivationKind::from_name(&activation).map_err(|e| Error::config(e.to_string()))?;
            let radii = commands::read_values(&grid, None)?;
            commands::eval_statics(delta, &act, &radii, r1, out)
        }
        Command::HoeffdingSuite { config } => {
            let out = require_out(&g.out)?;
            let rec = commands::hoeffding_suite(&config, g.seed, out, budget)?;
            print_metrics(&rec.metrics);
            Ok(())
        }
        Command::CompareDist { a, b, metrics, column, bins } => {
            let out = require_out(&g.out)?;
            let metrics = Metric::parse_list(&metrics)?;
            let xa = commands::read_values(&a, column.as_deref())?;
            let xb = commands::read_values(&b, column.as_deref())?;
            let opts = CompareOptions { bins, ..CompareOptions::default() };
            let t = commands::compare_dist(&xa, &xb, &metrics, &opts)?;
            if let Some(parent) = out.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(out, t.to_csv())?;
            Ok(())
        }
        Command::Experiment { action: ExperimentAction::Run { config } } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = g.seed {
                cfg.seed = s;
            }
            let out = match (&g.out, &cfg.output_dir) {
                (Some(o), _) => o.clone(),
                (None, Some(d)) => PathBuf::from(d),
                (None, None) => return Err(Error::config("no output directory: pass --out or set output_dir")),
            };
            let rec = run_experiment(&cfg, &out, budget)?;
            print_metrics(&rec.metrics);
            if rec.interrupted {
                eprintln!("budget exhausted; checkpoint written to {}", out.display());
            }
            Ok(())
        }
        Command::Report { runs } => {
            let out = require_out(&g.out)?;
            let entries = runs.iter().map(|d| ReportEntry::load(d)).collect::<Result<Vec<_>>>()?;
            let path = emit_report(&entries, out)?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

fn print_metrics(metrics: &std::collections::BTreeMap<String, f64>) {
    for (k, v) in metrics {
        println!("{k}\t{v}");
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() {
                2
            } else if e.is_numeric() {
                3
            } else {
                1
            })
        }
    }
}
