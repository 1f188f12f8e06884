use std::path::PathBuf;
use std::process::ExitCode;

use canguard::dataset::{resolve_data_dir, SynthConfig, DATA_DIR_ENV};
use canguard::ensemble::{default_members, WeightsMode};
use canguard::pipeline::{
    cmd_benchmark, cmd_ensemble, cmd_stats, cmd_synth, load_synth_config, parse_model, DataSource,
    FeatureSet, RunConfig,
};
use canguard::{Error, Result};
use clap::{Args, Parser, Subcommand};

/// CAN-bus intrusion detection: exploratory statistics, model benchmarks
/// and a voting ensemble over CICIoV2024-style decimal CSV logs.
#[derive(Parser, Debug)]
#[command(name = "canguard", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Class distributions, top IDs, byte means, payload histogram,
    /// correlations and duplicate counts.
    Stats(RunArgs),
    /// Every (feature set × model) cell: accuracy, macro-F1 and timing.
    Benchmark(RunArgs),
    /// Hard, soft and hybrid voting over the ensemble members.
    Ensemble(RunArgs),
    /// Write six synthetic decimal CSVs in the canonical layout.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
struct SourceArgs {
    /// Directory holding the six decimal CSVs. Falls back to the
    /// CANGUARD_DATA_DIR environment variable when no source flag is given.
    #[arg(long, conflicts_with_all = ["synth_config", "synthetic"])]
    data: Option<PathBuf>,
    /// JSON synthetic-data configuration to generate the input from.
    #[arg(long, conflicts_with = "synthetic")]
    synth_config: Option<PathBuf>,
    /// Generate the input with the built-in synthetic configuration.
    #[arg(long)]
    synthetic: bool,
    /// Multiply every synthetic class count by this factor.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 0.30)]
    test_fraction: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Comma-separated subset of ORIGINAL, PCA, LDA, ANOVA.
    #[arg(long, value_delimiter = ',')]
    feature_sets: Vec<String>,
    /// Comma-separated models, e.g. FOREST,TREE(entropy),SVM_RBF. For
    /// `ensemble` these replace the default members.
    #[arg(long, value_delimiter = ',')]
    models: Vec<String>,
    /// Soft-vote weights: uniform or validation-f1.
    #[arg(long, default_value = "uniform")]
    weights: String,
    /// Worker threads for benchmark cells.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    synth_config: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "data")]
    out: PathBuf,
}

fn synth_config(path: Option<&PathBuf>, scale: f64) -> Result<SynthConfig> {
    if !(scale.is_finite() && scale >= 0.0) {
        return Err(Error::Argument(format!("scale {scale} must be finite and >= 0")));
    }
    let cfg = match path {
        Some(p) => load_synth_config(p)?,
        None => SynthConfig::default(),
    };
    Ok(if scale == 1.0 { cfg } else { cfg.scaled(scale) })
}

fn source(args: &SourceArgs) -> Result<DataSource> {
    if let Some(dir) = &args.data {
        return Ok(DataSource::Directory(dir.clone()));
    }
    if args.synth_config.is_some() || args.synthetic {
        return Ok(DataSource::Synthetic(synth_config(args.synth_config.as_ref(), args.scale)?));
    }
    if let Some(dir) = resolve_data_dir(None) {
        return Ok(DataSource::Directory(dir));
    }
    Err(Error::Argument(format!(
        "no input: pass --data <dir>, set {DATA_DIR_ENV}, or use --synth-config <file> / --synthetic"
    )))
}

fn run_config(args: &RunArgs, ensemble: bool) -> Result<RunConfig> {
    let mut cfg = RunConfig::new(source(&args.source)?, args.seed, &args.out);
    cfg.test_fraction = args.test_fraction;
    cfg.jobs = args.jobs;
    cfg.weights_mode = args.weights.parse::<WeightsMode>()?;
    if !args.feature_sets.is_empty() {
        cfg.feature_sets = args
            .feature_sets
            .iter()
            .map(|s| s.parse::<FeatureSet>())
            .collect::<Result<_>>()?;
    }
    cfg.models = if !args.models.is_empty() {
        args.models
            .iter()
            .map(|m| parse_model(m, args.seed))
            .collect::<Result<_>>()?
    } else if ensemble {
        default_members(args.seed)
    } else {
        cfg.models
    };
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Stats(args) => {
            let cfg = run_config(&args, false)?;
            for path in cmd_stats(&cfg)? {
                println!("{}", path.display());
            }
        }
        Command::Benchmark(args) => {
            let cfg = run_config(&args, false)?;
            let report = cmd_benchmark(&cfg)?;
            print!("{}", report.timed_csv());
        }
        Command::Ensemble(args) => {
            let cfg = run_config(&args, true)?;
            let report = cmd_ensemble(&cfg)?;
            print!("{}", report.to_text());
        }
        Command::Synth(args) => {
            let cfg = synth_config(args.synth_config.as_ref(), args.scale)?;
            for path in cmd_synth(&cfg, args.seed, &args.out)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            log::debug!("{e:?}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
