use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use volpost::estimators::{estimate, EstimatorSettings};
use volpost::harness::{self, ExperimentConfig};
use volpost::likelihood::LikelihoodContext;
use volpost::posterior::{
    adjust, normal_reference, summarize, tempered_posterior_conjugate, tempered_posterior_mcmc, ChainConfig,
    PriorSpec,
};
use volpost::reference::{gibbs_full_joint, write_chain_csv, GibbsConfig};
use volpost::sim::{read_increments_csv, simulate_path, ModelSpec};
use volpost::{ReplicationSeed, Result, VolError};

#[derive(Parser)]
#[command(name = "volpost", version, about = "Tempered quasi-posteriors for Lévy volatility")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one sample path and write it as CSV.
    Simulate(SimulateArgs),
    /// Point estimates for a path CSV, printed as JSON.
    Estimate(EstimateArgs),
    /// Adjusted tempered posterior for a path CSV, printed as JSON.
    Posterior(PosteriorArgs),
    /// Run a Monte Carlo experiment.
    Experiment(ExperimentArgs),
    /// Density and interval tables for the first replications of an experiment.
    Plotdata(ExperimentArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Model JSON file.
    #[arg(long, conflicts_with = "preset")]
    model: Option<PathBuf>,
    /// Take the model of an experiment preset.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Replication index combined with the seed.
    #[arg(long, default_value_t = 0)]
    rep: u64,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    NoNoise,
    Noise,
}

#[derive(Args)]
struct EstimateArgs {
    /// Path CSV with `t` and `dY` columns.
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = RegimeArg::NoNoise)]
    regime: RegimeArg,
    /// Estimator settings JSON; overrides `--regime`.
    #[arg(long)]
    settings: Option<PathBuf>,
}

#[derive(Args)]
struct PosteriorArgs {
    #[command(flatten)]
    estimate: EstimateArgs,
    /// Prior JSON, e.g. {"family":"inverse_gamma","shape":1,"scale":1}.
    #[arg(long)]
    prior: Option<PathBuf>,
    /// Chain settings JSON for the Metropolis sampler.
    #[arg(long)]
    chain: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Report interval endpoints below zero as zero.
    #[arg(long)]
    clip_at_zero: bool,
    /// Also run the full-joint Gibbs sampler and write its chain here.
    #[arg(long)]
    dump_chain: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config JSON.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in design, see `--list-presets`.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    list_presets: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    /// Worker threads; 0 = all cores, 1 = sequential.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the simulated paths of the plotted replications.
    #[arg(long)]
    dump_paths: bool,
    /// Print the resolved config and exit.
    #[arg(long)]
    print_config: bool,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let model: ModelSpec = match (&args.model, &args.preset) {
        (Some(p), _) => read_json(p)?,
        (None, Some(name)) => ExperimentConfig::preset(name)?.model,
        (None, None) => return Err(VolError::Config("give --model or --preset".into())),
    };
    let path = simulate_path(&model, ReplicationSeed::new(args.seed, args.rep))?;
    match args.out {
        Some(p) => path.write_csv(File::create(p)?),
        None => path.write_csv(io::stdout().lock()),
    }
}

fn settings(args: &EstimateArgs) -> Result<EstimatorSettings> {
    match &args.settings {
        Some(p) => read_json(p),
        None => Ok(match args.regime {
            RegimeArg::NoNoise => EstimatorSettings::no_noise(),
            RegimeArg::Noise => EstimatorSettings::noise(),
        }),
    }
}

fn estimate_cmd(args: EstimateArgs) -> Result<()> {
    let (dy, dt) = read_increments_csv(File::open(&args.input)?)?;
    let report = estimate(&dy, dt, &settings(&args)?, None)?;
    print_json(&report)
}

fn posterior_cmd(args: PosteriorArgs) -> Result<()> {
    let (dy, dt) = read_increments_csv(File::open(&args.estimate.input)?)?;
    let settings = settings(&args.estimate)?;
    let report = estimate(&dy, dt, &settings, None)?;
    let prior: PriorSpec = match &args.prior {
        Some(p) => read_json(p)?,
        None => PriorSpec::InverseGamma { shape: 1.0, scale: 1.0 },
    };
    let chain: ChainConfig = match &args.chain {
        Some(p) => read_json(p)?,
        None => ChainConfig::default(),
    };
    let seed = ReplicationSeed::new(args.seed, 0);
    let ctx = LikelihoodContext::new(&dy, dt, report.noise_var, settings.bounds)?;
    let post = if report.noise_var == 0.0 && matches!(prior, PriorSpec::InverseGamma { .. }) {
        tempered_posterior_conjugate(&prior, &ctx, report.kappa)?
    } else {
        tempered_posterior_mcmc(&prior, &ctx, report.kappa, &chain, seed)?
    };
    let adjusted = adjust(&post, report.shift());
    let reference = normal_reference(report.theta_hat_clipped, report.reference_variance())?;
    let summary = summarize(&adjusted, Some(&reference), args.level, args.clip_at_zero)?;
    if let Some(path) = &args.dump_chain {
        let trajectory = gibbs_full_joint(&dy, dt, &GibbsConfig::default(), seed)?;
        write_chain_csv(&trajectory.rows, File::create(path)?)?;
    }
    print_json(&summary)
}

fn resolve_config(args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(p), _) => read_json(p)?,
        (None, Some(name)) => ExperimentConfig::preset(name)?,
        (None, None) => return Err(VolError::Config("give --config or --preset".into())),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(r) = args.reps {
        cfg.replications = r;
    }
    if let Some(j) = args.jobs {
        cfg.jobs = j;
    }
    if let Some(o) = &args.out {
        cfg.out = Some(o.clone());
    }
    Ok(cfg)
}

fn dump_paths(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    let paths = dir.join("paths");
    fs::create_dir_all(&paths)?;
    for rep in 0..cfg.replications.min(cfg.plot_replications) {
        let path = simulate_path(&cfg.model, ReplicationSeed::new(cfg.seed, rep as u64))?;
        path.write_csv(File::create(paths.join(format!("rep_{rep:04}.csv")))?)?;
    }
    Ok(())
}

/// Returns whether the failure budget was respected.
fn experiment_cmd(args: ExperimentArgs, plot_only: bool) -> Result<bool> {
    if args.list_presets {
        for p in harness::PRESETS {
            println!("{p}");
        }
        return Ok(true);
    }
    let mut cfg = resolve_config(&args)?;
    if plot_only {
        cfg.replications = cfg.replications.min(cfg.plot_replications);
    }
    if args.print_config {
        print_json(&cfg)?;
        return Ok(true);
    }
    let result = harness::run(&cfg)?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from(format!("out/{}", cfg.experiment.name())));
    if plot_only {
        fs::create_dir_all(&dir)?;
        let mut w = csv::Writer::from_path(dir.join("densities.csv"))?;
        for row in harness::emit_plot_data(&result.plots) {
            w.serialize(row)?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_path(dir.join("intervals.csv"))?;
        for row in harness::interval_table(&result.rows) {
            w.serialize(row)?;
        }
        w.flush()?;
    } else {
        harness::write_outputs(&result, &dir)?;
        print_json(&result.summary)?;
    }
    if args.dump_paths {
        dump_paths(&cfg, &dir)?;
    }
    Ok(!result.failure_exceeded())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Simulate(a) => simulate(a).map(|_| true),
        Command::Estimate(a) => estimate_cmd(a).map(|_| true),
        Command::Posterior(a) => posterior_cmd(a).map(|_| true),
        Command::Experiment(a) => experiment_cmd(a, false),
        Command::Plotdata(a) => experiment_cmd(a, true),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: more than 5% of replications failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
