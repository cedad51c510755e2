use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use uaris_core::experiment::{emit_ellipsoid_outputs, emit_outputs, run_ellipsoid_study, run_experiment, ExperimentConfig, RunMeta};
use uaris_core::Error;

#[derive(Parser)]
#[command(name = "uaris", version, about = "UARIS-assisted underwater downlink and location-privacy simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo sweep and write results.csv, plot.gp and run.meta.
    Run(RunArgs),
    /// Run the ellipsoid study and write ellipsoids.csv, estimates.csv, ellipsoid.gp and run.meta.
    Ellipsoid(RunArgs),
    /// Parse a configuration and check it without running anything.
    Validate {
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// Root seed; trial t uses seed + t.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(Error),
    Runtime(Error),
}

impl Failure {
    fn exit_code(&self) -> ExitCode {
        match self {
            Failure::Config(_) => ExitCode::from(1),
            Failure::Runtime(_) => ExitCode::from(2),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } => Failure::Config(e),
            other => Failure::Runtime(other),
        }
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, Failure> {
    ExperimentConfig::load(path).map_err(Failure::Config)
}

fn apply(cfg: &mut ExperimentConfig, args: &RunArgs) -> Result<(), Failure> {
    if let Some(s) = args.seed {
        cfg.root_seed = s;
    }
    if let Some(t) = args.trials {
        if t == 0 {
            return Err(Failure::Config(Error::Config { line: 0, message: "--trials must be at least 1".into() }));
        }
        cfg.trials = t;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if let Some(o) = &args.out {
        cfg.output_dir = o.clone();
    }
    Ok(())
}

fn meta(cfg: &ExperimentConfig) -> RunMeta {
    RunMeta { config: cfg.render(), root_seed: cfg.root_seed, sweep_variable: cfg.sweep_variable.name().to_string() }
}

fn run(args: &RunArgs) -> Result<(), Failure> {
    let mut cfg = load(&args.config)?;
    apply(&mut cfg, args)?;
    let result = run_experiment(&cfg)?;
    for r in &result.records {
        let failed: usize = r.failures.values().sum();
        println!(
            "{} = {:<8} {}  sum_rate {:.4} +- {:.4}  rms_miss {:.4} +- {:.4}  used {}  failed {}",
            cfg.sweep_variable.name(),
            r.sweep_value,
            r.variant.label(),
            r.mean_sum_rate,
            r.stderr_sum_rate,
            r.rms_miss_distance,
            r.stderr_rms_miss,
            r.trials_used,
            failed
        );
    }
    emit_outputs(&result.records, &cfg.output_dir, &meta(&cfg))?;
    println!("wrote {}", cfg.output_dir.display());
    Ok(())
}

fn ellipsoid(args: &RunArgs) -> Result<(), Failure> {
    let mut cfg = load(&args.config)?;
    apply(&mut cfg, args)?;
    let study = run_ellipsoid_study(&cfg)?;
    for v in &study.variants {
        println!(
            "{}  position_bound {:.4e}  coverage {:.3} of {} estimates{}",
            v.variant.label(),
            v.position_bound,
            v.coverage,
            v.estimates.len(),
            if v.ill_conditioned { "  (ill-conditioned information)" } else { "" }
        );
    }
    emit_ellipsoid_outputs(&study, &cfg.output_dir, &meta(&cfg))?;
    println!("wrote {}", cfg.output_dir.display());
    Ok(())
}

fn validate(path: &Path) -> Result<(), Failure> {
    let cfg = load(path)?;
    let jobs = cfg.sweep_values.len() * cfg.variants.len() * cfg.trials;
    println!(
        "ok: sweep {} over {} value(s), {} variant(s), {} trial(s), {} job(s)",
        cfg.sweep_variable.name(),
        cfg.sweep_values.len(),
        cfg.variants.len(),
        cfg.trials,
        jobs
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Run(a) => run(a),
        Command::Ellipsoid(a) => ellipsoid(a),
        Command::Validate { config } => validate(config),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(e) => eprintln!("error: {e}"),
                Failure::Runtime(e) => eprintln!("runtime failure: {e}"),
            }
            f.exit_code()
        }
    }
}
