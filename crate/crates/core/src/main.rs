use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use jbesim::output::{write_outputs, write_summary, SUMMARY};
use jbesim::{run_with, Density, Error, Experiment, RunMetrics, RunOptions, Scheme, SimConfig};

/// Platoon beaconing simulator.
#[derive(Debug, Parser)]
#[command(name = "jbesim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write its CSVs.
    Run(RunArgs),
    /// Run both schemes over the scenarios and a range of seeds.
    Matrix(MatrixArgs),
    /// Parse and check a config, print the effective settings.
    ValidateConfig(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    density: Option<Density>,
    /// Simulated seconds.
    #[arg(long)]
    duration: Option<f64>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    scenario: Experiment,
    #[arg(long)]
    scheme: Scheme,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (defaults to $JBESIM_OUT, then ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write channel.csv with every per-receiver outcome.
    #[arg(long)]
    channel_trace: bool,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
struct MatrixArgs {
    /// Seeds 1..=N.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    seeds: u64,
    /// Restrict to these scenarios (repeatable); default all three.
    #[arg(long)]
    scenario: Vec<Experiment>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Parallel runs; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    common: CommonArgs,
}

fn load(common: &CommonArgs) -> jbesim::Result<SimConfig> {
    let mut cfg = match &common.config {
        Some(path) => SimConfig::load(path)?,
        None => SimConfig::default(),
    };
    if let Some(d) = common.density {
        cfg.scenario.apply_density(d);
    }
    if let Some(d) = common.duration {
        cfg.scenario.duration = d;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("JBESIM_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn report(m: &RunMetrics) {
    println!(
        "{} {} seed {}: min_distance {:.3} m, crash {}, avg_cbr {:.4}, protocol_failures {}",
        m.scheme,
        m.scenario,
        m.seed,
        m.global_min_distance,
        m.crashed(),
        m.avg_cbr,
        m.protocol_failures
    );
}

fn cmd_run(args: RunArgs) -> jbesim::Result<()> {
    let mut cfg = load(&args.common)?;
    if let Some(seed) = args.seed {
        cfg.scenario.seed = seed;
    }
    let options = RunOptions {
        channel_trace: args.channel_trace,
    };
    let m = run_with(&cfg, args.scenario, args.scheme, options)?;
    let dir = out_dir(args.out);
    write_outputs(&m, &dir)?;
    report(&m);
    Ok(())
}

fn cmd_matrix(args: MatrixArgs) -> jbesim::Result<()> {
    let cfg = load(&args.common)?;
    let scenarios = if args.scenario.is_empty() {
        Experiment::MANOEUVRES.to_vec()
    } else {
        args.scenario.clone()
    };
    let dir = out_dir(args.out);
    let mut jobs = Vec::new();
    for scheme in [Scheme::Jb, Scheme::Jbe] {
        for &scenario in &scenarios {
            for seed in 1..=args.seeds {
                jobs.push((scheme, scenario, seed));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config {
            key: "jobs".into(),
            message: e.to_string(),
        })?;
    let runs: Vec<RunMetrics> = pool.install(|| {
        jobs.par_iter()
            .map(|&(scheme, scenario, seed)| {
                let mut cfg = cfg.clone();
                cfg.scenario.seed = seed;
                let m = run_with(&cfg, scenario, scheme, RunOptions::default())?;
                let sub = dir.join(format!(
                    "{}_{}_seed{}",
                    scheme.name(),
                    scenario.name(),
                    seed
                ));
                write_outputs(&m, &sub)?;
                Ok(m)
            })
            .collect::<jbesim::Result<Vec<_>>>()
    })?;
    let refs: Vec<&RunMetrics> = runs.iter().collect();
    write_summary(&dir.join(SUMMARY), &refs)?;
    for m in &runs {
        report(m);
    }
    println!(
        "{} runs, summary in {}",
        runs.len(),
        dir.join(SUMMARY).display()
    );
    Ok(())
}

fn cmd_validate(common: CommonArgs) -> jbesim::Result<()> {
    let cfg = load(&common)?;
    print!("{}", cfg.describe());
    Ok(())
}

fn exit_for(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    if e.is_validation() {
        ExitCode::from(1)
    } else {
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Matrix(args) => cmd_matrix(args),
        Command::ValidateConfig(common) => cmd_validate(common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => exit_for(&e),
    }
}
