use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sardonics::harness::{
    cmd_adapt, cmd_compare, cmd_generate, cmd_run, cmd_verify, ExperimentConfig, HarnessError, ModelSpec,
    Overrides, RunReport, VerifyLevel,
};

#[derive(Parser)]
#[command(name = "sardonics", version, about = "Self-avoiding-walk samplers for Ising-type models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Replaces the configured seed list; repeat for several seeds.
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    max_lag: Option<usize>,
    #[arg(long)]
    burn_in: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    Quick,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Write the `[model]` of a config as a model file.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every configured sampler for every seed.
    Run(Common),
    /// Adapt kernel parameters and write a policy per seed.
    Adapt(Common),
    /// Run two or more samplers and tabulate their mean autocorrelation.
    Compare(Common),
    /// Run the correctness suites.
    Verify {
        #[arg(long, value_enum, default_value = "quick")]
        level: Level,
    },
}

fn load(common: &Common) -> Result<ExperimentConfig, HarnessError> {
    let text = std::fs::read_to_string(&common.config).map_err(|source| HarnessError::File {
        path: common.config.clone(),
        source,
    })?;
    let mut config = ExperimentConfig::from_toml(&text)?;
    config.apply(&Overrides {
        seeds: common.seeds.clone(),
        steps: common.steps,
        out: common.out.clone(),
        stride: common.stride,
        max_lag: common.max_lag,
        burn_in: common.burn_in,
    })?;
    Ok(config)
}

fn print_report(report: &RunReport) {
    for s in &report.samplers {
        let frozen = s.seeds.iter().filter(|x| x.zero_variance).count();
        println!("{}: mean ACF area {:.4} over {} seeds ({} frozen)", s.name, s.mean_area, s.seeds.len(), frozen);
    }
}

fn run(cli: Cli) -> Result<bool, HarnessError> {
    let cwd = Path::new(".");
    match cli.command {
        Command::Generate { config, out } => {
            #[derive(serde::Deserialize)]
            struct ModelOnly {
                model: ModelSpec,
            }
            let text = std::fs::read_to_string(&config).map_err(|source| HarnessError::File {
                path: config.clone(),
                source,
            })?;
            let table: toml::Table = toml::from_str(&text)?;
            let spec: ModelOnly = table.try_into()?;
            let model = cmd_generate(&spec.model, cwd, &out)?;
            println!("wrote {} spins, {} couplings to {}", model.num_spins(), model.edges().len(), out.display());
        }
        Command::Run(common) => print_report(&cmd_run(&load(&common)?, cwd)?),
        Command::Compare(common) => print_report(&cmd_compare(&load(&common)?, cwd)?),
        Command::Adapt(common) => {
            for art in cmd_adapt(&load(&common)?, cwd)? {
                let best = art.result.best();
                println!(
                    "seed {}: best reward {:.4} at iteration {} with {:?}",
                    art.seed, best.reward, best.iteration, best.params
                );
            }
        }
        Command::Verify { level } => {
            let level = match level {
                Level::Quick => VerifyLevel::Quick,
                Level::Full => VerifyLevel::Full,
            };
            let report = cmd_verify(level)?;
            print!("{report}");
            return Ok(report.passed());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
