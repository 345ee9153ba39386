use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use twophoton::cli::{self, CommandOutput, OutputFormat, ScenarioConfig};
use twophoton::Error;

#[derive(Parser)]
#[command(
    name = "twophoton",
    version,
    about = "Frequency-shift sensing with time-resolved two-photon interference"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Delay densities of both event classes and the beat envelope.
    Density(Common),
    /// Fisher-information contribution of each delay.
    Contribution(Common),
    /// Resolving vs non-resolving Fisher information.
    FisherCompare(Common),
    /// Maximum-likelihood Monte-Carlo sweep against the Cramér-Rao bound.
    Montecarlo(Common),
    /// Draw a synthetic batch and write it as CSV.
    Sample(Common),
    /// Estimate the shift from a batch CSV.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Batch CSV produced by `sample`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON scenario file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (default 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Desk-scale Monte-Carlo preset (1000 repetitions).
    #[arg(long)]
    fast: bool,
    /// Monte-Carlo repetitions per sweep point.
    #[arg(long)]
    repetitions: Option<usize>,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn scenario(&self) -> Result<ScenarioConfig, Error> {
        let mut config = match &self.config {
            Some(path) => ScenarioConfig::load(path)?,
            None => ScenarioConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.sampler.seed = Some(seed);
        }
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        if let Some(format) = self.format {
            config.format = format;
        }
        if self.fast {
            config.fast = true;
            config.repetitions = Some(cli::FAST_REPETITIONS);
        }
        if let Some(r) = self.repetitions {
            config.repetitions = Some(r);
        }
        if let Some(t) = self.threads {
            config.threads = Some(t);
        }
        Ok(config)
    }
}

fn run(command: Command) -> Result<CommandOutput, Error> {
    match command {
        Command::Density(c) => cli::cmd_density(&c.scenario()?),
        Command::Contribution(c) => cli::cmd_contribution(&c.scenario()?),
        Command::FisherCompare(c) => cli::cmd_fisher_compare(&c.scenario()?),
        Command::Montecarlo(c) => cli::cmd_montecarlo(&c.scenario()?),
        Command::Sample(c) => cli::cmd_sample(&c.scenario()?),
        Command::Estimate { common, input } => {
            let mut config = common.scenario()?;
            if input.is_some() {
                config.input = input;
            }
            cli::cmd_estimate(&config)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(output) => {
            for file in &output.files {
                println!("{}", file.display());
            }
            if output.point_errors.is_empty() {
                ExitCode::SUCCESS
            } else {
                for e in &output.point_errors {
                    eprintln!("error: {e}");
                }
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
