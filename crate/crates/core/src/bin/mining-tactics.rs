use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mining_tactics::report;
use mining_tactics::scenario::{Overrides, RunError, ScenarioFile};

#[derive(Parser)]
#[command(
    name = "mining-tactics",
    version,
    about = "Shutdown and Towing mining-tactic scenarios"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and print its report.
    Run {
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        /// Write the machine-readable report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        /// Bound each retarget step to a factor of 4.
        #[arg(long)]
        clamp: bool,
        /// Count expected retention of the contested blocks.
        #[arg(long)]
        at_risk: bool,
    },
    /// Print the normalized scenario file.
    Echo { config: PathBuf },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Csv,
    Json,
}

fn run(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Echo { config } => {
            let file = ScenarioFile::load(&config)?.normalized();
            file.validate()?;
            println!("{}", file.to_json());
        }
        Command::Run {
            config,
            format,
            out,
            seed,
            trials,
            clamp,
            at_risk,
        } => {
            let overrides = Overrides {
                seed,
                trials,
                clamp,
                at_risk,
            };
            let file = ScenarioFile::load(&config)?.apply(&overrides)?;
            let result = file.validate()?.run()?;
            let table = report::render_table(&result);
            let machine = match format {
                Format::Table => None,
                Format::Csv => Some(report::to_csv(&result)),
                Format::Json => Some(report::to_json(&result)),
            };
            match (machine, out) {
                (Some(text), Some(path)) => {
                    report::write_file(&path, &text)?;
                    print!("{table}");
                }
                (Some(text), None) => print!("{text}"),
                (None, Some(path)) => {
                    report::write_file(&path, &table)?;
                    print!("{table}");
                }
                (None, None) => print!("{table}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
