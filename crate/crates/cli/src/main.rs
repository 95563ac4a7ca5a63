use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use coreg_cli::commands::{self, SimulateArgs, TraceFormat};

/// Cooperative output regulation with an adaptive distributed observer.
///
/// Exit codes: 0 success, 1 assumption or convergence failure, 2 input
/// error, 3 I/O error.
#[derive(Parser)]
#[command(name = "coreg", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every assumption check and report admissible gain intervals.
    Check {
        scenario: PathBuf,
        /// Also write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print admissible gain intervals and automatic gain choices as JSON.
    Gains { scenario: PathBuf },
    /// Simulate a scenario and write its trace.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write an SVG chart of tracking and estimation errors.
        #[arg(long)]
        plot: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, value_enum, default_value = "csv")]
        format: TraceFormat,
    },
    /// Regenerate the four-follower worked example: scenario, reports,
    /// traces, figure data and plots.
    ReproducePaper {
        #[arg(long, default_value = "reproduction")]
        outdir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    let result = match &cli.command {
        Command::Check { scenario, out } => commands::check(scenario, out.as_deref(), &mut stdout),
        Command::Gains { scenario } => commands::gains(scenario, &mut stdout),
        Command::Simulate {
            scenario,
            out,
            plot,
            seed,
            horizon,
            format,
        } => commands::simulate(
            &SimulateArgs {
                scenario,
                out,
                plot: plot.as_deref(),
                seed: *seed,
                horizon: *horizon,
                format: *format,
            },
            &mut stdout,
        ),
        Command::ReproducePaper { outdir } => commands::reproduce_paper(outdir, &mut stdout),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
