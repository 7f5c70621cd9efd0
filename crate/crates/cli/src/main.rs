//! `conley-games` command line: game analysis, Morse graphs, Conley
//! indices, ε-Nash region topology and trajectory simulation.

mod analyze;
mod eps;
mod morse;
mod report;
mod setup;
mod simulate;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use report::CliResult;

#[derive(Debug, Parser)]
#[command(name = "conley-games", version = env!("CONLEY_GAMES_VERSION"), about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for `report.json` and exported files.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Print the report as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Equilibria, degeneracy, deficit samples and weak dominance of a game.
    AnalyzeGame(analyze::AnalyzeArgs),
    /// Transition graph and Morse graph of a field on a cubical grid.
    Morse(morse::MorseArgs),
    /// Conley indices of recurrent components or an attractor–repeller split.
    ConleyIndex(morse::ConleyArgs),
    /// Topology of the ε-Nash region on a cubical grid.
    EpsNe(eps::EpsArgs),
    /// Integrate a field (or iterate a map) and write the trajectory as CSV.
    Simulate(simulate::SimulateArgs),
}

fn run(cli: &Cli) -> CliResult<String> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(report::usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(report::usage)?;
    }
    let rep = match &cli.cmd {
        Cmd::AnalyzeGame(a) => analyze::run(a, cli.seed)?,
        Cmd::Morse(a) => morse::run_morse(a, cli.seed)?,
        Cmd::ConleyIndex(a) => morse::run_conley(a, cli.seed)?,
        Cmd::EpsNe(a) => eps::run(a, cli.seed)?,
        Cmd::Simulate(a) => {
            let rep = simulate::run(a)?;
            // without a report request the trajectory itself is the output
            if cli.out.is_none() && !cli.json {
                return Ok(rep.file_contents("trajectory.csv").unwrap_or_default().to_string());
            }
            rep
        }
    };
    rep.emit(cli.out.as_ref(), cli.json)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => {
            let mut out = std::io::stdout().lock();
            if out.write_all(text.as_bytes()).and_then(|_| out.flush()).is_err() {
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
