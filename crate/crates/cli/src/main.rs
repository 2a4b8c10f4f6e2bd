use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ppir_cli::commands::{emit, to_json};
use ppir_cli::*;
use ppir_core::scenario::Mode;

#[derive(Parser)]
#[command(name = "ppir", version, about = "Pliable private information retrieval simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Single,
    Multi,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Single => Mode::Single,
            ModeArg::Multi => Mode::Multi,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one retrieval session and write its trace.
    Run {
        scenario: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Desired class; repeat once per user in multi mode.
        #[arg(long = "demand", required = true)]
        demands: Vec<usize>,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Run even when the precondition checks fail.
        #[arg(long)]
        force: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rates, theorem flags, non-repetition census and TV distances.
    Audit {
        scenario: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Seeds per demand choice.
        #[arg(long, default_value_t = DEFAULT_RUNS)]
        runs: u64,
        /// Base seed; defaults to the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form rates and theorem flags.
    Rates {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the bundled examples against known values.
    Selftest,
}

fn execute(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Run { scenario, mode, demands, seed, force, out } => {
            let (file, s) = read_scenario(&scenario)?;
            let opts = RunOptions { mode: mode.map(Into::into), demands, seed, force };
            let trace = cmd_run(&file, &s, &opts)?;
            emit(&to_json(&trace)?, out.as_deref())?;
        }
        Command::Audit { scenario, mode, runs, seed, out } => {
            let (file, s) = read_scenario(&scenario)?;
            let opts = AuditOptions { mode: mode.map(Into::into), runs: Some(runs), seed };
            emit(&to_json(&cmd_audit(&file, &s, &opts))?, out.as_deref())?;
        }
        Command::Rates { scenario, out } => {
            let (file, s) = read_scenario(&scenario)?;
            emit(&to_json(&cmd_rates(&file, &s))?, out.as_deref())?;
        }
        Command::Selftest => {
            let results = run_selftest(&Fixtures::embedded());
            for r in &results {
                println!("{}", r.line());
            }
            let failed = results.iter().filter(|r| !r.passed()).count();
            println!("{} fixtures, {failed} failed", results.len());
            return Ok(if failed == 0 { EXIT_OK } else { EXIT_FAILURE });
        }
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = execute(cli.command).unwrap_or_else(|e| {
        eprintln!("ppir: {e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
