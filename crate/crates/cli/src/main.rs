use clap::{Parser, Subcommand};
use qedk_cli::config::{self, ScenarioKind};
use qedk_cli::{output_dir, summary_lines, AppError, EXIT_CHECK_FAILED, EXIT_PASS, OUT_ENV};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qedk", version, about = "Mode kernels and consistency checks for fields in dispersive media")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write CSV series and JSON reports.
    Run {
        config: PathBuf,
        /// Output directory (default: scenario.output, then $QEDK_OUT).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run only the checks of a scenario; nothing is written.
    Check { config: PathBuf },
    /// Built-in scenario kinds.
    Examples {
        #[command(subcommand)]
        action: ExamplesAction,
    },
}

#[derive(Subcommand)]
enum ExamplesAction {
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("qedk: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(command: Command) -> Result<u8, AppError> {
    let outcome = match command {
        Command::Examples { action: ExamplesAction::List } => {
            for kind in ScenarioKind::ALL {
                println!("{:<12}{}", kind.name(), kind.summary());
            }
            return Ok(EXIT_PASS);
        }
        Command::Run { config, out } => {
            let cfg = config::load(&config)?;
            let env = std::env::var(OUT_ENV).ok();
            let dir = output_dir(&cfg, out.as_deref(), env.as_deref());
            let outcome = qedk_cli::run(&cfg, &dir)?;
            println!("wrote {}", dir.display());
            outcome
        }
        Command::Check { config } => qedk_cli::check(&config::load(&config)?)?,
    };
    for line in summary_lines(&outcome) {
        println!("{line}");
    }
    Ok(if outcome.pass() { EXIT_PASS } else { EXIT_CHECK_FAILED })
}
