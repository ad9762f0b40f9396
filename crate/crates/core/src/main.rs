use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chsh_locality::harness::{
    emit_report, run_scenario, self_test, Overrides, ReportFormat, Scenario, ScenarioConfig,
};
use chsh_locality::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_MODEL_VIOLATION: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

#[derive(Parser)]
#[command(name = "chsh-locality", version, about = "CHSH, fixed-POVM and local-model scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its report.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        trials: Option<i64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "json")]
        format: String,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the available scenarios.
    ListScenarios,
    /// Run the fast invariant checks.
    SelfTest,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config { .. } => EXIT_CONFIG,
        Error::ModelViolation { .. } => EXIT_MODEL_VIOLATION,
        _ => EXIT_NUMERICAL,
    }
}

fn run(
    config: PathBuf,
    overrides: Overrides,
    format: &str,
    out: Option<PathBuf>,
) -> Result<(), (u8, String)> {
    let format: ReportFormat = format
        .parse()
        .map_err(|e: String| (EXIT_CONFIG, format!("config error in `--format`: {e}")))?;
    let cfg = ScenarioConfig::from_file(&config, &overrides)
        .map_err(|e| (exit_code_for(&e), e.to_string()))?;
    let report = run_scenario(&cfg).map_err(|e| (exit_code_for(&e), e.to_string()))?;
    let bytes = emit_report(&report, format);
    match out {
        Some(path) => std::fs::write(&path, &bytes).map_err(|e| {
            (
                EXIT_CONFIG,
                format!("config error in `--out`: cannot write {}: {e}", path.display()),
            )
        }),
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| (EXIT_NUMERICAL, format!("cannot write to stdout: {e}"))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            scenario,
            trials,
            seed,
            format,
            out,
        } => {
            let overrides = Overrides {
                scenario,
                trials,
                seed,
            };
            match run(config, overrides, &format, out) {
                Ok(()) => ExitCode::SUCCESS,
                Err((code, message)) => {
                    eprintln!("error: {message}");
                    ExitCode::from(code)
                }
            }
        }
        Command::ListScenarios => {
            for s in Scenario::ALL {
                println!("{:<18} {}", s.name(), s.description());
            }
            ExitCode::SUCCESS
        }
        Command::SelfTest => {
            let checks = self_test();
            let mut failed = 0;
            for c in &checks {
                println!("[{}] {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                if !c.passed {
                    failed += 1;
                }
            }
            if failed > 0 {
                eprintln!("{failed} of {} checks failed", checks.len());
                ExitCode::from(EXIT_NUMERICAL)
            } else {
                ExitCode::SUCCESS
            }
        }
    }
}
