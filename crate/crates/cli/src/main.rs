use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fekete_cli::{compare, run_config, CliError, Overrides};
use fekete_core::socp::ConicProgram;
use fekete_core::solver::{Backend, SolverOptions};

#[derive(Parser)]
#[command(name = "fekete", version, about = "Kernel interpolation point sets from relaxed D-optimal designs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a JSON configuration.
    Run {
        config: PathBuf,
        /// `builtin` or `external:<cmd>`; overrides FEKETE_BACKEND and the config.
        #[arg(long)]
        backend: Option<String>,
        /// Solver tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Output directory, replacing the one in the config.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also write the cone program of each n as socp_n<n>.json.
        #[arg(long)]
        dump_socp: bool,
    },
    /// Join the metrics of finished runs into one CSV table.
    Compare {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        /// Write the table here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Solve a cone program stored as JSON and write the result as JSON.
    Solve {
        program: PathBuf,
        /// Result file; stdout when omitted.
        result: Option<PathBuf>,
        #[arg(long, default_value = "builtin")]
        backend: String,
        #[arg(long)]
        tol: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Run {
            config,
            backend,
            tol,
            output,
            dump_socp,
        } => {
            let overrides = Overrides {
                backend,
                tol,
                output,
                dump_socp,
            };
            let report = run_config(&config, &overrides)?;
            Ok(report.exit_code() as u8)
        }
        Command::Compare { dirs, output } => {
            let table = compare(&dirs)?;
            match output {
                Some(path) => {
                    let file = std::fs::File::create(&path).map_err(|e| CliError::Io { path: path.clone(), source: e })?;
                    table.write_csv(file).map_err(|e| CliError::Csv { path, source: e })?;
                }
                None => table
                    .write_csv(std::io::stdout().lock())
                    .map_err(|e| CliError::Csv { path: "<stdout>".into(), source: e })?,
            }
            Ok(0)
        }
        Command::Solve {
            program,
            result,
            backend,
            tol,
        } => {
            let text = std::fs::read_to_string(&program).map_err(|e| CliError::Io { path: program.clone(), source: e })?;
            let prog = ConicProgram::from_json(&text)?;
            let mut opts = SolverOptions::default();
            if let Some(t) = tol {
                opts.tol = t;
            }
            let solved = Backend::parse(&backend)?.solve(&prog, &opts)?;
            let json = serde_json::to_string_pretty(&solved).expect("solver results serialize");
            match result {
                Some(path) => std::fs::write(&path, json + "\n").map_err(|e| CliError::Io { path, source: e })?,
                None => {
                    let mut out = std::io::stdout().lock();
                    writeln!(out, "{json}").map_err(|e| CliError::Io { path: "<stdout>".into(), source: e })?;
                }
            }
            Ok(0)
        }
    }
}
