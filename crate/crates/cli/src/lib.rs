//! Library surface behind the `glv-surgery` binary: argument/config
//! resolution, file formats, and command execution.

pub mod commands;
pub mod config;
pub mod io;

use clap::Parser;

use commands::CmdError;
use config::{Cli, Command};

/// Run the CLI against parsed arguments. Returns the written paths.
pub fn run(cli: &Cli) -> Result<Vec<std::path::PathBuf>, CmdError> {
    let file = config::load_file_config(cli.config.as_deref())
        .map_err(|e| CmdError::Validation(e.to_string()))?;
    let validation = |e: config::ConfigError| CmdError::Validation(e.to_string());
    match &cli.command {
        Command::Simulate(args) => {
            commands::simulate(&config::resolve_simulate(args, &file).map_err(validation)?)
        }
        Command::Classify(args) => {
            commands::classify_cmd(&config::resolve_classify(args, &file).map_err(validation)?)
        }
        Command::FixedPoints(args) => commands::fixed_points_cmd(
            &config::resolve_fixed_points(args, &file).map_err(validation)?,
        ),
        Command::Sweep(args) => {
            commands::sweep_cmd(&config::resolve_sweep(args, &file).map_err(validation)?)
        }
        Command::Morph(args) => {
            commands::morph_cmd(&config::resolve_morph(args, &file).map_err(validation)?)
        }
        Command::Figures(args) => {
            commands::figures_cmd(&config::resolve_figures(args, &file).map_err(validation)?)
        }
    }
}

/// Parse argv and run; returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
