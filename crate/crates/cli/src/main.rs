//! `sdph`: signed distance persistent homology from the command line.
//!
//! Every subcommand reads and writes plain files, so stages can be rerun
//! separately: `gen-shape`/`gen-grf` -> `sdf` -> `ph` -> `classify`/`plot`,
//! or all at once with `pipeline`.

mod commands;

use std::io::IsTerminal;
use std::process::ExitCode;

use clap::Parser;

use commands::Cli;

pub enum CliError {
    Input(String),
    Sdph(sdph::Error),
    Invariant(String),
}

impl From<sdph::Error> for CliError {
    fn from(e: sdph::Error) -> Self {
        CliError::Sdph(e)
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Invariant(_) => 4,
            CliError::Sdph(e) => match e.root() {
                sdph::Error::ForbiddenQuadrant(_) => 3,
                sdph::Error::ZeroCriticalValue(_) => 4,
                _ => 2,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Input(m) => m.clone(),
            CliError::Invariant(m) => format!("invariant violated: {m}"),
            CliError::Sdph(e) => e.to_string(),
        }
    }
}

pub fn styled(text: &str, ansi: &str) -> String {
    let plain = std::env::var_os("SDPH_NO_COLOR").is_some() || !std::io::stderr().is_terminal();
    if plain {
        text.to_string()
    } else {
        format!("\x1b[{ansi}m{text}\x1b[0m")
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| commands::run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("{} {}", styled("error:", "1;31"), e.message());
            ExitCode::from(e.code())
        }
        Err(_) => ExitCode::from(4),
    }
}
