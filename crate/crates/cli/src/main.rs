#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod run;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = config::Cli::parse();
    match run::main(cli) {
        Ok(outcome) => ExitCode::from(if outcome.all_pass { 0 } else { 1 }),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
