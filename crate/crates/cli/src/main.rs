use std::process::ExitCode;

use clap::{CommandFactory, Parser};

mod args;
mod commands;
mod config;

use args::{Cli, Command};

fn main() -> ExitCode {
    let argv: Vec<_> = std::env::args_os().collect();
    let argv = match config::merge_config(argv, &Cli::command()) {
        Ok(a) => a,
        Err(e) => return fail(&e),
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Decode(a) => commands::decode::run_decode(&a),
        Command::Fuse(a) => commands::decode::run_fuse(&a),
        Command::Eval(a) => commands::eval::run(&a),
        Command::Synth(a) => commands::synth::run(&a),
        Command::Stats(a) => commands::stats::run(&a),
        Command::Losscheck(a) => commands::losscheck::run(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => fail(&e),
    }
}

fn fail(e: &sedbox::Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if e.is_io() { 2 } else { 1 })
}
