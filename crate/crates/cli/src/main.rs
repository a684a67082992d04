//! `blueprint` command-line entry point.

use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    ExitCode::from(blueprint_cli::app::run_args(std::env::args_os()))
}
