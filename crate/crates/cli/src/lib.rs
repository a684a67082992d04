//! Batch pipeline over JSONL corpora: blueprint annotation, target
//! serialization and parsing, plan control transforms, evaluation and
//! corpus statistics. The `blueprint` binary is a thin wrapper over
//! [`app::run_args`].

pub mod app;
pub mod commands;
pub mod config;
pub mod io;
pub mod records;

pub use commands::{Outcome, Runner};
pub use config::RunConfig;
