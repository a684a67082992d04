//! Argument parsing and subcommand dispatch for the `blueprint` binary.
//!
//! Exit codes: 0 when every record succeeded, 2 when some records failed
//! (see the `.errors.jsonl` sidecar next to the output), 1 on a fatal
//! configuration or I/O error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{ArgGroup, Parser, Subcommand};

use crate::commands::{self, ControlArgs, PlanEdits, Transform};
use crate::{Outcome, RunConfig, Runner};
use blueprint_core::control::PromptVariant;
use blueprint_core::formats::ParseMode;

#[derive(Parser, Debug)]
#[command(name = "blueprint", version, about = "Question-answer blueprints for summarization corpora")]
struct Cli {
    /// TOML config with sections per stage.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (default: config, else available cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Seed for random blueprint ordering.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Serve every model role from a JSON fixture file instead of HTTP.
    #[arg(long, global = true)]
    mock_fixtures: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

fn variant(s: &str) -> Result<PromptVariant, String> {
    PromptVariant::from_str(s).map_err(|e| e.to_string())
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fill in blueprints for a corpus.
    Annotate {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Write model targets for annotated records.
    Serialize {
        input: PathBuf,
        #[arg(long, value_parser = variant)]
        variant: PromptVariant,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Parse model decodes back into blueprints and summaries.
    Parse {
        input: PathBuf,
        #[arg(long, value_parser = variant)]
        variant: PromptVariant,
        #[arg(short, long)]
        output: PathBuf,
        /// Reject malformed plans instead of flagging them.
        #[arg(long)]
        strict: bool,
    },
    /// Transform predicted plans and write regeneration prompts.
    #[command(group(ArgGroup::new("transform").required(true).args(["drop", "q1", "edit"])))]
    Control {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Drop pairs the input cannot answer.
        #[arg(long)]
        drop: bool,
        /// Keep one pair per summary sentence.
        #[arg(long)]
        q1: bool,
        /// Replace plans with those in a JSON file.
        #[arg(long, value_name = "PLAN_JSON")]
        edit: Option<PathBuf>,
        /// Layout of the regeneration prompts.
        #[arg(long, value_parser = variant, default_value = "e2e")]
        variant: PromptVariant,
        /// Corpus supplying sources for records without them.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Prompt output (default: <output stem>.prompts.jsonl).
        #[arg(long)]
        prompts: Option<PathBuf>,
    },
    /// Score predictions against references.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        references: PathBuf,
        /// Per-example reports (JSONL).
        #[arg(short, long)]
        output: PathBuf,
        /// Corpus means (default: aggregate.json beside the reports).
        #[arg(long)]
        aggregate: Option<PathBuf>,
    },
    /// Corpus statistics.
    Stats {
        input: PathBuf,
        /// Write JSON here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    path.parent().unwrap_or(Path::new("")).join(name)
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    }
    .with_overrides(cli.workers, cli.seed);
    config.validate()?;
    if let Command::Stats { input, output } = &cli.command {
        return commands::stats(input, output.as_deref());
    }
    let clients = config.clients(cli.mock_fixtures.as_deref())?;
    let runner = Runner::new(config, clients)?;
    match cli.command {
        Command::Annotate { input, output } => commands::annotate(&runner, &input, &output),
        Command::Serialize { input, variant, output } => commands::serialize(&runner, &input, &output, variant),
        Command::Parse {
            input,
            variant,
            output,
            strict,
        } => {
            let mode = if strict { ParseMode::Strict } else { ParseMode::Tolerant };
            commands::parse(&runner, &input, &output, variant, mode)
        }
        Command::Control {
            input,
            output,
            drop,
            q1,
            edit,
            variant,
            corpus,
            prompts,
        } => {
            let transform = match (drop, q1, edit) {
                (true, _, _) => Transform::Drop,
                (_, true, _) => Transform::Q1,
                (_, _, Some(path)) => Transform::Edit(PlanEdits::load(&path)?),
                _ => unreachable!("clap requires one transform"),
            };
            let prompts = prompts.unwrap_or_else(|| output.with_extension("prompts.jsonl"));
            let args = ControlArgs {
                transform,
                variant,
                corpus: corpus.as_deref(),
                prompts: &prompts,
            };
            commands::control(&runner, &input, &output, &args)
        }
        Command::Evaluate {
            predictions,
            references,
            output,
            aggregate,
        } => {
            let aggregate = aggregate.unwrap_or_else(|| sibling(&output, "aggregate.json"));
            commands::evaluate(&runner, &predictions, &references, &output, &aggregate)
        }
        Command::Stats { .. } => unreachable!(),
    }
}

/// Run the command line given by `args` (program name first) and return
/// the process exit code.
pub fn run_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let _ = e.print();
            return 1;
        }
    };
    match run(cli) {
        Ok(o) if o.failed == 0 => {
            log::info!("{} record(s) written", o.written);
            0
        }
        Ok(o) => {
            eprintln!("{} record(s) written, {} failed (see the .errors.jsonl sidecar)", o.written, o.failed);
            2
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
