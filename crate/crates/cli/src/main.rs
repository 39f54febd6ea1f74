use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hearsay_cli::commands::{self, RunArgs};

#[derive(Parser)]
#[command(name = "hearsay", version, about = "Auditable evidence acquisition for audio question answering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every question of a dataset and write one trace per question.
    Run {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Questions run concurrently.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        /// Skip invalid dataset lines instead of failing.
        #[arg(long)]
        lenient: bool,
        /// Keep questions whose trace already exists and imports cleanly.
        #[arg(long)]
        resume: bool,
        /// Frontend-only baseline: one answer call per question.
        #[arg(long)]
        direct: bool,
    },
    /// Score traces against the dataset's answer keys.
    Score {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Write per-question verdicts here (usable as a baseline file).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Agent vs baseline accuracy grouped by tool calls.
    Stratify {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Verdicts file written by `score` for the baseline run.
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Round, tool-usage and re-listening statistics.
    Stats {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Aggregate rubric judgments (JSONL) into per-question and mean scores.
    Rubric {
        #[arg(long)]
        judgments: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Export traces, an index and readable timelines.
    Audit {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            dataset,
            config,
            out_dir,
            parallel,
            lenient,
            resume,
            direct,
        } => commands::run(&RunArgs {
            dataset,
            config,
            out_dir,
            parallel,
            lenient,
            resume,
            direct,
        }),
        Command::Score { traces, dataset, out } => commands::score(&traces, &dataset, out.as_deref()),
        Command::Stratify {
            traces,
            dataset,
            baseline,
            json,
        } => commands::stratify(&traces, &dataset, &baseline, json),
        Command::Stats { traces, json } => commands::stats(&traces, json),
        Command::Rubric { judgments, json } => commands::rubric(&judgments, json),
        Command::Audit { traces, out_dir } => commands::audit(&traces, &out_dir),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
