use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gaplap_cli::{cmd_eval, cmd_parse, cmd_selfcheck, cmd_synth, cmd_train, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "gaplap", about = "Semi-supervised graph-based projective dependency parsing", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a parser from a config file and write the best-dev checkpoint.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Override the config file's mode (gap|lap|crf-supervised).
        #[arg(long)]
        mode: Option<String>,
        /// Override the config file's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse a CoNLL-U file and print it with the HEAD column filled.
    Parse {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
    /// Evaluate a checkpoint against gold trees (prints UAS).
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// Exclude PUNCT tokens from scoring.
        #[arg(long)]
        ignore_punct: bool,
        /// Also print one attachment-score line per sentence.
        #[arg(long)]
        per_sentence: bool,
    },
    /// Verify the chart engine against brute-force enumeration.
    Selfcheck {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long = "max-len", default_value_t = 7)]
        max_len: usize,
        #[arg(long, default_value_t = 12345)]
        seed: u64,
    },
    /// Generate a synthetic projective treebank (test tooling).
    Synth {
        #[arg(long)]
        sentences: usize,
        #[arg(long)]
        vocab: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        min_words: usize,
        #[arg(long, default_value_t = 8)]
        max_words: usize,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train { config, mode, seed } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", config.display())))?;
            let run_config = RunConfig::parse(&text, mode.as_deref(), seed)?;
            cmd_train(&run_config)?;
            Ok(())
        }
        Command::Parse { model, input } => {
            let stdout = std::io::stdout();
            let mut out = std::io::BufWriter::new(stdout.lock());
            cmd_parse(&model, &input, &mut out)?;
            out.flush().map_err(|e| CliError::Config(format!("write failed: {e}")))
        }
        Command::Eval { model, gold, ignore_punct, per_sentence } => {
            let stdout = std::io::stdout();
            let mut out = std::io::BufWriter::new(stdout.lock());
            cmd_eval(&model, &gold, ignore_punct, per_sentence, &mut out)?;
            out.flush().map_err(|e| CliError::Config(format!("write failed: {e}")))
        }
        Command::Selfcheck { trials, max_len, seed } => {
            let stdout = std::io::stdout();
            let mut out = std::io::BufWriter::new(stdout.lock());
            cmd_selfcheck(trials, max_len, seed, &mut out)?;
            out.flush().map_err(|e| CliError::Config(format!("write failed: {e}")))
        }
        Command::Synth { sentences, vocab, out, seed, min_words, max_words } => {
            cmd_synth(sentences, vocab, &out, seed, min_words, max_words)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
