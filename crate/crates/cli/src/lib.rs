//! Command implementations behind the `gaplap` binary.
//!
//! Exit-code contract: 0 ok, 2 configuration, 3 data, 4 numeric failure,
//! 5 self-check failure. Diagnostics go to stderr; stdout carries only
//! command output (parsed trees, evaluation reports, self-check report).

mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gaplap_core::chart;
use gaplap_core::checkpoint;
use gaplap_core::corpus::{self, Treebank};
use gaplap_core::encoder::EncoderError;
use gaplap_core::oracle;
use gaplap_core::synth::{self, SynthConfig};
use gaplap_core::train::{self, TrainError};
use gaplap_core::Mat;

pub use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Numeric(String),
    Selfcheck(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
            CliError::Selfcheck(_) => 5,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Data(m) | CliError::Numeric(m) | CliError::Selfcheck(m) => m,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self {
            CliError::Config(_) => "config error",
            CliError::Data(_) => "data error",
            CliError::Numeric(_) => "numeric error",
            CliError::Selfcheck(_) => "selfcheck failure",
        };
        write!(f, "{kind}: {}", self.message())
    }
}

impl From<TrainError> for CliError {
    fn from(err: TrainError) -> Self {
        match &err {
            TrainError::NonFinite { .. } => CliError::Numeric(err.to_string()),
            TrainError::Encoder(EncoderError::NonFiniteGradient(_)) => CliError::Numeric(err.to_string()),
            _ => CliError::Data(err.to_string()),
        }
    }
}

fn read_text(path: &Path, role: &str) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {role} file {}: {e}", path.display())))
}

fn parse_bank(text: &str, path: &Path) -> Result<Treebank, CliError> {
    corpus::parse_conllu(text)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub struct TrainSummary {
    pub checkpoint: PathBuf,
    pub log: PathBuf,
    pub best_dev_uas: f64,
    pub epochs_run: usize,
    pub dropped_nonprojective: usize,
}

pub fn cmd_train(config: &RunConfig) -> Result<TrainSummary, CliError> {
    let train_text = read_text(&config.train_path, "train")?;
    let dev_text = read_text(&config.dev_path, "dev")?;
    let mut train_bank = parse_bank(&train_text, &config.train_path)?;
    let mut dev_bank = parse_bank(&dev_text, &config.dev_path)?;

    let dropped = train_bank.drop_nonprojective();
    if dropped > 0 {
        eprintln!("dropped {dropped} non-projective gold sentences from the training set");
    }
    if train_bank.is_empty() {
        return Err(CliError::Data("training set is empty after filtering".into()));
    }
    let vocab = Arc::new(
        corpus::build_vocab(&train_bank, config.min_freq)
            .map_err(|e| CliError::Data(e.to_string()))?,
    );
    train_bank.attach_vocab(vocab.clone());
    dev_bank.attach_vocab(vocab.clone());

    let (labeled, unlabeled) = if config.labeled_fraction < 1.0 {
        corpus::split_labeled(&train_bank, config.labeled_fraction, config.train.seed)
            .map_err(|e| CliError::Data(e.to_string()))?
    } else {
        let mut labeled = Treebank { sentences: Vec::new(), vocab: Some(vocab.clone()) };
        let mut unlabeled = Treebank { sentences: Vec::new(), vocab: Some(vocab.clone()) };
        for s in &train_bank.sentences {
            if s.is_labeled {
                labeled.sentences.push(s.clone());
            } else {
                unlabeled.sentences.push(s.clone());
            }
        }
        (labeled, unlabeled)
    };

    let pretrained = match &config.embeddings_path {
        Some(path) => {
            let text = read_text(path, "embeddings")?;
            let entries =
                corpus::parse_embeddings(&text).map_err(|e| CliError::Data(e.to_string()))?;
            if let Some((word, values)) =
                entries.iter().find(|(_, v)| v.len() != config.train.dims.word_emb)
            {
                return Err(CliError::Data(format!(
                    "embedding for {word:?} has dimension {}, expected {}",
                    values.len(),
                    config.train.dims.word_emb
                )));
            }
            Some(entries)
        }
        None => None,
    };

    let outcome = train::train(
        config.mode,
        &labeled,
        &unlabeled,
        &dev_bank,
        pretrained.as_deref(),
        &config.train,
    )?;

    checkpoint::save_to(&config.checkpoint_path, &outcome.model).map_err(|e| {
        CliError::Config(format!("cannot write checkpoint {}: {e}", config.checkpoint_path.display()))
    })?;
    let log_path = log_path_for(&config.checkpoint_path);
    let mut log_text = String::new();
    for line in &outcome.logs {
        writeln!(log_text, "{line}").expect("string write");
    }
    fs::write(&log_path, log_text)
        .map_err(|e| CliError::Config(format!("cannot write log {}: {e}", log_path.display())))?;
    eprintln!(
        "trained {} for {} epochs; best dev UAS {:.4} at epoch {}",
        config.mode.as_str(),
        outcome.logs.len(),
        outcome.best_dev_uas,
        outcome.best_epoch
    );
    Ok(TrainSummary {
        checkpoint: config.checkpoint_path.clone(),
        log: log_path,
        best_dev_uas: outcome.best_dev_uas,
        epochs_run: outcome.logs.len(),
        dropped_nonprojective: dropped,
    })
}

pub fn log_path_for(checkpoint: &Path) -> PathBuf {
    let mut name = checkpoint.as_os_str().to_os_string();
    name.push(".log");
    PathBuf::from(name)
}

fn is_plain_token_line(line: &str) -> bool {
    let stripped = line.strip_suffix('\r').unwrap_or(line);
    let fields: Vec<&str> = stripped.split('\t').collect();
    fields.len() == 10 && fields[0].parse::<usize>().is_ok()
}

/// Parses the input, predicts heads, and re-emits the file with only the
/// HEAD column rewritten; comments, multiword ranges, and empty nodes pass
/// through untouched.
pub fn cmd_parse(model_path: &Path, input_path: &Path, out: &mut impl std::io::Write) -> Result<(), CliError> {
    let model = checkpoint::load_from(model_path)
        .map_err(|e| CliError::Data(format!("{}: {e}", model_path.display())))?;
    let text = read_text(input_path, "input")?;

    let mut block: Vec<String> = Vec::new();
    let mut blocks: Vec<Vec<String>> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            if !block.is_empty() {
                blocks.push(std::mem::take(&mut block));
            }
        } else {
            block.push(line.to_string());
        }
    }
    if !block.is_empty() {
        blocks.push(block);
    }

    for block in blocks {
        let block_text: String = block.iter().map(|l| format!("{l}\n")).collect();
        let mut bank = parse_bank(&block_text, input_path)?;
        let heads = if bank.is_empty() {
            None
        } else {
            bank.attach_vocab(model.vocab.clone());
            let sentence = &bank.sentences[0];
            let predicted = model
                .predict(sentence)
                .map_err(|e| CliError::Data(format!("prediction failed: {e}")))?;
            Some(predicted)
        };
        let mut token_index = 0usize;
        for line in &block {
            if let (Some(heads), true) = (&heads, is_plain_token_line(line)) {
                token_index += 1;
                let stripped = line.strip_suffix('\r').unwrap_or(line);
                let mut fields: Vec<&str> = stripped.split('\t').collect();
                let head = heads[token_index].to_string();
                fields[6] = &head;
                writeln!(out, "{}", fields.join("\t"))
                    .map_err(|e| CliError::Config(format!("write failed: {e}")))?;
            } else {
                writeln!(out, "{line}").map_err(|e| CliError::Config(format!("write failed: {e}")))?;
            }
        }
        writeln!(out).map_err(|e| CliError::Config(format!("write failed: {e}")))?;
    }
    Ok(())
}

/// Evaluates a checkpoint against a gold treebank and prints `UAS<TAB>value`.
pub fn cmd_eval(
    model_path: &Path,
    gold_path: &Path,
    ignore_punct: bool,
    per_sentence: bool,
    out: &mut impl std::io::Write,
) -> Result<f64, CliError> {
    let model = checkpoint::load_from(model_path)
        .map_err(|e| CliError::Data(format!("{}: {e}", model_path.display())))?;
    let text = read_text(gold_path, "gold")?;
    let mut bank = parse_bank(&text, gold_path)?;
    if bank.is_empty() {
        return Err(CliError::Data("gold file contains no sentences".into()));
    }
    if bank.sentences.iter().any(|s| !s.is_labeled) {
        return Err(CliError::Data("gold file contains unlabeled sentences".into()));
    }
    bank.attach_vocab(model.vocab.clone());
    let predictions = model
        .predict_all(&bank.sentences)
        .map_err(|e| CliError::Data(format!("prediction failed: {e}")))?;
    if per_sentence {
        for (i, (pred, sentence)) in predictions.iter().zip(&bank.sentences).enumerate() {
            let sentence_uas = corpus::uas(
                std::slice::from_ref(pred),
                std::slice::from_ref(sentence),
                ignore_punct,
            );
            match sentence_uas {
                Ok(v) => writeln!(out, "sentence {i}\t{v:.4}"),
                Err(_) => writeln!(out, "sentence {i}\tn/a"),
            }
            .map_err(|e| CliError::Config(format!("write failed: {e}")))?;
        }
    }
    let score = corpus::uas(&predictions, &bank.sentences, ignore_punct)
        .map_err(|e| CliError::Data(e.to_string()))?;
    writeln!(out, "UAS\t{score:.4}").map_err(|e| CliError::Config(format!("write failed: {e}")))?;
    Ok(score)
}

/// Chart-vs-enumeration and gradient-identity verification on random score
/// matrices. `perturbation` shifts the chart's log-partition values and
/// exists so tests can prove the checks actually detect broken recurrences;
/// the command line always passes 0.
pub fn run_selfcheck(
    trials: usize,
    max_len: usize,
    seed: u64,
    perturbation: f64,
    out: &mut impl std::io::Write,
) -> Result<(), CliError> {
    if !(2..=chart::MAX_ENUMERATION_LEN).contains(&max_len) {
        return Err(CliError::Config(format!(
            "max length must lie in 2..={}, got {max_len}",
            chart::MAX_ENUMERATION_LEN
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fail = |len: usize, trial: usize, what: String| {
        CliError::Selfcheck(format!("length {len}, trial {trial}, seed {seed}: {what}"))
    };
    for len in 2..=max_len {
        let trees = chart::enumerate_projective(len)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let mut gradient_checks = 0usize;
        for trial in 0..trials {
            let scores = Mat::from_fn(len, len, |_, _| rng.random_range(-3.0..3.0));
            let inside = chart::inside(&scores).map_err(|e| fail(len, trial, e.to_string()))?;
            let log_z = inside.log_z + perturbation;
            let reference_z = oracle::log_partition(&scores, &trees);
            if (log_z - reference_z).abs() > 1e-9 {
                return Err(fail(len, trial, format!("log partition {log_z} vs enumeration {reference_z}")));
            }
            let beta = chart::outside(&scores, &inside);
            let marginals = chart::arc_marginals(&inside, &beta);
            let reference_m = oracle::arc_marginals(&scores, &trees);
            for h in 0..len {
                for m in 0..len {
                    let delta = (marginals[(h, m)] + perturbation - reference_m[(h, m)]).abs();
                    if delta > 1e-9 {
                        return Err(fail(len, trial, format!("marginal for arc {h}->{m} off by {delta:.3e}")));
                    }
                }
            }
            let (heads, score) = chart::eisner_decode(&scores).map_err(|e| fail(len, trial, e.to_string()))?;
            let (best_tree, best_score) = oracle::argmax_tree(&scores, &trees);
            if (score - best_score).abs() > 1e-9 || heads != best_tree {
                return Err(fail(len, trial, "decode disagrees with enumeration argmax".into()));
            }
            // gradient identity spot checks: d logZ / d S[h][m] = P[h][m]
            if trial % 100 == 0 && len >= 3 {
                gradient_checks += 1;
                let step = 1e-5;
                for _ in 0..3 {
                    let h = rng.random_range(0..len);
                    let m = rng.random_range(1..len);
                    if h == m {
                        continue;
                    }
                    let mut plus = scores.clone();
                    plus[(h, m)] += step;
                    let mut minus = scores.clone();
                    minus[(h, m)] -= step;
                    let fd = (chart::inside(&plus).map_err(|e| fail(len, trial, e.to_string()))?.log_z
                        - chart::inside(&minus).map_err(|e| fail(len, trial, e.to_string()))?.log_z)
                        / (2.0 * step);
                    let analytic = marginals[(h, m)] + perturbation;
                    let rel = (analytic - fd).abs() / f64::max(1.0, analytic.abs().max(fd.abs()));
                    if rel > 1e-4 {
                        return Err(fail(len, trial, format!("gradient identity off for arc {h}->{m}: {analytic} vs {fd}")));
                    }
                }
            }
        }
        writeln!(out, "length {len}: {trials} trials, {gradient_checks} gradient spot-checks ok")
            .map_err(|e| CliError::Config(format!("write failed: {e}")))?;
    }
    writeln!(out, "selfcheck passed").map_err(|e| CliError::Config(format!("write failed: {e}")))?;
    Ok(())
}

pub fn cmd_selfcheck(trials: usize, max_len: usize, seed: u64, out: &mut impl std::io::Write) -> Result<(), CliError> {
    run_selfcheck(trials, max_len, seed, 0.0, out)
}

pub fn cmd_synth(
    sentences: usize,
    vocab_words: usize,
    out_path: &Path,
    seed: u64,
    min_words: usize,
    max_words: usize,
) -> Result<(), CliError> {
    if sentences == 0 || vocab_words == 0 {
        return Err(CliError::Config("sentence and vocabulary counts must be positive".into()));
    }
    if min_words < 1 || min_words > max_words {
        return Err(CliError::Config(format!("bad length range {min_words}..{max_words}")));
    }
    let bank = synth::generate(&SynthConfig { sentences, vocab_words, seed, min_words, max_words });
    let text = corpus::write_conllu(&bank);
    fs::write(out_path, text)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", out_path.display())))?;
    eprintln!("wrote {sentences} sentences to {}", out_path.display());
    Ok(())
}
