//! End-to-end checks of the `gaplap` binary: exit codes, stream hygiene,
//! and command round-trips.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_gaplap")
}

fn run(args: &[&str]) -> Output {
    Command::new(binary()).args(args).output().expect("spawn gaplap")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

struct Fixture {
    _dir: TempDir,
    root: PathBuf,
    corpus: PathBuf,
    model: PathBuf,
}

/// Synthesizes a corpus and trains a small supervised model.
fn trained_fixture() -> Fixture {
    let dir = TempDir::new().unwrap();
    let root = dir.path().to_path_buf();
    let corpus = root.join("corpus.conllu");
    let model = root.join("model.bin");
    let synth = run(&[
        "synth",
        "--sentences",
        "30",
        "--vocab",
        "50",
        "--out",
        corpus.to_str().unwrap(),
        "--seed",
        "5",
    ]);
    assert!(synth.status.success(), "synth failed: {}", String::from_utf8_lossy(&synth.stderr));
    let config = root.join("run.conf");
    std::fs::write(
        &config,
        format!(
            "mode = crf-supervised\ntrain = {c}\ndev = {c}\ncheckpoint = {m}\n\
             epochs = 200\npatience = 40\nseed = 3\nmin_freq = 1\nlearning_rate = 0.005\n\
             d_word = 12\nd_pos = 6\nd_hidden = 12\nd_arc = 12\n",
            c = corpus.display(),
            m = model.display()
        ),
    )
    .unwrap();
    let train = run(&["train", "--config", config.to_str().unwrap()]);
    assert!(train.status.success(), "train failed: {}", String::from_utf8_lossy(&train.stderr));
    assert!(train.stdout.is_empty(), "train wrote to stdout");
    assert!(model.exists());
    Fixture { _dir: dir, root, corpus, model }
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("bad.conf");
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn train_missing_dev_file_exits_with_config_code_and_no_checkpoint() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("c.conllu");
    std::fs::write(&corpus, "1\ta\t_\tX\t_\t_\t0\t_\t_\t_\n").unwrap();
    let model = dir.path().join("m.bin");
    let config = write_config(
        dir.path(),
        &format!(
            "mode = crf-supervised\ntrain = {}\ndev = {}\ncheckpoint = {}\nepochs = 1\nmin_freq = 1\n",
            corpus.display(),
            dir.path().join("missing.conllu").display(),
            model.display()
        ),
    );
    let output = run(&["train", "--config", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    assert!(!model.exists(), "checkpoint must not be written on config errors");
}

#[test]
fn train_malformed_corpus_exits_with_data_code() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("c.conllu");
    std::fs::write(&corpus, "1\tonly-three\tcolumns\n").unwrap();
    let config = write_config(
        dir.path(),
        &format!(
            "mode = crf-supervised\ntrain = {c}\ndev = {c}\ncheckpoint = {m}\nepochs = 1\n",
            c = corpus.display(),
            m = dir.path().join("m.bin").display()
        ),
    );
    let output = run(&["train", "--config", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn train_unknown_config_key_exits_with_config_code() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "mode = gap\nwhat = ever\n");
    let output = run(&["train", "--config", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn parse_fills_heads_and_is_idempotent() {
    let fixture = trained_fixture();
    // strip the gold heads to form an unlabeled input with extras
    let gold_text = std::fs::read_to_string(&fixture.corpus).unwrap();
    let mut input_text = String::from("# a comment that must survive\n");
    for line in gold_text.lines() {
        if line.trim().is_empty() {
            input_text.push('\n');
            continue;
        }
        let mut fields: Vec<&str> = line.split('\t').collect();
        fields[6] = "_";
        input_text.push_str(&fields.join("\t"));
        input_text.push('\n');
    }
    let input = fixture.root.join("input.conllu");
    std::fs::write(&input, &input_text).unwrap();

    let first = run(&["parse", "--model", fixture.model.to_str().unwrap(), "--input", input.to_str().unwrap()]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let parsed = stdout_of(&first);
    assert!(parsed.starts_with("# a comment that must survive\n"));
    // every token line got a head, other columns intact
    let reparsed = gaplap_core::corpus::parse_conllu(&parsed).unwrap();
    assert_eq!(reparsed.len(), 30);
    for sentence in &reparsed.sentences {
        assert!(sentence.is_labeled);
        let heads = sentence.gold_heads().unwrap();
        assert!(gaplap_core::chart::is_projective_tree(&heads));
    }

    // idempotence: parsing its own output reproduces it byte for byte
    let reinput = fixture.root.join("reinput.conllu");
    std::fs::write(&reinput, &parsed).unwrap();
    let second = run(&["parse", "--model", fixture.model.to_str().unwrap(), "--input", reinput.to_str().unwrap()]);
    assert!(second.status.success());
    assert_eq!(parsed, stdout_of(&second));
}

#[test]
fn parse_handles_single_word_sentence() {
    let fixture = trained_fixture();
    let input = fixture.root.join("one.conllu");
    std::fs::write(&input, "1\tw01\t_\tT1\t_\t_\t_\t_\t_\t_\n").unwrap();
    let output = run(&["parse", "--model", fixture.model.to_str().unwrap(), "--input", input.to_str().unwrap()]);
    assert!(output.status.success());
    let line = stdout_of(&output);
    let fields: Vec<&str> = line.lines().next().unwrap().split('\t').collect();
    assert_eq!(fields[6], "0");
}

#[test]
fn eval_reports_four_decimal_uas_and_rejects_unlabeled_gold() {
    let fixture = trained_fixture();
    let output = run(&["eval", "--model", fixture.model.to_str().unwrap(), "--gold", fixture.corpus.to_str().unwrap()]);
    assert!(output.status.success());
    let report = stdout_of(&output);
    let last = report.lines().last().unwrap();
    assert!(last.starts_with("UAS\t"), "got {last:?}");
    let value: f64 = last.split('\t').nth(1).unwrap().parse().unwrap();
    assert!((0.0..=1.0).contains(&value));
    // deterministic across runs
    let again = run(&["eval", "--model", fixture.model.to_str().unwrap(), "--gold", fixture.corpus.to_str().unwrap()]);
    assert_eq!(report, stdout_of(&again));

    let unlabeled = fixture.root.join("unlabeled.conllu");
    std::fs::write(&unlabeled, "1\tw01\t_\tT1\t_\t_\t_\t_\t_\t_\n").unwrap();
    let bad = run(&["eval", "--model", fixture.model.to_str().unwrap(), "--gold", unlabeled.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(3));
}

#[test]
fn eval_of_training_model_on_its_own_overfit_data_is_high() {
    let fixture = trained_fixture();
    let output = run(&["eval", "--model", fixture.model.to_str().unwrap(), "--gold", fixture.corpus.to_str().unwrap()]);
    let report = stdout_of(&output);
    let value: f64 = report.lines().last().unwrap().split('\t').nth(1).unwrap().parse().unwrap();
    assert!(value >= 0.99, "overfit model scored only {value}");
}

#[test]
fn selfcheck_default_budget_passes() {
    let output = run(&["selfcheck"]);
    assert!(output.status.success());
    let report = stdout_of(&output);
    assert!(report.contains("length 7: 1000 trials"));
    assert!(report.contains("selfcheck passed"));
}

#[test]
fn eval_ignore_punct_changes_denominator() {
    let fixture = trained_fixture();
    let gold = fixture.root.join("punct.conllu");
    std::fs::write(
        &gold,
        "1\tw01\t_\tT1\t_\t_\t0\t_\t_\t_\n2\tw02\t_\tPUNCT\t_\t_\t1\t_\t_\t_\n",
    )
    .unwrap();
    let with = run(&["eval", "--model", fixture.model.to_str().unwrap(), "--gold", gold.to_str().unwrap()]);
    let without = run(&[
        "eval",
        "--model",
        fixture.model.to_str().unwrap(),
        "--gold",
        gold.to_str().unwrap(),
        "--ignore-punct",
    ]);
    assert!(with.status.success() && without.status.success());
    // both are valid reports; the punctuation-free denominator is 1 token
    assert!(stdout_of(&with).starts_with("UAS\t"));
    assert!(stdout_of(&without).starts_with("UAS\t"));
}

#[test]
fn eval_with_corrupt_checkpoint_is_a_data_error() {
    let fixture = trained_fixture();
    let bogus = fixture.root.join("bogus.bin");
    std::fs::write(&bogus, b"NOTACHECKPOINT\n").unwrap();
    let output = run(&["eval", "--model", bogus.to_str().unwrap(), "--gold", fixture.corpus.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn selfcheck_passes_quickly_and_rejects_big_lengths() {
    let ok = run(&["selfcheck", "--trials", "50", "--max-len", "5"]);
    assert!(ok.status.success());
    assert!(stdout_of(&ok).contains("selfcheck passed"));
    let zero = run(&["selfcheck", "--trials", "0"]);
    assert!(zero.status.success());
    let bad = run(&["selfcheck", "--trials", "1", "--max-len", "11"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn synth_output_reparses_with_projective_gold() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("synth.conllu");
    let output = run(&["synth", "--sentences", "25", "--vocab", "12", "--out", out.to_str().unwrap(), "--seed", "9"]);
    assert!(output.status.success());
    let bank = gaplap_core::corpus::parse_conllu(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(bank.len(), 25);
    assert!(bank.sentences.iter().all(|s| s.is_labeled));
}

#[test]
fn epochs_zero_writes_initialization_checkpoint() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("c.conllu");
    std::fs::write(
        &corpus,
        "1\ta\t_\tX\t_\t_\t2\t_\t_\t_\n2\tb\t_\tY\t_\t_\t0\t_\t_\t_\n",
    )
    .unwrap();
    let model = dir.path().join("m.bin");
    let config = write_config(
        dir.path(),
        &format!(
            "mode = crf-supervised\ntrain = {c}\ndev = {c}\ncheckpoint = {m}\nepochs = 0\nmin_freq = 1\n\
             d_word = 6\nd_pos = 3\nd_hidden = 4\nd_arc = 4\n",
            c = corpus.display(),
            m = model.display()
        ),
    );
    let output = run(&["train", "--config", config.to_str().unwrap()]);
    assert!(output.status.success());
    assert!(model.exists());
    let log = std::fs::read_to_string(dir.path().join("m.bin.log")).unwrap();
    assert!(log.is_empty());
}

#[test]
fn single_root_config_constrains_predictions() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("c.conllu");
    let synth = run(&["synth", "--sentences", "15", "--vocab", "20", "--out", corpus.to_str().unwrap(), "--seed", "2"]);
    assert!(synth.status.success());
    let model = dir.path().join("m.bin");
    let config = write_config(
        dir.path(),
        &format!(
            "mode = crf-supervised\ntrain = {c}\ndev = {c}\ncheckpoint = {m}\nepochs = 2\nmin_freq = 1\n\
             d_word = 8\nd_pos = 4\nd_hidden = 6\nd_arc = 6\nsingle_root = true\n",
            c = corpus.display(),
            m = model.display()
        ),
    );
    let output = run(&["train", "--config", config.to_str().unwrap()]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let parse = run(&["parse", "--model", model.to_str().unwrap(), "--input", corpus.to_str().unwrap()]);
    assert!(parse.status.success());
    let bank = gaplap_core::corpus::parse_conllu(&stdout_of(&parse)).unwrap();
    for sentence in &bank.sentences {
        let heads = sentence.gold_heads().unwrap();
        let root_children = heads.iter().skip(1).filter(|&&h| h == 0).count();
        assert_eq!(root_children, 1, "single_root model emitted {root_children} root children");
    }
}

#[test]
fn train_accepts_pretrained_embeddings_and_rejects_wrong_dimension() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("c.conllu");
    std::fs::write(
        &corpus,
        "1\ta\t_\tX\t_\t_\t2\t_\t_\t_\n2\tb\t_\tY\t_\t_\t0\t_\t_\t_\n",
    )
    .unwrap();
    let good = dir.path().join("good.vec");
    std::fs::write(&good, "2 6\na 1 2 3 4 5 6\nb -1 -2 -3 -4 -5 -6\n").unwrap();
    let bad = dir.path().join("bad.vec");
    std::fs::write(&bad, "a 1 2 3\n").unwrap();
    let model = dir.path().join("m.bin");
    let config_for = |emb: &Path| {
        format!(
            "mode = crf-supervised\ntrain = {c}\ndev = {c}\ncheckpoint = {m}\nepochs = 1\nmin_freq = 1\n\
             d_word = 6\nd_pos = 3\nd_hidden = 4\nd_arc = 4\nembeddings = {e}\n",
            c = corpus.display(),
            m = model.display(),
            e = emb.display()
        )
    };
    let good_conf = write_config(dir.path(), &config_for(&good));
    let output = run(&["train", "--config", good_conf.to_str().unwrap()]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let loaded = gaplap_core::checkpoint::load_from(&model).unwrap();
    let vocab = &loaded.vocab;
    let a_row = loaded.params.word_emb.row(vocab.word_id("a") as usize);
    // row was overwritten before training; one epoch of updates moves it
    // only slightly from the pretrained values
    assert!((a_row[0] - 1.0).abs() < 0.1, "pretrained row not applied: {a_row:?}");

    let bad_conf = write_config(dir.path(), &config_for(&bad));
    let output = run(&["train", "--config", bad_conf.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn mode_flag_overrides_config() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("c.conllu");
    std::fs::write(
        &corpus,
        "1\ta\t_\tX\t_\t_\t2\t_\t_\t_\n2\tb\t_\tY\t_\t_\t0\t_\t_\t_\n",
    )
    .unwrap();
    let model = dir.path().join("m.bin");
    let config = write_config(
        dir.path(),
        &format!(
            "mode = crf-supervised\ntrain = {c}\ndev = {c}\ncheckpoint = {m}\nepochs = 1\nmin_freq = 1\n\
             d_word = 6\nd_pos = 3\nd_hidden = 4\nd_arc = 4\n",
            c = corpus.display(),
            m = model.display()
        ),
    );
    let output = run(&["train", "--config", config.to_str().unwrap(), "--mode", "gap", "--seed", "8"]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let loaded = gaplap_core::checkpoint::load_from(&model).unwrap();
    assert_eq!(loaded.mode, gaplap_core::Mode::Gap);
    assert!(loaded.decoder.is_some());
}
