//! Treebank ingestion, vocabulary construction, labeled/unlabeled split
//! simulation, and attachment-score evaluation.
//!
//! The on-disk format is 10-column tab-separated CoNLL-U. Only ID, FORM,
//! UPOS and HEAD are consumed; LEMMA/FEATS/DEPREL and friends are read and
//! discarded (this is an unlabeled parser). Every parsed sentence carries a
//! synthetic ROOT token at index 0, so head indices are usable directly:
//! HEAD=0 in the file means "attached to ROOT" and stays 0 in memory.

use std::collections::HashMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::chart::{is_projective_tree, HeadArray};

pub const ROOT_FORM: &str = "<ROOT>";
pub const UNK_FORM: &str = "<UNK>";
pub const ROOT_ID: u32 = 0;
pub const UNK_ID: u32 = 1;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("treebank is empty")]
    EmptyTreebank,
    #[error("min_freq must be >= 1, got {0}")]
    InvalidMinFreq(usize),
    #[error("labeled fraction must lie in (0, 1], got {0}")]
    InvalidFraction(f64),
    #[error("operation requires gold trees on every sentence")]
    MissingGoldTrees,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("no scorable tokens (empty evaluation denominator)")]
    NoScorableTokens,
}

fn parse_err(line: usize, message: impl Into<String>) -> CorpusError {
    CorpusError::Parse { line, message: message.into() }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub form: String,
    pub upos: String,
    /// Head index within the ROOT-prefixed sentence; 0 means ROOT.
    pub gold_head: Option<usize>,
    /// Filled by [`Treebank::attach_vocab`]; unknown words map to `<UNK>`.
    pub word_id: u32,
    pub pos_id: u32,
}

impl Token {
    fn new(form: impl Into<String>, upos: impl Into<String>, gold_head: Option<usize>) -> Self {
        Token { form: form.into(), upos: upos.into(), gold_head, word_id: UNK_ID, pos_id: UNK_ID }
    }

    fn root() -> Self {
        let mut t = Token::new(ROOT_FORM, ROOT_FORM, None);
        t.word_id = ROOT_ID;
        t.pos_id = ROOT_ID;
        t
    }

    /// Constructor for generated data.
    pub fn synthetic(form: impl Into<String>, upos: impl Into<String>, head: usize) -> Self {
        Token::new(form, upos, Some(head))
    }

    pub fn synthetic_root() -> Self {
        Token::root()
    }
}

#[derive(Clone, Debug)]
pub struct Sentence {
    /// ROOT at index 0, then the surface tokens.
    pub tokens: Vec<Token>,
    pub is_labeled: bool,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// `[0, h_1, ..., h_{l-1}]` when labeled.
    pub fn gold_heads(&self) -> Option<HeadArray> {
        if !self.is_labeled {
            return None;
        }
        let mut heads = vec![0usize];
        for tok in &self.tokens[1..] {
            heads.push(tok.gold_head?);
        }
        Some(heads)
    }

    pub fn word_ids(&self) -> Vec<u32> {
        self.tokens.iter().map(|t| t.word_id).collect()
    }

    pub fn strip_gold(&mut self) {
        self.is_labeled = false;
        for tok in &mut self.tokens {
            tok.gold_head = None;
        }
    }
}

#[derive(Clone, Debug)]
pub struct Vocabulary {
    words: Vec<String>,
    word_ids: HashMap<String, u32>,
    pos_tags: Vec<String>,
    pos_ids: HashMap<String, u32>,
    pub min_freq: usize,
}

impl Vocabulary {
    /// Builds a vocabulary from explicit surface lists (checkpoint loading,
    /// tests). Reserved entries must already be present.
    pub fn from_entries(words: Vec<String>, pos_tags: Vec<String>, min_freq: usize) -> Self {
        let word_ids = words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        let pos_ids = pos_tags.iter().enumerate().map(|(i, p)| (p.clone(), i as u32)).collect();
        Vocabulary { words, word_ids, pos_tags, pos_ids, min_freq }
    }

    pub fn word_id(&self, form: &str) -> u32 {
        self.word_ids.get(form).copied().unwrap_or(UNK_ID)
    }

    pub fn pos_id(&self, upos: &str) -> u32 {
        self.pos_ids.get(upos).copied().unwrap_or(UNK_ID)
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    pub fn pos_count(&self) -> usize {
        self.pos_tags.len()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn pos_tags(&self) -> &[String] {
        &self.pos_tags
    }
}

#[derive(Clone, Debug, Default)]
pub struct Treebank {
    pub sentences: Vec<Sentence>,
    pub vocab: Option<Arc<Vocabulary>>,
}

impl Treebank {
    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Resolves every token id under `vocab` (unknowns map to `<UNK>`).
    pub fn attach_vocab(&mut self, vocab: Arc<Vocabulary>) {
        for sentence in &mut self.sentences {
            for tok in &mut sentence.tokens {
                tok.word_id = vocab.word_id(&tok.form);
                tok.pos_id = vocab.pos_id(&tok.upos);
            }
        }
        self.vocab = Some(vocab);
    }

    /// Drops labeled sentences whose gold tree is not projective and returns
    /// how many were removed. Chart inference cannot score them.
    pub fn drop_nonprojective(&mut self) -> usize {
        let before = self.sentences.len();
        self.sentences.retain(|s| match s.gold_heads() {
            Some(heads) => is_projective_tree(&heads),
            None => true,
        });
        before - self.sentences.len()
    }
}

/// Classification of a single CoNLL-U line.
enum Line<'a> {
    Blank,
    Comment,
    /// Multiword range ("1-2") or empty node ("1.1"); both are skipped.
    Skipped,
    Word { id: usize, form: &'a str, upos: &'a str, head: Option<usize> },
}

fn classify_line(raw: &str, line_no: usize) -> Result<Line<'_>, CorpusError> {
    let line = raw.strip_suffix('\r').unwrap_or(raw);
    if line.trim().is_empty() {
        return Ok(Line::Blank);
    }
    if line.starts_with('#') {
        return Ok(Line::Comment);
    }
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 10 {
        return Err(parse_err(line_no, format!("expected 10 tab-separated columns, got {}", fields.len())));
    }
    let id_field = fields[0];
    if id_field.contains('-') || id_field.contains('.') {
        return Ok(Line::Skipped);
    }
    let id: usize = id_field
        .parse()
        .map_err(|_| parse_err(line_no, format!("bad token id {id_field:?}")))?;
    let head = match fields[6] {
        "_" => None,
        h => Some(
            h.parse::<usize>()
                .map_err(|_| parse_err(line_no, format!("bad HEAD value {h:?}")))?,
        ),
    };
    Ok(Line::Word { id, form: fields[1], upos: fields[3], head })
}

struct PendingToken {
    line: usize,
    form: String,
    upos: String,
    head: Option<usize>,
}

fn flush_sentence(pending: &mut Vec<PendingToken>, sentences: &mut Vec<Sentence>) -> Result<(), CorpusError> {
    if pending.is_empty() {
        return Ok(());
    }
    let n = pending.len();
    let is_labeled = pending.iter().all(|t| t.head.is_some());
    let mut tokens = vec![Token::root()];
    for (i, tok) in pending.drain(..).enumerate() {
        if let Some(h) = tok.head {
            if h > n {
                return Err(parse_err(tok.line, format!("HEAD {h} out of range for a {n}-word sentence")));
            }
            if h == i + 1 {
                return Err(parse_err(tok.line, "token is its own head"));
            }
        }
        let head = if is_labeled { tok.head } else { None };
        tokens.push(Token::new(tok.form, tok.upos, head));
    }
    sentences.push(Sentence { tokens, is_labeled });
    Ok(())
}

/// Parses CoNLL-U text into an un-vocabularized treebank.
pub fn parse_conllu(text: &str) -> Result<Treebank, CorpusError> {
    let mut sentences = Vec::new();
    let mut pending: Vec<PendingToken> = Vec::new();
    let mut expected_id = 1usize;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        match classify_line(raw, line_no)? {
            Line::Blank => {
                flush_sentence(&mut pending, &mut sentences)?;
                expected_id = 1;
            }
            Line::Comment | Line::Skipped => {}
            Line::Word { id, form, upos, head } => {
                if id != expected_id {
                    return Err(parse_err(line_no, format!("expected token id {expected_id}, got {id}")));
                }
                expected_id += 1;
                pending.push(PendingToken { line: line_no, form: form.to_string(), upos: upos.to_string(), head });
            }
        }
    }
    flush_sentence(&mut pending, &mut sentences)?;
    Ok(Treebank { sentences, vocab: None })
}

/// Serializes a treebank back to CoNLL-U (ID, FORM, UPOS, HEAD; the columns
/// this crate does not model are written as "_").
pub fn write_conllu(treebank: &Treebank) -> String {
    let mut out = String::new();
    for sentence in &treebank.sentences {
        for (i, tok) in sentence.tokens.iter().enumerate().skip(1) {
            let head = match tok.gold_head {
                Some(h) => h.to_string(),
                None => "_".to_string(),
            };
            out.push_str(&format!("{i}\t{}\t_\t{}\t_\t_\t{head}\t_\t_\t_\n", tok.form, tok.upos));
        }
        out.push('\n');
    }
    out
}

/// Word and POS inventories with a frequency cutoff on words. POS tags are
/// always retained. Id order is first occurrence, which keeps vocabularies
/// reproducible for a fixed corpus.
pub fn build_vocab(treebank: &Treebank, min_freq: usize) -> Result<Vocabulary, CorpusError> {
    if min_freq == 0 {
        return Err(CorpusError::InvalidMinFreq(min_freq));
    }
    if treebank.is_empty() {
        return Err(CorpusError::EmptyTreebank);
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    let mut word_order: Vec<&str> = Vec::new();
    let mut pos_order: Vec<&str> = Vec::new();
    for sentence in &treebank.sentences {
        for tok in &sentence.tokens[1..] {
            let c = counts.entry(tok.form.as_str()).or_insert(0);
            if *c == 0 {
                word_order.push(&tok.form);
            }
            *c += 1;
            if !pos_order.contains(&tok.upos.as_str()) {
                pos_order.push(&tok.upos);
            }
        }
    }
    let mut words = vec![ROOT_FORM.to_string(), UNK_FORM.to_string()];
    words.extend(
        word_order
            .into_iter()
            .filter(|w| counts[w] >= min_freq && *w != ROOT_FORM && *w != UNK_FORM)
            .map(String::from),
    );
    let mut pos_tags = vec![ROOT_FORM.to_string(), UNK_FORM.to_string()];
    pos_tags.extend(pos_order.into_iter().filter(|p| *p != ROOT_FORM && *p != UNK_FORM).map(String::from));
    Ok(Vocabulary::from_entries(words, pos_tags, min_freq))
}

/// Deterministically partitions a fully labeled treebank: a seeded shuffle,
/// then the first ⌈fraction·N⌉ sentences keep their gold trees and the rest
/// are stripped.
pub fn split_labeled(
    treebank: &Treebank,
    fraction: f64,
    seed: u64,
) -> Result<(Treebank, Treebank), CorpusError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(CorpusError::InvalidFraction(fraction));
    }
    if treebank.sentences.iter().any(|s| !s.is_labeled) {
        return Err(CorpusError::MissingGoldTrees);
    }
    let n = treebank.len();
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let n_labeled = ((fraction * n as f64).ceil() as usize).clamp(1, n.max(1));
    let mut labeled = Treebank { sentences: Vec::new(), vocab: treebank.vocab.clone() };
    let mut unlabeled = Treebank { sentences: Vec::new(), vocab: treebank.vocab.clone() };
    for (rank, &i) in indices.iter().enumerate() {
        if rank < n_labeled {
            labeled.sentences.push(treebank.sentences[i].clone());
        } else {
            let mut s = treebank.sentences[i].clone();
            s.strip_gold();
            unlabeled.sentences.push(s);
        }
    }
    Ok((labeled, unlabeled))
}

/// Unlabeled attachment score of `predicted` against the gold trees carried
/// by `sentences`. ROOT positions never count; with `ignore_punct`, tokens
/// tagged PUNCT are excluded from both numerator and denominator.
pub fn uas(predicted: &[HeadArray], sentences: &[Sentence], ignore_punct: bool) -> Result<f64, CorpusError> {
    if predicted.len() != sentences.len() {
        return Err(CorpusError::ShapeMismatch(format!(
            "{} predictions for {} sentences",
            predicted.len(),
            sentences.len()
        )));
    }
    let mut correct = 0usize;
    let mut total = 0usize;
    for (heads, sentence) in predicted.iter().zip(sentences) {
        if heads.len() != sentence.len() {
            return Err(CorpusError::ShapeMismatch(format!(
                "prediction of length {} for a sentence of length {}",
                heads.len(),
                sentence.len()
            )));
        }
        let gold = sentence.gold_heads().ok_or(CorpusError::MissingGoldTrees)?;
        for m in 1..sentence.len() {
            if ignore_punct && sentence.tokens[m].upos == "PUNCT" {
                continue;
            }
            total += 1;
            if heads[m] == gold[m] {
                correct += 1;
            }
        }
    }
    if total == 0 {
        return Err(CorpusError::NoScorableTokens);
    }
    Ok(correct as f64 / total as f64)
}

/// Parses a pretrained embedding file: one "word v1 v2 ... vD" entry per
/// line; an optional leading "count dim" header is detected by token count.
pub fn parse_embeddings(text: &str) -> Result<Vec<(String, Vec<f64>)>, CorpusError> {
    let mut entries = Vec::new();
    let mut dim: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if idx == 0 && fields.len() == 2 && fields[0].parse::<usize>().is_ok() && fields[1].parse::<usize>().is_ok() {
            continue; // "count dim" header
        }
        if fields.len() < 2 {
            return Err(parse_err(line_no, "embedding entry needs a word and at least one value"));
        }
        let values: Result<Vec<f64>, _> = fields[1..].iter().map(|v| v.parse::<f64>()).collect();
        let values = values.map_err(|_| parse_err(line_no, "bad embedding value"))?;
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(parse_err(line_no, format!("embedding dimension {} != {}", values.len(), d)));
            }
            _ => {}
        }
        entries.push((fields[0].to_string(), values));
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_WORDS: &str = "1\tdog\t_\tNOUN\t_\t_\t2\t_\t_\t_\n2\tbarks\t_\tVERB\t_\t_\t0\t_\t_\t_\n";

    #[test]
    fn parses_two_word_sentence_with_root() {
        let tb = parse_conllu(TWO_WORDS).unwrap();
        assert_eq!(tb.len(), 1);
        let s = &tb.sentences[0];
        assert_eq!(s.len(), 3);
        assert_eq!(s.tokens[0].form, ROOT_FORM);
        assert_eq!(s.tokens[1].form, "dog");
        assert_eq!(s.tokens[2].form, "barks");
        assert!(s.is_labeled);
        assert_eq!(s.gold_heads().unwrap(), vec![0, 2, 0]);
    }

    #[test]
    fn range_lines_are_skipped() {
        let text = "1-2\tit's\t_\t_\t_\t_\t_\t_\t_\t_\n1\tit\t_\tPRON\t_\t_\t2\t_\t_\t_\n2\tis\t_\tVERB\t_\t_\t0\t_\t_\t_\n";
        let tb = parse_conllu(text).unwrap();
        assert_eq!(tb.sentences[0].len(), 3);
        assert_eq!(tb.sentences[0].tokens[1].form, "it");
    }

    #[test]
    fn empty_nodes_are_skipped() {
        let text = "1\ta\t_\tX\t_\t_\t0\t_\t_\t_\n1.1\tghost\t_\tX\t_\t_\t_\t_\t_\t_\n";
        let tb = parse_conllu(text).unwrap();
        assert_eq!(tb.sentences[0].len(), 2);
    }

    #[test]
    fn underscore_heads_mark_sentence_unlabeled() {
        let text = "1\ta\t_\tX\t_\t_\t_\t_\t_\t_\n2\tb\t_\tX\t_\t_\t0\t_\t_\t_\n";
        let tb = parse_conllu(text).unwrap();
        let s = &tb.sentences[0];
        assert!(!s.is_labeled);
        assert!(s.tokens.iter().all(|t| t.gold_head.is_none()));
    }

    #[test]
    fn bad_column_count_reports_line() {
        let text = "1\tdog\tNOUN\n";
        match parse_conllu(text).unwrap_err() {
            CorpusError::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn head_out_of_range_is_rejected() {
        let text = "1\tdog\t_\tNOUN\t_\t_\t5\t_\t_\t_\n";
        assert!(matches!(parse_conllu(text).unwrap_err(), CorpusError::Parse { line: 1, .. }));
    }

    #[test]
    fn self_head_is_rejected() {
        let text = "1\tdog\t_\tNOUN\t_\t_\t1\t_\t_\t_\n";
        assert!(matches!(parse_conllu(text).unwrap_err(), CorpusError::Parse { .. }));
    }

    #[test]
    fn comments_and_crlf_are_tolerated() {
        let text = "# sent_id = 1\r\n1\tdog\t_\tNOUN\t_\t_\t0\t_\t_\t_\r\n";
        let tb = parse_conllu(text).unwrap();
        assert_eq!(tb.sentences[0].tokens[1].form, "dog");
    }

    fn toy_treebank() -> Treebank {
        let text = "1\ta\t_\tD\t_\t_\t2\t_\t_\t_\n2\tdog\t_\tN\t_\t_\t0\t_\t_\t_\n\n\
                    1\ta\t_\tD\t_\t_\t2\t_\t_\t_\n2\tcat\t_\tN\t_\t_\t0\t_\t_\t_\n";
        parse_conllu(text).unwrap()
    }

    #[test]
    fn vocab_threshold_unks_rare_words() {
        let tb = toy_treebank();
        let vocab = build_vocab(&tb, 2).unwrap();
        assert_eq!(vocab.word_id("a"), 2);
        assert_eq!(vocab.word_id("dog"), UNK_ID);
        assert_eq!(vocab.word_id("cat"), UNK_ID);
        assert_eq!(vocab.word_id(ROOT_FORM), ROOT_ID);
        // POS tags are never cut.
        assert_eq!(vocab.pos_count(), 4);
    }

    #[test]
    fn vocab_min_freq_one_keeps_everything() {
        let tb = toy_treebank();
        let vocab = build_vocab(&tb, 1).unwrap();
        assert_eq!(vocab.word_count(), 5); // <ROOT>, <UNK>, a, dog, cat
        assert_ne!(vocab.word_id("dog"), UNK_ID);
    }

    #[test]
    fn vocab_rejects_zero_min_freq_and_empty_treebank() {
        assert!(matches!(build_vocab(&toy_treebank(), 0).unwrap_err(), CorpusError::InvalidMinFreq(0)));
        let empty = Treebank::default();
        assert!(matches!(build_vocab(&empty, 1).unwrap_err(), CorpusError::EmptyTreebank));
    }

    fn labeled_bank(n: usize) -> Treebank {
        let mut text = String::new();
        for i in 0..n {
            text.push_str(&format!("1\tw{i}\t_\tX\t_\t_\t0\t_\t_\t_\n\n"));
        }
        parse_conllu(&text).unwrap()
    }

    #[test]
    fn split_ten_percent_of_ten_is_one() {
        let tb = labeled_bank(10);
        let (labeled, unlabeled) = split_labeled(&tb, 0.1, 7).unwrap();
        assert_eq!(labeled.len(), 1);
        assert_eq!(unlabeled.len(), 9);
        assert!(unlabeled.sentences.iter().all(|s| !s.is_labeled));
    }

    #[test]
    fn split_full_fraction_keeps_all_labeled() {
        let tb = labeled_bank(5);
        let (labeled, unlabeled) = split_labeled(&tb, 1.0, 7).unwrap();
        assert_eq!(labeled.len(), 5);
        assert!(unlabeled.is_empty());
    }

    #[test]
    fn split_is_deterministic_per_seed() {
        let tb = labeled_bank(20);
        let (a1, b1) = split_labeled(&tb, 0.3, 42).unwrap();
        let (a2, b2) = split_labeled(&tb, 0.3, 42).unwrap();
        let forms = |t: &Treebank| t.sentences.iter().map(|s| s.tokens[1].form.clone()).collect::<Vec<_>>();
        assert_eq!(forms(&a1), forms(&a2));
        assert_eq!(forms(&b1), forms(&b2));
    }

    #[test]
    fn split_rejects_bad_fraction_and_unlabeled_input() {
        let tb = labeled_bank(4);
        assert!(matches!(split_labeled(&tb, 0.0, 1).unwrap_err(), CorpusError::InvalidFraction(_)));
        assert!(matches!(split_labeled(&tb, 1.5, 1).unwrap_err(), CorpusError::InvalidFraction(_)));
        let mut unlabeled = tb.clone();
        unlabeled.sentences[0].strip_gold();
        assert!(matches!(split_labeled(&unlabeled, 0.5, 1).unwrap_err(), CorpusError::MissingGoldTrees));
    }

    #[test]
    fn uas_counts_matches() {
        let tb = parse_conllu(TWO_WORDS).unwrap();
        let gold = tb.sentences[0].gold_heads().unwrap();
        assert_eq!(uas(std::slice::from_ref(&gold), &tb.sentences, false).unwrap(), 1.0);
        let half = vec![0, 2, 1];
        assert_eq!(uas(&[half], &tb.sentences, false).unwrap(), 0.5);
    }

    #[test]
    fn uas_punct_exclusion_can_empty_the_denominator() {
        let text = "1\t.\t_\tPUNCT\t_\t_\t0\t_\t_\t_\n";
        let tb = parse_conllu(text).unwrap();
        let gold = tb.sentences[0].gold_heads().unwrap();
        assert!(matches!(
            uas(std::slice::from_ref(&gold), &tb.sentences, true).unwrap_err(),
            CorpusError::NoScorableTokens
        ));
        assert_eq!(uas(&[gold], &tb.sentences, false).unwrap(), 1.0);
    }

    #[test]
    fn nonprojective_gold_is_dropped() {
        // words: 1 2 3 4 with arcs 1->3, 2->4 crossing (heads: 0, 0, 4, 1, 0 on l=5)
        let text = "1\ta\t_\tX\t_\t_\t0\t_\t_\t_\n2\tb\t_\tX\t_\t_\t4\t_\t_\t_\n3\tc\t_\tX\t_\t_\t1\t_\t_\t_\n4\td\t_\tX\t_\t_\t0\t_\t_\t_\n";
        let mut tb = parse_conllu(text).unwrap();
        assert_eq!(tb.drop_nonprojective(), 1);
        assert!(tb.is_empty());
    }

    #[test]
    fn embeddings_header_detection_and_dim_check() {
        let with_header = "2 3\nfoo 1.0 2.0 3.0\nbar 0.5 0.25 -1\n";
        let entries = parse_embeddings(with_header).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].0, "foo");
        assert_eq!(entries[0].1, vec![1.0, 2.0, 3.0]);
        let without = "foo 1.0 2.0\nbar 3.0 4.0\n";
        assert_eq!(parse_embeddings(without).unwrap().len(), 2);
        let ragged = "foo 1.0 2.0\nbar 3.0\n";
        assert!(parse_embeddings(ragged).is_err());
    }
}
