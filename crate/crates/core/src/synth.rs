//! Synthetic treebank generation for tests and controlled experiments.
//!
//! Trees are grown head-outward from ROOT: each head draws a number of
//! left and right children, child words come from a planted head-word →
//! modifier-word categorical table, and subtrees are laid out contiguously,
//! so every generated tree is projective by construction.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::corpus::{Sentence, Token, Treebank};

#[derive(Clone, Copy, Debug)]
pub struct SynthConfig {
    pub sentences: usize,
    /// Number of distinct surface words (excluding ROOT/UNK reserves).
    pub vocab_words: usize,
    pub seed: u64,
    /// Word-count bounds per sentence (ROOT excluded).
    pub min_words: usize,
    pub max_words: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { sentences: 100, vocab_words: 50, seed: 1, min_words: 3, max_words: 8 }
    }
}

/// The planted generative table: `probs[h][m]` with head index 0 standing
/// for ROOT and heads/modifiers 1..=V for words.
pub struct PlantedDecoder {
    probs: Vec<Vec<f64>>,
}

impl PlantedDecoder {
    /// Peaked per-head categoricals (symmetric Dirichlet, small α).
    fn sample(vocab_words: usize, rng: &mut ChaCha8Rng) -> Self {
        let gamma = Gamma::new(0.08, 1.0).expect("gamma shape");
        let mut probs = Vec::with_capacity(vocab_words + 1);
        for _ in 0..=vocab_words {
            let mut row: Vec<f64> = (0..vocab_words).map(|_| gamma.sample(rng) + 1e-9).collect();
            let total: f64 = row.iter().sum();
            for v in &mut row {
                *v /= total;
            }
            probs.push(row);
        }
        PlantedDecoder { probs }
    }

    fn draw_modifier(&self, head: usize, rng: &mut ChaCha8Rng) -> usize {
        let row = &self.probs[head];
        let mut target: f64 = rng.random();
        for (m, &p) in row.iter().enumerate() {
            target -= p;
            if target <= 0.0 {
                return m;
            }
        }
        row.len() - 1
    }
}

struct Node {
    word: usize,
    left: Vec<Node>,
    right: Vec<Node>,
}

const MAX_DEPTH: usize = 4;

fn children_count(depth: usize, rng: &mut ChaCha8Rng) -> usize {
    if depth >= MAX_DEPTH {
        return 0;
    }
    let continue_prob = 0.4 * 0.55f64.powi(depth as i32);
    let mut count = 0;
    while count < 3 && rng.random::<f64>() < continue_prob {
        count += 1;
    }
    count
}

fn grow(head_word: usize, depth: usize, planted: &PlantedDecoder, rng: &mut ChaCha8Rng) -> Node {
    let n_left = children_count(depth, rng);
    let n_right = children_count(depth, rng);
    let mut node = Node { word: head_word, left: Vec::new(), right: Vec::new() };
    for _ in 0..n_left {
        let w = planted.draw_modifier(head_word + 1, rng);
        node.left.push(grow(w, depth + 1, planted, rng));
    }
    for _ in 0..n_right {
        let w = planted.draw_modifier(head_word + 1, rng);
        node.right.push(grow(w, depth + 1, planted, rng));
    }
    node
}

fn layout(node: &Node, words: &mut Vec<usize>, arcs: &mut Vec<(usize, usize)>) -> usize {
    let left_roots: Vec<usize> = node.left.iter().map(|c| layout(c, words, arcs)).collect();
    let my_pos = words.len() + 1; // +1 for the ROOT slot
    words.push(node.word);
    let right_roots: Vec<usize> = node.right.iter().map(|c| layout(c, words, arcs)).collect();
    for child in left_roots.into_iter().chain(right_roots) {
        arcs.push((child, my_pos));
    }
    my_pos
}

fn word_form(word: usize) -> String {
    format!("w{word:02}")
}

fn pos_tag(word: usize) -> String {
    format!("T{}", word % 5)
}

/// Generates a fully labeled treebank from a freshly planted decoder table.
pub fn generate(config: &SynthConfig) -> Treebank {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let planted = PlantedDecoder::sample(config.vocab_words, &mut rng);
    let mut sentences = Vec::with_capacity(config.sentences);
    while sentences.len() < config.sentences {
        // ROOT draws at least one right child.
        let n_root_children = 1 + usize::from(rng.random::<f64>() < 0.25);
        let mut words = Vec::new();
        let mut arcs = Vec::new();
        for _ in 0..n_root_children {
            let w = planted.draw_modifier(0, &mut rng);
            let child_root = layout(&grow(w, 1, &planted, &mut rng), &mut words, &mut arcs);
            arcs.push((child_root, 0));
        }
        if words.len() < config.min_words || words.len() > config.max_words {
            continue;
        }
        let mut heads = vec![0usize; words.len() + 1];
        for (child, head) in arcs {
            heads[child] = head;
        }
        let mut tokens = vec![Token::synthetic_root()];
        for (i, &w) in words.iter().enumerate() {
            tokens.push(Token::synthetic(word_form(w), pos_tag(w), heads[i + 1]));
        }
        sentences.push(Sentence { tokens, is_labeled: true });
    }
    Treebank { sentences, vocab: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::is_projective_tree;

    #[test]
    fn generated_trees_are_projective_and_sized() {
        let config = SynthConfig { sentences: 200, vocab_words: 30, seed: 9, min_words: 3, max_words: 8 };
        let tb = generate(&config);
        assert_eq!(tb.len(), 200);
        for s in &tb.sentences {
            let words = s.len() - 1;
            assert!((3..=8).contains(&words), "sentence of {words} words");
            let heads = s.gold_heads().unwrap();
            assert!(is_projective_tree(&heads));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let config = SynthConfig { sentences: 20, vocab_words: 10, seed: 4, min_words: 3, max_words: 8 };
        let a = generate(&config);
        let b = generate(&config);
        let render = |t: &Treebank| crate::corpus::write_conllu(t);
        assert_eq!(render(&a), render(&b));
    }

    #[test]
    fn different_seeds_differ() {
        let a = generate(&SynthConfig { sentences: 20, vocab_words: 10, seed: 1, ..Default::default() });
        let b = generate(&SynthConfig { sentences: 20, vocab_words: 10, seed: 2, ..Default::default() });
        assert_ne!(crate::corpus::write_conllu(&a), crate::corpus::write_conllu(&b));
    }
}
