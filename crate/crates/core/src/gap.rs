//! Tree-latent-variable semi-supervised parsing.
//!
//! A discriminative tree CRF over neural arc scores is paired with a
//! generative head→modifier word model Θ. Adding `log θ` to each arc score
//! gives the transformed matrix S′; exact inference on S′ yields both the
//! joint likelihood of labeled sentences and, on unlabeled sentences, the
//! posterior over trees in arc-decomposed form. The E-step accumulates
//! powered posterior arc expectations into a count buffer and the M-step
//! renormalizes it in closed form.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::chart::{self, ChartError, HeadArray, NEG_INF};
use crate::corpus::Treebank;
use crate::mat::Mat;

/// σ is clamped here before the 1/(1-σ) exponent is formed; annealing "from
/// 1" literally would divide by zero, so the hard end of the schedule is an
/// exponent of 10 rather than infinity.
pub const SIGMA_MAX: f64 = 0.9;

#[derive(Debug, Error)]
pub enum GapError {
    #[error("labeled treebank is empty")]
    EmptyLabeledSet,
    #[error("treebank has no attached vocabulary")]
    MissingVocabulary,
    #[error("smoothing constant must be {requirement}, got {value}")]
    InvalidLambda { value: f64, requirement: &'static str },
    #[error("entropy exponent undefined: sigma must lie in [0, 1) after clamping, got {0}")]
    InvalidSigma(f64),
    #[error("gold tree is not projective")]
    NonProjectiveGold,
    #[error(transparent)]
    Chart(#[from] ChartError),
}

/// Head-word → modifier-word log-categoricals. `log_theta[(m, h)]` is the
/// log probability that head word `h` generates modifier word `m`; every
/// head column is a simplex over the full word vocabulary.
#[derive(Clone, Debug)]
pub struct DecoderParams {
    pub log_theta: Mat,
}

impl DecoderParams {
    pub fn vocab_size(&self) -> usize {
        self.log_theta.rows()
    }

    pub fn uniform(vocab: usize) -> Self {
        DecoderParams { log_theta: Mat::filled(vocab, vocab, -(vocab as f64).ln()) }
    }

    #[inline]
    pub fn log_prob(&self, head_word: u32, modifier_word: u32) -> f64 {
        self.log_theta[(modifier_word as usize, head_word as usize)]
    }

    /// Largest |Σ_m θ_mh − 1| over head columns.
    pub fn max_simplex_deviation(&self) -> f64 {
        let v = self.vocab_size();
        let mut worst: f64 = 0.0;
        for h in 0..v {
            let total: f64 = (0..v).map(|m| self.log_theta[(m, h)].exp()).sum();
            worst = worst.max((total - 1.0).abs());
        }
        worst
    }
}

/// Column-normalizes add-λ-smoothed counts into log probabilities. Heads
/// with zero total mass and λ=0 fall back to uniform columns.
fn normalize_counts(counts: &BTreeMap<(u32, u32), f64>, lambda: f64, vocab: usize) -> DecoderParams {
    let mut log_theta = Mat::filled(vocab, vocab, NEG_INF);
    let mut totals = vec![0.0; vocab];
    for (&(h, _), &c) in counts {
        totals[h as usize] += c;
    }
    for h in 0..vocab {
        let denom = totals[h] + lambda * vocab as f64;
        if denom <= 0.0 {
            let uniform = -(vocab as f64).ln();
            for m in 0..vocab {
                log_theta[(m, h)] = uniform;
            }
            continue;
        }
        for m in 0..vocab {
            let count = counts.get(&(h as u32, m as u32)).copied().unwrap_or(0.0);
            let p = (count + lambda) / denom;
            log_theta[(m, h)] = if p > 0.0 { p.ln() } else { NEG_INF };
        }
    }
    DecoderParams { log_theta }
}

/// Maximum-likelihood (add-λ) decoder from gold arcs of a labeled treebank.
pub fn init_decoder(labeled: &Treebank, lambda: f64) -> Result<DecoderParams, GapError> {
    if lambda <= 0.0 {
        return Err(GapError::InvalidLambda { value: lambda, requirement: "> 0" });
    }
    if labeled.is_empty() {
        return Err(GapError::EmptyLabeledSet);
    }
    let vocab = labeled.vocab.as_ref().ok_or(GapError::MissingVocabulary)?.word_count();
    let mut counts: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    for sentence in &labeled.sentences {
        let heads = match sentence.gold_heads() {
            Some(h) => h,
            None => continue,
        };
        let words = sentence.word_ids();
        for m in 1..sentence.len() {
            *counts.entry((words[heads[m]], words[m])).or_insert(0.0) += 1.0;
        }
    }
    Ok(normalize_counts(&counts, lambda, vocab))
}

/// `S′[h][m] = S[h][m] + log θ(word_m | word_h)` on legal arcs; the diagonal
/// and ROOT-as-modifier column are blocked outright.
pub fn transformed_scores(scores: &Mat, decoder: &DecoderParams, word_ids: &[u32]) -> Mat {
    let len = scores.rows();
    debug_assert_eq!(word_ids.len(), len);
    let mut out = Mat::filled(len, len, NEG_INF);
    for h in 0..len {
        for m in 1..len {
            if h == m {
                continue;
            }
            let add = decoder.log_prob(word_ids[h], word_ids[m]);
            let s = scores[(h, m)] + add;
            out[(h, m)] = if chart::is_blocked(s) { NEG_INF } else { s };
        }
    }
    out
}

/// Joint log likelihood of a gold tree under transformed scores, with its
/// gradient. The gradient w.r.t. `S′` is `1[arc in gold] − P[arc]`.
#[derive(Clone, Debug)]
pub struct SupervisedLoss {
    /// `tree_score(S′, gold) − log Z(S′)`; never positive.
    pub objective: f64,
    /// Gradient of the objective with respect to every S′ entry.
    pub d_scores: Mat,
}

pub fn supervised_loss(s_prime: &Mat, gold: &HeadArray) -> Result<SupervisedLoss, GapError> {
    let gold_score = chart::tree_score(s_prime, gold).map_err(|e| match e {
        ChartError::InvalidTree => GapError::NonProjectiveGold,
        other => GapError::Chart(other),
    })?;
    let (marginals, log_z) = chart::marginals(s_prime)?;
    let len = s_prime.rows();
    let mut d_scores = Mat::zeros(len, len);
    for h in 0..len {
        for m in 1..len {
            if h != m {
                d_scores[(h, m)] = -marginals[(h, m)];
            }
        }
    }
    for m in 1..len {
        d_scores[(gold[m], m)] += 1.0;
    }
    Ok(SupervisedLoss { objective: gold_score - log_z, d_scores })
}

/// Marginal log likelihood of the words given the sentence:
/// `log U(x) − log Z(x)` where U sums transformed scores over all trees.
pub fn unlabeled_objective(scores: &Mat, s_prime: &Mat) -> Result<f64, GapError> {
    let log_u = chart::inside(s_prime)?.log_z;
    let log_z = chart::inside(scores)?.log_z;
    Ok(log_u - log_z)
}

/// Exact posterior arc expectations under the transformed scores: the
/// analytic replacement for sampling trees from the posterior.
pub fn posterior_marginals(s_prime: &Mat) -> Result<Mat, GapError> {
    Ok(chart::marginals(s_prime)?.0)
}

/// Sparse accumulator of expected (head word, modifier word) counts.
/// A BTreeMap keeps merge and normalization order deterministic.
#[derive(Clone, Debug, Default)]
pub struct CountBuffer {
    counts: BTreeMap<(u32, u32), f64>,
}

impl CountBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn get(&self, head_word: u32, modifier_word: u32) -> f64 {
        self.counts.get(&(head_word, modifier_word)).copied().unwrap_or(0.0)
    }

    pub fn add(&mut self, head_word: u32, modifier_word: u32, value: f64) {
        debug_assert!(value >= 0.0);
        *self.counts.entry((head_word, modifier_word)).or_insert(0.0) += value;
    }

    /// Entrywise addition; buffers from concurrent sentences merge
    /// associatively.
    pub fn merge(&mut self, other: &CountBuffer) {
        for (&k, &v) in &other.counts {
            *self.counts.entry(k).or_insert(0.0) += v;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for v in self.counts.values_mut() {
            *v *= factor;
        }
    }

    /// Adds `Q[h][m]^(1/(1-σ))` for every legal arc, keyed by word pair.
    pub fn accumulate(&mut self, q: &Mat, word_ids: &[u32], sigma: f64) -> Result<(), GapError> {
        if !(0.0..1.0).contains(&sigma) {
            return Err(GapError::InvalidSigma(sigma));
        }
        let exponent = 1.0 / (1.0 - sigma);
        let len = q.rows();
        for h in 0..len {
            for m in 1..len {
                if h == m {
                    continue;
                }
                let prob = q[(h, m)];
                if prob > 0.0 {
                    self.add(word_ids[h], word_ids[m], prob.powf(exponent));
                }
            }
        }
        Ok(())
    }

    /// Adds unit counts for every gold arc (optional labeled-count mixing).
    pub fn accumulate_gold(&mut self, gold: &HeadArray, word_ids: &[u32]) {
        for m in 1..gold.len() {
            self.add(word_ids[gold[m]], word_ids[m], 1.0);
        }
    }
}

/// Closed-form global decoder update: column-normalized add-λ counts, the
/// unique maximizer of Σ buffer[h,m]·log θ_mh (+ λ pseudo-counts) under the
/// per-head simplex constraints.
pub fn m_step(buffer: &CountBuffer, lambda: f64, vocab: usize) -> Result<DecoderParams, GapError> {
    if lambda < 0.0 {
        return Err(GapError::InvalidLambda { value: lambda, requirement: ">= 0" });
    }
    Ok(normalize_counts(&buffer.counts, lambda, vocab))
}

/// Linear σ schedule, clamped into [0, SIGMA_MAX] with end ≤ start.
#[derive(Clone, Copy, Debug)]
pub struct AnnealSchedule {
    pub sigma_start: f64,
    pub sigma_end: f64,
    pub epochs: usize,
}

impl AnnealSchedule {
    pub fn new(sigma_start: f64, sigma_end: f64, epochs: usize) -> Self {
        let start = sigma_start.clamp(0.0, SIGMA_MAX);
        let end = sigma_end.clamp(0.0, start);
        AnnealSchedule { sigma_start: start, sigma_end: end, epochs }
    }

    pub fn sigma_at(&self, epoch: usize) -> f64 {
        if self.epochs <= 1 || epoch + 1 >= self.epochs {
            return if self.epochs <= 1 { self.sigma_start } else { self.sigma_end };
        }
        let frac = epoch as f64 / (self.epochs - 1) as f64;
        self.sigma_start + (self.sigma_end - self.sigma_start) * frac
    }
}

/// `E_{T∼Q}[log P_Θ(m|T)] = Σ_arcs Q[h][m] · log θ`, the analytic ELBO
/// reconstruction term.
pub fn expected_log_reconstruction(q: &Mat, decoder: &DecoderParams, word_ids: &[u32]) -> f64 {
    let len = q.rows();
    let mut total = 0.0;
    for h in 0..len {
        for m in 1..len {
            if h == m {
                continue;
            }
            let prob = q[(h, m)];
            if prob > 0.0 {
                total += prob * decoder.log_prob(word_ids[h], word_ids[m]);
            }
        }
    }
    total
}
