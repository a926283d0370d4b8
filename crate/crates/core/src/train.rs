//! Training drivers for the three modes.
//!
//! All three share the outer loop: per-epoch passes over the data, a dev
//! evaluation, early stopping on dev attachment score, and retention of the
//! best-dev parameters. Everything stochastic (shuffles, initialization,
//! reparameterization noise) is driven by streams derived from one seed, so
//! a fixed configuration reproduces its run bit for bit.

use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::chart::ChartError;
use crate::corpus::{uas, CorpusError, Treebank};
use crate::encoder::{self, Adam, Dims, EncoderError, EncoderParams};
use crate::gap::{self, AnnealSchedule, CountBuffer, GapError};
use crate::lap::{self, LapError};
use crate::model::{Mode, ModelError, TrainedModel};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("labeled training set is empty")]
    EmptyLabeledSet,
    #[error("development set is empty or unlabeled (needed for early stopping)")]
    UnusableDevSet,
    #[error("training treebanks carry no attached vocabulary")]
    MissingVocabulary,
    #[error("non-finite objective at epoch {epoch}: {context}")]
    NonFinite { epoch: usize, context: String },
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Gap(#[from] GapError),
    #[error(transparent)]
    Lap(#[from] LapError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub dims: Dims,
    pub learning_rate: f64,
    pub epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub sigma_start: f64,
    pub sigma_end: f64,
    pub lambda_init: f64,
    pub lambda_mstep: f64,
    pub n_samples: usize,
    pub kl_weight: f64,
    pub mix_labeled_counts: bool,
    pub refresh_decoder_each_epoch: bool,
    pub ignore_punct: bool,
    /// Constrain predictions (dev evaluation included) to one ROOT child.
    pub single_root: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dims: Dims::default(),
            learning_rate: 1e-3,
            epochs: 30,
            patience: 5,
            seed: 42,
            sigma_start: 1.0,
            sigma_end: 0.3,
            lambda_init: 0.1,
            lambda_mstep: 1e-3,
            n_samples: 1,
            kl_weight: 1.0,
            mix_labeled_counts: false,
            refresh_decoder_each_epoch: false,
            ignore_punct: false,
            single_root: false,
        }
    }
}

/// One tab-separated line per epoch: epoch, σ, mean labeled objective, mean
/// unlabeled objective, dev UAS.
#[derive(Clone, Copy, Debug)]
pub struct EpochLog {
    pub epoch: usize,
    pub sigma: f64,
    pub mean_labeled: f64,
    pub mean_unlabeled: f64,
    pub dev_uas: f64,
}

impl fmt::Display for EpochLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{:.6}\t{:.6}\t{:.6}\t{:.4}",
            self.epoch, self.sigma, self.mean_labeled, self.mean_unlabeled, self.dev_uas
        )
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: TrainedModel,
    pub logs: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_dev_uas: f64,
}

fn mean(total: f64, count: usize) -> f64 {
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

/// Trains the selected mode and returns the best-dev model.
pub fn train(
    mode: Mode,
    labeled: &Treebank,
    unlabeled: &Treebank,
    dev: &Treebank,
    pretrained: Option<&[(String, Vec<f64>)]>,
    config: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    if labeled.is_empty() {
        return Err(TrainError::EmptyLabeledSet);
    }
    let vocab: Arc<_> = labeled.vocab.clone().ok_or(TrainError::MissingVocabulary)?;
    if dev.is_empty() || dev.sentences.iter().any(|s| !s.is_labeled) {
        return Err(TrainError::UnusableDevSet);
    }

    let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x5eed_0001));
    let mut noise_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x5eed_0002));

    let mut params = EncoderParams::init(
        vocab.word_count(),
        vocab.pos_count(),
        config.dims,
        mode == Mode::Lap,
        &mut init_rng,
    );
    if let Some(entries) = pretrained {
        params.load_pretrained_words(entries, &vocab);
    }
    let mut decoder = match mode {
        Mode::Gap => Some(gap::init_decoder(labeled, config.lambda_init)?),
        _ => None,
    };
    let mut adam = Adam::new(config.learning_rate);
    let schedule = AnnealSchedule::new(config.sigma_start, config.sigma_end, config.epochs.max(1));

    let mut best_params = params.clone();
    let mut best_decoder = decoder.clone();
    let mut best_uas = f64::NEG_INFINITY;
    let mut best_epoch = 0usize;
    let mut stale_epochs = 0usize;
    let mut logs = Vec::new();

    for epoch in 0..config.epochs {
        let sigma = schedule.sigma_at(epoch);
        if mode == Mode::Gap && config.refresh_decoder_each_epoch && epoch > 0 {
            decoder = Some(gap::init_decoder(labeled, config.lambda_init)?);
        }

        let mut labeled_total = 0.0;
        let mut labeled_count = 0usize;
        let mut unlabeled_total = 0.0;
        let mut unlabeled_count = 0usize;

        match mode {
            Mode::CrfSupervised | Mode::Gap => {
                let mut order: Vec<usize> = (0..labeled.len()).collect();
                order.shuffle(&mut shuffle_rng);
                for &i in &order {
                    let sentence = &labeled.sentences[i];
                    let gold = sentence.gold_heads().ok_or(TrainError::EmptyLabeledSet)?;
                    let words = sentence.word_ids();
                    let tags: Vec<u32> = sentence.tokens.iter().map(|t| t.pos_id).collect();
                    let encoded = encoder::encode(&words, &tags, &params)?;
                    let (scores, cache) = encoder::score_arcs(&encoded, &params);
                    let loss = match (&mode, &decoder) {
                        (Mode::Gap, Some(dec)) => {
                            let s_prime = gap::transformed_scores(&scores, dec, &words);
                            gap::supervised_loss(&s_prime, &gold)?
                        }
                        _ => gap::supervised_loss(&scores, &gold)?,
                    };
                    if !loss.objective.is_finite() {
                        return Err(TrainError::NonFinite { epoch, context: "labeled objective".into() });
                    }
                    labeled_total += loss.objective;
                    labeled_count += 1;
                    // descend on the negated objective
                    let mut d_scores = loss.d_scores;
                    for v in d_scores.as_mut_slice() {
                        *v = -*v;
                    }
                    let mut grads = params.zeros_like();
                    encoder::backward(&d_scores, &encoded, &cache, &params, &mut grads);
                    adam.step(&mut params, &grads)?;
                }
            }
            Mode::Lap => {
                // one interleaved Adam stream over labeled and unlabeled data
                let mut order: Vec<(bool, usize)> = (0..labeled.len())
                    .map(|i| (true, i))
                    .chain((0..unlabeled.len()).map(|i| (false, i)))
                    .collect();
                order.shuffle(&mut shuffle_rng);
                for &(is_labeled, i) in &order {
                    let sentence = if is_labeled { &labeled.sentences[i] } else { &unlabeled.sentences[i] };
                    let words = sentence.word_ids();
                    let tags: Vec<u32> = sentence.tokens.iter().map(|t| t.pos_id).collect();
                    let gold = sentence.gold_heads();
                    let noise = lap::draw_noise(words.len(), config.dims.latent, config.n_samples.max(1), &mut noise_rng);
                    let mut grads = params.zeros_like();
                    let breakdown = lap::lap_loss_weighted(
                        &words,
                        &tags,
                        gold.as_ref(),
                        is_labeled,
                        &noise,
                        config.kl_weight,
                        &params,
                        &mut grads,
                    )?;
                    if !breakdown.total.is_finite() {
                        return Err(TrainError::NonFinite { epoch, context: "evidence bound".into() });
                    }
                    if is_labeled {
                        labeled_total += breakdown.total;
                        labeled_count += 1;
                    } else {
                        unlabeled_total += breakdown.total;
                        unlabeled_count += 1;
                    }
                    for (_, _, g) in grads.tensors_mut() {
                        for v in g {
                            *v = -*v;
                        }
                    }
                    adam.step(&mut params, &grads)?;
                }
            }
        }

        // exact E-step over unlabeled data, then the closed-form M-step
        if mode == Mode::Gap && !unlabeled.is_empty() {
            let dec = decoder.as_ref().expect("gap decoder");
            let mut buffer = CountBuffer::new();
            for sentence in &unlabeled.sentences {
                let words = sentence.word_ids();
                let tags: Vec<u32> = sentence.tokens.iter().map(|t| t.pos_id).collect();
                let encoded = encoder::encode(&words, &tags, &params)?;
                let (scores, _) = encoder::score_arcs(&encoded, &params);
                let s_prime = gap::transformed_scores(&scores, dec, &words);
                let q = gap::posterior_marginals(&s_prime)?;
                buffer.accumulate(&q, &words, sigma)?;
                let j_u = gap::unlabeled_objective(&scores, &s_prime)?;
                if !j_u.is_finite() {
                    return Err(TrainError::NonFinite { epoch, context: "unlabeled objective".into() });
                }
                unlabeled_total += j_u;
                unlabeled_count += 1;
            }
            if config.mix_labeled_counts {
                for sentence in &labeled.sentences {
                    if let Some(gold) = sentence.gold_heads() {
                        buffer.accumulate_gold(&gold, &sentence.word_ids());
                    }
                }
            }
            decoder = Some(gap::m_step(&buffer, config.lambda_mstep, vocab.word_count())?);
        }

        let snapshot = TrainedModel {
            mode,
            vocab: vocab.clone(),
            params: params.clone(),
            decoder: decoder.clone(),
            single_root: config.single_root,
        };
        let predictions = snapshot.predict_all(&dev.sentences)?;
        let dev_uas = uas(&predictions, &dev.sentences, config.ignore_punct)?;
        logs.push(EpochLog {
            epoch,
            sigma,
            mean_labeled: mean(labeled_total, labeled_count),
            mean_unlabeled: mean(unlabeled_total, unlabeled_count),
            dev_uas,
        });

        if dev_uas > best_uas {
            best_uas = dev_uas;
            best_params = params.clone();
            best_decoder = decoder.clone();
            best_epoch = epoch;
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= config.patience {
                break;
            }
        }
    }

    Ok(TrainOutcome {
        model: TrainedModel { mode, vocab, params: best_params, decoder: best_decoder, single_root: config.single_root },
        logs,
        best_epoch,
        best_dev_uas: best_uas,
    })
}

/// Train-set attachment score of a model (overfitting checks).
pub fn train_set_uas(model: &TrainedModel, treebank: &Treebank) -> Result<f64, TrainError> {
    let predictions = model.predict_all(&treebank.sentences)?;
    Ok(uas(&predictions, &treebank.sentences, false)?)
}
