//! A trained parser: mode tag, vocabulary, encoder parameters, and (for the
//! tree-latent model) the generative decoder.

use std::sync::Arc;

use thiserror::Error;

use crate::chart::{self, ChartError, HeadArray};
use crate::corpus::{CorpusError, Sentence, Vocabulary};
use crate::encoder::{self, EncoderError, EncoderParams};
use crate::gap::{transformed_scores, DecoderParams};
use crate::lap::{self, LapError};
use crate::mat::Mat;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    CrfSupervised,
    Gap,
    Lap,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::CrfSupervised => "crf-supervised",
            Mode::Gap => "gap",
            Mode::Lap => "lap",
        }
    }

    pub fn tag(&self) -> u8 {
        match self {
            Mode::CrfSupervised => 0,
            Mode::Gap => 1,
            Mode::Lap => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Mode> {
        match tag {
            0 => Some(Mode::CrfSupervised),
            1 => Some(Mode::Gap),
            2 => Some(Mode::Lap),
            _ => None,
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Mode, String> {
        match s {
            "crf-supervised" => Ok(Mode::CrfSupervised),
            "gap" => Ok(Mode::Gap),
            "lap" => Ok(Mode::Lap),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model mode {0:?} requires decoder parameters")]
    MissingDecoder(&'static str),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Lap(#[from] LapError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Clone, Debug)]
pub struct TrainedModel {
    pub mode: Mode,
    pub vocab: Arc<Vocabulary>,
    pub params: EncoderParams,
    pub decoder: Option<DecoderParams>,
    /// Constrain predictions to a single ROOT child (off by default; the
    /// chart recurrences themselves allow multiple ROOT children).
    pub single_root: bool,
}

impl TrainedModel {
    fn decode(&self, scores: &Mat) -> Result<HeadArray, ModelError> {
        let decoded = if self.single_root {
            chart::eisner_decode_single_root(scores)?
        } else {
            chart::eisner_decode(scores)?
        };
        Ok(decoded.0)
    }

    /// Predicts a projective tree for one vocabularized sentence.
    ///
    /// The supervised CRF decodes the raw arc scores; the tree-latent model
    /// decodes the transformed scores so the generative decoder informs
    /// prediction; the Gaussian-latent model scores arcs from posterior
    /// means.
    pub fn predict(&self, sentence: &Sentence) -> Result<HeadArray, ModelError> {
        let words = sentence.word_ids();
        let tags: Vec<u32> = sentence.tokens.iter().map(|t| t.pos_id).collect();
        match self.mode {
            Mode::CrfSupervised => {
                let encoded = encoder::encode(&words, &tags, &self.params)?;
                let (scores, _) = encoder::score_arcs(&encoded, &self.params);
                self.decode(&scores)
            }
            Mode::Gap => {
                let decoder = self.decoder.as_ref().ok_or(ModelError::MissingDecoder("gap"))?;
                let encoded = encoder::encode(&words, &tags, &self.params)?;
                let (scores, _) = encoder::score_arcs(&encoded, &self.params);
                let s_prime = transformed_scores(&scores, decoder, &words);
                self.decode(&s_prime)
            }
            Mode::Lap => {
                if self.single_root {
                    let scores = lap::lap_scores(&words, &tags, &self.params)?;
                    self.decode(&scores)
                } else {
                    Ok(lap::lap_predict(&words, &tags, &self.params)?)
                }
            }
        }
    }

    pub fn predict_all(&self, sentences: &[Sentence]) -> Result<Vec<HeadArray>, ModelError> {
        sentences.iter().map(|s| self.predict(s)).collect()
    }
}
