//! Gaussian-latent semi-supervised parsing.
//!
//! Every token gets a diagonal-Gaussian latent vector inferred from the
//! LSTM states. The training objective is a reparameterized evidence lower
//! bound: a per-token reconstruction softmax over the word vocabulary, the
//! closed-form KL against a standard-normal prior, and (for labeled
//! sentences) a tree-CRF log likelihood over arc scores computed from the
//! latent vectors. Prediction uses the posterior means directly.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::chart::{self, ChartError, HeadArray};
use crate::encoder::{self, Encoded, EncoderParams};
use crate::gap::{self, GapError};
use crate::mat::Mat;

/// logvar is clamped here before exponentiation.
pub const LOGVAR_CLAMP: f64 = 8.0;

#[derive(Debug, Error)]
pub enum LapError {
    #[error("encoder parameters carry no latent heads")]
    MissingLatentParams,
    #[error("tree term requested without a gold tree")]
    GoldTreeRequired,
    #[error("sample count must be >= 1")]
    InvalidSampleCount,
    #[error("gold tree is not projective")]
    NonProjectiveGold,
    #[error(transparent)]
    Encoder(#[from] encoder::EncoderError),
    #[error(transparent)]
    Chart(#[from] ChartError),
}

/// Per-token diagonal Gaussian posteriors, one row per token (ROOT
/// included).
#[derive(Clone, Debug)]
pub struct GaussianParams {
    pub mu: Mat,
    pub logvar: Mat,
}

/// Linear heads on LSTM states; logvar rows are clamped to ±LOGVAR_CLAMP.
pub fn latent_params(encoded: &Encoded, params: &EncoderParams) -> Result<GaussianParams, LapError> {
    let lat = params.latent.as_ref().ok_or(LapError::MissingLatentParams)?;
    let len = encoded.hidden.len();
    let d = lat.w_mu.rows();
    let mut mu = Mat::zeros(len, d);
    let mut logvar = Mat::zeros(len, d);
    for t in 0..len {
        lat.w_mu.matvec_acc(&encoded.hidden[t], mu.row_mut(t));
        lat.w_logvar.matvec_acc(&encoded.hidden[t], logvar.row_mut(t));
        for v in logvar.row_mut(t) {
            *v = v.clamp(-LOGVAR_CLAMP, LOGVAR_CLAMP);
        }
    }
    Ok(GaussianParams { mu, logvar })
}

/// Reparameterized draw `z = μ + exp(logvar/2) ⊙ noise`.
pub fn sample_latent(g: &GaussianParams, noise: &Mat) -> Mat {
    debug_assert_eq!(noise.rows(), g.mu.rows());
    debug_assert_eq!(noise.cols(), g.mu.cols());
    Mat::from_fn(g.mu.rows(), g.mu.cols(), |t, d| {
        g.mu[(t, d)] + (g.logvar[(t, d)] * 0.5).exp() * noise[(t, d)]
    })
}

/// KL(Q || N(0, I)) summed over tokens and dimensions; zero exactly when
/// μ = 0 and logvar = 0.
pub fn kl_gaussian(g: &GaussianParams) -> f64 {
    let mut total = 0.0;
    for t in 0..g.mu.rows() {
        for d in 0..g.mu.cols() {
            let mu = g.mu[(t, d)];
            let lv = g.logvar[(t, d)];
            total += 0.5 * (mu * mu + lv.exp() - 1.0 - lv);
        }
    }
    total
}

fn log_softmax_pick(logits: &[f64], target: usize) -> f64 {
    let hi = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_norm = hi + logits.iter().map(|&x| (x - hi).exp()).sum::<f64>().ln();
    logits[target] - log_norm
}

/// Σ_{t≥1} log softmax(W_rec z_t + b_rec)[word_t].
pub fn reconstruction_logprob(z: &Mat, word_ids: &[u32], params: &EncoderParams) -> Result<f64, LapError> {
    let lat = params.latent.as_ref().ok_or(LapError::MissingLatentParams)?;
    let mut total = 0.0;
    for (t, &word) in word_ids.iter().enumerate().skip(1) {
        let mut logits = lat.b_rec.clone();
        lat.w_rec.matvec_acc(z.row(t), &mut logits);
        total += log_softmax_pick(&logits, word as usize);
    }
    Ok(total)
}

/// Objective pieces; `total = recon - kl + tree` where `tree` already
/// carries the ε switch (zero when the tree term is off).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LapLossBreakdown {
    pub recon: f64,
    pub kl: f64,
    pub tree: f64,
    pub total: f64,
}

/// Standard-normal noise matrices for `n` reparameterized samples.
pub fn draw_noise(len: usize, d_latent: usize, n: usize, rng: &mut impl Rng) -> Vec<Mat> {
    (0..n).map(|_| Mat::from_fn(len, d_latent, |_, _| rng.sample(StandardNormal))).collect()
}

/// Evidence-lower-bound evaluation with gradients of the objective (to
/// maximize) accumulated into `grads`. The reconstruction and tree terms
/// average over the supplied noise draws; the KL term is exact.
pub fn lap_loss(
    word_ids: &[u32],
    pos_ids: &[u32],
    gold: Option<&HeadArray>,
    with_tree_term: bool,
    noise: &[Mat],
    params: &EncoderParams,
    grads: &mut EncoderParams,
) -> Result<LapLossBreakdown, LapError> {
    lap_loss_weighted(word_ids, pos_ids, gold, with_tree_term, noise, 1.0, params, grads)
}

/// [`lap_loss`] with a constant multiplier on the KL term. At weight 1 this
/// is the evidence lower bound; smaller weights trade the bound guarantee
/// for less posterior-variance pressure. The reported `kl` field carries
/// the weighted contribution so `total = recon - kl + tree` always holds.
#[allow(clippy::too_many_arguments)]
pub fn lap_loss_weighted(
    word_ids: &[u32],
    pos_ids: &[u32],
    gold: Option<&HeadArray>,
    with_tree_term: bool,
    noise: &[Mat],
    kl_weight: f64,
    params: &EncoderParams,
    grads: &mut EncoderParams,
) -> Result<LapLossBreakdown, LapError> {
    if noise.is_empty() {
        return Err(LapError::InvalidSampleCount);
    }
    if with_tree_term && gold.is_none() {
        return Err(LapError::GoldTreeRequired);
    }
    let lat_dims = params.latent.as_ref().ok_or(LapError::MissingLatentParams)?;
    let d_latent = lat_dims.w_mu.rows();
    let encoded = encoder::encode(word_ids, pos_ids, params)?;
    let len = word_ids.len();

    // Unclamped pre-activations decide where clamp gradients vanish.
    let lat = params.latent.as_ref().unwrap();
    let mut raw_logvar = Mat::zeros(len, d_latent);
    for t in 0..len {
        lat.w_logvar.matvec_acc(&encoded.hidden[t], raw_logvar.row_mut(t));
    }
    let gaussian = latent_params(&encoded, params)?;

    let kl = kl_weight * kl_gaussian(&gaussian);
    let scale = 1.0 / noise.len() as f64;
    let mut recon = 0.0;
    let mut tree = 0.0;
    let mut d_mu = Mat::zeros(len, d_latent);
    let mut d_logvar = Mat::zeros(len, d_latent);
    let mut d_hidden = vec![vec![0.0; encoded.hidden[0].len()]; len];

    for eps in noise {
        let z = sample_latent(&gaussian, eps);
        let z_rows: Vec<Vec<f64>> = (0..len).map(|t| z.row(t).to_vec()).collect();
        let mut d_z = Mat::zeros(len, d_latent);

        // reconstruction term and its gradient
        for t in 1..len {
            let mut logits = lat.b_rec.clone();
            lat.w_rec.matvec_acc(&z_rows[t], &mut logits);
            let target = word_ids[t] as usize;
            recon += scale * log_softmax_pick(&logits, target);
            let hi = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let norm: f64 = logits.iter().map(|&x| (x - hi).exp()).sum();
            let g_lat = grads.latent.as_mut().expect("gradient latent heads");
            for (k, &logit) in logits.iter().enumerate() {
                let softmax = (logit - hi).exp() / norm;
                let d_logit = scale * (if k == target { 1.0 } else { 0.0 } - softmax);
                if d_logit == 0.0 {
                    continue;
                }
                g_lat.b_rec[k] += d_logit;
                let row = g_lat.w_rec.row_mut(k);
                for (dst, &zv) in row.iter_mut().zip(&z_rows[t]) {
                    *dst += d_logit * zv;
                }
                for d in 0..d_latent {
                    d_z[(t, d)] += d_logit * lat.w_rec[(k, d)];
                }
            }
        }

        // tree-CRF term over latent-vector arc scores
        if with_tree_term {
            let gold = gold.unwrap();
            let (scores, cache) =
                encoder::score_arcs_from(&z_rows, &lat.w_head, &lat.w_mod, &lat.bias, &lat.w_score);
            let loss = gap::supervised_loss(&scores, gold).map_err(|e| match e {
                GapError::NonProjectiveGold => LapError::NonProjectiveGold,
                GapError::Chart(c) => LapError::Chart(c),
                _ => LapError::NonProjectiveGold,
            })?;
            tree += scale * loss.objective;
            let mut d_scores = loss.d_scores;
            for v in d_scores.as_mut_slice() {
                *v *= scale;
            }
            let g_lat = grads.latent.as_mut().expect("gradient latent heads");
            let d_z_tree = encoder::score_arcs_backward(
                &d_scores,
                &z_rows,
                &cache,
                &lat.w_head,
                &lat.w_mod,
                &lat.w_score,
                &mut g_lat.w_head,
                &mut g_lat.w_mod,
                &mut g_lat.bias,
                &mut g_lat.w_score,
            );
            for t in 0..len {
                for d in 0..d_latent {
                    d_z[(t, d)] += d_z_tree[t][d];
                }
            }
        }

        // reparameterization: z = μ + exp(lv/2)·ε
        for t in 0..len {
            for d in 0..d_latent {
                let g = d_z[(t, d)];
                if g == 0.0 {
                    continue;
                }
                d_mu[(t, d)] += g;
                d_logvar[(t, d)] += g * eps[(t, d)] * 0.5 * (gaussian.logvar[(t, d)] * 0.5).exp();
            }
        }
    }

    // KL gradients (of the objective: -KL enters with a minus sign)
    for t in 0..len {
        for d in 0..d_latent {
            d_mu[(t, d)] -= kl_weight * gaussian.mu[(t, d)];
            d_logvar[(t, d)] -= kl_weight * 0.5 * (gaussian.logvar[(t, d)].exp() - 1.0);
        }
    }

    // through the latent heads into the LSTM states
    let g_lat = grads.latent.as_mut().expect("gradient latent heads");
    for t in 0..len {
        let clamp_mask: Vec<f64> = (0..d_latent)
            .map(|d| if raw_logvar[(t, d)].abs() < LOGVAR_CLAMP { 1.0 } else { 0.0 })
            .collect();
        let d_lv_masked: Vec<f64> = (0..d_latent).map(|d| d_logvar[(t, d)] * clamp_mask[d]).collect();
        g_lat.w_mu.add_outer(d_mu.row(t), &encoded.hidden[t]);
        g_lat.w_logvar.add_outer(&d_lv_masked, &encoded.hidden[t]);
        lat.w_mu.tmatvec_acc(d_mu.row(t), &mut d_hidden[t]);
        lat.w_logvar.tmatvec_acc(&d_lv_masked, &mut d_hidden[t]);
    }
    encoder::encode_backward(&d_hidden, &encoded, params, grads);

    let total = recon - kl + tree;
    Ok(LapLossBreakdown { recon, kl, tree, total })
}

/// Arc scores from posterior means (z := μ) under the latent scorer.
pub fn lap_scores(word_ids: &[u32], pos_ids: &[u32], params: &EncoderParams) -> Result<Mat, LapError> {
    let lat = params.latent.as_ref().ok_or(LapError::MissingLatentParams)?;
    let encoded = encoder::encode(word_ids, pos_ids, params)?;
    let gaussian = latent_params(&encoded, params)?;
    let len = word_ids.len();
    let mu_rows: Vec<Vec<f64>> = (0..len).map(|t| gaussian.mu.row(t).to_vec()).collect();
    Ok(encoder::score_arcs_from(&mu_rows, &lat.w_head, &lat.w_mod, &lat.bias, &lat.w_score).0)
}

/// Decode from posterior means: z := μ, score arcs with the latent scorer,
/// then Viterbi.
pub fn lap_predict(word_ids: &[u32], pos_ids: &[u32], params: &EncoderParams) -> Result<HeadArray, LapError> {
    let scores = lap_scores(word_ids, pos_ids, params)?;
    Ok(chart::eisner_decode(&scores)?.0)
}
