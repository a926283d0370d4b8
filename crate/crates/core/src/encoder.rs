//! The differentiable arc scorer: word/POS embeddings feed a bidirectional
//! LSTM, whose per-token states are projected into head and modifier
//! representations and combined through a tanh layer into arc scores
//! `s(h, m) = w · tanh(W_h o_h + W_m o_m + b)`.
//!
//! Gradients are written by hand (reverse mode); `Adam` applies them. All
//! arithmetic is f64: the gradient checks in the test suite compare against
//! central finite differences at 1e-4 relative tolerance, which single
//! precision would not survive.

use std::collections::HashMap;

use rand::Rng;
use thiserror::Error;

use crate::mat::{axpy, Mat};

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("token id {id} out of range for embedding table of {size} rows")]
    IdOutOfRange { id: u32, size: usize },
    #[error("non-finite gradient in tensor {0}")]
    NonFiniteGradient(String),
    #[error("parameter/gradient mismatch at tensor {0}")]
    GradientShape(String),
}

/// Layer widths. The word dimension default matches the 100-dimensional
/// pretrained embeddings this model family is usually run with; the rest are
/// conventional bi-LSTM parser sizes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dims {
    pub word_emb: usize,
    pub pos_emb: usize,
    /// Per-direction LSTM state width.
    pub hidden: usize,
    /// Arc scorer hidden width applied to LSTM states.
    pub arc_hidden: usize,
    /// Gaussian latent width (per token).
    pub latent: usize,
    /// Arc scorer hidden width applied to latent vectors.
    pub latent_arc_hidden: usize,
}

impl Default for Dims {
    fn default() -> Self {
        Dims { word_emb: 100, pos_emb: 25, hidden: 125, arc_hidden: 100, latent: 100, latent_arc_hidden: 100 }
    }
}

/// Single-direction LSTM weights, gate order `[input, forget, cell, output]`
/// in blocks of `hidden`.
#[derive(Clone, Debug)]
pub struct LstmParams {
    pub w_input: Mat,
    pub w_hidden: Mat,
    pub bias: Vec<f64>,
}

impl LstmParams {
    fn zeros(input: usize, hidden: usize) -> Self {
        LstmParams { w_input: Mat::zeros(4 * hidden, input), w_hidden: Mat::zeros(4 * hidden, hidden), bias: vec![0.0; 4 * hidden] }
    }
}

/// Extra heads for the Gaussian-latent model: posterior means and log
/// variances from LSTM states, a reconstruction softmax over the word
/// vocabulary, and a second arc scorer sized for latent vectors.
#[derive(Clone, Debug)]
pub struct LatentParams {
    pub w_mu: Mat,
    pub w_logvar: Mat,
    pub w_rec: Mat,
    pub b_rec: Vec<f64>,
    pub w_head: Mat,
    pub w_mod: Mat,
    pub bias: Vec<f64>,
    pub w_score: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct EncoderParams {
    pub dims: Dims,
    pub word_emb: Mat,
    pub pos_emb: Mat,
    pub fwd: LstmParams,
    pub bwd: LstmParams,
    pub w_head: Mat,
    pub w_mod: Mat,
    pub bias: Vec<f64>,
    pub w_score: Vec<f64>,
    pub latent: Option<LatentParams>,
}

fn uniform_init(rng: &mut impl Rng, mat: &mut Mat, fan_in: usize) {
    let bound = (3.0 / fan_in as f64).sqrt();
    for v in mat.as_mut_slice() {
        *v = rng.random_range(-bound..bound);
    }
}

fn uniform_init_vec(rng: &mut impl Rng, v: &mut [f64], fan_in: usize) {
    let bound = (3.0 / fan_in as f64).sqrt();
    for x in v {
        *x = rng.random_range(-bound..bound);
    }
}

impl EncoderParams {
    /// Random initialization: uniform ±sqrt(3/fan_in) everywhere, zero
    /// biases except the LSTM forget gates at +1.
    pub fn init(word_vocab: usize, pos_vocab: usize, dims: Dims, with_latent: bool, rng: &mut impl Rng) -> Self {
        let input = dims.word_emb + dims.pos_emb;
        let h = dims.hidden;
        let mut p = EncoderParams {
            dims,
            word_emb: Mat::zeros(word_vocab, dims.word_emb),
            pos_emb: Mat::zeros(pos_vocab, dims.pos_emb),
            fwd: LstmParams::zeros(input, h),
            bwd: LstmParams::zeros(input, h),
            w_head: Mat::zeros(dims.arc_hidden, 2 * h),
            w_mod: Mat::zeros(dims.arc_hidden, 2 * h),
            bias: vec![0.0; dims.arc_hidden],
            w_score: vec![0.0; dims.arc_hidden],
            latent: None,
        };
        uniform_init(rng, &mut p.word_emb, dims.word_emb);
        uniform_init(rng, &mut p.pos_emb, dims.pos_emb);
        for lstm in [&mut p.fwd, &mut p.bwd] {
            uniform_init(rng, &mut lstm.w_input, input);
            uniform_init(rng, &mut lstm.w_hidden, h);
            for b in &mut lstm.bias[h..2 * h] {
                *b = 1.0;
            }
        }
        uniform_init(rng, &mut p.w_head, 2 * h);
        uniform_init(rng, &mut p.w_mod, 2 * h);
        uniform_init_vec(rng, &mut p.w_score, dims.arc_hidden);
        if with_latent {
            let mut lat = LatentParams {
                w_mu: Mat::zeros(dims.latent, 2 * h),
                w_logvar: Mat::zeros(dims.latent, 2 * h),
                w_rec: Mat::zeros(word_vocab, dims.latent),
                b_rec: vec![0.0; word_vocab],
                w_head: Mat::zeros(dims.latent_arc_hidden, dims.latent),
                w_mod: Mat::zeros(dims.latent_arc_hidden, dims.latent),
                bias: vec![0.0; dims.latent_arc_hidden],
                w_score: vec![0.0; dims.latent_arc_hidden],
            };
            uniform_init(rng, &mut lat.w_mu, 2 * h);
            uniform_init(rng, &mut lat.w_logvar, 2 * h);
            uniform_init(rng, &mut lat.w_rec, dims.latent);
            uniform_init(rng, &mut lat.w_head, dims.latent);
            uniform_init(rng, &mut lat.w_mod, dims.latent);
            uniform_init_vec(rng, &mut lat.w_score, dims.latent_arc_hidden);
            p.latent = Some(lat);
        }
        p
    }

    /// Overwrites word embedding rows for vocabulary entries present in the
    /// pretrained list; returns how many rows were replaced.
    pub fn load_pretrained_words(&mut self, entries: &[(String, Vec<f64>)], vocab: &crate::corpus::Vocabulary) -> usize {
        let mut loaded = 0;
        for (word, values) in entries {
            if values.len() != self.dims.word_emb {
                continue;
            }
            let id = vocab.word_id(word);
            if id != crate::corpus::UNK_ID || word == crate::corpus::UNK_FORM {
                self.word_emb.row_mut(id as usize).copy_from_slice(values);
                loaded += 1;
            }
        }
        loaded
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for (_, _, data) in z.tensors_mut() {
            data.fill(0.0);
        }
        z
    }

    /// Named views over every tensor, in a fixed order shared with
    /// [`tensors_mut`]. This is the single enumeration point used by the
    /// optimizer, the checkpoint writer, and the gradient-check harness.
    pub fn tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out: Vec<(String, Vec<usize>, &[f64])> = vec![
            ("enc.word_emb".into(), vec![self.word_emb.rows(), self.word_emb.cols()], self.word_emb.as_slice()),
            ("enc.pos_emb".into(), vec![self.pos_emb.rows(), self.pos_emb.cols()], self.pos_emb.as_slice()),
            ("enc.fwd.w_input".into(), vec![self.fwd.w_input.rows(), self.fwd.w_input.cols()], self.fwd.w_input.as_slice()),
            ("enc.fwd.w_hidden".into(), vec![self.fwd.w_hidden.rows(), self.fwd.w_hidden.cols()], self.fwd.w_hidden.as_slice()),
            ("enc.fwd.bias".into(), vec![self.fwd.bias.len()], &self.fwd.bias),
            ("enc.bwd.w_input".into(), vec![self.bwd.w_input.rows(), self.bwd.w_input.cols()], self.bwd.w_input.as_slice()),
            ("enc.bwd.w_hidden".into(), vec![self.bwd.w_hidden.rows(), self.bwd.w_hidden.cols()], self.bwd.w_hidden.as_slice()),
            ("enc.bwd.bias".into(), vec![self.bwd.bias.len()], &self.bwd.bias),
            ("enc.w_head".into(), vec![self.w_head.rows(), self.w_head.cols()], self.w_head.as_slice()),
            ("enc.w_mod".into(), vec![self.w_mod.rows(), self.w_mod.cols()], self.w_mod.as_slice()),
            ("enc.bias".into(), vec![self.bias.len()], &self.bias),
            ("enc.w_score".into(), vec![self.w_score.len()], &self.w_score),
        ];
        if let Some(lat) = &self.latent {
            out.push(("lap.w_mu".into(), vec![lat.w_mu.rows(), lat.w_mu.cols()], lat.w_mu.as_slice()));
            out.push(("lap.w_logvar".into(), vec![lat.w_logvar.rows(), lat.w_logvar.cols()], lat.w_logvar.as_slice()));
            out.push(("lap.w_rec".into(), vec![lat.w_rec.rows(), lat.w_rec.cols()], lat.w_rec.as_slice()));
            out.push(("lap.b_rec".into(), vec![lat.b_rec.len()], &lat.b_rec));
            out.push(("lap.w_head".into(), vec![lat.w_head.rows(), lat.w_head.cols()], lat.w_head.as_slice()));
            out.push(("lap.w_mod".into(), vec![lat.w_mod.rows(), lat.w_mod.cols()], lat.w_mod.as_slice()));
            out.push(("lap.bias".into(), vec![lat.bias.len()], &lat.bias));
            out.push(("lap.w_score".into(), vec![lat.w_score.len()], &lat.w_score));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, Vec<usize>, &mut [f64])> {
        let mut out: Vec<(String, Vec<usize>, &mut [f64])> = vec![
            ("enc.word_emb".into(), vec![self.word_emb.rows(), self.word_emb.cols()], self.word_emb.as_mut_slice()),
            ("enc.pos_emb".into(), vec![self.pos_emb.rows(), self.pos_emb.cols()], self.pos_emb.as_mut_slice()),
            ("enc.fwd.w_input".into(), vec![self.fwd.w_input.rows(), self.fwd.w_input.cols()], self.fwd.w_input.as_mut_slice()),
            ("enc.fwd.w_hidden".into(), vec![self.fwd.w_hidden.rows(), self.fwd.w_hidden.cols()], self.fwd.w_hidden.as_mut_slice()),
            ("enc.fwd.bias".into(), vec![self.fwd.bias.len()], self.fwd.bias.as_mut_slice()),
            ("enc.bwd.w_input".into(), vec![self.bwd.w_input.rows(), self.bwd.w_input.cols()], self.bwd.w_input.as_mut_slice()),
            ("enc.bwd.w_hidden".into(), vec![self.bwd.w_hidden.rows(), self.bwd.w_hidden.cols()], self.bwd.w_hidden.as_mut_slice()),
            ("enc.bwd.bias".into(), vec![self.bwd.bias.len()], self.bwd.bias.as_mut_slice()),
            ("enc.w_head".into(), vec![self.w_head.rows(), self.w_head.cols()], self.w_head.as_mut_slice()),
            ("enc.w_mod".into(), vec![self.w_mod.rows(), self.w_mod.cols()], self.w_mod.as_mut_slice()),
            ("enc.bias".into(), vec![self.bias.len()], self.bias.as_mut_slice()),
            ("enc.w_score".into(), vec![self.w_score.len()], self.w_score.as_mut_slice()),
        ];
        if let Some(lat) = &mut self.latent {
            out.push(("lap.w_mu".into(), vec![lat.w_mu.rows(), lat.w_mu.cols()], lat.w_mu.as_mut_slice()));
            out.push(("lap.w_logvar".into(), vec![lat.w_logvar.rows(), lat.w_logvar.cols()], lat.w_logvar.as_mut_slice()));
            out.push(("lap.w_rec".into(), vec![lat.w_rec.rows(), lat.w_rec.cols()], lat.w_rec.as_mut_slice()));
            out.push(("lap.b_rec".into(), vec![lat.b_rec.len()], lat.b_rec.as_mut_slice()));
            out.push(("lap.w_head".into(), vec![lat.w_head.rows(), lat.w_head.cols()], lat.w_head.as_mut_slice()));
            out.push(("lap.w_mod".into(), vec![lat.w_mod.rows(), lat.w_mod.cols()], lat.w_mod.as_mut_slice()));
            out.push(("lap.bias".into(), vec![lat.bias.len()], lat.bias.as_mut_slice()));
            out.push(("lap.w_score".into(), vec![lat.w_score.len()], lat.w_score.as_mut_slice()));
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, _, data)| data.iter().all(|v| v.is_finite()))
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Per-step activations kept for backpropagation through time.
#[derive(Clone, Debug, Default)]
struct LstmTrace {
    /// Post-activation gates, 4*hidden per step.
    gates: Vec<Vec<f64>>,
    cells: Vec<Vec<f64>>,
    tanh_cells: Vec<Vec<f64>>,
    hiddens: Vec<Vec<f64>>,
}

fn lstm_forward(params: &LstmParams, inputs: &[Vec<f64>]) -> LstmTrace {
    let h = params.w_hidden.cols();
    let mut trace = LstmTrace::default();
    let mut hidden = vec![0.0; h];
    let mut cell = vec![0.0; h];
    for x in inputs {
        let mut act = params.bias.clone();
        params.w_input.matvec_acc(x, &mut act);
        params.w_hidden.matvec_acc(&hidden, &mut act);
        let mut gates = vec![0.0; 4 * h];
        for j in 0..h {
            gates[j] = sigmoid(act[j]);
            gates[h + j] = sigmoid(act[h + j]);
            gates[2 * h + j] = act[2 * h + j].tanh();
            gates[3 * h + j] = sigmoid(act[3 * h + j]);
        }
        let mut new_cell = vec![0.0; h];
        let mut tanh_cell = vec![0.0; h];
        let mut new_hidden = vec![0.0; h];
        for j in 0..h {
            new_cell[j] = gates[h + j] * cell[j] + gates[j] * gates[2 * h + j];
            tanh_cell[j] = new_cell[j].tanh();
            new_hidden[j] = gates[3 * h + j] * tanh_cell[j];
        }
        cell = new_cell.clone();
        hidden = new_hidden.clone();
        trace.gates.push(gates);
        trace.cells.push(new_cell);
        trace.tanh_cells.push(tanh_cell);
        trace.hiddens.push(new_hidden);
    }
    trace
}

/// BPTT for one direction. `d_hidden` is the upstream gradient per step (in
/// the same time order as the trace); returns input gradients and
/// accumulates parameter gradients into `grads`.
fn lstm_backward(
    params: &LstmParams,
    inputs: &[Vec<f64>],
    trace: &LstmTrace,
    d_hidden: &[Vec<f64>],
    grads: &mut LstmParams,
) -> Vec<Vec<f64>> {
    let h = params.w_hidden.cols();
    let steps = inputs.len();
    let mut d_inputs = vec![vec![0.0; params.w_input.cols()]; steps];
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    let zero = vec![0.0; h];
    for t in (0..steps).rev() {
        let gates = &trace.gates[t];
        let tanh_cell = &trace.tanh_cells[t];
        let cell_prev = if t > 0 { &trace.cells[t - 1] } else { &zero };
        let hidden_prev = if t > 0 { &trace.hiddens[t - 1] } else { &zero };
        let mut d_act = vec![0.0; 4 * h];
        for j in 0..h {
            let dh = d_hidden[t][j] + dh_next[j];
            let i = gates[j];
            let f = gates[h + j];
            let g = gates[2 * h + j];
            let o = gates[3 * h + j];
            let d_o = dh * tanh_cell[j];
            let dc = dc_next[j] + dh * o * (1.0 - tanh_cell[j] * tanh_cell[j]);
            let d_i = dc * g;
            let d_f = dc * cell_prev[j];
            let d_g = dc * i;
            d_act[j] = d_i * i * (1.0 - i);
            d_act[h + j] = d_f * f * (1.0 - f);
            d_act[2 * h + j] = d_g * (1.0 - g * g);
            d_act[3 * h + j] = d_o * o * (1.0 - o);
            dc_next[j] = dc * f;
        }
        grads.w_input.add_outer(&d_act, &inputs[t]);
        grads.w_hidden.add_outer(&d_act, hidden_prev);
        axpy(1.0, &d_act, &mut grads.bias);
        params.w_input.tmatvec_acc(&d_act, &mut d_inputs[t]);
        dh_next.fill(0.0);
        params.w_hidden.tmatvec_acc(&d_act, &mut dh_next);
    }
    d_inputs
}

/// Forward activations for one sentence: inputs, both LSTM traces, and the
/// concatenated per-token states.
#[derive(Clone, Debug)]
pub struct Encoded {
    pub word_ids: Vec<u32>,
    pub pos_ids: Vec<u32>,
    inputs: Vec<Vec<f64>>,
    fwd: LstmTrace,
    bwd: LstmTrace,
    /// `[h_fwd ; h_bwd]` per token, width 2*hidden.
    pub hidden: Vec<Vec<f64>>,
}

/// Deterministic forward pass over a ROOT-prefixed id sequence.
pub fn encode(word_ids: &[u32], pos_ids: &[u32], params: &EncoderParams) -> Result<Encoded, EncoderError> {
    debug_assert_eq!(word_ids.len(), pos_ids.len());
    let len = word_ids.len();
    let mut inputs = Vec::with_capacity(len);
    for t in 0..len {
        let w = word_ids[t] as usize;
        let p = pos_ids[t] as usize;
        if w >= params.word_emb.rows() {
            return Err(EncoderError::IdOutOfRange { id: word_ids[t], size: params.word_emb.rows() });
        }
        if p >= params.pos_emb.rows() {
            return Err(EncoderError::IdOutOfRange { id: pos_ids[t], size: params.pos_emb.rows() });
        }
        let mut u = Vec::with_capacity(params.dims.pos_emb + params.dims.word_emb);
        u.extend_from_slice(params.pos_emb.row(p));
        u.extend_from_slice(params.word_emb.row(w));
        inputs.push(u);
    }
    let fwd = lstm_forward(&params.fwd, &inputs);
    let reversed: Vec<Vec<f64>> = inputs.iter().rev().cloned().collect();
    let bwd = lstm_forward(&params.bwd, &reversed);
    let mut hidden = Vec::with_capacity(len);
    for t in 0..len {
        let mut o = fwd.hiddens[t].clone();
        o.extend_from_slice(&bwd.hiddens[len - 1 - t]);
        hidden.push(o);
    }
    Ok(Encoded { word_ids: word_ids.to_vec(), pos_ids: pos_ids.to_vec(), inputs, fwd, bwd, hidden })
}

/// Propagates per-token state gradients back through both LSTMs and the
/// embedding lookups.
pub fn encode_backward(d_hidden: &[Vec<f64>], encoded: &Encoded, params: &EncoderParams, grads: &mut EncoderParams) {
    let len = encoded.hidden.len();
    let h = params.dims.hidden;
    let d_fwd: Vec<Vec<f64>> = (0..len).map(|t| d_hidden[t][..h].to_vec()).collect();
    let d_bwd: Vec<Vec<f64>> = (0..len).rev().map(|t| d_hidden[t][h..].to_vec()).collect();
    let d_in_fwd = lstm_backward(&params.fwd, &encoded.inputs, &encoded.fwd, &d_fwd, &mut grads.fwd);
    let reversed: Vec<Vec<f64>> = encoded.inputs.iter().rev().cloned().collect();
    let d_in_bwd = lstm_backward(&params.bwd, &reversed, &encoded.bwd, &d_bwd, &mut grads.bwd);
    let d_pos = params.dims.pos_emb;
    for t in 0..len {
        let mut d_u = d_in_fwd[t].clone();
        axpy(1.0, &d_in_bwd[len - 1 - t], &mut d_u);
        let pos_row = grads.pos_emb.row_mut(encoded.pos_ids[t] as usize);
        for (dst, src) in pos_row.iter_mut().zip(&d_u[..d_pos]) {
            *dst += src;
        }
        let word_row = grads.word_emb.row_mut(encoded.word_ids[t] as usize);
        for (dst, src) in word_row.iter_mut().zip(&d_u[d_pos..]) {
            *dst += src;
        }
    }
}

/// Cached activations of the arc scorer.
#[derive(Clone, Debug)]
pub struct ScoreCache {
    /// tanh(r_head[h] + r_mod[m] + b), flattened (h * len + m) * width.
    tanh_act: Vec<f64>,
    width: usize,
}

/// Arc scores from arbitrary per-token vectors. Used with LSTM states in the
/// main model and with latent vectors in the Gaussian-latent model.
pub fn score_arcs_from(
    vectors: &[Vec<f64>],
    w_head: &Mat,
    w_mod: &Mat,
    bias: &[f64],
    w_score: &[f64],
) -> (Mat, ScoreCache) {
    let len = vectors.len();
    let width = bias.len();
    let r_head: Vec<Vec<f64>> = vectors.iter().map(|o| w_head.matvec(o)).collect();
    let r_mod: Vec<Vec<f64>> = vectors.iter().map(|o| w_mod.matvec(o)).collect();
    let mut tanh_act = vec![0.0; len * len * width];
    let mut scores = Mat::zeros(len, len);
    for head in 0..len {
        for modifier in 0..len {
            let base = (head * len + modifier) * width;
            let mut s = 0.0;
            for j in 0..width {
                let a = (r_head[head][j] + r_mod[modifier][j] + bias[j]).tanh();
                tanh_act[base + j] = a;
                s += w_score[j] * a;
            }
            scores[(head, modifier)] = s;
        }
    }
    (scores, ScoreCache { tanh_act, width })
}

/// Backward pass of [`score_arcs_from`]: accumulates scorer parameter
/// gradients and returns the gradient with respect to the input vectors.
#[allow(clippy::too_many_arguments)]
pub fn score_arcs_backward(
    d_scores: &Mat,
    vectors: &[Vec<f64>],
    cache: &ScoreCache,
    w_head: &Mat,
    w_mod: &Mat,
    w_score: &[f64],
    g_w_head: &mut Mat,
    g_w_mod: &mut Mat,
    g_bias: &mut [f64],
    g_w_score: &mut [f64],
) -> Vec<Vec<f64>> {
    let len = vectors.len();
    let width = cache.width;
    let mut d_r_head = vec![vec![0.0; width]; len];
    let mut d_r_mod = vec![vec![0.0; width]; len];
    for head in 0..len {
        for modifier in 0..len {
            let upstream = d_scores[(head, modifier)];
            if upstream == 0.0 {
                continue;
            }
            let base = (head * len + modifier) * width;
            for j in 0..width {
                let a = cache.tanh_act[base + j];
                g_w_score[j] += upstream * a;
                let d_act = upstream * w_score[j] * (1.0 - a * a);
                g_bias[j] += d_act;
                d_r_head[head][j] += d_act;
                d_r_mod[modifier][j] += d_act;
            }
        }
    }
    let dim = vectors[0].len();
    let mut d_vectors = vec![vec![0.0; dim]; len];
    for t in 0..len {
        g_w_head.add_outer(&d_r_head[t], &vectors[t]);
        g_w_mod.add_outer(&d_r_mod[t], &vectors[t]);
        w_head.tmatvec_acc(&d_r_head[t], &mut d_vectors[t]);
        w_mod.tmatvec_acc(&d_r_mod[t], &mut d_vectors[t]);
    }
    d_vectors
}

/// `score_arcs` over LSTM states with the main scorer parameters.
pub fn score_arcs(encoded: &Encoded, params: &EncoderParams) -> (Mat, ScoreCache) {
    score_arcs_from(&encoded.hidden, &params.w_head, &params.w_mod, &params.bias, &params.w_score)
}

/// Full backward pass from score-matrix gradients down to every encoder
/// parameter.
pub fn backward(
    d_scores: &Mat,
    encoded: &Encoded,
    cache: &ScoreCache,
    params: &EncoderParams,
    grads: &mut EncoderParams,
) {
    let d_hidden = score_arcs_backward(
        d_scores,
        &encoded.hidden,
        cache,
        &params.w_head,
        &params.w_mod,
        &params.w_score,
        &mut grads.w_head,
        &mut grads.w_mod,
        &mut grads.bias,
        &mut grads.w_score,
    );
    encode_backward(&d_hidden, encoded, params, grads);
}

/// Adam with bias correction. Moment tensors are kept per parameter name.
#[derive(Clone, Debug)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step_count: u64,
    moments: HashMap<String, (Vec<f64>, Vec<f64>)>,
}

impl Adam {
    pub fn new(learning_rate: f64) -> Self {
        Adam { learning_rate, beta1: 0.9, beta2: 0.999, epsilon: 1e-8, step_count: 0, moments: HashMap::new() }
    }

    /// One descent step on `grads` (gradients of the quantity being
    /// minimized). Rejects non-finite gradients so training aborts loudly.
    pub fn step(&mut self, params: &mut EncoderParams, grads: &EncoderParams) -> Result<(), EncoderError> {
        for (name, _, g) in grads.tensors() {
            if g.iter().any(|v| !v.is_finite()) {
                return Err(EncoderError::NonFiniteGradient(name));
            }
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let grad_tensors: HashMap<String, Vec<f64>> =
            grads.tensors().into_iter().map(|(n, _, d)| (n, d.to_vec())).collect();
        for (name, _, data) in params.tensors_mut() {
            let g = grad_tensors.get(&name).ok_or_else(|| EncoderError::GradientShape(name.clone()))?;
            if g.len() != data.len() {
                return Err(EncoderError::GradientShape(name.clone()));
            }
            let (m, v) = self
                .moments
                .entry(name.clone())
                .or_insert_with(|| (vec![0.0; data.len()], vec![0.0; data.len()]));
            for j in 0..data.len() {
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * g[j];
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * g[j] * g[j];
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                data[j] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}
