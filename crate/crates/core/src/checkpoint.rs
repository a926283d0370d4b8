//! Model checkpoint format.
//!
//! Layout, all little-endian:
//!
//! ```text
//! GAPLAP1\n
//! <word count>\n
//! <id> <surface>\n        (count lines)
//! <pos count>\n
//! <id> <surface>\n        (count lines)
//! <name> <rank> <dim...>\n + row-major IEEE-754 f64 payload   (repeated)
//! ```
//!
//! Tensors are written in a fixed order so that save(load(x)) == x holds
//! byte for byte.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::corpus::Vocabulary;
use crate::encoder::{Dims, EncoderParams};
use crate::gap::DecoderParams;
use crate::mat::Mat;
use crate::model::{Mode, TrainedModel};

pub const MAGIC: &str = "GAPLAP1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("bad magic line (not a checkpoint produced by this tool?)")]
    BadMagic,
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("checkpoint is missing tensor {0}")]
    MissingTensor(String),
    #[error("unknown mode tag {0}")]
    BadMode(u8),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn corrupt(msg: impl Into<String>) -> CheckpointError {
    CheckpointError::Corrupt(msg.into())
}

fn push_tensor(out: &mut Vec<u8>, name: &str, shape: &[usize], data: &[f64]) {
    let dims: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
    out.extend_from_slice(format!("{name} {} {}\n", shape.len(), dims.join(" ")).as_bytes());
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn save_model(model: &TrainedModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC.as_bytes());
    out.push(b'\n');
    for block in [model.vocab.words(), model.vocab.pos_tags()] {
        out.extend_from_slice(format!("{}\n", block.len()).as_bytes());
        for (id, surface) in block.iter().enumerate() {
            out.extend_from_slice(format!("{id} {surface}\n").as_bytes());
        }
    }
    push_tensor(&mut out, "meta.mode", &[1], &[model.mode.tag() as f64]);
    push_tensor(&mut out, "meta.min_freq", &[1], &[model.vocab.min_freq as f64]);
    push_tensor(&mut out, "meta.single_root", &[1], &[f64::from(model.single_root)]);
    for (name, shape, data) in model.params.tensors() {
        push_tensor(&mut out, &name, &shape, data);
    }
    if let Some(decoder) = &model.decoder {
        push_tensor(
            &mut out,
            "gap.log_theta",
            &[decoder.log_theta.rows(), decoder.log_theta.cols()],
            decoder.log_theta.as_slice(),
        );
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn line(&mut self) -> Result<&'a str, CheckpointError> {
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
            self.pos += 1;
        }
        if self.pos >= self.bytes.len() {
            return Err(corrupt("unexpected end of file in header line"));
        }
        let line = std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| corrupt("non-UTF-8 header line"))?;
        self.pos += 1;
        Ok(line)
    }

    fn payload(&mut self, count: usize) -> Result<Vec<f64>, CheckpointError> {
        let bytes = count * 8;
        if self.pos + bytes > self.bytes.len() {
            return Err(corrupt("truncated tensor payload"));
        }
        let mut data = Vec::with_capacity(count);
        for i in 0..count {
            let offset = self.pos + i * 8;
            let mut buf = [0u8; 8];
            buf.copy_from_slice(&self.bytes[offset..offset + 8]);
            data.push(f64::from_le_bytes(buf));
        }
        self.pos += bytes;
        Ok(data)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.bytes.len()
    }
}

fn read_vocab_block(cursor: &mut Cursor) -> Result<Vec<String>, CheckpointError> {
    let count: usize = cursor.line()?.trim().parse().map_err(|_| corrupt("bad vocabulary count"))?;
    let mut entries = Vec::with_capacity(count);
    for expected in 0..count {
        let line = cursor.line()?;
        let (id_str, surface) = line
            .split_once(' ')
            .ok_or_else(|| corrupt(format!("bad vocabulary entry {line:?}")))?;
        let id: usize = id_str.parse().map_err(|_| corrupt("bad vocabulary id"))?;
        if id != expected {
            return Err(corrupt(format!("vocabulary ids out of order: expected {expected}, got {id}")));
        }
        entries.push(surface.to_string());
    }
    Ok(entries)
}

type TensorMap = HashMap<String, (Vec<usize>, Vec<f64>)>;

fn read_tensors(cursor: &mut Cursor) -> Result<TensorMap, CheckpointError> {
    let mut tensors = TensorMap::new();
    while !cursor.at_end() {
        let header = cursor.line()?;
        let mut parts = header.split(' ');
        let name = parts.next().ok_or_else(|| corrupt("empty tensor header"))?.to_string();
        let rank: usize = parts
            .next()
            .and_then(|r| r.parse().ok())
            .ok_or_else(|| corrupt(format!("bad tensor rank in {header:?}")))?;
        let shape: Vec<usize> = parts
            .map(|d| d.parse::<usize>().map_err(|_| corrupt(format!("bad dimension in {header:?}"))))
            .collect::<Result<_, _>>()?;
        if shape.len() != rank {
            return Err(corrupt(format!("rank {rank} with {} dimensions in {header:?}", shape.len())));
        }
        let count: usize = shape.iter().product();
        let data = cursor.payload(count)?;
        tensors.insert(name, (shape, data));
    }
    Ok(tensors)
}

fn take_mat(tensors: &mut TensorMap, name: &str) -> Result<Mat, CheckpointError> {
    let (shape, data) = tensors.remove(name).ok_or_else(|| CheckpointError::MissingTensor(name.into()))?;
    if shape.len() != 2 {
        return Err(corrupt(format!("tensor {name} is not rank 2")));
    }
    let mut m = Mat::zeros(shape[0], shape[1]);
    m.as_mut_slice().copy_from_slice(&data);
    Ok(m)
}

fn take_vec(tensors: &mut TensorMap, name: &str) -> Result<Vec<f64>, CheckpointError> {
    let (shape, data) = tensors.remove(name).ok_or_else(|| CheckpointError::MissingTensor(name.into()))?;
    if shape.len() != 1 {
        return Err(corrupt(format!("tensor {name} is not rank 1")));
    }
    Ok(data)
}

fn take_scalar(tensors: &mut TensorMap, name: &str) -> Result<f64, CheckpointError> {
    let data = take_vec(tensors, name)?;
    if data.len() != 1 {
        return Err(corrupt(format!("tensor {name} is not a scalar")));
    }
    Ok(data[0])
}

pub fn load_model(bytes: &[u8]) -> Result<TrainedModel, CheckpointError> {
    let mut cursor = Cursor { bytes, pos: 0 };
    if cursor.line()? != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let words = read_vocab_block(&mut cursor)?;
    let pos_tags = read_vocab_block(&mut cursor)?;
    let mut tensors = read_tensors(&mut cursor)?;

    let mode_tag = take_scalar(&mut tensors, "meta.mode")? as u8;
    let mode = Mode::from_tag(mode_tag).ok_or(CheckpointError::BadMode(mode_tag))?;
    let min_freq = take_scalar(&mut tensors, "meta.min_freq")? as usize;
    let single_root = take_scalar(&mut tensors, "meta.single_root")? != 0.0;
    let vocab = Arc::new(Vocabulary::from_entries(words, pos_tags, min_freq));

    let word_emb = take_mat(&mut tensors, "enc.word_emb")?;
    let pos_emb = take_mat(&mut tensors, "enc.pos_emb")?;
    let fwd_w_input = take_mat(&mut tensors, "enc.fwd.w_input")?;
    let fwd_w_hidden = take_mat(&mut tensors, "enc.fwd.w_hidden")?;
    let fwd_bias = take_vec(&mut tensors, "enc.fwd.bias")?;
    let bwd_w_input = take_mat(&mut tensors, "enc.bwd.w_input")?;
    let bwd_w_hidden = take_mat(&mut tensors, "enc.bwd.w_hidden")?;
    let bwd_bias = take_vec(&mut tensors, "enc.bwd.bias")?;
    let w_head = take_mat(&mut tensors, "enc.w_head")?;
    let w_mod = take_mat(&mut tensors, "enc.w_mod")?;
    let bias = take_vec(&mut tensors, "enc.bias")?;
    let w_score = take_vec(&mut tensors, "enc.w_score")?;

    let latent = if tensors.contains_key("lap.w_mu") {
        Some(crate::encoder::LatentParams {
            w_mu: take_mat(&mut tensors, "lap.w_mu")?,
            w_logvar: take_mat(&mut tensors, "lap.w_logvar")?,
            w_rec: take_mat(&mut tensors, "lap.w_rec")?,
            b_rec: take_vec(&mut tensors, "lap.b_rec")?,
            w_head: take_mat(&mut tensors, "lap.w_head")?,
            w_mod: take_mat(&mut tensors, "lap.w_mod")?,
            bias: take_vec(&mut tensors, "lap.bias")?,
            w_score: take_vec(&mut tensors, "lap.w_score")?,
        })
    } else {
        None
    };

    let dims = Dims {
        word_emb: word_emb.cols(),
        pos_emb: pos_emb.cols(),
        hidden: fwd_bias.len() / 4,
        arc_hidden: bias.len(),
        latent: latent.as_ref().map(|l| l.w_mu.rows()).unwrap_or(0).max(1),
        latent_arc_hidden: latent.as_ref().map(|l| l.bias.len()).unwrap_or(0).max(1),
    };
    let params = EncoderParams {
        dims,
        word_emb,
        pos_emb,
        fwd: crate::encoder::LstmParams { w_input: fwd_w_input, w_hidden: fwd_w_hidden, bias: fwd_bias },
        bwd: crate::encoder::LstmParams { w_input: bwd_w_input, w_hidden: bwd_w_hidden, bias: bwd_bias },
        w_head,
        w_mod,
        bias,
        w_score,
        latent,
    };

    let decoder = if tensors.contains_key("gap.log_theta") {
        Some(DecoderParams { log_theta: take_mat(&mut tensors, "gap.log_theta")? })
    } else {
        None
    };

    Ok(TrainedModel { mode, vocab, params, decoder, single_root })
}

pub fn save_to(path: &Path, model: &TrainedModel) -> Result<(), CheckpointError> {
    fs::write(path, save_model(model))?;
    Ok(())
}

pub fn load_from(path: &Path) -> Result<TrainedModel, CheckpointError> {
    let bytes = fs::read(path)?;
    load_model(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ROOT_FORM, UNK_FORM};
    use crate::gap::CountBuffer;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_model(mode: Mode, with_latent: bool, with_decoder: bool) -> TrainedModel {
        let words: Vec<String> =
            [ROOT_FORM, UNK_FORM, "alpha", "beta", "gamma word"].iter().map(|s| s.to_string()).collect();
        let pos: Vec<String> = [ROOT_FORM, UNK_FORM, "N", "V"].iter().map(|s| s.to_string()).collect();
        let vocab = Arc::new(Vocabulary::from_entries(words, pos, 2));
        let dims = Dims { word_emb: 3, pos_emb: 2, hidden: 2, arc_hidden: 3, latent: 2, latent_arc_hidden: 2 };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = EncoderParams::init(vocab.word_count(), vocab.pos_count(), dims, with_latent, &mut rng);
        let decoder = with_decoder.then(|| {
            let mut buffer = CountBuffer::new();
            buffer.add(0, 2, 2.0);
            buffer.add(2, 3, 1.0);
            crate::gap::m_step(&buffer, 0.5, vocab.word_count()).unwrap()
        });
        TrainedModel { mode, vocab, params, decoder, single_root: mode == Mode::Gap }
    }

    fn round_trips(model: &TrainedModel) {
        let bytes = save_model(model);
        let loaded = load_model(&bytes).unwrap();
        assert_eq!(loaded.mode, model.mode);
        assert_eq!(loaded.vocab.words(), model.vocab.words());
        assert_eq!(loaded.vocab.pos_tags(), model.vocab.pos_tags());
        assert_eq!(loaded.vocab.min_freq, model.vocab.min_freq);
        // bit-exact: saving the loaded model reproduces the bytes
        assert_eq!(save_model(&loaded), bytes);
        for ((n1, s1, d1), (n2, s2, d2)) in model.params.tensors().iter().zip(loaded.params.tensors().iter()) {
            assert_eq!(n1, n2);
            assert_eq!(s1, s2);
            assert_eq!(d1, d2, "tensor {n1} differs");
        }
    }

    #[test]
    fn checkpoint_round_trip_all_modes() {
        round_trips(&sample_model(Mode::CrfSupervised, false, false));
        round_trips(&sample_model(Mode::Gap, false, true));
        round_trips(&sample_model(Mode::Lap, true, false));
    }

    #[test]
    fn decoder_tensor_round_trips() {
        let model = sample_model(Mode::Gap, false, true);
        let loaded = load_model(&save_model(&model)).unwrap();
        let a = &model.decoder.as_ref().unwrap().log_theta;
        let b = &loaded.decoder.as_ref().unwrap().log_theta;
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        assert!(matches!(load_model(b"NOTMAGIC\n"), Err(CheckpointError::BadMagic)));
        let bytes = save_model(&sample_model(Mode::CrfSupervised, false, false));
        assert!(load_model(&bytes[..bytes.len() - 3]).is_err());
    }

    #[test]
    fn missing_tensor_is_detected() {
        let model = sample_model(Mode::CrfSupervised, false, false);
        let bytes = save_model(&model);
        // chop off everything after the first tensor payloads by rebuilding
        // a checkpoint with only meta tensors
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC.as_bytes());
        out.push(b'\n');
        for block in [model.vocab.words(), model.vocab.pos_tags()] {
            out.extend_from_slice(format!("{}\n", block.len()).as_bytes());
            for (id, surface) in block.iter().enumerate() {
                out.extend_from_slice(format!("{id} {surface}\n").as_bytes());
            }
        }
        push_tensor(&mut out, "meta.mode", &[1], &[0.0]);
        push_tensor(&mut out, "meta.min_freq", &[1], &[1.0]);
        push_tensor(&mut out, "meta.single_root", &[1], &[0.0]);
        assert!(matches!(load_model(&out), Err(CheckpointError::MissingTensor(_))));
        assert!(load_model(&bytes).is_ok());
    }
}
