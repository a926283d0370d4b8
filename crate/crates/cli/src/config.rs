//! Run configuration: a line-oriented `key = value` file with `#` comments.
//! Command-line flags override file values.

use std::collections::HashMap;
use std::path::PathBuf;

use gaplap_core::encoder::Dims;
use gaplap_core::model::Mode;
use gaplap_core::train::TrainConfig;

use crate::CliError;

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub mode: Mode,
    pub train_path: PathBuf,
    pub dev_path: PathBuf,
    pub test_path: Option<PathBuf>,
    pub embeddings_path: Option<PathBuf>,
    pub checkpoint_path: PathBuf,
    pub labeled_fraction: f64,
    pub min_freq: usize,
    pub train: TrainConfig,
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse::<T>()
        .map_err(|_| CliError::Config(format!("bad value for {key}: {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(CliError::Config(format!("bad boolean for {key}: {value:?}"))),
    }
}

impl RunConfig {
    /// Parses config text; `mode_override`/`seed_override` come from flags.
    pub fn parse(
        text: &str,
        mode_override: Option<&str>,
        seed_override: Option<u64>,
    ) -> Result<RunConfig, CliError> {
        let mut values: HashMap<String, String> = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("config line {}: expected key = value", idx + 1)))?;
            values.insert(key.trim().to_string(), value.trim().to_string());
        }

        let mut dims = Dims::default();
        let mut train = TrainConfig::default();
        let mut mode_str: Option<String> = None;
        let mut train_path = None;
        let mut dev_path = None;
        let mut test_path = None;
        let mut embeddings_path = None;
        let mut checkpoint_path = None;
        let mut labeled_fraction = 1.0f64;
        let mut min_freq = 2usize;

        for (key, value) in &values {
            match key.as_str() {
                "mode" => mode_str = Some(value.clone()),
                "train" => train_path = Some(PathBuf::from(value)),
                "dev" => dev_path = Some(PathBuf::from(value)),
                "test" => test_path = Some(PathBuf::from(value)),
                "embeddings" => embeddings_path = Some(PathBuf::from(value)),
                "checkpoint" => checkpoint_path = Some(PathBuf::from(value)),
                "d_word" => dims.word_emb = parse_value(key, value)?,
                "d_pos" => dims.pos_emb = parse_value(key, value)?,
                "d_hidden" => dims.hidden = parse_value(key, value)?,
                "d_arc" => dims.arc_hidden = parse_value(key, value)?,
                "d_latent" => dims.latent = parse_value(key, value)?,
                "d_arc_latent" => dims.latent_arc_hidden = parse_value(key, value)?,
                "learning_rate" => train.learning_rate = parse_value(key, value)?,
                "epochs" => train.epochs = parse_value(key, value)?,
                "patience" => train.patience = parse_value(key, value)?,
                "seed" => train.seed = parse_value(key, value)?,
                "sigma_start" => train.sigma_start = parse_value(key, value)?,
                "sigma_end" => train.sigma_end = parse_value(key, value)?,
                "lambda_init" => train.lambda_init = parse_value(key, value)?,
                "lambda_mstep" => train.lambda_mstep = parse_value(key, value)?,
                "n_samples" => train.n_samples = parse_value(key, value)?,
                "kl_weight" => train.kl_weight = parse_value(key, value)?,
                "labeled_fraction" => labeled_fraction = parse_value(key, value)?,
                "min_freq" => min_freq = parse_value(key, value)?,
                "ignore_punct" => train.ignore_punct = parse_bool(key, value)?,
                "single_root" => train.single_root = parse_bool(key, value)?,
                "mix_labeled_counts" => train.mix_labeled_counts = parse_bool(key, value)?,
                "refresh_decoder_each_epoch" => train.refresh_decoder_each_epoch = parse_bool(key, value)?,
                other => return Err(CliError::Config(format!("unknown config key {other:?}"))),
            }
        }
        train.dims = dims;
        if let Some(seed) = seed_override {
            train.seed = seed;
        }
        let mode_str = mode_override
            .map(String::from)
            .or(mode_str)
            .ok_or_else(|| CliError::Config("mode not given (config key or --mode)".into()))?;
        let mode = mode_str.parse::<Mode>().map_err(CliError::Config)?;

        Ok(RunConfig {
            mode,
            train_path: train_path.ok_or_else(|| CliError::Config("missing config key train".into()))?,
            dev_path: dev_path.ok_or_else(|| CliError::Config("missing config key dev".into()))?,
            test_path,
            embeddings_path,
            checkpoint_path: checkpoint_path
                .ok_or_else(|| CliError::Config("missing config key checkpoint".into()))?,
            labeled_fraction,
            min_freq,
            train,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config_with_overrides() {
        let text = "# a comment\nmode = gap\ntrain = a.conllu\ndev = b.conllu\ncheckpoint = out.model\nepochs = 3\n";
        let config = RunConfig::parse(text, None, Some(99)).unwrap();
        assert_eq!(config.mode, Mode::Gap);
        assert_eq!(config.train.epochs, 3);
        assert_eq!(config.train.seed, 99);
        let overridden = RunConfig::parse(text, Some("lap"), None).unwrap();
        assert_eq!(overridden.mode, Mode::Lap);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let base = "mode = gap\ntrain = a\ndev = b\ncheckpoint = c\n";
        assert!(RunConfig::parse(&format!("{base}bogus = 1\n"), None, None).is_err());
        assert!(RunConfig::parse(&format!("{base}epochs = many\n"), None, None).is_err());
        assert!(RunConfig::parse("train = a\ndev = b\ncheckpoint = c\n", None, None).is_err());
    }
}
