//! Layered configuration: flags > environment > config file > defaults.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::concreteness::Threshold;
use crate::detectors::Technique;
use crate::grounding::DEFAULT_CONFIDENCE_THRESHOLD;
use crate::selection::Strategy;

pub const ENV_WORDNET_DIR: &str = "WORDNET_DIR";
pub const ENV_GROUNDING_ENDPOINT: &str = "GROUNDING_ENDPOINT";
pub const ENV_GROUNDING_FIXTURES: &str = "GROUNDING_FIXTURES";

/// Every configurable knob, each optional so layers can be merged. Field
/// names double as config-file keys (kebab-case).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Layer {
    pub wordnet_dir: Option<PathBuf>,
    pub label_table: Option<PathBuf>,
    pub stop_list: Option<PathBuf>,
    pub concrete_threshold: Option<String>,
    pub confidence_threshold: Option<f64>,
    pub grounding_fixtures: Option<PathBuf>,
    pub grounding_endpoint: Option<String>,
    pub strict_fixtures: Option<bool>,
    pub inline_images: Option<bool>,
    pub grounding_timeout: Option<f64>,
    pub max_inflight: Option<usize>,
    pub retries: Option<u32>,
    pub detector: Option<Technique>,
    pub selector: Option<Strategy>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub mask_token: Option<String>,
    pub passthrough: Option<bool>,
    pub workers: Option<usize>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),* $(,)?) => {
        Layer { $($field: $top.$field.or($base.$field)),* }
    };
}

impl Layer {
    /// Values in `top` win over values in `self`.
    pub fn overlay(self, top: Layer) -> Layer {
        let base = self;
        overlay!(base, top;
            wordnet_dir, label_table, stop_list, concrete_threshold, confidence_threshold,
            grounding_fixtures, grounding_endpoint, strict_fixtures, inline_images,
            grounding_timeout, max_inflight, retries, detector, selector, n, seed,
            mask_token, passthrough, workers,
        )
    }

    pub fn from_file(path: &Path) -> Result<Layer, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    pub fn from_env(env: &dyn Fn(&str) -> Option<String>) -> Layer {
        let get = |k: &str| env(k).filter(|v| !v.is_empty());
        Layer {
            wordnet_dir: get(ENV_WORDNET_DIR).map(PathBuf::from),
            grounding_endpoint: get(ENV_GROUNDING_ENDPOINT),
            grounding_fixtures: get(ENV_GROUNDING_FIXTURES).map(PathBuf::from),
            ..Layer::default()
        }
    }
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub wordnet_dir: Option<PathBuf>,
    pub label_table: Option<PathBuf>,
    pub stop_list: Option<PathBuf>,
    #[serde(serialize_with = "display")]
    pub concrete_threshold: Threshold,
    pub confidence_threshold: f64,
    pub grounding_fixtures: Option<PathBuf>,
    pub grounding_endpoint: Option<String>,
    pub strict_fixtures: bool,
    pub inline_images: bool,
    pub grounding_timeout: Duration,
    pub max_inflight: usize,
    pub retries: u32,
    pub detector: Technique,
    pub selector: Strategy,
    pub n: usize,
    pub seed: Option<u64>,
    pub mask_token: String,
    pub passthrough: bool,
    pub workers: usize,
}

fn display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

impl Settings {
    pub fn resolve(layer: Layer) -> Result<Settings, CliError> {
        let concrete_threshold = match layer.concrete_threshold {
            Some(text) => text
                .parse::<Threshold>()
                .map_err(|e| CliError::Usage(e.to_string()))?,
            None => Threshold::default(),
        };
        let confidence_threshold = layer.confidence_threshold.unwrap_or(DEFAULT_CONFIDENCE_THRESHOLD);
        if !(0.0..=1.0).contains(&confidence_threshold) {
            return Err(CliError::Usage(format!(
                "confidence threshold {confidence_threshold} outside [0, 1]"
            )));
        }
        let timeout = layer.grounding_timeout.unwrap_or(30.0);
        if !(timeout.is_finite() && timeout > 0.0) {
            return Err(CliError::Usage(format!("grounding timeout {timeout} must be positive")));
        }
        let workers = match layer.workers {
            Some(0) | None => std::thread::available_parallelism().map_or(1, usize::from),
            Some(w) => w,
        };
        let n = layer.n.unwrap_or(2);
        if n == 0 {
            return Err(CliError::Usage("--n must be at least 1".into()));
        }
        let mask_token = layer.mask_token.unwrap_or_else(|| crate::collation::DEFAULT_MASK_TOKEN.into());
        if mask_token.is_empty() {
            return Err(CliError::Usage("mask token must be non-empty".into()));
        }
        Ok(Settings {
            wordnet_dir: layer.wordnet_dir,
            label_table: layer.label_table,
            stop_list: layer.stop_list,
            concrete_threshold,
            confidence_threshold,
            grounding_fixtures: layer.grounding_fixtures,
            grounding_endpoint: layer.grounding_endpoint,
            strict_fixtures: layer.strict_fixtures.unwrap_or(false),
            inline_images: layer.inline_images.unwrap_or(false),
            grounding_timeout: Duration::from_secs_f64(timeout),
            max_inflight: layer.max_inflight.unwrap_or(8).max(1),
            retries: layer.retries.unwrap_or(2),
            detector: layer.detector.unwrap_or(Technique::Nltk),
            selector: layer.selector.unwrap_or(Strategy::Longest),
            n,
            seed: layer.seed,
            mask_token,
            passthrough: layer.passthrough.unwrap_or(false),
            workers,
        })
    }
}
