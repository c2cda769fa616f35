//! Corpus-level orchestration: rewrite selection, parallel transformation,
//! ordered emission and image:text ratio matching.

use std::fmt;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CorpusError;
use crate::distortion::DistortionRanges;
use crate::localizer::PositionMode;
use crate::render::RenderConfig;

mod curate;
mod ratio;
mod transform;

pub use crate::rng::derive_instance_seed;
pub use curate::{curate, rewrite_count, selection_key, CurateOutcome, CurationStats};
pub use ratio::{match_modality_ratio, plan_ratio_match};
pub use transform::{carrier_file_name, transform_instance, transform_instance_gated, OutputPart, TransformedInstance};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("instance {0:?} has image parts and cannot be rewritten")]
    NotTextOnly(String),
    #[error("PNG encoding failed: {0}")]
    Encode(#[from] image::ImageError),
    #[error("ratio matching: {0}")]
    RatioUnreachable(String),
}

impl PipelineError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        PipelineError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Target proportion of image-bearing to text-only instances, written `2:1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ModalityRatio {
    pub image: u32,
    pub text: u32,
}

impl ModalityRatio {
    pub fn new(image: u32, text: u32) -> Result<Self, String> {
        if image == 0 || text == 0 {
            return Err(format!("ratio {image}:{text} must have positive terms"));
        }
        Ok(Self { image, text })
    }
}

impl FromStr for ModalityRatio {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| format!("ratio {s:?} is not of the form IMAGE:TEXT"))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| format!("ratio term {t:?} is not a non-negative integer"))
        };
        Self::new(parse(a)?, parse(b)?)
    }
}

impl TryFrom<String> for ModalityRatio {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ModalityRatio> for String {
    fn from(r: ModalityRatio) -> Self {
        r.to_string()
    }
}

impl fmt::Display for ModalityRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.image, self.text)
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Every knob of a curation run. Deserializes from a config file with any
/// subset of keys; missing keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub rewrite_ratio: f64,
    pub position_mode: PositionMode,
    pub distortion_enabled: bool,
    pub workers: usize,
    pub target_image_text_ratio: Option<ModalityRatio>,
    pub lenient: bool,
    /// Instances handed to the worker pool per round.
    pub batch_size: usize,
    pub render: RenderConfig,
    pub distortion: DistortionRanges,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            rewrite_ratio: 0.5,
            position_mode: PositionMode::Middle,
            distortion_enabled: true,
            workers: default_workers(),
            target_image_text_ratio: None,
            lenient: false,
            batch_size: 256,
            render: RenderConfig::default(),
            distortion: DistortionRanges::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(0.0..=1.0).contains(&self.rewrite_ratio) {
            return Err(PipelineError::Config(format!(
                "rewrite_ratio {} is outside [0, 1]",
                self.rewrite_ratio
            )));
        }
        if self.workers == 0 {
            return Err(PipelineError::Config("workers must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(PipelineError::Config("batch_size must be at least 1".into()));
        }
        self.render.validate().map_err(PipelineError::Config)?;
        self.distortion.validate().map_err(PipelineError::Config)?;
        Ok(())
    }
}
