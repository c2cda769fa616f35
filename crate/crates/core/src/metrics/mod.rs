//! Cross-modal alignment diagnostics over hidden-state dumps.

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

mod decomposition;
mod frechet;
pub mod hsd;
mod mir;
mod moments;
mod pairwise;

pub use decomposition::{decomposition_check, AnswerDistribution, Decomposition};
pub use frechet::{frechet_distance, frechet_distance_with, psd_sqrt, DEFAULT_SHRINKAGE};
pub use hsd::{HiddenStateDump, HsdHeader, HsdReader, HsdSample, HsdWriter, Role};
pub use mir::{mir, mir_from_reader, LayerPopulations, MirReport};
pub use moments::{fit_gaussian, GaussianMoments, MomentAccumulator};
pub use pairwise::{
    cosine_distance, pairwise_cross_modal_distance, pairwise_from_reader, quartile_histogram,
    PairwiseReport, QuartileHistogram, DEFAULT_PCD_LAYER,
};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: not an HSD1 file", .0.display())]
    BadMagic(PathBuf),
    #[error("{}: truncated HSD1 file ({detail})", path.display())]
    Truncated { path: PathBuf, detail: String },
    #[error("malformed HSD1 content: {0}")]
    Format(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("need at least 2 vectors, got {got}")]
    TooFewVectors { got: u64 },
    #[error("symmetric eigendecomposition did not converge")]
    EigenNoConvergence,
    #[error("layer {layer}: {got} {role} tokens, need at least 2")]
    LayerTooFewTokens {
        layer: usize,
        role: &'static str,
        got: u64,
    },
    #[error("layer {layer} out of range (dump has {n_layers} layers)")]
    LayerOutOfRange { layer: usize, n_layers: usize },
    #[error("sample {sample:?} has no {role} tokens")]
    MissingRole { sample: String, role: &'static str },
    #[error("sample {sample:?}: zero-norm mean {role} vector")]
    ZeroNorm { sample: String, role: &'static str },
    #[error("dump holds no samples")]
    EmptyDump,
    #[error("invalid answer distribution: {0}")]
    InvalidDistribution(String),
    #[error("answer index {index} out of range for {len} answers")]
    AnswerOutOfRange { index: usize, len: usize },
    #[error("probability of answer {index} is zero")]
    ZeroProbability { index: usize },
    #[error("support mismatch at answer {index}: p_x > 0 but p_tx = 0")]
    SupportMismatch { index: usize },
    #[error("KL divergence evaluated to {0}, below the -1e-12 tolerance")]
    NegativeKl(f64),
}

impl MetricsError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        MetricsError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub(crate) fn role_name(role: Role) -> &'static str {
    match role {
        Role::Textual => "textual",
        Role::Visual => "visual",
    }
}
