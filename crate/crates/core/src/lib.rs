//! Local modality substitution for multimodal instruction data.
//!
//! Text spans of text-only instances are localized, rendered to images,
//! perceptually distorted and spliced back as interleaved text/image
//! instances. The [`metrics`] module holds the cross-modal alignment
//! diagnostics computed from hidden-state dumps.

pub mod corpus;
pub mod distortion;
pub mod localizer;
pub mod metrics;
pub mod render;
pub mod rng;
pub mod evalprep;
pub mod pipeline;
