use std::path::Path;

use crate::corpus::{path_to_slash, CarrierRecord, ContentPart, Instance};
use crate::distortion::apply_distortion_with;
use crate::localizer::localize;
use crate::render::{enforce_pixel_cap, render_routed_gated, trim_margins, ProcessGate, RenderedCarrier};
use crate::rng::{derive_instance_seed, fnv1a64, SplitMix64};

use super::{PipelineConfig, PipelineError};

#[derive(Debug, Clone, PartialEq)]
pub enum OutputPart {
    Text(String),
    Image(RenderedCarrier),
}

/// A rewritten instance whose images are still in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedInstance {
    pub id: String,
    pub answer: String,
    pub parts: Vec<OutputPart>,
}

impl TransformedInstance {
    pub fn carriers(&self) -> impl Iterator<Item = &RenderedCarrier> {
        self.parts.iter().filter_map(|p| match p {
            OutputPart::Image(c) => Some(c),
            OutputPart::Text(_) => None,
        })
    }

    /// Text parts and rendered source spans, concatenated in order.
    pub fn reconstruct(&self) -> String {
        self.parts
            .iter()
            .map(|p| match p {
                OutputPart::Text(t) => t.as_str(),
                OutputPart::Image(c) => c.source_span.as_str(),
            })
            .collect()
    }

    /// Writes each image as PNG into `image_dir` and returns the instance with
    /// image parts pointing at those files, relative to `root`.
    pub fn materialize(&self, image_dir: &Path, root: &Path) -> Result<(Instance, Vec<CarrierRecord>), PipelineError> {
        let mut parts = Vec::with_capacity(self.parts.len());
        let mut records = Vec::new();
        for part in &self.parts {
            match part {
                OutputPart::Text(t) => parts.push(ContentPart::text(t.clone())),
                OutputPart::Image(c) => {
                    let file = image_dir.join(carrier_file_name(&self.id, records.len()));
                    std::fs::write(&file, c.png_bytes()?).map_err(|e| PipelineError::io(&file, e))?;
                    let rel = file.strip_prefix(root).map_or_else(|_| path_to_slash(&file), path_to_slash);
                    parts.push(ContentPart::image(rel.clone()));
                    records.push(CarrierRecord {
                        path: rel,
                        route: c.route,
                        source_span: c.source_span.clone(),
                        width: c.width(),
                        height: c.height(),
                        distortion: c.distortion.clone(),
                    });
                }
            }
        }
        let instance = Instance {
            id: self.id.clone(),
            parts,
            answer: self.answer.clone(),
        };
        Ok((instance, records))
    }
}

/// `<sanitized id>-<id hash>-<span index>.png`; the hash keeps ids that
/// sanitize to the same stem apart.
pub fn carrier_file_name(id: &str, index: usize) -> String {
    let stem: String = id
        .chars()
        .take(64)
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("{stem}-{:08x}-{index}.png", fnv1a64(id.as_bytes()) as u32)
}

pub fn transform_instance(instance: &Instance, cfg: &PipelineConfig) -> Result<TransformedInstance, PipelineError> {
    transform_instance_gated(instance, cfg, None)
}

/// Localize, render, trim and (optionally) distort. The result depends only
/// on the instance and `cfg`.
pub fn transform_instance_gated(
    instance: &Instance,
    cfg: &PipelineConfig,
    gate: Option<&ProcessGate>,
) -> Result<TransformedInstance, PipelineError> {
    if !instance.is_text_only() {
        return Err(PipelineError::NotTextOnly(instance.id.clone()));
    }
    let split = localize(&instance.question_text(), cfg.position_mode);
    let mut rng = SplitMix64::new(derive_instance_seed(cfg.seed, &instance.id));
    let mut parts = Vec::with_capacity(split.segments.len());
    for seg in split.segments.iter().filter(|s| !s.text.is_empty()) {
        if !seg.rendered {
            parts.push(OutputPart::Text(seg.text.clone()));
            continue;
        }
        let mut carrier = trim_margins(render_routed_gated(&seg.text, &cfg.render, gate), &cfg.render);
        if cfg.distortion_enabled {
            carrier = apply_distortion_with(carrier, rng.next_u64(), &cfg.distortion)
                .map_err(|e| PipelineError::Config(e.to_string()))?;
            carrier.image = enforce_pixel_cap(std::mem::take(&mut carrier.image), cfg.render.pixel_cap);
        }
        parts.push(OutputPart::Image(carrier));
    }
    Ok(TransformedInstance {
        id: instance.id.clone(),
        answer: instance.answer.clone(),
        parts,
    })
}
