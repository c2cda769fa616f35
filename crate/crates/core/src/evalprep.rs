//! Rendered-evaluation transform: each benchmark question becomes a single
//! undistorted image placed ahead of the original images.

use std::path::Path;

use crate::corpus::{
    corpus_root, image_dir_path, load_instances, manifest_path, path_to_slash, Action, CarrierRecord, ContentPart,
    Counts, CorpusWriter, CurationManifest, Ingest, Instance, InstanceRecord, Protocol,
};
use crate::pipeline::{carrier_file_name, PipelineError};
use crate::render::{render_text, trim_margins, RenderConfig, RenderedCarrier};

/// Renders the whole question with the text rasterizer, trimmed and capped.
pub fn render_question(question: &str, config: &RenderConfig) -> RenderedCarrier {
    trim_margins(render_text(question, config), config)
}

/// Replaces the text parts of every instance with one rendered image that
/// precedes the original image parts. Instances without text parts, such as
/// those already transformed, pass through unchanged.
pub fn transform_benchmark(input: &Path, output: &Path, config: &RenderConfig) -> Result<CurationManifest, PipelineError> {
    config.validate().map_err(PipelineError::Config)?;
    let root = corpus_root(output);
    let image_dir = image_dir_path(output);
    std::fs::create_dir_all(&image_dir).map_err(|e| PipelineError::io(&image_dir, e))?;

    let mut writer = CorpusWriter::create(output)?;
    let mut records = Vec::new();
    let mut counts = Counts::default();
    for inst in load_instances(input, Ingest::Strict)? {
        let inst = inst?;
        counts.total += 1;
        if !inst.parts.iter().any(ContentPart::is_text) {
            counts.image_bearing_original += 1;
            writer.write_instance(&inst)?;
            records.push(InstanceRecord::passthrough(&inst));
            continue;
        }
        counts.rewritten += 1;
        let question = inst.question_text();
        let carrier = render_question(&question, config);
        let file = image_dir.join(carrier_file_name(&inst.id, 0));
        std::fs::write(&file, carrier.png_bytes()?).map_err(|e| PipelineError::io(&file, e))?;
        let rel = file.strip_prefix(&root).map_or_else(|_| path_to_slash(&file), path_to_slash);

        let mut parts = vec![ContentPart::image(rel.clone())];
        parts.extend(inst.parts.iter().filter(|p| p.is_image()).cloned());
        let out = Instance {
            id: inst.id.clone(),
            parts,
            answer: inst.answer.clone(),
        };
        writer.write_instance(&out)?;
        records.push(InstanceRecord {
            id: out.id.clone(),
            action: Action::Rewritten,
            image_paths: out.parts.iter().map(|p| p.value.clone()).collect(),
            carriers: vec![CarrierRecord {
                path: rel,
                route: carrier.route,
                source_span: question,
                width: carrier.width(),
                height: carrier.height(),
                distortion: None,
            }],
        });
    }
    writer.finish()?;

    let manifest = CurationManifest {
        protocol: Protocol::RenderedEval,
        source_path: input.to_string_lossy().into_owned(),
        seed: 0,
        rewrite_ratio: 1.0,
        position_mode: None,
        counts,
        per_instance_records: records,
        ratio_match: None,
    };
    manifest.write(&manifest_path(output))?;
    Ok(manifest)
}
