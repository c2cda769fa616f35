use std::collections::HashSet;
use std::path::Path;

use crate::corpus::{
    load_instances, manifest_path, Counts, CorpusWriter, CurationManifest, Ingest, InstanceRecord, Protocol,
    RatioMatchSummary,
};

use super::{selection_key, ModalityRatio, PipelineError};

/// Output class sizes `(image_bearing, text_only)` that realize `target` by
/// downsampling one class.
///
/// The over-represented class is cut to `⌊other · share⌋`. Matching fails when
/// either class is empty, when the cut would leave nothing, or when the target
/// would turn the current majority into the minority: reaching such a target
/// is treated as upsampling the minority, which is never done.
pub fn plan_ratio_match(image: u64, text: u64, target: ModalityRatio) -> Result<(u64, u64), PipelineError> {
    if image == 0 || text == 0 {
        return Err(PipelineError::RatioUnreachable(format!(
            "both classes must be non-empty (image-bearing {image}, text-only {text})"
        )));
    }
    let (p, q) = (u128::from(target.image), u128::from(target.text));
    let (i, t) = (u128::from(image), u128::from(text));
    let inverts = (image > text && p < q) || (text > image && q < p);
    if inverts {
        return Err(PipelineError::RatioUnreachable(format!(
            "{image}:{text} cannot reach {target} without upsampling"
        )));
    }
    let (out_i, out_t) = match (i * q).cmp(&(t * p)) {
        std::cmp::Ordering::Equal => (i, t),
        std::cmp::Ordering::Greater => (t * p / q, t),
        std::cmp::Ordering::Less => (i, i * q / p),
    };
    if out_i == 0 || out_t == 0 {
        return Err(PipelineError::RatioUnreachable(format!(
            "{image}:{text} at {target} leaves an empty class"
        )));
    }
    Ok((out_i as u64, out_t as u64))
}

/// Seeded downsampling of the over-represented class so that the output has
/// the target image-bearing:text-only proportion. Kept instances retain their
/// input order.
pub fn match_modality_ratio(
    input: &Path,
    output: &Path,
    target: ModalityRatio,
    seed: u64,
) -> Result<CurationManifest, PipelineError> {
    let mut image_keys = Vec::new();
    let mut text_keys = Vec::new();
    for inst in load_instances(input, Ingest::Strict)? {
        let inst = inst?;
        let has_image = inst.has_image();
        let key = (selection_key(seed, &inst.id), inst.id);
        if has_image {
            image_keys.push(key);
        } else {
            text_keys.push(key);
        }
    }
    let (n_image, n_text) = (image_keys.len() as u64, text_keys.len() as u64);
    let (keep_image, keep_text) = plan_ratio_match(n_image, n_text, target)?;
    let keep = |mut keys: Vec<(u64, String)>, k: u64| -> HashSet<String> {
        keys.sort_unstable();
        keys.into_iter().take(k as usize).map(|(_, id)| id).collect()
    };
    let kept_image = keep(image_keys, keep_image);
    let kept_text = keep(text_keys, keep_text);

    let mut writer = CorpusWriter::create(output)?;
    let mut records = Vec::new();
    let mut counts = Counts::default();
    for inst in load_instances(input, Ingest::Strict)? {
        let inst = inst?;
        let kept = if inst.has_image() {
            kept_image.contains(&inst.id)
        } else {
            kept_text.contains(&inst.id)
        };
        if !kept {
            continue;
        }
        counts.total += 1;
        if inst.has_image() {
            counts.image_bearing_original += 1;
        } else {
            counts.text_only_kept += 1;
        }
        writer.write_instance(&inst)?;
        records.push(InstanceRecord::passthrough(&inst));
    }
    writer.finish()?;

    let manifest = CurationManifest {
        protocol: Protocol::RatioMatch,
        source_path: input.to_string_lossy().into_owned(),
        seed,
        rewrite_ratio: 0.0,
        position_mode: None,
        counts,
        per_instance_records: records,
        ratio_match: Some(RatioMatchSummary {
            target: (target.image, target.text),
            input_image_bearing: n_image,
            input_text_only: n_text,
            output_image_bearing: keep_image,
            output_text_only: keep_text,
        }),
    };
    manifest.write(&manifest_path(output))?;
    Ok(manifest)
}
