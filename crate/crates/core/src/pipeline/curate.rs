use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    corpus_root, image_dir_path, load_instances, manifest_path, partial_marker_path, stats_path, Counts,
    CorpusWriter, CurationManifest, Ingest, Instance, InstanceRecord, Protocol,
};
use crate::render::ProcessGate;
use crate::rng::{derive_instance_seed, mix64};

use super::{transform_instance_gated, PipelineConfig, PipelineError};

const SELECTION_DOMAIN: u64 = 0x5345_4c45_4354_0001;

/// Rank key for rewrite selection; independent of the per-instance
/// rendering seed.
pub fn selection_key(seed: u64, id: &str) -> u64 {
    mix64(derive_instance_seed(seed, id) ^ SELECTION_DOMAIN)
}

/// `⌊ratio · n⌋`, tolerant of the representation error in `ratio`.
pub fn rewrite_count(ratio: f64, n: usize) -> usize {
    ((ratio * n as f64 + 1e-9).floor() as usize).min(n)
}

/// Throughput and histograms of one run. Kept apart from the manifest
/// because timings differ between runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurationStats {
    pub instances: u64,
    pub rewritten: u64,
    pub carriers: u64,
    pub skipped_lines: u64,
    pub workers: usize,
    pub elapsed_secs: f64,
    pub instances_per_sec: f64,
    pub route_histogram: BTreeMap<String, u64>,
    pub distortion_histogram: BTreeMap<String, u64>,
}

#[derive(Debug, Clone)]
pub struct CurateOutcome {
    pub manifest: CurationManifest,
    pub stats: CurationStats,
}

fn ingest(cfg: &PipelineConfig) -> Ingest {
    if cfg.lenient {
        Ingest::Lenient
    } else {
        Ingest::Strict
    }
}

/// Streams `input` and yields each readable instance, logging and counting
/// malformed lines in lenient mode.
fn for_each_instance(
    input: &Path,
    mode: Ingest,
    mut f: impl FnMut(Instance) -> Result<(), PipelineError>,
) -> Result<u64, PipelineError> {
    let mut skipped = 0;
    for item in load_instances(input, mode)? {
        match item {
            Ok(inst) => f(inst)?,
            Err(e) if mode == Ingest::Lenient => {
                log::warn!("{}: skipping {e}", input.display());
                skipped += 1;
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(skipped)
}

/// Picks exactly `⌊ratio · N⌋` of the N text-only instances: those with the
/// smallest selection keys.
fn select_for_rewrite(input: &Path, cfg: &PipelineConfig) -> Result<HashSet<String>, PipelineError> {
    let mut keyed = Vec::new();
    for_each_instance(input, ingest(cfg), |inst| {
        if inst.is_text_only() {
            keyed.push((selection_key(cfg.seed, &inst.id), inst.id));
        }
        Ok(())
    })?;
    let k = rewrite_count(cfg.rewrite_ratio, keyed.len());
    keyed.sort_unstable();
    Ok(keyed.into_iter().take(k).map(|(_, id)| id).collect())
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

enum Prepared {
    Passthrough,
    Rewritten(Instance, Vec<crate::corpus::CarrierRecord>),
}

/// Rewrites a seeded selection of the text-only instances of `input` and
/// writes the result, its images, manifest and stats next to `output`.
///
/// Instances are transformed in parallel batches and written in input order,
/// so every output file is identical for any worker count. While the run is
/// in progress a `.partial` marker sits next to `output`; it is removed on
/// success and left behind, holding the error, on failure.
pub fn curate(input: &Path, output: &Path, cfg: &PipelineConfig) -> Result<CurateOutcome, PipelineError> {
    cfg.validate()?;
    if same_file(input, output) {
        return Err(PipelineError::Config("output must differ from input".into()));
    }
    let marker = partial_marker_path(output);
    let root = corpus_root(output);
    std::fs::create_dir_all(&root).map_err(|e| PipelineError::io(&root, e))?;
    std::fs::write(&marker, "in progress\n").map_err(|e| PipelineError::io(&marker, e))?;
    let manifest_file = manifest_path(output);
    if manifest_file.exists() {
        std::fs::remove_file(&manifest_file).map_err(|e| PipelineError::io(&manifest_file, e))?;
    }
    match run(input, output, cfg) {
        Ok(outcome) => {
            std::fs::remove_file(&marker).map_err(|e| PipelineError::io(&marker, e))?;
            Ok(outcome)
        }
        Err(e) => {
            let _ = std::fs::write(&marker, format!("failed: {e}\n"));
            Err(e)
        }
    }
}

fn run(input: &Path, output: &Path, cfg: &PipelineConfig) -> Result<CurateOutcome, PipelineError> {
    let started = Instant::now();
    let selected = select_for_rewrite(input, cfg)?;

    let root = corpus_root(output);
    let image_dir = image_dir_path(output);
    std::fs::create_dir_all(&image_dir).map_err(|e| PipelineError::io(&image_dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let gate = ProcessGate::new(cfg.workers);

    let mut writer = CorpusWriter::create(output)?;
    let mut records = Vec::new();
    let mut counts = Counts::default();
    let mut batch: Vec<Instance> = Vec::with_capacity(cfg.batch_size);

    let mut flush = |batch: &mut Vec<Instance>| -> Result<(), PipelineError> {
        let prepared: Vec<Result<Prepared, PipelineError>> = pool.install(|| {
            batch
                .par_iter()
                .map(|inst| {
                    if !selected.contains(&inst.id) {
                        return Ok(Prepared::Passthrough);
                    }
                    let t = transform_instance_gated(inst, cfg, Some(&gate))?;
                    let (out, carriers) = t.materialize(&image_dir, &root)?;
                    Ok(Prepared::Rewritten(out, carriers))
                })
                .collect()
        });
        for (inst, prep) in batch.drain(..).zip(prepared) {
            counts.total += 1;
            match prep? {
                Prepared::Passthrough => {
                    if inst.has_image() {
                        counts.image_bearing_original += 1;
                    } else {
                        counts.text_only_kept += 1;
                    }
                    writer.write_instance(&inst)?;
                    records.push(InstanceRecord::passthrough(&inst));
                }
                Prepared::Rewritten(out, carriers) => {
                    counts.rewritten += 1;
                    records.push(writer.emit_interleaved(&out, carriers)?);
                }
            }
        }
        Ok(())
    };

    let skipped = for_each_instance(input, ingest(cfg), |inst| {
        batch.push(inst);
        if batch.len() >= cfg.batch_size {
            flush(&mut batch)?;
        }
        Ok(())
    })?;
    flush(&mut batch)?;
    writer.finish()?;

    let manifest = CurationManifest {
        protocol: Protocol::Curate,
        source_path: input.to_string_lossy().into_owned(),
        seed: cfg.seed,
        rewrite_ratio: cfg.rewrite_ratio,
        position_mode: Some(cfg.position_mode),
        counts,
        per_instance_records: records,
        ratio_match: None,
    };
    manifest.write(&manifest_path(output))?;

    let elapsed = started.elapsed().as_secs_f64();
    let stats = CurationStats {
        instances: counts.total,
        rewritten: counts.rewritten,
        carriers: manifest.per_instance_records.iter().map(|r| r.carriers.len() as u64).sum(),
        skipped_lines: skipped,
        workers: cfg.workers,
        elapsed_secs: elapsed,
        instances_per_sec: if elapsed > 0.0 { counts.total as f64 / elapsed } else { 0.0 },
        route_histogram: manifest.route_histogram(),
        distortion_histogram: manifest.distortion_histogram(),
    };
    let stats_file = stats_path(output);
    let mut bytes = serde_json::to_vec_pretty(&stats).map_err(crate::corpus::CorpusError::from)?;
    bytes.push(b'\n');
    std::fs::write(&stats_file, bytes).map_err(|e| PipelineError::io(&stats_file, e))?;
    log::info!(
        "curated {} instances ({} rewritten) in {:.2}s, {:.1} instances/s",
        counts.total,
        counts.rewritten,
        elapsed,
        stats.instances_per_sec
    );
    Ok(CurateOutcome { manifest, stats })
}
