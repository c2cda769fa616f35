//! Instance data model, JSON Lines ingestion/emission and curation manifests.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distortion::DistortionChoice;
use crate::localizer::PositionMode;
use crate::render::Route;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line} (byte offset {offset}): {message}")]
    Parse {
        line: usize,
        offset: u64,
        message: String,
    },
    #[error("line {line}: duplicate instance id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: invalid instance: {message}")]
    Invalid { line: usize, message: String },
    #[error("image {value:?} of instance {id:?} does not resolve under {}", root.display())]
    MissingImage {
        id: String,
        value: String,
        root: PathBuf,
    },
    #[error("serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

impl CorpusError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CorpusError::Io {
            path: path.into(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartKind {
    Text,
    Image,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContentPart {
    pub kind: PartKind,
    pub value: String,
}

impl ContentPart {
    pub fn text(value: impl Into<String>) -> Self {
        Self {
            kind: PartKind::Text,
            value: value.into(),
        }
    }

    pub fn image(value: impl Into<String>) -> Self {
        Self {
            kind: PartKind::Image,
            value: value.into(),
        }
    }

    pub fn is_text(&self) -> bool {
        self.kind == PartKind::Text
    }

    pub fn is_image(&self) -> bool {
        self.kind == PartKind::Image
    }
}

/// One supervision pair: the question `parts` and the ground-truth `answer`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    pub parts: Vec<ContentPart>,
    pub answer: String,
}

impl Instance {
    pub fn text_only(id: impl Into<String>, question: impl Into<String>, answer: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            parts: vec![ContentPart::text(question)],
            answer: answer.into(),
        }
    }

    pub fn is_text_only(&self) -> bool {
        self.parts.iter().all(ContentPart::is_text)
    }

    pub fn has_image(&self) -> bool {
        self.parts.iter().any(ContentPart::is_image)
    }

    /// The question text: all text parts concatenated in order.
    pub fn question_text(&self) -> String {
        self.parts
            .iter()
            .filter(|p| p.is_text())
            .map(|p| p.value.as_str())
            .collect()
    }

    /// Structural invariants that do not need the filesystem.
    pub fn validate(&self) -> Result<(), String> {
        if self.parts.is_empty() {
            return Err("parts is empty".into());
        }
        for (i, part) in self.parts.iter().enumerate() {
            if part.value.is_empty() {
                let what = match part.kind {
                    PartKind::Text => "text",
                    PartKind::Image => "image",
                };
                return Err(format!("part {i} has an empty {what} value"));
            }
        }
        Ok(())
    }

    /// Checks that every image part is an inline payload or a file under `root`.
    pub fn check_images(&self, root: &Path) -> Result<(), CorpusError> {
        for part in self.parts.iter().filter(|p| p.is_image()) {
            if is_inline_payload(&part.value) {
                continue;
            }
            let path = root.join(&part.value);
            if !path.is_file() {
                return Err(CorpusError::MissingImage {
                    id: self.id.clone(),
                    value: part.value.clone(),
                    root: root.to_path_buf(),
                });
            }
        }
        Ok(())
    }
}

pub fn is_inline_payload(value: &str) -> bool {
    value.starts_with("data:")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ingest {
    /// Abort on the first malformed line.
    #[default]
    Strict,
    /// Report malformed lines and keep going.
    Lenient,
}

/// Streaming JSON Lines reader. Yields one item per non-blank line.
pub struct InstanceReader<R> {
    lines: R,
    mode: Ingest,
    line_no: usize,
    offset: u64,
    seen: HashSet<String>,
    failed: bool,
    buf: String,
}

/// Opens `path` for streaming ingestion.
pub fn load_instances(path: &Path, mode: Ingest) -> Result<InstanceReader<BufReader<File>>, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    Ok(InstanceReader::new(BufReader::new(file), mode))
}

/// Reads a whole corpus, failing on the first error.
pub fn read_all(path: &Path) -> Result<Vec<Instance>, CorpusError> {
    load_instances(path, Ingest::Strict)?.collect()
}

impl<R: BufRead> InstanceReader<R> {
    pub fn new(lines: R, mode: Ingest) -> Self {
        Self {
            lines,
            mode,
            line_no: 0,
            offset: 0,
            seen: HashSet::new(),
            failed: false,
            buf: String::new(),
        }
    }

    fn parse_line(&mut self, line_start: u64) -> Result<Instance, CorpusError> {
        let text = self.buf.trim_end_matches(['\n', '\r']);
        let line = self.line_no;
        let inst: Instance = serde_json::from_str(text).map_err(|e| CorpusError::Parse {
            line,
            offset: line_start + e.column().saturating_sub(1) as u64,
            message: e.to_string(),
        })?;
        inst.validate()
            .map_err(|message| CorpusError::Invalid { line, message })?;
        if !self.seen.insert(inst.id.clone()) {
            return Err(CorpusError::DuplicateId { line, id: inst.id });
        }
        Ok(inst)
    }
}

impl<R: BufRead> Iterator for InstanceReader<R> {
    type Item = Result<Instance, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed && self.mode == Ingest::Strict {
            return None;
        }
        loop {
            self.buf.clear();
            let line_start = self.offset;
            let n = match self.lines.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(n) => n,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(CorpusError::Parse {
                        line: self.line_no + 1,
                        offset: line_start,
                        message: e.to_string(),
                    }));
                }
            };
            self.offset += n as u64;
            self.line_no += 1;
            if self.buf.trim().is_empty() {
                continue;
            }
            let item = self.parse_line(line_start);
            if item.is_err() {
                self.failed = true;
            }
            return Some(item);
        }
    }
}

/// Line-oriented sink for an output corpus. Image paths are written relative to
/// the corpus root, the directory that holds the output file.
pub struct CorpusWriter {
    out: BufWriter<File>,
    path: PathBuf,
    root: PathBuf,
}

impl CorpusWriter {
    pub fn create(path: &Path) -> Result<Self, CorpusError> {
        let file = File::create(path).map_err(|e| CorpusError::io(path, e))?;
        Ok(Self {
            out: BufWriter::new(file),
            path: path.to_path_buf(),
            root: corpus_root(path),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write_instance(&mut self, instance: &Instance) -> Result<(), CorpusError> {
        serde_json::to_writer(&mut self.out, instance)?;
        self.out
            .write_all(b"\n")
            .map_err(|e| CorpusError::io(&self.path, e))
    }

    /// Writes a transformed instance whose image parts are already on disk and
    /// returns its manifest record. Absolute image paths under the root are
    /// rewritten to root-relative form.
    pub fn emit_interleaved(
        &mut self,
        instance: &Instance,
        carriers: Vec<CarrierRecord>,
    ) -> Result<InstanceRecord, CorpusError> {
        let mut out = instance.clone();
        for part in out.parts.iter_mut().filter(|p| p.is_image()) {
            if is_inline_payload(&part.value) {
                continue;
            }
            let p = Path::new(&part.value);
            if p.is_absolute() {
                if let Ok(rel) = p.strip_prefix(&self.root) {
                    part.value = path_to_slash(rel);
                }
            }
        }
        out.check_images(&self.root)?;
        self.write_instance(&out)?;
        let image_paths = out
            .parts
            .iter()
            .filter(|p| p.is_image())
            .map(|p| p.value.clone())
            .collect();
        Ok(InstanceRecord {
            id: out.id,
            action: Action::Rewritten,
            image_paths,
            carriers,
        })
    }

    pub fn finish(mut self) -> Result<(), CorpusError> {
        self.out.flush().map_err(|e| CorpusError::io(&self.path, e))
    }
}

/// Directory against which relative image paths of a corpus file resolve.
pub fn corpus_root(corpus_path: &Path) -> PathBuf {
    match corpus_path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

pub(crate) fn path_to_slash(path: &Path) -> String {
    path.components()
        .filter_map(|c| match c {
            Component::Normal(s) => Some(s.to_string_lossy().into_owned()),
            _ => None,
        })
        .collect::<Vec<_>>()
        .join("/")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Rewritten,
    Passthrough,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Curate,
    RenderedEval,
    RatioMatch,
}

/// Provenance of one rendered image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarrierRecord {
    pub path: String,
    pub route: Route,
    pub source_span: String,
    pub width: u32,
    pub height: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distortion: Option<DistortionChoice>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub id: String,
    pub action: Action,
    pub image_paths: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub carriers: Vec<CarrierRecord>,
}

impl InstanceRecord {
    pub fn passthrough(instance: &Instance) -> Self {
        Self {
            id: instance.id.clone(),
            action: Action::Passthrough,
            image_paths: instance
                .parts
                .iter()
                .filter(|p| p.is_image())
                .map(|p| p.value.clone())
                .collect(),
            carriers: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub total: u64,
    pub rewritten: u64,
    pub text_only_kept: u64,
    pub image_bearing_original: u64,
}

impl Counts {
    pub fn identity_holds(&self) -> bool {
        self.rewritten + self.text_only_kept + self.image_bearing_original == self.total
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurationManifest {
    pub protocol: Protocol,
    pub source_path: String,
    pub seed: u64,
    pub rewrite_ratio: f64,
    pub position_mode: Option<PositionMode>,
    pub counts: Counts,
    pub per_instance_records: Vec<InstanceRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio_match: Option<RatioMatchSummary>,
}

/// Class sizes before and after image:text ratio matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatioMatchSummary {
    /// Target as (image-bearing, text-only).
    pub target: (u32, u32),
    pub input_image_bearing: u64,
    pub input_text_only: u64,
    pub output_image_bearing: u64,
    pub output_text_only: u64,
}

impl CurationManifest {
    /// Route counts over all rendered carriers, keyed by route name.
    pub fn route_histogram(&self) -> BTreeMap<String, u64> {
        let mut hist = BTreeMap::new();
        for c in self.per_instance_records.iter().flat_map(|r| &r.carriers) {
            *hist.entry(c.route.as_str().to_string()).or_insert(0) += 1;
        }
        hist
    }

    /// Distortion family counts over all rendered carriers.
    pub fn distortion_histogram(&self) -> BTreeMap<String, u64> {
        let mut hist = BTreeMap::new();
        for c in self.per_instance_records.iter().flat_map(|r| &r.carriers) {
            let key = c
                .distortion
                .as_ref()
                .map_or("disabled", |d| d.family.as_str());
            *hist.entry(key.to_string()).or_insert(0) += 1;
        }
        hist
    }

    pub fn write(&self, path: &Path) -> Result<(), CorpusError> {
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        std::fs::write(path, bytes).map_err(|e| CorpusError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, CorpusError> {
        let bytes = std::fs::read(path).map_err(|e| CorpusError::io(path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| CorpusError::Parse {
            line: e.line(),
            offset: 0,
            message: e.to_string(),
        })
    }
}

/// `out.jsonl` -> `out.manifest.json`
pub fn manifest_path(output: &Path) -> PathBuf {
    sibling_with_suffix(output, ".manifest.json")
}

/// `out.jsonl` -> `out.stats.json`
pub fn stats_path(output: &Path) -> PathBuf {
    sibling_with_suffix(output, ".stats.json")
}

/// `out.jsonl` -> `out.partial`; present only while a run is incomplete.
pub fn partial_marker_path(output: &Path) -> PathBuf {
    sibling_with_suffix(output, ".partial")
}

/// `out.jsonl` -> `out_images`
pub fn image_dir_path(output: &Path) -> PathBuf {
    sibling_with_suffix(output, "_images")
}

fn sibling_with_suffix(output: &Path, suffix: &str) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".to_string());
    corpus_root(output).join(format!("{stem}{suffix}"))
}
