//! HSD1 hidden-state dump files.
//!
//! Little-endian layout:
//!
//! ```text
//! "LOMOHSD1"
//! n_layers: u32, hidden_dim: u32, n_samples: u32
//! per sample:
//!   id_len: u32, id: UTF-8 bytes
//!   n_tokens: u32, role_mask: n_tokens bytes (0 = textual, 1 = visual)
//!   n_layers blocks of n_tokens × hidden_dim f32 (token-major)
//! ```

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::MetricsError;

pub const HSD_MAGIC: &[u8; 8] = b"LOMOHSD1";
const HEADER_LEN: u64 = 8 + 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Role {
    Textual = 0,
    Visual = 1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HsdHeader {
    pub n_layers: u32,
    pub hidden_dim: u32,
    pub n_samples: u32,
}

/// Hidden states of one sample: `layers[l]` is `n_tokens × hidden_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct HsdSample {
    pub id: String,
    pub roles: Vec<Role>,
    pub layers: Vec<Vec<f32>>,
}

impl HsdSample {
    pub fn n_tokens(&self) -> usize {
        self.roles.len()
    }

    /// Rows of layer `layer` whose role is `role`, flattened row-major.
    pub fn rows_with_role(&self, layer: usize, role: Role, hidden_dim: usize) -> (Vec<f32>, usize) {
        let data = &self.layers[layer];
        let mut out = Vec::new();
        let mut rows = 0;
        for (t, r) in self.roles.iter().enumerate() {
            if *r == role {
                out.extend_from_slice(&data[t * hidden_dim..(t + 1) * hidden_dim]);
                rows += 1;
            }
        }
        (out, rows)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenStateDump {
    pub header: HsdHeader,
    pub samples: Vec<HsdSample>,
}

impl HiddenStateDump {
    pub fn n_layers(&self) -> usize {
        self.header.n_layers as usize
    }

    pub fn hidden_dim(&self) -> usize {
        self.header.hidden_dim as usize
    }

    pub fn read(path: &Path) -> Result<Self, MetricsError> {
        let reader = HsdReader::open(path)?;
        let header = reader.header();
        let samples = reader.collect::<Result<Vec<_>, _>>()?;
        Ok(Self { header, samples })
    }

    pub fn write(&self, path: &Path) -> Result<(), MetricsError> {
        let mut w = HsdWriter::create(path, self.header)?;
        for s in &self.samples {
            w.write_sample(s)?;
        }
        w.finish()
    }
}

/// Streams samples from an HSD1 file, checking every declared length against
/// the bytes actually present.
pub struct HsdReader<R> {
    inner: R,
    path: PathBuf,
    header: HsdHeader,
    remaining_samples: u32,
    remaining_bytes: u64,
    done: bool,
}

impl HsdReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self, MetricsError> {
        let file = File::open(path).map_err(|e| MetricsError::io(path, e))?;
        let len = file.metadata().map_err(|e| MetricsError::io(path, e))?.len();
        HsdReader::new(BufReader::new(file), len, path)
    }
}

impl<R: Read> HsdReader<R> {
    pub fn new(mut inner: R, total_len: u64, path: &Path) -> Result<Self, MetricsError> {
        let mut magic = [0u8; 8];
        if total_len < 8 || inner.read_exact(&mut magic).is_err() || &magic != HSD_MAGIC {
            return Err(MetricsError::BadMagic(path.to_path_buf()));
        }
        if total_len < HEADER_LEN {
            return Err(MetricsError::Truncated {
                path: path.to_path_buf(),
                detail: "header".into(),
            });
        }
        let mut reader = Self {
            inner,
            path: path.to_path_buf(),
            header: HsdHeader {
                n_layers: 0,
                hidden_dim: 0,
                n_samples: 0,
            },
            remaining_samples: 0,
            remaining_bytes: total_len - 8,
            done: false,
        };
        let n_layers = reader.read_u32("header")?;
        let hidden_dim = reader.read_u32("header")?;
        let n_samples = reader.read_u32("header")?;
        reader.header = HsdHeader {
            n_layers,
            hidden_dim,
            n_samples,
        };
        reader.remaining_samples = n_samples;
        Ok(reader)
    }

    pub fn header(&self) -> HsdHeader {
        self.header
    }

    fn truncated(&self, what: &str) -> MetricsError {
        MetricsError::Truncated {
            path: self.path.clone(),
            detail: what.to_string(),
        }
    }

    fn take(&mut self, n: u64, what: &str) -> Result<Vec<u8>, MetricsError> {
        if n > self.remaining_bytes {
            return Err(self.truncated(what));
        }
        let mut buf = vec![0u8; n as usize];
        self.inner
            .read_exact(&mut buf)
            .map_err(|_| self.truncated(what))?;
        self.remaining_bytes -= n;
        Ok(buf)
    }

    fn read_u32(&mut self, what: &str) -> Result<u32, MetricsError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn read_sample(&mut self) -> Result<HsdSample, MetricsError> {
        let id_len = self.read_u32("sample id length")?;
        let id = String::from_utf8(self.take(u64::from(id_len), "sample id")?)
            .map_err(|_| MetricsError::Format("sample id is not UTF-8".into()))?;
        let n_tokens = self.read_u32("token count")? as u64;
        let roles = self
            .take(n_tokens, "role mask")?
            .into_iter()
            .map(|b| match b {
                0 => Ok(Role::Textual),
                1 => Ok(Role::Visual),
                other => Err(MetricsError::Format(format!(
                    "sample {id:?}: role byte {other} is neither 0 nor 1"
                ))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let floats = n_tokens * u64::from(self.header.hidden_dim);
        let layer_bytes = floats
            .checked_mul(4)
            .ok_or_else(|| self.truncated("layer block"))?;
        let needed = layer_bytes
            .checked_mul(u64::from(self.header.n_layers))
            .ok_or_else(|| self.truncated("layer block"))?;
        if needed > self.remaining_bytes {
            return Err(self.truncated(&format!("hidden states of sample {id:?}")));
        }
        let mut layers = Vec::with_capacity(self.header.n_layers as usize);
        for _ in 0..self.header.n_layers {
            let raw = self.take(layer_bytes, "layer block")?;
            layers.push(
                raw.chunks_exact(4)
                    .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                    .collect(),
            );
        }
        Ok(HsdSample { id, roles, layers })
    }
}

impl<R: Read> Iterator for HsdReader<R> {
    type Item = Result<HsdSample, MetricsError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        if self.remaining_samples == 0 {
            self.done = true;
            if self.remaining_bytes != 0 {
                return Some(Err(MetricsError::Format(format!(
                    "{} trailing bytes after the last sample",
                    self.remaining_bytes
                ))));
            }
            return None;
        }
        self.remaining_samples -= 1;
        let item = self.read_sample();
        if item.is_err() {
            self.done = true;
        }
        Some(item)
    }
}

/// Writes an HSD1 file sample by sample.
pub struct HsdWriter {
    out: BufWriter<File>,
    path: PathBuf,
    header: HsdHeader,
    written: u32,
}

impl HsdWriter {
    pub fn create(path: &Path, header: HsdHeader) -> Result<Self, MetricsError> {
        let file = File::create(path).map_err(|e| MetricsError::io(path, e))?;
        let mut out = BufWriter::new(file);
        let io_err = |e| MetricsError::io(path, e);
        out.write_all(HSD_MAGIC).map_err(io_err)?;
        for v in [header.n_layers, header.hidden_dim, header.n_samples] {
            out.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
        Ok(Self {
            out,
            path: path.to_path_buf(),
            header,
            written: 0,
        })
    }

    pub fn write_sample(&mut self, sample: &HsdSample) -> Result<(), MetricsError> {
        let dim = self.header.hidden_dim as usize;
        if sample.layers.len() != self.header.n_layers as usize {
            return Err(MetricsError::Format(format!(
                "sample {:?} has {} layers, header says {}",
                sample.id,
                sample.layers.len(),
                self.header.n_layers
            )));
        }
        if let Some(bad) = sample.layers.iter().find(|l| l.len() != sample.n_tokens() * dim) {
            return Err(MetricsError::Format(format!(
                "sample {:?}: layer holds {} floats, expected {}",
                sample.id,
                bad.len(),
                sample.n_tokens() * dim
            )));
        }
        self.write_raw(sample).map_err(|e| MetricsError::io(&self.path, e))?;
        self.written += 1;
        Ok(())
    }

    fn write_raw(&mut self, sample: &HsdSample) -> io::Result<()> {
        self.out.write_all(&(sample.id.len() as u32).to_le_bytes())?;
        self.out.write_all(sample.id.as_bytes())?;
        self.out.write_all(&(sample.n_tokens() as u32).to_le_bytes())?;
        let mask: Vec<u8> = sample.roles.iter().map(|r| *r as u8).collect();
        self.out.write_all(&mask)?;
        for layer in &sample.layers {
            for v in layer {
                self.out.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), MetricsError> {
        if self.written != self.header.n_samples {
            return Err(MetricsError::Format(format!(
                "wrote {} samples, header declares {}",
                self.written, self.header.n_samples
            )));
        }
        self.out.flush().map_err(|e| MetricsError::io(&self.path, e))
    }
}
