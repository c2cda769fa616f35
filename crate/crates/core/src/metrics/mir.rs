use std::io::Read;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{frechet_distance, role_name, HiddenStateDump, HsdReader, HsdSample, MetricsError, MomentAccumulator, Role};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MirReport {
    pub per_layer_fid: Vec<f64>,
    pub mir: f64,
}

impl MirReport {
    pub fn from_per_layer(per_layer_fid: Vec<f64>) -> Self {
        let mir = if per_layer_fid.is_empty() {
            0.0
        } else {
            per_layer_fid.iter().sum::<f64>() / per_layer_fid.len() as f64
        };
        Self { per_layer_fid, mir }
    }
}

/// Per-layer textual and visual token populations, pooled across samples.
#[derive(Debug, Clone)]
pub struct LayerPopulations {
    hidden_dim: usize,
    textual: Vec<MomentAccumulator>,
    visual: Vec<MomentAccumulator>,
}

impl LayerPopulations {
    pub fn new(n_layers: usize, hidden_dim: usize) -> Self {
        Self {
            hidden_dim,
            textual: (0..n_layers).map(|_| MomentAccumulator::new(hidden_dim)).collect(),
            visual: (0..n_layers).map(|_| MomentAccumulator::new(hidden_dim)).collect(),
        }
    }

    pub fn n_layers(&self) -> usize {
        self.textual.len()
    }

    pub fn add_sample(&mut self, sample: &HsdSample) -> Result<(), MetricsError> {
        if sample.layers.len() != self.n_layers() {
            return Err(MetricsError::DimensionMismatch {
                left: self.n_layers(),
                right: sample.layers.len(),
            });
        }
        let dim = self.hidden_dim;
        self.textual
            .par_iter_mut()
            .zip(self.visual.par_iter_mut())
            .enumerate()
            .try_for_each(|(l, (text, vis))| {
                let (rows, n) = sample.rows_with_role(l, Role::Textual, dim);
                text.push_rows(&rows, n)?;
                let (rows, n) = sample.rows_with_role(l, Role::Visual, dim);
                vis.push_rows(&rows, n)
            })
    }

    pub fn merge(&mut self, other: &LayerPopulations) -> Result<(), MetricsError> {
        if other.n_layers() != self.n_layers() {
            return Err(MetricsError::DimensionMismatch {
                left: self.n_layers(),
                right: other.n_layers(),
            });
        }
        for (a, b) in self.textual.iter_mut().zip(&other.textual) {
            a.merge(b)?;
        }
        for (a, b) in self.visual.iter_mut().zip(&other.visual) {
            a.merge(b)?;
        }
        Ok(())
    }

    pub fn report(&self) -> Result<MirReport, MetricsError> {
        let per_layer = (0..self.n_layers())
            .into_par_iter()
            .map(|l| {
                let fit = |acc: &MomentAccumulator, role| {
                    if acc.count() < 2 {
                        return Err(MetricsError::LayerTooFewTokens {
                            layer: l,
                            role: role_name(role),
                            got: acc.count(),
                        });
                    }
                    acc.finish()
                };
                let text = fit(&self.textual[l], Role::Textual)?;
                let vis = fit(&self.visual[l], Role::Visual)?;
                frechet_distance(&vis, &text)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MirReport::from_per_layer(per_layer))
    }
}

pub fn mir(dump: &HiddenStateDump) -> Result<MirReport, MetricsError> {
    let mut pops = LayerPopulations::new(dump.n_layers(), dump.hidden_dim());
    for s in &dump.samples {
        pops.add_sample(s)?;
    }
    pops.report()
}

/// MIR over a dump read one sample at a time.
pub fn mir_from_reader<R: Read>(reader: HsdReader<R>) -> Result<MirReport, MetricsError> {
    let header = reader.header();
    let mut pops = LayerPopulations::new(header.n_layers as usize, header.hidden_dim as usize);
    for sample in reader {
        pops.add_sample(&sample?)?;
    }
    pops.report()
}
