use std::io::Read;

use serde::{Deserialize, Serialize};

use super::{role_name, HiddenStateDump, HsdReader, HsdSample, MetricsError, Role};

/// Stored block index of the first self-attention layer output.
pub const DEFAULT_PCD_LAYER: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseReport {
    pub layer: usize,
    pub sample_ids: Vec<String>,
    pub distances: Vec<f64>,
    pub mean: f64,
}

/// `1 - cos(u, v)`, clamped to `[0, 2]`. `None` if either vector has zero norm.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Option<f64> {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return None;
    }
    let cos = (dot / (nu * nv)).clamp(-1.0, 1.0);
    Some(1.0 - cos)
}

fn role_mean(sample: &HsdSample, layer: usize, role: Role, dim: usize) -> Result<Vec<f64>, MetricsError> {
    let data = &sample.layers[layer];
    let mut sum = vec![0.0f64; dim];
    let mut n = 0usize;
    for (t, r) in sample.roles.iter().enumerate() {
        if *r == role {
            for (acc, x) in sum.iter_mut().zip(&data[t * dim..(t + 1) * dim]) {
                *acc += f64::from(*x);
            }
            n += 1;
        }
    }
    if n == 0 {
        return Err(MetricsError::MissingRole {
            sample: sample.id.clone(),
            role: role_name(role),
        });
    }
    Ok(sum.into_iter().map(|s| s / n as f64).collect())
}

fn sample_distance(sample: &HsdSample, layer: usize, dim: usize) -> Result<f64, MetricsError> {
    let text = role_mean(sample, layer, Role::Textual, dim)?;
    let img = role_mean(sample, layer, Role::Visual, dim)?;
    cosine_distance(&text, &img).ok_or_else(|| {
        let role = if text.iter().all(|x| *x == 0.0) {
            Role::Textual
        } else {
            Role::Visual
        };
        MetricsError::ZeroNorm {
            sample: sample.id.clone(),
            role: role_name(role),
        }
    })
}

fn check_layer(layer: usize, n_layers: usize) -> Result<(), MetricsError> {
    if layer >= n_layers {
        Err(MetricsError::LayerOutOfRange { layer, n_layers })
    } else {
        Ok(())
    }
}

fn finish(layer: usize, sample_ids: Vec<String>, distances: Vec<f64>) -> Result<PairwiseReport, MetricsError> {
    if distances.is_empty() {
        return Err(MetricsError::EmptyDump);
    }
    let mean = distances.iter().sum::<f64>() / distances.len() as f64;
    Ok(PairwiseReport {
        layer,
        sample_ids,
        distances,
        mean,
    })
}

pub fn pairwise_cross_modal_distance(dump: &HiddenStateDump, layer: usize) -> Result<PairwiseReport, MetricsError> {
    check_layer(layer, dump.n_layers())?;
    let distances = dump
        .samples
        .iter()
        .map(|s| sample_distance(s, layer, dump.hidden_dim()))
        .collect::<Result<Vec<_>, _>>()?;
    let ids = dump.samples.iter().map(|s| s.id.clone()).collect();
    finish(layer, ids, distances)
}

pub fn pairwise_from_reader<R: Read>(reader: HsdReader<R>, layer: usize) -> Result<PairwiseReport, MetricsError> {
    let header = reader.header();
    check_layer(layer, header.n_layers as usize)?;
    let (mut ids, mut distances) = (Vec::new(), Vec::new());
    for sample in reader {
        let sample = sample?;
        distances.push(sample_distance(&sample, layer, header.hidden_dim as usize)?);
        ids.push(sample.id);
    }
    finish(layer, ids, distances)
}

/// Histogram with bins bounded by the quartiles of the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuartileHistogram {
    /// min, q1, median, q3, max
    pub edges: [f64; 5],
    pub counts: [u64; 4],
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Equal-count quartile bins, linear interpolation between order statistics.
/// Bins are half-open except the last.
pub fn quartile_histogram(values: &[f64]) -> Option<QuartileHistogram> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let edges = [0.0, 0.25, 0.5, 0.75, 1.0].map(|q| quantile(&sorted, q));
    let mut counts = [0u64; 4];
    for v in &sorted {
        let bin = (1..4).rev().find(|&k| *v >= edges[k]).unwrap_or(0);
        counts[bin] += 1;
    }
    Some(QuartileHistogram { edges, counts })
}
