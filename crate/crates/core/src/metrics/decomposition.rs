use serde::{Deserialize, Serialize};

use super::MetricsError;

const SUM_TOLERANCE: f64 = 1e-9;
const KL_TOLERANCE: f64 = 1e-12;

/// Probabilities over a finite answer vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct AnswerDistribution(Vec<f64>);

impl AnswerDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self, MetricsError> {
        if probs.is_empty() {
            return Err(MetricsError::InvalidDistribution("empty".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(MetricsError::InvalidDistribution(format!("entry {p} is not a probability")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(MetricsError::InvalidDistribution(format!("entries sum to {sum}")));
        }
        Ok(Self(probs))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for AnswerDistribution {
    type Error = MetricsError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<AnswerDistribution> for Vec<f64> {
    fn from(d: AnswerDistribution) -> Self {
        d.0
    }
}

/// Per-answer loss split and distribution-level cross-entropy split, in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub loss_lomo: f64,
    pub sft_term: f64,
    pub align_term: f64,
    pub expected_cross_entropy: f64,
    pub entropy_term: f64,
    pub kl: f64,
}

impl Decomposition {
    /// `(loss_lomo - sft_term) - align_term`.
    pub fn split_residual(&self) -> f64 {
        (self.loss_lomo - self.sft_term) - self.align_term
    }

    /// `expected_cross_entropy - (entropy_term + kl)`.
    pub fn kl_residual(&self) -> f64 {
        self.expected_cross_entropy - (self.entropy_term + self.kl)
    }
}

pub fn decomposition_check(
    p_x: &AnswerDistribution,
    p_tx: &AnswerDistribution,
    a: usize,
) -> Result<Decomposition, MetricsError> {
    if p_x.len() != p_tx.len() {
        return Err(MetricsError::DimensionMismatch {
            left: p_x.len(),
            right: p_tx.len(),
        });
    }
    if a >= p_x.len() {
        return Err(MetricsError::AnswerOutOfRange { index: a, len: p_x.len() });
    }
    if p_x.0[a] == 0.0 || p_tx.0[a] == 0.0 {
        return Err(MetricsError::ZeroProbability { index: a });
    }

    let log_px = p_x.0[a].ln();
    let log_ptx = p_tx.0[a].ln();
    let loss_lomo = -log_ptx;
    let sft_term = -log_px;
    let align_term = loss_lomo - sft_term;

    let (mut cross, mut entropy, mut kl) = (0.0, 0.0, 0.0);
    for (i, (&px, &ptx)) in p_x.0.iter().zip(&p_tx.0).enumerate() {
        if px == 0.0 {
            continue;
        }
        if ptx == 0.0 {
            return Err(MetricsError::SupportMismatch { index: i });
        }
        let (lx, ltx) = (px.ln(), ptx.ln());
        cross -= px * ltx;
        entropy -= px * lx;
        kl += px * (lx - ltx);
    }
    if kl < -KL_TOLERANCE {
        return Err(MetricsError::NegativeKl(kl));
    }
    Ok(Decomposition {
        loss_lomo,
        sft_term,
        align_term,
        expected_cross_entropy: cross,
        entropy_term: entropy,
        kl: kl.max(0.0),
    })
}
