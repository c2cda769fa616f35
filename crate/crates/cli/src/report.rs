//! Summaries printed by `stats` and `metrics`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use lomo_core::corpus::{Counts, CurationManifest, Protocol};
use lomo_core::metrics::{MirReport, PairwiseReport, QuartileHistogram};
use lomo_core::pipeline::CurationStats;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Throughput {
    pub instances_per_sec: f64,
    pub elapsed_secs: f64,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsSummary {
    pub protocol: Protocol,
    pub counts: Counts,
    pub count_identity: &'static str,
    pub route_histogram: BTreeMap<String, u64>,
    pub distortion_histogram: BTreeMap<String, u64>,
    pub throughput: Option<Throughput>,
}

impl StatsSummary {
    pub fn new(manifest: &CurationManifest, stats: Option<&CurationStats>) -> Self {
        Self {
            protocol: manifest.protocol,
            counts: manifest.counts,
            count_identity: if manifest.counts.identity_holds() { "OK" } else { "VIOLATED" },
            route_histogram: manifest.route_histogram(),
            distortion_histogram: manifest.distortion_histogram(),
            throughput: stats.map(|s| Throughput {
                instances_per_sec: s.instances_per_sec,
                elapsed_secs: s.elapsed_secs,
                workers: s.workers,
            }),
        }
    }

    pub fn identity_ok(&self) -> bool {
        self.counts.identity_holds()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let protocol = serde_json::to_value(self.protocol).ok();
        let protocol = protocol.as_ref().and_then(|v| v.as_str()).unwrap_or("?");
        let row = |out: &mut String, key: &str, value: &dyn std::fmt::Display| {
            let _ = writeln!(out, "  {key:<24}{value:>12}");
        };
        let _ = writeln!(out, "protocol: {protocol}");
        let _ = writeln!(out, "counts:");
        row(&mut out, "total", &self.counts.total);
        row(&mut out, "rewritten", &self.counts.rewritten);
        row(&mut out, "text_only_kept", &self.counts.text_only_kept);
        row(&mut out, "image_bearing_original", &self.counts.image_bearing_original);
        let _ = writeln!(out, "count identity: {}", self.count_identity);
        for (title, hist) in [("routes", &self.route_histogram), ("distortions", &self.distortion_histogram)] {
            let _ = writeln!(out, "{title}:");
            if hist.is_empty() {
                let _ = writeln!(out, "  (none)");
            }
            for (k, v) in hist {
                row(&mut out, k, v);
            }
        }
        match &self.throughput {
            Some(t) => {
                let _ = writeln!(out, "throughput:");
                row(&mut out, "instances_per_sec", &format!("{:.2}", t.instances_per_sec));
                row(&mut out, "elapsed_secs", &format!("{:.3}", t.elapsed_secs));
                row(&mut out, "workers", &t.workers);
            }
            None => {
                let _ = writeln!(out, "throughput: unavailable (no stats sidecar)");
            }
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MirOutput {
    pub n_layers: usize,
    pub per_layer_fid: Vec<f64>,
    pub mir: f64,
}

impl From<MirReport> for MirOutput {
    fn from(r: MirReport) -> Self {
        Self {
            n_layers: r.per_layer_fid.len(),
            per_layer_fid: r.per_layer_fid,
            mir: r.mir,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleDistance {
    pub id: String,
    pub d: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PcdOutput {
    pub layer: usize,
    pub n_samples: usize,
    pub pcd_mean: f64,
    pub pcd_histogram: Option<QuartileHistogram>,
    pub per_sample: Vec<SampleDistance>,
}

impl From<PairwiseReport> for PcdOutput {
    fn from(r: PairwiseReport) -> Self {
        Self {
            layer: r.layer,
            n_samples: r.distances.len(),
            pcd_mean: r.mean,
            pcd_histogram: lomo_core::metrics::quartile_histogram(&r.distances),
            per_sample: r
                .sample_ids
                .into_iter()
                .zip(r.distances)
                .map(|(id, d)| SampleDistance { id, d })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use lomo_core::corpus::InstanceRecord;

    fn manifest(counts: Counts) -> CurationManifest {
        CurationManifest {
            protocol: Protocol::Curate,
            source_path: "in.jsonl".into(),
            seed: 1,
            rewrite_ratio: 0.5,
            position_mode: None,
            counts,
            per_instance_records: Vec::<InstanceRecord>::new(),
            ratio_match: None,
        }
    }

    #[test]
    fn identity_verdicts() {
        let ok = StatsSummary::new(
            &manifest(Counts {
                total: 3,
                rewritten: 1,
                text_only_kept: 1,
                image_bearing_original: 1,
            }),
            None,
        );
        assert_eq!(ok.count_identity, "OK");
        assert!(ok.to_text().contains("count identity: OK"));
        let bad = StatsSummary::new(
            &manifest(Counts {
                total: 4,
                rewritten: 1,
                text_only_kept: 1,
                image_bearing_original: 1,
            }),
            None,
        );
        assert_eq!(bad.count_identity, "VIOLATED");
        assert!(!bad.identity_ok());
    }
}
