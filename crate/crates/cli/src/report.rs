//! Run report: every number a pipeline run produces, recomputable from the
//! persisted artifacts. Wall-clock measurements live in the `timing` section
//! so deterministic fields can be compared across runs.

use std::collections::BTreeMap;

use owtc_core::labeler::BicRow;
use owtc_core::metrics::{BenchReport, ConfusionMatrix, PrfScores};
use serde::{Deserialize, Serialize};

use crate::scenario::ScenarioConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ScenarioConfig,
    /// Root seed plus a note on the derivation scheme.
    pub seeds: SeedNote,
    /// Classifier accuracy used as the threshold level.
    pub epsilon: f64,
    /// Confidence threshold (empirical quantile of known scores).
    pub theta: f64,
    pub sets: SetSizes,
    pub scores: ScoreSets,
    pub filter_quality: Option<FilterQuality>,
    pub clustering: Option<ClusteringReport>,
    pub evaluation: Option<EvaluationReport>,
    /// Relative artifact path -> SHA-256 hex digest.
    pub artifacts: BTreeMap<String, String>,
    pub warnings: Vec<String>,
    /// Wall-clock data; excluded from determinism comparisons.
    pub timing: Timing,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedNote {
    pub root: u64,
    pub scheme: String,
}

/// Packet counts of the filtering stage (indices refer to the traffic file).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SetSizes {
    pub traffic: usize,
    pub low_confidence: usize,
    pub remaining: usize,
    pub swept: usize,
    pub unknown: usize,
    pub fallback: bool,
}

/// Confidence score populations behind the CDF plot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreSets {
    /// s* of known-class validation packets (existing classes).
    pub known_validation: Vec<f64>,
    /// s* of truth-unknown packets in the active traffic.
    pub unknown_traffic: Vec<f64>,
}

/// Ground-truth bookkeeping of the filter stage (synthetic scenarios only).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterQuality {
    /// Fraction of truth-unknown traffic packets that ended up in P_n.
    pub recall: f64,
    /// Fraction of P_n that is truly unknown.
    pub purity: f64,
    /// Fraction of the low-confidence (left) set that is truly unknown.
    pub prefilter_purity: f64,
    pub truth_unknown_in_traffic: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusteringReport {
    pub bic_table: Vec<BicRow>,
    pub chosen_k: usize,
    pub degenerate: bool,
    pub cluster_sizes: Vec<usize>,
    /// PCA dimension that reached the variance target.
    pub retained_dimension: usize,
    pub explained_ratio: Vec<f64>,
    /// Agreement with ground truth over the clustered packets.
    pub rand_index: Option<f64>,
    pub pairwise: Option<PrfScores>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub pre_update_confusion: ConfusionMatrix,
    pub post_update_confusion: ConfusionMatrix,
    /// Original classifier on the existing-class validation portion.
    pub accuracy_existing_before: f64,
    /// Updated classifier on the same packets.
    pub accuracy_existing_after: f64,
    /// Updated classifier on unknown-class test packets (mapped clusters).
    pub accuracy_new_classes: Option<f64>,
    pub accuracy_overall: f64,
    /// Unknown test packets whose truth class mapped to no cluster; they
    /// count as errors in the accuracies above.
    pub unmapped_unknown_packets: usize,
    /// Truth application name -> discovered global class id.
    pub truth_to_discovered: BTreeMap<String, u32>,
    pub transfer_epochs: usize,
    pub baseline: Option<BaselineReport>,
}

/// From-scratch retrain comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaselineReport {
    pub epochs: usize,
    pub accuracy_overall: f64,
    pub accuracy_new_classes: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Timing {
    pub stage_seconds: BTreeMap<String, f64>,
    pub bench_original: Option<BenchReport>,
    pub bench_updated: Option<BenchReport>,
}

impl RunReport {
    /// The report minus wall-clock content, as a JSON value; two runs with
    /// the same seed must agree on this.
    pub fn deterministic_view(&self) -> serde_json::Value {
        let mut value = serde_json::to_value(self).expect("report serializes");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("timing");
        }
        value
    }
}
