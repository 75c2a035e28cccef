//! Autonomous labeling of filtered unknown packets.
//!
//! Feature maps tapped from the classifier's dense layer are normalized
//! per packet (mapminmax), reduced with PCA to the dimension that keeps the
//! variance target, clustered with K-means for k = 1..K_max, and the cluster
//! count is selected by the largest BIC decrease. Cluster ids become the
//! labels of the discovered classes.

mod cluster;
mod pca;

pub use cluster::{autocluster, bic, kmeans, Autocluster, BicRow, ClusterModel};
pub use pca::{pca, PrincipalComponents};

use crate::classifier::classify;
use crate::error::{Error, Result};
use crate::nn::NeuralModel;
use crate::packet::PacketVector;

/// Column-per-packet feature matrix: V columns of width W (the feature-tap
/// width, 128 for the in-scope classifiers).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    width: usize,
    columns: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn new(columns: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = columns.first() else {
            return Err(Error::Validation("feature matrix needs at least one column".into()));
        };
        let width = first.len();
        if width == 0 {
            return Err(Error::Validation("feature vectors must be non-empty".into()));
        }
        for (i, col) in columns.iter().enumerate() {
            if col.len() != width {
                return Err(Error::Dimension(format!(
                    "feature column {i} has width {}, expected {width}",
                    col.len()
                )));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!("non-finite feature in column {i}")));
            }
        }
        Ok(Self { width, columns })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    /// Applies [`mapminmax`] to every column.
    pub fn normalized(&self) -> Self {
        Self {
            width: self.width,
            columns: self.columns.iter().map(|c| mapminmax(c)).collect(),
        }
    }
}

/// Collects the feature map of every packet by passing it through the
/// classifier; column v belongs to the v-th packet.
pub fn assemble_features(
    packets: &[PacketVector],
    model: &NeuralModel,
) -> Result<FeatureMatrix> {
    if packets.is_empty() {
        return Err(Error::Validation("nothing to label: no packets".into()));
    }
    let columns = packets
        .iter()
        .map(|p| classify(model, p).map(|r| r.feature_map))
        .collect::<Result<Vec<_>>>()?;
    FeatureMatrix::new(columns)
}

/// Per-vector min-max normalization to `[0, 1]`. Zero vectors stay zero, and
/// a constant non-zero vector also maps to zero (degenerate range).
pub fn mapminmax(values: &[f64]) -> Vec<f64> {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    if values.is_empty() || range == 0.0 {
        return vec![0.0; values.len()];
    }
    values.iter().map(|&v| (v - min) / range).collect()
}

/// Result of the full labeling pass.
#[derive(Debug, Clone)]
pub struct LabelingOutcome {
    pub components: PrincipalComponents,
    pub clustering: Autocluster,
}

/// Normalize, reduce, and cluster the feature maps of the filtered packets.
pub fn label_unknowns(
    packets: &[PacketVector],
    model: &NeuralModel,
    variance_target: f64,
    k_max: usize,
    seed_val: u64,
) -> Result<LabelingOutcome> {
    let features = assemble_features(packets, model)?.normalized();
    let components = pca(&features, variance_target)?;
    let clustering = autocluster(&components.points, k_max, seed_val)?;
    Ok(LabelingOutcome {
        components,
        clustering,
    })
}
