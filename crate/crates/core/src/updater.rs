//! Classifier update by transfer learning.
//!
//! The discovered packets join the old dataset under fresh class ids, the
//! final dense layer (and softmax width) is resized from M_t to M_{t+1} with
//! the old output columns migrated and the new ones seeded, and the whole
//! network is fine-tuned on the merged dataset — no frozen layers, reduced
//! learning rate.

use std::collections::BTreeMap;

use crate::classifier::{train_classifier, ArchitectureSpec, TrainedClassifier};
use crate::error::{Error, Result};
use crate::nn::{self, glorot_uniform, Layer, NeuralModel, TrainConfig};
use crate::packet::{LabeledDataset, PacketVector};
use crate::seed;

/// How an update changes the label space, plus the fine-tune config.
#[derive(Debug, Clone)]
pub struct UpdatePlan {
    pub class_count_before: usize,
    pub class_count_after: usize,
    /// Discovered cluster id -> new global class id.
    pub label_remap: BTreeMap<u32, u32>,
    pub retrain: TrainConfig,
}

impl UpdatePlan {
    /// Plan for `discovered` new classes appended after the existing ones.
    /// The fine-tune config reuses `base` with the learning rate scaled by
    /// 0.1 (transfer default).
    pub fn transfer_default(class_count_before: usize, discovered: usize, base: &TrainConfig) -> Self {
        let label_remap = (0..discovered as u32)
            .map(|c| (c, class_count_before as u32 + c))
            .collect();
        let mut retrain = base.clone();
        retrain.learning_rate = base.learning_rate * 0.1;
        Self {
            class_count_before,
            class_count_after: class_count_before + discovered,
            label_remap,
            retrain,
        }
    }
}

/// Appends the discovered packets to the old dataset with labels offset by
/// M_t, extending the class names with `discovered-<cluster id>`. Empty
/// input returns the old dataset unchanged.
pub fn merge_dataset(
    old: &LabeledDataset,
    packets: &[PacketVector],
    labels: &[u32],
) -> Result<LabeledDataset> {
    let class_count_before = old.require_dense_labels()? as u32;
    if packets.len() != labels.len() {
        return Err(Error::Validation(format!(
            "{} packets but {} labels",
            packets.len(),
            labels.len()
        )));
    }
    let mut merged = old.clone();
    if packets.is_empty() {
        return Ok(merged);
    }
    let discovered = labels.iter().max().expect("non-empty") + 1;
    for cluster in 0..discovered {
        if !labels.contains(&cluster) {
            return Err(Error::Validation(format!(
                "cluster labels are not contiguous: id {cluster} missing (K = {discovered})"
            )));
        }
        merged.set_class_name(
            class_count_before + cluster,
            format!("discovered-{cluster}"),
        );
    }
    for (vector, &cluster) in packets.iter().zip(labels) {
        merged.push(vector.clone(), Some(class_count_before + cluster));
    }
    Ok(merged)
}

/// Rebuilds the final dense layer at the new width, migrating the first M_t
/// output columns from the old model and seeding the rest, then fine-tunes
/// on the merged dataset. `retrain.epochs = 0` performs the resize only.
pub fn transfer_update(
    old: &NeuralModel,
    merged: &LabeledDataset,
    plan: &UpdatePlan,
) -> Result<NeuralModel> {
    if old.class_count() != plan.class_count_before {
        return Err(Error::Validation(format!(
            "model has {} classes but the plan expects {}",
            old.class_count(),
            plan.class_count_before
        )));
    }
    let m_after = merged.require_dense_labels()?;
    if m_after != plan.class_count_after {
        return Err(Error::Validation(format!(
            "merged dataset has {m_after} classes but the plan expects {}",
            plan.class_count_after
        )));
    }

    let resized = resize_output(old, plan.class_count_after, plan.retrain.seed)?;
    if plan.retrain.epochs == 0 {
        return Ok(resized);
    }
    let (inputs, labels) = merged.training_views()?;
    nn::train(resized, &inputs, &labels, &plan.retrain)
}

/// Copies every layer except the final dense, which is rebuilt at
/// `new_width` with old columns preserved and new ones freshly initialized.
fn resize_output(model: &NeuralModel, new_width: usize, seed_val: u64) -> Result<NeuralModel> {
    let final_dense = model
        .layers()
        .iter()
        .rposition(|l| matches!(l, Layer::Dense { .. }))
        .expect("validated models have a final dense layer");

    let mut layers = model.layers().to_vec();
    let Layer::Dense {
        in_dim,
        out_dim,
        weights,
        bias,
    } = &model.layers()[final_dense]
    else {
        unreachable!("rposition found a dense layer");
    };
    let old_width = *out_dim;
    if new_width < old_width {
        return Err(Error::Validation(format!(
            "cannot shrink the output layer from {old_width} to {new_width}"
        )));
    }

    let mut rng = seed::rng(seed_val, "updater.new_rows");
    let fresh = glorot_uniform(&mut rng, *in_dim, new_width, in_dim * new_width);
    let mut new_weights = fresh;
    for row in 0..*in_dim {
        for col in 0..old_width {
            new_weights[row * new_width + col] = weights[row * old_width + col];
        }
    }
    let mut new_bias = vec![0.0; new_width];
    new_bias[..old_width].copy_from_slice(bias);

    layers[final_dense] = Layer::dense(*in_dim, new_width, new_weights, new_bias)?;
    NeuralModel::new(layers, new_width, model.feature_tap())
}

/// From-scratch baseline on the merged dataset, independent of the old
/// model's weights.
pub fn retrain_from_scratch(
    spec: &ArchitectureSpec,
    merged: &LabeledDataset,
    cfg: &TrainConfig,
) -> Result<TrainedClassifier> {
    train_classifier(spec, merged, cfg)
}
