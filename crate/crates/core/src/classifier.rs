//! Packet traffic classifiers.
//!
//! Two architectures over the 1456-byte payload vector, parameterized by the
//! class count M:
//!
//! - MLP: dense 1456 -> 768 -> 128 -> M, ReLU activations, softmax head.
//! - 1-D CNN: two conv stages of 16 kernels of width 9 (stride 1, no
//!   pooling), flatten, dense 128 -> M, softmax head.
//!
//! Both expose the 128-wide dense layer as the feature tap; 2-D and 3-D
//! variants are rejected at build time.

use crate::error::{Error, Result};
use crate::nn::{self, Layer, NeuralModel, TrainConfig};
use crate::packet::{LabeledDataset, PacketVector, VECTOR_LEN};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchKind {
    Mlp,
    Cnn1d,
    Cnn2d,
    Cnn3d,
}

impl std::fmt::Display for ArchKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ArchKind::Mlp => "mlp",
            ArchKind::Cnn1d => "cnn1d",
            ArchKind::Cnn2d => "cnn2d",
            ArchKind::Cnn3d => "cnn3d",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArchitectureSpec {
    pub kind: ArchKind,
    pub input_length: usize,
}

impl ArchitectureSpec {
    pub fn mlp() -> Self {
        Self {
            kind: ArchKind::Mlp,
            input_length: VECTOR_LEN,
        }
    }

    pub fn cnn1d() -> Self {
        Self {
            kind: ArchKind::Cnn1d,
            input_length: VECTOR_LEN,
        }
    }

    pub fn of(kind: ArchKind) -> Self {
        Self {
            kind,
            input_length: VECTOR_LEN,
        }
    }
}

/// Builds an untrained, seeded classifier for `class_count` applications.
pub fn build(spec: &ArchitectureSpec, class_count: usize, seed_val: u64) -> Result<NeuralModel> {
    if class_count < 2 {
        return Err(Error::Validation(format!(
            "classifier needs at least two classes, got {class_count}"
        )));
    }
    let mut rng = seed::rng(seed_val, "classifier.init");
    let n = spec.input_length;
    match spec.kind {
        ArchKind::Mlp => {
            let layers = vec![
                Layer::dense_seeded(n, 768, &mut rng)?,
                Layer::Relu,
                Layer::dense_seeded(768, 128, &mut rng)?,
                Layer::Relu,
                Layer::dense_seeded(128, class_count, &mut rng)?,
                Layer::Softmax,
            ];
            NeuralModel::new(layers, class_count, 2)
        }
        ArchKind::Cnn1d => {
            let stage1_out = n - 9 + 1;
            let stage2_out = stage1_out - 9 + 1;
            let layers = vec![
                Layer::conv1d_seeded(n, 1, 16, 9, &mut rng)?,
                Layer::Relu,
                Layer::conv1d_seeded(stage1_out, 16, 16, 9, &mut rng)?,
                Layer::Relu,
                Layer::Flatten,
                Layer::dense_seeded(stage2_out * 16, 128, &mut rng)?,
                Layer::Relu,
                Layer::dense_seeded(128, class_count, &mut rng)?,
                Layer::Softmax,
            ];
            NeuralModel::new(layers, class_count, 5)
        }
        ArchKind::Cnn2d | ArchKind::Cnn3d => Err(Error::OutOfScope(format!(
            "{} training is not supported; use mlp or cnn1d (packet image export is available separately)",
            spec.kind
        ))),
    }
}

/// A trained classifier plus the held-out accuracy recorded for downstream
/// threshold computation.
#[derive(Debug, Clone)]
pub struct TrainedClassifier {
    pub model: NeuralModel,
    /// Accuracy on a seeded 10% validation split of the training data.
    pub validation_accuracy: f64,
}

/// Trains a classifier on a dense-labeled dataset.
pub fn train_classifier(
    spec: &ArchitectureSpec,
    dataset: &LabeledDataset,
    cfg: &TrainConfig,
) -> Result<TrainedClassifier> {
    let class_count = dataset.require_dense_labels()?;
    if class_count < 2 {
        return Err(Error::Validation(
            "training dataset must contain at least two classes".into(),
        ));
    }
    let model = build(spec, class_count, seed::derive(cfg.seed, "classifier.build"))?;
    let (train_set, val_set) =
        dataset.split_validation(0.1, seed::derive(cfg.seed, "classifier.valsplit"));
    let (inputs, labels) = train_set.training_views()?;
    let model = nn::train(model, &inputs, &labels, cfg)?;
    let validation_accuracy = accuracy(&model, &val_set)?;
    Ok(TrainedClassifier {
        model,
        validation_accuracy,
    })
}

/// Per-packet classification outcome: the probability simplex, the
/// confidence score `s* = max(s)`, the argmax label, and the feature map
/// tapped from the 128-wide dense layer.
#[derive(Debug, Clone)]
pub struct ConfidenceRecord {
    pub probabilities: Vec<f64>,
    pub top_score: f64,
    pub predicted_label: u32,
    pub feature_map: Vec<f64>,
}

pub fn classify(model: &NeuralModel, packet: &PacketVector) -> Result<ConfidenceRecord> {
    let (probs, feature) = nn::forward(model, &packet.to_tensor())?;
    let probabilities = probs.data().to_vec();
    let (predicted_label, top_score) = probabilities
        .iter()
        .enumerate()
        .fold((0usize, f64::MIN), |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        });
    Ok(ConfidenceRecord {
        probabilities,
        top_score,
        predicted_label: predicted_label as u32,
        feature_map: feature.data().to_vec(),
    })
}

/// Order-preserving confidence scores for a packet population.
pub fn score_set(model: &NeuralModel, packets: &[PacketVector]) -> Result<Vec<f64>> {
    packets
        .iter()
        .map(|p| classify(model, p).map(|r| r.top_score))
        .collect()
}

/// Fraction of records whose argmax prediction matches the label.
pub fn accuracy(model: &NeuralModel, dataset: &LabeledDataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::Validation("cannot measure accuracy on an empty set".into()));
    }
    let mut correct = 0usize;
    let mut total = 0usize;
    for record in dataset.records() {
        let Some(label) = record.label else { continue };
        let predicted = classify(model, &record.vector)?.predicted_label;
        total += 1;
        if predicted == label {
            correct += 1;
        }
    }
    if total == 0 {
        return Err(Error::Validation("no labeled records to score".into()));
    }
    Ok(correct as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Layer;

    fn layer_dims(model: &NeuralModel) -> Vec<(usize, usize)> {
        model
            .layers()
            .iter()
            .filter_map(|l| match l {
                Layer::Dense { in_dim, out_dim, .. } => Some((*in_dim, *out_dim)),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn mlp_matches_table_widths() {
        let model = build(&ArchitectureSpec::mlp(), 9, 1).unwrap();
        assert_eq!(layer_dims(&model), vec![(1456, 768), (768, 128), (128, 9)]);
        assert_eq!(model.feature_tap(), 2);
    }

    #[test]
    fn cnn1d_matches_table_shape() {
        let model = build(&ArchitectureSpec::cnn1d(), 9, 1).unwrap();
        let convs: Vec<(usize, usize, usize)> = model
            .layers()
            .iter()
            .filter_map(|l| match l {
                Layer::Conv1d {
                    kernel_count,
                    kernel_width,
                    in_ch,
                    ..
                } => Some((*kernel_width, *kernel_count, *in_ch)),
                _ => None,
            })
            .collect();
        assert_eq!(convs, vec![(9, 16, 1), (9, 16, 16)]);
        assert_eq!(layer_dims(&model), vec![(1440 * 16, 128), (128, 9)]);
    }

    #[test]
    fn class_count_is_parameterizable() {
        let model = build(&ArchitectureSpec::mlp(), 11, 1).unwrap();
        assert_eq!(model.class_count(), 11);
        assert_eq!(layer_dims(&model).last(), Some(&(128, 11)));
    }

    #[test]
    fn unsupported_architectures_are_out_of_scope() {
        for kind in [ArchKind::Cnn2d, ArchKind::Cnn3d] {
            assert!(matches!(
                build(&ArchitectureSpec::of(kind), 9, 1),
                Err(Error::OutOfScope(_))
            ));
        }
    }

    #[test]
    fn single_class_rejected() {
        assert!(build(&ArchitectureSpec::mlp(), 1, 1).is_err());
    }

    #[test]
    fn zero_weight_model_scores_uniformly() {
        let layers = vec![
            Layer::dense(VECTOR_LEN, 128, vec![0.0; VECTOR_LEN * 128], vec![0.0; 128]).unwrap(),
            Layer::Relu,
            Layer::dense(128, 4, vec![0.0; 512], vec![0.0; 4]).unwrap(),
            Layer::Softmax,
        ];
        let model = NeuralModel::new(layers, 4, 0).unwrap();
        let packet = PacketVector::from_payload(&[7u8; 200]).unwrap();
        let record = classify(&model, &packet).unwrap();
        assert!((record.top_score - 0.25).abs() < 1e-12);
        for &p in &record.probabilities {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn concurrent_inference_is_order_stable() {
        let model = build(&ArchitectureSpec::mlp(), 3, 9).unwrap();
        let packets: Vec<PacketVector> = (1..=8u8)
            .map(|b| PacketVector::from_payload(&vec![b.wrapping_mul(29); 150]).unwrap())
            .collect();
        let sequential = score_set(&model, &packets).unwrap();
        let parallel: Vec<f64> = std::thread::scope(|scope| {
            let handles: Vec<_> = packets
                .chunks(2)
                .map(|chunk| scope.spawn(|| score_set(&model, chunk).unwrap()))
                .collect();
            handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
        });
        assert_eq!(sequential, parallel);
    }

    #[test]
    fn score_set_matches_classify() {
        let model = build(&ArchitectureSpec::mlp(), 3, 5).unwrap();
        let packets: Vec<PacketVector> = (1..6u8)
            .map(|b| PacketVector::from_payload(&vec![b; 100]).unwrap())
            .collect();
        let scores = score_set(&model, &packets).unwrap();
        assert_eq!(scores.len(), packets.len());
        for (p, &s) in packets.iter().zip(&scores) {
            assert_eq!(classify(&model, p).unwrap().top_score, s);
        }
        assert!(score_set(&model, &[]).unwrap().is_empty());
    }
}
