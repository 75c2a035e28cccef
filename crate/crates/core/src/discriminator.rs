//! Unknown-application filtering.
//!
//! Packets whose confidence score falls at or below a threshold derived from
//! the known-class score distribution are collected directly; a binary
//! discriminator trained on {known dataset -> 0, collected packets -> 1}
//! then sweeps the remaining high-confidence traffic for the unknowns the
//! threshold missed.

use crate::classifier::score_set;
use crate::error::{Error, Result};
use crate::nn::{self, Layer, NeuralModel, TrainConfig};
use crate::packet::{LabeledDataset, PacketVector, VECTOR_LEN};
use crate::seed;

/// Confidence threshold fitted from a known-class score set.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ThresholdModel {
    /// Empirical (1 - epsilon) quantile of the known-class scores.
    pub theta: f64,
    /// Classifier accuracy used as the quantile level.
    pub epsilon: f64,
    /// Number of scores the quantile was fitted from.
    pub sample_count: usize,
}

/// Outcome of the full filtering pass. All index sets refer to positions in
/// the traffic slice handed to [`discriminate`].
#[derive(Debug, Clone)]
pub struct DiscriminationResult {
    /// Packets at or below the threshold (the left tail).
    pub low_confidence: Vec<usize>,
    /// Packets above the threshold.
    pub remaining: Vec<usize>,
    /// Subset of `remaining` the discriminator judged unknown.
    pub swept: Vec<usize>,
    /// Final unknown set: `low_confidence` followed by `swept`.
    pub unknown: Vec<usize>,
    pub threshold: ThresholdModel,
    /// `None` when the pipeline fell back to threshold-only filtering.
    pub discriminator: Option<NeuralModel>,
    /// True when the discriminator could not be trained.
    pub fallback: bool,
    pub warnings: Vec<String>,
}

/// Empirical quantile of the known-class scores at level `1 - epsilon`,
/// nearest-rank convention: the `ceil((1 - eps) * n)`-th smallest score, or
/// the smallest score when `(1 - eps) * n <= 1`.
pub fn compute_threshold(known_scores: &[f64], epsilon: f64) -> Result<ThresholdModel> {
    if known_scores.is_empty() {
        return Err(Error::Validation("known score set is empty".into()));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Validation(format!(
            "epsilon must lie in (0, 1], got {epsilon}"
        )));
    }
    let mut sorted = known_scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("scores are finite"));
    let n = sorted.len();
    let position = (1.0 - epsilon) * n as f64;
    let rank = if position <= 1.0 {
        1
    } else {
        (position.ceil() as usize).min(n)
    };
    Ok(ThresholdModel {
        theta: sorted[rank - 1],
        epsilon,
        sample_count: n,
    })
}

/// Splits traffic by confidence score: `s* <= theta` goes left, the rest
/// right. The two sets partition the input exactly.
pub fn prefilter(
    packets: &[PacketVector],
    model: &NeuralModel,
    theta: f64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let scores = score_set(model, packets)?;
    Ok(partition_by_threshold(&scores, theta))
}

pub(crate) fn partition_by_threshold(scores: &[f64], theta: f64) -> (Vec<usize>, Vec<usize>) {
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (i, &s) in scores.iter().enumerate() {
        if s <= theta {
            left.push(i);
        } else {
            right.push(i);
        }
    }
    (left, right)
}

/// Trains the binary discriminator on {known -> 0, low-confidence -> 1},
/// balancing the classes by seeded downsampling of the larger side.
pub fn train_discriminator(
    known: &LabeledDataset,
    low_confidence: &[PacketVector],
    cfg: &TrainConfig,
) -> Result<NeuralModel> {
    if known.is_empty() {
        return Err(Error::CannotTrain("known dataset is empty".into()));
    }
    if low_confidence.is_empty() {
        return Err(Error::CannotTrain(
            "no low-confidence packets to learn from".into(),
        ));
    }
    let per_side = known.len().min(low_confidence.len());
    let known_vectors: Vec<&PacketVector> = known.vectors().collect();
    let known_picks = downsample(known_vectors.len(), per_side, cfg.seed, "discriminator.known");
    let unknown_picks = downsample(
        low_confidence.len(),
        per_side,
        cfg.seed,
        "discriminator.unknown",
    );

    let mut inputs: Vec<&[f64]> = Vec::with_capacity(per_side * 2);
    let mut labels: Vec<usize> = Vec::with_capacity(per_side * 2);
    for &i in &known_picks {
        inputs.push(known_vectors[i].values());
        labels.push(0);
    }
    for &i in &unknown_picks {
        inputs.push(low_confidence[i].values());
        labels.push(1);
    }

    let model = binary_mlp(seed::derive(cfg.seed, "discriminator.init"))?;
    nn::train(model, &inputs, &labels, cfg)
}

/// Smallest Table-I-style stack: dense 1456 -> 128 -> 2 with ReLU + softmax.
fn binary_mlp(seed_val: u64) -> Result<NeuralModel> {
    let mut rng = seed::rng(seed_val, "discriminator.mlp");
    let layers = vec![
        Layer::dense_seeded(VECTOR_LEN, 128, &mut rng)?,
        Layer::Relu,
        Layer::dense_seeded(128, 2, &mut rng)?,
        Layer::Softmax,
    ];
    NeuralModel::new(layers, 2, 0)
}

fn downsample(total: usize, keep: usize, seed_val: u64, label: &str) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut idx: Vec<usize> = (0..total).collect();
    if keep >= total {
        return idx;
    }
    idx.shuffle(&mut seed::rng(seed_val, label));
    idx.truncate(keep);
    idx.sort_unstable();
    idx
}

/// Runs the discriminator over the candidate set, returning the original
/// indices judged unknown (class 1).
pub fn filter_remaining(
    packets: &[PacketVector],
    candidates: &[usize],
    discriminator: &NeuralModel,
) -> Result<Vec<usize>> {
    let mut swept = Vec::new();
    for &i in candidates {
        let record = crate::classifier::classify(discriminator, &packets[i])?;
        if record.predicted_label == 1 {
            swept.push(i);
        }
    }
    Ok(swept)
}

/// End-to-end filtering: threshold from the known-class scores, prefilter,
/// discriminator training, and the sweep of the remaining traffic.
///
/// When the discriminator cannot be trained (empty left tail) the result
/// falls back to threshold-only filtering and says so.
pub fn discriminate(
    packets: &[PacketVector],
    known: &LabeledDataset,
    model: &NeuralModel,
    epsilon: f64,
    cfg: &TrainConfig,
) -> Result<DiscriminationResult> {
    let known_vectors: Vec<PacketVector> = known.vectors().cloned().collect();
    let known_scores = score_set(model, &known_vectors)?;
    let threshold = compute_threshold(&known_scores, epsilon)?;
    let (low_confidence, remaining) = prefilter(packets, model, threshold.theta)?;

    let mut warnings = Vec::new();
    if low_confidence.len() < 10 {
        warnings.push(format!(
            "only {} low-confidence packets; discriminator quality is low-confidence",
            low_confidence.len()
        ));
    }

    let low_vectors: Vec<PacketVector> = low_confidence
        .iter()
        .map(|&i| packets[i].clone())
        .collect();
    let (discriminator, swept, fallback) =
        match train_discriminator(known, &low_vectors, cfg) {
            Ok(d) => {
                let swept = filter_remaining(packets, &remaining, &d)?;
                (Some(d), swept, false)
            }
            Err(Error::CannotTrain(reason)) => {
                warnings.push(format!(
                    "falling back to threshold-only filtering: {reason}"
                ));
                (None, Vec::new(), true)
            }
            Err(other) => return Err(other),
        };

    let mut unknown = low_confidence.clone();
    unknown.extend_from_slice(&swept);
    Ok(DiscriminationResult {
        low_confidence,
        remaining,
        swept,
        unknown,
        threshold,
        discriminator,
        fallback,
        warnings,
    })
}
