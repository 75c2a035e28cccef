//! Minimal dense / 1-D-convolutional network engine.
//!
//! Supports the layer set used by the packet classifiers (dense, conv1d,
//! ReLU, softmax, flatten) with forward pass, backpropagation, seeded
//! mini-batch training, gradient checking, and a binary model file format.
//! All training and inference math is `f64`; weights are narrowed to `f32`
//! only at the serialization boundary.

mod format;
pub mod ops;
mod train;

pub use format::{load_model, save_model};
pub use train::{gradient_check, mean_loss, train, GradientCheck};

use rand::Rng;

use crate::error::{Error, Result};
use crate::seed;
use crate::tensor::Tensor;

/// One layer of a [`NeuralModel`]. Dense weights are stored `in x out`
/// row-major so that `y = W^T v + b`; conv kernels are stored
/// `[tap][in_channel][kernel]` with stride fixed at 1 and no padding.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense {
        in_dim: usize,
        out_dim: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    },
    Conv1d {
        in_len: usize,
        in_ch: usize,
        kernel_count: usize,
        kernel_width: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    },
    Relu,
    Softmax,
    Flatten,
}

impl Layer {
    pub fn dense(in_dim: usize, out_dim: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::Dimension("dense dims must be positive".into()));
        }
        if weights.len() != in_dim * out_dim || bias.len() != out_dim {
            return Err(Error::Dimension(format!(
                "dense {in_dim}x{out_dim} wants {} weights and {out_dim} biases, got {} and {}",
                in_dim * out_dim,
                weights.len(),
                bias.len()
            )));
        }
        Ok(Layer::Dense {
            in_dim,
            out_dim,
            weights,
            bias,
        })
    }

    pub fn conv1d(
        in_len: usize,
        in_ch: usize,
        kernel_count: usize,
        kernel_width: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        if in_len == 0 || in_ch == 0 || kernel_count == 0 || kernel_width == 0 {
            return Err(Error::Dimension("conv1d dims must be positive".into()));
        }
        if in_len < kernel_width {
            return Err(Error::Dimension(format!(
                "conv1d input length {in_len} shorter than kernel width {kernel_width}"
            )));
        }
        let want = kernel_width * in_ch * kernel_count;
        if weights.len() != want || bias.len() != kernel_count {
            return Err(Error::Dimension(format!(
                "conv1d wants {want} weights and {kernel_count} biases, got {} and {}",
                weights.len(),
                bias.len()
            )));
        }
        Ok(Layer::Conv1d {
            in_len,
            in_ch,
            kernel_count,
            kernel_width,
            weights,
            bias,
        })
    }

    /// Glorot-uniform seeded dense layer with zero bias.
    pub fn dense_seeded<R: Rng>(in_dim: usize, out_dim: usize, rng: &mut R) -> Result<Self> {
        let weights = glorot_uniform(rng, in_dim, out_dim, in_dim * out_dim);
        Self::dense(in_dim, out_dim, weights, vec![0.0; out_dim])
    }

    /// Glorot-uniform seeded conv layer with zero bias.
    pub fn conv1d_seeded<R: Rng>(
        in_len: usize,
        in_ch: usize,
        kernel_count: usize,
        kernel_width: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let fan_in = kernel_width * in_ch;
        let fan_out = kernel_width * kernel_count;
        let weights = glorot_uniform(rng, fan_in, fan_out, kernel_width * in_ch * kernel_count);
        Self::conv1d(
            in_len,
            in_ch,
            kernel_count,
            kernel_width,
            weights,
            vec![0.0; kernel_count],
        )
    }

    pub fn has_params(&self) -> bool {
        matches!(self, Layer::Dense { .. } | Layer::Conv1d { .. })
    }

    pub fn param_count(&self) -> usize {
        match self {
            Layer::Dense { weights, bias, .. } | Layer::Conv1d { weights, bias, .. } => {
                weights.len() + bias.len()
            }
            _ => 0,
        }
    }

    fn kind_name(&self) -> &'static str {
        match self {
            Layer::Dense { .. } => "dense",
            Layer::Conv1d { .. } => "conv1d",
            Layer::Relu => "relu",
            Layer::Softmax => "softmax",
            Layer::Flatten => "flatten",
        }
    }
}

/// Uniform init in `[-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))]`.
pub fn glorot_uniform<R: Rng>(rng: &mut R, fan_in: usize, fan_out: usize, len: usize) -> Vec<f64> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..len).map(|_| rng.random_range(-bound..bound)).collect()
}

/// Shape of the value flowing between layers during validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Flow {
    Vector(usize),
    Grid(usize, usize),
}

impl Flow {
    fn len(self) -> usize {
        match self {
            Flow::Vector(n) => n,
            Flow::Grid(l, c) => l * c,
        }
    }
}

/// An ordered layer stack with a class count and a feature tap.
///
/// The feature tap names the dense layer whose (post-activation) output is
/// exported as the packet's feature map. Models are immutable once trained
/// or loaded; concurrent read-only inference is safe.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuralModel {
    layers: Vec<Layer>,
    class_count: usize,
    feature_tap: usize,
}

impl NeuralModel {
    pub fn new(layers: Vec<Layer>, class_count: usize, feature_tap: usize) -> Result<Self> {
        if class_count == 0 {
            return Err(Error::Validation("class count must be positive".into()));
        }
        if !matches!(layers.last(), Some(Layer::Softmax)) {
            return Err(Error::Validation("final layer must be softmax".into()));
        }
        let final_dense = layers
            .iter()
            .rposition(|l| matches!(l, Layer::Dense { .. }))
            .ok_or_else(|| Error::Validation("model needs at least one dense layer".into()))?;
        match &layers[final_dense] {
            Layer::Dense { out_dim, .. } if *out_dim == class_count => {}
            Layer::Dense { out_dim, .. } => {
                return Err(Error::Validation(format!(
                    "class_count {class_count} does not match final dense width {out_dim}"
                )))
            }
            _ => unreachable!(),
        }
        if feature_tap >= layers.len() || !matches!(layers[feature_tap], Layer::Dense { .. }) {
            return Err(Error::Validation(format!(
                "feature_tap {feature_tap} does not point at a dense layer"
            )));
        }
        if feature_tap >= final_dense {
            return Err(Error::Validation(
                "feature_tap must point strictly before the final dense layer".into(),
            ));
        }
        let model = Self {
            layers,
            class_count,
            feature_tap,
        };
        model.validate_flow()?;
        Ok(model)
    }

    /// Walks the layer stack checking that every layer's declared input
    /// matches its predecessor's output.
    fn validate_flow(&self) -> Result<()> {
        let mut flow = self.input_flow()?;
        for (idx, layer) in self.layers.iter().enumerate() {
            flow = next_flow(flow, layer).map_err(|e| {
                Error::Validation(format!("layer {idx} ({}): {e}", layer.kind_name()))
            })?;
        }
        match flow {
            Flow::Vector(n) if n == self.class_count => Ok(()),
            other => Err(Error::Validation(format!(
                "model output {other:?} does not match class count {}",
                self.class_count
            ))),
        }
    }

    fn input_flow(&self) -> Result<Flow> {
        match self.layers.first() {
            Some(Layer::Dense { in_dim, .. }) => Ok(Flow::Vector(*in_dim)),
            Some(Layer::Conv1d { in_len, in_ch, .. }) => Ok(Flow::Grid(*in_len, *in_ch)),
            _ => Err(Error::Validation(
                "model must start with a dense or conv1d layer".into(),
            )),
        }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn feature_tap(&self) -> usize {
        self.feature_tap
    }

    /// Flattened input length the model expects.
    pub fn input_len(&self) -> usize {
        match self.layers.first() {
            Some(Layer::Dense { in_dim, .. }) => *in_dim,
            Some(Layer::Conv1d { in_len, in_ch, .. }) => in_len * in_ch,
            _ => 0,
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Layer index whose activation is exported as the feature map: the
    /// tapped dense layer itself, or the ReLU directly after it.
    pub(crate) fn effective_tap(&self) -> usize {
        let next = self.feature_tap + 1;
        if next < self.layers.len() && matches!(self.layers[next], Layer::Relu) {
            next
        } else {
            self.feature_tap
        }
    }
}

fn next_flow(flow: Flow, layer: &Layer) -> std::result::Result<Flow, String> {
    match layer {
        Layer::Dense { in_dim, out_dim, .. } => {
            if flow.len() != *in_dim {
                return Err(format!("expects input {in_dim}, gets {}", flow.len()));
            }
            Ok(Flow::Vector(*out_dim))
        }
        Layer::Conv1d {
            in_len,
            in_ch,
            kernel_count,
            kernel_width,
            ..
        } => match flow {
            Flow::Grid(l, c) if l == *in_len && c == *in_ch => {
                Ok(Flow::Grid(l - kernel_width + 1, *kernel_count))
            }
            Flow::Vector(n) if *in_ch == 1 && n == *in_len => {
                Ok(Flow::Grid(n - kernel_width + 1, *kernel_count))
            }
            other => Err(format!("expects {in_len}x{in_ch} grid, gets {other:?}")),
        },
        Layer::Relu | Layer::Softmax => Ok(flow),
        Layer::Flatten => Ok(Flow::Vector(flow.len())),
    }
}

/// Runs every layer on a flat input, returning the activation after each.
pub(crate) fn run_layers(layers: &[Layer], input: &[f64]) -> Result<Vec<Vec<f64>>> {
    let mut acts: Vec<Vec<f64>> = Vec::with_capacity(layers.len());
    let mut current: &[f64] = input;
    for layer in layers {
        let out = match layer {
            Layer::Dense {
                in_dim,
                out_dim,
                weights,
                bias,
            } => {
                if current.len() != *in_dim {
                    return Err(Error::Dimension(format!(
                        "dense expects {in_dim} inputs, got {}",
                        current.len()
                    )));
                }
                let mut out = vec![0.0; *out_dim];
                ops::dense_forward_slice(weights, bias, *in_dim, *out_dim, current, &mut out);
                out
            }
            Layer::Conv1d {
                in_len,
                in_ch,
                kernel_count,
                kernel_width,
                weights,
                bias,
            } => {
                if current.len() != in_len * in_ch {
                    return Err(Error::Dimension(format!(
                        "conv1d expects {} inputs, got {}",
                        in_len * in_ch,
                        current.len()
                    )));
                }
                let out_len = in_len - kernel_width + 1;
                let mut out = vec![0.0; out_len * kernel_count];
                ops::conv1d_forward_slice(
                    weights,
                    bias,
                    *kernel_width,
                    *in_ch,
                    *kernel_count,
                    *in_len,
                    current,
                    &mut out,
                );
                out
            }
            Layer::Relu => {
                let mut out = current.to_vec();
                ops::relu_slice(&mut out);
                out
            }
            Layer::Softmax => {
                let mut out = current.to_vec();
                ops::softmax_slice(&mut out);
                out
            }
            Layer::Flatten => current.to_vec(),
        };
        acts.push(out);
        current = acts.last().expect("just pushed").as_slice();
    }
    Ok(acts)
}

/// Full forward pass: class probabilities plus the feature map tapped from
/// the configured dense layer (post-activation).
pub fn forward(model: &NeuralModel, input: &Tensor) -> Result<(Tensor, Tensor)> {
    if input.len() != model.input_len() {
        return Err(Error::Dimension(format!(
            "model expects input of length {}, got {}",
            model.input_len(),
            input.len()
        )));
    }
    let acts = run_layers(&model.layers, input.data())?;
    let probs = acts.last().expect("model has layers").clone();
    let feature = acts[model.effective_tap()].clone();
    Ok((Tensor::from_vec(probs)?, Tensor::from_vec(feature)?))
}

/// Training hyperparameters. The same config, seed, and data always produce
/// the same trained weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: Optimizer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    Sgd,
    /// SGD with momentum 0.9.
    SgdMomentum,
}

impl TrainConfig {
    pub fn new(learning_rate: f64, epochs: usize, batch_size: usize, seed: u64) -> Self {
        Self {
            learning_rate,
            epochs,
            batch_size,
            seed,
            optimizer: Optimizer::SgdMomentum,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Validation(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Validation("batch size must be positive".into()));
        }
        Ok(())
    }

    /// Stream for mini-batch shuffling.
    pub(crate) fn shuffle_rng(&self) -> rand_chacha::ChaCha8Rng {
        seed::rng(self.seed, "train.shuffle")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_mlp(seed: u64) -> NeuralModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = vec![
            Layer::dense_seeded(4, 3, &mut rng).unwrap(),
            Layer::Relu,
            Layer::dense_seeded(3, 2, &mut rng).unwrap(),
            Layer::Softmax,
        ];
        NeuralModel::new(layers, 2, 0).unwrap()
    }

    #[test]
    fn zero_weight_model_gives_uniform_probabilities() {
        let layers = vec![
            Layer::dense(4, 3, vec![0.0; 12], vec![0.0; 3]).unwrap(),
            Layer::Relu,
            Layer::dense(3, 5, vec![0.0; 15], vec![0.0; 5]).unwrap(),
            Layer::Softmax,
        ];
        let model = NeuralModel::new(layers, 5, 0).unwrap();
        let input = Tensor::from_vec(vec![0.3, -0.2, 0.9, 0.1]).unwrap();
        let (probs, feature) = forward(&model, &input).unwrap();
        for &p in probs.data() {
            assert!((p - 0.2).abs() < 1e-12);
        }
        assert_eq!(feature.data(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let model = tiny_mlp(11);
        let input = Tensor::from_vec(vec![0.5, -1.0, 2.0, 0.25]).unwrap();
        let (probs, _) = forward(&model, &input).unwrap();
        let sum: f64 = probs.data().iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn forward_is_deterministic() {
        let a = tiny_mlp(21);
        let b = tiny_mlp(21);
        assert_eq!(a, b);
        let input = Tensor::from_vec(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let (pa, fa) = forward(&a, &input).unwrap();
        let (pb, fb) = forward(&b, &input).unwrap();
        assert_eq!(pa, pb);
        assert_eq!(fa, fb);
    }

    #[test]
    fn feature_tap_is_post_relu() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let layers = vec![
            Layer::dense_seeded(4, 3, &mut rng).unwrap(),
            Layer::Relu,
            Layer::dense_seeded(3, 2, &mut rng).unwrap(),
            Layer::Softmax,
        ];
        let model = NeuralModel::new(layers, 2, 0).unwrap();
        let input = Tensor::from_vec(vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        let (_, feature) = forward(&model, &input).unwrap();
        assert!(feature.data().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn model_validation_catches_bad_stacks() {
        // class_count mismatch with final dense width
        let layers = vec![
            Layer::dense(4, 3, vec![0.0; 12], vec![0.0; 3]).unwrap(),
            Layer::Softmax,
        ];
        assert!(NeuralModel::new(layers, 2, 0).is_err());

        // feature tap at the final dense layer
        let layers = vec![
            Layer::dense(4, 2, vec![0.0; 8], vec![0.0; 2]).unwrap(),
            Layer::Softmax,
        ];
        assert!(NeuralModel::new(layers, 2, 0).is_err());

        // missing softmax head
        let layers = vec![Layer::dense(4, 2, vec![0.0; 8], vec![0.0; 2]).unwrap()];
        assert!(NeuralModel::new(layers, 2, 0).is_err());
    }

    #[test]
    fn flow_validation_catches_mismatched_chain() {
        let layers = vec![
            Layer::dense(4, 3, vec![0.0; 12], vec![0.0; 3]).unwrap(),
            Layer::dense(5, 2, vec![0.0; 10], vec![0.0; 2]).unwrap(),
            Layer::Softmax,
        ];
        assert!(NeuralModel::new(layers, 2, 0).is_err());
    }
}
