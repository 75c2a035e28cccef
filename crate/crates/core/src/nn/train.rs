//! Seeded mini-batch training and gradient checking.
//!
//! Loss is cross-entropy fused with the final softmax: the backward pass
//! starts from `dL/dlogits = p - onehot(label)`, which avoids exponent
//! overflow and keeps the gradient exact.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::nn::ops::{
    conv1d_backward_slice, dense_backward_slice, log_sum_exp, relu_backward_slice, softmax_slice,
};
use crate::nn::{run_layers, Layer, NeuralModel, Optimizer, TrainConfig};

/// Per-layer gradient (or momentum) buffers, `None` for parameterless layers.
type ParamBuffers = Vec<Option<(Vec<f64>, Vec<f64>)>>;

fn zero_buffers(layers: &[Layer]) -> ParamBuffers {
    layers
        .iter()
        .map(|layer| match layer {
            Layer::Dense { weights, bias, .. } | Layer::Conv1d { weights, bias, .. } => {
                Some((vec![0.0; weights.len()], vec![0.0; bias.len()]))
            }
            _ => None,
        })
        .collect()
}

/// Cross-entropy of one sample from the logits (softmax layer excluded).
fn sample_loss(logits: &[f64], label: usize) -> f64 {
    log_sum_exp(logits) - logits[label]
}

/// Backpropagates one sample through `layers` (which must exclude the final
/// softmax), accumulating parameter gradients into `grads`.
fn backprop_sample(
    layers: &[Layer],
    input: &[f64],
    acts: &[Vec<f64>],
    mut d_current: Vec<f64>,
    grads: &mut ParamBuffers,
) {
    for j in (0..layers.len()).rev() {
        let layer_input: &[f64] = if j == 0 { input } else { &acts[j - 1] };
        match &layers[j] {
            Layer::Dense {
                in_dim,
                out_dim,
                weights,
                ..
            } => {
                let (dw, db) = grads[j].as_mut().expect("dense layer has buffers");
                let mut d_in = vec![0.0; *in_dim];
                dense_backward_slice(
                    weights, *in_dim, *out_dim, layer_input, &d_current, &mut d_in, dw, db,
                );
                d_current = d_in;
            }
            Layer::Conv1d {
                in_len,
                in_ch,
                kernel_count,
                kernel_width,
                weights,
                ..
            } => {
                let (dw, db) = grads[j].as_mut().expect("conv layer has buffers");
                let mut d_in = vec![0.0; in_len * in_ch];
                conv1d_backward_slice(
                    weights,
                    *kernel_width,
                    *in_ch,
                    *kernel_count,
                    *in_len,
                    layer_input,
                    &d_current,
                    &mut d_in,
                    dw,
                    db,
                );
                d_current = d_in;
            }
            Layer::Relu => {
                let mut d_in = vec![0.0; d_current.len()];
                relu_backward_slice(&acts[j], &d_current, &mut d_in);
                d_current = d_in;
            }
            Layer::Flatten => {}
            Layer::Softmax => unreachable!("softmax is excluded from the backprop stack"),
        }
    }
}

fn validate_training_inputs(
    model: &NeuralModel,
    inputs: &[&[f64]],
    labels: &[usize],
) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::Validation("training set is empty".into()));
    }
    if inputs.len() != labels.len() {
        return Err(Error::Validation(format!(
            "{} inputs but {} labels",
            inputs.len(),
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= model.class_count()) {
        return Err(Error::Validation(format!(
            "label {bad} out of range for {} classes",
            model.class_count()
        )));
    }
    let want = model.input_len();
    if let Some(x) = inputs.iter().find(|x| x.len() != want) {
        return Err(Error::Dimension(format!(
            "training input of length {} does not match model input {want}",
            x.len()
        )));
    }
    Ok(())
}

/// Trains the model in place and returns it. Deterministic for a fixed
/// config, seed, and data order; `epochs = 0` returns the model unchanged.
pub fn train(
    mut model: NeuralModel,
    inputs: &[&[f64]],
    labels: &[usize],
    cfg: &TrainConfig,
) -> Result<NeuralModel> {
    cfg.validate()?;
    validate_training_inputs(&model, inputs, labels)?;
    if cfg.epochs == 0 {
        return Ok(model);
    }

    let body_len = model.layers().len() - 1; // final softmax fused into the loss
    let mut velocity = zero_buffers(model.layers());
    let mut rng = cfg.shuffle_rng();
    let mut order: Vec<usize> = (0..inputs.len()).collect();

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let mut grads = zero_buffers(model.layers());
            for &i in chunk {
                let body = &model.layers()[..body_len];
                let acts = run_layers(body, inputs[i])?;
                let logits = acts.last().expect("model has layers");
                let mut d_logits = logits.clone();
                softmax_slice(&mut d_logits);
                if !d_logits[labels[i]].is_finite() {
                    return Err(Error::Numeric(
                        "non-finite probability during training".into(),
                    ));
                }
                d_logits[labels[i]] -= 1.0;
                backprop_sample(body, inputs[i], &acts, d_logits, &mut grads);
            }
            let scale = 1.0 / chunk.len() as f64;
            apply_step(&mut model, &mut grads, &mut velocity, cfg, scale)?;
        }
    }
    Ok(model)
}

fn apply_step(
    model: &mut NeuralModel,
    grads: &mut ParamBuffers,
    velocity: &mut ParamBuffers,
    cfg: &TrainConfig,
    scale: f64,
) -> Result<()> {
    let lr = cfg.learning_rate;
    for ((layer, grad), vel) in model
        .layers_mut()
        .iter_mut()
        .zip(grads.iter_mut())
        .zip(velocity.iter_mut())
    {
        let (Some((dw, db)), Some((vw, vb))) = (grad.as_mut(), vel.as_mut()) else {
            continue;
        };
        let (weights, bias) = match layer {
            Layer::Dense { weights, bias, .. } | Layer::Conv1d { weights, bias, .. } => {
                (weights, bias)
            }
            _ => continue,
        };
        match cfg.optimizer {
            Optimizer::Sgd => {
                for (w, g) in weights.iter_mut().zip(dw.iter()) {
                    *w -= lr * g * scale;
                }
                for (b, g) in bias.iter_mut().zip(db.iter()) {
                    *b -= lr * g * scale;
                }
            }
            Optimizer::SgdMomentum => {
                for ((w, v), g) in weights.iter_mut().zip(vw.iter_mut()).zip(dw.iter()) {
                    *v = 0.9f64.mul_add(*v, -lr * g * scale);
                    *w += *v;
                }
                for ((b, v), g) in bias.iter_mut().zip(vb.iter_mut()).zip(db.iter()) {
                    *v = 0.9f64.mul_add(*v, -lr * g * scale);
                    *b += *v;
                }
            }
        }
        momentum_guard(weights)?;
    }
    Ok(())
}

fn momentum_guard(weights: &[f64]) -> Result<()> {
    // Cheap divergence check: a single non-finite weight poisons everything
    // downstream, so fail fast with a numeric error.
    if let Some(bad) = weights.iter().find(|w| !w.is_finite()) {
        return Err(Error::Numeric(format!(
            "weight diverged to {bad} during training; lower the learning rate"
        )));
    }
    Ok(())
}

/// Mean cross-entropy of the model over a labeled set.
pub fn mean_loss(model: &NeuralModel, inputs: &[&[f64]], labels: &[usize]) -> Result<f64> {
    validate_training_inputs(model, inputs, labels)?;
    let body = &model.layers()[..model.layers().len() - 1];
    let mut total = 0.0;
    for (x, &l) in inputs.iter().zip(labels) {
        let acts = run_layers(body, x)?;
        total += sample_loss(acts.last().expect("layers"), l);
    }
    Ok(total / inputs.len() as f64)
}

/// Result of comparing analytic and numeric gradients.
#[derive(Debug, Clone, Copy)]
pub struct GradientCheck {
    pub max_relative_error: f64,
    pub passed: bool,
}

/// Compares the analytic gradient of the cross-entropy loss against central
/// finite differences (step 1e-4) over every parameter.
pub fn gradient_check(
    model: &NeuralModel,
    input: &[f64],
    label: usize,
    tolerance: f64,
) -> Result<GradientCheck> {
    if label >= model.class_count() {
        return Err(Error::Validation(format!(
            "label {label} out of range for {} classes",
            model.class_count()
        )));
    }
    if input.len() != model.input_len() {
        return Err(Error::Dimension(format!(
            "input length {} does not match model input {}",
            input.len(),
            model.input_len()
        )));
    }

    let body_len = model.layers().len() - 1;
    let mut analytic = zero_buffers(model.layers());
    {
        let body = &model.layers()[..body_len];
        let acts = run_layers(body, input)?;
        let logits = acts.last().expect("layers");
        let mut d_logits = logits.clone();
        softmax_slice(&mut d_logits);
        d_logits[label] -= 1.0;
        backprop_sample(body, input, &acts, d_logits, &mut analytic);
    }

    let step = 1e-4;
    let mut work = model.clone();
    let mut max_rel: f64 = 0.0;
    for layer_idx in 0..body_len {
        let Some((dw, db)) = analytic[layer_idx].as_ref() else {
            continue;
        };
        for (slot, count) in [(0usize, dw.len()), (1usize, db.len())] {
            for p in 0..count {
                let original = read_param(&work, layer_idx, slot, p);
                write_param(&mut work, layer_idx, slot, p, original + step);
                let plus = loss_of(&work, input, label)?;
                write_param(&mut work, layer_idx, slot, p, original - step);
                let minus = loss_of(&work, input, label)?;
                write_param(&mut work, layer_idx, slot, p, original);
                let numeric = (plus - minus) / (2.0 * step);
                let a = if slot == 0 { dw[p] } else { db[p] };
                let denom = a.abs().max(numeric.abs());
                if denom > 1e-10 {
                    max_rel = max_rel.max((a - numeric).abs() / denom);
                }
            }
        }
    }
    Ok(GradientCheck {
        max_relative_error: max_rel,
        passed: max_rel < tolerance,
    })
}

fn loss_of(model: &NeuralModel, input: &[f64], label: usize) -> Result<f64> {
    let body = &model.layers()[..model.layers().len() - 1];
    let acts = run_layers(body, input)?;
    Ok(sample_loss(acts.last().expect("layers"), label))
}

fn read_param(model: &NeuralModel, layer: usize, slot: usize, idx: usize) -> f64 {
    match &model.layers()[layer] {
        Layer::Dense { weights, bias, .. } | Layer::Conv1d { weights, bias, .. } => {
            if slot == 0 {
                weights[idx]
            } else {
                bias[idx]
            }
        }
        _ => unreachable!("parameterless layer"),
    }
}

fn write_param(model: &mut NeuralModel, layer: usize, slot: usize, idx: usize, value: f64) {
    match &mut model.layers_mut()[layer] {
        Layer::Dense { weights, bias, .. } | Layer::Conv1d { weights, bias, .. } => {
            if slot == 0 {
                weights[idx] = value;
            } else {
                bias[idx] = value;
            }
        }
        _ => unreachable!("parameterless layer"),
    }
}
