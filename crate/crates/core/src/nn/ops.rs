//! Forward and backward kernels for the supported layer set.
//!
//! The public functions operate on [`Tensor`]s and validate shapes; the
//! `*_slice` kernels are the unchecked inner loops shared with the training
//! path. All math is 64-bit.

use crate::error::{Error, Result};
use crate::nn::Layer;
use crate::tensor::Tensor;

/// Valid (no padding) 1-D convolution with stride 1.
///
/// `input` is an `L x C` grid; the output has `L - W + 1` positions and one
/// channel per kernel. Each output value is the kernel bias plus the sum over
/// input channels and kernel taps.
pub fn conv1d_forward(input: &Tensor, layer: &Layer) -> Result<Tensor> {
    let Layer::Conv1d {
        in_len,
        in_ch,
        kernel_count,
        kernel_width,
        weights,
        bias,
    } = layer
    else {
        return Err(Error::Validation("conv1d_forward wants a conv1d layer".into()));
    };
    let (len, ch) = input.spatial_dims()?;
    if len != *in_len || ch != *in_ch {
        return Err(Error::Dimension(format!(
            "conv1d expects {in_len}x{in_ch} input, got {len}x{ch}"
        )));
    }
    if len < *kernel_width {
        return Err(Error::Dimension(format!(
            "input length {len} shorter than kernel width {kernel_width}"
        )));
    }
    if let Some(bad) = input.data().iter().find(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("non-finite convolution input {bad}")));
    }
    let out_len = len - kernel_width + 1;
    let mut out = vec![0.0; out_len * kernel_count];
    conv1d_forward_slice(
        weights,
        bias,
        *kernel_width,
        *in_ch,
        *kernel_count,
        len,
        input.data(),
        &mut out,
    );
    Tensor::new(vec![out_len, *kernel_count], out)
}

/// Elementwise `max(0, x)`; shape preserved.
pub fn relu(x: &Tensor) -> Tensor {
    let data = x.data().iter().map(|&v| v.max(0.0)).collect();
    Tensor::new(x.shape().to_vec(), data).expect("relu preserves shape and finiteness")
}

/// Affine map `y = W^T v + b` with weights stored as `in x out`.
pub fn dense_forward(v: &Tensor, layer: &Layer) -> Result<Tensor> {
    let Layer::Dense {
        in_dim,
        out_dim,
        weights,
        bias,
    } = layer
    else {
        return Err(Error::Validation("dense_forward wants a dense layer".into()));
    };
    if v.len() != *in_dim {
        return Err(Error::Dimension(format!(
            "dense expects input of length {in_dim}, got {}",
            v.len()
        )));
    }
    let mut out = vec![0.0; *out_dim];
    dense_forward_slice(weights, bias, *in_dim, *out_dim, v.data(), &mut out);
    Tensor::from_vec(out)
}

/// Numerically safe softmax: subtracts the max before exponentiating, so any
/// finite input is valid and the output sums to 1.
pub fn softmax(y: &Tensor) -> Result<Tensor> {
    if y.is_empty() {
        return Err(Error::Validation("softmax needs at least one logit".into()));
    }
    let mut out = y.data().to_vec();
    softmax_slice(&mut out);
    Tensor::new(y.shape().to_vec(), out)
}

pub(crate) fn dense_forward_slice(
    weights: &[f64],
    bias: &[f64],
    in_dim: usize,
    out_dim: usize,
    x: &[f64],
    y: &mut [f64],
) {
    y.copy_from_slice(bias);
    for i in 0..in_dim {
        let xi = x[i];
        if xi == 0.0 {
            continue;
        }
        let row = &weights[i * out_dim..(i + 1) * out_dim];
        for (o, w) in y.iter_mut().zip(row) {
            *o += w * xi;
        }
    }
}

/// dL/dx, dL/dW, dL/db of a dense layer given upstream dL/dy.
#[allow(clippy::too_many_arguments)]
pub(crate) fn dense_backward_slice(
    weights: &[f64],
    in_dim: usize,
    out_dim: usize,
    x: &[f64],
    d_out: &[f64],
    d_in: &mut [f64],
    d_weights: &mut [f64],
    d_bias: &mut [f64],
) {
    for i in 0..in_dim {
        let row = &weights[i * out_dim..(i + 1) * out_dim];
        let mut acc = 0.0;
        for (w, dz) in row.iter().zip(d_out) {
            acc += w * dz;
        }
        d_in[i] = acc;
        let xi = x[i];
        let drow = &mut d_weights[i * out_dim..(i + 1) * out_dim];
        for (dw, dz) in drow.iter_mut().zip(d_out) {
            *dw += xi * dz;
        }
    }
    for (db, dz) in d_bias.iter_mut().zip(d_out) {
        *db += dz;
    }
}

/// Kernel weights are laid out `[tap][in_channel][kernel]`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv1d_forward_slice(
    weights: &[f64],
    bias: &[f64],
    width: usize,
    in_ch: usize,
    out_ch: usize,
    in_len: usize,
    x: &[f64],
    y: &mut [f64],
) {
    let out_len = in_len - width + 1;
    for i in 0..out_len {
        let row = &mut y[i * out_ch..(i + 1) * out_ch];
        row.copy_from_slice(bias);
        for s in 0..width {
            let x_row = &x[(i + s) * in_ch..(i + s + 1) * in_ch];
            for (l, &xv) in x_row.iter().enumerate() {
                if xv == 0.0 {
                    continue;
                }
                let w_row = &weights[(s * in_ch + l) * out_ch..(s * in_ch + l + 1) * out_ch];
                for (o, w) in row.iter_mut().zip(w_row) {
                    *o += w * xv;
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn conv1d_backward_slice(
    weights: &[f64],
    width: usize,
    in_ch: usize,
    out_ch: usize,
    in_len: usize,
    x: &[f64],
    d_out: &[f64],
    d_in: &mut [f64],
    d_weights: &mut [f64],
    d_bias: &mut [f64],
) {
    let out_len = in_len - width + 1;
    d_in.fill(0.0);
    for i in 0..out_len {
        let dz = &d_out[i * out_ch..(i + 1) * out_ch];
        for (k, &dzk) in dz.iter().enumerate() {
            d_bias[k] += dzk;
        }
        for s in 0..width {
            let x_row = &x[(i + s) * in_ch..(i + s + 1) * in_ch];
            let dx_row = &mut d_in[(i + s) * in_ch..(i + s + 1) * in_ch];
            for l in 0..in_ch {
                let base = (s * in_ch + l) * out_ch;
                let w_row = &weights[base..base + out_ch];
                let dw_row = &mut d_weights[base..base + out_ch];
                let xv = x_row[l];
                let mut acc = 0.0;
                for k in 0..out_ch {
                    acc += w_row[k] * dz[k];
                    dw_row[k] += xv * dz[k];
                }
                dx_row[l] += acc;
            }
        }
    }
}

pub(crate) fn relu_slice(x: &mut [f64]) {
    for v in x.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

pub(crate) fn relu_backward_slice(out: &[f64], d_out: &[f64], d_in: &mut [f64]) {
    for ((di, &o), &dz) in d_in.iter_mut().zip(out).zip(d_out) {
        *di = if o > 0.0 { dz } else { 0.0 };
    }
}

pub(crate) fn softmax_slice(values: &mut [f64]) {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in values.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in values.iter_mut() {
        *v /= sum;
    }
}

/// `ln(sum(exp(logits)))` with max subtraction.
pub(crate) fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}
