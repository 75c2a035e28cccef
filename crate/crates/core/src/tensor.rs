//! Dense row-major tensors over 64-bit reals.

use crate::error::{Error, Result};

/// A shape-checked block of finite `f64` values in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor, rejecting shape/data mismatches and non-finite values.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.iter().any(|&d| d == 0) {
            return Err(Error::Dimension(format!(
                "tensor shape {shape:?} has a zero or missing dimension"
            )));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Dimension(format!(
                "shape {shape:?} wants {expected} values, got {}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite tensor value {bad}")));
        }
        Ok(Self { shape, data })
    }

    /// 1-D tensor from a value list.
    pub fn from_vec(data: Vec<f64>) -> Result<Self> {
        let len = data.len();
        Self::new(vec![len], data)
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; len],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Interprets the tensor as a `length x channels` spatial grid.
    ///
    /// Accepts `[L]` (one channel), `[L, C]`, and `[1, L, C]`; anything else
    /// is a dimension error.
    pub fn spatial_dims(&self) -> Result<(usize, usize)> {
        match self.shape.as_slice() {
            [l] => Ok((*l, 1)),
            [l, c] => Ok((*l, *c)),
            [1, l, c] => Ok((*l, *c)),
            other => Err(Error::Dimension(format!(
                "expected a 1-D or LxC tensor, got shape {other:?}"
            ))),
        }
    }
}
