//! Activation functions and inference-mode batch normalization.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Activation applied inside conv blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu6,
    Swish,
}

impl Activation {
    pub fn apply<S: Scalar>(self, x: &Tensor<S>) -> Tensor<S> {
        match self {
            Activation::Relu6 => relu6(x),
            Activation::Swish => swish(x),
        }
    }
}

/// Elementwise `min(max(v, 0), 6)`.
pub fn relu6<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    let six = S::from_f64_c(6.0);
    x.map(|v| v.max(S::zero()).min(six))
}

/// Elementwise `v · sigmoid(v)`.
pub fn swish<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    x.map(|v| v / (S::one() + (-v).exp()))
}

/// Per-time-step softmax over channels, computed with max subtraction.
/// Every output row is positive and sums to 1.
pub fn softmax_channels<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    let (t_len, c) = x.shape();
    let mut out = vec![S::zero(); t_len * c];
    for t in 0..t_len {
        let row = x.row(t);
        let max = row.iter().copied().fold(S::neg_infinity(), S::max);
        let out_row = &mut out[t * c..(t + 1) * c];
        let mut sum = S::zero();
        for (o, &v) in out_row.iter_mut().zip(row) {
            *o = (v - max).exp();
            sum += *o;
        }
        for o in out_row.iter_mut() {
            *o = *o / sum;
        }
    }
    Tensor::from_vec(t_len, c, out).expect("softmax preserves shape")
}

/// Inference-mode batch normalization parameters: one `(γ, β, μ, σ²)`
/// quadruple per channel plus a shared epsilon.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchNormParams<S: Scalar> {
    pub gamma: Vec<S>,
    pub beta: Vec<S>,
    pub running_mean: Vec<S>,
    pub running_var: Vec<S>,
    pub epsilon: S,
}

impl<S: Scalar> BatchNormParams<S> {
    pub fn new(
        gamma: Vec<S>,
        beta: Vec<S>,
        running_mean: Vec<S>,
        running_var: Vec<S>,
        epsilon: S,
    ) -> Result<Self> {
        let c = gamma.len();
        if c == 0 || beta.len() != c || running_mean.len() != c || running_var.len() != c {
            return Err(CoreError::ShapeMismatch(
                "batchnorm: per-channel vectors must have equal nonzero length".into(),
            ));
        }
        if running_var.iter().any(|&v| v + epsilon <= S::zero()) {
            return Err(CoreError::InvalidSpec(
                "batchnorm: running_var + epsilon must be positive".into(),
            ));
        }
        Ok(Self { gamma, beta, running_mean, running_var, epsilon })
    }

    /// Identity statistics: `γ=1, β=0, μ=0, σ²=1, ε=0`.
    pub fn identity(channels: usize) -> Self {
        Self {
            gamma: vec![S::one(); channels],
            beta: vec![S::zero(); channels],
            running_mean: vec![S::zero(); channels],
            running_var: vec![S::one(); channels],
            epsilon: S::zero(),
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    /// Per-channel `(scale, shift)` with
    /// `scale = γ/sqrt(σ²+ε)` and `shift = β − μ·scale`.
    pub fn folded_scale_shift(&self) -> (Vec<S>, Vec<S>) {
        let scale: Vec<S> = self
            .gamma
            .iter()
            .zip(&self.running_var)
            .map(|(&g, &v)| g / (v + self.epsilon).sqrt())
            .collect();
        let shift: Vec<S> = self
            .beta
            .iter()
            .zip(&self.running_mean)
            .zip(&scale)
            .map(|((&b, &m), &s)| b - m * s)
            .collect();
        (scale, shift)
    }
}

/// Applies inference-mode batch normalization:
/// `(v − μ_j)/sqrt(σ²_j + ε) · γ_j + β_j` per channel `j`.
pub fn batchnorm_apply<S: Scalar>(x: &Tensor<S>, p: &BatchNormParams<S>) -> Result<Tensor<S>> {
    if p.channels() != x.channels() {
        return Err(CoreError::ShapeMismatch(format!(
            "batchnorm: input has {} channels, params have {}",
            x.channels(),
            p.channels()
        )));
    }
    let (scale, shift) = p.folded_scale_shift();
    let (t_len, c) = x.shape();
    let mut out = vec![S::zero(); t_len * c];
    for t in 0..t_len {
        let row = x.row(t);
        let out_row = &mut out[t * c..(t + 1) * c];
        for j in 0..c {
            out_row[j] = row[j] * scale[j] + shift[j];
        }
    }
    Tensor::from_vec(t_len, c, out)
}
