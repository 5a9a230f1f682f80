//! Dense `(T, C)` tensor with channels contiguous.
//!
//! The time axis is outermost and the channel axis innermost, so a "row" is
//! the `C` channel values of one time step. Batches are handled by the
//! callers as an outer loop over independent tensors; nothing in the crate
//! ever mixes data across batch elements.
//!
//! Tensors are immutable after construction and every operation returns a
//! fresh tensor, which makes all of them safe to call concurrently.

use crate::error::{CoreError, Result};
use crate::scalar::Scalar;

/// Dense real-valued array of shape `(T, C)`, row-major, channels innermost.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<S: Scalar> {
    time: usize,
    channels: usize,
    data: Vec<S>,
}

impl<S: Scalar> Tensor<S> {
    /// Builds a tensor from raw row-major data. `data.len()` must equal
    /// `time * channels` and both dimensions must be at least 1.
    pub fn from_vec(time: usize, channels: usize, data: Vec<S>) -> Result<Self> {
        if time == 0 || channels == 0 {
            return Err(CoreError::ShapeMismatch(format!(
                "tensor dimensions must be >= 1, got ({time}, {channels})"
            )));
        }
        if data.len() != time * channels {
            return Err(CoreError::ShapeMismatch(format!(
                "data length {} does not match shape ({time}, {channels})",
                data.len()
            )));
        }
        Ok(Self { time, channels, data })
    }

    /// All-zero tensor of the given shape.
    pub fn zeros(time: usize, channels: usize) -> Self {
        assert!(time >= 1 && channels >= 1, "tensor dimensions must be >= 1");
        Self { time, channels, data: vec![S::zero(); time * channels] }
    }

    /// Single-channel tensor from a sample sequence.
    pub fn from_samples(samples: &[S]) -> Result<Self> {
        Self::from_vec(samples.len(), 1, samples.to_vec())
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// `(T, C)` pair.
    pub fn shape(&self) -> (usize, usize) {
        (self.time, self.channels)
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    /// The `C` contiguous channel values of time step `t`.
    pub fn row(&self, t: usize) -> &[S] {
        &self.data[t * self.channels..(t + 1) * self.channels]
    }

    pub fn get(&self, t: usize, c: usize) -> S {
        self.data[t * self.channels + c]
    }

    /// Elementwise map into a new tensor.
    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Self {
            time: self.time,
            channels: self.channels,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Extends the time axis with `left` rows before and `right` rows after,
    /// each filled with `value`. Interior values are preserved.
    pub fn pad_time(&self, left: usize, right: usize, value: S) -> Self {
        let out_time = self.time + left + right;
        let mut data = vec![value; out_time * self.channels];
        data[left * self.channels..(left + self.time) * self.channels]
            .copy_from_slice(&self.data);
        Self { time: out_time, channels: self.channels, data }
    }

    /// Elementwise sum; shapes must match exactly.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(CoreError::ShapeMismatch(format!(
                "add: {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a + b)
            .collect();
        Ok(Self { time: self.time, channels: self.channels, data })
    }

    /// Contiguous time window `[start, start + len)`, channels intact.
    pub fn slice_time(&self, start: usize, len: usize) -> Result<Self> {
        let end = start.checked_add(len).ok_or_else(|| {
            CoreError::ShapeMismatch("slice_time: index overflow".into())
        })?;
        if end > self.time || len == 0 {
            return Err(CoreError::ShapeMismatch(format!(
                "slice_time: [{start}, {end}) out of range for T={}",
                self.time
            )));
        }
        Ok(Self {
            time: len,
            channels: self.channels,
            data: self.data[start * self.channels..end * self.channels].to_vec(),
        })
    }

    /// Largest absolute elementwise difference; shapes must match.
    pub fn max_abs_diff(&self, other: &Self) -> Result<S> {
        if self.shape() != other.shape() {
            return Err(CoreError::ShapeMismatch(format!(
                "max_abs_diff: {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(S::zero(), S::max))
    }
}
