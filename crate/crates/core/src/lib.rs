//! A self-contained 1D convolutional inference engine and base-calling toolkit.
//!
//! The crate implements the building blocks of a small QuartzNet-style
//! convolutional network for translating nanopore current signals into DNA
//! sequences, together with the machinery needed to run it end to end on a
//! CPU:
//!
//! * [`tensor`] — dense `(T, C)` tensors with channels contiguous.
//! * [`conv`] — the convolution primitives: full, depthwise (with dilation),
//!   pointwise, fat-pointwise, strided compression and transposed strided
//!   decompression.
//! * [`activation`] — ReLU6, Swish, per-step softmax and inference-mode
//!   batch normalization.
//! * [`block`] — composite layers: separable / blueprint / k-blueprint
//!   convolutions, conv+BN+activation blocks, residual blocks (plain and
//!   with depth-to-space compression) and the 5-way decoder head.
//! * [`model`] — declarative network configuration, weight naming, and the
//!   full forward pass.
//! * [`init`] — Glorot-uniform and near-identity weight initializers.
//! * [`quant`] — post-training int8 quantization with batch-norm folding and
//!   fused ReLU6 clipping.
//! * [`ctc`] — greedy and prefix-beam-search CTC decoding.
//! * [`cost`] — closed-form parameter / multiply-accumulate / memory-traffic
//!   / receptive-field accounting.
//! * [`pipeline`] — signal normalization, chunking, stitching, base calling
//!   and the benchmark harness.
//! * [`io`] — binary weight container, signal file formats and the TOML
//!   model configuration.
//! * [`reference`] — naive nested-loop implementations used as independent
//!   oracles when validating the fast paths.
//!
//! Numeric code is generic over the scalar type via [`scalar::Scalar`]
//! (implemented for `f32` and `f64`); the end-to-end pipeline runs in `f32`.

pub mod activation;
pub mod block;
pub mod conv;
pub mod cost;
pub mod ctc;
pub mod error;
pub mod init;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod quant;
pub mod reference;
pub mod scalar;
pub mod tensor;

pub use error::{CoreError, Result};
pub use scalar::Scalar;

/// Single-precision tensor, the type the pipeline runs on.
pub type Tensor32 = tensor::Tensor<f32>;
/// Double-precision tensor, mostly useful for high-accuracy cross-checks.
pub type Tensor64 = tensor::Tensor<f64>;
/// Single-precision model.
pub type Model32 = model::Model<f32>;
/// Single-precision frame probabilities produced by the decoder head.
pub type FrameProbs32 = ctc::FrameProbs<f32>;
