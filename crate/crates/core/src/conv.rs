//! The 1D convolution primitives.
//!
//! Five variants cover everything the network needs:
//!
//! * [`conv1d_full`] — dense kernel over a time window and all channels.
//! * [`conv1d_depthwise`] — per-channel kernel, optionally dilated.
//! * [`conv1d_pointwise`] — 1x1 channel mixing.
//! * [`conv1d_fat_pointwise`] — a depth-`k` dense kernel playing the
//!   pointwise role in the k-blueprint factorization.
//! * [`conv1d_strided`] / [`conv1d_transposed_strided`] — non-overlapping
//!   depth-to-space compression and its inverse.
//!
//! Padding conventions (zeros, applied internally):
//!
//! * full: `D` odd, `⌊D/2⌋` on each side; output length `T / stride`.
//! * depthwise: `⌈(m-1)/2⌉·dilation` left, `⌊(m-1)/2⌋·dilation` right, so
//!   the receptive field is symmetric exactly when `m` is odd.
//! * fat-pointwise: `⌊k/2⌋` left and `k-1-⌊k/2⌋` right (left-heavy "same"
//!   padding for even `k`).
//! * strided / transposed: none; windows tile exactly, so the stride must
//!   divide the time length.
//!
//! Weight layouts are row-major with the input-channel axis innermost:
//! `(C_out, D, C_in)` for dense kernels, `(m, C)` for depthwise and
//! `(C_out, C_in)` for pointwise.

use crate::error::{CoreError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Weights and bias of a full (dense) convolution, layout `(C_out, D, C_in)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FullConvParams<S: Scalar> {
    pub weights: Vec<S>,
    pub bias: Vec<S>,
    pub c_in: usize,
    pub c_out: usize,
    pub depth: usize,
    pub stride: usize,
}

impl<S: Scalar> FullConvParams<S> {
    pub fn new(
        c_in: usize,
        c_out: usize,
        depth: usize,
        stride: usize,
        weights: Vec<S>,
        bias: Vec<S>,
    ) -> Result<Self> {
        if depth == 0 || stride == 0 || c_in == 0 || c_out == 0 {
            return Err(CoreError::InvalidSpec(
                "full conv: all dimensions must be >= 1".into(),
            ));
        }
        if weights.len() != c_out * depth * c_in {
            return Err(CoreError::ShapeMismatch(format!(
                "full conv weights: expected {}, got {}",
                c_out * depth * c_in,
                weights.len()
            )));
        }
        if bias.len() != c_out {
            return Err(CoreError::ShapeMismatch(format!(
                "full conv bias: expected {c_out}, got {}",
                bias.len()
            )));
        }
        Ok(Self { weights, bias, c_in, c_out, depth, stride })
    }
}

/// Per-channel kernel of depth `m` over `C` channels, layout `(m, C)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthwiseParams<S: Scalar> {
    pub weights: Vec<S>,
    pub bias: Vec<S>,
    pub channels: usize,
    pub depth: usize,
    pub dilation: usize,
}

impl<S: Scalar> DepthwiseParams<S> {
    pub fn new(
        channels: usize,
        depth: usize,
        dilation: usize,
        weights: Vec<S>,
        bias: Vec<S>,
    ) -> Result<Self> {
        if depth == 0 || dilation == 0 || channels == 0 {
            return Err(CoreError::InvalidSpec(
                "depthwise conv: all dimensions must be >= 1".into(),
            ));
        }
        if weights.len() != depth * channels {
            return Err(CoreError::ShapeMismatch(format!(
                "depthwise weights: expected {}, got {}",
                depth * channels,
                weights.len()
            )));
        }
        if bias.len() != channels {
            return Err(CoreError::ShapeMismatch(format!(
                "depthwise bias: expected {channels}, got {}",
                bias.len()
            )));
        }
        Ok(Self { weights, bias, channels, depth, dilation })
    }
}

/// 1x1 channel-mixing kernel, layout `(C_out, C_in)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointwiseParams<S: Scalar> {
    pub weights: Vec<S>,
    pub bias: Vec<S>,
    pub c_in: usize,
    pub c_out: usize,
}

impl<S: Scalar> PointwiseParams<S> {
    pub fn new(c_in: usize, c_out: usize, weights: Vec<S>, bias: Vec<S>) -> Result<Self> {
        if c_in == 0 || c_out == 0 {
            return Err(CoreError::InvalidSpec(
                "pointwise conv: channel counts must be >= 1".into(),
            ));
        }
        if weights.len() != c_out * c_in {
            return Err(CoreError::ShapeMismatch(format!(
                "pointwise weights: expected {}, got {}",
                c_out * c_in,
                weights.len()
            )));
        }
        if bias.len() != c_out {
            return Err(CoreError::ShapeMismatch(format!(
                "pointwise bias: expected {c_out}, got {}",
                bias.len()
            )));
        }
        Ok(Self { weights, bias, c_in, c_out })
    }

    /// The identity mixing matrix (square, zero bias).
    pub fn identity(channels: usize) -> Self {
        let mut weights = vec![S::zero(); channels * channels];
        for j in 0..channels {
            weights[j * channels + j] = S::one();
        }
        Self { weights, bias: vec![S::zero(); channels], c_in: channels, c_out: channels }
    }
}

/// Dense kernel of window `k` used as the channel-mixing half of a
/// k-blueprint factorization, layout `(C_out, k, C_in)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FatPointwiseParams<S: Scalar> {
    pub weights: Vec<S>,
    pub bias: Vec<S>,
    pub c_in: usize,
    pub c_out: usize,
    pub window: usize,
}

impl<S: Scalar> FatPointwiseParams<S> {
    pub fn new(
        c_in: usize,
        c_out: usize,
        window: usize,
        weights: Vec<S>,
        bias: Vec<S>,
    ) -> Result<Self> {
        if window == 0 || c_in == 0 || c_out == 0 {
            return Err(CoreError::InvalidSpec(
                "fat-pointwise conv: all dimensions must be >= 1".into(),
            ));
        }
        if weights.len() != c_out * window * c_in {
            return Err(CoreError::ShapeMismatch(format!(
                "fat-pointwise weights: expected {}, got {}",
                c_out * window * c_in,
                weights.len()
            )));
        }
        if bias.len() != c_out {
            return Err(CoreError::ShapeMismatch(format!(
                "fat-pointwise bias: expected {c_out}, got {}",
                bias.len()
            )));
        }
        Ok(Self { weights, bias, c_in, c_out, window })
    }
}

// ── Padding helpers ────────────────────────────────────────────────

/// Left/right zero padding of a depthwise kernel: dilation-scaled, left-heavy
/// for even depths.
pub fn depthwise_padding(depth: usize, dilation: usize) -> (usize, usize) {
    let left = (depth - 1).div_ceil(2) * dilation;
    let right = ((depth - 1) / 2) * dilation;
    (left, right)
}

/// Left/right zero padding of a window-`k` dense kernel: `⌊k/2⌋` left,
/// `k-1-⌊k/2⌋` right.
pub fn window_padding(window: usize) -> (usize, usize) {
    let left = window / 2;
    (left, window - 1 - left)
}

// ── Convolutions ───────────────────────────────────────────────────

/// Full convolution with "same" zero padding. `depth` must be odd; for
/// `stride > 1` the time length must be divisible by the stride and the
/// output has length `T / stride`.
pub fn conv1d_full<S: Scalar>(x: &Tensor<S>, p: &FullConvParams<S>) -> Result<Tensor<S>> {
    if p.c_in != x.channels() {
        return Err(CoreError::ShapeMismatch(format!(
            "full conv: input has {} channels, kernel expects {}",
            x.channels(),
            p.c_in
        )));
    }
    if p.depth % 2 == 0 {
        return Err(CoreError::InvalidSpec(format!(
            "full conv: depth must be odd, got {}",
            p.depth
        )));
    }
    let t_in = x.time();
    if t_in % p.stride != 0 {
        return Err(CoreError::InvalidSpec(format!(
            "full conv: T={t_in} not divisible by stride {}",
            p.stride
        )));
    }
    let pad = p.depth / 2;
    let padded = x.pad_time(pad, pad, S::zero());
    let t_out = t_in / p.stride;
    let window = p.depth * p.c_in;
    let mut out = vec![S::zero(); t_out * p.c_out];
    for t in 0..t_out {
        let base = t * p.stride * p.c_in;
        let x_win = &padded.data()[base..base + window];
        let out_row = &mut out[t * p.c_out..(t + 1) * p.c_out];
        for (j, o) in out_row.iter_mut().enumerate() {
            let w_row = &p.weights[j * window..(j + 1) * window];
            *o = dot(x_win, w_row) + p.bias[j];
        }
    }
    Tensor::from_vec(t_out, p.c_out, out)
}

/// Depthwise convolution, optionally dilated. Output length equals input
/// length; padding follows [`depthwise_padding`].
pub fn conv1d_depthwise<S: Scalar>(x: &Tensor<S>, p: &DepthwiseParams<S>) -> Result<Tensor<S>> {
    if p.channels != x.channels() {
        return Err(CoreError::ShapeMismatch(format!(
            "depthwise conv: input has {} channels, kernel expects {}",
            x.channels(),
            p.channels
        )));
    }
    let c = p.channels;
    let (left, right) = depthwise_padding(p.depth, p.dilation);
    let padded = x.pad_time(left, right, S::zero());
    let t_out = x.time();
    let mut out = vec![S::zero(); t_out * c];
    for t in 0..t_out {
        let out_row = &mut out[t * c..(t + 1) * c];
        out_row.copy_from_slice(&p.bias);
        for d in 0..p.depth {
            let x_row = padded.row(t + d * p.dilation);
            let w_row = &p.weights[d * c..(d + 1) * c];
            for ((o, &xv), &wv) in out_row.iter_mut().zip(x_row).zip(w_row) {
                *o = *o + xv * wv;
            }
        }
    }
    Tensor::from_vec(t_out, c, out)
}

/// Pointwise (1x1) convolution mixing channels at each time step.
pub fn conv1d_pointwise<S: Scalar>(x: &Tensor<S>, p: &PointwiseParams<S>) -> Result<Tensor<S>> {
    if p.c_in != x.channels() {
        return Err(CoreError::ShapeMismatch(format!(
            "pointwise conv: input has {} channels, kernel expects {}",
            x.channels(),
            p.c_in
        )));
    }
    let t_len = x.time();
    let mut out = vec![S::zero(); t_len * p.c_out];
    for t in 0..t_len {
        let x_row = x.row(t);
        let out_row = &mut out[t * p.c_out..(t + 1) * p.c_out];
        for (j, o) in out_row.iter_mut().enumerate() {
            let w_row = &p.weights[j * p.c_in..(j + 1) * p.c_in];
            *o = dot(x_row, w_row) + p.bias[j];
        }
    }
    Tensor::from_vec(t_len, p.c_out, out)
}

/// Window-`k` dense convolution ("fat pointwise"); `k = 1` coincides with
/// [`conv1d_pointwise`]. Output length equals input length.
pub fn conv1d_fat_pointwise<S: Scalar>(
    x: &Tensor<S>,
    p: &FatPointwiseParams<S>,
) -> Result<Tensor<S>> {
    if p.c_in != x.channels() {
        return Err(CoreError::ShapeMismatch(format!(
            "fat-pointwise conv: input has {} channels, kernel expects {}",
            x.channels(),
            p.c_in
        )));
    }
    let (left, right) = window_padding(p.window);
    let padded = x.pad_time(left, right, S::zero());
    let t_out = x.time();
    let span = p.window * p.c_in;
    let mut out = vec![S::zero(); t_out * p.c_out];
    for t in 0..t_out {
        let x_win = &padded.data()[t * p.c_in..t * p.c_in + span];
        let out_row = &mut out[t * p.c_out..(t + 1) * p.c_out];
        for (j, o) in out_row.iter_mut().enumerate() {
            let w_row = &p.weights[j * span..(j + 1) * span];
            *o = dot(x_win, w_row) + p.bias[j];
        }
    }
    Tensor::from_vec(t_out, p.c_out, out)
}

/// Strided compression convolution: depth equals stride, no padding, so the
/// windows tile the input exactly and the output has length `T / stride`.
pub fn conv1d_strided<S: Scalar>(x: &Tensor<S>, p: &FullConvParams<S>) -> Result<Tensor<S>> {
    if p.c_in != x.channels() {
        return Err(CoreError::ShapeMismatch(format!(
            "strided conv: input has {} channels, kernel expects {}",
            x.channels(),
            p.c_in
        )));
    }
    if p.depth != p.stride {
        return Err(CoreError::InvalidSpec(format!(
            "strided conv: depth {} must equal stride {}",
            p.depth, p.stride
        )));
    }
    if x.time() % p.stride != 0 {
        return Err(CoreError::InvalidSpec(format!(
            "strided conv: T={} not divisible by stride {}",
            x.time(),
            p.stride
        )));
    }
    let t_out = x.time() / p.stride;
    let window = p.depth * p.c_in;
    let mut out = vec![S::zero(); t_out * p.c_out];
    for t in 0..t_out {
        let x_win = &x.data()[t * window..(t + 1) * window];
        let out_row = &mut out[t * p.c_out..(t + 1) * p.c_out];
        for (j, o) in out_row.iter_mut().enumerate() {
            let w_row = &p.weights[j * window..(j + 1) * window];
            *o = dot(x_win, w_row) + p.bias[j];
        }
    }
    Tensor::from_vec(t_out, p.c_out, out)
}

/// Transposed strided convolution: each input step emits `stride`
/// consecutive output steps, `out[t·s + d, j] = Σ_i x[t, i]·W[j, d, i] + B[j]`.
pub fn conv1d_transposed_strided<S: Scalar>(
    x: &Tensor<S>,
    p: &FullConvParams<S>,
) -> Result<Tensor<S>> {
    if p.c_in != x.channels() {
        return Err(CoreError::ShapeMismatch(format!(
            "transposed conv: input has {} channels, kernel expects {}",
            x.channels(),
            p.c_in
        )));
    }
    if p.depth != p.stride {
        return Err(CoreError::InvalidSpec(format!(
            "transposed conv: depth {} must equal stride {}",
            p.depth, p.stride
        )));
    }
    let t_out = x.time() * p.stride;
    let mut out = vec![S::zero(); t_out * p.c_out];
    for t in 0..x.time() {
        let x_row = x.row(t);
        for d in 0..p.depth {
            let out_row = &mut out[(t * p.stride + d) * p.c_out..(t * p.stride + d + 1) * p.c_out];
            for (j, o) in out_row.iter_mut().enumerate() {
                let w_row = &p.weights[(j * p.depth + d) * p.c_in..(j * p.depth + d + 1) * p.c_in];
                *o = dot(x_row, w_row) + p.bias[j];
            }
        }
    }
    Tensor::from_vec(t_out, p.c_out, out)
}

#[inline]
fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t1(values: &[f64]) -> Tensor<f64> {
        Tensor::from_samples(values).unwrap()
    }

    fn assert_close(a: &Tensor<f64>, b: &[f64]) {
        let diff: Vec<f64> = a.data().iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
        assert!(
            diff.iter().all(|&d| d <= 1e-12),
            "got {:?}, want {:?}",
            a.data(),
            b
        );
    }

    // ── full ──────────────────────────────────────────────

    #[test]
    fn full_box_kernel() {
        let p = FullConvParams::new(1, 1, 3, 1, vec![1.0, 1.0, 1.0], vec![0.0]).unwrap();
        assert_close(&conv1d_full(&t1(&[1.0, 2.0, 3.0]), &p).unwrap(), &[3.0, 6.0, 5.0]);
    }

    #[test]
    fn full_identity_kernel() {
        let p = FullConvParams::new(1, 1, 1, 1, vec![1.0], vec![0.0]).unwrap();
        let x = t1(&[4.0, -1.0, 0.5]);
        assert_eq!(conv1d_full(&x, &p).unwrap(), x);
    }

    #[test]
    fn full_bias_only() {
        let p = FullConvParams::new(2, 3, 3, 1, vec![0.0; 18], vec![7.0, -1.0, 0.25]).unwrap();
        let x = Tensor::from_vec(4, 2, (0..8).map(f64::from).collect()).unwrap();
        let y = conv1d_full(&x, &p).unwrap();
        for t in 0..4 {
            assert_eq!(y.row(t), &[7.0, -1.0, 0.25]);
        }
    }

    #[test]
    fn full_rejects_even_depth_and_channel_mismatch() {
        let p = FullConvParams::new(1, 1, 2, 1, vec![1.0, 1.0], vec![0.0]).unwrap();
        assert!(conv1d_full(&t1(&[1.0, 2.0]), &p).is_err());
        let p = FullConvParams::new(2, 1, 1, 1, vec![1.0, 1.0], vec![0.0]).unwrap();
        assert!(conv1d_full(&t1(&[1.0, 2.0]), &p).is_err());
    }

    #[test]
    fn full_stride_three_matches_window_walk() {
        // depth 9, stride 3 entry layer geometry: T=12 -> 4 outputs
        let w: Vec<f64> = (0..9).map(|d| if d == 4 { 1.0 } else { 0.0 }).collect();
        let p = FullConvParams::new(1, 1, 9, 3, w, vec![0.0]).unwrap();
        let x = t1(&(1..=12).map(f64::from).collect::<Vec<_>>());
        // center tap picks x[3t] (pad 4, window start 3t, center offset 4)
        assert_close(&conv1d_full(&x, &p).unwrap(), &[1.0, 4.0, 7.0, 10.0]);
    }

    // ── depthwise ─────────────────────────────────────────

    #[test]
    fn depthwise_centered_delta_is_identity() {
        let p = DepthwiseParams::new(2, 3, 1, vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0], vec![0.0, 0.0])
            .unwrap();
        let x = Tensor::from_vec(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(conv1d_depthwise(&x, &p).unwrap(), x);
    }

    #[test]
    fn depthwise_dilated_example() {
        let p = DepthwiseParams::new(1, 3, 2, vec![1.0, 0.0, 1.0], vec![0.0]).unwrap();
        let x = t1(&[1.0, 2.0, 3.0, 4.0]);
        assert_close(&conv1d_depthwise(&x, &p).unwrap(), &[3.0, 4.0, 1.0, 2.0]);
    }

    #[test]
    fn depthwise_depth_one_scales() {
        let p = DepthwiseParams::new(1, 1, 1, vec![2.5], vec![0.0]).unwrap();
        assert_close(&conv1d_depthwise(&t1(&[1.0, -2.0]), &p).unwrap(), &[2.5, -5.0]);
    }

    #[test]
    fn depthwise_even_depth_pads_left_heavy() {
        // m=2, dilation=1: pad (1, 0); kernel [a, b] -> y[t] = a*x[t-1] + b*x[t]
        let p = DepthwiseParams::new(1, 2, 1, vec![10.0, 1.0], vec![0.0]).unwrap();
        assert_close(&conv1d_depthwise(&t1(&[1.0, 2.0, 3.0]), &p).unwrap(), &[1.0, 12.0, 23.0]);
    }

    // ── pointwise ─────────────────────────────────────────

    #[test]
    fn pointwise_sum_channels() {
        let p = PointwiseParams::new(2, 1, vec![1.0, 1.0], vec![0.0]).unwrap();
        let x = Tensor::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_close(&conv1d_pointwise(&x, &p).unwrap(), &[3.0, 7.0]);
    }

    #[test]
    fn pointwise_identity_and_permutation() {
        let x = Tensor::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let id = PointwiseParams::<f64>::identity(2);
        assert_eq!(conv1d_pointwise(&x, &id).unwrap(), x);
        let swap = PointwiseParams::new(2, 2, vec![0.0, 1.0, 1.0, 0.0], vec![0.0, 0.0]).unwrap();
        assert_close(&conv1d_pointwise(&x, &swap).unwrap(), &[2.0, 1.0, 4.0, 3.0]);
    }

    #[test]
    fn pointwise_channel_mismatch_errors() {
        let p = PointwiseParams::new(3, 1, vec![1.0; 3], vec![0.0]).unwrap();
        let x = Tensor::from_vec(1, 2, vec![1.0, 2.0]).unwrap();
        assert!(conv1d_pointwise(&x, &p).is_err());
    }

    // ── fat pointwise ─────────────────────────────────────

    #[test]
    fn fat_pointwise_window_one_equals_pointwise() {
        let w = vec![0.5, -1.0, 2.0, 0.25];
        let b = vec![0.1, -0.2];
        let fat = FatPointwiseParams::new(2, 2, 1, w.clone(), b.clone()).unwrap();
        let pw = PointwiseParams::new(2, 2, w, b).unwrap();
        let x = Tensor::from_vec(3, 2, vec![1.0, 2.0, -3.0, 4.0, 0.0, 1.5]).unwrap();
        assert_eq!(
            conv1d_fat_pointwise(&x, &fat).unwrap(),
            conv1d_pointwise(&x, &pw).unwrap()
        );
    }

    #[test]
    fn fat_pointwise_delta_stack_is_identity() {
        // k=3, W[j,1,i] = delta_ij, other slices zero
        let c = 2;
        let mut w = vec![0.0; c * 3 * c];
        for j in 0..c {
            w[j * 3 * c + c + j] = 1.0;
        }
        let p = FatPointwiseParams::new(c, c, 3, w, vec![0.0; c]).unwrap();
        let x = Tensor::from_vec(3, c, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(conv1d_fat_pointwise(&x, &p).unwrap(), x);
    }

    #[test]
    fn fat_pointwise_k3_matches_full_depth3() {
        let w: Vec<f64> = (0..2 * 3 * 2).map(|i| (i as f64) * 0.3 - 1.0).collect();
        let b = vec![0.5, -0.25];
        let fat = FatPointwiseParams::new(2, 2, 3, w.clone(), b.clone()).unwrap();
        let full = FullConvParams::new(2, 2, 3, 1, w, b).unwrap();
        let x = Tensor::from_vec(5, 2, (0..10).map(|i| f64::from(i) * 0.1).collect()).unwrap();
        let a = conv1d_fat_pointwise(&x, &fat).unwrap();
        let b = conv1d_full(&x, &full).unwrap();
        assert!(a.max_abs_diff(&b).unwrap() <= 1e-12);
    }

    // ── strided / transposed ──────────────────────────────

    #[test]
    fn strided_center_tap() {
        let p = FullConvParams::new(1, 1, 3, 3, vec![0.0, 1.0, 0.0], vec![0.0]).unwrap();
        let x = t1(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_close(&conv1d_strided(&x, &p).unwrap(), &[2.0, 5.0]);
    }

    #[test]
    fn strided_bias_only_and_divisibility() {
        let p = FullConvParams::new(1, 2, 3, 3, vec![0.0; 6], vec![4.0, -4.0]).unwrap();
        let y = conv1d_strided(&t1(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]), &p).unwrap();
        assert_eq!(y.shape(), (2, 2));
        assert_close(&y, &[4.0, -4.0, 4.0, -4.0]);
        assert!(conv1d_strided(&t1(&[1.0, 2.0, 3.0, 4.0]), &p).is_err());
    }

    #[test]
    fn strided_degenerate_is_pointwise() {
        let p = FullConvParams::new(2, 1, 1, 1, vec![0.5, 2.0], vec![1.0]).unwrap();
        let pw = PointwiseParams::new(2, 1, vec![0.5, 2.0], vec![1.0]).unwrap();
        let x = Tensor::from_vec(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(
            conv1d_strided(&x, &p).unwrap(),
            conv1d_pointwise(&x, &pw).unwrap()
        );
    }

    #[test]
    fn transposed_repeats_inputs() {
        let p = FullConvParams::new(1, 1, 3, 3, vec![1.0, 1.0, 1.0], vec![0.0]).unwrap();
        let y = conv1d_transposed_strided(&t1(&[2.0, 5.0]), &p).unwrap();
        assert_close(&y, &[2.0, 2.0, 2.0, 5.0, 5.0, 5.0]);
    }

    #[test]
    fn transposed_bias_only() {
        let p = FullConvParams::new(1, 1, 2, 2, vec![0.0, 0.0], vec![3.0]).unwrap();
        let y = conv1d_transposed_strided(&t1(&[9.0, 9.0, 9.0]), &p).unwrap();
        assert_close(&y, &[3.0; 6]);
    }

    #[test]
    fn strided_then_transposed_restores_shape() {
        let down = FullConvParams::new(2, 4, 3, 3, vec![0.1; 4 * 3 * 2], vec![0.0; 4]).unwrap();
        let up = FullConvParams::new(4, 2, 3, 3, vec![0.1; 2 * 3 * 4], vec![0.0; 2]).unwrap();
        let x = Tensor::from_vec(6, 2, vec![1.0; 12]).unwrap();
        let y = conv1d_strided(&x, &down).unwrap();
        assert_eq!(y.shape(), (2, 4));
        let z = conv1d_transposed_strided(&y, &up).unwrap();
        assert_eq!(z.shape(), x.shape());
    }
}
