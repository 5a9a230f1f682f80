//! Naive nested-loop reference implementations of every convolution variant.
//!
//! These exist to validate the fast paths in [`crate::conv`]: they share the
//! parameter structs (plain data) but none of the compute code, use explicit
//! per-tap index arithmetic with out-of-range reads treated as zeros, and
//! count every scalar multiplication they perform. The multiply counts are
//! what the closed-form cost model in [`crate::cost`] is checked against.
//!
//! Keep these slow and obvious; do not "optimize" them.

use crate::conv::{DepthwiseParams, FatPointwiseParams, FullConvParams, PointwiseParams};
use crate::error::{CoreError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Value at `(t, c)` of a virtually zero-padded tensor; `t` may be negative
/// or past the end.
fn at<S: Scalar>(x: &Tensor<S>, t: isize, c: usize) -> S {
    if t < 0 || t as usize >= x.time() {
        S::zero()
    } else {
        x.get(t as usize, c)
    }
}

/// Full convolution, "same" zero padding of `⌊D/2⌋`, arbitrary stride.
/// Returns the output and the number of multiplications performed.
pub fn conv1d_full<S: Scalar>(
    x: &Tensor<S>,
    p: &FullConvParams<S>,
) -> Result<(Tensor<S>, u64)> {
    if p.c_in != x.channels() {
        return Err(CoreError::ShapeMismatch("reference full conv: channels".into()));
    }
    if p.depth % 2 == 0 {
        return Err(CoreError::InvalidSpec("reference full conv: depth must be odd".into()));
    }
    if x.time() % p.stride != 0 {
        return Err(CoreError::InvalidSpec("reference full conv: stride divisibility".into()));
    }
    let pad = (p.depth / 2) as isize;
    let t_out = x.time() / p.stride;
    let mut muls = 0u64;
    let mut out = vec![S::zero(); t_out * p.c_out];
    for t in 0..t_out {
        for j in 0..p.c_out {
            let mut acc = p.bias[j];
            for d in 0..p.depth {
                for i in 0..p.c_in {
                    let pos = (t * p.stride + d) as isize - pad;
                    acc = acc + at(x, pos, i) * p.weights[(j * p.depth + d) * p.c_in + i];
                    muls += 1;
                }
            }
            out[t * p.c_out + j] = acc;
        }
    }
    Ok((Tensor::from_vec(t_out, p.c_out, out)?, muls))
}

/// Depthwise convolution with dilation; padding `⌈(m-1)/2⌉·dil` left and
/// `⌊(m-1)/2⌋·dil` right.
pub fn conv1d_depthwise<S: Scalar>(
    x: &Tensor<S>,
    p: &DepthwiseParams<S>,
) -> Result<(Tensor<S>, u64)> {
    if p.channels != x.channels() {
        return Err(CoreError::ShapeMismatch("reference depthwise: channels".into()));
    }
    let left = ((p.depth - 1).div_ceil(2) * p.dilation) as isize;
    let mut muls = 0u64;
    let mut out = vec![S::zero(); x.time() * p.channels];
    for t in 0..x.time() {
        for j in 0..p.channels {
            let mut acc = p.bias[j];
            for d in 0..p.depth {
                let pos = t as isize + (d * p.dilation) as isize - left;
                acc = acc + at(x, pos, j) * p.weights[d * p.channels + j];
                muls += 1;
            }
            out[t * p.channels + j] = acc;
        }
    }
    Ok((Tensor::from_vec(x.time(), p.channels, out)?, muls))
}

/// Pointwise convolution.
pub fn conv1d_pointwise<S: Scalar>(
    x: &Tensor<S>,
    p: &PointwiseParams<S>,
) -> Result<(Tensor<S>, u64)> {
    if p.c_in != x.channels() {
        return Err(CoreError::ShapeMismatch("reference pointwise: channels".into()));
    }
    let mut muls = 0u64;
    let mut out = vec![S::zero(); x.time() * p.c_out];
    for t in 0..x.time() {
        for j in 0..p.c_out {
            let mut acc = p.bias[j];
            for i in 0..p.c_in {
                acc = acc + x.get(t, i) * p.weights[j * p.c_in + i];
                muls += 1;
            }
            out[t * p.c_out + j] = acc;
        }
    }
    Ok((Tensor::from_vec(x.time(), p.c_out, out)?, muls))
}

/// Fat-pointwise convolution: window `k`, left-heavy "same" padding.
pub fn conv1d_fat_pointwise<S: Scalar>(
    x: &Tensor<S>,
    p: &FatPointwiseParams<S>,
) -> Result<(Tensor<S>, u64)> {
    if p.c_in != x.channels() {
        return Err(CoreError::ShapeMismatch("reference fat-pointwise: channels".into()));
    }
    let left = (p.window / 2) as isize;
    let mut muls = 0u64;
    let mut out = vec![S::zero(); x.time() * p.c_out];
    for t in 0..x.time() {
        for j in 0..p.c_out {
            let mut acc = p.bias[j];
            for d in 0..p.window {
                for i in 0..p.c_in {
                    let pos = t as isize + d as isize - left;
                    acc = acc + at(x, pos, i) * p.weights[(j * p.window + d) * p.c_in + i];
                    muls += 1;
                }
            }
            out[t * p.c_out + j] = acc;
        }
    }
    Ok((Tensor::from_vec(x.time(), p.c_out, out)?, muls))
}

/// Strided compression convolution: depth = stride, no padding.
pub fn conv1d_strided<S: Scalar>(
    x: &Tensor<S>,
    p: &FullConvParams<S>,
) -> Result<(Tensor<S>, u64)> {
    if p.c_in != x.channels() {
        return Err(CoreError::ShapeMismatch("reference strided: channels".into()));
    }
    if p.depth != p.stride || x.time() % p.stride != 0 {
        return Err(CoreError::InvalidSpec("reference strided: depth/stride".into()));
    }
    let t_out = x.time() / p.stride;
    let mut muls = 0u64;
    let mut out = vec![S::zero(); t_out * p.c_out];
    for t in 0..t_out {
        for j in 0..p.c_out {
            let mut acc = p.bias[j];
            for d in 0..p.depth {
                for i in 0..p.c_in {
                    acc = acc + x.get(t * p.stride + d, i) * p.weights[(j * p.depth + d) * p.c_in + i];
                    muls += 1;
                }
            }
            out[t * p.c_out + j] = acc;
        }
    }
    Ok((Tensor::from_vec(t_out, p.c_out, out)?, muls))
}

/// Transposed strided convolution: depth = stride, each input step emits
/// `stride` output steps.
pub fn conv1d_transposed_strided<S: Scalar>(
    x: &Tensor<S>,
    p: &FullConvParams<S>,
) -> Result<(Tensor<S>, u64)> {
    if p.c_in != x.channels() {
        return Err(CoreError::ShapeMismatch("reference transposed: channels".into()));
    }
    if p.depth != p.stride {
        return Err(CoreError::InvalidSpec("reference transposed: depth/stride".into()));
    }
    let t_out = x.time() * p.stride;
    let mut muls = 0u64;
    let mut out = vec![S::zero(); t_out * p.c_out];
    for t in 0..x.time() {
        for d in 0..p.depth {
            for j in 0..p.c_out {
                let mut acc = p.bias[j];
                for i in 0..p.c_in {
                    acc = acc + x.get(t, i) * p.weights[(j * p.depth + d) * p.c_in + i];
                    muls += 1;
                }
                out[(t * p.stride + d) * p.c_out + j] = acc;
            }
        }
    }
    Ok((Tensor::from_vec(t_out, p.c_out, out)?, muls))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_full_matches_hand_computation() {
        let p = FullConvParams::new(1, 1, 3, 1, vec![1.0, 1.0, 1.0], vec![0.0]).unwrap();
        let x = Tensor::from_samples(&[1.0, 2.0, 3.0]).unwrap();
        let (y, muls) = conv1d_full(&x, &p).unwrap();
        assert_eq!(y.data(), &[3.0, 6.0, 5.0]);
        assert_eq!(muls, 3 * 1 * 3 * 1);
    }

    #[test]
    fn reference_dilated_depthwise_matches_hand_computation() {
        let p = DepthwiseParams::new(1, 3, 2, vec![1.0, 0.0, 1.0], vec![0.0]).unwrap();
        let x = Tensor::from_samples(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let (y, muls) = conv1d_depthwise(&x, &p).unwrap();
        assert_eq!(y.data(), &[3.0, 4.0, 1.0, 2.0]);
        assert_eq!(muls, 4 * 3);
    }

    #[test]
    fn reference_counts_are_the_closed_forms() {
        let x = Tensor::from_vec(6, 2, vec![0.5; 12]).unwrap();
        let full = FullConvParams::new(2, 3, 5, 1, vec![0.1; 30], vec![0.0; 3]).unwrap();
        assert_eq!(conv1d_full(&x, &full).unwrap().1, 6 * 3 * 5 * 2);
        let pw = PointwiseParams::new(2, 3, vec![0.1; 6], vec![0.0; 3]).unwrap();
        assert_eq!(conv1d_pointwise(&x, &pw).unwrap().1, 6 * 3 * 2);
        let fat = FatPointwiseParams::new(2, 3, 4, vec![0.1; 24], vec![0.0; 3]).unwrap();
        assert_eq!(conv1d_fat_pointwise(&x, &fat).unwrap().1, 6 * 3 * 4 * 2);
        let dw = DepthwiseParams::new(2, 3, 2, vec![0.1; 6], vec![0.0; 2]).unwrap();
        assert_eq!(conv1d_depthwise(&x, &dw).unwrap().1, 6 * 3 * 2);
        let st = FullConvParams::new(2, 4, 3, 3, vec![0.1; 24], vec![0.0; 4]).unwrap();
        assert_eq!(conv1d_strided(&x, &st).unwrap().1, 2 * 4 * 3 * 2);
        let tr = FullConvParams::new(2, 4, 3, 3, vec![0.1; 24], vec![0.0; 4]).unwrap();
        assert_eq!(conv1d_transposed_strided(&x, &tr).unwrap().1, 6 * 3 * 4 * 2);
    }
}
