//! Composite layers: separable convolution variants, conv+BN+activation
//! blocks, residual blocks (plain and depth-to-space compressed) and the
//! decoder head.
//!
//! A k-blueprint-separable convolution factorizes a depth-`D` convolution
//! into a fat-pointwise convolution of window `k` followed by a dilated
//! depthwise convolution of depth `D/k` with dilation `k`; the composition
//! keeps the receptive field `D` while shrinking the depthwise kernel by a
//! factor of `k`. With `k = 1` it degenerates to the blueprint-separable
//! convolution (pointwise before depthwise).
//!
//! The depth-to-space residual block compresses its main branch with a
//! strided convolution mapping `(T, C)` to `(T/x, C·y)`, runs `R-2`
//! k-blueprint units at the compressed shape, applies one depthwise
//! operation, and restores `(T, C)` with a transposed strided convolution,
//! which makes it a drop-in replacement for the plain residual block.

use crate::activation::{batchnorm_apply, softmax_channels, Activation, BatchNormParams};
use crate::conv::{
    conv1d_depthwise, conv1d_fat_pointwise, conv1d_full, conv1d_pointwise, conv1d_strided,
    conv1d_transposed_strided, DepthwiseParams, FatPointwiseParams, FullConvParams,
    PointwiseParams,
};
use crate::error::{CoreError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Observer for intermediate tensors during a forward pass. Every edge in
/// the layer graph is reported exactly once under a stable name; the same
/// names key the activation ranges collected during quantization
/// calibration.
pub type Tap<'a, S> = &'a mut dyn FnMut(&str, &Tensor<S>);

/// Separable convolution: depthwise then pointwise.
pub fn separable_conv<S: Scalar>(
    x: &Tensor<S>,
    dw: &DepthwiseParams<S>,
    pw: &PointwiseParams<S>,
) -> Result<Tensor<S>> {
    conv1d_pointwise(&conv1d_depthwise(x, dw)?, pw)
}

/// Blueprint-separable convolution: pointwise then depthwise.
pub fn blueprint_separable_conv<S: Scalar>(
    x: &Tensor<S>,
    pw: &PointwiseParams<S>,
    dw: &DepthwiseParams<S>,
) -> Result<Tensor<S>> {
    conv1d_depthwise(&conv1d_pointwise(x, pw)?, dw)
}

/// k-blueprint-separable convolution: fat-pointwise of window `k` followed
/// by a depthwise of depth `D/k` dilated by `k`. The depthwise dilation must
/// equal the fat-pointwise window.
pub fn k_blueprint_separable_conv<S: Scalar>(
    x: &Tensor<S>,
    fat: &FatPointwiseParams<S>,
    dw: &DepthwiseParams<S>,
) -> Result<Tensor<S>> {
    if dw.dilation != fat.window {
        return Err(CoreError::InvalidSpec(format!(
            "k-blueprint conv: depthwise dilation {} must equal fat-pointwise window {}",
            dw.dilation, fat.window
        )));
    }
    conv1d_depthwise(&conv1d_fat_pointwise(x, fat)?, dw)
}

/// The convolution inside a conv block.
#[derive(Clone, Debug, PartialEq)]
pub enum ConvVariant<S: Scalar> {
    /// Dense kernel (optionally strided), e.g. the entry and exit layers.
    Full(FullConvParams<S>),
    /// Strided compression kernel (depth = stride, no padding).
    Strided(FullConvParams<S>),
    /// 1x1 channel mixing.
    Pointwise(PointwiseParams<S>),
    /// Depthwise then pointwise.
    Separable { dw: DepthwiseParams<S>, pw: PointwiseParams<S> },
    /// Fat-pointwise then dilated depthwise; `window = 1` is the blueprint
    /// ordering.
    KBlueprint { fat: FatPointwiseParams<S>, dw: DepthwiseParams<S> },
}

impl<S: Scalar> ConvVariant<S> {
    /// Output channel count.
    pub fn c_out(&self) -> usize {
        match self {
            ConvVariant::Full(p) | ConvVariant::Strided(p) => p.c_out,
            ConvVariant::Pointwise(p) => p.c_out,
            ConvVariant::Separable { pw, .. } => pw.c_out,
            ConvVariant::KBlueprint { dw, .. } => dw.channels,
        }
    }

    /// Runs the convolution, reporting the intermediate tensor of two-stage
    /// variants as `{name}.mid`.
    pub fn forward_traced(&self, x: &Tensor<S>, name: &str, tap: Tap<S>) -> Result<Tensor<S>> {
        match self {
            ConvVariant::Full(p) => conv1d_full(x, p),
            ConvVariant::Strided(p) => conv1d_strided(x, p),
            ConvVariant::Pointwise(p) => conv1d_pointwise(x, p),
            ConvVariant::Separable { dw, pw } => {
                let mid = conv1d_depthwise(x, dw)?;
                tap(&format!("{name}.mid"), &mid);
                conv1d_pointwise(&mid, pw)
            }
            ConvVariant::KBlueprint { fat, dw } => {
                if dw.dilation != fat.window {
                    return Err(CoreError::InvalidSpec(format!(
                        "k-blueprint conv: depthwise dilation {} must equal window {}",
                        dw.dilation, fat.window
                    )));
                }
                let mid = conv1d_fat_pointwise(x, fat)?;
                tap(&format!("{name}.mid"), &mid);
                conv1d_depthwise(&mid, dw)
            }
        }
    }

    pub fn forward(&self, x: &Tensor<S>) -> Result<Tensor<S>> {
        self.forward_traced(x, "", &mut |_, _| {})
    }
}

/// Convolution, batch normalization, and an optional activation (the last
/// unit of a residual main branch omits it).
#[derive(Clone, Debug, PartialEq)]
pub struct CBlock<S: Scalar> {
    pub conv: ConvVariant<S>,
    pub bn: BatchNormParams<S>,
    pub activation: Option<Activation>,
}

impl<S: Scalar> CBlock<S> {
    pub fn forward_traced(&self, x: &Tensor<S>, name: &str, tap: Tap<S>) -> Result<Tensor<S>> {
        let y = self.conv.forward_traced(x, name, tap)?;
        let y = batchnorm_apply(&y, &self.bn)?;
        Ok(match self.activation {
            Some(act) => act.apply(&y),
            None => y,
        })
    }

    pub fn forward(&self, x: &Tensor<S>) -> Result<Tensor<S>> {
        self.forward_traced(x, "", &mut |_, _| {})
    }
}

/// Main branch of a residual block.
#[derive(Clone, Debug, PartialEq)]
pub enum MainBranch<S: Scalar> {
    /// `R` conv blocks at the input shape, the last without activation.
    Plain { units: Vec<CBlock<S>> },
    /// Strided compression, `R-2` units at the compressed shape, a depthwise
    /// operation, and a transposed strided decompression (BN, no activation).
    Compressed {
        compress: CBlock<S>,
        units: Vec<CBlock<S>>,
        pre_decompress: DepthwiseParams<S>,
        decompress_conv: FullConvParams<S>,
        decompress_bn: BatchNormParams<S>,
    },
}

/// Residual block: main branch plus a pointwise+BN skip connection, summed
/// and passed through the activation. Maps `(T, C)` to `(T, C)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualBlock<S: Scalar> {
    pub main: MainBranch<S>,
    pub skip_pw: PointwiseParams<S>,
    pub skip_bn: BatchNormParams<S>,
    pub activation: Activation,
}

impl<S: Scalar> ResidualBlock<S> {
    /// Runs the block; `name` prefixes the reported edge names
    /// (`{name}.u0.out`, `{name}.skip.out`, `{name}.out`, ...).
    pub fn forward_traced(&self, x: &Tensor<S>, name: &str, tap: Tap<S>) -> Result<Tensor<S>> {
        let main = match &self.main {
            MainBranch::Plain { units } => {
                let mut h = x.clone();
                for (u, unit) in units.iter().enumerate() {
                    let unit_name = format!("{name}.u{u}");
                    h = unit.forward_traced(&h, &unit_name, tap)?;
                    tap(&format!("{unit_name}.out"), &h);
                }
                h
            }
            MainBranch::Compressed {
                compress,
                units,
                pre_decompress,
                decompress_conv,
                decompress_bn,
            } => {
                let mut h = compress.forward_traced(x, &format!("{name}.compress"), tap)?;
                tap(&format!("{name}.compress.out"), &h);
                for (u, unit) in units.iter().enumerate() {
                    let unit_name = format!("{name}.u{u}");
                    h = unit.forward_traced(&h, &unit_name, tap)?;
                    tap(&format!("{unit_name}.out"), &h);
                }
                let pre = conv1d_depthwise(&h, pre_decompress)?;
                tap(&format!("{name}.pre.out"), &pre);
                let dec = conv1d_transposed_strided(&pre, decompress_conv)?;
                batchnorm_apply(&dec, decompress_bn)?
            }
        };
        tap(&format!("{name}.main.out"), &main);
        let skip = batchnorm_apply(&conv1d_pointwise(x, &self.skip_pw)?, &self.skip_bn)?;
        tap(&format!("{name}.skip.out"), &skip);
        let out = self.activation.apply(&main.add(&skip)?);
        tap(&format!("{name}.out"), &out);
        Ok(out)
    }

    pub fn forward(&self, x: &Tensor<S>) -> Result<Tensor<S>> {
        self.forward_traced(x, "b", &mut |_, _| {})
    }
}

/// Decoder head: pointwise down to the 5 output classes (A, C, G, T, blank)
/// followed by a per-step softmax.
pub fn decoder_block<S: Scalar>(x: &Tensor<S>, pw: &PointwiseParams<S>) -> Result<Tensor<S>> {
    if pw.c_out != crate::ctc::NUM_CLASSES {
        return Err(CoreError::InvalidSpec(format!(
            "decoder: pointwise must emit {} channels, got {}",
            crate::ctc::NUM_CLASSES,
            pw.c_out
        )));
    }
    Ok(softmax_channels(&conv1d_pointwise(x, pw)?))
}
