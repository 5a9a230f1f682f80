//! Post-training int8 quantization.
//!
//! The quantized path mimics an 8-bit integer accelerator: batch
//! normalization is folded into the preceding convolution, weights are
//! quantized per tensor with a symmetric scale, activations per tensor with
//! an affine scale/zero-point calibrated from sample inputs, convolutions
//! accumulate in `i32`, and ReLU6 is fused into the requantization step as
//! clipping of the accumulator result. Activation tensors following a fused
//! ReLU6 use the fixed range `[0, 6]`. The final softmax and CTC decoding
//! stay in real arithmetic.
//!
//! Requantization applies the real-valued multiplier
//! `scale_in · scale_w / scale_out` in floating point to the `i32`
//! accumulator; rounding is half away from zero everywhere.

use std::collections::HashMap;

use crate::activation::{softmax_channels, Activation, BatchNormParams};
use crate::block::{CBlock, ConvVariant, MainBranch};
use crate::conv::{
    depthwise_padding, window_padding, DepthwiseParams, FatPointwiseParams, FullConvParams,
    PointwiseParams,
};
use crate::ctc::{FrameProbs, NUM_CLASSES};
use crate::error::{CoreError, Result};
use crate::io::store::{StoredTensor, WeightStore};
use crate::model::{block_prefix, Model, ModelConfig, CHUNK_ALIGN};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Smallest representable scale; guards degenerate (constant) ranges.
pub const SCALE_FLOOR: f32 = 1e-8;

/// Memory budget of the target accelerator class, in bytes.
pub const MEMORY_BUDGET: u64 = 8 * (1 << 20);

/// Affine quantization parameters of one tensor:
/// `real = (q - zero_point) · scale`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantParams {
    pub scale: f32,
    pub zero_point: i32,
}

impl QuantParams {
    /// Fixed parameters of a tensor clipped to `[0, 6]` by a fused ReLU6.
    pub const RELU6: QuantParams = QuantParams { scale: 6.0 / 255.0, zero_point: -128 };

    /// Symmetric weight parameters: `scale = max|w| / 127`, zero point 0.
    pub fn symmetric(max_abs: f32) -> Self {
        Self { scale: (max_abs / 127.0).max(SCALE_FLOOR), zero_point: 0 }
    }

    /// Asymmetric activation parameters covering `[min, max]` (widened to
    /// include zero so that real 0.0 is exactly representable).
    pub fn from_range(min: f32, max: f32) -> Self {
        let lo = min.min(0.0);
        let hi = max.max(0.0);
        let scale = ((hi - lo) / 255.0).max(SCALE_FLOOR);
        let zero_point = (-128.0 - (lo / scale).round()) as i32;
        Self { scale, zero_point: zero_point.clamp(-128, 127) }
    }

    /// Quantizes one value: `clamp(round(v/scale) + zero_point, -128, 127)`.
    pub fn quantize(&self, v: f32) -> i8 {
        let q = (v / self.scale).round() as i64 + i64::from(self.zero_point);
        q.clamp(-128, 127) as i8
    }

    /// Dequantizes one value: `(q - zero_point) · scale`.
    pub fn dequantize(&self, q: i8) -> f32 {
        (i32::from(q) - self.zero_point) as f32 * self.scale
    }
}

/// Quantizes a whole tensor.
pub fn quantize_tensor(x: &[f32], q: QuantParams) -> Vec<i8> {
    x.iter().map(|&v| q.quantize(v)).collect()
}

/// Dequantizes a whole tensor.
pub fn dequantize_tensor(q8: &[i8], q: QuantParams) -> Vec<f32> {
    q8.iter().map(|&v| q.dequantize(v)).collect()
}

// ── Batch-norm folding ─────────────────────────────────────────────

fn bn_scale_shift<S: Scalar>(bn: &BatchNormParams<S>, c_out: usize) -> Result<(Vec<S>, Vec<S>)> {
    if bn.channels() != c_out {
        return Err(CoreError::ShapeMismatch(format!(
            "batchnorm folding: conv has {c_out} output channels, bn has {}",
            bn.channels()
        )));
    }
    Ok(bn.folded_scale_shift())
}

/// Folds `bn` into a full (or strided / transposed) convolution.
pub fn fold_batchnorm_full<S: Scalar>(
    p: &FullConvParams<S>,
    bn: &BatchNormParams<S>,
) -> Result<FullConvParams<S>> {
    let (scale, shift) = bn_scale_shift(bn, p.c_out)?;
    let mut out = p.clone();
    let per_out = p.depth * p.c_in;
    for j in 0..p.c_out {
        for w in &mut out.weights[j * per_out..(j + 1) * per_out] {
            *w = *w * scale[j];
        }
        out.bias[j] = p.bias[j] * scale[j] + shift[j];
    }
    Ok(out)
}

/// Folds `bn` into a pointwise convolution.
pub fn fold_batchnorm_pointwise<S: Scalar>(
    p: &PointwiseParams<S>,
    bn: &BatchNormParams<S>,
) -> Result<PointwiseParams<S>> {
    let (scale, shift) = bn_scale_shift(bn, p.c_out)?;
    let mut out = p.clone();
    for j in 0..p.c_out {
        for w in &mut out.weights[j * p.c_in..(j + 1) * p.c_in] {
            *w = *w * scale[j];
        }
        out.bias[j] = p.bias[j] * scale[j] + shift[j];
    }
    Ok(out)
}

/// Folds `bn` into a fat-pointwise convolution.
pub fn fold_batchnorm_fat<S: Scalar>(
    p: &FatPointwiseParams<S>,
    bn: &BatchNormParams<S>,
) -> Result<FatPointwiseParams<S>> {
    let (scale, shift) = bn_scale_shift(bn, p.c_out)?;
    let mut out = p.clone();
    let per_out = p.window * p.c_in;
    for j in 0..p.c_out {
        for w in &mut out.weights[j * per_out..(j + 1) * per_out] {
            *w = *w * scale[j];
        }
        out.bias[j] = p.bias[j] * scale[j] + shift[j];
    }
    Ok(out)
}

/// Folds `bn` into a depthwise convolution (channel `j` is output `j`).
pub fn fold_batchnorm_depthwise<S: Scalar>(
    p: &DepthwiseParams<S>,
    bn: &BatchNormParams<S>,
) -> Result<DepthwiseParams<S>> {
    let (scale, shift) = bn_scale_shift(bn, p.channels)?;
    let mut out = p.clone();
    for d in 0..p.depth {
        for j in 0..p.channels {
            out.weights[d * p.channels + j] = p.weights[d * p.channels + j] * scale[j];
        }
    }
    for j in 0..p.channels {
        out.bias[j] = p.bias[j] * scale[j] + shift[j];
    }
    Ok(out)
}

// ── Quantized layers ───────────────────────────────────────────────

/// Structural description of a quantized convolution stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QKind {
    /// Same-padded dense kernel (stride 1 unless the entry layer).
    Full { c_in: usize, c_out: usize, depth: usize, stride: usize },
    /// Non-overlapping strided compression (depth = stride).
    Strided { c_in: usize, c_out: usize, stride: usize },
    /// Transposed strided decompression (depth = stride).
    Transposed { c_in: usize, c_out: usize, stride: usize },
    Pointwise { c_in: usize, c_out: usize },
    Fat { c_in: usize, c_out: usize, window: usize },
    Depthwise { channels: usize, depth: usize, dilation: usize },
}

impl QKind {
    fn c_in(&self) -> usize {
        match *self {
            QKind::Full { c_in, .. }
            | QKind::Strided { c_in, .. }
            | QKind::Transposed { c_in, .. }
            | QKind::Pointwise { c_in, .. }
            | QKind::Fat { c_in, .. } => c_in,
            QKind::Depthwise { channels, .. } => channels,
        }
    }

    fn c_out(&self) -> usize {
        match *self {
            QKind::Full { c_out, .. }
            | QKind::Strided { c_out, .. }
            | QKind::Transposed { c_out, .. }
            | QKind::Pointwise { c_out, .. }
            | QKind::Fat { c_out, .. } => c_out,
            QKind::Depthwise { channels, .. } => channels,
        }
    }

    fn weight_dims(&self) -> Vec<usize> {
        match *self {
            QKind::Full { c_in, c_out, depth, .. } => vec![c_out, depth, c_in],
            QKind::Strided { c_in, c_out, stride } | QKind::Transposed { c_in, c_out, stride } => {
                vec![c_out, stride, c_in]
            }
            QKind::Pointwise { c_in, c_out } => vec![c_out, c_in],
            QKind::Fat { c_in, c_out, window } => vec![c_out, window, c_in],
            QKind::Depthwise { channels, depth, .. } => vec![depth, channels],
        }
    }

}

/// One quantized convolution: int8 weights, int32 bias in the accumulator
/// scale `scale_in · scale_w`, input/output activation parameters, and
/// whether a ReLU6 is fused into its requantization.
#[derive(Clone, Debug, PartialEq)]
pub struct QConv {
    pub name: String,
    pub kind: QKind,
    pub weights: Vec<i8>,
    pub weight_q: QuantParams,
    pub bias: Vec<i32>,
    pub in_q: QuantParams,
    pub out_q: QuantParams,
    pub relu6_fused: bool,
}

impl QConv {
    pub fn weight_bytes(&self) -> u64 {
        self.weights.len() as u64
    }

    pub fn bias_bytes(&self) -> u64 {
        self.bias.len() as u64 * 4
    }
}

/// A main-branch unit: one or two convolution stages executed in sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct QUnit {
    pub stages: Vec<QConv>,
}

/// A quantized residual block.
#[derive(Clone, Debug, PartialEq)]
pub struct QResidualBlock {
    pub main: Vec<QUnit>,
    pub skip: QConv,
    /// Parameters of the post-merge (ReLU6-clipped) output tensor.
    pub out_q: QuantParams,
}

/// The whole quantized network.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantizedModel {
    pub config: ModelConfig,
    pub input_q: QuantParams,
    pub c1: QUnit,
    pub blocks: Vec<QResidualBlock>,
    pub c2: QUnit,
    pub c3: QUnit,
    pub decoder: QConv,
}

// ── Calibration ────────────────────────────────────────────────────

/// Observed `[min, max]` per activation edge, merged over calibration runs.
#[derive(Clone, Debug, Default)]
pub struct ActivationRanges {
    ranges: HashMap<String, (f32, f32)>,
}

impl ActivationRanges {
    pub fn get(&self, name: &str) -> Result<(f32, f32)> {
        self.ranges.get(name).copied().ok_or_else(|| {
            CoreError::InvalidSpec(format!("calibration did not cover edge `{name}`"))
        })
    }

    fn observe(&mut self, name: &str, tensor: &Tensor<f32>) {
        let entry = self.ranges.entry(name.to_string()).or_insert((f32::INFINITY, f32::NEG_INFINITY));
        for &v in tensor.data() {
            entry.0 = entry.0.min(v);
            entry.1 = entry.1.max(v);
        }
    }

    fn params(&self, name: &str) -> Result<QuantParams> {
        let (min, max) = self.get(name)?;
        Ok(QuantParams::from_range(min, max))
    }
}

/// Runs the float model over the calibration inputs, recording the min/max
/// of every activation edge. At least one input is required.
pub fn calibrate(model: &Model<f32>, inputs: &[Tensor<f32>]) -> Result<ActivationRanges> {
    if inputs.is_empty() {
        return Err(CoreError::InvalidSpec("calibration requires at least one input".into()));
    }
    let mut ranges = ActivationRanges::default();
    for x in inputs {
        model.run_traced(x, &mut |name, t| ranges.observe(name, t))?;
    }
    Ok(ranges)
}

// ── Model quantization ─────────────────────────────────────────────

struct Quantizer<'a> {
    ranges: &'a ActivationRanges,
}

impl Quantizer<'_> {
    /// Output params of an edge: fixed `[0, 6]` after a fused ReLU6,
    /// calibrated otherwise.
    fn edge(&self, name: &str, relu6: bool) -> Result<QuantParams> {
        if relu6 {
            Ok(QuantParams::RELU6)
        } else {
            self.ranges.params(name)
        }
    }

    fn qconv(
        &self,
        name: &str,
        kind: QKind,
        weights: &[f32],
        bias: &[f32],
        in_q: QuantParams,
        out_q: QuantParams,
        relu6_fused: bool,
    ) -> QConv {
        let max_abs = weights.iter().fold(0.0f32, |m, &w| m.max(w.abs()));
        let weight_q = QuantParams::symmetric(max_abs);
        let qw = quantize_tensor(weights, weight_q);
        let acc_scale = f64::from(in_q.scale) * f64::from(weight_q.scale);
        let qb: Vec<i32> = bias
            .iter()
            .map(|&b| {
                (f64::from(b) / acc_scale)
                    .round()
                    .clamp(f64::from(i32::MIN), f64::from(i32::MAX)) as i32
            })
            .collect();
        QConv {
            name: name.to_string(),
            kind,
            weights: qw,
            weight_q,
            bias: qb,
            in_q,
            out_q,
            relu6_fused,
        }
    }
}

fn full_kind(p: &FullConvParams<f32>, strided: bool, transposed: bool) -> QKind {
    if transposed {
        QKind::Transposed { c_in: p.c_in, c_out: p.c_out, stride: p.stride }
    } else if strided {
        QKind::Strided { c_in: p.c_in, c_out: p.c_out, stride: p.stride }
    } else {
        QKind::Full { c_in: p.c_in, c_out: p.c_out, depth: p.depth, stride: p.stride }
    }
}

/// Quantizes a conv+BN+activation unit into its stage sequence. `out_edge`
/// names the tensor the unit produces.
fn quantize_unit(
    q: &Quantizer,
    name: &str,
    unit: &CBlock<f32>,
    in_q: QuantParams,
    out_edge: &str,
) -> Result<QUnit> {
    let relu6 = unit.activation == Some(Activation::Relu6);
    let out_q = q.edge(out_edge, relu6)?;
    let stages = match &unit.conv {
        ConvVariant::Full(p) => {
            let folded = fold_batchnorm_full(p, &unit.bn)?;
            vec![q.qconv(
                &format!("{name}.conv"),
                full_kind(&folded, false, false),
                &folded.weights,
                &folded.bias,
                in_q,
                out_q,
                relu6,
            )]
        }
        ConvVariant::Strided(p) => {
            let folded = fold_batchnorm_full(p, &unit.bn)?;
            vec![q.qconv(
                &format!("{name}.conv"),
                full_kind(&folded, true, false),
                &folded.weights,
                &folded.bias,
                in_q,
                out_q,
                relu6,
            )]
        }
        ConvVariant::Pointwise(p) => {
            let folded = fold_batchnorm_pointwise(p, &unit.bn)?;
            vec![q.qconv(
                &format!("{name}.pw"),
                QKind::Pointwise { c_in: folded.c_in, c_out: folded.c_out },
                &folded.weights,
                &folded.bias,
                in_q,
                out_q,
                relu6,
            )]
        }
        ConvVariant::Separable { dw, pw } => {
            let mid_q = q.edge(&format!("{name}.mid"), false)?;
            let folded = fold_batchnorm_pointwise(pw, &unit.bn)?;
            vec![
                q.qconv(
                    &format!("{name}.dw"),
                    QKind::Depthwise { channels: dw.channels, depth: dw.depth, dilation: dw.dilation },
                    &dw.weights,
                    &dw.bias,
                    in_q,
                    mid_q,
                    false,
                ),
                q.qconv(
                    &format!("{name}.pw"),
                    QKind::Pointwise { c_in: folded.c_in, c_out: folded.c_out },
                    &folded.weights,
                    &folded.bias,
                    mid_q,
                    out_q,
                    relu6,
                ),
            ]
        }
        ConvVariant::KBlueprint { fat, dw } => {
            let mid_q = q.edge(&format!("{name}.mid"), false)?;
            let folded = fold_batchnorm_depthwise(dw, &unit.bn)?;
            vec![
                q.qconv(
                    &format!("{name}.fat"),
                    QKind::Fat { c_in: fat.c_in, c_out: fat.c_out, window: fat.window },
                    &fat.weights,
                    &fat.bias,
                    in_q,
                    mid_q,
                    false,
                ),
                q.qconv(
                    &format!("{name}.dw"),
                    QKind::Depthwise {
                        channels: folded.channels,
                        depth: folded.depth,
                        dilation: folded.dilation,
                    },
                    &folded.weights,
                    &folded.bias,
                    mid_q,
                    out_q,
                    relu6,
                ),
            ]
        }
    };
    Ok(QUnit { stages })
}

/// Folds batch normalization throughout `model`, quantizes every layer, and
/// wires activation parameters from the calibrated ranges. The model must
/// use ReLU6 (the int8 path has no Swish kernel).
pub fn quantize_model(model: &Model<f32>, ranges: &ActivationRanges) -> Result<QuantizedModel> {
    if model.config.activation != Activation::Relu6 {
        return Err(CoreError::InvalidSpec(
            "int8 quantization supports only the relu6 activation".into(),
        ));
    }
    let q = Quantizer { ranges };
    let input_q = ranges.params("input")?;

    let c1 = quantize_unit(&q, "c1", &model.c1, input_q, "c1.out")?;
    let mut cur = c1.stages.last().expect("c1 has a stage").out_q;

    let mut blocks = Vec::with_capacity(model.blocks.len());
    for (i, block) in model.blocks.iter().enumerate() {
        let p = block_prefix(i);
        let block_in = cur;
        let mut main = Vec::new();
        match &block.main {
            MainBranch::Plain { units } => {
                let last = units.len() - 1;
                let mut h = block_in;
                for (u, unit) in units.iter().enumerate() {
                    let out_edge = if u == last {
                        format!("{p}.main.out")
                    } else {
                        format!("{p}.u{u}.out")
                    };
                    let qu = quantize_unit(&q, &format!("{p}.u{u}"), unit, h, &out_edge)?;
                    h = qu.stages.last().expect("unit has stages").out_q;
                    main.push(qu);
                }
            }
            MainBranch::Compressed {
                compress,
                units,
                pre_decompress,
                decompress_conv,
                decompress_bn,
            } => {
                let qc = quantize_unit(&q, &format!("{p}.compress"), compress, block_in, &format!("{p}.compress.out"))?;
                let mut h = qc.stages.last().expect("stage").out_q;
                main.push(qc);
                for (u, unit) in units.iter().enumerate() {
                    let qu = quantize_unit(&q, &format!("{p}.u{u}"), unit, h, &format!("{p}.u{u}.out"))?;
                    h = qu.stages.last().expect("stage").out_q;
                    main.push(qu);
                }
                let pre_q = q.edge(&format!("{p}.pre.out"), false)?;
                main.push(QUnit {
                    stages: vec![q.qconv(
                        &format!("{p}.pre.dw"),
                        QKind::Depthwise {
                            channels: pre_decompress.channels,
                            depth: pre_decompress.depth,
                            dilation: pre_decompress.dilation,
                        },
                        &pre_decompress.weights,
                        &pre_decompress.bias,
                        h,
                        pre_q,
                        false,
                    )],
                });
                let folded = fold_batchnorm_full(decompress_conv, decompress_bn)?;
                let main_q = q.edge(&format!("{p}.main.out"), false)?;
                main.push(QUnit {
                    stages: vec![q.qconv(
                        &format!("{p}.decompress.conv"),
                        full_kind(&folded, false, true),
                        &folded.weights,
                        &folded.bias,
                        pre_q,
                        main_q,
                        false,
                    )],
                });
            }
        }
        let folded_skip = fold_batchnorm_pointwise(&block.skip_pw, &block.skip_bn)?;
        let skip = q.qconv(
            &format!("{p}.skip.pw"),
            QKind::Pointwise { c_in: folded_skip.c_in, c_out: folded_skip.c_out },
            &folded_skip.weights,
            &folded_skip.bias,
            block_in,
            q.edge(&format!("{p}.skip.out"), false)?,
            false,
        );
        let out_q = q.edge(&format!("{p}.out"), true)?;
        cur = out_q;
        blocks.push(QResidualBlock { main, skip, out_q });
    }

    let c2 = quantize_unit(&q, "c2", &model.c2, cur, "c2.out")?;
    cur = c2.stages.last().expect("stage").out_q;
    let c3 = quantize_unit(&q, "c3", &model.c3, cur, "c3.out")?;
    cur = c3.stages.last().expect("stage").out_q;
    let decoder = q.qconv(
        "decoder.pw",
        QKind::Pointwise { c_in: model.decoder.c_in, c_out: model.decoder.c_out },
        &model.decoder.weights,
        &model.decoder.bias,
        cur,
        q.edge("decoder.logits", false)?,
        false,
    );

    Ok(QuantizedModel { config: model.config.clone(), input_q, c1, blocks, c2, c3, decoder })
}

/// Calibrates on `inputs` and quantizes in one step.
pub fn post_training_quantize(
    model: &Model<f32>,
    inputs: &[Tensor<f32>],
) -> Result<QuantizedModel> {
    let ranges = calibrate(model, inputs)?;
    quantize_model(model, &ranges)
}

// ── Int8 execution ─────────────────────────────────────────────────

struct QTensor {
    data: Vec<i8>,
    t: usize,
    c: usize,
}

impl QConv {
    /// Requantizes one accumulator value into the output domain, applying
    /// the fused ReLU6 clip when present.
    fn requantize(&self, acc: i32) -> i8 {
        let multiplier =
            f64::from(self.in_q.scale) * f64::from(self.weight_q.scale) / f64::from(self.out_q.scale);
        let q = (f64::from(acc) * multiplier).round() as i64 + i64::from(self.out_q.zero_point);
        let (lo, hi) = if self.relu6_fused {
            let zp = i64::from(self.out_q.zero_point);
            let six = (6.0 / f64::from(self.out_q.scale)).round() as i64 + zp;
            (zp.max(-128), six.min(127))
        } else {
            (-128, 127)
        };
        q.clamp(lo, hi) as i8
    }

    fn run(&self, x: &QTensor) -> Result<QTensor> {
        if x.c != self.kind.c_in() {
            return Err(CoreError::ShapeMismatch(format!(
                "quantized `{}`: input has {} channels, expected {}",
                self.name,
                x.c,
                self.kind.c_in()
            )));
        }
        let zp_in = self.in_q.zero_point;
        let c_in = x.c;
        let c_out = self.kind.c_out();
        // zero-padded reads contribute (zp - zp) = 0, so skipping them is exact
        let sample = |t: isize, i: usize| -> i32 {
            if t < 0 || t as usize >= x.t {
                0
            } else {
                i32::from(x.data[t as usize * c_in + i]) - zp_in
            }
        };
        let mut out;
        let t_out;
        match self.kind {
            QKind::Full { depth, stride, .. } => {
                if x.t % stride != 0 {
                    return Err(CoreError::InvalidSpec(format!(
                        "quantized `{}`: T={} not divisible by stride {stride}",
                        self.name, x.t
                    )));
                }
                t_out = x.t / stride;
                let pad = (depth / 2) as isize;
                out = vec![0i8; t_out * c_out];
                for t in 0..t_out {
                    for j in 0..c_out {
                        let mut acc = self.bias[j];
                        for d in 0..depth {
                            for i in 0..c_in {
                                let pos = (t * stride + d) as isize - pad;
                                acc += sample(pos, i)
                                    * i32::from(self.weights[(j * depth + d) * c_in + i]);
                            }
                        }
                        out[t * c_out + j] = self.requantize(acc);
                    }
                }
            }
            QKind::Strided { stride, .. } => {
                if x.t % stride != 0 {
                    return Err(CoreError::InvalidSpec(format!(
                        "quantized `{}`: T={} not divisible by stride {stride}",
                        self.name, x.t
                    )));
                }
                t_out = x.t / stride;
                out = vec![0i8; t_out * c_out];
                for t in 0..t_out {
                    for j in 0..c_out {
                        let mut acc = self.bias[j];
                        for d in 0..stride {
                            for i in 0..c_in {
                                acc += sample((t * stride + d) as isize, i)
                                    * i32::from(self.weights[(j * stride + d) * c_in + i]);
                            }
                        }
                        out[t * c_out + j] = self.requantize(acc);
                    }
                }
            }
            QKind::Transposed { stride, .. } => {
                t_out = x.t * stride;
                out = vec![0i8; t_out * c_out];
                for t in 0..x.t {
                    for d in 0..stride {
                        for j in 0..c_out {
                            let mut acc = self.bias[j];
                            for i in 0..c_in {
                                acc += sample(t as isize, i)
                                    * i32::from(self.weights[(j * stride + d) * c_in + i]);
                            }
                            out[(t * stride + d) * c_out + j] = self.requantize(acc);
                        }
                    }
                }
            }
            QKind::Pointwise { .. } => {
                t_out = x.t;
                out = vec![0i8; t_out * c_out];
                for t in 0..t_out {
                    for j in 0..c_out {
                        let mut acc = self.bias[j];
                        for i in 0..c_in {
                            acc += sample(t as isize, i) * i32::from(self.weights[j * c_in + i]);
                        }
                        out[t * c_out + j] = self.requantize(acc);
                    }
                }
            }
            QKind::Fat { window, .. } => {
                t_out = x.t;
                let (left, _) = window_padding(window);
                out = vec![0i8; t_out * c_out];
                for t in 0..t_out {
                    for j in 0..c_out {
                        let mut acc = self.bias[j];
                        for d in 0..window {
                            for i in 0..c_in {
                                let pos = t as isize + d as isize - left as isize;
                                acc += sample(pos, i)
                                    * i32::from(self.weights[(j * window + d) * c_in + i]);
                            }
                        }
                        out[t * c_out + j] = self.requantize(acc);
                    }
                }
            }
            QKind::Depthwise { depth, dilation, .. } => {
                t_out = x.t;
                let (left, _) = depthwise_padding(depth, dilation);
                out = vec![0i8; t_out * c_out];
                for t in 0..t_out {
                    for j in 0..c_out {
                        let mut acc = self.bias[j];
                        for d in 0..depth {
                            let pos = t as isize + (d * dilation) as isize - left as isize;
                            acc += sample(pos, j) * i32::from(self.weights[d * c_out + j]);
                        }
                        out[t * c_out + j] = self.requantize(acc);
                    }
                }
            }
        }
        Ok(QTensor { data: out, t: t_out, c: c_out })
    }
}

/// Requantized elementwise add of the two residual branches, with the merge
/// ReLU6 applied as clipping in the output domain.
fn requant_add(
    a: &QTensor,
    qa: QuantParams,
    b: &QTensor,
    qb: QuantParams,
    out_q: QuantParams,
) -> Result<QTensor> {
    if a.t != b.t || a.c != b.c {
        return Err(CoreError::ShapeMismatch(format!(
            "quantized merge: ({}, {}) vs ({}, {})",
            a.t, a.c, b.t, b.c
        )));
    }
    let zp = i64::from(out_q.zero_point);
    let six = (6.0 / f64::from(out_q.scale)).round() as i64 + zp;
    let (lo, hi) = (zp.max(-128), six.min(127));
    let data = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(&va, &vb)| {
            let real = f64::from(qa.dequantize(va)) + f64::from(qb.dequantize(vb));
            let q = (real / f64::from(out_q.scale)).round() as i64 + zp;
            q.clamp(lo, hi) as i8
        })
        .collect();
    Ok(QTensor { data, t: a.t, c: a.c })
}

impl QUnit {
    fn run(&self, x: QTensor) -> Result<QTensor> {
        let mut h = x;
        for stage in &self.stages {
            h = stage.run(&h)?;
        }
        Ok(h)
    }

    fn out_q(&self) -> QuantParams {
        self.stages.last().expect("unit has stages").out_q
    }
}

impl QuantizedModel {
    /// Full int8 forward pass: int8 convolutions with fused clipping, then
    /// float softmax over the dequantized logits.
    pub fn run(&self, x: &Tensor<f32>) -> Result<FrameProbs<f32>> {
        if x.channels() != 1 {
            return Err(CoreError::ShapeMismatch(format!(
                "model input must have 1 channel, got {}",
                x.channels()
            )));
        }
        if x.time() % CHUNK_ALIGN != 0 {
            return Err(CoreError::InvalidSpec(format!(
                "model input length {} must be a multiple of {CHUNK_ALIGN}",
                x.time()
            )));
        }
        let mut h = QTensor {
            data: quantize_tensor(x.data(), self.input_q),
            t: x.time(),
            c: 1,
        };
        h = self.c1.run(h)?;
        let mut cur_q = self.c1.out_q();
        for block in &self.blocks {
            let block_in = h;
            let block_in_q = cur_q;
            let mut m = QTensor { data: block_in.data.clone(), t: block_in.t, c: block_in.c };
            let mut mq = block_in_q;
            for unit in &block.main {
                m = unit.run(m)?;
                mq = unit.out_q();
            }
            let s = block.skip.run(&block_in)?;
            h = requant_add(&m, mq, &s, block.skip.out_q, block.out_q)?;
            cur_q = block.out_q;
        }
        h = self.c2.run(h)?;
        h = self.c3.run(h)?;
        let logits = self.decoder.run(&h)?;
        let real = dequantize_tensor(&logits.data, self.decoder.out_q);
        let logits_t = Tensor::from_vec(logits.t, logits.c, real)?;
        FrameProbs::new(softmax_channels(&logits_t))
    }

    fn all_qconvs(&self) -> Vec<&QConv> {
        let mut out = Vec::new();
        for stage in &self.c1.stages {
            out.push(stage);
        }
        for block in &self.blocks {
            for unit in &block.main {
                for stage in &unit.stages {
                    out.push(stage);
                }
            }
            out.push(&block.skip);
        }
        for stage in &self.c2.stages {
            out.push(stage);
        }
        for stage in &self.c3.stages {
            out.push(stage);
        }
        out.push(&self.decoder);
        out
    }

    /// Serializes int8 weights, int32 biases and every activation edge's
    /// quantization parameters (as zero-size `q.*` marker tensors).
    pub fn to_store(&self) -> Result<WeightStore> {
        let mut store = WeightStore::new();
        store.insert("q.input", StoredTensor::quant_marker(self.input_q))?;
        for conv in self.all_qconvs() {
            store.insert(
                format!("{}.weight", conv.name),
                StoredTensor::i8(conv.kind.weight_dims(), conv.weights.clone(), conv.weight_q),
            )?;
            store.insert(
                format!("{}.bias", conv.name),
                StoredTensor::i32(vec![conv.bias.len()], conv.bias.clone()),
            )?;
            store.insert(format!("q.{}", conv.name), StoredTensor::quant_marker(conv.out_q))?;
        }
        for (i, block) in self.blocks.iter().enumerate() {
            store.insert(
                format!("q.{}.out", block_prefix(i)),
                StoredTensor::quant_marker(block.out_q),
            )?;
        }
        Ok(store)
    }

    /// Rebuilds a quantized model from a store written by [`Self::to_store`].
    pub fn from_store(config: ModelConfig, store: &WeightStore) -> Result<Self> {
        config.validate()?;
        if config.activation != Activation::Relu6 {
            return Err(CoreError::InvalidSpec(
                "int8 quantization supports only the relu6 activation".into(),
            ));
        }
        let input_q = store.quant_params("q.input")?;

        let read = |name: &str, kind: QKind, in_q: QuantParams, relu6: bool| -> Result<QConv> {
            let dims = kind.weight_dims();
            let (weights, weight_q) = store.i8_tensor(&format!("{name}.weight"), &dims)?;
            let bias = store.i32_tensor(&format!("{name}.bias"), &[kind.c_out()])?;
            let out_q = store.quant_params(&format!("q.{name}"))?;
            Ok(QConv {
                name: name.to_string(),
                kind,
                weights,
                weight_q,
                bias,
                in_q,
                out_q,
                relu6_fused: relu6,
            })
        };

        let c = config.c1.channels;
        let c1_conv = read(
            "c1.conv",
            QKind::Full { c_in: 1, c_out: c, depth: config.c1.depth, stride: config.c1.stride },
            input_q,
            true,
        )?;
        let mut cur = c1_conv.out_q;
        let c1 = QUnit { stages: vec![c1_conv] };

        // two-stage units share this helper
        let read_unit = |name: &str,
                         spec: &crate::model::ResidualBlockSpec,
                         channels: usize,
                         in_q: QuantParams,
                         relu6: bool|
         -> Result<QUnit> {
            use crate::model::ConvOrder;
            let stages = match spec.order {
                ConvOrder::DepthwiseFirst => {
                    let s1 = read(
                        &format!("{name}.dw"),
                        QKind::Depthwise { channels, depth: spec.depth, dilation: 1 },
                        in_q,
                        false,
                    )?;
                    let s2 = read(
                        &format!("{name}.pw"),
                        QKind::Pointwise { c_in: channels, c_out: channels },
                        s1.out_q,
                        relu6,
                    )?;
                    vec![s1, s2]
                }
                ConvOrder::PointwiseFirst => {
                    let s1 = read(
                        &format!("{name}.fat"),
                        QKind::Fat { c_in: channels, c_out: channels, window: spec.factor },
                        in_q,
                        false,
                    )?;
                    let s2 = read(
                        &format!("{name}.dw"),
                        QKind::Depthwise {
                            channels,
                            depth: spec.depthwise_depth(),
                            dilation: spec.factor,
                        },
                        s1.out_q,
                        relu6,
                    )?;
                    vec![s1, s2]
                }
            };
            Ok(QUnit { stages })
        };

        let mut blocks = Vec::with_capacity(config.blocks.len());
        for (i, spec) in config.blocks.iter().enumerate() {
            let p = block_prefix(i);
            let block_in = cur;
            let mut main = Vec::new();
            match spec.compression {
                Some(comp) => {
                    let inner_c = spec.inner_channels();
                    let qc = read(
                        &format!("{p}.compress.conv"),
                        QKind::Strided { c_in: spec.channels, c_out: inner_c, stride: comp.time },
                        block_in,
                        true,
                    )?;
                    let mut h = qc.out_q;
                    main.push(QUnit { stages: vec![qc] });
                    for u in 0..spec.inner_units() {
                        let qu = read_unit(&format!("{p}.u{u}"), spec, inner_c, h, true)?;
                        h = qu.out_q();
                        main.push(qu);
                    }
                    let pre = read(
                        &format!("{p}.pre.dw"),
                        QKind::Depthwise {
                            channels: inner_c,
                            depth: spec.depthwise_depth(),
                            dilation: 1,
                        },
                        h,
                        false,
                    )?;
                    h = pre.out_q;
                    main.push(QUnit { stages: vec![pre] });
                    let dec = read(
                        &format!("{p}.decompress.conv"),
                        QKind::Transposed { c_in: inner_c, c_out: spec.channels, stride: comp.time },
                        h,
                        false,
                    )?;
                    main.push(QUnit { stages: vec![dec] });
                }
                None => {
                    let total = spec.inner_units();
                    let mut h = block_in;
                    for u in 0..total {
                        let qu =
                            read_unit(&format!("{p}.u{u}"), spec, spec.channels, h, u + 1 != total)?;
                        h = qu.out_q();
                        main.push(qu);
                    }
                }
            }
            let skip = read(
                &format!("{p}.skip.pw"),
                QKind::Pointwise { c_in: spec.channels, c_out: spec.channels },
                block_in,
                false,
            )?;
            let out_q = store.quant_params(&format!("q.{p}.out"))?;
            cur = out_q;
            blocks.push(QResidualBlock { main, skip, out_q });
        }

        let c2_dw = read(
            "c2.dw",
            QKind::Depthwise { channels: config.c1.channels, depth: config.c2.depth, dilation: 1 },
            cur,
            false,
        )?;
        let c2_pw = read(
            "c2.pw",
            QKind::Pointwise { c_in: config.c1.channels, c_out: config.c2.channels },
            c2_dw.out_q,
            true,
        )?;
        cur = c2_pw.out_q;
        let c2 = QUnit { stages: vec![c2_dw, c2_pw] };
        let c3_conv = read(
            "c3.conv",
            QKind::Full { c_in: config.c2.channels, c_out: config.c3.channels, depth: config.c3.depth, stride: 1 },
            cur,
            true,
        )?;
        cur = c3_conv.out_q;
        let c3 = QUnit { stages: vec![c3_conv] };
        let decoder = read(
            "decoder.pw",
            QKind::Pointwise { c_in: config.c3.channels, c_out: NUM_CLASSES },
            cur,
            false,
        )?;

        Ok(Self { config, input_q, c1, blocks, c2, c3, decoder })
    }
}

// ── Footprint ──────────────────────────────────────────────────────

/// Memory footprint of a quantized model at its configured chunk geometry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FootprintReport {
    pub weight_bytes: u64,
    pub bias_bytes: u64,
    pub peak_activation_bytes: u64,
    pub total_bytes: u64,
    pub over_budget: bool,
}

/// Sums weight and bias bytes over a set of quantized convolutions.
pub fn weight_bias_bytes<'a>(convs: impl IntoIterator<Item = &'a QConv>) -> (u64, u64) {
    let mut w = 0;
    let mut b = 0;
    for conv in convs {
        w += conv.weight_bytes();
        b += conv.bias_bytes();
    }
    (w, b)
}

/// Total int8 weight bytes, int32 bias bytes, and the peak of concurrently
/// live int8 activation bytes (input + output of a stage, plus the held
/// residual input inside a block), times the configured batch. Flagged when
/// the total exceeds the 8 MiB budget.
pub fn footprint(qm: &QuantizedModel) -> FootprintReport {
    let (weight_bytes, bias_bytes) = weight_bias_bytes(qm.all_qconvs());

    let cfg = &qm.config;
    let mut peak: u64 = 0;
    let mut live = |held: u64, input: u64, output: u64| {
        peak = peak.max(held + input + output);
    };
    let t0 = cfg.chunk_len as u64;
    let t1 = (cfg.chunk_len / cfg.c1.stride) as u64;
    let c = cfg.c1.channels as u64;
    live(0, t0, t1 * c);
    for spec in &cfg.blocks {
        let held = t1 * c;
        match spec.compression {
            Some(comp) => {
                let tc = t1 / comp.time as u64;
                let ci = spec.inner_channels() as u64;
                live(held, t1 * c, tc * ci);
                live(held, tc * ci, tc * ci); // inner units and pre-decompress
                live(held, tc * ci, t1 * c); // decompress
            }
            None => live(held, t1 * c, t1 * c),
        }
        // merge: main + skip + output
        live(t1 * c, t1 * c, t1 * c);
    }
    live(0, t1 * c, t1 * (cfg.c2.channels as u64));
    live(0, t1 * (cfg.c2.channels as u64), t1 * (cfg.c3.channels as u64));
    live(0, t1 * (cfg.c3.channels as u64), t1 * NUM_CLASSES as u64);
    let peak_activation_bytes = peak * cfg.batch as u64;

    let total_bytes = weight_bytes + bias_bytes + peak_activation_bytes;
    FootprintReport {
        weight_bytes,
        bias_bytes,
        peak_activation_bytes,
        total_bytes,
        over_budget: total_bytes > MEMORY_BUDGET,
    }
}
