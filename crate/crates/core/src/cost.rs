//! Closed-form cost accounting: parameters, multiply-accumulates, memory
//! traffic and receptive fields per layer and per model.
//!
//! Conventions: bias additions count as parameters but not as MACs (only
//! multiplications are counted); batch normalization at inference is one
//! multiply per element and 4 per-channel tensors; softmax contributes no
//! MACs. The memory model charges each tensor one read and one write per
//! layer (no fusion) plus one read of the weights — deliberately an upper
//! bound. Multiply counts match the instrumented counters of the
//! [`crate::reference`] implementations exactly.

use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::model::{ModelConfig, ResidualBlockSpec};

/// Per-layer cost entry. `receptive_field` is in the layer's own input time
/// units; `mem_*` assume `bytes_per_value` = 4 unless produced by
/// [`memory_traffic`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LayerCost {
    pub name: String,
    pub params: u64,
    pub macs: u64,
    pub mem_read: u64,
    pub mem_write: u64,
    pub receptive_field: u64,
}

/// Whole-model cost report: per-layer breakdown plus totals and the
/// composed receptive field in input samples.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CostReport {
    pub layers: Vec<LayerCost>,
    pub params: u64,
    pub macs: u64,
    pub mem_read: u64,
    pub mem_write: u64,
    pub receptive_field: u64,
}

impl CostReport {
    fn from_layers(layers: Vec<LayerCost>, receptive_field: u64) -> Self {
        let params = layers.iter().map(|l| l.params).sum();
        let macs = layers.iter().map(|l| l.macs).sum();
        let mem_read = layers.iter().map(|l| l.mem_read).sum();
        let mem_write = layers.iter().map(|l| l.mem_write).sum();
        Self { layers, params, macs, mem_read, mem_write, receptive_field }
    }
}

/// Structural description of a single convolution layer, sufficient for all
/// cost formulas.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerSpec {
    /// Same-padded dense kernel; `stride` divides the input length.
    Full { c_in: u64, c_out: u64, depth: u64, stride: u64 },
    Pointwise { c_in: u64, c_out: u64 },
    FatPointwise { c_in: u64, c_out: u64, window: u64 },
    Depthwise { channels: u64, depth: u64, dilation: u64 },
    /// Depth-to-space compression: depth = stride, no padding.
    Compression { c_in: u64, c_out: u64, stride: u64 },
    /// Transposed strided decompression.
    Transposed { c_in: u64, c_out: u64, stride: u64 },
    /// Inference batch normalization (scale + shift per channel).
    BatchNorm { channels: u64 },
}

impl LayerSpec {
    pub fn c_in(&self) -> u64 {
        match *self {
            LayerSpec::Full { c_in, .. }
            | LayerSpec::Pointwise { c_in, .. }
            | LayerSpec::FatPointwise { c_in, .. }
            | LayerSpec::Compression { c_in, .. }
            | LayerSpec::Transposed { c_in, .. } => c_in,
            LayerSpec::Depthwise { channels, .. } | LayerSpec::BatchNorm { channels } => channels,
        }
    }

    pub fn c_out(&self) -> u64 {
        match *self {
            LayerSpec::Full { c_out, .. }
            | LayerSpec::Pointwise { c_out, .. }
            | LayerSpec::FatPointwise { c_out, .. }
            | LayerSpec::Compression { c_out, .. }
            | LayerSpec::Transposed { c_out, .. } => c_out,
            LayerSpec::Depthwise { channels, .. } | LayerSpec::BatchNorm { channels } => channels,
        }
    }

    /// Output time length for a given input time length.
    pub fn t_out(&self, t_in: u64) -> u64 {
        match *self {
            LayerSpec::Full { stride, .. } | LayerSpec::Compression { stride, .. } => t_in / stride,
            LayerSpec::Transposed { stride, .. } => t_in * stride,
            _ => t_in,
        }
    }

    /// Weight count excluding biases.
    pub fn weight_count(&self) -> u64 {
        match *self {
            LayerSpec::Full { c_in, c_out, depth, .. } => c_out * depth * c_in,
            LayerSpec::Pointwise { c_in, c_out } => c_out * c_in,
            LayerSpec::FatPointwise { c_in, c_out, window } => c_out * window * c_in,
            LayerSpec::Depthwise { channels, depth, .. } => depth * channels,
            LayerSpec::Compression { c_in, c_out, stride }
            | LayerSpec::Transposed { c_in, c_out, stride } => c_out * stride * c_in,
            LayerSpec::BatchNorm { channels } => 4 * channels,
        }
    }

    /// Parameter count including biases.
    pub fn params(&self) -> u64 {
        match *self {
            LayerSpec::BatchNorm { channels } => 4 * channels,
            _ => self.weight_count() + self.c_out(),
        }
    }

    /// Multiplications over an input of time length `t_in`.
    pub fn macs(&self, t_in: u64) -> u64 {
        match *self {
            LayerSpec::Full { c_in, c_out, depth, stride } => (t_in / stride) * c_out * depth * c_in,
            LayerSpec::Pointwise { c_in, c_out } => t_in * c_out * c_in,
            LayerSpec::FatPointwise { c_in, c_out, window } => t_in * c_out * window * c_in,
            LayerSpec::Depthwise { channels, depth, .. } => t_in * depth * channels,
            LayerSpec::Compression { c_in, c_out, stride } => (t_in / stride) * c_out * stride * c_in,
            LayerSpec::Transposed { c_in, c_out, stride } => t_in * stride * c_out * c_in,
            LayerSpec::BatchNorm { channels } => t_in * channels,
        }
    }

    /// Receptive field in the layer's own input time units.
    pub fn receptive_field(&self) -> u64 {
        match *self {
            LayerSpec::Full { depth, .. } => depth,
            LayerSpec::Pointwise { .. } | LayerSpec::BatchNorm { .. } => 1,
            LayerSpec::FatPointwise { window, .. } => window,
            LayerSpec::Depthwise { depth, dilation, .. } => dilation * (depth - 1) + 1,
            LayerSpec::Compression { stride, .. } => stride,
            LayerSpec::Transposed { .. } => 1,
        }
    }

    fn layer_cost(&self, name: &str, t_in: u64) -> LayerCost {
        let (read, write) = memory_traffic(self, t_in, 4);
        LayerCost {
            name: name.to_string(),
            params: self.params(),
            macs: self.macs(t_in),
            mem_read: read,
            mem_write: write,
            receptive_field: self.receptive_field(),
        }
    }
}

/// Receptive field of a sequential composition: `rf = Σ(rf_i − 1) + 1`
/// (all layers at the same time resolution).
pub fn compose_receptive_fields(fields: &[u64]) -> u64 {
    fields.iter().map(|&r| r - 1).sum::<u64>() + 1
}

/// Memory traffic of one layer on an input of length `t_in`:
/// read = input tensor + weights, write = output tensor (biases excluded).
pub fn memory_traffic(spec: &LayerSpec, t_in: u64, bytes_per_value: u64) -> (u64, u64) {
    let read = (t_in * spec.c_in() + spec.weight_count()) * bytes_per_value;
    let write = spec.t_out(t_in) * spec.c_out() * bytes_per_value;
    (read, write)
}

/// Cost of a full convolution at stride 1:
/// `params = C_out·D·C_in + C_out`, `macs = T·C_out·D·C_in`.
pub fn cost_full(t: u64, c_in: u64, c_out: u64, depth: u64) -> LayerCost {
    LayerSpec::Full { c_in, c_out, depth, stride: 1 }.layer_cost("full", t)
}

/// Cost of a separable convolution (depthwise of depth `D` over `C_in`, then
/// pointwise): `macs = T·(D·C_in + C_out·C_in)`.
pub fn cost_separable(t: u64, c_in: u64, c_out: u64, depth: u64) -> LayerCost {
    let dw = LayerSpec::Depthwise { channels: c_in, depth, dilation: 1 };
    let pw = LayerSpec::Pointwise { c_in, c_out };
    let (r1, w1) = memory_traffic(&dw, t, 4);
    let (r2, w2) = memory_traffic(&pw, t, 4);
    LayerCost {
        name: "separable".into(),
        params: dw.params() + pw.params(),
        macs: dw.macs(t) + pw.macs(t),
        mem_read: r1 + r2,
        mem_write: w1 + w2,
        receptive_field: compose_receptive_fields(&[dw.receptive_field(), pw.receptive_field()]),
    }
}

/// Cost of a k-blueprint-separable convolution (fat-pointwise of window `k`,
/// then depthwise of depth `D/k` dilated by `k`):
/// `macs = T·(k·C_in·C_out + (D/k)·C_out)`. `k` must divide `D`.
pub fn cost_ksep(t: u64, c_in: u64, c_out: u64, depth: u64, k: u64) -> Result<LayerCost> {
    if k == 0 || depth % k != 0 {
        return Err(CoreError::InvalidSpec(format!(
            "cost_ksep: factor {k} must divide depth {depth}"
        )));
    }
    let fat = LayerSpec::FatPointwise { c_in, c_out, window: k };
    let dw = LayerSpec::Depthwise { channels: c_out, depth: depth / k, dilation: k };
    let (r1, w1) = memory_traffic(&fat, t, 4);
    let (r2, w2) = memory_traffic(&dw, t, 4);
    Ok(LayerCost {
        name: "k-blueprint".into(),
        params: fat.params() + dw.params(),
        macs: fat.macs(t) + dw.macs(t),
        mem_read: r1 + r2,
        mem_write: w1 + w2,
        receptive_field: compose_receptive_fields(&[fat.receptive_field(), dw.receptive_field()]),
    })
}

fn unit_stages(spec: &ResidualBlockSpec, channels: u64) -> Vec<(&'static str, LayerSpec)> {
    use crate::model::ConvOrder;
    match spec.order {
        ConvOrder::DepthwiseFirst => vec![
            ("dw", LayerSpec::Depthwise { channels, depth: spec.depth as u64, dilation: 1 }),
            ("pw", LayerSpec::Pointwise { c_in: channels, c_out: channels }),
        ],
        ConvOrder::PointwiseFirst => vec![
            ("fat", LayerSpec::FatPointwise { c_in: channels, c_out: channels, window: spec.factor as u64 }),
            (
                "dw",
                LayerSpec::Depthwise {
                    channels,
                    depth: spec.depthwise_depth() as u64,
                    dilation: spec.factor as u64,
                },
            ),
        ],
    }
}

/// Full-model accounting for `config`, walking the layer graph with the
/// correct time length at every stage.
pub fn model_cost(config: &ModelConfig) -> Result<CostReport> {
    config.validate()?;
    let mut layers = Vec::new();
    let t0 = config.chunk_len as u64;
    let c1 = config.c1.channels as u64;

    let c1_spec = LayerSpec::Full {
        c_in: 1,
        c_out: c1,
        depth: config.c1.depth as u64,
        stride: config.c1.stride as u64,
    };
    layers.push(c1_spec.layer_cost("c1.conv", t0));
    let t1 = t0 / config.c1.stride as u64;
    layers.push(LayerSpec::BatchNorm { channels: c1 }.layer_cost("c1.bn", t1));

    // receptive field composition: rf in input samples, jump = current stride
    let mut rf = config.c1.depth as u64;
    let jump = config.c1.stride as u64;

    for (i, spec) in config.blocks.iter().enumerate() {
        let p = crate::model::block_prefix(i);
        let c = spec.channels as u64;
        let mut block_rf: u64 = 1; // in block-input units
        match spec.compression {
            Some(comp) => {
                let x = comp.time as u64;
                let ci = spec.inner_channels() as u64;
                let tc = t1 / x;
                let compress = LayerSpec::Compression { c_in: c, c_out: ci, stride: x };
                layers.push(compress.layer_cost(&format!("{p}.compress.conv"), t1));
                layers.push(LayerSpec::BatchNorm { channels: ci }.layer_cost(&format!("{p}.compress.bn"), tc));
                block_rf += compress.receptive_field() - 1;
                for u in 0..spec.inner_units() {
                    for (suffix, stage) in unit_stages(spec, ci) {
                        layers.push(stage.layer_cost(&format!("{p}.u{u}.{suffix}"), tc));
                        block_rf += (stage.receptive_field() - 1) * x;
                    }
                    layers.push(LayerSpec::BatchNorm { channels: ci }.layer_cost(&format!("{p}.u{u}.bn"), tc));
                }
                let pre = LayerSpec::Depthwise {
                    channels: ci,
                    depth: spec.depthwise_depth() as u64,
                    dilation: 1,
                };
                layers.push(pre.layer_cost(&format!("{p}.pre.dw"), tc));
                block_rf += (pre.receptive_field() - 1) * x;
                let dec = LayerSpec::Transposed { c_in: ci, c_out: c, stride: x };
                layers.push(dec.layer_cost(&format!("{p}.decompress.conv"), tc));
                layers.push(LayerSpec::BatchNorm { channels: c }.layer_cost(&format!("{p}.decompress.bn"), t1));
            }
            None => {
                for u in 0..spec.inner_units() {
                    for (suffix, stage) in unit_stages(spec, c) {
                        layers.push(stage.layer_cost(&format!("{p}.u{u}.{suffix}"), t1));
                        block_rf += stage.receptive_field() - 1;
                    }
                    layers.push(LayerSpec::BatchNorm { channels: c }.layer_cost(&format!("{p}.u{u}.bn"), t1));
                }
            }
        }
        let skip = LayerSpec::Pointwise { c_in: c, c_out: c };
        layers.push(skip.layer_cost(&format!("{p}.skip.pw"), t1));
        layers.push(LayerSpec::BatchNorm { channels: c }.layer_cost(&format!("{p}.skip.bn"), t1));
        rf += (block_rf - 1) * jump;
    }

    let c2c = config.c2.channels as u64;
    let c2_dw = LayerSpec::Depthwise { channels: c1, depth: config.c2.depth as u64, dilation: 1 };
    let c2_pw = LayerSpec::Pointwise { c_in: c1, c_out: c2c };
    layers.push(c2_dw.layer_cost("c2.dw", t1));
    layers.push(c2_pw.layer_cost("c2.pw", t1));
    layers.push(LayerSpec::BatchNorm { channels: c2c }.layer_cost("c2.bn", t1));
    rf += (c2_dw.receptive_field() - 1) * jump;

    let c3c = config.c3.channels as u64;
    let c3_spec = LayerSpec::Full { c_in: c2c, c_out: c3c, depth: config.c3.depth as u64, stride: 1 };
    layers.push(c3_spec.layer_cost("c3.conv", t1));
    layers.push(LayerSpec::BatchNorm { channels: c3c }.layer_cost("c3.bn", t1));
    rf += (c3_spec.receptive_field() - 1) * jump;

    layers.push(
        LayerSpec::Pointwise { c_in: c3c, c_out: crate::ctc::NUM_CLASSES as u64 }
            .layer_cost("decoder.pw", t1),
    );

    Ok(CostReport::from_layers(layers, rf))
}
