//! Declarative network configuration and the assembled model.
//!
//! The default configuration is the small baseline architecture: an entry
//! convolution C1 (128 filters, depth 9, stride 3), five residual blocks of
//! five units each with depth-21 k-blueprint convolutions (k = 3) and 3:2
//! depth-to-space compression, a separable C2 (128 filters, depth 11), a
//! full C3 (64 filters, depth 7) and a pointwise-to-5 softmax decoder.
//!
//! Weight tensors are addressed by canonical dotted paths (`c1.conv.weight`,
//! `b1.u0.fat.bias`, `b1.skip.bn.gamma`, ...). [`Model::to_store`] and
//! [`Model::from_store`] convert between the assembled model and the named
//! tensor set; the enumeration order of `to_store` is also the order in
//! which initializers draw random values, so a seed pins every weight file
//! byte.

use serde::{Deserialize, Serialize};

use crate::activation::{Activation, BatchNormParams};
use crate::block::{CBlock, ConvVariant, MainBranch, ResidualBlock, Tap};
use crate::conv::{DepthwiseParams, FatPointwiseParams, FullConvParams, PointwiseParams};
use crate::ctc::{FrameProbs, NUM_CLASSES};
use crate::error::{CoreError, Result};
use crate::io::store::{StoredTensor, WeightStore};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Epsilon used by every batch normalization layer in generated models.
pub const BN_EPSILON: f64 = 1e-3;
/// Hard cap on main-path channel counts.
pub const MAX_CHANNELS: usize = 128;
/// Schema identifier expected in configuration files.
pub const CONFIG_SCHEMA: &str = "wavecall-config-v1";
/// Chunk lengths must be a multiple of this (stride 3 at C1, then 3:2
/// compression inside the residual blocks).
pub const CHUNK_ALIGN: usize = 9;

/// Ordering of the two halves of a separable convolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvOrder {
    /// Depthwise then pointwise (the classic separable convolution).
    DepthwiseFirst,
    /// Pointwise (or fat-pointwise) then depthwise (blueprint ordering).
    PointwiseFirst,
}

/// Entry convolution: full kernel, strided.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntryConvSpec {
    pub channels: usize,
    pub depth: usize,
    pub stride: usize,
}

impl Default for EntryConvSpec {
    fn default() -> Self {
        Self { channels: 128, depth: 9, stride: 3 }
    }
}

/// Depth-to-space compression ratio `x:y`: `x` consecutive time steps of `C`
/// channels become one step of `C·y` channels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompressionSpec {
    /// Time divisor `x`.
    pub time: usize,
    /// Channel multiplier `y`.
    pub channels: usize,
}

impl Default for CompressionSpec {
    fn default() -> Self {
        Self { time: 3, channels: 2 }
    }
}

/// One residual block: `repeats` separable-family units plus a skip
/// connection, optionally with depth-to-space compression (in which case the
/// compression and decompression replace two of the `repeats` units).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResidualBlockSpec {
    pub repeats: usize,
    pub channels: usize,
    pub depth: usize,
    /// Blueprint factor `k`; must divide `depth`. `1` means a plain
    /// separable/blueprint convolution.
    pub factor: usize,
    pub order: ConvOrder,
    pub compression: Option<CompressionSpec>,
}

impl Default for ResidualBlockSpec {
    fn default() -> Self {
        Self {
            repeats: 5,
            channels: 128,
            depth: 21,
            factor: 3,
            order: ConvOrder::PointwiseFirst,
            compression: Some(CompressionSpec::default()),
        }
    }
}

impl ResidualBlockSpec {
    /// Depthwise kernel depth `m = D/k`.
    pub fn depthwise_depth(&self) -> usize {
        self.depth / self.factor
    }

    /// Channel count inside the compressed main branch (equal to `channels`
    /// when the block is not compressed).
    pub fn inner_channels(&self) -> usize {
        match self.compression {
            Some(c) => self.channels * c.channels,
            None => self.channels,
        }
    }

    /// Number of separable-family units in the main branch.
    pub fn inner_units(&self) -> usize {
        match self.compression {
            Some(_) => self.repeats - 2,
            None => self.repeats,
        }
    }
}

/// Separable convolution C2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeparableConvSpec {
    pub channels: usize,
    pub depth: usize,
}

impl Default for SeparableConvSpec {
    fn default() -> Self {
        Self { channels: 128, depth: 11 }
    }
}

/// Exit convolution C3: full kernel, stride 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExitConvSpec {
    pub channels: usize,
    pub depth: usize,
}

impl Default for ExitConvSpec {
    fn default() -> Self {
        Self { channels: 64, depth: 7 }
    }
}

/// Complete network description: C1, residual blocks, C2, C3 and the
/// implicit pointwise-to-5 softmax decoder, plus chunk geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub schema: String,
    pub chunk_len: usize,
    pub batch: usize,
    pub activation: Activation,
    pub c1: EntryConvSpec,
    #[serde(rename = "block")]
    pub blocks: Vec<ResidualBlockSpec>,
    pub c2: SeparableConvSpec,
    pub c3: ExitConvSpec,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            schema: CONFIG_SCHEMA.to_string(),
            chunk_len: 5004,
            batch: 4,
            activation: Activation::Relu6,
            c1: EntryConvSpec::default(),
            blocks: vec![ResidualBlockSpec::default(); 5],
            c2: SeparableConvSpec::default(),
            c3: ExitConvSpec::default(),
        }
    }
}

impl ModelConfig {
    /// Checks every structural invariant, returning the first violation.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(CoreError::Config(msg));
        if self.schema != CONFIG_SCHEMA {
            return fail(format!(
                "unsupported schema `{}` (expected `{CONFIG_SCHEMA}`)",
                self.schema
            ));
        }
        if self.chunk_len == 0 || self.chunk_len % CHUNK_ALIGN != 0 {
            return fail(format!(
                "chunk_len {} must be a positive multiple of {CHUNK_ALIGN}",
                self.chunk_len
            ));
        }
        if self.batch == 0 {
            return fail("batch must be >= 1".into());
        }
        if self.c1.stride != 3 {
            return fail(format!("c1 stride must be 3, got {}", self.c1.stride));
        }
        if self.c1.depth % 2 == 0 {
            return fail(format!("c1 depth must be odd, got {}", self.c1.depth));
        }
        if self.c1.channels == 0 || self.c1.channels > MAX_CHANNELS {
            return fail(format!(
                "c1 channels {} outside 1..={MAX_CHANNELS} (throughput collapses beyond the cap)",
                self.c1.channels
            ));
        }
        let frames = self.chunk_len / self.c1.stride;
        for (i, b) in self.blocks.iter().enumerate() {
            let name = format!("block {}", i + 1);
            if b.channels != self.c1.channels {
                return fail(format!(
                    "{name}: channels {} must match c1 channels {} (residual blocks preserve shape)",
                    b.channels, self.c1.channels
                ));
            }
            if b.channels > MAX_CHANNELS {
                return fail(format!(
                    "{name}: channels {} exceed the main-path cap of {MAX_CHANNELS}",
                    b.channels
                ));
            }
            if b.depth == 0 || b.factor == 0 || b.depth % b.factor != 0 {
                return fail(format!(
                    "{name}: factor {} must divide depth {}",
                    b.factor, b.depth
                ));
            }
            if b.factor > 1 && b.order != ConvOrder::PointwiseFirst {
                return fail(format!(
                    "{name}: factor {} requires pointwise-first order",
                    b.factor
                ));
            }
            if b.repeats == 0 {
                return fail(format!("{name}: repeats must be >= 1"));
            }
            if let Some(c) = b.compression {
                if b.order != ConvOrder::PointwiseFirst {
                    return fail(format!("{name}: compressed blocks use pointwise-first units"));
                }
                if b.repeats < 3 {
                    return fail(format!(
                        "{name}: compression replaces two units, so repeats must be >= 3 (got {})",
                        b.repeats
                    ));
                }
                if c.time == 0 || c.channels == 0 {
                    return fail(format!("{name}: compression ratio terms must be >= 1"));
                }
                if frames % c.time != 0 {
                    return fail(format!(
                        "{name}: frame count {frames} not divisible by compression time divisor {}",
                        c.time
                    ));
                }
            }
        }
        if self.c2.channels == 0 || self.c2.channels > MAX_CHANNELS {
            return fail(format!(
                "c2 channels {} outside 1..={MAX_CHANNELS}",
                self.c2.channels
            ));
        }
        if self.c2.depth == 0 {
            return fail("c2 depth must be >= 1".into());
        }
        if self.c3.channels == 0 || self.c3.channels > MAX_CHANNELS {
            return fail(format!(
                "c3 channels {} outside 1..={MAX_CHANNELS}",
                self.c3.channels
            ));
        }
        if self.c3.depth % 2 == 0 {
            return fail(format!("c3 depth must be odd, got {}", self.c3.depth));
        }
        Ok(())
    }

    /// Output frames per chunk (the C1 stride divides the chunk length).
    pub fn frames_per_chunk(&self) -> usize {
        self.chunk_len / self.c1.stride
    }
}

// ── Assembled model ────────────────────────────────────────────────

/// A fully parameterized network ready to run.
#[derive(Clone, Debug, PartialEq)]
pub struct Model<S: Scalar> {
    pub config: ModelConfig,
    pub c1: CBlock<S>,
    pub blocks: Vec<ResidualBlock<S>>,
    pub c2: CBlock<S>,
    pub c3: CBlock<S>,
    pub decoder: PointwiseParams<S>,
}

impl<S: Scalar> Model<S> {
    /// Forward pass over a single-channel signal chunk whose length is a
    /// multiple of 9. Output has `T/3` frames, each a probability row.
    pub fn run(&self, x: &Tensor<S>) -> Result<FrameProbs<S>> {
        self.run_traced(x, &mut |_, _| {})
    }

    /// Forward pass reporting every intermediate tensor to `tap` under its
    /// canonical edge name.
    pub fn run_traced(&self, x: &Tensor<S>, tap: Tap<S>) -> Result<FrameProbs<S>> {
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
        tap("input", x);
        let mut h = self.c1.forward_traced(x, "c1", tap)?;
        tap("c1.out", &h);
        for (i, block) in self.blocks.iter().enumerate() {
            h = block.forward_traced(&h, &block_prefix(i), tap)?;
        }
        h = self.c2.forward_traced(&h, "c2", tap)?;
        tap("c2.out", &h);
        h = self.c3.forward_traced(&h, "c3", tap)?;
        tap("c3.out", &h);
        let logits = crate::conv::conv1d_pointwise(&h, &self.decoder)?;
        tap("decoder.logits", &logits);
        let probs = crate::activation::softmax_channels(&logits);
        tap("decoder.out", &probs);
        FrameProbs::new(probs)
    }

    /// Serializes every tensor under its canonical name.
    pub fn to_store(&self) -> Result<WeightStore> {
        let mut store = WeightStore::new();
        push_full(&mut store, "c1.conv", full_of(&self.c1.conv)?)?;
        push_bn(&mut store, "c1.bn", &self.c1.bn)?;
        for (i, block) in self.blocks.iter().enumerate() {
            let p = block_prefix(i);
            match &block.main {
                MainBranch::Plain { units } => {
                    for (u, unit) in units.iter().enumerate() {
                        push_unit(&mut store, &format!("{p}.u{u}"), unit)?;
                    }
                }
                MainBranch::Compressed {
                    compress,
                    units,
                    pre_decompress,
                    decompress_conv,
                    decompress_bn,
                } => {
                    push_full(&mut store, &format!("{p}.compress.conv"), full_of(&compress.conv)?)?;
                    push_bn(&mut store, &format!("{p}.compress.bn"), &compress.bn)?;
                    for (u, unit) in units.iter().enumerate() {
                        push_unit(&mut store, &format!("{p}.u{u}"), unit)?;
                    }
                    push_dw(&mut store, &format!("{p}.pre.dw"), pre_decompress)?;
                    push_full(&mut store, &format!("{p}.decompress.conv"), decompress_conv)?;
                    push_bn(&mut store, &format!("{p}.decompress.bn"), decompress_bn)?;
                }
            }
            push_pw(&mut store, &format!("{p}.skip.pw"), &block.skip_pw)?;
            push_bn(&mut store, &format!("{p}.skip.bn"), &block.skip_bn)?;
        }
        push_unit(&mut store, "c2", &self.c2)?;
        push_full(&mut store, "c3.conv", full_of(&self.c3.conv)?)?;
        push_bn(&mut store, "c3.bn", &self.c3.bn)?;
        push_pw(&mut store, "decoder.pw", &self.decoder)?;
        Ok(store)
    }

    /// Rebuilds a model from a named tensor set, checking that every tensor
    /// the configuration requires is present with the right shape.
    pub fn from_store(config: ModelConfig, store: &WeightStore) -> Result<Self> {
        config.validate()?;
        let act = config.activation;
        let c1 = CBlock {
            conv: ConvVariant::Full(read_full(
                store,
                "c1.conv",
                1,
                config.c1.channels,
                config.c1.depth,
                config.c1.stride,
            )?),
            bn: read_bn(store, "c1.bn", config.c1.channels)?,
            activation: Some(act),
        };
        let mut blocks = Vec::with_capacity(config.blocks.len());
        for (i, spec) in config.blocks.iter().enumerate() {
            let p = block_prefix(i);
            let c = spec.channels;
            let main = match spec.compression {
                Some(comp) => {
                    let inner_c = spec.inner_channels();
                    let compress = CBlock {
                        conv: ConvVariant::Strided(read_full(
                            store,
                            &format!("{p}.compress.conv"),
                            c,
                            inner_c,
                            comp.time,
                            comp.time,
                        )?),
                        bn: read_bn(store, &format!("{p}.compress.bn"), inner_c)?,
                        activation: Some(act),
                    };
                    let units = (0..spec.inner_units())
                        .map(|u| {
                            Ok(CBlock {
                                conv: read_unit_variant(store, &format!("{p}.u{u}"), spec, inner_c)?,
                                bn: read_bn(store, &format!("{p}.u{u}.bn"), inner_c)?,
                                activation: Some(act),
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    MainBranch::Compressed {
                        compress,
                        units,
                        pre_decompress: read_dw(
                            store,
                            &format!("{p}.pre.dw"),
                            inner_c,
                            spec.depthwise_depth(),
                            1,
                        )?,
                        decompress_conv: read_full(
                            store,
                            &format!("{p}.decompress.conv"),
                            inner_c,
                            c,
                            comp.time,
                            comp.time,
                        )?,
                        decompress_bn: read_bn(store, &format!("{p}.decompress.bn"), c)?,
                    }
                }
                None => {
                    let total = spec.inner_units();
                    let units = (0..total)
                        .map(|u| {
                            Ok(CBlock {
                                conv: read_unit_variant(store, &format!("{p}.u{u}"), spec, c)?,
                                bn: read_bn(store, &format!("{p}.u{u}.bn"), c)?,
                                activation: if u + 1 == total { None } else { Some(act) },
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    MainBranch::Plain { units }
                }
            };
            blocks.push(ResidualBlock {
                main,
                skip_pw: read_pw(store, &format!("{p}.skip.pw"), c, c)?,
                skip_bn: read_bn(store, &format!("{p}.skip.bn"), c)?,
                activation: act,
            });
        }
        let c2 = CBlock {
            conv: ConvVariant::Separable {
                dw: read_dw(store, "c2.dw", config.c1.channels, config.c2.depth, 1)?,
                pw: read_pw(store, "c2.pw", config.c1.channels, config.c2.channels)?,
            },
            bn: read_bn(store, "c2.bn", config.c2.channels)?,
            activation: Some(act),
        };
        let c3 = CBlock {
            conv: ConvVariant::Full(read_full(
                store,
                "c3.conv",
                config.c2.channels,
                config.c3.channels,
                config.c3.depth,
                1,
            )?),
            bn: read_bn(store, "c3.bn", config.c3.channels)?,
            activation: Some(act),
        };
        let decoder = read_pw(store, "decoder.pw", config.c3.channels, NUM_CLASSES)?;
        Ok(Self { config, c1, blocks, c2, c3, decoder })
    }
}

/// Residual blocks are named `b1`, `b2`, ... in configuration order.
pub fn block_prefix(index: usize) -> String {
    format!("b{}", index + 1)
}

fn full_of<'a, S: Scalar>(v: &'a ConvVariant<S>) -> Result<&'a FullConvParams<S>> {
    match v {
        ConvVariant::Full(p) | ConvVariant::Strided(p) => Ok(p),
        _ => Err(CoreError::InvalidSpec("expected a full convolution variant".into())),
    }
}

fn to_f32<S: Scalar>(v: &[S]) -> Vec<f32> {
    v.iter().map(|&x| x.to_f32().unwrap_or(f32::NAN)).collect()
}

fn from_f32<S: Scalar>(v: Vec<f32>) -> Vec<S> {
    v.into_iter().map(|x| S::from_f64_c(f64::from(x))).collect()
}

fn push_full<S: Scalar>(store: &mut WeightStore, name: &str, p: &FullConvParams<S>) -> Result<()> {
    store.insert(
        format!("{name}.weight"),
        StoredTensor::f32(vec![p.c_out, p.depth, p.c_in], to_f32(&p.weights)),
    )?;
    store.insert(format!("{name}.bias"), StoredTensor::f32(vec![p.c_out], to_f32(&p.bias)))
}

fn push_dw<S: Scalar>(store: &mut WeightStore, name: &str, p: &DepthwiseParams<S>) -> Result<()> {
    store.insert(
        format!("{name}.weight"),
        StoredTensor::f32(vec![p.depth, p.channels], to_f32(&p.weights)),
    )?;
    store.insert(format!("{name}.bias"), StoredTensor::f32(vec![p.channels], to_f32(&p.bias)))
}

fn push_pw<S: Scalar>(store: &mut WeightStore, name: &str, p: &PointwiseParams<S>) -> Result<()> {
    store.insert(
        format!("{name}.weight"),
        StoredTensor::f32(vec![p.c_out, p.c_in], to_f32(&p.weights)),
    )?;
    store.insert(format!("{name}.bias"), StoredTensor::f32(vec![p.c_out], to_f32(&p.bias)))
}

fn push_fat<S: Scalar>(store: &mut WeightStore, name: &str, p: &FatPointwiseParams<S>) -> Result<()> {
    store.insert(
        format!("{name}.weight"),
        StoredTensor::f32(vec![p.c_out, p.window, p.c_in], to_f32(&p.weights)),
    )?;
    store.insert(format!("{name}.bias"), StoredTensor::f32(vec![p.c_out], to_f32(&p.bias)))
}

fn push_bn<S: Scalar>(store: &mut WeightStore, name: &str, p: &BatchNormParams<S>) -> Result<()> {
    let c = p.channels();
    store.insert(format!("{name}.gamma"), StoredTensor::f32(vec![c], to_f32(&p.gamma)))?;
    store.insert(format!("{name}.beta"), StoredTensor::f32(vec![c], to_f32(&p.beta)))?;
    store.insert(format!("{name}.mean"), StoredTensor::f32(vec![c], to_f32(&p.running_mean)))?;
    store.insert(format!("{name}.var"), StoredTensor::f32(vec![c], to_f32(&p.running_var)))
}

/// Serializes a unit's convolution under variant-specific names
/// (`.dw`/`.pw` for separable, `.fat`/`.dw` for blueprint family,
/// `.conv` for full) plus its `.bn`.
fn push_unit<S: Scalar>(store: &mut WeightStore, name: &str, unit: &CBlock<S>) -> Result<()> {
    match &unit.conv {
        ConvVariant::Separable { dw, pw } => {
            push_dw(store, &format!("{name}.dw"), dw)?;
            push_pw(store, &format!("{name}.pw"), pw)?;
        }
        ConvVariant::KBlueprint { fat, dw } => {
            push_fat(store, &format!("{name}.fat"), fat)?;
            push_dw(store, &format!("{name}.dw"), dw)?;
        }
        ConvVariant::Full(p) | ConvVariant::Strided(p) => {
            push_full(store, &format!("{name}.conv"), p)?;
        }
        ConvVariant::Pointwise(p) => {
            push_pw(store, &format!("{name}.pw"), p)?;
        }
    }
    push_bn(store, &format!("{name}.bn"), &unit.bn)
}

fn read_full<S: Scalar>(
    store: &WeightStore,
    name: &str,
    c_in: usize,
    c_out: usize,
    depth: usize,
    stride: usize,
) -> Result<FullConvParams<S>> {
    let w = store.f32_tensor(&format!("{name}.weight"), &[c_out, depth, c_in])?;
    let b = store.f32_tensor(&format!("{name}.bias"), &[c_out])?;
    FullConvParams::new(c_in, c_out, depth, stride, from_f32(w), from_f32(b))
}

fn read_dw<S: Scalar>(
    store: &WeightStore,
    name: &str,
    channels: usize,
    depth: usize,
    dilation: usize,
) -> Result<DepthwiseParams<S>> {
    let w = store.f32_tensor(&format!("{name}.weight"), &[depth, channels])?;
    let b = store.f32_tensor(&format!("{name}.bias"), &[channels])?;
    DepthwiseParams::new(channels, depth, dilation, from_f32(w), from_f32(b))
}

fn read_pw<S: Scalar>(
    store: &WeightStore,
    name: &str,
    c_in: usize,
    c_out: usize,
) -> Result<PointwiseParams<S>> {
    let w = store.f32_tensor(&format!("{name}.weight"), &[c_out, c_in])?;
    let b = store.f32_tensor(&format!("{name}.bias"), &[c_out])?;
    PointwiseParams::new(c_in, c_out, from_f32(w), from_f32(b))
}

fn read_fat<S: Scalar>(
    store: &WeightStore,
    name: &str,
    c_in: usize,
    c_out: usize,
    window: usize,
) -> Result<FatPointwiseParams<S>> {
    let w = store.f32_tensor(&format!("{name}.weight"), &[c_out, window, c_in])?;
    let b = store.f32_tensor(&format!("{name}.bias"), &[c_out])?;
    FatPointwiseParams::new(c_in, c_out, window, from_f32(w), from_f32(b))
}

fn read_bn<S: Scalar>(store: &WeightStore, name: &str, channels: usize) -> Result<BatchNormParams<S>> {
    BatchNormParams::new(
        from_f32(store.f32_tensor(&format!("{name}.gamma"), &[channels])?),
        from_f32(store.f32_tensor(&format!("{name}.beta"), &[channels])?),
        from_f32(store.f32_tensor(&format!("{name}.mean"), &[channels])?),
        from_f32(store.f32_tensor(&format!("{name}.var"), &[channels])?),
        S::from_f64_c(BN_EPSILON),
    )
}

fn read_unit_variant<S: Scalar>(
    store: &WeightStore,
    name: &str,
    spec: &ResidualBlockSpec,
    channels: usize,
) -> Result<ConvVariant<S>> {
    match spec.order {
        ConvOrder::DepthwiseFirst => Ok(ConvVariant::Separable {
            dw: read_dw(store, &format!("{name}.dw"), channels, spec.depth, 1)?,
            pw: read_pw(store, &format!("{name}.pw"), channels, channels)?,
        }),
        ConvOrder::PointwiseFirst => Ok(ConvVariant::KBlueprint {
            fat: read_fat(store, &format!("{name}.fat"), channels, channels, spec.factor)?,
            dw: read_dw(
                store,
                &format!("{name}.dw"),
                channels,
                spec.depthwise_depth(),
                spec.factor,
            )?,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::{init_model, InitScheme, InitSpec};

    #[test]
    fn default_config_validates() {
        ModelConfig::default().validate().unwrap();
    }

    #[test]
    fn config_rejects_channel_cap_violation() {
        let mut cfg = ModelConfig::default();
        cfg.c1.channels = 256;
        for b in &mut cfg.blocks {
            b.channels = 256;
        }
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("cap") || err.contains("128"), "{err}");
    }

    #[test]
    fn config_rejects_unaligned_chunk_len() {
        let mut cfg = ModelConfig::default();
        cfg.chunk_len = 5000;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_rejects_factor_not_dividing_depth() {
        let mut cfg = ModelConfig::default();
        cfg.blocks[0].depth = 20;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_rejects_small_repeats_with_compression() {
        let mut cfg = ModelConfig::default();
        cfg.blocks[2].repeats = 2;
        assert!(cfg.validate().is_err());
    }

    fn small_config() -> ModelConfig {
        let mut cfg = ModelConfig::default();
        cfg.chunk_len = 90;
        cfg.batch = 1;
        cfg.c1 = EntryConvSpec { channels: 8, depth: 9, stride: 3 };
        cfg.blocks = vec![
            ResidualBlockSpec {
                repeats: 3,
                channels: 8,
                depth: 9,
                factor: 3,
                order: ConvOrder::PointwiseFirst,
                compression: Some(CompressionSpec { time: 3, channels: 2 }),
            },
            ResidualBlockSpec {
                repeats: 2,
                channels: 8,
                depth: 5,
                factor: 1,
                order: ConvOrder::DepthwiseFirst,
                compression: None,
            },
        ];
        cfg.c2 = SeparableConvSpec { channels: 8, depth: 5 };
        cfg.c3 = ExitConvSpec { channels: 4, depth: 3 };
        cfg
    }

    #[test]
    fn store_roundtrip_reconstructs_model() {
        let cfg = small_config();
        cfg.validate().unwrap();
        let model: Model<f32> =
            init_model(&cfg, &InitSpec { scheme: InitScheme::GlorotUniform, epsilon: 0.0, seed: 7 })
                .unwrap();
        let store = model.to_store().unwrap();
        let restored = Model::<f32>::from_store(cfg, &store).unwrap();
        assert_eq!(model, restored);
    }

    #[test]
    fn from_store_names_missing_tensor() {
        let cfg = small_config();
        let model: Model<f32> = init_model(&cfg, &InitSpec::default()).unwrap();
        let full = model.to_store().unwrap();
        let mut partial = WeightStore::new();
        for (name, t) in full.iter() {
            if name != "b1.u0.fat.weight" {
                partial.insert(name.clone(), t.clone()).unwrap();
            }
        }
        match Model::<f32>::from_store(cfg, &partial) {
            Err(CoreError::MissingTensor(name)) => assert_eq!(name, "b1.u0.fat.weight"),
            other => panic!("expected MissingTensor, got {other:?}"),
        }
    }

    #[test]
    fn run_produces_normalized_rows_and_t_over_3_frames() {
        let cfg = small_config();
        let model: Model<f32> = init_model(&cfg, &InitSpec::default()).unwrap();
        let x = Tensor::from_vec(90, 1, (0..90).map(|i| (i as f32 * 0.37).sin()).collect()).unwrap();
        let probs = model.run(&x).unwrap();
        assert_eq!(probs.frames(), 30);
        for t in 0..probs.frames() {
            let sum: f32 = (0..NUM_CLASSES).map(|c| probs.prob(t, c)).sum();
            assert!((sum - 1.0).abs() <= 1e-5);
        }
    }

    #[test]
    fn run_is_deterministic() {
        let cfg = small_config();
        let model: Model<f32> = init_model(&cfg, &InitSpec::default()).unwrap();
        let x = Tensor::from_vec(18, 1, (0..18).map(|i| i as f32 * 0.1 - 0.9).collect()).unwrap();
        let a = model.run(&x).unwrap();
        let b = model.run(&x).unwrap();
        assert_eq!(a.tensor().data(), b.tensor().data());
    }

    #[test]
    fn run_rejects_unaligned_input() {
        let cfg = small_config();
        let model: Model<f32> = init_model(&cfg, &InitSpec::default()).unwrap();
        let x = Tensor::from_vec(10, 1, vec![0.0; 10]).unwrap();
        assert!(model.run(&x).is_err());
    }

    #[test]
    fn traced_run_reports_compressed_shapes() {
        let cfg = small_config();
        let model: Model<f32> = init_model(&cfg, &InitSpec::default()).unwrap();
        let x = Tensor::from_vec(90, 1, vec![0.5; 90]).unwrap();
        let mut shapes = Vec::new();
        model
            .run_traced(&x, &mut |name, t| shapes.push((name.to_string(), t.shape())))
            .unwrap();
        let lookup = |n: &str| shapes.iter().find(|(name, _)| name == n).map(|&(_, s)| s);
        assert_eq!(lookup("c1.out"), Some((30, 8)));
        assert_eq!(lookup("b1.compress.out"), Some((10, 16)));
        assert_eq!(lookup("b1.out"), Some((30, 8)));
        assert_eq!(lookup("decoder.out"), Some((30, 5)));
    }
}
