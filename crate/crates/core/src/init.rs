//! Weight initializers.
//!
//! Two schemes matter: Glorot-uniform (`U(-l, l)` with
//! `l = sqrt(6/(fan_in+fan_out))`, biases zero) and the near-identity
//! initialization of k-blueprint units, where the depthwise kernel is a
//! centered delta per channel and the fat-pointwise kernel is the channel
//! identity at its center slice plus uniform noise of amplitude `ε`:
//!
//! ```text
//! W_dw[d, j]     = δ(d = ⌊m/2⌋)
//! W_fat[j, d, i] = δ(d = ⌊k/2⌋) · (δ(i = j) + U(-ε, ε))
//! ```
//!
//! Under the identity scheme only the units inside compressed main branches
//! (and the depthwise operation preceding decompression) are set to
//! identity; skip connections, compression/decompression and the standalone
//! conv blocks stay Glorot.
//!
//! All draws come from a counter-based generator seeded explicitly, in the
//! canonical tensor order, so a seed pins every weight bit.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::activation::BatchNormParams;
use crate::block::{CBlock, ConvVariant, MainBranch, ResidualBlock};
use crate::conv::{DepthwiseParams, FatPointwiseParams, FullConvParams, PointwiseParams};
use crate::ctc::NUM_CLASSES;
use crate::error::{CoreError, Result};
use crate::model::{Model, ModelConfig, ResidualBlockSpec, BN_EPSILON};
use crate::scalar::Scalar;

/// Initialization scheme for [`init_model`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitScheme {
    GlorotUniform,
    /// Compressed-main-branch units near-identity, everything else Glorot.
    Identity,
    Zeros,
}

/// Scheme, identity-noise amplitude, and RNG seed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitSpec {
    pub scheme: InitScheme,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for InitSpec {
    fn default() -> Self {
        Self { scheme: InitScheme::GlorotUniform, epsilon: 0.02, seed: 0 }
    }
}

/// Glorot bound `sqrt(6/(fan_in+fan_out))`.
pub fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// `len` i.i.d. samples from `U(-l, l)` with the Glorot bound `l`.
pub fn glorot_uniform<S: Scalar>(len: usize, fan_in: usize, fan_out: usize, seed: u64) -> Vec<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_glorot(&mut rng, len, fan_in, fan_out)
}

fn sample_glorot<S: Scalar>(
    rng: &mut ChaCha8Rng,
    len: usize,
    fan_in: usize,
    fan_out: usize,
) -> Vec<S> {
    assert!(fan_in >= 1 && fan_out >= 1, "fans must be >= 1");
    let limit = S::from_f64_c(glorot_limit(fan_in, fan_out));
    let dist = Uniform::new_inclusive(-limit, limit);
    (0..len).map(|_| dist.sample(rng)).collect()
}

/// Near-identity parameters for a k-blueprint unit over `channels` channels
/// with total depth `depth` and factor `factor` (which must divide it).
pub fn identity_init_ksep<S: Scalar>(
    channels: usize,
    depth: usize,
    factor: usize,
    epsilon: f64,
    seed: u64,
) -> Result<(FatPointwiseParams<S>, DepthwiseParams<S>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    identity_ksep_with(&mut rng, channels, depth, factor, epsilon)
}

fn identity_ksep_with<S: Scalar>(
    rng: &mut ChaCha8Rng,
    channels: usize,
    depth: usize,
    factor: usize,
    epsilon: f64,
) -> Result<(FatPointwiseParams<S>, DepthwiseParams<S>)> {
    if epsilon < 0.0 {
        return Err(CoreError::InvalidSpec("identity init: epsilon must be >= 0".into()));
    }
    if factor == 0 || depth % factor != 0 {
        return Err(CoreError::InvalidSpec(format!(
            "identity init: factor {factor} must divide depth {depth}"
        )));
    }
    let m = depth / factor;
    let center = factor / 2;
    let eps = S::from_f64_c(epsilon);
    let noise = Uniform::new_inclusive(-eps, eps);

    let mut fat = vec![S::zero(); channels * factor * channels];
    for j in 0..channels {
        for i in 0..channels {
            let delta = if i == j { S::one() } else { S::zero() };
            let n = if epsilon > 0.0 { noise.sample(rng) } else { S::zero() };
            fat[(j * factor + center) * channels + i] = delta + n;
        }
    }
    let fat = FatPointwiseParams::new(channels, channels, factor, fat, vec![S::zero(); channels])?;
    let dw = centered_delta_dw(channels, m, factor)?;
    Ok((fat, dw))
}

fn centered_delta_dw<S: Scalar>(
    channels: usize,
    depth: usize,
    dilation: usize,
) -> Result<DepthwiseParams<S>> {
    let mut w = vec![S::zero(); depth * channels];
    for j in 0..channels {
        w[(depth / 2) * channels + j] = S::one();
    }
    DepthwiseParams::new(channels, depth, dilation, w, vec![S::zero(); channels])
}

struct Init {
    rng: ChaCha8Rng,
    zeros: bool,
}

impl Init {
    fn weights<S: Scalar>(&mut self, len: usize, fan_in: usize, fan_out: usize) -> Vec<S> {
        if self.zeros {
            vec![S::zero(); len]
        } else {
            sample_glorot(&mut self.rng, len, fan_in, fan_out)
        }
    }

    fn full<S: Scalar>(
        &mut self,
        c_in: usize,
        c_out: usize,
        depth: usize,
        stride: usize,
    ) -> Result<FullConvParams<S>> {
        let w = self.weights(c_out * depth * c_in, depth * c_in, depth * c_out);
        FullConvParams::new(c_in, c_out, depth, stride, w, vec![S::zero(); c_out])
    }

    fn pw<S: Scalar>(&mut self, c_in: usize, c_out: usize) -> Result<PointwiseParams<S>> {
        let w = self.weights(c_out * c_in, c_in, c_out);
        PointwiseParams::new(c_in, c_out, w, vec![S::zero(); c_out])
    }

    fn fat<S: Scalar>(
        &mut self,
        c_in: usize,
        c_out: usize,
        window: usize,
    ) -> Result<FatPointwiseParams<S>> {
        let w = self.weights(c_out * window * c_in, window * c_in, window * c_out);
        FatPointwiseParams::new(c_in, c_out, window, w, vec![S::zero(); c_out])
    }

    fn dw<S: Scalar>(
        &mut self,
        channels: usize,
        depth: usize,
        dilation: usize,
    ) -> Result<DepthwiseParams<S>> {
        let w = self.weights(depth * channels, depth, depth);
        DepthwiseParams::new(channels, depth, dilation, w, vec![S::zero(); channels])
    }

    fn unit<S: Scalar>(&mut self, spec: &ResidualBlockSpec, channels: usize) -> Result<ConvVariant<S>> {
        use crate::model::ConvOrder;
        Ok(match spec.order {
            ConvOrder::DepthwiseFirst => ConvVariant::Separable {
                dw: self.dw(channels, spec.depth, 1)?,
                pw: self.pw(channels, channels)?,
            },
            ConvOrder::PointwiseFirst => ConvVariant::KBlueprint {
                fat: self.fat(channels, channels, spec.factor)?,
                dw: self.dw(channels, spec.depthwise_depth(), spec.factor)?,
            },
        })
    }
}

fn default_bn<S: Scalar>(channels: usize) -> BatchNormParams<S> {
    BatchNormParams {
        gamma: vec![S::one(); channels],
        beta: vec![S::zero(); channels],
        running_mean: vec![S::zero(); channels],
        running_var: vec![S::one(); channels],
        epsilon: S::from_f64_c(BN_EPSILON),
    }
}

/// Builds a fully initialized model for `config` under `spec`.
pub fn init_model<S: Scalar>(config: &ModelConfig, spec: &InitSpec) -> Result<Model<S>> {
    config.validate()?;
    if spec.epsilon < 0.0 {
        return Err(CoreError::InvalidSpec("init: epsilon must be >= 0".into()));
    }
    let mut init = Init {
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        zeros: spec.scheme == InitScheme::Zeros,
    };
    let act = config.activation;

    let c1 = CBlock {
        conv: ConvVariant::Full(init.full(1, config.c1.channels, config.c1.depth, config.c1.stride)?),
        bn: default_bn(config.c1.channels),
        activation: Some(act),
    };

    let mut blocks = Vec::with_capacity(config.blocks.len());
    for bspec in &config.blocks {
        let c = bspec.channels;
        let main = match bspec.compression {
            Some(comp) => {
                let inner_c = bspec.inner_channels();
                let compress = CBlock {
                    conv: ConvVariant::Strided(init.full(c, inner_c, comp.time, comp.time)?),
                    bn: default_bn(inner_c),
                    activation: Some(act),
                };
                let mut units = Vec::with_capacity(bspec.inner_units());
                for _ in 0..bspec.inner_units() {
                    let conv = if spec.scheme == InitScheme::Identity {
                        let (fat, dw) = identity_ksep_with(
                            &mut init.rng,
                            inner_c,
                            bspec.depth,
                            bspec.factor,
                            spec.epsilon,
                        )?;
                        ConvVariant::KBlueprint { fat, dw }
                    } else {
                        init.unit(bspec, inner_c)?
                    };
                    units.push(CBlock { conv, bn: default_bn(inner_c), activation: Some(act) });
                }
                let pre_decompress = if spec.scheme == InitScheme::Identity {
                    centered_delta_dw(inner_c, bspec.depthwise_depth(), 1)?
                } else {
                    init.dw(inner_c, bspec.depthwise_depth(), 1)?
                };
                MainBranch::Compressed {
                    compress,
                    units,
                    pre_decompress,
                    decompress_conv: init.full(inner_c, c, comp.time, comp.time)?,
                    decompress_bn: default_bn(c),
                }
            }
            None => {
                let total = bspec.inner_units();
                let units = (0..total)
                    .map(|u| {
                        Ok(CBlock {
                            conv: init.unit(bspec, c)?,
                            bn: default_bn(c),
                            activation: if u + 1 == total { None } else { Some(act) },
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                MainBranch::Plain { units }
            }
        };
        blocks.push(ResidualBlock {
            main,
            skip_pw: init.pw(c, c)?,
            skip_bn: default_bn(c),
            activation: act,
        });
    }

    let c2 = CBlock {
        conv: ConvVariant::Separable {
            dw: init.dw(config.c1.channels, config.c2.depth, 1)?,
            pw: init.pw(config.c1.channels, config.c2.channels)?,
        },
        bn: default_bn(config.c2.channels),
        activation: Some(act),
    };
    let c3 = CBlock {
        conv: ConvVariant::Full(init.full(config.c2.channels, config.c3.channels, config.c3.depth, 1)?),
        bn: default_bn(config.c3.channels),
        activation: Some(act),
    };
    let decoder = init.pw(config.c3.channels, NUM_CLASSES)?;

    Ok(Model { config: config.clone(), c1, blocks, c2, c3, decoder })
}
