//! Acceptance suite: one test per release criterion, each printing a
//! `criterion N: PASS` line (visible with `--nocapture`).
//!
//! The convolution criteria check the fast paths against the naive
//! nested-loop implementations in `wavecall_core::reference`; the CTC
//! criterion checks beam search against exhaustive path enumeration; the
//! cost criteria check closed forms against instrumented multiply counters.

use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use wavecall_core::activation::{Activation, BatchNormParams};
use wavecall_core::block::{
    blueprint_separable_conv, k_blueprint_separable_conv, separable_conv, CBlock, ConvVariant,
    MainBranch, ResidualBlock,
};
use wavecall_core::conv::{
    conv1d_depthwise, conv1d_fat_pointwise, conv1d_full, conv1d_pointwise, conv1d_strided,
    conv1d_transposed_strided, DepthwiseParams, FatPointwiseParams, FullConvParams,
    PointwiseParams,
};
use wavecall_core::cost::{cost_full, cost_ksep, cost_separable};
use wavecall_core::ctc::{
    beam_decode, collapse, greedy_decode, FrameProbs, BLANK, NUM_CLASSES,
};
use wavecall_core::init::{identity_init_ksep, init_model, InitScheme, InitSpec};
use wavecall_core::model::{
    CompressionSpec, ConvOrder, EntryConvSpec, ExitConvSpec, Model, ModelConfig,
    ResidualBlockSpec, SeparableConvSpec,
};
use wavecall_core::pipeline::{
    bench_depth_sweep, bench_layer_variants, call_reads, chunk_signal, normalize_signal,
    stitch_frame_probs, to_fastq, ChunkPlan, DecodeMode, ModelRunner,
};
use wavecall_core::quant::{fold_batchnorm_full, post_training_quantize, QuantParams};
use wavecall_core::reference;
use wavecall_core::tensor::Tensor;
use wavecall_core::io::signal::SignalRecord;

const TOL: f32 = 1e-5;

fn rvec(rng: &mut StdRng, n: usize) -> Vec<f32> {
    (0..n).map(|_| rng.gen_range(-1.0f32..1.0)).collect()
}

fn rtensor(rng: &mut StdRng, t: usize, c: usize) -> Tensor<f32> {
    Tensor::from_vec(t, c, rvec(rng, t * c)).unwrap()
}

fn rbn(rng: &mut StdRng, c: usize) -> BatchNormParams<f32> {
    BatchNormParams::new(
        rvec(rng, c),
        rvec(rng, c),
        (0..c).map(|_| rng.gen_range(-0.5f32..0.5)).collect(),
        (0..c).map(|_| rng.gen_range(0.5f32..1.5)).collect(),
        1e-3,
    )
    .unwrap()
}

fn assert_close(a: &Tensor<f32>, b: &Tensor<f32>, what: &str) {
    let diff = a.max_abs_diff(b).unwrap();
    assert!(diff <= TOL, "{what}: max-abs-diff {diff} > {TOL}");
}

// ── independent straight-line helpers for composite oracles ────────

fn bn_apply_ref(x: &Tensor<f32>, bn: &BatchNormParams<f32>) -> Tensor<f32> {
    let (t, c) = x.shape();
    let mut out = Vec::with_capacity(t * c);
    for ti in 0..t {
        for j in 0..c {
            let v = x.get(ti, j);
            out.push(
                (v - bn.running_mean[j]) / (bn.running_var[j] + bn.epsilon).sqrt() * bn.gamma[j]
                    + bn.beta[j],
            );
        }
    }
    Tensor::from_vec(t, c, out).unwrap()
}

fn relu6_ref(x: &Tensor<f32>) -> Tensor<f32> {
    x.map(|v| if v < 0.0 { 0.0 } else if v > 6.0 { 6.0 } else { v })
}

fn add_ref(a: &Tensor<f32>, b: &Tensor<f32>) -> Tensor<f32> {
    let data = a.data().iter().zip(b.data()).map(|(x, y)| x + y).collect();
    Tensor::from_vec(a.time(), a.channels(), data).unwrap()
}

#[test]
fn criterion_01_convolution_oracle_suite() {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(101);
    const N: usize = 200;

    for _ in 0..N {
        // full (odd depth, stride 1)
        let (t, c_in, c_out) = (rng.gen_range(1..=64), rng.gen_range(1..=16), rng.gen_range(1..=16));
        let depth = 2 * rng.gen_range(0..=4) + 1;
        let x = rtensor(&mut rng, t, c_in);
        let p = FullConvParams::new(c_in, c_out, depth, 1, rvec(&mut rng, c_out * depth * c_in), rvec(&mut rng, c_out)).unwrap();
        assert_close(&conv1d_full(&x, &p).unwrap(), &reference::conv1d_full(&x, &p).unwrap().0, "full");

        // depthwise with dilation
        let (t, c) = (rng.gen_range(1..=64), rng.gen_range(1..=16));
        let m = rng.gen_range(1..=7);
        let dilation = rng.gen_range(1..=3);
        let x = rtensor(&mut rng, t, c);
        let p = DepthwiseParams::new(c, m, dilation, rvec(&mut rng, m * c), rvec(&mut rng, c)).unwrap();
        assert_close(&conv1d_depthwise(&x, &p).unwrap(), &reference::conv1d_depthwise(&x, &p).unwrap().0, "depthwise");

        // pointwise
        let (t, c_in, c_out) = (rng.gen_range(1..=64), rng.gen_range(1..=16), rng.gen_range(1..=16));
        let x = rtensor(&mut rng, t, c_in);
        let p = PointwiseParams::new(c_in, c_out, rvec(&mut rng, c_out * c_in), rvec(&mut rng, c_out)).unwrap();
        assert_close(&conv1d_pointwise(&x, &p).unwrap(), &reference::conv1d_pointwise(&x, &p).unwrap().0, "pointwise");

        // fat-pointwise (odd and even windows)
        let (t, c_in, c_out) = (rng.gen_range(1..=64), rng.gen_range(1..=16), rng.gen_range(1..=16));
        let window = rng.gen_range(1..=6);
        let x = rtensor(&mut rng, t, c_in);
        let p = FatPointwiseParams::new(c_in, c_out, window, rvec(&mut rng, c_out * window * c_in), rvec(&mut rng, c_out)).unwrap();
        assert_close(&conv1d_fat_pointwise(&x, &p).unwrap(), &reference::conv1d_fat_pointwise(&x, &p).unwrap().0, "fat-pointwise");

        // strided compression and transposed decompression
        let stride = rng.gen_range(1..=4);
        let t = stride * rng.gen_range(1..=(64 / stride));
        let (c_in, c_out) = (rng.gen_range(1..=16), rng.gen_range(1..=16));
        let x = rtensor(&mut rng, t, c_in);
        let p = FullConvParams::new(c_in, c_out, stride, stride, rvec(&mut rng, c_out * stride * c_in), rvec(&mut rng, c_out)).unwrap();
        assert_close(&conv1d_strided(&x, &p).unwrap(), &reference::conv1d_strided(&x, &p).unwrap().0, "strided");
        let tt = rng.gen_range(1..=16);
        let xt = rtensor(&mut rng, tt, c_in);
        assert_close(&conv1d_transposed_strided(&xt, &p).unwrap(), &reference::conv1d_transposed_strided(&xt, &p).unwrap().0, "transposed");

        // separable and blueprint compositions
        let (t, c_in, c_out) = (rng.gen_range(1..=64), rng.gen_range(1..=16), rng.gen_range(1..=16));
        let m = rng.gen_range(1..=7);
        let x = rtensor(&mut rng, t, c_in);
        let dw = DepthwiseParams::new(c_in, m, 1, rvec(&mut rng, m * c_in), rvec(&mut rng, c_in)).unwrap();
        let pw = PointwiseParams::new(c_in, c_out, rvec(&mut rng, c_out * c_in), rvec(&mut rng, c_out)).unwrap();
        let oracle = reference::conv1d_pointwise(&reference::conv1d_depthwise(&x, &dw).unwrap().0, &pw).unwrap().0;
        assert_close(&separable_conv(&x, &dw, &pw).unwrap(), &oracle, "separable");

        let dw_out = DepthwiseParams::new(c_out, m, 1, rvec(&mut rng, m * c_out), rvec(&mut rng, c_out)).unwrap();
        let oracle = reference::conv1d_depthwise(&reference::conv1d_pointwise(&x, &pw).unwrap().0, &dw_out).unwrap().0;
        assert_close(&blueprint_separable_conv(&x, &pw, &dw_out).unwrap(), &oracle, "blueprint");

        // k-blueprint
        let k = rng.gen_range(1..=4);
        let m = rng.gen_range(1..=5);
        let fat = FatPointwiseParams::new(c_in, c_out, k, rvec(&mut rng, c_out * k * c_in), rvec(&mut rng, c_out)).unwrap();
        let dwk = DepthwiseParams::new(c_out, m, k, rvec(&mut rng, m * c_out), rvec(&mut rng, c_out)).unwrap();
        let oracle = reference::conv1d_depthwise(&reference::conv1d_fat_pointwise(&x, &fat).unwrap().0, &dwk).unwrap().0;
        assert_close(&k_blueprint_separable_conv(&x, &fat, &dwk).unwrap(), &oracle, "k-blueprint");

        // depth-to-space residual block vs straight-line composition
        let (x_div, y_mul) = (3, rng.gen_range(1..=2));
        let t = 3 * rng.gen_range(1..=21);
        let c = rng.gen_range(1..=8);
        let ci = c * y_mul;
        let x = rtensor(&mut rng, t, c);
        let compress_conv = FullConvParams::new(c, ci, x_div, x_div, rvec(&mut rng, ci * x_div * c), rvec(&mut rng, ci)).unwrap();
        let compress_bn = rbn(&mut rng, ci);
        let k = 3;
        let m = 3;
        let fat = FatPointwiseParams::new(ci, ci, k, rvec(&mut rng, ci * k * ci), rvec(&mut rng, ci)).unwrap();
        let udw = DepthwiseParams::new(ci, m, k, rvec(&mut rng, m * ci), rvec(&mut rng, ci)).unwrap();
        let unit_bn = rbn(&mut rng, ci);
        let pre = DepthwiseParams::new(ci, m, 1, rvec(&mut rng, m * ci), rvec(&mut rng, ci)).unwrap();
        let dec_conv = FullConvParams::new(ci, c, x_div, x_div, rvec(&mut rng, c * x_div * ci), rvec(&mut rng, c)).unwrap();
        let dec_bn = rbn(&mut rng, c);
        let skip_pw = PointwiseParams::new(c, c, rvec(&mut rng, c * c), rvec(&mut rng, c)).unwrap();
        let skip_bn = rbn(&mut rng, c);

        let block = ResidualBlock {
            main: MainBranch::Compressed {
                compress: CBlock {
                    conv: ConvVariant::Strided(compress_conv.clone()),
                    bn: compress_bn.clone(),
                    activation: Some(Activation::Relu6),
                },
                units: vec![CBlock {
                    conv: ConvVariant::KBlueprint { fat: fat.clone(), dw: udw.clone() },
                    bn: unit_bn.clone(),
                    activation: Some(Activation::Relu6),
                }],
                pre_decompress: pre.clone(),
                decompress_conv: dec_conv.clone(),
                decompress_bn: dec_bn.clone(),
            },
            skip_pw: skip_pw.clone(),
            skip_bn: skip_bn.clone(),
            activation: Activation::Relu6,
        };
        let got = block.forward(&x).unwrap();

        let comp = relu6_ref(&bn_apply_ref(&reference::conv1d_strided(&x, &compress_conv).unwrap().0, &compress_bn));
        let inner = reference::conv1d_depthwise(&reference::conv1d_fat_pointwise(&comp, &fat).unwrap().0, &udw).unwrap().0;
        let inner = relu6_ref(&bn_apply_ref(&inner, &unit_bn));
        let pre_out = reference::conv1d_depthwise(&inner, &pre).unwrap().0;
        let main = bn_apply_ref(&reference::conv1d_transposed_strided(&pre_out, &dec_conv).unwrap().0, &dec_bn);
        let skip = bn_apply_ref(&reference::conv1d_pointwise(&x, &skip_pw).unwrap().0, &skip_bn);
        let want = relu6_ref(&add_ref(&main, &skip));
        assert_eq!(got.shape(), x.shape(), "d2s block must preserve shape");
        assert_close(&got, &want, "d2s block");
    }

    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 60.0, "criterion 1 exceeded its 60 s budget ({secs:.1} s)");
    println!("criterion 1 (convolution oracle suite, {N} instances/op): PASS ({secs:.1} s)");
}

#[test]
fn criterion_02_k1_reduction() {
    let mut rng = StdRng::seed_from_u64(102);
    for _ in 0..50 {
        let (t, c) = (rng.gen_range(1..=48), rng.gen_range(1..=12));
        let m = rng.gen_range(1..=7);
        let x = rtensor(&mut rng, t, c);
        let w = rvec(&mut rng, c * c);
        let b = rvec(&mut rng, c);
        let pw = PointwiseParams::new(c, c, w.clone(), b.clone()).unwrap();
        let fat = FatPointwiseParams::new(c, c, 1, w, b).unwrap();
        let dw = DepthwiseParams::new(c, m, 1, rvec(&mut rng, m * c), rvec(&mut rng, c)).unwrap();
        let a = blueprint_separable_conv(&x, &pw, &dw).unwrap();
        let bq = k_blueprint_separable_conv(&x, &fat, &dw).unwrap();
        assert_eq!(a, bq, "k=1 must be exactly the blueprint ordering (zero tolerance)");

        let (tc, cc, dd) = (rng.gen_range(1..=4096u64), rng.gen_range(1..=256u64), rng.gen_range(1..=33u64));
        let ks = cost_ksep(tc, cc, cc, dd, 1).unwrap();
        let sep = cost_separable(tc, cc, cc, dd);
        assert_eq!(ks.macs, sep.macs);
        assert_eq!(ks.params, sep.params);
    }
    println!("criterion 2 (k=1 reduction, 50 specs): PASS");
}

#[test]
fn criterion_03_receptive_field_support() {
    for &(depth, k) in &[(9usize, 3usize), (15, 3), (21, 3), (27, 3), (33, 3), (8, 2), (12, 2)] {
        let m = depth / k;
        let c = 3;
        let t = 96;
        let fat = FatPointwiseParams::new(c, c, k, vec![1.0f32; c * k * c], vec![0.0; c]).unwrap();
        let dw = DepthwiseParams::new(c, m, k, vec![1.0; m * c], vec![0.0; c]).unwrap();
        let center = t / 2;
        let mut data = vec![0.0f32; t * c];
        data[center * c] = 1.0;
        let x = Tensor::from_vec(t, c, data).unwrap();
        let y = k_blueprint_separable_conv(&x, &fat, &dw).unwrap();
        let hits: Vec<usize> = (0..t).filter(|&ti| y.get(ti, 0) != 0.0).collect();
        let (first, last) = (*hits.first().unwrap(), *hits.last().unwrap());
        assert_eq!(hits.len(), last - first + 1, "support must be contiguous (D={depth}, k={k})");
        assert_eq!(last - first + 1, depth, "support must equal D (D={depth}, k={k})");
        let symmetric = center - first == last - center;
        assert_eq!(
            symmetric,
            m % 2 == 1,
            "support symmetric iff D/k odd (D={depth}, k={k}, D/k={m})"
        );
    }
    println!("criterion 3 (receptive field = D; symmetry iff D/k odd): PASS");
}

#[test]
fn criterion_04_identity_init_units_are_identity() {
    let mut rng = StdRng::seed_from_u64(104);
    for trial in 0..20 {
        let c = rng.gen_range(1..=12);
        let k = [1, 2, 3][trial % 3];
        let m = rng.gen_range(1..=6);
        let depth = k * m;
        let (fat, dw) = identity_init_ksep::<f32>(c, depth, k, 0.0, trial as u64).unwrap();
        let t = rng.gen_range(1..=48);

        // identity everywhere: BN identity, no activation
        let x = rtensor(&mut rng, t, c);
        let unit = CBlock {
            conv: ConvVariant::KBlueprint { fat: fat.clone(), dw: dw.clone() },
            bn: BatchNormParams::identity(c),
            activation: None,
        };
        assert_eq!(unit.forward(&x).unwrap(), x, "exact identity (no activation)");

        // still exact with relu6 when inputs stay in [0, 6]
        let x06 = Tensor::from_vec(t, c, (0..t * c).map(|_| rng.gen_range(0.0f32..=6.0)).collect()).unwrap();
        let unit = CBlock {
            conv: ConvVariant::KBlueprint { fat, dw },
            bn: BatchNormParams::identity(c),
            activation: Some(Activation::Relu6),
        };
        assert_eq!(unit.forward(&x06).unwrap(), x06, "exact identity under relu6 on [0,6]");
    }

    // and the init_model wiring applies it to every compressed-branch unit
    let mut cfg = ModelConfig::default();
    cfg.chunk_len = 90;
    cfg.batch = 1;
    cfg.c1 = EntryConvSpec { channels: 8, depth: 9, stride: 3 };
    cfg.blocks = vec![ResidualBlockSpec {
        repeats: 4,
        channels: 8,
        depth: 9,
        factor: 3,
        order: ConvOrder::PointwiseFirst,
        compression: Some(CompressionSpec { time: 3, channels: 2 }),
    }];
    cfg.c2 = SeparableConvSpec { channels: 8, depth: 5 };
    cfg.c3 = ExitConvSpec { channels: 4, depth: 3 };
    let model: Model<f32> =
        init_model(&cfg, &InitSpec { scheme: InitScheme::Identity, epsilon: 0.0, seed: 9 }).unwrap();
    let MainBranch::Compressed { units, .. } = &model.blocks[0].main else {
        panic!("expected a compressed block")
    };
    assert_eq!(units.len(), 2);
    let x = rtensor(&mut rng, 10, 16);
    for unit in units {
        assert_eq!(unit.conv.forward(&x).unwrap(), x);
    }
    println!("criterion 4 (identity init is the exact identity map): PASS");
}

#[test]
fn criterion_05_flop_formulas_match_multiply_counters() {
    for t in 1..=32usize {
        for c_in in 1..=8usize {
            for c_out in 1..=8usize {
                for depth in [1usize, 3, 5, 7, 9] {
                    let x = Tensor::from_vec(t, c_in, vec![0.5f32; t * c_in]).unwrap();
                    let full = FullConvParams::new(
                        c_in, c_out, depth, 1,
                        vec![0.25; c_out * depth * c_in],
                        vec![0.0; c_out],
                    )
                    .unwrap();
                    let (_, muls) = reference::conv1d_full(&x, &full).unwrap();
                    assert_eq!(muls, cost_full(t as u64, c_in as u64, c_out as u64, depth as u64).macs);

                    let dw = DepthwiseParams::new(c_in, depth, 1, vec![0.25; depth * c_in], vec![0.0; c_in]).unwrap();
                    let pw = PointwiseParams::new(c_in, c_out, vec![0.25; c_out * c_in], vec![0.0; c_out]).unwrap();
                    let (mid, m1) = reference::conv1d_depthwise(&x, &dw).unwrap();
                    let (_, m2) = reference::conv1d_pointwise(&mid, &pw).unwrap();
                    assert_eq!(
                        m1 + m2,
                        cost_separable(t as u64, c_in as u64, c_out as u64, depth as u64).macs
                    );
                }
            }
        }
    }
    println!("criterion 5 (cost formulas = instrumented multiply counts, T<=32 C<=8 D<=9): PASS");
}

#[test]
fn criterion_06_parameter_ratio() {
    let ksep = cost_ksep(1668, 128, 128, 21, 3).unwrap();
    let sep = cost_separable(1668, 128, 128, 21);
    let ratio = ksep.params as f64 / sep.params as f64;
    assert!(ratio > 2.0 && ratio <= 3.0, "ratio {ratio:.4} outside (2, 3]");
    assert!((ratio - 2.6027).abs() < 0.01, "ratio {ratio:.4} departs from the derived 2.60");
    println!(
        "criterion 6 (parameter ratio k=3 vs separable at C=128, D=21): PASS (ratio {ratio:.3})"
    );
}

#[test]
fn criterion_07_shape_pipeline_anchors() {
    let cfg = ModelConfig::default();
    let model: Model<f32> = init_model(
        &cfg,
        &InitSpec { scheme: InitScheme::GlorotUniform, epsilon: 0.0, seed: 107 },
    )
    .unwrap();
    let mut rng = StdRng::seed_from_u64(1007);
    let x = Tensor::from_vec(5004, 1, (0..5004).map(|_| rng.gen_range(-2.0f32..2.0)).collect()).unwrap();
    let mut shapes = Vec::new();
    let probs = model
        .run_traced(&x, &mut |name, t| shapes.push((name.to_string(), t.shape())))
        .unwrap();
    let get = |n: &str| shapes.iter().find(|(name, _)| name == n).map(|&(_, s)| s);
    assert_eq!(get("c1.out"), Some((1668, 128)), "post-C1 tensor");
    for i in 1..=5 {
        assert_eq!(
            get(&format!("b{i}.compress.out")),
            Some((556, 256)),
            "compressed-branch tensor of block {i}"
        );
    }
    assert_eq!(probs.frames(), 1668);
    for t in 0..probs.frames() {
        let sum: f32 = (0..NUM_CLASSES).map(|c| probs.prob(t, c)).sum();
        assert!((sum - 1.0).abs() <= 1e-6, "frame {t} sums to {sum}");
    }
    println!("criterion 7 (5004 -> (1668,128) -> (556,256) -> (1668,5) normalized): PASS");
}

#[test]
fn criterion_08_bn_folding_and_quantization() {
    let mut rng = StdRng::seed_from_u64(108);

    // folding preserves float semantics
    for _ in 0..50 {
        let (t, c_in, c_out) = (rng.gen_range(1..=32), rng.gen_range(1..=8), rng.gen_range(1..=8));
        let depth = 2 * rng.gen_range(0..=3) + 1;
        let x = rtensor(&mut rng, t, c_in);
        let p = FullConvParams::new(c_in, c_out, depth, 1, rvec(&mut rng, c_out * depth * c_in), rvec(&mut rng, c_out)).unwrap();
        let bn = rbn(&mut rng, c_out);
        let unfused = bn_apply_ref(&reference::conv1d_full(&x, &p).unwrap().0, &bn);
        let fused = conv1d_full(&x, &fold_batchnorm_full(&p, &bn).unwrap()).unwrap();
        assert_close(&fused, &unfused, "bn folding");
    }

    // int8 round trip within half a scale step
    let q = QuantParams { scale: 0.04, zero_point: 17 };
    for _ in 0..2000 {
        let lo = (-128 - q.zero_point) as f32 * q.scale;
        let hi = (127 - q.zero_point) as f32 * q.scale;
        let v = rng.gen_range(lo..hi);
        let back = q.dequantize(q.quantize(v));
        assert!((back - v).abs() <= q.scale / 2.0 + 1e-6);
    }

    // quantized vs float argmax agreement >= 95% over 20 random models
    let mut cfg = ModelConfig::default();
    cfg.chunk_len = 504;
    cfg.batch = 1;
    cfg.c1 = EntryConvSpec { channels: 16, depth: 9, stride: 3 };
    cfg.blocks = vec![ResidualBlockSpec {
        repeats: 3,
        channels: 16,
        depth: 9,
        factor: 3,
        order: ConvOrder::PointwiseFirst,
        compression: Some(CompressionSpec { time: 3, channels: 2 }),
    }];
    cfg.c2 = SeparableConvSpec { channels: 16, depth: 5 };
    cfg.c3 = ExitConvSpec { channels: 8, depth: 3 };

    let synth_read = |rng: &mut StdRng, n: usize| -> Vec<f32> {
        (0..n).map(|i| 70.0 + 12.0 * ((i as f32) * 0.21).sin() + rng.gen_range(-4.0f32..4.0)).collect()
    };
    let mut agree = 0u64;
    let mut total = 0u64;
    for model_seed in 0..20u64 {
        let model: Model<f32> = init_model(
            &cfg,
            &InitSpec { scheme: InitScheme::GlorotUniform, epsilon: 0.0, seed: 900 + model_seed },
        )
        .unwrap();
        let calib: Vec<Tensor<f32>> = (0..3)
            .map(|_| {
                let norm = normalize_signal(&synth_read(&mut rng, 504));
                Tensor::from_samples(&norm).unwrap()
            })
            .collect();
        let qm = post_training_quantize(&model, &calib).unwrap();
        let x = Tensor::from_samples(&normalize_signal(&synth_read(&mut rng, 504))).unwrap();
        let fp = model.run(&x).unwrap();
        let qp = qm.run(&x).unwrap();
        for t in 0..fp.frames() {
            let argmax = |p: &FrameProbs<f32>| {
                (0..NUM_CLASSES).fold(0, |best, c| if p.prob(t, c) > p.prob(t, best) { c } else { best })
            };
            agree += u64::from(argmax(&fp) == argmax(&qp));
            total += 1;
        }
    }
    let rate = agree as f64 / total as f64;
    assert!(rate >= 0.95, "argmax agreement {rate:.4} below 0.95");
    println!(
        "criterion 8 (bn folding <= 1e-5; roundtrip <= scale/2; int8 argmax agreement): PASS ({:.1}%)",
        rate * 100.0
    );
}

#[test]
fn criterion_09_ctc_decoders() {
    let started = Instant::now();

    // greedy collapse rules
    let path_probs = |path: &[usize]| -> FrameProbs<f32> {
        let mut data = Vec::new();
        for &l in path {
            for c in 0..NUM_CLASSES {
                data.push(if c == l { 0.9 } else { 0.025 });
            }
        }
        FrameProbs::new(Tensor::from_vec(path.len(), NUM_CLASSES, data).unwrap()).unwrap()
    };
    assert_eq!(greedy_decode(&path_probs(&[0, 0, BLANK, 0, 1])).sequence, "AAC");
    assert_eq!(greedy_decode(&path_probs(&[BLANK, BLANK, BLANK])).sequence, "");
    assert_eq!(greedy_decode(&path_probs(&[0, BLANK, 0])).sequence, "AA");

    // beam equals exhaustive max-posterior enumeration for T' <= 6
    let mut rng = StdRng::seed_from_u64(109);
    for trial in 0..100 {
        let frames = 1 + trial % 6;
        let mut data = Vec::with_capacity(frames * NUM_CLASSES);
        for _ in 0..frames {
            let row: Vec<f64> = (0..NUM_CLASSES).map(|_| rng.gen_range(0.05..1.0)).collect();
            let s: f64 = row.iter().sum();
            data.extend(row.into_iter().map(|v| v / s));
        }
        let probs = FrameProbs::new(Tensor::from_vec(frames, NUM_CLASSES, data).unwrap()).unwrap();

        let mut by_string: std::collections::HashMap<String, f64> = std::collections::HashMap::new();
        for mut code in 0..NUM_CLASSES.pow(frames as u32) {
            let mut path = Vec::with_capacity(frames);
            let mut prob = 1.0f64;
            for t in 0..frames {
                let label = code % NUM_CLASSES;
                code /= NUM_CLASSES;
                path.push(label);
                prob *= probs.prob(t, label);
            }
            *by_string.entry(collapse(&path)).or_insert(0.0) += prob;
        }
        let best = by_string
            .into_iter()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| b.0.cmp(&a.0)))
            .unwrap()
            .0;
        let decoded = beam_decode(&probs, NUM_CLASSES.pow(frames as u32));
        assert_eq!(decoded.sequence, best, "trial {trial} (T'={frames})");
    }

    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 60.0, "criterion 9 exceeded its 60 s budget ({secs:.1} s)");
    println!("criterion 9 (greedy collapse rules; beam = exhaustive argmax, 100 trials): PASS ({secs:.1} s)");
}

#[test]
fn criterion_10_determinism_and_stitching() {
    // small model with a compact receptive field (153 samples)
    let mut cfg = ModelConfig::default();
    cfg.chunk_len = 1008;
    cfg.batch = 1;
    cfg.c1 = EntryConvSpec { channels: 12, depth: 9, stride: 3 };
    cfg.blocks = vec![ResidualBlockSpec {
        repeats: 3,
        channels: 12,
        depth: 9,
        factor: 3,
        order: ConvOrder::PointwiseFirst,
        compression: Some(CompressionSpec { time: 3, channels: 2 }),
    }];
    cfg.c2 = SeparableConvSpec { channels: 12, depth: 11 };
    cfg.c3 = ExitConvSpec { channels: 8, depth: 7 };
    let model: Model<f32> = init_model(
        &cfg,
        &InitSpec { scheme: InitScheme::GlorotUniform, epsilon: 0.0, seed: 110 },
    )
    .unwrap();
    let runner = ModelRunner::Float(model);

    let mut rng = StdRng::seed_from_u64(1010);
    let samples: Vec<f32> = (0..2016)
        .map(|i| 60.0 + 9.0 * ((i as f32) * 0.17).sin() + rng.gen_range(-3.0f32..3.0))
        .collect();
    let reads = vec![SignalRecord { read_id: "r1".into(), samples: samples.clone() }];

    // byte-identical output across invocations and thread counts
    let plan = ChunkPlan::new(1008, 504, 84).unwrap();
    let run = |threads| {
        let calls = call_reads(&runner, &plan, &reads, DecodeMode::Greedy, threads).unwrap();
        calls.iter().map(to_fastq).collect::<String>()
    };
    let a = run(1);
    let b = run(1);
    let c = run(4);
    assert_eq!(a, b, "repeat invocations must be byte-identical");
    assert_eq!(a, c, "thread count must not change output bytes");

    // single-chunk vs multi-chunk interior frame probabilities
    let normalized = normalize_signal(&samples);
    let run_plan = |plan: &ChunkPlan| {
        let probs: Vec<(usize, FrameProbs<f32>)> = chunk_signal(&normalized, plan)
            .iter()
            .map(|ch| (ch.start, runner.run(&Tensor::from_samples(&ch.samples).unwrap()).unwrap()))
            .collect();
        stitch_frame_probs(&probs, plan, normalized.len()).unwrap()
    };
    let single = run_plan(&ChunkPlan::new(2016, 0, 0).unwrap());
    let multi = run_plan(&plan);
    assert_eq!(single.frames(), multi.frames());
    // every stitched frame sits >= 252 samples inside its source chunk,
    // beyond the 77-sample receptive-field radius, so all frames must agree
    let diff = single.tensor().max_abs_diff(multi.tensor()).unwrap();
    assert!(diff <= TOL, "interior frame probabilities diverge: {diff}");
    println!("criterion 10 (deterministic basecall; stitching matches single-chunk): PASS");
}

#[test]
fn criterion_11_bench_harness_completes() {
    let started = Instant::now();
    let layer_rows = bench_layer_variants(1);
    let shapes: std::collections::HashSet<(usize, usize, usize)> =
        layer_rows.iter().map(|r| r.shape).collect();
    assert!(shapes.contains(&(4, 1668, 128)) && shapes.contains(&(4, 556, 256)));
    for label in ["pointwise", "full", "separable", "blueprint", "k-blueprint (k=2)", "k-blueprint (k=3)"] {
        assert!(layer_rows.iter().any(|r| r.label == label), "missing row {label}");
        // every timing row carries its analytical MAC count
        assert!(layer_rows.iter().filter(|r| r.label == label).all(|r| r.macs > 0));
    }

    let sweep = bench_depth_sweep(&[9, 15, 21, 27, 33], 1).unwrap();
    assert_eq!(sweep.iter().map(|r| r.depth).collect::<Vec<_>>(), vec![9, 15, 21, 27, 33]);
    for row in &sweep {
        assert!(row.samples_per_sec > 0.0);
    }
    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 600.0, "bench harness exceeded its 10 min budget ({secs:.0} s)");
    let d21 = sweep.iter().find(|r| r.depth == 21).unwrap();
    println!(
        "criterion 11 (bench: Fig-3 shapes + depth sweep in {secs:.0} s; depth-21 model {:.0} samples/s): PASS",
        d21.samples_per_sec
    );
}
