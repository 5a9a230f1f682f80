//! End-to-end base calling: normalization, chunking, stitching, decoding,
//! record formatting, and the benchmark harness.
//!
//! Reads are normalized per read (median / scaled-MAD), split into
//! overlapping chunks whose length the network accepts, run through the
//! float or quantized model, stitched back by keeping each overlap frame
//! from the chunk whose center is nearer, and decoded with greedy or beam
//! CTC. Chunks are processed by a worker pool; outputs are assembled in
//! input order, so results are a pure function of (config, weights, signal
//! bytes, flags) regardless of thread count.

use std::time::Instant;

use rayon::prelude::*;

use crate::block::{
    blueprint_separable_conv, k_blueprint_separable_conv, separable_conv,
};
use crate::conv::{
    conv1d_full, conv1d_pointwise, DepthwiseParams, FatPointwiseParams, FullConvParams,
    PointwiseParams,
};
use crate::cost::{cost_full, cost_ksep, cost_separable, LayerSpec};
use crate::ctc::{beam_decode, greedy_decode, CallResult, FrameProbs, NUM_CLASSES};
use crate::error::{CoreError, Result};
use crate::init::{glorot_uniform, init_model, InitScheme, InitSpec};
use crate::model::{Model, ModelConfig, CHUNK_ALIGN};
use crate::quant::QuantizedModel;
use crate::tensor::Tensor;

/// Scale factor turning a median absolute deviation into a robust standard
/// deviation estimate under normality.
const MAD_SCALE: f32 = 1.4826;

/// Median / scaled-MAD normalization per read:
/// `(v - median) / (1.4826·MAD + 1e-8)`. Constant reads map to zeros; the
/// result is invariant under positive affine rescaling of the input.
pub fn normalize_signal(samples: &[f32]) -> Vec<f32> {
    assert!(!samples.is_empty(), "normalize_signal needs at least one sample");
    let median = median_of(samples);
    let deviations: Vec<f32> = samples.iter().map(|&v| (v - median).abs()).collect();
    let mad = median_of(&deviations);
    let denom = MAD_SCALE * mad + 1e-8;
    samples.iter().map(|&v| (v - median) / denom).collect()
}

fn median_of(values: &[f32]) -> f32 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("signal values must not be NaN"));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Chunk geometry: chunk length, overlap between consecutive chunks (both in
/// samples) and the number of output frames trimmed from each side of an
/// interior chunk boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChunkPlan {
    pub chunk_len: usize,
    pub overlap: usize,
    pub trim_frames: usize,
}

impl Default for ChunkPlan {
    fn default() -> Self {
        Self { chunk_len: 5004, overlap: 504, trim_frames: 84 }
    }
}

impl ChunkPlan {
    pub fn new(chunk_len: usize, overlap: usize, trim_frames: usize) -> Result<Self> {
        let plan = Self { chunk_len, overlap, trim_frames };
        plan.validate()?;
        Ok(plan)
    }

    /// Default overlap/trim for a given chunk length: 504/84 when they fit,
    /// otherwise scaled down while keeping the alignment invariants.
    pub fn for_chunk_len(chunk_len: usize) -> Result<Self> {
        let overlap = if chunk_len > 2 * 504 { 504 } else { (chunk_len / 2) / 3 * 3 };
        Self::new(chunk_len, overlap, overlap / 6)
    }

    pub fn validate(&self) -> Result<()> {
        if self.chunk_len == 0 || self.chunk_len % CHUNK_ALIGN != 0 {
            return Err(CoreError::InvalidSpec(format!(
                "chunk_len {} must be a positive multiple of {CHUNK_ALIGN}",
                self.chunk_len
            )));
        }
        if self.overlap >= self.chunk_len {
            return Err(CoreError::InvalidSpec(format!(
                "overlap {} must be smaller than chunk_len {}",
                self.overlap, self.chunk_len
            )));
        }
        if self.overlap % 3 != 0 {
            return Err(CoreError::InvalidSpec(format!(
                "overlap {} must be a multiple of 3 to keep frames aligned",
                self.overlap
            )));
        }
        if self.trim_frames * 3 > self.overlap {
            return Err(CoreError::InvalidSpec(format!(
                "trim_frames {} exceeds the overlap of {} frames",
                self.trim_frames,
                self.overlap / 3
            )));
        }
        Ok(())
    }

    /// Distance between consecutive chunk starts.
    pub fn step(&self) -> usize {
        self.chunk_len - self.overlap
    }

    /// Output frames per chunk.
    pub fn frames(&self) -> usize {
        self.chunk_len / 3
    }
}

/// A chunk of normalized signal: its start offset in the read and its
/// samples, zero-padded to the plan's chunk length.
#[derive(Clone, Debug, PartialEq)]
pub struct Chunk {
    pub start: usize,
    pub samples: Vec<f32>,
}

/// Splits a read into overlapping chunks starting at multiples of
/// `chunk_len - overlap`; the final chunk is right-padded with zeros.
pub fn chunk_signal(samples: &[f32], plan: &ChunkPlan) -> Vec<Chunk> {
    assert!(!samples.is_empty());
    let mut chunks = Vec::new();
    let mut start = 0;
    loop {
        let end = (start + plan.chunk_len).min(samples.len());
        let mut data = samples[start..end].to_vec();
        data.resize(plan.chunk_len, 0.0);
        chunks.push(Chunk { start, samples: data });
        if start + plan.chunk_len >= samples.len() {
            break;
        }
        start += plan.step();
    }
    chunks
}

/// Reassembles per-chunk frame probabilities into a single sequence covering
/// `ceil(signal_len / 3)` frames. At each interior boundary the cut point
/// sits `trim_frames` before the end of the earlier chunk, which for the
/// default half-overlap trim keeps every frame from the chunk whose center
/// is nearer; frames from the zero-padded tail are dropped.
pub fn stitch_frame_probs(
    chunks: &[(usize, FrameProbs<f32>)],
    plan: &ChunkPlan,
    signal_len: usize,
) -> Result<FrameProbs<f32>> {
    if chunks.is_empty() {
        return Err(CoreError::InvalidSpec("stitch: no chunks".into()));
    }
    let frames_per_chunk = plan.frames();
    for (i, (start, probs)) in chunks.iter().enumerate() {
        if *start != i * plan.step() {
            return Err(CoreError::InvalidSpec(format!(
                "stitch: chunk {i} starts at {start}, expected {}",
                i * plan.step()
            )));
        }
        if probs.frames() != frames_per_chunk {
            return Err(CoreError::InvalidSpec(format!(
                "stitch: chunk {i} has {} frames, expected {frames_per_chunk}",
                probs.frames()
            )));
        }
    }
    let total_frames = signal_len.div_ceil(3);
    let mut data = Vec::with_capacity(total_frames * NUM_CLASSES);
    for (i, (start, probs)) in chunks.iter().enumerate() {
        let first_frame = start / 3;
        // the cut before this chunk is `trim_frames` from the previous
        // chunk's last frame
        let lo = if i == 0 {
            0
        } else {
            (first_frame - plan.step() / 3) + frames_per_chunk - plan.trim_frames
        };
        let hi = if i + 1 == chunks.len() {
            total_frames
        } else {
            first_frame + frames_per_chunk - plan.trim_frames
        };
        for frame in lo..hi {
            let local = frame - first_frame;
            for c in 0..NUM_CLASSES {
                data.push(probs.prob(local, c));
            }
        }
    }
    FrameProbs::new(Tensor::from_vec(total_frames, NUM_CLASSES, data)?)
}

/// Float or quantized executor behind one interface.
pub enum ModelRunner {
    Float(Model<f32>),
    Quantized(QuantizedModel),
}

impl ModelRunner {
    pub fn run(&self, x: &Tensor<f32>) -> Result<FrameProbs<f32>> {
        match self {
            ModelRunner::Float(m) => m.run(x),
            ModelRunner::Quantized(m) => m.run(x),
        }
    }

    pub fn config(&self) -> &ModelConfig {
        match self {
            ModelRunner::Float(m) => &m.config,
            ModelRunner::Quantized(m) => &m.config,
        }
    }
}

/// Decoder selection for the pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecodeMode {
    Greedy,
    Beam { width: usize },
}

/// A called read, with any warnings the pipeline produced for it.
#[derive(Clone, Debug, PartialEq)]
pub struct ReadCall {
    pub read_id: String,
    pub call: CallResult,
    pub warnings: Vec<String>,
}

/// Shortest read the pipeline will attempt to call.
pub const MIN_READ_SAMPLES: usize = 9;

/// Calls one read: normalize, chunk, run, stitch, decode. Reads shorter
/// than [`MIN_READ_SAMPLES`] yield an empty sequence plus a warning.
pub fn call_read(
    runner: &ModelRunner,
    plan: &ChunkPlan,
    read_id: &str,
    samples: &[f32],
    mode: DecodeMode,
) -> Result<ReadCall> {
    if samples.len() < MIN_READ_SAMPLES {
        return Ok(ReadCall {
            read_id: read_id.to_string(),
            call: CallResult { sequence: String::new(), qualities: Some(Vec::new()) },
            warnings: vec![format!(
                "read `{read_id}`: only {} samples (< {MIN_READ_SAMPLES}), emitting empty sequence",
                samples.len()
            )],
        });
    }
    let normalized = normalize_signal(samples);
    let chunks = chunk_signal(&normalized, plan);
    let probs: Vec<(usize, FrameProbs<f32>)> = chunks
        .par_iter()
        .map(|chunk| {
            let x = Tensor::from_samples(&chunk.samples)?;
            Ok((chunk.start, runner.run(&x)?))
        })
        .collect::<Result<_>>()?;
    let stitched = stitch_frame_probs(&probs, plan, samples.len())?;
    let call = match mode {
        DecodeMode::Greedy => greedy_decode(&stitched),
        DecodeMode::Beam { width } => beam_decode(&stitched, width),
    };
    Ok(ReadCall { read_id: read_id.to_string(), call, warnings: Vec::new() })
}

/// Calls a batch of reads on a worker pool of `threads` threads (0 = rayon
/// default). Output order equals input order.
pub fn call_reads(
    runner: &ModelRunner,
    plan: &ChunkPlan,
    reads: &[crate::io::signal::SignalRecord],
    mode: DecodeMode,
    threads: usize,
) -> Result<Vec<ReadCall>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CoreError::InvalidSpec(format!("thread pool: {e}")))?;
    pool.install(|| {
        reads
            .iter()
            .map(|r| call_read(runner, plan, &r.read_id, &r.samples, mode))
            .collect()
    })
}

/// Phred+33 quality character for an emission probability.
fn phred_char(p: f64) -> char {
    let p = p.clamp(0.0, 1.0 - 1e-10);
    let q = (-10.0 * (1.0 - p).log10()).round().clamp(0.0, 93.0) as u8;
    (33 + q) as char
}

/// FASTQ record (quality from per-base emission probabilities).
pub fn to_fastq(call: &ReadCall) -> String {
    let quals: String = match &call.call.qualities {
        Some(qs) => qs.iter().map(|&q| phred_char(q)).collect(),
        None => "!".repeat(call.call.sequence.len()),
    };
    format!("@{}\n{}\n+\n{}\n", call.read_id, call.call.sequence, quals)
}

/// FASTA record.
pub fn to_fasta(call: &ReadCall) -> String {
    format!(">{}\n{}\n", call.read_id, call.call.sequence)
}

// ── Benchmark harness ──────────────────────────────────────────────

/// One layer-variant timing row.
#[derive(Clone, Debug)]
pub struct LayerBenchRow {
    pub label: String,
    /// `(batch, time, channels)` of the input.
    pub shape: (usize, usize, usize),
    pub depth: usize,
    pub median_ms: f64,
    /// Multiplications per evaluation of the whole batch.
    pub macs: u64,
}

/// One full-model depth-sweep row.
#[derive(Clone, Debug)]
pub struct DepthSweepRow {
    pub depth: usize,
    pub median_ms: f64,
    pub samples_per_sec: f64,
    pub macs: u64,
}

fn median_ms(repeats: usize, mut f: impl FnMut()) -> f64 {
    f(); // warmup
    let mut times: Vec<f64> = (0..repeats.max(1))
        .map(|_| {
            let t0 = Instant::now();
            f();
            t0.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times[times.len() / 2]
}

fn bench_input(batch: usize, t: usize, c: usize, seed: u64) -> Vec<Tensor<f32>> {
    (0..batch)
        .map(|i| {
            let data: Vec<f32> = glorot_uniform(t * c, 3, 3, seed + i as u64);
            Tensor::from_vec(t, c, data).unwrap()
        })
        .collect()
}

/// Times each convolution variant on the two benchmark shapes
/// `(4, 1668, 128)` and `(4, 556, 256)`. The blueprint-family rows need a
/// depth divisible by the factor, so the `k = 2` row uses depth 22.
pub fn bench_layer_variants(repeats: usize) -> Vec<LayerBenchRow> {
    let mut rows = Vec::new();
    for &(batch, t, c) in &[(4usize, 1668usize, 128usize), (4, 556, 256)] {
        let xs = bench_input(batch, t, c, 1000);
        let mut push = |label: &str, depth: usize, macs_one: u64, f: &mut dyn FnMut()| {
            rows.push(LayerBenchRow {
                label: label.to_string(),
                shape: (batch, t, c),
                depth,
                median_ms: median_ms(repeats, f),
                macs: macs_one * batch as u64,
            });
        };

        let pw = PointwiseParams::<f32>::new(c, c, glorot_uniform(c * c, c, c, 1), vec![0.0; c]).unwrap();
        push(
            "pointwise",
            1,
            LayerSpec::Pointwise { c_in: c as u64, c_out: c as u64 }.macs(t as u64),
            &mut || {
                for x in &xs {
                    conv1d_pointwise(x, &pw).unwrap();
                }
            },
        );

        let d = 21;
        let full = FullConvParams::<f32>::new(
            c,
            c,
            d,
            1,
            glorot_uniform(c * d * c, d * c, d * c, 2),
            vec![0.0; c],
        )
        .unwrap();
        push("full", d, cost_full(t as u64, c as u64, c as u64, d as u64).macs, &mut || {
            for x in &xs {
                conv1d_full(x, &full).unwrap();
            }
        });

        let dw = DepthwiseParams::<f32>::new(c, d, 1, glorot_uniform(d * c, d, d, 3), vec![0.0; c]).unwrap();
        let sep_pw = PointwiseParams::<f32>::new(c, c, glorot_uniform(c * c, c, c, 4), vec![0.0; c]).unwrap();
        push(
            "separable",
            d,
            cost_separable(t as u64, c as u64, c as u64, d as u64).macs,
            &mut || {
                for x in &xs {
                    separable_conv(x, &dw, &sep_pw).unwrap();
                }
            },
        );
        push(
            "blueprint",
            d,
            cost_ksep(t as u64, c as u64, c as u64, d as u64, 1).unwrap().macs,
            &mut || {
                for x in &xs {
                    blueprint_separable_conv(x, &sep_pw, &dw).unwrap();
                }
            },
        );

        for &k in &[2usize, 3] {
            let dk = if d % k == 0 { d } else { d + k - d % k };
            let m = dk / k;
            let fat = FatPointwiseParams::<f32>::new(
                c,
                c,
                k,
                glorot_uniform(c * k * c, k * c, k * c, 5),
                vec![0.0; c],
            )
            .unwrap();
            let kdw =
                DepthwiseParams::<f32>::new(c, m, k, glorot_uniform(m * c, m, m, 6), vec![0.0; c]).unwrap();
            push(
                &format!("k-blueprint (k={k})"),
                dk,
                cost_ksep(t as u64, c as u64, c as u64, dk as u64, k as u64).unwrap().macs,
                &mut || {
                    for x in &xs {
                        k_blueprint_separable_conv(x, &fat, &kdw).unwrap();
                    }
                },
            );
        }
    }
    rows
}

/// Times the full default model at each depthwise kernel depth, reporting
/// end-to-end forward throughput in signal samples per second.
pub fn bench_depth_sweep(depths: &[usize], repeats: usize) -> Result<Vec<DepthSweepRow>> {
    let mut rows = Vec::new();
    for &depth in depths {
        let mut cfg = ModelConfig::default();
        cfg.batch = 1;
        for b in &mut cfg.blocks {
            b.depth = depth;
        }
        cfg.validate()?;
        let model: Model<f32> = init_model(
            &cfg,
            &InitSpec { scheme: InitScheme::GlorotUniform, epsilon: 0.0, seed: 2024 },
        )?;
        let x = Tensor::from_vec(
            cfg.chunk_len,
            1,
            glorot_uniform(cfg.chunk_len, 3, 3, depth as u64),
        )?;
        let ms = median_ms(repeats, || {
            model.run(&x).unwrap();
        });
        rows.push(DepthSweepRow {
            depth,
            median_ms: ms,
            samples_per_sec: cfg.chunk_len as f64 / (ms / 1e3),
            macs: crate::cost::model_cost(&cfg)?.macs,
        });
    }
    Ok(rows)
}
