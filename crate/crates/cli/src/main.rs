//! `wavecall` — base-calling toolkit command line.
//!
//! Subcommands: `basecall` (signal file to FASTQ/FASTA), `bench` (layer and
//! full-model timings), `cost` (analytical cost tables), `init-model`
//! (generate reproducible weights) and `quantize` (post-training int8).
//!
//! Exit codes: 0 success, 1 usage error, 2 data error. Diagnostics go to
//! stderr; results go to stdout or the requested output file.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use wavecall_core::cost::{model_cost, CostReport};
use wavecall_core::ctc::NUM_CLASSES;
use wavecall_core::init::{init_model, InitScheme, InitSpec};
use wavecall_core::io::config::load_config;
use wavecall_core::io::signal::load_signals;
use wavecall_core::io::weights::{load_weights, save_weights};
use wavecall_core::model::Model;
use wavecall_core::pipeline::{
    bench_depth_sweep, bench_layer_variants, call_reads, chunk_signal, normalize_signal,
    to_fasta, to_fastq, ChunkPlan, DecodeMode, ModelRunner,
};
use wavecall_core::quant::{footprint, post_training_quantize, QuantizedModel};
use wavecall_core::tensor::Tensor;
use wavecall_core::{CoreError, Result};

#[derive(Parser)]
#[command(name = "wavecall", version, about = "1D convolutional base-calling toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Call bases: signal file in, FASTQ (or FASTA) out.
    Basecall {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Run the int8 model (the weights file must hold quantized tensors).
        #[arg(long)]
        quantized: bool,
        /// Use prefix beam search with this width instead of greedy decoding.
        #[arg(long, value_name = "WIDTH")]
        beam: Option<usize>,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Override the configured batch size (throughput knob; outputs are
        /// independent per read either way).
        #[arg(long)]
        batch: Option<usize>,
        /// Write FASTA instead of FASTQ (implied by a .fa/.fasta output path).
        #[arg(long)]
        fasta: bool,
    },
    /// Time the convolution variants on the benchmark shapes and the full
    /// model across a depthwise-kernel depth sweep.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Timed repetitions per measurement (median is reported).
        #[arg(long, default_value_t = 5)]
        repeats: usize,
    },
    /// Print the analytical cost report for a configuration.
    Cost {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = CostFormat::Table)]
        format: CostFormat,
    },
    /// Generate a reproducible weights file.
    #[command(name = "init-model")]
    InitModel {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Identity-noise amplitude for the identity scheme.
        #[arg(long, default_value_t = 0.02)]
        epsilon: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Post-training int8 quantization of a float weights file.
    Quantize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        /// Signal file providing calibration reads.
        #[arg(long)]
        calibration: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Glorot,
    Identity,
    Zeros,
}

impl From<SchemeArg> for InitScheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Glorot => InitScheme::GlorotUniform,
            SchemeArg::Identity => InitScheme::Identity,
            SchemeArg::Zeros => InitScheme::Zeros,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CostFormat {
    Table,
    Json,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Basecall { config, weights, input, output, quantized, beam, threads, batch, fasta } => {
            basecall(&config, &weights, &input, &output, quantized, beam, threads, batch, fasta)
        }
        Command::Bench { config, repeats } => bench(&config, repeats),
        Command::Cost { config, format } => cost(&config, format),
        Command::InitModel { config, scheme, seed, epsilon, out } => {
            let cfg = load_config(config)?;
            let spec = InitSpec { scheme: scheme.into(), epsilon, seed };
            let model: Model<f32> = init_model(&cfg, &spec)?;
            save_weights(&out, &model.to_store()?)?;
            eprintln!("wrote {}", out.display());
            Ok(())
        }
        Command::Quantize { config, weights, calibration, out } => {
            quantize(&config, &weights, &calibration, &out)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn basecall(
    config: &Path,
    weights: &Path,
    input: &Path,
    output: &Path,
    quantized: bool,
    beam: Option<usize>,
    threads: usize,
    batch: Option<usize>,
    fasta: bool,
) -> Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(b) = batch {
        cfg.batch = b;
        cfg.validate()?;
    }
    let store = load_weights(weights)?;
    let runner = if quantized {
        ModelRunner::Quantized(QuantizedModel::from_store(cfg.clone(), &store)?)
    } else {
        ModelRunner::Float(Model::from_store(cfg.clone(), &store)?)
    };
    let plan = ChunkPlan::for_chunk_len(cfg.chunk_len)?;
    let reads = load_signals(input)?;
    let mode = match beam {
        Some(width) if width >= 1 => DecodeMode::Beam { width },
        Some(_) => return Err(CoreError::InvalidSpec("beam width must be >= 1".into())),
        None => DecodeMode::Greedy,
    };
    let calls = call_reads(&runner, &plan, &reads, mode, threads)?;

    let use_fasta = fasta
        || matches!(
            output.extension().and_then(|e| e.to_str()),
            Some("fa") | Some("fasta")
        );
    let mut text = String::new();
    for call in &calls {
        for w in &call.warnings {
            eprintln!("warning: {w}");
        }
        text.push_str(&if use_fasta { to_fasta(call) } else { to_fastq(call) });
    }
    fs::write(output, text)?;
    eprintln!("called {} reads -> {}", calls.len(), output.display());
    Ok(())
}

fn bench(config: &Path, repeats: usize) -> Result<()> {
    let cfg = load_config(config)?;

    println!("layer benchmarks (median of {repeats} runs)");
    println!(
        "{:<18} {:>14} {:>6} {:>12} {:>14}",
        "variant", "shape (B,T,C)", "depth", "median ms", "MACs"
    );
    for row in bench_layer_variants(repeats) {
        println!(
            "{:<18} {:>14} {:>6} {:>12.3} {:>14}",
            row.label,
            format!("({},{},{})", row.shape.0, row.shape.1, row.shape.2),
            row.depth,
            row.median_ms,
            row.macs
        );
    }

    println!();
    println!("full-model depth sweep (T=5004, B=1, median of {repeats} runs)");
    println!(
        "{:<6} {:>12} {:>16} {:>14}",
        "depth", "median ms", "samples/s", "MACs"
    );
    for row in bench_depth_sweep(&[9, 15, 21, 27, 33], repeats)? {
        println!(
            "{:<6} {:>12.2} {:>16.0} {:>14}",
            row.depth, row.median_ms, row.samples_per_sec, row.macs
        );
    }

    // end-to-end throughput of the configured model, greedy decoding
    let model: Model<f32> = init_model(
        &cfg,
        &InitSpec { scheme: InitScheme::GlorotUniform, epsilon: 0.0, seed: 7 },
    )?;
    let runner = ModelRunner::Float(model);
    let plan = ChunkPlan::for_chunk_len(cfg.chunk_len)?;
    let n_samples = cfg.chunk_len * 3;
    let samples: Vec<f32> = (0..n_samples).map(|i| ((i * 2654435761) as f32).sin()).collect();
    let reads = vec![wavecall_core::io::signal::SignalRecord {
        read_id: "bench".into(),
        samples,
    }];
    let t0 = std::time::Instant::now();
    call_reads(&runner, &plan, &reads, DecodeMode::Greedy, 0)?;
    let secs = t0.elapsed().as_secs_f64();
    println!();
    println!(
        "end-to-end basecall (configured model, greedy): {:.0} samples/s",
        n_samples as f64 / secs
    );
    Ok(())
}

fn cost(config: &Path, format: CostFormat) -> Result<()> {
    let cfg = load_config(config)?;
    let report = model_cost(&cfg)?;
    match format {
        CostFormat::Json => {
            println!(
                "{}",
                serde_json::to_string_pretty(&report)
                    .map_err(|e| CoreError::Config(e.to_string()))?
            );
        }
        CostFormat::Table => print_cost_table(&report),
    }
    Ok(())
}

fn print_cost_table(report: &CostReport) {
    println!(
        "{:<22} {:>10} {:>14} {:>12} {:>12} {:>6}",
        "layer", "params", "MACs", "read B", "write B", "rf"
    );
    for l in &report.layers {
        println!(
            "{:<22} {:>10} {:>14} {:>12} {:>12} {:>6}",
            l.name, l.params, l.macs, l.mem_read, l.mem_write, l.receptive_field
        );
    }
    println!(
        "{:<22} {:>10} {:>14} {:>12} {:>12} {:>6}",
        "total", report.params, report.macs, report.mem_read, report.mem_write, report.receptive_field
    );
}

fn quantize(config: &Path, weights: &Path, calibration: &Path, out: &Path) -> Result<()> {
    let cfg = load_config(config)?;
    let model: Model<f32> = Model::from_store(cfg.clone(), &load_weights(weights)?)?;
    let reads = load_signals(calibration)?;
    let plan = ChunkPlan::for_chunk_len(cfg.chunk_len)?;
    let mut inputs = Vec::new();
    for read in &reads {
        if read.samples.len() < wavecall_core::pipeline::MIN_READ_SAMPLES {
            eprintln!("warning: calibration read `{}` too short, skipped", read.read_id);
            continue;
        }
        for chunk in chunk_signal(&normalize_signal(&read.samples), &plan) {
            inputs.push(Tensor::from_samples(&chunk.samples)?);
        }
    }
    let qm = post_training_quantize(&model, &inputs)?;
    save_weights(out, &qm.to_store()?)?;
    let fp = footprint(&qm);
    println!(
        "quantized model: {} weight bytes, {} bias bytes, {} peak activation bytes, total {} ({})",
        fp.weight_bytes,
        fp.bias_bytes,
        fp.peak_activation_bytes,
        fp.total_bytes,
        if fp.over_budget { "OVER the 8 MiB budget" } else { "within the 8 MiB budget" }
    );
    eprintln!(
        "calibrated on {} chunks, wrote {} ({} output classes)",
        inputs.len(),
        out.display(),
        NUM_CLASSES
    );
    Ok(())
}
