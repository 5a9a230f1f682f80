//! CTC decoding: per-frame probability distributions over `{A, C, G, T, -}`
//! to a called DNA sequence.
//!
//! Two decoders are provided: best-path greedy decoding (argmax per frame,
//! collapse repeats, drop blanks) and a prefix beam search that sums path
//! posteriors per collapsed prefix in log space. Width-1 beam search is not
//! guaranteed to equal greedy decoding (it maximizes prefix posterior, not
//! the single best path).

use std::collections::HashMap;

use crate::error::{CoreError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Output channel order: A, C, G, T, blank.
pub const NUM_CLASSES: usize = 5;
/// Index of the CTC blank (empty output) channel.
pub const BLANK: usize = 4;
/// Base letters for the four non-blank channels.
pub const BASES: [char; 4] = ['A', 'C', 'G', 'T'];

/// Probabilities floor applied before moving to log space.
const PROB_FLOOR: f64 = 1e-30;

/// A `(T', 5)` matrix of per-frame class probabilities. Rows must be
/// nonnegative and sum to 1 within 1e-5.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameProbs<S: Scalar> {
    probs: Tensor<S>,
}

impl<S: Scalar> FrameProbs<S> {
    pub fn new(probs: Tensor<S>) -> Result<Self> {
        if probs.channels() != NUM_CLASSES {
            return Err(CoreError::ShapeMismatch(format!(
                "frame probabilities must have {NUM_CLASSES} channels, got {}",
                probs.channels()
            )));
        }
        let tol = S::from_f64_c(1e-5);
        for t in 0..probs.time() {
            let row = probs.row(t);
            if row.iter().any(|&v| v < S::zero()) {
                return Err(CoreError::InvalidSpec(format!(
                    "frame {t}: negative probability"
                )));
            }
            let sum = row.iter().fold(S::zero(), |a, &b| a + b);
            if (sum - S::one()).abs() > tol {
                return Err(CoreError::InvalidSpec(format!(
                    "frame {t}: probabilities sum to {sum}, not 1"
                )));
            }
        }
        Ok(Self { probs })
    }

    pub fn frames(&self) -> usize {
        self.probs.time()
    }

    pub fn prob(&self, t: usize, class: usize) -> S {
        self.probs.get(t, class)
    }

    pub fn tensor(&self) -> &Tensor<S> {
        &self.probs
    }

    fn log_rows(&self) -> Vec<[f64; NUM_CLASSES]> {
        (0..self.frames())
            .map(|t| {
                let mut row = [0.0; NUM_CLASSES];
                for (c, slot) in row.iter_mut().enumerate() {
                    let p = self.prob(t, c).to_f64().unwrap_or(0.0);
                    *slot = p.max(PROB_FLOOR).ln();
                }
                row
            })
            .collect()
    }
}

/// A called sequence with optional per-base quality values (the mean
/// probability of the frames that emitted the base; not part of the CTC
/// framework, provided for FASTQ-style output).
#[derive(Clone, Debug, PartialEq)]
pub struct CallResult {
    pub sequence: String,
    pub qualities: Option<Vec<f64>>,
}

/// Merges adjacent equal labels and drops blanks. Labels must be in
/// `0..NUM_CLASSES` with 4 the blank.
pub fn collapse(path: &[usize]) -> String {
    let mut out = String::new();
    let mut prev = usize::MAX;
    for &label in path {
        debug_assert!(label < NUM_CLASSES, "label out of range");
        if label != prev && label != BLANK {
            out.push(BASES[label]);
        }
        prev = label;
    }
    out
}

/// Best-path decoding: per-frame argmax (ties broken toward the lowest
/// channel index), collapsed. Quality of each base is the mean probability
/// over the consecutive frames that produced it.
pub fn greedy_decode<S: Scalar>(p: &FrameProbs<S>) -> CallResult {
    let mut sequence = String::new();
    let mut qualities = Vec::new();
    let mut prev = usize::MAX;
    let mut run_sum = 0.0f64;
    let mut run_len = 0usize;

    let flush = |sum: f64, len: usize, qualities: &mut Vec<f64>| {
        if len > 0 {
            qualities.push(sum / len as f64);
        }
    };

    for t in 0..p.frames() {
        let row: Vec<S> = (0..NUM_CLASSES).map(|c| p.prob(t, c)).collect();
        let mut best = 0usize;
        for c in 1..NUM_CLASSES {
            if row[c] > row[best] {
                best = c;
            }
        }
        if best == prev {
            if best != BLANK {
                run_sum += row[best].to_f64().unwrap_or(0.0);
                run_len += 1;
            }
        } else {
            flush(run_sum, run_len, &mut qualities);
            run_sum = 0.0;
            run_len = 0;
            if best != BLANK {
                sequence.push(BASES[best]);
                run_sum = row[best].to_f64().unwrap_or(0.0);
                run_len = 1;
            }
        }
        prev = best;
    }
    flush(run_sum, run_len, &mut qualities);
    debug_assert_eq!(sequence.len(), qualities.len());
    CallResult { sequence, qualities: Some(qualities) }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

#[derive(Clone)]
struct Beam {
    prefix: Vec<u8>,
    lp_blank: f64,
    lp_nonblank: f64,
    // (frame, prob) of the frame that first emitted each base of `prefix`
    emits: Vec<(usize, f64)>,
}

impl Beam {
    fn total(&self) -> f64 {
        log_add(self.lp_blank, self.lp_nonblank)
    }
}

/// CTC prefix beam search in log space, merging prefixes that collapse to
/// the same string and keeping the `width` most probable. Returns the
/// highest-posterior prefix.
pub fn beam_decode<S: Scalar>(p: &FrameProbs<S>, width: usize) -> CallResult {
    beam_decode_scored(p, width).0
}

/// [`beam_decode`] plus the winning prefix's accumulated log posterior. The
/// score sums only the paths the beam tracked, so it is a lower bound on
/// [`sequence_log_posterior`] and is monotone in `width`.
pub fn beam_decode_scored<S: Scalar>(p: &FrameProbs<S>, width: usize) -> (CallResult, f64) {
    assert!(width >= 1, "beam width must be >= 1");
    let log_rows = p.log_rows();

    let mut beams = vec![Beam {
        prefix: Vec::new(),
        lp_blank: 0.0,
        lp_nonblank: f64::NEG_INFINITY,
        emits: Vec::new(),
    }];

    for (t, lp) in log_rows.iter().enumerate() {
        let mut next: HashMap<Vec<u8>, Beam> = HashMap::with_capacity(beams.len() * 5);
        for beam in &beams {
            let total = beam.total();

            // stay on the same prefix via a blank frame
            let entry = next.entry(beam.prefix.clone()).or_insert_with(|| Beam {
                prefix: beam.prefix.clone(),
                lp_blank: f64::NEG_INFINITY,
                lp_nonblank: f64::NEG_INFINITY,
                emits: beam.emits.clone(),
            });
            entry.lp_blank = log_add(entry.lp_blank, total + lp[BLANK]);

            // stay by repeating the final label (no new emission)
            if let Some(&last) = beam.prefix.last() {
                let lp_rep = beam.lp_nonblank + lp[last as usize];
                let entry = next.get_mut(&beam.prefix).expect("inserted above");
                entry.lp_nonblank = log_add(entry.lp_nonblank, lp_rep);
            }

            // extend with each base
            for c in 0..BLANK {
                let lp_ext = if beam.prefix.last() == Some(&(c as u8)) {
                    // same label again only reachable through a blank
                    beam.lp_blank + lp[c]
                } else {
                    total + lp[c]
                };
                if lp_ext == f64::NEG_INFINITY {
                    continue;
                }
                let mut prefix = beam.prefix.clone();
                prefix.push(c as u8);
                let entry = next.entry(prefix.clone()).or_insert_with(|| {
                    let mut emits = beam.emits.clone();
                    emits.push((t, lp[c].exp()));
                    Beam {
                        prefix,
                        lp_blank: f64::NEG_INFINITY,
                        lp_nonblank: f64::NEG_INFINITY,
                        emits,
                    }
                });
                entry.lp_nonblank = log_add(entry.lp_nonblank, lp_ext);
            }
        }

        let mut merged: Vec<Beam> = next.into_values().collect();
        merged.sort_by(|a, b| {
            b.total()
                .partial_cmp(&a.total())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.prefix.cmp(&b.prefix))
        });
        merged.truncate(width);
        beams = merged;
    }

    let best = &beams[0];
    let sequence: String = best.prefix.iter().map(|&c| BASES[c as usize]).collect();
    let qualities = best.emits.iter().map(|&(_, p)| p).collect();
    (CallResult { sequence, qualities: Some(qualities) }, best.total())
}

/// Total log posterior of `sequence` under the frame probabilities: the sum
/// over all label paths that collapse to it (standard CTC forward pass).
pub fn sequence_log_posterior<S: Scalar>(p: &FrameProbs<S>, sequence: &str) -> Result<f64> {
    let labels: Vec<usize> = sequence
        .chars()
        .map(|ch| {
            BASES
                .iter()
                .position(|&b| b == ch)
                .ok_or_else(|| CoreError::InvalidSpec(format!("unknown base `{ch}`")))
        })
        .collect::<Result<_>>()?;
    let log_rows = p.log_rows();
    let t_len = log_rows.len();

    // extended label sequence: blank, l0, blank, l1, ..., blank
    let ext_len = 2 * labels.len() + 1;
    let ext = |i: usize| -> usize {
        if i % 2 == 0 {
            BLANK
        } else {
            labels[i / 2]
        }
    };

    if t_len == 0 {
        return Ok(if labels.is_empty() { 0.0 } else { f64::NEG_INFINITY });
    }

    let mut alpha = vec![f64::NEG_INFINITY; ext_len];
    alpha[0] = log_rows[0][BLANK];
    if ext_len > 1 {
        alpha[1] = log_rows[0][ext(1)];
    }
    for row in log_rows.iter().skip(1) {
        let mut next = vec![f64::NEG_INFINITY; ext_len];
        for (i, slot) in next.iter_mut().enumerate() {
            let mut lp = alpha[i];
            if i >= 1 {
                lp = log_add(lp, alpha[i - 1]);
            }
            if i >= 2 && ext(i) != BLANK && ext(i) != ext(i - 2) {
                lp = log_add(lp, alpha[i - 2]);
            }
            *slot = lp + row[ext(i)];
        }
        alpha = next;
    }

    let mut lp = alpha[ext_len - 1];
    if ext_len > 1 {
        lp = log_add(lp, alpha[ext_len - 2]);
    }
    Ok(lp)
}
