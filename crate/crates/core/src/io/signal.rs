//! Signal input files: raw current samples per read.
//!
//! Two formats are accepted and auto-detected by magic:
//!
//! * Text: `#`-prefixed read-id header lines, one real sample per line.
//! * Binary `SIG1`: magic, version, read count, a name directory
//!   (name, sample count, payload offset) and little-endian f32 payloads.

use std::fs;
use std::path::Path;

use crate::error::{CoreError, Result};

pub const SIGNAL_MAGIC: &[u8; 4] = b"SIG1";
pub const SIGNAL_VERSION: u32 = 1;

/// One read: identifier plus raw device-unit samples.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalRecord {
    pub read_id: String,
    pub samples: Vec<f32>,
}

/// Parses the text format.
pub fn parse_text(text: &str) -> Result<Vec<SignalRecord>> {
    let mut records: Vec<SignalRecord> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(id) = line.strip_prefix('#') {
            if let Some(last) = records.last() {
                if last.samples.is_empty() {
                    return Err(CoreError::Signal(format!(
                        "read `{}` has no samples (line {})",
                        last.read_id,
                        lineno + 1
                    )));
                }
            }
            records.push(SignalRecord { read_id: id.trim().to_string(), samples: Vec::new() });
        } else {
            let value: f32 = line.parse().map_err(|_| {
                CoreError::Signal(format!("line {}: not a number: `{line}`", lineno + 1))
            })?;
            match records.last_mut() {
                Some(r) => r.samples.push(value),
                None => {
                    return Err(CoreError::Signal(format!(
                        "line {}: sample before any #read-id header",
                        lineno + 1
                    )))
                }
            }
        }
    }
    match records.last() {
        None => Err(CoreError::Signal("no reads in input".into())),
        Some(last) if last.samples.is_empty() => Err(CoreError::Signal(format!(
            "read `{}` has no samples",
            last.read_id
        ))),
        _ => Ok(records),
    }
}

/// Renders records in the text format.
pub fn to_text(records: &[SignalRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push('#');
        out.push_str(&r.read_id);
        out.push('\n');
        for v in &r.samples {
            out.push_str(&format!("{v}\n"));
        }
    }
    out
}

/// Serializes records in the binary format.
pub fn to_binary(records: &[SignalRecord]) -> Vec<u8> {
    let mut directory = Vec::new();
    let mut payload: Vec<u8> = Vec::new();
    for r in records {
        directory.extend_from_slice(&(r.read_id.len() as u32).to_le_bytes());
        directory.extend_from_slice(r.read_id.as_bytes());
        directory.extend_from_slice(&(r.samples.len() as u64).to_le_bytes());
        directory.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        for v in &r.samples {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut out = Vec::with_capacity(12 + directory.len() + payload.len());
    out.extend_from_slice(SIGNAL_MAGIC);
    out.extend_from_slice(&SIGNAL_VERSION.to_le_bytes());
    out.extend_from_slice(&(records.len() as u32).to_le_bytes());
    out.extend_from_slice(&directory);
    out.extend_from_slice(&payload);
    out
}

/// Parses the binary format.
pub fn parse_binary(bytes: &[u8]) -> Result<Vec<SignalRecord>> {
    let need = |pos: usize, n: usize, what: &str| -> Result<()> {
        if pos + n > bytes.len() {
            Err(CoreError::Signal(format!("truncated {what}")))
        } else {
            Ok(())
        }
    };
    need(0, 12, "header")?;
    if &bytes[0..4] != SIGNAL_MAGIC {
        return Err(CoreError::Signal("bad magic, expected \"SIG1\"".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != SIGNAL_VERSION {
        return Err(CoreError::Signal(format!("unsupported version {version}")));
    }
    let count = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let mut pos = 12;
    let mut dir = Vec::with_capacity(count);
    for i in 0..count {
        need(pos, 4, "directory")?;
        let name_len = u32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
        pos += 4;
        need(pos, name_len + 16, "directory")?;
        let name = String::from_utf8(bytes[pos..pos + name_len].to_vec())
            .map_err(|_| CoreError::Signal(format!("read {i}: name is not UTF-8")))?;
        pos += name_len;
        let samples = u64::from_le_bytes(bytes[pos..pos + 8].try_into().unwrap()) as usize;
        let offset = u64::from_le_bytes(bytes[pos + 8..pos + 16].try_into().unwrap()) as usize;
        pos += 16;
        dir.push((name, samples, offset));
    }
    let payload = &bytes[pos..];
    let mut records = Vec::with_capacity(count);
    for (name, samples, offset) in dir {
        if samples == 0 {
            return Err(CoreError::Signal(format!("read `{name}` has no samples")));
        }
        if offset + samples * 4 > payload.len() {
            return Err(CoreError::Signal(format!("truncated payload for read `{name}`")));
        }
        let data = payload[offset..offset + samples * 4]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        records.push(SignalRecord { read_id: name, samples: data });
    }
    Ok(records)
}

/// Loads a signal file, sniffing the format by magic.
pub fn load_signals(path: impl AsRef<Path>) -> Result<Vec<SignalRecord>> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(SIGNAL_MAGIC) {
        parse_binary(&bytes)
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|_| CoreError::Signal("file is neither SIG1 nor UTF-8 text".into()))?;
        parse_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn records() -> Vec<SignalRecord> {
        vec![
            SignalRecord { read_id: "read_a".into(), samples: vec![1.0, -2.5, 3.75] },
            SignalRecord { read_id: "read_b".into(), samples: vec![0.0625] },
        ]
    }

    #[test]
    fn text_roundtrip() {
        let recs = records();
        assert_eq!(parse_text(&to_text(&recs)).unwrap(), recs);
    }

    #[test]
    fn binary_roundtrip() {
        let recs = records();
        assert_eq!(parse_binary(&to_binary(&recs)).unwrap(), recs);
    }

    #[test]
    fn text_errors() {
        assert!(parse_text("1.0\n2.0\n").is_err()); // samples before header
        assert!(parse_text("#only_header\n").is_err()); // empty read
        assert!(parse_text("#r\nnot_a_number\n").is_err());
        assert!(parse_text("").is_err());
    }

    #[test]
    fn binary_truncation_detected() {
        let bytes = to_binary(&records());
        assert!(parse_binary(&bytes[..bytes.len() - 2]).is_err());
    }

    #[test]
    fn sniffing_picks_format() {
        let dir = tempfile::tempdir().unwrap();
        let recs = records();
        let t = dir.path().join("sig.txt");
        std::fs::write(&t, to_text(&recs)).unwrap();
        assert_eq!(load_signals(&t).unwrap(), recs);
        let b = dir.path().join("sig.bin");
        std::fs::write(&b, to_binary(&recs)).unwrap();
        assert_eq!(load_signals(&b).unwrap(), recs);
    }
}
