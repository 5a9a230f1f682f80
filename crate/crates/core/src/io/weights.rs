//! Binary weights container.
//!
//! Layout (all values little-endian):
//!
//! ```text
//! magic   4 bytes  "DNCW"
//! version u32      1
//! count   u32      number of directory entries
//! entry*  name_len u32, name bytes (UTF-8),
//!         dtype    u8   (0 = f32, 1 = i8, 2 = i32),
//!         ndims    u32, dims u64 * ndims,
//!         offset   u64  (into the payload section),
//!         quant    u8   (0/1); if 1: scale f32, zero_point i32
//! payload          tensor bytes at the directory offsets
//! ```
//!
//! Readers reject unknown magics, unsupported versions, duplicate names,
//! overlapping directory offsets, and truncated payloads (naming the first
//! unreadable tensor).

use std::fs;
use std::path::Path;

use crate::error::{CoreError, Result};
use crate::io::store::{StoredTensor, TensorData, WeightStore};
use crate::quant::QuantParams;

pub const WEIGHTS_MAGIC: &[u8; 4] = b"DNCW";
pub const WEIGHTS_VERSION: u32 = 1;

const DTYPE_F32: u8 = 0;
const DTYPE_I8: u8 = 1;
const DTYPE_I32: u8 = 2;

fn dtype_byte(data: &TensorData) -> u8 {
    match data {
        TensorData::F32(_) => DTYPE_F32,
        TensorData::I8(_) => DTYPE_I8,
        TensorData::I32(_) => DTYPE_I32,
    }
}

fn value_size(dtype: u8) -> Result<usize> {
    match dtype {
        DTYPE_F32 | DTYPE_I32 => Ok(4),
        DTYPE_I8 => Ok(1),
        other => Err(CoreError::Container(format!("unknown dtype byte {other}"))),
    }
}

/// Serializes a store to container bytes.
pub fn to_bytes(store: &WeightStore) -> Vec<u8> {
    let mut directory = Vec::new();
    let mut payload = Vec::new();
    for (name, tensor) in store.iter() {
        directory.extend_from_slice(&(name.len() as u32).to_le_bytes());
        directory.extend_from_slice(name.as_bytes());
        directory.push(dtype_byte(&tensor.data));
        directory.extend_from_slice(&(tensor.dims.len() as u32).to_le_bytes());
        for &d in &tensor.dims {
            directory.extend_from_slice(&(d as u64).to_le_bytes());
        }
        directory.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        match tensor.quant {
            Some(q) => {
                directory.push(1);
                directory.extend_from_slice(&q.scale.to_le_bytes());
                directory.extend_from_slice(&q.zero_point.to_le_bytes());
            }
            None => directory.push(0),
        }
        match &tensor.data {
            TensorData::F32(v) => {
                for x in v {
                    payload.extend_from_slice(&x.to_le_bytes());
                }
            }
            TensorData::I8(v) => payload.extend(v.iter().map(|&x| x as u8)),
            TensorData::I32(v) => {
                for x in v {
                    payload.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
    }

    let mut out = Vec::with_capacity(16 + directory.len() + payload.len());
    out.extend_from_slice(WEIGHTS_MAGIC);
    out.extend_from_slice(&WEIGHTS_VERSION.to_le_bytes());
    out.extend_from_slice(&(store.len() as u32).to_le_bytes());
    out.extend_from_slice(&directory);
    out.extend_from_slice(&payload);
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(CoreError::Container(format!("truncated {what}")));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f32(&mut self, what: &str) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn i32(&mut self, what: &str) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

struct DirEntry {
    name: String,
    dtype: u8,
    dims: Vec<usize>,
    offset: usize,
    quant: Option<QuantParams>,
}

/// Parses container bytes back into a store.
pub fn from_bytes(bytes: &[u8]) -> Result<WeightStore> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.take(4, "header")?;
    if magic != WEIGHTS_MAGIC {
        return Err(CoreError::Container(format!(
            "bad magic {magic:02x?}, expected \"DNCW\""
        )));
    }
    let version = cur.u32("header")?;
    if version != WEIGHTS_VERSION {
        return Err(CoreError::Container(format!(
            "unsupported version {version} (expected {WEIGHTS_VERSION})"
        )));
    }
    let count = cur.u32("header")? as usize;

    let mut entries = Vec::with_capacity(count);
    for i in 0..count {
        let ctx = format!("directory entry {i}");
        let name_len = cur.u32(&ctx)? as usize;
        let name = String::from_utf8(cur.take(name_len, &ctx)?.to_vec())
            .map_err(|_| CoreError::Container(format!("{ctx}: name is not UTF-8")))?;
        let dtype = cur.u8(&ctx)?;
        value_size(dtype)?;
        let ndims = cur.u32(&ctx)? as usize;
        if ndims > 8 {
            return Err(CoreError::Container(format!("{ctx}: implausible rank {ndims}")));
        }
        let mut dims = Vec::with_capacity(ndims);
        for _ in 0..ndims {
            dims.push(cur.u64(&ctx)? as usize);
        }
        let offset = cur.u64(&ctx)? as usize;
        let quant = match cur.u8(&ctx)? {
            0 => None,
            1 => Some(QuantParams { scale: cur.f32(&ctx)?, zero_point: cur.i32(&ctx)? }),
            other => {
                return Err(CoreError::Container(format!("{ctx}: bad quant flag {other}")));
            }
        };
        entries.push(DirEntry { name, dtype, dims, offset, quant });
    }

    let payload = &bytes[cur.pos..];

    // non-overlap check over (offset, byte length)
    let mut spans: Vec<(usize, usize, &str)> = entries
        .iter()
        .map(|e| {
            let len = e.dims.iter().product::<usize>() * value_size(e.dtype).unwrap_or(1);
            (e.offset, len, e.name.as_str())
        })
        .collect();
    spans.sort();
    for pair in spans.windows(2) {
        let (off_a, len_a, name_a) = pair[0];
        let (off_b, _, name_b) = pair[1];
        if off_a + len_a > off_b {
            return Err(CoreError::Container(format!(
                "overlapping payloads: `{name_a}` and `{name_b}`"
            )));
        }
    }

    let mut store = WeightStore::new();
    for e in entries {
        let len = e.dims.iter().product::<usize>();
        let byte_len = len * value_size(e.dtype)?;
        if e.offset + byte_len > payload.len() {
            return Err(CoreError::Container(format!(
                "truncated payload reading tensor `{}`",
                e.name
            )));
        }
        let raw = &payload[e.offset..e.offset + byte_len];
        let data = match e.dtype {
            DTYPE_F32 => TensorData::F32(
                raw.chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            ),
            DTYPE_I8 => TensorData::I8(raw.iter().map(|&b| b as i8).collect()),
            DTYPE_I32 => TensorData::I32(
                raw.chunks_exact(4)
                    .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            ),
            _ => unreachable!("dtype validated above"),
        };
        store.insert(e.name, StoredTensor { dims: e.dims, data, quant: e.quant })?;
    }
    Ok(store)
}

/// Writes a store to `path`.
pub fn save_weights(path: impl AsRef<Path>, store: &WeightStore) -> Result<()> {
    Ok(fs::write(path, to_bytes(store))?)
}

/// Reads a store from `path`.
pub fn load_weights(path: impl AsRef<Path>) -> Result<WeightStore> {
    from_bytes(&fs::read(path)?)
}
