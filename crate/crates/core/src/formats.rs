//! Binary and text file formats.
//!
//! All binary formats start with a 4-byte ASCII magic followed by
//! little-endian `u32` header fields; floats are little-endian IEEE-754
//! binary32.
//!
//! | magic  | header         | payload                                    |
//! |--------|----------------|--------------------------------------------|
//! | `EMB1` | `n`, `k`       | `n * k` floats, row-major                  |
//! | `ROT1` | `k`, `m`       | `m * k` floats, vector-major, `m <= k`     |
//! | `HSH1` | `n`, `k`       | `n` codes of `ceil(k / 8)` bytes, MSB-first |
//!
//! Label files are UTF-8 text with one line per item holding comma-separated
//! label ids; a blank line marks an unlabeled item.

use std::fs;
use std::path::Path;

use crate::codes::{bytes_per_code, BitCodeSet};
use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};
use crate::householder::{HouseholderStack, NORM_FLOOR};
use crate::matrix::RowMatrix;

pub const EMB_MAGIC: &[u8; 4] = b"EMB1";
pub const ROT_MAGIC: &[u8; 4] = b"ROT1";
pub const HSH_MAGIC: &[u8; 4] = b"HSH1";
const HEADER_LEN: usize = 12;

fn read_header(bytes: &[u8], magic: &[u8; 4]) -> Result<(u32, u32)> {
    if bytes.len() < 4 {
        return Err(Error::format(bytes.len(), "truncated magic"));
    }
    if &bytes[..4] != magic {
        return Err(Error::format(
            0,
            format!("expected magic {:?}", String::from_utf8_lossy(magic)),
        ));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(bytes.len(), "truncated header"));
    }
    let a = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let b = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    Ok((a, b))
}

/// Checks the payload length against `count * width` bytes.
fn payload(bytes: &[u8], count: u64, width: u64) -> Result<&[u8]> {
    let len = count
        .checked_mul(width)
        .and_then(|l| usize::try_from(l).ok())
        .and_then(|l| l.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::format(4, "element count overflows"))?;
    if bytes.len() < len {
        return Err(Error::format(bytes.len(), format!("truncated payload, expected {len} bytes")));
    }
    if bytes.len() > len {
        return Err(Error::format(len, "trailing bytes after payload"));
    }
    Ok(&bytes[HEADER_LEN..])
}

fn decode_floats(data: &[u8]) -> Result<Vec<f64>> {
    data.chunks_exact(4)
        .enumerate()
        .map(|(i, c)| {
            let x = f32::from_le_bytes(c.try_into().unwrap());
            if x.is_finite() {
                Ok(x as f64)
            } else {
                Err(Error::format(HEADER_LEN + 4 * i, "non-finite float"))
            }
        })
        .collect()
}

fn push_floats(out: &mut Vec<u8>, values: &[f64]) -> Result<()> {
    for (i, &x) in values.iter().enumerate() {
        let f = x as f32;
        if !f.is_finite() {
            return Err(Error::format(out.len(), format!("value {i} ({x}) is not representable as f32")));
        }
        out.extend_from_slice(&f.to_le_bytes());
    }
    Ok(())
}

fn header(magic: &[u8; 4], a: usize, b: usize) -> Result<Vec<u8>> {
    let a = u32::try_from(a).map_err(|_| Error::format(4, "count exceeds u32"))?;
    let b = u32::try_from(b).map_err(|_| Error::format(8, "count exceeds u32"))?;
    let mut out = Vec::with_capacity(HEADER_LEN);
    out.extend_from_slice(magic);
    out.extend_from_slice(&a.to_le_bytes());
    out.extend_from_slice(&b.to_le_bytes());
    Ok(out)
}

pub fn encode_embeddings(e: &EmbeddingSet) -> Result<Vec<u8>> {
    let mut out = header(EMB_MAGIC, e.len(), e.dim())?;
    out.reserve(e.len() * e.dim() * 4);
    push_floats(&mut out, e.data().as_slice())?;
    Ok(out)
}

pub fn decode_embeddings(bytes: &[u8]) -> Result<EmbeddingSet> {
    let (n, k) = read_header(bytes, EMB_MAGIC)?;
    if k == 0 {
        return Err(Error::format(8, "k must be positive"));
    }
    let data = payload(bytes, n as u64 * k as u64, 4)?;
    let values = decode_floats(data)?;
    Ok(EmbeddingSet::new(RowMatrix::from_vec(n as usize, k as usize, values)?))
}

pub fn encode_rotation(s: &HouseholderStack) -> Result<Vec<u8>> {
    let mut out = header(ROT_MAGIC, s.dim(), s.len())?;
    push_floats(&mut out, s.as_flat())?;
    Ok(out)
}

pub fn decode_rotation(bytes: &[u8]) -> Result<HouseholderStack> {
    let (k, m) = read_header(bytes, ROT_MAGIC)?;
    if k == 0 {
        return Err(Error::format(4, "k must be positive"));
    }
    if m > k {
        return Err(Error::format(8, format!("m = {m} exceeds k = {k}")));
    }
    let data = payload(bytes, m as u64 * k as u64, 4)?;
    let values = decode_floats(data)?;
    let k = k as usize;
    for (i, v) in values.chunks_exact(k).enumerate() {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > NORM_FLOOR) {
            return Err(Error::format(HEADER_LEN + 4 * k * i, format!("reflection vector {i} is degenerate")));
        }
    }
    HouseholderStack::from_flat(k, values)
}

pub fn encode_codes(c: &BitCodeSet) -> Result<Vec<u8>> {
    let mut out = header(HSH_MAGIC, c.len(), c.bits())?;
    out.extend_from_slice(c.as_bytes());
    Ok(out)
}

pub fn decode_codes(bytes: &[u8]) -> Result<BitCodeSet> {
    let (n, k) = read_header(bytes, HSH_MAGIC)?;
    if k == 0 {
        return Err(Error::format(8, "k must be positive"));
    }
    let data = payload(bytes, n as u64, bytes_per_code(k as usize) as u64)?;
    BitCodeSet::from_packed(n as usize, k as usize, data.to_vec()).map_err(|e| match e {
        Error::Format { offset, reason } => Error::Format {
            offset: offset + HEADER_LEN,
            reason,
        },
        other => other,
    })
}

pub fn encode_labels(labels: &[Vec<u32>]) -> String {
    let mut out = String::new();
    for l in labels {
        let line: Vec<String> = l.iter().map(u32::to_string).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn decode_labels(text: &str) -> Result<Vec<Vec<u32>>> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let body = text.strip_suffix('\n').unwrap_or(text);
    let mut offset = 0;
    let mut labels = Vec::new();
    for line in body.split('\n') {
        let trimmed = line.strip_suffix('\r').unwrap_or(line);
        let ids = if trimmed.trim().is_empty() {
            Vec::new()
        } else {
            trimmed
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<u32>()
                        .map_err(|_| Error::format(offset, format!("invalid label id '{}'", t.trim())))
                })
                .collect::<Result<Vec<u32>>>()?
        };
        labels.push(ids);
        offset += line.len() + 1;
    }
    Ok(labels)
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    decode_embeddings(&fs::read(path)?)
}

pub fn write_embeddings(path: impl AsRef<Path>, e: &EmbeddingSet) -> Result<()> {
    Ok(fs::write(path, encode_embeddings(e)?)?)
}

pub fn read_rotation(path: impl AsRef<Path>) -> Result<HouseholderStack> {
    decode_rotation(&fs::read(path)?)
}

pub fn write_rotation(path: impl AsRef<Path>, s: &HouseholderStack) -> Result<()> {
    Ok(fs::write(path, encode_rotation(s)?)?)
}

pub fn read_codes(path: impl AsRef<Path>) -> Result<BitCodeSet> {
    decode_codes(&fs::read(path)?)
}

pub fn write_codes(path: impl AsRef<Path>, c: &BitCodeSet) -> Result<()> {
    Ok(fs::write(path, encode_codes(c)?)?)
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<Vec<u32>>> {
    let bytes = fs::read(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::format(e.valid_up_to(), "label file is not UTF-8"))?;
    decode_labels(text)
}

pub fn write_labels(path: impl AsRef<Path>, labels: &[Vec<u32>]) -> Result<()> {
    Ok(fs::write(path, encode_labels(labels))?)
}

/// Header summary of a binary file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileInfo {
    Embeddings { n: usize, k: usize },
    Rotation { k: usize, m: usize },
    Codes { n: usize, k: usize },
}

/// Fully validates `bytes` as whichever format its magic names.
pub fn inspect(bytes: &[u8]) -> Result<FileInfo> {
    match bytes.get(..4) {
        Some(m) if m == EMB_MAGIC => {
            let e = decode_embeddings(bytes)?;
            Ok(FileInfo::Embeddings { n: e.len(), k: e.dim() })
        }
        Some(m) if m == ROT_MAGIC => {
            let s = decode_rotation(bytes)?;
            Ok(FileInfo::Rotation { k: s.dim(), m: s.len() })
        }
        Some(m) if m == HSH_MAGIC => {
            let c = decode_codes(bytes)?;
            Ok(FileInfo::Codes { n: c.len(), k: c.bits() })
        }
        _ => Err(Error::format(0, "unknown magic")),
    }
}
