//! Bit-packed `{-1, +1}^k` hash codes.
//!
//! Each code occupies `ceil(k / 8)` bytes. Bit value 1 encodes `+1`. Bits are
//! stored MSB-first, so coordinate `j` lives in byte `j / 8` under mask
//! `0x80 >> (j % 8)`. Pad bits past `k` are always zero.

use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};
use crate::householder::HouseholderStack;
use crate::matrix::dot;

#[inline]
pub fn bytes_per_code(k: usize) -> usize {
    k.div_ceil(8)
}

/// Mask of the valid bits in the last byte of a code.
#[inline]
fn last_byte_mask(k: usize) -> u8 {
    match k % 8 {
        0 => 0xFF,
        r => 0xFFu8 << (8 - r),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitCodeSet {
    n: usize,
    k: usize,
    bits: Vec<u8>,
}

/// One packed code with its bit width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeRef<'a> {
    pub k: usize,
    pub bytes: &'a [u8],
}

impl BitCodeSet {
    /// Validates a packed buffer. Errors carry the byte offset into `bits`.
    pub fn from_packed(n: usize, k: usize, bits: Vec<u8>) -> Result<Self> {
        let row = bytes_per_code(k);
        if bits.len() != n * row {
            return Err(Error::format(
                bits.len().min(n * row),
                format!("expected {} code bytes, found {}", n * row, bits.len()),
            ));
        }
        let mask = last_byte_mask(k);
        if row > 0 && mask != 0xFF {
            for i in 0..n {
                let at = i * row + row - 1;
                if bits[at] & !mask != 0 {
                    return Err(Error::format(at, format!("nonzero pad bits in code {i}")));
                }
            }
        }
        Ok(Self { n, k, bits })
    }

    /// Packs rows of signs; a coordinate is `+1` when it is `>= 0`.
    pub fn from_sign_rows<R: AsRef<[f64]>>(k: usize, rows: &[R]) -> Result<Self> {
        let row_len = bytes_per_code(k);
        let mut bits = vec![0u8; rows.len() * row_len];
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    actual: r.len(),
                });
            }
            pack_signs(r, &mut bits[i * row_len..(i + 1) * row_len]);
        }
        Ok(Self {
            n: rows.len(),
            k,
            bits,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Bit width.
    #[inline]
    pub fn bits(&self) -> usize {
        self.k
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bits
    }

    #[inline]
    pub fn code(&self, i: usize) -> CodeRef<'_> {
        let row = bytes_per_code(self.k);
        CodeRef {
            k: self.k,
            bytes: &self.bits[i * row..(i + 1) * row],
        }
    }

    /// `+1` or `-1` for coordinate `j` of code `i`.
    #[inline]
    pub fn sign(&self, i: usize, j: usize) -> i8 {
        let byte = self.code(i).bytes[j / 8];
        if byte & (0x80 >> (j % 8)) != 0 {
            1
        } else {
            -1
        }
    }

    pub fn unpack(&self, i: usize) -> Vec<i8> {
        (0..self.k).map(|j| self.sign(i, j)).collect()
    }

    /// Flips coordinate `j` in every code.
    pub fn flip_bit(&mut self, j: usize) {
        assert!(j < self.k, "bit {j} out of range for width {}", self.k);
        let row = bytes_per_code(self.k);
        for i in 0..self.n {
            self.bits[i * row + j / 8] ^= 0x80 >> (j % 8);
        }
    }
}

#[inline]
fn pack_signs(values: &[f64], out: &mut [u8]) {
    out.fill(0);
    for (j, &x) in values.iter().enumerate() {
        if x >= 0.0 {
            out[j / 8] |= 0x80 >> (j % 8);
        }
    }
}

/// Number of differing coordinates, by popcount of the XOR.
pub fn hamming_distance(a: CodeRef<'_>, b: CodeRef<'_>) -> Result<u32> {
    if a.k != b.k || a.bytes.len() != b.bytes.len() {
        return Err(Error::DimensionMismatch {
            expected: a.k,
            actual: b.k,
        });
    }
    Ok(hamming_unchecked(a.bytes, b.bytes, last_byte_mask(a.k)))
}

#[inline]
pub(crate) fn hamming_unchecked(a: &[u8], b: &[u8], last_mask: u8) -> u32 {
    let Some((a_last, a_head)) = a.split_last() else {
        return 0;
    };
    let b_last = b[b.len() - 1];
    let b_head = &b[..b.len() - 1];
    let words_a = a_head.chunks_exact(8);
    let words_b = b_head.chunks_exact(8);
    let tail: u32 = words_a
        .remainder()
        .iter()
        .zip(words_b.remainder())
        .map(|(x, y)| (x ^ y).count_ones())
        .sum();
    let words: u32 = words_a
        .zip(words_b)
        .map(|(x, y)| {
            let x = u64::from_ne_bytes(x.try_into().unwrap());
            let y = u64::from_ne_bytes(y.try_into().unwrap());
            (x ^ y).count_ones()
        })
        .sum();
    words + tail + ((a_last ^ b_last) & last_mask).count_ones()
}

#[inline]
pub(crate) fn last_mask_for(k: usize) -> u8 {
    last_byte_mask(k)
}

/// `sign(U f_i)` for every row, or `sign(f_i)` without a stack. No
/// normalization is needed since positive scaling keeps every sign.
pub fn sign_binarize(e: &EmbeddingSet, stack: Option<&HouseholderStack>) -> Result<BitCodeSet> {
    let k = e.dim();
    let row_len = bytes_per_code(k);
    let n = e.len();
    let mut bits = vec![0u8; n * row_len];
    match stack {
        None => {
            for i in 0..n {
                pack_signs(e.row(i), &mut bits[i * row_len..(i + 1) * row_len]);
            }
        }
        Some(s) => {
            if s.dim() != k {
                return Err(Error::DimensionMismatch {
                    expected: s.dim(),
                    actual: k,
                });
            }
            // Dense U is cheaper than m reflections once there are many rows.
            let u = s.to_matrix();
            let mut u_rows = vec![0.0; k * k];
            for r in 0..k {
                for c in 0..k {
                    u_rows[r * k + c] = u[(r, c)];
                }
            }
            let mut z = vec![0.0; k];
            for i in 0..n {
                let f = e.row(i);
                for (zr, ur) in z.iter_mut().zip(u_rows.chunks_exact(k)) {
                    *zr = dot(ur, f);
                }
                pack_signs(&z, &mut bits[i * row_len..(i + 1) * row_len]);
            }
        }
    }
    Ok(BitCodeSet { n, k, bits })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binarize_without_stack() {
        let e = EmbeddingSet::from_rows(&[[0.3, -2.0, 0.0]]).unwrap();
        let codes = sign_binarize(&e, None).unwrap();
        assert_eq!(codes.unpack(0), vec![1, -1, 1]);
        assert_eq!(codes.as_bytes(), &[0b1010_0000]);
    }

    #[test]
    fn msb_first_layout() {
        let codes = BitCodeSet::from_sign_rows(10, &[[1.0, -1.0, -1.0, -1.0, -1.0, -1.0, -1.0, 1.0, 1.0, -1.0]]).unwrap();
        assert_eq!(codes.as_bytes(), &[0b1000_0001, 0b1000_0000]);
    }

    #[test]
    fn hamming_examples() {
        let c = BitCodeSet::from_sign_rows(2, &[[1.0, 1.0], [1.0, -1.0]]).unwrap();
        assert_eq!(hamming_distance(c.code(0), c.code(0)).unwrap(), 0);
        assert_eq!(hamming_distance(c.code(0), c.code(1)).unwrap(), 1);
        let inner: i32 = c.unpack(0).iter().zip(c.unpack(1)).map(|(&a, b)| (a * b) as i32).sum();
        assert_eq!((2 - inner) / 2, 1);

        let c = BitCodeSet::from_sign_rows(4, &[[1.0, -1.0, 1.0, 1.0], [-1.0, 1.0, -1.0, -1.0]]).unwrap();
        assert_eq!(hamming_distance(c.code(0), c.code(1)).unwrap(), 4);
    }

    #[test]
    fn hamming_rejects_width_mismatch() {
        let a = BitCodeSet::from_sign_rows(3, &[[1.0, 1.0, 1.0]]).unwrap();
        let b = BitCodeSet::from_sign_rows(4, &[[1.0, 1.0, 1.0, 1.0]]).unwrap();
        assert!(hamming_distance(a.code(0), b.code(0)).is_err());
    }

    #[test]
    fn pad_bits_are_validated() {
        assert!(BitCodeSet::from_packed(1, 3, vec![0b1110_0000]).is_ok());
        let err = BitCodeSet::from_packed(2, 3, vec![0b1110_0000, 0b0001_0000]).unwrap_err();
        assert!(matches!(err, Error::Format { offset: 1, .. }));
        assert!(BitCodeSet::from_packed(1, 3, vec![]).is_err());
    }

    #[test]
    fn binarize_checks_stack_width() {
        let e = EmbeddingSet::from_rows(&[[1.0, 2.0]]).unwrap();
        let s = HouseholderStack::identity(3);
        assert!(sign_binarize(&e, Some(&s)).is_err());
    }

    #[test]
    fn long_codes_use_word_path() {
        let k = 150;
        let a: Vec<f64> = (0..k).map(|j| if j % 3 == 0 { 1.0 } else { -1.0 }).collect();
        let b: Vec<f64> = (0..k).map(|j| if j % 5 == 0 { 1.0 } else { -1.0 }).collect();
        let c = BitCodeSet::from_sign_rows(k, &[a.clone(), b.clone()]).unwrap();
        let naive = a.iter().zip(&b).filter(|(x, y)| x != y).count() as u32;
        assert_eq!(hamming_distance(c.code(0), c.code(1)).unwrap(), naive);
    }
}
