//! Fixed-width bit-packed integer array.
//!
//! Entries are laid out back to back as one bit stream, each entry
//! most-significant bit first. Words are interpreted big-endian, so
//! serializing the words with `to_be_bytes` yields exactly the stream.

/// Number of bits needed to store any residue modulo `modulus`,
/// i.e. `ceil(log2(modulus))`.
pub fn width_for_modulus(modulus: u64) -> u32 {
    if modulus <= 1 {
        0
    } else {
        64 - (modulus - 1).leading_zeros()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedArray {
    width: u32,
    len: usize,
    words: Vec<u64>,
}

impl PackedArray {
    pub fn new(width: u32, len: usize) -> Self {
        assert!(width <= 64);
        let bits = width as usize * len;
        PackedArray {
            width,
            len,
            words: vec![0; bits.div_ceil(64)],
        }
    }

    pub fn from_values(width: u32, values: &[u64]) -> Self {
        let mut a = PackedArray::new(width, values.len());
        for (i, &v) in values.iter().enumerate() {
            a.set(i, v);
        }
        a
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn bit_len(&self) -> usize {
        self.width as usize * self.len
    }

    fn mask(&self) -> u64 {
        if self.width == 64 {
            u64::MAX
        } else {
            (1u64 << self.width) - 1
        }
    }

    #[inline]
    pub fn get(&self, i: usize) -> u64 {
        debug_assert!(i < self.len);
        if self.width == 0 {
            return 0;
        }
        let start = i * self.width as usize;
        let (w, off) = (start / 64, (start % 64) as u32);
        let end = off + self.width;
        if end <= 64 {
            (self.words[w] >> (64 - end)) & self.mask()
        } else {
            let spill = end - 64;
            let hi = self.words[w] << spill;
            let lo = self.words[w + 1] >> (64 - spill);
            (hi | lo) & self.mask()
        }
    }

    pub fn set(&mut self, i: usize, value: u64) {
        assert!(i < self.len);
        if self.width == 0 {
            debug_assert_eq!(value, 0);
            return;
        }
        let mask = self.mask();
        debug_assert!(value <= mask, "value {value} exceeds {} bits", self.width);
        let value = value & mask;
        let start = i * self.width as usize;
        let (w, off) = (start / 64, (start % 64) as u32);
        let end = off + self.width;
        if end <= 64 {
            let shift = 64 - end;
            self.words[w] = (self.words[w] & !(mask << shift)) | (value << shift);
        } else {
            let spill = end - 64;
            // high part fills the tail of word w
            let hi_mask = mask >> spill;
            self.words[w] = (self.words[w] & !hi_mask) | (value >> spill);
            let lo_shift = 64 - spill;
            let lo_mask = ((1u64 << spill) - 1) << lo_shift;
            self.words[w + 1] = (self.words[w + 1] & !lo_mask) | (value << lo_shift);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn to_vec(&self) -> Vec<u64> {
        self.iter().collect()
    }

    /// Byte length of the serialized stream, padded to a byte boundary.
    pub fn byte_len(&self) -> usize {
        self.bit_len().div_ceil(8)
    }

    pub fn write_bytes(&self, out: &mut Vec<u8>) {
        let n = self.byte_len();
        let mut written = 0;
        for w in &self.words {
            let take = (n - written).min(8);
            out.extend_from_slice(&w.to_be_bytes()[..take]);
            written += take;
        }
        debug_assert_eq!(written, n);
    }

    /// Inverse of [`write_bytes`](Self::write_bytes); `bytes` must hold
    /// exactly `byte_len()` bytes for the given shape.
    pub fn from_bytes(width: u32, len: usize, bytes: &[u8]) -> Self {
        let mut a = PackedArray::new(width, len);
        debug_assert_eq!(bytes.len(), a.byte_len());
        for (w, chunk) in a.words.iter_mut().zip(bytes.chunks(8)) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            *w = u64::from_be_bytes(buf);
        }
        // clear padding so equality is structural
        let bits = a.bit_len();
        if !bits.is_multiple_of(64) {
            if let Some(last) = a.words.last_mut() {
                *last &= !(u64::MAX >> (bits % 64));
            }
        }
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn widths() {
        assert_eq!(width_for_modulus(2), 1);
        assert_eq!(width_for_modulus(3), 2);
        assert_eq!(width_for_modulus(8), 3);
        assert_eq!(width_for_modulus(9), 4);
        assert_eq!(width_for_modulus(1 << 16), 16);
        assert_eq!(width_for_modulus(u64::MAX), 64);
    }

    #[test]
    fn msb_first_layout() {
        // entries 0b101, 0b011 at width 3 -> stream 101011 -> byte 0b1010_1100
        let a = PackedArray::from_values(3, &[0b101, 0b011]);
        let mut out = Vec::new();
        a.write_bytes(&mut out);
        assert_eq!(out, vec![0b1010_1100]);
    }

    #[test]
    fn empty() {
        let a = PackedArray::new(16, 0);
        let mut out = Vec::new();
        a.write_bytes(&mut out);
        assert!(out.is_empty());
    }

    proptest! {
        #[test]
        fn roundtrip(width in 1u32..=64, raw in proptest::collection::vec(any::<u64>(), 0..80)) {
            let mask = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
            let vals: Vec<u64> = raw.iter().map(|v| v & mask).collect();
            let a = PackedArray::from_values(width, &vals);
            prop_assert_eq!(a.to_vec(), vals.clone());
            let mut out = Vec::new();
            a.write_bytes(&mut out);
            prop_assert_eq!(out.len(), (width as usize * vals.len()).div_ceil(8));
            let b = PackedArray::from_bytes(width, vals.len(), &out);
            prop_assert_eq!(b, a);
        }
    }
}
