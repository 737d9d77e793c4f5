//! Bit strings with exact lengths, used to serialize counted working state
//! and second-pass read transcripts.
//!
//! Fields are packed MSB-first in declaration order. An integer whose
//! declared range is `[0, max]` occupies exactly `width_for_max(max)` bits,
//! so the measured size of a state is the sum of its declared field widths.

use std::fmt;

/// Number of bits needed to store any value in `[0, max]`.
///
/// `width_for_max(0) == 0`: a field that can only hold zero carries no
/// information and occupies no bits.
pub fn width_for_max(max: u128) -> u32 {
    128 - max.leading_zeros()
}

/// Smallest `k` with `2^k >= n`. Defined as 0 for `n <= 1`.
pub fn ceil_log2(n: u128) -> u32 {
    if n <= 1 {
        0
    } else {
        128 - (n - 1).leading_zeros()
    }
}

/// A bit string with an exact bit length.
///
/// Unused bits in the trailing byte are kept zero, so structural equality
/// and ordering coincide with equality and ordering of the bit sequence.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bits {
    bytes: Vec<u8>,
    len: usize,
}

impl Bits {
    pub fn new() -> Self {
        Self::default()
    }

    /// Exact length in bits.
    pub fn bit_len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push_bit(&mut self, bit: bool) {
        let byte = self.len / 8;
        if byte == self.bytes.len() {
            self.bytes.push(0);
        }
        if bit {
            self.bytes[byte] |= 1 << (7 - self.len % 8);
        }
        self.len += 1;
    }

    pub fn get(&self, index: usize) -> bool {
        assert!(
            index < self.len,
            "bit index {index} out of range {}",
            self.len
        );
        self.bytes[index / 8] & (1 << (7 - index % 8)) != 0
    }

    /// Append `value` as a `width`-bit big-endian field.
    ///
    /// Panics if the value does not fit: field widths are declared from the
    /// value's known range, so an overflow is a bug in the caller.
    pub fn push_uint(&mut self, value: u128, width: u32) {
        assert!(width <= 128, "field width {width} exceeds 128");
        if width < 128 {
            assert!(
                value < (1u128 << width),
                "value {value} does not fit in {width} bits"
            );
        }
        for i in (0..width).rev() {
            self.push_bit(value >> i & 1 == 1);
        }
    }

    /// Read a `width`-bit big-endian field starting at bit `start`.
    pub fn read_uint(&self, start: usize, width: u32) -> u128 {
        assert!(width <= 128);
        assert!(
            start + width as usize <= self.len,
            "read of {width} bits at {start} beyond length {}",
            self.len
        );
        let mut out = 0u128;
        for i in 0..width as usize {
            out = out << 1 | self.get(start + i) as u128;
        }
        out
    }

    pub fn extend(&mut self, other: &Bits) {
        for i in 0..other.len {
            self.push_bit(other.get(i));
        }
    }

    pub fn slice(&self, start: usize, len: usize) -> Bits {
        assert!(start + len <= self.len);
        let mut out = Bits::new();
        for i in 0..len {
            out.push_bit(self.get(start + i));
        }
        out
    }

    /// Bits as a string of `0`/`1` characters, MSB first.
    pub fn to_binary_string(&self) -> String {
        (0..self.len)
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect()
    }

    /// Hex of the zero-padded backing bytes; pair with [`Bits::bit_len`] to
    /// recover the exact string.
    pub fn to_hex(&self) -> String {
        self.bytes.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits({})", self.to_binary_string())
    }
}

/// Cursor for reading consecutive fields out of a [`Bits`].
pub struct BitReader<'a> {
    bits: &'a Bits,
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bits: &'a Bits) -> Self {
        Self { bits, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.bits.bit_len() - self.pos
    }

    pub fn read_uint(&mut self, width: u32) -> u128 {
        let v = self.bits.read_uint(self.pos, width);
        self.pos += width as usize;
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widths() {
        assert_eq!(width_for_max(0), 0);
        assert_eq!(width_for_max(1), 1);
        assert_eq!(width_for_max(2), 2);
        assert_eq!(width_for_max(3), 2);
        assert_eq!(width_for_max(9), 4);
        assert_eq!(width_for_max(u128::MAX), 128);
    }

    #[test]
    fn ceil_log2_small_and_large() {
        assert_eq!(ceil_log2(0), 0);
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(1_000_000), 20);
        assert_eq!(ceil_log2(1 << 31), 31);
        assert_eq!(ceil_log2(1 << 40), 40);
    }

    #[test]
    fn push_read_round_trip() {
        let mut b = Bits::new();
        b.push_uint(0, 0);
        b.push_uint(3, 2);
        b.push_uint(1, 2);
        b.push_uint(0b1_0110_1011, 9);
        assert_eq!(b.bit_len(), 13);
        assert_eq!(b.read_uint(0, 2), 3);
        assert_eq!(b.read_uint(2, 2), 1);
        assert_eq!(b.read_uint(4, 9), 0b1_0110_1011);
        let mut r = BitReader::new(&b);
        assert_eq!(r.read_uint(2), 3);
        assert_eq!(r.read_uint(2), 1);
        assert_eq!(r.read_uint(9), 0b1_0110_1011);
        assert_eq!(r.remaining(), 0);
    }

    #[test]
    fn binary_string_is_msb_first() {
        let mut b = Bits::new();
        b.push_uint(3, 2);
        b.push_uint(1, 2);
        b.push_uint(0, 2);
        assert_eq!(b.to_binary_string(), "110100");
    }

    #[test]
    fn equality_ignores_backing_slack() {
        let mut a = Bits::new();
        a.push_uint(1, 1);
        let mut b = Bits::new();
        b.push_uint(1, 1);
        b.push_uint(7, 3);
        assert_ne!(a, b);
        assert_eq!(a, b.slice(0, 1));
    }

    #[test]
    fn slice_and_extend() {
        let mut a = Bits::new();
        a.push_uint(0b10110, 5);
        let mut b = a.slice(1, 3);
        assert_eq!(b.to_binary_string(), "011");
        b.extend(&a.slice(0, 2));
        assert_eq!(b.to_binary_string(), "01110");
    }

    #[test]
    #[should_panic]
    fn push_rejects_oversized_values() {
        let mut b = Bits::new();
        b.push_uint(4, 2);
    }

    #[test]
    fn hex_dump() {
        let mut b = Bits::new();
        b.push_uint(0b1010_0011, 8);
        b.push_uint(1, 1);
        assert_eq!(b.to_hex(), "a380");
        assert_eq!(b.bit_len(), 9);
    }
}
