use std::fmt;
use std::ops::BitXorAssign;
use std::str::FromStr;

use crate::error::BmfError;

/// Number of logical bits held by one storage word.
pub const WORD_BITS: usize = 64;

#[inline]
pub(crate) fn words_for(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

#[inline]
fn mask_of(index: usize) -> u64 {
    1u64 << (WORD_BITS - 1 - index % WORD_BITS)
}

/// A fixed-length binary vector packed MSB-first into 64-bit words.
///
/// Bit `i` lives in word `i / 64` at position `63 - i % 64`, so the first
/// logical bit is the most significant bit of the first word. Bits past
/// `len` in the last word are always zero; every mutating method restores
/// that before returning, which lets `weight` and the dot products work on
/// whole words.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct PackedBits {
    len: usize,
    words: Vec<u64>,
}

impl PackedBits {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self {
            len,
            words: vec![u64::MAX; words_for(len)],
        };
        v.clear_padding();
        v
    }

    /// Builds a vector with the given positions set.
    ///
    /// # Panics
    ///
    /// Panics if any index is `>= len`.
    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut v = Self::zeros(len);
        for i in indices {
            v.set(i, true);
        }
        v
    }

    pub fn from_bools(bits: impl IntoIterator<Item = bool>) -> Self {
        let mut len = 0;
        let mut words = Vec::new();
        for b in bits {
            if len % WORD_BITS == 0 {
                words.push(0);
            }
            if b {
                *words.last_mut().unwrap() |= mask_of(len);
            }
            len += 1;
        }
        Self { len, words }
    }

    /// Wraps raw words, zeroing anything past `len`.
    ///
    /// # Panics
    ///
    /// Panics if `words.len()` is not exactly the number of words needed for `len`.
    pub fn from_words(len: usize, words: Vec<u64>) -> Self {
        assert_eq!(words.len(), words_for(len), "word count does not match length");
        let mut v = Self { len, words };
        v.clear_padding();
        v
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// # Panics
    ///
    /// Panics if `index >= len`.
    #[inline]
    pub fn get(&self, index: usize) -> bool {
        assert!(index < self.len, "bit index {index} out of range {}", self.len);
        self.words[index / WORD_BITS] & mask_of(index) != 0
    }

    /// # Panics
    ///
    /// Panics if `index >= len`.
    #[inline]
    pub fn set(&mut self, index: usize, value: bool) {
        assert!(index < self.len, "bit index {index} out of range {}", self.len);
        let w = &mut self.words[index / WORD_BITS];
        if value {
            *w |= mask_of(index);
        } else {
            *w &= !mask_of(index);
        }
    }

    /// Flips bit `index` and returns its new value.
    #[inline]
    pub fn toggle(&mut self, index: usize) -> bool {
        assert!(index < self.len, "bit index {index} out of range {}", self.len);
        let w = &mut self.words[index / WORD_BITS];
        *w ^= mask_of(index);
        *w & mask_of(index) != 0
    }

    /// Appends one bit at the end.
    pub fn push(&mut self, value: bool) {
        if self.len.is_multiple_of(WORD_BITS) {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, value);
    }

    /// Hamming weight: the number of set bits.
    #[inline]
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// `self ← self ⊕ other`.
    ///
    /// # Panics
    ///
    /// Panics on length mismatch.
    #[inline]
    pub fn xor_assign(&mut self, other: &PackedBits) {
        self.check_len(other);
        for (d, s) in self.words.iter_mut().zip(&other.words) {
            *d ^= *s;
        }
    }

    /// `self ← self ∧ other`.
    pub fn and_assign(&mut self, other: &PackedBits) {
        self.check_len(other);
        for (d, s) in self.words.iter_mut().zip(&other.words) {
            *d &= *s;
        }
    }

    pub fn xor(&self, other: &PackedBits) -> PackedBits {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    pub fn and(&self, other: &PackedBits) -> PackedBits {
        let mut out = self.clone();
        out.and_assign(other);
        out
    }

    /// Boolean inner product `⋁ xᵢ ∧ yᵢ`, stopping at the first shared bit.
    #[inline]
    pub fn bool_dot(&self, other: &PackedBits) -> bool {
        self.check_len(other);
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    /// Modulo-2 inner product: parity of the overlap.
    #[inline]
    pub fn mod2_dot(&self, other: &PackedBits) -> bool {
        self.check_len(other);
        let parity = self
            .words
            .iter()
            .zip(&other.words)
            .fold(0u64, |acc, (a, b)| acc ^ (a & b));
        parity.count_ones() & 1 == 1
    }

    /// Integer inner product of the two 0/1 vectors, i.e. `weight(x ∧ y)`.
    #[inline]
    pub fn int_dot(&self, other: &PackedBits) -> usize {
        self.check_len(other);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// `weight(x ⊕ y)` without materializing the sum.
    #[inline]
    pub fn xor_weight(&self, other: &PackedBits) -> usize {
        self.check_len(other);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Indices of set bits in increasing order.
    pub fn iter_ones(&self) -> Ones<'_> {
        Ones {
            words: &self.words,
            word_index: 0,
            current: self.words.first().copied().unwrap_or(0),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Count of differing positions; the Hamming distance.
    pub fn distance(&self, other: &PackedBits) -> usize {
        self.xor_weight(other)
    }

    #[inline]
    fn check_len(&self, other: &PackedBits) {
        assert_eq!(
            self.len, other.len,
            "bit vector length mismatch: {} vs {}",
            self.len, other.len
        );
    }

    fn clear_padding(&mut self) {
        let tail = self.len % WORD_BITS;
        if tail != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= u64::MAX << (WORD_BITS - tail);
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn padding_is_clear(&self) -> bool {
        let tail = self.len % WORD_BITS;
        tail == 0
            || self
                .words
                .last()
                .is_none_or(|w| w & !(u64::MAX << (WORD_BITS - tail)) == 0)
    }
}

impl BitXorAssign<&PackedBits> for PackedBits {
    fn bitxor_assign(&mut self, rhs: &PackedBits) {
        self.xor_assign(rhs);
    }
}

/// Iterator over set-bit positions of a [`PackedBits`].
pub struct Ones<'a> {
    words: &'a [u64],
    word_index: usize,
    current: u64,
}

impl Iterator for Ones<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        loop {
            if self.current != 0 {
                let lead = self.current.leading_zeros() as usize;
                self.current &= !(1u64 << (WORD_BITS - 1 - lead));
                return Some(self.word_index * WORD_BITS + lead);
            }
            self.word_index += 1;
            self.current = *self.words.get(self.word_index)?;
        }
    }
}

impl fmt::Debug for PackedBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PackedBits({self})")
    }
}

impl fmt::Display for PackedBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Parses strings such as `"10110"`; whitespace and `_` are ignored.
impl FromStr for PackedBits {
    type Err = BmfError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .filter(|c| !c.is_whitespace() && *c != '_')
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(BmfError::Malformed {
                    format: "bit string",
                    reason: format!("unexpected character {other:?}"),
                }),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(PackedBits::from_bools)
    }
}
