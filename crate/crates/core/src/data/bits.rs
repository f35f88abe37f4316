//! Fixed-length bit rows packed into `u64` words, LSB-first.
//!
//! Bits past `len` in the last word are always zero; every kernel below relies
//! on that so no masking is needed after AND/AND-NOT.

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitRow {
    words: Vec<u64>,
    len: usize,
}

#[inline]
fn word_count(len: usize) -> usize {
    len.div_ceil(64)
}

impl BitRow {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; word_count(len)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut row = Self {
            words: vec![u64::MAX; word_count(len)],
            len,
        };
        row.clear_tail();
        row
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut row = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                row.words[i / 64] |= 1 << (i % 64);
            }
        }
        row
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut row = Self::zeros(len);
        for i in 0..len {
            if f(i) {
                row.words[i / 64] |= 1 << (i % 64);
            }
        }
        row
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
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

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// `popcount(self AND NOT other)`.
    #[inline]
    pub fn count_and_not(&self, other: &BitRow) -> u64 {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & !b).count_ones() as u64)
            .sum()
    }

    #[inline]
    pub fn count_and(&self, other: &BitRow) -> u64 {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as u64)
            .sum()
    }

    pub fn or_assign(&mut self, other: &BitRow) {
        assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn and(&self, other: &BitRow) -> BitRow {
        assert_eq!(self.len, other.len);
        BitRow {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
            len: self.len,
        }
    }

    pub fn not(&self) -> BitRow {
        let mut row = BitRow {
            words: self.words.iter().map(|w| !w).collect(),
            len: self.len,
        };
        row.clear_tail();
        row
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let tz = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + tz)
                }
            })
        })
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    /// Little-endian bytes, LSB-first within each byte, `ceil(len / 8)` long.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.len.div_ceil(8);
        self.words.iter().flat_map(|w| w.to_le_bytes()).take(n).collect()
    }

    pub fn from_bytes(bytes: &[u8], len: usize) -> Option<Self> {
        if bytes.len() != len.div_ceil(8) {
            return None;
        }
        let mut words = vec![0u64; word_count(len)];
        for (i, &b) in bytes.iter().enumerate() {
            words[i / 8] |= (b as u64) << ((i % 8) * 8);
        }
        let row = BitRow { words, len };
        let mut check = row.clone();
        check.clear_tail();
        // Padding bits must be zero.
        (check == row).then_some(row)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ones_has_clean_tail() {
        let r = BitRow::ones(70);
        assert_eq!(r.count_ones(), 70);
        assert_eq!(r.not().count_ones(), 0);
    }

    #[test]
    fn padding_bits_rejected() {
        assert!(BitRow::from_bytes(&[0b1000_0000], 3).is_none());
        assert!(BitRow::from_bytes(&[0b0000_0101], 3).is_some());
    }

    proptest! {
        #[test]
        fn kernels_match_naive(bits in proptest::collection::vec(any::<(bool, bool)>(), 0..300)) {
            let a: Vec<bool> = bits.iter().map(|p| p.0).collect();
            let b: Vec<bool> = bits.iter().map(|p| p.1).collect();
            let (ra, rb) = (BitRow::from_bools(&a), BitRow::from_bools(&b));
            let and_not = a.iter().zip(&b).filter(|(x, y)| **x && !**y).count() as u64;
            let and = a.iter().zip(&b).filter(|(x, y)| **x && **y).count() as u64;
            prop_assert_eq!(ra.count_and_not(&rb), and_not);
            prop_assert_eq!(ra.count_and(&rb), and);
            prop_assert_eq!(ra.to_bools(), a.clone());
            let ones: Vec<usize> = a.iter().enumerate().filter(|(_, x)| **x).map(|(i, _)| i).collect();
            prop_assert_eq!(ra.iter_ones().collect::<Vec<_>>(), ones);
            prop_assert_eq!(BitRow::from_bytes(&ra.to_bytes(), a.len()), Some(ra));
        }
    }
}
