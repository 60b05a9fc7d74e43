// SPDX-License-Identifier: Apache-2.0

//! Digital CAM semantics: packed bit words, Hamming distance and the
//! brute-force search that serves as ground truth for the analog model.
//!
//! Bits are numbered from 0. Bit `i` lives in byte `i / 8` at position
//! `i % 8` (least-significant bit first). Internally words are held as
//! little-endian `u64` limbs, which gives the same bit order.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// A fixed-width bit string: one stored CAM word or one query pattern.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitWord {
    width: usize,
    limbs: Vec<u64>,
}

impl BitWord {
    /// All-zero word of `width` bits.
    pub fn zeros(width: usize) -> Result<Self> {
        if width == 0 {
            return Err(Error::ZeroWidth);
        }
        Ok(Self {
            width,
            limbs: vec![0; width.div_ceil(64)],
        })
    }

    /// Builds a word from LSB-first packed bytes. Padding bits above `width`
    /// must be zero.
    pub fn from_bytes(width: usize, bytes: &[u8]) -> Result<Self> {
        let mut word = Self::zeros(width)?;
        let expected = width.div_ceil(8);
        if bytes.len() != expected {
            return Err(Error::PackedLength {
                width,
                expected,
                got: bytes.len(),
            });
        }
        for (limb, chunk) in word.limbs.iter_mut().zip(bytes.chunks(8)) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            *limb = u64::from_le_bytes(buf);
        }
        if word.limbs.last().copied() != Some(word.last_limb_masked()) {
            return Err(Error::DirtyPadding { width });
        }
        Ok(word)
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Result<Self> {
        let bits: Vec<bool> = bits.into_iter().collect();
        let mut word = Self::zeros(bits.len())?;
        for (i, b) in bits.into_iter().enumerate() {
            if b {
                word.limbs[i / 64] |= 1 << (i % 64);
            }
        }
        Ok(word)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// LSB-first packed bytes, `ceil(width / 8)` of them.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.width.div_ceil(8);
        self.limbs
            .iter()
            .flat_map(|l| l.to_le_bytes())
            .take(n)
            .collect()
    }

    pub fn get(&self, index: usize) -> Result<bool> {
        self.check_bit(index)?;
        Ok(self.limbs[index / 64] >> (index % 64) & 1 == 1)
    }

    pub fn set(&mut self, index: usize, value: bool) -> Result<()> {
        self.check_bit(index)?;
        let mask = 1u64 << (index % 64);
        if value {
            self.limbs[index / 64] |= mask;
        } else {
            self.limbs[index / 64] &= !mask;
        }
        Ok(())
    }

    pub fn flip(&mut self, index: usize) -> Result<()> {
        self.check_bit(index)?;
        self.limbs[index / 64] ^= 1 << (index % 64);
        Ok(())
    }

    pub fn count_ones(&self) -> usize {
        self.limbs.iter().map(|l| l.count_ones() as usize).sum()
    }

    pub(crate) fn limbs(&self) -> &[u64] {
        &self.limbs
    }

    fn check_bit(&self, index: usize) -> Result<()> {
        if index >= self.width {
            return Err(Error::BitOutOfRange {
                index,
                width: self.width,
            });
        }
        Ok(())
    }

    fn last_limb_masked(&self) -> u64 {
        let last = self.limbs[self.limbs.len() - 1];
        match self.width % 64 {
            0 => last,
            r => last & ((1u64 << r) - 1),
        }
    }
}

impl fmt::Debug for BitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitWord<{}>(", self.width)?;
        for i in 0..self.width {
            let bit = self.limbs[i / 64] >> (i % 64) & 1;
            write!(f, "{bit}")?;
        }
        write!(f, ")")
    }
}

/// Number of differing bit positions.
pub fn hamming_distance(a: &BitWord, b: &BitWord) -> Result<usize> {
    if a.width != b.width {
        return Err(Error::WidthMismatch {
            left: a.width,
            right: b.width,
        });
    }
    Ok(xor_popcount(&a.limbs, &b.limbs))
}

#[inline]
pub(crate) fn xor_popcount(a: &[u64], b: &[u64]) -> usize {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x ^ y).count_ones() as usize)
        .sum()
}

/// Ideal digital decision: match iff the distance is within `threshold_bits`.
pub fn oracle_match(a: &BitWord, b: &BitWord, threshold_bits: usize) -> Result<bool> {
    Ok(hamming_distance(a, b)? <= threshold_bits)
}

/// Row-parallel search structure: `n` stored words of identical width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CamArray {
    width: usize,
    rows: Vec<BitWord>,
}

impl CamArray {
    pub fn new(width: usize) -> Result<Self> {
        if width == 0 {
            return Err(Error::ZeroWidth);
        }
        Ok(Self {
            width,
            rows: Vec::new(),
        })
    }

    /// `rows` all-zero rows.
    pub fn zeroed(width: usize, rows: usize) -> Result<Self> {
        let zero = BitWord::zeros(width)?;
        Ok(Self {
            width,
            rows: vec![zero; rows],
        })
    }

    pub fn from_rows(width: usize, rows: Vec<BitWord>) -> Result<Self> {
        let mut array = Self::new(width)?;
        array.rows.reserve(rows.len());
        for row in rows {
            array.push(row)?;
        }
        Ok(array)
    }

    /// Appends a row and returns its index.
    pub fn push(&mut self, word: BitWord) -> Result<usize> {
        self.check_width(&word)?;
        self.rows.push(word);
        Ok(self.rows.len() - 1)
    }

    /// Overwrites row `index`; every other row is left untouched.
    pub fn store(&mut self, index: usize, word: BitWord) -> Result<()> {
        self.check_width(&word)?;
        let rows = self.rows.len();
        let slot = self
            .rows
            .get_mut(index)
            .ok_or(Error::RowOutOfRange { index, rows })?;
        *slot = word;
        Ok(())
    }

    pub fn row(&self, index: usize) -> Result<&BitWord> {
        self.rows.get(index).ok_or(Error::RowOutOfRange {
            index,
            rows: self.rows.len(),
        })
    }

    pub fn rows(&self) -> &[BitWord] {
        &self.rows
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Indices of every row within `threshold_bits` of `query`.
    pub fn search_oracle(&self, query: &BitWord, threshold_bits: usize) -> Result<BTreeSet<usize>> {
        self.check_width(query)?;
        Ok(self
            .rows
            .iter()
            .enumerate()
            .filter(|(_, row)| xor_popcount(row.limbs(), query.limbs()) <= threshold_bits)
            .map(|(i, _)| i)
            .collect())
    }

    /// Distance from `query` to every row, in row order.
    pub fn distances(&self, query: &BitWord) -> Result<Vec<usize>> {
        self.check_width(query)?;
        Ok(self
            .rows
            .iter()
            .map(|row| xor_popcount(row.limbs(), query.limbs()))
            .collect())
    }

    /// True if some row lies within `threshold_bits` of `query`; stops at the
    /// first hit.
    pub fn any_within(&self, query: &BitWord, threshold_bits: usize) -> Result<bool> {
        self.check_width(query)?;
        Ok(self
            .rows
            .iter()
            .any(|row| xor_popcount(row.limbs(), query.limbs()) <= threshold_bits))
    }

    /// Smallest distance to any row together with the first row achieving
    /// it, or `None` for an empty array.
    pub fn nearest(&self, query: &BitWord) -> Result<Option<(usize, usize)>> {
        self.check_width(query)?;
        let mut best: Option<(usize, usize)> = None;
        for (i, row) in self.rows.iter().enumerate() {
            let d = xor_popcount(row.limbs(), query.limbs());
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
                if d == 0 {
                    break;
                }
            }
        }
        Ok(best)
    }

    fn check_width(&self, word: &BitWord) -> Result<()> {
        if word.width != self.width {
            return Err(Error::WidthMismatch {
                left: self.width,
                right: word.width,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_distance(a: &BitWord, b: &BitWord) -> usize {
        (0..a.width())
            .filter(|&i| a.get(i).unwrap() != b.get(i).unwrap())
            .count()
    }

    fn word_from_u8s(width: usize, bytes: &[u8]) -> BitWord {
        BitWord::from_bytes(width, bytes).unwrap()
    }

    #[test]
    fn identity_has_zero_distance() {
        let w = word_from_u8s(16, &[0xa5, 0x3c]);
        assert_eq!(hamming_distance(&w, &w).unwrap(), 0);
    }

    #[test]
    fn one_hot_a_and_c_differ_in_two_bits() {
        // A = 0001, C = 0010 written most-significant first.
        let a = BitWord::from_bits([true, false, false, false]).unwrap();
        let c = BitWord::from_bits([false, true, false, false]).unwrap();
        assert_eq!(hamming_distance(&a, &c).unwrap(), 2);
    }

    #[test]
    fn thirty_seven_chosen_positions() {
        let a = BitWord::zeros(256).unwrap();
        let mut b = a.clone();
        // 37 positions spread over all four limbs, including limb edges.
        let positions: Vec<usize> = (0..37).map(|i| (i * 7 + (i % 3)) % 256).collect();
        let unique: BTreeSet<usize> = positions.iter().copied().collect();
        assert_eq!(unique.len(), 37);
        for &p in &unique {
            b.flip(p).unwrap();
        }
        assert_eq!(naive_distance(&a, &b), 37);
        assert_eq!(hamming_distance(&a, &b).unwrap(), 37);
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let a = BitWord::zeros(8).unwrap();
        let b = BitWord::zeros(16).unwrap();
        assert!(matches!(
            hamming_distance(&a, &b),
            Err(Error::WidthMismatch { left: 8, right: 16 })
        ));
        assert!(oracle_match(&a, &b, 0).is_err());
    }

    #[test]
    fn oracle_match_examples() {
        let a = BitWord::zeros(256).unwrap();
        assert!(oracle_match(&a, &a, 0).unwrap());
        let mut b = a.clone();
        for p in [3, 100, 200] {
            b.flip(p).unwrap();
        }
        assert_eq!(naive_distance(&a, &b), 3);
        assert!(!oracle_match(&a, &b, 2).unwrap());
        let ones = BitWord::from_bytes(256, &[0xff; 32]).unwrap();
        assert!(oracle_match(&a, &ones, 256).unwrap());
    }

    #[test]
    fn packing_is_lsb_first() {
        let mut w = BitWord::zeros(16).unwrap();
        w.set(0, true).unwrap();
        w.set(9, true).unwrap();
        assert_eq!(w.to_bytes(), vec![0x01, 0x02]);
        let odd = BitWord::from_bits([true, false, true]).unwrap();
        assert_eq!(odd.to_bytes(), vec![0b101]);
    }

    #[test]
    fn dirty_padding_is_rejected() {
        assert!(matches!(
            BitWord::from_bytes(12, &[0xff, 0xff]),
            Err(Error::DirtyPadding { width: 12 })
        ));
        assert!(BitWord::from_bytes(12, &[0xff, 0x0f]).is_ok());
        assert!(matches!(
            BitWord::from_bytes(16, &[0xff]),
            Err(Error::PackedLength { .. })
        ));
    }

    #[test]
    fn search_finds_stored_row() {
        let rows: Vec<BitWord> = (0u8..8).map(|i| word_from_u8s(8, &[i * 17])).collect();
        let array = CamArray::from_rows(8, rows.clone()).unwrap();
        let hits = array.search_oracle(&rows[5], 0).unwrap();
        assert_eq!(hits, BTreeSet::from([5]));
        let all = array.search_oracle(&rows[5], 8).unwrap();
        assert_eq!(all, (0..8).collect());
    }

    #[test]
    fn store_replaces_one_row() {
        let mut array = CamArray::zeroed(16, 3).unwrap();
        let before = array.row(1).unwrap().to_bytes();
        let w = word_from_u8s(16, &[0xde, 0xad]);
        array.store(0, w.clone()).unwrap();
        assert_eq!(array.row(0).unwrap(), &w);
        assert_eq!(array.row(1).unwrap().to_bytes(), before);
        assert!(matches!(
            array.store(3, w.clone()),
            Err(Error::RowOutOfRange { index: 3, rows: 3 })
        ));
        assert!(array.store(0, BitWord::zeros(8).unwrap()).is_err());
    }

    #[test]
    fn stored_zero_word_is_found() {
        let mut array = CamArray::from_rows(8, vec![word_from_u8s(8, &[0xff]); 4]).unwrap();
        array.store(2, BitWord::zeros(8).unwrap()).unwrap();
        let hits = array.search_oracle(&BitWord::zeros(8).unwrap(), 0).unwrap();
        assert_eq!(hits, BTreeSet::from([2]));
    }

    #[test]
    fn nearest_reports_first_minimum() {
        let array = CamArray::from_rows(
            8,
            vec![
                word_from_u8s(8, &[0b1111]),
                word_from_u8s(8, &[0b0011]),
                word_from_u8s(8, &[0b0001]),
            ],
        )
        .unwrap();
        let q = word_from_u8s(8, &[0b0111]);
        assert_eq!(array.nearest(&q).unwrap(), Some((0, 1)));
        assert_eq!(CamArray::new(8).unwrap().nearest(&q).unwrap(), None);
    }

    fn word_strategy(width: usize) -> impl Strategy<Value = BitWord> {
        proptest::collection::vec(any::<bool>(), width)
            .prop_map(|bits| BitWord::from_bits(bits).unwrap())
    }

    proptest! {
        #[test]
        fn popcount_matches_per_bit_loop(width in 1usize..300, seed in any::<u64>()) {
            let mut a = BitWord::zeros(width).unwrap();
            let mut b = BitWord::zeros(width).unwrap();
            let mut s = seed;
            for i in 0..width {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                a.set(i, s >> 63 == 1).unwrap();
                b.set(i, s >> 62 & 1 == 1).unwrap();
            }
            prop_assert_eq!(hamming_distance(&a, &b).unwrap(), naive_distance(&a, &b));
            prop_assert!(hamming_distance(&a, &b).unwrap() <= width);
        }

        #[test]
        fn triangle_inequality(a in word_strategy(96), b in word_strategy(96), c in word_strategy(96)) {
            let ab = hamming_distance(&a, &b).unwrap();
            let bc = hamming_distance(&b, &c).unwrap();
            let ac = hamming_distance(&a, &c).unwrap();
            prop_assert!(ac <= ab + bc);
            prop_assert_eq!(ab, hamming_distance(&b, &a).unwrap());
        }

        #[test]
        fn search_is_monotone_in_threshold(
            rows in proptest::collection::vec(word_strategy(32), 1..20),
            q in word_strategy(32),
            t1 in 0usize..33,
            t2 in 0usize..33,
        ) {
            let (lo, hi) = (t1.min(t2), t1.max(t2));
            let array = CamArray::from_rows(32, rows).unwrap();
            let small = array.search_oracle(&q, lo).unwrap();
            let large = array.search_oracle(&q, hi).unwrap();
            prop_assert!(small.is_subset(&large));
        }

        #[test]
        fn single_flip_changes_distance_by_one(a in word_strategy(64), q in word_strategy(64), bit in 0usize..64) {
            let before = hamming_distance(&a, &q).unwrap();
            let mut flipped = a.clone();
            flipped.flip(bit).unwrap();
            let after = hamming_distance(&flipped, &q).unwrap();
            prop_assert_eq!(before.abs_diff(after), 1);
        }

        #[test]
        fn bytes_round_trip(a in word_strategy(77)) {
            let back = BitWord::from_bytes(77, &a.to_bytes()).unwrap();
            prop_assert_eq!(back, a);
        }
    }
}
