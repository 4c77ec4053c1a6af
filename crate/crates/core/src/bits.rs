//! Bit-packed GF(2) vectors and matrices.
//!
//! Syndrome computation and the Monte Carlo loop spend most of their time in
//! parity-of-AND inner products, so vectors are stored as `u64` words and all
//! inner products reduce to popcounts.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A fixed-length vector over GF(2), packed 64 bits per word.
///
/// Bit `i` lives in word `i / 64` at position `i % 64`. Unused high bits of
/// the last word are kept zero so that popcounts and comparisons never see
/// garbage.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = BitVec::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    /// Parses a string of `0`/`1` characters.
    pub fn from_bit_str(s: &str) -> Option<Self> {
        let mut v = BitVec::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v.set(i, true),
                _ => return None,
            }
        }
        Some(v)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len, "length mismatch in xor");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// Number of ones.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Parity of the AND with `other`, i.e. the GF(2) inner product.
    #[inline]
    pub fn dot(&self, other: &BitVec) -> bool {
        debug_assert_eq!(self.len, other.len);
        let mut acc = 0u64;
        for (a, b) in self.words.iter().zip(&other.words) {
            acc ^= a & b;
        }
        acc.count_ones() & 1 == 1
    }

    /// Indices of the ones, ascending.
    pub fn support(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.weight());
        for (wi, &word) in self.words.iter().enumerate() {
            let mut w = word;
            while w != 0 {
                out.push(wi * 64 + w.trailing_zeros() as usize);
                w &= w - 1;
            }
        }
        out
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    /// Compares as the bit sequence (b0, b1, ...), i.e. position 0 is the
    /// most significant for ordering purposes.
    pub fn cmp_lex(&self, other: &BitVec) -> Ordering {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter().zip(&other.words) {
            let ord = a.reverse_bits().cmp(&b.reverse_bits());
            if ord != Ordering::Equal {
                return ord;
            }
        }
        Ordering::Equal
    }

    pub fn to_bit_string(&self) -> String {
        (0..self.len).map(|i| if self.get(i) { '1' } else { '0' }).collect()
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({})", self.to_bit_string())
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bit_string())
    }
}

/// A dense row-major matrix over GF(2).
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct BitMatrix {
    cols: usize,
    rows: Vec<BitVec>,
}

impl BitMatrix {
    pub fn new(cols: usize) -> Self {
        BitMatrix { cols, rows: Vec::new() }
    }

    pub fn from_rows(rows: Vec<BitVec>, cols: usize) -> Self {
        for r in &rows {
            assert_eq!(r.len(), cols, "row length mismatch");
        }
        BitMatrix { cols, rows }
    }

    /// Builds from 0/1 integer rows, as found in JSON code files.
    pub fn from_int_rows(rows: &[Vec<u8>], cols: usize) -> Option<Self> {
        let mut out = BitMatrix::new(cols);
        for row in rows {
            if row.len() != cols || row.iter().any(|&b| b > 1) {
                return None;
            }
            out.push_row(BitVec::from_bools(
                &row.iter().map(|&b| b == 1).collect::<Vec<_>>(),
            ));
        }
        Some(out)
    }

    pub fn identity(n: usize) -> Self {
        let mut m = BitMatrix::new(n);
        for i in 0..n {
            let mut row = BitVec::zeros(n);
            row.set(i, true);
            m.push_row(row);
        }
        m
    }

    pub fn push_row(&mut self, row: BitVec) {
        assert_eq!(row.len(), self.cols);
        self.rows.push(row);
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &BitVec {
        &self.rows[i]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &BitVec> {
        self.rows.iter()
    }

    /// Matrix-vector product over GF(2).
    pub fn mul_vec(&self, v: &BitVec) -> BitVec {
        assert_eq!(v.len(), self.cols, "dimension mismatch in mul_vec");
        let mut out = BitVec::zeros(self.rows());
        for (i, row) in self.rows.iter().enumerate() {
            if row.dot(v) {
                out.set(i, true);
            }
        }
        out
    }

    /// GF(2) rank via elimination on a scratch copy.
    pub fn rank(&self) -> usize {
        let mut rows = self.rows.clone();
        let mut rank = 0;
        for col in 0..self.cols {
            let Some(pivot) = (rank..rows.len()).find(|&r| rows[r].get(col)) else {
                continue;
            };
            rows.swap(rank, pivot);
            let pivot_row = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row.get(col) {
                    row.xor_assign(&pivot_row);
                }
            }
            rank += 1;
            if rank == rows.len() {
                break;
            }
        }
        rank
    }

    /// Basis of the right nullspace `{ v : M v = 0 }`.
    #[allow(clippy::needless_range_loop)] // parallel arrays indexed by column
    pub fn nullspace(&self) -> Vec<BitVec> {
        let n = self.cols;
        let mut rows = self.rows.clone();
        // pivot_of_col[c] = Some(row) once column c hosts a pivot
        let mut pivot_of_col: Vec<Option<usize>> = vec![None; n];
        let mut rank = 0;
        for col in 0..n {
            let Some(pivot) = (rank..rows.len()).find(|&r| rows[r].get(col)) else {
                continue;
            };
            rows.swap(rank, pivot);
            let pivot_row = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row.get(col) {
                    row.xor_assign(&pivot_row);
                }
            }
            pivot_of_col[col] = Some(rank);
            rank += 1;
            if rank == rows.len() {
                break;
            }
        }
        let mut basis = Vec::with_capacity(n - rank);
        for free_col in 0..n {
            if pivot_of_col[free_col].is_some() {
                continue;
            }
            let mut v = BitVec::zeros(n);
            v.set(free_col, true);
            for (col, &piv) in pivot_of_col.iter().enumerate() {
                if let Some(r) = piv {
                    if rows[r].get(free_col) {
                        v.set(col, true);
                    }
                }
            }
            basis.push(v);
        }
        basis
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn set_get_weight() {
        let mut v = BitVec::zeros(130);
        v.set(0, true);
        v.set(64, true);
        v.set(129, true);
        assert!(v.get(0) && v.get(64) && v.get(129));
        assert!(!v.get(1));
        assert_eq!(v.weight(), 3);
        assert_eq!(v.support(), vec![0, 64, 129]);
        v.set(64, false);
        assert_eq!(v.weight(), 2);
    }

    #[test]
    fn dot_is_parity_of_and() {
        let a = BitVec::from_bit_str("1101").unwrap();
        let b = BitVec::from_bit_str("1011").unwrap();
        // overlap at positions 0 and 3 -> even parity
        assert!(!a.dot(&b));
        let c = BitVec::from_bit_str("0111").unwrap();
        // overlap at 1 and 3 with a -> even; with b at 2,3 -> even; pick one odd:
        let d = BitVec::from_bit_str("0100").unwrap();
        assert!(a.dot(&d));
        assert!(!c.dot(&BitVec::zeros(4)));
    }

    #[test]
    fn lex_order_reads_low_index_first() {
        let a = BitVec::from_bit_str("0001111").unwrap();
        let b = BitVec::from_bit_str("0110011").unwrap();
        let c = BitVec::from_bit_str("1010101").unwrap();
        assert_eq!(a.cmp_lex(&b), Ordering::Less);
        assert_eq!(b.cmp_lex(&c), Ordering::Less);
        assert_eq!(c.cmp_lex(&c), Ordering::Equal);
    }

    #[test]
    fn rank_and_nullspace_small() {
        // rows: 110, 011, 101 -> rank 2, nullspace spanned by 111
        let m = BitMatrix::from_int_rows(
            &[vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 1]],
            3,
        )
        .unwrap();
        assert_eq!(m.rank(), 2);
        let ns = m.nullspace();
        assert_eq!(ns.len(), 1);
        assert_eq!(ns[0].to_bit_string(), "111");
    }

    #[test]
    fn identity_rank_full() {
        let m = BitMatrix::identity(17);
        assert_eq!(m.rank(), 17);
        assert!(m.nullspace().is_empty());
    }

    proptest! {
        #[test]
        fn nullspace_vectors_annihilate(rows in proptest::collection::vec(
            proptest::collection::vec(0u8..2, 12), 1..8)) {
            let m = BitMatrix::from_int_rows(&rows, 12).unwrap();
            let ns = m.nullspace();
            prop_assert_eq!(ns.len(), 12 - m.rank());
            for v in &ns {
                prop_assert!(m.mul_vec(v).is_zero());
            }
        }

        #[test]
        fn bit_string_roundtrip(bits in proptest::collection::vec(any::<bool>(), 0..200)) {
            let v = BitVec::from_bools(&bits);
            let s = v.to_bit_string();
            let back = BitVec::from_bit_str(&s).unwrap();
            prop_assert_eq!(v, back);
        }
    }
}
