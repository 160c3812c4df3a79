//! Bit-packed linear algebra over GF(2).
//!
//! Rows are stored as runs of `u64` words; bits past `cols` in the last word
//! of each row are kept zero so whole-word operations never leak garbage into
//! popcounts or comparisons.

use std::fmt;

use crate::error::{Error, Result};
use crate::pauli::PauliString;

pub(crate) const WORD_BITS: usize = 64;

#[inline]
pub(crate) fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

/// Mask selecting the valid bits of the last word of a `bits`-wide row.
#[inline]
pub(crate) fn tail_mask(bits: usize) -> u64 {
    match bits % WORD_BITS {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self { rows, cols, stride, bits: vec![0; rows * stride] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from nested boolean rows. Panics on ragged input.
    pub fn from_rows<R: AsRef<[bool]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Self::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            assert_eq!(row.len(), cols, "ragged rows");
            for (j, &b) in row.iter().enumerate() {
                m.set(i, j, b);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.rows && c < self.cols, "index ({r}, {c}) out of bounds");
        self.bits[r * self.stride + c / WORD_BITS] >> (c % WORD_BITS) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(r < self.rows && c < self.cols, "index ({r}, {c}) out of bounds");
        let w = &mut self.bits[r * self.stride + c / WORD_BITS];
        let bit = 1u64 << (c % WORD_BITS);
        if value {
            *w |= bit;
        } else {
            *w &= !bit;
        }
    }

    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.bits[r * self.stride..(r + 1) * self.stride]
    }

    /// Overwrites row `r` from packed words. Bits past `cols` are masked off.
    pub fn set_row_words(&mut self, r: usize, words: &[u64]) {
        assert_eq!(words.len(), self.stride);
        let row = &mut self.bits[r * self.stride..(r + 1) * self.stride];
        row.copy_from_slice(words);
        if let Some(last) = row.last_mut() {
            *last &= tail_mask(self.cols);
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for w in 0..self.stride {
            self.bits.swap(a * self.stride + w, b * self.stride + w);
        }
    }

    /// `row[dst] ^= row[src]`.
    pub fn xor_row_into(&mut self, src: usize, dst: usize) {
        assert_ne!(src, dst);
        let (s, d) = (src * self.stride, dst * self.stride);
        for w in 0..self.stride {
            let v = self.bits[s + w];
            self.bits[d + w] ^= v;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Rank by Gaussian elimination on a scratch copy.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.eliminate()
    }

    /// Reduces `self` to row echelon form in place and returns the rank.
    pub fn eliminate(&mut self) -> usize {
        let mut rank = 0;
        for c in 0..self.cols {
            if rank == self.rows {
                break;
            }
            let (w, bit) = (c / WORD_BITS, 1u64 << (c % WORD_BITS));
            let Some(pivot) = (rank..self.rows).find(|&r| self.bits[r * self.stride + w] & bit != 0)
            else {
                continue;
            };
            self.swap_rows(pivot, rank);
            for r in rank + 1..self.rows {
                if self.bits[r * self.stride + w] & bit != 0 {
                    // columns < c are already zero below the pivot
                    let (s, d) = (rank * self.stride, r * self.stride);
                    for k in w..self.stride {
                        let v = self.bits[s + k];
                        self.bits[d + k] ^= v;
                    }
                }
            }
            rank += 1;
        }
        rank
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            for c in 0..self.cols {
                f.write_str(if self.get(r, c) { "1" } else { "0" })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

pub fn rank(m: &BitMatrix) -> usize {
    m.rank()
}

/// Symplectic inner product of two packed (x|z) vectors: the parity of
/// `ax·bz + az·bx`.
#[inline]
pub fn symplectic_words(ax: &[u64], az: &[u64], bx: &[u64], bz: &[u64]) -> bool {
    let mut acc = 0u64;
    for i in 0..ax.len() {
        acc ^= (ax[i] & bz[i]) ^ (az[i] & bx[i]);
    }
    acc.count_ones() & 1 == 1
}

/// Returns `true` iff `a` and `b` anticommute. Signs are ignored.
pub fn symplectic_product(a: &PauliString, b: &PauliString) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    Ok(symplectic_words(a.x_words(), a.z_words(), b.x_words(), b.z_words()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_and_zero_ranks() {
        assert_eq!(BitMatrix::identity(3).rank(), 3);
        assert_eq!(BitMatrix::zeros(4, 4).rank(), 0);
        assert_eq!(BitMatrix::zeros(0, 5).rank(), 0);
    }

    /// Rank from the size of the row span, by enumerating all subsets of rows.
    fn span_rank(m: &BitMatrix) -> usize {
        let mut span = std::collections::HashSet::new();
        for subset in 0u32..(1 << m.rows()) {
            let mut v = vec![false; m.cols()];
            for r in 0..m.rows() {
                if subset >> r & 1 == 1 {
                    for (c, b) in v.iter_mut().enumerate() {
                        *b ^= m.get(r, c);
                    }
                }
            }
            span.insert(v);
        }
        span.len().trailing_zeros() as usize
    }

    #[test]
    fn all_two_by_two_matrices_match_span_enumeration() {
        for bits in 0u8..16 {
            let m = BitMatrix::from_rows(&[
                [bits & 1 != 0, bits & 2 != 0],
                [bits & 4 != 0, bits & 8 != 0],
            ]);
            assert_eq!(m.rank(), span_rank(&m), "{m:?}");
        }
        let swap = BitMatrix::from_rows(&[[false, true], [true, false]]);
        assert_eq!(swap.rank(), 2);
    }

    #[test]
    fn rank_leaves_input_untouched() {
        let m = BitMatrix::from_rows(&[[true, true, false], [true, true, false], [false, true, true]]);
        let before = m.clone();
        assert_eq!(m.rank(), 2);
        assert_eq!(m, before);
    }

    #[test]
    fn wide_matrices_cross_word_boundaries() {
        let mut m = BitMatrix::zeros(3, 130);
        m.set(0, 129, true);
        m.set(1, 64, true);
        m.set(2, 129, true);
        m.set(2, 64, true);
        assert_eq!(m.rank(), 2);
        m.set(2, 0, true);
        assert_eq!(m.rank(), 3);
    }

    #[test]
    fn set_row_words_masks_tail() {
        let mut m = BitMatrix::zeros(1, 3);
        m.set_row_words(0, &[u64::MAX]);
        assert_eq!(m.row_words(0), &[0b111]);
    }

    #[test]
    fn pauli_symplectic_examples() {
        let p = |s: &str| s.parse::<PauliString>().unwrap();
        assert!(symplectic_product(&p("X"), &p("Z")).unwrap());
        assert!(!symplectic_product(&p("XX"), &p("XX")).unwrap());
        assert!(!symplectic_product(&p("XX"), &p("ZZ")).unwrap());
        assert!(matches!(
            symplectic_product(&p("XX"), &p("Z")),
            Err(Error::LengthMismatch { left: 2, right: 1 })
        ));
    }

    fn arb_matrix() -> impl Strategy<Value = BitMatrix> {
        (1usize..12, 1usize..80).prop_flat_map(|(r, c)| {
            proptest::collection::vec(proptest::bool::ANY, r * c).prop_map(move |v| {
                let mut m = BitMatrix::zeros(r, c);
                for (i, b) in v.into_iter().enumerate() {
                    m.set(i / c, i % c, b);
                }
                m
            })
        })
    }

    proptest! {
        #[test]
        fn rank_bounded(m in arb_matrix()) {
            prop_assert!(m.rank() <= m.rows().min(m.cols()));
        }

        #[test]
        fn rank_invariant_under_row_ops(m in arb_matrix(), ops in proptest::collection::vec((0usize..12, 0usize..12, proptest::bool::ANY), 0..20)) {
            let r0 = m.rank();
            let mut m = m;
            for (a, b, swap) in ops {
                let (a, b) = (a % m.rows(), b % m.rows());
                if swap {
                    m.swap_rows(a, b);
                } else if a != b {
                    m.xor_row_into(a, b);
                }
            }
            prop_assert_eq!(m.rank(), r0);
        }

        #[test]
        fn alternating_matrices_have_even_rank(n in 1usize..40, seed in proptest::collection::vec(proptest::bool::ANY, 40 * 40)) {
            let mut m = BitMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..i {
                    let b = seed[i * 40 + j];
                    m.set(i, j, b);
                    m.set(j, i, b);
                }
            }
            prop_assert_eq!(m.rank() % 2, 0);
        }
    }
}
