//! Bit-packed linear algebra over GF(2).
//!
//! Vectors and matrices are packed into `u64` words. Row reduction uses a
//! fixed first-nonzero pivot rule so that every run is reproducible.

use serde::{Deserialize, Serialize};

const WORD_BITS: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

/// Fixed-length vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitVector {
    words: Vec<u64>,
    len: usize,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self { words: vec![0; words_for(len)], len }
    }

    pub fn from_bits(bits: impl IntoIterator<Item = bool>) -> Self {
        let bits: Vec<bool> = bits.into_iter().collect();
        let mut v = Self::zeros(bits.len());
        for (i, b) in bits.iter().enumerate() {
            v.set(i, *b);
        }
        v
    }

    /// Vector with ones exactly at `indices`.
    pub fn from_support(len: usize, indices: &[usize]) -> Self {
        let mut v = Self::zeros(len);
        for &i in indices {
            v.set(i, true);
        }
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
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / WORD_BITS] ^= 1u64 << (i % WORD_BITS);
    }

    pub fn xor_assign(&mut self, other: &BitVector) {
        assert_eq!(self.len, other.len, "length mismatch in xor");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn popcount(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Parity of the AND of two equal-length vectors.
    pub fn dot(&self, other: &BitVector) -> bool {
        assert_eq!(self.len, other.len, "length mismatch in dot");
        let mut acc = 0u64;
        for (a, b) in self.words.iter().zip(&other.words) {
            acc ^= a & b;
        }
        acc.count_ones() % 2 == 1
    }

    /// Indices of set bits, ascending.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let bit = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * WORD_BITS + bit)
                }
            })
        })
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }
}

impl std::fmt::Debug for BitVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in 0..self.len {
            write!(f, "{}", u8::from(self.get(i)))?;
        }
        Ok(())
    }
}

/// Dense GF(2) matrix, row-major packed rows.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_row = words_for(cols);
        Self { rows, cols, words_per_row, data: vec![0; rows * words_per_row] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_rows(rows: &[BitVector]) -> Self {
        let cols = rows.first().map_or(0, BitVector::len);
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged rows");
            m.row_words_mut(i).copy_from_slice(r.words());
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.rows && c < self.cols);
        (self.data[r * self.words_per_row + c / WORD_BITS] >> (c % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(r < self.rows && c < self.cols);
        let idx = r * self.words_per_row + c / WORD_BITS;
        let mask = 1u64 << (c % WORD_BITS);
        if value {
            self.data[idx] |= mask;
        } else {
            self.data[idx] &= !mask;
        }
    }

    fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.words_per_row..(r + 1) * self.words_per_row]
    }

    fn row_words_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r * self.words_per_row..(r + 1) * self.words_per_row]
    }

    pub fn row(&self, r: usize) -> BitVector {
        BitVector { words: self.row_words(r).to_vec(), len: self.cols }
    }

    pub fn set_row(&mut self, r: usize, v: &BitVector) {
        assert_eq!(v.len(), self.cols);
        self.row_words_mut(r).copy_from_slice(v.words());
    }

    /// Appends a row, growing the matrix by one.
    pub fn push_row(&mut self, v: &BitVector) {
        assert_eq!(v.len(), self.cols);
        self.data.extend_from_slice(v.words());
        self.rows += 1;
    }

    fn xor_row_into(&mut self, src: usize, dst: usize) {
        debug_assert_ne!(src, dst);
        let (a, b) = if src < dst {
            let (lo, hi) = self.data.split_at_mut(dst * self.words_per_row);
            (&lo[src * self.words_per_row..(src + 1) * self.words_per_row], &mut hi[..self.words_per_row])
        } else {
            let (lo, hi) = self.data.split_at_mut(src * self.words_per_row);
            (&hi[..self.words_per_row], &mut lo[dst * self.words_per_row..(dst + 1) * self.words_per_row])
        };
        for (d, s) in b.iter_mut().zip(a) {
            *d ^= s;
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for k in 0..self.words_per_row {
            self.data.swap(a * self.words_per_row + k, b * self.words_per_row + k);
        }
    }

    /// Matrix-vector product over GF(2).
    pub fn mul_vec(&self, v: &BitVector) -> BitVector {
        assert_eq!(v.len(), self.cols, "dimension mismatch in mul_vec");
        let mut out = BitVector::zeros(self.rows);
        for r in 0..self.rows {
            let mut acc = 0u64;
            for (a, b) in self.row_words(r).iter().zip(v.words()) {
                acc ^= a & b;
            }
            if acc.count_ones() % 2 == 1 {
                out.set(r, true);
            }
        }
        out
    }

    /// Reduced row-echelon form with the first-nonzero pivot rule.
    ///
    /// Returns `(reduced, rank, pivot_cols)`.
    pub fn row_reduce(&self) -> (BitMatrix, usize, Vec<usize>) {
        let mut m = self.clone();
        let mut pivot_cols = Vec::new();
        let mut pivot = 0usize;
        for col in 0..m.cols {
            let Some(row) = (pivot..m.rows).find(|&r| m.get(r, col)) else {
                continue;
            };
            m.swap_rows(pivot, row);
            for r in 0..m.rows {
                if r != pivot && m.get(r, col) {
                    m.xor_row_into(pivot, r);
                }
            }
            pivot_cols.push(col);
            pivot += 1;
            if pivot == m.rows {
                break;
            }
        }
        (m, pivot, pivot_cols)
    }

    pub fn rank(&self) -> usize {
        self.row_reduce().1
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in self.row(r).support() {
                t.set(c, r, true);
            }
        }
        t
    }
}

impl std::fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for r in 0..self.rows {
            writeln!(f, "{:?}", self.row(r))?;
        }
        Ok(())
    }
}

/// Is `v` in the row span of `basis`?
pub fn in_span(v: &BitVector, basis: &BitMatrix) -> bool {
    assert_eq!(v.len(), basis.cols(), "dimension mismatch in in_span");
    solve_in_row_span(v, basis).is_some()
}

/// Expresses `v` as a combination of the rows of `basis`, if possible.
///
/// Returns the row-selection vector `x` with `basisᵀ·x = v`. Free directions
/// are set to zero, which gives the pivot-structure (sparsest-by-default)
/// particular solution.
pub fn solve_in_row_span(v: &BitVector, basis: &BitMatrix) -> Option<BitVector> {
    assert_eq!(v.len(), basis.cols());
    // Augment each row with the identity to track row operations.
    let n = basis.rows();
    let cols = basis.cols();
    let mut aug = BitMatrix::zeros(n, cols + n);
    for r in 0..n {
        for c in basis.row(r).support() {
            aug.set(r, c, true);
        }
        aug.set(r, cols + r, true);
    }
    let (red, _rank, _pivots) = aug.row_reduce();
    // Eliminate v against the reduced rows; pivots within the first `cols`
    // columns only.
    let mut residual = v.clone();
    let mut selection = BitVector::zeros(n);
    for r in 0..n {
        let Some(lead) = red.row(r).support().next() else {
            continue;
        };
        if lead >= cols {
            continue;
        }
        if residual.get(lead) {
            for c in red.row(r).support() {
                if c < cols {
                    residual.flip(c);
                } else {
                    selection.flip(c - cols);
                }
            }
        }
    }
    residual.is_zero().then_some(selection)
}

/// Precomputed row-reduced basis for repeated span queries and solves.
#[derive(Clone)]
pub struct RowBasis {
    cols: usize,
    n_rows: usize,
    /// Reduced rows paired with the combination of original rows producing them.
    reduced: Vec<(BitVector, BitVector)>,
    /// Combinations of original rows that sum to zero (null-space basis).
    null_combos: Vec<BitVector>,
}

impl RowBasis {
    pub fn new(basis: &BitMatrix) -> Self {
        let cols = basis.cols();
        let n_rows = basis.rows();
        let mut reduced: Vec<(BitVector, BitVector)> = Vec::new();
        let mut null_combos = Vec::new();
        for r in 0..n_rows {
            let mut row = basis.row(r);
            let mut combo = BitVector::zeros(n_rows);
            combo.set(r, true);
            for (base, base_combo) in &reduced {
                let lead = base.support().next().expect("reduced rows are nonzero");
                if row.get(lead) {
                    row.xor_assign(base);
                    combo.xor_assign(base_combo);
                }
            }
            if !row.is_zero() {
                reduced.push((row, combo));
                reduced.sort_by_key(|(b, _)| b.support().next().unwrap());
                // Back-substitute to keep rows fully reduced.
                for i in (0..reduced.len()).rev() {
                    let lead = reduced[i].0.support().next().unwrap();
                    for j in 0..i {
                        if reduced[j].0.get(lead) {
                            let (head, tail) = reduced.split_at_mut(i);
                            head[j].0.xor_assign(&tail[0].0);
                            head[j].1.xor_assign(&tail[0].1);
                        }
                    }
                }
            } else {
                null_combos.push(combo);
            }
        }
        Self { cols, n_rows, reduced, null_combos }
    }

    /// A combination of original rows summing to zero that includes `row`,
    /// if one exists.
    pub fn null_combo_containing(&self, row: usize) -> Option<&BitVector> {
        self.null_combos.iter().find(|c| c.get(row))
    }

    pub fn rank(&self) -> usize {
        self.reduced.len()
    }

    pub fn contains(&self, v: &BitVector) -> bool {
        self.solve(v).is_some()
    }

    /// Row-combination vector over the original rows, if `v` is in the span.
    pub fn solve(&self, v: &BitVector) -> Option<BitVector> {
        assert_eq!(v.len(), self.cols, "dimension mismatch in RowBasis::solve");
        let mut residual = v.clone();
        let mut combo = BitVector::zeros(self.n_rows);
        for (base, base_combo) in &self.reduced {
            let lead = base.support().next().unwrap();
            if residual.get(lead) {
                residual.xor_assign(base);
                combo.xor_assign(base_combo);
            }
        }
        residual.is_zero().then_some(combo)
    }
}
