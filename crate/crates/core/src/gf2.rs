//! Dense bit-packed matrices over GF(2).
//!
//! Rows are stored as machine words, so elimination and row sums are
//! word-parallel XORs. Parity-check matrices are read and written in the
//! plain-text alist interchange format.

use std::fmt;
use thiserror::Error;

const WORD_BITS: usize = 64;

/// Error raised while parsing an alist file. Every variant carries the
/// 1-based line number it was detected on.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlistError {
    #[error("line {line}: malformed header: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("line {line}: index {index} out of range 1..={max}")]
    IndexOutOfRange { line: usize, index: usize, max: usize },
    #[error("line {line}: {reason}")]
    Inconsistent { line: usize, reason: String },
    #[error("line {line}: expected more input")]
    UnexpectedEnd { line: usize },
}

/// Dense matrix over GF(2) with bit-packed rows.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    bits: Vec<u64>,
}

impl fmt::Debug for BinaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinaryMatrix({}x{})", self.rows, self.cols)?;
        for r in 0..self.rows {
            for c in 0..self.cols {
                write!(f, "{}", u8::from(self.get(r, c)))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl BinaryMatrix {
    /// All-zero matrix. Both dimensions must be at least 1.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be >= 1");
        let words_per_row = cols.div_ceil(WORD_BITS);
        BinaryMatrix {
            rows,
            cols,
            words_per_row,
            bits: vec![0; rows * words_per_row],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Build from dense 0/1 rows. All rows must have equal nonzero length.
    pub fn from_rows(rows: &[Vec<u8>]) -> Self {
        assert!(!rows.is_empty(), "need at least one row");
        let cols = rows[0].len();
        let mut m = Self::zeros(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged rows");
            for (c, &bit) in row.iter().enumerate() {
                debug_assert!(bit <= 1);
                m.set(r, c, bit == 1);
            }
        }
        m
    }

    /// Build an m x n matrix with a 1 at each listed (row, col) position.
    pub fn from_support(rows: usize, cols: usize, ones: &[(usize, usize)]) -> Self {
        let mut m = Self::zeros(rows, cols);
        for &(r, c) in ones {
            m.set(r, c, true);
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
        debug_assert!(r < self.rows && c < self.cols);
        let w = self.bits[r * self.words_per_row + c / WORD_BITS];
        (w >> (c % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        debug_assert!(r < self.rows && c < self.cols);
        let w = &mut self.bits[r * self.words_per_row + c / WORD_BITS];
        let mask = 1u64 << (c % WORD_BITS);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    fn row_words(&self, r: usize) -> &[u64] {
        &self.bits[r * self.words_per_row..(r + 1) * self.words_per_row]
    }

    /// Column indices of the ones in row `r`, ascending. This is the check
    /// neighborhood N(j) when the matrix is a parity-check matrix.
    pub fn row_support(&self, r: usize) -> Vec<usize> {
        let mut support = Vec::new();
        for (wi, &word) in self.row_words(r).iter().enumerate() {
            let mut w = word;
            while w != 0 {
                let bit = w.trailing_zeros() as usize;
                support.push(wi * WORD_BITS + bit);
                w &= w - 1;
            }
        }
        support
    }

    pub fn row_weight(&self, r: usize) -> usize {
        self.row_words(r).iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Weight of row `r` restricted to columns `0..k`.
    pub fn row_weight_prefix(&self, r: usize, k: usize) -> usize {
        assert!(k <= self.cols);
        let words = self.row_words(r);
        let full = k / WORD_BITS;
        let mut weight: usize = words[..full].iter().map(|w| w.count_ones() as usize).sum();
        let rem = k % WORD_BITS;
        if rem > 0 {
            weight += (words[full] & ((1u64 << rem) - 1)).count_ones() as usize;
        }
        weight
    }

    pub fn max_row_weight(&self) -> usize {
        (0..self.rows).map(|r| self.row_weight(r)).max().unwrap_or(0)
    }

    fn xor_row_into(&mut self, src: usize, dst: usize) {
        debug_assert_ne!(src, dst);
        let (src_off, dst_off) = (src * self.words_per_row, dst * self.words_per_row);
        for i in 0..self.words_per_row {
            let w = self.bits[src_off + i];
            self.bits[dst_off + i] ^= w;
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let (a_off, b_off) = (a * self.words_per_row, b * self.words_per_row);
        for i in 0..self.words_per_row {
            self.bits.swap(a_off + i, b_off + i);
        }
    }

    /// Syndrome bit of `bits` against row `r`: parity of the overlap.
    pub fn row_parity(&self, r: usize, bits: &[u8]) -> bool {
        self.row_support(r).iter().fold(false, |acc, &i| acc ^ (bits[i] == 1))
    }

    /// Returns the matrix with column `k` taken from `self` column `perm[k]`.
    pub fn permute_columns(&self, perm: &ColumnPermutation) -> BinaryMatrix {
        assert_eq!(perm.len(), self.cols, "permutation length mismatch");
        let mut out = Self::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for (new_c, &old_c) in perm.mapping().iter().enumerate() {
                if self.get(r, old_c) {
                    out.set(r, new_c, true);
                }
            }
        }
        out
    }

    /// Reduced row echelon form of the leading `k` columns, applying the same
    /// elementary row operations (over GF(2)) to the whole matrix. Returns the
    /// transformed matrix and the pivot columns in ascending order.
    ///
    /// Pivots are chosen scanning columns left to right, topmost eligible row
    /// first, so the output is deterministic. Rows that are zero within the
    /// leading block end up below all pivot rows.
    pub fn partial_rref(&self, k: usize) -> (BinaryMatrix, Vec<usize>) {
        assert!(k <= self.cols, "leading-column count out of range");
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut pivot_row = 0;
        for col in 0..k {
            if pivot_row == m.rows {
                break;
            }
            let Some(r) = (pivot_row..m.rows).find(|&r| m.get(r, col)) else {
                continue;
            };
            m.swap_rows(r, pivot_row);
            for other in 0..m.rows {
                if other != pivot_row && m.get(other, col) {
                    m.xor_row_into(pivot_row, other);
                }
            }
            pivots.push(col);
            pivot_row += 1;
        }
        (m, pivots)
    }

    /// Full reduced row echelon form over all columns.
    pub fn rref(&self) -> (BinaryMatrix, Vec<usize>) {
        self.partial_rref(self.cols)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the GF(2) nullspace as rows of a matrix (empty vec when the
    /// nullspace is trivial). Each basis vector v satisfies H v = 0.
    pub fn nullspace_basis(&self) -> Vec<Vec<u8>> {
        let (r, pivots) = self.rref();
        let pivot_of_col: Vec<Option<usize>> = {
            let mut v = vec![None; self.cols];
            for (row, &col) in pivots.iter().enumerate() {
                v[col] = Some(row);
            }
            v
        };
        let mut basis = Vec::new();
        for free in 0..self.cols {
            if pivot_of_col[free].is_some() {
                continue;
            }
            let mut vec = vec![0u8; self.cols];
            vec[free] = 1;
            for (row, &col) in pivots.iter().enumerate() {
                if r.get(row, free) {
                    vec[col] = 1;
                }
            }
            basis.push(vec);
        }
        basis
    }

    /// True when the GF(2) row spans of `self` and `other` coincide.
    ///
    /// Compares the canonical full-RREF forms with zero rows dropped, which is
    /// exact for any size; small matrices can be cross-checked by span
    /// enumeration in tests.
    pub fn row_space_equal(&self, other: &BinaryMatrix) -> bool {
        assert_eq!(self.cols, other.cols, "column count mismatch");
        let canon = |m: &BinaryMatrix| {
            let (r, pivots) = m.rref();
            (0..pivots.len()).map(|i| r.row_words(i).to_vec()).collect::<Vec<_>>()
        };
        canon(self) == canon(other)
    }

    /// Canonical alist serialization: exact max degrees, ascending indices,
    /// single spaces, newline-terminated lines, no zero padding.
    pub fn to_alist(&self) -> String {
        let col_lists: Vec<Vec<usize>> = (0..self.cols)
            .map(|c| (0..self.rows).filter(|&r| self.get(r, c)).collect())
            .collect();
        let row_lists: Vec<Vec<usize>> = (0..self.rows).map(|r| self.row_support(r)).collect();
        let max_col = col_lists.iter().map(Vec::len).max().unwrap_or(0);
        let max_row = row_lists.iter().map(Vec::len).max().unwrap_or(0);

        let mut out = String::new();
        out.push_str(&format!("{} {}\n", self.cols, self.rows));
        out.push_str(&format!("{max_col} {max_row}\n"));
        push_numbers(&mut out, col_lists.iter().map(Vec::len));
        push_numbers(&mut out, row_lists.iter().map(Vec::len));
        for list in &col_lists {
            push_numbers(&mut out, list.iter().map(|i| i + 1));
        }
        for list in &row_lists {
            push_numbers(&mut out, list.iter().map(|i| i + 1));
        }
        out
    }

    /// Parse an alist file. Zero padding entries are accepted and ignored;
    /// the column and row index lists must describe the same matrix.
    pub fn parse_alist(text: &str) -> Result<BinaryMatrix, AlistError> {
        let mut lines = text.lines().enumerate();
        let mut next_line = |required: bool| -> Result<(usize, &str), AlistError> {
            match lines.next() {
                Some((i, l)) => Ok((i + 1, l)),
                None if required => Err(AlistError::UnexpectedEnd { line: text.lines().count() + 1 }),
                None => Ok((0, "")),
            }
        };

        let (hline, header) = next_line(true)?;
        let dims = parse_fields(header, hline)?;
        if dims.len() != 2 || dims[0] == 0 || dims[1] == 0 {
            return Err(AlistError::MalformedHeader {
                line: hline,
                reason: format!("expected two positive integers, got {header:?}"),
            });
        }
        let (n, m) = (dims[0], dims[1]);

        let (dline, dmax) = next_line(true)?;
        let dmax = parse_fields(dmax, dline)?;
        if dmax.len() != 2 {
            return Err(AlistError::MalformedHeader {
                line: dline,
                reason: "expected two maximum degrees".into(),
            });
        }

        let (cline, cdeg_line) = next_line(true)?;
        let col_degrees = parse_fields(cdeg_line, cline)?;
        if col_degrees.len() != n {
            return Err(AlistError::Inconsistent {
                line: cline,
                reason: format!("expected {n} column degrees, got {}", col_degrees.len()),
            });
        }
        let (rline, rdeg_line) = next_line(true)?;
        let row_degrees = parse_fields(rdeg_line, rline)?;
        if row_degrees.len() != m {
            return Err(AlistError::Inconsistent {
                line: rline,
                reason: format!("expected {m} row degrees, got {}", row_degrees.len()),
            });
        }

        let mut from_cols = BinaryMatrix::zeros(m, n);
        for c in 0..n {
            let (line_no, line) = next_line(true)?;
            let entries = parse_fields(line, line_no)?;
            let mut count = 0;
            for &e in entries.iter().filter(|&&e| e != 0) {
                if e > m {
                    return Err(AlistError::IndexOutOfRange { line: line_no, index: e, max: m });
                }
                if from_cols.get(e - 1, c) {
                    return Err(AlistError::Inconsistent {
                        line: line_no,
                        reason: format!("duplicate row index {e} in column {}", c + 1),
                    });
                }
                from_cols.set(e - 1, c, true);
                count += 1;
            }
            if count != col_degrees[c] {
                return Err(AlistError::Inconsistent {
                    line: line_no,
                    reason: format!(
                        "column {} lists {count} entries but declares degree {}",
                        c + 1,
                        col_degrees[c]
                    ),
                });
            }
        }

        let mut from_rows = BinaryMatrix::zeros(m, n);
        for r in 0..m {
            let (line_no, line) = next_line(true)?;
            let entries = parse_fields(line, line_no)?;
            let mut count = 0;
            for &e in entries.iter().filter(|&&e| e != 0) {
                if e > n {
                    return Err(AlistError::IndexOutOfRange { line: line_no, index: e, max: n });
                }
                if from_rows.get(r, e - 1) {
                    return Err(AlistError::Inconsistent {
                        line: line_no,
                        reason: format!("duplicate column index {e} in row {}", r + 1),
                    });
                }
                from_rows.set(r, e - 1, true);
                count += 1;
            }
            if count != row_degrees[r] {
                return Err(AlistError::Inconsistent {
                    line: line_no,
                    reason: format!(
                        "row {} lists {count} entries but declares degree {}",
                        r + 1,
                        row_degrees[r]
                    ),
                });
            }
        }

        if from_cols != from_rows {
            // Locate the first disagreeing row for the report.
            let bad = (0..m)
                .find(|&r| from_cols.row_words(r) != from_rows.row_words(r))
                .unwrap_or(0);
            return Err(AlistError::Inconsistent {
                line: 4 + n + bad + 1,
                reason: format!("row {} disagrees with the column lists", bad + 1),
            });
        }
        Ok(from_rows)
    }
}

fn push_numbers(out: &mut String, values: impl Iterator<Item = usize>) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(' ');
        }
        out.push_str(&v.to_string());
        first = false;
    }
    out.push('\n');
}

fn parse_fields(line: &str, line_no: usize) -> Result<Vec<usize>, AlistError> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<usize>().map_err(|_| AlistError::MalformedHeader {
                line: line_no,
                reason: format!("not a non-negative integer: {tok:?}"),
            })
        })
        .collect()
}

/// A bijection on column indices. Position `k` of a permuted object holds the
/// original index `mapping[k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnPermutation {
    mapping: Vec<usize>,
}

impl ColumnPermutation {
    /// Builds a permutation, checking that `mapping` is a bijection on
    /// `0..mapping.len()`.
    pub fn new(mapping: Vec<usize>) -> Self {
        let mut seen = vec![false; mapping.len()];
        for &i in &mapping {
            assert!(i < mapping.len() && !seen[i], "mapping is not a bijection");
            seen[i] = true;
        }
        ColumnPermutation { mapping }
    }

    pub fn identity(n: usize) -> Self {
        ColumnPermutation { mapping: (0..n).collect() }
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn inverse(&self) -> ColumnPermutation {
        let mut inv = vec![0; self.mapping.len()];
        for (new, &old) in self.mapping.iter().enumerate() {
            inv[old] = new;
        }
        ColumnPermutation { mapping: inv }
    }

    /// Composition: applying `self` after `first` equals applying the result.
    pub fn compose(&self, first: &ColumnPermutation) -> ColumnPermutation {
        assert_eq!(self.len(), first.len());
        ColumnPermutation {
            mapping: self.mapping.iter().map(|&k| first.mapping[k]).collect(),
        }
    }

    /// Permutes a slice: output position `k` holds `values[mapping[k]]`.
    pub fn apply<T: Copy>(&self, values: &[T]) -> Vec<T> {
        assert_eq!(values.len(), self.len());
        self.mapping.iter().map(|&old| values[old]).collect()
    }
}
